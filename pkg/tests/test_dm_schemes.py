import itertools
import json
import math

import numpy as np
import pytest

from cran_rates import dm_schemes as dm
from cran_rates.errors import MarkovViolationError, SchemaError
from cran_rates.finite_info import check_markov
from cran_rates.regions import Infeasible
from cran_rates.sampling import random_dm_instance, rng_from_seed


def noiseless_relay_model(C=1.0):
    """L = K = 1, Y = X, binary."""
    channel = np.zeros((2, 2))
    channel[0, 0] = channel[1, 1] = 1.0
    return dm.DmCranModel(
        x_alphabets=(2,), y_alphabets=(2,), u_alphabets=(2,), q_alphabet=1,
        channel=channel, fronthaul=(C,),
    )


def identity_policy(model):
    pq = np.ones(model.q_alphabet) / model.q_alphabet
    px = tuple(np.full((model.q_alphabet, n), 1.0 / n) for n in model.x_alphabets)
    pu = []
    for k in range(model.K):
        ny, nu = model.y_alphabets[k], model.u_alphabets[k]
        a = np.zeros((model.q_alphabet, ny, nu))
        for y in range(ny):
            a[:, y, y % nu] = 1.0
        pu.append(a)
    return dm.DmPolicy(pq=pq, px_given_q=px, pu_given_yq=tuple(pu))


# ---------------------------------------------------------------------------
# Independent oracle: joint by explicit loops, entropies from dicts.
# ---------------------------------------------------------------------------

def oracle_joint(model, policy):
    """Dict (q, xs, ys, us) -> prob, built with nested loops only."""
    probs = {}
    ranges = (
        [range(model.q_alphabet)]
        + [range(n) for n in model.x_alphabets]
        + [range(n) for n in model.y_alphabets]
        + [range(n) for n in model.u_alphabets]
    )
    L, K = model.L, model.K
    for combo in itertools.product(*ranges):
        q = combo[0]
        xs = combo[1 : 1 + L]
        ys = combo[1 + L : 1 + L + K]
        us = combo[1 + L + K :]
        p = policy.pq[q]
        for l in range(L):
            p *= policy.px_given_q[l][q, xs[l]]
        p *= model.channel[xs + ys]
        for k in range(K):
            p *= policy.pu_given_yq[k][q, ys[k], us[k]]
        if p > 0:
            probs[combo] = probs.get(combo, 0.0) + p
    return probs


def oracle_entropy(probs, axes):
    marg = {}
    for combo, p in probs.items():
        key = tuple(combo[i] for i in axes)
        marg[key] = marg.get(key, 0.0) + p
    return -sum(p * math.log2(p) for p in marg.values() if p > 1e-15)


def oracle_cmi(probs, a, b, c):
    a, b, c = tuple(a), tuple(b), tuple(c)
    val = oracle_entropy(probs, a + c) + oracle_entropy(probs, b + c) - oracle_entropy(probs, a + b + c)
    if c:
        val -= oracle_entropy(probs, c)
    return max(val, 0.0)


def oracle_capacity_class_bound(model, policy, probs, t):
    L, K = model.L, model.K
    q = (0,)
    x = tuple(1 + l for l in range(L))
    y = lambda ks: tuple(1 + L + k for k in ks)
    u = lambda ks: tuple(1 + L + K + k for k in ks)
    xt = tuple(1 + l for l in sorted(t))
    xtc = tuple(1 + l for l in range(L) if l not in t)
    best = math.inf
    for r in range(K + 1):
        for s in itertools.combinations(range(K), r):
            sc = tuple(k for k in range(K) if k not in s)
            val = sum(model.fronthaul[k] - oracle_cmi(probs, y([k]), u([k]), x + q) for k in s)
            val += oracle_cmi(probs, xt, u(sc), xtc + q)
            best = min(best, val)
    return max(best, 0.0)


class TestAssembleJoint:
    def test_point_mass(self):
        model = noiseless_relay_model()
        policy = dm.DmPolicy(
            pq=np.array([1.0]),
            px_given_q=(np.array([[1.0, 0.0]]),),
            pu_given_yq=(np.array([[[1.0, 0.0], [0.0, 1.0]]]),),
        )
        joint = dm.assemble_joint(model, policy)
        assert joint.probs[0, 0, 0, 0] == pytest.approx(1.0)

    def test_identity_channel_full_info(self):
        model = noiseless_relay_model()
        policy = identity_policy(model)
        joint = dm.assemble_joint(model, policy)
        from cran_rates.finite_info import cond_mutual_info, entropy

        assert cond_mutual_info(joint, [1], [3], [0]) == pytest.approx(entropy(joint, [1]), abs=1e-12)

    def test_test_channel_markov_structure(self):
        rng = rng_from_seed(21)
        model, policy = random_dm_instance(rng, L=2, K=2)
        joint = dm.assemble_joint(model, policy)
        for k in range(model.K):
            others = [model.u_axis(j) for j in range(model.K) if j != k]
            rest = list(model.x_axes()) + list(model.y_axes(set(range(model.K)) - {k})) + others
            assert check_markov(joint, [model.u_axis(k)], [model.y_axis(k), model.q_axis], rest, tol=1e-9)

    def test_channel_marginal_preserved(self):
        rng = rng_from_seed(4)
        model, policy = random_dm_instance(rng, L=1, K=2)
        joint = dm.assemble_joint(model, policy)
        probs = oracle_joint(model, policy)
        total = sum(probs.values())
        assert total == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(
            joint.probs.reshape(-1),
            np.array([probs.get(c, 0.0) for c in itertools.product(*(range(n) for n in joint.alphabet_sizes))]),
            atol=1e-14,
        )


class TestRegionCapacityClass:
    def test_zero_fronthaul_region_is_origin(self):
        rng = rng_from_seed(9)
        model, policy = random_dm_instance(rng, L=2, K=2, conditionally_independent=True, fronthaul_range=(0.0, 0.0))
        region = dm.region_capacity_class(model, policy)
        for t, v in region.bounds.items():
            assert v == 0.0

    def test_noiseless_single_relay(self):
        model = noiseless_relay_model(C=1.0)
        region = dm.region_capacity_class(model, identity_policy(model))
        assert region.bound([0]) == pytest.approx(1.0, abs=1e-12)

    def test_matches_subset_enumeration_oracle(self):
        rng = rng_from_seed(33)
        for _ in range(5):
            model, policy = random_dm_instance(rng, L=2, K=2, conditionally_independent=True)
            joint = dm.assemble_joint(model, policy)
            region = dm.region_capacity_class(model, policy, joint)
            probs = oracle_joint(model, policy)
            for t in region.bounds:
                assert region.bounds[t] == pytest.approx(
                    oracle_capacity_class_bound(model, policy, probs, t), abs=1e-11
                )

    def test_markov_violation_names_relay(self):
        channel = np.zeros((2, 2, 2))
        channel[0, 0, 0] = channel[1, 1, 1] = 0.9
        channel[0, 1, 1] = channel[1, 0, 0] = 0.1
        model = dm.DmCranModel(
            x_alphabets=(2,), y_alphabets=(2, 2), u_alphabets=(2, 2), q_alphabet=1,
            channel=channel, fronthaul=(1.0, 1.0),
        )
        with pytest.raises(MarkovViolationError) as err:
            dm.region_capacity_class(model, identity_policy(model))
        assert err.value.relay in (0, 1)


class TestRegionCfJd:
    def test_inner_bound_collapses_on_class(self):
        rng = rng_from_seed(101)
        for _ in range(10):
            model, policy = random_dm_instance(rng, L=2, K=2, conditionally_independent=True)
            joint = dm.assemble_joint(model, policy)
            r1 = dm.region_capacity_class(model, policy, joint)
            r2 = dm.region_cf_jd(model, policy, joint)
            for t in r1.bounds:
                assert abs(r1.bounds[t] - r2.bounds[t]) < 1e-9

    def test_empty_cut_always_limits(self):
        rng = rng_from_seed(12)
        model, policy = random_dm_instance(rng, L=2, K=2)
        joint = dm.assemble_joint(model, policy)
        region = dm.region_cf_jd(model, policy, joint)
        from cran_rates.finite_info import EntropyCache

        cache = EntropyCache(joint)
        for t in region.bounds:
            tc = set(range(model.L)) - t
            empty_cut = cache.cmi(model.x_axes(t), model.u_axes(), model.x_axes(tc) + (0,))
            assert region.bounds[t] <= empty_cut + 1e-12

    def test_constant_descriptions_give_zero(self):
        model = noiseless_relay_model()
        policy = identity_policy(model)
        pu = np.zeros((1, 2, 2))
        pu[:, :, 0] = 1.0
        policy = dm.DmPolicy(pq=policy.pq, px_given_q=policy.px_given_q, pu_given_yq=(pu,))
        region = dm.region_cf_jd(model, policy)
        assert region.bound([0]) == 0.0


class TestRegionCfSd:
    def test_huge_fronthaul_feasible(self):
        rng = rng_from_seed(13)
        model, policy = random_dm_instance(rng, L=2, K=2, fronthaul_range=(10.0, 11.0))
        region = dm.region_cf_sd(model, policy)
        assert not isinstance(region, Infeasible)

    def test_zero_fronthaul_infeasible(self):
        model = noiseless_relay_model(C=0.0)
        out = dm.region_cf_sd(model, identity_policy(model))
        assert isinstance(out, Infeasible)
        assert out.violated == frozenset([0])

    def test_feasibility_matches_exhaustive_check(self):
        rng = rng_from_seed(14)
        from cran_rates.finite_info import EntropyCache

        for _ in range(10):
            model, policy = random_dm_instance(rng, L=1, K=3, fronthaul_range=(0.2, 1.2))
            joint = dm.assemble_joint(model, policy)
            cache = EntropyCache(joint)
            feasible = True
            for r in range(1, model.K + 1):
                for s in itertools.combinations(range(model.K), r):
                    sc = tuple(k for k in range(model.K) if k not in s)
                    need = cache.cmi(model.u_axes(s), model.y_axes(s), model.u_axes(sc) + (0,))
                    if sum(model.fronthaul[k] for k in s) < need - 1e-10:
                        feasible = False
            out = dm.region_cf_sd(model, policy, joint)
            assert isinstance(out, Infeasible) == (not feasible)


class TestRegionCfSsd:
    def test_single_user_single_relay_reduces_to_sd(self):
        model = noiseless_relay_model(C=2.0)
        policy = identity_policy(model)
        box = dm.region_cf_ssd(model, policy, (0,), (0,))
        sd = dm.region_cf_sd(model, policy)
        assert box.bound([0]) == pytest.approx(sd.bound([0]), abs=1e-12)

    def test_orthogonal_two_user(self):
        # Y_k = X_k, independent links with ample fronthaul
        channel = np.zeros((2, 2, 2, 2))
        for x1 in range(2):
            for x2 in range(2):
                channel[x1, x2, x1, x2] = 1.0
        model = dm.DmCranModel(
            x_alphabets=(2, 2), y_alphabets=(2, 2), u_alphabets=(2, 2), q_alphabet=1,
            channel=channel, fronthaul=(2.0, 2.0),
        )
        box = dm.region_cf_ssd(model, identity_policy(model), (0, 1), (0, 1))
        assert box.bound([0]) == pytest.approx(1.0, abs=1e-12)
        assert box.bound([1]) == pytest.approx(1.0, abs=1e-12)

    def test_bad_permutation_rejected(self):
        model = noiseless_relay_model()
        with pytest.raises(SchemaError):
            dm.region_cf_ssd(model, identity_policy(model), (0, 1), (0,))

    def test_box_sum_within_jd_bound(self):
        rng = rng_from_seed(15)
        hits = 0
        for _ in range(10):
            model, policy = random_dm_instance(rng, L=2, K=2, fronthaul_range=(1.2, 2.5))
            joint = dm.assemble_joint(model, policy)
            jd = dm.region_cf_jd(model, policy, joint)
            for pi_r, pi_u, box in dm.cf_ssd_all_orders(model, policy, joint):
                if isinstance(box, Infeasible):
                    continue
                hits += 1
                assert box.sum_rate() <= jd.sum_rate() + 1e-9
        assert hits > 0


class TestSumrate:
    def test_zero_fronthaul(self):
        model = noiseless_relay_model(C=0.0)
        assert dm.sumrate_cf_jd(model, identity_policy(model)) == 0.0

    def test_noiseless_binary(self):
        model = noiseless_relay_model(C=1.0)
        assert dm.sumrate_cf_jd(model, identity_policy(model)) == pytest.approx(1.0, abs=1e-12)

    def test_equals_full_set_bound(self):
        rng = rng_from_seed(16)
        for _ in range(8):
            model, policy = random_dm_instance(rng, L=2, K=2)
            joint = dm.assemble_joint(model, policy)
            region = dm.region_cf_jd(model, policy, joint)
            assert dm.sumrate_cf_jd(model, policy, joint) == pytest.approx(region.sum_rate(), abs=1e-12)


class TestInvariants:
    def test_containment_chain(self):
        rng = rng_from_seed(17)
        checked = 0
        for _ in range(15):
            model, policy = random_dm_instance(rng, L=2, K=2, fronthaul_range=(1.2, 2.5))
            joint = dm.assemble_joint(model, policy)
            sd = dm.region_cf_sd(model, policy, joint)
            if isinstance(sd, Infeasible):
                continue
            jd = dm.region_cf_jd(model, policy, joint)
            for t in sd.bounds:
                assert sd.bounds[t] <= jd.bounds[t] + 1e-9
            for pi_r, pi_u, box in dm.cf_ssd_all_orders(model, policy, joint):
                if isinstance(box, Infeasible):
                    continue
                checked += 1
                for t in box.bounds:
                    assert box.bounds[t] <= sd.bounds[t] + 1e-9
        assert checked > 0

    def test_monotone_in_fronthaul(self):
        import dataclasses

        rng = rng_from_seed(18)
        model, policy = random_dm_instance(rng, L=2, K=2, fronthaul_range=(0.3, 0.8))
        joint = dm.assemble_joint(model, policy)
        base = dm.region_cf_jd(model, policy, joint)
        for k in range(model.K):
            fh = list(model.fronthaul)
            fh[k] += 0.5
            bigger = dm.region_cf_jd(dataclasses.replace(model, fronthaul=tuple(fh)), policy, joint)
            for t in base.bounds:
                assert bigger.bounds[t] >= base.bounds[t] - 1e-12


class TestJsonRoundTrip:
    def test_round_trip(self, tmp_path):
        rng = rng_from_seed(19)
        model, policy = random_dm_instance(rng, L=2, K=2)
        doc = dm.model_to_json(model, policy)
        path = tmp_path / "m.json"
        path.write_text(json.dumps(doc))
        model2, policy2 = dm.load_model(str(path))
        np.testing.assert_allclose(model2.channel, model.channel, atol=0)
        assert model2.fronthaul == model.fronthaul
        np.testing.assert_allclose(policy2.pq, policy.pq, atol=0)
        for a, b in zip(policy2.pu_given_yq, policy.pu_given_yq):
            np.testing.assert_allclose(a, b, atol=0)

    def test_shape_field_first_and_row_major(self):
        model = noiseless_relay_model()
        doc = dm.model_to_json(model, identity_policy(model))
        tensor = doc["channel"]
        assert list(tensor.keys())[0] == "shape"
        assert tensor["data"][: 2] == [1.0, 0.0]

    def test_bad_document_rejected(self):
        with pytest.raises(SchemaError):
            dm.model_from_json({"kind": "dm", "x_alphabets": [2]})
