import math

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from cran_rates.finite_info import (
    EntropyCache,
    Pmf,
    check_markov,
    cond_mutual_info,
    entropy,
    marginalize,
)


def brute_marginal(probs, keep):
    """Oracle: elementwise accumulation with explicit python loops."""
    out = np.zeros(tuple(probs.shape[i] for i in keep))
    for idx in np.ndindex(probs.shape):
        out[tuple(idx[i] for i in keep)] += probs[idx]
    return out


def scalar_entropy(p):
    return -sum(v * math.log2(v) for v in np.asarray(p).reshape(-1) if v > 1e-15)


def random_pmf(rng, shape):
    x = rng.random(shape) + 1e-3
    return Pmf(x / x.sum())


class TestPmf:
    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            Pmf(np.array([1.2, -0.2]))

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            Pmf(np.array([0.5, 0.6]))

    def test_rejects_oversized(self):
        with pytest.raises(ValueError):
            Pmf(np.zeros((2,) * 21))

    def test_from_flat_row_major(self):
        p = Pmf.from_flat([2, 2], [0.1, 0.2, 0.3, 0.4])
        assert p.probs[0, 1] == 0.2
        assert p.probs[1, 0] == 0.3


class TestMarginalize:
    def test_uniform_joint(self):
        p = Pmf(np.full((2, 2), 0.25))
        m = marginalize(p, [0])
        np.testing.assert_allclose(m.probs, [0.5, 0.5])

    def test_product_structure(self):
        a = np.array([0.3, 0.7])
        b = np.array([0.9, 0.1])
        joint = Pmf(np.outer(a, b))
        np.testing.assert_allclose(marginalize(joint, [1]).probs, b, atol=1e-15)

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(3)
        p = random_pmf(rng, (3, 2, 4))
        got = marginalize(p, [0, 2]).probs
        np.testing.assert_allclose(got, brute_marginal(p.probs, (0, 2)), atol=1e-14)

    def test_out_of_range(self):
        p = Pmf(np.full((2, 2), 0.25))
        with pytest.raises(ValueError):
            marginalize(p, [0, 3])


class TestEntropy:
    def test_uniform_binary(self):
        assert entropy(Pmf(np.array([0.5, 0.5]))) == pytest.approx(1.0, abs=1e-12)

    def test_point_mass(self):
        assert entropy(Pmf(np.array([1.0, 0.0]))) == 0.0

    def test_skewed_binary(self):
        val = entropy(Pmf(np.array([0.11, 0.89])))
        assert val == pytest.approx(0.4999, abs=1e-3)
        assert val == pytest.approx(scalar_entropy([0.11, 0.89]), abs=1e-12)


class TestCondMutualInfo:
    def test_independent(self):
        joint = Pmf(np.outer([0.3, 0.7], [0.4, 0.6]))
        assert cond_mutual_info(joint, [0], [1]) == pytest.approx(0.0, abs=1e-12)

    def test_identical_uniform(self):
        joint = Pmf(np.diag([0.5, 0.5]))
        assert cond_mutual_info(joint, [0], [1]) == pytest.approx(1.0, abs=1e-12)

    def test_bsc_011(self):
        eps = 0.11
        joint = Pmf(0.5 * np.array([[1 - eps, eps], [eps, 1 - eps]]))
        expect = 1.0 - scalar_entropy([eps, 1 - eps])
        assert cond_mutual_info(joint, [0], [1]) == pytest.approx(expect, abs=1e-12)
        assert cond_mutual_info(joint, [0], [1]) == pytest.approx(0.5001, abs=1e-3)

    def test_overlap_rejected(self):
        joint = Pmf(np.full((2, 2), 0.25))
        with pytest.raises(ValueError):
            cond_mutual_info(joint, [0], [0])


def chain_joint(rng, na=2, nb=2, nc=2):
    """p(a) p(b|a) p(c|b) built by explicit loops."""
    pa = rng.dirichlet(np.ones(na))
    pba = rng.dirichlet(np.ones(nb), size=na)
    pcb = rng.dirichlet(np.ones(nc), size=nb)
    joint = np.zeros((na, nb, nc))
    for a in range(na):
        for b in range(nb):
            for c in range(nc):
                joint[a, b, c] = pa[a] * pba[a, b] * pcb[b, c]
    return Pmf(joint)


class TestCheckMarkov:
    def test_constructed_chain(self):
        rng = np.random.default_rng(11)
        assert check_markov(chain_joint(rng), [0], [1], [2], tol=1e-10)

    def test_fully_dependent_triple(self):
        joint = np.zeros((2, 2, 2))
        joint[0, 0, 0] = joint[1, 1, 1] = 0.5
        assert check_markov(Pmf(joint), [0], [1], [2], tol=1e-10)

    def test_matches_cmi_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            p = random_pmf(rng, (2, 2, 2))
            leak = cond_mutual_info(p, [0], [2], [1])
            assert check_markov(p, [0], [1], [2], tol=1e-6) == (leak <= 1e-6)


pmf_weights = st.lists(st.integers(min_value=0, max_value=100), min_size=16, max_size=16).filter(
    lambda w: sum(w) > 0
)


@settings(max_examples=60, deadline=None)
@given(pmf_weights)
def test_chain_rule(weights):
    probs = np.array(weights, dtype=float).reshape(2, 2, 2, 2)
    probs = probs / probs.sum()
    joint = Pmf(probs)
    # H(B|A) assembled independently from the conditional slices
    pa = probs.sum(axis=(1, 2, 3))
    h_b_given_a = 0.0
    for a in range(2):
        if pa[a] <= 1e-15:
            continue
        cond = probs[a].sum(axis=(1, 2)) / pa[a]
        h_b_given_a += pa[a] * (-sum(v * math.log2(v) for v in cond if v > 1e-15))
    assert abs(entropy(joint, [0, 1]) - (entropy(joint, [0]) + h_b_given_a)) < 1e-10
    # monotonicity under adding variables
    assert entropy(joint, [0, 1, 2, 3]) >= entropy(joint, [0, 1]) - 1e-10


@settings(max_examples=60, deadline=None)
@given(pmf_weights)
def test_cmi_nonnegative(weights):
    probs = np.array(weights, dtype=float).reshape(2, 2, 2, 2)
    joint = Pmf(probs / probs.sum())
    assert cond_mutual_info(joint, [0], [1], [2, 3]) >= 0.0
    assert cond_mutual_info(joint, [0, 3], [1], [2]) >= 0.0


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_data_processing_on_chains(seed):
    joint = chain_joint(np.random.default_rng(seed))
    i_ac = cond_mutual_info(joint, [0], [2])
    i_ab = cond_mutual_info(joint, [0], [1])
    assert i_ac <= i_ab + 1e-10
