import math

import numpy as np
import pytest

from cran_rates import gaussian_schemes as gs
from cran_rates.errors import DomainError
from cran_rates.gaussian_info import QuantizerProfile, TimeShare
from cran_rates.regions import RateRegion
from cran_rates.sampling import random_gaussian_model, rng_from_seed


def two_relay_share(model, b, weights=(1.0,)):
    phases = len(weights)
    return TimeShare(
        weights=weights,
        input_covs=(tuple(model.input_cov_cap),) * phases,
        quantizers=(QuantizerProfile((np.array([[b]]), np.array([[b]]))),) * phases,
    )


class TestGaussianBound:
    def test_zero_quantizers_empty_cut(self):
        model = gs.example1_model(1.0, 1.0, 1.0)
        ts = two_relay_share(model, 0.0)
        assert gs.gaussian_bound(model, ts, [0], []) == 0.0

    def test_full_cut_zero_quantizers_gives_fronthaul_sum(self):
        model = gs.example1_model(1.0, 1.0, 1.0)
        ts = two_relay_share(model, 0.0)
        assert gs.gaussian_bound(model, ts, [0], [0, 1]) == pytest.approx(2.0, abs=1e-12)

    def test_scalar_hand_values(self):
        model = gs.example1_model(1.0, 1.0, 1.0)
        ts = two_relay_share(model, 0.5)
        assert gs.gaussian_bound(model, ts, [0], []) == pytest.approx(1.0, abs=1e-12)
        expect = 1.0 + math.log2(0.5) + math.log2(1.5)
        assert gs.gaussian_bound(model, ts, [0], [0]) == pytest.approx(expect, abs=1e-12)

    def test_infeasible_share_rejected(self):
        model = gs.example1_model(1.0, 1.0, 1.0)
        bad = TimeShare(
            weights=(1.0,),
            input_covs=((np.array([[5.0]]),),),
            quantizers=(QuantizerProfile((np.zeros((1, 1)), np.zeros((1, 1)))),),
        )
        with pytest.raises(ValueError):
            gs.gaussian_bound(model, bad, [0], [])


class TestCutset:
    def test_full_relay_cut_is_fronthaul_sum(self):
        model = gs.example1_model(1.0, 1.0, 0.5)
        assert gs.cutset_bound(model, [0], [0, 1]) == pytest.approx(1.0, abs=1e-12)

    def test_identity_with_saturated_quantizers(self):
        rng = rng_from_seed(31)
        model = random_gaussian_model(rng, K=2, L=1, M=2, N=1)
        from cran_rates.gaussian_info import info_term

        for s in ([], [0], [1], [0, 1]):
            sc = [k for k in range(2) if k not in s]
            direct = sum(model.fronthaul[k] for k in s) + info_term(
                model, [0], sc, model.input_cov_cap, model.noise_inv
            )
            assert gs.cutset_bound(model, [0], s) == pytest.approx(direct, abs=1e-10)

    def test_scalar_empty_cut(self):
        model = gs.example1_model(1.0, 1.0, 0.5)
        assert gs.cutset_bound(model, [0], []) == pytest.approx(math.log2(3.0), abs=1e-12)


class TestClosedForms:
    def test_zero_cases_exact(self):
        assert gs.closed_form_no_ts(1.0, 0.0, 0.5) == 0.0
        assert gs.closed_form_no_ts(1.0, 1.0, 0.0) == 0.0

    def test_value_at_unit_power(self):
        assert gs.closed_form_no_ts(1.0, 1.0, 0.5) == pytest.approx(
            math.log2(1.0 + (3.0 - math.sqrt(7.0))), abs=1e-12
        )
        assert gs.closed_form_no_ts(1.0, 1.0, 0.5) == pytest.approx(0.4374, abs=1e-4)

    def test_matches_grid_oracle(self):
        b = np.linspace(0.0, 1.0 - 1e-9, 200001)
        for P in (0.01, 1.0, 100.0):
            s0 = np.log2(1 + 2 * P * b)
            s1 = 0.5 + np.log2(1 - b) + np.log2(1 + P * b)
            s2 = 2 * (0.5 + np.log2(1 - b))
            oracle = float(np.max(np.minimum(np.minimum(s0, s1), s2)))
            assert gs.closed_form_no_ts(1.0, P, 0.5) == pytest.approx(oracle, abs=1e-4)


class TestTwoPhase:
    def test_alpha_one_matches_no_ts(self):
        for P in (0.05, 1.0, 10.0):
            assert gs.two_phase_rate(1.0, P, 0.5) >= gs.closed_form_no_ts(1.0, P, 0.5) - 1e-9

    def test_small_power_gain(self):
        P = 10 ** (-1.3)
        gain = gs.two_phase_rate(1.0, P, 0.5) - gs.closed_form_no_ts(1.0, P, 0.5)
        assert gain >= 1e-3

    def test_zero_inputs(self):
        assert gs.two_phase_rate(1.0, 0.0, 0.5) == 0.0
        assert gs.two_phase_rate(1.0, 1.0, 0.0) == 0.0


class TestCfSsdExample:
    def test_sequential_mmse_oracle(self):
        # independent recomputation of the two-stage Wyner-Ziv chain
        a, P, C = 1.0, 1.0, 1.0
        snr = a * a * P
        s1 = (snr + 1.0) / (2**C - 1.0)
        mmse2 = snr + 1.0 - snr**2 / (snr + 1.0 + s1)
        s2 = mmse2 / (2**C - 1.0)
        oracle = math.log2(1.0 + snr * (1 / (1 + s1) + 1 / (1 + s2)))
        assert s1 == pytest.approx(2.0, abs=1e-12)
        assert s2 == pytest.approx(1.75, abs=1e-12)
        assert gs.cf_ssd_no_ts_example1(a, P, C) == pytest.approx(oracle, abs=1e-12)
        assert gs.cf_ssd_no_ts_example1(a, P, C) == pytest.approx(math.log2(56.0 / 33.0), abs=1e-12)

    def test_high_fronthaul_limit(self):
        assert gs.cf_ssd_no_ts_example1(1.0, 1.0, 45.0) == pytest.approx(math.log2(3.0), abs=1e-8)

    def test_below_no_ts_capacity_at_c6(self):
        for p_db in np.linspace(-20, 20, 21):
            P = 10 ** (p_db / 10)
            assert gs.cf_ssd_no_ts_example1(1.0, P, 6.0) <= gs.closed_form_no_ts(1.0, P, 6.0) + 1e-9

    def test_zero_fronthaul_convention(self):
        assert gs.cf_ssd_no_ts_example1(1.0, 1.0, 0.0) == 0.0


class TestRegionOptimizers:
    def test_no_ts_matches_example_closed_form(self):
        model = gs.example1_model(1.0, 1.0, 0.5)
        res = gs.region_gaussian_no_ts(model)
        assert res.region.bound([0]) == pytest.approx(gs.closed_form_no_ts(1.0, 1.0, 0.5), abs=1e-4)

    def test_no_ts_zero_fronthaul(self):
        model = gs.example1_model(1.0, 1.0, 0.0)
        res = gs.region_gaussian_no_ts(model, restarts=2, max_iter=60)
        assert res.region.bound([0]) == pytest.approx(0.0, abs=1e-9)

    def test_no_ts_below_cutset_pairwise(self):
        rng = rng_from_seed(41)
        model = random_gaussian_model(rng, K=2, L=2, M=1, N=1)
        res = gs.region_gaussian_no_ts(model, restarts=2, max_iter=80)
        from cran_rates.regions import all_subsets, nonempty_subsets

        for t in nonempty_subsets(model.L):
            for s in all_subsets(model.K):
                assert res.pair(t, s) <= gs.cutset_bound(model, t, s) + 1e-9

    def test_ts_q1_reduces_to_no_ts(self):
        model = gs.example1_model(1.0, 1.0, 0.5)
        a = gs.region_gaussian_ts(model, q_card=1, restarts=2, max_iter=80)
        b = gs.region_gaussian_no_ts(model, restarts=2, max_iter=80)
        assert a.region.bound([0]) == pytest.approx(b.region.bound([0]), abs=1e-6)

    def test_ts_beats_no_ts_at_low_power(self):
        model = gs.example1_model(1.0, 10 ** (-1.3), 0.5)
        res = gs.region_gaussian_ts(
            model, q_card=2, weight_resolution=0.1, scale_points=5, restarts=1, max_iter=50
        )
        no_ts = gs.closed_form_no_ts(1.0, 10 ** (-1.3), 0.5)
        assert res.region.bound([0]) >= no_ts + 5e-4

    def test_optimizer_metadata_present(self):
        model = gs.example1_model(1.0, 1.0, 0.5)
        res = gs.region_gaussian_no_ts(model, restarts=2, max_iter=60)
        meta = res.opt_meta[frozenset([0])]
        assert meta["iterations"] > 0
        assert meta["feasibility_residual"] <= 1e-8

    def test_input_cov_backoff_flag(self):
        # info terms are monotone in the input covariance, so the optional
        # backoff search should land back at the cap solution
        model = gs.example1_model(1.0, 1.0, 0.5)
        res = gs.region_gaussian_no_ts(model, optimize_input_cov=True, restarts=2, max_iter=80)
        assert res.region.bound([0]) == pytest.approx(gs.closed_form_no_ts(1.0, 1.0, 0.5), abs=1e-3)


class TestCapacityTsScalar:
    def test_chain_against_components(self):
        for p_db in (-15.0, -5.0, 5.0, 15.0):
            P = 10 ** (p_db / 10)
            ts = gs.example1_capacity_ts(1.0, P, 0.5, q_card=2)
            assert ts >= gs.two_phase_rate(1.0, P, 0.5) - 1e-9
            assert ts <= gs.example1_cutset(1.0, P, 0.5) + 1e-9

    def test_q1_is_no_ts(self):
        assert gs.example1_capacity_ts(1.0, 1.0, 0.5, q_card=1) == pytest.approx(
            gs.closed_form_no_ts(1.0, 1.0, 0.5), abs=1e-12
        )

    def test_equal_input_covariances_kill_gain(self):
        # forcing both phases to the same power, |Q|=2 cannot beat |Q|=1
        rng = rng_from_seed(55)
        for _ in range(5):
            a = float(rng.uniform(0.5, 2.0))
            P = float(rng.uniform(0.1, 4.0))
            C = float(rng.uniform(0.3, 2.0))
            snr = a * a
            q1 = gs.closed_form_no_ts(a, P, C)

            def equal_power_value(alpha, u1, u2):
                return gs._ex1_value([snr * P, snr * P], C, [alpha, 1 - alpha], [u1, u2])

            best = q1
            from cran_rates.optimize import golden_section

            for alpha in np.linspace(0.1, 0.9, 9):
                for u2_scale in (0.5, 1.0, 2.0):
                    u_ref = max(0.5, C)
                    r = golden_section(
                        lambda u: equal_power_value(float(alpha), u, u_ref * u2_scale), 0.0, 40.0, tol=1e-8
                    )
                    best = max(best, r.value)
            assert best <= q1 + 1e-4


class TestGapCertificate:
    def test_delta_formula_values(self):
        assert gs.constant_gap_delta(2, 1, 1) == (1.5, "KM<=2N")
        delta, regime = gs.constant_gap_delta(3, 2, 1)
        assert delta == pytest.approx(0.5 * (2.45 + math.log2(6.0)), abs=1e-12)
        assert delta == pytest.approx(2.517, abs=1e-3)
        assert regime == "KM>2N"

    def test_cutset_itself_verifies_with_zero_slack(self):
        rng = rng_from_seed(61)
        model = random_gaussian_model(rng, K=2, L=1, M=1, N=1)
        achieved = gs.cutset_region(model)
        cert = gs.gap_certificate(model, achieved)
        assert cert.verified
        for slack in cert.per_constraint_slack.values():
            assert slack == pytest.approx(0.0, abs=1e-12)

    def test_unequal_antennas_rejected(self):
        from cran_rates.gaussian_info import GaussianCranModel

        model = GaussianCranModel(
            channel=((np.ones((1, 1)), np.ones((1, 2))),),
            noise_cov=(np.eye(1),),
            input_cov_cap=(np.eye(1), np.eye(2)),
            fronthaul=(1.0,),
        )
        with pytest.raises(DomainError):
            gs.gap_certificate(model, RateRegion(num_users=2, bounds={}))

    def test_random_instances_verify(self):
        rng = rng_from_seed(62)
        for _ in range(6):
            model = random_gaussian_model(
                rng,
                K=int(rng.integers(1, 3)),
                L=int(rng.integers(1, 3)),
                M=int(rng.integers(1, 3)),
                N=int(rng.integers(1, 3)),
            )
            res = gs.region_gaussian_no_ts(model, restarts=2, max_iter=100)
            cert = gs.gap_certificate(model, res.region, tol=0.05)
            assert cert.verified, cert.to_jsonable()


class TestPropertyChecks:
    def test_prop4_gap_vanishes_with_noise(self):
        gaps = []
        for eps in (1.0, 0.1, 0.01, 0.001):
            ts = gs.example1_capacity_ts(1.0, 1.0, 0.5, q_card=2, noise_var=eps)
            no_ts = gs.closed_form_no_ts(1.0 / math.sqrt(eps), 1.0, 0.5)
            gaps.append(ts - no_ts)
        for a, b in zip(gaps, gaps[1:]):
            assert b <= a + 1e-9
        assert gaps[-1] < 0.05

    def test_ordering_chain_spot(self):
        for P in (0.1, 1.0, 10.0):
            chain = [
                gs.cf_ssd_no_ts_example1(1.0, P, 0.5),
                gs.closed_form_no_ts(1.0, P, 0.5),
                gs.two_phase_rate(1.0, P, 0.5),
                gs.example1_capacity_ts(1.0, P, 0.5),
                gs.example1_cutset(1.0, P, 0.5),
            ]
            for lo, hi in zip(chain, chain[1:]):
                assert hi >= lo - 1e-6


class TestCsvEmission:
    def test_header_and_order(self):
        rows = gs.example1_curves(1.0, 0.5, [0.0, -10.0])
        text = gs.curves_to_csv(rows)
        lines = text.strip().split("\n")
        assert lines[0] == "P_dB,scheme,rate_bits"
        body = [l.split(",") for l in lines[1:]]
        keys = [(float(p), s) for p, s, _ in body]
        assert keys == sorted(keys)
        assert text.endswith("\n")

    def test_row_content_matches_evaluators(self):
        rows = gs.example1_curves(1.0, 0.5, [0.0])
        vals = {scheme: rate for _, scheme, rate in rows}
        assert vals["capacity_no_ts"] == pytest.approx(gs.closed_form_no_ts(1.0, 1.0, 0.5), abs=1e-12)
        assert vals["cutset"] == pytest.approx(gs.example1_cutset(1.0, 1.0, 0.5), abs=1e-12)
