"""Gaussian rate regions: time-shared region, cut-set bound, gap certificate.

The achievable region under Gaussian signaling is, per user subset T and
relay subset S,

    sum_T R_t <= sum_{k in S} [C_k - E_Q cost(B_{k,Q})] + E_Q info(T, S^c)

maximized over time-share weights, per-phase input covariances under the
coupled power constraint, and per-phase quantizers.  The cut-set outer bound
replaces every quantizer by Sigma_k^{-1} and drops the compression charge.
The single-user two-relay example admits closed forms which the optimizers
are checked against.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import DomainError
from .gaussian_info import (
    GaussianCranModel,
    clip_whitened,
    compression_cost,
    hermitize,
    info_term,
    logdet2_psd,
    sqrtm_psd,
    TimeShare,
)
from .optimize import DEFAULT_SEED, golden_section, projected_gradient_box, timeshare_search
from .regions import RateRegion, all_subsets, nonempty_subsets, region_from_raw


# ---------------------------------------------------------------------------
# Bound evaluation for explicit time-shares
# ---------------------------------------------------------------------------

def _pair_value(model: GaussianCranModel, ts: TimeShare, t, s) -> float:
    """Raw (unclamped) bound for one (T, S) pair at an explicit time-share."""
    t, s = frozenset(t), frozenset(s)
    val = 0.0
    for k in s:
        cost = sum(
            w * compression_cost(prof.b_mats[k], model.noise_cov[k])
            for w, prof in zip(ts.weights, ts.quantizers)
        )
        val += model.fronthaul[k] - cost
    sc = [k for k in range(model.K) if k not in s]
    for w, covs, prof in zip(ts.weights, ts.input_covs, ts.quantizers):
        if w == 0.0:
            continue
        val += w * info_term(model, t, sc, covs, prof.b_mats)
    return val


def gaussian_bound(model: GaussianCranModel, ts: TimeShare, t, s) -> float:
    """Achievable bound for (T, S), clamped at zero.  Validates the share."""
    ts.validate(model)
    return max(0.0, _pair_value(model, ts, t, s))


def cutset_bound(model: GaussianCranModel, t, s) -> float:
    """Max-flow min-cut outer bound for the (T, S) partition."""
    t, s = frozenset(t), frozenset(s)
    val = sum(model.fronthaul[k] for k in s)
    sc = [k for k in range(model.K) if k not in s]
    val += info_term(model, t, sc, model.input_cov_cap, model.noise_inv)
    return val


def cutset_region(model: GaussianCranModel) -> RateRegion:
    raw = {}
    for t in nonempty_subsets(model.L):
        raw[t] = min(cutset_bound(model, t, s) for s in all_subsets(model.K))
    return region_from_raw(model.L, raw)


# ---------------------------------------------------------------------------
# Whitened-domain optimization
# ---------------------------------------------------------------------------

def _herm_dim(m: int) -> int:
    return m * m


def _pack_herm(mat: np.ndarray) -> np.ndarray:
    m = mat.shape[0]
    out = np.empty(_herm_dim(m))
    out[:m] = mat.diagonal().real
    iu = np.triu_indices(m, 1)
    n_off = iu[0].size
    out[m : m + n_off] = mat[iu].real
    out[m + n_off :] = mat[iu].imag
    return out


def _unpack_herm(vec: np.ndarray, m: int) -> np.ndarray:
    mat = np.zeros((m, m), dtype=np.complex128)
    np.fill_diagonal(mat, vec[:m])
    iu = np.triu_indices(m, 1)
    n_off = iu[0].size
    off = vec[m : m + n_off] + 1j * vec[m + n_off :]
    mat[iu] = off
    return hermitize(mat + np.tril(np.zeros_like(mat)))


class _WhitenedEvaluator:
    """Per-T objective over whitened quantizers, shared power scalings."""

    def __init__(self, model: GaussianCranModel, t, input_scale_opt: bool = False):
        self.model = model
        self.t = sorted(t)
        self.input_scale_opt = input_scale_opt
        self.rx = model.rx_antennas
        # Whitened channel blocks fold Sigma^{-1/2} into H so info terms use
        # Bt directly.
        self.h_tilde = [model.noise_invsqrt[k] @ model.h_block(k, self.t) for k in range(model.K)]
        self.subsets = all_subsets(model.K)
        self.dims = [_herm_dim(m) for m in self.rx]
        self.b_dim = sum(self.dims)

    def split(self, vec):
        mats, off = [], 0
        for k, d in enumerate(self.dims):
            mats.append(_unpack_herm(vec[off : off + d], self.rx[k]))
            off += d
        scales = vec[off:] if self.input_scale_opt else None
        return mats, scales

    def project(self, vec):
        out = np.empty_like(vec)
        off = 0
        for k, d in enumerate(self.dims):
            out[off : off + d] = _pack_herm(clip_whitened(_unpack_herm(vec[off : off + d], self.rx[k])))
            off += d
        if self.input_scale_opt:
            out[off:] = np.clip(vec[off:], 0.0, 1.0)
        return out

    def k_half(self, scales, weight_scale=1.0):
        mats = []
        for idx, l in enumerate(self.t):
            cap = self.model.input_cov_cap[l]
            s = 1.0 if scales is None else float(scales[idx])
            mats.append(sqrtm_psd((s * weight_scale) * cap))
        n = sum(m.shape[0] for m in mats)
        kh = np.zeros((n, n), dtype=np.complex128)
        off = 0
        for m in mats:
            d = m.shape[0]
            kh[off : off + d, off : off + d] = m
            off += d
        return kh

    def phase_terms(self, b_tilde, kh):
        """(costs per relay, info per subset S^c) for one phase."""
        costs = np.empty(self.model.K)
        grams = []
        for k, bt in enumerate(b_tilde):
            w = np.linalg.eigvalsh(bt)
            one_minus = 1.0 - np.clip(w, 0.0, None)
            costs[k] = math.inf if one_minus.min() <= 0.0 else -np.sum(np.log2(one_minus))
            h = self.h_tilde[k]
            grams.append(h.conj().T @ bt @ h)
        infos = {}
        n = kh.shape[0]
        eye = np.eye(n)
        for s in self.subsets:
            m = np.zeros((n, n), dtype=np.complex128)
            for k in range(self.model.K):
                if k not in s:
                    m += grams[k]
            a = kh @ hermitize(m) @ kh + eye
            infos[s] = max(0.0, logdet2_psd(a, "info term"))
        return costs, infos


def _min_over_subsets(model, weights, per_phase_costs, per_phase_infos):
    best = np.inf
    for s in all_subsets(model.K):
        val = 0.0
        for k in s:
            cost = sum(w * c[k] for w, c in zip(weights, per_phase_costs))
            val += model.fronthaul[k] - cost
        val += sum(w * info[s] for w, info in zip(weights, per_phase_infos))
        best = min(best, val)
    return best


@dataclass
class GaussianRegionResult:
    """Optimized region plus the per-(T,S) table and optimizer metadata."""

    region: RateRegion
    per_pair: dict
    opt_meta: dict

    def pair(self, t, s) -> float:
        return self.per_pair[(frozenset(t), frozenset(s))]


def region_gaussian_no_ts(
    model: GaussianCranModel,
    optimize_input_cov: bool = False,
    restarts: int = 4,
    max_iter: int = 150,
    seed: int = DEFAULT_SEED,
) -> GaussianRegionResult:
    """Region without time-sharing: inputs at their caps, one quantizer each.

    Per user subset the min-over-S bound is maximized over the whitened
    quantizers by projected subgradient ascent with a coordinate polish.
    ``optimize_input_cov`` additionally searches a scalar backoff per user
    below its cap (off by default; the plain formula carries none).
    """
    raw, per_pair, meta = {}, {}, {}
    for t in nonempty_subsets(model.L):
        ev = _WhitenedEvaluator(model, t, input_scale_opt=optimize_input_cov)

        def objective(vec, ev=ev):
            b_tilde, scales = ev.split(vec)
            costs, infos = ev.phase_terms(b_tilde, ev.k_half(scales))
            return _min_over_subsets(model, (1.0,), (costs,), (infos,))

        dim = ev.b_dim + (len(ev.t) if optimize_input_cov else 0)
        starts = []
        for c in (0.3, 0.7, 0.95):
            vec = np.concatenate(
                [_pack_herm(c * np.eye(m, dtype=np.complex128)) for m in ev.rx]
            )
            if optimize_input_cov:
                vec = np.concatenate([vec, np.ones(len(ev.t))])
            starts.append(vec)
        res = projected_gradient_box(
            objective,
            dim,
            restarts=restarts,
            project=ev.project,
            x0_list=starts,
            max_iter=max_iter,
            seed=seed,
        )
        raw[t] = res.value
        b_tilde, scales = ev.split(res.argmax)
        costs, infos = ev.phase_terms(b_tilde, ev.k_half(scales))
        for s in all_subsets(model.K):
            val = sum(model.fronthaul[k] - costs[k] for k in s) + infos[s]
            per_pair[(t, s)] = float(val)
        meta[t] = {
            "iterations": res.iterations,
            "feasibility_residual": res.feasibility_residual,
            "restarts_used": res.restarts_used,
        }
    return GaussianRegionResult(region=region_from_raw(model.L, raw), per_pair=per_pair, opt_meta=meta)


def region_gaussian_ts(
    model: GaussianCranModel,
    q_card: int = 2,
    weight_resolution: float = 0.05,
    scale_points: int = 5,
    restarts: int = 2,
    max_iter: int = 80,
    seed: int = DEFAULT_SEED,
) -> GaussianRegionResult:
    """Region under time-sharing with |Q| phases (1, 2 or 3).

    Outer search walks the weight simplex and the per-phase power scalings;
    the inner problem optimizes all phases' whitened quantizers jointly.
    Values are lower bounds on the stated supremum since |Q| is capped.
    """
    if q_card not in (1, 2, 3):
        raise DomainError("q_card must be 1, 2 or 3")
    if q_card == 1:
        return region_gaussian_no_ts(model, restarts=restarts, max_iter=max_iter, seed=seed)

    raw, per_pair, meta = {}, {}, {}
    for t in nonempty_subsets(model.L):
        ev = _WhitenedEvaluator(model, t)

        def inner(weights, scales, ev=ev):
            k_halves = [ev.k_half(None, weight_scale=s) for s in scales]

            def objective(vec):
                phases_costs, phases_infos = [], []
                for q in range(q_card):
                    sub = vec[q * ev.b_dim : (q + 1) * ev.b_dim]
                    b_tilde, _ = ev.split(sub)
                    costs, infos = ev.phase_terms(b_tilde, k_halves[q])
                    phases_costs.append(costs)
                    phases_infos.append(infos)
                return _min_over_subsets(model, weights, phases_costs, phases_infos)

            def project(vec):
                return np.concatenate(
                    [ev.project(vec[q * ev.b_dim : (q + 1) * ev.b_dim]) for q in range(q_card)]
                )

            start = np.concatenate(
                [
                    np.concatenate([_pack_herm(c * np.eye(m, dtype=np.complex128)) for m in ev.rx])
                    for c in np.linspace(0.4, 0.8, q_card)
                ]
            )
            return projected_gradient_box(
                objective,
                q_card * ev.b_dim,
                restarts=restarts,
                project=project,
                x0_list=[start],
                max_iter=max_iter,
                seed=seed,
            )

        res = timeshare_search(inner, q_card, weight_resolution=weight_resolution, scale_points=scale_points)
        raw[t] = res.value
        weights = res.argmax["weights"]
        scales = res.argmax["scales"]
        vec = res.argmax["inner"]
        k_halves = [ev.k_half(None, weight_scale=s) for s in scales]
        phases = [ev.phase_terms(ev.split(vec[q * ev.b_dim : (q + 1) * ev.b_dim])[0], k_halves[q]) for q in range(q_card)]
        for s in all_subsets(model.K):
            val = 0.0
            for k in s:
                cost = sum(w * costs[k] for w, (costs, _) in zip(weights, phases))
                val += model.fronthaul[k] - cost
            val += sum(w * infos[s] for w, (_, infos) in zip(weights, phases))
            per_pair[(t, s)] = float(val)
        meta[t] = {
            "iterations": res.iterations,
            "feasibility_residual": res.feasibility_residual,
            "restarts_used": res.restarts_used,
            "weights": list(weights),
            "power_scales": list(scales),
        }
    return GaussianRegionResult(region=region_from_raw(model.L, raw), per_pair=per_pair, opt_meta=meta)


# ---------------------------------------------------------------------------
# Constant-gap certificate
# ---------------------------------------------------------------------------

def constant_gap_delta(k_relays: int, m_rx: int, n_tx: int) -> tuple[float, str]:
    km, n = k_relays * m_rx, n_tx
    if km > 2 * n:
        return 0.5 * n * (2.45 + math.log2(km / n)), "KM>2N"
    return 0.5 * (km + n), "KM<=2N"


@dataclass(frozen=True)
class GapCertificate:
    delta: float
    regime: str
    per_constraint_slack: dict  # (T, controlling S) -> bits
    verified: bool

    def to_jsonable(self) -> dict:
        return {
            "delta_bits": self.delta,
            "regime": self.regime,
            "verified": self.verified,
            "slacks": [
                {"users": sorted(t), "cut": sorted(s), "slack_bits": v}
                for (t, s), v in sorted(self.per_constraint_slack.items(), key=lambda kv: (sorted(kv[0][0]), sorted(kv[0][1])))
            ],
        }


def gap_certificate(
    model: GaussianCranModel, achieved: RateRegion, tol: float = 1e-6
) -> GapCertificate:
    """Certify the achieved region sits within the constant gap of the cut-set.

    For each user subset T the region-level slack min_S cutset(T,S) minus
    the achieved bound must not exceed |T| * delta; the slack is recorded
    under the controlling cut S.  Only equal-antenna models are covered by
    the piecewise gap formula.
    """
    if len(set(model.rx_antennas)) != 1 or len(set(model.tx_antennas)) != 1:
        raise DomainError("gap certificate requires equal antenna counts across relays and users")
    delta, regime = constant_gap_delta(model.K, model.rx_antennas[0], model.tx_antennas[0])
    slacks = {}
    ok = True
    for t in nonempty_subsets(model.L):
        best_s, best_v = None, np.inf
        for s in all_subsets(model.K):
            v = cutset_bound(model, t, s)
            if v < best_v:
                best_s, best_v = s, v
        slack = best_v - achieved.bound(t)
        slacks[(t, best_s)] = float(slack)
        if slack > len(t) * delta + tol:
            ok = False
    return GapCertificate(delta=delta, regime=regime, per_constraint_slack=slacks, verified=ok)


# ---------------------------------------------------------------------------
# Single-user, two-relay example: closed forms and fast scalar search
# ---------------------------------------------------------------------------

def example1_model(a: float = 1.0, P: float = 1.0, C: float = 0.5, noise_var: float = 1.0) -> GaussianCranModel:
    """L=1, K=2, single antennas, equal gains and fronthauls."""
    h = [[a]]
    return GaussianCranModel(
        channel=((h,), (h,)),
        noise_cov=([[noise_var]], [[noise_var]]),
        input_cov_cap=([[P]],),
        fronthaul=(C, C),
    )


def _ex1_value(a2p_phases, C, weights, us):
    """min over |S| of |S|*C + sum_q w_q [ -|S| u_q + log2(1 + |S^c| snr_q b_q) ].

    ``a2p_phases[q]`` is P_q a^2 / noise_var and b_q = 1 - 2^{-u_q}.
    """
    best = np.inf
    for s_size in (0, 1, 2):
        val = s_size * C
        for w, snr, u in zip(weights, a2p_phases, us):
            if w == 0.0:
                continue
            b = 1.0 - 2.0 ** (-u)
            val += w * (-s_size * u + math.log2(1.0 + (2 - s_size) * snr * b))
        best = min(best, val)
    return best


def closed_form_no_ts(a: float, P: float, C: float) -> float:
    """No-time-sharing capacity of the example, in closed form."""
    if C <= 0.0 or P <= 0.0 or a == 0.0:
        return 0.0
    s = 2.0 ** (2.0 * C)
    snr = a * a * P
    inner = s + snr - math.sqrt(snr * snr + (1.0 + 2.0 * snr) * s)
    return math.log2(1.0 + 2.0 * snr * inner / s)


def _u_cap(C: float, snr: float) -> float:
    return max(40.0, 2.0 * C + math.log2(1.0 + 2.0 * max(snr, 1.0)) + 20.0)


def two_phase_rate(a: float, P: float, C: float, noise_var: float = 1.0) -> float:
    """Boost transmission into an active fraction alpha, stay silent after.

    alpha = 1 recovers the no-time-sharing optimum exactly (taken as a
    candidate), so the returned rate never falls below the closed form.
    """
    if C <= 0.0 or P <= 0.0 or a == 0.0:
        return 0.0
    a_eff = a / math.sqrt(noise_var)
    snr = a_eff * a_eff * P

    def value(alpha, u):
        return alpha * _ex1_value([snr / alpha], C / alpha, [1.0], [u])

    def best_u(alpha):
        cap = _u_cap(C / alpha, snr / alpha)
        return golden_section(lambda u: value(alpha, u), 0.0, cap, tol=1e-10)

    best = closed_form_no_ts(a_eff, P, C)
    best_param = (1.0, None)
    for alpha in np.linspace(0.02, 1.0, 50):
        res = best_u(float(alpha))
        if res.value > best:
            best = res.value
            best_param = (float(alpha), res.argmax)

    if best_param[1] is not None:
        alpha0, u0 = best_param

        def neg(x):
            alpha = min(max(x[0], 1e-3), 1.0)
            u = max(x[1], 0.0)
            return -value(alpha, u)

        nm = minimize(neg, np.array([alpha0, u0]), method="Nelder-Mead", options={"xatol": 1e-9, "fatol": 1e-12, "maxiter": 400})
        best = max(best, -float(nm.fun))
    return best


def cf_ssd_no_ts_example1(a: float, P: float, C: float, noise_var: float = 1.0) -> float:
    """Successive Wyner-Ziv with Gaussian test channels, no time-sharing.

    Relay 1 quantizes at noise s1^2 = (a^2 P + 1)/(2^C - 1); relay 2 bins
    against the first description, so its noise scales the residual error
    of estimating Y_2 from U_1.  The decoder then sees two independent
    observations of X with noise 1 + s_k^2 each, giving

        log2(1 + P a^2 [(1 + s1^2)^{-1} + (1 + s2^2)^{-1}]).

    C = 0 returns 0 by convention (infinite quantization noise).
    """
    if C <= 0.0 or P <= 0.0 or a == 0.0:
        return 0.0
    a_eff = a / math.sqrt(noise_var)
    snr = a_eff * a_eff * P
    denom = 2.0**C - 1.0
    s1 = (snr + 1.0) / denom
    s2 = (snr + 1.0 - snr * snr / (snr + 1.0 + s1)) / denom
    return math.log2(1.0 + snr * (1.0 / (1.0 + s1) + 1.0 / (1.0 + s2)))


def example1_capacity_ts(
    a: float, P: float, C: float, q_card: int = 2, noise_var: float = 1.0
) -> float:
    """Example capacity under time-sharing, |Q| capped at q_card.

    Takes the best of the no-ts closed form, the two-phase scheme, and a
    general two-phase-weights search with both phases active; a lower bound
    on the unbounded-|Q| supremum.
    """
    if C <= 0.0 or P <= 0.0 or a == 0.0:
        return 0.0
    a_eff = a / math.sqrt(noise_var)
    snr_unit = a_eff * a_eff  # per unit power
    best = closed_form_no_ts(a_eff, P, C)
    best = max(best, two_phase_rate(a_eff, P, C))
    if q_card < 2:
        return closed_form_no_ts(a_eff, P, C)

    def value(alpha, frac, u1, u2):
        p1 = frac * P / alpha
        p2 = (1.0 - frac) * P / (1.0 - alpha)
        return _ex1_value(
            [snr_unit * p1, snr_unit * p2], C, [alpha, 1.0 - alpha], [u1, u2]
        )

    def inner_us(alpha, frac):
        cap = _u_cap(C, snr_unit * P / min(alpha, 1.0 - alpha))
        u1 = u2 = min(cap, max(1.0, C + 1.0))
        val = value(alpha, frac, u1, u2)
        for _ in range(4):
            r1 = golden_section(lambda u: value(alpha, frac, u, u2), 0.0, cap, tol=1e-8)
            u1 = r1.argmax
            r2 = golden_section(lambda u: value(alpha, frac, u1, u), 0.0, cap, tol=1e-8)
            u2 = r2.argmax
            if abs(r2.value - val) < 1e-10:
                val = r2.value
                break
            val = r2.value
        return val, u1, u2

    best_gen, best_x = -np.inf, None
    for alpha in np.linspace(0.1, 0.9, 9):
        for frac in np.linspace(0.05, 0.95, 9):
            val, u1, u2 = inner_us(float(alpha), float(frac))
            if val > best_gen:
                best_gen, best_x = val, (float(alpha), float(frac), u1, u2)

    if best_x is not None:

        def neg(x):
            alpha = min(max(x[0], 1e-3), 1.0 - 1e-3)
            frac = min(max(x[1], 0.0), 1.0)
            return -value(alpha, frac, max(x[2], 0.0), max(x[3], 0.0))

        nm = minimize(neg, np.array(best_x), method="Nelder-Mead", options={"xatol": 1e-9, "fatol": 1e-12, "maxiter": 600})
        best_gen = max(best_gen, -float(nm.fun))
    return max(best, best_gen)


def example1_cutset(a: float, P: float, C: float, noise_var: float = 1.0) -> float:
    snr = a * a * P / noise_var
    return min(2.0 * C, C + math.log2(1.0 + snr), math.log2(1.0 + 2.0 * snr))


EXAMPLE1_SCHEMES = ("capacity_no_ts", "capacity_ts", "cf_ssd_no_ts", "cutset", "two_phase")


def example1_curves(a: float, C: float, p_grid_db, q_card: int = 2, noise_var: float = 1.0):
    """Long-format rows (P_dB, scheme, rate_bits) for the example sweep."""
    rows = []
    for p_db in p_grid_db:
        p = 10.0 ** (p_db / 10.0)
        a_eff = a / math.sqrt(noise_var)
        vals = {
            "capacity_no_ts": closed_form_no_ts(a_eff, p, C),
            "capacity_ts": example1_capacity_ts(a, p, C, q_card=q_card, noise_var=noise_var),
            "two_phase": two_phase_rate(a, p, C, noise_var=noise_var),
            "cf_ssd_no_ts": cf_ssd_no_ts_example1(a, p, C, noise_var=noise_var),
            "cutset": example1_cutset(a, p, C, noise_var=noise_var),
        }
        for scheme in EXAMPLE1_SCHEMES:
            rows.append((float(p_db), scheme, vals[scheme]))
    return rows


def curves_to_csv(rows) -> str:
    """Serialize (P_dB, scheme, rate) rows: P ascending, scheme ascending."""
    ordered = sorted(rows, key=lambda r: (r[0], r[1]))
    lines = ["P_dB,scheme,rate_bits"]
    for p_db, scheme, rate in ordered:
        lines.append(f"{p_db:.6g},{scheme},{rate:.6g}")
    return "\n".join(lines) + "\n"
