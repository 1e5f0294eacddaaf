"""Per-cell rates for the circular symmetric Wyner uplink benchmark.

K single-antenna cells on a ring; each relay hears its own user at gain 1
and the two neighbors at gain gamma, all noise unit variance, every relay
owning a fronthaul of C bits.  Besides the cut-set bound the module covers
two codebook-aware schemes (decode-and-forward, compute-and-forward) and the
oblivious compress-and-forward family, with and without time-sharing.

All displayed log-det rate expressions are divided by K: the cut-set bound
carries the per-cell 1/K explicitly and the compress-and-forward variants
must be normalized the same way to be comparable (their decoupled gamma = 0
limit then correctly lands on log2(1+P) per cell).
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import minimize

from .errors import DomainError
from .optimize import golden_section
from .regions import all_subsets

MAX_CELLS = 12  # 2^K subset minimization


@dataclass(frozen=True)
class WynerModel:
    K: int
    gamma: float
    P: float
    C: float

    def __post_init__(self):
        if self.K < 3:
            raise DomainError(f"circular model needs K >= 3 cells, got K={self.K}")
        if self.K > MAX_CELLS:
            raise DomainError(f"K={self.K} exceeds the subset-minimization cap {MAX_CELLS}")
        if not 0.0 <= self.gamma <= 1.0:
            raise DomainError("gamma must lie in [0, 1]")
        if self.P < 0.0 or self.C < 0.0:
            raise DomainError("P and C must be nonnegative")

    @cached_property
    def H(self) -> np.ndarray:
        h = np.zeros((self.K, self.K))
        for k in range(self.K):
            h[k, k] = 1.0
            h[k, (k + 1) % self.K] = self.gamma
            h[k, (k - 1) % self.K] = self.gamma
        return h

    @cached_property
    def _subset_eigs(self) -> list:
        """(|S|, eigvals of H_{S^c} H_{S^c}^H) for every relay subset S."""
        table = []
        for s in all_subsets(self.K):
            sc = sorted(set(range(self.K)) - s)
            if sc:
                sub = self.H[sc, :]
                eigs = np.linalg.eigvalsh(sub @ sub.T)
                eigs = np.clip(eigs, 0.0, None)
            else:
                eigs = np.zeros(0)
            table.append((len(s), eigs))
        return table

    @cached_property
    def _full_eigs(self) -> np.ndarray:
        return np.clip(np.linalg.eigvalsh(self.H @ self.H.T), 0.0, None)

    def to_gaussian_model(self):
        """The same ring as a general Gaussian uplink model (K users, K relays)."""
        from .gaussian_info import GaussianCranModel

        channel = tuple(
            tuple(np.array([[self.H[k, l]]]) for l in range(self.K)) for k in range(self.K)
        )
        return GaussianCranModel(
            channel=channel,
            noise_cov=tuple(np.eye(1) for _ in range(self.K)),
            input_cov_cap=tuple(self.P * np.eye(1) for _ in range(self.K)),
            fronthaul=(self.C,) * self.K,
        )


def _minform(model: WynerModel, c_eff: float, weights, powers, us) -> float:
    """min over S of |S| c_eff + sum_q w_q [-|S| u_q + logdet(I + P_q b_q G_{S^c})].

    Symmetric quantizers across relays, b_q = 1 - 2^{-u_q}; the value is the
    K-user sum which callers divide by K for per-cell rates.
    """
    bs = [1.0 - 2.0 ** (-u) for u in us]
    best = math.inf
    for s_size, eigs in model._subset_eigs:
        val = s_size * c_eff
        for w, p, u, b in zip(weights, powers, us, bs):
            if w == 0.0:
                continue
            val += w * (-s_size * u + float(np.sum(np.log2(1.0 + p * b * eigs))))
        best = min(best, val)
    return best


def _u_cap(model: WynerModel, c_eff: float, p_eff: float) -> float:
    top = float(np.max(model._full_eigs, initial=1.0))
    return max(40.0, model.K * c_eff + math.log2(1.0 + max(p_eff, 1.0) * top) + 20.0)


def rate_cutset(m: WynerModel) -> float:
    """min of the fronthaul cut and the full MIMO cut, per cell."""
    mimo = float(np.sum(np.log2(1.0 + m.P * m._full_eigs))) / m.K
    return min(m.C, mimo)


def rate_df(m: WynerModel) -> float:
    """Decode-and-forward: local MAC decoding, then fronthaul forwarding."""
    g2p = 2.0 * m.gamma * m.gamma * m.P
    r_tin = math.log2(1.0 + m.P / (1.0 + g2p))
    r_joint = min(
        0.5 * math.log2(1.0 + g2p),
        (1.0 / 3.0) * math.log2(1.0 + (1.0 + 2.0 * m.gamma * m.gamma) * m.P),
    )
    return min(max(r_tin, r_joint), m.C)


def rate_cof(m: WynerModel) -> float:
    """Compute-and-forward: best integer equation within the norm bound."""
    if m.P == 0.0:
        return 0.0
    denom = 1.0 + m.P * (1.0 + 2.0 * m.gamma * m.gamma)
    bound = denom  # 1 + P(1 + 2 gamma^2)
    b1_max = int(math.floor(math.sqrt(bound)))
    b2_max = int(math.floor(math.sqrt(bound / 2.0)))
    b1 = np.arange(1, b1_max + 1, dtype=np.float64)  # sign symmetry: b1 > 0
    b2 = np.arange(-b2_max, b2_max + 1, dtype=np.float64)
    bb1, bb2 = np.meshgrid(b1, b2, indexing="ij")
    norm = bb1 * bb1 + 2.0 * bb2 * bb2
    mask = norm <= bound
    q = norm - m.P * (bb1 + 2.0 * m.gamma * bb2) ** 2 / denom
    q = np.where(mask, q, np.inf)
    best = float(-np.log2(np.min(q)))
    return min(best, m.C)


def rate_capacity_no_ts(m: WynerModel) -> float:
    """Oblivious per-cell capacity with one Gaussian codebook, no time-share."""
    if m.C <= 0.0 or m.P <= 0.0:
        return 0.0
    cap = _u_cap(m, m.C, m.P)
    res = golden_section(lambda u: _minform(m, m.C, [1.0], [m.P], [u]), 0.0, cap, tol=1e-10)
    return res.value / m.K


def rate_jd_two_phase(m: WynerModel) -> float:
    """Two-phase time-sharing: everyone active in a fraction alpha, then silent."""
    if m.C <= 0.0 or m.P <= 0.0:
        return 0.0

    def value(alpha, u):
        return alpha * _minform(m, m.C / alpha, [1.0], [m.P / alpha], [u])

    best = rate_capacity_no_ts(m) * m.K
    best_param = None
    for alpha in np.linspace(0.02, 1.0, 50):
        cap = _u_cap(m, m.C / alpha, m.P / alpha)
        res = golden_section(lambda u: value(float(alpha), u), 0.0, cap, tol=1e-9)
        if res.value > best:
            best = res.value
            best_param = (float(alpha), res.argmax)
    if best_param is not None:
        def neg(x):
            alpha = min(max(x[0], 1e-3), 1.0)
            return -value(alpha, max(x[1], 0.0))

        nm = minimize(neg, np.array(best_param), method="Nelder-Mead",
                      options={"xatol": 1e-9, "fatol": 1e-12, "maxiter": 400})
        best = max(best, -float(nm.fun))
    return best / m.K


def rate_capacity_ts(m: WynerModel, q_card: int = 2) -> float:
    """Oblivious per-cell capacity with time-sharing, |Q| capped at q_card.

    Best of no-time-sharing, the two-phase scheme, and a general two-phase
    search with both phases live; a lower bound on the supremum over
    unbounded |Q|.
    """
    if m.C <= 0.0 or m.P <= 0.0:
        return 0.0
    best = max(rate_capacity_no_ts(m), rate_jd_two_phase(m)) * m.K
    if q_card >= 2:
        def value(alpha, frac, u1, u2):
            p1 = frac * m.P / alpha
            p2 = (1.0 - frac) * m.P / (1.0 - alpha)
            return _minform(m, m.C, [alpha, 1.0 - alpha], [p1, p2], [u1, u2])

        def inner(alpha, frac):
            cap = _u_cap(m, m.C, m.P / min(alpha, 1.0 - alpha))
            u1 = u2 = min(cap, m.C + 1.0)
            val = -math.inf
            for _ in range(3):
                r1 = golden_section(lambda u: value(alpha, frac, u, u2), 0.0, cap, tol=1e-7)
                u1 = r1.argmax
                r2 = golden_section(lambda u: value(alpha, frac, u1, u), 0.0, cap, tol=1e-7)
                u2 = r2.argmax
                if abs(r2.value - val) < 1e-9:
                    val = r2.value
                    break
                val = r2.value
            return val, u1, u2

        best_gen, best_x = -math.inf, None
        for alpha in np.linspace(0.15, 0.85, 5):
            for frac in np.linspace(0.1, 0.9, 5):
                val, u1, u2 = inner(float(alpha), float(frac))
                if val > best_gen:
                    best_gen, best_x = val, (float(alpha), float(frac), u1, u2)
        if best_x is not None:
            def neg(x):
                alpha = min(max(x[0], 1e-3), 1.0 - 1e-3)
                frac = min(max(x[1], 0.0), 1.0)
                return -value(alpha, frac, max(x[2], 0.0), max(x[3], 0.0))

            nm = minimize(neg, np.array(best_x), method="Nelder-Mead",
                          options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": 600})
            best_gen = max(best_gen, -float(nm.fun))
        best = max(best, best_gen)
    return best / m.K


def rate_sd_no_ts(m: WynerModel) -> float:
    """Separate decompression-decoding, common Gaussian test-channel noise.

    The noise level solves K C = log2 det(I + (P H H^T + I)/s2) by bisection
    on s2 in [1e-9, 1e9]; an overprovisioned fronthaul saturates at the lower
    bracket end, where the quantization noise is already negligible.
    """
    if m.C <= 0.0 or m.P <= 0.0:
        return 0.0
    eigs = m.P * m._full_eigs + 1.0
    target = m.K * m.C

    def used_bits(s2):
        return float(np.sum(np.log2(1.0 + eigs / s2)))

    lo, hi = 1e-9, 1e9
    if used_bits(lo) <= target:
        s2 = lo
    elif used_bits(hi) >= target:
        s2 = hi
    else:
        for _ in range(200):
            mid = math.sqrt(lo * hi)
            if used_bits(mid) > target:
                lo = mid
            else:
                hi = mid
        s2 = math.sqrt(lo * hi)
    d = 1.0 / (1.0 + s2)
    return float(np.sum(np.log2(1.0 + m.P * d * m._full_eigs))) / m.K


def _ssd_noise_vars(m: WynerModel) -> np.ndarray:
    """Sequential Wyner-Ziv noise levels s_k^2 = mmse(Y_k | U_1..U_{k-1}) / (2^C - 1)."""
    denom = 2.0**m.C - 1.0
    cov_y = m.P * (m.H @ m.H.T) + np.eye(m.K)
    s2 = np.zeros(m.K)
    for k in range(m.K):
        if k == 0:
            err = cov_y[0, 0]
        else:
            su = cov_y[:k, :k] + np.diag(s2[:k])
            cross = cov_y[k, :k]
            err = cov_y[k, k] - cross @ np.linalg.solve(su, cross)
        s2[k] = err / denom
    return s2


def rate_ssd_no_ts(m: WynerModel) -> float:
    """Successive separate decompression-decoding, natural relay order."""
    if m.C <= 0.0 or m.P <= 0.0:
        return 0.0
    s2 = _ssd_noise_vars(m)
    d = np.diag(1.0 / (1.0 + s2))
    a = np.eye(m.K) + m.P * d @ m.H @ m.H.T
    sign, logdet = np.linalg.slogdet(a)
    return float(logdet / math.log(2.0)) / m.K


def rate_ptp_no_ts(m: WynerModel) -> float:
    """Point-to-point compression (no binning): one common description SNR."""
    if m.C <= 0.0 or m.P <= 0.0:
        return 0.0
    d_scale = (2.0**m.C - 1.0) / (2.0**m.C + m.P * (1.0 + 2.0 * m.gamma * m.gamma))
    a = np.eye(m.K) + m.P * d_scale * m.H @ m.H.T
    sign, logdet = np.linalg.slogdet(a)
    return float(logdet / math.log(2.0)) / m.K


CF_VARIANTS = {
    "jd_two_phase": rate_jd_two_phase,
    "sd_no_ts": rate_sd_no_ts,
    "ssd_no_ts": rate_ssd_no_ts,
    "ptp_no_ts": rate_ptp_no_ts,
    "capacity_ts": rate_capacity_ts,
    "capacity_no_ts": rate_capacity_no_ts,
}

OBLIVIOUS_SCHEMES = tuple(sorted(CF_VARIANTS))
ALL_SCHEMES = tuple(sorted(CF_VARIANTS) + ["cof", "cutset", "df"])


def rate_cf_variants(m: WynerModel, variant: str, q_card: int = 2) -> float:
    if variant not in CF_VARIANTS:
        raise KeyError(f"unknown variant {variant!r}; choose from {sorted(CF_VARIANTS)}")
    fn = CF_VARIANTS[variant]
    if variant == "capacity_ts":
        return fn(m, q_card=q_card)
    return fn(m)


def rate_by_scheme(m: WynerModel, scheme: str, q_card: int = 2) -> float:
    if scheme == "cutset":
        return rate_cutset(m)
    if scheme == "df":
        return rate_df(m)
    if scheme == "cof":
        return rate_cof(m)
    return rate_cf_variants(m, scheme, q_card=q_card)


def dof_fronthaul(p_linear: float) -> float:
    """Fronthaul scaling of the degrees-of-freedom sweep: C = 5 log10(P)."""
    return max(0.0, 5.0 * math.log10(p_linear)) if p_linear > 0 else 0.0


def sweep(
    base: WynerModel,
    p_grid_db,
    schemes=ALL_SCHEMES,
    dof: bool = False,
    q_card: int = 2,
) -> list:
    """Rows of (P_dB, {scheme: per-cell rate}) over the power grid."""
    rows = []
    for p_db in p_grid_db:
        p = 10.0 ** (p_db / 10.0)
        c = dof_fronthaul(p) if dof else base.C
        model = dataclasses.replace(base, P=p, C=c)
        rows.append((float(p_db), {s: rate_by_scheme(model, s, q_card=q_card) for s in schemes}))
    return rows
