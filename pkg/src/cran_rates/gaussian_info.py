"""PSD linear algebra and the quantizer parametrization for Gaussian models.

Relay test channels are parametrized by Hermitian matrices B_k with
0 <= B_k <= Sigma_k^{-1} in the Loewner order, related to the residual
estimation error through mmse(Y_k | X, U_k) = Sigma_k - Sigma_k B_k Sigma_k.
Working in the whitened domain Bt = Sigma^{1/2} B Sigma^{1/2} turns the
constraint into 0 <= Bt <= I, which optimizers handle by eigenvalue
clipping.  All rate quantities are in bits.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import SchemaError

LOG2 = math.log(2.0)
COND_CAP = 1e12
EIG_TOL = 1e-10


def as_cmatrix(a) -> np.ndarray:
    """Promote to a complex square/rectangular matrix."""
    m = np.asarray(a)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {m.shape}")
    return m.astype(np.complex128)


def hermitize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


def _eigh_guarded(a: np.ndarray, what: str):
    w, v = np.linalg.eigh(hermitize(as_cmatrix(a)))
    top = float(np.max(np.abs(w), initial=0.0))
    bot = float(np.min(np.abs(w), initial=0.0))
    if bot > 0.0 and top / bot > COND_CAP:
        raise ArithmeticError(f"{what}: condition number {top / bot:.3e} exceeds {COND_CAP:.0e}")
    return w, v


def logdet2_psd(a: np.ndarray, what: str = "matrix") -> float:
    """log2 det of a Hermitian PSD matrix via eigendecomposition."""
    w, _ = np.linalg.eigh(hermitize(as_cmatrix(a)))
    if w.min() < -1e-9:
        raise ArithmeticError(f"{what}: not PSD, min eigenvalue {w.min():.3e}")
    w = np.maximum(w, 1e-300)
    return float(np.sum(np.log2(w)))


def sqrtm_psd(a: np.ndarray) -> np.ndarray:
    w, v = _eigh_guarded(a, "matrix square root")
    w = np.maximum(w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def inv_pd(a: np.ndarray, what: str = "matrix") -> np.ndarray:
    w, v = _eigh_guarded(a, what)
    if w.min() <= 1e-12:
        raise ArithmeticError(f"{what}: singular (min eigenvalue {w.min():.3e})")
    return (v / w) @ v.conj().T


def invsqrtm_pd(a: np.ndarray, what: str = "matrix") -> np.ndarray:
    w, v = _eigh_guarded(a, what)
    if w.min() <= 1e-12:
        raise ArithmeticError(f"{what}: singular (min eigenvalue {w.min():.3e})")
    return (v / np.sqrt(w)) @ v.conj().T


def whiten(bmat, sigma) -> np.ndarray:
    """Bt = Sigma^{1/2} B Sigma^{1/2}; feasible B lands in [0, I]."""
    s_half = sqrtm_psd(sigma)
    return hermitize(s_half @ as_cmatrix(bmat) @ s_half)


def unwhiten(bt, sigma) -> np.ndarray:
    s_inv_half = invsqrtm_pd(sigma, "noise covariance")
    return hermitize(s_inv_half @ as_cmatrix(bt) @ s_inv_half)


def quantizer_feasible(bmat, sigma, tol: float = EIG_TOL) -> bool:
    w = np.linalg.eigvalsh(whiten(bmat, sigma))
    return bool(w.min() >= -tol and w.max() <= 1.0 + tol)


def clip_whitened(bt: np.ndarray, top: float = 1.0 - 1e-9) -> np.ndarray:
    """Project a Hermitian matrix onto {0 <= Bt <= top I} by eigen clipping."""
    w, v = np.linalg.eigh(hermitize(as_cmatrix(bt)))
    w = np.clip(w, 0.0, top)
    return (v * w) @ v.conj().T


def compression_cost(bmat, sigma, whitened: bool = False) -> float:
    """Fronthaul bits spent per use on the description: -log2 det(I - Bt).

    Saturates to +inf when an eigenvalue of Bt reaches one (noiseless
    description of a continuous output).  Raises if B leaves the feasible
    cone beyond tolerance.
    """
    bt = as_cmatrix(bmat) if whitened else whiten(bmat, sigma)
    w = np.linalg.eigvalsh(hermitize(bt))
    if w.min() < -1e-8 or w.max() > 1.0 + 1e-8:
        raise ValueError(f"quantizer outside feasible cone: whitened eigs {w}")
    one_minus = 1.0 - np.clip(w, 0.0, None)
    if one_minus.min() <= 0.0:
        return math.inf
    return float(-np.sum(np.log2(one_minus)))


def test_channel_quantizer(sigma, qcov) -> np.ndarray:
    """B for the additive Gaussian test channel U = Y + N(0, Q)."""
    return hermitize(inv_pd(as_cmatrix(sigma) + as_cmatrix(qcov), "Sigma + Q"))


@dataclass(frozen=True)
class GaussianCranModel:
    """MIMO uplink: per-(relay, user) channel blocks, noise, caps, fronthaul.

    ``channel[k][l]`` is the M_k x N_l block from user l to relay k; noise
    covariances must be strictly PD, input caps PSD.
    """

    channel: tuple  # K x L nested tuple of complex matrices
    noise_cov: tuple
    input_cov_cap: tuple
    fronthaul: tuple

    def __post_init__(self):
        chan = tuple(tuple(as_cmatrix(h) for h in row) for row in self.channel)
        noise = tuple(hermitize(as_cmatrix(s)) for s in self.noise_cov)
        caps = tuple(hermitize(as_cmatrix(k)) for k in self.input_cov_cap)
        fh = tuple(float(c) for c in self.fronthaul)
        object.__setattr__(self, "channel", chan)
        object.__setattr__(self, "noise_cov", noise)
        object.__setattr__(self, "input_cov_cap", caps)
        object.__setattr__(self, "fronthaul", fh)
        K, L = len(chan), len(chan[0]) if chan else 0
        if len(noise) != K or len(fh) != K:
            raise SchemaError("noise_cov and fronthaul must have one entry per relay")
        if len(caps) != L:
            raise SchemaError("input_cov_cap must have one entry per user")
        if any(c < 0 for c in fh):
            raise SchemaError("fronthaul capacities must be nonnegative")
        for k in range(K):
            if len(chan[k]) != L:
                raise SchemaError("channel must be a K x L grid of blocks")
            mk = noise[k].shape[0]
            if np.linalg.eigvalsh(noise[k]).min() <= 1e-12:
                raise SchemaError(f"noise covariance {k} must be strictly positive definite")
            for l in range(L):
                if chan[k][l].shape != (mk, caps[l].shape[0]):
                    raise SchemaError(
                        f"channel block ({k},{l}) has shape {chan[k][l].shape}, "
                        f"expected ({mk},{caps[l].shape[0]})"
                    )
        for l, kl in enumerate(caps):
            if np.linalg.eigvalsh(kl).min() < -1e-9:
                raise SchemaError(f"input covariance cap {l} must be PSD")

    @property
    def K(self) -> int:
        return len(self.channel)

    @property
    def L(self) -> int:
        return len(self.input_cov_cap)

    @property
    def rx_antennas(self) -> tuple:
        return tuple(s.shape[0] for s in self.noise_cov)

    @property
    def tx_antennas(self) -> tuple:
        return tuple(k.shape[0] for k in self.input_cov_cap)

    @cached_property
    def noise_inv(self) -> tuple:
        return tuple(inv_pd(s, "noise covariance") for s in self.noise_cov)

    @cached_property
    def noise_invsqrt(self) -> tuple:
        return tuple(invsqrtm_pd(s, "noise covariance") for s in self.noise_cov)

    def h_block(self, k: int, users) -> np.ndarray:
        """Concatenated channel H_{k,T} for the sorted user subset T."""
        return np.concatenate([self.channel[k][l] for l in sorted(users)], axis=1)


@dataclass(frozen=True)
class QuantizerProfile:
    """One Hermitian quantizer matrix per relay."""

    b_mats: tuple

    def __post_init__(self):
        object.__setattr__(self, "b_mats", tuple(hermitize(as_cmatrix(b)) for b in self.b_mats))

    def validate(self, model: GaussianCranModel, tol: float = EIG_TOL):
        if len(self.b_mats) != model.K:
            raise SchemaError("profile must carry one quantizer per relay")
        for k, b in enumerate(self.b_mats):
            if not quantizer_feasible(b, model.noise_cov[k], tol):
                raise ValueError(f"quantizer {k} outside [0, Sigma^-1]")


@dataclass(frozen=True)
class TimeShare:
    """Weighted per-letter policies: (alpha_q, input covariances, quantizers)."""

    weights: tuple
    input_covs: tuple  # per phase: tuple over users
    quantizers: tuple  # per phase: QuantizerProfile

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(
            self,
            "input_covs",
            tuple(tuple(hermitize(as_cmatrix(k)) for k in phase) for phase in self.input_covs),
        )
        quants = tuple(
            q if isinstance(q, QuantizerProfile) else QuantizerProfile(tuple(q))
            for q in self.quantizers
        )
        object.__setattr__(self, "quantizers", quants)
        if not (len(self.weights) == len(self.input_covs) == len(self.quantizers)):
            raise SchemaError("time-share entries must align")
        if abs(sum(self.weights) - 1.0) > 1e-9 or min(self.weights) < -1e-12:
            raise SchemaError("time-share weights must form a pmf")

    @property
    def num_phases(self) -> int:
        return len(self.weights)

    def validate(self, model: GaussianCranModel, tol: float = 1e-9):
        for prof in self.quantizers:
            prof.validate(model)
        for l in range(model.L):
            avg = sum(
                w * phase[l] for w, phase in zip(self.weights, self.input_covs)
            )
            slack = model.input_cov_cap[l] - avg
            if np.linalg.eigvalsh(hermitize(slack)).min() < -tol:
                raise ValueError(f"average input covariance of user {l} exceeds its cap")


def single_phase(model: GaussianCranModel, b_mats, input_covs=None) -> TimeShare:
    covs = tuple(input_covs) if input_covs is not None else model.input_cov_cap
    return TimeShare(weights=(1.0,), input_covs=(covs,), quantizers=(QuantizerProfile(tuple(b_mats)),))


def info_term(model: GaussianCranModel, t_users, s_c_relays, k_mats, b_mats) -> float:
    """Bits revealed about X_T by the descriptions of the relays in S^c.

    Evaluated in the symmetric form log2 det(K^{1/2} (sum_k H^H B H) K^{1/2}
    + I), which stays finite for singular input covariances and agrees with
    the determinant ratio whenever K is invertible.
    """
    t = sorted(t_users)
    if not t:
        return 0.0
    blocks = [as_cmatrix(k_mats[l]) for l in t]
    n = sum(b.shape[0] for b in blocks)
    k_half = np.zeros((n, n), dtype=np.complex128)
    off = 0
    for b in blocks:
        d = b.shape[0]
        k_half[off : off + d, off : off + d] = sqrtm_psd(b)
        off += d
    m = np.zeros((n, n), dtype=np.complex128)
    for k in sorted(s_c_relays):
        h = model.h_block(k, t)
        m += h.conj().T @ as_cmatrix(b_mats[k]) @ h
    a = k_half @ hermitize(m) @ k_half + np.eye(n)
    return max(0.0, logdet2_psd(a, "info term"))


def mmse_matrix(model: GaussianCranModel, k: int, bmat) -> np.ndarray:
    """Residual error of estimating Y_k from (X, U_k): Sigma - Sigma B Sigma."""
    sigma = model.noise_cov[k]
    if not quantizer_feasible(bmat, sigma):
        raise ValueError(f"quantizer {k} outside [0, Sigma^-1]")
    out = hermitize(sigma - sigma @ as_cmatrix(bmat) @ sigma)
    return out


# ---------------------------------------------------------------------------
# JSON: matrices as {"re": rows, "im": rows}, validated on load.
# ---------------------------------------------------------------------------

def _mat_to_json(m) -> dict:
    m = as_cmatrix(m)
    return {"re": m.real.tolist(), "im": m.imag.tolist()}


def _mat_from_json(obj, what: str) -> np.ndarray:
    try:
        re = np.asarray(obj["re"], dtype=np.float64)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad matrix field for {what}: {exc}") from exc
    if re.shape != im.shape or re.ndim != 2:
        raise SchemaError(f"{what}: re/im must be equal-shape 2-D arrays")
    return re + 1j * im


def model_to_json(model: GaussianCranModel) -> dict:
    return {
        "kind": "gaussian",
        "fronthaul": list(model.fronthaul),
        "channel": [[_mat_to_json(h) for h in row] for row in model.channel],
        "noise_cov": [_mat_to_json(s) for s in model.noise_cov],
        "input_cov_cap": [_mat_to_json(k) for k in model.input_cov_cap],
    }


def model_from_json(doc: dict) -> GaussianCranModel:
    if doc.get("kind") != "gaussian":
        raise SchemaError(f"expected kind 'gaussian', got {doc.get('kind')!r}")
    for field_name in ("fronthaul", "channel", "noise_cov", "input_cov_cap"):
        if field_name not in doc:
            raise SchemaError(f"gaussian model document missing field {field_name!r}")
    channel = tuple(
        tuple(_mat_from_json(h, f"channel[{k}][{l}]") for l, h in enumerate(row))
        for k, row in enumerate(doc["channel"])
    )
    return GaussianCranModel(
        channel=channel,
        noise_cov=tuple(_mat_from_json(s, f"noise_cov[{k}]") for k, s in enumerate(doc["noise_cov"])),
        input_cov_cap=tuple(
            _mat_from_json(k, f"input_cov_cap[{l}]") for l, k in enumerate(doc["input_cov_cap"])
        ),
        fronthaul=tuple(doc["fronthaul"]),
    )


def load_model(path: str) -> GaussianCranModel:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return model_from_json(doc)
