"""Discrete-memoryless rate regions for the oblivious-relay uplink.

Evaluates, for a fixed finite-alphabet model and policy:

* the capacity region of the conditionally-independent class,
* the compress-and-forward inner bound with joint decompression-decoding
  (CF-JD) for general channels,
* separate decompression-decoding (CF-SD) and its successive variant
  (CF-SSD) with explicit decoding orders,
* the CF-JD maximum sum-rate.

Policies are inputs here, never optimized; evaluation is exact (dense
tensors, base-2 logs).  Variable layout of the assembled joint is
(Q, X_1..X_L, Y_1..Y_K, U_1..U_K).
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, MarkovViolationError, SchemaError
from .finite_info import EntropyCache, Pmf, cond_mutual_info
from .regions import Infeasible, RateRegion, all_subsets, nonempty_subsets, region_from_raw

MAX_RELAYS = 16  # subset enumeration is 2^K
ROW_TOL = 1e-9


def _check_rows(arr: np.ndarray, axis: int, what: str):
    sums = arr.sum(axis=axis)
    if np.max(np.abs(sums - 1.0)) > 1e-9:
        raise SchemaError(f"{what}: conditional rows must sum to 1")
    if arr.min() < -1e-12:
        raise SchemaError(f"{what}: negative probability entry")


@dataclass(frozen=True)
class DmCranModel:
    """Finite-alphabet uplink: channel p(y_1..y_K | x_1..x_L) plus fronthaul.

    ``channel`` has axes (x_1..x_L, y_1..y_K) and its y-slices sum to one for
    every input combination.  Fronthaul capacities are in bits per use.
    """

    x_alphabets: tuple
    y_alphabets: tuple
    u_alphabets: tuple
    q_alphabet: int
    channel: np.ndarray
    fronthaul: tuple

    def __post_init__(self):
        object.__setattr__(self, "x_alphabets", tuple(int(s) for s in self.x_alphabets))
        object.__setattr__(self, "y_alphabets", tuple(int(s) for s in self.y_alphabets))
        object.__setattr__(self, "u_alphabets", tuple(int(s) for s in self.u_alphabets))
        object.__setattr__(self, "fronthaul", tuple(float(c) for c in self.fronthaul))
        object.__setattr__(self, "channel", np.asarray(self.channel, dtype=np.float64))
        if self.K > MAX_RELAYS:
            raise DomainError(f"K={self.K} exceeds subset-enumeration cap {MAX_RELAYS}")
        if len(self.u_alphabets) != self.K or len(self.fronthaul) != self.K:
            raise SchemaError("u_alphabets and fronthaul must have one entry per relay")
        if min(self.x_alphabets + self.y_alphabets + self.u_alphabets + (self.q_alphabet,)) < 1:
            raise SchemaError("alphabet sizes must be >= 1")
        if any(c < 0 for c in self.fronthaul):
            raise SchemaError("fronthaul capacities must be nonnegative")
        if self.channel.shape != self.x_alphabets + self.y_alphabets:
            raise SchemaError(
                f"channel shape {self.channel.shape} does not match alphabets "
                f"{self.x_alphabets + self.y_alphabets}"
            )
        y_axes = tuple(range(self.L, self.L + self.K))
        _check_rows(self.channel, y_axes, "channel")

    @property
    def L(self) -> int:
        return len(self.x_alphabets)

    @property
    def K(self) -> int:
        return len(self.y_alphabets)

    # Axis layout of the assembled joint.
    @property
    def q_axis(self) -> int:
        return 0

    def x_axis(self, l: int) -> int:
        return 1 + l

    def y_axis(self, k: int) -> int:
        return 1 + self.L + k

    def u_axis(self, k: int) -> int:
        return 1 + self.L + self.K + k

    def x_axes(self, users=None) -> tuple:
        users = range(self.L) if users is None else sorted(users)
        return tuple(self.x_axis(l) for l in users)

    def y_axes(self, relays=None) -> tuple:
        relays = range(self.K) if relays is None else sorted(relays)
        return tuple(self.y_axis(k) for k in relays)

    def u_axes(self, relays=None) -> tuple:
        relays = range(self.K) if relays is None else sorted(relays)
        return tuple(self.u_axis(k) for k in relays)

    def is_conditionally_independent(self, tol: float = 1e-9) -> tuple[bool, int, float]:
        """Check Y_k - X - Y_rest for every relay under a uniform input.

        Returns (ok, first failing relay or -1, worst leakage in bits).  A
        uniform input exposes any factorization failure of the channel.
        """
        x_cells = int(np.prod(self.x_alphabets))
        joint = Pmf(self.channel / x_cells)
        x_ax = tuple(range(self.L))
        worst, worst_k = 0.0, -1
        for k in range(self.K):
            rest = tuple(self.L + j for j in range(self.K) if j != k)
            if not rest:
                continue
            leak = cond_mutual_info(joint, (self.L + k,), rest, x_ax)
            if leak > worst:
                worst, worst_k = leak, k
        return worst <= tol, worst_k, worst


@dataclass(frozen=True)
class DmPolicy:
    """Time-sharing pmf, per-user input pmfs and per-relay test channels.

    ``px_given_q[l]`` has shape (|Q|, |X_l|); ``pu_given_yq[k]`` has shape
    (|Q|, |Y_k|, |U_k|).  Together with the channel these define the joint
    p(q) prod_l p(x_l|q) p(y|x) prod_k p(u_k|y_k,q).
    """

    pq: np.ndarray
    px_given_q: tuple
    pu_given_yq: tuple

    def __post_init__(self):
        object.__setattr__(self, "pq", np.asarray(self.pq, dtype=np.float64))
        object.__setattr__(
            self, "px_given_q", tuple(np.asarray(a, dtype=np.float64) for a in self.px_given_q)
        )
        object.__setattr__(
            self, "pu_given_yq", tuple(np.asarray(a, dtype=np.float64) for a in self.pu_given_yq)
        )
        if abs(self.pq.sum() - 1.0) > 1e-9 or self.pq.min() < -1e-12:
            raise SchemaError("pq must be a pmf")
        for l, a in enumerate(self.px_given_q):
            _check_rows(a, 1, f"px_given_q[{l}]")
        for k, a in enumerate(self.pu_given_yq):
            _check_rows(a, 2, f"pu_given_yq[{k}]")


def assemble_joint(model: DmCranModel, policy: DmPolicy) -> Pmf:
    """Dense joint over (Q, X_1..X_L, Y_1..Y_K, U_1..U_K)."""
    L, K = model.L, model.K
    if policy.pq.shape != (model.q_alphabet,):
        raise SchemaError("policy pq length does not match q_alphabet")
    if len(policy.px_given_q) != L or len(policy.pu_given_yq) != K:
        raise SchemaError("policy factor counts do not match model")
    shape = (model.q_alphabet,) + model.x_alphabets + model.y_alphabets + model.u_alphabets
    ndim = len(shape)

    def lift(arr, axes):
        s = [1] * ndim
        for ax, n in zip(axes, arr.shape):
            s[ax] = n
        return arr.reshape(s)

    joint = lift(policy.pq, (0,)).astype(np.float64)
    for l in range(L):
        a = policy.px_given_q[l]
        if a.shape != (model.q_alphabet, model.x_alphabets[l]):
            raise SchemaError(f"px_given_q[{l}] has shape {a.shape}")
        joint = joint * lift(a, (0, model.x_axis(l)))
    joint = joint * lift(model.channel, model.x_axes() + model.y_axes())
    for k in range(K):
        a = policy.pu_given_yq[k]
        if a.shape != (model.q_alphabet, model.y_alphabets[k], model.u_alphabets[k]):
            raise SchemaError(f"pu_given_yq[{k}] has shape {a.shape}")
        joint = joint * lift(a, (0, model.y_axis(k), model.u_axis(k)))
    return Pmf(joint)


def _cache(model: DmCranModel, policy: DmPolicy, joint: Pmf | None) -> EntropyCache:
    return EntropyCache(joint if joint is not None else assemble_joint(model, policy))


def region_capacity_class(
    model: DmCranModel,
    policy: DmPolicy,
    joint: Pmf | None = None,
    markov_tol: float = 1e-9,
) -> RateRegion:
    """Capacity region of the conditionally-independent class.

    bound(T) = min over S of sum_{s in S}[C_s - I(Y_s;U_s|X,Q)]
               + I(X_T;U_{S^c}|X_{T^c},Q), clamped at zero.
    Raises MarkovViolationError when the channel is outside the class.
    """
    ok, relay, leak = model.is_conditionally_independent(markov_tol)
    if not ok:
        raise MarkovViolationError(relay, leak)
    cache = _cache(model, policy, joint)
    L, K = model.L, model.K
    q = (model.q_axis,)
    x_all = set(range(L))
    cost = [
        cond_by_cache(cache, (model.y_axis(k),), (model.u_axis(k),), model.x_axes() + q)
        for k in range(K)
    ]
    raw = {}
    for t in nonempty_subsets(L):
        tc = x_all - t
        best = np.inf
        for s in all_subsets(K):
            sc = tuple(k for k in range(K) if k not in s)
            val = sum(model.fronthaul[k] - cost[k] for k in s)
            val += cache.cmi(model.x_axes(t), model.u_axes(sc), model.x_axes(tc) + q)
            best = min(best, val)
        raw[t] = best
    return region_from_raw(L, raw)


def cond_by_cache(cache: EntropyCache, a, b, c) -> float:
    return cache.cmi(a, b, c)


def region_cf_jd(
    model: DmCranModel, policy: DmPolicy, joint: Pmf | None = None
) -> RateRegion:
    """CF-JD inner bound for general channels.

    bound(T) = min over S of sum_S C_s - I(Y_S;U_S|X,U_{S^c},Q)
               + I(X_T;U_{S^c}|X_{T^c},Q).
    """
    cache = _cache(model, policy, joint)
    L, K = model.L, model.K
    q = (model.q_axis,)
    x_all = set(range(L))
    raw = {}
    for t in nonempty_subsets(L):
        tc = x_all - t
        best = np.inf
        for s in all_subsets(K):
            sc = tuple(k for k in range(K) if k not in s)
            val = sum(model.fronthaul[k] for k in s)
            if s:
                val -= cache.cmi(
                    model.y_axes(s), model.u_axes(s), model.x_axes() + model.u_axes(sc) + q
                )
            val += cache.cmi(model.x_axes(t), model.u_axes(sc), model.x_axes(tc) + q)
            best = min(best, val)
        raw[t] = best
    return region_from_raw(L, raw)


def region_cf_sd(
    model: DmCranModel,
    policy: DmPolicy,
    joint: Pmf | None = None,
    tol: float = 1e-10,
) -> RateRegion | Infeasible:
    """CF-SD region, or Infeasible with the violated relay subset.

    Feasible iff sum_{s in S} C_s >= I(U_S;Y_S|U_{S^c},Q) for every S; the
    region is then the plain MAC region on the decoded descriptions.
    """
    cache = _cache(model, policy, joint)
    L, K = model.L, model.K
    q = (model.q_axis,)
    for s in nonempty_subsets(K):
        sc = tuple(k for k in range(K) if k not in s)
        need = cache.cmi(model.u_axes(s), model.y_axes(s), model.u_axes(sc) + q)
        have = sum(model.fronthaul[k] for k in s)
        if have < need - tol:
            return Infeasible(violated=s, deficit_bits=need - have)
    x_all = set(range(L))
    raw = {}
    for t in nonempty_subsets(L):
        tc = x_all - t
        raw[t] = cache.cmi(model.x_axes(t), model.u_axes(), model.x_axes(tc) + q)
    return region_from_raw(L, raw)


def _check_perm(pi: Sequence[int], n: int, name: str):
    if sorted(pi) != list(range(n)):
        raise SchemaError(f"{name} must be a permutation of 0..{n - 1}, got {tuple(pi)}")


def region_cf_ssd(
    model: DmCranModel,
    policy: DmPolicy,
    pi_r: Sequence[int],
    pi_u: Sequence[int],
    joint: Pmf | None = None,
    tol: float = 1e-10,
) -> RateRegion | Infeasible:
    """CF-SSD box for one (relay, user) decoding order, or Infeasible.

    Relay pi_r(k) needs C >= I(U;Y|earlier U,Q); user pi_u(l) then gets
    R <= I(X;U_all|earlier X,Q).  bound(T) is the sum of per-user caps,
    since the region is a box.
    """
    _check_perm(pi_r, model.K, "pi_r")
    _check_perm(pi_u, model.L, "pi_u")
    cache = _cache(model, policy, joint)
    q = (model.q_axis,)
    for pos, k in enumerate(pi_r):
        prior = tuple(pi_r[:pos])
        need = cache.cmi((model.u_axis(k),), (model.y_axis(k),), model.u_axes(prior) + q)
        if model.fronthaul[k] < need - tol:
            return Infeasible(violated=frozenset([k]), deficit_bits=need - model.fronthaul[k])
    per_user = {}
    for pos, l in enumerate(pi_u):
        prior = tuple(pi_u[:pos])
        per_user[l] = cache.cmi((model.x_axis(l),), model.u_axes(), model.x_axes(prior) + q)
    raw = {t: sum(per_user[l] for l in t) for t in nonempty_subsets(model.L)}
    return region_from_raw(model.L, raw)


def cf_ssd_all_orders(
    model: DmCranModel, policy: DmPolicy, joint: Pmf | None = None
) -> list:
    """All K!*L! CF-SSD boxes; the scheme's region is their union.

    Returns (pi_r, pi_u, RateRegion-or-Infeasible) triples.  Guarded to
    small K, L since the order count is factorial.
    """
    if model.K > 4 or model.L > 4:
        raise DomainError("order enumeration supported for K, L <= 4")
    joint = joint if joint is not None else assemble_joint(model, policy)
    out = []
    for pi_r in itertools.permutations(range(model.K)):
        for pi_u in itertools.permutations(range(model.L)):
            out.append((pi_r, pi_u, region_cf_ssd(model, policy, pi_r, pi_u, joint)))
    return out


def sumrate_cf_jd(model: DmCranModel, policy: DmPolicy, joint: Pmf | None = None) -> float:
    """CF-JD maximum sum-rate: the T = all-users bound, clamped at zero."""
    cache = _cache(model, policy, joint)
    K = model.K
    q = (model.q_axis,)
    best = np.inf
    for s in all_subsets(K):
        sc = tuple(k for k in range(K) if k not in s)
        val = sum(model.fronthaul[k] for k in s)
        if s:
            val -= cache.cmi(
                model.y_axes(s), model.u_axes(s), model.x_axes() + model.u_axes(sc) + q
            )
        val += cache.cmi(model.x_axes(), model.u_axes(sc), q)
        best = min(best, val)
    return max(0.0, best)


# ---------------------------------------------------------------------------
# JSON serialization: tensors carry explicit shape + row-major data.
# ---------------------------------------------------------------------------

def _tensor_to_json(arr: np.ndarray) -> dict:
    return {"shape": list(arr.shape), "data": [float(v) for v in arr.reshape(-1)]}


def _tensor_from_json(obj, what: str) -> np.ndarray:
    try:
        shape = tuple(int(s) for s in obj["shape"])
        data = np.asarray(obj["data"], dtype=np.float64)
        return data.reshape(shape)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad tensor field for {what}: {exc}") from exc


def model_to_json(model: DmCranModel, policy: DmPolicy | None = None) -> dict:
    doc = {
        "kind": "dm",
        "x_alphabets": list(model.x_alphabets),
        "y_alphabets": list(model.y_alphabets),
        "u_alphabets": list(model.u_alphabets),
        "q_alphabet": model.q_alphabet,
        "fronthaul": list(model.fronthaul),
        "channel": _tensor_to_json(model.channel),
    }
    if policy is not None:
        doc["policy"] = {
            "pq": _tensor_to_json(policy.pq),
            "px_given_q": [_tensor_to_json(a) for a in policy.px_given_q],
            "pu_given_yq": [_tensor_to_json(a) for a in policy.pu_given_yq],
        }
    return doc


def model_from_json(doc: dict) -> tuple[DmCranModel, DmPolicy | None]:
    if doc.get("kind") != "dm":
        raise SchemaError(f"expected kind 'dm', got {doc.get('kind')!r}")
    for field in ("x_alphabets", "y_alphabets", "u_alphabets", "q_alphabet", "fronthaul", "channel"):
        if field not in doc:
            raise SchemaError(f"dm model document missing field {field!r}")
    model = DmCranModel(
        x_alphabets=tuple(doc["x_alphabets"]),
        y_alphabets=tuple(doc["y_alphabets"]),
        u_alphabets=tuple(doc["u_alphabets"]),
        q_alphabet=int(doc["q_alphabet"]),
        channel=_tensor_from_json(doc["channel"], "channel"),
        fronthaul=tuple(doc["fronthaul"]),
    )
    policy = None
    if "policy" in doc:
        p = doc["policy"]
        policy = DmPolicy(
            pq=_tensor_from_json(p["pq"], "pq"),
            px_given_q=tuple(
                _tensor_from_json(a, f"px_given_q[{i}]") for i, a in enumerate(p["px_given_q"])
            ),
            pu_given_yq=tuple(
                _tensor_from_json(a, f"pu_given_yq[{i}]") for i, a in enumerate(p["pu_given_yq"])
            ),
        )
    return model, policy


def load_model(path: str) -> tuple[DmCranModel, DmPolicy | None]:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return model_from_json(doc)
