"""Exact entropy and mutual-information computation over finite joint pmfs.

All quantities are in bits (base-2 logarithms).  Joint distributions are
stored as dense numpy tensors with one axis per random variable; variables
are addressed by axis index.  Everything here is a pure function over
immutable inputs, so calls are safe from any number of threads.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

# Dense-tensor cap: alphabet product size beyond this is refused outright.
MAX_CELLS = 1 << 20
# Probabilities below this are treated as exact zeros (0*log 0 := 0).
ZERO_PROB = 1e-15
# Tolerance on the normalization invariant.
SUM_TOL = 1e-12

VarSet = tuple[int, ...]


def as_varset(indices: Iterable[int], ndim: int) -> VarSet:
    """Normalize an iterable of axis indices into a sorted, validated tuple."""
    idx = tuple(sorted(int(i) for i in indices))
    if len(set(idx)) != len(idx):
        raise ValueError(f"variable indices must be distinct, got {idx}")
    if idx and (idx[0] < 0 or idx[-1] >= ndim):
        raise ValueError(f"variable index out of range for {ndim} axes: {idx}")
    return idx


@dataclass(frozen=True)
class Pmf:
    """A joint pmf over finitely many variables, one tensor axis each.

    Invariants (checked at construction): entries nonnegative, entries sum
    to one within ``SUM_TOL``, total cell count at most ``MAX_CELLS``.
    """

    probs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.probs, dtype=np.float64)
        if arr.size > MAX_CELLS:
            raise ValueError(
                f"alphabet product size {arr.size} exceeds cap {MAX_CELLS}"
            )
        if arr.min(initial=0.0) < -SUM_TOL:
            raise ValueError(f"pmf has negative entry {arr.min()}")
        arr = np.where(arr < 0.0, 0.0, arr)
        total = arr.sum()
        if abs(total - 1.0) > SUM_TOL * max(1.0, arr.size ** 0.5):
            raise ValueError(f"pmf entries sum to {total}, expected 1")
        object.__setattr__(self, "probs", arr)

    @property
    def alphabet_sizes(self) -> tuple[int, ...]:
        return self.probs.shape

    @property
    def num_vars(self) -> int:
        return self.probs.ndim

    @classmethod
    def from_flat(cls, shape: Sequence[int], data: Sequence[float]) -> "Pmf":
        """Build from a shape list plus row-major flattened data."""
        arr = np.asarray(data, dtype=np.float64).reshape(tuple(int(s) for s in shape))
        return cls(arr)


def marginalize(joint: Pmf, keep: Iterable[int]) -> Pmf:
    """Marginal pmf over the ``keep`` axes (dropped axes are summed out)."""
    keep_vs = as_varset(keep, joint.num_vars)
    drop = tuple(i for i in range(joint.num_vars) if i not in keep_vs)
    if not drop:
        return joint
    return Pmf(joint.probs.sum(axis=drop))


def _entropy_of_tensor(probs: np.ndarray) -> float:
    p = probs.reshape(-1)
    p = p[p > ZERO_PROB]
    if p.size == 0:
        return 0.0
    return float(-(p * np.log2(p)).sum())


def entropy(joint: Pmf, vars: Iterable[int] | None = None) -> float:
    """Joint entropy H of a subset of variables, in bits."""
    if vars is None:
        return _entropy_of_tensor(joint.probs)
    vs = as_varset(vars, joint.num_vars)
    if len(vs) == joint.num_vars:
        return _entropy_of_tensor(joint.probs)
    drop = tuple(i for i in range(joint.num_vars) if i not in vs)
    return _entropy_of_tensor(joint.probs.sum(axis=drop))


def _check_disjoint(*sets: VarSet):
    seen: set[int] = set()
    for vs in sets:
        if seen.intersection(vs):
            raise ValueError(f"variable sets overlap: {sets}")
        seen.update(vs)


def cond_mutual_info(
    joint: Pmf,
    a: Iterable[int],
    b: Iterable[int],
    c: Iterable[int] = (),
) -> float:
    """I(A;B|C) = H(A,C) + H(B,C) - H(A,B,C) - H(C), clamped at zero.

    The identity is evaluated through four marginal entropies; tiny negative
    values caused by float cancellation are clamped to exactly zero.
    """
    ndim = joint.num_vars
    av, bv, cv = as_varset(a, ndim), as_varset(b, ndim), as_varset(c, ndim)
    _check_disjoint(av, bv, cv)
    val = (
        entropy(joint, av + cv)
        + entropy(joint, bv + cv)
        - entropy(joint, av + bv + cv)
        - (entropy(joint, cv) if cv else 0.0)
    )
    if val < 0.0:
        if val < -1e-9:
            raise ArithmeticError(f"conditional MI evaluated to {val} < -1e-9")
        return 0.0
    return val


def check_markov(
    joint: Pmf,
    a: Iterable[int],
    b: Iterable[int],
    c: Iterable[int],
    tol: float = 1e-9,
) -> bool:
    """True iff the chain A - B - C holds, i.e. I(A;C|B) <= tol."""
    return cond_mutual_info(joint, a, c, b) <= tol


class EntropyCache:
    """Memoizes subset entropies of one joint pmf.

    Region evaluators touch the same marginals many times over; caching by
    frozen axis set keeps the 2^K subset loops cheap.
    """

    def __init__(self, joint: Pmf):
        self.joint = joint
        self._h: dict[frozenset, float] = {}

    def h(self, axes: Iterable[int]) -> float:
        key = frozenset(axes)
        if key not in self._h:
            self._h[key] = entropy(self.joint, sorted(key))
        return self._h[key]

    def cmi(self, a: Iterable[int], b: Iterable[int], c: Iterable[int] = ()) -> float:
        av, bv, cv = frozenset(a), frozenset(b), frozenset(c)
        if av & bv or av & cv or bv & cv:
            raise ValueError("variable sets overlap")
        val = self.h(av | cv) + self.h(bv | cv) - self.h(av | bv | cv)
        if cv:
            val -= self.h(cv)
        if val < 0.0:
            if val < -1e-9:
                raise ArithmeticError(f"conditional MI evaluated to {val} < -1e-9")
            return 0.0
        return val
