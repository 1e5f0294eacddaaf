"""Rate-region representation shared by the DM and Gaussian evaluators.

A region is stored as the bound table over nonempty user subsets T with the
minimum over relay subsets S already taken: the region is the polyhedron
{R >= 0 : sum_{t in T} R_t <= bound(T) for every nonempty T}.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import chain, combinations
from typing import Iterable


def nonempty_subsets(n: int) -> list[frozenset]:
    """All nonempty subsets of {0..n-1}, smallest first."""
    items = range(n)
    return [
        frozenset(c)
        for c in chain.from_iterable(combinations(items, r) for r in range(1, n + 1))
    ]


def all_subsets(n: int) -> list[frozenset]:
    items = range(n)
    return [
        frozenset(c)
        for c in chain.from_iterable(combinations(items, r) for r in range(n + 1))
    ]


@dataclass(frozen=True)
class RateRegion:
    """Bound table over nonempty user subsets, rates in bits.

    ``clamped`` records those T whose raw bound was negative and got clamped
    to zero.
    """

    num_users: int
    bounds: dict
    clamped: frozenset = frozenset()

    def bound(self, t: Iterable[int]) -> float:
        key = frozenset(t)
        if not key:
            raise KeyError("T must be a nonempty user subset")
        return self.bounds[key]

    def sum_rate(self) -> float:
        return self.bounds[frozenset(range(self.num_users))]

    def to_jsonable(self) -> dict:
        rows = []
        for t in nonempty_subsets(self.num_users):
            rows.append(
                {
                    "users": sorted(t),
                    "bound_bits": self.bounds[t],
                    "clamped": t in self.clamped,
                }
            )
        return {"num_users": self.num_users, "bounds": rows}


def region_from_raw(num_users: int, raw: dict) -> RateRegion:
    """Clamp raw (possibly negative) bounds at zero and record which were."""
    bounds = {}
    clamped = set()
    for t, v in raw.items():
        key = frozenset(t)
        if v < 0.0:
            bounds[key] = 0.0
            clamped.add(key)
        else:
            bounds[key] = float(v)
    return RateRegion(num_users=num_users, bounds=bounds, clamped=frozenset(clamped))


@dataclass(frozen=True)
class Infeasible:
    """Feasibility failure of a constrained scheme, carrying a violated set."""

    violated: frozenset
    deficit_bits: float = 0.0

    def __bool__(self):
        return False
