"""Sum-rate equality machinery: fronthaul polytope, extreme points, schedules.

For a fixed policy and target sum-rate R the fronthaul vectors able to carry
R form a contra-polymatroid P_R described by the clamped set function
g+(S) = max(g(S), 0) with

    g(S) = R + I(U_S;Y_S|U_{S^c},Q) - I(U_K;X_L|Q).

Ordered prefix differences of g+ generate the extreme points of P_R, and
each extreme point is dominated by an explicit CF-SSD schedule that mixes a
relay-activation pattern through a Bernoulli component of the time-sharing
variable.  ``verify_domination`` runs that construction over every ordering;
it is the executable content of the sum-rate equality of the three
compress-and-forward variants.
"""
from __future__ import annotations

import dataclasses
import itertools
from dataclasses import dataclass

import numpy as np

from .dm_schemes import DmCranModel, DmPolicy, assemble_joint, sumrate_cf_jd
from .errors import DomainError
from .finite_info import EntropyCache, Pmf
from .regions import all_subsets


def g_of_s(
    model: DmCranModel,
    policy: DmPolicy,
    rsum: float,
    s,
    joint: Pmf | None = None,
    cache: EntropyCache | None = None,
) -> float:
    """g(S) = rsum + I(U_S;Y_S|U_{S^c},Q) - I(U_K;X_L|Q)."""
    if cache is None:
        cache = EntropyCache(joint if joint is not None else assemble_joint(model, policy))
    s = frozenset(s)
    sc = tuple(k for k in range(model.K) if k not in s)
    q = (model.q_axis,)
    val = rsum - cache.cmi(model.u_axes(), model.x_axes(), q)
    if s:
        val += cache.cmi(model.u_axes(s), model.y_axes(s), model.u_axes(sc) + q)
    return val


def g_of_s_alt(
    model: DmCranModel,
    policy: DmPolicy,
    rsum: float,
    s,
    joint: Pmf | None = None,
    cache: EntropyCache | None = None,
) -> float:
    """Equivalent form rsum + I(U_S;Y_S|X,U_{S^c},Q) - I(U_{S^c};X|Q).

    Agrees with ``g_of_s`` through the per-relay test-channel Markov chains;
    kept as an independent cross-check path.
    """
    if cache is None:
        cache = EntropyCache(joint if joint is not None else assemble_joint(model, policy))
    s = frozenset(s)
    sc = tuple(k for k in range(model.K) if k not in s)
    q = (model.q_axis,)
    val = rsum
    if s:
        val += cache.cmi(model.u_axes(s), model.y_axes(s), model.x_axes() + model.u_axes(sc) + q)
    if sc:
        val -= cache.cmi(model.u_axes(sc), model.x_axes(), q)
    return val


@dataclass(frozen=True)
class SetFunctionBound:
    """g(S) table for one policy at one target sum-rate."""

    num_relays: int
    rsum: float
    g_values: dict

    def g(self, s) -> float:
        return self.g_values[frozenset(s)]

    def gplus(self, s) -> float:
        return max(self.g_values[frozenset(s)], 0.0)


def set_function_bound(
    model: DmCranModel, policy: DmPolicy, rsum: float, joint: Pmf | None = None
) -> SetFunctionBound:
    cache = EntropyCache(joint if joint is not None else assemble_joint(model, policy))
    values = {
        s: g_of_s(model, policy, rsum, s, cache=cache) for s in all_subsets(model.K)
    }
    return SetFunctionBound(num_relays=model.K, rsum=rsum, g_values=values)


def check_supermodular(bound: SetFunctionBound, tol: float = 1e-9) -> bool:
    """g+(A|B)+g+(A&B) >= g+(A)+g+(B) - tol over all subset pairs (K <= 5)."""
    if bound.num_relays > 5:
        raise DomainError("exhaustive pair check supported for K <= 5")
    subsets = all_subsets(bound.num_relays)
    for a in subsets:
        for b in subsets:
            lhs = bound.gplus(a | b) + bound.gplus(a & b)
            rhs = bound.gplus(a) + bound.gplus(b)
            if lhs < rhs - tol:
                return False
    return True


@dataclass(frozen=True)
class ExtremePoint:
    """One vertex of P_R: ordered prefix differences of g+.

    ``allocation[k]`` is the fronthaul share of relay k.  ``j_pos`` is the
    first ordering position whose share is strictly positive (None when the
    allocation is identically zero), and ``alpha`` the Bernoulli mixing
    weight of the dominating schedule (1 by convention when j_pos is None).
    """

    ordering: tuple
    allocation: tuple
    j_pos: int | None
    alpha: float


def extreme_point(
    bound: SetFunctionBound, ordering, tol: float = 1e-9
) -> ExtremePoint:
    k_count = bound.num_relays
    ordering = tuple(int(i) for i in ordering)
    if sorted(ordering) != list(range(k_count)):
        raise ValueError(f"ordering must permute 0..{k_count - 1}, got {ordering}")

    alloc = np.zeros(k_count)
    prefix_g = [bound.g(frozenset())]
    prev_plus = max(prefix_g[0], 0.0)
    for pos in range(k_count):
        pre = frozenset(ordering[: pos + 1])
        g_here = bound.g(pre)
        alloc[ordering[pos]] = max(g_here, 0.0) - prev_plus
        prev_plus = max(g_here, 0.0)
        prefix_g.append(g_here)

    # First position with strictly positive prefix value; ties count as
    # not-yet-positive.
    j_pos = None
    for pos in range(k_count):
        if prefix_g[pos + 1] > 0.0:
            j_pos = pos
            break

    if j_pos is None:
        alpha = 1.0
    else:
        # Prefix increments of g equal the reverse-order Wyner-Ziv rates
        # I(Y_j;U_j|U_later,Q), so the mixing weight comes straight from the
        # g table.
        denom = prefix_g[j_pos + 1] - prefix_g[j_pos]
        if denom <= 1e-12:
            raise ArithmeticError(
                f"degenerate Wyner-Ziv rate at ordering position {j_pos}: "
                f"I(Y;U|later U,Q) = {denom:.3e} with negative prefix slack"
            )
        alpha = -prefix_g[j_pos] / denom
        alpha = min(max(alpha, 0.0), 1.0)

    ep = ExtremePoint(
        ordering=ordering, allocation=tuple(float(v) for v in alloc), j_pos=j_pos, alpha=alpha
    )
    _validate_in_polytope(bound, ep, tol)
    return ep


def _validate_in_polytope(bound: SetFunctionBound, ep: ExtremePoint, tol: float):
    alloc = np.asarray(ep.allocation)
    if alloc.min() < -tol:
        raise ArithmeticError(f"extreme point has negative share {alloc.min()}")
    for s in all_subsets(bound.num_relays):
        if sum(alloc[k] for k in s) < bound.gplus(s) - tol:
            raise ArithmeticError(f"extreme point violates the P_R constraint for {set(s)}")


@dataclass(frozen=True)
class ScheduleResult:
    """A CF-SSD schedule realized as a composite time-sharing policy."""

    model: DmCranModel
    policy: DmPolicy
    ordering: tuple
    alpha: float
    wz_rates: tuple  # per-relay compression rate under the reverse order
    achieved_sumrate: float


def construct_cf_ssd_schedule(
    model: DmCranModel, policy: DmPolicy, ep: ExtremePoint
) -> ScheduleResult:
    """Build the Bernoulli(alpha)-mixed CF-SSD schedule dominating ``ep``.

    The composite time-sharing letter is Q' = (B, Q) with B = 1 having
    probability alpha.  Relays earlier than position j in the ordering stay
    silent in both branches, relay at position j is silent only when B = 1,
    later relays always run their original test channel.  Descriptions are
    decoded in reverse ordering; the schedule's per-relay Wyner-Ziv rates
    reproduce the extreme-point allocation and its sum-rate dominates.
    """
    k_count, q_count = model.K, model.q_alphabet
    j = ep.j_pos if ep.j_pos is not None else k_count
    position_of = {relay: pos for pos, relay in enumerate(ep.ordering)}

    # Composite letter (b, q) -> index b * q_count + q.
    pq2 = np.concatenate([(1.0 - ep.alpha) * policy.pq, ep.alpha * policy.pq])
    px2 = tuple(np.tile(a, (2, 1)) for a in policy.px_given_q)

    pu2 = []
    for k in range(k_count):
        ny, nu = model.y_alphabets[k], model.u_alphabets[k]
        silent = np.zeros((q_count, ny, nu))
        silent[:, :, 0] = 1.0
        pos = position_of[k]
        if pos < j:
            branch0, branch1 = silent, silent
        elif pos == j:
            branch0, branch1 = policy.pu_given_yq[k], silent
        else:
            branch0, branch1 = policy.pu_given_yq[k], policy.pu_given_yq[k]
        pu2.append(np.concatenate([branch0, branch1], axis=0))

    model2 = dataclasses.replace(model, q_alphabet=2 * q_count)
    policy2 = DmPolicy(pq=pq2, px_given_q=px2, pu_given_yq=tuple(pu2))
    cache = EntropyCache(assemble_joint(model2, policy2))
    q_ax = (model2.q_axis,)

    wz = np.zeros(k_count)
    for pos, relay in enumerate(ep.ordering):
        later = tuple(ep.ordering[pos + 1 :])
        wz[relay] = cache.cmi(
            (model2.u_axis(relay),), (model2.y_axis(relay),), model2.u_axes(later) + q_ax
        )
    achieved = cache.cmi(model2.x_axes(), model2.u_axes(), q_ax)
    return ScheduleResult(
        model=model2,
        policy=policy2,
        ordering=ep.ordering,
        alpha=ep.alpha,
        wz_rates=tuple(float(v) for v in wz),
        achieved_sumrate=float(achieved),
    )


@dataclass(frozen=True)
class DominationReport:
    rsum: float
    fronthaul: tuple
    entries: tuple
    passed: bool
    worst_rate_deficit: float
    worst_cost_excess: float

    def to_jsonable(self) -> dict:
        return {
            "sum_rate_bits": self.rsum,
            "fronthaul_bits": list(self.fronthaul),
            "passed": self.passed,
            "worst_rate_deficit_bits": self.worst_rate_deficit,
            "worst_cost_excess_bits": self.worst_cost_excess,
            "orderings": [dict(e) for e in self.entries],
        }


def verify_domination(
    model: DmCranModel,
    policy: DmPolicy,
    fronthaul=None,
    tol: float = 1e-9,
) -> DominationReport:
    """Check that every extreme point of P_R is dominated by a schedule.

    For the CF-JD sum-rate at the given fronthaul vector, enumerates all K!
    ordering extreme points, constructs each dominating schedule, and checks
    that the schedule's Wyner-Ziv rates match the allocation and that its
    sum-rate does not fall short.  Failures are report content, not errors.
    """
    if model.K > 4:
        raise DomainError("ordering enumeration supported for K <= 4")
    if fronthaul is not None:
        model = dataclasses.replace(model, fronthaul=tuple(float(c) for c in fronthaul))
    joint = assemble_joint(model, policy)
    rsum = sumrate_cf_jd(model, policy, joint)
    bound = set_function_bound(model, policy, rsum, joint)

    entries = []
    passed = True
    worst_deficit = 0.0
    worst_excess = 0.0
    for ordering in itertools.permutations(range(model.K)):
        ep = extreme_point(bound, ordering, tol=tol)
        sched = construct_cf_ssd_schedule(model, policy, ep)
        cost_excess = max(
            sched.wz_rates[k] - ep.allocation[k] for k in range(model.K)
        )
        rate_deficit = rsum - sched.achieved_sumrate
        ok = cost_excess <= tol and rate_deficit <= tol
        passed = passed and ok
        worst_deficit = max(worst_deficit, rate_deficit)
        worst_excess = max(worst_excess, cost_excess)
        entries.append(
            {
                "ordering": list(ordering),
                "allocation_bits": list(ep.allocation),
                "alpha": ep.alpha,
                "j_pos": ep.j_pos,
                "schedule_wz_bits": list(sched.wz_rates),
                "achieved_sumrate_bits": sched.achieved_sumrate,
                "dominated": ok,
            }
        )
    return DominationReport(
        rsum=rsum,
        fronthaul=model.fronthaul,
        entries=tuple(entries),
        passed=passed,
        worst_rate_deficit=worst_deficit,
        worst_cost_excess=worst_excess,
    )
