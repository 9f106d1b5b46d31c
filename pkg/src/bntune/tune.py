"""Finding a nearby parameter instantiation that satisfies the constraint.

Starting from the original values, candidate boxes of growing size are carved
out around them and partitioned into accepting/rejecting parts; as soon as
accepting volume appears, the accepting point closest to the original values
is returned.  Growth follows a geometric schedule that ends at an upper bound
on the largest possible distance, so a fully rejecting final box proves
infeasibility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Mapping, Sequence

from .bn import DEFAULT_DELTA, Constraint, Instantiation, ParamBN
from .errors import CoverageUnreachable, EmptyInput, NotWellFormed, UnsupportedForCD
from .lifting import MARGIN, VI_TOL
from .pmc import compile_tailored, reach_prob
from .poly import Region, _binary_fraction
from .refine import BOX_GUARD, PartitionResult, partition


class Status(str, Enum):
    """How a tuning run ended."""

    SATISFIED = "satisfied"  # the original values already satisfy the constraint
    TUNED = "tuned"  # a satisfying instantiation was found
    INFEASIBLE = "infeasible"  # no point of the declared box satisfies the constraint
    UNKNOWN = "unknown"  # search exhausted without a proof either way

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


@dataclass(frozen=True)
class Hyper:
    """Search hyper-parameters.

    ``eta`` is the coverage factor each partitioning must reach (the share of
    a candidate box that must be conclusively classified); ``gamma`` the
    geometric growth factor of the candidate box sizes (the schedule runs
    from ``d0 * gamma**(max_iters-1)`` up to ``d0``); ``delta`` keeps
    instantiations away from 0 and 1; ``guard`` caps the number of box
    verifications each partitioning may spend.
    """

    eta: Fraction = Fraction(99, 100)
    gamma: Fraction = Fraction(1, 2)
    max_iters: int = 6
    delta: Fraction = DEFAULT_DELTA
    vi_tol: float = VI_TOL
    margin: float = MARGIN
    workers: int | None = None
    guard: int = BOX_GUARD

    def __post_init__(self):
        if not 0 <= self.eta <= 1:
            raise ValueError(f"eta must be within [0, 1], got {self.eta}")
        if not 0 < self.gamma < 1:
            raise ValueError(f"gamma must be within (0, 1), got {self.gamma}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.guard < 1:
            raise ValueError("guard must allow at least one verification")


@dataclass(frozen=True)
class IterationStats:
    """Effort and outcome of one candidate box."""

    epsilon: float
    region: Region
    verifications: int
    accepting: int
    rejecting: int
    unknown: int
    coverage: Fraction


@dataclass(frozen=True)
class TuneResult:
    status: Status
    instantiation: dict[str, Fraction] | None
    distance: float | None
    measure: str
    probability: float | None
    epsilon_final: float | None
    d0: float
    iterations: tuple[IterationStats, ...]

    @property
    def distance_squared(self) -> float | None:
        return None if self.distance is None else self.distance * self.distance


# -- distances ---------------------------------------------------------------


def distance_ec(pbn: ParamBN, u: Instantiation) -> float:
    """Euclidean distance between ``u`` and the original parameter values."""
    u0 = pbn.origin_instantiation()
    return math.sqrt(sum((float(u[x]) - float(u0[x])) ** 2 for x in pbn.parameter_names))


def _single_tuned_cpt(pbn: ParamBN):
    owners = [cpt for cpt in pbn.cpts if cpt.parameters]
    if len(owners) > 1:
        raise UnsupportedForCD(
            "the log-ratio distance needs all parameters in one table; "
            f"found them in {sorted(c.owner for c in owners)}"
        )
    return owners[0] if owners else None


def distance_cd(pbn: ParamBN, u: Instantiation) -> float:
    """Log-ratio distance: ln(max entry ratio) - ln(min entry ratio).

    Closed form of the joint-distribution ratio distance when all parameters
    sit in one table: each table entry contributes new/old (an unchanged or
    doubly-zero entry contributes 1); a single zero-crossing entry makes the
    distance infinite.
    """
    cpt = _single_tuned_cpt(pbn)
    if cpt is None:
        return 0.0
    u0 = pbn.origin_instantiation()
    hi, lo = Fraction(1), Fraction(1)
    for _, row in cpt.rows:
        for entry in row:
            old = entry.evaluate(u0)
            new = entry.evaluate(u)
            if old == 0 and new == 0:
                continue
            if old == 0 or new == 0:
                return math.inf
            ratio = Fraction(new) / Fraction(old) if not isinstance(new, float) else new / float(old)
            hi = max(hi, ratio)
            lo = min(lo, ratio)
    return float(math.log(hi) - math.log(lo))


def d0_upper(pbn: ParamBN, measure: str = "ec") -> float:
    """An upper bound on the distance of any instantiation in the declared box."""
    if measure == "ec":
        return math.sqrt(len(pbn.params))
    if measure != "cd":
        raise ValueError(f"measure must be 'ec' or 'cd', got {measure!r}")
    cpt = _single_tuned_cpt(pbn)
    if cpt is None:
        return 0.0
    u0 = pbn.origin_instantiation()
    box = pbn.space()
    hi, lo = Fraction(1), Fraction(1)
    for _, row in cpt.rows:
        for entry in row:
            if entry.is_constant:
                continue
            old = entry.evaluate(u0)
            elo, ehi = entry.bounds(box)
            hi = max(hi, ehi / old)
            lo = min(lo, elo / old)
    return float(math.log(hi) - math.log(lo))


# -- candidate boxes -----------------------------------------------------------


def _boxed_axis(
    u0: Fraction,
    lo: Fraction,
    hi: Fraction,
    declared: tuple[Fraction, Fraction],
    delta: Fraction,
) -> tuple[Fraction, Fraction]:
    """Clamp a candidate interval to the declared one and away from 0/1,
    never excluding the original value itself."""
    dlb, dub = declared
    lb = min(max(lo, delta, dlb), u0)
    ub = max(min(hi, 1 - delta, dub), u0)
    return lb, ub


def expand_region_ec(
    pbn: ParamBN, u0: Mapping[str, Fraction], epsilon: float, delta: Fraction = DEFAULT_DELTA
) -> Region:
    """The largest axis-aligned box around ``u0`` with Euclidean radius ``epsilon``."""
    halfwidth = _binary_fraction(epsilon / math.sqrt(max(len(pbn.params), 1)))
    intervals = []
    for name, declared in pbn.params:
        center = Fraction(u0[name])
        intervals.append(
            _boxed_axis(center, center - halfwidth, center + halfwidth, declared, delta)
        )
    return Region(pbn.parameter_names, tuple(intervals))


def expand_region_cd(
    pbn: ParamBN, u0: Mapping[str, Fraction], epsilon: float, delta: Fraction = DEFAULT_DELTA
) -> Region:
    """The box around ``u0`` within log-ratio distance ``epsilon``.

    With ``a = exp(epsilon/2)``, keeping both ``x/x0`` and ``(1-x)/(1-x0)``
    inside ``[1/a, a]`` keeps every entry ratio of the tuned table inside
    ``[1/a, a]`` (co-varied entries scale with ``(1-x)/(1-x0)``), so the
    distance over the whole box stays at most ``epsilon``.
    """
    _single_tuned_cpt(pbn)  # reject multi-table parameter sets up front
    alpha = math.exp(float(epsilon) / 2.0)
    intervals = []
    for name, declared in pbn.params:
        center = Fraction(u0[name])
        c = float(center)
        lo = _binary_fraction(max(c / alpha, 1.0 - (1.0 - c) * alpha))
        hi = _binary_fraction(min(c * alpha, 1.0 - (1.0 - c) / alpha))
        intervals.append(_boxed_axis(center, lo, hi, declared, delta))
    return Region(pbn.parameter_names, tuple(intervals))


def _expander(measure: str):
    if measure == "ec":
        return expand_region_ec
    if measure == "cd":
        return expand_region_cd
    raise ValueError(f"measure must be 'ec' or 'cd', got {measure!r}")


def minimal_instantiation(
    pbn: ParamBN,
    u0: Mapping[str, Fraction],
    boxes: Sequence[Region],
    measure: str = "ec",
) -> tuple[dict[str, Fraction], float]:
    """The point of the given boxes closest to ``u0``.

    Both supported distances decrease axis-wise towards the original value,
    so per box the closest point clamps ``u0`` into the box; ties between
    boxes keep the earliest box.
    """
    if measure not in ("ec", "cd"):
        raise ValueError(f"measure must be 'ec' or 'cd', got {measure!r}")
    if not boxes:
        raise EmptyInput("no boxes to pick an instantiation from")
    distance_fn = distance_ec if measure == "ec" else distance_cd
    best_point: dict[str, Fraction] | None = None
    best = math.inf
    for box in boxes:
        point = {}
        for name, (lb, ub) in zip(box.params, box.intervals):
            center = Fraction(u0[name])
            point[name] = min(max(center, lb), ub)
        d = distance_fn(pbn, point)
        if d < best:
            best_point, best = point, d
    assert best_point is not None
    return best_point, best


# -- the search loop -----------------------------------------------------------


def tune(
    pbn: ParamBN,
    constraint: Constraint,
    measure: str = "ec",
    hyper: Hyper = Hyper(),
    order: Sequence[str] | None = None,
) -> TuneResult:
    """Search for a satisfying instantiation of minimal distance.

    Returns immediately when the original values satisfy the constraint.
    Otherwise candidate boxes grow along the geometric schedule; each box is
    partitioned until an accepting part turns up or the box is proven fully
    rejecting, so even accepting slivers far below the coverage allowance are
    found.  The first box with accepting volume yields the result.  When even
    the full declared box is conclusively rejecting everywhere the constraint
    is infeasible; anything short of that proof ends as unknown.  A
    partitioning that hits its box guard contributes whatever it classified
    so far.
    """
    expander = _expander(measure)
    d0 = d0_upper(pbn, measure)
    u0 = pbn.origin_instantiation()
    chain, spec = compile_tailored(pbn, constraint, order=order, u0=u0)
    p0 = reach_prob(chain, u0, spec.targets)
    if spec.satisfied_by(p0):
        return TuneResult(Status.SATISFIED, dict(u0), 0.0, measure, p0, None, d0, ())

    gamma = float(hyper.gamma)
    schedule = [d0 * gamma ** (hyper.max_iters - i) for i in range(1, hyper.max_iters + 1)]
    stats: list[IterationStats] = []
    last_region: Region | None = None
    last_result: PartitionResult | None = None
    for epsilon in schedule:
        region = expander(pbn, u0, epsilon, hyper.delta)
        try:
            result = partition(
                chain,
                spec,
                region,
                hyper.eta,
                vi_tol=hyper.vi_tol,
                margin=hyper.margin,
                workers=hyper.workers,
                guard=hyper.guard,
                until_accepting=True,
            )
        except CoverageUnreachable as exc:
            result = exc.partial
        stats.append(
            IterationStats(
                epsilon, region, result.verifications, *result.counts, result.coverage
            )
        )
        last_region, last_result = region, result
        if result.accepting:
            point, dist = minimal_instantiation(pbn, u0, result.accepting, measure)
            prob = reach_prob(chain, point, spec.targets)
            if not spec.satisfied_by(prob):  # pragma: no cover - soundness guard
                raise NotWellFormed(
                    f"accepting box yielded probability {prob} violating the constraint"
                )
            return TuneResult(
                Status.TUNED, point, dist, measure, prob, epsilon, d0, tuple(stats)
            )

    proved_infeasible = (
        last_region is not None
        and last_region == pbn.space()
        and last_result is not None
        and last_result.coverage == 1
        and not last_result.accepting
    )
    status = Status.INFEASIBLE if proved_infeasible else Status.UNKNOWN
    epsilon_final = schedule[-1] if schedule else None
    return TuneResult(status, None, None, measure, None, epsilon_final, d0, tuple(stats))
