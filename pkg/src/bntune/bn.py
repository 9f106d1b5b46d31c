"""Discrete Bayesian networks with (optionally parametric) probability tables.

A plain :class:`BayesNet` has constant table entries.  Selected entries can be
turned into named parameters with :func:`parametrize`; the remaining entries of
each touched row are rescaled proportionally so every row stays a probability
distribution for all parameter values in (0, 1).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .errors import (
    BadOrder,
    NotWellFormed,
    UnboundParameter,
    UnsupportedDegree,
    UnsupportedMultiEntryRow,
    ZeroEntry,
)
from .poly import Polynomial, Region, as_fraction

#: Identifies one table entry: (variable, parent values in parent order, value index).
EntryCoord = tuple[str, tuple[str, ...], int]

#: A parameter instantiation: one real value per parameter name.
Instantiation = Mapping[str, float | Fraction | int]

DEFAULT_DELTA = Fraction(1, 10**6)

#: Constant table rows may miss an exact unit sum by this much (parsed files
#: round); rows that contain parameters must sum to one exactly.
ROW_SUM_TOLERANCE = Fraction(1, 10**9)


@dataclass(frozen=True)
class Variable:
    """A discrete variable: name, ordered value labels, ordered parent names."""

    name: str
    values: tuple[str, ...]
    parents: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.values) < 2:
            raise NotWellFormed(f"variable {self.name} needs at least two values")
        if len(set(self.values)) != len(self.values):
            raise NotWellFormed(f"variable {self.name} has duplicate value labels")
        if len(set(self.parents)) != len(self.parents):
            raise NotWellFormed(f"variable {self.name} lists a parent twice")

    def value_index(self, label: str) -> int:
        try:
            return self.values.index(label)
        except ValueError:
            raise NotWellFormed(f"variable {self.name} has no value {label!r}") from None


@dataclass(frozen=True)
class CPT:
    """A conditional probability table: one row per parent evaluation.

    Each row holds one polynomial entry per value of the owning variable
    (constant polynomials in a plain network).
    """

    owner: str
    rows: tuple[tuple[tuple[str, ...], tuple[Polynomial, ...]], ...]

    @cached_property
    def _row_map(self) -> dict[tuple[str, ...], tuple[Polynomial, ...]]:
        return dict(self.rows)

    def row(self, parent_values: Sequence[str]) -> tuple[Polynomial, ...]:
        key = tuple(parent_values)
        try:
            return self._row_map[key]
        except KeyError:
            raise NotWellFormed(f"table of {self.owner} has no row for parents {key}") from None

    def entries(self) -> Iterable[tuple[tuple[str, ...], int, Polynomial]]:
        for key, row in self.rows:
            for index, entry in enumerate(row):
                yield key, index, entry

    @cached_property
    def parameters(self) -> frozenset[str]:
        return frozenset(p for _, _, e in self.entries() for p in e.parameters)


def _check_tables(variables: tuple[Variable, ...], cpts: tuple[CPT, ...]) -> None:
    by_name = {v.name: v for v in variables}
    if len(by_name) != len(variables):
        raise NotWellFormed("duplicate variable name")
    for v in variables:
        for parent in v.parents:
            if parent not in by_name:
                raise NotWellFormed(f"variable {v.name} references unknown parent {parent}")
    _toposort(variables)  # raises on cycles
    if tuple(c.owner for c in cpts) != tuple(v.name for v in variables):
        raise NotWellFormed("tables must be aligned with the variable list, one per variable")
    for v, table in zip(variables, cpts):
        expected = set(itertools.product(*(by_name[p].values for p in v.parents)))
        seen = [key for key, _ in table.rows]
        if len(seen) != len(set(seen)):
            raise NotWellFormed(f"table of {v.name} repeats a row")
        if set(seen) != expected:
            raise NotWellFormed(f"table of {v.name} does not cover each parent evaluation exactly once")
        for key, row in table.rows:
            if len(row) != len(v.values):
                raise NotWellFormed(f"row {key} of {v.name} has {len(row)} entries, expected {len(v.values)}")
            total = Polynomial.constant(0)
            parametric = False
            for entry in row:
                if not entry.is_multiaffine:
                    raise UnsupportedDegree(f"entry in table of {v.name} is not multi-affine")
                if entry.parameters:
                    parametric = True
                elif not (0 <= entry.constant_value() <= 1):
                    raise NotWellFormed(f"entry {entry} in table of {v.name} is outside [0, 1]")
                total = total + entry
            if parametric:
                if not (total.is_constant and total.constant_value() == 1):
                    raise NotWellFormed(f"parametric row {key} of {v.name} does not sum to 1 symbolically")
            else:
                if abs(total.constant_value() - 1) > ROW_SUM_TOLERANCE:
                    raise NotWellFormed(f"row {key} of {v.name} sums to {float(total.constant_value())}, not 1")


def _toposort(variables: tuple[Variable, ...]) -> tuple[str, ...]:
    """Topological order that follows declaration order among ready variables."""
    remaining = {v.name: set(v.parents) for v in variables}
    order: list[str] = []
    names = [v.name for v in variables]
    while remaining:
        ready = [n for n in names if n in remaining and not remaining[n]]
        if not ready:
            raise NotWellFormed("the parent graph has a cycle")
        chosen = ready[0]
        order.append(chosen)
        del remaining[chosen]
        for deps in remaining.values():
            deps.discard(chosen)
    return tuple(order)


@dataclass(frozen=True)
class BayesNet:
    """A Bayesian network over discrete variables with constant table entries."""

    variables: tuple[Variable, ...]
    cpts: tuple[CPT, ...]

    def __post_init__(self):
        _check_tables(self.variables, self.cpts)
        for table in self.cpts:
            if table.parameters:
                raise NotWellFormed(f"table of {table.owner} contains parameters; expected constants")

    @cached_property
    def variable_map(self) -> dict[str, Variable]:
        return {v.name: v for v in self.variables}

    @cached_property
    def cpt_map(self) -> dict[str, CPT]:
        return {c.owner: c for c in self.cpts}

    def topological_order(self) -> tuple[str, ...]:
        return _toposort(self.variables)


@dataclass(frozen=True)
class ParamBN:
    """A Bayesian network whose table entries are multi-affine polynomials.

    ``params`` fixes the parameter order and the closed interval each
    parameter may range over; ``modif`` records which entry coordinates were
    explicitly turned into parameters; ``origin`` (when known) maps each
    parameter to the constant value it replaced.
    """

    variables: tuple[Variable, ...]
    cpts: tuple[CPT, ...]
    params: tuple[tuple[str, tuple[Fraction, Fraction]], ...]
    modif: frozenset[EntryCoord] = frozenset()
    origin: tuple[tuple[str, Fraction], ...] | None = None

    def __post_init__(self):
        _check_tables(self.variables, self.cpts)
        names = [name for name, _ in self.params]
        if len(set(names)) != len(names):
            raise NotWellFormed("duplicate parameter name")
        for name, (lb, ub) in self.params:
            if not (0 < lb <= ub < 1):
                raise NotWellFormed(f"interval [{lb}, {ub}] of parameter {name} is not within (0, 1)")
        used = frozenset(p for c in self.cpts for p in c.parameters)
        undeclared = used - set(names)
        if undeclared:
            raise UnboundParameter(f"entries use undeclared parameter(s) {sorted(undeclared)}")

    @cached_property
    def variable_map(self) -> dict[str, Variable]:
        return {v.name: v for v in self.variables}

    @cached_property
    def cpt_map(self) -> dict[str, CPT]:
        return {c.owner: c for c in self.cpts}

    @property
    def parameter_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.params)

    def interval(self, name: str) -> tuple[Fraction, Fraction]:
        for pname, iv in self.params:
            if pname == name:
                return iv
        raise UnboundParameter(f"unknown parameter {name}")

    def space(self) -> Region:
        """The full declared parameter box."""
        return Region(self.parameter_names, tuple(iv for _, iv in self.params))

    def origin_instantiation(self) -> dict[str, Fraction]:
        if self.origin is None:
            raise NotWellFormed("this network does not record original parameter values")
        return dict(self.origin)

    def topological_order(self) -> tuple[str, ...]:
        return _toposort(self.variables)


@dataclass(frozen=True)
class Constraint:
    """``Pr(hypothesis | evidence) <= threshold`` (or ``>=``).

    Hypothesis and evidence are conjunctions of (variable, value) literals over
    disjoint variable sets; evidence may be empty.
    """

    hypothesis: tuple[tuple[str, str], ...]
    evidence: tuple[tuple[str, str], ...]
    direction: str
    threshold: Fraction

    def __post_init__(self):
        if self.direction not in ("<=", ">="):
            raise NotWellFormed(f"direction must be '<=' or '>=', got {self.direction!r}")
        if not self.hypothesis:
            raise NotWellFormed("the hypothesis needs at least one literal")
        hyp_vars = [v for v, _ in self.hypothesis]
        ev_vars = [v for v, _ in self.evidence]
        if len(set(hyp_vars)) != len(hyp_vars) or len(set(ev_vars)) != len(ev_vars):
            raise NotWellFormed("a variable may appear at most once per literal list")
        if set(hyp_vars) & set(ev_vars):
            raise NotWellFormed("hypothesis and evidence must mention disjoint variables")
        if not (0 <= self.threshold <= 1):
            raise NotWellFormed(f"threshold {self.threshold} is outside [0, 1]")

    def check_against(self, net: BayesNet | ParamBN) -> None:
        from .errors import UnknownValue

        for var, value in self.hypothesis + self.evidence:
            if var not in net.variable_map:
                raise UnknownValue(f"unknown variable {var!r}")
            if value not in net.variable_map[var].values:
                raise UnknownValue(f"variable {var} has no value {value!r}")

    def satisfied_by(self, probability: float | Fraction) -> bool:
        if self.direction == "<=":
            return probability <= self.threshold
        return probability >= self.threshold


@dataclass(frozen=True)
class RowDiagnostic:
    """One validity finding for a table row over a region."""

    owner: str
    parent_values: tuple[str, ...]
    kind: str  # "entry-range" or "row-sum"
    message: str


def net_from_tables(
    variables: Sequence[tuple[str, Sequence[str], Sequence[str]]],
    tables: Mapping[str, Mapping[tuple[str, ...], Sequence]],
) -> BayesNet:
    """Convenience constructor from plain literals.

    ``variables`` lists (name, values, parents); ``tables[name]`` maps parent
    value tuples to entry sequences.  Numeric entries are converted exactly via
    their decimal form, so rows written as decimals sum to one symbolically.
    """
    var_objs = tuple(Variable(n, tuple(vals), tuple(parents)) for n, vals, parents in variables)
    declared = {v.name for v in var_objs}
    stray = sorted(set(tables) - declared)
    if stray:
        raise NotWellFormed(f"tables given for undeclared variable(s) {stray}")
    missing = sorted(declared - set(tables))
    if missing:
        raise NotWellFormed(f"no table given for variable(s) {missing}")
    cpts = []
    for v in var_objs:
        rows = []
        for key, entries in tables[v.name].items():
            rows.append(
                (
                    tuple(key),
                    tuple(
                        e if isinstance(e, Polynomial) else Polynomial.constant(as_fraction(e))
                        for e in entries
                    ),
                )
            )
        cpts.append(CPT(v.name, tuple(rows)))
    return BayesNet(var_objs, tuple(cpts))


def parametrize(
    bn: BayesNet,
    modif: Iterable[EntryCoord],
    names: Mapping[EntryCoord, str] | None = None,
    intervals: Mapping[str, tuple] | None = None,
    delta: Fraction | float = DEFAULT_DELTA,
) -> ParamBN:
    """Turn the given table entries into parameters with proportional co-variation.

    Each selected entry with original value t becomes a fresh parameter x; the
    other entries r of the same row are scaled to r * (1 - x) / (1 - t), which
    keeps the row a distribution, preserves zeros, and reproduces the original
    table at x = t.  Two selected entries may share a name (via ``names``) only
    when their original values are equal, which models one quantity reused in
    several rows.

    Raises :class:`ZeroEntry` for entries at 0 or 1, and
    :class:`UnsupportedMultiEntryRow` when two selected entries share a row.
    """
    modif = list(modif)
    if names is None:
        names = {}
    coord_names: dict[EntryCoord, str] = {}
    auto = 0
    taken = set(names.values())
    for coord in modif:
        if coord in names:
            coord_names[coord] = names[coord]
        else:
            auto += 1
            candidate = f"x{auto}"
            while candidate in taken:
                auto += 1
                candidate = f"x{auto}"
            taken.add(candidate)
            coord_names[coord] = candidate

    rows_touched: dict[tuple[str, tuple[str, ...]], EntryCoord] = {}
    for coord in modif:
        var, key, index = coord
        if var not in bn.variable_map:
            raise NotWellFormed(f"unknown variable {var!r} in entry selection")
        row = bn.cpt_map[var].row(key)
        if not (0 <= index < len(row)):
            raise NotWellFormed(f"entry index {index} out of range for {var}{key}")
        row_id = (var, key)
        if row_id in rows_touched:
            raise UnsupportedMultiEntryRow(
                f"entries {rows_touched[row_id]} and {coord} share the row {var}{key}"
            )
        rows_touched[row_id] = coord

    delta = as_fraction(delta)
    origin: dict[str, Fraction] = {}
    param_order: list[str] = []
    new_cpts: list[CPT] = []
    for v, table in zip(bn.variables, bn.cpts):
        new_rows = []
        for key, row in table.rows:
            coord = rows_touched.get((v.name, key))
            if coord is None:
                new_rows.append((key, row))
                continue
            index = coord[2]
            pivot = row[index].constant_value()
            if pivot == 0 or pivot == 1:
                raise ZeroEntry(f"entry {v.name}{key}[{index}] has value {pivot}; cannot co-vary")
            name = coord_names[coord]
            if name in origin:
                if origin[name] != pivot:
                    raise NotWellFormed(
                        f"parameter {name} is shared by entries with different original values "
                        f"({float(origin[name])} vs {float(pivot)})"
                    )
            else:
                origin[name] = pivot
                param_order.append(name)
            x = Polynomial.parameter(name)
            scale = [e.constant_value() / (1 - pivot) for e in row]
            new_row = tuple(
                x if i == index else (Polynomial.constant(1) - x) * scale[i]
                for i in range(len(row))
            )
            new_rows.append((key, new_row))
        new_cpts.append(CPT(v.name, tuple(new_rows)))

    param_intervals: list[tuple[str, tuple[Fraction, Fraction]]] = []
    for name in param_order:
        if intervals and name in intervals:
            lb, ub = intervals[name]
            param_intervals.append((name, (as_fraction(lb), as_fraction(ub))))
        else:
            param_intervals.append((name, (delta, 1 - delta)))

    return ParamBN(
        variables=bn.variables,
        cpts=tuple(new_cpts),
        params=tuple(param_intervals),
        modif=frozenset(modif),
        origin=tuple((n, origin[n]) for n in param_order),
    )


def instantiate(pbn: ParamBN, u: Instantiation) -> BayesNet:
    """Evaluate every table entry at ``u``, producing a plain network.

    ``u`` must cover exactly the declared parameters; entries must evaluate
    into [0, 1] (otherwise :class:`NotWellFormed`).
    """
    declared = set(pbn.parameter_names)
    missing = declared - set(u)
    extra = set(u) - declared
    if missing:
        raise UnboundParameter(f"instantiation is missing parameter(s) {sorted(missing)}")
    if extra:
        raise UnboundParameter(f"instantiation has unknown parameter(s) {sorted(extra)}")
    exact_u = {name: Fraction(value) if isinstance(value, float) else as_fraction(value) for name, value in u.items()}

    new_cpts = []
    for table in pbn.cpts:
        new_rows = []
        for key, row in table.rows:
            values = []
            for entry in row:
                value = entry.evaluate(exact_u)
                if not (0 <= value <= 1):
                    raise NotWellFormed(
                        f"entry {entry} of {table.owner}{key} evaluates to {float(value)} outside [0, 1]"
                    )
                values.append(Polynomial.constant(value))
            new_rows.append((key, tuple(values)))
        new_cpts.append(CPT(table.owner, tuple(new_rows)))
    return BayesNet(pbn.variables, tuple(new_cpts))


def validate(pbn: ParamBN, region: Region) -> list[RowDiagnostic]:
    """Check that every row stays a distribution over ``region``.

    Returns one diagnostic per violation; an empty list means the
    parametrization is valid on the region.
    """
    diagnostics: list[RowDiagnostic] = []
    for table in pbn.cpts:
        for key, row in table.rows:
            total = Polynomial.constant(0)
            for index, entry in enumerate(row):
                lo, hi = entry.bounds(region)
                if lo < 0 or hi > 1:
                    diagnostics.append(
                        RowDiagnostic(
                            table.owner,
                            key,
                            "entry-range",
                            f"entry {index} spans [{float(lo)}, {float(hi)}] over the region",
                        )
                    )
                total = total + entry
            if not (total.is_constant and total.constant_value() == 1):
                if total.is_constant and abs(total.constant_value() - 1) <= ROW_SUM_TOLERANCE:
                    continue
                diagnostics.append(
                    RowDiagnostic(table.owner, key, "row-sum", f"row sums to {total}, not 1")
                )
    return diagnostics


def topological_order(
    net: BayesNet | ParamBN, preferred: Sequence[str] | None = None
) -> tuple[str, ...]:
    """The declaration-order topological sort, or validate a user-supplied order."""
    if preferred is None:
        return _toposort(net.variables)
    order = tuple(preferred)
    if sorted(order) != sorted(v.name for v in net.variables):
        raise BadOrder("order must list every variable exactly once")
    seen: set[str] = set()
    for name in order:
        for parent in net.variable_map[name].parents:
            if parent not in seen:
                raise BadOrder(f"{name} appears before its parent {parent}")
        seen.add(name)
    return order
