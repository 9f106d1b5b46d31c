"""Text formats: network files, parameter selections, and constraints.

A network file declares variables and tables::

    var Covid { values: yes, no; }
    var Antigen { values: pos, neg; parents: Covid, Symptoms; }
    cpt Covid { (): 0.05, 0.95; }
    cpt Antigen { (yes, yes): 0.72, 0.28; ... }

A parameter file selects tunable entries::

    param p {
      entry: Antigen(yes, yes): pos;
      covariation: linear-proportional;
      interval: 1e-6, 0.999999;
    }

A constraint is a single line like ``P(Covid=no | Antigen=pos & PCR=pos) <= 0.009``.
``#`` starts a comment that runs to the end of the line.  All numbers are read
exactly (decimal strings become exact rationals).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .bn import (
    CPT,
    DEFAULT_DELTA,
    ROW_SUM_TOLERANCE,
    BayesNet,
    Constraint,
    EntryCoord,
    ParamBN,
    Variable,
    parametrize,
)
from .errors import NotWellFormed, ParseError, RowSumError, UnknownValue
from .poly import Polynomial, as_fraction


def float17(value: float) -> str:
    """A float rendered with 17 significant digits (round-trip exact)."""
    return format(float(value), ".17g")


# -- lexing -------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<number>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)
      | (?P<name>[A-Za-z_][A-Za-z0-9_\-]*)
      | (?P<op><=|>=|[{}():;,=|&])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # "name" | "number" | "op" | "end"
    text: str
    line: int
    column: int


def _strip_comments(text: str) -> str:
    """Blank out ``#`` comments without moving anything (positions survive)."""
    lines = []
    for line in text.split("\n"):
        cut = line.find("#")
        if cut >= 0:
            line = line[:cut] + " " * (len(line) - cut)
        lines.append(line)
    return "\n".join(lines)


def _lex(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, column, pos = 1, 1, 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, column)
        value = match.group()
        if match.lastgroup != "ws":
            tokens.append(_Token(match.lastgroup, value, line, column))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            column = len(value) - value.rfind("\n")
        else:
            column += len(value)
        pos = match.end()
    tokens.append(_Token("end", "", line, column))
    return tokens


class _Scanner:
    def __init__(self, text: str):
        self.tokens = _lex(_strip_comments(text))
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        token = self.tokens[self.i]
        if token.kind != "end":
            self.i += 1
        return token

    def accept(self, text: str) -> bool:
        if self.peek().text == text and self.peek().kind != "end":
            self.i += 1
            return True
        return False

    def expect(self, text: str | None = None, kind: str | None = None, what: str = "") -> _Token:
        token = self.peek()
        wanted = what or (repr(text) if text is not None else kind)
        if text is not None and token.text != text:
            raise ParseError(f"expected {wanted}, got {token.text or 'end of input'!r}",
                             token.line, token.column)
        if kind is not None and token.kind != kind:
            raise ParseError(f"expected {wanted}, got {token.text or 'end of input'!r}",
                             token.line, token.column)
        return self.advance()

    def label(self) -> str:
        """A name used as a variable/value label (numbers are allowed as labels)."""
        token = self.peek()
        if token.kind not in ("name", "number"):
            raise ParseError(f"expected a name, got {token.text or 'end of input'!r}",
                             token.line, token.column)
        return self.advance().text

    def label_list(self, terminator: str) -> list[str]:
        labels = [self.label()]
        while self.accept(","):
            labels.append(self.label())
        self.expect(terminator)
        return labels


# -- network files --------------------------------------------------------------


def parse_network(text: str, *, renormalize: bool = False) -> BayesNet:
    """Parse a network file.

    Table rows must sum to one exactly; rows off by at most 1e-9 (as written
    decimal files often are) are rescaled exactly when ``renormalize`` is set
    and rejected otherwise.
    """
    scanner = _Scanner(text)
    variables: list[Variable] = []
    tables: dict[str, list[tuple[tuple[str, ...], tuple[Polynomial, ...]]]] = {}
    while scanner.peek().kind != "end":
        keyword = scanner.expect(kind="name", what="'var' or 'cpt'")
        if keyword.text == "var":
            variables.append(_parse_var_block(scanner))
        elif keyword.text == "cpt":
            owner, rows = _parse_cpt_block(scanner, renormalize)
            if owner in tables:
                raise ParseError(f"duplicate table for {owner}", keyword.line, keyword.column)
            tables[owner] = rows
        else:
            raise ParseError(
                f"expected 'var' or 'cpt', got {keyword.text!r}", keyword.line, keyword.column
            )
    declared = {v.name for v in variables}
    for owner in tables:
        if owner not in declared:
            raise NotWellFormed(f"table for undeclared variable {owner!r}")
    missing = [v.name for v in variables if v.name not in tables]
    if missing:
        raise NotWellFormed(f"no table for variable(s) {missing}")
    cpts = tuple(CPT(v.name, tuple(tables[v.name])) for v in variables)
    return BayesNet(tuple(variables), cpts)


def _parse_var_block(scanner: _Scanner) -> Variable:
    name = scanner.expect(kind="name", what="a variable name").text
    scanner.expect("{")
    values: list[str] | None = None
    parents: list[str] = []
    while not scanner.accept("}"):
        clause = scanner.expect(kind="name", what="'values' or 'parents'")
        scanner.expect(":")
        if clause.text == "values":
            values = scanner.label_list(";")
        elif clause.text == "parents":
            parents = scanner.label_list(";")
        else:
            raise ParseError(
                f"unknown clause {clause.text!r} in a var block", clause.line, clause.column
            )
    if values is None:
        raise NotWellFormed(f"variable {name} declares no values")
    return Variable(name, tuple(values), tuple(parents))


def _parse_cpt_block(scanner: _Scanner, renormalize: bool):
    owner = scanner.expect(kind="name", what="a variable name").text
    scanner.expect("{")
    rows = []
    while not scanner.accept("}"):
        opening = scanner.expect("(")
        key: tuple[str, ...] = () if scanner.accept(")") else tuple(scanner.label_list(")"))
        scanner.expect(":")
        numbers = [as_fraction(scanner.expect(kind="number", what="a probability").text)]
        while scanner.accept(","):
            numbers.append(as_fraction(scanner.expect(kind="number", what="a probability").text))
        scanner.expect(";")
        rows.append((key, _checked_row(owner, key, numbers, renormalize, opening)))
    return owner, rows


def _checked_row(owner, key, numbers: list[Fraction], renormalize: bool, token: _Token):
    total = sum(numbers)
    if total != 1:
        if abs(total - 1) > ROW_SUM_TOLERANCE:
            raise RowSumError(
                f"row {owner}{key} sums to {float(total)}, not 1 "
                f"(line {token.line})"
            )
        if not renormalize:
            raise RowSumError(
                f"row {owner}{key} sums to {float(total)}; pass renormalize "
                f"to rescale it exactly (line {token.line})"
            )
        numbers = [n / total for n in numbers]
    return tuple(Polynomial.constant(n) for n in numbers)


# -- parameter selections ---------------------------------------------------------


def parse_param_spec(text: str, net: BayesNet, *, delta=DEFAULT_DELTA) -> ParamBN:
    """Parse a parameter file and apply it to ``net``.

    Several ``entry`` clauses in one ``param`` block share the parameter (the
    entries must have equal original values); ``interval`` defaults to
    ``[delta, 1-delta]``.
    """
    scanner = _Scanner(text)
    coords: list[EntryCoord] = []
    names: dict[EntryCoord, str] = {}
    intervals: dict[str, tuple[Fraction, Fraction]] = {}
    seen: set[str] = set()
    while scanner.peek().kind != "end":
        scanner.expect("param")
        pname = scanner.expect(kind="name", what="a parameter name").text
        if pname in seen:
            raise NotWellFormed(f"duplicate parameter block {pname!r}")
        seen.add(pname)
        scanner.expect("{")
        entries = 0
        while not scanner.accept("}"):
            clause = scanner.expect(kind="name", what="'entry', 'covariation' or 'interval'")
            scanner.expect(":")
            if clause.text == "entry":
                coord = _parse_entry(scanner, net)
                coords.append(coord)
                names[coord] = pname
                entries += 1
            elif clause.text == "covariation":
                kind = scanner.expect(kind="name", what="a co-variation scheme")
                scanner.expect(";")
                if kind.text != "linear-proportional":
                    raise ParseError(
                        f"unsupported co-variation {kind.text!r} "
                        "(only linear-proportional is available)",
                        kind.line,
                        kind.column,
                    )
            elif clause.text == "interval":
                lb = as_fraction(scanner.expect(kind="number", what="a bound").text)
                scanner.expect(",")
                ub = as_fraction(scanner.expect(kind="number", what="a bound").text)
                scanner.expect(";")
                intervals[pname] = (lb, ub)
            else:
                raise ParseError(
                    f"unknown clause {clause.text!r} in a param block", clause.line, clause.column
                )
        if entries == 0:
            raise NotWellFormed(f"parameter {pname} selects no entry")
    return parametrize(net, coords, names, intervals, delta=delta)


def _parse_entry(scanner: _Scanner, net: BayesNet) -> EntryCoord:
    var_token = scanner.peek()
    var = scanner.expect(kind="name", what="a variable name").text
    scanner.expect("(")
    key: tuple[str, ...] = () if scanner.accept(")") else tuple(scanner.label_list(")"))
    scanner.expect(":")
    value = scanner.label()
    scanner.expect(";")
    variable = net.variable_map.get(var)
    if variable is None:
        raise UnknownValue(f"unknown variable {var!r} (line {var_token.line})")
    try:
        index = variable.value_index(value)
    except NotWellFormed:
        raise UnknownValue(f"variable {var} has no value {value!r} (line {var_token.line})") from None
    return (var, key, index)


# -- constraints ------------------------------------------------------------------

_CONSTRAINT_RE = re.compile(
    r"^\s*P\s*\(\s*(?P<body>[^()]*?)\s*\)\s*(?P<dir><=|>=)\s*(?P<thr>[0-9.eE+-]+)\s*$"
)


def parse_constraint(text: str, net: BayesNet | ParamBN | None = None) -> Constraint:
    """Parse ``P(Var=val & ... | Var=val & ...) <= number`` (evidence optional).

    With ``net`` given, variable and value names are checked against it.
    """
    match = _CONSTRAINT_RE.match(text)
    if match is None:
        raise ParseError(
            "expected a constraint like 'P(Var=val | Var=val & Var=val) <= 0.01', "
            f"got {text.strip()!r}"
        )
    parts = match.group("body").split("|")
    if len(parts) > 2:
        raise ParseError("more than one '|' in the constraint")
    hypothesis = _parse_literals(parts[0])
    evidence = _parse_literals(parts[1]) if len(parts) == 2 else ()
    try:
        threshold = as_fraction(match.group("thr"))
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"bad threshold {match.group('thr')!r}") from None
    constraint = Constraint(hypothesis, evidence, match.group("dir"), threshold)
    if net is not None:
        constraint.check_against(net)
    return constraint


def _parse_literals(chunk: str) -> tuple[tuple[str, str], ...]:
    literals = []
    for part in chunk.split("&"):
        part = part.strip()
        var, eq, value = part.partition("=")
        if not eq or not var.strip() or not value.strip():
            raise ParseError(f"literal {part!r} is not of the form Var=value")
        literals.append((var.strip(), value.strip()))
    return tuple(literals)
