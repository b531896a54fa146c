"""Integer linear programs over bounded variables.

A model is a list of bounded integer/boolean variables, linear constraints
with rational coefficients (strict ``<`` allowed), and optional quadratic
constraints of the form ``sum (x_i - c_i)^2 <= bound`` that the solver
enforces lazily.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping


class Rel(str, enum.Enum):
    LE = "<="
    LT = "<"
    EQ = "="
    GE = ">="


class Kind(str, enum.Enum):
    BOOL = "bool"
    INT = "int"


@dataclass(frozen=True)
class Variable:
    id: int
    kind: Kind
    lower: int
    upper: int
    name: str


@dataclass(frozen=True)
class LinearConstraint:
    """``sum(coef * x[var]) rel rhs``; at most one term per variable."""

    terms: tuple
    rel: Rel
    rhs: Fraction
    name: str = ""

    def lhs_value(self, assignment: Mapping[int, int]) -> Fraction:
        return sum((c * assignment[v] for c, v in self.terms), Fraction(0))

    def holds(self, assignment: Mapping[int, int]) -> bool:
        lhs = self.lhs_value(assignment)
        if self.rel is Rel.LE:
            return lhs <= self.rhs
        if self.rel is Rel.LT:
            return lhs < self.rhs
        if self.rel is Rel.GE:
            return lhs >= self.rhs
        return lhs == self.rhs


@dataclass(frozen=True)
class QuadraticConstraint:
    """``sum((x[var] - center)^2 for var, center in square_terms) <= bound``."""

    square_terms: tuple
    bound: int
    name: str = ""

    def __post_init__(self):
        if self.bound < 0:
            raise ValueError("quadratic bound must be non-negative")

    def value(self, assignment: Mapping[int, int]) -> int:
        return sum((assignment[v] - c) ** 2 for v, c in self.square_terms)

    def holds(self, assignment: Mapping[int, int]) -> bool:
        return self.value(assignment) <= self.bound


class LinExpr:
    """Sparse affine expression ``sum(coef * var) + const`` with exact coefficients."""

    __slots__ = ("coefs", "const")

    def __init__(self, coefs: Mapping[int, Fraction] | None = None, const=0):
        self.coefs = {v: Fraction(c) for v, c in (coefs or {}).items() if c != 0}
        self.const = Fraction(const)

    @classmethod
    def var(cls, v: int, coef=1) -> "LinExpr":
        return cls({v: coef})

    @classmethod
    def weighted(cls, pairs: Iterable, const=0) -> "LinExpr":
        out = cls(const=const)
        for c, v in pairs:
            out.coefs[v] = out.coefs.get(v, Fraction(0)) + Fraction(c)
        out.coefs = {v: c for v, c in out.coefs.items() if c != 0}
        return out

    def _coerce(self, other) -> "LinExpr":
        return other if isinstance(other, LinExpr) else LinExpr(const=other)

    def __add__(self, other):
        other = self._coerce(other)
        coefs = dict(self.coefs)
        for v, c in other.coefs.items():
            coefs[v] = coefs.get(v, Fraction(0)) + c
        return LinExpr(coefs, self.const + other.const)

    __radd__ = __add__

    def __neg__(self):
        return LinExpr({v: -c for v, c in self.coefs.items()}, -self.const)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, k):
        k = Fraction(k)
        return LinExpr({v: c * k for v, c in self.coefs.items()}, self.const * k)

    __rmul__ = __mul__

    def bounds(self, lower: Mapping[int, int], upper: Mapping[int, int]) -> tuple:
        """Exact range of the expression over the variable box."""
        lo = hi = self.const
        for v, c in self.coefs.items():
            if c > 0:
                lo += c * lower[v]
                hi += c * upper[v]
            else:
                lo += c * upper[v]
                hi += c * lower[v]
        return lo, hi

    def __repr__(self):
        parts = [f"{c}*x{v}" for v, c in sorted(self.coefs.items())]
        return " + ".join(parts + [str(self.const)])


@dataclass
class IlpModel:
    variables: list = field(default_factory=list)
    constraints: list = field(default_factory=list)
    quadratics: list = field(default_factory=list)
    big_M: int = 0

    # -- building ------------------------------------------------------------

    def add_var(self, name: str, lower: int, upper: int, kind: Kind = Kind.INT) -> int:
        if lower > upper:
            raise ValueError(f"variable {name}: empty domain [{lower}, {upper}]")
        if kind is Kind.BOOL and (lower < 0 or upper > 1):
            raise ValueError(f"boolean {name} must have bounds within [0, 1]")
        vid = len(self.variables)
        self.variables.append(Variable(vid, kind, int(lower), int(upper), name))
        return vid

    def add_bool(self, name: str) -> int:
        return self.add_var(name, 0, 1, Kind.BOOL)

    def set_bounds(self, vid: int, lower: int, upper: int) -> None:
        var = self.variables[vid]
        if lower > upper:
            raise ValueError(f"variable {var.name}: empty domain [{lower}, {upper}]")
        self.variables[vid] = Variable(vid, var.kind, int(lower), int(upper), var.name)

    def add_constraint(self, terms, rel: Rel, rhs=0, name: str = "") -> LinearConstraint:
        """Add ``terms rel rhs``; ``terms`` is a LinExpr or (coef, var) pairs."""
        expr = terms if isinstance(terms, LinExpr) else LinExpr.weighted(terms)
        for v in expr.coefs:
            if not 0 <= v < len(self.variables):
                raise KeyError(f"constraint {name!r} references unknown variable {v}")
        con = LinearConstraint(
            tuple((c, v) for v, c in sorted(expr.coefs.items())),
            Rel(rel),
            Fraction(rhs) - expr.const,
            name,
        )
        self.constraints.append(con)
        return con

    def add_relation(self, lhs, rel: Rel, rhs, name: str = "") -> LinearConstraint:
        """Add ``lhs rel rhs`` for two affine expressions."""
        lhs = lhs if isinstance(lhs, LinExpr) else LinExpr(const=lhs)
        return self.add_constraint(lhs - rhs, rel, 0, name)

    def add_quadratic(self, square_terms, bound: int, name: str = "") -> QuadraticConstraint:
        con = QuadraticConstraint(tuple((v, int(c)) for v, c in square_terms), int(bound), name)
        self.quadratics.append(con)
        return con

    def copy(self) -> "IlpModel":
        return IlpModel(list(self.variables), list(self.constraints), list(self.quadratics), self.big_M)

    # -- queries -------------------------------------------------------------

    @property
    def lower(self) -> dict:
        return {v.id: v.lower for v in self.variables}

    @property
    def upper(self) -> dict:
        return {v.id: v.upper for v in self.variables}

    def count(self, kind: Kind) -> int:
        return sum(1 for v in self.variables if v.kind is kind)

    def is_normalized(self) -> bool:
        return all(
            c.rel in (Rel.LE, Rel.EQ)
            and c.rhs.denominator == 1
            and all(k.denominator == 1 for k, _ in c.terms)
            for c in self.constraints
        )


def normalize_constraint(con: LinearConstraint) -> LinearConstraint:
    """Integer-coefficient ``<=`` / ``=`` form with the same integer solutions."""
    scale = math.lcm(con.rhs.denominator, *(c.denominator for c, _ in con.terms))
    terms = tuple((Fraction(c * scale), v) for c, v in con.terms)
    rhs = con.rhs * scale
    rel = con.rel
    if rel in (Rel.GE,):
        terms = tuple((-c, v) for c, v in terms)
        rhs, rel = -rhs, Rel.LE
    elif rel is Rel.LT:
        rhs, rel = rhs - 1, Rel.LE
    return LinearConstraint(terms, rel, rhs, con.name)


def normalize(model: IlpModel) -> IlpModel:
    out = model.copy()
    out.constraints = [normalize_constraint(c) for c in model.constraints]
    return out


def check_assignment(model: IlpModel, assignment: Mapping[int, int]) -> bool:
    for var in model.variables:
        if var.id not in assignment:
            raise KeyError(f"assignment misses variable {var.name} (id {var.id})")
        val = assignment[var.id]
        if val != int(val) or not var.lower <= val <= var.upper:
            return False
    return all(c.holds(assignment) for c in model.constraints) and all(
        q.holds(assignment) for q in model.quadratics
    )


# --- LP text export ----------------------------------------------------------

_BAD_NAME = re.compile(r"[^A-Za-z0-9_.]")


def lp_name(name: str, vid: int) -> str:
    clean = _BAD_NAME.sub("_", name) or f"x{vid}"
    if clean[0].isdigit() or clean[0] in ".eE":
        clean = "x_" + clean
    return clean


def _num(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    d = q.denominator
    while d % 2 == 0:
        d //= 2
    while d % 5 == 0:
        d //= 5
    if d == 1:
        # terminating decimal, printed exactly
        digits = 0
        while (q * 10**digits).denominator != 1:
            digits += 1
        return f"{float(q):.{digits}f}" if digits <= 15 else repr(float(q))
    return repr(float(q))


def export_lp(model: IlpModel, epsilon: Fraction | None = None) -> str:
    """Render the model in CPLEX-style LP text.

    Strict rows are only allowed when ``epsilon`` is given, in which case
    ``expr < rhs`` is written as ``expr <= rhs - epsilon``.
    """
    names = [lp_name(v.name, v.id) for v in model.variables]
    seen = {}
    for k, n in enumerate(names):
        if n in seen:
            names[k] = f"{n}_{k}"
        seen[names[k]] = k

    lines = ["\\ exported by qnnilp", "Minimize", " obj: 0", "Subject To"]
    for k, con in enumerate(model.constraints):
        rel, rhs = con.rel, con.rhs
        if rel is Rel.LT:
            if epsilon is None:
                raise ValueError("strict constraint in export; normalize first or pass epsilon")
            rel, rhs = Rel.LE, rhs - Fraction(epsilon)
        cname = lp_name(con.name, k) if con.name else f"c{k}"
        body = _lp_linear(con.terms, names)
        lines.append(f" {cname}: {body} {rel.value if rel is not Rel.EQ else '='} {_num(rhs)}")
    for k, q in enumerate(model.quadratics):
        # (x - c)^2 = x^2 - 2 c x + c^2
        lin = [(Fraction(-2 * c), v) for v, c in q.square_terms if c != 0]
        const = sum(c * c for _, c in q.square_terms)
        quad = " + ".join(f"{names[v]} ^ 2" for v, _ in q.square_terms)
        lin_text = _lp_linear(lin, names) + " + " if lin else ""
        qname = lp_name(q.name, k) if q.name else f"q{k}"
        lines.append(f" {qname}: {lin_text}[ {quad} ] <= {q.bound - const}")

    lines.append("Bounds")
    for var in model.variables:
        if var.kind is Kind.BOOL and (var.lower, var.upper) == (0, 1):
            continue
        if var.lower == var.upper:
            lines.append(f" {names[var.id]} = {var.lower}")
        else:
            lines.append(f" {var.lower} <= {names[var.id]} <= {var.upper}")
    generals = [names[v.id] for v in model.variables if v.kind is Kind.INT]
    binaries = [names[v.id] for v in model.variables if v.kind is Kind.BOOL]
    lines.append("Generals")
    lines.extend(f" {n}" for n in generals)
    lines.append("Binaries")
    lines.extend(f" {n}" for n in binaries)
    lines.append("End")
    return "\n".join(lines) + "\n"


def _lp_linear(terms, names, per_line: int = 8) -> str:
    if not terms:
        return "0 " + names[0] if names else "0"
    chunks = []
    for k, (c, v) in enumerate(terms):
        sign = "-" if c < 0 else "+"
        text = f"{sign} {_num(abs(c))} {names[v]}"
        if k == 0 and c >= 0:
            text = f"{_num(c)} {names[v]}"
        if k and k % per_line == 0:
            text = "\n   " + text
        chunks.append(text)
    return " ".join(chunks)
