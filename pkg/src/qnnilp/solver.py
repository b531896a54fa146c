"""Branch-and-bound over bounded integer variables.

Every node first tightens the variable box by exact integer bound
propagation, then solves the LP relaxation of what is left with the exact
simplex in :mod:`qnnilp.simplex`.  Branching is on the most fractional
variable (lowest id on ties), depth-first, exploring the child on the side
the fractional value rounds to first.  Quadratic constraints take part in
propagation but are otherwise checked only at integral points; a violated
one splits the domain of one of its coordinates.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

from .ilp import IlpModel, Rel, check_assignment, normalize
from .simplex import LpTimeout, feasible_point

HALF = Fraction(1, 2)


class Status(str, enum.Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    TIMEOUT = "timeout"


@dataclass
class SolveStats:
    nodes: int = 0
    lp_solves: int = 0
    elapsed: float = 0.0


@dataclass
class SolveResult:
    status: Status
    assignment: dict | None = None
    stats: SolveStats = field(default_factory=SolveStats)

    @property
    def feasible(self) -> bool:
        return self.status is Status.FEASIBLE


class _Timeout(Exception):
    pass


class _Compiled:
    """Integer row data of a normalized model, indexed for propagation.

    Booleans tied by a row ``v_1 + ... + v_k = 1`` form a one-hot group.
    Every other row that touches a group sees the whole group as a single
    term whose value is the coefficient of the one member set to 1 (absent
    members count as 0), which is what lets a pinned staircase input fix
    its booleans without any LP.
    """

    def __init__(self, model: IlpModel):
        self.n = len(model.variables)
        self.rows = []  # (vars, coefs, rhs, is_eq), as in the model
        self.trivial_infeasible = False
        for con in model.constraints:
            if con.rel not in (Rel.LE, Rel.EQ):
                raise ValueError("solver expects a normalized model")
            vs = tuple(v for _, v in con.terms)
            cs = tuple(int(c) for c, _ in con.terms)
            rhs = int(con.rhs)
            if not vs:
                if (con.rel is Rel.EQ and rhs != 0) or rhs < 0:
                    self.trivial_infeasible = True
                continue
            self.rows.append((vs, cs, rhs, con.rel is Rel.EQ))

        group_of = {}
        groups = []
        own_row = {}
        for r, (vs, cs, rhs, is_eq) in enumerate(self.rows):
            if not (is_eq and rhs == 1 and len(vs) > 1 and all(c == 1 for c in cs)):
                continue
            vars_ = model.variables
            if any(vars_[v].lower < 0 or vars_[v].upper > 1 or v in group_of for v in vs):
                continue
            for v in vs:
                group_of[v] = len(groups)
            own_row[len(groups)] = r
            groups.append(vs)

        # propagation view: (single vars, single coefs, group terms, rhs, is_eq)
        self.prop_rows = []
        self.var_rows = [[] for _ in range(self.n)]
        for r, (vs, cs, rhs, is_eq) in enumerate(self.rows):
            singles_v, singles_c, grouped = [], [], {}
            for v, c in zip(vs, cs):
                g = group_of.get(v)
                if g is None or own_row[g] == r:
                    singles_v.append(v)
                    singles_c.append(c)
                else:
                    grouped.setdefault(g, {})[v] = c
            gterms = tuple(
                (groups[g], tuple(coef.get(v, 0) for v in groups[g])) for g, coef in grouped.items()
            )
            self.prop_rows.append((tuple(singles_v), tuple(singles_c), gterms, rhs, is_eq))
            touched = set(singles_v)
            for members, _ in gterms:
                touched.update(members)
            for v in touched:
                self.var_rows[v].append(r)
        self.quads = [
            (tuple(v for v, _ in q.square_terms), tuple(c for _, c in q.square_terms), q.bound)
            for q in model.quadratics
        ]


def _propagate(comp: _Compiled, lb: list, ub: list, seed) -> bool:
    """Tighten ``lb``/``ub`` in place; False when the box holds no solution.

    ``seed`` lists the rows to examine first (None means all of them).
    """
    rows = comp.prop_rows
    queue = list(range(len(rows))) if seed is None else list(seed)
    in_queue = [False] * len(rows)
    for r in queue:
        in_queue[r] = True
    budget = 20 * len(rows) + 100
    head = 0

    def touch(v):
        for r2 in comp.var_rows[v]:
            if not in_queue[r2]:
                in_queue[r2] = True
                queue.append(r2)

    for _ in range(8):
        while head < len(queue):
            r = queue[head]
            head += 1
            in_queue[r] = False
            budget -= 1
            if budget < 0:
                return _propagate_quads(comp, lb, ub) is not None
            vs, cs, gterms, rhs, is_eq = rows[r]
            minact = maxact = 0
            for v, c in zip(vs, cs):
                if c > 0:
                    minact += c * lb[v]
                    maxact += c * ub[v]
                else:
                    minact += c * ub[v]
                    maxact += c * lb[v]
            granges = []
            for members, coefs in gterms:
                alive = [c for v, c in zip(members, coefs) if ub[v]]
                if not alive:
                    return False
                gmin, gmax = min(alive), max(alive)
                minact += gmin
                maxact += gmax
                granges.append((gmin, gmax))
            if minact > rhs or (is_eq and maxact < rhs):
                return False
            slack = rhs - minact
            if not is_eq and slack >= maxact - minact:
                continue
            surplus = maxact - rhs
            for v, c in zip(vs, cs):
                lo, hi = lb[v], ub[v]
                if c > 0:
                    nhi = lo + slack // c
                    nlo = hi - surplus // c if is_eq else lo
                else:
                    nlo = hi - slack // -c
                    nhi = lo + surplus // -c if is_eq else hi
                if nlo > lo or nhi < hi:
                    nlo, nhi = max(nlo, lo), min(nhi, hi)
                    if nlo > nhi:
                        return False
                    lb[v], ub[v] = nlo, nhi
                    touch(v)
            for (members, coefs), (gmin, gmax) in zip(gterms, granges):
                for v, c in zip(members, coefs):
                    # choosing v would push the row past its limit
                    if ub[v] and lb[v] == 0 and (c - gmin > slack or (is_eq and gmax - c > surplus)):
                        ub[v] = 0
                        touch(v)
        changed = _propagate_quads(comp, lb, ub)
        if changed is None:
            return False
        if not changed:
            return True
        for v in changed:
            touch(v)
    return True


def _sq_min(lo, hi, c):
    if lo <= c <= hi:
        return 0
    return min((lo - c) ** 2, (hi - c) ** 2)


def _propagate_quads(comp, lb, ub):
    """Variables whose bounds moved, or None when some quadratic is violated."""
    changed = []
    for vs, cs, bound in comp.quads:
        mins = [_sq_min(lb[v], ub[v], c) for v, c in zip(vs, cs)]
        total = sum(mins)
        if total > bound:
            return None
        for v, c, m in zip(vs, cs, mins):
            reach = math.isqrt(bound - (total - m))
            lo, hi = max(lb[v], c - reach), min(ub[v], c + reach)
            if lo > hi:
                return None
            if (lo, hi) != (lb[v], ub[v]):
                lb[v], ub[v] = lo, hi
                changed.append(v)
    return changed


def _relaxation(comp: _Compiled, lb, ub, deadline):
    """LP over the free variables; returns the full point or None."""
    free = [v for v in range(comp.n) if lb[v] < ub[v]]
    col = {v: k for k, v in enumerate(free)}
    lp_rows = []
    for vs, cs, rhs, is_eq in comp.rows:
        coefs = {}
        rest = rhs
        maxact = 0
        for v, c in zip(vs, cs):
            rest -= c * lb[v]
            if v in col:
                coefs[col[v]] = c
                if c > 0:
                    maxact += c * (ub[v] - lb[v])
        if not coefs:
            continue
        if not is_eq and maxact <= rest:
            continue
        lp_rows.append((coefs, rest, is_eq))
    point = feasible_point(lp_rows, [ub[v] - lb[v] for v in free], deadline)
    if point is None:
        return None
    x = [Fraction(b) for b in lb]
    for v, k in col.items():
        x[v] += point[k]
    return x


def _violated_quad_var(comp, lb, ub, values):
    for vs, cs, bound in comp.quads:
        if sum((values[v] - c) ** 2 for v, c in zip(vs, cs)) > bound:
            for v, c in zip(vs, cs):
                if lb[v] < ub[v] and values[v] != c:
                    return v, c
            for v, c in zip(vs, cs):
                if lb[v] < ub[v]:
                    return v, c
    return None


def solve(model: IlpModel, deadline: float | None = None) -> SolveResult:
    """Decide feasibility of ``model`` exactly.

    ``deadline`` is an absolute :func:`time.monotonic` instant; reaching it
    returns a TIMEOUT result.
    """
    start = time.monotonic()
    stats = SolveStats()
    if not model.is_normalized():
        model = normalize(model)
    comp = _Compiled(model)

    def done(status, assignment=None):
        stats.elapsed = time.monotonic() - start
        return SolveResult(status, assignment, stats)

    if deadline is not None and time.monotonic() >= deadline:
        return done(Status.TIMEOUT)
    if comp.trivial_infeasible:
        return done(Status.INFEASIBLE)

    stack = [([v.lower for v in model.variables], [v.upper for v in model.variables], None)]
    try:
        while stack:
            if deadline is not None and time.monotonic() > deadline:
                raise _Timeout
            lb, ub, seed = stack.pop()
            stats.nodes += 1
            if not _propagate(comp, lb, ub, seed):
                continue

            if all(l == u for l, u in zip(lb, ub)):
                cand = {v: lb[v] for v in range(comp.n)}
                if check_assignment(model, cand):
                    return done(Status.FEASIBLE, cand)
                continue

            stats.lp_solves += 1
            x = _relaxation(comp, lb, ub, deadline)
            if x is None:
                continue

            branch_var, best = None, -1
            for v in range(comp.n):
                f = x[v] - math.floor(x[v])
                if f:
                    score = min(f, 1 - f)
                    if score > best:
                        branch_var, best = v, score
            if branch_var is None:
                cand = {v: int(x[v]) for v in range(comp.n)}
                hit = _violated_quad_var(comp, lb, ub, cand)
                if hit is None:
                    if check_assignment(model, cand):
                        return done(Status.FEASIBLE, cand)
                    raise AssertionError("integral LP vertex fails the exact check")
                v, centre = hit
                val = cand[v]
                parts = [(lb[v], val - 1), (val, val), (val + 1, ub[v])]
                parts = [(lo, hi) for lo, hi in parts if lo <= hi]
                # explore the piece nearest the centre last-in-first-out
                parts.sort(key=lambda p: -_sq_min(p[0], p[1], centre))
                for lo, hi in parts:
                    clb, cub = list(lb), list(ub)
                    clb[v], cub[v] = lo, hi
                    _push(stack, comp, clb, cub, v)
                continue

            val = x[branch_var]
            fl = math.floor(val)
            down_lb, down_ub = list(lb), list(ub)
            down_ub[branch_var] = fl
            up_lb, up_ub = list(lb), list(ub)
            up_lb[branch_var] = fl + 1
            if val - fl < HALF:
                _push(stack, comp, up_lb, up_ub, branch_var)
                _push(stack, comp, down_lb, down_ub, branch_var)
            else:
                _push(stack, comp, down_lb, down_ub, branch_var)
                _push(stack, comp, up_lb, up_ub, branch_var)
    except (_Timeout, LpTimeout):
        return done(Status.TIMEOUT)
    return done(Status.INFEASIBLE)


def _push(stack, comp, lb, ub, var):
    # a child only needs the rows touching its branched variable re-examined
    stack.append((lb, ub, comp.var_rows[var]))
