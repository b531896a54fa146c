"""Exact phase-1 simplex for boxed feasibility LPs.

Finds a vertex of ``{x : A x <= b, A_eq x = b_eq, 0 <= x <= u}`` or proves
the polytope empty.  The tableau is kept sparse (one dict per row) and all
arithmetic is on exact rationals (gmpy2 ``mpq`` internally), so the answer
carries no tolerance.
"""

from __future__ import annotations

import time
from fractions import Fraction

from gmpy2 import mpq

# consecutive degenerate pivots after which entering/leaving switch to Bland's rule
BLAND_AFTER = 30


class LpTimeout(Exception):
    pass


def feasible_point(rows, upper, deadline=None):
    """Return a feasible vertex as a list of Fractions, or None if infeasible.

    ``rows`` holds ``(coefs, rhs, is_eq)`` with ``coefs`` a dict
    ``{column: int}``; ``upper[j]`` is the finite upper bound of column ``j``
    (every lower bound is 0).
    """
    n = len(upper)
    col_ub = list(upper)
    tableau = []
    basis = []
    beta = []
    artificial = set()

    for coefs, rhs, is_eq in rows:
        row = {j: c for j, c in coefs.items() if c}
        if not is_eq and rhs >= 0:
            s = len(col_ub)
            col_ub.append(None)
            row[s] = 1
            basis.append(s)
            beta.append(mpq(rhs))
        else:
            sign = 1 if rhs >= 0 else -1
            row = {j: sign * c for j, c in row.items()}
            if not is_eq:
                s = len(col_ub)
                col_ub.append(None)
                row[s] = sign
            a = len(col_ub)
            col_ub.append(None)
            artificial.add(a)
            row[a] = 1
            basis.append(a)
            beta.append(mpq(abs(rhs)))
        tableau.append(row)

    at_upper = set()
    # phase-1 reduced costs: cost 1 on artificials, priced out of the basis
    red = {}
    for i, row in enumerate(tableau):
        if basis[i] in artificial:
            for j, c in row.items():
                if j not in artificial:
                    red[j] = red.get(j, 0) - c
    red = {j: c for j, c in red.items() if c}

    degenerate = 0
    steps = 0
    while True:
        infeas = sum(beta[i] for i in range(len(basis)) if basis[i] in artificial)
        if infeas == 0:
            break
        steps += 1
        if deadline is not None and steps % 16 == 0 and time.monotonic() > deadline:
            raise LpTimeout
        bland = degenerate >= BLAND_AFTER
        basic = set(basis)

        enter, direction, best = None, 0, 0
        for j in sorted(red) if bland else red:
            d = red[j]
            if j in basic or j in artificial:
                continue
            if j in at_upper:
                ok, dirn = d > 0, -1
            else:
                ok, dirn = d < 0 and col_ub[j] != 0, 1
            if not ok:
                continue
            if bland:
                enter, direction = j, dirn
                break
            if abs(d) > best or (abs(d) == best and j < enter):
                enter, direction, best = j, dirn, abs(d)
        if enter is None:
            return None

        # ratio test
        limit = None if col_ub[enter] is None else mpq(col_ub[enter])
        leave_row, leave_to_upper = None, False
        for i, row in enumerate(tableau):
            a = row.get(enter)
            if not a:
                continue
            alpha = direction * a
            b = basis[i]
            if alpha > 0:
                t = beta[i] / alpha
                to_upper = False
            else:
                if col_ub[b] is None:
                    continue
                t = (col_ub[b] - beta[i]) / -alpha
                to_upper = True
            if (
                limit is None
                or t < limit
                or (t == limit and leave_row is not None and b < basis[leave_row])
            ):
                limit, leave_row, leave_to_upper = t, i, to_upper
        if limit is None:
            # unbounded ray in phase 1 cannot happen with bounded structurals,
            # but an unbounded slack direction simply keeps improving: treat as
            # moving infinitely far, which drives the artificial out
            raise AssertionError("unbounded phase-1 direction")

        degenerate = degenerate + 1 if limit == 0 else 0
        for i, row in enumerate(tableau):
            a = row.get(enter)
            if a:
                beta[i] -= direction * a * limit

        if leave_row is None:
            # bound flip of the entering column
            if direction > 0:
                at_upper.add(enter)
            else:
                at_upper.discard(enter)
            continue

        enter_value = (mpq(col_ub[enter]) if enter in at_upper else mpq(0)) + direction * limit
        at_upper.discard(enter)
        leaving = basis[leave_row]
        if leave_to_upper:
            at_upper.add(leaving)

        prow = tableau[leave_row]
        piv = prow[enter]
        if piv != 1:
            prow = {j: mpq(c) / piv for j, c in prow.items()}
            tableau[leave_row] = prow
        for i, row in enumerate(tableau):
            if i == leave_row:
                continue
            f = row.get(enter)
            if f:
                for j, c in prow.items():
                    v = row.get(j, 0) - f * c
                    if v:
                        row[j] = v
                    else:
                        row.pop(j, None)
        f = red.get(enter)
        if f:
            for j, c in prow.items():
                v = red.get(j, 0) - f * c
                if v:
                    red[j] = v
                else:
                    red.pop(j, None)
        basis[leave_row] = enter
        beta[leave_row] = enter_value

        if leaving in artificial:
            # an artificial that left the basis is pinned at zero for good
            for row in tableau:
                row.pop(leaving, None)
            red.pop(leaving, None)
            at_upper.discard(leaving)

    x = [Fraction(0)] * n
    for j in at_upper:
        if j < n:
            x[j] = Fraction(col_ub[j])
    for i, b in enumerate(basis):
        if b < n:
            v = mpq(beta[i])
            x[b] = Fraction(int(v.numerator), int(v.denominator))
    return x
