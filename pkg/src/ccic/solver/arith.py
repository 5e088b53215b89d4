"""Exact linear arithmetic over the rationals and the integers.

Affine forms are ``(coeffs, const)`` pairs where ``coeffs`` maps atom keys to
numbers; a row stands for the constraint ``form = 0``.  Every derived fact
carries the combination of input rows that produces it, so callers can turn
results into checkable proof steps.
"""
from __future__ import annotations

import math
from fractions import Fraction


def add_scaled(acc: dict, form: dict, c):
    for k, v in form.items():
        w = acc.get(k, 0) + c * v
        if w:
            acc[k] = w
        else:
            acc.pop(k, None)


def integer_combo(combo: dict) -> dict:
    """Scale a rational combination to coprime integers (signs preserved)."""
    den = 1
    for v in combo.values():
        den = den * Fraction(v).denominator // math.gcd(den, Fraction(v).denominator)
    out = {k: int(Fraction(v) * den) for k, v in combo.items() if v}
    g = 0
    for v in out.values():
        g = math.gcd(g, v)
    return {k: v // g for k, v in out.items()} if g > 1 else out


class Span:
    """Incremental reduced row echelon form with provenance.

    Each stored row keeps ``(coeffs, const, combo)`` with a pivot coefficient
    of one; ``combo`` expresses it as a combination of the rows passed to
    :meth:`add`.
    """

    def __init__(self):
        self.rows = {}  # pivot -> (coeffs, const, combo)

    def reduce(self, coeffs: dict, const, combo=None):
        coeffs = {k: Fraction(v) for k, v in coeffs.items() if v}
        const = Fraction(const)
        combo = dict(combo or {})
        for p in [p for p in coeffs if p in self.rows]:
            c = coeffs.get(p, 0)
            if not c:
                continue
            rc, rk, rcombo = self.rows[p]
            add_scaled(coeffs, rc, -c)
            const -= c * rk
            add_scaled(combo, rcombo, -c)
        return coeffs, const, combo

    def add(self, coeffs: dict, const, tag):
        """Add ``form = 0``; return a combination proving ``0 = c != 0`` on inconsistency."""
        coeffs, const, combo = self.reduce(coeffs, const, {tag: Fraction(1)})
        if not coeffs:
            return combo if const else None
        pivot = min(coeffs, key=_key)
        c = coeffs[pivot]
        coeffs = {k: v / c for k, v in coeffs.items()}
        const /= c
        combo = {k: v / c for k, v in combo.items()}
        for p, (rc, rk, rcombo) in list(self.rows.items()):
            f = rc.get(pivot, 0)
            if f:
                rc = dict(rc)
                rcombo = dict(rcombo)
                add_scaled(rc, coeffs, -f)
                add_scaled(rcombo, combo, -f)
                self.rows[p] = (rc, rk - f * const, rcombo)
        self.rows[pivot] = (coeffs, const, combo)
        return None


def _key(k):
    return (type(k).__name__, k)


# ---------------------------------------------------------------------------
# phase-one simplex


def feasible_point(A, b):
    """Return ``z >= 0`` with ``A z = b`` (lists of Fractions), or None.

    Phase one of the simplex method on an exact tableau, with Bland's rule.
    """
    m = len(A)
    n = len(A[0]) if m else 0
    rows = []
    for i in range(m):
        r = [Fraction(x) for x in A[i]] + [Fraction(0)] * m + [Fraction(b[i])]
        if r[-1] < 0:
            r = [-x for x in r]
        r[n + i] = Fraction(1)
        rows.append(r)
    basis = [n + i for i in range(m)]
    width = n + m
    # objective: minimise the sum of artificials, written in terms of nonbasics
    obj = [Fraction(0)] * (width + 1)
    for r in rows:
        for j in range(width + 1):
            obj[j] -= r[j]
    for i in range(m):
        obj[n + i] += 1
    while True:
        enter = next((j for j in range(width) if obj[j] < 0), None)
        if enter is None:
            break
        best = None
        for i, r in enumerate(rows):
            if r[enter] > 0:
                ratio = r[-1] / r[enter]
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:  # cannot happen in phase one (bounded below by zero)
            break
        i = best[1]
        piv = rows[i][enter]
        rows[i] = [x / piv for x in rows[i]]
        for k in range(m):
            if k != i and rows[k][enter]:
                f = rows[k][enter]
                rows[k] = [x - f * y for x, y in zip(rows[k], rows[i])]
        if obj[enter]:
            f = obj[enter]
            obj = [x - f * y for x, y in zip(obj, rows[i])]
        basis[i] = enter
    if obj[-1] != 0:
        return None
    z = [Fraction(0)] * n
    for i, j in enumerate(basis):
        if j < n:
            z[j] = rows[i][-1]
    return z


def nonneg_solution(forms, atoms):
    """A point ``x >= 0`` satisfying every ``form = 0`` (dict atom -> value), or None."""
    A = [[Fraction(f[0].get(a, 0)) for a in atoms] for f in forms]
    b = [-Fraction(f[1]) for f in forms]
    if not forms:
        return {a: Fraction(0) for a in atoms}
    z = feasible_point(A, b)
    return None if z is None else dict(zip(atoms, z))


def farkas(forms, atoms, target=None):
    """Search multipliers ``y`` for the rows ``forms``.

    With ``target`` None, find ``y`` with every atom coefficient of
    ``sum y_i form_i`` nonnegative and constant equal to one (the rows have
    no nonnegative solution).  With an atom ``target``, require its
    coefficient to be at least one, the others nonnegative and the constant
    nonnegative (the atom is zero in every nonnegative solution).
    Returns ``{row index: Fraction}`` or None.
    """
    m = len(forms)
    if m == 0:
        return None
    # unknowns: p (m), q (m), slacks s (len(atoms) + 1); y = p - q
    cols = 2 * m + len(atoms) + 1
    A, b = [], []
    for j, a in enumerate(atoms):
        row = [Fraction(0)] * cols
        for i, (cf, _) in enumerate(forms):
            v = Fraction(cf.get(a, 0))
            row[i] = v
            row[m + i] = -v
        row[2 * m + j] = Fraction(-1)
        A.append(row)
        b.append(Fraction(1 if a == target else 0))
    row = [Fraction(0)] * cols
    for i, (_, k) in enumerate(forms):
        row[i] = Fraction(k)
        row[m + i] = -Fraction(k)
    if target is None:
        b.append(Fraction(1))
    else:
        row[-1] = Fraction(-1)
        b.append(Fraction(0))
    A.append(row)
    z = feasible_point(A, b)
    if z is None:
        return None
    y = {i: z[i] - z[m + i] for i in range(m)}
    return {i: v for i, v in y.items() if v}


# ---------------------------------------------------------------------------
# integer feasibility by diagonalisation


def diagonalize(A):
    """Return ``(U, D)`` with ``U`` unimodular and ``U A V = D`` diagonal for some unimodular ``V``.

    Only the row transform is needed by callers; the column transform is
    applied to ``D`` but not recorded.
    """
    m = len(A)
    n = len(A[0]) if m else 0
    D = [list(map(int, r)) for r in A]
    U = [[int(i == j) for j in range(m)] for i in range(m)]
    for t in range(min(m, n)):
        while True:
            cand = [(abs(D[i][j]), i, j) for i in range(t, m) for j in range(t, n) if D[i][j]]
            if not cand:
                return U, D
            _, i, j = min(cand)
            D[t], D[i] = D[i], D[t]
            U[t], U[i] = U[i], U[t]
            for r in D:
                r[t], r[j] = r[j], r[t]
            clean = True
            p = D[t][t]
            for i in range(t + 1, m):
                q = D[i][t] // p
                if q:
                    D[i] = [x - q * y for x, y in zip(D[i], D[t])]
                    U[i] = [x - q * y for x, y in zip(U[i], U[t])]
                clean &= D[i][t] == 0
            for j in range(t + 1, n):
                q = D[t][j] // p
                if q:
                    for r in D:
                        r[j] -= q * r[t]
                clean &= D[t][j] == 0
            if clean:
                break
    return U, D


def integer_clash(forms, atoms):
    """Integer multipliers refuting integrality of ``forms``, or None when solvable over Z.

    The returned ``y`` makes ``sum y_i form_i`` have atom coefficients whose
    gcd does not divide its constant.
    """
    if not forms:
        return None
    A = [[int(f[0].get(a, 0)) for a in atoms] for f in forms]
    b = [-int(f[1]) for f in forms]
    U, D = diagonalize(A) if atoms else ([[int(i == j) for j in range(len(forms))] for i in range(len(forms))], [[] for _ in forms])
    for i, u in enumerate(U):
        c = sum(x * y for x, y in zip(u, b))
        d = D[i][i] if i < len(atoms) else 0
        if (d == 0 and c != 0) or (d != 0 and c % d):
            return {k: v for k, v in enumerate(u) if v}
    return None
