"""Runge-Kutta tableaux equivalent to extended phase space integrators.

The duplicated system ``z' = f(zh), zh' = f(z)`` is integrated by an
alternating chain of substeps: odd substeps advance the z-chain with
``f`` evaluated on the zh-chain, even substeps advance the zh-chain with
``f`` evaluated on the z-chain.  Both chains are tracked symbolically as
``z0 + h * (weights @ k)``; every substep adds one stage whose row is the
weight vector of the chain being evaluated.  The midpoint and symmetric
projection tableaux are both read off this bookkeeping.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

from .exactnum import (
    as_scalar,
    format_scalar,
    is_exact,
    normalize,
    nullspace,
    rank,
    scalar_from_json,
    scalar_to_json,
    solve,
    to_float,
)

__all__ = [
    "ConsistencyError",
    "SingularConstraintError",
    "NotMonoimplicitError",
    "ButcherTableau",
    "ExtendedTableau",
    "MonoimplicitForm",
    "QuadraticCheck",
    "merged_substeps",
    "midpoint_projection_tableau",
    "symmetric_projection_extended",
    "symmetric_projection_tableau",
    "monoimplicit_tableau",
    "eliminate_constraints",
    "m_matrix",
    "quadratic_preservation_check",
    "monoimplicit_decompose",
    "explicit_euler",
]

ZERO = Fraction(0)
ONE = Fraction(1)


class ConsistencyError(ValueError):
    """Composition coefficients do not sum as required."""


class SingularConstraintError(ValueError):
    """The constraint rows do not determine the extra slopes."""


class NotMonoimplicitError(ValueError):
    """No strictly-lower plus rank-one splitting of A exists."""


def _matrix(rows) -> tuple[tuple, ...]:
    return tuple(tuple(normalize(as_scalar(x)) for x in row) for row in rows)


def _vector(vals) -> tuple:
    return tuple(normalize(as_scalar(x)) for x in vals)


def _sum(vals):
    acc = ZERO
    for v in vals:
        acc = acc + v
    return normalize(acc)


@dataclass(frozen=True, eq=False)
class ButcherTableau:
    """Square Runge-Kutta tableau; ``c`` is always the row sums of ``A``."""

    A: tuple[tuple, ...]
    b: tuple
    c: tuple = field(default=None)
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        A = _matrix(self.A)
        b = _vector(self.b)
        m = len(b)
        if m < 1:
            raise ValueError("a tableau needs at least one stage")
        if len(A) != m or any(len(row) != m for row in A):
            raise ValueError(f"A must be {m}x{m} to match b")
        c = tuple(_sum(row) for row in A)
        if self.c is not None and _vector(self.c) != c:
            raise ValueError("c must equal the row sums of A")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "meta", dict(self.meta))

    @property
    def m(self) -> int:
        return len(self.b)

    def __eq__(self, other):
        if not isinstance(other, ButcherTableau):
            return NotImplemented
        return self.A == other.A and self.b == other.b

    def is_explicit(self) -> bool:
        return all(self.A[i][j] == 0 for i in range(self.m) for j in range(i, self.m))

    def is_exact(self) -> bool:
        return all(is_exact(x) for row in self.A for x in row) and all(is_exact(x) for x in self.b)

    def to_float(self, bits: int = 53) -> "ButcherTableau":
        return ButcherTableau(
            [[to_float(x, bits) for x in row] for row in self.A],
            [to_float(x, bits) for x in self.b],
            meta=self.meta,
        )

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "A": [[scalar_to_json(x) for x in row] for row in self.A],
            "b": [scalar_to_json(x) for x in self.b],
            "c": [scalar_to_json(x) for x in self.c],
            "meta": _meta_json(self.meta),
        }

    @classmethod
    def from_json(cls, obj: dict | str) -> "ButcherTableau":
        if isinstance(obj, str):
            obj = json.loads(obj)
        tab = cls(
            [[scalar_from_json(x) for x in row] for row in obj["A"]],
            [scalar_from_json(x) for x in obj["b"]],
            [scalar_from_json(x) for x in obj["c"]] if "c" in obj else None,
            meta=_meta_from_json(obj.get("meta", {})),
        )
        if "m" in obj and int(obj["m"]) != tab.m:
            raise ValueError("stage count m does not match the arrays")
        return tab

    def pretty(self, digits: int = 10) -> str:
        """Aligned tableau with decimal entries."""
        cells = [[format_scalar(ci, digits)] + [format_scalar(a, digits) for a in row]
                 for ci, row in zip(self.c, self.A)]
        cells.append([""] + [format_scalar(x, digits) for x in self.b])
        width = max(len(x) for row in cells for x in row)
        lines = []
        for k, row in enumerate(cells):
            if k == len(cells) - 1:
                lines.append("-" * (width + 1) + "+" + "-" * ((width + 2) * self.m))
            lines.append(row[0].rjust(width) + " | " + "  ".join(x.rjust(width) for x in row[1:]))
        return "\n".join(lines)

    def __repr__(self):
        return f"ButcherTableau(m={self.m}, meta={self.meta})"


def _meta_json(meta: dict) -> dict:
    out = {}
    for key, val in meta.items():
        if key == "alphas":
            out[key] = [scalar_to_json(x) for x in val]
        else:
            out[key] = val
    return out


def _meta_from_json(meta: dict) -> dict:
    out = dict(meta)
    if "alphas" in out:
        out["alphas"] = [scalar_from_json(x) for x in out["alphas"]]
    return out


def explicit_euler() -> ButcherTableau:
    return ButcherTableau([[0]], [1], meta={"construction": "euler"})


@dataclass(frozen=True, eq=False)
class ExtendedTableau:
    """Stage rows ``a`` (s x m), weights ``b`` (m) and constraints ``d`` ((m-s) x m)."""

    a: tuple[tuple, ...]
    b: tuple
    d: tuple[tuple, ...]
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        a, b, d = _matrix(self.a), _vector(self.b), _matrix(self.d)
        m, s = len(b), len(a)
        if any(len(row) != m for row in a):
            raise ValueError("stage rows must have m entries")
        if len(d) != m - s or any(len(row) != m for row in d):
            raise ValueError(f"d must be {m - s}x{m}")
        if d and rank(d) != m - s:
            raise ValueError("constraint matrix d must have full rank")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "meta", dict(self.meta))

    @property
    def s(self) -> int:
        return len(self.a)

    @property
    def m(self) -> int:
        return len(self.b)

    def square_a(self) -> tuple[tuple, ...]:
        """``a`` padded with zero rows to m x m (a_ij = 0 for i > s)."""
        return self.a + tuple((ZERO,) * self.m for _ in range(self.m - self.s))

    def to_json(self) -> dict:
        return {
            "s": self.s,
            "m": self.m,
            "a": [[scalar_to_json(x) for x in row] for row in self.a],
            "b": [scalar_to_json(x) for x in self.b],
            "d": [[scalar_to_json(x) for x in row] for row in self.d],
            "meta": _meta_json(self.meta),
        }


@dataclass(frozen=True)
class MonoimplicitForm:
    """``A = L + uv^T/4`` with ``L`` strictly lower triangular."""

    L: tuple[tuple, ...]
    u: tuple
    v: tuple
    b: tuple

    def matrix(self) -> tuple[tuple, ...]:
        m = len(self.u)
        return tuple(
            tuple(normalize(self.L[i][j] + self.u[i] * self.v[j] / 4) for j in range(m))
            for i in range(m)
        )


def _check_sum(vals, target, what: str):
    if _sum(vals) != target:
        raise ConsistencyError(f"{what} sum to {_sum(vals)}, expected {target}")


def _check_alternating(a: Sequence):
    if len(a) < 2:
        raise ConsistencyError("at least two substeps are needed")
    _check_sum(a[0::2], ONE, "odd-indexed substeps")
    _check_sum(a[1::2], ONE, "even-indexed substeps")


def merged_substeps(alphas: Sequence) -> list:
    """Alternating substeps of the leapfrog composition with merged half steps.

    ``(a1, ..., as)`` gives ``(a1/2, a1, (a1+a2)/2, a2, ..., as/2)``.
    """
    alphas = _vector(alphas)
    out = [alphas[0] / 2]
    for i, al in enumerate(alphas):
        out.append(al)
        nxt = alphas[i + 1] if i + 1 < len(alphas) else ZERO
        out.append((al + nxt) / 2)
    return [normalize(x) for x in out]


def _propagate(substeps: Sequence, shift: bool):
    """Symbolic run of the alternating chain.

    Returns stage rows, final z-chain and zh-chain weights.  With ``shift``
    an extra slope column ``k_{n+1} = mu/h`` carries the +/- mu offsets.
    """
    n = len(substeps)
    m = n + 1 if shift else n
    wz = [ZERO] * m
    wh = [ZERO] * m
    if shift:
        wz[n], wh[n] = ONE, -ONE
    rows = []
    for i, a in enumerate(substeps):
        if i % 2 == 0:
            rows.append(list(wh))
            wz[i] = normalize(wz[i] + a)
        else:
            rows.append(list(wz))
            wh[i] = normalize(wh[i] + a)
    return rows, wz, wh


def midpoint_projection_tableau(alphas: Sequence) -> ButcherTableau:
    """Explicit (2s+1)-stage tableau of the midpoint-projected composition."""
    alphas = _vector(alphas)
    _check_sum(alphas, ONE, "composition coefficients")
    rows, wz, wh = _propagate(merged_substeps(alphas), shift=False)
    b = [normalize((x + y) / 2) for x, y in zip(wz, wh)]
    return ButcherTableau(rows, b, meta={"construction": "midpoint", "alphas": list(alphas)})


def symmetric_projection_extended(substeps: Sequence) -> ExtendedTableau:
    """Extended RK form of the symmetric projection method.

    ``substeps`` alternate, the first acting on the z-chain.  The extra slope
    is ``mu/h``; the constraint row is (zh-chain end - mu) - (z-chain end + mu).
    """
    substeps = _vector(substeps)
    _check_alternating(substeps)
    n = len(substeps)
    rows, wz, wh = _propagate(substeps, shift=True)
    d = [normalize(y - x) for x, y in zip(wz, wh)]
    d[n] = normalize(d[n] - 2)
    b = [normalize((x + y) / 2) for x, y in zip(wz, wh)]
    return ExtendedTableau(rows, b, [d], meta={"construction": "symmetric", "alphas": list(substeps)})


def monoimplicit_tableau(substeps: Sequence) -> ButcherTableau:
    """Closed-form s-stage monoimplicit symplectic tableau ``L + uv^T/4``."""
    a = _vector(substeps)
    _check_alternating(a)
    s = len(a)
    # 1-based: u_i = (-1)^i, v_j = a_j (-1)^j, L_ij = a_j for j < i, i - j odd
    u = [ONE if i % 2 == 0 else -ONE for i in range(1, s + 1)]
    v = [a[j - 1] if j % 2 == 0 else -a[j - 1] for j in range(1, s + 1)]
    L = [[a[j] if j < i and (i - j) % 2 == 1 else ZERO for j in range(s)] for i in range(s)]
    form = MonoimplicitForm(_matrix(L), tuple(u), _vector(v), tuple(normalize(x / 2) for x in a))
    return ButcherTableau(form.matrix(), form.b,
                          meta={"construction": "monoimplicit", "alphas": list(a)})


def symmetric_projection_tableau(substeps: Sequence) -> ButcherTableau:
    """Symmetric projection method as a square tableau (constraint eliminated)."""
    return eliminate_constraints(symmetric_projection_extended(substeps))


def eliminate_constraints(ext: ExtendedTableau) -> ButcherTableau:
    """Solve the constraints for the extra slopes and substitute them back."""
    s, m = ext.s, ext.m
    extra = m - s
    if extra == 0:
        return ButcherTableau(ext.a, ext.b, meta=ext.meta)
    d_extra = [list(row[s:]) for row in ext.d]
    if rank(d_extra) != extra:
        raise SingularConstraintError("constraint block on the extra slopes is singular")
    # k_extra = X @ k_stages with X = -inv(d_extra) @ d_stages
    cols = []
    for j in range(s):
        cols.append(solve(d_extra, [-row[j] for row in ext.d]))
    X = [[cols[j][r] for j in range(s)] for r in range(extra)]

    def fold(row):
        return [normalize(row[j] + _sum(row[s + r] * X[r][j] for r in range(extra)))
                for j in range(s)]

    meta = dict(ext.meta)
    return ButcherTableau([fold(row) for row in ext.a], fold(ext.b), meta=meta)


def m_matrix(A: Sequence[Sequence], b: Sequence) -> tuple[tuple, ...]:
    """``M_ij = b_i b_j - b_i a_ij - b_j a_ji``; missing rows of A count as zero."""
    b = _vector(b)
    m = len(b)
    rows = [list(r) for r in _matrix(A)]
    rows += [[ZERO] * m for _ in range(m - len(rows))]
    return tuple(
        tuple(normalize(b[i] * b[j] - b[i] * rows[i][j] - b[j] * rows[j][i]) for j in range(m))
        for i in range(m)
    )


@dataclass(frozen=True)
class QuadraticCheck:
    preserving: bool
    b_extra_zero: bool
    V: tuple[tuple, ...]
    VtMV: tuple[tuple, ...]
    M: tuple[tuple, ...]

    def __bool__(self):
        return self.preserving


def quadratic_preservation_check(ext: ExtendedTableau) -> QuadraticCheck:
    """Sufficient condition for quadratic invariants and symplecticity.

    ``V`` (m x s) has the nullspace basis of ``d`` as its columns.
    """
    M = m_matrix(ext.square_a(), ext.b)
    basis = nullspace(ext.d, ext.m) if ext.d else [
        [ONE if i == j else ZERO for i in range(ext.m)] for j in range(ext.m)
    ]
    V = tuple(tuple(vec[i] for vec in basis) for i in range(ext.m))
    ncol = len(basis)
    MV = [[_sum(M[i][k] * V[k][j] for k in range(ext.m)) for j in range(ncol)] for i in range(ext.m)]
    VtMV = tuple(
        tuple(_sum(V[k][i] * MV[k][j] for k in range(ext.m)) for j in range(ncol))
        for i in range(ncol)
    )
    b_ok = all(x == 0 for x in ext.b[ext.s:])
    zero = all(x == 0 for row in VtMV for x in row)
    return QuadraticCheck(b_ok and zero, b_ok, V, VtMV, M)


def monoimplicit_decompose(tab: ButcherTableau) -> MonoimplicitForm:
    """Split ``A`` into strictly-lower ``L`` plus ``uv^T/4``.

    The rank-one part is fixed by the diagonal and upper triangle of ``A``.
    Undetermined entries are set to zero, and the first nonzero ``u_i`` is
    scaled to ``(-1)^i`` (1-based), the alternating convention of
    :func:`monoimplicit_tableau`.
    """
    A, m = tab.A, tab.m
    i0 = next((i for i in range(m) if any(A[i][j] != 0 for j in range(i, m))), None)
    if i0 is None:
        zeros = (ZERO,) * m
        return MonoimplicitForm(A, zeros, zeros, tab.b)
    sign = ONE if (i0 + 1) % 2 == 0 else -ONE
    u = [ZERO] * m
    v = [ZERO] * m
    u[i0] = sign
    for j in range(i0, m):
        v[j] = normalize(A[i0][j] / sign)
    for i in range(i0 + 1, m):
        j_ref = next((j for j in range(i, m) if v[j] != 0), None)
        if j_ref is None:
            if any(A[i][j] != 0 for j in range(i, m)):
                raise NotMonoimplicitError(f"row {i + 1} cannot be matched by a rank-one factor")
            continue
        u[i] = normalize(A[i][j_ref] / v[j_ref])
        if any(normalize(u[i] * v[j]) != A[i][j] for j in range(i, m)):
            raise NotMonoimplicitError(
                f"upper part of A is not rank one (row {i + 1}); the tableau is not monoimplicit"
            )
    v4 = tuple(normalize(4 * x) for x in v)
    L = tuple(
        tuple(normalize(A[i][j] - u[i] * v[j]) if j < i else ZERO for j in range(m))
        for i in range(m)
    )
    return MonoimplicitForm(L, tuple(u), v4, tab.b)
