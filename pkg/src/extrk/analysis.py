"""Order analysis of Runge-Kutta tableaux through B-series.

Conventions:

* Symplecticity conditions are indexed by the total order ``|u| + |v|`` of
  an unordered tree pair; "pseudosymplectic of order k" means every pair
  with total order at most k has zero residual.
* The census also reports an order-1 entry: the consistency condition
  ``Phi(•) = 1``.  It carries no symplecticity information and does not
  affect the pseudosymplectic order; it is listed so the census lines up
  with the customary per-order tabulation (1, 1, 1, 3, 6, 16, ...).
* Pseudosymmetry is read off the composed tableau for ``phi_h o phi_{-h}``,
  whose elementary weights must vanish on every tree up to the order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Iterator

from .exactnum import is_exact, normalize
from .tableau import ButcherTableau, m_matrix
from .trees import ElementaryWeights, RootedTree, butcher_product, enumerate_trees, MAX_ORDER

__all__ = [
    "OrderCapError",
    "OrderResult",
    "CensusRow",
    "PseudosymplecticResult",
    "OrderReport",
    "classical_order",
    "symplecticity_residual",
    "symplectic_pairs",
    "pseudosymplectic_order",
    "compose",
    "pseudosymmetry_order",
    "error_constants",
    "is_symplectic",
    "is_self_adjoint",
    "analyze",
    "FLOAT_TOLERANCE",
]

INF = math.inf
FLOAT_TOLERANCE = 1e-30
PAIR_CAP = 11


class OrderCapError(ValueError):
    """Requested order exceeds what the tree tables support."""


def _zero_test(tab: ButcherTableau, tol):
    if tab.is_exact():
        return lambda x: x == 0
    tol = FLOAT_TOLERANCE if tol is None else tol
    return lambda x: abs(x) <= tol


@dataclass
class OrderResult:
    order: float
    residuals: list = field(default_factory=list)


def classical_order(tab: ButcherTableau, p_max: int = 10, *, tol=None,
                    weights: ElementaryWeights | None = None) -> OrderResult:
    """Largest ``p <= p_max`` with ``Phi(t) = 1/gamma(t)`` for all ``|t| <= p``.

    ``residuals`` lists ``(t, Phi(t) - 1/gamma(t))`` for the failing trees of
    the first failing order.
    """
    if p_max > MAX_ORDER:
        raise OrderCapError(f"p_max {p_max} exceeds {MAX_ORDER}")
    is_zero = _zero_test(tab, tol)
    phi = weights or ElementaryWeights(tab)
    table = enumerate_trees(max(p_max, 1))
    for n in range(1, p_max + 1):
        bad = []
        for t in table.by_order[n]:
            r = normalize(phi(t) - Fraction(1, t.density))
            if not is_zero(r):
                bad.append((t, r))
        if bad:
            return OrderResult(n - 1, bad)
    return OrderResult(p_max, [])


def symplecticity_residual(tab: ButcherTableau, u: RootedTree, v: RootedTree, *,
                           weights: ElementaryWeights | None = None):
    """``Phi(u) Phi(v) - Phi(u∘v) - Phi(v∘u)``."""
    phi = weights or ElementaryWeights(tab)
    return normalize(phi(u) * phi(v) - phi(butcher_product(u, v)) - phi(butcher_product(v, u)))


def symplectic_pairs(total: int) -> Iterator[tuple[RootedTree, RootedTree]]:
    """Unordered tree pairs ``(u, v)`` with ``|u| + |v| == total``."""
    table = enumerate_trees(max(total - 1, 1))
    for nu in range(1, total // 2 + 1):
        nv = total - nu
        if nu < nv:
            for u in table.by_order[nu]:
                for v in table.by_order[nv]:
                    yield u, v
        else:
            yield from combinations_with_replacement(table.by_order[nu], 2)


@dataclass
class CensusRow:
    order: int
    conditions: int
    satisfied: int

    def as_tuple(self):
        return (self.order, self.conditions, self.satisfied)


@dataclass
class PseudosymplecticResult:
    order: float
    census: list[CensusRow]
    violations: list = field(default_factory=list)


def is_symplectic(tab: ButcherTableau, *, tol=None) -> bool:
    is_zero = _zero_test(tab, tol)
    return all(is_zero(x) for row in m_matrix(tab.A, tab.b) for x in row)


def pseudosymplectic_order(tab: ButcherTableau, k_max: int = 10, *, tol=None,
                           weights: ElementaryWeights | None = None,
                           full_census: bool = False) -> PseudosymplecticResult:
    """Pseudosymplecticity order with a per-order condition census.

    A tableau with ``M = 0`` is reported with order ``inf``.  Otherwise the
    search stops at the first total order with a nonzero residual; with
    ``full_census`` it keeps counting through ``k_max`` past a failure.
    Passing every total up to ``k_max`` reports ``k_max``.
    """
    if k_max > PAIR_CAP:
        raise OrderCapError(f"k_max {k_max} exceeds {PAIR_CAP}")
    is_zero = _zero_test(tab, tol)
    phi = weights or ElementaryWeights(tab)
    consistent = is_zero(normalize(_bsum(tab) - 1))
    census = [CensusRow(1, 1, int(consistent))]
    if is_symplectic(tab, tol=tol) and not full_census:
        return PseudosymplecticResult(INF, census)
    order = None
    violations = []
    for n in range(2, k_max + 1):
        rows = 0
        ok = 0
        for u, v in symplectic_pairs(n):
            rows += 1
            r = symplecticity_residual(tab, u, v, weights=phi)
            if is_zero(r):
                ok += 1
            elif order is None:
                violations.append(((u, v), r))
        census.append(CensusRow(n, rows, ok))
        if ok < rows and order is None:
            order = n - 1
            if not full_census:
                break
    if order is None:
        order = INF if is_symplectic(tab, tol=tol) else k_max
    return PseudosymplecticResult(order, census, violations)


def _bsum(tab):
    acc = Fraction(0)
    for x in tab.b:
        acc = acc + x
    return acc


def compose(tab1: ButcherTableau | None, r1, tab2: ButcherTableau | None, r2) -> ButcherTableau:
    """Tableau of ``tab1`` with step ``r1*h`` followed by ``tab2`` with step ``r2*h``.

    ``None`` stands for the identity map (zero stages).
    """
    A1 = tab1.A if tab1 is not None else ()
    b1 = tab1.b if tab1 is not None else ()
    A2 = tab2.A if tab2 is not None else ()
    b2 = tab2.b if tab2 is not None else ()
    m1, m2 = len(b1), len(b2)
    zero = Fraction(0)
    rows = [[r1 * a for a in row] + [zero] * m2 for row in A1]
    rows += [[r1 * x for x in b1] + [r2 * a for a in row] for row in A2]
    b = [r1 * x for x in b1] + [r2 * x for x in b2]
    if not b:
        raise ValueError("composition of two identity maps has no stages")
    return ButcherTableau(rows, b, meta={"construction": "composition"})


def is_self_adjoint(tab: ButcherTableau) -> bool:
    """Exact symmetry relation ``P A P = 1 b^T - A``, ``P b = b`` (P reverses stages)."""
    m = tab.m
    A, b = tab.A, tab.b
    if any(b[i] != b[m - 1 - i] for i in range(m)):
        return False
    return all(
        normalize(A[m - 1 - i][m - 1 - j]) == normalize(b[j] - A[i][j])
        for i in range(m) for j in range(m)
    )


def pseudosymmetry_order(tab: ButcherTableau, k_max: int = 10, *, tol=None) -> OrderResult:
    """Largest ``k <= k_max`` with ``phi_h o phi_{-h} = id + O(h^{k+1})``.

    Exactly self-adjoint tableaux report ``inf``.  ``residuals`` holds the
    nonzero weights of the composed map at the first failing order.
    """
    if k_max > PAIR_CAP:
        raise OrderCapError(f"k_max {k_max} exceeds {PAIR_CAP}")
    if tab.is_exact() and is_self_adjoint(tab):
        return OrderResult(INF, [])
    comp = compose(tab, -1, tab, 1)
    is_zero = _zero_test(comp, tol)
    phi = ElementaryWeights(comp)
    table = enumerate_trees(k_max)
    for n in range(1, k_max + 1):
        bad = [(t, phi(t)) for t in table.by_order[n] if not is_zero(phi(t))]
        if bad:
            return OrderResult(n - 1, bad)
    return OrderResult(k_max, [])


def error_constants(tab: ButcherTableau, q: int, *,
                    weights: ElementaryWeights | None = None) -> list:
    """``(t, Phi(t) - 1/gamma(t))`` for every tree of order exactly ``q``."""
    if q > MAX_ORDER:
        raise OrderCapError(f"q {q} exceeds {MAX_ORDER}")
    phi = weights or ElementaryWeights(tab)
    return [(t, normalize(phi(t) - Fraction(1, t.density))) for t in enumerate_trees(q).by_order[q]]


@dataclass
class OrderReport:
    classical_order: float
    pseudosymplectic_order: float
    pseudosymmetry_order: float
    violated_conditions: list
    census: list[CensusRow]
    symplectic: bool

    def to_json(self) -> dict:
        from .exactnum import scalar_to_json

        def num(x):
            return "inf" if x == INF else int(x)

        viol = []
        for kind, key, r in self.violated_conditions:
            if kind == "pair":
                label = [str(key[0]), str(key[1])]
            else:
                label = str(key)
            viol.append({"kind": kind, "trees": label, "residual": scalar_to_json(r)})
        return {
            "classical_order": num(self.classical_order),
            "pseudosymplectic_order": num(self.pseudosymplectic_order),
            "pseudosymmetry_order": num(self.pseudosymmetry_order),
            "symplectic": self.symplectic,
            "census": [{"order": c.order, "conditions": c.conditions, "satisfied": c.satisfied}
                       for c in self.census],
            "violated_conditions": viol,
        }


def analyze(tab: ButcherTableau, max_order: int = 10, *, tol=None) -> OrderReport:
    """Full classification of ``tab`` up to ``max_order``."""
    phi = ElementaryWeights(tab)
    co = classical_order(tab, min(max_order, MAX_ORDER), tol=tol, weights=phi)
    ps = pseudosymplectic_order(tab, min(max_order, PAIR_CAP), tol=tol, weights=phi)
    sy = pseudosymmetry_order(tab, min(max_order, PAIR_CAP), tol=tol)
    viol = [("order", t, r) for t, r in co.residuals]
    viol += [("pair", pair, r) for pair, r in ps.violations]
    viol += [("symmetry", t, r) for t, r in sy.residuals]
    return OrderReport(co.order, ps.order, sy.order, viol, ps.census, is_symplectic(tab, tol=tol))
