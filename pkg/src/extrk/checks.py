"""Reproduction suite for the published fixtures and claims.

Each check returns a :class:`CheckResult`; exact checks compare entrywise
with zero tolerance, numerical checks fit exponents and compare against a
tolerance band.
"""

from __future__ import annotations

import random
import time
import warnings
from dataclasses import dataclass, field
from fractions import Fraction as F
from typing import Callable

from .analysis import classical_order, is_symplectic, pseudosymmetry_order, pseudosymplectic_order
from .exactnum import composition_alphas, normalize
from .tableau import (
    ButcherTableau,
    m_matrix,
    midpoint_projection_tableau,
    merged_substeps,
    monoimplicit_tableau,
    quadratic_preservation_check,
    symmetric_projection_extended,
    symmetric_projection_tableau,
)

__all__ = ["CheckResult", "Check", "CHECKS", "run_checks", "FIXTURES"]

HALF, QUARTER = F(1, 2), F(1, 4)

FIXTURES = {
    "midpoint_s1": (
        [[0, 0, 0], [HALF, 0, 0], [0, 1, 0]],
        [QUARTER, HALF, QUARTER],
    ),
    "symmetric_leapfrog_A": [[0, 0, 0, -1], [HALF, 0, 0, 1], [0, 1, 0, -1], [0, 0, 0, 0]],
    "symmetric_leapfrog_b": [QUARTER, HALF, QUARTER, 0],
    "symmetric_leapfrog_d": [[-HALF, 1, -HALF, -4]],
    "symmetric_leapfrog_V": [[2, -1, -8], [1, 0, 0], [0, 1, 0], [0, 0, 1]],
    "symmetric_leapfrog_M": [[F(x, 16) for x in row] for row in
                             [[1, -2, 1, 4], [-2, 4, -2, -8], [1, -2, 1, 4], [4, -8, 4, 0]]],
    "monoimplicit_leapfrog": (
        [[F(1, 8), F(-1, 4), F(1, 8)], [F(3, 8), F(1, 4), F(-1, 8)], [F(1, 8), F(3, 4), F(1, 8)]],
        [QUARTER, HALF, QUARTER],
    ),
    "s1_census": [(1, 1, 1), (2, 1, 1), (3, 1, 1), (4, 3, 3), (5, 6, 6), (6, 16, 13)],
}


@dataclass
class CheckResult:
    name: str
    kind: str
    passed: bool
    residual: float | None = None
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def to_json(self) -> dict:
        return {"name": self.name, "kind": self.kind, "passed": self.passed,
                "residual": self.residual, "detail": self.detail,
                "seconds": round(self.seconds, 3)}


@dataclass
class Check:
    name: str
    kind: str
    run: Callable[[dict], tuple[bool, float | None, dict]]


def _max_diff(got, want) -> float:
    """Largest entrywise ``|got - want|`` over nested sequences (inf on shape mismatch)."""
    if isinstance(want, (list, tuple)):
        if not isinstance(got, (list, tuple)) or len(got) != len(want):
            return float("inf")
        return max((_max_diff(g, w) for g, w in zip(got, want)), default=0.0)
    return abs(float(normalize(got - want)))


def _perturbed(tab: ButcherTableau, eps) -> ButcherTableau:
    if not eps:
        return tab
    A = [list(row) for row in tab.A]
    A[0][0] = normalize(A[0][0] + eps)
    return ButcherTableau(A, tab.b, meta=tab.meta)


# exact checks ---------------------------------------------------------------

def _c1(opts):
    tab = midpoint_projection_tableau([1])
    A, b = FIXTURES["midpoint_s1"]
    r = max(_max_diff(tab.A, A), _max_diff(tab.b, b))
    return r == 0, r, {"stages": tab.m}


def _s3_expected(a1, a2, a3):
    z = 0
    rows = [
        [z] * 7,
        [a1 / 2] + [z] * 6,
        [z, a1] + [z] * 5,
        [a1 / 2, z, (a1 + a2) / 2] + [z] * 4,
        [z, a1, z, a2] + [z] * 3,
        [a1 / 2, z, (a1 + a2) / 2, z, (a2 + a3) / 2, z, z],
        [z, a1, z, a2, z, a3, z],
    ]
    b = [a1 / 4, a1 / 2, (a1 + a2) / 4, a2 / 2, (a2 + a3) / 4, a3 / 2, a3 / 4]
    return rows, b


def _c2(opts):
    # entries are linear in alpha, so agreement on a basis proves the pattern
    samples = [(1, 0, 0), (0, 1, 0), (0, 0, 1), (F(2, 7), F(-3, 5), F(46, 35))]
    worst = 0.0
    for al in samples:
        al = [F(x) for x in al]
        tab = midpoint_projection_tableau(al)
        A, b = _s3_expected(*al)
        worst = max(worst, _max_diff(tab.A, A), _max_diff(tab.b, b))
    orders = {}
    for scheme in ("triplejump4", "suzuki4"):
        tab = midpoint_projection_tableau(composition_alphas(scheme))
        orders[scheme] = {"stages": tab.m, "classical_order": classical_order(tab, 5).order}
    ok = worst == 0 and all(v["classical_order"] == 4 for v in orders.values())
    ok = ok and orders["suzuki4"]["stages"] == 11 and orders["triplejump4"]["stages"] == 7
    return ok, worst, orders


def _c3(opts):
    tab = midpoint_projection_tableau([1])
    ps = pseudosymplectic_order(tab, 6, full_census=True)
    sy = pseudosymmetry_order(tab, 6)
    census = [c.as_tuple() for c in ps.census]
    ok = census == FIXTURES["s1_census"] and ps.order == 5 and sy.order == 5
    viol = [[str(u), str(v), str(r)] for (u, v), r in ps.violations]
    return ok, None, {"census": census, "pseudosymplectic_order": ps.order,
                      "pseudosymmetry_order": sy.order, "violations": viol}


def _c4(opts):
    detail = {}
    ok = True
    for scheme in ("triplejump4", "suzuki4"):
        tab = midpoint_projection_tableau(composition_alphas(scheme))
        ps = pseudosymplectic_order(tab, 10)
        sy = pseudosymmetry_order(tab, 10)
        detail[scheme] = {"pseudosymplectic_order": ps.order, "pseudosymmetry_order": sy.order}
        ok = ok and ps.order == 9 and sy.order == 9
    return ok, None, detail


def _c5(opts):
    ext = symmetric_projection_extended([HALF, 1, HALF])
    qc = quadratic_preservation_check(ext)
    elim = _perturbed(symmetric_projection_tableau([HALF, 1, HALF]), opts.get("perturb"))
    A, b = FIXTURES["monoimplicit_leapfrog"]
    diffs = {
        "A": _max_diff(ext.square_a(), FIXTURES["symmetric_leapfrog_A"]),
        "b": _max_diff(list(ext.b), FIXTURES["symmetric_leapfrog_b"]),
        "d": _max_diff([list(r) for r in ext.d], FIXTURES["symmetric_leapfrog_d"]),
        "V": _max_diff([list(r) for r in qc.V], FIXTURES["symmetric_leapfrog_V"]),
        "M": _max_diff([list(r) for r in qc.M], FIXTURES["symmetric_leapfrog_M"]),
        "VtMV": _max_diff([list(r) for r in qc.VtMV], [[0] * 3] * 3),
        "eliminated_A": _max_diff(elim.A, A),
        "eliminated_b": _max_diff(elim.b, b),
        "eliminated_M": _max_diff(m_matrix(elim.A, elim.b), [[0] * 3] * 3),
    }
    symplectic = is_symplectic(elim)
    r = max(diffs.values())
    return r == 0 and symplectic and qc.preserving, r, {"residuals": diffs, "is_symplectic": symplectic}


def _random_alternating(rng: random.Random, n: int) -> list:
    vals = [F(rng.randint(-9, 9), rng.randint(1, 9)) for _ in range(n)]
    for start in (0, 1):
        idx = list(range(start, n, 2))
        vals[idx[-1]] = 1 - sum(vals[i] for i in idx[:-1])
    return vals


def _c6(opts):
    rng = random.Random(opts.get("seed", 20240611))
    worst = 0.0
    tried = []
    for n in (3, 5, 7):
        for _ in range(5):
            a = _random_alternating(rng, n)
            tab = monoimplicit_tableau(a)
            worst = max(worst, _max_diff(m_matrix(tab.A, tab.b), [[0] * n] * n))
            tried.append([str(x) for x in a])
    order4 = classical_order(monoimplicit_tableau(merged_substeps(composition_alphas("triplejump4"))), 5).order
    return worst == 0 and order4 == 4, worst, {"samples": len(tried), "triplejump4_classical_order": order4}


# numerical checks -------------------------------------------------------------

def _drift(scheme, h_list, T, bits, lo, hi):
    from .integrate import MidpointProjection, drift_fit, get_problem
    p = get_problem("nonseparable")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fit = drift_fit(MidpointProjection(composition_alphas(scheme)), p, p.z0, h_list, T, bits)
    ok = fit.slope is not None and lo <= fit.slope <= hi
    return ok, fit.slope, {"h": fit.h, "rates": fit.rates, "below_floor": fit.below_floor,
                           "precision_bits": bits or 53, "T": T}


def _c8a(opts):
    return _drift("leapfrog2", [0.2, 0.14, 0.1, 0.07], 1e4, None, 4.4, 5.6)


def _c8b(opts):
    return _drift("triplejump4", [0.3, 0.25, 0.2, 0.15], 1e4, 128, 8.2, 9.8)


def _defects(scheme, h_list, bits, target):
    from .integrate import MidpointProjection, defect_scan, get_problem
    p = get_problem("nonseparable")
    mp = MidpointProjection(composition_alphas(scheme))
    detail = {}
    ok = True
    for measure in ("symplectic", "symmetry"):
        scan = defect_scan(measure, mp, p, p.z0, h_list, bits)
        detail[measure] = {"defects": scan.defects, "slope": scan.slope}
        ok = ok and abs(scan.slope - target) <= 0.5
    worst = max(abs(d["slope"] - target) for d in detail.values())
    return ok, worst, {"h": list(h_list), **detail}


def _c9a(opts):
    return _defects("leapfrog2", [0.4, 0.2, 0.1, 0.05], None, 6)


def _c9b(opts):
    return _defects("triplejump4", [0.2, 0.1, 0.05, 0.025], 128, 10)


def _c9c(opts):
    return _defects("suzuki4", [0.2, 0.1, 0.05, 0.025], 128, 10)


CHECKS = [
    Check("midpoint_s1_tableau", "exact", _c1),
    Check("midpoint_s3_pattern_and_order4", "exact", _c2),
    Check("s1_census_and_orders", "exact", _c3),
    Check("order4_pseudosymplectic_pseudosymmetric_9", "exact", _c4),
    Check("symmetric_leapfrog_fixtures", "exact", _c5),
    Check("monoimplicit_symplectic_random", "exact", _c6),
    Check("drift_slope_s1", "numeric", _c8a),
    Check("drift_slope_triplejump4", "numeric", _c8b),
    Check("defect_slopes_s1", "numeric", _c9a),
    Check("defect_slopes_triplejump4", "numeric", _c9b),
    Check("defect_slopes_suzuki4", "numeric", _c9c),
]


def run_checks(skip_numeric: bool = False, perturb=None, only: list[str] | None = None,
               progress: Callable[[CheckResult], None] | None = None) -> list[CheckResult]:
    """Run the suite; ``perturb`` shifts one entry of the symplectic fixture."""
    opts = {"perturb": F(str(perturb)) if perturb else None}
    out = []
    for chk in CHECKS:
        if skip_numeric and chk.kind == "numeric":
            continue
        if only and chk.name not in only:
            continue
        t0 = time.perf_counter()
        ok, resid, detail = chk.run(opts)
        res = CheckResult(chk.name, chk.kind, bool(ok),
                          None if resid is None else float(resid), _jsonable(detail),
                          time.perf_counter() - t0)
        out.append(res)
        if progress:
            progress(res)
    return out


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, bool) or x is None or isinstance(x, (int, str)):
        return x
    if isinstance(x, float):
        return "inf" if x == float("inf") else x
    return str(x) if isinstance(x, F) else float(x)
