"""One-step maps: tableau-driven Runge-Kutta and the direct extended-phase-space forms.

Every stepper is a callable ``stepper(f, z, h) -> z_new``; ``f`` maps a
state array to its derivative using plain arithmetic so that the same
function works for floats, ``mpfr``, exact scalars and jets.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from ..exactnum import normalize
from ..tableau import ButcherTableau, NotMonoimplicitError, merged_substeps, monoimplicit_decompose
from .numeric import SolverConfig, coerce, kind_of, solve_stages

__all__ = [
    "RKStepper",
    "MidpointProjection",
    "SymmetricProjection",
    "rk_step",
    "midpoint_ext_step",
    "symmetric_projection_step",
]


def _combo(pairs, K):
    """``sum(c * K[j])`` over the ``(j, c)`` pairs; ``None`` when empty."""
    acc = None
    for j, c in pairs:
        term = c * K[j]
        acc = term if acc is None else acc + term
    return acc


class _CoefficientCache:
    def __init__(self):
        self._cache = {}

    def get(self, kind, build):
        key = kind if isinstance(kind, str) else tuple(kind)
        val = self._cache.get(key)
        if val is None:
            val = build(kind)
            self._cache[key] = val
        return val


def _sparse_rows(rows, kind):
    return [[(j, coerce(a, kind)) for j, a in enumerate(row) if a != 0] for row in rows]


def _sparse_vec(vec, kind):
    return [(j, coerce(a, kind)) for j, a in enumerate(vec) if a != 0]


class RKStepper:
    """Runge-Kutta step for a square tableau.

    Explicit tableaux are evaluated stage by stage.  Monoimplicit tableaux
    (``A = L + uv^T/4``) iterate only on the coupling vector ``w = sum v_j k_j``
    and resolve the stages through ``L`` for each trial ``w``.  Anything else
    solves for all stage slopes at once.
    """

    def __init__(self, tab: ButcherTableau, config: SolverConfig | None = None):
        self.tableau = tab
        self.config = config or SolverConfig()
        self.form = None
        if tab.is_explicit():
            self.mode = "explicit"
        else:
            try:
                self.form = monoimplicit_decompose(tab)
                self.mode = "monoimplicit"
            except NotMonoimplicitError:
                self.mode = "implicit"
        self.last_iterations = 0
        self._coeffs = _CoefficientCache()

    def _build(self, kind):
        tab = self.tableau
        out = {"A": _sparse_rows(tab.A, kind), "b": _sparse_vec(tab.b, kind)}
        if self.form is not None:
            out["L"] = _sparse_rows(self.form.L, kind)
            out["u4"] = [coerce(normalize(x / 4), kind) for x in self.form.u]
            out["v"] = _sparse_vec(self.form.v, kind)
        return out

    def __call__(self, f: Callable, z: np.ndarray, h) -> np.ndarray:
        kind = kind_of(z)
        c = self._coeffs.get(kind, self._build)
        if self.mode == "explicit":
            K = self._explicit(f, z, h, c)
            self.last_iterations = 0
        elif self.mode == "monoimplicit":
            K = self._monoimplicit(f, z, h, c, kind)
        else:
            K = self._implicit(f, z, h, c, kind)
        incr = _combo(c["b"], K)
        return z if incr is None else z + h * incr

    @staticmethod
    def _explicit(f, z, h, c):
        K = []
        for row in c["A"]:
            incr = _combo(row, K)
            K.append(f(z if incr is None else z + h * incr))
        return K

    def _monoimplicit(self, f, z, h, c, kind):
        u4, L, v = c["u4"], c["L"], c["v"]

        def stages(w):
            K = []
            for i, row in enumerate(L):
                incr = _combo(row, K)
                if u4[i] != 0:
                    incr = u4[i] * w if incr is None else incr + u4[i] * w
                K.append(f(z if incr is None else z + h * incr))
            return K

        def residual(w):
            K = stages(w)
            vk = _combo(v, K)
            return (-w if vk is None else vk - w), K

        fz = f(z)
        vsum = sum((cv for _, cv in v), coerce(Fraction(0), kind))
        w0 = vsum * fz
        _, K, its = solve_stages(residual, w0, self.config, kind, scale=-1)
        self.last_iterations = its
        return K

    def _implicit(self, f, z, h, c, kind):
        m, d = self.tableau.m, len(z)
        A = c["A"]

        def residual(x):
            K = [x[i * d:(i + 1) * d] for i in range(m)]
            G = []
            for i, row in enumerate(A):
                incr = _combo(row, K)
                G.append(f(z if incr is None else z + h * incr) - K[i])
            return np.concatenate(G), K

        fz = f(z)
        x0 = np.concatenate([fz] * m)
        _, K, its = solve_stages(residual, x0, self.config, kind, scale=-1)
        self.last_iterations = its
        return K


def rk_step(tab: ButcherTableau, f: Callable, z: np.ndarray, h, cfg: SolverConfig | None = None):
    return RKStepper(tab, cfg)(f, z, h)


class MidpointProjection:
    """Leapfrog composition on the duplicated system, averaged at the end."""

    last_iterations = 0

    def __init__(self, alphas: Sequence):
        self.alphas = list(alphas)
        self.substeps = merged_substeps(alphas)
        self._coeffs = _CoefficientCache()

    def __call__(self, f, z, h):
        subs = self._coeffs.get(kind_of(z), lambda k: [coerce(a, k) for a in self.substeps])
        zc, zh = z, z
        for i, a in enumerate(subs):
            if i % 2 == 0:
                zc = zc + (a * h) * f(zh)
            else:
                zh = zh + (a * h) * f(zc)
        return (zc + zh) / 2


def midpoint_ext_step(alphas: Sequence, f: Callable, z: np.ndarray, h):
    return MidpointProjection(alphas)(f, z, h)


class SymmetricProjection:
    """Extended-phase-space composition with symmetric projection.

    Solves for the shift ``mu`` so that ``(z-chain end + mu)`` equals
    ``(zh-chain end - mu)``, starting from ``mu = 0``.  ``substeps`` alternate
    and the first one advances the z-chain.
    """

    def __init__(self, substeps: Sequence, config: SolverConfig | None = None):
        self.substeps = [normalize(Fraction(a) if isinstance(a, int) else a) for a in substeps]
        self.config = config or SolverConfig()
        self.last_iterations = 0
        self.last_mu_norm = 0.0
        self._coeffs = _CoefficientCache()

    @classmethod
    def from_composition(cls, alphas: Sequence, config: SolverConfig | None = None):
        return cls(merged_substeps(alphas), config)

    def __call__(self, f, z, h):
        kind = kind_of(z)
        subs = self._coeffs.get(kind, lambda k: [coerce(a, k) for a in self.substeps])

        def chains(mu):
            zc, zh = z + mu, z - mu
            for i, a in enumerate(subs):
                if i % 2 == 0:
                    zc = zc + (a * h) * f(zh)
                else:
                    zh = zh + (a * h) * f(zc)
            return zc + mu, zh - mu

        def residual(mu):
            top, bottom = chains(mu)
            return top - bottom, (top, bottom)

        mu0 = z * 0
        mu, (top, bottom), its = solve_stages(residual, mu0, self.config, kind, scale=4)
        self.last_iterations = its
        self.last_mu_norm = max((abs(float(getattr(x, "value", x))) for x in mu), default=0.0)
        return (top + bottom) / 2


def symmetric_projection_step(substeps: Sequence, f: Callable, z: np.ndarray, h,
                              cfg: SolverConfig | None = None):
    return SymmetricProjection(substeps, cfg)(f, z, h)
