"""Test problems with known invariants.

Vector fields use only arithmetic (plus :func:`jet.sqrt`), so they evaluate
in any of the supported number kinds, jets included.  States of Hamiltonian
problems are ordered ``(q, p)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .jet import sqrt
from .numeric import coerce, kind_of

__all__ = ["Problem", "builtin_problems", "get_problem", "canonical_J"]


def canonical_J(dim: int) -> np.ndarray:
    n = dim // 2
    J = np.zeros((dim, dim), dtype=int)
    J[:n, n:] = np.eye(n, dtype=int)
    J[n:, :n] = -np.eye(n, dtype=int)
    return J


_FLOATS = (float, np.float64)


def _array(items):
    if all(type(x) in _FLOATS for x in items):
        return np.array(items, dtype=float)
    out = np.empty(len(items), dtype=object)
    out[:] = items
    return out


@dataclass(frozen=True)
class Problem:
    """Autonomous ODE ``z' = f(z)`` with optional invariants.

    ``quadratic`` is a symmetric matrix ``C`` (rational entries) with
    ``z^T C z`` conserved; ``J`` is a constant skew structure preserved by
    the exact flow.
    """

    name: str
    dim: int
    f: Callable
    hamiltonian: Callable | None = None
    quadratic: np.ndarray | None = None
    J: np.ndarray | None = None
    z0: tuple = ()
    description: str = ""
    meta: dict = field(default_factory=dict)

    def quadratic_value(self, z):
        if self.quadratic is None:
            return None
        kind = kind_of(np.asarray(z))
        acc = 0
        C = self.quadratic
        for i in range(self.dim):
            for j in range(self.dim):
                if C[i][j] != 0:
                    acc = acc + coerce(C[i][j], kind) * z[i] * z[j]
        return acc

    def energy(self, z):
        return None if self.hamiltonian is None else self.hamiltonian(z)


def _harmonic_f(z):
    q, p = z
    return _array([p, -q])


def _harmonic_h(z):
    q, p = z
    return (q * q + p * p) / 2


def _nonsep_f(z):
    q, p = z
    return _array([p * (q * q + 1), -q * (p * p + 1)])


def _nonsep_h(z):
    q, p = z
    return (q * q + 1) * (p * p + 1) / 2


_OMEGA = (1, 2, 2)


def _rotation_f(z):
    x, y, w = z
    a, b, c = _OMEGA
    return _array([b * w - c * y, c * x - a * w, a * y - b * x])


def _kepler_f(z):
    q1, q2, p1, p2 = z
    r2 = q1 * q1 + q2 * q2
    r3 = r2 * sqrt(r2)
    return _array([p1, p2, -q1 / r3, -q2 / r3])


def _kepler_h(z):
    q1, q2, p1, p2 = z
    return (p1 * p1 + p2 * p2) / 2 - 1 / sqrt(q1 * q1 + q2 * q2)


def _frac_matrix(rows):
    return np.array([[Fraction(x) for x in row] for row in rows], dtype=object)


def builtin_problems() -> dict[str, Problem]:
    half = Fraction(1, 2)
    e = Fraction(1, 2)
    return {
        "harmonic": Problem(
            "harmonic", 2, _harmonic_f, _harmonic_h,
            quadratic=_frac_matrix([[1, 0], [0, 1]]), J=canonical_J(2), z0=(1.0, 0.0),
            description="H = (p^2 + q^2)/2",
        ),
        "nonseparable": Problem(
            "nonseparable", 2, _nonsep_f, _nonsep_h, J=canonical_J(2), z0=(0.5, 0.0),
            description="H = (q^2 + 1)(p^2 + 1)/2",
        ),
        "rotation": Problem(
            "rotation", 3, _rotation_f, None,
            quadratic=_frac_matrix([[1, 0, 0], [0, 1, 0], [0, 0, 1]]), z0=(1.0, 0.0, 0.0),
            description="z' = omega x z, omega = (1, 2, 2); |z|^2 conserved",
        ),
        "kepler": Problem(
            "kepler", 4, _kepler_f, _kepler_h,
            quadratic=_frac_matrix([[0, 0, 0, half], [0, 0, -half, 0],
                                    [0, -half, 0, 0], [half, 0, 0, 0]]),
            J=canonical_J(4), z0=(1 - e, 0.0, 0.0, float(((1 + e) / (1 - e)) ** 0.5)),
            description="H = |p|^2/2 - 1/|q|; angular momentum q1 p2 - q2 p1 conserved",
        ),
    }


def get_problem(name: str) -> Problem:
    probs = builtin_problems()
    if name not in probs:
        raise KeyError(f"unknown problem {name!r}; choose from {sorted(probs)}")
    return probs[name]
