"""Number-kind plumbing and the nonlinear solver shared by the steppers.

States are 1-D numpy arrays.  ``float64`` arrays run in double precision;
object arrays hold ``mpfr`` (precision from the active gmpy2 context),
exact scalars, or :class:`Jet` values over either.  Tableau coefficients
are converted once per kind and cached by the stepper.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

import gmpy2
import numpy as np

from ..exactnum import CubicNum, is_exact, to_float
from .jet import Jet, magnitude, value_of

_MPFR = type(gmpy2.mpfr(0))


class ConvergenceError(RuntimeError):
    """The stage solver did not reach its tolerance."""

    def __init__(self, message: str, residual: float, step: int | None = None):
        super().__init__(message)
        self.residual = residual
        self.step = step

    def __str__(self):
        base = super().__str__()
        if self.step is not None:
            return f"{base} (at step {self.step})"
        return base


class Strategy(str, enum.Enum):
    FIXED_POINT = "fixed_point"
    NEWTON = "newton"


class JacobianMode(str, enum.Enum):
    FORWARD_SENSITIVITY = "forward_sensitivity"
    FINITE_DIFFERENCE = "finite_difference"


@dataclass(frozen=True)
class SolverConfig:
    strategy: Strategy = Strategy.NEWTON
    tolerance: float = 1e-12
    max_iterations: int = 50
    jacobian: JacobianMode = JacobianMode.FINITE_DIFFERENCE

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        object.__setattr__(self, "jacobian", JacobianMode(self.jacobian))
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


def kind_of(z: np.ndarray):
    """``"float"``, ``("mpfr", bits)`` or ``"exact"`` for a state array."""
    if z.dtype != object:
        return "float"
    e = value_of(z.flat[0]) if z.size else 0.0
    if isinstance(e, _MPFR):
        return ("mpfr", gmpy2.get_context().precision)
    if is_exact(e):
        return "exact"
    return "float"


def coerce(x, kind):
    """Convert a scalar coefficient to the arithmetic of ``kind``."""
    if kind == "exact":
        return x
    if kind == "float":
        return float(x)
    return to_float(x, kind[1])


def unit_roundoff(kind):
    if kind == "float":
        return 2.0**-52
    if kind == "exact":
        return Fraction(1, 2**60)
    return gmpy2.mpfr(2) ** (1 - kind[1])


def to_working(values, kind):
    """Array of ``values`` in the arithmetic of ``kind``."""
    if kind == "float":
        return np.array([float(v) for v in values], dtype=float)
    if kind == "exact":
        out = np.empty(len(values), dtype=object)
        for i, v in enumerate(values):
            out[i] = v if is_exact(v) else Fraction(v)
        return out
    out = np.empty(len(values), dtype=object)
    for i, v in enumerate(values):
        out[i] = gmpy2.mpfr(str(v)) if isinstance(v, (float, str)) else to_float(v, kind[1])
    return out


def step_in_kind(h, kind):
    """Step size in working arithmetic; decimal floats go through their repr."""
    if kind == "float":
        return float(h)
    if kind == "exact":
        return h if is_exact(h) else Fraction(str(h))
    if isinstance(h, float):
        return gmpy2.mpfr(repr(h))
    if isinstance(h, _MPFR):
        return h
    return to_float(h, kind[1])


def norm(vec) -> float:
    if isinstance(vec, np.ndarray) and vec.dtype != object:
        return float(np.max(np.abs(vec))) if vec.size else 0.0
    return max((magnitude(x) for x in vec), default=0.0)


def values(vec: np.ndarray, kind) -> np.ndarray:
    """Strip jets; float kinds come back as float64 arrays."""
    if vec.dtype != object:
        return vec
    vals = [value_of(x) for x in vec]
    if kind == "float":
        return np.array([float(v) for v in vals], dtype=float)
    out = np.empty(len(vals), dtype=object)
    out[:] = vals
    return out


def _inverse(mat: np.ndarray) -> np.ndarray:
    """Gauss-Jordan inverse with partial pivoting for object matrices."""
    n = mat.shape[0]
    aug = np.empty((n, 2 * n), dtype=object)
    aug[:, :n] = mat
    aug[:, n:] = 0
    for i in range(n):
        aug[i, n + i] = 1
    for col in range(n):
        piv = max(range(col, n), key=lambda r: float(abs(aug[r, col])))
        if aug[piv, col] == 0:
            raise np.linalg.LinAlgError("singular Jacobian")
        if piv != col:
            aug[[col, piv]] = aug[[piv, col]]
        aug[col] = aug[col] / aug[col, col]
        for r in range(n):
            if r != col and aug[r, col] != 0:
                aug[r] = aug[r] - aug[r, col] * aug[col]
    return aug[:, n:]


def invert(mat: np.ndarray) -> np.ndarray:
    if mat.dtype != object:
        return np.linalg.inv(mat)
    return _inverse(mat)


def _jacobian_fd(residual, x, kind):
    x0 = values(x, kind)
    g0 = values(residual(x0)[0], kind)
    if kind == "float":
        root = 2.0**-26
    elif kind == "exact":
        root = Fraction(1, 2**30)
    else:
        root = gmpy2.sqrt(unit_roundoff(kind))
    cols = []
    for j in range(len(x0)):
        scale = max(1.0, float(abs(x0[j])))
        delta = root * (scale if kind == "float" else coerce(Fraction(scale), kind))
        xp = x0.copy()
        xp[j] = xp[j] + delta
        gp = values(residual(xp)[0], kind)
        cols.append((gp - g0) / delta)
    if kind == "float":
        return np.column_stack(cols)
    return np.array(cols, dtype=object).T


def _jacobian_fs(residual, x, kind):
    x0 = values(x, kind)
    zero = 0.0 if kind == "float" else coerce(Fraction(0), kind)
    g = residual(Jet.seed(list(x0), zero))[0]
    rows = [np.asarray(gi.grad) if isinstance(gi, Jet) else np.zeros(len(x0)) for gi in g]
    mat = np.array(rows, dtype=float if kind == "float" else object)
    return mat


def solve_stages(residual, x0: np.ndarray, cfg: SolverConfig, kind, scale):
    """Chord iteration ``x <- x - J^{-1} g(x)`` on ``residual(x) -> (g, aux)``.

    ``J`` is built once per call: ``scale * I`` for fixed point, otherwise by
    finite differences or forward sensitivity at the initial guess.
    Returns ``(x, aux, iterations)``.
    """
    x = x0
    jinv = None
    res = float("inf")
    for it in range(cfg.max_iterations + 1):
        g, aux = residual(x)
        res = norm(g)
        if res <= cfg.tolerance:
            return x, aux, it
        if it == cfg.max_iterations:
            break
        if jinv is None:
            n = len(x)
            if cfg.strategy is Strategy.FIXED_POINT:
                jinv = np.eye(n) / scale
                if kind != "float":
                    jinv = _identity_object(n, coerce(Fraction(1, 1), kind) / scale)
            else:
                has_jets = x.dtype == object and any(isinstance(v, Jet) for v in x)
                if cfg.jacobian is JacobianMode.FORWARD_SENSITIVITY and not has_jets:
                    jac = _jacobian_fs(residual, x, kind)
                else:
                    jac = _jacobian_fd(residual, x, kind)
                jinv = invert(jac)
        if g.dtype == object and jinv.dtype != object:
            step = jinv.astype(object).dot(g)
        else:
            step = jinv.dot(g)
        x = x - step
    raise ConvergenceError(
        f"stage solver did not converge in {cfg.max_iterations} iterations "
        f"(residual {res:.3e})", res)


def _identity_object(n, diag):
    out = np.empty((n, n), dtype=object)
    out[:] = 0 * diag
    for i in range(n):
        out[i, i] = diag
    return out
