"""Trajectories, defect measurements and energy-drift fits."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..exactnum import working_precision
from .jet import Jet
from .numeric import ConvergenceError, coerce, step_in_kind, to_working
from .problems import Problem

__all__ = [
    "Trajectory",
    "DriftFit",
    "DefectScan",
    "DriftFloorWarning",
    "working_kind",
    "integrate",
    "symplectic_defect",
    "symmetry_defect",
    "defect_scan",
    "drift_fit",
    "loglog_slope",
    "secular_rate",
]


class DriftFloorWarning(UserWarning):
    """A fitted drift rate cannot be told apart from noise."""


def working_kind(precision):
    """Number kind for a precision request: None/53 float64, int bits mpfr, 'exact'."""
    if precision in (None, 53):
        return "float"
    if precision == "exact":
        return "exact"
    bits = int(precision)
    if bits < 53:
        raise ValueError("precision must be at least 53 bits")
    return ("mpfr", bits)


def _bits(kind):
    return kind[1] if isinstance(kind, tuple) else 53


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    energy_error: np.ndarray | None
    quadratic_error: np.ndarray | None
    iterations: np.ndarray
    h: float = 0.0
    precision: int | str | None = None

    def __len__(self):
        return len(self.times)


def integrate(stepper: Callable, problem: Problem, z0: Sequence, h, n_steps: int,
              precision=None, record_states: bool = True) -> Trajectory:
    """Apply ``stepper`` ``n_steps`` times, tracking invariant errors.

    Errors are ``H(z_n) - H(z_0)`` and ``z_n^T C z_n - z_0^T C z_0``,
    computed in working precision and stored as float64.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    kind = working_kind(precision)
    with working_precision(_bits(kind)):
        z = to_working(z0, kind)
        hh = step_in_kind(h, kind)
        H0 = problem.energy(z)
        Q0 = problem.quadratic_value(z)
        energy = np.zeros(n_steps + 1) if H0 is not None else None
        quad = np.zeros(n_steps + 1) if Q0 is not None else None
        states = [z] if record_states else None
        iters = np.zeros(n_steps, dtype=int)
        for n in range(1, n_steps + 1):
            try:
                z = stepper(problem.f, z, hh)
            except ConvergenceError as exc:
                exc.step = n
                raise
            iters[n - 1] = getattr(stepper, "last_iterations", 0)
            if energy is not None:
                energy[n] = float(problem.energy(z) - H0)
            if quad is not None:
                quad[n] = float(problem.quadratic_value(z) - Q0)
            if record_states:
                states.append(z)
        if record_states:
            st = np.array(states, dtype=z.dtype)
        else:
            st = np.array([z], dtype=z.dtype)
    times = np.arange(n_steps + 1) * float(h)
    return Trajectory(times, st, energy, quad, iters, float(h), precision)


def _tangent_seed(z, kind):
    zero = 0.0 if kind == "float" else coerce(0, kind)
    return Jet.seed(list(z), zero)


def symplectic_defect(stepper: Callable, problem: Problem, z, h, precision=None) -> float:
    """``max |D^T J D - J|`` for the one-step Jacobian ``D``.

    ``D`` comes from forward sensitivity: jets seeded with the identity are
    pushed through the stepper itself.
    """
    if problem.J is None:
        raise ValueError(f"problem {problem.name!r} has no symplectic structure")
    kind = working_kind(precision)
    with working_precision(_bits(kind)):
        z = to_working(z, kind)
        out = stepper(problem.f, _tangent_seed(z, kind), step_in_kind(h, kind))
        d = problem.dim
        D = [[(x.grad[j] if isinstance(x, Jet) else (1 if i == j else 0)) for j in range(d)]
             for i, x in enumerate(out)]
        J = problem.J
        worst = 0.0
        for i in range(d):
            for j in range(d):
                acc = 0
                for k in range(d):
                    for l in range(d):
                        if J[k][l] != 0:
                            acc = acc + D[k][i] * J[k][l] * D[l][j]
                worst = max(worst, abs(float(acc - J[i][j])))
    return worst


def symmetry_defect(stepper: Callable, problem: Problem | Callable, z, h, precision=None) -> float:
    """``max |phi_h(phi_{-h}(z)) - z|``."""
    f = problem.f if isinstance(problem, Problem) else problem
    kind = working_kind(precision)
    with working_precision(_bits(kind)):
        z = to_working(z, kind)
        hh = step_in_kind(h, kind)
        back = stepper(f, stepper(f, z, -hh), hh)
        return max(abs(float(a - b)) for a, b in zip(back, z))


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.abs(np.asarray(ys, dtype=float)))
    return float(np.polyfit(lx, ly, 1)[0])


@dataclass
class DefectScan:
    h: list
    defects: list
    slope: float


def defect_scan(measure: str, stepper: Callable, problem: Problem, z0, h_list: Sequence,
                precision=None) -> DefectScan:
    """Defect at each step size and the fitted log-log exponent."""
    fn = {"symplectic": symplectic_defect, "symmetry": symmetry_defect}[measure]
    defects = [fn(stepper, problem, z0, h, precision) for h in h_list]
    positive = [(h, d) for h, d in zip(h_list, defects) if d > 0]
    slope = loglog_slope(*zip(*positive)) if len(positive) >= 2 else float("nan")
    return DefectScan(list(h_list), defects, slope)


@dataclass
class DriftFit:
    h: list
    rates: list
    stderr: list
    floors: list
    below_floor: list
    slope: float | None
    transient: float = 0.1
    T: float = 0.0
    warnings: list = field(default_factory=list)


def _rate(times, err, transient, kind, magnitude):
    T = times[-1]
    keep = times >= transient * T
    t, e = times[keep], err[keep]
    rate, _ = np.polyfit(t, e, 1)
    # block means suppress the bounded oscillation; their scatter about the
    # line gives the uncertainty of the secular rate
    nblocks = 10
    tb = np.array([blk.mean() for blk in np.array_split(t, nblocks)])
    eb = np.array([blk.mean() for blk in np.array_split(e, nblocks)])
    coef = np.polyfit(tb, eb, 1)
    resid = eb - np.polyval(coef, tb)
    sxx = np.sum((tb - tb.mean()) ** 2)
    stderr = math.sqrt(np.sum(resid**2) / (nblocks - 2) / sxx)
    eps = 2.0 ** -(_bits(kind) - 1)
    roundoff = 10 * eps * magnitude * math.sqrt(len(t)) / (t[-1] - t[0])
    return float(rate), float(stderr), float(roundoff)


def secular_rate(traj: Trajectory, problem: Problem, quantity: str = "energy",
                 transient: float = 0.1) -> tuple[float, float, float]:
    """``(rate, stderr, roundoff)`` of the linear trend in an invariant error."""
    kind = working_kind(traj.precision)
    err = traj.energy_error if quantity == "energy" else traj.quadratic_error
    if err is None:
        raise ValueError(f"problem {problem.name!r} has no {quantity} invariant")
    with working_precision(_bits(kind)):
        z = traj.states[0] if len(traj.states) == len(traj.times) else None
        ref = 1.0
        if z is not None:
            ref = problem.energy(z) if quantity == "energy" else problem.quadratic_value(z)
    return _rate(traj.times, err, transient, kind, max(1.0, abs(float(ref))))


def _drift_one(stepper, problem, z0, h, T, precision, transient, quantity):
    traj = integrate(stepper, problem, z0, h, int(round(T / h)), precision, record_states=False)
    kind = working_kind(precision)
    err = traj.energy_error if quantity == "energy" else traj.quadratic_error
    if err is None:
        raise ValueError(f"problem {problem.name!r} has no {quantity} invariant")
    with working_precision(_bits(kind)):
        z = to_working(z0, kind)
        ref = problem.energy(z) if quantity == "energy" else problem.quadratic_value(z)
    return _rate(traj.times, err, transient, kind, max(1.0, abs(float(ref))))


def drift_fit(stepper: Callable, problem: Problem, z0, h_list: Sequence, T: float,
              precision=None, transient: float = 0.1, quantity: str = "energy",
              workers: int = 1) -> DriftFit:
    """Secular drift rate of an invariant for each ``h`` and its exponent in ``h``.

    The first ``transient * T`` is discarded; a rate is flagged below the
    floor when it is within three standard errors of zero or under the
    accumulated-roundoff level of the working precision.  ``workers > 1``
    runs the step sizes in separate processes.
    """
    if len(h_list) < 3:
        raise ValueError("need at least three step sizes")
    working_kind(precision)
    args = [(stepper, problem, z0, h, T, precision, transient, quantity) for h in h_list]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_drift_one, *zip(*args)))
    else:
        results = [_drift_one(*a) for a in args]
    rates, errs, floors, below = [], [], [], []
    notes = []
    for h, (rate, stderr, roundoff) in zip(h_list, results):
        floor = max(3 * stderr, roundoff)
        rates.append(rate)
        errs.append(stderr)
        floors.append(floor)
        flagged = abs(rate) <= floor
        below.append(flagged)
        if flagged:
            msg = (f"drift rate {rate:.3e} at h={h} is below the noise floor {floor:.3e}; "
                   f"raise precision_bits or T to resolve it")
            notes.append(msg)
            warnings.warn(msg, DriftFloorWarning, stacklevel=2)
    good = [(h, r) for h, r, b in zip(h_list, rates, below) if not b]
    slope = loglog_slope(*zip(*good)) if len(good) >= 2 else None
    return DriftFit(list(h_list), rates, errs, floors, below, slope, transient, T, notes)
