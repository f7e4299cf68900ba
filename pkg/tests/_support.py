"""Shared builders for the integrator tests."""

import numpy as np

from extrk.exactnum import composition_alphas
from extrk.integrate import MidpointProjection, RKStepper, SolverConfig, SymmetricProjection
from extrk.integrate.problems import _array
from extrk.tableau import merged_substeps, midpoint_projection_tableau, monoimplicit_tableau

SCHEMES = ["leapfrog2", "triplejump4", "suzuki4"]
TIGHT = SolverConfig(tolerance=1e-14)


class PolyField:
    """f(z) = c + A z + sum_k B_k z_k z: smooth, cheap, and generic enough to couple all stages."""

    def __init__(self, seed, dim=None):
        rng = np.random.default_rng(seed)
        self.dim = dim or int(rng.integers(2, 5))
        d = self.dim
        self.c = rng.normal(scale=0.5, size=d)
        self.A = rng.normal(scale=0.5, size=(d, d))
        self.B = rng.normal(scale=0.3, size=(d, d, d))
        self.z0 = rng.normal(scale=0.7, size=d)

    def __call__(self, z):
        d = self.dim
        out = []
        for i in range(d):
            acc = self.c[i]
            for j in range(d):
                acc = acc + self.A[i, j] * z[j]
                for k in range(d):
                    acc = acc + self.B[i, j, k] * z[j] * z[k]
            out.append(acc)
        return _array(out)


def all_steppers(scheme="leapfrog2", cfg=TIGHT):
    al = composition_alphas(scheme)
    return {
        "midpoint": MidpointProjection(al),
        "midpoint_rk": RKStepper(midpoint_projection_tableau(al), cfg),
        "symmetric": SymmetricProjection.from_composition(al, cfg),
        "monoimplicit": RKStepper(monoimplicit_tableau(merged_substeps(al)), cfg),
    }


def rel_diff(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))
