"""First-order forward-mode jets for propagating tangent bases through steppers."""

from __future__ import annotations

import math

import gmpy2
import numpy as np

_MPFR = type(gmpy2.mpfr(0))


class Jet:
    """Value together with its gradient with respect to a fixed seed basis.

    Works over any scalar type with the usual operators (floats, ``mpfr``),
    so the stepper's own arithmetic carries the derivatives.
    """

    __slots__ = ("value", "grad")

    def __init__(self, value, grad):
        self.value = value
        self.grad = grad

    @staticmethod
    def seed(values, like_zero=0.0) -> np.ndarray:
        """Object array of jets with identity tangents."""
        n = len(values)
        out = np.empty(n, dtype=object)
        for i, v in enumerate(values):
            g = np.array([like_zero] * n, dtype=object if not isinstance(like_zero, float) else float)
            g[i] = like_zero + 1
            out[i] = Jet(v, g)
        return out

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.value + other.value, self.grad + other.grad)
        return Jet(self.value + other, self.grad)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet):
            return Jet(self.value - other.value, self.grad - other.grad)
        return Jet(self.value - other, self.grad)

    def __rsub__(self, other):
        return Jet(other - self.value, -self.grad)

    def __neg__(self):
        return Jet(-self.value, -self.grad)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if isinstance(other, Jet):
            return Jet(self.value * other.value, self.grad * other.value + other.grad * self.value)
        return Jet(self.value * other, self.grad * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            inv = 1 / other.value
            val = self.value * inv
            return Jet(val, (self.grad - other.grad * val) * inv)
        return Jet(self.value / other, self.grad / other)

    def __rtruediv__(self, other):
        inv = 1 / self.value
        val = other * inv
        return Jet(val, self.grad * (-val * inv))

    def __pow__(self, n):
        if not isinstance(n, int):
            return NotImplemented
        if n == 0:
            return Jet(self.value**0, self.grad * 0)
        return Jet(self.value**n, self.grad * (n * self.value ** (n - 1)))

    def __repr__(self):
        return f"Jet({self.value!r}, {self.grad!r})"


def sqrt(x):
    """Square root for floats, ``mpfr`` and jets."""
    if isinstance(x, Jet):
        r = sqrt(x.value)
        return Jet(r, x.grad / (2 * r))
    if isinstance(x, _MPFR):
        return gmpy2.sqrt(x)
    return math.sqrt(x)


def value_of(x):
    return x.value if isinstance(x, Jet) else x


def magnitude(x) -> float:
    """Largest absolute value among the value and gradient entries."""
    if isinstance(x, Jet):
        m = float(abs(x.value))
        if len(x.grad):
            m = max(m, max(float(abs(g)) for g in x.grad))
        return m
    return float(abs(x))
