"""Exact scalars: rationals, the cubic field Q(2^(1/3)), and MPFR floats.

Three kinds of scalar are used throughout the package:

* ``fractions.Fraction`` for rationals,
* :class:`CubicNum` for ``r0 + r1*t + r2*t**2`` with ``t = 2**(1/3)``,
* ``gmpy2.mpfr`` for floats of configurable binary precision.

Mixed arithmetic promotes Rational -> CubicNum -> Float.  Exact kinds are
never turned into floats unless a float takes part in the operation.
"""

from __future__ import annotations

import contextlib
import enum
import math
import numbers
from fractions import Fraction
from typing import Iterable, Sequence, Union

import gmpy2

__all__ = [
    "CubicNum",
    "Scalar",
    "THETA",
    "Scheme",
    "cubic_mul",
    "cubic_inv",
    "composition_alphas",
    "to_float",
    "working_precision",
    "as_scalar",
    "normalize",
    "is_exact",
    "scalar_to_json",
    "scalar_from_json",
    "format_scalar",
    "rref",
    "rank",
    "nullspace",
    "solve",
]

DEFAULT_BITS = 53


def _gcd4(a: int, b: int, c: int, d: int) -> int:
    return math.gcd(math.gcd(a, b), math.gcd(c, d))


class CubicNum:
    """Element ``r0 + r1*t + r2*t**2`` of Q(t), ``t**3 == 2``.

    Stored as integers over a common positive denominator, kept in lowest
    terms, so the representation is unique.
    """

    __slots__ = ("_n0", "_n1", "_n2", "_den")

    def __init__(self, r0=0, r1=0, r2=0):
        f0, f1, f2 = Fraction(r0), Fraction(r1), Fraction(r2)
        den = f0.denominator * f1.denominator // math.gcd(f0.denominator, f1.denominator)
        den = den * f2.denominator // math.gcd(den, f2.denominator)
        self._set(
            f0.numerator * (den // f0.denominator),
            f1.numerator * (den // f1.denominator),
            f2.numerator * (den // f2.denominator),
            den,
        )

    def _set(self, n0: int, n1: int, n2: int, den: int) -> None:
        g = _gcd4(n0, n1, n2, den)
        if g != 1:
            n0, n1, n2, den = n0 // g, n1 // g, n2 // g, den // g
        self._n0, self._n1, self._n2, self._den = n0, n1, n2, den

    @classmethod
    def _raw(cls, n0: int, n1: int, n2: int, den: int) -> "CubicNum":
        obj = cls.__new__(cls)
        if den < 0:
            n0, n1, n2, den = -n0, -n1, -n2, -den
        obj._set(n0, n1, n2, den)
        return obj

    @property
    def coefficients(self) -> tuple[Fraction, Fraction, Fraction]:
        d = self._den
        return Fraction(self._n0, d), Fraction(self._n1, d), Fraction(self._n2, d)

    def is_rational(self) -> bool:
        return self._n1 == 0 and self._n2 == 0

    # -- coercion -------------------------------------------------------
    @staticmethod
    def _lift(other):
        if isinstance(other, CubicNum):
            return other
        if isinstance(other, (int, Fraction)):
            f = Fraction(other)
            return CubicNum._raw(f.numerator, 0, 0, f.denominator)
        return None

    def _to_float_like(self, other):
        if isinstance(other, float):
            return float(self)
        return self.to_mpfr()

    def to_mpfr(self, bits: int | None = None):
        """Value as an ``mpfr`` at ``bits`` (default: current context)."""
        if bits is None:
            bits = gmpy2.get_context().precision
        with gmpy2.context(gmpy2.get_context(), precision=bits + 64):
            t = gmpy2.cbrt(gmpy2.mpfr(2))
            v = (gmpy2.mpfr(self._n0) + t * (gmpy2.mpfr(self._n1) + t * self._n2)) / self._den
        with gmpy2.context(gmpy2.get_context(), precision=bits):
            return gmpy2.mpfr(v)

    def __float__(self) -> float:
        return float(self.to_mpfr(53))

    # -- arithmetic -----------------------------------------------------
    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            if isinstance(other, (float, type(gmpy2.mpfr(0)))):
                return self._to_float_like(other) + other
            return NotImplemented
        d1, d2 = self._den, o._den
        return CubicNum._raw(
            self._n0 * d2 + o._n0 * d1,
            self._n1 * d2 + o._n1 * d1,
            self._n2 * d2 + o._n2 * d1,
            d1 * d2,
        )

    __radd__ = __add__

    def __neg__(self):
        return CubicNum._raw(-self._n0, -self._n1, -self._n2, self._den)

    def __pos__(self):
        return self

    def __sub__(self, other):
        o = self._lift(other)
        if o is None:
            if isinstance(other, (float, type(gmpy2.mpfr(0)))):
                return self._to_float_like(other) - other
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._lift(other)
        if o is None:
            if isinstance(other, (float, type(gmpy2.mpfr(0)))):
                return other - self._to_float_like(other)
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = self._lift(other)
        if o is None:
            if isinstance(other, (float, type(gmpy2.mpfr(0)))):
                return self._to_float_like(other) * other
            return NotImplemented
        a0, a1, a2 = self._n0, self._n1, self._n2
        b0, b1, b2 = o._n0, o._n1, o._n2
        # t**3 = 2, t**4 = 2t
        return CubicNum._raw(
            a0 * b0 + 2 * (a1 * b2 + a2 * b1),
            a0 * b1 + a1 * b0 + 2 * a2 * b2,
            a0 * b2 + a1 * b1 + a2 * b0,
            self._den * o._den,
        )

    __rmul__ = __mul__

    def inverse(self) -> "CubicNum":
        if self._n0 == 0 and self._n1 == 0 and self._n2 == 0:
            raise ZeroDivisionError("CubicNum division by zero")
        r0, r1, r2 = self.coefficients
        # columns: x*1, x*t, x*t^2 in basis {1, t, t^2}
        mat = [
            [r0, 2 * r2, 2 * r1],
            [r1, r0, 2 * r2],
            [r2, r1, r0],
        ]
        y = solve(mat, [Fraction(1), Fraction(0), Fraction(0)])
        return CubicNum(*y)

    def __truediv__(self, other):
        o = self._lift(other)
        if o is None:
            if isinstance(other, (float, type(gmpy2.mpfr(0)))):
                return self._to_float_like(other) / other
            return NotImplemented
        if o.is_rational():
            if o._n0 == 0:
                raise ZeroDivisionError("CubicNum division by zero")
            return CubicNum._raw(self._n0 * o._den, self._n1 * o._den, self._n2 * o._den, self._den * o._n0)
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._lift(other)
        if o is None:
            if isinstance(other, (float, type(gmpy2.mpfr(0)))):
                return other / self._to_float_like(other)
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        result, base = CubicNum(1), self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # -- comparison -----------------------------------------------------
    def __eq__(self, other):
        o = self._lift(other)
        if o is None:
            if isinstance(other, (float, type(gmpy2.mpfr(0)))):
                return self._to_float_like(other) == other
            return NotImplemented
        return (self._n0, self._n1, self._n2, self._den) == (o._n0, o._n1, o._n2, o._den)

    def __hash__(self):
        if self.is_rational():
            return hash(Fraction(self._n0, self._den))
        return hash((self._n0, self._n1, self._n2, self._den))

    def __bool__(self):
        return bool(self._n0 or self._n1 or self._n2)

    def sign(self) -> int:
        """Exact sign, found by interval refinement of the float value."""
        if not self:
            return 0
        if self.is_rational():
            return 1 if self._n0 > 0 else -1
        bits = 64
        mag = abs(self._n0) + 2 * abs(self._n1) + 2 * abs(self._n2)
        while True:
            with gmpy2.context(gmpy2.get_context(), precision=bits):
                t = gmpy2.cbrt(gmpy2.mpfr(2))
                v = gmpy2.mpfr(self._n0) + t * (gmpy2.mpfr(self._n1) + t * self._n2)
                bound = gmpy2.mpfr(mag) * gmpy2.mpfr(2) ** (8 - bits)
                if abs(v) > bound:
                    return 1 if v > 0 else -1
            bits *= 2

    def __lt__(self, other):
        return (self - other).sign() < 0

    def __le__(self, other):
        return (self - other).sign() <= 0

    def __gt__(self, other):
        return (self - other).sign() > 0

    def __ge__(self, other):
        return (self - other).sign() >= 0

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __repr__(self):
        r0, r1, r2 = self.coefficients
        return f"CubicNum({r0}, {r1}, {r2})"

    def __str__(self):
        parts = []
        for coeff, unit in zip(self.coefficients, ("", "t", "t^2")):
            if coeff == 0:
                continue
            txt = str(coeff)
            if unit:
                txt = f"({txt})*{unit}" if "/" in txt or txt.startswith("-") else f"{txt}*{unit}"
            parts.append(txt)
        return " + ".join(parts) if parts else "0"


numbers.Number.register(CubicNum)

THETA = CubicNum(0, 1, 0)
"""The real cube root of two."""

MPFR = type(gmpy2.mpfr(0))
Scalar = Union[Fraction, CubicNum, "gmpy2.mpfr"]


def cubic_mul(x: CubicNum, y: CubicNum) -> CubicNum:
    return CubicNum._lift(x) * CubicNum._lift(y)


def cubic_inv(x: CubicNum) -> CubicNum:
    return CubicNum._lift(x).inverse()


class Scheme(str, enum.Enum):
    LEAPFROG2 = "leapfrog2"
    TRIPLEJUMP4 = "triplejump4"
    SUZUKI4 = "suzuki4"


def composition_alphas(scheme: Scheme | str) -> list:
    """Composition step fractions for the named scheme, summing to one."""
    scheme = Scheme(str(scheme.value if isinstance(scheme, Scheme) else scheme).lower())
    if scheme is Scheme.LEAPFROG2:
        return [Fraction(1)]
    if scheme is Scheme.TRIPLEJUMP4:
        a = cubic_inv(2 - THETA)
        return [a, 1 - 2 * a, a]
    a = cubic_inv(4 - THETA * THETA)
    return [a, a, 1 - 4 * a, a, a]


@contextlib.contextmanager
def working_precision(bits: int | None):
    """Set the MPFR precision for the duration of the block."""
    if bits is None:
        bits = DEFAULT_BITS
    with gmpy2.context(gmpy2.get_context(), precision=int(bits)) as ctx:
        yield ctx


def to_float(x, precision_bits: int = DEFAULT_BITS):
    """Round ``x`` to an ``mpfr`` of the given binary precision."""
    if precision_bits < DEFAULT_BITS:
        raise ValueError("precision_bits must be at least 53")
    if isinstance(x, CubicNum):
        return x.to_mpfr(precision_bits)
    if isinstance(x, Fraction):
        x = gmpy2.mpq(x.numerator, x.denominator)
    return gmpy2.mpfr(x, precision_bits)


def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction, CubicNum))


def as_scalar(x):
    """Coerce ints, strings like ``"3/8"`` and floats into a Scalar."""
    if isinstance(x, bool):
        raise TypeError("bool is not a scalar")
    if isinstance(x, (Fraction, CubicNum, MPFR)):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        return gmpy2.mpfr(x)
    raise TypeError(f"cannot interpret {x!r} as a scalar")


def normalize(x):
    """Demote rational-valued CubicNums to Fraction; ints become Fraction."""
    if isinstance(x, CubicNum) and x.is_rational():
        return x.coefficients[0]
    if isinstance(x, int) and not isinstance(x, bool):
        return Fraction(x)
    return x


def _mpfr_hex(x) -> str:
    if gmpy2.is_zero(x):
        return "0x0p+0"
    if not gmpy2.is_finite(x):
        return str(x)
    mant, exp = x.as_mantissa_exp()
    sign = "-" if mant < 0 else ""
    return f"{sign}0x{abs(int(mant)):x}p{int(exp):+d}"


def _mpfr_from_hex(text: str, bits: int):
    sign = -1 if text.startswith("-") else 1
    body = text.lstrip("-")
    mant_txt, exp_txt = body[2:].split("p")
    with gmpy2.context(gmpy2.get_context(), precision=bits):
        return gmpy2.mul_2exp(gmpy2.mpfr(sign * int(mant_txt, 16)), int(exp_txt))


def scalar_to_json(x) -> dict:
    x = normalize(x)
    if isinstance(x, Fraction):
        return {"kind": "rational", "num": str(x.numerator), "den": str(x.denominator),
                "decimal": format_scalar(x)}
    if isinstance(x, CubicNum):
        return {"kind": "cubic",
                "c": [[str(r.numerator), str(r.denominator)] for r in x.coefficients],
                "decimal": format_scalar(x)}
    if isinstance(x, float):
        x = gmpy2.mpfr(x)
    if isinstance(x, MPFR):
        return {"kind": "float", "bits": int(x.precision), "hex": _mpfr_hex(x),
                "decimal": format_scalar(x)}
    raise TypeError(f"not a scalar: {x!r}")


def scalar_from_json(obj):
    if not isinstance(obj, dict):
        return as_scalar(obj)
    kind = obj.get("kind")
    if kind == "rational":
        return Fraction(int(obj["num"]), int(obj["den"]))
    if kind == "cubic":
        return normalize(CubicNum(*(Fraction(int(n), int(d)) for n, d in obj["c"])))
    if kind == "float":
        return _mpfr_from_hex(obj["hex"], int(obj["bits"]))
    raise ValueError(f"unknown scalar kind {kind!r}")


def format_scalar(x, digits: int = 17) -> str:
    """Decimal rendering used in tables and alongside JSON."""
    if isinstance(x, Fraction) and x.denominator == 1:
        return str(x.numerator)
    if isinstance(x, (Fraction, CubicNum)):
        v = to_float(x, max(64, int(digits * 3.33) + 8))
    else:
        v = x
    return f"{float(v):.{digits}g}" if digits <= 17 else gmpy2.mpfr(v).__format__(f".{digits}g")


# -- exact linear algebra over any field of Python numbers --------------------

def _is_zero(x) -> bool:
    return x == 0


def rref(mat: Sequence[Sequence]) -> tuple[list[list], list[int]]:
    """Reduced row echelon form and pivot columns, by exact elimination."""
    rows = [[normalize(v) for v in r] for r in mat]
    if not rows:
        return rows, []
    ncols = len(rows[0])
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(rows)) if not _is_zero(rows[i][c])), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        p = rows[r][c]
        rows[r] = [normalize(v / p) for v in rows[r]]
        for i in range(len(rows)):
            if i != r and not _is_zero(rows[i][c]):
                fac = rows[i][c]
                rows[i] = [normalize(a - fac * b) for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return rows, pivots


def rank(mat: Sequence[Sequence]) -> int:
    return len(rref(mat)[1])


def nullspace(mat: Sequence[Sequence], ncols: int | None = None) -> list[list]:
    """Basis of the right nullspace; one vector per free column, in order."""
    if ncols is None:
        ncols = len(mat[0])
    red, pivots = rref(mat) if mat else ([], [])
    basis = []
    for free in (c for c in range(ncols) if c not in pivots):
        vec = [Fraction(0)] * ncols
        vec[free] = Fraction(1)
        for row, pc in zip(red, pivots):
            vec[pc] = normalize(-row[free])
        basis.append(vec)
    return basis


def solve(mat: Sequence[Sequence], rhs: Iterable) -> list:
    """Solve the square system ``mat @ x = rhs`` exactly."""
    rhs = list(rhs)
    n = len(mat)
    aug = [list(row) + [v] for row, v in zip(mat, rhs)]
    red, pivots = rref(aug)
    if pivots[:n] != list(range(n)) or len(pivots) > n:
        raise ZeroDivisionError("singular matrix")
    return [red[i][n] for i in range(n)]
