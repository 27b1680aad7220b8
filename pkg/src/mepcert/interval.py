"""Inf-sup interval arithmetic with post-hoc outward rounding.

Intervals are pairs of binary64 endpoints ``[lo, hi]`` with ``lo <= hi``,
both finite.  All elementary operations are computed in the default
round-to-nearest mode and then widened outward by one unit in the last
place on each side.  Since a correctly rounded binary64 operation differs
from the exact result by at most half an ulp, one ``nextafter`` step in
each direction yields a mathematically guaranteed enclosure without
touching the FPU rounding mode.

Transcendental functions are not correctly rounded by libm.  For ``exp``
we assume the platform library is faithfully rounded (error < 1 ulp) and
widen by ``EXP_ULPS`` ulps per side, with a doubled "paranoid" budget
available as a runtime switch (see :func:`set_paranoid`).  This
assumption is exercised against a high-precision oracle in the test
suite.

Any operation whose raw result is NaN or infinite raises
:class:`~mepcert.errors.RangeError`: enclosures never silently saturate.

Two layers are provided:

* :class:`Interval` - immutable scalar, operator overloaded, used in all
  fine-grained rigorous logic (point validation, Taylor recursions).
* :class:`IArray`   - dense arrays of intervals stored as separate
  ``lo``/``hi`` float64 ndarrays, used in the heavy sequence and matrix
  computations.  Elementwise operations widen per ulp exactly like the
  scalar layer; accumulating operations (matrix products, big sums) use
  a standard a-priori rounding bound of the form ``n*u/(1-n*u)`` on top
  of a midpoint-radius product, which keeps everything BLAS-fast while
  remaining a true enclosure.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, RangeError, ShapeError

_INF = math.inf
_U = 2.0 ** -53  # unit roundoff of binary64

# ulp budget for exp; 2 by default, doubled in paranoid mode
EXP_ULPS_DEFAULT = 2
_exp_ulps = EXP_ULPS_DEFAULT


def set_paranoid(on: bool = True) -> None:
    """Double (or restore) the ulp widening budget for libm functions."""
    global _exp_ulps
    _exp_ulps = 2 * EXP_ULPS_DEFAULT if on else EXP_ULPS_DEFAULT


def exp_ulp_budget() -> int:
    return _exp_ulps


def _down(x: float) -> float:
    return math.nextafter(x, -_INF)


def _up(x: float) -> float:
    return math.nextafter(x, _INF)


def _check(lo: float, hi: float) -> None:
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise RangeError(f"non-finite interval endpoint: [{lo}, {hi}]")


class Interval:
    """Closed interval with finite float64 endpoints."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo: float, hi: float | None = None):
        lo = float(lo)
        hi = lo if hi is None else float(hi)
        _check(lo, hi)
        if lo > hi:
            raise DomainError(f"inverted interval endpoints: [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def __setattr__(self, name, value):  # pragma: no cover - guard
        raise AttributeError("Interval is immutable")

    # -- constructors -------------------------------------------------

    @classmethod
    def from_decimal(cls, s: str) -> "Interval":
        """Tightest interval containing the exact decimal number ``s``.

        If ``s`` is exactly representable the result is a point; otherwise
        the enclosure is one ulp wide.
        """
        v = float(s)
        if not math.isfinite(v):
            raise RangeError(f"decimal literal out of range: {s!r}")
        exact = Fraction(s)
        fv = Fraction(v)
        if fv == exact:
            return cls(v)
        if fv < exact:
            return cls(v, _up(v))
        return cls(_down(v), v)

    @classmethod
    def from_hex(cls, lo: str, hi: str) -> "Interval":
        return cls(float.fromhex(lo), float.fromhex(hi))

    @classmethod
    def hull(cls, items: Iterable["Interval | float"]) -> "Interval":
        los, his = [], []
        for it in items:
            it = _coerce(it)
            los.append(it.lo)
            his.append(it.hi)
        if not los:
            raise DomainError("hull of empty collection")
        return cls(min(los), max(his))

    # -- queries ------------------------------------------------------

    def mid(self) -> float:
        m = 0.5 * (self.lo + self.hi)
        return m if math.isfinite(m) else self.lo

    def width(self) -> float:
        return _up(self.hi - self.lo)

    def mag(self) -> float:
        """sup |x| over the interval (exact)."""
        return max(abs(self.lo), abs(self.hi))

    def mig(self) -> float:
        """inf |x| over the interval (exact)."""
        if self.lo <= 0.0 <= self.hi:
            return 0.0
        return min(abs(self.lo), abs(self.hi))

    def contains(self, x: "float | Interval") -> bool:
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        return self.lo <= x <= self.hi

    def interior_contains(self, x: "float | Interval") -> bool:
        if isinstance(x, Interval):
            return self.lo < x.lo and x.hi < self.hi
        return self.lo < x < self.hi

    def overlaps(self, other: "Interval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def is_point(self) -> bool:
        return self.lo == self.hi

    # -- arithmetic ---------------------------------------------------

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def __add__(self, other) -> "Interval":
        o = _coerce(other)
        lo = self.lo + o.lo
        hi = self.hi + o.hi
        _check(lo, hi)
        return Interval(_down(lo), _up(hi))

    __radd__ = __add__

    def __sub__(self, other) -> "Interval":
        o = _coerce(other)
        lo = self.lo - o.hi
        hi = self.hi - o.lo
        _check(lo, hi)
        return Interval(_down(lo), _up(hi))

    def __rsub__(self, other) -> "Interval":
        return _coerce(other).__sub__(self)

    def __mul__(self, other) -> "Interval":
        o = _coerce(other)
        p1 = self.lo * o.lo
        p2 = self.lo * o.hi
        p3 = self.hi * o.lo
        p4 = self.hi * o.hi
        lo = min(p1, p2, p3, p4)
        hi = max(p1, p2, p3, p4)
        _check(lo, hi)
        return Interval(_down(lo), _up(hi))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Interval":
        o = _coerce(other)
        if o.lo <= 0.0 <= o.hi:
            raise DomainError(f"division by interval containing zero: {o}")
        q1 = self.lo / o.lo
        q2 = self.lo / o.hi
        q3 = self.hi / o.lo
        q4 = self.hi / o.hi
        lo = min(q1, q2, q3, q4)
        hi = max(q1, q2, q3, q4)
        _check(lo, hi)
        return Interval(_down(lo), _up(hi))

    def __rtruediv__(self, other) -> "Interval":
        return _coerce(other).__truediv__(self)

    def sqr(self) -> "Interval":
        """x^2, tighter than self*self when 0 is inside."""
        a, b = abs(self.lo), abs(self.hi)
        lo_m, hi_m = min(a, b), max(a, b)
        hi = hi_m * hi_m
        _check(0.0, hi)
        if self.lo <= 0.0 <= self.hi:
            return Interval(0.0, _up(hi))
        lo = lo_m * lo_m
        return Interval(max(0.0, _down(lo)), _up(hi))

    def __pow__(self, n: int) -> "Interval":
        if not isinstance(n, int) or n < 0:
            raise DomainError("only nonnegative integer powers")
        if n == 0:
            return Interval(1.0)
        if n == 1:
            return self
        if n == 2:
            return self.sqr()
        half = self ** (n // 2)
        res = half.sqr()
        return res * self if n % 2 else res

    def abs(self) -> "Interval":
        return Interval(self.mig(), self.mag())

    def sqrt(self) -> "Interval":
        if self.lo < 0.0:
            raise DomainError(f"sqrt of interval with negative part: {self}")
        # math.sqrt is correctly rounded
        return Interval(max(0.0, _down(math.sqrt(self.lo))), _up(math.sqrt(self.hi)))

    def exp(self) -> "Interval":
        try:
            lo = math.exp(self.lo)
            hi = math.exp(self.hi)
        except OverflowError as exc:
            raise RangeError(f"exp overflow on {self}") from exc
        if math.isinf(hi):
            raise RangeError(f"exp overflow on {self}")
        for _ in range(_exp_ulps):
            lo = _down(lo)
            hi = _up(hi)
        # exp is positive; hard underflow clamps the lower bound at 0
        return Interval(max(lo, 0.0), hi)

    # -- representation ----------------------------------------------

    def __repr__(self) -> str:
        return f"[{self.lo:.17g}, {self.hi:.17g}]"

    def to_hex(self) -> tuple[str, str]:
        return (self.lo.hex(), self.hi.hex())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Interval)
            and self.lo == other.lo
            and self.hi == other.hi
        )

    def __hash__(self) -> int:
        return hash((self.lo, self.hi))


def _coerce(x) -> Interval:
    if isinstance(x, Interval):
        return x
    if isinstance(x, (int, float, np.floating, np.integer)):
        return Interval(float(x))
    raise TypeError(f"cannot interpret {type(x).__name__} as Interval")


ZERO = Interval(0.0)
ONE = Interval(1.0)


def isum(items: Iterable[Interval | float]) -> Interval:
    """Rigorous sum of a (short) iterable of intervals."""
    acc = ZERO
    for it in items:
        acc = acc + it
    return acc


def idot(u: Sequence[Interval], v: Sequence[Interval]) -> Interval:
    if len(u) != len(v):
        raise ShapeError("dot of unequal lengths")
    return isum(a * b for a, b in zip(u, v))


# ---------------------------------------------------------------------------
# vectorized layer
# ---------------------------------------------------------------------------


def _vdown(a: np.ndarray) -> np.ndarray:
    return np.nextafter(a, -_INF)


def _vup(a: np.ndarray) -> np.ndarray:
    return np.nextafter(a, _INF)


def _vcheck(*arrays: np.ndarray) -> None:
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise RangeError("non-finite endpoint in interval array")


class IArray:
    """Dense interval array: two float64 ndarrays of identical shape.

    Supports 1-d (interval vectors) and 2-d (interval matrices) shapes,
    plus whatever ndarray shapes the elementwise operations are given.
    Mixed operations with plain floats/ndarrays treat the float data as
    exact.
    """

    __slots__ = ("lo", "hi")

    def __init__(self, lo: np.ndarray, hi: np.ndarray, _checked: bool = False):
        lo = np.asarray(lo, dtype=np.float64)
        hi = np.asarray(hi, dtype=np.float64)
        if lo.shape != hi.shape:
            raise ShapeError("lo/hi shape mismatch")
        if not _checked:
            _vcheck(lo, hi)
            if np.any(lo > hi):
                raise DomainError("inverted endpoints in interval array")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def __setattr__(self, name, value):  # pragma: no cover - guard
        raise AttributeError("IArray is immutable (endpoint arrays are not)")

    # -- constructors -------------------------------------------------

    @classmethod
    def from_float(cls, a) -> "IArray":
        a = np.array(a, dtype=np.float64)
        _vcheck(a)
        return cls(a, a.copy(), _checked=True)

    @classmethod
    def zeros(cls, shape) -> "IArray":
        return cls(np.zeros(shape), np.zeros(shape), _checked=True)

    @classmethod
    def eye(cls, n: int) -> "IArray":
        return cls(np.eye(n), np.eye(n), _checked=True)

    @classmethod
    def from_intervals(cls, items) -> "IArray":
        arr = np.array(
            [[it.lo, it.hi] for it in _flatten(items)], dtype=np.float64
        )
        shape = _nested_shape(items)
        return cls(arr[:, 0].reshape(shape), arr[:, 1].reshape(shape), _checked=True)

    # -- basic queries ------------------------------------------------

    @property
    def shape(self):
        return self.lo.shape

    @property
    def ndim(self):
        return self.lo.ndim

    def __len__(self):
        return len(self.lo)

    def copy(self) -> "IArray":
        return IArray(self.lo.copy(), self.hi.copy(), _checked=True)

    @property
    def T(self) -> "IArray":
        return IArray(self.lo.T, self.hi.T, _checked=True)

    def reshape(self, *shape) -> "IArray":
        return IArray(self.lo.reshape(*shape), self.hi.reshape(*shape), _checked=True)

    def mid(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def rad_up(self) -> np.ndarray:
        """Upper bound on the radius around mid()."""
        m = self.mid()
        return _vup(np.maximum(m - self.lo, self.hi - m))

    def mag(self) -> np.ndarray:
        """Entrywise sup |x| (exact floats)."""
        return np.maximum(np.abs(self.lo), np.abs(self.hi))

    def mig(self) -> np.ndarray:
        out = np.minimum(np.abs(self.lo), np.abs(self.hi))
        out[(self.lo <= 0.0) & (self.hi >= 0.0)] = 0.0
        return out

    def contains(self, other: "IArray | np.ndarray") -> bool:
        if isinstance(other, IArray):
            return bool(np.all(self.lo <= other.lo) and np.all(other.hi <= self.hi))
        other = np.asarray(other, dtype=np.float64)
        return bool(np.all(self.lo <= other) and np.all(other <= self.hi))

    def width(self) -> np.ndarray:
        return _vup(self.hi - self.lo)

    # -- indexing -----------------------------------------------------

    def __getitem__(self, idx):
        lo = self.lo[idx]
        hi = self.hi[idx]
        if np.ndim(lo) == 0:
            return Interval(float(lo), float(hi))
        return IArray(lo, hi, _checked=True)

    def __setitem__(self, idx, value):
        if isinstance(value, Interval):
            self.lo[idx] = value.lo
            self.hi[idx] = value.hi
        elif isinstance(value, IArray):
            self.lo[idx] = value.lo
            self.hi[idx] = value.hi
        else:
            value = np.asarray(value, dtype=np.float64)
            _vcheck(value)
            self.lo[idx] = value
            self.hi[idx] = value

    def item(self) -> Interval:
        return Interval(float(self.lo), float(self.hi))

    def tolist(self) -> list:
        flat_lo = self.lo.ravel()
        flat_hi = self.hi.ravel()
        items = [Interval(a, b) for a, b in zip(flat_lo, flat_hi)]
        return _unflatten(items, self.shape)

    # -- elementwise arithmetic ---------------------------------------

    def __neg__(self) -> "IArray":
        return IArray(-self.hi, -self.lo, _checked=True)

    def __add__(self, other) -> "IArray":
        o = _as_iarray(other)
        lo = self.lo + o.lo
        hi = self.hi + o.hi
        _vcheck(lo, hi)
        return IArray(_vdown(lo), _vup(hi), _checked=True)

    __radd__ = __add__

    def __sub__(self, other) -> "IArray":
        o = _as_iarray(other)
        lo = self.lo - o.hi
        hi = self.hi - o.lo
        _vcheck(lo, hi)
        return IArray(_vdown(lo), _vup(hi), _checked=True)

    def __rsub__(self, other) -> "IArray":
        return _as_iarray(other).__sub__(self)

    def __mul__(self, other) -> "IArray":
        o = _as_iarray(other)
        p1 = self.lo * o.lo
        p2 = self.lo * o.hi
        p3 = self.hi * o.lo
        p4 = self.hi * o.hi
        lo = np.minimum(np.minimum(p1, p2), np.minimum(p3, p4))
        hi = np.maximum(np.maximum(p1, p2), np.maximum(p3, p4))
        _vcheck(lo, hi)
        return IArray(_vdown(lo), _vup(hi), _checked=True)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "IArray":
        o = _as_iarray(other)
        if np.any((o.lo <= 0.0) & (o.hi >= 0.0)):
            raise DomainError("division by interval array containing zero")
        q1 = self.lo / o.lo
        q2 = self.lo / o.hi
        q3 = self.hi / o.lo
        q4 = self.hi / o.hi
        lo = np.minimum(np.minimum(q1, q2), np.minimum(q3, q4))
        hi = np.maximum(np.maximum(q1, q2), np.maximum(q3, q4))
        _vcheck(lo, hi)
        return IArray(_vdown(lo), _vup(hi), _checked=True)

    def abs(self) -> "IArray":
        return IArray(self.mig(), self.mag(), _checked=True)

    # -- accumulating operations --------------------------------------

    def sum(self, axis=None) -> "Interval | IArray":
        """Enclosure of the sum along ``axis`` (a-priori rounding bound)."""
        n = self.lo.size if axis is None else self.lo.shape[axis]
        slo = np.sum(self.lo, axis=axis)
        shi = np.sum(self.hi, axis=axis)
        bend = np.sum(self.mag(), axis=axis)
        err = _gamma(n) * bend
        lo = _vdown(_vdown(slo) - err)
        hi = _vup(_vup(shi) + err)
        _vcheck(lo, hi)
        if np.ndim(lo) == 0:
            return Interval(float(lo), float(hi))
        return IArray(lo, hi, _checked=True)

    def __matmul__(self, other) -> "IArray":
        return imatmul(self, _as_iarray(other))

    def __rmatmul__(self, other) -> "IArray":
        return imatmul(_as_iarray(other), self)


def _as_iarray(x) -> IArray:
    if isinstance(x, IArray):
        return x
    if isinstance(x, Interval):
        return IArray(np.asarray(x.lo), np.asarray(x.hi), _checked=True)
    if isinstance(x, (int, float, np.floating, np.integer)):
        v = np.asarray(float(x))
        _vcheck(v)
        return IArray(v, v, _checked=True)
    if isinstance(x, np.ndarray):
        return IArray.from_float(x)
    raise TypeError(f"cannot interpret {type(x).__name__} as IArray")


def _gamma(n: int) -> float:
    """Safe upper bound for the rounding constant n*u / (1 - n*u)."""
    if n <= 0:
        return 0.0
    if n * _U >= 0.5:
        raise RangeError("accumulation too long for the rounding model")
    return (n + 2) * _U


def _flatten(items):
    if isinstance(items, Interval):
        return [items]
    out = []
    for it in items:
        out.extend(_flatten(it))
    return out


def _nested_shape(items):
    if isinstance(items, Interval):
        return ()
    inner = _nested_shape(items[0]) if len(items) else ()
    return (len(items),) + inner


def _unflatten(flat, shape):
    if not shape:
        return flat[0]
    if len(shape) == 1:
        return list(flat)
    step = int(np.prod(shape[1:]))
    return [
        _unflatten(flat[i * step : (i + 1) * step], shape[1:])
        for i in range(shape[0])
    ]


_TINY_NORMAL = 2.0 ** -1022


def _flush_subnormal(m: np.ndarray, r: np.ndarray):
    """Round a midpoint-radius pair outward off the subnormal range.

    Subnormal operands (and subnormal products inside the GEMM) slow
    matrix multiplication down by orders of magnitude, and the widening
    slivers around exact zeros produce them in bulk.  Moving a
    subnormal midpoint into the radius and raising tiny positive radii
    to 2^-200 of the largest radius (at least the smallest normal) only
    widens the enclosure, by far less than one ulp of the dominant
    radius scale.
    """
    small = (m != 0.0) & (np.abs(m) < _TINY_NORMAL)
    if np.any(small):
        r = np.where(small, _vup(r + np.abs(m)), r)
        m = np.where(small, 0.0, m)
    rmax = float(np.max(r)) if r.size else 0.0
    floor = max(_TINY_NORMAL, np.ldexp(rmax, -200))
    r = np.where((r > 0.0) & (r < floor), floor, r)
    return m, r


def _rad_gemm(a: np.ndarray, r: np.ndarray) -> np.ndarray:
    """a @ r for nonnegative float operands, kept out of subnormal
    arithmetic.

    Tiny radii (rounding noise near 1e-308) make products inside the
    GEMM subnormal, which is orders of magnitude slower.  Flooring each
    operand's positive entries at 2^-200 of its own maximum and scaling
    both to unit magnitude guarantees normal products; the floors and
    the final result floor only widen, by less than an ulp of the
    dominant radius scale.
    """
    amx = float(np.max(a)) if a.size else 0.0
    rmx = float(np.max(r)) if r.size else 0.0
    if amx <= 0.0 or rmx <= 0.0:
        return a @ r
    a = np.where((a > 0.0) & (a < np.ldexp(amx, -200)), np.ldexp(amx, -200), a)
    r = np.where((r > 0.0) & (r < np.ldexp(rmx, -200)), np.ldexp(rmx, -200), r)
    ka = -np.frexp(amx)[1]
    kr = -np.frexp(rmx)[1]
    prod = (a * np.ldexp(1.0, ka)) @ (r * np.ldexp(1.0, kr))
    out = prod * np.ldexp(1.0, -(ka + kr))
    return np.where(prod > 0.0, np.maximum(out, _TINY_NORMAL), 0.0)


def imatmul(A: IArray, B: IArray) -> IArray:
    """Enclosure of an interval matrix product.

    Midpoint-radius product with three float GEMMs plus an a-priori
    bound on the accumulated rounding error.  The radius overestimation
    is bounded by a small constant factor, which is irrelevant here: the
    products feeding the certification bounds are thin (float times
    ulp-wide interval data).
    """
    if A.ndim not in (1, 2) or B.ndim not in (1, 2):
        raise ShapeError("imatmul expects 1-d or 2-d operands")
    n = A.shape[-1]
    if B.shape[0] != n:
        raise ShapeError(f"inner dimensions disagree: {A.shape} @ {B.shape}")
    mA, rA = _flush_subnormal(A.mid(), A.rad_up())
    mB, rB = _flush_subnormal(B.mid(), B.rad_up())
    P = mA @ mB
    absA = np.abs(mA)
    absB = np.abs(mB)
    R = _rad_gemm(absA, rB) + _rad_gemm(rA, absB + rB)
    E = _gamma(n) * (absA @ absB)
    # the radius pieces are nonnegative: one relative inflation covers
    # their own rounding
    total = (R + E) * (1.0 + (2 * n + 16) * _U)
    lo = _vdown(P - total)
    hi = _vup(P + total)
    _vcheck(lo, hi)
    return IArray(lo, hi, _checked=True)


# ---------------------------------------------------------------------------
# directed float helpers for nonnegative norm assemblies
# ---------------------------------------------------------------------------
#
# Norm bookkeeping (weighted column sums, maxima over weights) only ever
# needs guaranteed *upper* bounds of sums/products/quotients of
# nonnegative floats.  Doing that with full interval arrays would be
# wasteful; the helpers below compute in round-to-nearest and apply the
# standard relative inflation.


def usum(a: np.ndarray, axis=None) -> np.ndarray:
    """Upper bound of the sum of a nonnegative float array."""
    n = a.size if axis is None else a.shape[axis]
    s = np.sum(a, axis=axis)
    return _vup(s * (1.0 + 2.0 * (n + 1) * _U))


def umul(a, b):
    """Upper bound of a*b for nonnegative floats/arrays."""
    return _vup(np.multiply(a, b))


def udiv(a, b):
    """Upper bound of a/b for nonnegative floats/arrays (b > 0)."""
    b = np.asarray(b, dtype=np.float64)
    if np.any(b <= 0.0):
        raise DomainError("udiv needs strictly positive denominators")
    return _vup(np.divide(a, b))


def udot(a: np.ndarray, b: np.ndarray) -> float:
    """Upper bound of the dot product of nonnegative float vectors."""
    n = a.shape[-1]
    s = a @ b
    return float(_vup(s * (1.0 + 2.0 * (n + 1) * _U)))


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------


def vec_inf_norm(v: IArray) -> Interval:
    """Enclosure of the sup-norm of an interval vector."""
    mags = v.mag()
    migs = v.mig()
    return Interval(float(np.max(migs)), float(np.max(mags)))


def mat_inf_norm(A: IArray) -> Interval:
    """Enclosure of the max-row-sum operator norm (sup-norm induced)."""
    mags = A.mag()
    migs = A.mig()
    hi = float(np.max(usum(mags, axis=1)))
    lo = float(np.max(np.sum(migs, axis=1) * (1.0 - 2.0 * (A.shape[1] + 1) * _U)))
    return Interval(max(lo, 0.0), hi)


def weighted_vec_norm(v: IArray, eta: np.ndarray) -> Interval:
    """Enclosure of |v|_eta = sum_i |v_i| eta_i (eta exact floats > 0)."""
    eta = np.asarray(eta, dtype=np.float64)
    if np.any(eta <= 0.0):
        raise DomainError("weights must be positive")
    hi = udot(v.mag(), eta)
    lo = float(np.dot(v.mig(), eta) * (1.0 - 2.0 * (len(eta) + 2) * _U))
    return Interval(max(lo, 0.0), hi)


def weighted_op_norm(A: IArray, eta: np.ndarray) -> Interval:
    """Enclosure of |A|_eta = max_j (1/eta_j) sum_i |A_ij| eta_i."""
    eta = np.asarray(eta, dtype=np.float64)
    if np.any(eta <= 0.0):
        raise DomainError("weights must be positive")
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] != len(eta):
        raise ShapeError("weighted_op_norm expects square A matching eta")
    mags = A.mag()
    migs = A.mig()
    n = A.shape[0]
    cols_hi = usum(umul(mags, eta[:, None]), axis=0)
    hi = float(np.max(udiv(cols_hi, eta)))
    cols_lo = np.sum(migs * eta[:, None], axis=0) * (1.0 - 2.0 * (n + 2) * _U)
    lo = float(np.max(cols_lo / eta) * (1.0 - 4.0 * _U))
    return Interval(max(lo, 0.0), hi)


# ---------------------------------------------------------------------------
# verified linear solves (small systems)
# ---------------------------------------------------------------------------


def verified_solve(M: IArray, rhs: IArray) -> IArray:
    """Enclosure of M^-1 rhs via an approximate inverse and a Neumann
    residual argument.

    Requires ||I - R M||_inf < 1 for the float approximate inverse R of
    the midpoint of M; raises ValidationError otherwise.
    """
    from .errors import ValidationError

    n = M.shape[0]
    if M.shape != (n, n) or rhs.shape[0] != n:
        raise ShapeError("verified_solve shape mismatch")
    R = np.linalg.inv(M.mid())
    Ri = IArray.from_float(R)
    E = IArray.eye(n) - imatmul(Ri, M)
    rho = mat_inf_norm(E).hi
    if not rho < 1.0:
        raise ValidationError(
            f"approximate inverse not contracting: ||I-RM|| = {rho}"
        )
    xhat = R @ rhs.mid()
    xhat_i = IArray.from_float(xhat)
    resid = rhs - imatmul(M, xhat_i)
    d = imatmul(Ri, resid)
    dmag = float(np.max(d.mag()))
    denom = _down(1.0 - rho)
    if denom <= 0.0:
        raise ValidationError("Neumann denominator vanished")
    slack = (Interval(rho) * Interval(dmag) / Interval(denom)).hi
    ball = IArray(np.full(n, -slack), np.full(n, slack), _checked=True)
    return xhat_i + (d + ball)


def verified_inverse_op_norm(P: IArray, eta: np.ndarray) -> tuple[Interval, np.ndarray]:
    """Upper bound of |P^-1|_eta via P^-1 = (I - E)^-1 R, E = I - R P.

    Returns (bound, R).  Raises ValidationError when |E|_eta >= 1.
    """
    from .errors import ValidationError

    R = np.linalg.inv(P.mid())
    Ri = IArray.from_float(R)
    E = IArray.eye(P.shape[0]) - imatmul(Ri, P)
    enorm = weighted_op_norm(E, eta)
    if not enorm.hi < 1.0:
        raise ValidationError(f"|I - RP|_eta = {enorm.hi} >= 1")
    rnorm = weighted_op_norm(Ri, eta)
    denom = _down(1.0 - enorm.hi)
    if denom <= 0.0:
        raise ValidationError("Neumann denominator vanished")
    bound = rnorm / Interval(denom)
    return Interval(rnorm.lo, bound.hi), R


def krawczyk(G_fn, J_fn, w_hat, max_tries: int = 12, refine: int = 2) -> IArray:
    """Componentwise enclosure of a zero of G near the float candidate
    w_hat, via the Krawczyk test with epsilon inflation.

    G_fn maps an (n,) IArray to an (n,) enclosure of G over it; J_fn
    likewise to an (n, n) enclosure of the Jacobian.  With A a float
    approximate inverse of the midpoint Jacobian, d = A G(w_hat) and
    C = I - A J(w_hat + B), the image K(B) = C B - d of a candidate box
    B maps strictly into B only if w_hat + B contains a unique zero;
    the returned box is w_hat + K, shrunk by a few extra image passes
    with the same C (sound: segments from w_hat stay inside B).  The
    enclosure width tracks the candidate's residual, so polish w_hat
    with float Newton first.  Raises ValidationError when no inflation
    level verifies.
    """
    from .errors import RangeError, ValidationError

    w = np.asarray(w_hat, dtype=np.float64)
    n = w.shape[0]
    wi = IArray.from_float(w)
    try:
        Ai = IArray.from_float(np.linalg.inv(J_fn(wi).mid()))
    except np.linalg.LinAlgError as exc:
        raise ValidationError(
            "Krawczyk Jacobian midpoint not invertible"
        ) from exc
    d = imatmul(Ai, G_fn(wi))
    eye = IArray.eye(n)
    r = d.mag() * 1.05 + 1e-300
    for _ in range(max_tries):
        B = IArray(-r, r, _checked=True)
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                C = eye - imatmul(Ai, J_fn(wi + B))
                K = imatmul(C, B) - d
        except RangeError:
            # inflated past the floating-point range without verifying
            break
        if np.all(K.lo > B.lo) and np.all(K.hi < B.hi):
            for _ in range(refine):
                K2 = imatmul(C, K) - d
                K = IArray(np.maximum(K.lo, K2.lo), np.minimum(K.hi, K2.hi))
            return wi + K
        r = np.maximum(K.mag() * 1.3, r * 8.0) + 1e-300
    raise ValidationError("Krawczyk inflation did not verify a zero")
