"""Radii-polynomial certification engine.

Given nonnegative bounds Y, Z0..Z4 on a degree-4 fixed-point map (Y on
the defect at the numerical candidate, Z0/Z1 on the first derivative
data, Z2..Z4 on the higher ones), the radii polynomials are

    P(r) = Z4/24 r^4 + Z3/6 r^3 + Z2/2 r^2 - (1 - Z0 - Z1) r + Y,
    Q(r) = P'(r) = Z4/6 r^3 + Z3/2 r^2 + Z2 r - (1 - Z0 - Z1).

Any radius r > 0 with P(r) < 0 and Q(r) < 0 certifies a unique zero /
fixed point within distance r of the candidate.  Since Q is P' and is
nondecreasing on r >= 0, P is decreasing up to Q's unique positive
root and increasing after it, so negativity of P at that root decides
success, and the certified radii form a single window (r_min, r_max).

The engine is problem independent; everything here works on plain
bound sets and is verified in interval arithmetic (bisection queries
only ever trust a sign when the whole interval enclosure is negative).

The chosen radius rbar is the smallest bisection-verified one (the
right end of the r_min bracket): downstream enclosures want the
tightest ball around the candidate, and both inequalities are
re-verified at rbar before a certificate is issued.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError
from .interval import IArray, Interval

_BISECT_STEPS = 60
_MAX_DOUBLINGS = 40


def _as_bound(value, name: str) -> Interval:
    iv = value if isinstance(value, Interval) else Interval(float(value))
    if iv.lo < 0.0:
        raise DomainError(f"{name} must be a nonnegative bound, got {iv}")
    return iv


@dataclass(frozen=True)
class RadiiBounds:
    """Bound set for one component (all entries upper bounds, >= 0)."""

    Y: Interval
    Z1: Interval = Interval(0.0)
    Z2: Interval = Interval(0.0)
    Z3: Interval = Interval(0.0)
    Z4: Interval = Interval(0.0)
    Z0: Interval = Interval(0.0)

    def __post_init__(self):
        for name in ("Y", "Z1", "Z2", "Z3", "Z4", "Z0"):
            object.__setattr__(self, name, _as_bound(getattr(self, name), name))

    def to_dict(self) -> dict:
        return {
            name: [getattr(self, name).lo.hex(), getattr(self, name).hi.hex()]
            for name in ("Y", "Z1", "Z2", "Z3", "Z4", "Z0")
        }


def radii_polynomials(b: RadiiBounds):
    """Interval coefficient vectors (ascending degree) of P and Q."""
    lin = -(Interval(1.0) - b.Z0 - b.Z1)
    P = IArray.from_intervals([b.Y, lin, b.Z2 / 2.0, b.Z3 / 6.0, b.Z4 / 24.0])
    Q = IArray.from_intervals([lin, b.Z2, b.Z3 / 2.0, b.Z4 / 6.0])
    return P, Q


def poly_eval(coeffs: IArray, r: float) -> Interval:
    """Horner evaluation at a nonnegative float point."""
    if not (math.isfinite(r) and r >= 0.0):
        raise DomainError(f"radius must be finite and nonnegative, got {r}")
    ri = Interval(r)
    acc = coeffs[len(coeffs) - 1]
    for n in range(len(coeffs) - 2, -1, -1):
        acc = acc * ri + coeffs[n]
    return acc


@dataclass(frozen=True)
class ComponentRecord:
    index: int
    r_min: Interval | None
    r_max: Interval | None
    P_at_rbar: Interval | None = None
    Q_at_rbar: Interval | None = None
    diagnostic: str = ""

    def to_dict(self) -> dict:
        def iv(x):
            return None if x is None else [x.lo.hex(), x.hi.hex()]

        return {
            "index": self.index,
            "r_min": iv(self.r_min),
            "r_max": iv(self.r_max),
            "P_at_rbar": iv(self.P_at_rbar),
            "Q_at_rbar": iv(self.Q_at_rbar),
            "diagnostic": self.diagnostic,
        }


@dataclass(frozen=True)
class ValidationCertificate:
    """Outcome of a certification attempt (failure is a value).

    On success rbar > 0 satisfies P(rbar) < 0 and Q(rbar) < 0 in every
    component, r_min.hi and r_max.lo are verified radii bracketing it,
    and components holds the per-component windows.
    """

    success: bool
    rbar: float = 0.0
    r_min: Interval | None = None
    r_max: Interval | None = None
    bounds: tuple = ()
    components: tuple = ()
    diagnostic: str = ""

    def to_dict(self) -> dict:
        def iv(x):
            return None if x is None else [x.lo.hex(), x.hi.hex()]

        return {
            "success": self.success,
            "rbar": self.rbar.hex(),
            "rbar_decimal": repr(self.rbar),
            "r_min": iv(self.r_min),
            "r_max": iv(self.r_max),
            "bounds": [b.to_dict() for b in self.bounds],
            "components": [c.to_dict() for c in self.components],
            "diagnostic": self.diagnostic,
        }


def _certified_negative(coeffs: IArray, r: float) -> bool:
    return poly_eval(coeffs, r).hi < 0.0


def _component_window(index: int, b: RadiiBounds):
    """Certified window of one bound set.

    Returns (record, P, Q); record.diagnostic is empty iff a window was
    found, in which case r_min.hi and r_max.lo carry verified radii.
    """
    P, Q = radii_polynomials(b)
    q0 = poly_eval(Q, 0.0)
    if not q0.hi < 0.0:
        diag = f"Z(0) >= 1: 1 - Z0 - Z1 is not verifiably positive (Q(0) = {q0})"
        return ComponentRecord(index, None, None, diagnostic=diag), P, Q

    # locate the minimum of P: Q is nondecreasing, bisect its sign change
    hi = (b.Y.hi + 1.0) * 1e3
    doublings = 0
    while _certified_negative(Q, hi) and doublings < _MAX_DOUBLINGS:
        hi *= 2.0
        doublings += 1
    if _certified_negative(Q, hi):
        a_q = hi
    else:
        lo = 0.0
        for _ in range(_BISECT_STEPS):
            mid = 0.5 * (lo + hi)
            if _certified_negative(Q, mid):
                lo = mid
            else:
                hi = mid
        a_q = lo
    if a_q <= 0.0:
        diag = "no radius with certified Q < 0"
        return ComponentRecord(index, None, None, diagnostic=diag), P, Q
    if not _certified_negative(P, a_q):
        diag = (
            f"P not verifiably negative at its minimum: P({a_q!r}) = {poly_eval(P, a_q)}"
        )
        return ComponentRecord(index, None, None, diagnostic=diag), P, Q

    # smallest verified radius: bisect P's sign change on [0, a_q]
    lo, hi = 0.0, a_q
    for _ in range(_BISECT_STEPS):
        mid = 0.5 * (lo + hi)
        if _certified_negative(P, mid):
            hi = mid
        else:
            lo = mid
    r_min = Interval(lo, hi)

    # largest verified radius: extend right from a_q, then bisect
    lo = a_q
    hi = None
    for _ in range(_MAX_DOUBLINGS):
        cand = lo * 2.0
        if _certified_negative(P, cand):
            lo = cand
        else:
            hi = cand
            break
    if hi is not None:
        for _ in range(_BISECT_STEPS):
            mid = 0.5 * (lo + hi)
            if _certified_negative(P, mid):
                lo = mid
            else:
                hi = mid
        r_max = Interval(lo, hi)
    else:
        r_max = Interval(lo, lo)
    return ComponentRecord(index, r_min, r_max), P, Q


def certify_componentwise(bound_sets) -> ValidationCertificate:
    """Common-radius certification over all components.

    Success needs every per-component window nonempty, the windows to
    intersect (max r_min < min r_max), and the common radius (smallest
    verified one) to re-verify P < 0 and Q < 0 in every component.
    """
    bound_sets = tuple(bound_sets)
    if not bound_sets:
        raise DomainError("at least one bound set is required")
    records = []
    polys = []
    for m, b in enumerate(bound_sets):
        rec, P, Q = _component_window(m, b)
        records.append(rec)
        polys.append((P, Q))
    bad = [r for r in records if r.diagnostic]
    if bad:
        diag = "; ".join(f"component {r.index}: {r.diagnostic}" for r in bad)
        return ValidationCertificate(
            False, bounds=bound_sets, components=tuple(records), diagnostic=diag
        )

    r_min = Interval(
        max(r.r_min.lo for r in records), max(r.r_min.hi for r in records)
    )
    r_max = Interval(
        min(r.r_max.lo for r in records), min(r.r_max.hi for r in records)
    )
    if not r_min.hi < r_max.lo:
        diag = (
            "empty common window: max r_min = "
            f"{r_min} does not precede min r_max = {r_max}"
        )
        return ValidationCertificate(
            False, bounds=bound_sets, components=tuple(records), diagnostic=diag
        )

    rbar = r_min.hi
    final = []
    for rec, (P, Q) in zip(records, polys):
        p_at = poly_eval(P, rbar)
        q_at = poly_eval(Q, rbar)
        if not (p_at.hi < 0.0 and q_at.hi < 0.0):
            diag = (
                f"component {rec.index}: re-verification at rbar = {rbar!r} failed "
                f"(P = {p_at}, Q = {q_at})"
            )
            return ValidationCertificate(
                False, bounds=bound_sets, components=tuple(records), diagnostic=diag
            )
        final.append(
            ComponentRecord(rec.index, rec.r_min, rec.r_max, p_at, q_at)
        )
    return ValidationCertificate(
        True, rbar, r_min, r_max, bound_sets, tuple(final)
    )


def certify(b: RadiiBounds) -> ValidationCertificate:
    """Single-component certification (componentwise with M = 1)."""
    return certify_componentwise([b])


def certify_affine(Y, Z1, Z2, r_star: float) -> ValidationCertificate:
    """Quadratic variant under an a-priori radius cap.

    The Z2 bound is only valid inside the ball of radius r_star, so the
    certified radius must not exceed it: Z2/2 r^2 - (1 - Z1) r + Y < 0
    with rbar <= r_star.
    """
    if not (math.isfinite(r_star) and r_star > 0.0):
        raise DomainError(f"r_star must be positive and finite, got {r_star}")
    b = RadiiBounds(Y=_as_bound(Y, "Y"), Z1=_as_bound(Z1, "Z1"), Z2=_as_bound(Z2, "Z2"))
    cert = certify_componentwise([b])
    if not cert.success:
        return cert
    if cert.rbar > r_star:
        diag = (
            f"smallest verified radius {cert.rbar!r} exceeds the a-priori cap "
            f"{r_star!r} inside which the bounds hold"
        )
        return ValidationCertificate(
            False, bounds=cert.bounds, components=cert.components, diagnostic=diag
        )
    r_max = Interval(min(cert.r_max.lo, r_star), min(cert.r_max.hi, r_star))
    return ValidationCertificate(
        True, cert.rbar, cert.r_min, r_max, cert.bounds, cert.components
    )
