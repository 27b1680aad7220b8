"""Tests for the radii-polynomial certification engine.

Oracles: exact Fraction evaluation of the defining coefficient
formulas, dense float sign scans for success/failure ground truth, a
high-precision quadratic-root oracle for the affine variant, and the
scalar toy map T(x) = x^2/4 + c whose fixed-point existence is known
analytically.
"""

import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from mepcert.errors import DomainError
from mepcert.contraction import (
    RadiiBounds,
    ValidationCertificate,
    certify,
    certify_affine,
    certify_componentwise,
    poly_eval,
    radii_polynomials,
)
from mepcert.interval import Interval

mpmath.mp.dps = 50

# printed saddle-validation numbers used as a pinned reference
SADDLE_Y = 5.291861481039345e-16
SADDLE_Z1 = 6.606610122939668e-15
SADDLE_Z2 = 23.179491548050574
SADDLE_RBAR = 8.277841556061024e-16


def bounds_of(Y, Z1=0.0, Z2=0.0, Z3=0.0, Z4=0.0, Z0=0.0):
    return RadiiBounds(
        Y=Interval(Y), Z1=Interval(Z1), Z2=Interval(Z2),
        Z3=Interval(Z3), Z4=Interval(Z4), Z0=Interval(Z0),
    )


def contains_fraction(iv, val):
    return Fraction(iv.lo) <= val <= Fraction(iv.hi)


class TestRadiiPolynomials:
    def test_trivial_bounds(self):
        P, Q = radii_polynomials(bounds_of(0.0))
        for n, want in enumerate([0.0, -1.0, 0.0, 0.0, 0.0]):
            assert P[n].lo <= want <= P[n].hi and P[n].width() < 1e-15
        for n, want in enumerate([-1.0, 0.0, 0.0, 0.0]):
            assert Q[n].lo <= want <= Q[n].hi and Q[n].width() < 1e-15
        pv = poly_eval(P, 2.0)
        qv = poly_eval(Q, 5.0)
        assert pv.lo <= -2.0 <= pv.hi and pv.width() < 1e-14
        assert qv.lo <= -1.0 <= qv.hi and qv.width() < 1e-14

    def test_coefficients_against_fraction_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            vals = rng.uniform(0.0, 5.0, size=6)
            Y, Z1, Z2, Z3, Z4, Z0 = [Fraction(v) for v in vals]
            P, Q = radii_polynomials(bounds_of(*vals))
            expected_P = [Y, -(1 - Z0 - Z1), Z2 / 2, Z3 / 6, Z4 / 24]
            expected_Q = [-(1 - Z0 - Z1), Z2, Z3 / 2, Z4 / 6]
            for n in range(5):
                assert contains_fraction(P[n], expected_P[n])
            for n in range(4):
                assert contains_fraction(Q[n], expected_Q[n])

    def test_eval_against_fraction_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            vals = rng.uniform(0.0, 3.0, size=6)
            r = float(rng.uniform(0.0, 2.0))
            P, _ = radii_polynomials(bounds_of(*vals))
            Y, Z1, Z2, Z3, Z4, Z0 = [Fraction(v) for v in vals]
            rf = Fraction(r)
            exact = (
                Fraction(Z4, 24) * rf**4 + Fraction(Z3, 6) * rf**3
                + Fraction(Z2, 2) * rf**2 - (1 - Z0 - Z1) * rf + Y
            )
            assert contains_fraction(poly_eval(P, r), exact)

    def test_printed_saddle_radius_is_negative_point(self):
        P, Q = radii_polynomials(bounds_of(SADDLE_Y, SADDLE_Z1, SADDLE_Z2))
        assert poly_eval(P, SADDLE_RBAR).hi < 0.0
        assert poly_eval(Q, SADDLE_RBAR).hi < 0.0

    def test_nonnegativity_enforced(self):
        with pytest.raises(DomainError):
            bounds_of(-1e-3)
        with pytest.raises(DomainError):
            bounds_of(0.0, Z2=-0.5)

    def test_eval_rejects_bad_radius(self):
        P, _ = radii_polynomials(bounds_of(0.0))
        with pytest.raises(DomainError):
            poly_eval(P, -1.0)
        with pytest.raises(DomainError):
            poly_eval(P, math.inf)


class TestCertify:
    def test_saddle_bounds_certify(self):
        cert = certify(bounds_of(SADDLE_Y, SADDLE_Z1, SADDLE_Z2))
        assert cert.success
        assert SADDLE_RBAR / 2 <= cert.rbar <= SADDLE_RBAR * 2
        assert cert.r_min.hi < cert.r_max.lo
        # external soundness re-check
        P, Q = radii_polynomials(cert.bounds[0])
        assert poly_eval(P, cert.rbar).hi < 0.0
        assert poly_eval(Q, cert.rbar).hi < 0.0
        # the printed radius lies inside the certified window
        assert cert.r_min.hi <= SADDLE_RBAR <= cert.r_max.lo

    def test_never_contracting_fails(self):
        cert = certify(bounds_of(1.0, Z1=2.0))
        assert not cert.success
        assert "Z(0)" in cert.diagnostic

    def test_large_defect_fails_with_p_diagnostic(self):
        cert = certify(bounds_of(5.0, Z1=0.0, Z2=1.0))
        assert not cert.success
        assert "P not verifiably negative" in cert.diagnostic

    def test_rbar_is_smallest_verified_radius(self):
        cert = certify(bounds_of(1e-8, Z1=0.1, Z2=2.0))
        assert cert.success
        # smallest root of r^2 - 0.9 r + 1e-8 is ~ Y / (1 - Z1)
        approx = 1e-8 / 0.9
        assert approx <= cert.rbar <= approx * (1 + 1e-6)

    def test_zero_defect_certifies_tiny_radius(self):
        cert = certify(bounds_of(0.0, Z1=0.5, Z2=1.0))
        assert cert.success
        assert cert.rbar <= 1e-15

    def test_certificate_serialization_roundtrip(self):
        cert = certify(bounds_of(SADDLE_Y, SADDLE_Z1, SADDLE_Z2))
        d = cert.to_dict()
        assert d["success"] is True
        assert float.fromhex(d["rbar"]) == cert.rbar
        assert float.fromhex(d["r_min"][1]) == cert.r_min.hi
        assert float.fromhex(d["bounds"][0]["Z2"][0]) == cert.bounds[0].Z2.lo
        assert d["components"][0]["index"] == 0

    def test_against_dense_sign_scan_many_cases(self):
        rng = np.random.default_rng(3)
        checked = 0
        for _ in range(1000):
            Y = float(10.0 ** rng.uniform(-12, 0.5))
            Z1 = float(rng.uniform(0.0, 1.3))
            Z2, Z3, Z4 = (float(v) for v in 10.0 ** rng.uniform(-3, 1, size=3))
            b = bounds_of(Y, Z1, Z2, Z3, Z4)
            cert = certify(b)
            rs = np.linspace(0.0, 10.0 * (Y + 1.0), 10_001)[1:]
            Pv = Z4 / 24 * rs**4 + Z3 / 6 * rs**3 + Z2 / 2 * rs**2 - (1 - Z1) * rs + Y
            Qv = Z4 / 6 * rs**3 + Z3 / 2 * rs**2 + Z2 * rs - (1 - Z1)
            margin = np.max(-np.maximum(Pv / (Y + 1.0), Qv))
            if abs(margin) < 1e-9:
                continue  # knife edge: oracle resolution insufficient
            checked += 1
            assert cert.success == bool(margin > 0), (b, margin)
        assert checked >= 950

    def test_against_million_point_scan_reference_cases(self):
        cases = [
            (SADDLE_Y, SADDLE_Z1, SADDLE_Z2, 0.0, 0.0),
            (0.25, 0.0, 0.5, 0.0, 0.0),
            (1.0, 0.0, 0.5, 0.0, 0.0),
            (0.1, 0.3, 1.0, 2.0, 3.0),
            (2.0, 0.3, 1.0, 2.0, 3.0),
            (1e-6, 0.9, 0.01, 0.0, 1.0),
            (0.5, 0.99, 0.001, 0.0, 0.0),
            (0.9999, 0.0, 0.0, 0.0, 0.0),
        ]
        rng = np.random.default_rng(4)
        for _ in range(12):
            cases.append((
                float(10.0 ** rng.uniform(-10, 0.3)), float(rng.uniform(0, 1.2)),
                float(10.0 ** rng.uniform(-3, 1)), float(10.0 ** rng.uniform(-3, 1)),
                float(10.0 ** rng.uniform(-3, 1)),
            ))
        for Y, Z1, Z2, Z3, Z4 in cases:
            cert = certify(bounds_of(Y, Z1, Z2, Z3, Z4))
            rs = np.linspace(0.0, 10.0 * (Y + 1.0), 1_000_001)[1:]
            Pv = Z4 / 24 * rs**4 + Z3 / 6 * rs**3 + Z2 / 2 * rs**2 - (1 - Z1) * rs + Y
            Qv = Z4 / 6 * rs**3 + Z3 / 2 * rs**2 + Z2 * rs - (1 - Z1)
            margin = np.max(-np.maximum(Pv / (Y + 1.0), Qv))
            if abs(margin) < 1e-10:
                continue
            assert cert.success == bool(margin > 0), (Y, Z1, Z2, Z3, Z4)

    def test_monotonicity_in_bounds(self):
        rng = np.random.default_rng(5)
        flips = 0
        for _ in range(1000):
            Y = float(10.0 ** rng.uniform(-10, 0.3))
            Z1 = float(rng.uniform(0.0, 1.2))
            Z2, Z3, Z4 = (float(v) for v in 10.0 ** rng.uniform(-3, 1, size=3))
            base = (Y, Z1, Z2, Z3, Z4)
            bumps = rng.uniform(0.0, 0.5, size=5) * rng.integers(0, 2, size=5)
            worse = tuple(v + d for v, d in zip(base, bumps))
            ok_base = certify(bounds_of(*base)).success
            ok_worse = certify(bounds_of(*worse)).success
            if ok_worse and not ok_base:
                flips += 1
        assert flips == 0

    def test_toy_quadratic_map_ground_truth(self):
        # T(x) = x^2/4 + c around the candidate 0: Y = |c|, Z1 = 0,
        # Z2 = 1/2; an interior fixed point of T within the contraction
        # region exists iff |c| < 1
        for c in [0.0, 0.25, -0.25, 0.5, -0.5, 0.9, -0.9, 0.999, -0.999]:
            cert = certify(bounds_of(abs(c), 0.0, 0.5))
            assert cert.success, c
            # fixed point nearest zero: 2 - 2 sqrt(1 - c)
            x_true = 2.0 - 2.0 * math.sqrt(1.0 - c)
            assert abs(x_true) <= cert.r_max.lo
            assert cert.rbar >= abs(x_true) * (1 - 1e-9)
        for c in [1.0001, -1.0001, 1.5, -1.5, 2.0, -2.0, 3.0]:
            assert not certify(bounds_of(abs(c), 0.0, 0.5)).success, c


class TestCertifyComponentwise:
    def test_single_component_reduces_to_certify(self):
        b = bounds_of(SADDLE_Y, SADDLE_Z1, SADDLE_Z2)
        one = certify(b)
        many = certify_componentwise([b])
        assert one.success == many.success
        assert one.rbar == many.rbar

    def test_common_radius_verified_in_all_components(self):
        bs = [
            bounds_of(1e-10, 0.1, 1.0),
            bounds_of(1e-6, 0.2, 0.5),
            bounds_of(1e-8, 0.0, 2.0, 1.0, 1.0),
        ]
        cert = certify_componentwise(bs)
        assert cert.success
        assert len(cert.components) == 3
        for rec, b in zip(cert.components, bs):
            P, Q = radii_polynomials(b)
            assert poly_eval(P, cert.rbar).hi < 0.0
            assert poly_eval(Q, cert.rbar).hi < 0.0
            assert rec.P_at_rbar.hi < 0.0 and rec.Q_at_rbar.hi < 0.0
        # the common rbar is the largest of the per-component smallest radii
        assert cert.rbar == max(rec.r_min.hi for rec in cert.components)

    def test_disjoint_windows_fail_with_both_reported(self):
        bs = [bounds_of(1e-6, 0.0, 1.0), bounds_of(3.0, 0.0, 0.1)]
        cert = certify_componentwise(bs)
        assert not cert.success
        assert "empty common window" in cert.diagnostic
        assert len(cert.components) == 2
        assert all(rec.r_min is not None for rec in cert.components)
        w0 = cert.components[0]
        w1 = cert.components[1]
        assert w0.r_max.lo < w1.r_min.hi  # genuinely disjoint

    def test_failing_component_reported_by_index(self):
        bs = [bounds_of(1e-10, 0.1, 1.0), bounds_of(1.0, 2.0)]
        cert = certify_componentwise(bs)
        assert not cert.success
        assert "component 1" in cert.diagnostic

    def test_empty_input_rejected(self):
        with pytest.raises(DomainError):
            certify_componentwise([])


class TestCertifyAffine:
    def test_saddle_numbers_with_cap(self):
        cert = certify_affine(
            Interval(SADDLE_Y), Interval(SADDLE_Z1), Interval(SADDLE_Z2), 1e-5
        )
        assert cert.success
        assert cert.rbar <= 1e-5
        assert SADDLE_RBAR / 2 <= cert.rbar <= SADDLE_RBAR * 2
        # the printed radius itself is accepted by the certified window
        assert cert.r_min.hi <= SADDLE_RBAR <= cert.r_max.lo
        assert cert.r_max.hi <= 1e-5

    def test_negative_discriminant_fails(self):
        cert = certify_affine(1.0, 0.0, 1.0, 1e-2)
        assert not cert.success

    def test_cap_enforced(self):
        cert = certify_affine(1e-3, 0.0, 1e-6, 1e-6)
        assert not cert.success
        assert "cap" in cert.diagnostic

    def test_against_quadratic_root_oracle(self):
        rng = np.random.default_rng(6)
        for _ in range(200):
            Y = float(10.0 ** rng.uniform(-16, -2))
            Z1 = float(rng.uniform(0.0, 0.9))
            Z2 = float(10.0 ** rng.uniform(-2, 2))
            disc = (1 - Z1) ** 2 - 2 * Z2 * Y
            if disc <= 1e-12:
                continue
            mY, mZ1, mZ2 = mpmath.mpf(Y), mpmath.mpf(Z1), mpmath.mpf(Z2)
            root = ((1 - mZ1) - mpmath.sqrt((1 - mZ1) ** 2 - 2 * mZ2 * mY)) / mZ2
            cert = certify_affine(Y, Z1, Z2, 1.0)
            assert cert.success
            # smallest verified radius sits just above the exact root; the
            # bisection resolves it to ~(bracket size) / 2^60 absolute
            resolution = mpmath.mpf((1 - Z1) / Z2) * mpmath.mpf(2.0) ** -55
            assert mpmath.mpf(cert.rbar) >= root * (1 - mpmath.mpf("1e-12"))
            assert mpmath.mpf(cert.rbar) <= root * (1 + mpmath.mpf("1e-6")) + resolution

    def test_rejects_bad_cap(self):
        with pytest.raises(DomainError):
            certify_affine(1e-6, 0.0, 1.0, 0.0)
