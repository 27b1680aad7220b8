"""Tests for piecewise Chebyshev certification of connecting orbits.

Oracles: an independent Chebyshev collocation fit (sample the candidate
with Clenshaw, evaluate the field pointwise, retransform) for the rows
of the orbit map, central finite differences of the float residual for
the truncated Jacobian, RK45 at tolerance 1e-12 for solution
genuineness, the zero field (exact solution: constant pieces, zero
residual, near-zero bounds), and perturbation monotonicity for the
Y/Z0 bounds.
"""

from dataclasses import replace

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from mepcert.errors import (
    ConvergenceError,
    DomainError,
    ShapeError,
    ValidationError,
)
from mepcert.interval import IArray, Interval
from mepcert.series import eval_cheb_clenshaw, eval_cheb_left, eval_cheb_right
from mepcert.potential import MBExtendedField, MullerBrownPotential, linear_field
from mepcert.equilibria import (
    TrappingSquare,
    find_zero,
    validate_saddle_frame,
    validate_trapping_square,
    validate_zero,
)
from mepcert.manifold import compute_parameterization, validate_manifold
from mepcert.orbit import (
    RESID_TOL,
    OrbitProblem,
    bound_Y,
    bound_Z0,
    bound_Z1,
    bound_Zk,
    build_A_dagger_and_A,
    build_F,
    choose_weights,
    fit_piecewise,
    make_grid,
    make_problem,
    solve_truncated,
    validate_orbit,
)
from mepcert.orbit import _cfrak_parts, _resid_trunc_f, _truncated_jacobian_f

# chart setups: guess, gamma, order
CHARTS = {
    "Sad1": ((-0.8, 0.6), 5.0, 20),
    "Sad2": ((0.2, 0.3), 15.0, 30),
}
MINIMA = {
    "Min1": (-0.56, 1.44),
    "Min2": (-0.05, 0.47),
    "Min3": (0.62, 0.03),
}
# legs: saddle, branch end, minimum, tau, pieces, order, nu
LEGS = {
    "11": ("Sad1", +1.0, "Min1", 0.015, 10, 30, 1.4),
    "22": ("Sad2", +1.0, "Min2", 0.018, 10, 20, 1.7),
    "23": ("Sad2", -1.0, "Min3", 0.012, 10, 20, 1.7),
}


@pytest.fixture(scope="module")
def pot():
    return MullerBrownPotential()


@pytest.fixture(scope="module")
def field():
    return MBExtendedField()


@pytest.fixture(scope="module")
def charts(pot, field):
    out = {}
    for name, (guess, gamma, order) in CHARTS.items():
        frame = validate_saddle_frame(pot, field, np.array(guess))
        par = compute_parameterization(field, frame, gamma, order)
        out[name] = validate_manifold(field, par)
    return out


@pytest.fixture(scope="module")
def squares(pot):
    return {
        name: validate_trapping_square(
            pot, validate_zero(pot, find_zero(pot, np.array(guess))), 0.01, 16
        )
        for name, guess in MINIMA.items()
    }


def _solve_leg(field, charts, squares, key):
    saddle, theta, minimum, tau, pieces, order, nu = LEGS[key]
    prob = make_problem(
        field, charts[saddle], squares[minimum],
        tau=tau, pieces=pieces, order=order, nu=nu, theta=theta,
    )
    ivp = solve_ivp(
        lambda t, x: field.f_point_f(x), (0.0, tau), prob.boundary.mid(),
        method="RK45", rtol=1e-12, atol=1e-12, dense_output=True,
    )
    return prob, solve_truncated(prob, fit_piecewise(ivp.sol, prob.grid, order))


@pytest.fixture(scope="module")
def leg11(field, charts, squares):
    return _solve_leg(field, charts, squares, "11")


@pytest.fixture(scope="module")
def ops11(leg11):
    return build_A_dagger_and_A(*leg11)


@pytest.fixture(scope="module")
def sol11(leg11):
    return validate_orbit(*leg11)


def _zero_problem(M=3, K=12, nu=1.5, tau=0.09, value=(0.3, -0.2)):
    zfield = linear_field(np.zeros((2, 2)))
    point = np.array(value)
    square = TrappingSquare(IArray.from_float(point), 0.01, 0)
    prob = make_problem(
        zfield, IArray.from_float(point), square,
        tau=tau, pieces=M, order=K, nu=nu,
    )
    X = np.zeros((M, 2, K))
    X[:, :, 0] = point
    return prob, X


def _decayed_coeffs(rng, base, M, K):
    X = rng.standard_normal((M, len(base), K)) * 0.02 / 3.0 ** np.arange(K)
    X[:, :, 0] += base
    return X


class TestBuildF:
    def test_vanishes_at_equilibrium(self, pot, field, squares):
        cp = validate_zero(pot, find_zero(pot, np.array(MINIMA["Min1"])))
        point = cp.extended_point.mid()
        prob = make_problem(
            field, IArray.from_float(point), squares["Min1"],
            tau=0.01, pieces=3, order=5,
        )
        X = np.zeros((3, 6, 5))
        X[:, :, 0] = point
        F = build_F(prob, X)
        assert float(np.max(F.abs().hi)) <= 1e-9

    def test_zero_field_exact(self):
        prob, X = _zero_problem()
        F = build_F(prob, X)
        # only outward ulp widening of exact zeros remains
        assert float(np.max(F.abs().hi)) <= 1e-300

    def test_collocation_oracle(self, pot, field, squares):
        rng = np.random.default_rng(7)
        M, K = 2, 6
        base = pot.lift_f(np.array([-0.55, 1.44]))
        X = _decayed_coeffs(rng, base, M, K)
        prob = make_problem(
            field, IArray.from_float(X[0, :, 0]), squares["Min1"],
            tau=0.01, pieces=M, order=K,
        )
        F = build_F(prob, X)
        NF = (K - 1) * 4 + 2
        n = NF
        xj = np.cos(np.pi * np.arange(n + 1) / n)
        T = np.cos(np.pi * np.outer(np.arange(n + 1), np.arange(n + 1)) / n)
        w = np.ones(n + 1)
        w[0] = w[-1] = 0.5
        for m in range(M):
            vals = np.array(
                [eval_cheb_clenshaw(X[m].T[:, None].T, x)[:, 0] for x in xj]
            )
            g = np.array([field.f_point_f(v) for v in vals])
            a = 0.5 * ((T * w) @ g * (2.0 / n)).T  # (dim, n+1)
            dt4 = 0.25 * (prob.grid[m + 1] - prob.grid[m])
            kv = np.arange(1, NF)
            expect = np.zeros((6, NF - 1))
            expect += kv * np.pad(X[m][:, 1:], ((0, 0), (0, NF - K)))
            expect -= dt4 * (a[:, : NF - 1] - a[:, 2 : NF + 1])
            scale = 1.0 + np.max(np.abs(expect))
            assert np.max(np.abs(F.mid()[m, :, 1:] - expect)) <= 1e-9 * scale

    def test_glue_rows(self, pot, field, squares):
        rng = np.random.default_rng(11)
        M, K = 3, 6
        base = pot.lift_f(np.array([-0.55, 1.44]))
        X = _decayed_coeffs(rng, base, M, K)
        boundary = IArray.from_float(X[0, :, 0] + 1e-3)
        prob = make_problem(
            field, boundary, squares["Min1"], tau=0.01, pieces=M, order=K
        )
        F = build_F(prob, X)
        for i in range(6):
            left = float(eval_cheb_left(IArray.from_float(X[0, i])).mid())
            got = float(F[0, i, 0].mid())
            assert abs(got - (left - boundary.mid()[i])) <= 1e-12
        for m in range(1, M):
            for i in range(6):
                left = float(eval_cheb_left(IArray.from_float(X[m, i])).mid())
                right = float(eval_cheb_right(IArray.from_float(X[m - 1, i])).mid())
                assert abs(float(F[m, i, 0].mid()) - (left - right)) <= 1e-12

    def test_rejects_wrong_shape(self, field, squares):
        prob = make_problem(
            field, IArray.from_float(np.zeros(6)), squares["Min1"],
            tau=0.01, pieces=2, order=4,
        )
        with pytest.raises(ShapeError):
            build_F(prob, np.zeros((2, 6, 5)))


class TestSolveTruncated:
    def test_first_leg_residual(self, leg11):
        prob, X = leg11
        assert float(np.max(np.abs(_resid_trunc_f(prob, X)))) <= RESID_TOL

    def test_zero_field_exact_solve(self):
        prob, X = _zero_problem(M=2, K=6)
        rng = np.random.default_rng(3)
        guess = X + rng.standard_normal(X.shape) * 0.05
        solved = solve_truncated(prob, guess)
        assert np.max(np.abs(solved - X)) <= 1e-12

    def test_non_finite_guess_raises(self, field, squares, leg11):
        prob, X = leg11
        bad = X.copy()
        bad[0, 0, 0] = np.nan
        with pytest.raises(ConvergenceError):
            solve_truncated(prob, bad)


class TestOperators:
    def test_trivial_problem_identity(self):
        prob, X = _zero_problem(M=1, K=1, tau=0.01)
        ops = build_A_dagger_and_A(prob, X)
        assert np.max(np.abs(ops.jac.mid() - np.eye(2))) <= 1e-300
        assert np.max(np.abs(ops.inv - np.eye(2))) <= 1e-12

    def test_near_inverse(self, leg11, ops11):
        prob, _ = leg11
        n = prob.M * 6 * prob.K
        B = np.eye(n) - ops11.inv @ ops11.jac.mid()
        assert np.max(np.abs(B)) <= 1e-8

    def test_stored_pieces(self, leg11, ops11):
        prob, _ = leg11
        assert len(ops11.deriv_series) == prob.M
        assert len(ops11.dts) == prob.M
        Lu = (prob.K - 1) * 3 + 1
        for m in range(prob.M):
            assert ops11.deriv_series[m].shape == (6, 6, Lu)
            dt = prob.grid[m + 1] - prob.grid[m]
            assert ops11.dts[m].contains(dt)


class TestBoundY:
    def test_zero_field_zero(self):
        prob, X = _zero_problem()
        ops = build_A_dagger_and_A(prob, X)
        Y = bound_Y(prob, X, ops)
        assert all(y.hi <= 1e-12 for y in Y)

    def test_first_leg_magnitude(self, leg11, ops11):
        prob, X = leg11
        Y = bound_Y(prob, X, ops11)
        top = max(y.hi for y in Y)
        assert 1e-16 <= top <= 1e-9

    def test_boundary_inflation_increases(self, leg11, ops11):
        prob, X = leg11
        Y0 = bound_Y(prob, X, ops11)
        pad = IArray.from_intervals([Interval(-1e-11, 1e-11)] * 6)
        inflated = replace(prob, boundary=prob.boundary + pad)
        Y1 = bound_Y(inflated, X, ops11)
        assert Y1[0].hi > Y0[0].hi
        assert max(y.hi for y in Y1) > max(y.hi for y in Y0)


class TestBoundZ0:
    def test_first_leg_small(self, leg11, ops11):
        prob, _ = leg11
        Z0 = bound_Z0(prob, ops11)
        assert 0.0 < max(z.hi for z in Z0) <= 1e-8

    def test_inverse_defect_scales(self, leg11, ops11):
        prob, _ = leg11
        tops = []
        for eps in (1e-6, 1e-5):
            ops = replace(ops11, inv=ops11.inv * (1.0 + eps))
            tops.append(max(z.hi for z in bound_Z0(prob, ops)))
        ratio = tops[1] / tops[0]
        assert 8.0 < ratio < 12.5


class TestBoundZ1:
    def test_first_leg_contraction_margin(self, leg11, ops11):
        prob, X = leg11
        eta = choose_weights(prob, X, ops11)
        weighted = replace(prob, eta=eta)
        Z0 = bound_Z0(weighted, ops11)
        Z1 = bound_Z1(weighted, X, ops11)
        assert max((z0 + z1).hi for z0, z1 in zip(Z0, Z1)) < 1.0

    def test_zero_field_tail_shrinks_with_order(self):
        tops = []
        for K in (6, 12):
            prob, X = _zero_problem(M=2, K=K)
            ops = build_A_dagger_and_A(prob, X)
            tops.append(max(z.hi for z in bound_Z1(prob, X, ops)))
        assert 0.0 < tops[1] < tops[0]

    def test_zero_field_parts(self):
        prob, X = _zero_problem(M=2, K=12)
        ops = build_A_dagger_and_A(prob, X)
        cfin, ctail = _cfrak_parts(prob, X, ops)
        assert np.all(cfin >= 0.0) and np.all(ctail >= 0.0)
        # with f = 0 every piece still sees its own tail columns
        for m in range(prob.M):
            assert np.max(ctail[m, :, m, :]) > 0.0


class TestBoundZk:
    def test_quartic_term_ignores_coefficients(self, leg11, ops11):
        prob, X = leg11
        rng = np.random.default_rng(5)
        other = X + rng.standard_normal(X.shape) * 1e-3
        Z4a = bound_Zk(prob, X, ops11, 4)
        Z4b = bound_Zk(prob, other, ops11, 4)
        assert all(a.hi == b.hi for a, b in zip(Z4a, Z4b))

    def test_zero_field_curvature_zero(self):
        prob, X = _zero_problem(M=2, K=6)
        ops = build_A_dagger_and_A(prob, X)
        Z2 = bound_Zk(prob, X, ops, 2)
        assert max(z.hi for z in Z2) <= 1e-280

    def test_relaxed_dominates_sharp(self, leg11, ops11):
        prob, X = leg11
        for k in (2, 3, 4):
            sharp = bound_Zk(prob, X, ops11, k, mode="sharp")
            relaxed = bound_Zk(prob, X, ops11, k, mode="relaxed")
            assert all(r.hi >= s.hi * (1.0 - 1e-12) for s, r in zip(sharp, relaxed))

    def test_rejects_bad_order(self, leg11, ops11):
        prob, X = leg11
        for k in (1, 5):
            with pytest.raises(DomainError):
                bound_Zk(prob, X, ops11, k)


class TestValidateOrbit:
    def test_first_leg_certifies(self, leg11, sol11):
        prob, X = leg11
        assert 0.0 < sol11.rho_bar <= 1e-8
        assert len(sol11.bounds) == prob.M
        assert sol11.eta.shape == (prob.M, 6)
        cx, cy = prob.target.center.mid()
        h = prob.target.half_side
        assert cx - h < sol11.endpoint[0].lo <= sol11.endpoint[0].hi < cx + h
        assert cy - h < sol11.endpoint[1].lo <= sol11.endpoint[1].hi < cy + h

    def test_shared_minimum_leg(self, field, charts, squares):
        prob, X = _solve_leg(field, charts, squares, "22")
        sol = validate_orbit(prob, X)
        assert sol.rho_bar <= 1e-8

    def test_short_leg(self, field, charts, squares):
        prob, X = _solve_leg(field, charts, squares, "23")
        sol = validate_orbit(prob, X)
        assert sol.rho_bar <= 1e-8

    def test_truncated_time_fails_endpoint(self, field, charts, squares):
        prob = make_problem(
            field, charts["Sad1"], squares["Min1"],
            tau=0.0015, pieces=4, order=12, nu=1.4,
        )
        ivp = solve_ivp(
            lambda t, x: field.f_point_f(x), (0.0, prob.tau),
            prob.boundary.mid(), method="RK45",
            rtol=1e-12, atol=1e-12, dense_output=True,
        )
        X = solve_truncated(prob, fit_piecewise(ivp.sol, prob.grid, prob.K))
        with pytest.raises(ValidationError, match="endpoint"):
            validate_orbit(prob, X)

    def test_zero_field_certifies(self):
        prob, X = _zero_problem()
        sol = validate_orbit(prob, X)
        assert sol.rho_bar <= 1e-6
        assert sol.endpoint[0].contains(0.3)
        assert sol.endpoint[1].contains(-0.2)


class TestSolutionInvariants:
    def test_continuity_overlap(self, sol11):
        prob = sol11.problem
        X, rho = sol11.coeffs, sol11.rho_bar
        for m in range(prob.M - 1):
            for i in range(6):
                right = eval_cheb_right(IArray.from_float(X[m, i]))
                left = eval_cheb_left(IArray.from_float(X[m + 1, i]))
                pad_r = rho / sol11.eta[m, i]
                pad_l = rho / sol11.eta[m + 1, i]
                lo = max(right.lo - pad_r, left.lo - pad_l)
                hi = min(right.hi + pad_r, left.hi + pad_l)
                assert lo <= hi

    def test_jacobian_matches_finite_differences(self, pot, field, squares):
        rng = np.random.default_rng(13)
        M, K = 2, 4
        base = pot.lift_f(np.array([-0.55, 1.44]))
        X = _decayed_coeffs(rng, base, M, K)
        prob = make_problem(
            field, IArray.from_float(X[0, :, 0]), squares["Min1"],
            tau=1e-3, pieces=M, order=K,
        )
        J = _truncated_jacobian_f(prob, X)
        h = 1e-6
        for _ in range(3):
            V = rng.standard_normal(X.shape)
            V /= np.max(np.abs(V))
            fd = (
                _resid_trunc_f(prob, X + h * V) - _resid_trunc_f(prob, X - h * V)
            ) / (2.0 * h)
            Jv = J @ V.ravel()
            assert np.max(np.abs(fd - Jv)) <= 1e-6 * (1.0 + np.max(np.abs(Jv)))

    def test_matches_independent_integration(self, field, sol11):
        prob, X = sol11.problem, sol11.coeffs
        x0 = np.array(
            [float(eval_cheb_clenshaw(X[0, i], np.array([-1.0]))[0]) for i in range(6)]
        )
        ivp = solve_ivp(
            lambda t, x: field.f_point_f(x), (0.0, prob.tau), x0,
            method="RK45", rtol=1e-12, atol=1e-12, dense_output=True,
        )
        ts = np.linspace(0.0, prob.tau, 100)
        for t in ts:
            m = min(int(np.searchsorted(prob.grid, t, side="right")) - 1, prob.M - 1)
            m = max(m, 0)
            dt = prob.grid[m + 1] - prob.grid[m]
            s = 2.0 * (t - prob.grid[m]) / dt - 1.0
            val = np.array(
                [float(eval_cheb_clenshaw(X[m, i], np.array([s]))[0]) for i in range(6)]
            )
            assert np.allclose(val, ivp.sol(t), rtol=1e-8, atol=1e-8)


class TestProblemValidation:
    def test_rejects_bad_scalars(self, field, squares):
        boundary = IArray.from_float(np.zeros(6))
        sq = squares["Min1"]
        with pytest.raises(DomainError):
            make_problem(field, boundary, sq, tau=-1.0)
        with pytest.raises(DomainError):
            make_problem(field, boundary, sq, tau=0.01, nu=1.0)
        with pytest.raises(DomainError):
            make_problem(field, boundary, sq, tau=0.01, zk_mode="fast")

    def test_rejects_bad_grid(self, field, squares):
        boundary = IArray.from_float(np.zeros(6))
        with pytest.raises(DomainError):
            make_problem(
                field, boundary, squares["Min1"], tau=0.01,
                pieces=2, grid=np.array([0.0, 0.02, 0.01]),
            )

    def test_rejects_bad_eta(self, field, squares):
        boundary = IArray.from_float(np.zeros(6))
        with pytest.raises(DomainError):
            make_problem(
                field, boundary, squares["Min1"], tau=0.01,
                eta=np.zeros(6),
            )

    def test_grid_matches_tau(self):
        g = make_grid(0.015, 10)
        assert g.shape == (11,)
        assert g[0] == 0.0 and g[-1] == 0.015
