"""Validated Taylor charts of one-dimensional unstable manifolds.

At a hyperbolic saddle X0 of f with a single unstable rate lambda > 0
and eigenvector v, the local unstable manifold admits a chart
p(theta) = sum_n p_n theta^n on [-1, 1] that conjugates the flow to
multiplication: phi_t(p(theta)) = p(e^{lambda t} theta).  Matching
Taylor coefficients in lambda theta p'(theta) = f(p(theta)) gives

    p_0 = X0,   p_1 = gamma v,   (n lambda I - Df(X0)) p_n = g_n,

where g_n is the order-n coefficient of f applied to the degree-(n-1)
truncation (finite convolutions, f being polynomial) and the scaling
gamma tunes the decay of the coefficients.

The truncated chart is certified through the tail modes n >= N: with
M_N bounding the solver norms ||(n lambda I - Df(X0))^-1||_eta for all
n >= N, the bounds Y, Z1..Z4 below make the quartic radii polynomials
verifiably negative at some rbar, and a true invariant chart p then
satisfies |p(theta) - p_hat(theta)|_eta <= rbar on [-1, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .contraction import RadiiBounds, ValidationCertificate, certify
from .errors import (
    DomainError,
    NumericalError,
    RangeError,
    ShapeError,
    ValidationError,
)
from .interval import (
    IArray,
    Interval,
    isum,
    krawczyk,
    udiv,
    verified_solve,
    weighted_op_norm,
    weighted_vec_norm,
)
from .series import eval_taylor, norm_taylor_tail, norm_weighted_block, perron_weights


def _nonneg(iv: Interval) -> Interval:
    # sums of nonnegative norms: widening slivers below zero carry no
    # information, and the bound consumers reject negative endpoints
    return Interval(max(iv.lo, 0.0), iv.hi)

# Decay band targeted by the gamma auto-tuner: the max-norm of the last
# Taylor coefficient should sit between these, so that the truncation
# defect is near the noise floor without wasting orders.
GAMMA_DECAY_LO = 1e-16
GAMMA_DECAY_HI = 1e-13
GAMMA_TUNE_STEPS = 8


def default_weights(Df: IArray) -> np.ndarray:
    """Euclidean-normalized Perron weights of |Df(X0)|.

    The Perron eigenvector minimizes the weighted operator norm
    |Df(X0)|_eta down to the spectral radius of |Df(X0)|, which is what
    keeps the tail solver bounds usable at moderate orders.
    """
    eta, _ = perron_weights(Df.mag())
    return eta / float(np.linalg.norm(eta))


@dataclass(frozen=True)
class MnBound:
    """Upper bound of ||(n lambda I - Df(X0))^-1||_eta for all n >= order."""

    value: Interval
    order: int
    lam: Interval
    df_norm: Interval
    q_product: Interval | None = None


def bound_Mn(Df0: IArray, lam: Interval, eta, order: int, eigen=None) -> MnBound:
    """Tail bound M_N >= sup over n >= N of the mode solver norms.

    Two routes, each nonincreasing in n so its value at n = N covers the
    whole tail: a Neumann bound 1/(N lambda - |Df(X0)|_eta) once the
    denominator is positive, and an eigenbasis bound
    |Q|_eta |Q^-1|_eta / ((N - 1) lambda), valid from N = 2 when usable
    eigen data is supplied.  The smaller available one is returned;
    if neither applies, ValidationError.
    """
    if order < 1:
        raise DomainError(f"order must be at least 1, got {order}")
    if not lam.lo > 0.0:
        raise DomainError("unstable rate must be verifiably positive")
    eta = np.asarray(eta, dtype=np.float64)
    df_norm = weighted_op_norm(Df0, eta)
    candidates = []
    q_product = None
    denom = lam * float(order) - df_norm
    if denom.lo > 0.0:
        candidates.append(Interval(1.0) / denom)
    if eigen is not None and order >= 2:
        try:
            q_product = eigen.inverse_norm_product(eta)
        except ValidationError:
            q_product = None
        else:
            candidates.append(q_product / (lam * float(order - 1)))
    if not candidates:
        raise ValidationError(
            f"no tail solver bound at order {order}: "
            f"{order} lambda = {(lam * float(order)).lo} does not clear "
            f"|Df(X0)|_eta = {df_norm.hi} and no eigenbasis route is available"
        )
    value = min(candidates, key=lambda c: c.hi)
    return MnBound(value=value, order=order, lam=lam, df_norm=df_norm,
                   q_product=q_product)


@dataclass(frozen=True)
class ManifoldParam:
    """Taylor chart of the unstable manifold at a validated saddle.

    ``coeffs`` rows are enclosures of p_0..p_{N-1}; ``eta`` is the
    weight vector of the certification norm.  ``rbar`` is None until
    validate_manifold succeeds, after which the true chart satisfies
    |p(theta) - p_hat(theta)|_eta <= rbar for every theta in [-1, 1].
    """

    coeffs: IArray
    gamma: float
    order: int
    lam: Interval
    eta: np.ndarray
    source: object = None
    rbar: float | None = None
    certificate: ValidationCertificate | None = None
    bounds: RadiiBounds | None = None

    def eval(self, theta) -> IArray:
        """Enclosure of p_hat(theta) for theta in [-1, 1]."""
        return eval_taylor(self.coeffs, theta)

    def eval_f(self, theta: float) -> np.ndarray:
        """Float (midpoint) chart value, for diagnostics and seeding."""
        acc = np.zeros(self.coeffs.shape[1])
        mid = self.coeffs.mid()
        for row in mid[::-1]:
            acc = acc * theta + row
        return acc

    def endpoint_enclosure(self, theta: float = 1.0) -> IArray:
        """Rigorous box around the true manifold point p(theta).

        The chart error is at most rbar / eta_i per component, added
        outward to the interval evaluation of p_hat(theta).
        """
        if self.rbar is None:
            raise ValidationError("manifold chart not certified yet")
        pad = udiv(np.full(len(self.eta), self.rbar), self.eta)
        return self.eval(theta) + IArray(-pad, pad)


def compute_coefficients(field, X0: IArray, lam: Interval, v: IArray,
                         gamma: float, order: int) -> IArray:
    """Jointly enclosed mode recursion; returns the (order, d) array.

    p_0 = X0 and p_1 = gamma v seed the recursion
    (n lambda I - Df(X0)) p_n = g_n.  A float forward pass supplies the
    candidate modes, and a single Krawczyk test over the stacked block
    (p_2, ..., p_{N-1}) then encloses the exact recursion solution for
    every selection of (X0, lambda, v) inside the input boxes.  The
    stacked system is block lower-triangular with the mode matrices on
    the diagonal and -(Df along the chart)_{n-m} below, so seed
    uncertainty enters each mode once, through the residual, instead of
    compounding mode over mode the way a forward interval recursion
    does (a ~1e6 endpoint inflation at the gamma scales used here).

    Raises RangeError when the float recursion overflows (gamma far too
    large) and ValidationError when the Krawczyk test does not verify.
    """
    if order < 2:
        raise DomainError("chart needs at least the two seeded coefficients")
    if not (np.isfinite(gamma) and gamma > 0.0):
        raise DomainError(f"gamma must be positive and finite, got {gamma}")
    d = X0.shape[0]
    if v.shape != (d,):
        raise ShapeError("eigenvector and equilibrium dimensions differ")
    N = int(order)
    if not isinstance(lam, Interval):
        lam = Interval(float(lam))
    p0 = X0
    p1 = v * float(gamma)
    if N == 2:
        P = IArray.zeros((d, 2))
        P[:, 0] = p0
        P[:, 1] = p1
        return P.T

    try:
        with np.errstate(over="ignore", invalid="ignore"):
            phat = _coefficients_f(field, X0.mid(), lam.mid(), v.mid(), gamma, N)
    except np.linalg.LinAlgError as exc:
        raise ValidationError(
            f"a mode matrix n lambda I - Df(X0) is singular (resonance): {exc}"
        ) from exc
    if not np.all(np.isfinite(phat)):
        raise RangeError(
            f"mode recursion overflowed at gamma = {gamma}; no finite "
            "candidate chart exists at this scaling"
        )
    m = d * (N - 2)

    def _full(w):
        P = IArray.zeros((d, N))
        P[:, 0] = p0
        P[:, 1] = p1
        P[:, 2:] = w.reshape(N - 2, d).T
        return P

    def G_fn(w):
        P = _full(w)
        fs = field.f_seq(P, "taylor", out_len=N)
        Gm = IArray.zeros((N - 2, d))
        for n in range(2, N):
            Gm[n - 2, :] = P[:, n] * (lam * float(n)) - fs[:, n]
        return Gm.reshape(m)

    def J_fn(w):
        P = _full(w)
        dfs = field.df_seq(P, "taylor", out_len=N - 2)
        J = IArray.zeros((m, m))
        eye = IArray.eye(d)
        for n in range(2, N):
            rn = d * (n - 2)
            J[rn:rn + d, rn:rn + d] = eye * (lam * float(n)) - dfs[:, :, 0]
            for mm in range(2, n):
                cm = d * (mm - 2)
                J[rn:rn + d, cm:cm + d] = -dfs[:, :, n - mm]
        return J

    try:
        sol = krawczyk(G_fn, J_fn, phat[2:].reshape(m))
    except ValidationError as exc:
        raise ValidationError(
            f"joint mode enclosure not verified at order {N}: {exc}"
        ) from exc
    return _full(sol).T


def compute_parameterization(field, saddle, gamma: float, order: int,
                             eta=None) -> ManifoldParam:
    """Unstable-manifold chart at a validated saddle carrying eigen data."""
    if getattr(saddle, "kind", "saddle") != "saddle":
        raise DomainError(f"unstable chart needs a saddle, got {saddle.kind}")
    eig = saddle.eigen
    if eig is None:
        raise DomainError("saddle carries no validated eigen data")
    X0 = saddle.extended_point
    coeffs = compute_coefficients(field, X0, eig.lam_unstable, eig.v, gamma, order)
    if eta is None:
        eta = default_weights(field.df_point(X0))
    return ManifoldParam(coeffs=coeffs, gamma=float(gamma), order=order,
                         lam=eig.lam_unstable, eta=np.asarray(eta, dtype=np.float64),
                         source=saddle)


def bounds_Y_Z(field, param: ManifoldParam, mb: MnBound) -> RadiiBounds:
    """Defect and contraction bounds of the tail fixed-point operator.

    Y re-solves the residual modes n = N..4N-4 of the truncated chart
    (f is quartic, nothing survives past 4N-4).  Z1 takes the shifted
    l^1 norms of the Taylor coefficients of each Df entry along the
    chart; the shift drops the order-0 coefficient, which equals
    Df(X0) and is already absorbed by the mode matrices.  Z2..Z4 take
    the full norms of the order-k derivative stacks, maximized over
    index multisets with the matching eta scaling.
    """
    P = param.coeffs.T
    d, N = P.shape
    if mb.order != N:
        raise DomainError("tail bound order does not match the chart order")
    eta = param.eta
    X0 = param.coeffs[0]
    Df0 = field.df_point(X0)
    eye = IArray.eye(d)

    fs = field.f_seq(P, "taylor")
    terms = []
    for n in range(N, fs.shape[-1]):
        Mn = eye * (param.lam * float(n)) - Df0
        Tn = verified_solve(Mn, fs[:, n])
        terms.append(weighted_vec_norm(Tn, eta))
    Y = _nonneg(isum(terms))

    dfs = field.df_seq(P, "taylor")
    table = [[norm_taylor_tail(dfs[i, j], start=1) for j in range(d)]
             for i in range(d)]
    Z1 = _nonneg(mb.value * norm_weighted_block(table, eta))

    zs = []
    for k in (2, 3, 4):
        best = Interval(0.0)
        for ms, stack in field.derivs_seq(k, P).items():
            tot = Interval(0.0)
            for i in range(d):
                tot = tot + norm_taylor_tail(stack[i]) * Interval(float(eta[i]))
            for j in ms:
                tot = tot / Interval(float(eta[j]))
            if tot.hi > best.hi:
                best = tot
        zs.append(_nonneg(mb.value * best))
    return RadiiBounds(Y=Y, Z1=Z1, Z2=zs[0], Z3=zs[1], Z4=zs[2])


def validate_manifold(field, param: ManifoldParam, eigen=None) -> ManifoldParam:
    """Certify the chart; returns it with rbar and certificate attached.

    Raises ValidationError (quoting the bound values) when the radii
    polynomials admit no verified radius.
    """
    if eigen is None and param.source is not None:
        eigen = param.source.eigen
    X0 = param.coeffs[0]
    Df0 = field.df_point(X0)
    mb = bound_Mn(Df0, param.lam, param.eta, param.order, eigen=eigen)
    b = bounds_Y_Z(field, param, mb)
    cert = certify(b)
    if not cert.success:
        raise ValidationError(
            f"manifold chart not certified: {cert.diagnostic} "
            f"(Y = {b.Y.hi:.3e}, Z1 = {b.Z1.hi:.3e}, Z2 = {b.Z2.hi:.3e})"
        )
    return replace(param, rbar=cert.rbar, certificate=cert, bounds=b)


def _coefficients_f(field, x0: np.ndarray, lam: float, v: np.ndarray,
                    gamma: float, order: int) -> np.ndarray:
    d = len(x0)
    P = np.zeros((d, order))
    P[:, 0] = x0
    P[:, 1] = gamma * v
    Df0 = field.df_point_f(x0)
    eye = np.eye(d)
    for n in range(2, order):
        g = field.f_seq_f(P[:, :n], "taylor", out_len=n + 1)[:, n]
        P[:, n] = np.linalg.solve(n * lam * eye - Df0, g)
    return P.T


def auto_gamma(field, saddle, order: int, start: float = 1.0) -> float:
    """Scale gamma so the last float coefficient lands in the decay band.

    The exact scaling p_n(gamma) = gamma^n p_n(1) makes the tail
    magnitude a power law in gamma, so each adjustment multiplies gamma
    by (target / tail)^(1/(N-1)) with the band's geometric center as
    target; one step normally lands inside (a fixed-ratio step cannot,
    since it moves the tail by order-many octaves at once).  At most
    eight adjustments; the last trial is returned if the band is never
    hit or the tail degenerates (identically zero or overflowing).
    """
    eig = saddle.eigen
    if eig is None:
        raise DomainError("saddle carries no validated eigen data")
    x0 = saddle.extended_point.mid()
    lam = eig.lam_unstable.mid()
    v = eig.v.mid()
    g = float(start)
    target = float(np.sqrt(GAMMA_DECAY_LO * GAMMA_DECAY_HI))
    for _ in range(GAMMA_TUNE_STEPS):
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                tail = float(np.max(np.abs(
                    _coefficients_f(field, x0, lam, v, g, order)[-1]
                )))
        except np.linalg.LinAlgError:
            break
        if GAMMA_DECAY_LO <= tail <= GAMMA_DECAY_HI:
            break
        if tail == 0.0 or not np.isfinite(tail):
            break
        g *= (target / tail) ** (1.0 / (order - 1))
    return g


def conjugacy_check(field, param: ManifoldParam, t: float, theta: float) -> float:
    """Non-rigorous conjugacy diagnostic: max-abs flow residual.

    Integrates the midpoint chart value p_hat(theta) over time t with
    RK45 and compares against p_hat(e^{lambda t} theta).  Backward time
    keeps the rescaled argument inside the chart domain, so t <= 0 is
    the useful direction for theta near the chart edge.
    """
    from scipy.integrate import solve_ivp

    lam = param.lam.mid()
    target = float(np.exp(lam * t)) * theta
    if abs(theta) > 1.0 or abs(target) > 1.0:
        raise DomainError("conjugacy check leaves the chart domain")
    start = param.eval_f(theta)
    if t == 0.0:
        end = start
    else:
        sol = solve_ivp(lambda _s, x: field.f_point_f(x), (0.0, t), start,
                        method="RK45", rtol=1e-12, atol=1e-12)
        if not sol.success:
            raise NumericalError(f"flow integration failed: {sol.message}")
        end = sol.y[:, -1]
    return float(np.max(np.abs(end - param.eval_f(target))))
