"""Certified connecting orbits as piecewise Chebyshev enclosures.

A trajectory X of X' = f(X) on [0, tau], launched from an enclosure of
an unstable-chart endpoint p(1) and aimed at a trapping square, is
discretized on a grid 0 = t^(0) < ... < t^(M) = tau.  Rescaling each
piece to [-1, 1] and expanding in Chebyshev coefficients turns the
integrated flow equation into the zero finding problem

    F^(m)_0 = X^(m)(-1) - X^(m-1)(+1)                       (gluing)
    F^(m)_k = k X^(m)_k - (dt_m/4) (f(X^(m))_{k-1} - f(X^(m))_{k+1})

for k >= 1, with X^(0)(+1) read as the launch enclosure.  F is a
compact perturbation of the diagonal map (k X_k)_k on a product of
weighted ell^1_nu coefficient spaces (norms from :mod:`.series`), so
the Newton-like operator T = x - A F(x), with A acting as a float
inverse of the truncated Jacobian on the leading K modes and exactly
as 1/k on the tail, is contracted through per-piece radii polynomial
bounds Y, Z0, Z1, Z2..Z4.  A successful certificate gives rho_bar
such that a true orbit stays within rho_bar of the numerical
coefficients in the weighted norm; the rho_bar-inflated value at tau
is then required to sit strictly inside the target square, which
traps the forward flow for all later times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .contraction import RadiiBounds, ValidationCertificate, certify_componentwise
from .equilibria import TrappingSquare
from .errors import (
    ConvergenceError,
    DomainError,
    NumericalError,
    ShapeError,
    ValidationError,
)
from .interval import (
    IArray,
    Interval,
    _U,
    _vdown,
    _vup,
    imatmul,
    udiv,
    udot,
    umul,
    usum,
)
from .series import cheb_weights, eval_cheb_left, eval_cheb_right, perron_weights

RESID_TOL = 1e-12
NEWTON_MAX_ITERS = 30


# ---------------------------------------------------------------------------
# problem and result records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OrbitProblem:
    """One connecting-orbit certification instance.

    boundary encloses the launch value componentwise (already inflated
    by the chart validation radius when built from one); grid holds the
    M + 1 breakpoints; eta are the per-piece norm weights, (M, dim) or
    None to let :func:`validate_orbit` pick Perron weights itself.
    """

    field: object
    boundary: IArray
    target: TrappingSquare
    tau: float
    grid: np.ndarray
    M: int
    K: int
    nu: float
    eta: np.ndarray | None = None
    source: object = None
    theta: float = 1.0
    zk_mode: str = "sharp"

    def __post_init__(self):
        if not (math.isfinite(self.tau) and self.tau > 0.0):
            raise DomainError(f"tau must be positive and finite, got {self.tau}")
        if self.nu <= 1.0:
            raise DomainError("nu must exceed 1")
        if self.M < 1 or self.K < 1:
            raise DomainError("need at least one piece and one mode per piece")
        if self.zk_mode not in ("sharp", "relaxed"):
            raise DomainError(f"unknown zk_mode {self.zk_mode!r}")
        grid = np.asarray(self.grid, dtype=np.float64)
        if grid.shape != (self.M + 1,):
            raise ShapeError(f"grid must hold M + 1 = {self.M + 1} breakpoints")
        if grid[0] != 0.0 or grid[-1] != self.tau or np.any(np.diff(grid) <= 0.0):
            raise DomainError("grid must ascend from 0 to tau")
        object.__setattr__(self, "grid", grid)
        d = self.field.dim
        if self.boundary.shape != (d,):
            raise ShapeError(f"boundary must have shape ({d},)")
        if self.eta is not None:
            eta = np.asarray(self.eta, dtype=np.float64)
            if eta.shape == (d,):
                eta = np.tile(eta, (self.M, 1))
            if eta.shape != (self.M, d):
                raise ShapeError(f"eta must have shape ({self.M}, {d})")
            if not np.all(np.isfinite(eta)) or np.any(eta <= 0.0):
                raise DomainError("eta must be strictly positive and finite")
            object.__setattr__(self, "eta", eta)


@dataclass(frozen=True)
class OrbitOperators:
    """Finite parts of the adjoint pair: the interval truncated
    Jacobian (A-dagger acts as it on the leading modes and as k on the
    tail) and the float inverse of its midpoint (A acts as it and as
    1/k), plus the per-piece Df coefficient series and step lengths
    they were built from."""

    jac: IArray
    inv: np.ndarray
    deriv_series: tuple
    dts: tuple


@dataclass(frozen=True)
class OrbitSolution:
    """A certified orbit: coefficients, per-piece bound sets, the
    contraction certificate, the validation radius in the weighted
    norm, the weights used, and the rho_bar-inflated endpoint."""

    problem: OrbitProblem
    coeffs: np.ndarray
    bounds: tuple
    certificate: ValidationCertificate
    rho_bar: float
    eta: np.ndarray
    endpoint: IArray


def make_grid(tau: float, pieces: int) -> np.ndarray:
    """Uniform breakpoints 0 = t^(0) < ... < t^(M) = tau."""
    return np.linspace(0.0, float(tau), int(pieces) + 1)


def make_problem(
    field,
    source,
    target: TrappingSquare,
    tau: float,
    pieces: int = 10,
    order: int = 20,
    nu: float = 1.5,
    grid: np.ndarray | None = None,
    eta: np.ndarray | None = None,
    theta: float = 1.0,
    zk_mode: str = "sharp",
) -> OrbitProblem:
    """Assemble an :class:`OrbitProblem`.

    source is either a validated chart (anything with an
    endpoint_enclosure method; its value box at the chart coordinate
    theta, +1 or -1 for the two branch ends, becomes the launch
    enclosure) or a plain componentwise enclosure of the launch value.
    """
    if hasattr(source, "endpoint_enclosure"):
        boundary = source.endpoint_enclosure(theta)
        chart = source
    elif isinstance(source, IArray):
        boundary = source
        chart = None
    else:
        boundary = IArray.from_float(np.asarray(source, dtype=np.float64))
        chart = None
    g = make_grid(tau, pieces) if grid is None else np.asarray(grid, dtype=np.float64)
    return OrbitProblem(
        field=field,
        boundary=boundary,
        target=target,
        tau=float(tau),
        grid=g,
        M=len(g) - 1,
        K=int(order),
        nu=float(nu),
        eta=eta,
        source=chart,
        theta=float(theta),
        zk_mode=zk_mode,
    )


# ---------------------------------------------------------------------------
# shared stencil helpers
# ---------------------------------------------------------------------------


def _eta_or_uniform(prob: OrbitProblem) -> np.ndarray:
    if prob.eta is not None:
        return prob.eta
    return np.ones((prob.M, prob.field.dim))


def _dt_interval(prob: OrbitProblem, m: int) -> Interval:
    return Interval(float(prob.grid[m + 1])) - Interval(float(prob.grid[m]))


def _zeta(n: int) -> np.ndarray:
    # d/dX_s of X(-1) = X_0 + 2 sum (-1)^k X_k
    z = np.full(n, 2.0)
    z[0] = 1.0
    z[1::2] = -2.0
    return z


def _pad_tail(u):
    """Append one zero slot along the last axis; gathers route
    out-of-range stencil indices there."""
    if isinstance(u, IArray):
        out = IArray.zeros(u.shape[:-1] + (u.shape[-1] + 1,))
        out[..., : u.shape[-1]] = u
        return out
    return np.concatenate([u, np.zeros(u.shape[:-1] + (1,))], axis=-1)


def _pattern(up, kvals: np.ndarray, svals: np.ndarray):
    """d(f_{k-1} - f_{k+1})/dX_s for s >= 1 under the symmetric
    Chebyshev convolution: the mode X_s enters f through both indices
    +-s, so the stencil gathers u at |k-1-s|, k-1+s, |k+1-s|, k+1+s
    from the padded Df coefficient series u."""
    pad = up.shape[-1] - 1
    kk = np.asarray(kvals)[:, None]
    ss = np.asarray(svals)[None, :]
    i1 = np.minimum(np.abs(kk - 1 - ss), pad)
    i2 = np.minimum(kk - 1 + ss, pad)
    i3 = np.minimum(np.abs(kk + 1 - ss), pad)
    i4 = np.minimum(kk + 1 + ss, pad)
    return up[..., i1] + up[..., i2] - up[..., i3] - up[..., i4]


def _pattern_col0(up, kvals: np.ndarray):
    """The s = 0 column of the same stencil: u_{k-1} - u_{k+1}."""
    pad = up.shape[-1] - 1
    kk = np.asarray(kvals)
    return up[..., np.minimum(kk - 1, pad)] - up[..., np.minimum(kk + 1, pad)]


def _itranspose(a: IArray, axes) -> IArray:
    return IArray(a.lo.transpose(axes), a.hi.transpose(axes), _checked=True)


def _umatmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Upper bound of a @ b for nonnegative float matrices."""
    n = a.shape[-1]
    return _vup((a @ b) * (1.0 + 2.0 * (n + 1) * _U))


# ---------------------------------------------------------------------------
# residual, truncated solve, operator pair
# ---------------------------------------------------------------------------


def fit_piecewise(fun, grid: np.ndarray, order: int) -> np.ndarray:
    """Chebyshev interpolation of t -> fun(t) on every grid piece.

    Direct cosine transforms on the order-1 extremal points; the
    returned (M, dim, order) coefficients use the one-plus-twice
    normalization X(x) = X_0 + 2 sum_k X_k T_k(x) with x = -1 at the
    left breakpoint.
    """
    grid = np.asarray(grid, dtype=np.float64)
    M = len(grid) - 1
    K = int(order)
    d = len(np.asarray(fun(grid[0]), dtype=np.float64))
    out = np.zeros((M, d, K))
    if K == 1:
        for m in range(M):
            t = 0.5 * (grid[m] + grid[m + 1])
            out[m, :, 0] = np.asarray(fun(t), dtype=np.float64)
        return out
    n = K - 1
    j = np.arange(n + 1)
    xj = np.cos(np.pi * j / n)
    T = np.cos(np.pi * np.outer(np.arange(K), j) / n)
    w = np.ones(n + 1)
    w[0] = 0.5
    w[-1] = 0.5
    for m in range(M):
        mid = 0.5 * (grid[m] + grid[m + 1])
        half = 0.5 * (grid[m + 1] - grid[m])
        g = np.array([fun(mid + half * x) for x in xj], dtype=np.float64)
        c = (T * w) @ g * (2.0 / n)
        out[m] = 0.5 * c.T
    return out


def build_F(prob: OrbitProblem, X: np.ndarray) -> IArray:
    """Interval residual of the orbit map at float coefficients X.

    Returns (M, dim, NF) with NF = (K-1) deg + 2 rows per piece; the
    residual vanishes identically on all later rows because f is
    polynomial, so these rows carry the full truncation defect.
    """
    X = np.asarray(X, dtype=np.float64)
    d = prob.field.dim
    if X.shape != (prob.M, d, prob.K):
        raise ShapeError(f"coefficients must have shape ({prob.M}, {d}, {prob.K})")
    deg = max(int(prob.field.degree), 1)
    NF = (prob.K - 1) * deg + 2
    kv = np.arange(1.0, NF)
    out = IArray.zeros((prob.M, d, NF))
    for m in range(prob.M):
        Xi = IArray.from_float(X[m])
        fs = prob.field.f_seq(Xi, "cheb", out_len=NF + 1)
        dt4 = _dt_interval(prob, m) * 0.25
        Xpad = IArray.zeros((d, NF))
        Xpad[:, 1 : prob.K] = X[m][:, 1:]
        out[m, :, 1:] = Xpad[:, 1:] * kv - (fs[:, : NF - 1] - fs[:, 2:]) * dt4
        for i in range(d):
            left = eval_cheb_left(Xi[i])
            if m == 0:
                prev = prob.boundary[i]
            else:
                prev = eval_cheb_right(IArray.from_float(X[m - 1][i]))
            out[m, i, 0] = left - prev
    return out


def _resid_trunc_f(prob: OrbitProblem, X: np.ndarray) -> np.ndarray:
    """Float residual of the K-row truncation, flattened."""
    d, K, M = prob.field.dim, prob.K, prob.M
    out = np.zeros((M, d, K))
    kv = np.arange(1.0, K)
    alt = (-1.0) ** np.arange(K)
    p1 = prob.boundary.mid()
    for m in range(M):
        fs = prob.field.f_seq_f(X[m], "cheb", out_len=K + 1)
        dt4 = 0.25 * (prob.grid[m + 1] - prob.grid[m])
        out[m, :, 1:] = X[m][:, 1:] * kv - dt4 * (fs[:, : K - 1] - fs[:, 2:])
        left = X[m][:, 0] + 2.0 * (X[m][:, 1:] * alt[1:]).sum(axis=-1)
        if m == 0:
            prev = p1
        else:
            prev = X[m - 1][:, 0] + 2.0 * X[m - 1][:, 1:].sum(axis=-1)
        out[m, :, 0] = left - prev
    return out.reshape(-1)


def _truncated_jacobian_f(prob: OrbitProblem, X: np.ndarray) -> np.ndarray:
    d, K, M = prob.field.dim, prob.K, prob.M
    nblk = d * K
    J = np.zeros((M * nblk, M * nblk))
    kv = np.arange(1, K)
    zet = _zeta(K)
    glue = np.full(K, -2.0)
    glue[0] = -1.0
    for m in range(M):
        dt4 = 0.25 * (prob.grid[m + 1] - prob.grid[m])
        up = _pad_tail(prob.field.df_seq_f(X[m], "cheb"))
        blk = np.zeros((d, d, K, K))
        if K > 1:
            blk[:, :, 1:, 1:] = -dt4 * _pattern(up, kv, kv)
            blk[:, :, 1:, 0] = -dt4 * _pattern_col0(up, kv)
        for i in range(d):
            blk[i, i, 0, :] += zet
            blk[i, i, kv, kv] += kv
        sl = slice(m * nblk, (m + 1) * nblk)
        J[sl, sl] = blk.transpose(0, 2, 1, 3).reshape(nblk, nblk)
        if m > 0:
            for i in range(d):
                row = m * nblk + i * K
                J[row, (m - 1) * nblk + i * K : (m - 1) * nblk + (i + 1) * K] = glue
    return J


def solve_truncated(prob: OrbitProblem, guess: np.ndarray) -> np.ndarray:
    """Newton refinement of the K-row truncation from a fitted guess.

    post: the truncated residual is below RESID_TOL in sup norm.
    raises ConvergenceError when the iteration stalls, diverges or
    hits a singular truncated Jacobian.
    """
    X = np.array(guess, dtype=np.float64)
    d = prob.field.dim
    if X.shape != (prob.M, d, prob.K):
        raise ShapeError(f"guess must have shape ({prob.M}, {d}, {prob.K})")
    r = math.inf
    for _ in range(NEWTON_MAX_ITERS):
        F = _resid_trunc_f(prob, X)
        r = float(np.max(np.abs(F)))
        if not math.isfinite(r):
            raise ConvergenceError("truncated Newton produced non-finite residuals")
        if r <= RESID_TOL:
            return X
        J = _truncated_jacobian_f(prob, X)
        try:
            step = np.linalg.solve(J, F)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"truncated Jacobian is singular: {exc}") from None
        X = X - step.reshape(X.shape)
    raise ConvergenceError(
        f"truncated Newton stalled at residual {r:.3e} after {NEWTON_MAX_ITERS} steps"
    )


def _truncated_jacobian(prob: OrbitProblem, us, dts) -> IArray:
    d, K, M = prob.field.dim, prob.K, prob.M
    nblk = d * K
    J = IArray.zeros((M * nblk, M * nblk))
    kv = np.arange(1, K)
    zet = _zeta(K)
    glue = np.full(K, -2.0)
    glue[0] = -1.0
    for m in range(M):
        ndt4 = dts[m] * (-0.25)
        up = _pad_tail(us[m])
        blk = IArray.zeros((d, d, K, K))
        if K > 1:
            blk[:, :, 1:, 1:] = _pattern(up, kv, kv) * ndt4
            blk[:, :, 1:, 0] = _pattern_col0(up, kv) * ndt4
        for i in range(d):
            blk[i, i, 0, :] = zet
            if K > 1:
                blk[i, i, kv, kv] = blk[i, i, kv, kv] + IArray.from_float(
                    kv.astype(np.float64)
                )
        sl = slice(m * nblk, (m + 1) * nblk)
        J[sl, sl] = _itranspose(blk, (0, 2, 1, 3)).reshape(nblk, nblk)
        if m > 0:
            for i in range(d):
                row = m * nblk + i * K
                J[row, (m - 1) * nblk + i * K : (m - 1) * nblk + (i + 1) * K] = glue
    return J


def build_A_dagger_and_A(prob: OrbitProblem, X: np.ndarray) -> OrbitOperators:
    """Interval truncated Jacobian and the float inverse of its midpoint.

    The two tails need no storage: A-dagger multiplies mode k by k and
    A by 1/k, exactly.  raises NumericalError when the midpoint cannot
    be inverted.
    """
    X = np.asarray(X, dtype=np.float64)
    dts = tuple(_dt_interval(prob, m) for m in range(prob.M))
    us = tuple(
        prob.field.df_seq(IArray.from_float(X[m]), "cheb") for m in range(prob.M)
    )
    jac = _truncated_jacobian(prob, us, dts)
    try:
        inv = np.linalg.inv(jac.mid())
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"cannot invert the truncated Jacobian: {exc}") from None
    if not np.all(np.isfinite(inv)):
        raise NumericalError("approximate inverse has non-finite entries")
    return OrbitOperators(jac=jac, inv=inv, deriv_series=us, dts=dts)


# ---------------------------------------------------------------------------
# contraction bounds
# ---------------------------------------------------------------------------


def _finite_block_norms(mag: np.ndarray, M: int, d: int, K: int, nu: float) -> np.ndarray:
    """max_s (1/xi_s) sum_k mag_{k,s} xi_k over every K x K block of a
    (M d K) x (M d K) magnitude matrix, as float upper bounds."""
    xi = cheb_weights(nu, K)
    t = mag.reshape(M, d, K, M, d, K)
    cols = usum(umul(t, xi.hi[None, None, :, None, None, None]), axis=2)
    per = udiv(cols, xi.lo[None, None, None, None, :])
    return np.max(per, axis=-1)


def _block_eta_norm(norms: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """Product-space operator norm rows from blockwise nu-norms:
    out[m] = sum_n max_j (1/eta^(n,j)) sum_i norms[m,i,n,j] eta^(m,i)."""
    M = norms.shape[0]
    out = np.zeros(M)
    for m in range(M):
        vals = np.zeros(M)
        for n in range(M):
            col = usum(umul(norms[m, :, n, :], eta[m][:, None]), axis=0)
            vals[n] = float(np.max(udiv(col, eta[n])))
        out[m] = float(usum(vals))
    return out


def bound_Y(prob: OrbitProblem, X: np.ndarray, ops: OrbitOperators) -> np.ndarray:
    """Per-piece upper bounds on the weighted norm of A F(X)."""
    d, K, M = prob.field.dim, prob.K, prob.M
    eta = _eta_or_uniform(prob)
    F = build_F(prob, X)
    NF = F.shape[-1]
    xi = cheb_weights(prob.nu, NF)
    AF = imatmul(IArray.from_float(ops.inv), F[:, :, :K].reshape(M * d * K))
    top_mag = AF.mag().reshape(M, d, K)
    tail_mag = udiv(F[:, :, K:].mag(), np.arange(K, NF, dtype=np.float64))
    top = usum(umul(top_mag, xi.hi[:K]), axis=-1)
    tail = usum(umul(tail_mag, xi.hi[K:]), axis=-1)
    comp = _vup(top + tail)
    out = np.zeros(M)
    for m in range(M):
        out[m] = udot(comp[m], eta[m])
    return out


def bound_Z0(prob: OrbitProblem, ops: OrbitOperators) -> np.ndarray:
    """Per-piece bounds on the norm of I - A A-dagger.

    The tails cancel exactly (k times 1/k), so the defect is the
    finite matrix I - inv times the interval truncated Jacobian.
    """
    d, K, M = prob.field.dim, prob.K, prob.M
    eta = _eta_or_uniform(prob)
    B = IArray.eye(M * d * K) - imatmul(IArray.from_float(ops.inv), ops.jac)
    norms = _finite_block_norms(B.mag(), M, d, K, prob.nu)
    return _block_eta_norm(norms, eta)


def _cfrak_parts(prob: OrbitProblem, X: np.ndarray, ops: OrbitOperators):
    """Blockwise nu-norm bounds of C = A (DF(X) - A-dagger).

    Returns (finite, tail): the exact column norms over the leading
    4K-1 columns, and the uniform bound on all later columns.  Both
    are (M, d, M, d) float upper bounds, independent of eta.

    Columns s < K of DF - A-dagger vanish on the leading K rows by
    construction; later columns couple through the gluing rows (every
    s, both neighboring pieces) and the advection stencil (finitely
    many s, since f is polynomial of degree at most 4).  Rows k >= K
    of C are diagonal in the piece index and carry the factor 1/k.
    """
    d, K, M = prob.field.dim, prob.K, prob.M
    if prob.field.degree > 4:
        raise DomainError("the tail column bound assumes field degree at most 4")
    NC = 4 * K - 1
    nblk = d * K
    xiK = cheb_weights(prob.nu, K)
    xiC = cheb_weights(prob.nu, NC)
    zet = _zeta(NC)
    cfin = np.zeros((M, d, M, d))
    for n in range(M):
        has_next = n + 1 < M
        rows = nblk * (2 if has_next else 1)
        S = NC - K
        DD = IArray.zeros((rows, d * S))
        up = _pad_tail(ops.deriv_series[n])
        Lu = ops.deriv_series[n].shape[-1]
        ndt4 = ops.dts[n] * (-0.25)
        if K > 1:
            pat = _pattern(up, np.arange(1, K), np.arange(K, NC)) * ndt4
        for j in range(d):
            csl = slice(j * S, (j + 1) * S)
            if K > 1:
                for i in range(d):
                    DD[i * K + 1 : (i + 1) * K, csl] = pat[i, j]
            DD[j * K, csl] = zet[K:]
            if has_next:
                DD[nblk + j * K, csl] = -2.0
        acols = ops.inv[:, n * nblk : (n + (2 if has_next else 1)) * nblk]
        ctop = imatmul(IArray.from_float(acols), DD)
        mags = ctop.mag().reshape(M, d, K, d, S)
        colsums = np.zeros((M, d, d, NC))
        colsums[:, :, :, K:] = usum(
            umul(mags, xiK.hi[None, None, :, None, None]), axis=2
        )
        # rows k >= K of the diagonal block: -(dt/4k) times the stencil
        kt = np.arange(K, NC + Lu)
        xiT = cheb_weights(prob.nu, NC + Lu)
        sc = IArray.from_intervals([ops.dts[n] * 0.25 / float(k) for k in kt])
        tmag = (_pattern(up, kt, np.arange(1, NC)) * sc.reshape(len(kt), 1)).mag()
        t0mag = (_pattern_col0(up, kt) * sc).mag()
        tsum = usum(umul(tmag, xiT.hi[kt][None, None, :, None]), axis=2)
        t0sum = usum(umul(t0mag, xiT.hi[kt]), axis=-1)
        colsums[n, :, :, 1:] = _vup(colsums[n, :, :, 1:] + tsum)
        colsums[n, :, :, 0] = _vup(colsums[n, :, :, 0] + t0sum)
        cfin[:, :, n, :] = np.max(udiv(colsums, xiC.lo[None, None, None, :]), axis=-1)
    # tail columns: the gluing rows reach every s through the leading
    # column of A with weight at most 2/nu^K, and the diagonal stencil
    # rows are bounded by the nu-norm of u_{k-1} - u_{k+1}
    a6 = np.abs(ops.inv).reshape(M, d, K, M, d, K)
    acol0 = usum(umul(a6[:, :, :, :, :, 0], xiK.hi[None, None, :, None, None]), axis=2)
    shifted = np.zeros_like(acol0)
    shifted[:, :, : M - 1, :] = acol0[:, :, 1:, :]
    nuK_lo = cheb_weights(prob.nu, K + 1).lo[K] / 2.0
    ctail = umul(udiv(2.0, nuK_lo), _vup(acol0 + shifted))
    for n in range(M):
        up = _pad_tail(ops.deriv_series[n])
        Lu = ops.deriv_series[n].shape[-1]
        kv = np.arange(1, Lu + 1)
        um = up[..., kv - 1] - up[..., np.minimum(kv + 1, Lu)]
        xiU = cheb_weights(prob.nu, Lu + 1)
        unorm = usum(umul(um.mag(), xiU.hi[1:]), axis=-1)
        dt4k = udiv(umul(ops.dts[n].hi, 0.25), float(K))
        ctail[n, :, n, :] = _vup(ctail[n, :, n, :] + umul(dt4k, unorm))
    return cfin, ctail


def bound_Z1(prob: OrbitProblem, X: np.ndarray, ops: OrbitOperators) -> np.ndarray:
    """Per-piece bounds on the norm of A (DF(X) - A-dagger)."""
    eta = _eta_or_uniform(prob)
    cfin, ctail = _cfrak_parts(prob, X, ops)
    return _block_eta_norm(np.maximum(cfin, ctail), eta)


def _weights_from_defect(cfrak: np.ndarray) -> np.ndarray:
    """Per-piece Perron weights of the diagonal defect blocks.

    The dominant Z1 term on piece m is the weighted norm of the
    (m; m) block; its left Perron vector minimizes that norm over
    positive weights.  Weights only tune tightness, so float accuracy
    suffices, and degenerate blocks fall back to uniform weights.
    """
    M, d = cfrak.shape[0], cfrak.shape[1]
    eta = np.ones((M, d))
    for m in range(M):
        try:
            w, _ = perron_weights(cfrak[m, :, m, :])
        except (ValueError, ConvergenceError):
            continue
        # zero rows of the block can zero out entries; keep eta positive
        eta[m] = np.maximum(w, 1e-9)
    return eta


def choose_weights(prob: OrbitProblem, X: np.ndarray, ops: OrbitOperators) -> np.ndarray:
    """Norm weights adapted to the defect of A, one row per piece."""
    cfin, ctail = _cfrak_parts(prob, X, ops)
    return _weights_from_defect(np.maximum(cfin, ctail))


def _anorm_blocks(prob: OrbitProblem, ops: OrbitOperators) -> np.ndarray:
    """Blockwise nu-norms of A: finite column norms maxed against the
    tail supremum 1/K on the diagonal blocks."""
    d, K, M = prob.field.dim, prob.K, prob.M
    anorm = _finite_block_norms(np.abs(ops.inv), M, d, K, prob.nu)
    inv_k = float(udiv(1.0, float(K)))
    for m in range(M):
        for i in range(d):
            anorm[m, i, m, i] = max(anorm[m, i, m, i], inv_k)
    return anorm


def _eta_products_down(eta_n: np.ndarray, ms_keys) -> np.ndarray:
    out = np.ones(len(ms_keys))
    for a, ms in enumerate(ms_keys):
        q = 1.0
        for j in ms:
            q = float(_vdown(np.float64(q * eta_n[j])))
        out[a] = q
    return out


def bound_Zk(
    prob: OrbitProblem,
    X: np.ndarray,
    ops: OrbitOperators,
    k: int,
    mode: str | None = None,
) -> np.ndarray:
    """Per-piece bounds on the norm of A D^k F(X) for k in 2..4.

    Each order-k partial derivative stack of f enters F through the
    stencil f -> (dt/4)(f_{k-1} - f_{k+1}), whose nu-norm is exactly
    2 nu.  sharp keeps the component structure of the stacks; relaxed
    factors through the weighted operator norm of A (never smaller).
    """
    if k not in (2, 3, 4):
        raise DomainError(f"Zk bounds cover orders 2 to 4, got {k}")
    mode = prob.zk_mode if mode is None else mode
    if mode not in ("sharp", "relaxed"):
        raise DomainError(f"unknown zk_mode {mode!r}")
    X = np.asarray(X, dtype=np.float64)
    d, M = prob.field.dim, prob.M
    eta = _eta_or_uniform(prob)
    anorm = _anorm_blocks(prob, ops)
    ms_keys = None
    normD = []
    for n in range(M):
        stacks = prob.field.derivs_seq(k, IArray.from_float(X[n]), "cheb")
        if ms_keys is None:
            ms_keys = sorted(stacks.keys())
        L = stacks[ms_keys[0]].shape[-1]
        xiL = cheb_weights(prob.nu, L)
        fac = umul(umul(ops.dts[n].hi, 0.25), 2.0 * prob.nu)
        rows = np.zeros((len(ms_keys), d))
        for a, ms in enumerate(ms_keys):
            rows[a] = umul(fac, usum(umul(stacks[ms].mag(), xiL.hi), axis=-1))
        normD.append(rows)
    out = np.zeros(M)
    for m in range(M):
        vals = np.zeros(M)
        for n in range(M):
            q_lo = _eta_products_down(eta[n], ms_keys)
            if mode == "sharp":
                inner = _umatmul(anorm[m, :, n, :], normD[n].T)
                tot = _umatmul(eta[m][None, :], inner)[0]
                vals[n] = float(np.max(udiv(tot, q_lo)))
            else:
                col = usum(umul(anorm[m, :, n, :], eta[m][:, None]), axis=0)
                arel = float(np.max(udiv(col, eta[n])))
                tot = _umatmul(eta[n][None, :], normD[n].T)[0]
                vals[n] = float(umul(arel, float(np.max(udiv(tot, q_lo)))))
        out[m] = float(usum(vals))
    return out


# ---------------------------------------------------------------------------
# certification
# ---------------------------------------------------------------------------


def _endpoint_enclosure(prob: OrbitProblem, X: np.ndarray, rho: float) -> IArray:
    """Value of the last piece at tau, inflated by rho over the last
    piece's weights (the weighted ball controls each component by
    rho / eta^(M,i))."""
    d = prob.field.dim
    eta = _eta_or_uniform(prob)
    pads = udiv(rho, eta[prob.M - 1])
    vals = []
    for i in range(d):
        v = eval_cheb_right(IArray.from_float(X[prob.M - 1][i]))
        pad = float(pads[i])
        vals.append(v + Interval(-pad, pad))
    return IArray.from_intervals(vals)


def _check_endpoint(endpoint: IArray, square: TrappingSquare) -> None:
    for label, axis in (("x", 0), ("y", 1)):
        v = endpoint[axis]
        c = square.center[axis]
        lo_edge = (c - Interval(square.half_side)).hi
        hi_edge = (c + Interval(square.half_side)).lo
        if not (v.lo > lo_edge and v.hi < hi_edge):
            raise ValidationError(
                f"endpoint {label} component {v} is not strictly inside the "
                f"target square"
            )


def validate_orbit(prob: OrbitProblem, X: np.ndarray) -> OrbitSolution:
    """Certify a true orbit near the coefficients X and its landing.

    Builds the operator pair, picks Perron weights when prob.eta is
    unset, assembles the per-piece Y, Z0..Z4 bounds, runs the
    componentwise radii polynomial certification, and finally checks
    that the rho_bar-inflated endpoint sits strictly inside the target
    square.  raises ValidationError naming the failing stage.
    """
    X = np.asarray(X, dtype=np.float64)
    ops = build_A_dagger_and_A(prob, X)
    cfin, ctail = _cfrak_parts(prob, X, ops)
    cfrak = np.maximum(cfin, ctail)
    if prob.eta is None:
        prob = replace(prob, eta=_weights_from_defect(cfrak))
    eta = prob.eta
    Y = bound_Y(prob, X, ops)
    Z0 = bound_Z0(prob, ops)
    Z1 = _block_eta_norm(cfrak, eta)
    Z2 = bound_Zk(prob, X, ops, 2)
    Z3 = bound_Zk(prob, X, ops, 3)
    Z4 = bound_Zk(prob, X, ops, 4)
    bsets = tuple(
        RadiiBounds(Y=Y[m], Z1=Z1[m], Z2=Z2[m], Z3=Z3[m], Z4=Z4[m], Z0=Z0[m])
        for m in range(prob.M)
    )
    cert = certify_componentwise(bsets)
    if not cert.success:
        raise ValidationError(f"orbit contraction not certified: {cert.diagnostic}")
    endpoint = _endpoint_enclosure(prob, X, cert.rbar)
    _check_endpoint(endpoint, prob.target)
    return OrbitSolution(
        problem=prob,
        coeffs=X,
        bounds=bsets,
        certificate=cert,
        rho_bar=cert.rbar,
        eta=eta,
        endpoint=endpoint,
    )
