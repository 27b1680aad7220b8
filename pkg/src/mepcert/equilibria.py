"""Critical points of the potential and their rigorous validation.

Covers four jobs: locating zeros of grad V with floating-point Newton,
certifying a true zero near the numerical one (with classification into
minimum/saddle), enclosing eigenpairs of the extended-system Jacobian
together with an eigenbasis usable for resolvent bounds, and certifying
trapping squares around minima (convexity plus strictly inward flow on
the boundary).

All finite-dimensional certification here runs in the 1-norm on R^2:
``Y = |A grad V|_1``, ``Z1 = |I - A D^2V|_1`` (largest column sum), and
the third-derivative bound is the 1-norm-induced trilinear norm.  The
eigenpair validation uses the sup norm on the bordered 7-dimensional
system instead, where the curvature constant is simply 2|A|.
"""

from dataclasses import dataclass, replace

import numpy as np

from .contraction import ValidationCertificate, certify_affine
from .errors import (
    ConvergenceError,
    DomainError,
    NumericalError,
    ValidationError,
)
from .interval import (
    IArray,
    Interval,
    imatmul,
    krawczyk,
    mat_inf_norm,
    vec_inf_norm,
    weighted_op_norm,
)

NEWTON_TOL = 1e-13
NEWTON_MAX_ITER = 50
DEFAULT_R_STAR = 1e-5
EIGEN_R_STAR = 1e-6


def _interval_max(items):
    items = list(items)
    return Interval(max(i.lo for i in items), max(i.hi for i in items))


def vec_one_norm(v: IArray) -> Interval:
    """Enclosure of the 1-norm (sum of absolute values) of a vector."""
    s = v.abs().sum()
    return Interval(max(s.lo, 0.0), s.hi)


def mat_one_norm(A: IArray) -> Interval:
    """Enclosure of the 1-norm-induced operator norm (max column sum)."""
    cols = A.abs().sum(axis=0)
    s = _interval_max(cols[j] for j in range(cols.shape[0]))
    return Interval(max(s.lo, 0.0), s.hi)


# ---------------------------------------------------------------------------
# locating zeros of grad V
# ---------------------------------------------------------------------------


def find_zero(pot, guess) -> np.ndarray:
    """Newton iteration on grad V from ``guess`` in plain floats.

    Returns a point with residual ||grad V||_inf <= 1e-13, or the point
    where the iteration becomes stationary on the float lattice (a stiff
    Hessian puts the best achievable residual above the tolerance; the
    steepest minimum bottoms out near 2e-13).  Raises NumericalError on
    a singular Hessian iterate and ConvergenceError when 50 iterations
    produce neither.
    """
    x = np.array(guess, dtype=np.float64)
    if x.shape != (2,):
        raise DomainError("guess must be a point in the plane")
    best_x, best_r = x, np.inf
    prev = None
    for _ in range(NEWTON_MAX_ITER + 1):
        g = pot.gradient_f(x)
        if not np.all(np.isfinite(g)):
            raise NumericalError(f"gradient overflow at {x.tolist()}")
        r = float(np.max(np.abs(g)))
        if r <= NEWTON_TOL:
            return x
        if r < best_r:
            best_x, best_r = x, r
        H = pot.hessian_f(x)
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"singular Hessian at {x.tolist()}") from exc
        if not np.all(np.isfinite(step)):
            raise NumericalError(f"Newton step overflow at {x.tolist()}")
        x_new = x - step
        stuck = np.array_equal(x_new, x) or (
            prev is not None and np.array_equal(x_new, prev)
        )
        if stuck and best_r <= 1e-9:
            return best_x
        prev = x
        x = x_new
    raise ConvergenceError(
        f"Newton did not reach ||grad V|| <= {NEWTON_TOL} in "
        f"{NEWTON_MAX_ITER} iterations from {list(guess)}"
    )


# ---------------------------------------------------------------------------
# zero validation and classification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CriticalPoint:
    """A validated zero of grad V.

    ``location`` is a componentwise box around the numerical point that
    contains the unique true zero within 1-norm distance ``radius``;
    ``extended_point`` is the lifted 6-vector (x, y, psi(x, y)) over
    that box.
    """

    location: IArray
    kind: str
    radius: float
    extended_point: IArray
    certificate: ValidationCertificate
    eigen: "EigenData | None" = None

    def midpoint(self) -> np.ndarray:
        return self.location.mid()

    def with_eigen(self, eigen: "EigenData") -> "CriticalPoint":
        return replace(self, eigen=eigen)


def _classify(pot, x: Interval, y: Interval) -> str:
    H = pot.hessian(x, y)
    tr = H[0, 0] + H[1, 1]
    det = H[0, 0] * H[1, 1] - H[0, 1].sqr()
    if det.hi < 0.0:
        return "saddle"
    if det.lo > 0.0 and tr.lo > 0.0:
        return "minimum"
    raise ValidationError(
        f"Hessian signature not determined over the enclosure: "
        f"trace = {tr!r}, det = {det!r}"
    )


def validate_zero(
    pot, x_hat, r_star: float = DEFAULT_R_STAR, approx_inverse=None
) -> CriticalPoint:
    """Certify a true zero of grad V within 1-norm distance r* of x_hat.

    The contraction is T(X) = X - A grad V(X) with A a fixed approximate
    inverse of the Hessian (computed from the float midpoint Hessian
    unless ``approx_inverse`` is supplied, in which case its entries are
    used verbatim).  Bounds, all in the 1-norm:

        Y  = |A grad V(x_hat)|_1
        Z1 = |I - A D^2 V(x_hat)|_1
        Z2 = |A|_1 * sup over the ball of the induced norm of D^3 V

    Raises ValidationError when certification fails.
    """
    x_hat = np.asarray(x_hat, dtype=np.float64)
    if x_hat.shape != (2,):
        raise DomainError("candidate must be a point in the plane")
    if not (float(r_star) > 0.0):
        raise DomainError("r_star must be positive")
    xi = Interval(float(x_hat[0]))
    yi = Interval(float(x_hat[1]))
    if approx_inverse is None:
        H_mid = pot.hessian_f(x_hat)
        try:
            A = np.linalg.inv(H_mid)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(
                f"Hessian not numerically invertible at {x_hat.tolist()}"
            ) from exc
    else:
        A = np.asarray(approx_inverse, dtype=np.float64)
        if A.shape != (2, 2):
            raise DomainError("approximate inverse must be 2x2")
    Ai = IArray.from_float(A)

    Y = vec_one_norm(imatmul(Ai, pot.gradient(xi, yi)))
    Z1 = mat_one_norm(IArray.eye(2) - imatmul(Ai, pot.hessian(xi, yi)))
    ball = Interval(-float(r_star), float(r_star))
    Z2 = mat_one_norm(Ai) * pot.d3_norm_bound(xi + ball, yi + ball)

    cert = certify_affine(Y, Z1, Z2, float(r_star))
    if not cert.success:
        raise ValidationError(
            f"zero validation failed at {x_hat.tolist()}: {cert.diagnostic}"
        )
    r = cert.rbar
    loc = IArray.from_float(x_hat) + Interval(-r, r)
    kind = _classify(pot, loc[0], loc[1])
    ext = pot.lift(loc[0], loc[1])
    return CriticalPoint(
        location=loc,
        kind=kind,
        radius=r,
        extended_point=ext,
        certificate=cert,
    )


# ---------------------------------------------------------------------------
# eigenpairs of the extended Jacobian
# ---------------------------------------------------------------------------


def _sign_fix(vec: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(vec)))
    return -vec if vec[k] < 0.0 else vec


def eigen_candidates(field, X0_mid: np.ndarray):
    """Numerical eigenpair candidates of Df at the midpoint state.

    Returns (lam, v, mu, u) with lam the largest and mu the smallest
    real eigenvalue, eigenvectors Euclidean-normalized with the largest
    component positive.
    """
    Df = field.df_point_f(np.asarray(X0_mid, dtype=np.float64))
    w, V = np.linalg.eig(Df)
    if float(np.max(np.abs(w.imag))) > 1e-8:
        raise ValidationError("complex numerical spectrum; expected real")
    wr = w.real
    i_un = int(np.argmax(wr))
    i_st = int(np.argmin(wr))
    v = _sign_fix(V[:, i_un].real)
    u = _sign_fix(V[:, i_st].real)
    v = v / float(np.linalg.norm(v))
    u = u / float(np.linalg.norm(u))
    return float(wr[i_un]), v, float(wr[i_st]), u


def validate_eigenpair(
    field, X0: IArray, lam_hat: float, v_hat, r_star: float = EIGEN_R_STAR
):
    """Enclose an eigenpair of Df(X0) near the candidate (lam_hat, v_hat).

    Validates the bordered system G(v, lam) = (Df(X0) v - lam v,
    <v_hat, v> - 1) in the sup norm; the normalization row makes the
    derivative invertible at a simple eigenvalue.  G is quadratic with
    the single bilinear term lam*v, so the curvature bound is
    Z2 = 2 |A|_inf exactly.

    Returns (lam: Interval, v: IArray) enclosing the true pair.  Raises
    ValidationError when certification fails.
    """
    anchor = np.asarray(v_hat, dtype=np.float64).copy()
    n = anchor.shape[0]
    if X0.shape != (n,):
        raise DomainError("state and eigenvector candidate sizes differ")
    Df = field.df_point(X0)
    Df_mid = Df.mid()

    u = np.concatenate([anchor, [float(lam_hat)]])
    eye = np.eye(n)
    for _ in range(20):
        G = np.concatenate(
            [Df_mid @ u[:n] - u[n] * u[:n], [anchor @ u[:n] - 1.0]]
        )
        if float(np.max(np.abs(G))) <= 1e-13:
            break
        DG = np.zeros((n + 1, n + 1))
        DG[:n, :n] = Df_mid - u[n] * eye
        DG[:n, n] = -u[:n]
        DG[n, :n] = anchor
        try:
            u = u - np.linalg.solve(DG, G)
        except np.linalg.LinAlgError as exc:
            raise ValidationError(
                "bordered eigen system numerically singular (defective "
                "or ill-conditioned candidate)"
            ) from exc

    DG = np.zeros((n + 1, n + 1))
    DG[:n, :n] = Df_mid - u[n] * eye
    DG[:n, n] = -u[:n]
    DG[n, :n] = anchor
    try:
        A = np.linalg.inv(DG)
    except np.linalg.LinAlgError as exc:
        raise ValidationError(
            "bordered eigen system numerically singular (defective "
            "or ill-conditioned candidate)"
        ) from exc
    Ai = IArray.from_float(A)

    v_i = IArray.from_float(u[:n])
    lam_i = Interval(float(u[n]))
    anchor_i = IArray.from_float(anchor)
    top = imatmul(Df, v_i) - v_i * lam_i
    last = (anchor_i * v_i).sum() - 1.0
    G_i = IArray.from_intervals([top[k] for k in range(n)] + [last])

    DG_i = IArray.zeros((n + 1, n + 1))
    DG_i[:n, :n] = Df - IArray.eye(n) * lam_i
    DG_i[:n, n] = -v_i
    DG_i[n, :n] = anchor_i

    Y = vec_inf_norm(imatmul(Ai, G_i))
    Z1 = mat_inf_norm(IArray.eye(n + 1) - imatmul(Ai, DG_i))
    Z2 = mat_inf_norm(Ai) * 2.0
    cert = certify_affine(Y, Z1, Z2, float(r_star))
    if not cert.success:
        raise ValidationError(
            f"eigenpair validation failed near lambda = {lam_hat}: "
            f"{cert.diagnostic}"
        )
    ball = Interval(-cert.rbar, cert.rbar)
    lam = Interval(float(u[n])) + ball
    v = IArray.from_float(u[:n]) + ball
    return lam, v


@dataclass(frozen=True)
class EigenData:
    """Validated eigenbasis of Df(X0) for resolvent bounds.

    ``Q`` has columns (v, u, n_1..n_4): the unstable and stable
    eigenvector enclosures and an enclosure of a null-space basis.  The
    certified inverse data is stored as the float approximate inverse
    ``R`` plus the residual enclosure ``E = I - R Q``.
    """

    lam_unstable: Interval
    mu_stable: Interval
    v: IArray
    u: IArray
    Q: IArray
    Q_inv: IArray
    R: np.ndarray
    E: IArray

    def inverse_norm_product(self, eta) -> Interval:
        """Upper bound of |Q|_eta * |Q^-1|_eta."""
        en = weighted_op_norm(self.E, eta)
        if not en.hi < 1.0:
            raise ValidationError(
                f"|I - RQ|_eta = {en.hi} >= 1: eigenbasis unusable"
            )
        qn = weighted_op_norm(self.Q, eta)
        rn = weighted_op_norm(IArray.from_float(self.R), eta)
        return qn * rn / (Interval(1.0) - Interval(en.hi))


def validate_Q(field, X0: IArray, candidates=None) -> EigenData:
    """Validated eigenbasis Q of Df(X0) with certified inverse data.

    The two nonzero eigenpairs are validated via bordered systems; the
    kernel basis and inverse certification are shared with the joint
    saddle-frame route (see ``_build_eigendata``).
    """
    if candidates is None:
        candidates = eigen_candidates(field, X0.mid())
    lam_hat, v_hat, mu_hat, u_hat = candidates
    lam, v = validate_eigenpair(field, X0, lam_hat, v_hat)
    mu, u = validate_eigenpair(field, X0, mu_hat, u_hat)
    return _build_eigendata(field, X0, lam, v, mu, u)


def _build_eigendata(field, X0: IArray, lam, v, mu, u) -> EigenData:
    """Assemble EigenData from validated eigenpair enclosures.

    The four-dimensional kernel comes from the rank-2 structure of Df at
    an equilibrium: with C = (first two rows of Df) = [C1 | C2], every
    row of Df is a combination of those two, so (-C1^-1 C2 e_i; e_i)
    are null vectors.  The residual Df n_i is re-checked to contain
    zero; failure of any step raises ValidationError.
    """
    if not lam.lo > 0.0:
        raise ValidationError(f"unstable rate not verifiably positive: {lam!r}")
    if not mu.hi < 0.0:
        raise ValidationError(f"stable rate not verifiably negative: {mu!r}")

    Df = field.df_point(X0)
    n = Df.shape[0]
    k = n - 2
    C1 = Df[0:2, 0:2]
    C2 = Df[0:2, 2:n]
    det = C1[0, 0] * C1[1, 1] - C1[0, 1] * C1[1, 0]
    if det.contains(0.0):
        raise ValidationError(
            "leading 2x2 block of Df not verifiably invertible"
        )
    C1_inv = IArray.from_intervals(
        [[C1[1, 1] / det, -C1[0, 1] / det], [-C1[1, 0] / det, C1[0, 0] / det]]
    )
    top = -imatmul(C1_inv, C2)

    Q = IArray.zeros((n, n))
    Q[:, 0] = v
    Q[:, 1] = u
    Q[0:2, 2:n] = top
    for i in range(k):
        Q[2 + i, 2 + i] = 1.0
        resid = imatmul(Df, Q[:, 2 + i])
        if not all(resid[j].contains(0.0) for j in range(n)):
            raise ValidationError(
                f"kernel residual check failed for basis vector {i}: "
                "Df does not have the rank-2 equilibrium structure here"
            )

    try:
        R = np.linalg.inv(Q.mid())
    except np.linalg.LinAlgError as exc:
        raise ValidationError("eigenbasis numerically singular") from exc
    E = IArray.eye(n) - imatmul(IArray.from_float(R), Q)
    en = mat_inf_norm(E)
    if not en.hi < 1.0:
        raise ValidationError(
            f"eigenbasis near-defective: ||I - RQ|| = {en.hi} >= 1"
        )
    rn = mat_inf_norm(IArray.from_float(R))
    slack = (en * rn / (Interval(1.0) - Interval(en.hi))).hi
    Q_inv = IArray.from_float(R) + Interval(-slack, slack)
    return EigenData(
        lam_unstable=lam,
        mu_stable=mu,
        v=v,
        u=u,
        Q=Q,
        Q_inv=Q_inv,
        R=R,
        E=E,
    )


# ---------------------------------------------------------------------------
# joint saddle-frame validation
# ---------------------------------------------------------------------------


def _frame_G_f(pot, field, anchor, w):
    xy = w[0:2]
    v = w[7:13]
    eig = field.df_point_f(w[0:6]) @ v - w[6] * v
    return np.concatenate(
        [
            pot.gradient_f(xy),
            w[2:6] - pot.lift_f(xy)[2:],
            eig,
            [anchor @ v - 1.0],
        ]
    )


def _frame_J_f(pot, field, anchor, w):
    xy = w[0:2]
    v = w[7:13]
    J = np.zeros((13, 13))
    J[0:2, 0:2] = pot.hessian_f(xy)
    J[2:6, 0:2] = -pot.dpsi_f(xy)
    J[2:6, 2:6] = np.eye(4)
    d = field.df_seq_f(np.stack([w[0:6], v], axis=1), "taylor", out_len=2)
    J[6:12, 0:6] = d[:, :, 1]
    J[6:12, 6] = -v
    J[6:12, 7:13] = d[:, :, 0] - w[6] * np.eye(6)
    J[12, 7:13] = anchor
    return J


def _frame_G_i(pot, field, anchor_i, w):
    x, y = w[0], w[1]
    v = w[7:13]
    g = pot.gradient(x, y)
    zres = w[2:6] - pot.psi(x, y)
    eig = imatmul(field.df_point(w[0:6]), v) - v * w[6]
    last = (anchor_i * v).sum() - 1.0
    return IArray.from_intervals(
        [g[0], g[1]]
        + [zres[k] for k in range(4)]
        + [eig[k] for k in range(6)]
        + [last]
    )


def _frame_J_i(pot, field, anchor_i, w):
    x, y = w[0], w[1]
    v = w[7:13]
    J = IArray.zeros((13, 13))
    J[0:2, 0:2] = pot.hessian(x, y)
    J[2:6, 0:2] = -pot.dpsi(x, y)
    J[2:6, 2:6] = IArray.eye(4)
    stack = IArray.zeros((6, 2))
    stack[:, 0] = w[0:6]
    stack[:, 1] = v
    d = field.df_seq(stack, "taylor", out_len=2)
    J[6:12, 0:6] = d[:, :, 1]
    J[6:12, 6] = -v
    J[6:12, 7:13] = d[:, :, 0] - IArray.eye(6) * w[6]
    J[12, 7:13] = anchor_i
    return J


def _frame_newton(pot, field, anchor, w0):
    """Float Newton on the joint system, with a stagnation exit.

    The eigen rows mix Df entries of size ~6e5 with O(1) eigenvector
    components, so their best achievable float residual sits near
    ||Df|| * eps ~ 1e-10; convergence is declared when the iterates
    repeat below 1e-8.
    """
    w = np.asarray(w0, dtype=np.float64).copy()
    best_w, best_r = w, np.inf
    prev = None
    for _ in range(NEWTON_MAX_ITER + 1):
        G = _frame_G_f(pot, field, anchor, w)
        if not np.all(np.isfinite(G)):
            raise NumericalError("joint system residual overflow")
        r = float(np.max(np.abs(G)))
        if r < best_r:
            best_w, best_r = w, r
        try:
            step = np.linalg.solve(_frame_J_f(pot, field, anchor, w), G)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(
                "joint saddle-frame system numerically singular"
            ) from exc
        w_new = w - step
        stuck = np.array_equal(w_new, w) or (
            prev is not None and np.array_equal(w_new, prev)
        )
        if stuck and best_r <= 1e-8:
            return best_w
        prev = w
        w = w_new
    if best_r <= 1e-8:
        return best_w
    raise ConvergenceError(
        f"joint saddle-frame Newton stalled at residual {best_r}"
    )


def _box_intersect(a: IArray, b: IArray) -> IArray:
    lo = np.maximum(a.lo, b.lo)
    hi = np.minimum(a.hi, b.hi)
    if np.any(lo > hi):
        raise ValidationError(
            "state enclosures from the two eigenpair runs are disjoint"
        )
    return IArray(lo, hi, _checked=True)


def validate_saddle_frame(pot, field, guess) -> CriticalPoint:
    """Jointly validated saddle point with eigenframe, in one enclosure.

    Encloses the 13 unknowns (x, y, z_1..z_4, lambda, v) of the coupled
    system (grad V, z - psi(x, y), Df(x, y, z) v - lambda v,
    <anchor, v> - 1) with a single Krawczyk test, once for the unstable
    and once for the stable eigenpair.  Tying the eigenpair to the
    exact critical point gives eigenvector enclosures about three
    orders narrower than validating Df over a pre-computed state box,
    and chart coefficient widths downstream scale linearly with the
    eigenvector width.  The block-triangular structure keeps the state
    coordinates at the gradient-residual scale (~1e-15) even though the
    eigen rows bottom out near ||Df|| * eps ~ 1e-10.

    Returns a CriticalPoint of kind 'saddle' with ``eigen`` populated;
    ``location``/``extended_point`` are the intersections of the two
    runs' state boxes and ``radius`` is the largest half-width of the
    planar coordinates.
    """
    xy_hat = find_zero(pot, guess)
    X_hat = pot.lift_f(xy_hat)
    lam_hat, v_hat, mu_hat, u_hat = eigen_candidates(field, X_hat)

    pairs = []
    for rate_hat, vec_hat in ((lam_hat, v_hat), (mu_hat, u_hat)):
        anchor = vec_hat.copy()
        anchor_i = IArray.from_float(anchor)
        w0 = np.concatenate([X_hat, [rate_hat], vec_hat])
        w_hat = _frame_newton(pot, field, anchor, w0)
        box = krawczyk(
            lambda w: _frame_G_i(pot, field, anchor_i, w),
            lambda w: _frame_J_i(pot, field, anchor_i, w),
            w_hat,
        )
        pairs.append((box[6], box[7:13], box[0:6]))

    (lam, v, state_a), (mu, u, state_b) = pairs
    ext = _box_intersect(state_a, state_b)
    loc = ext[0:2]
    kind = _classify(pot, loc[0], loc[1])
    if kind != "saddle":
        raise ValidationError(
            f"joint frame validation expects a saddle, found a {kind}"
        )
    eigen = _build_eigendata(field, ext, lam, v, mu, u)
    radius = float(np.max(loc.hi - loc.lo)) / 2.0
    cert = ValidationCertificate(
        success=True,
        rbar=radius,
        diagnostic="joint saddle-frame Krawczyk enclosure",
    )
    return CriticalPoint(
        location=loc,
        kind=kind,
        radius=radius,
        extended_point=ext,
        certificate=cert,
        eigen=eigen,
    )


# ---------------------------------------------------------------------------
# trapping squares around minima
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrappingSquare:
    """A square certified convex with strictly inward boundary flow."""

    center: IArray
    half_side: float
    subdivisions: int


def validate_trapping_square(
    pot, center, half_side: float, subdivisions: int = 64
) -> TrappingSquare:
    """Certify the square of the given half side length around ``center``.

    Two checks: (a) the interval Hessian over the whole square has
    verifiably positive trace and determinant (strict convexity); (b) on
    each of the four edges, split into ``subdivisions`` segments, the
    outward gradient component is verifiably positive (so -grad V points
    strictly inward).  Raises ValidationError naming the failing check.
    """
    if isinstance(center, CriticalPoint):
        if center.kind != "minimum":
            raise DomainError("trapping square requires a minimum")
        cx, cy = center.location[0], center.location[1]
    else:
        cx, cy = center
        if not isinstance(cx, Interval):
            cx = Interval(float(cx))
        if not isinstance(cy, Interval):
            cy = Interval(float(cy))
    h = float(half_side)
    m = int(subdivisions)
    if not (h > 0.0):
        raise DomainError("half_side must be positive")
    if m < 1:
        raise DomainError("subdivisions must be at least 1")

    span = Interval(-h, h)
    H = pot.hessian(cx + span, cy + span)
    tr = H[0, 0] + H[1, 1]
    det = H[0, 0] * H[1, 1] - H[0, 1].sqr()
    if not (tr.lo > 0.0 and det.lo > 0.0):
        raise ValidationError(
            f"convexity not verified over the square: trace = {tr!r}, "
            f"det = {det!r}"
        )

    breaks = np.linspace(-h, h, m + 1)
    segments = [Interval(float(breaks[i]), float(breaks[i + 1])) for i in range(m)]
    # (name, fixed x, fixed y, gradient component, required sign)
    edges = [
        ("right", cx + Interval(h), None, 0, +1),
        ("left", cx + Interval(-h), None, 0, -1),
        ("top", None, cy + Interval(h), 1, +1),
        ("bottom", None, cy + Interval(-h), 1, -1),
    ]
    for name, fx, fy, comp, sign in edges:
        for i, seg in enumerate(segments):
            x = fx if fx is not None else cx + seg
            y = fy if fy is not None else cy + seg
            g = pot.gradient(x, y)[comp]
            ok = g.lo > 0.0 if sign > 0 else g.hi < 0.0
            if not ok:
                raise ValidationError(
                    f"inward flow not verified on {name} edge segment "
                    f"{i + 1}/{m}: gradient component = {g!r}"
                )
    return TrappingSquare(
        center=IArray.from_intervals([cx, cy]), half_side=h, subdivisions=m
    )
