"""Sequence algebras for Taylor and Chebyshev coefficients.

Taylor sequences multiply with the Cauchy product

    (u * v)_n = sum_{m=0}^{n} u_m v_{n-m},

Chebyshev sequences (one-sided, representing X = X_0 + 2 sum_{k>=1} X_k T_k)
with the symmetric discrete convolution

    (u * v)_k = sum_{l in Z} u_{|l|} v_{|k-l|}
              = sum_{m=0}^{k} u_m v_{k-m}
                + sum_{m>=1} (u_m v_{k+m} + u_{k+m} v_m).

Both algebras are Banach algebras for the weighted norms used in the
certification bounds:

    ||p||_1,eta   (Taylor, weight eta_i per component, plain l^1 in n),
    ||u||_nu = |u_0| + 2 sum_{k>=1} |u_k| nu^k   (Chebyshev, nu > 1).

Sequences are held as 1-d :class:`IArray` objects (one scalar sequence
per array).  The convolution kernels below loop over the shorter operand
and work on array slices, which is fast enough for the coefficient
counts involved (tens to low hundreds).
"""

from __future__ import annotations

import numpy as np

from .errors import ConvergenceError, DomainError, ShapeError
from .interval import IArray, Interval, _vdown, _vup, umul, usum

# ---------------------------------------------------------------------------
# product kernels
# ---------------------------------------------------------------------------


def _mul_scalar_slice(slo, shi, vlo, vhi):
    """Outward-rounded endpoints of Interval(slo,shi) * slice (vlo,vhi).

    Overflow warnings are suppressed: infinite endpoints stay infinite
    through min/max and raise RangeError at the next IArray build.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        p1 = slo * vlo
        p2 = slo * vhi
        p3 = shi * vlo
        p4 = shi * vhi
    lo = np.minimum(np.minimum(p1, p2), np.minimum(p3, p4))
    hi = np.maximum(np.maximum(p1, p2), np.maximum(p3, p4))
    return _vdown(lo), _vup(hi)


def _acc(out_lo, out_hi, sl, lo, hi):
    with np.errstate(over="ignore", invalid="ignore"):
        out_lo[sl] = _vdown(out_lo[sl] + lo)
        out_hi[sl] = _vup(out_hi[sl] + hi)


def cauchy_product(u: IArray, v: IArray, out_len: int | None = None) -> IArray:
    """Truncated Cauchy product along the last axis.

    1-d inputs are single sequences; 2-d inputs are batches of sequences
    (leading axis broadcast).
    """
    nu, nv = u.shape[-1], v.shape[-1]
    full = nu + nv - 1
    if out_len is None:
        out_len = full
    shape = np.broadcast_shapes(u.shape[:-1], v.shape[:-1]) + (out_len,)
    out_lo = np.zeros(shape)
    out_hi = np.zeros(shape)
    for m in range(min(nu, out_len)):
        width = min(nv, out_len - m)
        lo, hi = _mul_scalar_slice(
            u.lo[..., m : m + 1], u.hi[..., m : m + 1],
            v.lo[..., :width], v.hi[..., :width],
        )
        _acc(out_lo, out_hi, (Ellipsis, slice(m, m + width)), lo, hi)
    return IArray(out_lo, out_hi)


def cheb_product(u: IArray, v: IArray, out_len: int | None = None) -> IArray:
    """Truncated symmetric convolution along the last axis."""
    nu, nv = u.shape[-1], v.shape[-1]
    full = nu + nv - 1
    if out_len is None:
        out_len = full
    shape = np.broadcast_shapes(u.shape[:-1], v.shape[:-1]) + (out_len,)
    out_lo = np.zeros(shape)
    out_hi = np.zeros(shape)
    # one-sided part: same as the Cauchy product
    for m in range(min(nu, out_len)):
        width = min(nv, out_len - m)
        lo, hi = _mul_scalar_slice(
            u.lo[..., m : m + 1], u.hi[..., m : m + 1],
            v.lo[..., :width], v.hi[..., :width],
        )
        _acc(out_lo, out_hi, (Ellipsis, slice(m, m + width)), lo, hi)
    # reflected parts: u_m v_{k+m} and u_{k+m} v_m for m >= 1
    for m in range(1, nu):
        width = min(nv - m, out_len)
        if width <= 0:
            break
        lo, hi = _mul_scalar_slice(
            u.lo[..., m : m + 1], u.hi[..., m : m + 1],
            v.lo[..., m : m + width], v.hi[..., m : m + width],
        )
        _acc(out_lo, out_hi, (Ellipsis, slice(0, width)), lo, hi)
    for m in range(1, nv):
        width = min(nu - m, out_len)
        if width <= 0:
            break
        lo, hi = _mul_scalar_slice(
            v.lo[..., m : m + 1], v.hi[..., m : m + 1],
            u.lo[..., m : m + width], u.hi[..., m : m + width],
        )
        _acc(out_lo, out_hi, (Ellipsis, slice(0, width)), lo, hi)
    return IArray(out_lo, out_hi)


def cauchy_product_f(u: np.ndarray, v: np.ndarray, out_len: int | None = None) -> np.ndarray:
    """Float twin of :func:`cauchy_product` (no rounding control)."""
    nu, nv = u.shape[-1], v.shape[-1]
    if out_len is None:
        out_len = nu + nv - 1
    shape = np.broadcast_shapes(u.shape[:-1], v.shape[:-1]) + (out_len,)
    out = np.zeros(shape)
    for m in range(min(nu, out_len)):
        width = min(nv, out_len - m)
        out[..., m : m + width] += u[..., m : m + 1] * v[..., :width]
    return out


def cheb_product_f(u: np.ndarray, v: np.ndarray, out_len: int | None = None) -> np.ndarray:
    """Float twin of :func:`cheb_product` (no rounding control)."""
    nu, nv = u.shape[-1], v.shape[-1]
    if out_len is None:
        out_len = nu + nv - 1
    shape = np.broadcast_shapes(u.shape[:-1], v.shape[:-1]) + (out_len,)
    out = np.zeros(shape)
    for m in range(min(nu, out_len)):
        width = min(nv, out_len - m)
        out[..., m : m + width] += u[..., m : m + 1] * v[..., :width]
    for m in range(1, nu):
        width = min(nv - m, out_len)
        if width <= 0:
            break
        out[..., :width] += u[..., m : m + 1] * v[..., m : m + width]
    for m in range(1, nv):
        width = min(nu - m, out_len)
        if width <= 0:
            break
        out[..., :width] += v[..., m : m + 1] * u[..., m : m + width]
    return out


def seq_scale(u: IArray, c: Interval | float) -> IArray:
    if not isinstance(c, Interval):
        c = Interval(float(c))
    lo, hi = _mul_scalar_slice(c.lo, c.hi, u.lo, u.hi)
    return IArray(lo, hi)


def seq_add(u: IArray, v: IArray) -> IArray:
    """Add sequences of possibly different lengths (zero padded)."""
    n = max(len(u), len(v))
    out_lo = np.zeros(n)
    out_hi = np.zeros(n)
    out_lo[: len(u)] = u.lo
    out_hi[: len(u)] = u.hi
    out_lo[: len(v)] = _vdown(out_lo[: len(v)] + v.lo)
    out_hi[: len(v)] = _vup(out_hi[: len(v)] + v.hi)
    return IArray(out_lo, out_hi)


def seq_const(c: Interval | float, length: int = 1) -> IArray:
    out = IArray.zeros(length)
    out[0] = c if isinstance(c, Interval) else Interval(float(c))
    return out


# ---------------------------------------------------------------------------
# weights and norms
# ---------------------------------------------------------------------------

_xi_cache: dict[tuple[float, int], IArray] = {}


def cheb_weights(nu: float, length: int) -> IArray:
    """xi_k(nu): 1 for k = 0, 2 nu^k for k >= 1, as an interval array."""
    if nu <= 1.0:
        raise DomainError("nu must exceed 1")
    key = (nu, length)
    hit = _xi_cache.get(key)
    if hit is not None:
        return hit
    lo = np.empty(length)
    hi = np.empty(length)
    lo[0] = hi[0] = 1.0
    p = Interval(1.0)
    nui = Interval(float(nu))
    two = Interval(2.0)
    for k in range(1, length):
        p = p * nui
        w = two * p
        lo[k] = w.lo
        hi[k] = w.hi
    arr = IArray(lo, hi)
    _xi_cache[key] = arr
    return arr


def norm_cheb(u: IArray, nu: float) -> Interval:
    """Enclosure of ||u||_nu = |u_0| + 2 sum |u_k| nu^k."""
    xi = cheb_weights(nu, len(u))
    mags = u.mag()
    hi = float(usum(umul(mags, xi.hi)))
    migs = u.mig()
    n = len(u)
    lo = float(np.dot(migs, xi.lo) * (1.0 - 2.0 * (n + 2) * 2.0 ** -53))
    return Interval(max(lo, 0.0), hi)


def norm_taylor_tail(u: IArray, start: int = 0) -> Interval:
    """Enclosure of sum_{n >= start} |u_n| (plain l^1, optionally shifted)."""
    if start >= len(u):
        return Interval(0.0)
    sub = u[start:]
    mags = sub.mag()
    hi = float(usum(mags))
    migs = sub.mig()
    lo = float(np.sum(migs) * (1.0 - 2.0 * (len(mags) + 2) * 2.0 ** -53))
    return Interval(max(lo, 0.0), hi)


def norm_weighted_block(norms: list[list[Interval]], eta: np.ndarray) -> Interval:
    """max_j (1/eta_j) sum_i norms[i][j] * eta_i for a d x d norm table."""
    d = len(eta)
    best = Interval(0.0)
    for j in range(d):
        col = Interval(0.0)
        for i in range(d):
            col = col + norms[i][j] * Interval(float(eta[i]))
        col = col / Interval(float(eta[j]))
        if col.hi > best.hi:
            best = col
    return best


# ---------------------------------------------------------------------------
# Perron weights
# ---------------------------------------------------------------------------


def perron_weights(B: np.ndarray, tol: float = 1e-14, max_iter: int = 10_000):
    """Left Perron eigenvector of an entrywise nonnegative matrix.

    Power iteration on B^T from the uniform start vector, normalized to
    max-entry one.  Returns ``(eta, rho_hat)`` as plain floats: the
    weights only tune the tightness of subsequent norm computations, so
    no rigor is needed here.
    """
    B = np.asarray(B, dtype=np.float64)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ShapeError("perron_weights expects a square matrix")
    if np.any(B < 0.0):
        raise DomainError("matrix must be entrywise nonnegative")
    if not np.any(B > 0.0):
        raise ValueError("zero matrix has no Perron vector")
    n = B.shape[0]
    eta = np.ones(n) / n
    rho = 0.0
    for _ in range(max_iter):
        nxt = B.T @ eta
        s = float(np.max(nxt))
        if s <= 0.0:
            raise ValueError("iteration collapsed; matrix too degenerate")
        nxt = nxt / s
        if float(np.max(np.abs(nxt - eta))) < tol:
            return nxt / float(np.max(nxt)), s
        eta = nxt
        rho = s
    raise ConvergenceError(f"perron iteration did not reach tol {tol} (rho~{rho})")


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def eval_taylor(p: IArray, theta: Interval | float) -> IArray:
    """Evaluate a (N, d) Taylor coefficient array at theta by Horner."""
    if not isinstance(theta, Interval):
        theta = Interval(float(theta))
    N = p.shape[0]
    acc = p[N - 1]
    for n in range(N - 2, -1, -1):
        lo, hi = _mul_scalar_slice(theta.lo, theta.hi, acc.lo, acc.hi)
        acc = IArray(_vdown(lo), _vup(hi)) + p[n]
    return acc


def eval_cheb_left(u: IArray) -> Interval:
    """X(-1) = u_0 + 2 sum_k (-1)^k u_k."""
    signs = np.ones(len(u))
    signs[1::2] = -1.0
    flip = IArray(np.where(signs > 0, u.lo, -u.hi), np.where(signs > 0, u.hi, -u.lo))
    tail = flip[1:].sum() if len(u) > 1 else Interval(0.0)
    return u[0] + Interval(2.0) * tail


def eval_cheb_right(u: IArray) -> Interval:
    """X(+1) = u_0 + 2 sum_k u_k."""
    tail = u[1:].sum() if len(u) > 1 else Interval(0.0)
    return u[0] + Interval(2.0) * tail


def eval_cheb_clenshaw(u: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Float Clenshaw evaluation of u_0 + 2 sum u_k T_k at points s."""
    b1 = np.zeros_like(s)
    b2 = np.zeros_like(s)
    for k in range(len(u) - 1, 0, -1):
        b1, b2 = 2.0 * s * b1 - b2 + 2.0 * u[k], b1
    return u[0] + s * b1 - b2


def pi_zero_l1(u: IArray) -> Interval:
    """||pi^0 u||_1 = sum_{n>=1} |u_n| (the n = 0 entry suppressed)."""
    return norm_taylor_tail(u, start=1)
