"""The Muller-Brown potential and its polynomial lift to R^6.

The potential is a sum of four exponentials of quadratics,

    V(x, y) = sum_i alpha_i exp(a_i (x-x0_i)^2 + b_i (x-x0_i)(y-y0_i)
                                 + c_i (y-y0_i)^2),

and the gradient system x' = -grad V(x) becomes polynomial after
adjoining the four exponential terms z_i = psi_i(x, y) as extra state
variables.  Writing l1_i = 2 a_i X1 + b_i X2 - w1_i and
l2_i = b_i X1 + 2 c_i X2 - w2_i for the partial derivatives of the
exponents, the extended field on R^6 is

    f^(1) = -sum_i l1_i Z_i,          f^(2) = -sum_i l2_i Z_i,
    f^(j+2) = -(l1_j f^(1)... ) ... = -(l1_j G1 + l2_j G2) Z_j,

with G1 = sum_i l1_i Z_i, G2 = sum_i l2_i Z_i.  Components 3..6 have
degree 4, so all coefficient sequences of f(X) close after 4(n-1)+1
terms.

Two evaluation routes are provided.  :class:`PolyField` stores each
component as a sparse exponent -> coefficient mapping and evaluates
points, Taylor/Chebyshev coefficient sequences, and derivative tensors
generically.  :class:`MBExtendedField` additionally overrides the hot
paths (f_seq, df_seq and their float twins) with grouped evaluations
that follow the G1/G2/H structure above; the generic route stays
available as an independent cross-check.

All interval evaluations return enclosures; float twins (``*_f``) are
non-rigorous mirrors used for Newton iterations and diagnostics only.
"""

from __future__ import annotations

import itertools

import numpy as np

from .errors import DomainError, ShapeError
from .interval import IArray, Interval, ONE, ZERO, isum
from .series import (
    cauchy_product,
    cauchy_product_f,
    cheb_product,
    cheb_product_f,
)

# An extended state is a plain 6-vector of intervals.
ExtState = IArray

_STANDARD = {
    "alpha": ("-200", "-100", "-170", "15"),
    "a": ("-1", "-1", "-6.5", "0.7"),
    "b": ("0", "0", "11", "0.6"),
    "c": ("-10", "-10", "-6.5", "0.7"),
    "x0": ("1", "0", "-0.5", "-1"),
    "y0": ("0", "0.5", "1.5", "1"),
}

_PARAM_NAMES = ("alpha", "a", "b", "c", "x0", "y0")


def _param_vector(values) -> IArray:
    items = []
    for v in values:
        if isinstance(v, Interval):
            items.append(v)
        elif isinstance(v, str):
            items.append(Interval.from_decimal(v))
        else:
            # repr() of a float is its shortest exact decimal
            items.append(Interval.from_decimal(repr(float(v))))
    if len(items) != 4:
        raise ShapeError("parameter vectors must have 4 entries")
    return IArray.from_intervals(items)


class MBParams:
    """Parameter set of the four-term Gaussian potential.

    Each field is a 4-entry interval vector enclosing the decimal
    parameter values (width at most 1 ulp; most entries are exact in
    binary64).  ``w1``, ``w2`` hold the derived shift coefficients
    w1_i = 2 a_i x0_i + b_i y0_i and w2_i = b_i x0_i + 2 c_i y0_i.
    """

    __slots__ = ("alpha", "a", "b", "c", "x0", "y0", "w1", "w2")

    def __init__(self, alpha, a, b, c, x0, y0):
        self.alpha = _param_vector(alpha)
        self.a = _param_vector(a)
        self.b = _param_vector(b)
        self.c = _param_vector(c)
        self.x0 = _param_vector(x0)
        self.y0 = _param_vector(y0)
        self.w1 = self.a * self.x0 * 2.0 + self.b * self.y0
        self.w2 = self.b * self.x0 + self.c * self.y0 * 2.0

    @classmethod
    def standard(cls) -> "MBParams":
        return cls(**_STANDARD)

    @classmethod
    def from_mapping(cls, mapping) -> "MBParams":
        """Build parameters from a JSON-style mapping, defaulting to the
        standard set for absent keys.  Values may be decimal strings or
        numbers (interpreted as their exact decimal value)."""
        unknown = set(mapping) - set(_PARAM_NAMES)
        if unknown:
            raise DomainError(f"unknown potential parameters: {sorted(unknown)}")
        merged = {name: mapping.get(name, _STANDARD[name]) for name in _PARAM_NAMES}
        return cls(**merged)


class MullerBrownPotential:
    """Interval evaluator for V, its derivatives up to third order, and
    the exponential terms psi_i = alpha_i exp(q_i)."""

    def __init__(self, params: MBParams | None = None):
        self.params = params if params is not None else MBParams.standard()
        p = self.params
        self._alpha_f = p.alpha.mid()
        self._a_f = p.a.mid()
        self._b_f = p.b.mid()
        self._c_f = p.c.mid()
        self._x0_f = p.x0.mid()
        self._y0_f = p.y0.mid()

    # -- interval evaluations ------------------------------------------

    def _terms(self, x: Interval, y: Interval):
        """Per-term psi_i and exponent partials s1_i, s2_i at (x, y)."""
        p = self.params
        psis, s1s, s2s = [], [], []
        for i in range(4):
            dx = x - p.x0[i]
            dy = y - p.y0[i]
            q = p.a[i] * dx.sqr() + p.b[i] * (dx * dy) + p.c[i] * dy.sqr()
            psis.append(p.alpha[i] * q.exp())
            s1s.append(p.a[i] * dx * 2.0 + p.b[i] * dy)
            s2s.append(p.b[i] * dx + p.c[i] * dy * 2.0)
        return psis, s1s, s2s

    def psi(self, x: Interval, y: Interval) -> IArray:
        psis, _, _ = self._terms(x, y)
        return IArray.from_intervals(psis)

    def lift(self, x: Interval, y: Interval) -> IArray:
        """Extended state (x, y, psi(x, y)) as a 6-vector."""
        psis, _, _ = self._terms(x, y)
        return IArray.from_intervals([x, y] + psis)

    def value(self, x: Interval, y: Interval) -> Interval:
        psis, _, _ = self._terms(x, y)
        return isum(psis)

    def gradient(self, x: Interval, y: Interval) -> IArray:
        psis, s1s, s2s = self._terms(x, y)
        vx = isum(s1 * psi for s1, psi in zip(s1s, psis))
        vy = isum(s2 * psi for s2, psi in zip(s2s, psis))
        return IArray.from_intervals([vx, vy])

    def hessian(self, x: Interval, y: Interval) -> IArray:
        p = self.params
        psis, s1s, s2s = self._terms(x, y)
        vxx = isum((p.a[i] * 2.0 + s1s[i].sqr()) * psis[i] for i in range(4))
        vxy = isum((p.b[i] + s1s[i] * s2s[i]) * psis[i] for i in range(4))
        vyy = isum((p.c[i] * 2.0 + s2s[i].sqr()) * psis[i] for i in range(4))
        return IArray.from_intervals([[vxx, vxy], [vxy, vyy]])

    def dpsi(self, x: Interval, y: Interval) -> IArray:
        """Jacobian of psi wrt (x, y): rows psi_i * (s1_i, s2_i)."""
        psis, s1s, s2s = self._terms(x, y)
        rows = [[s1s[i] * psis[i], s2s[i] * psis[i]] for i in range(4)]
        return IArray.from_intervals(rows)

    def third(self, x: Interval, y: Interval) -> IArray:
        """(Vxxx, Vxxy, Vxyy, Vyyy) as a 4-vector of enclosures."""
        p = self.params
        psis, s1s, s2s = self._terms(x, y)
        t = [ZERO, ZERO, ZERO, ZERO]
        for i in range(4):
            a2 = p.a[i] * 2.0
            b = p.b[i]
            c2 = p.c[i] * 2.0
            s1, s2, psi = s1s[i], s2s[i], psis[i]
            t[0] = t[0] + (a2 * s1 * 3.0 + s1 * s1.sqr()) * psi
            t[1] = t[1] + (a2 * s2 + b * s1 * 2.0 + s1.sqr() * s2) * psi
            t[2] = t[2] + (c2 * s1 + b * s2 * 2.0 + s1 * s2.sqr()) * psi
            t[3] = t[3] + (c2 * s2 * 3.0 + s2 * s2.sqr()) * psi
        return IArray.from_intervals(t)

    def d3_norm_bound(self, x: Interval, y: Interval) -> Interval:
        """Upper bound of the 1-norm-induced operator norm of D^3 V over
        the rectangle (x, y).  On the unit 1-ball the supremum of a
        multilinear map is attained at basis-vector pairs, so the norm
        is the largest output 1-norm over input pairs:
        max(|Vxxx|+|Vxxy|, |Vxxy|+|Vxyy|, |Vxyy|+|Vyyy|)."""
        t = self.third(x, y)
        pairs = [t[0].abs() + t[1].abs(), t[1].abs() + t[2].abs(), t[2].abs() + t[3].abs()]
        return Interval(max(p.lo for p in pairs), max(p.hi for p in pairs))

    # -- float twins ----------------------------------------------------

    def _terms_f(self, xy):
        x, y = float(xy[0]), float(xy[1])
        dx = x - self._x0_f
        dy = y - self._y0_f
        q = self._a_f * dx * dx + self._b_f * dx * dy + self._c_f * dy * dy
        # callers treat inf as out-of-range input, no need to warn here
        with np.errstate(over="ignore"):
            psi = self._alpha_f * np.exp(q)
        s1 = 2.0 * self._a_f * dx + self._b_f * dy
        s2 = self._b_f * dx + 2.0 * self._c_f * dy
        return psi, s1, s2

    def exponentials_f(self, xy) -> np.ndarray:
        psi, _, _ = self._terms_f(xy)
        return psi

    def value_f(self, xy) -> float:
        psi, _, _ = self._terms_f(xy)
        return float(np.sum(psi))

    def gradient_f(self, xy) -> np.ndarray:
        psi, s1, s2 = self._terms_f(xy)
        return np.array([np.sum(s1 * psi), np.sum(s2 * psi)])

    def hessian_f(self, xy) -> np.ndarray:
        psi, s1, s2 = self._terms_f(xy)
        vxx = np.sum((2.0 * self._a_f + s1 * s1) * psi)
        vxy = np.sum((self._b_f + s1 * s2) * psi)
        vyy = np.sum((2.0 * self._c_f + s2 * s2) * psi)
        return np.array([[vxx, vxy], [vxy, vyy]])

    def lift_f(self, xy) -> np.ndarray:
        psi, _, _ = self._terms_f(xy)
        return np.concatenate([np.asarray(xy, dtype=float), psi])

    def dpsi_f(self, xy) -> np.ndarray:
        """Jacobian of psi wrt (x, y): rows psi_i * (s1_i, s2_i)."""
        psi, s1, s2 = self._terms_f(xy)
        return np.stack([s1 * psi, s2 * psi], axis=1)


def barrier(saddle_V: Interval, min_V: Interval) -> Interval:
    """Twice the potential difference: the geometric-action value of a
    minimum-to-saddle path segment (diagnostic only)."""
    return (saddle_V - min_V) * 2.0


# ---------------------------------------------------------------------------
# polynomial vector fields
# ---------------------------------------------------------------------------


def _unit_exp(j: int, dim: int) -> tuple:
    e = [0] * dim
    e[j] = 1
    return tuple(e)


def _poly_add(p: dict, q: dict) -> dict:
    out = dict(p)
    for e, c in q.items():
        out[e] = out[e] + c if e in out else c
    return out


def _poly_mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for ea, ca in p.items():
        for eb, cb in q.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            t = ca * cb
            out[e] = out[e] + t if e in out else t
    return out


def _poly_scale(p: dict, s: Interval) -> dict:
    return {e: c * s for e, c in p.items()}


def _poly_diff(p: dict, j: int) -> dict:
    out = {}
    for e, c in p.items():
        if e[j] == 0:
            continue
        de = list(e)
        de[j] -= 1
        out[tuple(de)] = c * float(e[j])
    return out


def _poly_clean(p: dict) -> dict:
    return {e: c for e, c in p.items() if not (c.lo == 0.0 and c.hi == 0.0)}


def _poly_degree(p: dict) -> int:
    return max((sum(e) for e in p), default=0)


def _poly_eval_point(p: dict, xs) -> Interval:
    acc = ZERO
    for e, c in p.items():
        t = c
        for j, k in enumerate(e):
            if k == 1:
                t = t * xs[j]
            elif k > 1:
                t = t * xs[j] ** k
        acc = acc + t
    return acc


def _poly_eval_point_f(p: dict, xs: np.ndarray) -> float:
    acc = 0.0
    for e, c in p.items():
        t = c
        for j, k in enumerate(e):
            if k:
                t = t * xs[j] ** k
        acc += t
    return acc


def _poly_eval_seq(p: dict, X: IArray, prod, out_len: int, pair2=None) -> IArray:
    """Coefficient sequence of p(X) for a d x n sequence stack X,
    truncated/padded to out_len.  pair2 may hold the precomputed
    pairwise products X_j1 * X_j2 as a (..., d, d, 2n-1) stack."""
    batch = X.shape[:-2]
    acc = IArray.zeros(batch + (out_len,))
    for e, c in p.items():
        deg = sum(e)
        if deg == 0:
            acc[..., 0] = acc[..., 0] + c
            continue
        js = [j for j, k in enumerate(e) for _ in range(k)]
        if deg == 1:
            seq = X[..., js[0], :]
        elif deg == 2 and pair2 is not None:
            seq = pair2[..., js[0], js[1], :]
        else:
            seq = X[..., js[0], :]
            for j in js[1:]:
                seq = prod(seq, X[..., j, :])
        w = min(seq.shape[-1], out_len)
        scaled = seq[..., :w] * c
        acc[..., :w] = acc[..., :w] + scaled
    return acc


def _poly_eval_seq_f(p: dict, X: np.ndarray, prodf, out_len: int) -> np.ndarray:
    batch = X.shape[:-2]
    acc = np.zeros(batch + (out_len,))
    for e, c in p.items():
        deg = sum(e)
        if deg == 0:
            acc[..., 0] += c
            continue
        js = [j for j, k in enumerate(e) for _ in range(k)]
        seq = X[..., js[0], :]
        for j in js[1:]:
            seq = prodf(seq, X[..., j, :])
        w = min(seq.shape[-1], out_len)
        acc[..., :w] += c * seq[..., :w]
    return acc


def _products(basis: str):
    if basis == "taylor":
        return cauchy_product, cauchy_product_f
    if basis == "cheb":
        return cheb_product, cheb_product_f
    raise DomainError(f"unknown basis {basis!r}; expected 'taylor' or 'cheb'")


class PolyField:
    """Polynomial vector field on R^dim with sparse monomial storage.

    comps[i] maps exponent tuples (length dim) to Interval coefficients.
    Evaluation is generic: points, coefficient sequences under either
    product, and derivative tensors obtained by formal differentiation
    of the monomial data.
    """

    def __init__(self, comps, dim: int):
        if len(comps) != dim:
            raise ShapeError("one component mapping per dimension required")
        self.dim = dim
        self.comps = [_poly_clean(dict(c)) for c in comps]
        for comp in self.comps:
            for e in comp:
                if len(e) != dim:
                    raise ShapeError("exponent tuples must have length dim")
        self.degree = max((_poly_degree(c) for c in self.comps), default=0)
        self.comps_f = [{e: c.mid() for e, c in comp.items()} for comp in self.comps]
        self._deriv_cache: dict = {}

    def seq_len(self, n: int, order: int = 0) -> int:
        """Natural coefficient count of order-th derivatives of f applied
        to length-n inputs: (n-1) * (degree - order) + 1."""
        return (n - 1) * max(self.degree - order, 0) + 1

    # -- derivative polynomials ----------------------------------------

    def deriv_poly(self, i: int, idx) -> dict:
        """Mixed partial of component i wrt the (sorted) index tuple."""
        idx = tuple(sorted(idx))
        key = (i, idx)
        cached = self._deriv_cache.get(key)
        if cached is None:
            if not idx:
                cached = self.comps[i]
            else:
                cached = _poly_clean(_poly_diff(self.deriv_poly(i, idx[:-1]), idx[-1]))
            self._deriv_cache[key] = cached
        return cached

    # -- point evaluations ----------------------------------------------

    def f_point(self, X: IArray) -> IArray:
        xs = [X[j] for j in range(self.dim)]
        return IArray.from_intervals([_poly_eval_point(c, xs) for c in self.comps])

    def df_point(self, X: IArray) -> IArray:
        xs = [X[j] for j in range(self.dim)]
        rows = [
            [_poly_eval_point(self.deriv_poly(i, (j,)), xs) for j in range(self.dim)]
            for i in range(self.dim)
        ]
        return IArray.from_intervals(rows)

    def _tensor_apply(self, k: int, X: IArray, hs) -> IArray:
        xs = [X[j] for j in range(self.dim)]
        out = []
        for i in range(self.dim):
            memo: dict = {}
            acc = ZERO
            for tup in itertools.product(range(self.dim), repeat=k):
                skey = tuple(sorted(tup))
                if skey not in memo:
                    memo[skey] = _poly_eval_point(self.deriv_poly(i, skey), xs)
                val = memo[skey]
                if val.lo == 0.0 and val.hi == 0.0:
                    continue
                for l, j in enumerate(tup):
                    val = val * hs[l][j]
                acc = acc + val
            out.append(acc)
        return IArray.from_intervals(out)

    def D2f(self, X: IArray, h1: IArray, h2: IArray) -> IArray:
        return self._tensor_apply(2, X, (h1, h2))

    def D3f(self, X: IArray, h1: IArray, h2: IArray, h3: IArray) -> IArray:
        return self._tensor_apply(3, X, (h1, h2, h3))

    def D4f(self, X: IArray, h1: IArray, h2: IArray, h3: IArray, h4: IArray) -> IArray:
        return self._tensor_apply(4, X, (h1, h2, h3, h4))

    # -- sequence evaluations ---------------------------------------------

    def f_seq(self, X: IArray, basis: str = "taylor", out_len: int | None = None) -> IArray:
        """Coefficients of f(X) for a (..., dim, n) sequence stack."""
        prod, _ = _products(basis)
        n = X.shape[-1]
        L = self.seq_len(n) if out_len is None else out_len
        batch = X.shape[:-2]
        out = IArray.zeros(batch + (self.dim, L))
        for i, comp in enumerate(self.comps):
            out[..., i, :] = _poly_eval_seq(comp, X, prod, L)
        return out

    def f_cheb(self, X: IArray, out_len: int | None = None) -> IArray:
        return self.f_seq(X, basis="cheb", out_len=out_len)

    def df_seq(self, X: IArray, basis: str = "taylor", out_len: int | None = None) -> IArray:
        """Coefficients of all Df entries: shape (..., dim, dim, L)."""
        prod, _ = _products(basis)
        n = X.shape[-1]
        L = self.seq_len(n, 1) if out_len is None else out_len
        batch = X.shape[:-2]
        out = IArray.zeros(batch + (self.dim, self.dim, L))
        for i in range(self.dim):
            for j in range(self.dim):
                p = self.deriv_poly(i, (j,))
                if p:
                    out[..., i, j, :] = _poly_eval_seq(p, X, prod, L)
        return out

    def derivs_seq(self, k: int, X: IArray, basis: str = "taylor") -> dict:
        """Coefficient stacks of all order-k mixed partials of f at X.

        Returns {sorted index tuple: (..., dim, L) IArray} over index
        multisets; by symmetry these cover all ordered index tuples.
        """
        prod, _ = _products(basis)
        n = X.shape[-1]
        L = self.seq_len(n, k)
        batch = X.shape[:-2]
        pair2 = None
        if self.degree - k >= 2:
            pair2 = prod(X[..., :, None, :], X[..., None, :, :])
        out = {}
        for ms in itertools.combinations_with_replacement(range(self.dim), k):
            stack = IArray.zeros(batch + (self.dim, L))
            for i in range(self.dim):
                p = self.deriv_poly(i, ms)
                if p:
                    stack[..., i, :] = _poly_eval_seq(p, X, prod, L, pair2=pair2)
            out[ms] = stack
        return out

    # -- float twins -----------------------------------------------------

    def f_point_f(self, x: np.ndarray) -> np.ndarray:
        return np.array([_poly_eval_point_f(c, x) for c in self.comps_f])

    def df_point_f(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros((self.dim, self.dim))
        for i in range(self.dim):
            for j in range(self.dim):
                p = self.deriv_poly(i, (j,))
                if p:
                    pf = {e: c.mid() for e, c in p.items()}
                    out[i, j] = _poly_eval_point_f(pf, x)
        return out

    def f_seq_f(self, X: np.ndarray, basis: str = "taylor", out_len: int | None = None) -> np.ndarray:
        _, prodf = _products(basis)
        n = X.shape[-1]
        L = self.seq_len(n) if out_len is None else out_len
        batch = X.shape[:-2]
        out = np.zeros(batch + (self.dim, L))
        for i, comp in enumerate(self.comps_f):
            out[..., i, :] = _poly_eval_seq_f(comp, X, prodf, L)
        return out

    def df_seq_f(self, X: np.ndarray, basis: str = "taylor", out_len: int | None = None) -> np.ndarray:
        _, prodf = _products(basis)
        n = X.shape[-1]
        L = self.seq_len(n, 1) if out_len is None else out_len
        batch = X.shape[:-2]
        out = np.zeros(batch + (self.dim, self.dim, L))
        for i in range(self.dim):
            for j in range(self.dim):
                p = self.deriv_poly(i, (j,))
                if p:
                    pf = {e: c.mid() for e, c in p.items()}
                    out[..., i, j, :] = _poly_eval_seq_f(pf, X, prodf, L)
        return out


def linear_field(M) -> PolyField:
    """The field f(X) = M X (surrogate for bound diagnostics)."""
    if isinstance(M, IArray):
        rows = M.shape[0]
        comps = [
            {_unit_exp(j, M.shape[1]): M[i, j] for j in range(M.shape[1])}
            for i in range(rows)
        ]
    else:
        M = np.asarray(M, dtype=float)
        rows = M.shape[0]
        comps = [
            {_unit_exp(j, M.shape[1]): Interval(M[i, j]) for j in range(M.shape[1])}
            for i in range(rows)
        ]
    return PolyField(comps, rows)


def zero_field(dim: int) -> PolyField:
    return PolyField([{} for _ in range(dim)], dim)


class MBExtendedField(PolyField):
    """The degree-4 extended Muller-Brown field on R^6.

    Monomial data is generated from the parameter set;  f_seq / df_seq
    and their float twins are overridden with grouped evaluations of
    the G1/G2/H structure, which keep interval dependency (and the
    convolution count) low on the recursion/collocation hot paths.
    """

    def __init__(self, params: MBParams | None = None):
        self.params = params if params is not None else MBParams.standard()
        p = self.params

        l1 = []
        l2 = []
        e0 = (0,) * 6
        for i in range(4):
            l1.append(_poly_clean({
                _unit_exp(0, 6): p.a[i] * 2.0,
                _unit_exp(1, 6): p.b[i],
                e0: -p.w1[i],
            }))
            l2.append(_poly_clean({
                _unit_exp(0, 6): p.b[i],
                _unit_exp(1, 6): p.c[i] * 2.0,
                e0: -p.w2[i],
            }))
        g1: dict = {}
        g2: dict = {}
        for i in range(4):
            zi = {_unit_exp(i + 2, 6): ONE}
            g1 = _poly_add(g1, _poly_mul(l1[i], zi))
            g2 = _poly_add(g2, _poly_mul(l2[i], zi))
        comps = [_poly_scale(g1, Interval(-1.0)), _poly_scale(g2, Interval(-1.0))]
        for j in range(4):
            hj = _poly_add(_poly_mul(l1[j], g1), _poly_mul(l2[j], g2))
            zj = {_unit_exp(j + 2, 6): Interval(-1.0)}
            comps.append(_poly_mul(hj, zj))
        super().__init__(comps, 6)

        self._c2a = (p.a * 2.0).reshape(4, 1)
        self._cb = p.b.reshape(4, 1)
        self._c2c = (p.c * 2.0).reshape(4, 1)
        self._w1 = p.w1
        self._w2 = p.w2
        self._c2a_f = self._c2a.mid()
        self._cb_f = self._cb.mid()
        self._c2c_f = self._c2c.mid()
        self._w1_f = p.w1.mid()
        self._w2_f = p.w2.mid()

    # -- grouped interval evaluation --------------------------------------

    def _affines(self, X: IArray):
        """Sequence stacks of l1_i, l2_i: shapes (..., 4, n)."""
        x1 = X[..., 0:1, :]
        x2 = X[..., 1:2, :]
        l1 = x1 * self._c2a + x2 * self._cb
        l2 = x1 * self._cb + x2 * self._c2c
        l1[..., 0] = l1[..., 0] - self._w1
        l2[..., 0] = l2[..., 0] - self._w2
        return l1, l2

    def f_seq(self, X: IArray, basis: str = "taylor", out_len: int | None = None) -> IArray:
        prod, _ = _products(basis)
        n = X.shape[-1]
        L = 4 * (n - 1) + 1 if out_len is None else out_len
        batch = X.shape[:-2]
        Z = X[..., 2:6, :]
        l1, l2 = self._affines(X)
        g1 = prod(l1, Z).sum(axis=-2)
        g2 = prod(l2, Z).sum(axis=-2)
        h = prod(l1, g1[..., None, :]) + prod(l2, g2[..., None, :])
        f_tail = prod(h, Z)
        out = IArray.zeros(batch + (6, L))
        w = min(g1.shape[-1], L)
        out[..., 0, :w] = -g1[..., :w]
        out[..., 1, :w] = -g2[..., :w]
        w = min(f_tail.shape[-1], L)
        out[..., 2:6, :w] = -f_tail[..., :w]
        return out

    def df_seq(self, X: IArray, basis: str = "taylor", out_len: int | None = None) -> IArray:
        prod, _ = _products(basis)
        n = X.shape[-1]
        L = 3 * (n - 1) + 1 if out_len is None else out_len
        batch = X.shape[:-2]
        Z = X[..., 2:6, :]
        l1, l2 = self._affines(X)
        g1 = prod(l1, Z).sum(axis=-2)
        g2 = prod(l2, Z).sum(axis=-2)
        h = prod(l1, g1[..., None, :]) + prod(l2, g2[..., None, :])
        s_a = (Z * self._c2a).sum(axis=-2)
        s_b = (Z * self._cb).sum(axis=-2)
        s_c = (Z * self._c2c).sum(axis=-2)

        out = IArray.zeros(batch + (6, 6, L))
        w = min(n, L)
        out[..., 0, 0, :w] = -s_a[..., :w]
        out[..., 0, 1, :w] = -s_b[..., :w]
        out[..., 1, 0, :w] = -s_b[..., :w]
        out[..., 1, 1, :w] = -s_c[..., :w]
        out[..., 0, 2:6, :w] = -l1[..., :w]
        out[..., 1, 2:6, :w] = -l2[..., :w]

        # dH_j/dX1 = 2 a_j G1 + b_j G2 + l1_j S_a + l2_j S_b, and
        # dH_j/dX2 = b_j G1 + 2 c_j G2 + l1_j S_b + l2_j S_c
        dh1 = (
            g1[..., None, :] * self._c2a + g2[..., None, :] * self._cb
            + prod(l1, s_a[..., None, :]) + prod(l2, s_b[..., None, :])
        )
        dh2 = (
            g1[..., None, :] * self._cb + g2[..., None, :] * self._c2c
            + prod(l1, s_b[..., None, :]) + prod(l2, s_c[..., None, :])
        )
        col1 = prod(Z, dh1)
        col2 = prod(Z, dh2)
        w = min(col1.shape[-1], L)
        out[..., 2:6, 0, :w] = -col1[..., :w]
        out[..., 2:6, 1, :w] = -col2[..., :w]

        # dH_j/dZ_k = l1_j l1_k + l2_j l2_k;  d f^(j+2)/dZ_k =
        # -(Z_j dH_j/dZ_k + delta_jk H_j)
        dhz = prod(l1[..., :, None, :], l1[..., None, :, :]) + prod(
            l2[..., :, None, :], l2[..., None, :, :]
        )
        blk = prod(Z[..., :, None, :], dhz)
        for j in range(4):
            blk[..., j, j, :] = blk[..., j, j, :] + h[..., j, :]
        w = min(blk.shape[-1], L)
        out[..., 2:6, 2:6, :w] = IArray.zeros(batch + (4, 4, w)) - blk[..., :w]
        return out

    def f_point(self, X: IArray) -> IArray:
        return self.f_seq(X.reshape(6, 1))[..., 0]

    def df_point(self, X: IArray) -> IArray:
        return self.df_seq(X.reshape(6, 1))[..., 0]

    # -- grouped float twins ----------------------------------------------

    def _affines_f(self, X: np.ndarray):
        x1 = X[..., 0:1, :]
        x2 = X[..., 1:2, :]
        l1 = x1 * self._c2a_f + x2 * self._cb_f
        l2 = x1 * self._cb_f + x2 * self._c2c_f
        l1[..., 0] -= self._w1_f
        l2[..., 0] -= self._w2_f
        return l1, l2

    def f_seq_f(self, X: np.ndarray, basis: str = "taylor", out_len: int | None = None) -> np.ndarray:
        _, prodf = _products(basis)
        n = X.shape[-1]
        L = 4 * (n - 1) + 1 if out_len is None else out_len
        batch = X.shape[:-2]
        Z = X[..., 2:6, :]
        l1, l2 = self._affines_f(X)
        g1 = prodf(l1, Z).sum(axis=-2)
        g2 = prodf(l2, Z).sum(axis=-2)
        h = prodf(l1, g1[..., None, :]) + prodf(l2, g2[..., None, :])
        f_tail = prodf(h, Z)
        out = np.zeros(batch + (6, L))
        w = min(g1.shape[-1], L)
        out[..., 0, :w] = -g1[..., :w]
        out[..., 1, :w] = -g2[..., :w]
        w = min(f_tail.shape[-1], L)
        out[..., 2:6, :w] = -f_tail[..., :w]
        return out

    def df_seq_f(self, X: np.ndarray, basis: str = "taylor", out_len: int | None = None) -> np.ndarray:
        _, prodf = _products(basis)
        n = X.shape[-1]
        L = 3 * (n - 1) + 1 if out_len is None else out_len
        batch = X.shape[:-2]
        Z = X[..., 2:6, :]
        l1, l2 = self._affines_f(X)
        g1 = prodf(l1, Z).sum(axis=-2)
        g2 = prodf(l2, Z).sum(axis=-2)
        h = prodf(l1, g1[..., None, :]) + prodf(l2, g2[..., None, :])
        s_a = (Z * self._c2a_f).sum(axis=-2)
        s_b = (Z * self._cb_f).sum(axis=-2)
        s_c = (Z * self._c2c_f).sum(axis=-2)
        out = np.zeros(batch + (6, 6, L))
        w = min(n, L)
        out[..., 0, 0, :w] = -s_a[..., :w]
        out[..., 0, 1, :w] = -s_b[..., :w]
        out[..., 1, 0, :w] = -s_b[..., :w]
        out[..., 1, 1, :w] = -s_c[..., :w]
        out[..., 0, 2:6, :w] = -l1[..., :w]
        out[..., 1, 2:6, :w] = -l2[..., :w]
        dh1 = (
            g1[..., None, :] * self._c2a_f + g2[..., None, :] * self._cb_f
            + prodf(l1, s_a[..., None, :]) + prodf(l2, s_b[..., None, :])
        )
        dh2 = (
            g1[..., None, :] * self._cb_f + g2[..., None, :] * self._c2c_f
            + prodf(l1, s_b[..., None, :]) + prodf(l2, s_c[..., None, :])
        )
        col1 = prodf(Z, dh1)
        col2 = prodf(Z, dh2)
        w = min(col1.shape[-1], L)
        out[..., 2:6, 0, :w] = -col1[..., :w]
        out[..., 2:6, 1, :w] = -col2[..., :w]
        dhz = prodf(l1[..., :, None, :], l1[..., None, :, :]) + prodf(
            l2[..., :, None, :], l2[..., None, :, :]
        )
        blk = prodf(Z[..., :, None, :], dhz)
        for j in range(4):
            blk[..., j, j, :] += h[..., j, :]
        w = min(blk.shape[-1], L)
        out[..., 2:6, 2:6, :w] = -blk[..., :w]
        return out

    def f_point_f(self, x: np.ndarray) -> np.ndarray:
        return self.f_seq_f(np.asarray(x, dtype=float).reshape(6, 1))[..., 0]

    def df_point_f(self, x: np.ndarray) -> np.ndarray:
        return self.df_seq_f(np.asarray(x, dtype=float).reshape(6, 1))[..., 0]
