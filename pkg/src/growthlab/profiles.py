"""Cylinder-functional profiles: smooth compactly supported functions of a
few real pairings, with analytic gradient and Hessian, and their Gaussian
mollifications.

The standard profile is a product of one-dimensional plateau bumps built
from the C-infinity step sigma(t) = u(t)/(u(t)+u(1-t)), u(t) = e^{-1/t}.
Mollification P_Sigma psi(x) = E psi(x + Sigma^{1/2} Z) is evaluated by
tensor Gauss-Hermite quadrature, tabulated on a grid and interpolated with
cubic splines (the tables carry every derivative order used downstream).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .quadrature import gauss_hermite_standard_normal


def _u_all(t):
    """e^{-1/t} with first and second derivatives, zero for t <= 0."""
    u = np.zeros_like(t)
    u1 = np.zeros_like(t)
    u2 = np.zeros_like(t)
    pos = t > 0
    tp = t[pos]
    e = np.exp(-1.0 / tp)
    u[pos] = e
    u1[pos] = e / tp ** 2
    u2[pos] = e * (1.0 / tp ** 4 - 2.0 / tp ** 3)
    return u, u1, u2


def _step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, with two derivatives."""
    t = np.asarray(t, dtype=float)
    A, A1, A2 = _u_all(t)
    B, nB1, B2 = _u_all(1.0 - t)
    B1 = -nB1
    D = A + B
    mid = (t > 0) & (t < 1)
    s = np.where(t >= 1, 1.0, 0.0)
    Dm = np.where(mid, D, 1.0)
    s = np.where(mid, A / Dm, s)
    num1 = A1 * B - A * B1
    s1 = np.where(mid, num1 / Dm ** 2, 0.0)
    D1 = A1 + B1
    num2 = A2 * B - A * B2
    s2 = np.where(mid, num2 / Dm ** 2 - 2.0 * num1 * D1 / Dm ** 3, 0.0)
    return s, s1, s2


@dataclass(frozen=True)
class PlateauBump1D:
    """C-infinity bump supported on [lo, hi], equal to 1 on the inner plateau."""

    lo: float
    hi: float
    rise: float

    def __post_init__(self):
        if not (0 < self.rise <= 0.5 * (self.hi - self.lo) + 1e-15):
            raise ValueError("rise must fit inside the support")

    def pieces(self, y):
        y = np.asarray(y, dtype=float)
        sL, sL1, sL2 = _step((y - self.lo) / self.rise)
        sR, sR1, sR2 = _step((self.hi - y) / self.rise)
        sL1, sL2 = sL1 / self.rise, sL2 / self.rise ** 2
        sR1, sR2 = -sR1 / self.rise, sR2 / self.rise ** 2
        val = sL * sR
        d1 = sL1 * sR + sL * sR1
        d2 = sL2 * sR + 2.0 * sL1 * sR1 + sL * sR2
        return val, d1, d2

    @property
    def support(self):
        return (self.lo, self.hi)


class ProductProfile:
    """psi(x) = prod_k psi_k(x_k) of 1-D plateau bumps; smooth, compact."""

    def __init__(self, factors: list[PlateauBump1D]):
        self.factors = factors
        self.dim = len(factors)
        self.box = [f.support for f in factors]
        self.support_margin = 0.0

    @classmethod
    def bumps(cls, centers, halfwidths, rise_frac: float = 0.5) -> "ProductProfile":
        facs = [PlateauBump1D(c - h, c + h, rise_frac * h) for c, h in zip(centers, halfwidths)]
        return cls(facs)

    def _pieces(self, x):
        x = np.asarray(x, dtype=float)
        return [f.pieces(x[..., k]) for k, f in enumerate(self.factors)]

    def value(self, x):
        pieces = self._pieces(x)
        out = pieces[0][0].copy()
        for v, _, _ in pieces[1:]:
            out = out * v
        return out

    def grad(self, x):
        pieces = self._pieces(x)
        vals = [p[0] for p in pieces]
        out = np.empty(np.asarray(x).shape)
        for i in range(self.dim):
            g = pieces[i][1].copy()
            for k in range(self.dim):
                if k != i:
                    g = g * vals[k]
            out[..., i] = g
        return out

    def hess(self, x):
        pieces = self._pieces(x)
        vals = [p[0] for p in pieces]
        shape = np.asarray(x).shape[:-1]
        out = np.empty(shape + (self.dim, self.dim))
        for i in range(self.dim):
            for j in range(i, self.dim):
                if i == j:
                    h = pieces[i][2].copy()
                    rest = [k for k in range(self.dim) if k != i]
                else:
                    h = pieces[i][1] * pieces[j][1]
                    rest = [k for k in range(self.dim) if k not in (i, j)]
                for k in rest:
                    h = h * vals[k]
                out[..., i, j] = h
                out[..., j, i] = h
        return out


class IndicatorProfile:
    """Box indicator; used where the zero-mode integral is taken exactly."""

    def __init__(self, box: list[tuple[float, float]]):
        self.box = box
        self.dim = len(box)
        self.support_margin = 0.0

    def value(self, x):
        x = np.asarray(x, dtype=float)
        out = np.ones(x.shape[:-1])
        for k, (lo, hi) in enumerate(self.box):
            out = out * ((x[..., k] >= lo) & (x[..., k] <= hi))
        return out


class BoundedSmoothProfile:
    """tanh-based bounded cylindrical profile (not compactly supported)."""

    def __init__(self, dim: int, scale: float = 1.0):
        self.dim = dim
        self.scale = scale
        self.box = None

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return np.tanh(self.scale * x).prod(axis=-1)

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        t = np.tanh(self.scale * x)
        out = np.empty_like(x)
        for i in range(self.dim):
            g = self.scale * (1.0 - t[..., i] ** 2)
            for k in range(self.dim):
                if k != i:
                    g = g * t[..., k]
            out[..., i] = g
        return out


def _bspline3_weights(t: np.ndarray, order: int) -> np.ndarray:
    """Cubic B-spline basis (or a derivative) at offsets -1..2 from floor(t).

    t is the fractional position in [0, 1); returns weights of shape
    t.shape + (4,) for the coefficient at floor + (-1, 0, 1, 2).
    """
    w = np.empty(t.shape + (4,))
    s = 1.0 - t
    if order == 0:
        w[..., 0] = s * s * s / 6.0
        w[..., 1] = (4.0 - 6.0 * t * t + 3.0 * t * t * t) / 6.0
        w[..., 2] = (4.0 - 6.0 * s * s + 3.0 * s * s * s) / 6.0
        w[..., 3] = t * t * t / 6.0
    elif order == 1:
        w[..., 0] = -0.5 * s * s
        w[..., 1] = (-12.0 * t + 9.0 * t * t) / 6.0
        w[..., 2] = (12.0 * s - 9.0 * s * s) / 6.0
        w[..., 3] = 0.5 * t * t
    else:
        w[..., 0] = s
        w[..., 1] = (-12.0 + 18.0 * t) / 6.0
        w[..., 2] = (-12.0 + 18.0 * s) / 6.0
        w[..., 3] = t
    return w


class _SplineTable:
    """Cubic B-spline table with derivative-consistent evaluation.

    All derivative queries differentiate the same interpolant, so the
    family (value, gradient, Hessian) is exactly a smooth function with
    its true derivatives; measure-level identities hold for it exactly,
    independent of the table resolution.
    """

    def __init__(self, data, lows, highs):
        self.lows = np.asarray(lows, dtype=float)
        self.highs = np.asarray(highs, dtype=float)
        self.n = self.lows.size
        pts = data.shape[0]
        self.h = (self.highs - self.lows) / (pts - 1)
        coef = ndimage.spline_filter(data, order=3, mode="constant")
        self.coef = np.pad(coef, 2, mode="constant")
        self.pts = pts

    def evaluate_many(self, x, orders_list):
        """Interpolant derivatives for several per-axis order tuples at x.

        The 4^n coefficient neighborhood is gathered once and contracted
        against the basis weights of each requested derivative, so extra
        outputs are nearly free.
        """
        x = np.asarray(x, dtype=float)
        shape = x.shape[:-1]
        u = (x.reshape(-1, self.n) - self.lows) / self.h
        inside = np.all((u > -1.0) & (u < self.pts), axis=1)
        u = np.clip(u, 0.0, self.pts - 1.0 - 1e-12)
        base = np.floor(u).astype(int)
        frac = u - base
        wtab = {}
        for orders in orders_list:
            for k, o in enumerate(orders):
                if (k, o) not in wtab:
                    wtab[(k, o)] = _bspline3_weights(frac[:, k], o) / self.h[k] ** o
        strides = np.array(self.coef.strides) // self.coef.itemsize
        flat_base = np.zeros(u.shape[0], dtype=np.int64)
        for k in range(self.n):
            flat_base += (base[:, k] + 1) * strides[k]
        cfl = self.coef.ravel()
        neigh = np.empty((u.shape[0], 4 ** self.n))
        for i, offsets in enumerate(np.ndindex(*(4,) * self.n)):
            off = sum(offsets[k] * strides[k] for k in range(self.n))
            neigh[:, i] = cfl[flat_base + off]
        outs = []
        for orders in orders_list:
            w = wtab[(0, orders[0])]
            for k in range(1, self.n):
                w = (w[:, :, None] * wtab[(k, orders[k])][:, None, :]).reshape(u.shape[0], -1)
            acc = np.einsum("qi,qi->q", neigh, w)
            acc[~inside] = 0.0
            outs.append(acc.reshape(shape))
        return outs

    def evaluate(self, x, orders):
        return self.evaluate_many(x, [orders])[0]

    def __call__(self, x):
        return self.evaluate(x, (0,) * self.n)


class MollifiedProfile:
    """Gaussian mollification P_Sigma psi with value, gradient and Hessian.

    Evaluated by tensor Gauss-Hermite quadrature; results are tabulated on
    a grid in one pass over the quadrature nodes (the one-dimensional
    factor derivatives are shared across all derivative tables) and
    interpolated with cubic splines.
    """

    def __init__(self, profile: ProductProfile, sigma: np.ndarray,
                 gh_points: int = 16, table_pts: int = 241, tail: float = 8.0):
        self.profile = profile
        n = profile.dim
        sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
        if sigma.shape != (n, n):
            raise ValueError("covariance shape mismatch")
        w, V = np.linalg.eigh(sigma)
        if np.any(w < -1e-10 * max(1.0, np.abs(w).max())):
            raise ValueError("mollification covariance is not PSD")
        self.L = V @ np.diag(np.sqrt(np.clip(w, 0.0, None)))
        sd = np.sqrt(np.clip(np.diag(sigma), 0.0, None))
        lows = [b[0] - tail * sd[k] - 1e-9 for k, b in enumerate(profile.box)]
        highs = [b[1] + tail * sd[k] + 1e-9 for k, b in enumerate(profile.box)]
        self.box = list(zip(lows, highs))
        self.support_margin = 0.0
        z1, w1 = gauss_hermite_standard_normal(gh_points)
        mesh = np.meshgrid(*([z1] * n), indexing="ij")
        self.gh_z = np.stack([m.ravel() for m in mesh], axis=-1) @ self.L.T
        wmesh = np.meshgrid(*([w1] * n), indexing="ij")
        self.gh_w = np.ones(gh_points ** n)
        for m in wmesh:
            self.gh_w = self.gh_w * m.ravel()

        axes = [np.linspace(lo, hi, table_pts) for lo, hi in self.box]
        # factor values at (axis point + node shift) once per factor, then a
        # tensor contraction against the quadrature weights
        fac = [profile.factors[k].pieces(axes[k][:, None] + self.gh_z[None, :, k])[0]
               for k in range(n)]
        if n == 1:
            val = fac[0] @ self.gh_w
        elif n == 2:
            val = np.einsum("iq,jq,q->ij", fac[0], fac[1], self.gh_w)
        elif n == 3:
            val = np.einsum("iq,jq,kq,q->ijk", fac[0], fac[1], fac[2], self.gh_w)
        else:
            grids = np.meshgrid(*axes, indexing="ij")
            X = np.stack(grids, axis=-1)
            val = np.zeros(X.shape[:-1])
            for zz, ww in zip(self.gh_z, self.gh_w):
                prod = np.ones(X.shape[:-1])
                for k in range(n):
                    prod = prod * profile.factors[k].pieces(X[..., k] + zz[k])[0]
                val += ww * prod
        # derivative queries differentiate this one interpolant, so the
        # evaluated family is exactly (a smooth function, its gradient,
        # its Hessian): the identities under test hold for it exactly
        self._table = _SplineTable(val, lows, highs)
        self.dim = n

    def _orders(self, key):
        orders = [0] * self.dim
        if key[0] == "g":
            orders[key[1]] = 1
        elif key[0] == "h":
            orders[key[1]] += 1
            orders[key[2]] += 1
        return tuple(orders)

    def eval_many(self, x, keys):
        """Evaluate several derivative entries in one neighborhood pass.

        keys are tuples ('v',), ('g', i) or ('h', i, j).
        """
        vals = self._table.evaluate_many(x, [self._orders(k) for k in keys])
        return dict(zip(keys, vals))

    def value(self, x):
        return self._table(x)

    def grad_entry(self, i, x):
        return self._table.evaluate(x, self._orders(("g", i)))

    def hess_entry(self, i, j, x):
        return self._table.evaluate(x, self._orders(("h", i, j)))
