"""Quadrature helpers: Gauss rules, adaptive Simpson, Green-kernel pairings.

Disk integrals are done in polar coordinates, Gauss-Legendre radially and
trapezoid in angle (the trapezoid rule is exact on band-limited angular
data).  Pairings against the disk Green kernel reduce per angular mode to
two-dimensional radial integrals whose only non-smoothness is a kink on
the diagonal r1 = r2, handled by splitting the square there.
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial.hermite import hermgauss
from numpy.polynomial.legendre import leggauss


def gauss_legendre(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [a, b]."""
    x, w = leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w


def gauss_hermite_standard_normal(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes z_i and weights w_i with E[f(Z)] = sum w_i f(z_i), Z ~ N(0,1)."""
    t, w = hermgauss(n)
    return np.sqrt(2.0) * t, w / np.sqrt(np.pi)


def adaptive_simpson(f, a: float, b: float, rel_tol: float = 1e-8,
                     max_depth: int = 40) -> float:
    """Adaptive Simpson rule on [a, b] to the requested relative tolerance.

    f must accept numpy arrays.  Panels are bisected until the local
    Richardson error estimate passes; degenerate intervals return 0.
    """
    if b <= a:
        return 0.0

    def simpson(x0, x2):
        x1 = 0.5 * (x0 + x2)
        return (x2 - x0) / 6.0 * (f1(x0) + 4.0 * f1(x1) + f1(x2))

    cache: dict[float, float] = {}

    def f1(x):
        if x not in cache:
            cache[x] = float(f(np.asarray([x]))[0])
        return cache[x]

    whole = simpson(a, b)
    scale = max(abs(whole), 1e-300)
    stack = [(a, b, whole, 0)]
    total = 0.0
    while stack:
        x0, x2, s, depth = stack.pop()
        xm = 0.5 * (x0 + x2)
        left = simpson(x0, xm)
        right = simpson(xm, x2)
        err = left + right - s
        if depth >= max_depth or abs(err) <= 15.0 * rel_tol * max(scale, abs(left + right)):
            total += left + right + err / 15.0
        else:
            stack.append((x0, xm, left, depth + 1))
            stack.append((xm, x2, right, depth + 1))
    return total


def batched_simpson(fn, a: np.ndarray, b: np.ndarray, rel_tol: float = 1e-8,
                    start_panels: int = 8, max_panels: int = 4096) -> np.ndarray:
    """Composite Simpson over per-row intervals, doubling until converged.

    fn(m) evaluates the integrand on a matrix of nodes whose rows
    correspond to the rows of (a, b); it may return shape (B, nodes) or
    (B, nodes, outputs) for several integrands sharing the nodes.  Rows
    with empty intervals integrate to zero.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    width = np.maximum(b - a, 0.0)
    live = width > 0

    def composite(k):
        t = np.linspace(0.0, 1.0, 2 * k + 1)
        nodes = a[:, None] + width[:, None] * t[None, :]
        vals = fn(nodes)
        w = np.ones(2 * k + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        if vals.ndim == 3:
            out = np.einsum("bkc,k->bc", vals, w)
            return out * (width / (6.0 * k))[:, None]
        return (width / (6.0 * k)) * (vals * w).sum(axis=1)

    k = start_panels
    prev = composite(k)
    while 2 * k <= max_panels:
        k *= 2
        cur = composite(k)
        # per-row relative criterion with an absolute floor at the overall
        # output scale, so rows integrating to (near) zero terminate
        scale = np.maximum(np.abs(cur), 1e-6 * np.abs(cur).max() + 1e-300)
        ok = np.abs(cur - prev) <= rel_tol * scale * 15.0
        if cur.ndim == 2:
            ok = ok.all(axis=1)
        if np.all(~live | ok):
            return cur
        prev = cur
    return prev


def batched_gauss_panels(fn, a: np.ndarray, b: np.ndarray, rel_tol: float = 1e-8,
                         order: int = 16, start_panels: int = 2,
                         max_panels: int = 64) -> np.ndarray:
    """Composite Gauss-Legendre over per-row intervals with panel doubling.

    Same contract as batched_simpson but with high-order panels, so smooth
    integrands converge in far fewer evaluations.  fn may return
    (B, nodes) or (B, nodes, outputs).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    width = np.maximum(b - a, 0.0)
    live = width > 0
    x, w = leggauss(order)

    def composite(k):
        edges = np.linspace(0.0, 1.0, k + 1)
        mids = 0.5 * (edges[:-1] + edges[1:])
        half = 0.5 / k
        t = (mids[:, None] + half * x[None, :]).ravel()
        wt = np.tile(half * w, k)
        nodes = a[:, None] + width[:, None] * t[None, :]
        vals = fn(nodes)
        if vals.ndim == 3:
            out = np.einsum("bkc,k->bc", vals, wt)
            return out * width[:, None]
        return width * (vals * wt).sum(axis=1)

    k = start_panels
    prev = composite(k)
    while 2 * k <= max_panels:
        k *= 2
        cur = composite(k)
        # absolute floor at the overall output scale: rows or whole output
        # columns that integrate to (near) zero terminate immediately
        scale = np.maximum(np.abs(cur), 1e-6 * np.abs(cur).max() + 1e-300)
        ok = np.abs(cur - prev) <= rel_tol * scale
        if cur.ndim == 2:
            ok = ok.all(axis=1)
        if np.all(~live | ok):
            return cur
        prev = cur
    return prev


# -- polar quadrature on an annulus -----------------------------------------

def annulus_grid(r_min: float, r_max: float, nr: int, M: int):
    """Polar tensor grid: GL radii (with weights including r dr) x angles."""
    r, wr = gauss_legendre(r_min, r_max, nr)
    theta = 2.0 * np.pi * np.arange(M) / M
    wtheta = 2.0 * np.pi / M
    return r, wr * r, theta, wtheta


def integrate_polar(fn, r_min: float, r_max: float, nr: int = 48, M: int = 256) -> float:
    """Integral over the annulus of fn(r, theta) against area measure."""
    r, wr, theta, wt = annulus_grid(r_min, r_max, nr, M)
    vals = fn(r[:, None], theta[None, :])
    return float((wr @ vals).sum() * wt)


# -- Green kernel mode pairings ----------------------------------------------

def green_pair_modes(u_modes, sup_u, v_modes, sup_v, K: int, nr: int = 40) -> float:
    """Pairing integral of u(z1) G(z1, z2) v(z2) over the disk squared.

    u_modes(r) returns the angular coefficients (basis e_k, k = 0..2K) of
    u at radius r as an array of shape r.shape + (2K+1,); same for v.  G
    is the inverse Laplacian kernel of the unit disk, expanded per angular
    mode; the mode kernels kink at r1 = r2, so the inner radial interval
    is split there.  Modes above K must be absent from at least one side.
    Each side's mode table is evaluated once per node set.
    """
    au, bu = sup_u
    av, bv = sup_v
    x, wleg = leggauss(nr)
    r2, w2 = gauss_legendre(av, bv, nr)
    V_out = v_modes(r2)

    def inner_nodes(lo, hi):
        r1 = 0.5 * (hi - lo)[None, :] * x[:, None] + 0.5 * (hi + lo)[None, :]
        w1 = 0.5 * (hi - lo)[None, :] * wleg[:, None]
        return r1, w1, hi > lo

    # region r1 <= r2 and region r1 > r2, inner variable r1 on the u side
    r1A, w1A, maskA = inner_nodes(np.full(nr, au), np.minimum(r2, bu))
    r1B, w1B, maskB = inner_nodes(np.maximum(r2, au), np.full(nr, bu))
    U_A = u_modes(r1A)
    U_B = u_modes(r1B)
    ru, wu = gauss_legendre(au, bu, nr)
    U_fix = u_modes(ru)

    def kinked(k, kern):
        inner = np.zeros(nr)
        valsA = U_A[..., k] * kern(r1A, r2[None, :]) * r1A * w1A
        inner += np.where(maskA, valsA.sum(axis=0), 0.0)
        valsB = U_B[..., k] * kern(r2[None, :], r1B) * r1B * w1B
        inner += np.where(maskB, valsB.sum(axis=0), 0.0)
        return float(np.sum(inner * V_out[..., k] * r2 * w2))

    total = 2.0 * np.pi * kinked(0, lambda rs, rb: np.log(rb))
    for m in range(1, K + 1):
        for k in (2 * m - 1, 2 * m):
            hump = kinked(k, lambda rs, rb, m=m: (rs / rb) ** m)
            sep = float(np.sum(U_fix[..., k] * ru ** (m + 1) * wu)) * \
                float(np.sum(V_out[..., k] * r2 ** (m + 1) * w2))
            total += np.pi * (-1.0 / m) * (hump - sep)
    return total / (2.0 * np.pi)
