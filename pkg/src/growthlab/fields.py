"""Boundary trace field: sampling, covariance calculus, and expectations
against the sigma-finite field measure.

The mean-zero trace field at truncation N is

    h0 = sqrt(2 pi) sum_{1<=k<=2N} e_k X_k / sqrt(lam_k),

with i.i.d. standard normals X_k, so mode k has variance 2 pi / lam_k and
the pointwise covariance is the truncation of -2 log |w - z|.  The full
field h = h0 + m carries Lebesgue weight e^{delta m} dm on the zero mode;
expectations localize the m-integral through a compactly supported profile
with at least one nonzero-mean symbol and integrate it by adaptive Simpson.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .gmc import chaos_density_batch
from .profiles import IndicatorProfile
from .quadrature import batched_simpson, green_pair_modes
from .spectral import SQRT_2PI, SQRT_PI, BoundaryField, eigenvalues


class IntegrabilityError(ValueError):
    """Zero-mode integral would not localize (no nonzero-mean symbol)."""


# -- coupling constants -------------------------------------------------------


@dataclass(frozen=True)
class CouplingParams:
    """Metric-growth coupling constants with their algebraic relations."""

    xi: float
    gamma: float
    Q: float
    alpha: float
    chi: float
    beta: float
    c: float
    omega: float
    d_gamma: float | None = None

    def __post_init__(self):
        if abs(self.Q - (self.gamma / 2.0 + 2.0 / self.gamma)) > 1e-12:
            raise ValueError("Q must equal gamma/2 + 2/gamma")
        if self.d_gamma is not None and abs(self.xi - self.gamma / self.d_gamma) > 1e-12:
            raise ValueError("xi must equal gamma / d_gamma")

    @classmethod
    def pure_gravity(cls) -> "CouplingParams":
        gamma = np.sqrt(8.0 / 3.0)
        xi = 1.0 / np.sqrt(6.0)
        Q = 5.0 / np.sqrt(6.0)
        omega = -gamma
        return cls(xi=xi, gamma=gamma, Q=Q, alpha=-2.0 * Q - omega, chi=-Q,
                   beta=0.0, c=-xi / (2.0 * np.pi), omega=omega, d_gamma=4.0)

    def replace(self, **kw) -> "CouplingParams":
        data = dict(xi=self.xi, gamma=self.gamma, Q=self.Q, alpha=self.alpha,
                    chi=self.chi, beta=self.beta, c=self.c, omega=self.omega,
                    d_gamma=self.d_gamma)
        data.update(kw)
        return CouplingParams(**data)

    def invariance_residuals(self) -> tuple[float, float, float, float]:
        """Residuals of the four sufficient relations; all zero at pure gravity."""
        tpc = 2.0 * np.pi * self.c
        return (2.0 * self.xi + 1.0 / (2.0 * self.xi) + self.chi,
                self.chi - self.alpha + tpc,
                tpc * tpc - self.xi * self.xi,
                self.beta)

    @property
    def satisfies_invariance_conditions(self) -> bool:
        return max(abs(r) for r in self.invariance_residuals()) < 1e-12

    @property
    def zero_mode_weight(self) -> float:
        """delta with m-density e^{delta m}; equals -2 pi c."""
        return -2.0 * np.pi * self.c


# -- trace sampling -----------------------------------------------------------


@dataclass
class TraceSample:
    """Mean-zero trace field sample plus zero mode."""

    h0: BoundaryField
    m: float = 0.0
    seed: int | None = None

    @property
    def field(self) -> BoundaryField:
        return self.h0 + BoundaryField.constant(self.m, 1)


def mode_std(N: int) -> np.ndarray:
    """Standard deviations sqrt(2 pi / lam_k) for k = 1..2N."""
    lam = eigenvalues(N)[1:]
    return np.sqrt(2.0 * np.pi / lam)


def sample_trace_batch(N: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """n independent mean-zero trace samples, as (n, 2N+1) coefficient rows."""
    if N < 1:
        raise ValueError("truncation degree must be at least 1")
    out = np.zeros((n, 2 * N + 1))
    out[:, 1:] = rng.standard_normal((n, 2 * N)) * mode_std(N)
    return out


def sample_trace(N: int, rng: np.random.Generator, seed: int | None = None) -> TraceSample:
    return TraceSample(BoundaryField(sample_trace_batch(N, 1, rng)[0]), 0.0, seed)


def batch_values(coeffs: np.ndarray, M: int) -> np.ndarray:
    """Grid samples of a batch of coefficient rows via inverse FFT."""
    B, size = coeffs.shape
    N = (size - 1) // 2
    if M < 2 * N + 1:
        raise ValueError("grid too small for the coefficient degree")
    spec = np.zeros((B, M // 2 + 1), dtype=complex)
    spec[:, 0] = coeffs[:, 0] / SQRT_2PI * M
    m = np.arange(1, N + 1)
    spec[:, 1:N + 1] = (coeffs[:, 2 * m - 1] - 1j * coeffs[:, 2 * m]) / SQRT_PI * (M / 2.0)
    return np.fft.irfft(spec, n=M, axis=1)


def pair_symbol(coeffs: np.ndarray, p: BoundaryField) -> np.ndarray:
    """Batched pairing of h0 rows with a symbol against arclength measure."""
    n = min((coeffs.shape[1] - 1) // 2, p.degree)
    return coeffs[:, 1 : 2 * n + 1] @ p.coeffs[1 : 2 * n + 1]


# -- covariance kernels -------------------------------------------------------


def boundary_covariance(w, z):
    """-2 log |w - z| for boundary points."""
    return -2.0 * np.log(np.abs(np.asarray(w) - np.asarray(z)))


def truncated_boundary_covariance(N: int, dtheta):
    """Covariance of the degree-N trace field at angular separation dtheta."""
    dtheta = np.asarray(dtheta, dtype=float)
    m = np.arange(1, N + 1)
    return 2.0 * (np.cos(np.multiply.outer(dtheta, m)) / m).sum(axis=-1)


def green_dirichlet(z1, z2):
    z1, z2 = np.asarray(z1, dtype=complex), np.asarray(z2, dtype=complex)
    return -np.log(np.abs((z1 - z2) / (1.0 - np.conj(z1) * z2)))


def green_neumann(z1, z2):
    z1, z2 = np.asarray(z1, dtype=complex), np.asarray(z2, dtype=complex)
    return -np.log(np.abs((z1 - z2) * (1.0 - np.conj(z1) * z2)))


def green_disk(z1, z2):
    """Inverse-Laplacian kernel G = -G_Dirichlet / 2 pi (nonpositive)."""
    return -green_dirichlet(z1, z2) / (2.0 * np.pi)


def bulk_covariance_matrix(fs: list, nr: int = 40) -> np.ndarray:
    """Covariance of the Dirichlet-field pairings of the test functions.

    Entry (i, j) is -2 pi times the Green pairing of f_i with f_j, computed
    per angular mode with the diagonal kink split out.  Warns if roundoff
    drives a diagonal entry or an eigenvalue visibly negative.
    """
    n = len(fs)
    K = max(f.degree for f in fs)
    sigma = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            val = -2.0 * np.pi * green_pair_modes(
                lambda r, f=fs[i]: f.angular_modes(r, K), fs[i].support,
                lambda r, f=fs[j]: f.angular_modes(r, K), fs[j].support, K, nr)
            sigma[i, j] = sigma[j, i] = val
    if np.any(np.diag(sigma) < -1e-10):
        warnings.warn("covariance quadrature degenerated: negative diagonal")
    w = np.linalg.eigvalsh(sigma)
    if w.min() < -1e-10 * max(1.0, w.max()):
        warnings.warn("covariance quadrature degenerated: negative eigenvalue")
    return sigma


# -- Gaussian identity harness -------------------------------------------------

GAUSSIAN_IDENTITIES = ("IBP1", "IBP2", "CM1", "CM2", "CM3")


def gaussian_identity_check(which: str, cov: np.ndarray, n_samples: int,
                            rng: np.random.Generator, scale: float = 1.0):
    """Monte-Carlo check of a Gaussian integration-by-parts or shift identity.

    Variables are the rows of a centered Gaussian vector with the given
    covariance; the smooth test function is tanh(scale x).  Returns
    (mc_lhs, rhs, stderr) where stderr gates the paired difference.
    """
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    w = np.linalg.eigvalsh(cov)
    if w.min() < -1e-12 * max(1.0, w.max()):
        raise ValueError("covariance must be positive semidefinite")
    L = np.linalg.cholesky(cov + 1e-14 * np.eye(cov.shape[0]))
    Z = rng.standard_normal((n_samples, cov.shape[0])) @ L.T

    def psi(x):
        return np.tanh(scale * x)

    def dpsi(x):
        return scale * (1.0 - np.tanh(scale * x) ** 2)

    if which == "IBP1":
        X, Y = Z[:, 0], Z[:, min(1, Z.shape[1] - 1)]
        lhs = psi(X) * Y
        rhs = cov[0, min(1, Z.shape[1] - 1)] * dpsi(X)
    elif which == "IBP2":
        Y = Z[:, -1]
        lhs = psi(Z[:, 0]) * np.ones_like(Y)
        for k in range(1, Z.shape[1] - 1):
            lhs = lhs * psi(Z[:, k])
        lhs = lhs * Y
        rhs = np.zeros_like(Y)
        for i in range(Z.shape[1] - 1):
            term = dpsi(Z[:, i])
            for k in range(Z.shape[1] - 1):
                if k != i:
                    term = term * psi(Z[:, k])
            rhs = rhs + cov[i, -1] * term
    elif which == "CM1":
        W, Y = Z[:, 0], Z[:, 1]
        lhs = W * np.exp(Y - cov[1, 1] / 2.0)
        rhs = np.full_like(lhs, cov[0, 1])
    elif which == "CM2":
        W, Zv, X, Y = Z[:, 0], Z[:, 1], Z[:, 2], Z[:, 3]
        lhs = W * Zv * np.exp(X - cov[2, 2] / 2.0) * np.exp(Y - cov[3, 3] / 2.0)
        rhs = np.full_like(lhs, (cov[0, 1] + (cov[0, 2] + cov[0, 3]) * (cov[1, 2] + cov[1, 3]))
                           * np.exp(cov[2, 3]))
    elif which == "CM3":
        W, Zv, X, Y = Z[:, 0], Z[:, 1], Z[:, 2], Z[:, 3]
        eX = np.exp(X - cov[2, 2] / 2.0)
        eY = np.exp(Y - cov[3, 3] / 2.0)
        lhs = (W - cov[0, 2]) * (Zv - cov[1, 3]) * eX * eY
        rhs = np.full_like(lhs, (cov[0, 3] * cov[1, 2] + cov[0, 1]) * np.exp(cov[2, 3]))
    else:
        raise ValueError(f"unknown identity {which!r}")

    diff = lhs - rhs
    return float(lhs.mean()), float(rhs.mean()), float(diff.std(ddof=1) / np.sqrt(diff.size))


# -- zero-mode localization -----------------------------------------------------


def m_support(blocks, margin_sigmas: float = 8.0):
    """Localized m-interval per sample from compact profile blocks.

    Each block is (base, slopes, box, sigmas): base (B, n) pairing values
    at m = 0, slopes (n,) their m-derivatives, box the profile support and
    sigmas per-coordinate mollification scales (zeros when raw).  Raises
    if no coordinate anywhere carries a nonzero slope.
    """
    B = blocks[0][0].shape[0]
    lo = np.full(B, -np.inf)
    hi = np.full(B, np.inf)
    any_slope = False
    for base, slopes, box, sigmas in blocks:
        for j, s in enumerate(slopes):
            a = box[j][0] - margin_sigmas * sigmas[j]
            b = box[j][1] + margin_sigmas * sigmas[j]
            if s == 0.0:
                dead = (base[:, j] < a) | (base[:, j] > b)
                lo[dead], hi[dead] = np.inf, -np.inf
                continue
            any_slope = True
            t1 = (a - base[:, j]) / s
            t2 = (b - base[:, j]) / s
            lo = np.maximum(lo, np.minimum(t1, t2))
            hi = np.minimum(hi, np.maximum(t1, t2))
    if not any_slope:
        raise IntegrabilityError(
            "no symbol has nonzero mean: the zero-mode integral does not localize")
    bad = ~np.isfinite(lo) | ~np.isfinite(hi) | (hi < lo)
    lo[bad] = 0.0
    hi[bad] = 0.0
    return lo, hi


@dataclass
class CylindricalObservable:
    """Profile of boundary pairings, optionally times a chaos total mass.

    Represents psi(<h, p_1>, ..., <h, p_n>) |mu_{sign xi}|^{mass_power}
    as an integrand for the sigma-finite field measure.
    """

    symbols: list
    profile: object
    xi: float = 0.0
    mass_sign: int = -1
    mass_power: int = 0

    def slopes(self) -> np.ndarray:
        return np.array([p.integral() for p in self.symbols])


def rho_expectation(obs: CylindricalObservable, N: int, n_samples: int,
                    rng: np.random.Generator, delta: float, M: int = 256,
                    batch: int = 4096, rel_tol: float = 1e-8):
    """Expectation against the sigma-finite measure e^{delta m} rho_0 x dm.

    For each sampled mean-zero field the zero-mode integral runs over the
    finite interval where the profile argument meets its support box, by
    adaptive Simpson; the outer average and its standard error are over
    the field samples.
    """
    slopes = obs.slopes()
    if obs.mass_power and not 0.0 < obs.xi < 1.0:
        raise ValueError("chaos parameter must lie in (0, 1)")
    sigmas = np.zeros(len(obs.symbols))
    vals_per_sample = []
    done = 0
    exact_indicator = isinstance(obs.profile, IndicatorProfile)
    while done < n_samples:
        b = min(batch, n_samples - done)
        coeffs = sample_trace_batch(N, b, rng)
        base = np.stack([pair_symbol(coeffs, p) for p in obs.symbols], axis=-1)
        lo, hi = m_support([(base, slopes, obs.profile.box, sigmas)])
        if obs.mass_power:
            vals = batch_values(coeffs, M)
            dens = chaos_density_batch(vals, obs.mass_sign, obs.xi, N)
            mass0 = dens.sum(axis=1) * (2.0 * np.pi / M)
        else:
            mass0 = np.ones(b)
        rate = delta + obs.mass_power * obs.mass_sign * obs.xi

        if exact_indicator:
            if rate == 0.0:
                integ = hi - lo
            else:
                integ = (np.exp(rate * hi) - np.exp(rate * lo)) / rate
            vals_per_sample.append(mass0 ** obs.mass_power * integ)
        else:
            def fn(m):
                args = base[:, None, :] + m[:, :, None] * slopes[None, None, :]
                return np.exp(rate * m) * obs.profile.value(args)

            integ = batched_simpson(fn, lo, hi, rel_tol=rel_tol)
            vals_per_sample.append(mass0 ** obs.mass_power * integ)
        done += b
    vals = np.concatenate(vals_per_sample)
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(vals.size))


# -- Cameron-Martin and conjugate-shift checks -----------------------------------


def cameron_martin_check(symbols, profile, p: BoundaryField, t: float, N: int,
                         n_samples: int, rng: np.random.Generator):
    """Shift identity for the mean-zero trace measure, common random numbers.

    E F(h + t p) versus E F(h) exp(t <h, p>_{1/2} - t^2 |p|^2_{1/2} / 2).
    Returns (lhs, rhs, stderr of the paired difference).
    """
    coeffs = sample_trace_batch(N, n_samples, rng)
    base = np.stack([pair_symbol(coeffs, q) for q in symbols], axis=-1)
    shift = np.array([sum(p.coeffs[k] * q.coeffs[k]
                          for k in range(1, min(p.coeffs.size, q.coeffs.size)))
                      for q in symbols])
    lhs = profile.value(base + t * shift[None, :])
    lam = eigenvalues(N)
    pc = np.zeros(2 * N + 1)
    pc[: p.coeffs.size] = p.coeffs[: 2 * N + 1]
    pairing = (coeffs * (lam * pc)[None, :]).sum(axis=1) / (2.0 * np.pi)
    norm2 = float(np.sum(lam * pc * pc)) / (2.0 * np.pi)
    rhs = profile.value(base) * np.exp(t * pairing - 0.5 * t * t * norm2)
    diff = lhs - rhs
    return float(lhs.mean()), float(rhs.mean()), float(diff.std(ddof=1) / np.sqrt(diff.size))


def inverse_laplace_half(p: BoundaryField) -> BoundaryField:
    """P with dirichlet_to_neumann(P) = mean-zero part of p: P = -sum p_m/m."""
    c = np.zeros_like(p.coeffs)
    lam = eigenvalues(p.degree)
    c[1:] = -p.coeffs[1:] / lam[1:]
    return BoundaryField(c)


def tilde_shift_check(symbols, profile, h: BoundaryField, xi: float, M: int = 1024) -> float:
    """Conjugate-gradient shift identity, per sample, on the angle grid.

    Evaluates the conjugated gradient of the cylindrical functional at the
    field shifted by -xi times the boundary log kernel rooted at x, and
    compares with the tangential x-derivative of the shifted functional
    divided by 2 pi xi.  Returns the max grid residual.
    """
    base = np.array([sum(h.coeffs[k] * q.coeffs[k]
                         for k in range(1, min(h.coeffs.size, q.coeffs.size)))
                     + h.mean() * q.integral() for q in symbols])
    P = [inverse_laplace_half(q) for q in symbols]
    shifts = np.stack([2.0 * np.pi * xi * Pq.values(M) for Pq in P], axis=-1)
    args = base[None, :] + shifts
    grads = profile.grad(args)
    tildes = np.stack([q.conjugate().values(M) for q in symbols], axis=-1)
    lhs = (grads * tildes).sum(axis=-1)
    composite = profile.value(args)
    comp_field = BoundaryField.from_grid(composite, degree=M // 2 - 1)
    rhs = comp_field.tangential_derivative().values(M) / (2.0 * np.pi * xi)
    return float(np.abs(lhs - rhs).max())
