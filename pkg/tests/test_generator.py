import numpy as np
import pytest

from growthlab.disk import realize_symbol
from growthlab.fields import (CouplingParams, IntegrabilityError,
                              bulk_covariance_matrix, sample_trace_batch)
from growthlab.gmc import CircleMeasure, chaos_measure
from growthlab.generator import (CylindricalFunctional, apply_generator,
                                 derivative_martingale_identity, diffusion,
                                 dirichlet_form, divergence_form_check, drift,
                                 drift_boundary, ibp_hdmuf_check,
                                 ibp_potential_check, invariance_bulk_value,
                                 invariance_check, invariance_local_value,
                                 projected_symmetric_ibp_check,
                                 projection_covariance_identity,
                                 pure_gravity_solve, qle_drift_compare,
                                 rotational_invariance_check,
                                 truncated_second_moment_growth)
from growthlab.profiles import MollifiedProfile, ProductProfile
from growthlab.rng import make_rng
from growthlab.spectral import BoundaryField, grid_angles

PG = CouplingParams.pure_gravity()
N, M = 32, 128


def fixture_F():
    p1 = BoundaryField.constant(1 / (2 * np.pi), 4) + 0.6 * BoundaryField.basis(1, 4)
    p2 = 0.8 * BoundaryField.basis(3, 4) + 0.3 * BoundaryField.basis(2, 4)
    return CylindricalFunctional([p1, p2], ProductProfile.bumps([0.0, 0.0], [2.0, 2.5]))


def fixture_G():
    q1 = BoundaryField.constant(1 / (2 * np.pi), 4) - 0.5 * BoundaryField.basis(2, 4)
    q2 = 0.7 * BoundaryField.basis(1, 4) + 0.2 * BoundaryField.basis(4, 4)
    return CylindricalFunctional([q1, q2], ProductProfile.bumps([0.0, 0.0], [2.2, 2.0]))


def test_pure_gravity_solution():
    sol = pure_gravity_solve()
    assert abs(sol.gamma ** 2 - 8.0 / 3.0) < 1e-14
    assert sol.d_gamma == 4.0
    assert abs(sol.xi - 1 / np.sqrt(6)) < 1e-15
    assert abs(sol.Q - 5 / np.sqrt(6)) < 1e-15
    assert abs(sol.Q - (2 * sol.xi + 1 / (2 * sol.xi))) < 1e-14
    assert abs(sol.Q - 1.25 * sol.gamma) < 1e-14
    assert max(sol.residuals) < 1e-14
    assert abs(sol.two_pi_c + sol.xi) < 1e-15
    assert "gamma^2 >= 4" in sol.rejected_branch or "4" in sol.rejected_branch


def test_diffusion_examples():
    one = BoundaryField.constant(1.0, 1)
    mu1 = CircleMeasure.uniform(1.0, M)
    assert abs(diffusion(one, one, mu1) - 4 * np.pi ** 2) < 1e-10
    e1 = BoundaryField.basis(1, 1)
    mu_norm = CircleMeasure.uniform(2 * np.pi, M)   # arclength measure
    # orthonormal mode against itself under lambda/2pi: (2pi)^2 / (2pi) = 2pi
    assert abs(diffusion(e1, e1, CircleMeasure.uniform(1.0, M)) - 2 * np.pi) < 1e-10
    assert diffusion(e1, e1, CircleMeasure(np.zeros(M))) == 0.0


def test_drift_zero_measure_reduces_to_beta_term():
    h = BoundaryField(sample_trace_batch(N, 1, make_rng(1))[0])
    p = BoundaryField.constant(0.5, 2) + BoundaryField.basis(1, 2)
    mu0 = CircleMeasure(np.zeros(M))
    params = PG.replace(beta=0.7)
    b = drift_boundary(p, h, mu0, params)
    assert abs(b + 0.7 * p.integral()) < 1e-12


def test_drift_flat_configuration_hand_value():
    # h = 0, uniform measure: only the mean parts of the chi/(chi-alpha)
    # terms survive
    h = BoundaryField.zeros(N)
    mu = CircleMeasure.uniform(1.0, M)
    p = BoundaryField.constant(0.5, 2) + BoundaryField.basis(1, 2)
    b = drift_boundary(p, h, mu, PG)
    # int p dmu = mean(p) * mass; d_nH p integrates to zero against uniform
    hand = 2 * np.pi * (PG.chi - PG.alpha) * 0.5 * 1.0
    assert abs(b - hand) < 1e-10
    # cosine-weighted measure picks up the d_nH term
    mu_c = CircleMeasure((1.0 + np.cos(grid_angles(M))) / (2 * np.pi))
    b2 = drift_boundary(BoundaryField.basis(1, 2), h, mu_c, PG)
    hand2 = (-2 * np.pi * PG.chi * (-1.0 / (2 * np.sqrt(np.pi)))
             + 2 * np.pi * (PG.chi - PG.alpha) / (2 * np.sqrt(np.pi)))
    assert abs(b2 - hand2) < 1e-10


def test_drift_bulk_vs_boundary():
    rng = make_rng(2)
    h = BoundaryField(sample_trace_batch(N, 1, rng)[0])
    mu = chaos_measure(h, -1, PG.xi, M)
    p = BoundaryField.constant(1 / (2 * np.pi), 4) + 0.6 * BoundaryField.basis(1, 4)
    f = realize_symbol(p)
    b1 = drift(p, h, mu, PG, route="boundary")
    b2 = drift(p, h, mu, PG, f=f, route="bulk")
    assert abs(b1 - b2) < 1e-4 * max(abs(b1), 1.0)
    with pytest.raises(ValueError):
        drift(p, h, mu, PG, route="bulk")


def test_apply_generator_trivial_cases():
    h = BoundaryField(sample_trace_batch(N, 1, make_rng(3))[0])
    # constant profile: generator vanishes
    class FlatProfile(ProductProfile):
        def __init__(self):
            super().__init__(ProductProfile.bumps([0.0], [2.0]).factors)

        def grad(self, x):
            return np.zeros_like(np.asarray(x))

        def hess(self, x):
            x = np.asarray(x)
            return np.zeros(x.shape[:-1] + (1, 1))

    p = BoundaryField.constant(1 / (2 * np.pi), 2)
    F = CylindricalFunctional([p], FlatProfile())
    assert apply_generator(F, h, 0.1, PG, M=M) == 0.0
    # linear functional, zero measure, beta = 0: drift and diffusion vanish
    F2 = fixture_F()
    val = apply_generator(F2, h, 0.0, PG, mu=CircleMeasure(np.zeros(M)), M=M)
    assert abs(val) < 1e-12
    # guard
    F3 = CylindricalFunctional([BoundaryField.basis(1, 2)],
                               ProductProfile.bumps([0.0], [2.0]))
    with pytest.raises(IntegrabilityError):
        apply_generator(F3, h, 0.0, PG, M=M)


def test_invariance_pure_gravity_and_perturbations():
    F = fixture_F()
    res = invariance_check(F, PG, 6000, make_rng(42), N=N, M=M)
    assert abs(res.rhs) < 1e-12
    assert abs(res.lhs) < 3 * res.lhs_stderr
    for params in (PG.replace(beta=0.1), PG.replace(alpha=PG.alpha + 0.2),
                   PG.replace(chi=PG.chi + 0.15), PG.replace(c=PG.c * 1.3)):
        r = invariance_check(F, params, 4000, make_rng(42), N=N, M=M)
        assert r.consistent(3.0), (params, r.lhs, r.rhs, r.z)


def test_invariance_beta_residual_formula():
    # the beta perturbation shifts the generator expectation by exactly
    # -2 pi beta sum_i mean(p_i) E[psi_i]; with common random numbers the
    # shift of the estimate equals the closed rhs almost exactly
    F = fixture_F()
    r0 = invariance_check(F, PG, 3000, make_rng(7), N=N, M=M)
    rb = invariance_check(F, PG.replace(beta=0.1), 3000, make_rng(7), N=N, M=M)
    assert abs((rb.lhs - r0.lhs) - rb.rhs) < 1e-10 + 3 * np.hypot(r0.stderr, rb.stderr)


def test_invariance_guard():
    F = CylindricalFunctional([BoundaryField.basis(1, 2)],
                              ProductProfile.bumps([0.0], [2.0]))
    with pytest.raises(IntegrabilityError):
        invariance_check(F, PG, 200, make_rng(1), N=8, M=32)


def test_generator_bulk_vs_localized_integrand():
    F = fixture_F()
    fs = F.realized()
    sigma = bulk_covariance_matrix(fs)
    psit = MollifiedProfile(F.profile, sigma)
    rng = make_rng(5)
    for params in (PG, PG.replace(alpha=PG.alpha + 0.3, beta=0.05)):
        h = BoundaryField(sample_trace_batch(N, 1, rng)[0])
        v1 = invariance_local_value(F, params, h, 0.2, M=M, psit=psit, sigma=sigma)
        v2 = invariance_bulk_value(F, params, h, 0.2, M=M, psit=psit, sigma=sigma)
        assert abs(v1 - v2) < 1e-4 * max(abs(v1), abs(v2), 1e-12)


def test_dirichlet_form_split_and_exchange():
    F, G = fixture_F(), fixture_G()
    res = dirichlet_form(F, G, 6000, make_rng(8), N=N, M=M)
    assert res.forward.consistent(3.0), (res.forward.lhs, res.forward.rhs, res.forward.z)
    assert res.swapped.consistent(3.0)
    # exchange: E(F,G) + E(G,F) = 2 sym
    exch = res.forward.lhs + res.swapped.lhs - 2 * res.sym
    assert abs(exch) < 3 * (res.forward.stderr + res.swapped.stderr)


def test_dirichlet_form_self_antisymmetry():
    F = fixture_F()
    res = dirichlet_form(F, F, 1500, make_rng(9), N=N, M=M)
    assert abs(res.antisym) < 1e-10


def test_divergence_form_route():
    F, G = fixture_F(), fixture_G()
    res = divergence_form_check(F, G, 6000, make_rng(10), N=N, M=M)
    assert res.consistent(3.0), (res.lhs, res.rhs, res.z)


def test_rotational_invariance():
    F = fixture_F()
    ell = BoundaryField.basis(3, 4) + BoundaryField.constant(0.2, 4)
    est, se = rotational_invariance_check(ell, F, 6000, make_rng(11), N=N, M=M)
    assert abs(est) < 3 * se
    # constant ell: the tangential term vanishes identically and the
    # conjugate-gradient term vanishes in expectation
    const = BoundaryField.constant(1.0, 2)
    assert np.abs(const.tangential_derivative().coeffs).max() == 0.0
    est0, se0 = rotational_invariance_check(const, F, 6000, make_rng(12), N=8, M=64)
    assert abs(est0) < 3 * se0


def test_ibp_hdmuf():
    F, G = fixture_F(), fixture_G()
    p = 0.5 * BoundaryField.basis(1, 4) + BoundaryField.constant(0.1, 4)
    est, se = ibp_hdmuf_check(p, F, G, 6000, make_rng(13), N=N, M=M)
    assert abs(est) < 3 * se
    # a symbol with vanishing adjoint data degenerates to zero identically
    est0, se0 = ibp_hdmuf_check(BoundaryField.zeros(2), F, G, 500, make_rng(14),
                                N=8, M=64)
    assert abs(est0) < 1e-12


def test_ibp_potential_and_c_slope():
    F = fixture_F()
    ell = BoundaryField.constant(0.3, 2) + 0.5 * BoundaryField.basis(2, 2)
    k = BoundaryField.basis(1, 2)
    est, se = ibp_potential_check(ell, k, F, 6000, make_rng(15), N=N, M=M)
    assert abs(est) < 3 * se
    # residual is linear in the potential's mean-slope parameter:
    # slope = -int k dl * E[(int ell dmu) phi]; k mean-zero kills it
    est2, se2 = ibp_potential_check(ell, k, F, 6000, make_rng(15),
                                    c=PG.c + 0.2, N=N, M=M)
    assert abs(est2 - est) < 3 * np.hypot(se, se2) + 1e-9
    k2 = BoundaryField.constant(1.0, 2)
    r_base, se_b = ibp_potential_check(ell, k2, F, 6000, make_rng(16), N=N, M=M)
    r_pert, se_p = ibp_potential_check(ell, k2, F, 6000, make_rng(16),
                                       c=PG.c + 0.2, N=N, M=M)
    # shift = -(c_pert - c) * int k dl * E[(int ell dmu) phi] is nonzero here
    assert abs(r_pert - r_base) > 5 * np.hypot(se_b, se_p)


def test_qle_drift_compare():
    rng = make_rng(17)
    p = BoundaryField(np.random.default_rng(3).standard_normal(9)) * 0.4
    h = BoundaryField(sample_trace_batch(N, 1, rng)[0])
    nu = CircleMeasure(np.exp(0.3 * np.cos(grid_angles(M))))
    nu = nu * (1.0 / nu.total_mass)
    out = qle_drift_compare(p, realize_symbol(p), h, nu)
    assert out["residual"] < 1e-4
    # mean-zero symbol: zero offset, exact agreement
    p0 = p - BoundaryField.constant(p.mean(), 1)
    out0 = qle_drift_compare(p0, realize_symbol(p0), h, nu)
    assert out0["zero_mode_offset"] < 1e-12
    assert out0["residual"] < 1e-4
    # radial test function: the normal-derivative term vanishes on both sides
    pr = BoundaryField.constant(0.4, 2)
    outr = qle_drift_compare(pr, realize_symbol(pr), h, nu)
    assert outr["residual"] < 1e-4
    with pytest.raises(ValueError):
        qle_drift_compare(p, realize_symbol(p), h, CircleMeasure.uniform(2.0, M))


def test_projection_covariance_identity():
    P = [BoundaryField.basis(1, 2), BoundaryField.basis(2, 2)]
    assert projection_covariance_identity(P, N=N, M=M) < 1e-10
    # S_2 for the first harmonic pair is the constant 1/pi
    s2 = sum(p.values(M) ** 2 for p in P)
    assert np.abs(s2 - 1 / np.pi).max() < 1e-12


def test_projected_symmetric_ibp():
    P = [BoundaryField.basis(0, 2), BoundaryField.basis(1, 2), BoundaryField.basis(2, 2)]
    Fprof = ProductProfile.bumps([0.0, 0.0, 0.0], [2.0, 2.0, 2.0])
    G = fixture_G()
    res = projected_symmetric_ibp_check(P, Fprof, G, 6000, make_rng(18), N=N, M=M)
    assert res.consistent(3.0), (res.lhs, res.rhs, res.z)
    with pytest.raises(ValueError):
        projected_symmetric_ibp_check([BoundaryField.basis(1, 2) * 2.0], Fprof,
                                      G, 100, make_rng(19), N=8, M=32)


def test_projected_ibp_zero_mode_only():
    # P = {e_0} isolates the zero-mode block: the identity reduces to the
    # explicit zero-mode integration by parts, which the per-sample
    # quadrature satisfies almost exactly (the paired stderr collapses,
    # so gate with an absolute floor as well)
    P = [BoundaryField.basis(0, 1)]
    Fprof = ProductProfile.bumps([0.0], [2.5])
    G = fixture_G()
    res = projected_symmetric_ibp_check(P, Fprof, G, 6000, make_rng(20), N=N, M=M)
    assert abs(res.lhs - res.rhs) < 3 * res.stderr + 1e-7 * max(abs(res.lhs), 1.0)


def test_derivative_martingale_identity():
    for seed, n in [(1, 1), (2, 8)]:
        assert derivative_martingale_identity(n, 1 / np.sqrt(6), make_rng(seed)) < 1e-10
    # xi = 0 reduces to the plain normal-derivative factor
    assert derivative_martingale_identity(4, 1e-14, make_rng(3)) < 1e-10


def test_second_moment_divergence_monitor():
    growth = truncated_second_moment_growth(32, 1 / np.sqrt(6),
                                            BoundaryField.constant(1.0, 2),
                                            [2, 8, 32], M=M)
    assert growth[0] < growth[1] < growth[2]
    assert growth[2] > 10 * growth[0]
