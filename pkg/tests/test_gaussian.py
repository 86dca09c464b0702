import math

import numpy as np
import pytest
import scipy.linalg
from scipy.optimize import differential_evolution

from cubicsqueeze.channels import Dephase, Loss, apply_dephasing, apply_loss
from cubicsqueeze.errors import DegenerateBenchmarkError, DomainError, InvalidStateError
from cubicsqueeze.fock import DensityMatrix, quadratures, squeeze_workspace
from cubicsqueeze.gaussian import (
    GaussianStateParams,
    channel_gaussian_min_variance,
    dephased_gaussian_min_variance,
    dephased_gaussian_variance,
    gaussian_nonlinear_variance,
    lossy_gaussian_min_variance,
    min_gaussian_variance,
    min_gaussian_variance_numeric,
    optimal_displacement,
    protection_squeezing,
    squeeze_rescale_xi,
    xi,
)
from cubicsqueeze.moments import expect, nonlinear_variance, operator_table

DIM = 70


def gaussian_fock(r, k, a):
    """exp(-i a p) exp(-i k x^2/2) S(r)|0> on DIM levels (built on 3*DIM)."""
    M = 3 * DIM
    x, p = quadratures(M)
    psi = np.zeros(M, dtype=complex)
    psi[0] = 1
    psi = squeeze_workspace(r, M) @ psi
    psi = scipy.linalg.expm(-0.5j * k * x @ x) @ psi
    psi = scipy.linalg.expm(-1j * a * p) @ psi
    psi = psi[:DIM]
    return DensityMatrix.from_ket(psi / np.linalg.norm(psi))


def covariance(rho):
    dim = rho.dim
    x, p = quadratures(dim + 4)
    x, p = x[:dim, :dim], p[:dim, :dim]
    ex, ep = expect(rho, x).real, expect(rho, p).real
    A = expect(rho, operator_table(dim).x2).real - ex * ex
    B = expect(rho, operator_table(dim).p2).real - ep * ep
    C = 0.5 * expect(rho, (x @ p + p @ x)).real - ex * ep
    return A, B, C, ex, ep


def test_params_validation_and_pure():
    with pytest.raises(InvalidStateError):
        GaussianStateParams(0.1, 0.1)
    with pytest.raises(InvalidStateError):
        GaussianStateParams(-1, 1)
    gp = GaussianStateParams.pure(0.8, 0.3, 0.1)
    assert gp.is_pure and gp.A * gp.B - gp.C**2 == pytest.approx(0.25)


@pytest.mark.parametrize("r, k, a, z", [(0.3, 0.4, 0.5, 0.8), (-0.2, -0.7, -0.3, 1.3), (0.0, 0.0, 0.0, 0.5)])
def test_nonlinear_variance_matches_fock(r, k, a, z):
    rho = gaussian_fock(r, k, a)
    A, B, C, ex, ep = covariance(rho)
    assert abs(ep) < 1e-9
    gp = GaussianStateParams(A, B, C, ex)
    assert gp.is_pure
    assert gaussian_nonlinear_variance(gp, z) == pytest.approx(nonlinear_variance(rho, z), rel=1e-9)


def test_after_loss_matches_fock():
    rho = gaussian_fock(0.3, 0.5, 0.4)
    gp = GaussianStateParams(*covariance(rho)[:4])
    eta = 0.35
    A, B, C, ex, _ = covariance(apply_loss(rho, eta))
    lossy = gp.after_loss(eta)
    assert (lossy.A, lossy.B, lossy.C, lossy.a) == pytest.approx((A, B, C, ex), abs=1e-10)


@pytest.mark.parametrize("delta", [0.3, 0.9])
def test_dephased_variance_matches_fock(delta):
    rho = gaussian_fock(-0.25, 0.6, 0.35)
    gp = GaussianStateParams.pure(*[covariance(rho)[i] for i in (0, 2, 3)])
    z = 0.9
    ref = nonlinear_variance(apply_dephasing(rho, delta), z)
    assert dephased_gaussian_variance(gp, z, delta) == pytest.approx(ref, rel=1e-9)
    with pytest.raises(InvalidStateError):
        dephased_gaussian_variance(GaussianStateParams(1, 1), z, delta)


@pytest.mark.parametrize("z", [0.1, 0.5, 1 / math.sqrt(2), 1.7, -0.9])
def test_min_closed_form_vs_numeric(z):
    v, A = min_gaussian_variance(z)
    vn, An = min_gaussian_variance_numeric(z)
    assert v == pytest.approx(vn, rel=1e-12)
    assert A == pytest.approx(An, rel=1e-6)


def test_min_over_full_parameter_space():
    # oracle: brute-force search over pure Gaussians (A, C, a)
    z = 1.2
    f = lambda v: gaussian_nonlinear_variance(GaussianStateParams.pure(math.exp(v[0]), v[1], v[2]), z)
    res = differential_evolution(f, [(-4, 2), (-2, 2), (-2, 2)], seed=1, tol=1e-12, polish=True)
    assert res.fun == pytest.approx(min_gaussian_variance(z)[0], rel=1e-7)


def test_vacuum_landmark_and_degenerate_z():
    v, A = min_gaussian_variance(1 / math.sqrt(2))
    assert v == pytest.approx(0.75, abs=1e-12) and A == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(DegenerateBenchmarkError):
        min_gaussian_variance(0.0)
    with pytest.raises(DomainError):
        xi(-1.0, 0.5)


def test_optimal_displacement_minimizes():
    gp = GaussianStateParams.pure(0.7, 0.4)
    z = 0.8
    a_star = optimal_displacement(gp, z)
    f = lambda a: gaussian_nonlinear_variance(GaussianStateParams(gp.A, gp.B, gp.C, a), z)
    assert f(a_star) <= min(f(a_star + 1e-3), f(a_star - 1e-3))
    with pytest.raises(DegenerateBenchmarkError):
        optimal_displacement(gp, 0)


@pytest.mark.parametrize("z, eta", [(0.4, 0.3), (1.0, 0.7), (2.0, 0.05)])
def test_lossy_benchmark_vs_global_search(z, eta):
    f = lambda v: gaussian_nonlinear_variance(GaussianStateParams.pure(math.exp(v[0]), v[1], v[2]).after_loss(eta), z)
    res = differential_evolution(f, [(-5, 3), (-3, 3), (-3, 3)], seed=2, tol=1e-12, polish=True)
    assert lossy_gaussian_min_variance(z, eta) == pytest.approx(res.fun, rel=1e-7)


def test_lossy_benchmark_limits():
    z = 0.9
    assert lossy_gaussian_min_variance(z, 1.0) == pytest.approx(min_gaussian_variance(z)[0])
    # eta -> 0 leaves the vacuum: 1/2 + z^2/2
    assert lossy_gaussian_min_variance(z, 1e-9) == pytest.approx(0.5 + 0.5 * z * z, rel=1e-6)
    with pytest.raises(DomainError):
        lossy_gaussian_min_variance(z, 0.0)


@pytest.mark.parametrize("z, delta", [(0.5, 0.4), (1.5, 1.0)])
def test_dephased_benchmark_vs_global_search(z, delta):
    def f(v):
        return dephased_gaussian_variance(GaussianStateParams.pure(math.exp(v[0]), v[1], v[2]), z, delta)

    res = differential_evolution(f, [(-5, 3), (-3, 3), (-3, 3)], seed=3, tol=1e-12, polish=True)
    assert dephased_gaussian_min_variance(z, delta) == pytest.approx(res.fun, rel=1e-6)


def test_dephased_benchmark_limits():
    z = 0.8
    value, gp = dephased_gaussian_min_variance(z, 0.0, return_params=True)
    assert value == pytest.approx(min_gaussian_variance(z)[0])
    assert dephased_gaussian_min_variance(z, 0.5) >= value
    with pytest.raises(DomainError):
        dephased_gaussian_min_variance(z, -0.1)
    assert channel_gaussian_min_variance(z, Dephase(0.0)) == pytest.approx(value)
    assert channel_gaussian_min_variance(z, Loss(1.0)) == pytest.approx(value)
    with pytest.raises(TypeError):
        channel_gaussian_min_variance(z, "loss")


def test_squeeze_rescaling_helpers():
    assert squeeze_rescale_xi(0.8, 0.5) == pytest.approx(6.4)
    with pytest.raises(DomainError):
        squeeze_rescale_xi(1.0, 0.0)
    chi, eta = 0.4, 0.6
    g = protection_squeezing(chi, eta)
    # squeezing by g maps cubicity chi -> chi g^3, landing on the loss-optimal sqrt(eta)/sqrt2
    assert chi * g**3 == pytest.approx(math.sqrt(eta) / math.sqrt(2))
    with pytest.raises(DomainError):
        protection_squeezing(0.0, 0.5)
    with pytest.raises(DomainError):
        protection_squeezing(-0.3, 0.5)
