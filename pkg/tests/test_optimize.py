import math

import numpy as np
import pytest

from cubicsqueeze.analytic import optimal_loss_params, superposition_loss_variance
from cubicsqueeze.channels import Dephase, Loss
from cubicsqueeze.errors import DomainError
from cubicsqueeze.fock import FockConfig
from cubicsqueeze.gaussian import min_gaussian_variance
from cubicsqueeze.optimize import (
    OptimizationProblem,
    boundary,
    minimize_xi,
    optimized_xi,
    xi_prime_map,
)

Z0 = 1 / math.sqrt(2)


@pytest.mark.parametrize("z, eta", [(0.4, 0.8), (1.0, 0.25), (2.0, 0.6)])
def test_ideal_loss_recovers_closed_form(z, eta):
    res = optimized_xi("ideal", z, Loss(eta))
    opt = optimal_loss_params(z, eta)
    assert res.variance == pytest.approx(opt.variance, rel=1e-8)
    assert res.params["chi"] == pytest.approx(opt.chi, abs=1e-4)
    assert res.g == pytest.approx(opt.g, abs=1e-4)


def test_lossless_ideal_limited_only_by_squeezing_bound():
    # chi -> z removes the x^2 term; the residual g^2/2 is set by r_max = 3
    for z in [0.1, 0.5, 1.0, 2.0]:
        res = optimized_xi("ideal", z, Loss(1.0))
        assert res.params["chi"] == pytest.approx(z, abs=1e-6)
        assert res.variance == pytest.approx(math.exp(-6) / 2, rel=1e-6)


def test_deterministic_and_not_worse_than_seeds():
    a = optimized_xi("sqsup", 0.9, Dephase(0.4))
    b = optimized_xi("sqsup", 0.9, Dephase(0.4))
    assert a.params == b.params and a.xi == b.xi
    assert a.xi <= min(a.seed_xis) + 1e-15


def test_superposition_optimum_vs_grid():
    z, eta = 0.9, 0.7
    res = optimized_xi("sup", z, Loss(eta))
    us = np.linspace(0, 1, 20001)
    brute = min(superposition_loss_variance(u, z, eta) for u in us) / min_gaussian_variance(z)[0]
    assert res.xi <= brute + 1e-9
    assert res.xi == pytest.approx(brute, abs=1e-6)


def test_problem_validation():
    with pytest.raises(DomainError):
        OptimizationProblem("ideal", 0.0, Loss(0.5))
    with pytest.raises(DomainError):
        OptimizationProblem("cat", 1.0, Loss(0.5))
    with pytest.raises(DomainError):
        OptimizationProblem("ideal", 1.0, Loss(0.5), route="exact")
    with pytest.raises(DomainError):
        OptimizationProblem("ideal", 1.0, Loss(0.5), bounds={"chi": (1.0, -1.0), "r": (-1, 1)})
    with pytest.raises(DomainError):
        OptimizationProblem("ideal", 1.0, Loss(0.5), bounds={"chi": (-math.inf, 1.0), "r": (-1, 1)})
    with pytest.raises(DomainError):
        boundary("ideal", "heat", [1.0])
    with pytest.raises(DomainError):
        boundary("ideal", "loss", [1.0], strength_bracket=(0.5, 0.5))


def test_fock_route_agrees_with_analytic():
    ch = Loss(0.6)
    box = {"chi": (-0.5, 0.5), "r": (-0.5, 0.3)}
    problem = OptimizationProblem("ideal", 0.8, ch, route="fock", bounds=box, seeds=3, fock=FockConfig(dim=80))
    f = minimize_xi(problem, n_refine=1)
    a = minimize_xi(OptimizationProblem("ideal", 0.8, ch, bounds=box, seeds=3), n_refine=1)
    assert f.xi == pytest.approx(a.xi, rel=1e-5)


def test_ideal_loss_boundary():
    curve = boundary("ideal", "loss", [0.5, Z0, 1.5])
    pts = {round(p.z, 6): p for p in curve.points}
    assert pts[round(Z0, 6)].open_boundary
    for z in (0.5, 1.5):
        p = pts[z]
        assert not p.open_boundary and p.monotone
        s = p.critical_strength
        bench = min_gaussian_variance(z)[0]
        assert optimal_loss_params(z, (s - 2e-4) ** 2).variance > bench
        assert optimal_loss_params(z, (s + 2e-4) ** 2).variance < bench


def test_superposition_pocket_is_below_optimizer_resolution():
    # the exact excess is ~ -0.28 eta^3 for small eta: no crossing in exact arithmetic,
    # but it drops below the minimizer's resolution near sqrt(eta) ~ 0.04
    eta = 0.2**2
    res = optimized_xi("sup", Z0, Loss(eta))
    assert res.xi - 1 == pytest.approx(-0.28 * eta**3, rel=0.15)
    curve = boundary("sup", "loss", [Z0])
    assert curve.points and curve.points[0].critical_strength < 0.06


def test_dephase_boundary_shrinks_with_noise():
    zs = [0.6, 0.8]
    clean = boundary("mixed", "dephase", zs, D=0.0)
    noisy = boundary("mixed", "dephase", zs, D=0.5)
    for a, b in zip(clean.points, noisy.points):
        assert b.critical_strength < a.critical_strength


def test_xi_prime_reduces_to_xi_without_noise():
    m = xi_prime_map([0.5, 1.0], [0.5, 1.0], "loss")
    assert m.xi_prime.shape == (2, 2)
    np.testing.assert_allclose(m.xi_prime[:, -1], m.xi[:, -1], rtol=1e-12)
    assert np.all(m.xi_prime[:, 0] >= m.xi[:, 0] * 0 - 1e-12)
    d = xi_prime_map([0.7], [0.0, 0.5], "dephase")
    np.testing.assert_allclose(d.xi_prime[:, 0], d.xi[:, 0], rtol=1e-12)
