"""Acceptance criteria 1-10, each at its stated tolerance; one report line per criterion."""

import math

import numpy as np
import pytest

from cubicsqueeze.analytic import dephasing_consistency_report, ideal_dephase_variance, ideal_loss_variance
from cubicsqueeze.channels import Dephase, Loss, apply_dephasing, apply_loss
from cubicsqueeze.fock import DensityMatrix, FockConfig, ideal_cubic_state, superposition_state
from cubicsqueeze.gaussian import min_gaussian_variance, squeeze_rescale_xi, xi
from cubicsqueeze.moments import nonlinear_variance
from cubicsqueeze.optimize import boundary, optimized_xi, xi_prime_map

pytestmark = pytest.mark.slow

Z0 = 1 / math.sqrt(2)
CASES = 50

# Fock-convergent oracle box at dim 120
ORACLE = dict(chi=(-0.5, 0.5), r=(-0.5, 0.2), z=(0.1, 2.5), eta=(0.05, 1.0), delta=(0.0, 1.5))
ORACLE_DIM = 120


def _oracle_tuples(seed, strength):
    rng = np.random.default_rng(seed)
    for _ in range(100):
        yield (rng.uniform(*ORACLE["chi"]), rng.uniform(*ORACLE["r"]), rng.uniform(*ORACLE["z"]),
               rng.uniform(*ORACLE[strength]))


def _oracle_worst(seed, strength, closed_form, channel):
    worst = 0.0
    cfg = FockConfig(dim=ORACLE_DIM)
    for chi, r, z, s in _oracle_tuples(seed, strength):
        rho = channel(ideal_cubic_state(chi, r, cfg), s)
        value = closed_form(chi, math.exp(-r), z, s)
        worst = max(worst, abs(value - nonlinear_variance(rho, z)) / max(1.0, abs(value)))
    return worst


def test_criterion_01_loss_closed_form_vs_fock(acceptance_report):
    worst = _oracle_worst(1, "eta", ideal_loss_variance, apply_loss)
    ok = worst < 1e-6
    acceptance_report(1, ok, f"loss closed form vs Fock, 100 tuples, worst rel err {worst:.2e} (tol 1e-6)")
    assert ok


def test_criterion_02_dephasing_closed_form_vs_fock(acceptance_report):
    worst = _oracle_worst(2, "delta", ideal_dephase_variance, apply_dephasing)
    rep = dephasing_consistency_report()
    variant = dephasing_consistency_report(variant=True)
    ok = worst < 1e-6 and rep["consistent"]
    acceptance_report(2, ok, f"dephasing closed form vs Fock worst rel err {worst:.2e} (tol 1e-6); symbolic "
                             f"regeneration {rep['terms_compared']} terms consistent={rep['consistent']}; "
                             f"sign-variant form flagged with {len(variant['mismatches'])} mismatching term")
    assert ok
    assert not variant["consistent"]


def test_criterion_03_optimal_parameter_law(acceptance_report):
    worst = 0.0
    for z in np.linspace(0.1, 2.5, 15):
        for eta in np.linspace(0.05, 0.99, 15):
            res = optimized_xi("ideal", z, Loss(eta))
            chi_star, g_star = z * math.sqrt(eta), (2 * z * z * (1 - eta)) ** 0.25
            worst = max(worst, abs(res.params["chi"] - chi_star), abs(res.g - g_star))
    ok = worst < 1e-5
    acceptance_report(3, ok, f"15x15 (z, eta) grid, worst |chi - chi*|, |g - g*| = {worst:.2e} (tol 1e-5)")
    assert ok


def test_criterion_04_vacuum_landmark(acceptance_report):
    value, A = min_gaussian_variance(Z0)
    err = max(abs(A - 0.5), abs(value - 0.75))
    ok = err < 1e-10
    acceptance_report(4, ok, f"benchmark at z = 1/sqrt2: A* = {A:.12f}, value = {value:.12f} (tol 1e-10)")
    assert ok


def test_criterion_05_open_boundary(acceptance_report):
    etas = [0.01] + [round(0.05 * k, 2) for k in range(1, 20)] + [0.99]
    xis = [optimized_xi("ideal", Z0, Loss(eta)).xi for eta in etas]
    ok = max(xis) < 1
    acceptance_report(5, ok, f"ideal cubic at z = 1/sqrt2, {len(etas)} eta values in [0.01, 0.99], "
                             f"max xi = {max(xis):.6f} (need < 1)")
    assert ok


def test_criterion_06_superposition_loss_crossing(acceptance_report):
    curve = boundary("sup", "loss", [Z0], tol=1e-5)
    crit = curve.points[0].critical_strength if curve.points else math.nan
    # exact excess for small eta: xi - 1 ~ -0.28 eta^3 < 0, so no crossing exists
    pocket = optimized_xi("sup", Z0, Loss(0.1**2)).xi - 1
    ok = abs(crit - 0.2) <= 0.05
    acceptance_report(6, ok, f"superposition xi = 1 crossing at sqrt(eta) = {crit:.4f} (need 0.2 +- 0.05); "
                             f"xi - 1 at sqrt(eta) = 0.1 is {pocket:.2e}, a genuine but tiny advantage")
    assert ok, "no xi = 1 crossing near sqrt(eta) = 0.2: xi < 1 persists down to optimizer resolution"


def test_criterion_07_dephasing_robustness_peak(acceptance_report):
    zs = np.linspace(0.3, 0.9, 25)
    z, s = boundary("sup", "dephase", zs, tol=1e-5).as_arrays()
    peak = float(z[np.argmax(s)])
    ok = abs(peak - 0.55) <= 0.05
    acceptance_report(7, ok, f"superposition dephasing boundary peaks at z = {peak:.3f}, "
                             f"delta_c = {s.max():.4f} (need 0.55 +- 0.05)")
    assert ok


def test_criterion_08_xi_prime(acceptance_report):
    zs = np.linspace(0.1, 2.0, 20)
    loss = xi_prime_map(zs, np.linspace(0.1, 0.95, 20), "loss")
    deph = xi_prime_map(zs, np.linspace(0.05, 1.0, 20), "dephase")
    lmax, dmax = float(loss.xi_prime.max()), float(deph.xi_prime.max())
    ok = lmax < 1 and dmax <= 1 + 1e-6
    acceptance_report(8, ok, f"20x20 grids: max xi' under loss {lmax:.6f} (< 1), under dephasing {dmax:.6f} "
                             f"(<= 1 + 1e-6)")
    assert ok


def _random_state(rng, dim, support):
    k = rng.integers(1, 4)
    A = rng.normal(size=(support, k)) + 1j * rng.normal(size=(support, k))
    out = np.zeros((dim, dim), complex)
    out[:support, :support] = A @ A.conj().T
    return DensityMatrix(out / np.trace(out).real)


def _property_channels(rng):
    fails = []
    for _ in range(CASES):
        rho = _random_state(rng, 24, 16)
        for out in (apply_loss(rho, rng.uniform(0, 1)), apply_dephasing(rho, rng.uniform(0, 3))):
            if not out.is_valid(trace_tol=1e-10, psd_tol=1e-10):
                fails.append("trace/positivity")
    return fails


def _property_semigroups(rng):
    fails = []
    for _ in range(CASES):
        rho = _random_state(rng, 24, 16)
        e1, e2 = rng.uniform(0, 1, 2)
        lhs = apply_loss(apply_loss(rho, e1), e2).elements
        if np.max(np.abs(lhs - apply_loss(rho, e1 * e2).elements)) > 1e-10:
            fails.append("loss semigroup")
        d1, d2 = rng.uniform(0, 2, 2)
        lhs = apply_dephasing(apply_dephasing(rho, d1), d2).elements
        if np.max(np.abs(lhs - apply_dephasing(rho, math.hypot(d1, d2)).elements)) > 1e-12:
            fails.append("dephasing additivity")
    return fails


def _property_convexity(rng):
    fails = []
    for _ in range(CASES):
        states = [_random_state(rng, 24, 16) for _ in range(3)]
        w = rng.dirichlet(np.ones(3))
        z = rng.uniform(0.1, 2)
        mix = DensityMatrix(sum(wi * s.elements for wi, s in zip(w, states)))
        if nonlinear_variance(mix, z) < sum(wi * nonlinear_variance(s, z) for wi, s in zip(w, states)) - 1e-10:
            fails.append("mixture convexity")
    return fails


def _property_rescaling(rng):
    fails = []
    cfg = FockConfig(dim=60)
    for _ in range(CASES):
        u, r, z = rng.uniform(0, 1), rng.uniform(-0.5, 0.5), rng.uniform(0.2, 1.5)
        lam = math.exp(-r)
        squeezed = xi(nonlinear_variance(superposition_state(u, r, cfg), z), z)
        plain_z = squeeze_rescale_xi(z, lam)
        plain = xi(nonlinear_variance(superposition_state(u, 0.0, cfg), plain_z), plain_z)
        if abs(squeezed - plain) > 1e-8 * max(1.0, plain):
            fails.append("squeeze rescaling")
    return fails


def test_criterion_09_property_suites(acceptance_report):
    rng = np.random.default_rng(9)
    fails = _property_channels(rng) + _property_semigroups(rng) + _property_convexity(rng) + _property_rescaling(rng)
    ok = not fails
    acceptance_report(9, ok, f"{CASES} seeded cases each: trace/positivity, loss semigroup, dephasing additivity, "
                             f"mixture convexity, squeeze rescaling; failures: {sorted(set(fails)) or 'none'}")
    assert ok


def _critical(curve, zs, missing):
    got = {round(p.z, 9): p.critical_strength for p in curve.points}
    return np.array([got.get(round(z, 9), missing) for z in zs])


def test_criterion_10_region_shrinkage_in_noise(acceptance_report):
    zs = list(np.linspace(0.3, 1.5, 5))
    Ds = [0.0, 0.25, 0.5, 1.0]
    # an omitted z has an empty region: critical sqrt(eta) = 1 under loss, delta = 0 under dephasing
    loss = [_critical(boundary("mixed", "loss", zs, D=D), zs, 1.0) for D in Ds]
    deph = [_critical(boundary("mixed", "dephase", zs, D=D), zs, 0.0) for D in Ds]
    tol = 1e-3
    loss_ok = all(np.all(b >= a - tol) for a, b in zip(loss, loss[1:]))
    deph_ok = all(np.all(b <= a + tol) for a, b in zip(deph, deph[1:]))
    ok = loss_ok and deph_ok
    acceptance_report(10, ok, f"mixed-state regions shrink as D grows over D = {Ds}: loss {loss_ok}, "
                              f"dephasing {deph_ok} (peak delta_c {[round(float(d.max()), 3) for d in deph]}); "
                              "region landmarks are criteria 5-7")
    assert ok
