"""Gaussian benchmark for the nonlinear quadrature ``O(z) = p + z x^2``.

Sign convention: with ``O = p + z x^2`` the cross term is ``+4 z a C``. The
variant ``p - z x^2`` is recovered by ``z -> -z`` (equivalently
``C -> -C, a -> -a``), which leaves every minimum unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .errors import DegenerateBenchmarkError, DomainError, InvalidStateError, OptimizationError

UNCERTAINTY_TOL = 1e-12


@dataclass(frozen=True)
class GaussianStateParams:
    """Covariance ``[[A, C], [C, B]]`` and mean ``(a, 0)``."""

    A: float
    B: float
    C: float = 0.0
    a: float = 0.0

    def __post_init__(self):
        if self.A <= 0 or self.B <= 0:
            raise InvalidStateError("variances must be positive")
        if self.A * self.B - self.C**2 < 0.25 - UNCERTAINTY_TOL:
            raise InvalidStateError(
                f"uncertainty relation violated: AB - C^2 = {self.A * self.B - self.C**2:.6g} < 1/4"
            )

    @classmethod
    def pure(cls, A: float, C: float = 0.0, a: float = 0.0) -> "GaussianStateParams":
        return cls(A, (0.25 + C * C) / A, C, a)

    @property
    def is_pure(self) -> bool:
        return abs(self.A * self.B - self.C**2 - 0.25) < 1e-10

    def after_loss(self, eta: float) -> "GaussianStateParams":
        return GaussianStateParams(
            eta * self.A + (1 - eta) / 2,
            eta * self.B + (1 - eta) / 2,
            eta * self.C,
            math.sqrt(eta) * self.a,
        )


def _raw_variance(A, B, C, a, z):
    return B + 4 * z * a * C + 4 * z * z * a * a * A + 2 * z * z * A * A


def gaussian_nonlinear_variance(gp: GaussianStateParams, z: float) -> float:
    return _raw_variance(gp.A, gp.B, gp.C, gp.a, z)


def optimal_displacement(gp: GaussianStateParams, z: float) -> float:
    """x-displacement minimizing the variance at fixed covariance."""
    if z == 0:
        raise DegenerateBenchmarkError("displacement is irrelevant at z = 0")
    return -gp.C / (2 * z * gp.A)


def min_gaussian_variance(z: float) -> tuple[float, float]:
    """Minimum over all Gaussian states: ``1/(4A) + 2 z^2 A^2`` at ``A = (16 z^2)^(-1/3)``."""
    if z == 0:
        raise DegenerateBenchmarkError("the Gaussian benchmark vanishes at z = 0; xi is undefined")
    z2 = z * z
    A = (16 * z2) ** (-1 / 3)
    value = 3 * 2 ** (-5 / 3) * abs(z) ** (2 / 3)
    return value, A


def min_gaussian_variance_numeric(z: float) -> tuple[float, float]:
    if z == 0:
        raise DegenerateBenchmarkError("the Gaussian benchmark vanishes at z = 0")
    f = lambda logA: 1 / (4 * math.exp(logA)) + 2 * z * z * math.exp(2 * logA)
    res = minimize_scalar(f, bounds=(-20, 20), method="bounded", options={"xatol": 1e-12})
    return float(res.fun), math.exp(res.x)


def xi(variance: float, z: float) -> float:
    if variance < 0:
        raise DomainError("variance must be non-negative")
    return variance / min_gaussian_variance(z)[0]


def squeeze_rescale_xi(z: float, lam: float) -> float:
    """Argument at which the unsqueezed state's xi must be read.

    Squeezing with ``x -> x/lam, p -> lam p`` (``lam = g = exp(-r)``) gives
    ``xi_new(z) = xi_old(z/lam^3)``.
    """
    if lam <= 0:
        raise DomainError("lambda must be positive")
    return z / lam**3


def protection_squeezing(chi: float, eta: float, target_z: float = 1 / math.sqrt(2)) -> float:
    """Squeezing ``g`` that moves an ideal cubic state of cubicity ``chi`` to the
    loss-optimal preparation ``target_z * sqrt(eta)``.

    Squeezing by ``g`` maps the cubicity ``chi -> chi g^3``.
    """
    if chi == 0 or not 0 < eta <= 1:
        raise DomainError("need chi != 0 and eta in (0, 1]")
    ratio = target_z * math.sqrt(eta) / chi
    if ratio <= 0:
        raise DomainError("chi and target_z must share a sign")
    return ratio ** (1 / 3)


# ---------------------------------------------------------------------------
# channel-propagated benchmarks


def _loss_objective(params, z, eta):
    logA, C = params
    A = math.exp(logA)
    gp = GaussianStateParams.pure(A, C).after_loss(eta)
    # displacement optimum is exact for any Gaussian covariance
    return gp.B + 2 * z * z * gp.A**2 - gp.C**2 / gp.A


def _simplex_multistart(fun, seeds, xatol=1e-9, fatol=1e-14, maxiter=4000):
    best = None
    for s in seeds:
        res = minimize(fun, np.asarray(s, float), method="Nelder-Mead",
                       options={"xatol": xatol, "fatol": fatol, "maxiter": maxiter, "maxfev": 4 * maxiter})
        if best is None or res.fun < best.fun:
            best = res
    if best is None or not np.isfinite(best.fun):
        raise OptimizationError("no simplex start converged", {"seeds": len(seeds)})
    return best


def lossy_gaussian_min_variance(z: float, eta: float) -> float:
    """Minimum over pure Gaussian inputs sent through loss ``eta``."""
    if z == 0:
        raise DegenerateBenchmarkError("benchmark undefined at z = 0")
    if not 0 < eta <= 1:
        raise DomainError("eta must lie in (0, 1]")
    z = abs(z)
    if eta == 1:
        return min_gaussian_variance(z)[0]
    logA0 = math.log(min_gaussian_variance(z)[1])
    seeds = [(logA0 + d, c) for d in (-2.0, 0.0, 2.0) for c in (-0.5, 0.0, 0.5)]
    grid = sorted(seeds, key=lambda s: _loss_objective(s, z, eta))[:3]
    res = _simplex_multistart(lambda v: _loss_objective(v, z, eta), grid)
    return float(res.fun)


@lru_cache(maxsize=1)
def _dephased_gaussian_moments():
    """Lambdified first and second moments of ``O`` for a dephased pure Gaussian.

    The Gaussian is the vacuum mapped by ``x -> s x + a``,
    ``p -> (2C/s) x + p/s`` with ``s = sqrt(2A)``; ``q = exp(-delta^2/2)``.
    """
    import sympy

    from .channels import dephase_moment_transform
    from .polynomial import OpPoly

    s, c, a, z, q = sympy.symbols("s c a z q", real=True)
    x, p = OpPoly.quadratures(exact=True)
    O = p + x * x * z
    X = x * s + a
    P = x * (2 * c / s) + p * (1 / s)

    def moment(poly):
        poly = poly.map_terms(lambda m, n, coef: coef * q ** ((m - n) ** 2))
        return sympy.expand(poly.substitute(X, P, exact=True).vacuum_expectation())

    m1 = moment(O)
    m2 = moment(O * O)
    args = (s, c, a, z, q)
    return sympy.lambdify(args, m1, "numpy", cse=True), sympy.lambdify(args, m2, "numpy", cse=True)


def dephased_gaussian_variance(gp: GaussianStateParams, z: float, delta: float) -> float:
    """``var(O)`` after Gaussian dephasing of a pure Gaussian input."""
    if not gp.is_pure:
        raise InvalidStateError("dephased benchmark expects a pure Gaussian input")
    f1, f2 = _dephased_gaussian_moments()
    s = math.sqrt(2 * gp.A)
    q = math.exp(-0.5 * delta * delta)
    m1 = np.real(f1(s, gp.C, gp.a, z, q))
    m2 = np.real(f2(s, gp.C, gp.a, z, q))
    return float(m2 - m1 * m1)


def _dephase_objective(v, z, q, f1, f2):
    logA, C, a = v
    s = math.sqrt(2 * math.exp(logA))
    m1 = np.real(f1(s, C, a, z, q))
    m2 = np.real(f2(s, C, a, z, q))
    return float(m2 - m1 * m1)


def dephased_gaussian_min_variance(z: float, delta: float, return_params: bool = False):
    """Minimum over pure Gaussian inputs sent through dephasing ``delta``."""
    if z == 0:
        raise DegenerateBenchmarkError("benchmark undefined at z = 0")
    if delta < 0:
        raise DomainError("delta must be non-negative")
    z = abs(z)
    value0, A0 = min_gaussian_variance(z)
    if delta == 0:
        return (value0, GaussianStateParams.pure(A0)) if return_params else value0
    f1, f2 = _dephased_gaussian_moments()
    q = math.exp(-0.5 * delta * delta)
    obj = lambda v: _dephase_objective(v, z, q, f1, f2)
    logA0 = math.log(A0)
    # coarse seed grid, best few refined by simplex
    seeds = [
        (logA0 + d, c, a)
        for d in np.linspace(-1.5, 1.5, 5)
        for c in (-0.5, 0.0, 0.5)
        for a in (-0.5, 0.0, 0.5)
    ]
    seeds.append((math.log(0.5), 0.0, 0.0))
    best_seeds = sorted(seeds, key=obj)[:4]
    res = _simplex_multistart(obj, best_seeds, xatol=1e-10)
    if return_params:
        logA, C, a = res.x
        return float(res.fun), GaussianStateParams.pure(math.exp(logA), C, a)
    return float(res.fun)


def channel_gaussian_min_variance(z: float, channel) -> float:
    from .channels import Dephase, Loss

    if isinstance(channel, Loss):
        return lossy_gaussian_min_variance(z, channel.eta)
    if isinstance(channel, Dephase):
        return dephased_gaussian_min_variance(z, channel.delta)
    raise TypeError(f"unknown channel {channel!r}")
