"""Closed-form nonlinear variances and their symbolic regeneration.

Two kinds of formulas live here:

* hand-written closed forms (loss and dephasing of the ideal cubic state, loss
  of the noisy cubic state, the 0/1 photon superposition), and
* generated formulas: the variance of ``O(z) = p + z x^2`` is pushed through
  the Heisenberg-picture channel map of :mod:`channels`, then through the
  preparation (cubic gate, squeezer, noise), and evaluated on the seed state.
  The result is expanded with SymPy and lambdified.

The generated route is the independent check on every hand-written form and the
production path where no closed form is available.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np

from .channels import ChannelSpec, Dephase, Loss
from .errors import DegenerateBenchmarkError, DomainError
from .polynomial import OpPoly


class FormulaId(enum.Enum):
    IDEAL_LOSS = "IdealLoss"
    IDEAL_DEPHASE = "IdealDephase"
    MIXED_LOSS = "MixedLoss"
    MIXED_DEPHASE = "MixedDephase"
    SUP_LOSS = "SupLoss"
    SUP_DEPHASE = "SupDephase"
    SQSUP = "SqueezedSup"
    LINEAR_SQUEEZED = "LinearSqueezed"


@dataclass(frozen=True)
class AnalyticResult:
    variance: float
    formula_id: FormulaId
    inputs: dict = field(default_factory=dict)


def linear_squeezed_variances(r: float, eta: float = 1.0, delta: float = 0.0) -> tuple[float, float]:
    """Squeezed-quadrature (``p``) variance of ``S(r)|0>`` after loss and after dephasing.

    Dephasing mixes in the anti-squeezed quadrature with weight
    ``(1 - exp(-2 delta^2))/2``, so ``V_D`` has an optimum in ``r``.
    """
    if not 0 <= eta <= 1 or delta < 0:
        raise DomainError("need eta in [0, 1] and delta >= 0")
    V_L = eta * math.exp(-2 * r) / 2 + (1 - eta) / 2
    V_D = (math.cosh(2 * r) - math.exp(-2 * delta * delta) * math.sinh(2 * r)) / 2
    return V_L, V_D


# ---------------------------------------------------------------------------
# ideal cubic state C(chi) S(r)|0>, g = exp(-r)


def ideal_loss_variance(chi, g, z, eta):
    if np.any(np.asarray(g) <= 0):
        raise DomainError("g must be positive")
    se = np.sqrt(eta)
    return (
        0.5 * (eta * g**2 + 1 - eta)
        + eta * (chi - z * se) ** 2 / (2 * g**4)
        + z**2 * eta * (1 - eta) / g**2
        + 0.5 * z**2 * (1 - eta) ** 2
    )


class OptimalParams(NamedTuple):
    chi: float
    g: float
    variance: float
    limit: bool  # True when the optimum is only reached as g -> 0


def optimal_loss_params(z: float, eta: float) -> OptimalParams:
    """``chi* = z sqrt(eta)``, ``g* = (2 z^2 (1 - eta))^(1/4)``."""
    if z == 0:
        raise DegenerateBenchmarkError("z = 0 is excluded")
    if not 0 <= eta <= 1:
        raise DomainError("eta must lie in [0, 1]")
    chi = z * math.sqrt(eta)
    if eta == 1:
        return OptimalParams(chi, 0.0, 0.0, True)
    g = (2 * z * z * (1 - eta)) ** 0.25
    var = (1 - eta) / 2 + eta * abs(z) * math.sqrt(2 * (1 - eta)) + z * z * (1 - eta) ** 2 / 2
    return OptimalParams(chi, g, var, False)


def _dephase_closed_form(chi, g, z, delta, exp, variant=False):
    """Dephased variance of the ideal cubic state, term by term.

    ``variant=True`` uses the sign-flipped coefficient of the
    ``chi^4 z^2 / g^8`` term, ``(+e2/2 + e8/8 + 3/8)``; it does not vanish at
    ``delta = 0``. The corrected factor is ``(-e2/2 + e8/8 + 3/8)``.
    """
    d2 = delta * delta
    e_half = exp(-d2 / 2)
    e2 = exp(-2 * d2)
    e9 = exp(-9 * d2 / 2)
    e8 = exp(-8 * d2)
    minus = -e2 / 2 + e8 / 8 + 3 / 8.0
    plus = e2 / 2 + e8 / 8 + 3 / 8.0
    odd = e_half - e9
    chi4_factor = plus if variant else minus
    second = (
        5 / 4.0 * chi**2 * z**2 / g**2 * minus
        + (1 - e8) * 3 / 16.0 * z**2
        - odd / 8 * chi * z
        + chi4_factor * 105 / 16.0 * chi**4 * z**2 / g**8
        + (1 - e8) * 45 / 32.0 * chi**2 * z**2 / g**6
        - odd * 15 / 16.0 * chi**3 * z / g**6
        + plus * 3 * z**2 / (4 * g**4)
        + odd * chi * 3 * z / (4 * g**4)
        + (1 + e2) * 3 * chi**2 / (8 * g**4)
        - 3 / 8.0 * (3 * e_half + e9) * chi * z / g**4
        + 0.5 * ((1 - e2) / (2 * g**2) + g**2 / 2 * (1 + e2))
        + 3 / 4.0 * minus * g**4 * z**2
    )
    mean = (
        (1 + e2) * z / (4 * g**2)
        - chi / (2 * g**2) * e_half
        + chi**2 * z * 3 / (8 * g**4) * (1 - e2)
        + g**2 * z / 4 * (1 - e2)
    )
    return second - mean**2


def ideal_dephase_variance(chi, g, z, delta):
    """Ideal cubic state under Gaussian dephasing (closed form, corrected)."""
    if np.any(np.asarray(g) <= 0) or np.any(np.asarray(delta) < 0):
        raise DomainError("need g > 0 and delta >= 0")
    return _dephase_closed_form(chi, g, z, delta, np.exp)


def ideal_dephase_variance_sign_variant(chi, g, z, delta):
    """Dephasing formula with the sign-flipped ``chi^4`` factor (kept for the consistency report)."""
    return _dephase_closed_form(chi, g, z, delta, np.exp, variant=True)


# ---------------------------------------------------------------------------
# noisy cubic state, displacement noise of variance D/2 in x


def mixed_loss_variance(chi, g, D, z, eta):
    """Noisy cubic state under loss, derived from the Heisenberg moment map.

    With ``s = 1 + D`` the pre-squeezing x-variance is ``s/2``.
    """
    if np.any(np.asarray(g) <= 0) or np.any(np.asarray(D) < 0):
        raise DomainError("need g > 0 and D >= 0")
    s = 1 + D
    se = np.sqrt(eta)
    return (
        0.5 * (1 - eta + g**2 * eta)
        + s**2 / 2 * eta / g**4 * (chi - se * z) ** 2
        + 0.5 * (1 - eta) ** 2 * z**2
        + (1 - eta) * eta * z**2 * s / g**2
    )


def mixed_loss_variance_half_noise(chi, g, D, z, eta):
    """Noisy-state loss formula with D counted as half the noise; equals ``mixed_loss_variance`` at ``2D``."""
    se = np.sqrt(eta)
    return (
        0.5 * (1 - eta + g**2 * eta)
        + (0.5 + 2 * D + 2 * D**2) * eta / g**4 * (chi - se * z) ** 2
        + 0.5 * (1 - eta) ** 2 * z**2
        + 2 * (1 - eta) * eta * z**2 / g**2 * (0.5 + D)
    )


def mixed_dephase_variance(chi, g, D, z, delta):
    """Noisy cubic state under dephasing (generated; no hand-written closed form)."""
    if np.any(np.asarray(g) <= 0) or np.any(np.asarray(D) < 0) or np.any(np.asarray(delta) < 0):
        raise DomainError("need g > 0, D >= 0, delta >= 0")
    f = generated_variance("mixed", "dephase")
    return f(chi, g, D, z, delta)


# ---------------------------------------------------------------------------
# superposition u|0> + i sqrt(1-u^2)|1>


def superposition_loss_variance(u, z, eta):
    u2 = u * u
    return (
        -(eta**2) * (u2 - 1) ** 2 * z**2
        + eta * (u2 - 1) * (2 * u2 - 2 * z**2 - 1)
        + 2 * eta**1.5 * u * (u2 - 1) * np.sqrt(np.maximum(2 - 2 * u2, 0.0)) * z
        + 0.5 * (z**2 + 1)
    )


def superposition_dephase_variance(u, z, delta):
    u2 = u * u
    e1 = np.exp(-delta * delta)
    eh = np.exp(-delta * delta / 2)
    root = np.sqrt(np.maximum(2 - 2 * u2, 0.0))
    return (
        2 * e1 * u2 * u2
        - 2 * eh * root * u * z
        - 2 * e1 * u2
        + 2 * eh * root * u2 * u * z
        - u2 * u2 * z**2
        - u2
        + 1.5 * z**2
        + 1.5
    )


def squeezed_superposition_variance(u, r, z, channel: ChannelSpec, route: str = "fock", cfg=None):
    """Squeezed 0/1 superposition after a channel.

    ``route="fock"`` builds the state on a truncated Fock space (cutoff
    escalated on truncation failure); ``route="moments"`` evaluates the
    generated polynomial formula.
    """
    if route == "moments":
        f = generated_variance("sqsup", channel.kind)
        return float(f(u, r, z, channel.strength))
    if route != "fock":
        raise DomainError(f"unknown route {route!r}")
    from .channels import apply_channel
    from .fock import superposition_state, with_escalation
    from .moments import nonlinear_variance

    def build(c):
        return nonlinear_variance(apply_channel(superposition_state(u, r, c), channel), z)

    return with_escalation(build, cfg)


# ---------------------------------------------------------------------------
# symbolic generation


def _family_expectation(family: str, syms: dict, x: OpPoly, p: OpPoly) -> Callable[[OpPoly], object]:
    import sympy

    if family in ("ideal", "mixed"):
        chi, g = syms["chi"], syms["g"]
        X = x * (1 / g)
        P = p * g - x * x * (chi / g**2)
        if family == "ideal":
            return lambda poly: poly.substitute(X, P, exact=True).vacuum_expectation()
        D = syms["D"]
        return lambda poly: poly.substitute(X, P, exact=True).displaced_vacuum_average(D)

    u = syms["u"]
    v = sympy.sqrt(1 - u**2)

    def two_level(poly):
        t = poly.terms
        return (
            t.get((0, 0), 0)
            + t.get((1, 1), 0) * v**2
            + t.get((0, 1), 0) * sympy.I * u * v
            - t.get((1, 0), 0) * sympy.I * u * v
        )

    if family == "sup":
        return two_level
    g = sympy.exp(-syms["r"])
    X = x * (1 / g)
    P = p * g
    return lambda poly: two_level(poly.substitute(X, P, exact=True))


_FAMILY_ARGS = {
    "ideal": ("chi", "g"),
    "mixed": ("chi", "g", "D"),
    "sup": ("u",),
    "sqsup": ("u", "r"),
}


@lru_cache(maxsize=None)
def generated_expressions(family: str, channel_kind: str):
    """SymPy expressions ``(mean, second_moment, variance, symbols)``.

    The channel enters through ``eta`` for loss and through ``delta`` for
    dephasing.
    """
    import sympy

    from .channels import dephase_moment_transform, loss_moment_transform

    if family not in _FAMILY_ARGS:
        raise DomainError(f"unknown family {family!r}")
    names = _FAMILY_ARGS[family] + ("z", "eta" if channel_kind == "loss" else "delta")
    positive = {"g", "eta", "delta", "D"}
    syms = {n: sympy.Symbol(n, positive=True) if n in positive else sympy.Symbol(n, real=True) for n in names}
    x, p = OpPoly.quadratures(exact=True)
    O = p + x * x * syms["z"]
    if channel_kind == "loss":
        transform = lambda poly: loss_moment_transform(poly, syms["eta"], exact=True)
    elif channel_kind == "dephase":
        transform = lambda poly: dephase_moment_transform(poly, syms["delta"], exact=True)
    else:
        raise DomainError(f"unknown channel kind {channel_kind!r}")
    ev = _family_expectation(family, syms, x, p)
    mean = sympy.expand(ev(transform(O)))
    second = sympy.expand(ev(transform(O * O)))
    var = sympy.expand(second - mean**2)
    return mean, second, var, tuple(syms[n] for n in names)


@lru_cache(maxsize=None)
def generated_variance(family: str, channel_kind: str):
    """Numpy callable ``f(*family_params, z, strength)`` for the generated variance.

    ``strength`` is ``sqrt(eta)`` for loss (the map axis) and ``delta`` for
    dephasing, matching :attr:`channels.Loss.strength`.
    """
    import sympy

    mean, second, _, syms = generated_expressions(family, channel_kind)
    if channel_kind == "loss":
        s = sympy.Symbol("s", positive=True)
        mean = mean.subs(syms[-1], s**2)
        second = second.subs(syms[-1], s**2)
        syms = syms[:-1] + (s,)
    # common-subexpression elimination makes the long dephasing forms ~7x cheaper
    f_mean = sympy.lambdify(syms, mean, "numpy", cse=True)
    f_second = sympy.lambdify(syms, second, "numpy", cse=True)

    def variance(*args):
        m = np.real(f_mean(*args))
        return np.real(f_second(*args)) - m * m

    return variance


def dephasing_consistency_report(variant: bool = False) -> dict:
    """Compare the hand-written dephasing formula with its symbolic regeneration.

    Both sides are rewritten as Laurent polynomials in ``chi, z, g`` and the
    damping factors ``exp(-k delta^2 / 2)``; the report lists every monomial
    whose coefficients differ.
    """
    import sympy

    _, _, var, (chi, g, z, delta) = generated_expressions("ideal", "dephase")
    written = _dephase_closed_form(chi, g, z, delta, sympy.exp, variant=variant)
    q = sympy.Symbol("q", positive=True)

    def normalize(expr):
        expr = sympy.expand(sympy.nsimplify(expr, rational=True))
        # every damping factor is exp(-k delta^2/2) = q**k
        expr = expr.replace(
            lambda e: isinstance(e, sympy.exp),
            lambda e: q ** sympy.nsimplify(sympy.expand(-2 * e.args[0] / delta**2)),
        )
        return sympy.expand(expr)

    gens = (chi, z, g, q)
    t_derived = _split_terms(normalize(var), gens)
    t_trans = _split_terms(normalize(written), gens)
    keys = sorted(set(t_derived) | set(t_trans))
    mismatches = []
    for k in keys:
        a = t_derived.get(k, 0)
        b = t_trans.get(k, 0)
        if sympy.simplify(a - b) != 0:
            mismatches.append({"monomial": _monomial_label(k), "derived": str(a), "closed_form": str(b)})
    return {
        "terms_compared": len(keys),
        "mismatches": mismatches,
        "consistent": not mismatches,
    }


def _split_terms(expr, gens):
    """Coefficient table keyed by the (possibly negative) exponents of ``gens``."""
    import sympy

    out = {}
    for term in sympy.Add.make_args(expr):
        coeff, rest = term.as_coeff_Mul()
        powers = rest.as_powers_dict()
        key = tuple(int(powers.get(s, 0)) for s in gens)
        out[key] = out.get(key, 0) + coeff
    return {k: v for k, v in out.items() if v != 0}


def _monomial_label(key) -> str:
    names = ("chi", "z", "g", "exp(-delta^2/2)")
    parts = [f"{n}^{e}" for n, e in zip(names, key) if e]
    return "*".join(parts) or "1"


def family_variance(family, z: float, channel: ChannelSpec) -> float:
    """Variance of ``O(z)`` for a state-family instance on the analytic route."""
    from .fock import IdealCubic, MixedCubic, SqueezedSuperposition, Superposition

    if isinstance(family, IdealCubic):
        if isinstance(channel, Loss):
            return float(ideal_loss_variance(family.chi, family.g, z, channel.eta))
        return float(ideal_dephase_variance(family.chi, family.g, z, channel.delta))
    if isinstance(family, MixedCubic):
        if isinstance(channel, Loss):
            return float(mixed_loss_variance(family.chi, family.g, family.D, z, channel.eta))
        return float(mixed_dephase_variance(family.chi, family.g, family.D, z, channel.delta))
    if isinstance(family, Superposition):
        if isinstance(channel, Loss):
            return float(superposition_loss_variance(family.u, z, channel.eta))
        return float(superposition_dephase_variance(family.u, z, channel.delta))
    if isinstance(family, SqueezedSuperposition):
        return squeezed_superposition_variance(family.u, family.r, z, channel, route="moments")
    raise TypeError(f"unknown family {family!r}")
