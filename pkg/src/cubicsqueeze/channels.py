"""Loss and Gaussian dephasing, on density matrices and on moment polynomials."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError, IncompleteKrausError, UnsupportedDegreeError
from .fock import DensityMatrix
from .polynomial import OpPoly

MAX_MOMENT_DEGREE = 8


@dataclass(frozen=True)
class Loss:
    eta: float

    def __post_init__(self):
        if not 0 <= self.eta <= 1:
            raise DomainError(f"transmission eta must lie in [0, 1], got {self.eta}")

    kind = "loss"

    @property
    def strength(self) -> float:
        """Axis value used in maps: sqrt(eta)."""
        return math.sqrt(self.eta)


@dataclass(frozen=True)
class Dephase:
    delta: float

    def __post_init__(self):
        if self.delta < 0:
            raise DomainError(f"phase spread delta must be >= 0, got {self.delta}")

    kind = "dephase"

    @property
    def strength(self) -> float:
        return self.delta


ChannelSpec = Union[Loss, Dephase]


def channel_from_strength(kind: str, strength: float) -> ChannelSpec:
    """Inverse of ``.strength``: loss maps are parameterized by sqrt(eta)."""
    if kind == "loss":
        return Loss(min(1.0, strength * strength))
    if kind == "dephase":
        return Dephase(strength)
    raise DomainError(f"unknown channel kind {kind!r}")


def identity_channel(kind: str) -> ChannelSpec:
    return Loss(1.0) if kind == "loss" else Dephase(0.0)


def apply_loss(rho: DensityMatrix, eta: float, k_max: int | None = None, tol: float = 1e-10) -> DensityMatrix:
    """Kraus sum ``sum_k A_k rho A_k^dag``, ``A_k = sqrt((1-eta)^k/k!) eta^(n/2) a^k``.

    The weighted term ``T_k = (1-eta)^k/k! a^k rho adag^k`` is accumulated
    recursively as ``T_k = (1-eta)/k a T_(k-1) adag``, which stays bounded at
    any cutoff. For ``k >= dim`` it vanishes on the truncated space, so
    ``k_max = dim`` is exhaustive.
    """
    if not 0 <= eta <= 1:
        raise DomainError(f"eta must lie in [0, 1], got {eta}")
    dim = rho.dim
    k_max = dim if k_max is None else k_max
    if k_max < dim:
        raise DomainError("k_max must be >= dim for an exhaustive Kraus sum")
    if eta == 1:
        return rho
    sqrt_n = np.sqrt(np.arange(1, dim, dtype=float))
    shift = np.outer(sqrt_n, sqrt_n)
    damp = eta ** (np.arange(dim) / 2.0)
    damp_outer = np.outer(damp, damp)
    T = np.array(rho.elements)
    out = damp_outer * T
    for k in range(1, min(k_max, dim)):
        # a T adag shifts both indices down by one
        shifted = np.zeros_like(T)
        shifted[:-1, :-1] = T[1:, 1:] * shift * ((1 - eta) / k)
        T = shifted
        if not np.any(T):
            break
        out += damp_outer * T
    defect = abs(np.trace(out).real - rho.trace())
    if not defect <= tol:
        raise IncompleteKrausError(f"loss channel lost trace {defect:.3e}")
    return DensityMatrix(out)


def apply_dephasing(rho: DensityMatrix, delta: float) -> DensityMatrix:
    """Average of ``exp(-i phi n) rho exp(i phi n)`` over ``phi ~ N(0, delta^2)``.

    The Gaussian average is exact: ``rho[k, l] *= exp(-delta^2 (k-l)^2 / 2)``.
    """
    if delta < 0:
        raise DomainError(f"delta must be >= 0, got {delta}")
    if delta == 0:
        return rho
    k = np.arange(rho.dim)
    diff = k[:, None] - k[None, :]
    return DensityMatrix(rho.elements * np.exp(-0.5 * delta * delta * diff * diff))


def apply_channel(rho: DensityMatrix, channel: ChannelSpec) -> DensityMatrix:
    if isinstance(channel, Loss):
        return apply_loss(rho, channel.eta)
    if isinstance(channel, Dephase):
        return apply_dephasing(rho, channel.delta)
    raise TypeError(f"unknown channel {channel!r}")


# ---------------------------------------------------------------------------
# Heisenberg-picture moment maps


def _check_degree(poly: OpPoly):
    if poly.degree > MAX_MOMENT_DEGREE:
        raise UnsupportedDegreeError(
            f"moment polynomial of degree {poly.degree} exceeds the supported {MAX_MOMENT_DEGREE}"
        )


def loss_moment_transform(poly: OpPoly, eta, exact: bool = False) -> OpPoly:
    """Moment polynomial ``M'`` with ``Tr[M rho_L] = Tr[M' rho]``.

    Substituting ``a -> sqrt(eta) a + sqrt(1-eta) a0`` and tracing the vacuum
    ancilla keeps only ancilla-free normal-ordered terms, so each
    ``adag^m a^n`` just picks up ``eta^((m+n)/2)``. ``eta`` may be symbolic.
    """
    _check_degree(poly)
    if exact:
        import sympy

        root = sympy.sqrt(eta)
    else:
        if not 0 <= eta <= 1:
            raise DomainError(f"eta must lie in [0, 1], got {eta}")
        root = math.sqrt(eta)
    return poly.map_terms(lambda m, n, c: c * root ** (m + n))


def dephase_moment_transform(poly: OpPoly, delta, exact: bool = False) -> OpPoly:
    """Moment polynomial averaged over Gaussian phase-space rotations.

    Rotating by ``phi`` multiplies ``adag^m a^n`` by ``exp(i(m-n)phi)``; the
    Gaussian average of that harmonic is ``exp(-(m-n)^2 delta^2 / 2)``.
    """
    _check_degree(poly)
    if exact:
        import sympy

        factor = lambda k: sympy.exp(-sympy.Rational(k * k, 2) * delta**2)
    else:
        if delta < 0:
            raise DomainError(f"delta must be >= 0, got {delta}")
        factor = lambda k: math.exp(-0.5 * k * k * delta * delta)
    return poly.map_terms(lambda m, n, c: c * factor(m - n))


def moment_transform(poly: OpPoly, channel: ChannelSpec) -> OpPoly:
    if isinstance(channel, Loss):
        return loss_moment_transform(poly, channel.eta)
    return dephase_moment_transform(poly, channel.delta)
