"""Moments of the cubic nonlinear quadrature ``O(z) = p + z x^2``."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, InvalidDimensionError, NumericalInstabilityError
from .fock import DensityMatrix, quadratures

ORDER = 3


@dataclass(frozen=True)
class NonlinearSpec:
    z: float
    n: int = ORDER

    def __post_init__(self):
        if self.n != ORDER:
            raise DomainError("only the cubic (n = 3) nonlinear quadrature is implemented")


@dataclass(frozen=True)
class OperatorTable:
    x: np.ndarray
    p: np.ndarray
    x2: np.ndarray
    p2: np.ndarray
    x4: np.ndarray
    px2: np.ndarray  # p x^2 + x^2 p


@lru_cache(maxsize=16)
def operator_table(dim: int) -> OperatorTable:
    """Exact matrix elements on ``dim`` levels (built 4 levels wider, then cut)."""
    x, p = quadratures(dim + 4)
    x2 = x @ x
    ops = {
        "x": x,
        "p": p,
        "x2": x2,
        "p2": p @ p,
        "x4": x2 @ x2,
        "px2": p @ x2 + x2 @ p,
    }
    cut = {}
    for k, v in ops.items():
        v = np.ascontiguousarray(v[:dim, :dim])
        v.setflags(write=False)
        cut[k] = v
    return OperatorTable(**cut)


def expect(rho: DensityMatrix, M: np.ndarray) -> complex:
    M = np.asarray(M)
    if M.shape != rho.elements.shape:
        raise InvalidDimensionError(f"operator shape {M.shape} does not match state dim {rho.dim}")
    return complex(np.einsum("ij,ji->", M, rho.elements))


def nonlinear_mean(rho: DensityMatrix, z: float) -> float:
    ops = operator_table(rho.dim)
    return expect(rho, ops.p).real + z * expect(rho, ops.x2).real


def nonlinear_variance(rho: DensityMatrix, z: float) -> float:
    """``<O^2> - <O>^2`` with ``<O^2> = <p^2> + z<p x^2 + x^2 p> + z^2 <x^4>``."""
    ops = operator_table(rho.dim)
    p = expect(rho, ops.p).real
    x2 = expect(rho, ops.x2).real
    p2 = expect(rho, ops.p2).real
    px2 = expect(rho, ops.px2).real
    x4 = expect(rho, ops.x4).real
    second = p2 + z * px2 + z * z * x4
    mean = p + z * x2
    var = second - mean * mean
    if var < -1e-9:
        raise NumericalInstabilityError(f"negative nonlinear variance {var:.3e}")
    return max(var, 0.0)
