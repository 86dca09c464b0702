"""Single-mode operator polynomials kept in normal order.

An :class:`OpPoly` is a finite sum ``sum c[m, n] * adag**m a**n``. Every
polynomial in the quadratures can be written this way with the convention
``x = (a + adag)/sqrt2`` and ``p = i(adag - a)/sqrt2``, which makes three
operations cheap:

* vacuum expectation is the constant coefficient,
* a phase rotation multiplies ``c[m, n]`` by ``exp(i(m - n)phi)``,
* a beam splitter with a vacuum ancilla multiplies ``c[m, n]`` by
  ``eta**((m + n)/2)`` (all ancilla terms vanish once normal ordered).

Coefficients may be Python/NumPy numbers or SymPy expressions; the class only
uses ``+`` and ``*`` on them.
"""

from __future__ import annotations

from math import comb, factorial
from typing import Callable, Dict, Tuple

import numpy as np

Key = Tuple[int, int]


def _constants(exact):
    if exact:
        import sympy

        return sympy.sqrt(2), sympy.I
    return np.sqrt(2.0), 1j


def _is_zero(c) -> bool:
    try:
        return c == 0
    except TypeError:
        return False


class OpPoly:
    __slots__ = ("terms",)

    def __init__(self, terms: Dict[Key, object] | None = None):
        self.terms: Dict[Key, object] = {}
        if terms:
            for k, c in terms.items():
                if not _is_zero(c):
                    self.terms[k] = c

    # -- constructors -----------------------------------------------------
    @classmethod
    def scalar(cls, c) -> "OpPoly":
        return cls({(0, 0): c})

    @classmethod
    def a(cls) -> "OpPoly":
        return cls({(0, 1): 1})

    @classmethod
    def adag(cls) -> "OpPoly":
        return cls({(1, 0): 1})

    @classmethod
    def x(cls, exact: bool = False) -> "OpPoly":
        s2, _ = _constants(exact)
        return cls({(0, 1): 1 / s2, (1, 0): 1 / s2})

    @classmethod
    def p(cls, exact: bool = False) -> "OpPoly":
        s2, i = _constants(exact)
        return cls({(1, 0): i / s2, (0, 1): -i / s2})

    @classmethod
    def quadratures(cls, exact: bool = False) -> Tuple["OpPoly", "OpPoly"]:
        return cls.x(exact), cls.p(exact)

    # -- arithmetic -------------------------------------------------------
    def copy(self) -> "OpPoly":
        return OpPoly(dict(self.terms))

    @property
    def degree(self) -> int:
        return max((m + n for m, n in self.terms), default=0)

    def __add__(self, other):
        if not isinstance(other, OpPoly):
            other = OpPoly.scalar(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out[k] + c if k in out else c
        return OpPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return OpPoly({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, OpPoly):
            return OpPoly({k: c * other for k, c in self.terms.items()})
        out: Dict[Key, object] = {}
        for (m, n), c1 in self.terms.items():
            for (k, l), c2 in other.terms.items():
                # a**n adag**k = sum_j C(n,j) C(k,j) j! adag**(k-j) a**(n-j)
                for j in range(min(n, k) + 1):
                    w = comb(n, j) * comb(k, j) * factorial(j)
                    key = (m + k - j, n + l - j)
                    term = c1 * c2 * w
                    out[key] = out[key] + term if key in out else term
        return OpPoly(out)

    def __rmul__(self, other):
        # scalars commute with everything
        return self.__mul__(other)

    def __truediv__(self, other):
        return self * (1 / other)

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        result = OpPoly.scalar(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __repr__(self):
        body = " + ".join(f"({c})*ad^{m} a^{n}" for (m, n), c in sorted(self.terms.items()))
        return f"OpPoly({body or 0})"

    # -- transformations --------------------------------------------------
    def map_terms(self, f: Callable[[int, int, object], object]) -> "OpPoly":
        """Return the polynomial with each coefficient replaced by ``f(m, n, c)``."""
        return OpPoly({(m, n): f(m, n, c) for (m, n), c in self.terms.items()})

    def map_coeffs(self, f: Callable[[object], object]) -> "OpPoly":
        return OpPoly({k: f(c) for k, c in self.terms.items()})

    def substitute(self, X: "OpPoly", P: "OpPoly", exact: bool = False) -> "OpPoly":
        """Replace ``x -> X`` and ``p -> P`` (Heisenberg-picture composition).

        ``X`` and ``P`` must satisfy ``[X, P] = i`` for the result to describe a
        unitary evolution, but this is not checked; c-number shifts are allowed.
        """
        s2, i = _constants(exact)
        A = (X + P * i) * (1 / s2)
        Ad = (X - P * i) * (1 / s2)
        apow = [OpPoly.scalar(1)]
        adpow = [OpPoly.scalar(1)]
        out = OpPoly()
        for (m, n), c in self.terms.items():
            while len(adpow) <= m:
                adpow.append(adpow[-1] * Ad)
            while len(apow) <= n:
                apow.append(apow[-1] * A)
            out = out + (adpow[m] * apow[n]) * c
        return out

    # -- expectations -----------------------------------------------------
    def vacuum_expectation(self):
        return self.terms.get((0, 0), 0)

    def displaced_vacuum_average(self, D):
        """Average over vacua displaced in x by ``w`` with weight ``exp(-w**2/D)``.

        The displaced vacuum is a coherent state with real amplitude
        ``alpha = w/sqrt2``, so ``<adag**m a**n> = alpha**(m+n)`` and the
        Gaussian average of ``alpha**k`` is ``(D/4)**(k/2) (k-1)!!`` for even k.
        """
        total = 0
        for (m, n), c in self.terms.items():
            k = m + n
            if k % 2:
                continue
            total = total + c * _double_factorial(k - 1) * (D / 4) ** (k // 2)
        return total


def _double_factorial(n: int) -> int:
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out
