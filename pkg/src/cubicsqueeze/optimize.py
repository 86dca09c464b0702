"""Minimize xi over state-family parameters and trace xi = 1 boundaries."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from . import analytic
from .channels import ChannelSpec, Dephase, Loss, channel_from_strength
from .errors import DomainError, OptimizationError, TruncationError
from .fock import (
    FockConfig,
    IdealCubic,
    MixedCubic,
    SqueezedSuperposition,
    Superposition,
    as_config,
    build_state,
    with_escalation,
)
from .gaussian import channel_gaussian_min_variance, min_gaussian_variance

log = logging.getLogger(__name__)

Z_MIN = 0.05

FAMILIES = ("ideal", "mixed", "sup", "sqsup")

FREE_PARAMS = {
    "ideal": ("chi", "r"),
    "mixed": ("chi", "r"),
    "sup": ("u",),
    "sqsup": ("u", "r"),
}

ANALYTIC_BOUNDS = {"chi": (-3.0, 3.0), "r": (-3.0, 3.0), "u": (0.0, 1.0)}
# tighter squeezing range keeps Fock truncation tractable
FOCK_BOUNDS = {"chi": (-2.0, 2.0), "r": (-1.5, 1.5), "u": (0.0, 1.0)}


def default_bounds(family: str, route: str) -> Dict[str, Tuple[float, float]]:
    table = ANALYTIC_BOUNDS if route == "analytic" else FOCK_BOUNDS
    return {k: table[k] for k in FREE_PARAMS[family]}


@dataclass
class OptimizationProblem:
    family: str
    z: float
    channel: ChannelSpec
    route: str = "analytic"
    bounds: Optional[Dict[str, Tuple[float, float]]] = None
    seeds: Optional[int] = None
    D: float = 0.0
    fock: Optional[FockConfig] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown family {self.family!r}")
        if self.route not in ("analytic", "fock"):
            raise DomainError(f"unknown route {self.route!r}")
        if abs(self.z) < Z_MIN:
            raise DomainError(f"|z| must be >= {Z_MIN}; xi is undefined at z = 0")
        if self.bounds is None:
            self.bounds = default_bounds(self.family, self.route)
        for name in FREE_PARAMS[self.family]:
            lo, hi = self.bounds[name]
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise DomainError(f"bounds for {name} must be finite with lo < hi")
        if self.seeds is None:
            self.seeds = 41 if len(FREE_PARAMS[self.family]) == 1 else 9

    @property
    def names(self) -> Tuple[str, ...]:
        return FREE_PARAMS[self.family]


@dataclass
class OptimizationResult:
    params: Dict[str, float]
    xi: float
    variance: float
    evaluations: int
    seed_xis: List[float] = field(default_factory=list)

    @property
    def g(self) -> Optional[float]:
        return math.exp(-self.params["r"]) if "r" in self.params else None


def make_state(family: str, params: Dict[str, float], D: float = 0.0):
    if family == "ideal":
        return IdealCubic(params["chi"], params["r"])
    if family == "mixed":
        return MixedCubic(params["chi"], params["r"], D)
    if family == "sup":
        return Superposition(params["u"])
    return SqueezedSuperposition(params["u"], params["r"])


def _vectorized_variance(family: str, channel: ChannelSpec, z: float, D: float) -> Callable[..., np.ndarray]:
    """Variance as a numpy function of the free parameters (analytic route)."""
    if family == "ideal":
        if isinstance(channel, Loss):
            return lambda chi, r: analytic.ideal_loss_variance(chi, np.exp(-r), z, channel.eta)
        return lambda chi, r: analytic.ideal_dephase_variance(chi, np.exp(-r), z, channel.delta)
    if family == "mixed":
        if isinstance(channel, Loss):
            return lambda chi, r: analytic.mixed_loss_variance(chi, np.exp(-r), D, z, channel.eta)
        f = analytic.generated_variance("mixed", "dephase")
        return lambda chi, r: f(chi, np.exp(-r), D, z, channel.delta)
    if family == "sup":
        if isinstance(channel, Loss):
            return lambda u: analytic.superposition_loss_variance(u, z, channel.eta)
        return lambda u: analytic.superposition_dephase_variance(u, z, channel.delta)
    f = analytic.generated_variance("sqsup", channel.kind)
    s = channel.strength
    return lambda u, r: f(u, r, z, s)


def _fock_variance(problem: OptimizationProblem) -> Callable[..., float]:
    from .channels import apply_channel
    from .moments import nonlinear_variance

    cfg = as_config(problem.fock)

    def f(*vals):
        params = dict(zip(problem.names, (float(v) for v in vals)))
        spec = make_state(problem.family, params, problem.D)
        build = lambda c: nonlinear_variance(apply_channel(build_state(spec, c), problem.channel), problem.z)
        try:
            return with_escalation(build, cfg)
        except TruncationError:
            return math.inf

    return f


def _seed_points(bounds: Sequence[Tuple[float, float]], n: int) -> List[np.ndarray]:
    axes = []
    for lo, hi in bounds:
        pts = list(np.linspace(lo, hi, n))
        span = hi - lo
        # extra seeds hugging the box faces, where tiny optima hide (e.g. u -> 1)
        pts += [lo + 1e-3 * span, hi - 1e-3 * span, hi - 1e-2 * span, lo + 1e-2 * span]
        axes.append(sorted(set(pts)))
    return [np.array(p) for p in itertools.product(*axes)]


def minimize_xi(problem: OptimizationProblem, extra_seeds: Sequence[Sequence[float]] = (), n_refine: int = 3) -> OptimizationResult:
    """Coarse seed grid followed by bounded Nelder-Mead from the best seeds.

    Deterministic for a fixed problem; ``extra_seeds`` (e.g. a neighbouring
    grid point's optimum) are appended after the grid.
    """
    names = problem.names
    bounds = [problem.bounds[n] for n in names]
    z = problem.z
    bench = min_gaussian_variance(z)[0]
    seeds = _seed_points(bounds, problem.seeds)
    seeds += [np.clip(np.asarray(s, float), [b[0] for b in bounds], [b[1] for b in bounds]) for s in extra_seeds]

    if problem.route == "analytic":
        vec = _vectorized_variance(problem.family, problem.channel, z, problem.D)
        pts = np.array(seeds)
        with np.errstate(all="ignore"):
            seed_vals = np.asarray(vec(*pts.T), dtype=float)
        scalar = lambda *v: float(vec(*v))
    else:
        scalar = _fock_variance(problem)
        seed_vals = np.array([scalar(*s) for s in seeds])

    seed_vals = np.where(np.isfinite(seed_vals), seed_vals, np.inf)
    order = np.argsort(seed_vals, kind="stable")
    evaluations = len(seeds)
    best_x, best_f = None, math.inf
    for idx in order[:n_refine]:
        if not np.isfinite(seed_vals[idx]):
            continue
        res = minimize(
            lambda v: scalar(*v),
            seeds[idx],
            method="Nelder-Mead",
            bounds=bounds,
            options={"xatol": 1e-10, "fatol": 1e-15, "maxiter": 5000, "maxfev": 10000},
        )
        evaluations += res.nfev
        if res.fun < best_f:
            best_x, best_f = res.x, float(res.fun)
    if best_x is None:
        raise OptimizationError("all starts failed", {"z": z, "channel": repr(problem.channel)})
    params = {n: float(v) for n, v in zip(names, best_x)}
    return OptimizationResult(
        params=params,
        xi=best_f / bench,
        variance=best_f,
        evaluations=evaluations,
        seed_xis=list(seed_vals / bench),
    )


# ---------------------------------------------------------------------------
# boundaries


@dataclass
class BoundaryPoint:
    z: float
    critical_strength: float
    open_boundary: bool = False
    monotone: bool = True


@dataclass
class BoundaryCurve:
    family: str
    channel_kind: str
    D: float
    points: List[BoundaryPoint]
    omitted: List[float] = field(default_factory=list)
    flags: List[str] = field(default_factory=list)

    def as_arrays(self):
        z = np.array([p.z for p in self.points])
        s = np.array([p.critical_strength for p in self.points])
        return z, s


def optimized_xi(family: str, z: float, channel: ChannelSpec, D: float = 0.0, route: str = "analytic",
                 seeds: Optional[int] = None, extra_seeds=(), fock: Optional[FockConfig] = None) -> OptimizationResult:
    problem = OptimizationProblem(family, z, channel, route=route, D=D, seeds=seeds, fock=fock)
    return minimize_xi(problem, extra_seeds=extra_seeds)


def boundary(
    family: str,
    channel_kind: str,
    z_grid: Sequence[float],
    strength_bracket: Tuple[float, float] | None = None,
    D: float = 0.0,
    route: str = "analytic",
    seeds: Optional[int] = None,
    tol: float = 1e-4,
    fock: Optional[FockConfig] = None,
) -> BoundaryCurve:
    """Critical channel strength where the optimized xi reaches 1, per z.

    For loss the strength is sqrt(eta) and xi < 1 above it; for dephasing it is
    delta and xi < 1 below it. Monotonicity is sampled at 5 interior points;
    if it fails the point is flagged and bisection runs on the first bracket
    with a sign change.
    """
    if channel_kind == "loss":
        lo, hi = strength_bracket or (0.01, 1.0)
        good_side_high = True
    elif channel_kind == "dephase":
        lo, hi = strength_bracket or (0.0, 2.0)
        good_side_high = False
    else:
        raise DomainError(f"unknown channel kind {channel_kind!r}")
    if not lo < hi:
        raise DomainError("strength bracket must satisfy lo < hi")

    curve = BoundaryCurve(family, channel_kind, D, [])
    for z in sorted(z_grid):
        warm: list = []

        def f(s):
            res = optimized_xi(family, z, channel_from_strength(channel_kind, s), D, route, seeds, warm[-1:], fock)
            warm.append([res.params[n] for n in FREE_PARAMS[family]])
            return res.xi - 1.0

        samples = np.linspace(lo, hi, 7)
        vals = np.array([f(s) for s in samples])
        diffs = np.diff(vals)
        monotone = bool(np.all(diffs <= 1e-12)) if good_side_high else bool(np.all(diffs >= -1e-12))
        if not monotone:
            curve.flags.append(f"z={z:.6g}: xi not monotone in strength over the bracket")
        good = vals < 0
        if not good.any():
            curve.omitted.append(float(z))
            continue
        if good.all():
            edge = lo if good_side_high else hi
            curve.points.append(BoundaryPoint(float(z), float(edge), open_boundary=True, monotone=monotone))
            continue
        # first adjacent pair with a sign change, scanning from the good side
        idx = range(len(samples) - 1, 0, -1) if good_side_high else range(len(samples) - 1)
        for i in idx:
            j = i - 1 if good_side_high else i + 1
            if good[i] and not good[j]:
                a, b = samples[j], samples[i]  # a bad, b good
                break
        while abs(b - a) > tol:
            mid = 0.5 * (a + b)
            if f(mid) < 0:
                b = mid
            else:
                a = mid
        curve.points.append(BoundaryPoint(float(z), float(0.5 * (a + b)), monotone=monotone))
    return curve


# ---------------------------------------------------------------------------
# xi' maps


@dataclass
class XiPrimeMap:
    channel_kind: str
    z: np.ndarray
    strength: np.ndarray
    xi_prime: np.ndarray  # shape (len(z), len(strength))
    xi: np.ndarray


def xi_prime_map(z_grid: Sequence[float], strength_grid: Sequence[float], channel_kind: str,
                 family: str = "ideal", seeds: Optional[int] = None) -> XiPrimeMap:
    """Optimized-state variance over the channel-propagated Gaussian minimum."""
    z_grid = np.asarray(z_grid, float)
    strength_grid = np.asarray(strength_grid, float)
    out = np.empty((len(z_grid), len(strength_grid)))
    plain = np.empty_like(out)
    for i, z in enumerate(z_grid):
        warm: list = []
        for j, s in enumerate(strength_grid):
            ch = channel_from_strength(channel_kind, s)
            res = optimized_xi(family, z, ch, seeds=seeds, extra_seeds=warm[-1:])
            warm.append([res.params[n] for n in FREE_PARAMS[family]])
            out[i, j] = res.variance / channel_gaussian_min_variance(z, ch)
            plain[i, j] = res.xi
    return XiPrimeMap(channel_kind, z_grid, strength_grid, out, plain)
