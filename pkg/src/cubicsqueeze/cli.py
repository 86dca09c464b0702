"""Command-line front end: sweeps, boundary regions, optimal-parameter maps,
cross-check suite and Wigner grids.

Every command writes its data (CSV or JSON, optionally an SVG figure) plus a
``<command>.manifest.json`` sidecar with the schema version, library version,
the fully resolved configuration and diagnostics.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 verification failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__, svg
from .channels import Dephase, Loss, apply_channel, apply_dephasing, apply_loss, channel_from_strength
from .errors import CubicSqueezeError, DomainError, TruncationError
from .fock import DensityMatrix, FockConfig, IdealCubic, MixedCubic, SqueezedSuperposition, Superposition

log = logging.getLogger("cubicsqueeze")

SCHEMA_VERSION = 1
ENV_OUT = "CUBICSQUEEZE_OUT"
DEFAULT_OUT = "cubicsqueeze-out"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_VERIFY = 4

FAMILY_ALIASES = {
    "ideal": "ideal",
    "ideal-cubic": "ideal",
    "mixed": "mixed",
    "mixed-cubic": "mixed",
    "sup": "sup",
    "superposition": "sup",
    "sqsup": "sqsup",
    "squeezed-superposition": "sqsup",
}

DEFAULT_D_LIST = (0.0, 0.25, 0.5, 1.0)

COLUMNS = {
    "heatmap": ("z", "strength", "xi", "chi_opt", "g_opt", "route", "status"),
    "regions": ("family", "D", "z", "critical_strength", "open_boundary"),
    "inset": ("eta", "xi_ideal", "xi_sqsup"),
    "optmaps": ("z", "strength", "chi_opt", "g_opt"),
    "wigner": ("x", "p", "W"),
    "verify": ("check", "passed", "value", "tolerance", "detail"),
}


class ConfigError(Exception):
    """Invalid or inconsistent configuration (exit code 2)."""


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class Grid:
    min: float
    max: float
    count: int

    def __post_init__(self):
        if not (math.isfinite(self.min) and math.isfinite(self.max)):
            raise ConfigError("grid bounds must be finite")
        if self.count < 2:
            raise ConfigError(f"grid count must be >= 2, got {self.count}")
        if not self.min < self.max:
            raise ConfigError(f"grid needs min < max, got {self.min}:{self.max}")

    @classmethod
    def parse(cls, value) -> "Grid":
        if isinstance(value, Grid):
            return value
        if isinstance(value, str):
            parts = value.split(":")
        elif isinstance(value, (list, tuple)):
            parts = list(value)
        else:
            raise ConfigError(f"cannot parse grid {value!r}; expected 'min:max:count'")
        if len(parts) != 3:
            raise ConfigError(f"grid {value!r} must have the form min:max:count")
        try:
            lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError as exc:
            raise ConfigError(f"bad grid {value!r}: {exc}") from None
        return cls(lo, hi, n)

    def values(self) -> np.ndarray:
        return np.linspace(self.min, self.max, self.count)

    def text(self) -> str:
        return f"{fmt(self.min)}:{fmt(self.max)}:{self.count}"


COMMAND_DEFAULTS: dict[str, dict[str, Any]] = {
    "heatmap": {"family": "ideal", "channel": "loss", "z_grid": "0.05:2.5:25", "route": "analytic", "D": 0.0},
    "regions": {"family": "ideal,mixed,sup,sqsup", "channel": "loss", "z_grid": "0.1:2:20", "route": "analytic",
                "D_list": list(DEFAULT_D_LIST)},
    "optmaps": {"family": "ideal", "channel": "loss", "z_grid": "0.1:2:20", "route": "analytic"},
    "verify": {"cases": 5, "dim": 100, "inject_fault": None},
    "wigner": {"family": "ideal", "channel": None, "chi": 0.5, "r": 0.3, "u": 0.5, "D": 0.0, "eta": 1.0,
               "delta": 0.0, "x_grid": "-4:4:41", "p_grid": "-4:4:41", "dim": 40},
}

STRENGTH_DEFAULTS = {
    "heatmap": {"loss": "0.05:0.99:20", "dephase": "0:1.5:20"},
    "regions": {"loss": "0.01:1:25", "dephase": "0:2:25"},
    "optmaps": {"loss": "0:0.99:20", "dephase": "0:1.5:20"},
}

COMMON_DEFAULTS = {"format": "csv", "seed": 0, "jobs": 1, "dim": None}


def fmt(v) -> str:
    """Locale-independent serialization: floats with 12 significant digits."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".12g")
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, Grid):
        return v.text()
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return float(fmt(v)) if math.isfinite(v) else fmt(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config file must contain a JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}


def resolve_config(command: str, flags: dict, file_cfg: dict) -> dict:
    """Defaults < config file < command-line flags."""
    cfg: dict[str, Any] = dict(COMMON_DEFAULTS)
    cfg.update(COMMAND_DEFAULTS[command])
    cfg.update(file_cfg)
    cfg.update({k: v for k, v in flags.items() if v is not None})
    cfg["command"] = command
    cfg["out"] = cfg.get("out") or os.environ.get(ENV_OUT) or DEFAULT_OUT

    if cfg["format"] not in ("csv", "json", "svg"):
        raise ConfigError(f"unknown format {cfg['format']!r}")
    if cfg.get("route", "analytic") not in ("analytic", "fock"):
        raise ConfigError(f"unknown route {cfg['route']!r}")
    channel = cfg.get("channel")
    if channel is not None and channel not in ("loss", "dephase"):
        raise ConfigError(f"unknown channel {channel!r}")
    if cfg.get("dim") is not None:
        try:
            cfg["dim"] = int(cfg["dim"])
            FockConfig(dim=cfg["dim"])
        except (ValueError, CubicSqueezeError) as exc:
            raise ConfigError(f"invalid dim: {exc}") from None
    if int(cfg["jobs"]) < 1:
        raise ConfigError("jobs must be >= 1")

    families = [f.strip() for f in str(cfg.get("family", "ideal")).split(",") if f.strip()]
    for f in families:
        if f not in FAMILY_ALIASES:
            raise ConfigError(f"unknown family {f!r}; choose from {sorted(FAMILY_ALIASES)}")
    cfg["families"] = [FAMILY_ALIASES[f] for f in families]

    if command in STRENGTH_DEFAULTS:
        cfg["z_grid"] = Grid.parse(cfg["z_grid"])
        zs = cfg["z_grid"].values()
        from .optimize import Z_MIN

        if np.any(np.abs(zs) < Z_MIN):
            raise ConfigError(f"z grid reaches |z| < {Z_MIN}: xi is undefined at z = 0 (Gaussian benchmark vanishes)")
        cfg["strength_grid"] = Grid.parse(cfg.get("strength_grid") or STRENGTH_DEFAULTS[command][channel])
        s = cfg["strength_grid"]
        if s.min < 0:
            raise ConfigError("channel strength must be non-negative")
        if channel == "loss" and s.max > 1:
            raise ConfigError("loss strength is sqrt(eta) and must not exceed 1")
    if command == "regions":
        D_list = cfg.get("D_list")
        if isinstance(D_list, str):
            D_list = [float(v) for v in D_list.split(",") if v.strip()]
        if not D_list or any(d < 0 for d in D_list):
            raise ConfigError("D list must be non-empty and non-negative")
        cfg["D_list"] = [float(d) for d in D_list]
    if command == "wigner":
        cfg["x_grid"] = Grid.parse(cfg["x_grid"])
        cfg["p_grid"] = Grid.parse(cfg["p_grid"])
        if not 0 <= float(cfg["eta"]) <= 1 or float(cfg["delta"]) < 0:
            raise ConfigError("need 0 <= eta <= 1 and delta >= 0")
    return cfg


# ---------------------------------------------------------------------------
# output


class Writer:
    def __init__(self, cfg: dict):
        self.cfg = cfg
        self.dir = Path(cfg["out"])
        try:
            self.dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"output directory {self.dir} is not writable: {exc}") from None
        if not os.access(self.dir, os.W_OK):
            raise ConfigError(f"output directory {self.dir} is not writable")
        self.files: list[str] = []
        self.schemas: dict[str, list[str]] = {}

    def _write(self, name: str, text: str):
        path = self.dir / name
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        self.files.append(name)
        log.info("wrote %s", path)

    def table(self, stem: str, schema: str, rows: Sequence[Sequence]):
        cols = COLUMNS[schema]
        self.schemas[schema] = list(cols)
        if self.cfg["format"] == "json":
            payload = {"schema_version": SCHEMA_VERSION, "columns": list(cols),
                       "rows": [[_jsonable(v) for v in r] for r in rows]}
            self._write(f"{stem}.json", json.dumps(payload, indent=1) + "\n")
        else:
            lines = [",".join(cols)] + [",".join(fmt(v) for v in r) for r in rows]
            self._write(f"{stem}.csv", "\n".join(lines) + "\n")

    def figure(self, stem: str, text: str):
        if self.cfg["format"] == "svg":
            self._write(f"{stem}.svg", text)

    def manifest(self, diagnostics: dict):
        echo = {k: v for k, v in self.cfg.items() if k not in ("command",)}
        payload = {
            "schema_version": SCHEMA_VERSION,
            "library": "cubicsqueeze",
            "library_version": __version__,
            "command": self.cfg["command"],
            "config": _jsonable(echo),
            "columns": self.schemas,
            "files": list(self.files),
            "diagnostics": _jsonable(diagnostics),
        }
        name = f"{self.cfg['command']}.manifest.json"
        with open(self.dir / name, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(payload, indent=1, sort_keys=True) + "\n")


def _fock_cfg(cfg: dict) -> FockConfig | None:
    return FockConfig(dim=cfg["dim"]) if cfg.get("dim") else None


def _parallel_map(fn: Callable, tasks: list, jobs: int) -> list:
    """Order-preserving map; results are merged by task index."""
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


# ---------------------------------------------------------------------------
# heatmap


def _heatmap_row(task) -> list[tuple]:
    family, z, strengths, kind, route, D, dim = task
    from .optimize import optimized_xi

    fock = FockConfig(dim=dim) if dim else None
    rows, warm = [], []
    for s in strengths:
        try:
            res = optimized_xi(family, z, channel_from_strength(kind, s), D=D, route=route,
                               extra_seeds=warm[-1:], fock=fock)
            warm.append(list(res.params.values()))
            chi = res.params.get("chi", math.nan)
            g = res.g if res.g is not None else math.nan
            rows.append((z, s, res.xi, chi, g, route, "ok"))
        except CubicSqueezeError as exc:
            rows.append((z, s, math.nan, math.nan, math.nan, route, type(exc).__name__))
    return rows


def cmd_heatmap(cfg: dict) -> int:
    family = cfg["families"][0]
    kind = cfg["channel"]
    zs, ss = cfg["z_grid"].values(), cfg["strength_grid"].values()
    tasks = [(family, float(z), [float(s) for s in ss], kind, cfg["route"], float(cfg["D"]), cfg.get("dim"))
             for z in zs]
    rows = [r for chunk in _parallel_map(_heatmap_row, tasks, int(cfg["jobs"])) for r in chunk]
    w = Writer(cfg)
    w.table("heatmap", "heatmap", rows)
    xi = np.array([r[2] for r in rows], float).reshape(len(zs), len(ss))
    label = "sqrt(eta)" if kind == "loss" else "delta"
    w.figure("heatmap", svg.heatmap(zs, ss, np.log10(xi), xlabel="z", ylabel=label,
                                    title=f"log10 xi, {family} under {kind} (contour: xi = 1)",
                                    contour=0.0, center=0.0))
    failed = [r for r in rows if r[-1] != "ok"]
    w.manifest({"points": len(rows), "failed_points": len(failed),
                "failures": sorted({r[-1] for r in failed}), "min_xi": float(np.nanmin(xi)) if np.isfinite(xi).any() else None})
    return EXIT_NUMERIC if failed else EXIT_OK


# ---------------------------------------------------------------------------
# regions


def _boundary_task(task):
    family, kind, z, bracket, D, route, dim = task
    from .optimize import boundary

    fock = FockConfig(dim=dim) if dim else None
    try:
        return boundary(family, kind, [z], bracket, D=D, route=route, fock=fock), None
    except CubicSqueezeError as exc:
        return None, f"z={z:.6g}: {type(exc).__name__}: {exc}"


def _inset_rows(strengths, route) -> list[tuple]:
    from .optimize import optimized_xi

    z = 1 / math.sqrt(2)
    rows, warm_i, warm_s = [], [], []
    for s in strengths:
        eta = float(s) ** 2
        if eta <= 0:
            continue
        ch = Loss(eta)
        ri = optimized_xi("ideal", z, ch, route=route, extra_seeds=warm_i[-1:])
        rs = optimized_xi("sqsup", z, ch, route=route, extra_seeds=warm_s[-1:])
        warm_i.append(list(ri.params.values()))
        warm_s.append(list(rs.params.values()))
        rows.append((eta, ri.xi, rs.xi))
    return rows


def cmd_regions(cfg: dict) -> int:
    kind = cfg["channel"]
    zs = [float(z) for z in cfg["z_grid"].values()]
    sg = cfg["strength_grid"]
    bracket = (max(sg.min, 1e-3) if kind == "loss" else sg.min, sg.max)
    combos = []
    for fam in cfg["families"]:
        for D in (cfg["D_list"] if fam == "mixed" else [0.0]):
            combos.append((fam, D))
    tasks = [(fam, kind, z, bracket, D, cfg["route"], cfg.get("dim")) for fam, D in combos for z in zs]
    results = _parallel_map(_boundary_task, tasks, int(cfg["jobs"]))

    w = Writer(cfg)
    diag: dict[str, Any] = {"curves": {}, "errors": []}
    curves_for_plot = []
    for k, (fam, D) in enumerate(combos):
        chunk = results[k * len(zs):(k + 1) * len(zs)]
        rows, omitted, flags = [], [], []
        for curve, err in chunk:
            if err:
                diag["errors"].append(f"{fam} D={D:g} {err}")
                continue
            omitted += curve.omitted
            flags += curve.flags
            rows += [(fam, D, p.z, p.critical_strength, p.open_boundary) for p in curve.points]
        stem = f"regions_{fam}" + (f"_D{fmt(D)}" if fam == "mixed" else "")
        w.table(stem, "regions", rows)
        diag["curves"][stem] = {"points": len(rows), "omitted_z": omitted, "monotonicity_flags": flags}
        label = fam + (f" D={D:g}" if fam == "mixed" else "")
        curves_for_plot.append((label, [r[2] for r in rows], [r[3] for r in rows]))

    if kind == "loss":
        try:
            inset = _inset_rows(sg.values(), cfg["route"])
            w.table("regions_inset", "inset", inset)
            w.figure("regions_inset", svg.line_plot(
                [("ideal", [r[0] for r in inset], [r[1] for r in inset]),
                 ("squeezed superposition", [r[0] for r in inset], [r[2] for r in inset])],
                xlabel="eta", ylabel="xi at z = 1/sqrt2", title="optimized xi vs eta"))
        except CubicSqueezeError as exc:
            diag["errors"].append(f"inset: {type(exc).__name__}: {exc}")

    ylabel = "critical sqrt(eta)" if kind == "loss" else "critical delta"
    fill = 1.0 if kind == "loss" else 0.0
    w.figure("regions", svg.line_plot(curves_for_plot, xlabel="z", ylabel=ylabel,
                                      title=f"xi < 1 regions under {kind}", fill_to=fill))
    w.manifest(diag)
    return EXIT_NUMERIC if diag["errors"] else EXIT_OK


# ---------------------------------------------------------------------------
# optimal-parameter maps


def cmd_optmaps(cfg: dict) -> int:
    from .analytic import optimal_loss_params
    from .optimize import optimized_xi

    kind = cfg["channel"]
    zs, ss = cfg["z_grid"].values(), cfg["strength_grid"].values()
    rows, failures = [], []
    for z in zs:
        warm = []
        for s in ss:
            z, s = float(z), float(s)
            try:
                if kind == "loss":
                    opt = optimal_loss_params(z, s * s)
                    rows.append((z, s, opt.chi, opt.g))
                else:
                    res = optimized_xi("ideal", z, Dephase(s), route=cfg["route"], extra_seeds=warm[-1:],
                                       fock=_fock_cfg(cfg))
                    warm.append(list(res.params.values()))
                    rows.append((z, s, res.params["chi"], res.g))
            except CubicSqueezeError as exc:
                failures.append(f"z={z:.6g} s={s:.6g}: {type(exc).__name__}")
                rows.append((z, s, math.nan, math.nan))
    w = Writer(cfg)
    w.table("optmaps", "optmaps", rows)
    label = "sqrt(eta)" if kind == "loss" else "delta"
    shape = (len(zs), len(ss))
    w.figure("optmaps_chi", svg.heatmap(zs, ss, np.array([r[2] for r in rows]).reshape(shape),
                                        xlabel="z", ylabel=label, title="optimal chi"))
    w.figure("optmaps_g", svg.heatmap(zs, ss, np.array([r[3] for r in rows]).reshape(shape),
                                      xlabel="z", ylabel=label, title="optimal g"))
    w.manifest({"method": "closed form" if kind == "loss" else "minimize_xi", "failures": failures})
    return EXIT_NUMERIC if failures else EXIT_OK


# ---------------------------------------------------------------------------
# verification suite


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""


def _rel_err(a, b) -> float:
    return abs(a - b) / max(1.0, abs(b))


def _oracle_cases(rng, n):
    for _ in range(n):
        yield (float(rng.uniform(-0.5, 0.5)), float(rng.uniform(-0.3, 0.3)),
               float(rng.uniform(0.2, 2.0)), float(rng.uniform(0.05, 1.0)))


def _check_analytic_vs_fock(kind: str, cfg: dict, rng, loss_formula) -> Check:
    from .analytic import ideal_dephase_variance
    from .fock import ideal_cubic_state
    from .moments import nonlinear_variance

    fock = FockConfig(dim=cfg["dim"])
    worst, detail = 0.0, ""
    for chi, r, z, s in _oracle_cases(rng, int(cfg["cases"])):
        g = math.exp(-r)
        try:
            rho = ideal_cubic_state(chi, r, fock)
        except TruncationError as exc:
            return Check(f"analytic_vs_fock_{kind}", False, math.nan, 1e-6,
                         f"under-truncated at dim={fock.dim} (chi={chi:.3g}, r={r:.3g}): {exc}")
        if kind == "loss":
            eta = s
            num = nonlinear_variance(apply_loss(rho, eta), z)
            ref = float(loss_formula(chi, g, z, eta))
        else:
            delta = 1.5 * s
            num = nonlinear_variance(apply_dephasing(rho, delta), z)
            ref = float(ideal_dephase_variance(chi, g, z, delta))
        err = _rel_err(ref, num)
        if err > worst:
            worst, detail = err, f"worst at chi={chi:.4g}, g={g:.4g}, z={z:.4g}, strength={s:.4g}"
    return Check(f"analytic_vs_fock_{kind}", worst < 1e-6, worst, 1e-6, detail)


def _check_channels(rng) -> list[Check]:
    dim = 30
    worst_tr, worst_psd, worst_semi, worst_add = 0.0, 0.0, 0.0, 0.0
    for _ in range(10):
        psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        psi *= np.exp(-0.15 * np.arange(dim))
        psi /= np.linalg.norm(psi)
        rho = DensityMatrix.from_ket(psi)
        e1, e2 = rng.uniform(0.05, 1, 2)
        d1, d2 = rng.uniform(0, 1.2, 2)
        L = apply_loss(rho, e1)
        P = apply_dephasing(rho, d1)
        worst_tr = max(worst_tr, abs(L.trace() - 1), abs(P.trace() - 1))
        worst_psd = max(worst_psd, -L.min_eigenvalue(), -P.min_eigenvalue())
        worst_semi = max(worst_semi, float(np.abs(apply_loss(L, e2).elements - apply_loss(rho, e1 * e2).elements).max()))
        worst_add = max(worst_add, float(np.abs(apply_dephasing(P, d2).elements
                                                - apply_dephasing(rho, math.hypot(d1, d2)).elements).max()))
    return [
        Check("channel_trace_preservation", worst_tr < 1e-10, worst_tr, 1e-10),
        Check("channel_positivity", worst_psd < 1e-10, worst_psd, 1e-10),
        Check("loss_semigroup", worst_semi < 1e-10, worst_semi, 1e-10),
        Check("dephasing_additivity", worst_add < 1e-12, worst_add, 1e-12),
    ]


def _check_benchmarks() -> list[Check]:
    from .gaussian import lossy_gaussian_min_variance, min_gaussian_variance, min_gaussian_variance_numeric

    worst_v = worst_A = 0.0
    for z in (0.1, 0.3, 1 / math.sqrt(2), 1.0, 2.5):
        v, A = min_gaussian_variance(z)
        vn, An = min_gaussian_variance_numeric(z)
        worst_v = max(worst_v, abs(v - vn) / v, abs(lossy_gaussian_min_variance(z, 1.0) - v) / v)
        # the argmin of a quadratic minimum is only resolved to ~sqrt(machine eps)
        worst_A = max(worst_A, abs(A - An) / A)
    v, A = min_gaussian_variance(1 / math.sqrt(2))
    vac = max(abs(v - 0.75), abs(A - 0.5))
    return [
        Check("benchmark_closed_form_vs_numeric", worst_v < 1e-10, worst_v, 1e-10),
        Check("benchmark_argmin_closed_form_vs_numeric", worst_A < 1e-6, worst_A, 1e-6),
        Check("vacuum_landmark", vac < 1e-10, vac, 1e-10),
    ]


def _check_xi_prime() -> list[Check]:
    from .optimize import xi_prime_map

    zs = np.linspace(0.1, 2.0, 5)
    m_loss = xi_prime_map(zs, np.linspace(0.1, 0.95, 5), "loss")
    m_deph = xi_prime_map(zs, np.linspace(0.05, 1.0, 5), "dephase")
    a, b = float(m_loss.xi_prime.max()), float(m_deph.xi_prime.max())
    return [
        Check("xi_prime_loss_below_one", a < 1, a, 1.0, "max over 5x5 grid"),
        Check("xi_prime_dephase_at_most_one", b <= 1 + 1e-6, b, 1 + 1e-6, "max over 5x5 grid"),
    ]


def _check_closed_forms(rng) -> list[Check]:
    from .analytic import (
        dephasing_consistency_report,
        generated_variance,
        ideal_loss_variance,
        mixed_loss_variance,
        mixed_loss_variance_half_noise,
    )

    out = []
    rep = dephasing_consistency_report()
    variant = dephasing_consistency_report(variant=True)
    out.append(Check("dephasing_formula_regeneration", rep["consistent"], len(rep["mismatches"]), 0,
                     f"{rep['terms_compared']} terms; sign-variant form differs in "
                     f"{len(variant['mismatches'])}: " + "; ".join(m["monomial"] for m in variant["mismatches"])))
    gen_mixed = generated_variance("mixed", "loss")
    gen_ideal = generated_variance("ideal", "loss")
    worst_m = worst_p = worst_i = 0.0
    for _ in range(20):
        chi, g, D, z, eta = (rng.uniform(-1, 1), rng.uniform(0.5, 1.5), rng.uniform(0, 1),
                             rng.uniform(0.1, 2), rng.uniform(0.05, 1))
        ref = float(gen_mixed(chi, g, D, z, math.sqrt(eta)))
        worst_m = max(worst_m, _rel_err(float(mixed_loss_variance(chi, g, D, z, eta)), ref))
        worst_p = max(worst_p, _rel_err(float(mixed_loss_variance_half_noise(chi, g, D / 2, z, eta)), ref))
        worst_i = max(worst_i, _rel_err(float(ideal_loss_variance(chi, g, z, eta)),
                                        float(gen_ideal(chi, g, z, math.sqrt(eta)))))
    out.append(Check("loss_formula_regeneration", worst_i < 1e-10, worst_i, 1e-10))
    out.append(Check("mixed_loss_formula_regeneration", worst_m < 1e-10, worst_m, 1e-10,
                     f"half-noise form matches with D -> 2D (max rel. err {worst_p:.2e})"))
    return out


def _check_optimal_law() -> Check:
    from .analytic import optimal_loss_params
    from .optimize import optimized_xi

    worst = 0.0
    for z, eta in ((0.3, 0.2), (1.0, 0.5), (1.8, 0.85)):
        res = optimized_xi("ideal", z, Loss(eta))
        opt = optimal_loss_params(z, eta)
        worst = max(worst, abs(res.params["chi"] - opt.chi), abs(res.g - opt.g))
    return Check("optimal_loss_parameters", worst < 1e-5, worst, 1e-5)


def run_checks(cfg: dict) -> list[Check]:
    from .analytic import ideal_loss_variance

    rng = np.random.default_rng(int(cfg["seed"]))
    loss_formula = ideal_loss_variance
    if cfg.get("inject_fault") == "loss-closed-form":
        # mutation sanity: perturb one coefficient of the closed form
        def loss_formula(chi, g, z, eta):
            return ideal_loss_variance(chi, g, z, eta) + 1e-3 * z**2 * eta * (1 - eta) / g**2
    elif cfg.get("inject_fault"):
        raise ConfigError(f"unknown fault {cfg['inject_fault']!r}; available: loss-closed-form")

    checks: list[Check] = []
    for name, run in (
        ("analytic_vs_fock_loss", lambda: [_check_analytic_vs_fock("loss", cfg, rng, loss_formula)]),
        ("analytic_vs_fock_dephase", lambda: [_check_analytic_vs_fock("dephase", cfg, rng, loss_formula)]),
        ("channels", lambda: _check_channels(rng)),
        ("benchmarks", _check_benchmarks),
        ("xi_prime", _check_xi_prime),
        ("closed_forms", lambda: _check_closed_forms(rng)),
        ("optimal_law", lambda: [_check_optimal_law()]),
    ):
        try:
            checks += run()
        except CubicSqueezeError as exc:
            checks.append(Check(name, False, math.nan, math.nan, f"{type(exc).__name__}: {exc}"))
    return checks


def cmd_verify(cfg: dict) -> int:
    checks = run_checks(cfg)
    w = Writer(cfg)
    w.table("verify", "verify", [(c.name, c.passed, c.value, c.tolerance, c.detail) for c in checks])
    failed = [c.name for c in checks if not c.passed]
    w.manifest({"checks": len(checks), "failed": failed})
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {fmt(c.value)} (tol {fmt(c.tolerance)}) {c.detail}".rstrip())
    return EXIT_VERIFY if failed else EXIT_OK


# ---------------------------------------------------------------------------
# Wigner grids


def _wigner_state(cfg: dict) -> DensityMatrix:
    from .fock import build_state, with_escalation

    fam = cfg["families"][0]
    chi, r, u, D = float(cfg["chi"]), float(cfg["r"]), float(cfg["u"]), float(cfg["D"])
    spec = {"ideal": lambda: IdealCubic(chi, r), "mixed": lambda: MixedCubic(chi, r, D),
            "sup": lambda: Superposition(u), "sqsup": lambda: SqueezedSuperposition(u, r)}[fam]()
    rho = with_escalation(lambda c: build_state(spec, c), FockConfig(dim=int(cfg["dim"])))
    if cfg.get("channel") == "loss":
        rho = apply_channel(rho, Loss(float(cfg["eta"])))
    elif cfg.get("channel") == "dephase":
        rho = apply_channel(rho, Dephase(float(cfg["delta"])))
    return rho


def cmd_wigner(cfg: dict) -> int:
    from scipy.integrate import trapezoid

    from .fock import wigner_grid

    rho = _wigner_state(cfg)
    xs, ps = cfg["x_grid"].values(), cfg["p_grid"].values()
    W = wigner_grid(rho, xs, ps)
    w = Writer(cfg)
    w.table("wigner", "wigner", [(float(x), float(p), W[i, j]) for i, x in enumerate(xs) for j, p in enumerate(ps)])
    w.figure("wigner", svg.heatmap(xs, ps, W, xlabel="x", ylabel="p", title="Wigner function",
                                   contour=0.0, center=0.0))
    w.manifest({"dim": rho.dim, "trace": rho.trace(), "W_min": float(W.min()), "W_max": float(W.max()),
                "normalization_on_window": float(trapezoid(trapezoid(W, ps, axis=1), xs))})
    return EXIT_OK


COMMANDS = {
    "heatmap": cmd_heatmap,
    "regions": cmd_regions,
    "optmaps": cmd_optmaps,
    "verify": cmd_verify,
    "wigner": cmd_wigner,
}


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its entries")
    common.add_argument("--family", help="state family (ideal, mixed, sup, sqsup); comma list for regions")
    common.add_argument("--channel", choices=("loss", "dephase"))
    common.add_argument("--z-grid", dest="z_grid", metavar="MIN:MAX:COUNT")
    common.add_argument("--strength-grid", dest="strength_grid", metavar="MIN:MAX:COUNT",
                        help="sqrt(eta) for loss, delta for dephasing")
    common.add_argument("--route", choices=("analytic", "fock"))
    common.add_argument("--dim", type=int, help="Fock cutoff")
    common.add_argument("--out", help=f"output directory (default ${ENV_OUT} or ./{DEFAULT_OUT})")
    common.add_argument("--format", choices=("csv", "json", "svg"))
    common.add_argument("--seed", type=int)
    common.add_argument("--jobs", type=int, help="worker processes for grid sweeps")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="cubicsqueeze", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("heatmap", parents=[common], help="optimized xi over a (z, strength) grid").add_argument(
        "--D", dest="D", type=float, help="displacement noise for the mixed family")
    p = sub.add_parser("regions", parents=[common], help="xi = 1 boundaries per family")
    p.add_argument("--D-list", dest="D_list", help="comma-separated noise values for the mixed family")
    sub.add_parser("optmaps", parents=[common], help="optimal chi and g maps for the ideal cubic state")
    p = sub.add_parser("verify", parents=[common], help="run the cross-check suite")
    p.add_argument("--cases", type=int, help="random cases per analytic-vs-Fock check")
    p.add_argument("--inject-fault", dest="inject_fault", help="mutation test: loss-closed-form")
    p = sub.add_parser("wigner", parents=[common], help="Wigner function on an (x, p) grid")
    for name in ("chi", "r", "u", "D", "eta", "delta"):
        p.add_argument(f"--{name}", dest=name, type=float)
    p.add_argument("--x-grid", dest="x_grid", metavar="MIN:MAX:COUNT")
    p.add_argument("--p-grid", dest="p_grid", metavar="MIN:MAX:COUNT")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse usage errors exit with 2 already; keep --help/--version at 0
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "verbose")}
    try:
        cfg = resolve_config(args.command, flags, load_config_file(args.config))
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CubicSqueezeError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
