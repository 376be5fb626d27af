"""Command-line front end.

One experiment is one JSON config file; the command line only picks the
subcommand and output directory, so every run is reproducible from a single
artifact.  Subcommands:

* ``rearrange``: write a function, its rearrangement, and the per-level
  equimeasurability report.
* ``chain``: run one inequality chain and write the report.
* ``convergence``: run one chain at several resolutions.
* ``profile``: dump per-cell columns of derived functions (1-D only).

Exit codes: 0 when all verdicts pass or are degenerate, 1 on a chain
violation, 2 on configuration or precondition errors.  The environment
variable ``REARRANGE_PL_THREADS`` caps worker threads (0 = auto).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .convexsets import Ball, Box, Polygon, bmi_check, gaussian_isoperimetry_check
from .errors import ConfigError, PreconditionError, RearrangeLabError
from .grid import (
    GAUSSIAN,
    LEBESGUE,
    AllValues,
    ExpLinear,
    GaussianBump,
    Grid,
    GridFunction,
    HalfSpaceIndicator,
    IndicatorBody,
    LogConcaveRandom,
    PhiAffine,
    PiecewiseRandom,
    Quantile,
    make_function,
    superlevel_set,
    threshold_ladder,
    write_grid_function,
)
from .harness import (
    ToleranceModel,
    bbl_chain,
    convergence_study,
    curved_pli_check,
    ehrhard_functional_chain,
    integrated_lsi_chain,
    minimal_admissible_u,
    pli_chain,
    polar_pli_chain,
    superlevel_dominance_check,
)
from .means import Clamp, Identity, PiecewiseMonotone, Power
from .rearrange import (
    convex_body_rearrangement,
    equimeasurability_report,
    gaussian_halfspace_rearrangement,
    rearrange_function,
)
from .supconv import ComboMap, gaussian_sup_convolve, sup_convolve_direct
from .means import GeometricMean

CHAIN_KINDS = (
    "pli",
    "bbl",
    "ehrhard",
    "polar",
    "lsi",
    "curved",
    "dominance",
    "bmi",
    "isoperimetry",
)

_ANALYTIC_FAMILIES = (
    GaussianBump,
    IndicatorBody,
    ExpLinear,
    HalfSpaceIndicator,
    PhiAffine,
)


# ---------------------------------------------------------------------------
# Config parsing


def _need(cfg: dict, key: str, where: str):
    if key not in cfg:
        raise ConfigError("missing required field", field=f"{where}.{key}" if where else key)
    return cfg[key]


def _parse_grid(cfg, where) -> Grid:
    if not isinstance(cfg, dict):
        raise ConfigError("grid must be an object", field=where)
    try:
        return Grid(
            tuple(_need(cfg, "lo", where)),
            tuple(_need(cfg, "hi", where)),
            tuple(_need(cfg, "n", where)),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), field=where) from None


def _parse_body(cfg, where):
    kind = _need(cfg, "kind", where)
    try:
        if kind == "ball":
            return Ball(float(_need(cfg, "r", where)))
        if kind == "box":
            return Box(tuple(_need(cfg, "halfwidths", where)))
        if kind == "polygon":
            return Polygon(
                tuple(tuple(v) for v in _need(cfg, "vertices", where)),
                symmetric=bool(cfg.get("symmetric", False)),
            )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), field=where) from None
    raise ConfigError(f"unknown body kind {kind!r}", field=f"{where}.kind")


def _parse_family(cfg, where, base_seed: int):
    fam = _need(cfg, "family", where)
    try:
        if fam == "gaussian_bump":
            return GaussianBump(
                tuple(_need(cfg, "center", where)),
                float(_need(cfg, "sigma", where)),
                float(cfg.get("amplitude", 1.0)),
            )
        if fam == "indicator":
            return IndicatorBody(
                _parse_body(_need(cfg, "body", where), f"{where}.body"),
                tuple(cfg.get("shift", ())),
            )
        if fam == "exp_linear":
            rate = _need(cfg, "rate", where)
            rate = tuple(rate) if isinstance(rate, (list, tuple)) else (float(rate),)
            return ExpLinear(rate, float(_need(cfg, "clip", where)))
        if fam == "piecewise_random":
            return PiecewiseRandom(
                int(_need(cfg, "levels", where)),
                base_seed + int(cfg.get("seed", 0)),
            )
        if fam == "log_concave_random":
            return LogConcaveRandom(base_seed + int(cfg.get("seed", 0)))
        if fam == "halfspace":
            return HalfSpaceIndicator(
                tuple(_need(cfg, "normal", where)), float(_need(cfg, "offset", where))
            )
        if fam == "phi_affine":
            slope = _need(cfg, "slope", where)
            slope = tuple(slope) if isinstance(slope, (list, tuple)) else (float(slope),)
            return PhiAffine(float(_need(cfg, "intercept", where)), slope)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), field=where) from None
    raise ConfigError(f"unknown function family {fam!r}", field=f"{where}.family")


def _parse_psi(cfg, where):
    if cfg is None:
        return Identity()
    kind = _need(cfg, "kind", where)
    if kind == "identity":
        return Identity()
    if kind == "power":
        return Power(float(_need(cfg, "q", where)))
    if kind == "clamp":
        return Clamp(float(_need(cfg, "c", where)))
    if kind == "piecewise":
        return PiecewiseMonotone(
            tuple(_need(cfg, "xs", where)), tuple(_need(cfg, "ys", where))
        )
    raise ConfigError(f"unknown psi kind {kind!r}", field=f"{where}.kind")


def _parse_ladder(cfg, where):
    if cfg is None:
        return AllValues()
    strategy = _need(cfg, "strategy", where)
    if strategy == "all_values":
        return AllValues()
    if strategy == "quantile":
        measure = cfg.get("measure", "lebesgue")
        if measure not in ("lebesgue", "gaussian"):
            raise ConfigError("measure must be lebesgue or gaussian", field=f"{where}.measure")
        return Quantile(int(_need(cfg, "m", where)), LEBESGUE if measure == "lebesgue" else GAUSSIAN)
    raise ConfigError(f"unknown ladder strategy {strategy!r}", field=f"{where}.strategy")


def _parse_tolerance(cfg, where) -> ToleranceModel:
    if cfg is None:
        return ToleranceModel()
    try:
        return ToleranceModel(
            float(cfg.get("c0", 1e-9)), float(cfg.get("c1", 4.0))
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), field=where) from None


class Experiment:
    """Validated experiment configuration."""

    def __init__(self, cfg: dict, seed_override=None, resolution_override=None):
        if not isinstance(cfg, dict):
            raise ConfigError("config root must be a JSON object")
        self.raw = cfg
        self.seed = int(cfg.get("seed", 0)) if seed_override is None else int(seed_override)
        grid_cfg = dict(_need(cfg, "grid", ""))
        if resolution_override is not None:
            dim = len(grid_cfg.get("n", [])) or 1
            grid_cfg["n"] = [int(resolution_override)] * dim
        self.grid = _parse_grid(grid_cfg, "grid")
        self.target_grid = (
            _parse_grid(cfg["target_grid"], "target_grid") if "target_grid" in cfg else None
        )
        self.families = [
            _parse_family(fc, f"functions[{i}]", self.seed)
            for i, fc in enumerate(cfg.get("functions", []))
        ]
        self.set_families = [
            _parse_family(fc, f"sets[{i}]", self.seed)
            for i, fc in enumerate(cfg.get("sets", []))
        ]
        self.ladder = _parse_ladder(cfg.get("ladder"), "ladder")
        self.tolerance = _parse_tolerance(cfg.get("tolerance"), "tolerance")
        self.rearrangement_cfg = cfg.get("rearrangement")
        self.chain_cfg = cfg.get("chain")
        self.resolutions = cfg.get("resolutions")
        self.profile_cfg = cfg.get("profile")

    def functions(self, grid: Grid | None = None):
        grid = grid or self.grid
        return [make_function(fam, grid) for fam in self.families]

    def sets(self, grid: Grid | None = None):
        grid = grid or self.grid
        return [superlevel_set(make_function(fam, grid), 0.5) for fam in self.set_families]

    def rearrangement(self, grid: Grid | None = None):
        grid = grid or self.grid
        cfg = self.rearrangement_cfg
        if cfg is None:
            raise ConfigError("missing required field", field="rearrangement")
        kind = _need(cfg, "kind", "rearrangement")
        if kind == "convex_body":
            body = _parse_body(_need(cfg, "body", "rearrangement"), "rearrangement.body")
            return convex_body_rearrangement(body, grid)
        if kind == "gaussian_halfspace":
            return gaussian_halfspace_rearrangement(grid, self.target_grid)
        raise ConfigError(f"unknown rearrangement kind {kind!r}", field="rearrangement.kind")

    def require_analytic_families(self):
        for i, fam in enumerate(self.families):
            if not isinstance(fam, _ANALYTIC_FAMILIES):
                raise ConfigError(
                    "family cannot be re-sampled at other resolutions",
                    field=f"functions[{i}].family",
                )


# ---------------------------------------------------------------------------
# Chain dispatch


def _levels_from(cfg, f: GridFunction, where: str):
    if isinstance(cfg, (list, tuple)):
        return [float(s) for s in cfg]
    if isinstance(cfg, dict):
        count = int(_need(cfg, "count", where))
        lo = float(cfg.get("lo_frac", 0.1))
        hi = float(cfg.get("hi_frac", 0.9))
        return list(np.linspace(lo, hi, count) * f.max())
    raise ConfigError("levels must be a list or a {count, lo_frac, hi_frac} object", field=where)


def run_chain(exp: Experiment, grid: Grid | None = None):
    cfg = exp.chain_cfg
    if cfg is None:
        raise ConfigError("missing required field", field="chain")
    kind = _need(cfg, "kind", "chain")
    if kind not in CHAIN_KINDS:
        raise ConfigError(f"unknown chain kind {kind!r}", field="chain.kind")
    grid = grid or exp.grid
    tol = exp.tolerance
    method = cfg.get("method", "auto")

    if kind in ("pli", "bbl", "polar"):
        fns = exp.functions(grid)
        if len(fns) != 2:
            raise ConfigError(f"chain {kind!r} needs exactly two functions", field="functions")
        f, g = fns
        t = float(_need(cfg, "t", "chain"))
        spec = exp.rearrangement(grid)
        if kind == "pli":
            psi = _parse_psi(cfg.get("psi"), "chain.psi")
            return pli_chain(
                f, g, t, spec, psi,
                ladder_strategy=exp.ladder, method=method, tolerance=tol,
            )
        if kind == "bbl":
            p = _need(cfg, "p", "chain")
            p = math.inf if p == "inf" else (-math.inf if p == "-inf" else float(p))
            return bbl_chain(
                f, g, t, p, spec,
                ladder_strategy=exp.ladder, method=method, tolerance=tol,
            )
        lam = float(_need(cfg, "lam", "chain"))
        measure_name = cfg.get("measure", "lebesgue")
        if measure_name not in ("lebesgue", "gaussian"):
            raise ConfigError("measure must be lebesgue or gaussian", field="chain.measure")
        measure = LEBESGUE if measure_name == "lebesgue" else GAUSSIAN
        return polar_pli_chain(
            f, g, t, lam, measure, exp.rearrangement(grid),
            ladder_strategy=exp.ladder, method=method, tolerance=tol,
        )

    if kind == "ehrhard":
        fns = exp.functions(grid)
        if len(fns) < 2:
            raise ConfigError("ehrhard chain needs at least two functions", field="functions")
        weights = tuple(_need(cfg, "weights", "chain"))
        index_set = cfg.get("index_set")
        return ehrhard_functional_chain(
            fns, weights, index_set,
            target_grid=exp.target_grid, ladder_strategy=exp.ladder,
            method=method, tolerance=tol,
        )

    if kind == "lsi":
        fns = exp.functions(grid)
        if len(fns) != 1:
            raise ConfigError("lsi chain needs exactly one function", field="functions")
        lam = float(_need(cfg, "lam", "chain"))
        spec = gaussian_halfspace_rearrangement(grid, exp.target_grid)
        return integrated_lsi_chain(
            fns[0], lam, spec, ladder_strategy=exp.ladder, tolerance=tol
        )

    if kind == "dominance":
        fns = exp.functions(grid)
        if len(fns) != 1:
            raise ConfigError("dominance check needs exactly one function", field="functions")
        lam = float(_need(cfg, "lam", "chain"))
        levels = _levels_from(_need(cfg, "levels", "chain"), fns[0], "chain.levels")
        spec = gaussian_halfspace_rearrangement(grid, exp.target_grid)
        return superlevel_dominance_check(
            fns[0], lam, levels, spec, ladder_strategy=exp.ladder, tolerance=tol
        )

    if kind == "curved":
        fns = exp.functions(grid)
        t = float(_need(cfg, "t", "chain"))
        if cfg.get("u", "minimal") == "minimal":
            if len(fns) != 2:
                raise ConfigError(
                    "curved chain with minimal u needs exactly two functions",
                    field="functions",
                )
            v, w = fns
            u = minimal_admissible_u(v, w, t)
        else:
            if len(fns) != 3:
                raise ConfigError("curved chain needs u, v, w functions", field="functions")
            u, v, w = fns
        return curved_pli_check(u, v, w, t, tolerance=tol)

    sets = exp.sets(grid)
    if kind == "bmi":
        if len(sets) != 2:
            raise ConfigError("bmi check needs exactly two sets", field="sets")
        t = float(_need(cfg, "t", "chain"))
        return bmi_check(sets[0], sets[1], t, exp.rearrangement(grid), tolerance=tol)
    if len(sets) != 1:
        raise ConfigError("isoperimetry check needs exactly one set", field="sets")
    r = float(_need(cfg, "r", "chain"))
    return gaussian_isoperimetry_check(sets[0], r, tolerance=tol)


# ---------------------------------------------------------------------------
# Output helpers


def _write_report(report, out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "report.json", "w", encoding="ascii") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out_dir / "report.csv", "w", encoding="ascii", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerows(report.csv_rows())


def _worker_count() -> int:
    raw = os.environ.get("REARRANGE_PL_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError("REARRANGE_PL_THREADS must be an integer") from None
    if n == 0:
        return min(4, os.cpu_count() or 1)
    return max(1, n)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_rearrange(exp: Experiment, out_dir: Path) -> int:
    fns = exp.functions()
    if len(fns) != 1:
        raise ConfigError("rearrange needs exactly one function", field="functions")
    f = fns[0]
    spec = exp.rearrangement()
    ladder = threshold_ladder(f, exp.ladder)
    fstar = rearrange_function(f, spec, ladder)
    report = equimeasurability_report(f, spec, ladder)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_grid_function(f, out_dir / "f.grid")
    write_grid_function(fstar, out_dir / "fstar.grid")
    with open(out_dir / "report.json", "w", encoding="ascii") as fh:
        json.dump(
            {
                "name": "equimeasurability",
                "levels": [float(v) for v in report.levels],
                "source_tails": [float(v) for v in report.source_tails],
                "analytic_gaps": [float(v) for v in report.analytic_gaps],
                "mask_gaps": [float(v) for v in report.mask_gaps],
                "max_analytic_gap": report.max_analytic_gap,
                "max_mask_gap": report.max_mask_gap,
            },
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    with open(out_dir / "report.csv", "w", encoding="ascii", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("level", "source_tail", "analytic_gap", "mask_gap"))
        for row in report.rows():
            writer.writerow([format(v, ".17g") for v in row])
    return 0


def cmd_chain(exp: Experiment, out_dir: Path) -> int:
    report = run_chain(exp)
    _write_report(report, out_dir)
    return 0 if report.passed else 1


def cmd_convergence(exp: Experiment, out_dir: Path) -> int:
    if not exp.resolutions or len(exp.resolutions) < 2:
        raise ConfigError("need at least two resolutions", field="resolutions")
    exp.require_analytic_families()

    def builder(n):
        return run_chain(exp, grid=exp.grid.with_resolution(n))

    report = convergence_study(
        builder,
        exp.resolutions,
        limits=(exp.raw.get("limits")),
        workers=_worker_count(),
    )
    _write_report(report, out_dir)
    return 0 if report.passed else 1


def cmd_profile(exp: Experiment, out_dir: Path) -> int:
    if exp.grid.dim != 1:
        raise ConfigError("profile dumps are 1-D only", field="grid.n")
    cfg = exp.profile_cfg or {}
    columns = cfg.get("columns")
    if not columns:
        raise ConfigError("profile needs a non-empty column list", field="profile.columns")
    known = ("x", "f", "fstar", "supconv", "gauss_sup")
    for c in columns:
        if c not in known:
            raise ConfigError(f"unknown column {c!r}", field="profile.columns")
    fns = exp.functions()
    if len(fns) != 1:
        raise ConfigError("profile needs exactly one function", field="functions")
    f = fns[0]

    data = {"x": exp.grid.centers(0), "f": f.values}
    if "fstar" in columns:
        spec = exp.rearrangement()
        if spec.target_grid != f.grid:
            raise ConfigError(
                "profile needs the rearrangement target on the source grid",
                field="rearrangement",
            )
        data["fstar"] = rearrange_function(
            f, spec, threshold_ladder(f, exp.ladder)
        ).values
    if "supconv" in columns:
        t = float(cfg.get("t", 0.5))
        data["supconv"] = sup_convolve_direct(
            [f, f], GeometricMean((1.0 - t, t)), ComboMap((1.0 - t, t))
        ).values
    if "gauss_sup" in columns:
        lam = float(cfg.get("lam", 0.5))
        data["gauss_sup"] = gaussian_sup_convolve(f, lam).values

    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "profile.csv", "w", encoding="ascii", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for i in range(exp.grid.n[0]):
            writer.writerow([format(float(data[c][i]), ".17g") for c in columns])
    return 0


# ---------------------------------------------------------------------------
# Entry point


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rearrange-pl",
        description="Rearrangement and sup-convolution inequality laboratory",
    )
    parser.add_argument(
        "command", choices=("rearrange", "chain", "convergence", "profile")
    )
    parser.add_argument("--config", required=True, help="JSON experiment file")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--seed-override", type=int, default=None)
    parser.add_argument("--resolution-override", type=int, default=None)
    args = parser.parse_args(argv)

    try:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                cfg = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        exp = Experiment(cfg, args.seed_override, args.resolution_override)
        out_dir = Path(args.out)
        if args.command == "rearrange":
            return cmd_rearrange(exp, out_dir)
        if args.command == "chain":
            return cmd_chain(exp, out_dir)
        if args.command == "convergence":
            return cmd_convergence(exp, out_dir)
        return cmd_profile(exp, out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except PreconditionError as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        if exc.witness is not None:
            print(f"witness: {exc.witness}", file=sys.stderr)
        return 2
    except RearrangeLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
