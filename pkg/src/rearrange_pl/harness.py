"""Executable inequality chains with a shared tolerance model.

Every verification builds the ordered list of integral quantities a theorem
asserts to be non-increasing, measures the consecutive gaps, and applies one
tolerance rule: a gap passes when it is at least ``-tol`` with
``tol = c0 + c1 * h * scale``.  No chain asserts exact inequality on a grid.
Reports carry their values even on failure; a failing report is data, not an
exception.  Precondition failures (weight constraints, concavity hypotheses,
curvature hypotheses) do raise, with a witness.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatchError, PreconditionError
from .convexsets import volume
from .grid import (
    GAUSSIAN,
    LEBESGUE,
    AllValues,
    Grid,
    GridFunction,
    MeasureSpec,
    ThresholdLadder,
    gauss_phi_inv,
    integrate,
    superlevel_set,
    threshold_ladder,
)
from .means import (
    ExtendedReal,
    GeometricMean,
    Identity,
    PhiMean,
    PolarMinMean,
    PowerMean,
    PsiTransform,
    bbl_exponent,
    evaluate_mean,
    psi_apply,
)
from .rearrange import (
    CONVEX_BODY,
    GAUSSIAN_HALFSPACE,
    RearrangementSpec,
    gaussian_halfspace_rearrangement,
    rearrange_function,
)
from .supconv import (
    ComboMap,
    gaussian_sup_convolve,
    sup_convolve_direct,
    sup_convolve_levelset,
)

__all__ = [
    "ToleranceModel",
    "SideCheck",
    "ChainReport",
    "pli_chain",
    "bbl_chain",
    "ehrhard_functional_chain",
    "polar_pli_chain",
    "integrated_lsi_chain",
    "superlevel_dominance_check",
    "DominanceReport",
    "curved_pli_check",
    "minimal_admissible_u",
    "concavity_preservation_check",
    "ConcavityReport",
    "phi_inv_concavity_violation",
    "convergence_study",
    "ConvergenceReport",
]

_AUTO_TUPLE_LIMIT = 4096


# ---------------------------------------------------------------------------
# Tolerance model and reports


@dataclass(frozen=True)
class ToleranceModel:
    """``tol = c0 + c1 * h * scale``: an absolute floor plus grid slack.

    c1 = 4 was calibrated empirically by the convergence study; it is
    configurable because no discretization theory backs it.
    """

    c0: float = 1e-9
    c1: float = 4.0

    def __post_init__(self):
        if self.c0 <= 0 or self.c1 < 0:
            raise ValueError("tolerance model needs c0 > 0 and c1 >= 0")

    def tolerance(self, h: float, scale: float) -> float:
        return self.c0 + self.c1 * h * abs(scale)


@dataclass(frozen=True)
class SideCheck:
    """An auxiliary equality asserted inside a chain, e.g. equimeasurability."""

    label: str
    gap: float
    bound: float

    @property
    def passed(self) -> bool:
        return abs(self.gap) <= self.bound


@dataclass(frozen=True)
class ChainReport:
    """Named non-increasing chain of scalar terms with per-gap verdicts."""

    name: str
    labels: tuple[str, ...]
    values: tuple[float, ...]
    gaps: tuple[float, ...]
    tol: float
    verdicts: tuple[str, ...]
    degenerate: bool = False
    advisory: bool = False
    side_checks: tuple[SideCheck, ...] = ()
    metadata: dict = field(default_factory=dict)

    @staticmethod
    def build(
        name,
        labels,
        values,
        tol,
        degenerate=False,
        advisory=False,
        side_checks=(),
        metadata=None,
    ) -> "ChainReport":
        labels = tuple(labels)
        values = tuple(float(v) for v in values)
        if len(labels) != len(values) or len(values) < 2:
            raise ValueError("a chain needs at least two labeled terms")
        gaps = tuple(values[i] - values[i + 1] for i in range(len(values) - 1))
        if degenerate:
            verdicts = tuple("degenerate" for _ in gaps)
        else:
            verdicts = tuple("pass" if g >= -tol else "fail" for g in gaps)
        return ChainReport(
            name,
            labels,
            values,
            gaps,
            float(tol),
            verdicts,
            degenerate,
            advisory,
            tuple(side_checks),
            dict(metadata or {}),
        )

    @property
    def passed(self) -> bool:
        if self.degenerate:
            return True
        return all(v == "pass" for v in self.verdicts) and all(
            c.passed for c in self.side_checks
        )

    @property
    def worst_violation(self) -> float:
        if self.degenerate or not self.gaps:
            return 0.0
        return max(0.0, -min(self.gaps))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "labels": list(self.labels),
            "values": list(self.values),
            "gaps": list(self.gaps),
            "tol": self.tol,
            "verdicts": list(self.verdicts),
            "degenerate": self.degenerate,
            "advisory": self.advisory,
            "passed": self.passed,
            "side_checks": [
                {"label": c.label, "gap": c.gap, "bound": c.bound, "passed": c.passed}
                for c in self.side_checks
            ],
            "metadata": {k: _jsonable(v) for k, v in self.metadata.items()},
        }

    def csv_rows(self):
        """Rows of ``chain,term,value,gap,tol,verdict``; the last term has no gap."""
        rows = [("chain", "term", "value", "gap", "tol", "verdict")]
        for i, (label, value) in enumerate(zip(self.labels, self.values)):
            if i < len(self.gaps):
                rows.append(
                    (
                        self.name,
                        label,
                        _fmt(value),
                        _fmt(self.gaps[i]),
                        _fmt(self.tol),
                        self.verdicts[i],
                    )
                )
            else:
                rows.append((self.name, label, _fmt(value), "", "", ""))
        return rows


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _jsonable(v):
    if isinstance(v, (bool, int, float, str)) or v is None:
        return v
    if isinstance(v, (tuple, list)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, np.generic):
        return v.item()
    return repr(v)


# ---------------------------------------------------------------------------
# Shared chain plumbing


def _max_h(*grids: Grid) -> float:
    return max(max(g.h) for g in grids)


def _build_ladder(f: GridFunction, strategy) -> ThresholdLadder:
    if isinstance(strategy, ThresholdLadder):
        return strategy
    return threshold_ladder(f, strategy)


def _supconv(fs, mean, combo, ladders, out_grid, method):
    if method == "auto":
        tuples = int(np.prod([len(l) for l in ladders]))
        if tuples <= _AUTO_TUPLE_LIMIT:
            method = "levelset"
        elif len(fs) == 2:
            method = "direct"
        else:
            method = "levelset"
    if method == "direct":
        return sup_convolve_direct(fs, mean, combo, out_grid), "direct"
    if method == "levelset":
        return sup_convolve_levelset(fs, mean, combo, ladders, out_grid), "levelset"
    raise ValueError(f"unknown sup-convolution method {method!r}")


def _degenerate_report(name, labels, tolerance, h, reason):
    return ChainReport.build(
        name=name,
        labels=labels,
        values=[0.0] * len(labels),
        tol=tolerance.tolerance(h, 1.0),
        degenerate=True,
        metadata={"reason": reason, "h": h},
    )


# ---------------------------------------------------------------------------
# Prekopa-Leindler chain


def pli_chain(
    f: GridFunction,
    g: GridFunction,
    t: float,
    spec: RearrangementSpec,
    psi: PsiTransform = Identity(),
    *,
    ladder_strategy=AllValues(),
    method: str = "auto",
    tolerance: ToleranceModel | None = None,
) -> ChainReport:
    """Geometric-mean sup-convolution chain under Lebesgue measure.

    Terms: ``int psi(f . g)``, ``int psi(f* . g*)`` and, for the identity
    transform, the product bound ``(int f)^(1-t) (int g)^t``.
    """
    if not 0.0 < t < 1.0:
        raise ValueError("t must lie in (0, 1)")
    if spec.kind != CONVEX_BODY:
        raise ValueError("this chain uses a convex-body rearrangement")
    if f.grid != g.grid:
        raise GridMismatchError("f and g must share a grid")
    tolerance = tolerance or ToleranceModel()
    started = time.perf_counter()
    h = _max_h(f.grid, spec.target_grid)
    identity = isinstance(psi, Identity)
    labels = ["int psi(f.g)", "int psi(f*.g*)"]
    if identity:
        labels = ["int f.g", "int f*.g*", "(int f)^(1-t) (int g)^t"]

    int_f = integrate(f, LEBESGUE)
    int_g = integrate(g, LEBESGUE)
    if int_f == 0.0 or int_g == 0.0:
        return _degenerate_report("pli", labels, tolerance, h, "zero-integral operand")

    mean = GeometricMean((1.0 - t, t))
    combo = ComboMap((1.0 - t, t))
    lad_f = _build_ladder(f, ladder_strategy)
    lad_g = _build_ladder(g, ladder_strategy)

    conv, method_used = _supconv([f, g], mean, combo, [lad_f, lad_g], f.grid, method)
    fs = rearrange_function(f, spec, lad_f)
    gs = rearrange_function(g, spec, lad_g)
    lad_fs = threshold_ladder(fs, AllValues())
    lad_gs = threshold_ladder(gs, AllValues())
    conv_star, _ = _supconv(
        [fs, gs], mean, combo, [lad_fs, lad_gs], spec.target_grid, method_used
    )

    term1 = integrate(psi_apply(psi, conv), LEBESGUE)
    term2 = integrate(psi_apply(psi, conv_star), LEBESGUE)
    values = [term1, term2]
    if identity:
        values.append(int_f ** (1.0 - t) * int_g**t)

    tol = tolerance.tolerance(h, max(abs(v) for v in values))
    side = [
        SideCheck("int f = int f*", int_f - integrate(fs, LEBESGUE), tol),
        SideCheck("int g = int g*", int_g - integrate(gs, LEBESGUE), tol),
    ]
    return ChainReport.build(
        name="pli",
        labels=labels,
        values=values,
        tol=tol,
        side_checks=side,
        metadata={
            "t": t,
            "psi": type(psi).__name__,
            "method": method_used,
            "ladder_sizes": [len(lad_f), len(lad_g)],
            "grid_n": f.grid.n,
            "h": h,
            "runtime_s": time.perf_counter() - started,
        },
    )


# ---------------------------------------------------------------------------
# Borell-Brascamp-Lieb chain


def bbl_chain(
    f: GridFunction,
    g: GridFunction,
    t: float,
    p,
    spec: RearrangementSpec,
    *,
    ladder_strategy=AllValues(),
    method: str = "auto",
    tolerance: ToleranceModel | None = None,
) -> ChainReport:
    """Power-mean sup-convolution chain; the final term is the power mean of
    the integrals at the mapped exponent ``p / (dim p + 1)``, defined for
    ``p >= -1/dim``."""
    if not 0.0 < t < 1.0:
        raise ValueError("t must lie in (0, 1)")
    if spec.kind != CONVEX_BODY:
        raise ValueError("this chain uses a convex-body rearrangement")
    if f.grid != g.grid:
        raise GridMismatchError("f and g must share a grid")
    tolerance = tolerance or ToleranceModel()
    started = time.perf_counter()
    dim = f.grid.dim
    exponent = bbl_exponent(p, dim)  # raises DomainError below -1/dim
    h = _max_h(f.grid, spec.target_grid)
    labels = ["int f.g", "int f*.g*", "M_{p/(dp+1)}(int f, int g)"]

    int_f = integrate(f, LEBESGUE)
    int_g = integrate(g, LEBESGUE)
    if int_f == 0.0 or int_g == 0.0:
        return _degenerate_report("bbl", labels, tolerance, h, "zero-integral operand")

    weights = (1.0 - t, t)
    mean = PowerMean(ExtendedReal.of(p), weights)
    combo = ComboMap(weights)
    lad_f = _build_ladder(f, ladder_strategy)
    lad_g = _build_ladder(g, ladder_strategy)
    conv, method_used = _supconv([f, g], mean, combo, [lad_f, lad_g], f.grid, method)
    fs = rearrange_function(f, spec, lad_f)
    gs = rearrange_function(g, spec, lad_g)
    conv_star, _ = _supconv(
        [fs, gs],
        mean,
        combo,
        [threshold_ladder(fs, AllValues()), threshold_ladder(gs, AllValues())],
        spec.target_grid,
        method_used,
    )

    values = [
        integrate(conv, LEBESGUE),
        integrate(conv_star, LEBESGUE),
        evaluate_mean(PowerMean(exponent, weights), (int_f, int_g)),
    ]
    tol = tolerance.tolerance(h, max(abs(v) for v in values))
    side = [
        SideCheck("int f = int f*", int_f - integrate(fs, LEBESGUE), tol),
        SideCheck("int g = int g*", int_g - integrate(gs, LEBESGUE), tol),
    ]
    return ChainReport.build(
        name="bbl",
        labels=labels,
        values=values,
        tol=tol,
        side_checks=side,
        metadata={
            "t": t,
            "p": repr(ExtendedReal.of(p)),
            "mapped_exponent": repr(exponent),
            "method": method_used,
            "grid_n": f.grid.n,
            "h": h,
            "runtime_s": time.perf_counter() - started,
        },
    )


# ---------------------------------------------------------------------------
# Ehrhard / normal-CDF mean chain


def _combined_bounds(grid: Grid, weights) -> tuple[tuple[float, ...], tuple[float, ...]]:
    lo, hi = [], []
    for i in range(grid.dim):
        a = sum(min(w * grid.lo[i], w * grid.hi[i]) for w in weights)
        b = sum(max(w * grid.lo[i], w * grid.hi[i]) for w in weights)
        lo.append(min(a, grid.lo[i]))
        hi.append(max(b, grid.hi[i]))
    return tuple(lo), tuple(hi)


def ehrhard_functional_chain(
    fs,
    lam_weights,
    index_set=None,
    *,
    target_grid: Grid | None = None,
    ladder_strategy=AllValues(),
    method: str = "auto",
    tolerance: ToleranceModel | None = None,
) -> ChainReport:
    """Normal-CDF mean chain under Gaussian measure with half-space rearrangement.

    Functions take values in [0, 1].  Weights must satisfy ``sum lam_i >= 1``
    and ``lam_j - sum_{i != j} lam_i <= 1`` for every j outside the index set;
    functions inside the index set must pass the discrete concavity test for
    ``Phi^-1 of f``.  With a proper subset as index set the first inequality
    rests on an adaptation argument, so the report is marked advisory.
    """
    fs = list(fs)
    n = len(fs)
    if n < 2:
        raise ValueError("need at least two functions")
    weights = tuple(float(w) for w in lam_weights)
    if len(weights) != n:
        raise ValueError("need one weight per function")
    if any(w <= 0 for w in weights):
        raise PreconditionError("weights must be strictly positive")
    if sum(weights) < 1.0 - 1e-12:
        raise PreconditionError("weights must satisfy sum lam_i >= 1")
    index_set = set(range(n)) if index_set is None else {int(i) for i in index_set}
    if not index_set <= set(range(n)):
        raise PreconditionError(
            f"index set {sorted(index_set)} must reference the {n} functions"
        )
    for j in range(n):
        if j in index_set:
            continue
        if weights[j] - (sum(weights) - weights[j]) > 1.0 + 1e-12:
            raise PreconditionError(
                f"weight constraint violated at index {j}: "
                "lam_j - sum others exceeds 1",
                witness=j,
            )
    base = fs[0].grid
    for f in fs:
        if f.grid != base:
            raise GridMismatchError("all functions must share a grid")
        if f.max() > 1.0:
            raise PreconditionError("function values must lie in [0, 1]")

    tolerance = tolerance or ToleranceModel()
    started = time.perf_counter()
    spec = gaussian_halfspace_rearrangement(base, target_grid)
    h = _max_h(base, spec.target_grid)

    for i in sorted(index_set):
        violation, witness = phi_inv_concavity_violation(fs[i], tolerance.c0)
        if violation is not None:
            raise PreconditionError(
                f"function {i} fails the Phi^-1 concavity test", witness=witness
            )

    labels = ["int M(f) dgamma_d", "int M(f_*) dgamma", "M(int f_1, ..., int f_n)"]
    integrals = [integrate(f, GAUSSIAN) for f in fs]
    if any(v == 0.0 for v in integrals):
        return _degenerate_report("ehrhard", labels, tolerance, h, "zero-integral operand")

    mean = PhiMean(weights)
    combo = ComboMap(weights)
    ladders = [_build_ladder(f, ladder_strategy) for f in fs]

    out_lo, out_hi = _combined_bounds(base, weights)
    out_grid = base.extended_to_cover(out_lo, out_hi)
    conv, method_used = _supconv(fs, mean, combo, ladders, out_grid, method)

    stars = [rearrange_function(f, spec, lad) for f, lad in zip(fs, ladders)]
    t_lo, t_hi = _combined_bounds(spec.target_grid, weights)
    t_out = spec.target_grid.extended_to_cover(t_lo, t_hi)
    star_ladders = [threshold_ladder(fsr, AllValues()) for fsr in stars]
    conv_star, _ = _supconv(stars, mean, combo, star_ladders, t_out, method_used)

    values = [
        integrate(conv, GAUSSIAN),
        integrate(conv_star, GAUSSIAN),
        evaluate_mean(mean, integrals, extend_boundary=True),
    ]
    tol = tolerance.tolerance(h, max(1.0, max(abs(v) for v in values)))
    side = [
        SideCheck(
            f"int f_{i} = int f_{i}*",
            integrals[i] - integrate(stars[i], GAUSSIAN),
            tol,
        )
        for i in range(n)
    ]
    return ChainReport.build(
        name="ehrhard",
        labels=labels,
        values=values,
        tol=tol,
        advisory=index_set != set(range(n)),
        side_checks=side,
        metadata={
            "weights": weights,
            "index_set": sorted(index_set),
            "method": method_used,
            "grid_n": base.n,
            "h": h,
            "runtime_s": time.perf_counter() - started,
        },
    )


# ---------------------------------------------------------------------------
# Polar chain


def polar_pli_chain(
    f: GridFunction,
    g: GridFunction,
    t: float,
    lam: float,
    measure: MeasureSpec,
    spec: RearrangementSpec,
    *,
    ladder_strategy=AllValues(),
    method: str = "auto",
    tolerance: ToleranceModel | None = None,
) -> ChainReport:
    """Polar min-mean chain: Lebesgue measure pairs with a convex-body
    rearrangement, Gaussian measure with the half-space rearrangement; the
    final term is the weighted harmonic-type mean at exponent -1."""
    if not 0.0 < t < 1.0 or not 0.0 < lam < 1.0:
        raise ValueError("t and lam must lie in (0, 1)")
    if measure.is_gaussian != (spec.kind == GAUSSIAN_HALFSPACE):
        raise ValueError(
            "measure and rearrangement must pair: Lebesgue with convex-body, "
            "Gaussian with half-space"
        )
    if f.grid != g.grid:
        raise GridMismatchError("f and g must share a grid")
    tolerance = tolerance or ToleranceModel()
    started = time.perf_counter()
    h = _max_h(f.grid, spec.target_grid)
    labels = ["int f.g dmu", "int f*.g* dmu", "M_-1(int f, int g)"]

    int_f = integrate(f, measure)
    int_g = integrate(g, measure)
    if int_f == 0.0 or int_g == 0.0:
        return _degenerate_report("polar_pli", labels, tolerance, h, "zero-integral operand")

    mean = PolarMinMean(t, lam)
    combo = ComboMap((1.0 - t, t))
    lad_f = _build_ladder(f, ladder_strategy)
    lad_g = _build_ladder(g, ladder_strategy)
    conv, method_used = _supconv([f, g], mean, combo, [lad_f, lad_g], f.grid, method)
    fstar = rearrange_function(f, spec, lad_f)
    gstar = rearrange_function(g, spec, lad_g)
    conv_star, _ = _supconv(
        [fstar, gstar],
        mean,
        combo,
        [threshold_ladder(fstar, AllValues()), threshold_ladder(gstar, AllValues())],
        spec.target_grid,
        method_used,
    )

    values = [
        integrate(conv, measure),
        integrate(conv_star, spec.target_measure),
        evaluate_mean(PowerMean(ExtendedReal.of(-1.0), (1.0 - lam, lam)), (int_f, int_g)),
    ]
    tol = tolerance.tolerance(h, max(abs(v) for v in values))
    side = [
        SideCheck("int f = int f*", int_f - integrate(fstar, spec.target_measure), tol),
        SideCheck("int g = int g*", int_g - integrate(gstar, spec.target_measure), tol),
    ]
    return ChainReport.build(
        name="polar_pli",
        labels=labels,
        values=values,
        tol=tol,
        side_checks=side,
        metadata={
            "t": t,
            "lam": lam,
            "measure": measure.kind,
            "method": method_used,
            "grid_n": f.grid.n,
            "h": h,
            "runtime_s": time.perf_counter() - started,
        },
    )


# ---------------------------------------------------------------------------
# Integrated log-Sobolev chain


def integrated_lsi_chain(
    f: GridFunction,
    lam: float,
    spec: RearrangementSpec | None = None,
    *,
    ladder_strategy=AllValues(),
    tolerance: ToleranceModel | None = None,
) -> ChainReport:
    """Gaussian sup-convolution chain: smoothing, then its rearranged version,
    then the (1+lam)-norm of f, all under Gaussian measure."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    spec = spec or gaussian_halfspace_rearrangement(f.grid)
    if spec.kind != GAUSSIAN_HALFSPACE:
        raise ValueError("this chain uses the Gaussian half-space rearrangement")
    tolerance = tolerance or ToleranceModel()
    started = time.perf_counter()
    h = _max_h(f.grid, spec.target_grid)
    labels = ["int Q f dgamma_d", "int Q f* dgamma", "||f||_(1+lam)"]
    if f.max() == 0.0:
        return _degenerate_report("integrated_lsi", labels, tolerance, h, "zero function")

    q_f = gaussian_sup_convolve(f, lam)
    ladder = _build_ladder(f, ladder_strategy)
    fstar = rearrange_function(f, spec, ladder)
    q_fstar = gaussian_sup_convolve(fstar, lam)

    p = 1.0 + lam
    norm_f = integrate(GridFunction(f.grid, f.values**p), GAUSSIAN) ** (1.0 / p)
    norm_fstar = integrate(
        GridFunction(fstar.grid, fstar.values**p), GAUSSIAN
    ) ** (1.0 / p)

    values = [
        integrate(q_f, GAUSSIAN),
        integrate(q_fstar, GAUSSIAN),
        norm_f,
    ]
    tol = tolerance.tolerance(h, max(abs(v) for v in values))
    side = [SideCheck("||f*|| = ||f||", norm_fstar - norm_f, tol)]
    return ChainReport.build(
        name="integrated_lsi",
        labels=labels,
        values=values,
        tol=tol,
        side_checks=side,
        metadata={
            "lam": lam,
            "ladder_size": len(ladder),
            "grid_n": f.grid.n,
            "h": h,
            "runtime_s": time.perf_counter() - started,
        },
    )


# ---------------------------------------------------------------------------
# Super-level dominance


@dataclass(frozen=True)
class DominanceReport:
    """Per-level comparison of Gaussian super-level masses after smoothing."""

    levels: tuple[float, ...]
    lhs: tuple[float, ...]
    rhs: tuple[float, ...]
    tol: float
    metadata: dict = field(default_factory=dict)

    @property
    def gaps(self) -> tuple[float, ...]:
        return tuple(a - b for a, b in zip(self.lhs, self.rhs))

    @property
    def passed(self) -> bool:
        return all(g >= -self.tol for g in self.gaps)

    def to_dict(self):
        return {
            "name": "superlevel_dominance",
            "levels": list(self.levels),
            "lhs": list(self.lhs),
            "rhs": list(self.rhs),
            "gaps": list(self.gaps),
            "tol": self.tol,
            "passed": self.passed,
            "metadata": {k: _jsonable(v) for k, v in self.metadata.items()},
        }

    def csv_rows(self):
        rows = [("chain", "term", "value", "gap", "tol", "verdict")]
        for s, a, b, g in zip(self.levels, self.lhs, self.rhs, self.gaps):
            verdict = "pass" if g >= -self.tol else "fail"
            rows.append(
                ("dominance", f"s={_fmt(s)}", _fmt(a), _fmt(g), _fmt(self.tol), verdict)
            )
        return rows


def superlevel_dominance_check(
    f: GridFunction,
    lam: float,
    s_levels,
    spec: RearrangementSpec | None = None,
    *,
    ladder_strategy=AllValues(),
    tolerance: ToleranceModel | None = None,
) -> DominanceReport:
    """At every level s, the Gaussian mass of ``{Q f > s}`` on the source must
    dominate the mass of ``{Q f* > s}`` on the 1-D target."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    spec = spec or gaussian_halfspace_rearrangement(f.grid)
    tolerance = tolerance or ToleranceModel()
    started = time.perf_counter()
    levels = tuple(float(s) for s in s_levels)
    if any(s <= 0 for s in levels):
        raise ValueError("levels must be positive")
    if any(s >= f.max() for s in levels) and f.max() > 0:
        raise ValueError("levels must stay below max f")

    q_f = gaussian_sup_convolve(f, lam)
    fstar = rearrange_function(f, spec, _build_ladder(f, ladder_strategy))
    q_fstar = gaussian_sup_convolve(fstar, lam)

    lhs = tuple(volume(superlevel_set(q_f, s), GAUSSIAN) for s in levels)
    rhs = tuple(volume(superlevel_set(q_fstar, s), GAUSSIAN) for s in levels)
    h = _max_h(f.grid, spec.target_grid)
    return DominanceReport(
        levels,
        lhs,
        rhs,
        tolerance.tolerance(h, 1.0),
        metadata={
            "lam": lam,
            "grid_n": f.grid.n,
            "h": h,
            "runtime_s": time.perf_counter() - started,
        },
    )


# ---------------------------------------------------------------------------
# Curved chain


def minimal_admissible_u(
    v: GridFunction, w: GridFunction, t: float, out_grid: Grid | None = None
) -> GridFunction:
    """Smallest function satisfying the curvature-corrected midpoint hypothesis:
    pointwise sup over x of ``exp(-t(1-t)|x-y|^2/2) v(x)^(1-t) w(y)^t`` with
    ``y`` solved from the combination constraint and sampled at its cell."""
    if not 0.0 < t < 1.0:
        raise ValueError("t must lie in (0, 1)")
    if v.grid != w.grid:
        raise GridMismatchError("v and w must share a grid")
    out_grid = out_grid or v.grid
    out_pts = out_grid.center_points()
    src_pts = v.grid.center_points()
    g = w.grid
    n_out = out_pts.shape[0]
    out_vals = np.zeros(n_out)
    chunk = max(1, 2_000_000 // max(1, src_pts.shape[0]))
    v_flat = v.values.ravel() ** (1.0 - t)
    for start in range(0, n_out, chunk):
        z = out_pts[start : start + chunk]
        y = (z[:, None, :] - (1.0 - t) * src_pts[None, :, :]) / t
        valid = np.ones(y.shape[:2], dtype=bool)
        idx = []
        for i in range(g.dim):
            u_coord = (y[..., i] - g.lo[i]) / g.h[i]
            k = np.floor(u_coord).astype(np.int64)
            valid &= (k >= 0) & (k < g.n[i])
            idx.append(np.clip(k, 0, g.n[i] - 1))
        w_vals = w.values[tuple(idx)] if g.dim == 2 else w.values[idx[0]]
        w_vals = np.where(valid, w_vals, 0.0) ** t
        dist_sq = np.sum((src_pts[None, :, :] - y) ** 2, axis=-1)
        kernel = np.exp(-0.5 * t * (1.0 - t) * dist_sq)
        out_vals[start : start + chunk] = np.max(
            kernel * v_flat[None, :] * w_vals, axis=1
        )
    return GridFunction(out_grid, out_vals.reshape(out_grid.shape))


def curved_pli_check(
    u: GridFunction,
    v: GridFunction,
    w: GridFunction,
    t: float,
    *,
    tolerance: ToleranceModel | None = None,
    pair_limit: int = 4_000_000,
    seed: int = 0,
) -> ChainReport:
    """Verify the strongly log-concave midpoint hypothesis on cell pairs, then
    the product inequality for the Gaussian integrals.

    The hypothesis scan is exhaustive when the pair count fits the limit and
    seeded-random otherwise; a violation raises with the witness pair.
    """
    if not 0.0 < t < 1.0:
        raise ValueError("t must lie in (0, 1)")
    if u.grid != v.grid or v.grid != w.grid:
        raise GridMismatchError("u, v, w must share a grid")
    tolerance = tolerance or ToleranceModel()
    started = time.perf_counter()
    grid = u.grid
    h = _max_h(grid)
    scale = max(u.max(), 1.0)
    slack = tolerance.tolerance(h, scale)

    pts = grid.center_points()
    n = pts.shape[0]
    if n * n <= pair_limit:
        xs = np.repeat(np.arange(n), n)
        ys = np.tile(np.arange(n), n)
        scan = "exhaustive"
    else:
        rng = np.random.default_rng(seed)
        xs = rng.integers(0, n, size=pair_limit)
        ys = rng.integers(0, n, size=pair_limit)
        scan = "sampled"

    u_flat = u.values.ravel()
    v_flat = v.values.ravel()
    w_flat = w.values.ravel()
    worst = 0.0
    witness = None
    chunk = 1_000_000
    for start in range(0, xs.size, chunk):
        xi = xs[start : start + chunk]
        yi = ys[start : start + chunk]
        x = pts[xi]
        y = pts[yi]
        z = (1.0 - t) * x + t * y
        idx = []
        for i in range(grid.dim):
            k = np.floor((z[:, i] - grid.lo[i]) / grid.h[i]).astype(np.int64)
            idx.append(np.clip(k, 0, grid.n[i] - 1))
        flat_idx = idx[0] if grid.dim == 1 else idx[0] * grid.n[1] + idx[1]
        dist_sq = np.sum((x - y) ** 2, axis=-1)
        rhs = (
            np.exp(-0.5 * t * (1.0 - t) * dist_sq)
            * v_flat[xi] ** (1.0 - t)
            * w_flat[yi] ** t
        )
        gap = rhs - u_flat[flat_idx]
        k = int(np.argmax(gap))
        if gap[k] > worst:
            worst = float(gap[k])
            witness = {
                "x": [float(c) for c in x[k]],
                "y": [float(c) for c in y[k]],
                "u_at_mid": float(u_flat[flat_idx[k]]),
                "required": float(rhs[k]),
            }
    if worst > slack:
        raise PreconditionError(
            f"midpoint hypothesis fails by {worst:.3g} (allowed {slack:.3g})",
            witness=witness,
        )

    int_u = integrate(u, GAUSSIAN)
    int_v = integrate(v, GAUSSIAN)
    int_w = integrate(w, GAUSSIAN)
    values = [int_u, int_v ** (1.0 - t) * int_w**t]
    tol = tolerance.tolerance(h, max(abs(val) for val in values))
    return ChainReport.build(
        name="curved_pli",
        labels=["int u dmu", "(int v)^(1-t) (int w)^t"],
        values=values,
        tol=tol,
        metadata={
            "t": t,
            "scan": scan,
            "hypothesis_slack": slack,
            "worst_hypothesis_gap": worst,
            "grid_n": grid.n,
            "h": h,
            "runtime_s": time.perf_counter() - started,
        },
    )


# ---------------------------------------------------------------------------
# Concavity preservation


# Within this distance of 1, the absolute quantization of a double f maps
# through Phi^-1 to noise above the c0 floor (ulp(1)/density exceeds 1e-9
# once 1 - f drops below ~1e-6); such cells are numerically indeterminate
# for the second-difference scan.  Exact ones keep their +inf semantics.
_PHI_SATURATION_BAND = 1e-6


def _phi_inv_extended(values: np.ndarray) -> np.ndarray:
    g = np.full(values.shape, -np.inf)
    ones = values >= 1.0
    interior = (values > 0.0) & ~ones
    if interior.any():
        g[interior] = gauss_phi_inv(values[interior])
    g[ones] = np.inf
    return g


def _line_violation(gline: np.ndarray, testable: np.ndarray, tol: float):
    """Worst concavity violation of one grid line of extended values.

    Triples are scanned where all three cells have f > 0 and are testable;
    +inf centers pass, +inf neighbors of finite centers fail, and the
    positive domain must be one contiguous run.
    """
    finite_dom = gline > -np.inf
    # Support contiguity along the line.
    runs = np.nonzero(finite_dom)[0]
    if runs.size >= 2 and not np.all(np.diff(runs) == 1):
        gap_at = int(runs[np.nonzero(np.diff(runs) > 1)[0][0]] + 1)
        return math.inf, gap_at
    worst = -math.inf
    where = None
    for k in range(1, gline.size - 1):
        if not (finite_dom[k - 1] and finite_dom[k] and finite_dom[k + 1]):
            continue
        if not (testable[k - 1] and testable[k] and testable[k + 1]):
            continue
        if np.isinf(gline[k]):
            continue
        if np.isinf(gline[k - 1]) or np.isinf(gline[k + 1]):
            return math.inf, k
        second = gline[k - 1] - 2.0 * gline[k] + gline[k + 1]
        if second > worst:
            worst = second
            where = k
    if worst > tol:
        return float(worst), where
    return None, None


def phi_inv_concavity_violation(f: GridFunction, tol: float):
    """Discrete concavity test of ``Phi^-1 of f`` along every grid line.

    Returns ``(violation, witness)`` where violation is None when the test
    passes.  Indicator-valued functions reduce to a support convexity check.
    """
    if f.max() > 1.0:
        raise PreconditionError("Phi^-1 concavity needs values in [0, 1]")
    g = _phi_inv_extended(f.values)
    testable = ~((f.values < 1.0) & (f.values > 1.0 - _PHI_SATURATION_BAND))
    if f.grid.dim == 1:
        viol, idx = _line_violation(g, testable, tol)
        if viol is not None:
            return viol, {"axis": 0, "index": int(idx)}
        return None, None
    for axis, (lines, flags) in ((0, (g, testable)), (1, (g.T, testable.T))):
        for row in range(lines.shape[0]):
            viol, idx = _line_violation(lines[row], flags[row], tol)
            if viol is not None:
                witness = {"axis": axis, "line": row, "index": int(idx)}
                return viol, witness
    return None, None


def _staircase_step(f: GridFunction) -> float:
    """Largest adjacent jump of ``Phi^-1 of f`` across finite cells.

    A layer-cake reconstruction is a staircase; its concavity defects are
    bounded by one such step, so the step sets the natural slack scale.
    """
    g = _phi_inv_extended(f.values)
    step = 0.0
    lines = [g] if f.grid.dim == 1 else list(g) + list(g.T)
    for line in lines:
        finite = np.isfinite(line)
        both = finite[:-1] & finite[1:]
        if both.any():
            step = max(step, float(np.abs(line[1:][both] - line[:-1][both]).max()))
    return step


@dataclass(frozen=True)
class ConcavityReport:
    source_ok: bool
    target_violation: float | None
    target_witness: dict | None
    tol: float

    @property
    def passed(self) -> bool:
        return self.source_ok and self.target_violation is None


def concavity_preservation_check(
    f: GridFunction,
    spec: RearrangementSpec,
    *,
    ladder_strategy=AllValues(),
    tolerance: ToleranceModel | None = None,
) -> ConcavityReport:
    """Rearranging a ``Phi^-1``-concave function must keep it ``Phi^-1``-concave.

    The precondition failing raises with a witness index; the postcondition
    failing is reported, not raised.  Exact sampling of a concave function has
    non-positive second differences, so the source test uses only the absolute
    floor; the rearranged side is a staircase, whose quantization defects are
    bounded by one step, so its slack scales with the measured step.
    """
    if spec.kind != GAUSSIAN_HALFSPACE:
        raise ValueError("concavity preservation uses the half-space rearrangement")
    tolerance = tolerance or ToleranceModel()
    violation, witness = phi_inv_concavity_violation(f, tolerance.c0)
    if violation is not None:
        raise PreconditionError(
            "source function fails the Phi^-1 concavity test", witness=witness
        )
    fstar = rearrange_function(f, spec, _build_ladder(f, ladder_strategy))
    tol = tolerance.c0 + tolerance.c1 * _staircase_step(fstar)
    t_violation, t_witness = phi_inv_concavity_violation(fstar, tol)
    return ConcavityReport(True, t_violation, t_witness, tol)


# ---------------------------------------------------------------------------
# Convergence study


@dataclass(frozen=True)
class ConvergenceReport:
    resolutions: tuple[int, ...]
    h_values: tuple[float, ...]
    gap_labels: tuple[str, ...]
    gaps: tuple[tuple[float, ...], ...]  # [resolution][gap]
    tols: tuple[float, ...]
    worst_violations: tuple[float, ...]
    shrink_ratios: tuple[tuple[float, ...], ...]  # [step][gap], |gap - limit| ratios
    limits: tuple[float, ...]
    violations_ok: bool
    shrink_ok: bool
    metadata: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations_ok and self.shrink_ok

    def min_shrink_ratio(self) -> float:
        flat = [r for step in self.shrink_ratios for r in step]
        return min(flat) if flat else math.inf

    def to_dict(self):
        return {
            "name": "convergence",
            "resolutions": list(self.resolutions),
            "h": list(self.h_values),
            "gap_labels": list(self.gap_labels),
            "gaps": [list(row) for row in self.gaps],
            "tols": list(self.tols),
            "worst_violations": list(self.worst_violations),
            "shrink_ratios": [list(row) for row in self.shrink_ratios],
            "limits": list(self.limits),
            "violations_ok": self.violations_ok,
            "shrink_ok": self.shrink_ok,
            "passed": self.passed,
            "metadata": {k: _jsonable(v) for k, v in self.metadata.items()},
        }

    def csv_rows(self):
        rows = [("chain", "resolution", "h", "gap_label", "gap", "tol", "verdict")]
        for i, n in enumerate(self.resolutions):
            for j, label in enumerate(self.gap_labels):
                verdict = "pass" if self.gaps[i][j] >= -self.tols[i] else "fail"
                rows.append(
                    (
                        "convergence",
                        str(n),
                        _fmt(self.h_values[i]),
                        label,
                        _fmt(self.gaps[i][j]),
                        _fmt(self.tols[i]),
                        verdict,
                    )
                )
        return rows


def convergence_study(
    builder,
    resolutions,
    *,
    limits=None,
    floor: float = 1e-9,
    shrink_slack: float = 0.75,
    workers: int = 1,
) -> ConvergenceReport:
    """Run a chain at several resolutions and check discretization behavior.

    ``builder(n)`` must return a ChainReport for resolution n; the inputs must
    therefore come from analytic families that can be resampled.  Violations
    must shrink at least linearly in h (within ``shrink_slack``); the ratios
    of ``|gap - limit|`` between consecutive resolutions are reported, with
    limits defaulting to 0 (equality-case studies).
    """
    resolutions = [int(n) for n in resolutions]
    if len(resolutions) < 2:
        raise ValueError("a convergence study needs at least two resolutions")
    if any(b <= a for a, b in zip(resolutions, resolutions[1:])):
        raise ValueError("resolutions must be strictly increasing")

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(builder, resolutions))
    else:
        reports = [builder(n) for n in resolutions]

    labels = None
    gaps = []
    tols = []
    h_values = []
    for rep in reports:
        rep_labels = tuple(
            f"{rep.labels[i]} - {rep.labels[i + 1]}" for i in range(len(rep.labels) - 1)
        )
        if labels is None:
            labels = rep_labels
        elif labels != rep_labels:
            raise ValueError("chain shape changed across resolutions")
        gaps.append(tuple(rep.gaps))
        tols.append(rep.tol)
        h_values.append(float(rep.metadata.get("h", math.nan)))

    n_gaps = len(labels)
    if limits is None:
        limits = (0.0,) * n_gaps
    limits = tuple(float(v) for v in limits)
    if len(limits) != n_gaps:
        raise ValueError("need one limit per gap")

    worst = tuple(
        max((max(0.0, -g) for g in row), default=0.0) for row in gaps
    )
    violations_ok = all(
        w <= tol for w, tol in zip(worst, tols)
    )
    shrink_ok = True
    for prev, nxt in zip(worst, worst[1:]):
        if nxt <= floor:
            continue
        if nxt > max(prev * shrink_slack, floor):
            shrink_ok = False

    ratios = []
    for i in range(len(resolutions) - 1):
        step = []
        for j in range(n_gaps):
            a = abs(gaps[i][j] - limits[j])
            b = abs(gaps[i + 1][j] - limits[j])
            if b <= floor:
                step.append(math.inf)
            else:
                step.append(a / b)
        ratios.append(tuple(step))

    return ConvergenceReport(
        tuple(resolutions),
        tuple(h_values),
        labels,
        tuple(gaps),
        tuple(tols),
        worst,
        tuple(ratios),
        limits,
        violations_ok,
        shrink_ok,
        metadata={"chain": reports[0].name},
    )
