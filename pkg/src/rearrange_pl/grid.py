"""Uniform box grids, sampled non-negative functions, measures, and level-set tools.

Everything downstream works with three carriers defined here:

* ``Grid``: a uniform cell-centered grid over a box in R^d, d in {1, 2}.
* ``GridFunction``: finite non-negative samples, one value per cell center.
* ``SetMask``: boolean membership per cell, the discrete stand-in for a set.

Conventions used throughout the package:

* a function's value on a cell is its center sample,
* super-level sets are strict, ``{f > lam}``,
* measures weight each cell by its center density times the cell volume
  (Lebesgue weight is just the cell volume).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special as _special

from .errors import (
    DomainError,
    FileFormatError,
    GridMismatchError,
    LadderError,
)

__all__ = [
    "Grid",
    "GridFunction",
    "SetMask",
    "MeasureSpec",
    "LEBESGUE",
    "GAUSSIAN",
    "ThresholdLadder",
    "AllValues",
    "Quantile",
    "TailMeasure",
    "integrate",
    "superlevel_set",
    "superlevel_set_closed",
    "distribution_function",
    "threshold_ladder",
    "layer_cake",
    "gauss_phi",
    "gauss_phi_inv",
    "gauss_density",
    "GaussianBump",
    "IndicatorBody",
    "ExpLinear",
    "PiecewiseRandom",
    "LogConcaveRandom",
    "HalfSpaceIndicator",
    "PhiAffine",
    "make_function",
    "write_grid_function",
    "read_grid_function",
    "write_mask",
    "read_mask",
]


# ---------------------------------------------------------------------------
# Grids and carriers


def _as_float_tuple(x) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in x)
    except TypeError:
        return (float(x),)


def _as_int_tuple(x) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in x)
    except TypeError:
        return (int(x),)


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered grid on the box ``[lo, hi]`` with ``n`` cells per axis.

    Cell centers along axis ``i`` sit at ``lo[i] + (k + 1/2) h[i]``.
    """

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    n: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "lo", _as_float_tuple(self.lo))
        object.__setattr__(self, "hi", _as_float_tuple(self.hi))
        object.__setattr__(self, "n", _as_int_tuple(self.n))
        d = len(self.n)
        if d not in (1, 2):
            raise ValueError(f"grid dimension must be 1 or 2, got {d}")
        if len(self.lo) != d or len(self.hi) != d:
            raise ValueError("lo, hi, n must have matching lengths")
        for i in range(d):
            if not self.lo[i] < self.hi[i]:
                raise ValueError(f"axis {i}: lo must be < hi")
            if self.n[i] < 2:
                raise ValueError(f"axis {i}: need at least 2 cells")

    @property
    def dim(self) -> int:
        return len(self.n)

    @property
    def h(self) -> tuple[float, ...]:
        return tuple((self.hi[i] - self.lo[i]) / self.n[i] for i in range(self.dim))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @property
    def num_cells(self) -> int:
        return int(np.prod(self.n))

    def centers(self, axis: int) -> np.ndarray:
        h = self.h[axis]
        return self.lo[axis] + (np.arange(self.n[axis]) + 0.5) * h

    def mesh(self) -> tuple[np.ndarray, ...]:
        """Center coordinates as arrays shaped like ``self.shape``."""
        axes = [self.centers(i) for i in range(self.dim)]
        if self.dim == 1:
            return (axes[0],)
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def center_points(self) -> np.ndarray:
        """All cell centers as an ``(num_cells, dim)`` array in row-major order."""
        msh = self.mesh()
        return np.stack([m.ravel() for m in msh], axis=-1)

    def with_resolution(self, n) -> "Grid":
        n = _as_int_tuple(n)
        if len(n) == 1 and self.dim == 2:
            n = (n[0], n[0])
        return Grid(self.lo, self.hi, n)

    def extended_to_cover(self, lo_needed, hi_needed) -> "Grid":
        """Smallest cell-aligned enlargement covering ``[lo_needed, hi_needed]``."""
        lo_needed = _as_float_tuple(lo_needed)
        hi_needed = _as_float_tuple(hi_needed)
        lo, hi, n = [], [], []
        for i in range(self.dim):
            hstep = self.h[i]
            below = max(0, math.ceil((self.lo[i] - lo_needed[i]) / hstep - 1e-12))
            above = max(0, math.ceil((hi_needed[i] - self.hi[i]) / hstep - 1e-12))
            lo.append(self.lo[i] - below * hstep)
            hi.append(self.hi[i] + above * hstep)
            n.append(self.n[i] + below + above)
        return Grid(tuple(lo), tuple(hi), tuple(n))


def _check_same_grid(a, b, what="operands"):
    if a.grid != b.grid:
        raise GridMismatchError(f"{what} live on different grids")


@dataclass(frozen=True)
class GridFunction:
    """Non-negative finite samples on a grid, one value per cell center."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        if vals.shape != self.grid.shape:
            raise ValueError(
                f"values shape {vals.shape} does not match grid shape {self.grid.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid function values must be finite")
        if np.any(vals < 0):
            raise ValueError("grid function values must be non-negative")
        object.__setattr__(self, "values", vals)

    def max(self) -> float:
        return float(self.values.max())

    def __eq__(self, other):
        if not isinstance(other, GridFunction):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.values, other.values)


@dataclass(frozen=True)
class SetMask:
    """Boolean cell membership on a grid; the carrier of discretized sets."""

    grid: Grid
    member: np.ndarray

    def __post_init__(self):
        mem = np.ascontiguousarray(np.asarray(self.member, dtype=bool))
        if mem.shape != self.grid.shape:
            raise ValueError(
                f"mask shape {mem.shape} does not match grid shape {self.grid.shape}"
            )
        object.__setattr__(self, "member", mem)

    @property
    def is_empty(self) -> bool:
        return not bool(self.member.any())

    def count(self) -> int:
        return int(self.member.sum())

    def union(self, other: "SetMask") -> "SetMask":
        _check_same_grid(self, other, "masks")
        return SetMask(self.grid, self.member | other.member)

    def intersection(self, other: "SetMask") -> "SetMask":
        _check_same_grid(self, other, "masks")
        return SetMask(self.grid, self.member & other.member)

    def contains(self, other: "SetMask") -> bool:
        _check_same_grid(self, other, "masks")
        return bool(np.all(other.member <= self.member))

    def indicator(self) -> GridFunction:
        return GridFunction(self.grid, self.member.astype(float))

    def __eq__(self, other):
        if not isinstance(other, SetMask):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.member, other.member)

    @staticmethod
    def empty(grid: Grid) -> "SetMask":
        return SetMask(grid, np.zeros(grid.shape, dtype=bool))

    @staticmethod
    def full(grid: Grid) -> "SetMask":
        return SetMask(grid, np.ones(grid.shape, dtype=bool))

    @staticmethod
    def from_predicate(grid: Grid, predicate) -> "SetMask":
        """Mask of cells whose center satisfies ``predicate(points) -> bool array``."""
        pts = grid.center_points()
        mem = np.asarray(predicate(pts), dtype=bool).reshape(grid.shape)
        return SetMask(grid, mem)


# ---------------------------------------------------------------------------
# Measures


@dataclass(frozen=True)
class MeasureSpec:
    """Reference measure: plain Lebesgue or the standard Gaussian."""

    kind: str

    def __post_init__(self):
        if self.kind not in ("lebesgue", "gaussian"):
            raise ValueError(f"unknown measure kind {self.kind!r}")

    @property
    def is_gaussian(self) -> bool:
        return self.kind == "gaussian"

    def weights(self, grid: Grid) -> np.ndarray:
        """Cell weights: center density times cell volume."""
        vol = grid.cell_volume
        if self.kind == "lebesgue":
            return np.full(grid.shape, vol)
        msh = grid.mesh()
        sq = sum(m * m for m in msh)
        norm = (2.0 * math.pi) ** (grid.dim / 2.0)
        return np.exp(-0.5 * sq) / norm * vol


LEBESGUE = MeasureSpec("lebesgue")
GAUSSIAN = MeasureSpec("gaussian")


def integrate(f: GridFunction, m: MeasureSpec) -> float:
    """Quadrature of ``f`` against ``m``: sum of value times cell weight."""
    return float(np.sum(f.values * m.weights(f.grid)))


def gauss_density(x):
    """Standard normal density, elementwise."""
    x = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    return out if out.ndim else float(out)


def gauss_phi(x):
    """Standard normal distribution function, elementwise, full double accuracy."""
    arr = np.asarray(x, dtype=float)
    out = 0.5 * _special.erfc(-arr / math.sqrt(2.0))
    return out if out.ndim else float(out)


# Acklam's rational approximation to the inverse normal CDF (relative error
# below 1.2e-9 on (0,1)); one Newton step against gauss_phi then lands well
# inside the 1e-9 roundtrip contract.
_ACKLAM_A = (
    -3.969683028665376e01,
    2.209460984245205e02,
    -2.759285104469687e02,
    1.383577518672690e02,
    -3.066479806614716e01,
    2.506628277459239e00,
)
_ACKLAM_B = (
    -5.447609879822406e01,
    1.615858368580409e02,
    -1.556989798598866e02,
    6.680131188771972e01,
    -1.328068155288572e01,
)
_ACKLAM_C = (
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e00,
    -2.549732539343734e00,
    4.374664141464968e00,
    2.938163982698783e00,
)
_ACKLAM_D = (
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e00,
    3.754408661907416e00,
)
_ACKLAM_SPLIT = 0.02425


def _acklam_tail(q):
    c = _ACKLAM_C
    d = _ACKLAM_D
    num = ((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]
    den = (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
    return num / den


def gauss_phi_inv(p):
    """Inverse of :func:`gauss_phi` on (0, 1).

    Raises :class:`DomainError` outside the open interval.
    """
    arr = np.asarray(p, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise DomainError("gauss_phi_inv requires arguments strictly inside (0, 1)")

    x = np.empty_like(arr)
    lo = arr < _ACKLAM_SPLIT
    hi = arr > 1.0 - _ACKLAM_SPLIT
    mid = ~(lo | hi)

    if lo.any():
        q = np.sqrt(-2.0 * np.log(arr[lo]))
        x[lo] = _acklam_tail(q)
    if hi.any():
        q = np.sqrt(-2.0 * np.log1p(-arr[hi]))
        x[hi] = -_acklam_tail(q)
    if mid.any():
        a = _ACKLAM_A
        b = _ACKLAM_B
        q = arr[mid] - 0.5
        r = q * q
        num = ((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]
        den = ((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0
        x[mid] = num * q / den

    # One Newton refinement against the forward map.
    x -= (0.5 * _special.erfc(-x / math.sqrt(2.0)) - arr) / gauss_density(x)
    return float(x[0]) if scalar else x


# ---------------------------------------------------------------------------
# Level sets, distribution functions, ladders, layer cake


def superlevel_set(f: GridFunction, lam: float) -> SetMask:
    """Strict super-level set ``{f > lam}``."""
    if lam < 0:
        raise DomainError("super-level threshold must be >= 0")
    return SetMask(f.grid, f.values > lam)


def superlevel_set_closed(f: GridFunction, lam: float) -> SetMask:
    """Closed super-level set ``{f >= lam}``, used where attained values matter."""
    return SetMask(f.grid, f.values >= lam)


@dataclass(frozen=True)
class TailMeasure:
    """Right-continuous non-increasing map ``lam -> mu{f > lam}``.

    Stored as sorted sample values with suffix-summed weights so evaluation is
    a binary search.
    """

    sorted_values: np.ndarray
    suffix_weights: np.ndarray  # suffix_weights[i] = total weight of values[i:]

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        idx = np.searchsorted(self.sorted_values, lam, side="right")
        out = self.suffix_weights[idx]
        return out if out.ndim else float(out)

    def breakpoints(self) -> np.ndarray:
        return np.unique(self.sorted_values)

    def pairs(self) -> list[tuple[float, float]]:
        """Distinct (value, tail measure beyond that value) pairs, ascending."""
        return [(float(v), float(self(v))) for v in self.breakpoints()]


def distribution_function(f: GridFunction, m: MeasureSpec) -> TailMeasure:
    order = np.argsort(f.values, axis=None, kind="stable")
    vals = f.values.ravel()[order]
    w = m.weights(f.grid).ravel()[order]
    suffix = np.concatenate([np.cumsum(w[::-1])[::-1], [0.0]])
    return TailMeasure(vals, suffix)


@dataclass(frozen=True)
class ThresholdLadder:
    """Strictly increasing positive levels discretizing the layer-cake integral."""

    levels: np.ndarray

    def __post_init__(self):
        lv = np.ascontiguousarray(np.asarray(self.levels, dtype=float))
        if lv.ndim != 1 or lv.size == 0:
            raise LadderError("ladder needs at least one level")
        if lv[0] <= 0:
            raise LadderError("ladder levels must be positive")
        if np.any(np.diff(lv) <= 0):
            raise LadderError("ladder levels must be strictly increasing")
        object.__setattr__(self, "levels", lv)

    def __len__(self):
        return int(self.levels.size)

    def __iter__(self):
        return iter(self.levels)

    def max_gap(self) -> float:
        """Largest gap, counting the initial step from 0 to the first level."""
        gaps = np.diff(np.concatenate([[0.0], self.levels]))
        return float(gaps.max())


@dataclass(frozen=True)
class AllValues:
    """Ladder of all distinct positive sample values."""


@dataclass(frozen=True)
class Quantile:
    """``m`` levels whose super-level measures are roughly equidistributed."""

    m: int
    measure: MeasureSpec = field(default=LEBESGUE)


def threshold_ladder(f: GridFunction, strategy) -> ThresholdLadder:
    positive = f.values[f.values > 0]
    if positive.size == 0:
        raise LadderError("cannot build a ladder for the zero function")
    if isinstance(strategy, AllValues):
        return ThresholdLadder(np.unique(positive))
    if isinstance(strategy, Quantile):
        if strategy.m < 1:
            raise LadderError("quantile ladder needs m >= 1")
        tail = distribution_function(f, strategy.measure)
        total = tail(0.0)
        vals = np.unique(positive)
        tails_at = tail(vals)  # mu{f > v}, non-increasing in v
        m = strategy.m
        targets = total * (1.0 - (np.arange(1, m + 1)) / (m + 1.0))
        # Smallest value whose tail has dropped to the target.
        idx = np.searchsorted(-tails_at, -targets, side="left")
        idx = np.minimum(idx, vals.size - 1)
        levels = np.unique(vals[idx])
        return ThresholdLadder(levels)
    raise LadderError(f"unknown ladder strategy {strategy!r}")


def layer_cake(ladder: ThresholdLadder, masks: list[SetMask]) -> GridFunction:
    """Piecewise-constant reconstruction ``sum_k (lam_k - lam_{k-1}) * mask_k``.

    Masks must be nested, ``mask_{k+1}`` inside ``mask_k``.  The pairing
    convention that makes reconstruction exact for a ladder-valued function f
    is ``mask_k = {f > lam_{k-1}}`` (equivalently ``{f >= lam_k}``), with
    ``lam_0 = 0``.  Because the masks are nested, the gap sum telescopes to
    the level itself on every cell, so levels are assigned directly; this
    keeps the reconstruction bit-exact instead of accumulating roundoff.
    """
    if len(masks) != len(ladder):
        raise LadderError("need exactly one mask per ladder level")
    grid = masks[0].grid
    for k in range(1, len(masks)):
        if masks[k].grid != grid:
            raise GridMismatchError("layer-cake masks live on different grids")
        if not masks[k - 1].contains(masks[k]):
            raise LadderError(f"masks not nested at level index {k}")
    values = np.zeros(grid.shape)
    for lam, mask in zip(ladder.levels, masks):
        values[mask.member] = lam
    return GridFunction(grid, values)


# ---------------------------------------------------------------------------
# Test-function families


@dataclass(frozen=True)
class GaussianBump:
    center: tuple[float, ...]
    sigma: float
    amplitude: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", _as_float_tuple(self.center))
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.amplitude < 0:
            raise ValueError("amplitude must be non-negative")


@dataclass(frozen=True)
class IndicatorBody:
    """Indicator of a convex body, optionally shifted away from the origin."""

    body: object  # ConvexBody; typed loosely to avoid an import cycle
    shift: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "shift", _as_float_tuple(self.shift) if self.shift else ())


@dataclass(frozen=True)
class ExpLinear:
    """``exp(rate . x)`` clipped at ``clip``; rate may be a scalar (axis 0)."""

    rate: tuple[float, ...]
    clip: float

    def __post_init__(self):
        object.__setattr__(self, "rate", _as_float_tuple(self.rate))
        if not self.clip > 0:
            raise ValueError("clip must be positive")


@dataclass(frozen=True)
class PiecewiseRandom:
    """Seeded random piecewise-constant function with ``levels`` positive values."""

    levels: int
    seed: int

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError("need at least one level")


@dataclass(frozen=True)
class LogConcaveRandom:
    """``exp(-V)`` for a seeded random piecewise-linear convex potential V."""

    seed: int


@dataclass(frozen=True)
class HalfSpaceIndicator:
    """Indicator of the open half-space ``{x . normal < offset}``."""

    normal: tuple[float, ...]
    offset: float

    def __post_init__(self):
        object.__setattr__(self, "normal", _as_float_tuple(self.normal))
        if all(v == 0 for v in self.normal):
            raise ValueError("half-space normal must be nonzero")


@dataclass(frozen=True)
class PhiAffine:
    """``Phi(a + b . x)``: values in (0, 1) with an affine normal-quantile."""

    intercept: float
    slope: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "slope", _as_float_tuple(self.slope))


def make_function(family, grid: Grid) -> GridFunction:
    """Sample a test-function family on a grid; deterministic for fixed seed."""
    if isinstance(family, GaussianBump):
        if len(family.center) != grid.dim:
            raise ValueError("bump center dimension does not match grid")
        msh = grid.mesh()
        sq = sum((m - c) ** 2 for m, c in zip(msh, family.center))
        return GridFunction(grid, family.amplitude * np.exp(-0.5 * sq / family.sigma**2))

    if isinstance(family, IndicatorBody):
        from .convexsets import gauge_values

        shift = family.shift or (0.0,) * grid.dim
        if len(shift) != grid.dim:
            raise ValueError("indicator shift dimension does not match grid")
        pts = grid.center_points() - np.asarray(shift)
        inside = gauge_values(family.body, pts) < 1.0
        return GridFunction(grid, inside.astype(float).reshape(grid.shape))

    if isinstance(family, ExpLinear):
        rate = family.rate
        if len(rate) == 1 and grid.dim == 2:
            rate = (rate[0], 0.0)
        if len(rate) != grid.dim:
            raise ValueError("rate dimension does not match grid")
        msh = grid.mesh()
        lin = sum(r * m for r, m in zip(rate, msh))
        return GridFunction(grid, np.minimum(np.exp(lin), family.clip))

    if isinstance(family, PiecewiseRandom):
        rng = np.random.default_rng(family.seed)
        msh = grid.mesh()
        base = np.zeros(grid.shape)
        span = [grid.hi[i] - grid.lo[i] for i in range(grid.dim)]
        for _ in range(3):
            center = [grid.lo[i] + rng.uniform(0.25, 0.75) * span[i] for i in range(grid.dim)]
            sigma = rng.uniform(0.08, 0.25) * max(span)
            sq = sum((m - c) ** 2 for m, c in zip(msh, center))
            base += rng.uniform(0.5, 1.5) * np.exp(-0.5 * sq / sigma**2)
        values = np.sort(rng.uniform(0.2, 2.0, size=family.levels))
        # Quantize the smooth base into levels+1 bins; lowest bin becomes 0.
        qs = np.quantile(base, np.linspace(0.0, 1.0, family.levels + 2)[1:-1])
        idx = np.searchsorted(qs, base, side="right")
        out = np.concatenate([[0.0], values])[idx]
        return GridFunction(grid, out)

    if isinstance(family, LogConcaveRandom):
        rng = np.random.default_rng(family.seed)
        msh = grid.mesh()
        planes = []
        for _ in range(5):
            slope = rng.uniform(-2.0, 2.0, size=grid.dim)
            offset = rng.uniform(-1.0, 1.0)
            planes.append(sum(s * m for s, m in zip(slope, msh)) + offset)
        potential = np.maximum.reduce(planes)
        potential -= potential.min()
        return GridFunction(grid, np.exp(-potential))

    if isinstance(family, HalfSpaceIndicator):
        if len(family.normal) != grid.dim:
            raise ValueError("half-space normal dimension does not match grid")
        msh = grid.mesh()
        lin = sum(c * m for c, m in zip(family.normal, msh))
        return GridFunction(grid, (lin < family.offset).astype(float))

    if isinstance(family, PhiAffine):
        slope = family.slope
        if len(slope) == 1 and grid.dim == 2:
            slope = (slope[0], 0.0)
        if len(slope) != grid.dim:
            raise ValueError("slope dimension does not match grid")
        msh = grid.mesh()
        lin = family.intercept + sum(c * m for c, m in zip(slope, msh))
        return GridFunction(grid, gauss_phi(lin))

    raise ValueError(f"unknown function family {family!r}")


# ---------------------------------------------------------------------------
# File formats
#
# Header line: ``dim n0 [n1] lo0 hi0 [lo1 hi1]``; values follow row-major.


def _format_header(grid: Grid) -> str:
    parts = [str(grid.dim)] + [str(k) for k in grid.n]
    for i in range(grid.dim):
        parts += [repr(grid.lo[i]), repr(grid.hi[i])]
    return " ".join(parts)


def _parse_header(line: str) -> Grid:
    tokens = line.split()
    if not tokens:
        raise FileFormatError("empty header line")
    try:
        dim = int(tokens[0])
    except ValueError:
        raise FileFormatError(f"bad dimension token {tokens[0]!r}") from None
    if dim not in (1, 2):
        raise FileFormatError(f"dimension must be 1 or 2, got {dim}")
    expect = 1 + dim + 2 * dim
    if len(tokens) != expect:
        raise FileFormatError(
            f"header for dim {dim} needs {expect} tokens, got {len(tokens)}"
        )
    try:
        n = tuple(int(t) for t in tokens[1 : 1 + dim])
        bounds = [float(t) for t in tokens[1 + dim :]]
    except ValueError as exc:
        raise FileFormatError(f"bad header token: {exc}") from None
    lo = tuple(bounds[2 * i] for i in range(dim))
    hi = tuple(bounds[2 * i + 1] for i in range(dim))
    return Grid(lo, hi, n)


def write_grid_function(f: GridFunction, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(_format_header(f.grid) + "\n")
        rows = f.values if f.grid.dim == 2 else f.values.reshape(1, -1)
        for row in rows:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def _read_values(path):
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline()
        grid = _parse_header(header)
        tokens = fh.read().split()
    try:
        vals = np.asarray([float(t) for t in tokens])
    except ValueError as exc:
        raise FileFormatError(f"bad value token: {exc}") from None
    if vals.size != grid.num_cells:
        raise FileFormatError(
            f"expected {grid.num_cells} values, found {vals.size}"
        )
    return grid, vals.reshape(grid.shape)


def read_grid_function(path) -> GridFunction:
    grid, vals = _read_values(path)
    if np.any(vals < 0):
        raise FileFormatError("grid function file contains negative values")
    if not np.all(np.isfinite(vals)):
        raise FileFormatError("grid function file contains non-finite values")
    return GridFunction(grid, vals)


def write_mask(mask: SetMask, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(_format_header(mask.grid) + "\n")
        rows = mask.member if mask.grid.dim == 2 else mask.member.reshape(1, -1)
        for row in rows:
            fh.write(" ".join("1" if v else "0" for v in row) + "\n")


def read_mask(path) -> SetMask:
    grid, vals = _read_values(path)
    if not np.all((vals == 0.0) | (vals == 1.0)):
        raise FileFormatError("mask file values must be 0 or 1")
    return SetMask(grid, vals.astype(bool))
