"""Convex bodies, gauges, weighted Minkowski sums, and set-level inequality checks.

The workhorse here is the snap-to-cell weighted Minkowski sum: a cell belongs
to ``sum_i t_i A_i`` when some combination of member-cell centers lands within
half a cell spacing of its center, per axis.  Exactness is impossible on a
grid; the one-cell-layer slack this introduces is absorbed by the tolerance
model used in all inequality verdicts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage as _ndimage

from .errors import GridBoundsError, GridMismatchError
from .grid import (
    GAUSSIAN,
    LEBESGUE,
    Grid,
    MeasureSpec,
    SetMask,
    gauss_phi,
    gauss_phi_inv,
)

__all__ = [
    "ConvexBody",
    "Ball",
    "Box",
    "Polygon",
    "Gauge",
    "gauge_values",
    "volume",
    "minkowski_weighted_sum",
    "scaled_body_mask",
    "ball_mask",
    "distance_dilation",
    "embed_mask",
    "bmi_check",
    "gaussian_isoperimetry_check",
]


# ---------------------------------------------------------------------------
# Bodies and gauges


class ConvexBody:
    """Open convex body whose closure contains the origin."""

    symmetric: bool = False

    def gauge(self, points: np.ndarray) -> np.ndarray:
        """Minkowski functional: ``gauge(x) <= 1`` iff x is in the closed body."""
        raise NotImplementedError

    def volume_exact(self, dim: int) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class Ball(ConvexBody):
    r: float
    symmetric = True

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("ball radius must be positive")

    def gauge(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.sqrt(np.sum(pts * pts, axis=-1)) / self.r

    def volume_exact(self, dim):
        if dim == 1:
            return 2.0 * self.r
        return math.pi * self.r * self.r


@dataclass(frozen=True)
class Box(ConvexBody):
    """Origin-centered axis box with the given halfwidths."""

    halfwidths: tuple[float, ...]
    symmetric = True

    def __post_init__(self):
        hw = tuple(float(w) for w in np.atleast_1d(self.halfwidths))
        if any(w <= 0 for w in hw):
            raise ValueError("box halfwidths must be positive")
        object.__setattr__(self, "halfwidths", hw)

    def gauge(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        hw = np.asarray(self.halfwidths)
        return np.max(np.abs(pts) / hw, axis=-1)

    def volume_exact(self, dim):
        if dim != len(self.halfwidths):
            raise ValueError("box dimension mismatch")
        return float(np.prod([2.0 * w for w in self.halfwidths]))


@dataclass(frozen=True)
class Polygon(ConvexBody):
    """Strictly convex counter-clockwise polygon (2-D only)."""

    vertices: tuple[tuple[float, float], ...]
    symmetric: bool = False

    def __post_init__(self):
        verts = tuple(tuple(float(c) for c in v) for v in self.vertices)
        if len(verts) < 3:
            raise ValueError("polygon needs at least 3 vertices")
        object.__setattr__(self, "vertices", verts)
        v = np.asarray(verts)
        nxt = np.roll(v, -1, axis=0)
        nxt2 = np.roll(v, -2, axis=0)
        cross = (nxt[:, 0] - v[:, 0]) * (nxt2[:, 1] - nxt[:, 1]) - (
            nxt[:, 1] - v[:, 1]
        ) * (nxt2[:, 0] - nxt[:, 0])
        if np.any(cross <= 0):
            raise ValueError("polygon vertices must be strictly convex, counter-clockwise")
        normals, offsets = self._edges()
        if np.any(offsets < -1e-12):
            raise ValueError("polygon closure must contain the origin")
        if self.symmetric:
            reflected = {(-x, -y) for x, y in verts}
            if reflected != set(verts):
                raise ValueError("polygon marked symmetric is not origin-symmetric")

    def _edges(self):
        v = np.asarray(self.vertices)
        edge = np.roll(v, -1, axis=0) - v
        normals = np.stack([edge[:, 1], -edge[:, 0]], axis=-1)  # outward for CCW
        offsets = np.sum(normals * v, axis=-1)
        return normals, offsets

    def gauge(self, points):
        # Half-plane form of the Minkowski functional: the binding edge is the
        # one the ray from the origin through x exits.
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        normals, offsets = self._edges()
        dots = pts @ normals.T
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = dots / offsets
        ratios = np.where(offsets > 0, ratios, np.where(dots > 0, np.inf, -np.inf))
        out = np.max(ratios, axis=-1)
        return np.maximum(out, 0.0)

    def volume_exact(self, dim):
        if dim != 2:
            raise ValueError("polygons are 2-D bodies")
        v = np.asarray(self.vertices)
        nxt = np.roll(v, -1, axis=0)
        return float(0.5 * np.sum(v[:, 0] * nxt[:, 1] - nxt[:, 0] * v[:, 1]))


@dataclass(frozen=True)
class Gauge:
    """Callable wrapper around a body's Minkowski functional."""

    body: ConvexBody

    def __call__(self, points):
        return self.body.gauge(points)


def gauge_values(body: ConvexBody, points: np.ndarray) -> np.ndarray:
    return body.gauge(points)


# ---------------------------------------------------------------------------
# Volumes and masks


def volume(a: SetMask, m: MeasureSpec) -> float:
    """Measure of a mask: sum of member-cell weights."""
    return float(np.sum(m.weights(a.grid)[a.member]))


def scaled_body_mask(body: ConvexBody, s: float, grid: Grid) -> SetMask:
    """Mask of the open scaled body ``sK``: cells with ``gauge(center) < s``."""
    if s < 0:
        raise ValueError("scale must be non-negative")
    if s == 0:
        return SetMask.empty(grid)
    g = body.gauge(grid.center_points())
    return SetMask(grid, (g < s).reshape(grid.shape))


def ball_mask(grid: Grid, radius: float, center=None) -> SetMask:
    """Open Euclidean ball ``{|x - center| < radius}`` as a mask."""
    if radius <= 0:
        return SetMask.empty(grid)
    pts = grid.center_points()
    if center is not None:
        pts = pts - np.asarray(center, dtype=float)
    inside = np.sum(pts * pts, axis=-1) < radius * radius
    return SetMask(grid, inside.reshape(grid.shape))


def embed_mask(mask: SetMask, big: Grid) -> SetMask:
    """Re-embed a mask into a cell-aligned enlargement of its grid."""
    g = mask.grid
    if big.dim != g.dim:
        raise GridMismatchError("embedding target has different dimension")
    offs = []
    for i in range(g.dim):
        if abs(big.h[i] - g.h[i]) > 1e-12 * g.h[i]:
            raise GridMismatchError("embedding target has different spacing")
        off = (g.lo[i] - big.lo[i]) / g.h[i]
        if abs(off - round(off)) > 1e-9:
            raise GridMismatchError("embedding target is not cell-aligned")
        offs.append(int(round(off)))
        if offs[i] < 0 or offs[i] + g.n[i] > big.n[i]:
            raise GridBoundsError("embedding target does not cover the source grid")
    mem = np.zeros(big.shape, dtype=bool)
    sl = tuple(slice(offs[i], offs[i] + g.n[i]) for i in range(g.dim))
    mem[sl] = mask.member
    return SetMask(big, mem)


# ---------------------------------------------------------------------------
# Weighted Minkowski sums

_PAIR_CHUNK = 4_000_000
_MAX_TUPLE_POINTS = 20_000_000


def _scatter_points(points: np.ndarray, grid: Grid, out: np.ndarray) -> None:
    """Mark every cell whose center is within h/2 (per axis) of a point.

    Points sitting exactly on a cell edge tie and mark both neighbors.
    Out-of-range candidate cells are dropped, never clipped, so a point at
    the box boundary marks only the cell it actually touches.
    """
    axis_variants = []
    for i in range(grid.dim):
        u = (points[:, i] - grid.lo[i]) / grid.h[i]
        base = np.floor(u).astype(np.int64)
        frac = u - base
        variants = [base]
        tie_lo = frac < 1e-9  # point on the lower edge also covers cell base-1
        tie_hi = frac > 1.0 - 1e-9  # on the upper edge also covers cell base+1
        if tie_lo.any():
            variants.append(np.where(tie_lo, base - 1, base))
        if tie_hi.any():
            variants.append(np.where(tie_hi, base + 1, base))
        axis_variants.append(variants)

    def scatter(idx_per_axis):
        ok = np.ones(points.shape[0], dtype=bool)
        for i, idx in enumerate(idx_per_axis):
            ok &= (idx >= 0) & (idx < grid.n[i])
        if not ok.any():
            return
        if grid.dim == 1:
            out[idx_per_axis[0][ok]] = True
        else:
            out[idx_per_axis[0][ok], idx_per_axis[1][ok]] = True

    if grid.dim == 1:
        for ix in axis_variants[0]:
            scatter([ix])
    else:
        for ix in axis_variants[0]:
            for iy in axis_variants[1]:
                scatter([ix, iy])


def minkowski_weighted_sum(masks: list[SetMask], t: list[float]) -> SetMask:
    """Snap-to-cell rasterization of ``t_1 A_1 + ... + t_n A_n``.

    All masks must live on one grid, which must also contain the result;
    combinations falling outside the box raise :class:`GridBoundsError` (the
    caller is expected to enlarge the grid).  Negative weights act on the
    reflected mask, which the weighted center arithmetic realizes directly.

    Complexity is the product of the member-cell counts of the first n-1
    masks times a vectorized pass over the last, so keep early masks small.
    """
    if len(masks) != len(t):
        raise ValueError("need one weight per mask")
    if len(masks) < 1:
        raise ValueError("need at least one mask")
    grid = masks[0].grid
    for mk in masks[1:]:
        if mk.grid != grid:
            raise GridMismatchError("minkowski sum operands live on different grids")

    if any(mk.is_empty for mk in masks):
        return SetMask.empty(grid)

    pts = [mk.grid.center_points()[mk.member.ravel()] for mk in masks]
    weights = [float(w) for w in t]

    # Interval-arithmetic bounds check before any work.
    for i in range(grid.dim):
        lo_sum = hi_sum = 0.0
        for p, w in zip(pts, weights):
            lo_c, hi_c = p[:, i].min(), p[:, i].max()
            a, b = w * lo_c, w * hi_c
            lo_sum += min(a, b)
            hi_sum += max(a, b)
        pad = 1e-9 * max(1.0, abs(grid.lo[i]), abs(grid.hi[i]))
        if lo_sum < grid.lo[i] - pad or hi_sum > grid.hi[i] + pad:
            raise GridBoundsError(
                f"axis {i}: weighted sum spans [{lo_sum:.6g}, {hi_sum:.6g}] "
                f"outside grid [{grid.lo[i]:.6g}, {grid.hi[i]:.6g}]"
            )

    counts = [p.shape[0] for p in pts]
    total = int(np.prod(counts[:-1])) if len(counts) > 1 else 1
    if total * counts[-1] > _MAX_TUPLE_POINTS * 4:
        raise GridBoundsError(
            "minkowski sum is too large; coarsen the masks or thin the ladders"
        )

    out = np.zeros(grid.shape, dtype=bool)
    last = pts[-1] * weights[-1]
    if len(masks) == 1:
        _scatter_points(last, grid, out)
        return SetMask(grid, out)

    # Iterate combinations of all but the last mask, vectorizing over the last.
    import itertools

    lead_iters = [range(c) for c in counts[:-1]]
    chunk = max(1, _PAIR_CHUNK // max(1, counts[-1]))
    buffer = []
    for combo in itertools.product(*lead_iters):
        offset = sum(weights[j] * pts[j][combo[j]] for j in range(len(combo)))
        buffer.append(offset)
        if len(buffer) >= chunk:
            offs = np.asarray(buffer)
            _scatter_points(
                (offs[:, None, :] + last[None, :, :]).reshape(-1, grid.dim), grid, out
            )
            buffer = []
    if buffer:
        offs = np.asarray(buffer)
        _scatter_points(
            (offs[:, None, :] + last[None, :, :]).reshape(-1, grid.dim), grid, out
        )
    return SetMask(grid, out)


def distance_dilation(a: SetMask, radius: float) -> SetMask:
    """Open dilation ``{z : dist(z, A) < radius}`` via the Euclidean distance
    transform of cell centers.  ``radius = 0`` returns A itself."""
    if a.is_empty or radius == 0:
        return a
    dist = _ndimage.distance_transform_edt(~a.member, sampling=a.grid.h)
    return SetMask(a.grid, dist < radius)


# ---------------------------------------------------------------------------
# Set-level inequality checks


def bmi_check(a: SetMask, b: SetMask, t: float, spec, tolerance=None):
    """Brunn-Minkowski chain on masks under Lebesgue measure.

    Terms: ``|(1-t)A + tB|``, ``|(1-t)A* + tB*|``, ``|A|^(1-t) |B|^t``,
    verified non-increasing within the tolerance model.
    """
    from .harness import ChainReport, ToleranceModel
    from .rearrange import rearrange_set

    if not 0.0 < t < 1.0:
        raise ValueError("t must lie in (0, 1)")
    _check_pair_grid(a, b)
    tolerance = tolerance or ToleranceModel()
    grid = a.grid
    labels = ["|(1-t)A + tB|", "|(1-t)A* + tB*|", "|A|^(1-t) |B|^t"]

    if a.is_empty or b.is_empty:
        return ChainReport.build(
            name="bmi",
            labels=labels,
            values=[0.0, 0.0, 0.0],
            tol=tolerance.tolerance(max(grid.h), 1.0),
            degenerate=True,
            metadata={"reason": "empty operand"},
        )

    vol_a = volume(a, LEBESGUE)
    vol_b = volume(b, LEBESGUE)
    direct = volume(minkowski_weighted_sum([a, b], [1.0 - t, t]), LEBESGUE)
    a_star = rearrange_set(a, spec)
    b_star = rearrange_set(b, spec)
    rearranged = volume(
        minkowski_weighted_sum([a_star.mask, b_star.mask], [1.0 - t, t]), LEBESGUE
    )
    bound = vol_a ** (1.0 - t) * vol_b**t
    values = [direct, rearranged, bound]
    tol = tolerance.tolerance(max(grid.h), max(map(abs, values)))
    return ChainReport.build(
        name="bmi",
        labels=labels,
        values=values,
        tol=tol,
        metadata={"t": t, "grid_n": grid.n, "|A|": vol_a, "|B|": vol_b},
    )


def gaussian_isoperimetry_check(a: SetMask, r: float, tolerance=None):
    """Gaussian isoperimetric comparison: dilating a set by an r-ball keeps at
    least the Gaussian mass of the equally-massive half-space dilated by r.

    Terms: ``gamma_d(A + r B_d)`` and ``Phi(Phi^-1(gamma_d(A)) + r)``.
    """
    from .harness import ChainReport, ToleranceModel

    if r < 0:
        raise ValueError("radius must be non-negative")
    tolerance = tolerance or ToleranceModel()
    grid = a.grid
    labels = ["gamma_d(A + r B_d)", "Phi(Phi^-1(gamma_d(A)) + r)"]
    mass = volume(a, GAUSSIAN)
    if mass <= 0.0 or mass >= 1.0:
        return ChainReport.build(
            name="gaussian_isoperimetry",
            labels=labels,
            values=[mass, mass],
            tol=tolerance.tolerance(max(grid.h), 1.0),
            degenerate=True,
            metadata={"reason": "degenerate mass", "mass": mass},
        )
    dilated = distance_dilation(a, r)
    lhs = volume(dilated, GAUSSIAN)
    rhs = gauss_phi(gauss_phi_inv(mass) + r)
    tol = tolerance.tolerance(max(grid.h), 1.0)
    return ChainReport.build(
        name="gaussian_isoperimetry",
        labels=labels,
        values=[lhs, rhs],
        tol=tol,
        metadata={"r": r, "mass": mass, "grid_n": grid.n},
    )


def _check_pair_grid(a: SetMask, b: SetMask):
    if a.grid != b.grid:
        raise GridMismatchError("masks live on different grids")
