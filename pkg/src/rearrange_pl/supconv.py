"""Sup-convolution operators computed by two independent routes, plus the
Gaussian quadratic-kernel sup-convolution.

The direct route evaluates, for every output cell z, the supremum of
``M(f1(x), f2(y))`` over source cells x with ``y = (z - t1 x) / t2`` sampled
at the nearest cell.  The level-set route builds super-level sets of the
output as unions of weighted Minkowski sums of super-level sets of the
inputs, indexed by ladder value tuples, and reconstructs through the layer
cake.  The two agree exactly on ladder-valued piecewise-constant inputs, up
to the one-cell rasterization layer; their disagreement elsewhere is bounded
by the output ladder gap and is itself a verification target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage as _ndimage

from .convexsets import distance_dilation, embed_mask, minkowski_weighted_sum
from .errors import GridBoundsError, GridMismatchError, LadderError
from .grid import (
    Grid,
    GridFunction,
    SetMask,
    ThresholdLadder,
    superlevel_set_closed,
)
from .means import MeanSpec, mean_apply

__all__ = [
    "ComboMap",
    "sup_convolve_direct",
    "sup_convolve_levelset",
    "levelset_ladder",
    "gaussian_sup_convolve",
    "supconv_superlevel",
    "max_mismatch_with_slack",
]

_DIRECT_PAIR_LIMIT = 60_000_000
_CHUNK_TARGET = 2_000_000


@dataclass(frozen=True)
class ComboMap:
    """Linear combination map ``(x_1, ..., x_n) -> sum_i t_i x_i``."""

    weights: tuple[float, ...]

    def __post_init__(self):
        w = tuple(float(v) for v in self.weights)
        if len(w) < 2:
            raise ValueError("combination map needs at least two weights")
        if any(not math.isfinite(v) for v in w):
            raise ValueError("combination weights must be finite")
        object.__setattr__(self, "weights", w)

    @property
    def arity(self):
        return len(self.weights)


# ---------------------------------------------------------------------------
# Direct route


def sup_convolve_direct(
    fs, mean: MeanSpec, combo: ComboMap, out_grid: Grid | None = None
) -> GridFunction:
    """Two-function sup-convolution by exhaustive maximization.

    Cost is (output cells) x (source cells); restrict to 1-D grids or coarse
    2-D grids and use the level-set route beyond that.
    """
    if len(fs) != 2 or combo.arity != 2:
        raise ValueError("the direct route handles exactly two functions")
    f1, f2 = fs
    t1, t2 = combo.weights
    if t2 == 0.0:
        raise ValueError("the second combination weight must be nonzero")
    out_grid = out_grid or f1.grid
    if out_grid.dim != f1.grid.dim or f1.grid.dim != f2.grid.dim:
        raise GridMismatchError("direct sup-convolution needs matching dimensions")

    out_pts = out_grid.center_points()
    src_pts = f1.grid.center_points()
    n_out, n_src = out_pts.shape[0], src_pts.shape[0]
    if n_out * n_src > _DIRECT_PAIR_LIMIT:
        raise ValueError(
            "direct sup-convolution pair count too large; use the level-set route"
        )

    f1_flat = f1.values.ravel()
    g = f2.grid
    out_vals = np.zeros(n_out)
    chunk = max(1, _CHUNK_TARGET // max(1, n_src))
    for start in range(0, n_out, chunk):
        z = out_pts[start : start + chunk]  # (c, d)
        y = (z[:, None, :] - t1 * src_pts[None, :, :]) / t2  # (c, n_src, d)
        valid = np.ones(y.shape[:2], dtype=bool)
        idx = []
        for i in range(g.dim):
            u = (y[..., i] - g.lo[i]) / g.h[i]
            k = np.floor(u).astype(np.int64)
            valid &= (k >= 0) & (k < g.n[i])
            idx.append(np.clip(k, 0, g.n[i] - 1))
        vals2 = f2.values[tuple(idx)] if g.dim == 2 else f2.values[idx[0]]
        vals2 = np.where(valid, vals2, 0.0)
        m = mean_apply(mean, [np.broadcast_to(f1_flat, vals2.shape), vals2],
                       extend_boundary=True)
        out_vals[start : start + chunk] = m.max(axis=1)
    return GridFunction(out_grid, out_vals.reshape(out_grid.shape))


# ---------------------------------------------------------------------------
# Level-set route


def _tuple_value_grid(mean: MeanSpec, ladders) -> np.ndarray:
    grids = np.meshgrid(*[lad.levels for lad in ladders], indexing="ij")
    return mean_apply(mean, grids, extend_boundary=True)


def levelset_ladder(mean: MeanSpec, ladders, max_levels: int = 512) -> ThresholdLadder:
    """Output ladder of the level-set route: the mean's image of the input
    ladder tuples, deduplicated and thinned to ``max_levels`` by rank."""
    vals = np.unique(_tuple_value_grid(mean, ladders))
    vals = vals[vals > 0]
    if vals.size == 0:
        raise LadderError("level-set route produced no positive output levels")
    if vals.size > max_levels:
        keep = np.unique(np.round(np.linspace(0, vals.size - 1, max_levels)).astype(int))
        vals = vals[keep]
    return ThresholdLadder(vals)


def _pareto_minimal(group: np.ndarray) -> np.ndarray:
    """Row indices of Pareto-minimal index tuples (componentwise)."""
    k = group.shape[0]
    if k <= 1 or k > 512:
        return np.arange(k)
    dominated = np.zeros(k, dtype=bool)
    for i in range(k):
        if dominated[i]:
            continue
        geq = np.all(group >= group[i], axis=1)
        geq[i] = False
        dominated |= geq
    return np.nonzero(~dominated)[0]


def sup_convolve_levelset(
    fs,
    mean: MeanSpec,
    combo: ComboMap,
    ladders,
    out_grid: Grid | None = None,
    max_levels: int = 512,
    tuple_limit: int = 1 << 20,
) -> GridFunction:
    """Sup-convolution via super-level sets.

    Every ladder value tuple q with ``M(q) > 0`` contributes the weighted
    Minkowski sum of the closed super-level sets ``{f_i >= q_i}``; the output
    super-level set at height lam is the union over tuples with ``M(q) >=
    lam``.  Dominated tuples (componentwise larger at equal mean value)
    contribute nothing and are pruned.
    """
    n = len(fs)
    if n != combo.arity or n != len(ladders):
        raise ValueError("functions, weights, and ladders must align")
    base = fs[0].grid
    for f in fs[1:]:
        if f.grid != base:
            raise GridMismatchError("level-set sup-convolution needs one source grid")
    out_grid = out_grid or base

    sizes = [len(lad) for lad in ladders]
    if int(np.prod(sizes)) > tuple_limit:
        raise ValueError(
            "ladder tuple count exceeds the limit; thin the ladders (quantile strategy)"
        )

    values = _tuple_value_grid(mean, ladders)
    flat_vals = values.ravel()
    index_tuples = np.stack(
        [g.ravel() for g in np.meshgrid(*[np.arange(s) for s in sizes], indexing="ij")],
        axis=-1,
    )
    positive = flat_vals > 0
    flat_vals = flat_vals[positive]
    index_tuples = index_tuples[positive]

    out_ladder = levelset_ladder(mean, ladders, max_levels=max_levels)

    # Prune within equal-value groups: only Pareto-minimal tuples matter.
    order = np.argsort(-flat_vals, kind="stable")
    flat_vals = flat_vals[order]
    index_tuples = index_tuples[order]
    kept_vals = []
    kept_tuples = []
    start = 0
    while start < flat_vals.size:
        stop = start
        while stop < flat_vals.size and flat_vals[stop] == flat_vals[start]:
            stop += 1
        sel = _pareto_minimal(index_tuples[start:stop])
        kept_vals.append(flat_vals[start:stop][sel])
        kept_tuples.append(index_tuples[start:stop][sel])
        start = stop
    flat_vals = np.concatenate(kept_vals)
    index_tuples = np.concatenate(kept_tuples)

    # Super-level sets per function and ladder level, embedded on the out grid.
    level_sets = []
    for f, lad in zip(fs, ladders):
        sets = []
        for lam in lad.levels:
            mk = superlevel_set_closed(f, lam)
            sets.append(mk if out_grid == base else embed_mask(mk, out_grid))
        level_sets.append(sets)

    acc = np.zeros(out_grid.shape, dtype=bool)
    masks_desc = []
    ptr = 0
    for lam in out_ladder.levels[::-1]:
        while ptr < flat_vals.size and flat_vals[ptr] >= lam:
            combo_sets = [
                level_sets[i][index_tuples[ptr][i]] for i in range(n)
            ]
            summed = minkowski_weighted_sum(combo_sets, list(combo.weights))
            acc |= summed.member
            ptr += 1
        masks_desc.append(SetMask(out_grid, acc.copy()))
    masks = masks_desc[::-1]
    from .grid import layer_cake

    return layer_cake(out_ladder, masks)


# ---------------------------------------------------------------------------
# Gaussian quadratic-kernel sup-convolution


def gaussian_sup_convolve(
    f: GridFunction, lam: float, out_grid: Grid | None = None
) -> GridFunction:
    """``sup_w f(z + w) exp(-|w|^2 / (2 lam))`` by exhaustive maximization.

    In 2-D the maximization runs axis by axis, which is an exact regrouping of
    the brute-force maximum, not an approximation.  Dominates f pointwise when
    the output grid equals the source grid, never exceeds ``max f``, and is
    monotone in lam cell by cell.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    out_grid = out_grid or f.grid
    if out_grid.dim != f.grid.dim:
        raise GridMismatchError("output grid dimension must match the source")

    if f.grid.dim == 1:
        src = f.grid.centers(0)
        dst = out_grid.centers(0)
        vals = np.zeros(dst.size)
        chunk = max(1, _CHUNK_TARGET // max(1, src.size))
        for start in range(0, dst.size, chunk):
            d = dst[start : start + chunk, None] - src[None, :]
            vals[start : start + chunk] = np.max(
                f.values[None, :] * np.exp(-0.5 * d * d / lam), axis=1
            )
        return GridFunction(out_grid, vals)

    src0, src1 = f.grid.centers(0), f.grid.centers(1)
    dst0, dst1 = out_grid.centers(0), out_grid.centers(1)
    k1 = np.exp(-0.5 * (src1[:, None] - dst1[None, :]) ** 2 / lam)  # (n1, m1)
    partial = np.max(f.values[:, :, None] * k1[None, :, :], axis=1)  # (n0, m1)
    k0 = np.exp(-0.5 * (src0[:, None] - dst0[None, :]) ** 2 / lam)  # (n0, m0)
    out = np.max(partial[:, None, :] * k0[:, :, None], axis=0)  # (m0, m1)
    return GridFunction(out_grid, out)


def supconv_superlevel(f: GridFunction, lam: float, s: float) -> SetMask:
    """Level-set route to ``{gaussian_sup_convolve(f, lam) > s}``.

    Union over attained values v > s of the super-level set ``{f >= v}``
    dilated by the open ball of radius ``sqrt(2 lam ln(v / s))``; the radius is
    the largest the quadratic kernel allows while keeping the product above s.
    """
    if s <= 0:
        raise ValueError("s must be positive")
    if lam <= 0:
        raise ValueError("lam must be positive")
    member = np.zeros(f.grid.shape, dtype=bool)
    for v in np.unique(f.values):
        if v <= s:
            continue
        radius = math.sqrt(2.0 * lam * math.log(v / s))
        dilated = distance_dilation(superlevel_set_closed(f, v), radius)
        member |= dilated.member
    return SetMask(f.grid, member)


# ---------------------------------------------------------------------------
# Cross-route comparison


def max_mismatch_with_slack(f: GridFunction, g: GridFunction, cells: int = 1) -> float:
    """Largest one-sided disagreement after allowing ``cells`` of spatial slack.

    Each function is compared against the local maximum of the other over a
    ``(2 cells + 1)``-wide window, which absorbs the one-cell-layer wiggle the
    rasterized routes are allowed.
    """
    if f.grid != g.grid:
        raise GridMismatchError("cannot compare functions on different grids")
    size = 2 * cells + 1
    g_max = _ndimage.maximum_filter(g.values, size=size, mode="nearest")
    f_max = _ndimage.maximum_filter(f.values, size=size, mode="nearest")
    d1 = float(np.max(f.values - g_max, initial=0.0))
    d2 = float(np.max(g.values - f_max, initial=0.0))
    return max(d1, d2, 0.0)
