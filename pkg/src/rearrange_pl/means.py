"""Coordinate-increasing means, monotone transforms, and the BBL exponent map.

A mean here is a function M on non-negative tuples that is strictly increasing
under strict componentwise domination, vanishes when any coordinate vanishes,
and is sup-continuous from below.  Four families are provided: weighted power
means (with tagged exponents for the limits), the weighted geometric mean, the
normal-CDF mean ``Phi(sum_i w_i Phi^-1(u_i))``, and the two-sided polar
min-mean ``min(u^((1-t)/(1-lam)), v^(t/lam))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .grid import GridFunction, gauss_phi, gauss_phi_inv

__all__ = [
    "ExtendedReal",
    "NEG_INF",
    "POS_INF",
    "MeanSpec",
    "PowerMean",
    "GeometricMean",
    "PhiMean",
    "PolarMinMean",
    "evaluate_mean",
    "mean_apply",
    "check_coordinate_increasing",
    "CoordinateIncreasingReport",
    "PsiTransform",
    "Identity",
    "Power",
    "Clamp",
    "PiecewiseMonotone",
    "psi_apply",
    "psi_values",
    "bbl_exponent",
]

# Switch to the log-domain series for power means this close to p = 0.
_P_SERIES_CUTOFF = 1e-5


@dataclass(frozen=True)
class ExtendedReal:
    """Exponent on the extended real line, tagged rather than a float sentinel."""

    kind: str  # "finite" | "pos_inf" | "neg_inf"
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in ("finite", "pos_inf", "neg_inf"):
            raise ValueError(f"unknown extended-real kind {self.kind!r}")
        if self.kind == "finite" and not math.isfinite(self.value):
            raise ValueError("finite extended real must hold a finite value")

    @staticmethod
    def of(x) -> "ExtendedReal":
        if isinstance(x, ExtendedReal):
            return x
        x = float(x)
        if math.isinf(x):
            return POS_INF if x > 0 else NEG_INF
        return ExtendedReal("finite", x)

    @property
    def is_finite(self) -> bool:
        return self.kind == "finite"

    def __repr__(self):
        if self.kind == "pos_inf":
            return "+inf"
        if self.kind == "neg_inf":
            return "-inf"
        return repr(self.value)


POS_INF = ExtendedReal("pos_inf")
NEG_INF = ExtendedReal("neg_inf")


def _check_weights(weights) -> tuple[float, ...]:
    w = tuple(float(v) for v in weights)
    if len(w) < 2:
        raise ValueError("means need at least two weights")
    if any(v <= 0 for v in w):
        raise ValueError("mean weights must be strictly positive")
    return w


class MeanSpec:
    """Base class for coordinate-increasing means."""

    arity: int


@dataclass(frozen=True)
class PowerMean(MeanSpec):
    """Weighted power mean ``(sum_i t_i u_i^p)^(1/p)`` with tagged exponent.

    ``p = 0`` is the geometric limit, ``p = -inf`` the min, ``p = +inf`` the
    max; any zero coordinate annihilates the value.
    """

    p: ExtendedReal
    weights: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "p", ExtendedReal.of(self.p))
        object.__setattr__(self, "weights", _check_weights(self.weights))

    @property
    def arity(self):
        return len(self.weights)


@dataclass(frozen=True)
class GeometricMean(MeanSpec):
    """Weighted geometric mean ``prod_i u_i^(t_i)``."""

    weights: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", _check_weights(self.weights))

    @property
    def arity(self):
        return len(self.weights)


@dataclass(frozen=True)
class PhiMean(MeanSpec):
    """Normal-CDF mean ``Phi(sum_i w_i Phi^-1(u_i))`` on [0, 1)^n.

    Inputs equal to 1 are outside the strict domain; the sup-from-below
    boundary extension (value 1 when every coordinate is positive and one of
    them hits 1) is available through ``extend_boundary``.
    """

    weights: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", _check_weights(self.weights))

    @property
    def arity(self):
        return len(self.weights)


@dataclass(frozen=True)
class PolarMinMean(MeanSpec):
    """Two-coordinate mean ``min(u^((1-t)/(1-lam)), v^(t/lam))``.

    The exponents are not weights summing to one, but the map is still
    coordinate increasing, which is all the sup-convolution machinery needs.
    """

    t: float
    lam: float

    def __post_init__(self):
        if not 0.0 < self.t < 1.0:
            raise ValueError("t must lie in (0, 1)")
        if not 0.0 < self.lam < 1.0:
            raise ValueError("lam must lie in (0, 1)")

    @property
    def arity(self):
        return 2

    @property
    def exponents(self) -> tuple[float, float]:
        return ((1.0 - self.t) / (1.0 - self.lam), self.t / self.lam)


def _power_mean_positive(us, p: float, weights):
    """Power mean on strictly positive arrays; p finite and nonzero.

    The raw formula ``(sum t u^p)^(1/p)`` loses eps/p relative accuracy for
    small p, so below the cutoff a second-order log-domain series is used and
    in the moderate range the evaluation is centered on the geometric mean:
    with d_i = log u_i - mean log, every intermediate scales with p and the
    final division by p keeps relative error at machine level.
    """
    total = sum(weights)
    logs = [np.log(u) for u in us]
    mean_log = sum(w * lg for w, lg in zip(weights, logs)) / total

    if abs(p) < _P_SERIES_CUTOFF:
        # log M = log(T)/p + A1 + (p/2) (A2 - A1^2) + O(p^2) on t_i / T.
        a2 = sum(w * lg * lg for w, lg in zip(weights, logs)) / total
        log_m = math.log(total) / p + mean_log + 0.5 * p * (a2 - mean_log * mean_log)
        return np.exp(log_m)

    spread = max(float(np.max(np.abs(p * (lg - mean_log)))) for lg in logs)
    if spread <= 30.0:
        z = sum(
            (w / total) * np.expm1(p * (lg - mean_log)) for w, lg in zip(weights, logs)
        )
        return np.exp(math.log(total) / p + mean_log + np.log1p(z) / p)

    # Wide spread: rescale by the binding coordinate so powers stay bounded.
    extreme = np.maximum.reduce(us) if p > 0 else np.minimum.reduce(us)
    acc = sum(w * np.power(u / extreme, p) for w, u in zip(weights, us))
    return extreme * np.power(acc, 1.0 / p)


def mean_apply(spec: MeanSpec, us, extend_boundary: bool = False) -> np.ndarray:
    """Vectorized mean evaluation over broadcastable non-negative arrays.

    Any zero coordinate gives 0.  ``extend_boundary`` enables the PhiMean
    boundary convention at 1; without it such inputs raise DomainError.
    """
    us = [np.asarray(u, dtype=float) for u in us]
    if len(us) != spec.arity:
        raise ValueError(f"mean expects {spec.arity} coordinates, got {len(us)}")
    us = list(np.broadcast_arrays(*us))
    out_shape = us[0].shape
    if us[0].ndim == 0:
        us = [np.atleast_1d(u) for u in us]
    if any(np.any(u < 0) for u in us):
        raise DomainError("mean arguments must be non-negative")
    positive = np.ones(us[0].shape, dtype=bool)
    for u in us:
        positive &= u > 0
    out = np.zeros(us[0].shape)

    if isinstance(spec, GeometricMean):
        safe = [np.where(positive, u, 1.0) for u in us]
        acc = sum(w * np.log(u) for w, u in zip(spec.weights, safe))
        out[positive] = np.exp(acc[positive])
        return out.reshape(out_shape)

    if isinstance(spec, PowerMean):
        safe = [np.where(positive, u, 1.0) for u in us]
        if spec.p.kind == "neg_inf":
            val = np.minimum.reduce(safe)
        elif spec.p.kind == "pos_inf":
            val = np.maximum.reduce(safe)
        elif spec.p.value == 0.0:
            acc = sum(w * np.log(u) for w, u in zip(spec.weights, safe))
            val = np.exp(acc)
        else:
            val = _power_mean_positive(safe, spec.p.value, spec.weights)
        out[positive] = val[positive]
        return out.reshape(out_shape)

    if isinstance(spec, PhiMean):
        over = [u > 1.0 for u in us]
        if any(np.any(o) for o in over):
            raise DomainError("PhiMean arguments must not exceed 1")
        at_one = np.zeros(us[0].shape, dtype=bool)
        for u in us:
            at_one |= u == 1.0
        if np.any(at_one & positive) and not extend_boundary:
            raise DomainError(
                "PhiMean argument equals 1; enable extend_boundary for the "
                "sup-from-below convention"
            )
        interior = positive & ~at_one
        safe = [np.where(interior, u, 0.5) for u in us]
        acc = sum(w * gauss_phi_inv(u) for w, u in zip(spec.weights, safe))
        out[interior] = np.asarray(gauss_phi(acc))[interior]
        out[positive & at_one] = 1.0
        return out.reshape(out_shape)

    if isinstance(spec, PolarMinMean):
        e1, e2 = spec.exponents
        val = np.minimum(np.power(us[0], e1), np.power(us[1], e2))
        out[positive] = val[positive]
        return out.reshape(out_shape)

    raise ValueError(f"unknown mean spec {spec!r}")


def evaluate_mean(spec: MeanSpec, u, extend_boundary: bool = False) -> float:
    """Scalar mean of one coordinate tuple."""
    u = [float(v) for v in u]
    if any(not math.isfinite(v) for v in u):
        raise DomainError("mean arguments must be finite")
    arr = mean_apply(spec, [np.asarray(v) for v in u], extend_boundary=extend_boundary)
    return float(arr)


@dataclass(frozen=True)
class CoordinateIncreasingReport:
    pairs_checked: int
    monotonicity_failures: list
    sup_continuity_gap: float
    sup_continuity_tol: float

    @property
    def passed(self) -> bool:
        return (
            not self.monotonicity_failures
            and self.sup_continuity_gap <= self.sup_continuity_tol
        )


def check_coordinate_increasing(
    spec: MeanSpec, samples, sup_tol: float = 1e-6
) -> CoordinateIncreasingReport:
    """Verify strict monotonicity on dominated pairs and sup-continuity from
    below along a refining sequence approaching each upper point."""
    failures = []
    worst_sup_gap = 0.0
    count = 0
    for x, y in samples:
        x = tuple(float(v) for v in x)
        y = tuple(float(v) for v in y)
        if any(b <= 0 for b in y) or any(a <= b for a, b in zip(x, y)):
            raise ValueError("samples must be strictly positive, strictly dominated pairs")
        count += 1
        mx = evaluate_mean(spec, x)
        my = evaluate_mean(spec, y)
        if not mx > my:
            failures.append((x, y, mx, my))
        approached = 0.0
        for j in range(1, 26):
            shrink = 1.0 - 0.5**j
            approached = max(approached, evaluate_mean(spec, tuple(v * shrink for v in x)))
        worst_sup_gap = max(worst_sup_gap, abs(mx - approached))
    return CoordinateIncreasingReport(count, failures, worst_sup_gap, sup_tol)


# ---------------------------------------------------------------------------
# Monotone transforms


class PsiTransform:
    """Non-negative, non-decreasing transform applied outside a sup-convolution."""

    def apply(self, values: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class Identity(PsiTransform):
    def apply(self, values):
        return np.asarray(values, dtype=float)


@dataclass(frozen=True)
class Power(PsiTransform):
    q: float

    def __post_init__(self):
        if self.q < 0:
            raise ValueError("power transform exponent must be >= 0")

    def apply(self, values):
        return np.power(np.asarray(values, dtype=float), self.q)


@dataclass(frozen=True)
class Clamp(PsiTransform):
    c: float

    def __post_init__(self):
        if self.c < 0:
            raise ValueError("clamp level must be >= 0")

    def apply(self, values):
        return np.minimum(np.asarray(values, dtype=float), self.c)


@dataclass(frozen=True)
class PiecewiseMonotone(PsiTransform):
    """Piecewise-linear interpolation through non-decreasing breakpoints."""

    xs: tuple[float, ...]
    ys: tuple[float, ...]

    def __post_init__(self):
        xs = tuple(float(v) for v in self.xs)
        ys = tuple(float(v) for v in self.ys)
        if len(xs) != len(ys) or len(xs) < 2:
            raise ValueError("need matching xs and ys with at least two breakpoints")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("breakpoint xs must be strictly increasing")
        if any(b < a for a, b in zip(ys, ys[1:])) or ys[0] < 0:
            raise ValueError("breakpoint ys must be non-negative and non-decreasing")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    def apply(self, values):
        return np.interp(np.asarray(values, dtype=float), self.xs, self.ys)


def psi_values(psi: PsiTransform, values: np.ndarray) -> np.ndarray:
    return psi.apply(values)


def psi_apply(psi: PsiTransform, f: GridFunction) -> GridFunction:
    """Pointwise application; preserves non-negativity."""
    return GridFunction(f.grid, psi.apply(f.values))


# ---------------------------------------------------------------------------
# Borell-Brascamp-Lieb exponent map


def bbl_exponent(p, dim: int) -> ExtendedReal:
    """Map the integrand exponent p to the integral exponent ``p / (dim p + 1)``.

    Defined for ``p >= -1/dim``; the boundary maps to -inf and ``p = +inf``
    to ``1/dim``.
    """
    p = ExtendedReal.of(p)
    if dim < 1:
        raise ValueError("dimension must be a positive integer")
    if p.kind == "pos_inf":
        return ExtendedReal.of(1.0 / dim)
    if p.kind == "neg_inf":
        raise DomainError("exponent must satisfy p >= -1/dim")
    if p.value < -1.0 / dim - 1e-15:
        raise DomainError("exponent must satisfy p >= -1/dim")
    if abs(p.value + 1.0 / dim) <= 1e-15:
        return NEG_INF
    if p.value == 0.0:
        return ExtendedReal.of(0.0)
    return ExtendedReal.of(p.value / (dim * p.value + 1.0))
