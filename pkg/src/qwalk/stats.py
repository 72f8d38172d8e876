"""
Observables of channel distributions.

Distributions are 1-D arrays over the ``N`` channel slots; the coordinate of
slot ``k`` is the half-integer ``k - N/2 + 1/2`` unless explicit coordinates
are given.  Entropies use the natural log.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.signal import find_peaks

from qwalk.walk import channel_coordinates

__all__ = [
    "ALPHA",
    "BETA",
    "LaplaceFit",
    "LinearFit",
    "CollapsePoint",
    "position_variance",
    "position_mean",
    "second_moment_about",
    "shannon_entropy",
    "tsallis_entropy",
    "excess_kurtosis",
    "probability_floor",
    "whole_window",
    "central_peak_window",
    "laplace_fit",
    "collapse_point",
    "collapse_points",
    "collapse_spread",
    "relative_spread",
    "fit_collapse_exponents",
    "ushape_minimum",
    "linear_fit",
    "power_law_exponent",
    "autocorrelation",
    "smooth",
    "prominent_peaks",
]

ALPHA = 1.04
BETA = 1.67
NORM_TOL = 1e-6


def _as_dist(dist: ArrayLike) -> NDArray[np.float64]:
    return np.asarray(dist, dtype=np.float64)


def _coords(dist: NDArray[np.float64], coordinates: ArrayLike | None) -> NDArray[np.float64]:
    if coordinates is None:
        return channel_coordinates(len(dist))
    return np.asarray(coordinates, dtype=np.float64)


def _check_normalized(dist: NDArray[np.float64]) -> None:
    total = dist.sum()
    if abs(total - 1.0) > NORM_TOL:
        raise ValueError(f"distribution is not normalized (sums to {total:.12g})")


def position_mean(dist: ArrayLike, coordinates: ArrayLike | None = None) -> float:
    d = _as_dist(dist)
    _check_normalized(d)
    return float(np.dot(d, _coords(d, coordinates)))


def position_variance(dist: ArrayLike, coordinates: ArrayLike | None = None) -> float:
    """Variance about the mean, in channel units squared."""
    d = _as_dist(dist)
    _check_normalized(d)
    x = _coords(d, coordinates)
    mean = np.dot(d, x)
    return float(np.dot(d, (x - mean) ** 2))


def second_moment_about(dist: ArrayLike, origin: float, coordinates: ArrayLike | None = None) -> float:
    d = _as_dist(dist)
    _check_normalized(d)
    x = _coords(d, coordinates)
    return float(np.dot(d, (x - origin) ** 2))


def excess_kurtosis(dist: ArrayLike, coordinates: ArrayLike | None = None) -> float:
    d = _as_dist(dist)
    _check_normalized(d)
    x = _coords(d, coordinates)
    c = x - np.dot(d, x)
    var = np.dot(d, c**2)
    return float(np.dot(d, c**4) / var**2 - 3.0)


def shannon_entropy(dist: ArrayLike) -> float:
    d = _as_dist(dist)
    nz = d[d > 0]
    return float(-np.sum(nz * np.log(nz))) + 0.0  # no negative zero


def tsallis_entropy(dist: ArrayLike, q: float) -> float:
    """``(1 - sum p**q) / (q - 1)``; ``q = 1`` is the Shannon entropy."""
    if q <= 0:
        raise ValueError(f"Tsallis index must be positive (got q={q})")
    if q == 1:
        return shannon_entropy(dist)
    d = _as_dist(dist)
    nz = d[d > 0]
    return float((1.0 - np.sum(nz**q)) / (q - 1.0))


@dataclass(frozen=True)
class LaplaceFit:
    """Log-linear fit of ``C exp(-|x - mu| / a)``."""

    inv_a: float
    C: float
    mu: float
    r_squared: float
    window: tuple[float, float]
    n_points: int
    floor: float

    @property
    def a(self) -> float:
        return math.inf if self.inv_a == 0 else 1.0 / self.inv_a

    @property
    def variance(self) -> float:
        """Variance of the continuous Laplace law with this scale, ``2 a**2``."""
        return 2.0 * self.a**2


def probability_floor(runs: int, n: int) -> float:
    """Smallest probability trusted from ``runs`` Monte Carlo runs: ``10 / (R N)``."""
    return 10.0 / (runs * n)


def whole_window(mu: float, t: int) -> tuple[float, float]:
    """Half-open window holding every channel with ``|x - mu| <= t``."""
    return (mu - t, mu + t + 1)


def central_peak_window(mu: float, j: int) -> tuple[float, float]:
    """Half-open window of width ``j`` centred on ``mu``."""
    return (mu - j / 2, mu + j / 2)


def _loglinear(dx: NDArray[np.float64], logp: NDArray[np.float64]) -> tuple[float, float, float, float]:
    slope, intercept = np.polyfit(dx, logp, 1)
    resid = logp - (slope * dx + intercept)
    sse = float(resid @ resid)
    sst = float(np.sum((logp - logp.mean()) ** 2))
    r2 = 1.0 if sst == 0 else 1.0 - sse / sst
    return float(slope), float(intercept), r2, sse


def laplace_fit(
    dist: ArrayLike,
    window: tuple[float, float],
    center_mode: str = "fixed",
    *,
    mu: float = 0.5,
    floor: float = 0.0,
    coordinates: ArrayLike | None = None,
) -> LaplaceFit:
    """
    Fit ``ln p = ln C - |x - mu| / a`` over ``window = [lo, hi)``.

    Entries at or below ``floor`` are dropped.  With ``center_mode="free"``
    every channel inside the window is tried as ``mu`` and the one with the
    smallest squared residual wins.
    """
    d = _as_dist(dist)
    x = _coords(d, coordinates)
    lo, hi = window
    if not lo < hi:
        raise ValueError(f"empty fit window {window}")
    if np.any(d[(x >= lo) & (x < hi)] < 0):
        raise ValueError("negative probabilities inside the fit window")
    keep = (x >= lo) & (x < hi) & (d > floor)
    if keep.sum() < 3:
        raise ValueError(f"only {int(keep.sum())} usable points in window {window}; need 3")
    xs, logp = x[keep], np.log(d[keep])

    if center_mode == "fixed":
        centers = [mu]
    elif center_mode == "free":
        centers = list(x[(x >= lo) & (x < hi)])
    else:
        raise ValueError(f"unknown center_mode {center_mode!r}")

    best = None
    for c in centers:
        dx = np.abs(xs - c)
        if np.ptp(dx) == 0:
            continue
        slope, intercept, r2, sse = _loglinear(dx, logp)
        if best is None or sse < best[-1]:
            best = (c, slope, intercept, r2, sse)
    if best is None:
        raise ValueError("all usable points are equidistant from the centre")
    c, slope, intercept, r2, _ = best
    return LaplaceFit(
        inv_a=-slope,
        C=math.exp(intercept),
        mu=float(c),
        r_squared=r2,
        window=(float(lo), float(hi)),
        n_points=int(keep.sum()),
        floor=floor,
    )


@dataclass(frozen=True)
class CollapsePoint:
    x: float
    y: float
    p: float
    j: int
    alpha: float = ALPHA
    beta: float = BETA


def collapse_point(p: float, j: int, var: float, alpha: float = ALPHA, beta: float = BETA) -> CollapsePoint:
    return CollapsePoint(p * j**alpha, j ** (-beta) * var, p, j, alpha, beta)


def collapse_points(
    rows: Iterable[Mapping], alpha: float = ALPHA, beta: float = BETA
) -> list[CollapsePoint]:
    """Map sweep rows (``p``, ``j``, ``var``) onto ``(p j**alpha, j**-beta var)``."""
    return [collapse_point(float(r["p"]), int(r["j"]), float(r["var"]), alpha, beta) for r in rows]


def collapse_spread(curves: Mapping[int, tuple[Sequence[float], Sequence[float]]], n_grid: int = 50) -> float:
    """
    RMS spread between curves relative to their joint y-range.

    Each curve is interpolated onto a common grid over the x-range they all
    cover; the across-curve standard deviation is RMS-averaged over that grid
    and divided by ``max(y) - min(y)`` of all points.
    """
    if len(curves) < 2:
        raise ValueError("need at least two curves")
    sorted_curves = []
    for xs, ys in curves.values():
        xs, ys = np.asarray(xs, float), np.asarray(ys, float)
        order = np.argsort(xs)
        sorted_curves.append((xs[order], ys[order]))
    lo = max(c[0][0] for c in sorted_curves)
    hi = min(c[0][-1] for c in sorted_curves)
    if not lo < hi:
        raise ValueError("curves share no common x-range")
    grid = np.linspace(lo, hi, n_grid)
    stack = np.array([np.interp(grid, xs, ys) for xs, ys in sorted_curves])
    all_y = np.concatenate([c[1] for c in sorted_curves])
    y_range = all_y.max() - all_y.min()
    rms = math.sqrt(np.mean(np.var(stack, axis=0)))
    return float(rms / y_range)


def relative_spread(curves: Mapping[int, Sequence[float]]) -> float:
    """RMS over grid points of ``std / mean`` across curves sampled on one grid."""
    stack = np.array([np.asarray(v, float) for v in curves.values()])
    rel = stack.std(axis=0) / np.abs(stack.mean(axis=0))
    return float(math.sqrt(np.mean(rel**2)))


def _curves_from_points(points: Sequence[CollapsePoint]) -> dict[int, tuple[list[float], list[float]]]:
    curves: dict[int, tuple[list[float], list[float]]] = {}
    for pt in points:
        xs, ys = curves.setdefault(pt.j, ([], []))
        xs.append(pt.x)
        ys.append(pt.y)
    return curves


def fit_collapse_exponents(
    rows: Sequence[Mapping],
    alphas: Sequence[float] = tuple(np.linspace(0.8, 1.3, 26)),
    betas: Sequence[float] = tuple(np.linspace(1.2, 2.1, 46)),
) -> tuple[float, float, float]:
    """Grid search for ``(alpha, beta)`` minimising :func:`collapse_spread`."""
    best = (math.nan, math.nan, math.inf)
    for a in alphas:
        for b in betas:
            try:
                s = collapse_spread(_curves_from_points(collapse_points(rows, a, b)))
            except ValueError:
                continue
            if s < best[2]:
                best = (float(a), float(b), s)
    return best


def ushape_minimum(xs: Sequence[float], ys: Sequence[float]) -> float:
    """
    Location of the interior minimum of noisy U-shaped data.

    A quadratic is fitted to the 5 points nearest (in x) to the smallest y
    and its vertex returned, clipped to the span of those points.
    """
    x = np.asarray(xs, float)
    y = np.asarray(ys, float)
    if len(x) < 5:
        raise ValueError("need at least 5 points")
    order = np.argsort(x)
    x, y = x[order], y[order]
    i = int(np.argmin(y))
    if i == 0 or i == len(x) - 1:
        raise ValueError("data are monotone on the sampled range: no interior minimum")
    near = np.sort(np.argsort(np.abs(x - x[i]), kind="stable")[:5])
    c2, c1, _ = np.polyfit(x[near], y[near], 2)
    if c2 <= 0:
        return float(x[i])
    return float(np.clip(-c1 / (2 * c2), x[near].min(), x[near].max()))


class LinearFit(NamedTuple):
    slope: float
    intercept: float
    r_squared: float


def linear_fit(xs: Sequence[float], ys: Sequence[float]) -> LinearFit:
    x = np.asarray(xs, float)
    y = np.asarray(ys, float)
    if len(x) < 2 or len(x) != len(y):
        raise ValueError("need at least two (x, y) pairs")
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0:
        raise ValueError("x values are all equal")
    slope = float(xc @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (slope * x + intercept)
    sst = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if sst == 0 else 1.0 - float(resid @ resid) / sst
    return LinearFit(slope, intercept, r2)


def power_law_exponent(ts: Sequence[float], values: Sequence[float]) -> LinearFit:
    """Straight-line fit in log-log space; ``slope`` is the exponent."""
    return linear_fit(np.log(np.asarray(ts, float)), np.log(np.asarray(values, float)))


def autocorrelation(dist: ArrayLike, max_lag: int) -> NDArray[np.float64]:
    """Normalised, non-circular autocorrelation of the mean-removed sequence."""
    d = _as_dist(dist)
    c = d - d.mean()
    denom = float(c @ c)
    return np.array([float(c[: len(c) - k] @ c[k:]) / denom for k in range(max_lag + 1)])


def smooth(values: ArrayLike, width: int) -> NDArray[np.float64]:
    """Centred moving average of ``width`` samples (zero padded)."""
    v = np.asarray(values, float)
    if width <= 1:
        return v.copy()
    return np.convolve(v, np.ones(width) / width, mode="same")


def prominent_peaks(values: ArrayLike, rel_prominence: float = 0.05) -> NDArray[np.intp]:
    """Indices of local maxima whose prominence is at least ``rel_prominence * max``."""
    v = np.asarray(values, float)
    peaks, _ = find_peaks(v, prominence=rel_prominence * v.max())
    return peaks
