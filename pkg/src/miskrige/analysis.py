"""Error norms by quadrature and empirical convergence-rate fits.

The quadrature grid is fixed across every n of a study so quadrature error
is common mode and cannot masquerade as convergence.  The sup-norm grid is
inset half a step from the boundary because the error bounds are over the
open region while some kernels live on its closure.
"""

import warnings
from dataclasses import dataclass

import numpy as np

# errors at or below this are solver noise and are excluded from rate fits
RATE_FIT_FLOOR = 1e-10


@dataclass(frozen=True)
class ErrorPair:
    l2: float
    linf: float
    resolution: int


@dataclass(frozen=True)
class RateFit:
    """Least-squares fit of log(error) = slope * log(n) + intercept."""

    slope: float
    intercept: float
    r_squared: float
    points: tuple

    def to_json_dict(self):
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "points": [[int(n), float(e)] for n, e in self.points],
        }


def _simpson_weights(m, width):
    if m < 3 or m % 2 == 0:
        raise ValueError("composite Simpson needs an odd number of points, at least 3")
    w = np.ones(m)
    w[1:-1:2] = 4.0
    w[2:-2:2] = 2.0
    return w * (width / (m - 1) / 3.0)


def l2_error(f, g, region, resolution=10001):
    """L2 norm of f - g over the region by composite Simpson quadrature."""
    if region.dim == 1:
        a, b = region.lower[0], region.upper[0]
        x = np.linspace(a, b, resolution)
        w = _simpson_weights(resolution, b - a)
        diff = f(x) - g(x)
        return float(np.sqrt(max(float(w @ (diff * diff)), 0.0)))
    ax = [np.linspace(a, b, resolution) for a, b in zip(region.lower, region.upper)]
    wx = _simpson_weights(resolution, region.upper[0] - region.lower[0])
    wy = _simpson_weights(resolution, region.upper[1] - region.lower[1])
    xx, yy = np.meshgrid(ax[0], ax[1], indexing="ij")
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    diff = (f(pts) - g(pts)).reshape(resolution, resolution)
    return float(np.sqrt(max(float(wx @ (diff * diff) @ wy), 0.0)))


def inset_grid(region, resolution=10000):
    """Uniform grid of cell midpoints, half a step inside the boundary."""
    axes = [
        a + (np.arange(resolution) + 0.5) * (b - a) / resolution
        for a, b in zip(region.lower, region.upper)
    ]
    if region.dim == 1:
        return axes[0]
    xx, yy = np.meshgrid(axes[0], axes[1], indexing="ij")
    return np.column_stack([xx.ravel(), yy.ravel()])


def linf_error(f, g, region, resolution=10000):
    """Sup norm of f - g over the inset uniform grid."""
    x = inset_grid(region, resolution)
    return float(np.max(np.abs(f(x) - g(x))))


def error_pair(f, g, region, l2_resolution=10001, linf_resolution=10000):
    """Both error norms of f - g at the given quadrature resolutions."""
    return ErrorPair(
        l2=l2_error(f, g, region, l2_resolution),
        linf=linf_error(f, g, region, linf_resolution),
        resolution=l2_resolution,
    )


def fit_rate(pairs, floor=RATE_FIT_FLOOR):
    """Fit a log-log slope through (n, error) pairs.

    Pairs with error at or below the solver-noise floor are excluded with a
    warning; fewer than four usable pairs is an error.
    """
    pairs = [(int(n), float(e)) for n, e in pairs]
    if any(e < 0.0 for _, e in pairs):
        raise ValueError("errors must be nonnegative")
    ns = [n for n, _ in pairs]
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("n values must be strictly increasing")
    usable = [(n, e) for n, e in pairs if e > floor]
    if len(usable) < len(pairs):
        dropped = [n for n, e in pairs if e <= floor]
        warnings.warn(
            f"rate fit excluded {len(dropped)} pair(s) at n={dropped} below the "
            f"{floor:g} error floor",
            stacklevel=2,
        )
    if len(usable) < 4:
        raise ValueError("rate fits need at least four pairs above the error floor")
    logn = np.log([n for n, _ in usable])
    loge = np.log([e for _, e in usable])
    slope, intercept = np.polyfit(logn, loge, 1)
    pred = slope * logn + intercept
    ss_res = float(np.sum((loge - pred) ** 2))
    ss_tot = float(np.sum((loge - np.mean(loge)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, 1.0 - ss_res / ss_tot)
    return RateFit(slope=float(slope), intercept=float(intercept), r_squared=r2, points=tuple(usable))
