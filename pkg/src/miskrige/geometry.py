"""Design-point sets and their geometry.

Fill distance, separation radius, and mesh ratio parameterize every error
bound in the rate studies, so designs carry them as cached attributes.  The
fill distance is approximated by scanning a uniform evaluation grid; its
resolution-dependent error is bounded by ``2 / resolution`` per unit length.
"""

import csv
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

# evaluation-grid cells per axis used for the fill-distance scan
DEFAULT_FILL_RESOLUTION = {1: 10_000, 2: 300}

DESIGN_KINDS = ("midpoint-grid", "jittered-grid", "iid-uniform")

# jitter amplitude for jittered grids, as a fraction of the grid spacing
JITTER_FRACTION = 0.25

FLOAT_FORMAT = "%.17g"


@dataclass(frozen=True)
class Region:
    """Axis-aligned box domain, optionally inside a larger ambient box.

    ``lower``/``upper`` bound the experimental region; the ambient bounds
    default to the region itself.  Periodic kernels restricted to a
    subinterval require the region to sit strictly inside the ambient box.
    """

    lower: tuple
    upper: tuple
    ambient_lower: tuple = None
    ambient_upper: tuple = None

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if len(lo) != len(hi) or len(lo) not in (1, 2):
            raise ValueError("region must have 1 or 2 axes with matching bounds")
        if any(a >= b for a, b in zip(lo, hi)):
            raise ValueError("degenerate region: lower bound must be below upper bound on every axis")
        alo = lo if self.ambient_lower is None else tuple(float(v) for v in np.atleast_1d(self.ambient_lower))
        ahi = hi if self.ambient_upper is None else tuple(float(v) for v in np.atleast_1d(self.ambient_upper))
        if len(alo) != len(lo) or len(ahi) != len(lo):
            raise ValueError("ambient bounds must match the region dimension")
        if any(a > o for a, o in zip(alo, lo)) or any(a < o for a, o in zip(ahi, hi)):
            raise ValueError("region must be contained in its ambient box")
        object.__setattr__(self, "ambient_lower", alo)
        object.__setattr__(self, "ambient_upper", ahi)

    @classmethod
    def interval(cls, a, b, ambient=None):
        if ambient is None:
            return cls((a,), (b,))
        return cls((a,), (b,), (ambient[0],), (ambient[1],))

    @property
    def dim(self):
        return len(self.lower)

    @property
    def widths(self):
        return tuple(b - a for a, b in zip(self.lower, self.upper))

    @property
    def volume(self):
        return float(np.prod(self.widths))

    def strictly_inside_ambient(self):
        return all(a < o for a, o in zip(self.ambient_lower, self.lower)) and all(
            o < a for o, a in zip(self.upper, self.ambient_upper)
        )

    def grid(self, resolution):
        """Closed uniform grid with ``resolution`` cells per axis, as (m, d) points."""
        axes = [np.linspace(a, b, resolution + 1) for a, b in zip(self.lower, self.upper)]
        if self.dim == 1:
            return axes[0][:, None]
        xx, yy = np.meshgrid(axes[0], axes[1], indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel()])


def _as_points(points):
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[1] not in (1, 2):
        raise ValueError("points must be an (n, d) array with d in {1, 2}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must have finite coordinates")
    return pts


def fill_distance(points, region, resolution=None):
    """Sup over a uniform evaluation grid of the distance to the nearest point.

    ``resolution`` counts grid cells per axis; the scan visits the closed
    grid nodes.  The result underestimates the true fill distance by at most
    half a grid diagonal, well inside the documented 2/resolution tolerance.
    """
    pts = _as_points(points)
    if pts.shape[0] == 0:
        raise ValueError("fill distance needs at least one point")
    if resolution is None:
        resolution = DEFAULT_FILL_RESOLUTION[region.dim]
    # d=2 scans resolution^2 nodes, so its per-axis floor is lower
    if resolution < (1000 if region.dim == 1 else 100):
        raise ValueError("fill-distance grid resolution is below the supported floor")
    grid = region.grid(resolution)
    dist, _ = cKDTree(pts).query(grid, k=1)
    return float(np.max(dist))


def separation_radius(points):
    """Half the smallest pairwise distance; exact, no grid involved."""
    pts = _as_points(points)
    if pts.shape[0] < 2:
        raise ValueError("separation radius needs at least two points")
    dmin = float(np.min(pdist(pts)))
    if dmin == 0.0:
        raise ValueError("duplicate design points (separation radius would be zero)")
    return 0.5 * dmin


def mesh_ratio(design):
    """Uniformity measure h/q; equals 1 for perfect grids up to grid tolerance."""
    return design.h / design.q


@dataclass(frozen=True)
class DesignSet:
    """Immutable point configuration with cached geometry."""

    region: Region
    points: np.ndarray
    h: float
    q: float
    rho: float
    fill_resolution: int = 0

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    @classmethod
    def from_points(cls, points, region, fill_resolution=None):
        pts = _as_points(points)
        if pts.shape[0] == 0:
            raise ValueError("a design needs at least one point")
        if np.any(pts < np.asarray(region.lower)) or np.any(pts > np.asarray(region.upper)):
            raise ValueError("design points must lie inside the region")
        if fill_resolution is None:
            fill_resolution = DEFAULT_FILL_RESOLUTION[region.dim]
        h = fill_distance(pts, region, fill_resolution)
        if pts.shape[0] >= 2:
            q = separation_radius(pts)
        else:
            # single point: no pair to separate; fall back to h so rho = 1
            q = h
        pts.setflags(write=False)
        return cls(region=region, points=pts, h=h, q=q, rho=h / q, fill_resolution=fill_resolution)

    def to_csv(self, path_or_buf):
        header = ",".join(f"x{i}" for i in range(self.dim))
        rows = "\n".join(",".join(FLOAT_FORMAT % v for v in p) for p in self.points)
        text = header + "\n" + rows + "\n"
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w") as fh:
                fh.write(text)

    def to_json_dict(self):
        return {
            "d": self.dim,
            "points": [[float(v) for v in p] for p in self.points],
            "h": self.h,
            "q": self.q,
            "rho": self.rho,
        }


def load_design_csv(path, region=None, fill_resolution=None):
    with open(path) as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or not header[0].startswith("x"):
            raise ValueError(f"{path}: expected a design CSV with an x0[,x1] header")
        pts = [[float(v) for v in row] for row in reader if row]
    if not pts:
        raise ValueError(f"{path}: design CSV contains no points")
    pts = np.asarray(pts)
    if region is None:
        lo = tuple(pts.min(axis=0))
        hi = tuple(pts.max(axis=0))
        region = Region(lo, hi) if all(a < b for a, b in zip(lo, hi)) else None
        if region is None:
            raise ValueError("cannot infer a region from a degenerate point set; pass one explicitly")
    return DesignSet.from_points(pts, region, fill_resolution)


def _midpoint_grid(n, region):
    d = region.dim
    if d == 1:
        a, b = region.lower[0], region.upper[0]
        i = np.arange(1, n + 1)
        return (a + (2 * i - 1) * (b - a) / (2 * n))[:, None]
    m = int(round(np.sqrt(n)))
    if m * m != n:
        raise ValueError("grid designs in d=2 require n to be a perfect square")
    axes = []
    for a, b in zip(region.lower, region.upper):
        i = np.arange(1, m + 1)
        axes.append(a + (2 * i - 1) * (b - a) / (2 * m))
    xx, yy = np.meshgrid(axes[0], axes[1], indexing="ij")
    return np.column_stack([xx.ravel(), yy.ravel()])


def make_design(kind, n, region, seed=0, fill_resolution=None):
    """Generate a design of ``n`` points on ``region``.

    Kinds: ``midpoint-grid`` (quasi-uniform lattice of cell midpoints),
    ``jittered-grid`` (midpoints plus uniform jitter of 25% of the spacing,
    preserving quasi-uniformity while breaking lattice symmetry), and
    ``iid-uniform``.  Deterministic given ``(kind, n, seed)``.
    """
    if kind not in DESIGN_KINDS:
        raise ValueError(f"unknown design kind {kind!r}; choose one of {DESIGN_KINDS}")
    if n < 1:
        raise ValueError("a design needs n >= 1 points")
    rng = np.random.default_rng(seed)
    if kind == "midpoint-grid":
        pts = _midpoint_grid(n, region)
    elif kind == "jittered-grid":
        pts = _midpoint_grid(n, region)
        m = int(round(n ** (1.0 / region.dim)))
        spacing = np.asarray(region.widths) / m
        pts = pts + rng.uniform(-JITTER_FRACTION, JITTER_FRACTION, size=pts.shape) * spacing
    else:
        lo = np.asarray(region.lower)
        hi = np.asarray(region.upper)
        pts = rng.uniform(lo, hi, size=(n, region.dim))
        # re-draw on (measure-zero) collisions so separation stays positive
        while n >= 2 and np.min(pdist(pts)) == 0.0:
            pts = rng.uniform(lo, hi, size=(n, region.dim))
    return DesignSet.from_points(pts, region, fill_resolution)
