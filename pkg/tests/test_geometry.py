import numpy as np
import pytest

from miskrige.geometry import (
    DesignSet,
    Region,
    fill_distance,
    load_design_csv,
    make_design,
    mesh_ratio,
    separation_radius,
)

UNIT = Region.interval(0.0, 1.0)


def brute_fill(points, region, m):
    """Independent nearest-neighbor scan over an (m+1)-node closed grid."""
    grid = np.linspace(region.lower[0], region.upper[0], m + 1)
    pts = np.asarray(points, dtype=float).reshape(-1)
    return float(np.max(np.min(np.abs(grid[:, None] - pts[None, :]), axis=1)))


def brute_separation(points):
    pts = np.asarray(points, dtype=float)
    best = np.inf
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            best = min(best, float(np.linalg.norm(pts[i] - pts[j])))
    return 0.5 * best


def test_midpoint_grid_n4():
    d = make_design("midpoint-grid", 4, UNIT)
    assert np.allclose(d.points.ravel(), [1 / 8, 3 / 8, 5 / 8, 7 / 8])
    assert d.h == pytest.approx(1 / 8, abs=2 / d.fill_resolution)
    assert d.q == pytest.approx(1 / 8, abs=0)
    assert d.rho == pytest.approx(1.0, abs=2e-3)


def test_midpoint_single_point():
    d = make_design("midpoint-grid", 1, UNIT)
    assert d.points.ravel()[0] == pytest.approx(0.5)
    assert d.h == pytest.approx(0.5, abs=2 / d.fill_resolution)


def test_midpoint_grid_geometry_over_full_range():
    # h = q = 1/(2n) and rho = 1 within the grid tolerance for every n up to 1000
    res = 2000
    for n in range(1, 1001):
        d = make_design("midpoint-grid", n, UNIT, fill_resolution=res)
        assert abs(d.h - 1 / (2 * n)) <= 2 / res
        assert d.q == pytest.approx(1 / (2 * n), rel=1e-12)
        assert d.rho >= 1 - 2 / res


def test_fill_distance_two_endpoints():
    assert fill_distance([0.0, 1.0], UNIT) == pytest.approx(0.5, abs=1e-12)


def test_fill_distance_midpoint_grid():
    pts = [1 / 8, 3 / 8, 5 / 8, 7 / 8]
    assert fill_distance(pts, UNIT) == pytest.approx(1 / 8, abs=1e-12)


def test_fill_distance_matches_brute_force_scan():
    d = make_design("iid-uniform", 50, UNIT, seed=7)
    m = 10 ** 5
    assert fill_distance(d.points, UNIT, m) == pytest.approx(brute_fill(d.points, UNIT, m), abs=0)
    assert separation_radius(d.points) == pytest.approx(brute_separation(d.points), abs=0)


def test_fill_distance_grid_refinement_tolerance():
    d = make_design("iid-uniform", 20, UNIT, seed=3)
    coarse = fill_distance(d.points, UNIT, 10 ** 4)
    fine = fill_distance(d.points, UNIT, 10 ** 6)
    assert abs(coarse - fine) <= 2 / 10 ** 4


def test_separation_radius_exact_cases():
    assert separation_radius([0.0, 1.0]) == pytest.approx(0.5)
    assert separation_radius([1 / 8, 3 / 8, 5 / 8, 7 / 8]) == pytest.approx(1 / 8)
    d = make_design("iid-uniform", 30, UNIT, seed=11)
    assert separation_radius(d.points) == brute_separation(d.points)


def test_separation_rejects_duplicates():
    with pytest.raises(ValueError, match="duplicate"):
        separation_radius([0.1, 0.5, 0.5])


def test_mesh_ratio_cases():
    d = make_design("midpoint-grid", 32, UNIT)
    assert mesh_ratio(d) == pytest.approx(1.0, abs=1e-2)
    # direct computation: for {0, 0.5, 0.51} the farthest region point is near
    # x=1 (distance 0.49 to the point at 0.51) and q = 0.005
    d = DesignSet.from_points([0.0, 0.5, 0.51], UNIT)
    assert d.h == pytest.approx(0.49, abs=2 / d.fill_resolution)
    assert d.q == pytest.approx(0.005)
    assert d.rho == pytest.approx(98.0, rel=1e-2)


def test_mesh_ratio_at_least_one():
    for seed in range(10):
        d = make_design("iid-uniform", 25, UNIT, seed=seed)
        assert d.rho >= 1 - 2 / d.fill_resolution


def test_adding_points_never_increases_h_or_q():
    rng = np.random.default_rng(0)
    for _ in range(25):
        pts = rng.uniform(0, 1, size=rng.integers(2, 30))
        extra = np.append(pts, rng.uniform(0, 1))
        assert fill_distance(extra, UNIT, 2000) <= fill_distance(pts, UNIT, 2000) + 1e-15
        assert separation_radius(extra) <= separation_radius(pts) + 1e-15


def test_designs_are_deterministic_given_seed():
    a = make_design("iid-uniform", 40, UNIT, seed=9)
    b = make_design("iid-uniform", 40, UNIT, seed=9)
    c = make_design("iid-uniform", 40, UNIT, seed=10)
    assert np.array_equal(a.points, b.points)
    assert not np.array_equal(a.points, c.points)
    j1 = make_design("jittered-grid", 40, UNIT, seed=2)
    j2 = make_design("jittered-grid", 40, UNIT, seed=2)
    assert np.array_equal(j1.points, j2.points)


def test_jittered_grid_stays_quasi_uniform():
    for seed in range(5):
        d = make_design("jittered-grid", 64, UNIT, seed=seed)
        assert d.rho <= 4.0
        assert np.all(d.points >= 0) and np.all(d.points <= 1)


def test_design_validation_errors():
    with pytest.raises(ValueError, match="n >= 1"):
        make_design("midpoint-grid", 0, UNIT)
    with pytest.raises(ValueError, match="degenerate"):
        Region.interval(1.0, 1.0)
    with pytest.raises(ValueError, match="kind"):
        make_design("sobol", 4, UNIT)
    with pytest.raises(ValueError):
        fill_distance(np.empty((0, 1)), UNIT)


def test_two_dimensional_grid():
    box = Region((0.0, 0.0), (1.0, 1.0))
    d = make_design("midpoint-grid", 9, box)
    assert d.points.shape == (9, 2)
    assert d.q == pytest.approx(1 / 6)
    # farthest points are the cell corners, sqrt(2)/6 away
    assert d.h == pytest.approx(np.sqrt(2) / 6, abs=2 / 300)
    with pytest.raises(ValueError, match="perfect square"):
        make_design("midpoint-grid", 8, box)


def test_region_containment_validation():
    with pytest.raises(ValueError, match="contained"):
        Region.interval(0.0, 1.0, ambient=(0.2, 0.9))
    r = Region.interval(0.2, 0.8, ambient=(0.0, 1.0))
    assert r.strictly_inside_ambient()
    assert not Region.interval(0.0, 1.0).strictly_inside_ambient()


def test_csv_json_round_trip(tmp_path):
    d = make_design("iid-uniform", 12, UNIT, seed=4)
    path = tmp_path / "design.csv"
    d.to_csv(path)
    text = path.read_text()
    assert text.splitlines()[0] == "x0"
    back = load_design_csv(path, region=UNIT)
    assert np.allclose(back.points, d.points)
    js = d.to_json_dict()
    assert js["d"] == 1 and len(js["points"]) == 12
    for key in ("h", "q", "rho"):
        assert key in js
