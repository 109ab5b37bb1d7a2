import numpy as np
import pytest

from miskrige.geometry import DesignSet, Region, make_design
from miskrige.kernels import (
    FemSpec,
    KLTrigKernel,
    KLTrigSpec,
    MaternSpec,
    WaveletKernel,
    WaveletSpec,
    make_kernel,
)
from miskrige.kriging import (
    FactorizationFailed,
    NumericalBreakdown,
    assemble_gram,
    fit,
    gram_from_scalar_eval,
    interpolant_rkhs_norm,
    min_eigenvalue,
    predict_mean,
    predict_mean_many,
    predict_variance,
    predict_variance_many,
    residual_on_design,
)

UNIT = Region.interval(0.0, 1.0)


def design_from(points, region=UNIT):
    return DesignSet.from_points(np.asarray(points, dtype=float), region, fill_resolution=2000)


def test_gram_single_point():
    k = make_kernel(MaternSpec(1.4, 0.5, 1.0))
    g = assemble_gram(k, design_from([0.3]))
    assert g.values.shape == (1, 1)
    assert g.values[0, 0] == pytest.approx(1.4**2)


def test_gram_exponential_two_points():
    k = make_kernel(MaternSpec(1.0, 0.5, 1.0))
    g = assemble_gram(k, design_from([0.0, 1.0]))
    expected = np.array([[1.0, np.exp(-1)], [np.exp(-1), 1.0]])
    assert np.max(np.abs(g.values - expected)) < 1e-14


def test_wavelet_banded_and_dense_assemblies_agree():
    k = WaveletKernel(WaveletSpec(s=1.0, N=2, p=1))
    d = make_design("midpoint-grid", 8, UNIT)
    banded = assemble_gram(k, d, storage="banded")
    assert banded.storage == "banded"
    dense = gram_from_scalar_eval(k, d.points[:, 0])
    assert np.max(np.abs(banded.values - dense)) < 1e-12


def test_banded_storage_auto_selection():
    # auto storage goes banded once the finest level separates the points
    d = make_design("midpoint-grid", 8, UNIT)  # q = 1/16
    sparse_kernel = WaveletKernel(WaveletSpec(s=1.0, N=5, p=1))  # 2^-5 < 2q
    assert assemble_gram(sparse_kernel, d).storage == "banded"
    dense_kernel = WaveletKernel(WaveletSpec(s=1.0, N=2, p=1))  # 2^-2 >= 2q
    auto = assemble_gram(dense_kernel, d)
    assert auto.storage == "dense"
    assert auto.nnz_fraction is not None
    with pytest.raises(ValueError, match="banded"):
        assemble_gram(make_kernel(MaternSpec(1.0, 0.5, 1.0)), d, storage="banded")


def test_fit_single_point_scalar_solve():
    k = make_kernel(MaternSpec(2.0, 1.5, 1.0))
    d = design_from([0.4])
    lam = 0.3
    m = fit(k, d, np.array([1.7]), lam)
    assert m.alpha[0] == pytest.approx(1.7 / (4.0 + lam), rel=1e-12)
    # prediction formula at a single training point
    assert predict_mean(m, 0.9) == pytest.approx(k.eval(0.9, 0.4) * 1.7 / (4.0 + lam), rel=1e-12)


def test_kl_rank_deficiency_raises_factorization_failed():
    # n = 5 > 2N+1 = 3 distinct points: Gram rank is at most 3
    k = KLTrigKernel(KLTrigSpec(s=1, N=1))
    d = design_from([0.05, 0.25, 0.45, 0.7, 0.9])
    y = np.sin(2 * np.pi * d.points[:, 0])
    with pytest.raises(FactorizationFailed) as err:
        fit(k, d, y, 0.0)
    suggested = err.value.suggested_nugget
    assert suggested is not None and suggested > 0
    m = fit(k, d, y, max(suggested, 1e-12))
    assert m.nugget > 0


def test_fit_residual_is_small():
    k = make_kernel(MaternSpec(1.0, 1.5, 1.0))
    d = make_design("midpoint-grid", 10, UNIT)
    y = np.cos(2 * np.pi * d.points[:, 0])
    m = fit(k, d, y, 1e-8)
    A = m.regularized()
    rel = np.linalg.norm(A @ m.alpha - y) / np.linalg.norm(y)
    assert rel <= 1e-8
    assert m.rel_residual <= 1e-8


WELL_CONDITIONED = [
    (make_kernel(MaternSpec(1.0, 1.5, 2.0)), "midpoint-grid", 24, UNIT),
    (KLTrigKernel(KLTrigSpec(s=2, N=12)), "midpoint-grid", 25, UNIT),  # n = 2N+1
    (WaveletKernel(WaveletSpec(s=1.0, N=7, p=1)), "midpoint-grid", 16, UNIT),
    (make_kernel(FemSpec(N=64, p=1)), "midpoint-grid", 16, UNIT),
]


@pytest.mark.parametrize("kernel,kind,n,region", WELL_CONDITIONED)
def test_interpolation_property_all_families(kernel, kind, n, region):
    d = make_design(kind, n, region)
    y = np.sin(2 * np.pi * d.points[:, 0]) + 0.3
    m = fit(kernel, d, y, 0.0)
    pred = predict_mean_many(m, d.points[:, 0])
    assert np.max(np.abs(pred - y)) <= 1e-6 * np.max(np.abs(y))
    var = predict_variance_many(m, d.points[:, 0])
    assert np.max(var) <= 1e-8


def test_prediction_suppressed_by_huge_nugget():
    k = make_kernel(MaternSpec(1.0, 1.5, 1.0))
    d = make_design("midpoint-grid", 12, UNIT)
    y = np.sin(2 * np.pi * d.points[:, 0])
    m = fit(k, d, y, 1e6)
    x = 0.41
    kvec = k.matrix(np.array([x]), d.points).ravel()
    bound = np.linalg.norm(kvec) * np.linalg.norm(y) / 1e6
    assert abs(predict_mean(m, x)) <= bound
    assert abs(predict_mean(m, x)) <= 1e-3


def test_variance_properties():
    k = make_kernel(MaternSpec(1.3, 0.5, 8.0))
    d = design_from([0.5])
    m = fit(k, d, np.array([0.7]), 0.0)
    # far from the single training point the variance recovers sigma^2
    assert predict_variance(m, 0.999) == pytest.approx(1.3**2, rel=1e-2)
    grid = np.linspace(0, 1, 101)
    var = predict_variance_many(m, grid)
    assert np.all(var <= 1.3**2 + 1e-8)
    assert np.all(var >= 0.0)


def test_min_eigenvalue_closed_forms():
    k = make_kernel(MaternSpec(1.7, 0.5, 1.0))
    g = assemble_gram(k, design_from([0.2]))
    assert min_eigenvalue(g) == pytest.approx(1.7**2, rel=1e-12)
    k = make_kernel(MaternSpec(1.0, 0.5, 1.0))
    g = assemble_gram(k, design_from([0.0, 1.0]))
    assert min_eigenvalue(g) == pytest.approx(1.0 - np.exp(-1), rel=1e-12)
    # rank-deficient trigonometric Gram
    kk = KLTrigKernel(KLTrigSpec(s=1, N=2))
    g = assemble_gram(kk, design_from(np.linspace(0.05, 0.95, 9)))
    assert min_eigenvalue(g) <= 1e-10


def test_residual_zero_at_zero_nugget():
    k = make_kernel(MaternSpec(1.0, 2.5, 1.0))
    d = make_design("midpoint-grid", 12, UNIT)
    y = np.cos(2 * np.pi * d.points[:, 0])
    m = fit(k, d, y, 0.0)
    assert np.linalg.norm(residual_on_design(m)) <= 1e-6 * np.linalg.norm(y)


def test_conditioning_residual_bound():
    # ||Y - K alpha|| <= lambda/(sigma_min + lambda) ||Y|| across random instances
    rng = np.random.default_rng(21)
    for lam in (1e-6, 1e-3, 1e-1):
        for trial in range(6):
            n = int(rng.integers(5, 30))
            d = make_design("jittered-grid", n, UNIT, seed=trial)
            k = make_kernel(MaternSpec(1.0, float(rng.uniform(0.6, 2.5)), 2.0))
            y = rng.normal(size=n)
            m = fit(k, d, y, lam)
            smin = max(min_eigenvalue(m.gram), 0.0)
            resid = np.linalg.norm(residual_on_design(m))
            assert resid <= lam / (smin + lam) * np.linalg.norm(y) + 1e-8
            assert interpolant_rkhs_norm(m) <= np.linalg.norm(y) / np.sqrt(smin + lam) + 1e-8


def test_regularized_interpolant_bounds_for_native_space_targets():
    # targets with an explicit finite expansion have exactly computable norms
    rng = np.random.default_rng(5)
    s, N = 2, 6
    k = KLTrigKernel(KLTrigSpec(s=s, N=N))
    weights = (1.0 + 4.0 * np.pi**2 * np.arange(1, N + 1) ** 2.0) ** s
    for lam in (1e-6, 1e-3, 1e-1):
        a = rng.normal(size=N) / np.arange(1, N + 1) ** 2
        b = rng.normal(size=N) / np.arange(1, N + 1) ** 2
        a0 = rng.normal()
        fnorm2 = a0**2 + float(np.sum((a**2 + b**2) * weights))

        def f(x):
            ang = 2 * np.pi * np.outer(x, np.arange(1, N + 1))
            return a0 + np.cos(ang) @ a + np.sin(ang) @ b

        d = make_design("midpoint-grid", 2 * N + 1, UNIT)
        y = f(d.points[:, 0])
        m = fit(k, d, y, lam)
        resid = np.linalg.norm(residual_on_design(m))
        assert resid <= np.sqrt(lam * fnorm2) + 1e-8
        assert interpolant_rkhs_norm(m) ** 2 <= fnorm2 + 1e-8


def test_residual_monotone_in_nugget():
    k = make_kernel(MaternSpec(1.0, 1.5, 3.0))
    d = make_design("midpoint-grid", 20, UNIT)
    y = np.sin(4 * np.pi * d.points[:, 0])
    norms = []
    for lam in (0.0, 1e-6, 1e-4, 1e-2):
        m = fit(k, d, y, lam)
        norms.append(np.linalg.norm(residual_on_design(m)))
    for a, b in zip(norms, norms[1:]):
        assert b >= a - 1e-12


def test_sigma_min_estimate_is_cheap_upper_bound():
    k = make_kernel(MaternSpec(1.0, 1.5, 2.0))
    d = make_design("midpoint-grid", 20, UNIT)
    m = fit(k, d, np.sin(2 * np.pi * d.points[:, 0]), 1e-6)
    exact = min_eigenvalue(m.regularized())
    assert m.sigma_min_estimate >= exact - 1e-14
    assert m.sigma_min_estimate <= np.max(np.diag(m.regularized())) + 1e-14


def test_min_eigenvalue_large_matrix_path():
    # above n = 2000 the dense eigensolve hands off to shifted inverse iteration
    rng = np.random.default_rng(0)
    n = 2050
    d = np.linspace(1.0, 3.0, n)
    K = np.diag(d)
    # plant a known smallest eigenvalue via a random rotation of a 2x2 block
    K[0, 1] = K[1, 0] = 0.4
    w_exact = np.linalg.eigvalsh(K)[0]
    assert min_eigenvalue(K) == pytest.approx(w_exact, rel=1e-6)


def test_fit_input_validation():
    k = make_kernel(MaternSpec(1.0, 1.5, 1.0))
    d = make_design("midpoint-grid", 4, UNIT)
    with pytest.raises(ValueError, match="nonnegative"):
        fit(k, d, np.zeros(4), -1e-3)
    with pytest.raises(ValueError, match="length-4"):
        fit(k, d, np.zeros(5), 0.0)
