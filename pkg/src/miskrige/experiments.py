"""Convergence-rate studies.

Each study realizes one of the four misspecification regimes, applying the
corresponding coupling between the number of observations n, the kernel
complexity N, and the nugget: the Matern study fixes the kernel and scales
sqrt(lambda) = h^nu; the trigonometric study ties 2N+1 = n with
sqrt(lambda) = h^(s - 1/2); the wavelet study sets N = ceil(2 s0/(s0 - 1)
log2 n) and checks the support/separation invertibility condition; the
finite-element study sets N = 4n (separation stays above the mesh size) with
sqrt(lambda) = sqrt(h).  Proportionality constants are fixed at one so runs
are reproducible; slopes are constant-invariant.

Every row re-runs the stability checks (data-residual inequality against the
Gram conditioning, variance nonnegativity) before its error norms enter the
rate fit.
"""

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from .analysis import error_pair, fit_rate, inset_grid
from .functions import bump_window, target_from_json
from .geometry import DESIGN_KINDS, Region, make_design
from .kernels import (
    FemKernel,
    FemSpec,
    KLTrigKernel,
    KLTrigSpec,
    MaternSpec,
    WaveletKernel,
    WaveletSpec,
    build_wavelet_table,
    make_kernel,
)
from .kriging import (
    FactorizationFailed,
    NumericalBreakdown,
    fit,
    interpolant_rkhs_norm,
    min_eigenvalue,
    predict_mean_many,
    predict_variance_many,
    residual_on_design,
)

STUDIES = ("matern-epistemic", "kl-trig", "wavelet", "fem")

# default acceptance band around the predicted slope, absorbing log factors
# and pre-asymptotics
DEFAULT_BAND_BELOW = 0.3
DEFAULT_BAND_ABOVE = 0.4

VARIANCE_CHECK_POINTS = 512

FLOAT_FORMAT = "%.17g"


class ConfigError(ValueError):
    """A study configuration violates a coupling or precondition."""


@dataclass
class StudyConfig:
    study: str
    n_schedule: tuple
    target: dict
    seed: int = 0
    design: str = "midpoint-grid"
    quadrature: int = None  # default resolved per dimension
    linf_resolution: int = None
    nugget_policy: str = "sqrt"
    nugget: float = None  # explicit override of the policy (diagnostics only)
    region: tuple = None
    # matern parameters
    sigma: float = 1.0
    nu: float = 1.5
    kappa: float = 1.0
    dim: int = 1
    # trigonometric / wavelet exponent and wavelet/fem degree
    s: float = None
    p: int = None
    fem_coupling: int = 4
    l2_slope_band: tuple = None
    linf_slope_band: tuple = None

    def __post_init__(self):
        if self.study not in STUDIES:
            raise ConfigError(f"unknown study {self.study!r}; choose one of {STUDIES}")
        ns = tuple(int(v) for v in self.n_schedule)
        if not ns or any(v < 1 for v in ns):
            raise ConfigError("n schedule must contain positive counts")
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ConfigError("n schedule must be strictly increasing")
        self.n_schedule = ns
        if self.design not in DESIGN_KINDS:
            raise ConfigError(f"unknown design kind {self.design!r}")
        if self.nugget_policy not in ("sqrt", "plain"):
            raise ConfigError("nugget policy must be 'sqrt' (sqrt(lambda)=h^e) or 'plain' (lambda=h^e)")
        if self.quadrature is not None:
            floor = 1001 if self.dim == 1 else 201
            if self.quadrature % 2 == 0 or self.quadrature < floor:
                raise ConfigError(f"quadrature resolution must be odd and at least {floor} per axis")
        if self.region is not None:
            self.region = tuple(float(v) for v in self.region)
        if self.l2_slope_band is not None:
            self.l2_slope_band = tuple(float(v) for v in self.l2_slope_band)
        if self.linf_slope_band is not None:
            self.linf_slope_band = tuple(float(v) for v in self.linf_slope_band)

    @classmethod
    def from_dict(cls, obj):
        known = set(cls.__dataclass_fields__)
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**obj)
        except TypeError as exc:
            raise ConfigError(str(exc))

    @classmethod
    def from_json_file(cls, path):
        with open(path) as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON ({exc})")
        return cls.from_dict(obj)

    def to_json_dict(self):
        out = asdict(self)
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in out.items() if v is not None}


@dataclass(frozen=True)
class StudyRow:
    n: int
    N: int
    lam: float
    h: float
    q: float
    rho: float
    l2: float
    linf: float
    sigma_min: float
    extra: dict = field(default_factory=dict)
    wall_time: float = 0.0


@dataclass
class StudyResult:
    study: str
    config: StudyConfig
    rows: list
    predicted_l2_slope: float
    predicted_linf_slope: float
    l2_fit: object = None
    linf_fit: object = None
    extra_columns: tuple = ()

    CORE_COLUMNS = ("n", "N", "lambda", "h", "q", "rho", "l2", "linf", "sigma_min")

    def columns(self):
        return self.CORE_COLUMNS + self.extra_columns

    def to_csv(self, path_or_buf):
        lines = [",".join(self.columns())]
        for r in self.rows:
            vals = [str(r.n), str(r.N)]
            vals += [FLOAT_FORMAT % v for v in (r.lam, r.h, r.q, r.rho, r.l2, r.linf, r.sigma_min)]
            for c in self.extra_columns:
                v = r.extra[c]
                vals.append(str(v) if isinstance(v, (int, np.integer)) else FLOAT_FORMAT % v)
            lines.append(",".join(vals))
        text = "\n".join(lines) + "\n"
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w") as fh:
                fh.write(text)

    def bands(self):
        l2b = self.config.l2_slope_band or (
            self.predicted_l2_slope - DEFAULT_BAND_BELOW,
            self.predicted_l2_slope + DEFAULT_BAND_ABOVE,
        )
        linfb = self.config.linf_slope_band or (
            self.predicted_linf_slope - DEFAULT_BAND_BELOW,
            self.predicted_linf_slope + DEFAULT_BAND_ABOVE,
        )
        return l2b, linfb

    def summary_dict(self):
        l2b, linfb = self.bands()
        fitted_l2 = self.l2_fit.slope if self.l2_fit else None
        fitted_linf = self.linf_fit.slope if self.linf_fit else None
        ok = None
        if fitted_l2 is not None and fitted_linf is not None:
            ok = bool(l2b[0] <= fitted_l2 <= l2b[1]) and bool(linfb[0] <= fitted_linf <= linfb[1])
        return {
            "study": self.study,
            "predicted_l2_slope": self.predicted_l2_slope,
            "fitted_l2_slope": fitted_l2,
            "predicted_linf_slope": self.predicted_linf_slope,
            "fitted_linf_slope": fitted_linf,
            "r2": self.l2_fit.r_squared if self.l2_fit else None,
            "r2_linf": self.linf_fit.r_squared if self.linf_fit else None,
            "l2_slope_band": list(l2b),
            "linf_slope_band": list(linfb),
            "pass": ok,
        }


def predicted_slopes(study, s0, s_n, d=1, smooth=False):
    """Theoretical log-log slopes (L2, Linf) for quasi-uniform designs.

    The effective smoothness is min(s0, s_n); targets smoother than every
    kernel in play (the smooth sentinel) saturate at s_n.
    """
    if study not in STUDIES:
        raise ValueError(f"unknown study {study!r}")
    m = float(s_n) if smooth else min(float(s0), float(s_n))
    return (-m / d, -(m - d / 2.0) / d)


def _thread_count():
    env = os.environ.get("MISKRIGE_THREADS")
    if env is None or env.strip() == "":
        return min(4, os.cpu_count() or 1)
    try:
        k = int(env)
    except ValueError:
        raise ConfigError(f"MISKRIGE_THREADS must be an integer, got {env!r}")
    if k == 0:
        return os.cpu_count() or 1
    return max(1, k)


def _nugget(cfg, h, exponent):
    if cfg.nugget is not None:
        return float(cfg.nugget)
    if cfg.nugget_policy == "sqrt":
        return float(h ** (2.0 * exponent))
    return float(h**exponent)


def _row_checks(model, sigma_min, region):
    """Re-run the stability checks on a fitted row.

    The data residual must respect the conditioning bound
    ||Y - K alpha|| <= lambda/(sigma_min + lambda) ||Y||, the interpolant's
    native-space norm must respect ||.|| <= ||Y|| / sqrt(sigma_min + lambda),
    and the predictive variance must be nonnegative up to roundoff.
    """
    y = model.y
    ynorm = float(np.linalg.norm(y))
    slack = 1e-8 * max(1.0, ynorm)
    lam = model.nugget
    smin = max(sigma_min, 0.0)
    resid = float(np.linalg.norm(residual_on_design(model)))
    bound = (lam / (smin + lam)) * ynorm if lam > 0.0 else 0.0
    if resid > bound + slack:
        raise NumericalBreakdown(
            f"data residual {resid:.3e} violates the conditioning bound {bound:.3e}"
        )
    rkhs = interpolant_rkhs_norm(model)
    denom = smin + lam
    if denom > 0.0 and rkhs > ynorm / np.sqrt(denom) + slack:
        raise NumericalBreakdown(
            f"interpolant native-space norm {rkhs:.3e} violates its stability bound"
        )
    points_per_axis = VARIANCE_CHECK_POINTS if region.dim == 1 else 23
    predict_variance_many(model, inset_grid(region, points_per_axis))


def _execute(cfg, region, target, make_kernel_for_row, lam_exponent, extras_fn=None):
    quadrature = cfg.quadrature or (10001 if region.dim == 1 else 301)
    linf_resolution = cfg.linf_resolution or (10000 if region.dim == 1 else 300)

    def one_row(n):
        start = time.perf_counter()
        design = make_design(cfg.design, n, region, seed=cfg.seed)
        kernel, n_value = make_kernel_for_row(n, design)
        lam = _nugget(cfg, design.h, lam_exponent)
        y = target(design.points[:, 0]) if region.dim == 1 else target(design.points)
        try:
            model = fit(kernel, design, y, lam)
        except FactorizationFailed as exc:
            raise FactorizationFailed(f"row n={n}: {exc}", suggested_nugget=exc.suggested_nugget)
        except NumericalBreakdown as exc:
            raise NumericalBreakdown(f"row n={n}: {exc}")
        sigma_min = min_eigenvalue(model.gram)
        try:
            _row_checks(model, sigma_min, region)
        except NumericalBreakdown as exc:
            raise NumericalBreakdown(f"row n={n}: {exc}")
        predict = lambda x: predict_mean_many(model, x)
        errors = error_pair(target, predict, region, quadrature, linf_resolution)
        extra = extras_fn(model) if extras_fn else {}
        return StudyRow(
            n=n,
            N=n_value,
            lam=lam,
            h=design.h,
            q=design.q,
            rho=design.rho,
            l2=errors.l2,
            linf=errors.linf,
            sigma_min=sigma_min,
            extra=extra,
            wall_time=time.perf_counter() - start,
        )

    workers = min(_thread_count(), len(cfg.n_schedule))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one_row, cfg.n_schedule))
    else:
        rows = [one_row(n) for n in cfg.n_schedule]
    return rows


def _finish(cfg, rows, s0_eff, extra_columns=()):
    pred_l2, pred_linf = (-s0_eff / cfg.dim, -(s0_eff - cfg.dim / 2.0) / cfg.dim)
    result = StudyResult(
        study=cfg.study,
        config=cfg,
        rows=rows,
        predicted_l2_slope=pred_l2,
        predicted_linf_slope=pred_linf,
        extra_columns=extra_columns,
    )
    if len(rows) >= 4:
        result.l2_fit = fit_rate([(r.n, r.l2) for r in rows])
        result.linf_fit = fit_rate([(r.n, r.linf) for r in rows])
    return result


def run_matern_epistemic(cfg):
    """Fixed Matern kernel, possibly with misspecified smoothness, over the schedule."""
    if cfg.dim not in (1, 2):
        raise ConfigError("the Matern study supports dim 1 or 2")
    bounds = cfg.region or (0.0, 1.0)
    region = (
        Region.interval(*bounds)
        if cfg.dim == 1
        else Region((bounds[0],) * 2, (bounds[1],) * 2)
    )
    target = target_from_json(cfg.target)
    kernel = make_kernel(MaternSpec(sigma=cfg.sigma, nu=cfg.nu, kappa=cfg.kappa, d=cfg.dim))
    rows = _execute(cfg, region, target, lambda n, d: (kernel, 0), lam_exponent=cfg.nu)
    return _finish(cfg, rows, target.effective_smoothness(kernel.smoothness))


def run_kl_trig(cfg):
    """Truncated trigonometric kernel with 2N+1 = n on a region inside (0, 1)."""
    if cfg.dim != 1:
        raise ConfigError("the trigonometric study is one-dimensional")
    if cfg.s is None:
        raise ConfigError("the trigonometric study needs the kernel exponent s")
    if any(n % 2 == 0 for n in cfg.n_schedule):
        raise ConfigError(
            "the trigonometric coupling 2N+1 = n needs an odd-n schedule "
            f"(got even n in {list(cfg.n_schedule)})"
        )
    bounds = cfg.region or (0.2, 0.8)
    region = Region.interval(bounds[0], bounds[1], ambient=(0.0, 1.0))
    if not region.strictly_inside_ambient():
        raise ConfigError("the study region must be strictly inside the periodic domain (0, 1)")
    target = bump_window(target_from_json(cfg.target), bounds, (0.0, 1.0))
    s = int(cfg.s)

    def make_row(n, design):
        N = (n - 1) // 2
        return KLTrigKernel(KLTrigSpec(s=s, N=N)), N

    rows = _execute(cfg, region, target, make_row, lam_exponent=s - 0.5)
    return _finish(cfg, rows, target.effective_smoothness(s))


def run_wavelet(cfg):
    """Daubechies multiscale kernel with the level coupling N = ceil(2 s0/(s0-1) log2 n)."""
    if cfg.dim != 1:
        raise ConfigError("the wavelet study is one-dimensional")
    if cfg.s is None:
        raise ConfigError("the wavelet study needs the kernel exponent s")
    p = cfg.p or 2
    target = target_from_json(cfg.target)
    if target.smooth:
        raise ConfigError("the wavelet level coupling needs a target with finite smoothness s0")
    s0 = float(target.s0)
    if s0 <= 1.0:
        raise ConfigError("the wavelet level coupling needs target smoothness s0 > 1")
    bounds = cfg.region or (0.0, 8.0)
    region = Region.interval(*bounds)
    table = build_wavelet_table(p)
    coupling = 2.0 * s0 / (s0 - 1.0)

    def make_row(n, design):
        N = int(math.ceil(coupling * math.log2(n)))
        width = (2 * p - 1) * 2.0 ** (-N)
        if not width < design.q:
            raise ConfigError(
                f"invertibility violated at n={n}: support width 2^-N (2p-1) = {width:g} "
                f">= separation q = {design.q:g}"
            )
        return WaveletKernel(WaveletSpec(s=float(cfg.s), N=N, p=p), table=table), N

    extras = lambda model: {"nnz_fraction": model.gram.nnz_fraction}
    rows = _execute(cfg, region, target, make_row, lam_exponent=float(cfg.s) - 0.5, extras_fn=extras)
    return _finish(cfg, rows, target.effective_smoothness(float(cfg.s)), extra_columns=("nnz_fraction",))


def run_fem(cfg):
    """Finite-element kernel with mesh coupling N = c n on the unit interval."""
    if cfg.dim != 1:
        raise ConfigError("the finite-element study is one-dimensional")
    p = cfg.p or 1
    if cfg.region is not None and tuple(cfg.region) != (0.0, 1.0):
        raise ConfigError("the finite-element kernel is built on (0, 1); the region cannot move")
    region = Region.interval(0.0, 1.0)
    target = target_from_json(cfg.target)
    c = int(cfg.fem_coupling)
    if c < 1:
        raise ConfigError("the mesh coupling factor must be a positive integer")

    def make_row(n, design):
        N = c * n
        if not design.q > 1.0 / N:
            raise ConfigError(
                f"invertibility violated at n={n}: separation q = {design.q:g} <= 1/N = {1.0 / N:g}"
            )
        kernel = FemKernel(FemSpec(N=N, p=p))
        if kernel.assembly.bandwidth > 2 * p + 1:
            raise RuntimeError("precision bandwidth exceeded its structural bound; assembly bug")
        return kernel, N

    extras = lambda model: {"bandwidth": model.kernel.assembly.bandwidth}
    rows = _execute(cfg, region, target, make_row, lam_exponent=0.5, extras_fn=extras)
    return _finish(cfg, rows, target.effective_smoothness(1.0), extra_columns=("bandwidth",))


_RUNNERS = {
    "matern-epistemic": run_matern_epistemic,
    "kl-trig": run_kl_trig,
    "wavelet": run_wavelet,
    "fem": run_fem,
}


def run_study(cfg):
    if isinstance(cfg, dict):
        cfg = StudyConfig.from_dict(cfg)
    return _RUNNERS[cfg.study](cfg)
