"""Kernel specifications, the evaluable-kernel interface, and JSON (de)serialization."""

from dataclasses import dataclass

import numpy as np

# conservative admissibility proxy below the Hoelder regularity of the
# Daubechies family of order p; the true exponents are irrational
DAUBECHIES_REGULARITY = {1: 0.5, 2: 1.0, 3: 1.41, 4: 1.77}


@dataclass(frozen=True)
class MaternSpec:
    """Matern kernel: marginal std sigma, smoothness nu, inverse lengthscale kappa."""

    sigma: float
    nu: float
    kappa: float
    d: int = 1

    family = "matern"

    def __post_init__(self):
        if not (self.sigma > 0 and self.nu > 0 and self.kappa > 0):
            raise ValueError("Matern spec requires sigma > 0, nu > 0, kappa > 0")
        if self.d not in (1, 2):
            raise ValueError("Matern kernels support d in {1, 2}")


@dataclass(frozen=True)
class KLTrigSpec:
    """Truncated trigonometric expansion on [0, 1]: Sobolev exponent s, truncation N."""

    s: int
    N: int

    family = "kl-trig"

    def __post_init__(self):
        if int(self.s) != self.s or self.s < 1:
            raise ValueError("trigonometric kernel requires an integer exponent s >= 1")
        object.__setattr__(self, "s", int(self.s))
        if self.N < 0:
            raise ValueError("truncation N must be >= 0")
        object.__setattr__(self, "N", int(self.N))


@dataclass(frozen=True)
class WaveletSpec:
    """Daubechies multiscale kernel (d=1): scale exponent s, finest level N, order p."""

    s: float
    N: int
    p: int = 2

    family = "wavelet"

    def __post_init__(self):
        if self.p not in (1, 2, 3, 4):
            raise ValueError("Daubechies order p must be in {1, 2, 3, 4}")
        # admissibility d/2 < s < r; s < p errs on the safe side of r(p).
        # Haar (p=1) admits s up to 1 so the exactly-computable test family
        # covers the s=1 cases.
        if self.p == 1:
            ok = 0.5 < self.s <= 1.0
        else:
            ok = 0.5 < self.s < self.p
        if not ok:
            raise ValueError(
                f"wavelet exponent must satisfy 1/2 < s < p (got s={self.s}, p={self.p})"
            )
        if self.N < 0:
            raise ValueError("finest level N must be >= 0")
        object.__setattr__(self, "N", int(self.N))


@dataclass(frozen=True)
class FemSpec:
    """Lagrange finite-element kernel on (0, 1): mesh count N, polynomial degree p."""

    N: int
    p: int = 1

    family = "fem"

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("mesh count N must be >= 1")
        if self.p not in (1, 2):
            raise ValueError("element degree p must be 1 or 2")
        object.__setattr__(self, "N", int(self.N))


def nominal_smoothness(spec):
    """Sobolev index of the kernel's native space."""
    if isinstance(spec, MaternSpec):
        return spec.nu + spec.d / 2.0
    if isinstance(spec, KLTrigSpec):
        return float(spec.s)
    if isinstance(spec, WaveletSpec):
        return float(spec.s)
    if isinstance(spec, FemSpec):
        return 1.0
    raise TypeError(f"not a kernel spec: {spec!r}")


def spec_to_json(spec):
    if isinstance(spec, MaternSpec):
        return {"family": "matern", "sigma": spec.sigma, "nu": spec.nu, "kappa": spec.kappa, "d": spec.d}
    if isinstance(spec, KLTrigSpec):
        return {"family": "kl-trig", "s": spec.s, "N": spec.N}
    if isinstance(spec, WaveletSpec):
        return {"family": "wavelet", "s": spec.s, "N": spec.N, "p": spec.p}
    if isinstance(spec, FemSpec):
        return {"family": "fem", "N": spec.N, "p": spec.p}
    raise TypeError(f"not a kernel spec: {spec!r}")


def spec_from_json(obj):
    try:
        family = obj["family"]
    except (TypeError, KeyError):
        raise ValueError("kernel spec JSON must be an object with a 'family' key")
    fields = {k: v for k, v in obj.items() if k != "family"}
    builders = {
        "matern": MaternSpec,
        "kl-trig": KLTrigSpec,
        "wavelet": WaveletSpec,
        "fem": FemSpec,
    }
    if family not in builders:
        raise ValueError(f"unknown kernel family {family!r}")
    return builders[family](**fields)


class Kernel:
    """Common interface of the evaluable kernel families.

    Instances are immutable after construction (tables and factorizations are
    precomputed) and safe for concurrent evaluation.  ``matrix`` returns the
    cross-covariance matrix of two point sets; with one argument it returns
    the Gram matrix, exactly symmetric by upper-triangle mirroring.
    """

    spec = None

    @property
    def smoothness(self):
        return nominal_smoothness(self.spec)

    def eval(self, x, y):
        raise NotImplementedError

    def matrix(self, X, Y=None):
        raise NotImplementedError

    def diag(self, X):
        X = np.atleast_1d(np.asarray(X, dtype=float))
        return np.array([self.eval(x, x) for x in X])


def mirror_upper(K):
    """Exact symmetrization: keep the upper triangle, mirror it below."""
    return np.triu(K) + np.triu(K, 1).T


def as_coords(X):
    """Accept scalars, (n,) or (n, 1) arrays of 1D coordinates; return (n,)."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 0:
        return X[None]
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError("this kernel family is one-dimensional")
        return X[:, 0]
    return X


def make_kernel(spec, **kwargs):
    """Realize a spec as an evaluable kernel, precomputing tables/factorizations."""
    from .matern import MaternKernel
    from .kl_trig import KLTrigKernel
    from .wavelet import WaveletKernel
    from .fem import FemKernel

    if isinstance(spec, MaternSpec):
        return MaternKernel(spec)
    if isinstance(spec, KLTrigSpec):
        return KLTrigKernel(spec)
    if isinstance(spec, WaveletSpec):
        return WaveletKernel(spec, **kwargs)
    if isinstance(spec, FemSpec):
        return FemKernel(spec)
    raise TypeError(f"not a kernel spec: {spec!r}")
