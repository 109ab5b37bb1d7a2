"""Target functions with declared Sobolev smoothness.

Fourier-series targets have an exactly computable Sobolev-norm proxy through
their coefficients; truncated-power targets provide finite smoothness with a
single kink; smooth targets (infinitely differentiable) carry no finite
smoothness index and are encoded with ``s0 = None`` rather than a float
infinity, so rate predictions short-circuit to the kernel smoothness.
"""

import numpy as np
from dataclasses import dataclass, field

# decay margin keeping random-sign Fourier targets strictly inside H^{s0}
FOURIER_DECAY_MARGIN = 0.05
FOURIER_DEFAULT_TERMS = 500


@dataclass(frozen=True)
class TargetFunction:
    """Evaluable test function; immutable and safe for concurrent evaluation."""

    fn: callable
    s0: float = None  # None marks the smooth (infinitely differentiable) sentinel
    periodic: bool = False
    description: str = ""
    a0: float = 0.0
    cos_coef: np.ndarray = None
    sin_coef: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=float))

    @property
    def smooth(self):
        return self.s0 is None

    def effective_smoothness(self, kernel_smoothness):
        """min(s0, s_N); the smooth sentinel short-circuits to s_N."""
        if self.smooth:
            return float(kernel_smoothness)
        return min(float(self.s0), float(kernel_smoothness))

    def h_norm_proxy(self, s=None):
        """Squared-norm proxy a0^2 + sum (a_k^2 + b_k^2)(1 + 4 pi^2 k^2)^s."""
        if self.cos_coef is None:
            raise ValueError("the Sobolev norm proxy needs an explicit Fourier coefficient list")
        if s is None:
            s = self.s0
        k = np.arange(1, len(self.cos_coef) + 1, dtype=float)
        w = (1.0 + 4.0 * np.pi**2 * k**2) ** float(s)
        return float(self.a0**2 + np.sum((self.cos_coef**2 + self.sin_coef**2) * w))


def _fourier_fn(a0, a, b):
    k = np.arange(1, len(a) + 1, dtype=float)

    def fn(x):
        x = np.asarray(x, dtype=float)
        ang = 2.0 * np.pi * np.multiply.outer(x, k)
        return a0 + np.cos(ang) @ a + np.sin(ang) @ b

    return fn


def fourier_target_from_coefficients(a0, cos_coef, sin_coef, s0, description=""):
    a = np.asarray(cos_coef, dtype=float)
    b = np.asarray(sin_coef, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("cosine and sine coefficient lists must be 1D of equal length")
    a.setflags(write=False)
    b.setflags(write=False)
    return TargetFunction(
        fn=_fourier_fn(float(a0), a, b),
        s0=float(s0),
        periodic=True,
        description=description or f"fourier series target, s0={s0}",
        a0=float(a0),
        cos_coef=a,
        sin_coef=b,
        meta={"kind": "fourier-explicit", "s0": float(s0)},
    )


def fourier_target(s0, K=FOURIER_DEFAULT_TERMS, seed=0):
    """Random-sign Fourier target in H^{s0}(0, 1), periodic.

    Coefficients are +-k^-(s0 + 1/2 + margin) with seeded signs: the decay
    margin makes the H^{s0} norm proxy finite, and sign randomness (rather
    than magnitude randomness) keeps the norm deterministic given (s0, K).
    """
    if s0 <= 0.5:
        raise ValueError("fourier targets need s0 > 1/2")
    if K < 1:
        raise ValueError("fourier targets need at least one mode")
    rng = np.random.default_rng(seed)
    k = np.arange(1, K + 1, dtype=float)
    decay = k ** (-(float(s0) + 0.5 + FOURIER_DECAY_MARGIN))
    # one block draw keeps the first K coefficients identical across
    # truncation levels, so partial sums nest consistently
    signs = 2.0 * rng.integers(0, 2, size=(K, 2)) - 1.0
    a = decay * signs[:, 0]
    b = decay * signs[:, 1]
    t = fourier_target_from_coefficients(0.0, a, b, s0, description=f"fourier target s0={s0} seed={seed}")
    t.meta.update({"kind": "fourier", "s0": float(s0), "K": int(K), "seed": int(seed)})
    return t


def truncated_power_target(m, c):
    """f(x) = max(0, x - c)^m: finite smoothness, one kink at c.

    Lies in H^{m + 1/2 - eps}; the declared index m + 0.45 keeps a
    conservative margin.
    """
    if m < 1 or int(m) != m:
        raise ValueError("truncated-power exponent m must be a positive integer")
    if not (0.0 < c < 1.0):
        raise ValueError("kink location c must be interior to (0, 1)")
    m = int(m)

    def fn(x):
        return np.maximum(0.0, np.asarray(x, dtype=float) - c) ** m

    return TargetFunction(
        fn=fn,
        s0=m + 0.45,
        periodic=False,
        description=f"truncated power (x - {c})_+^{m}",
        meta={"kind": "truncated-power", "m": m, "c": float(c)},
    )


def smooth_target(kind="sine"):
    """Infinitely smooth saturation targets (sine and a Gaussian bump)."""
    if kind == "sine":
        return TargetFunction(
            fn=lambda x: np.sin(2.0 * np.pi * np.asarray(x, dtype=float)),
            s0=None,
            periodic=True,
            description="sin(2 pi x)",
            meta={"kind": "sine"},
        )
    if kind == "gaussian-bump":
        return TargetFunction(
            fn=lambda x: np.exp(-((np.asarray(x, dtype=float) - 0.5) ** 2) / 0.02),
            s0=None,
            periodic=False,
            description="gaussian bump at 0.5",
            meta={"kind": "gaussian-bump"},
        )
    if kind == "sine2d":
        def fn(x):
            x = np.asarray(x, dtype=float)
            return np.sin(2.0 * np.pi * x[..., 0]) * np.sin(2.0 * np.pi * x[..., 1])

        return TargetFunction(
            fn=fn, s0=None, periodic=True, description="sin(2 pi x) sin(2 pi y)", meta={"kind": "sine2d"}
        )
    raise ValueError(f"unknown smooth target kind {kind!r}")


def fourier_target_2d(s0, K=FOURIER_DEFAULT_TERMS, seed=0):
    """Tensor product of two independent 1D Fourier targets on the unit square."""
    fx = fourier_target(s0, K=K, seed=seed)
    fy = fourier_target(s0, K=K, seed=seed + 1)

    def fn(p):
        p = np.asarray(p, dtype=float)
        return fx(p[..., 0]) * fy(p[..., 1])

    return TargetFunction(
        fn=fn,
        s0=float(s0),
        periodic=True,
        description=f"tensor fourier target s0={s0} seed={seed}",
        meta={"kind": "fourier2d", "s0": float(s0), "K": int(K), "seed": int(seed)},
    )


def _smoothstep(t):
    """C-infinity transition 0 -> 1 on [0, 1] built from exp(-1/t)."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        lo = np.where(t > 0.0, np.exp(-1.0 / np.where(t > 0.0, t, 1.0)), 0.0)
        hi = np.where(t < 1.0, np.exp(-1.0 / np.where(t < 1.0, 1.0 - t, 1.0)), 0.0)
    return lo / (lo + hi)


def bump_window(target, omega, ambient):
    """Multiply a target by a smooth window: 1 on omega, 0 near the ambient boundary.

    The window transitions on the buffer between omega and the midpoint of
    the gap to the ambient boundary, so the result vanishes with all
    derivatives before the boundary and extends periodically.
    """
    a, b = float(omega[0]), float(omega[1])
    lo, hi = float(ambient[0]), float(ambient[1])
    if not (lo < a < b < hi):
        raise ValueError("the window region must lie strictly inside the ambient interval")
    left_edge = 0.5 * (lo + a)
    right_edge = 0.5 * (b + hi)

    def window(x):
        x = np.asarray(x, dtype=float)
        up = _smoothstep((x - left_edge) / (a - left_edge))
        down = _smoothstep((right_edge - x) / (right_edge - b))
        return np.where(x < a, up, 1.0) * np.where(x > b, down, 1.0)

    def fn(x):
        return window(np.asarray(x, dtype=float)) * target(x)

    return TargetFunction(
        fn=fn,
        s0=target.s0,
        periodic=True,
        description=f"{target.description} windowed to ({a}, {b})",
        a0=target.a0,
        cos_coef=target.cos_coef,
        sin_coef=target.sin_coef,
        meta={"kind": "windowed", "inner": dict(target.meta), "omega": [a, b], "ambient": [lo, hi]},
    )


def target_from_json(obj):
    """Rebuild a target from its JSON description (kind + parameters + seed)."""
    try:
        kind = obj["kind"]
    except (TypeError, KeyError):
        raise ValueError("target JSON must be an object with a 'kind' key")
    if kind == "fourier":
        return fourier_target(obj["s0"], K=obj.get("K", FOURIER_DEFAULT_TERMS), seed=obj.get("seed", 0))
    if kind == "fourier2d":
        return fourier_target_2d(obj["s0"], K=obj.get("K", FOURIER_DEFAULT_TERMS), seed=obj.get("seed", 0))
    if kind == "truncated-power":
        return truncated_power_target(obj["m"], obj["c"])
    if kind in ("sine", "gaussian-bump", "sine2d"):
        return smooth_target(kind)
    raise ValueError(f"unknown target kind {kind!r}")


def target_to_json(target):
    if "kind" not in target.meta:
        raise ValueError("this target does not carry a serializable description")
    return dict(target.meta)
