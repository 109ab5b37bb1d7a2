"""Truncated trigonometric expansion kernel on the unit interval.

The kernel is a constant mode plus N cosine/sine pairs with weights
(1 + 4 pi^2 k^2)^(-s).  Two algebraically equal forms are implemented: the
separated cos*cos + sin*sin sum (used for matrix assembly, it is a plain
feature product) and the stationary cosine form in |x - y| (used for scalar
evaluation).  Rank is 2N+1, so Gram matrices with more than 2N+1 points are
singular.
"""

import numpy as np

from .base import Kernel, KLTrigSpec, as_coords, mirror_upper


class KLTrigKernel(Kernel):
    def __init__(self, spec):
        if not isinstance(spec, KLTrigSpec):
            raise TypeError("KLTrigKernel requires a KLTrigSpec")
        self.spec = spec
        k = np.arange(1, spec.N + 1, dtype=float)
        self.weights = (1.0 + 4.0 * np.pi**2 * k**2) ** (-float(spec.s))
        self._k = k

    @property
    def rank(self):
        return 2 * self.spec.N + 1

    def _check(self, x):
        x = as_coords(x)
        if np.any(x < 0.0) or np.any(x > 1.0):
            raise ValueError("trigonometric kernel arguments must lie in [0, 1]")
        return x

    def eval(self, x, y):
        """Stationary cosine form, exactly symmetric through |x - y|."""
        x = float(self._check(x)[0])
        y = float(self._check(y)[0])
        t = abs(x - y)
        return float(1.0 + np.sum(self.weights * np.cos(2.0 * np.pi * self._k * t)))

    def eval_separated(self, x, y):
        """Separated series form; must agree with ``eval`` to 1e-12."""
        x = float(self._check(x)[0])
        y = float(self._check(y)[0])
        cx = np.cos(2.0 * np.pi * self._k * x)
        cy = np.cos(2.0 * np.pi * self._k * y)
        sx = np.sin(2.0 * np.pi * self._k * x)
        sy = np.sin(2.0 * np.pi * self._k * y)
        return float(1.0 + np.sum(self.weights * (cx * cy + sx * sy)))

    def features(self, X):
        """Weighted trigonometric feature matrix F with K(X, Y) = F(X) F(Y)^T."""
        x = self._check(X)
        w = np.sqrt(self.weights)
        ang = 2.0 * np.pi * np.outer(x, self._k)
        return np.column_stack([np.ones_like(x), np.cos(ang) * w, np.sin(ang) * w])

    def matrix(self, X, Y=None):
        FX = self.features(X)
        if Y is None:
            return mirror_upper(FX @ FX.T)
        return FX @ self.features(Y).T

    def diag(self, X):
        x = self._check(X)
        return np.full(x.shape[0], 1.0 + float(np.sum(self.weights)))
