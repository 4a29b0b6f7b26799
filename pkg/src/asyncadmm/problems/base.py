"""Contract shared by all per-agent objectives."""

import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch, InnerSolverStalled


@dataclass(frozen=True)
class ProxResult:
    """Output of an inner prox solve.

    Attributes
    ----------
    x : ndarray
        Best iterate found.
    iterations : int
        Inner iterations spent (0 for closed-form proxes).
    converged : bool
        Whether the solver reached its tolerance.
    """

    x: np.ndarray
    iterations: int
    converged: bool


class LocalObjective:
    """One agent's objective ``f = smooth + l1_weight*|.|_1 + ball indicator``.

    Subclasses set ``dim``, ``l1_weight`` and ``radius`` (``None`` for no
    ball) and implement ``smooth_value``, ``smooth_gradient`` and
    ``prox_with_info``.  Instances are treated as immutable, so every method
    is safe to call from several threads at once.
    """

    dim: int
    l1_weight: float = 0.0
    radius = None

    def smooth_value(self, x):
        raise NotImplementedError

    def smooth_gradient(self, x):
        raise NotImplementedError

    def prox_with_info(self, center, weight):
        """Solve ``argmin_u f(u) + weight/2 |u - center|^2``."""
        raise NotImplementedError

    def smoothness_hints(self):
        """Return ``(L, ell)`` for the smooth part, or ``None`` if unknown."""
        return None

    def value(self, x):
        """Full objective including the l1 term and the ball indicator."""
        x = self._check(x)
        val = self.smooth_value(x)
        if self.l1_weight:
            val += self.l1_weight * float(np.abs(x).sum())
        if self.radius is not None and float(np.linalg.norm(x)) > self.radius * (1 + 1e-12):
            return np.inf
        return val

    def prox(self, center, weight):
        """Prox point; warns with :class:`InnerSolverStalled` if inexact."""
        res = self.prox_with_info(center, weight)
        if not res.converged:
            warnings.warn(
                f"{type(self).__name__} prox stopped after {res.iterations} iterations "
                "without reaching tolerance",
                InnerSolverStalled,
                stacklevel=2,
            )
        return res.x

    def subproblem_value(self, u, center, weight):
        """``f(u) + weight/2 |u - center|^2``."""
        diff = np.asarray(u, dtype=float) - center
        return self.value(u) + 0.5 * weight * float(diff @ diff)

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionMismatch(f"expected shape ({self.dim},), got {x.shape}")
        return x


def soft_threshold(v, thresh):
    """Componentwise ``sign(v) * max(|v| - thresh, 0)``."""
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - thresh, 0.0)


def project_ball(v, radius):
    """Euclidean projection onto ``{|u| <= radius}``; ``radius=None`` is a no-op."""
    v = np.asarray(v, dtype=float)
    if radius is None:
        return v
    nrm = float(np.linalg.norm(v))
    if nrm <= radius:
        return v
    return v * (radius / nrm)


def readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a
