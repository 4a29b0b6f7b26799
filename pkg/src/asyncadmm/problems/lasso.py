"""Distributed LASSO: ``sum_i |A_i x - b_i|^2 + lam*|x|_1``."""

from dataclasses import dataclass, field

import numpy as np

from .. import kernels
from ..errors import DimensionMismatch
from .base import LocalObjective, ProxResult, readonly


@dataclass(frozen=True, eq=False)
class LassoData(LocalObjective):
    """Agent objective ``|A u - b|^2 + l1_weight*|u|_1``."""

    A: np.ndarray
    b: np.ndarray
    l1_weight: float = 0.0
    tol: float = 1e-10
    max_iters: int = 100000
    _gram: np.ndarray = field(init=False, repr=False)
    _atb: np.ndarray = field(init=False, repr=False)
    _lmax: float = field(init=False, repr=False)

    def __post_init__(self):
        A = np.ascontiguousarray(self.A, dtype=float)
        b = np.ascontiguousarray(self.b, dtype=float)
        if A.ndim != 2 or b.shape != (A.shape[0],):
            raise DimensionMismatch("need A of shape (m, d) and b of shape (m,)")
        if self.l1_weight < 0:
            raise ValueError("l1_weight must be nonnegative")
        G = A.T @ A
        G = 0.5 * (G + G.T)
        object.__setattr__(self, "A", readonly(A))
        object.__setattr__(self, "b", readonly(b))
        object.__setattr__(self, "_gram", readonly(G))
        object.__setattr__(self, "_atb", readonly(A.T @ b))
        object.__setattr__(self, "_lmax", float(max(np.linalg.eigvalsh(G)[-1], 0.0)))

    @property
    def dim(self):
        return self.A.shape[1]

    def smooth_value(self, x):
        x = self._check(x)
        r = self.A @ x - self.b
        return float(r @ r)

    def smooth_gradient(self, x):
        x = self._check(x)
        return 2.0 * (self._gram @ x - self._atb)

    def smoothness_hints(self):
        return 2.0 * self._lmax, 0.0

    def prox_with_info(self, center, weight):
        center = np.ascontiguousarray(self._check(center))
        if not weight > 0:
            raise ValueError("prox weight must be positive")
        d = self.dim
        if self.l1_weight == 0.0:
            x = np.linalg.solve(weight * np.eye(d) + 2.0 * self._gram, weight * center + 2.0 * self._atb)
            return ProxResult(x, 0, True)
        H = np.ascontiguousarray(weight * np.eye(d) + 2.0 * self._gram)
        h = weight * center + 2.0 * self._atb
        step = 1.0 / (weight + 2.0 * self._lmax)
        x, iters, ok = kernels.quad_composite_prox(
            H, h, float(self.l1_weight), 0.0, step, center, float(self.tol), int(self.max_iters)
        )
        return ProxResult(np.asarray(x), int(iters), bool(ok))


def lasso_prox(data, center, weight):
    """``argmin_u |A u - b|^2 + l1*|u|_1 + weight/2 |u - center|^2``."""
    return data.prox(center, weight)


def generate_lasso(seed, n, d, m_per_agent, lam=1.0, noise_sigma=0.1, sparsity=0.3):
    """Gaussian LASSO instance with a sparse planted solution.

    ``A_i`` has i.i.d. ``N(0, 1/m)`` entries, the planted vector has a
    ``sparsity`` fraction of nonzeros and ``b_i = A_i x* + noise``.  The l1
    weight ``lam`` is split evenly over the agents.
    """
    if n < 1 or d < 1 or m_per_agent < 1:
        raise ValueError("n, d and m_per_agent must be positive")
    children = np.random.SeedSequence(seed).spawn(n + 1)
    rng0 = np.random.default_rng(children[0])
    planted = rng0.standard_normal(d) * (rng0.random(d) < sparsity)
    agents = []
    for i in range(n):
        rng = np.random.default_rng(children[i + 1])
        A = rng.normal(0.0, 1.0 / np.sqrt(m_per_agent), size=(m_per_agent, d))
        b = A @ planted + rng.normal(0.0, noise_sigma, size=m_per_agent)
        agents.append(LassoData(A, b, l1_weight=lam / n))
    return agents
