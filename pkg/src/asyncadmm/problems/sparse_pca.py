"""Sparse principal component analysis split across agents.

The global problem is ``min -sum_i |P_i x|^2 + lam*|x|_1`` over the unit
ball.  Each agent carries its own data term plus an equal share ``lam/n``
of the l1 weight and a copy of the ball constraint, so the sum of the agent
objectives equals the global objective on the ball.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .. import kernels
from ..errors import DimensionMismatch, WeightTooSmall
from .base import LocalObjective, ProxResult, readonly


@dataclass(frozen=True, eq=False)
class SparsePcaData(LocalObjective):
    """Agent objective ``-|P u|^2 + l1_weight*|u|_1`` on ``{|u| <= radius}``.

    Parameters
    ----------
    P : ndarray, shape (m, d)
    l1_weight : float
        This agent's share of the global l1 weight.
    radius : float
    tol, max_iters
        Inner proximal-gradient settings.
    """

    P: np.ndarray
    l1_weight: float = 0.0
    radius: float = 1.0
    tol: float = 1e-10
    max_iters: int = 10000
    _gram: np.ndarray = field(init=False, repr=False)
    _eig: tuple = field(init=False, repr=False)

    def __post_init__(self):
        P = np.ascontiguousarray(self.P, dtype=float)
        if P.ndim != 2:
            raise DimensionMismatch("P must be a matrix")
        if self.l1_weight < 0:
            raise ValueError("l1_weight must be nonnegative")
        G = P.T @ P
        G = 0.5 * (G + G.T)
        ev = np.linalg.eigvalsh(G)
        object.__setattr__(self, "P", readonly(P))
        object.__setattr__(self, "_gram", readonly(G))
        object.__setattr__(self, "_eig", (float(max(ev[0], 0.0)), float(max(ev[-1], 0.0))))

    @property
    def dim(self):
        return self.P.shape[1]

    @property
    def gram_lambda_max(self):
        """Largest eigenvalue of ``P'P``."""
        return self._eig[1]

    def smooth_value(self, x):
        x = self._check(x)
        Px = self.P @ x
        return -float(Px @ Px)

    def smooth_gradient(self, x):
        x = self._check(x)
        return -2.0 * (self._gram @ x)

    def smoothness_hints(self):
        lam = 2.0 * self.gram_lambda_max
        return lam, lam

    def prox_with_info(self, center, weight):
        center = np.ascontiguousarray(self._check(center))
        lo, hi = self._eig
        if not weight > 2.0 * hi:
            raise WeightTooSmall(
                f"prox weight {weight} must exceed 2*lambda_max(P'P) = {2.0 * hi}"
            )
        d = self.dim
        H = np.ascontiguousarray(weight * np.eye(d) - 2.0 * self._gram)
        h = weight * center
        step = 1.0 / (weight - 2.0 * lo)
        x, iters, ok = kernels.quad_composite_prox(
            H, h, float(self.l1_weight), float(self.radius), step, center,
            float(self.tol), int(self.max_iters),
        )
        return ProxResult(np.asarray(x), int(iters), bool(ok))


def spca_prox(data, center, weight, tol=1e-10, max_iters=10000):
    """``argmin_u -|P u|^2 + l1*|u|_1 + weight/2 |u - center|^2`` on the ball.

    Proximal gradient on the strongly convex quadratic part; each step
    soft-thresholds then projects onto the ball.  Raises
    :class:`~asyncadmm.errors.WeightTooSmall` unless
    ``weight > 2*lambda_max(P'P)``.
    """
    return replace(data, tol=tol, max_iters=max_iters).prox(center, weight)


def generate_sparse_pca(seed, n, d, m_per_agent, entry_sigma=0.1, lam=10.0, radius=1.0):
    """Gaussian data matrices with i.i.d. ``N(0, entry_sigma^2)`` entries.

    The l1 weight ``lam`` is split evenly over the ``n`` agents.
    """
    if n < 1 or d < 1 or m_per_agent < 1:
        raise ValueError("n, d and m_per_agent must be positive")
    if entry_sigma < 0 or lam < 0:
        raise ValueError("entry_sigma and lam must be nonnegative")
    children = np.random.SeedSequence(seed).spawn(n)
    agents = []
    for i in range(n):
        rng = np.random.default_rng(children[i])
        if entry_sigma > 0:
            P = rng.normal(0.0, entry_sigma, size=(m_per_agent, d))
        else:
            P = np.zeros((m_per_agent, d))
        agents.append(SparsePcaData(P, l1_weight=lam / n, radius=radius))
    return agents
