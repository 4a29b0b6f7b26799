"""Quadratic test objective ``x'Qx/2 - c'x`` with a closed-form prox."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionMismatch, WeightTooSmall
from .base import LocalObjective, ProxResult, readonly


@dataclass(frozen=True, eq=False)
class QuadraticData(LocalObjective):
    """Agent objective ``x'Qx/2 - c'x`` for symmetric ``Q`` (not necessarily PSD)."""

    Q: np.ndarray
    c: np.ndarray
    _eig: tuple = field(init=False, repr=False)

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=float)
        c = np.asarray(self.c, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or c.shape != (Q.shape[0],):
            raise DimensionMismatch("need square Q and matching c")
        if not np.allclose(Q, Q.T, rtol=0, atol=1e-12 * max(1.0, np.abs(Q).max(initial=0))):
            raise ValueError("Q must be symmetric")
        ev = np.linalg.eigvalsh(Q)
        object.__setattr__(self, "Q", readonly(Q))
        object.__setattr__(self, "c", readonly(c))
        object.__setattr__(self, "_eig", (float(ev[0]), float(ev[-1])))

    @property
    def dim(self):
        return self.Q.shape[0]

    def smooth_value(self, x):
        x = self._check(x)
        return 0.5 * float(x @ (self.Q @ x)) - float(self.c @ x)

    def smooth_gradient(self, x):
        x = self._check(x)
        return self.Q @ x - self.c

    def smoothness_hints(self):
        lo, hi = self._eig
        return max(abs(lo), abs(hi)), max(0.0, -lo)

    def prox_with_info(self, center, weight):
        center = self._check(center)
        if not weight + self._eig[0] > 0:
            raise WeightTooSmall(f"prox weight {weight} must exceed {-self._eig[0]}")
        return ProxResult(quad_prox(self, center, weight), 0, True)


def quad_prox(data, center, weight):
    """``(I + Q/w)^{-1} (center + c/w)``."""
    d = data.dim
    return np.linalg.solve(np.eye(d) + data.Q / weight, np.asarray(center, dtype=float) + data.c / weight)


def random_symmetric(rng, d, eig_low, eig_high):
    """Symmetric matrix with eigenvalues drawn uniformly in ``[eig_low, eig_high]``.

    The extreme eigenvalues are pinned to the interval ends when ``d >= 2``.
    """
    vals = rng.uniform(eig_low, eig_high, size=d)
    if d >= 2:
        vals[0], vals[1] = eig_low, eig_high
    U, _ = np.linalg.qr(rng.standard_normal((d, d)))
    Q = (U * vals) @ U.T
    return 0.5 * (Q + Q.T)


def generate_quadratic(seed, n, d, eig_low=0.5, eig_high=2.0):
    """``n`` random quadratics with eigenvalues in ``[eig_low, eig_high]``."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    children = np.random.SeedSequence(seed).spawn(n)
    agents = []
    for i in range(n):
        rng = np.random.default_rng(children[i])
        Q = random_symmetric(rng, d, eig_low, eig_high)
        c = rng.standard_normal(d)
        agents.append(QuadraticData(Q, c))
    return agents


def centralized_minimizer(objectives):
    """Minimizer of ``sum_i f_i`` for quadratics with PD ``sum Q_i``."""
    Q = sum(o.Q for o in objectives)
    c = sum(o.c for o in objectives)
    return np.linalg.solve(Q, c)
