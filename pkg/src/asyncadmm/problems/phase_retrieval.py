"""Phase retrieval from intensity measurements.

A complex signal in C^d is stored as a real vector ``x = (x_r, x_i)`` of
length 2d.  For a direction ``t = (t_r, t_i)`` in the same embedding,

    |<x, t>|^2 = (x_r.t_r + x_i.t_i)^2 + (x_r.t_i - x_i.t_r)^2

so each measurement is the sum of squares of two real linear forms.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .. import kernels
from ..errors import DimensionMismatch
from .base import LocalObjective, ProxResult, readonly


@dataclass(frozen=True, eq=False)
class PhaseRetrievalData(LocalObjective):
    """Agent objective ``f(x) = mean((b_j - |<x, t_j>|^2)^2)``.

    Parameters
    ----------
    directions : ndarray, shape (m, 2d)
        Measurement directions in the real embedding.
    measurements : ndarray, shape (m,)
        Observed intensities.
    x0 : ndarray, shape (2d,)
        Ground-truth signal, kept for diagnostics only.
    tol, max_iters
        Inner prox solver settings (gradient-norm tolerance, step cap).
    """

    directions: np.ndarray
    measurements: np.ndarray
    x0: np.ndarray
    tol: float = 1e-9
    max_iters: int = 500
    _A: np.ndarray = field(init=False, repr=False)
    _B: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        T = np.ascontiguousarray(self.directions, dtype=float)
        if T.ndim != 2 or T.shape[1] % 2 or T.shape[0] < 1:
            raise DimensionMismatch("directions must have shape (m, 2d) with m >= 1")
        b = np.ascontiguousarray(self.measurements, dtype=float)
        if b.shape != (T.shape[0],):
            raise DimensionMismatch("one measurement per direction required")
        half = T.shape[1] // 2
        B = np.hstack([T[:, half:], -T[:, :half]])
        object.__setattr__(self, "directions", readonly(T))
        object.__setattr__(self, "measurements", readonly(b))
        object.__setattr__(self, "x0", readonly(self.x0))
        object.__setattr__(self, "_A", self.directions)
        object.__setattr__(self, "_B", readonly(B))

    @property
    def dim(self):
        return self.directions.shape[1]

    @property
    def num_measurements(self):
        return self.directions.shape[0]

    def intensities(self, x):
        x = self._check(x)
        re = self._A @ x
        im = self._B @ x
        return re * re + im * im

    def smooth_value(self, x):
        return pr_value(self, x)

    def smooth_gradient(self, x):
        return pr_gradient(self, x)

    def prox_with_info(self, center, weight):
        return _pr_prox_info(self, center, weight, self.tol, self.max_iters)


# Value and gradient go through numpy in every backend so that they use the
# same products as the data generator: noiseless data then give exactly zero
# residual at the truth.


def pr_value(data, x):
    """Mean squared intensity residual of one agent."""
    x = data._check(x)
    val, _ = kernels.python_backend.pr_value_grad(data._A, data._B, data.measurements, x)
    return float(val)


def pr_gradient(data, x):
    """Gradient of :func:`pr_value` in the real embedding."""
    x = data._check(x)
    _, grad = kernels.python_backend.pr_value_grad(data._A, data._B, data.measurements, x)
    return np.asarray(grad)


def _pr_prox_info(data, center, weight, tol, max_iters):
    center = np.ascontiguousarray(data._check(center))
    if not weight > 0:
        raise ValueError("prox weight must be positive")
    x, iters, ok = kernels.pr_prox(
        data._A, data._B, data.measurements, center, float(weight), float(tol), int(max_iters)
    )
    return ProxResult(np.asarray(x), int(iters), bool(ok))


def pr_prox(data, center, weight, tol=1e-9, max_iters=500):
    """Approximate ``argmin_u f(u) + weight/2 |u - center|^2``.

    Gradient descent with a backtracking line search, started at
    ``center``.  The step doubles after each accepted move and halves until
    the sufficient-decrease test passes.  Issues
    :class:`~asyncadmm.errors.InnerSolverStalled` if the subproblem gradient
    norm is still above ``tol`` after ``max_iters`` steps.
    """
    return replace(data, tol=tol, max_iters=max_iters).prox(center, weight)


def generate_phase_retrieval(seed, n, d, m_per_agent, noise_sigma=0.01, tol=1e-9, max_iters=500):
    """Draw ``n`` agents' phase-retrieval data for a shared signal in C^d.

    The truth is standard normal in R^{2d} scaled to unit norm.  Directions
    have i.i.d. ``N(0, 1/2)`` entries and noise is ``N(0, noise_sigma^2)``.
    Agent ``i`` draws from its own child stream of ``seed``, so the data do
    not depend on the order agents are generated in.
    """
    if n < 1 or d < 1 or m_per_agent < 1:
        raise ValueError("n, d and m_per_agent must be positive")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be nonnegative")
    children = np.random.SeedSequence(seed).spawn(n + 1)
    truth_rng = np.random.default_rng(children[0])
    x0 = truth_rng.standard_normal(2 * d)
    x0 /= np.linalg.norm(x0)
    agents = []
    for i in range(n):
        rng = np.random.default_rng(children[i + 1])
        T = rng.normal(0.0, np.sqrt(0.5), size=(m_per_agent, 2 * d))
        noise = rng.normal(0.0, noise_sigma, size=m_per_agent) if noise_sigma > 0 else 0.0
        half = d
        re = T @ x0
        im = np.hstack([T[:, half:], -T[:, :half]]) @ x0
        b = re * re + im * im + noise
        agents.append(PhaseRetrievalData(T, b, x0, tol=tol, max_iters=max_iters))
    return agents


def phase_aligned_distance(x, x0):
    """``min_phi |x - e^{i phi} x0|`` in the real embedding."""
    x = np.asarray(x, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    d = x.shape[0] // 2
    xc = x[:d] + 1j * x[d:]
    tc = x0[:d] + 1j * x0[d:]
    inner = np.vdot(tc, xc)
    phase = inner / abs(inner) if abs(inner) > 0 else 1.0
    return float(np.linalg.norm(xc - phase * tc))
