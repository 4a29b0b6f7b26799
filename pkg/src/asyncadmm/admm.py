"""Partially asynchronous decentralised ADMM over a subgraph cover.

Each iteration draws a set of subgraphs.  Every node in an active subgraph
solves its prox subproblem at the average of ``z - y/beta`` over all its
copies (read before the iteration), then each active subgraph averages its
members' ``x + y/beta`` into a common ``z`` and takes a dual step.
Variables of inactive subgraphs are untouched.
"""

import csv
import time
import warnings
from dataclasses import dataclass

import numpy as np

from . import analysis
from .errors import EmptyActivation, InnerSolverStalled
from .graph import stack
from .splitting import f_tilde_value, merit, prox_g_tilde, solve_node_proxes


@dataclass
class NetworkState:
    """Primal, consensus and dual variables of the whole network.

    Attributes
    ----------
    x : ndarray, shape (n, d)
        Node variables, row ``j-1`` for node ``j``.
    z, y : ndarray, shape (num_slots, d)
        Consensus copies and duals, one row per ``(subgraph, node)`` slot in
        the cover's layout.
    beta : float
    k : int
        Iterations applied so far.
    """

    x: np.ndarray
    z: np.ndarray
    y: np.ndarray
    beta: float
    k: int = 0

    def copy(self):
        return NetworkState(self.x.copy(), self.z.copy(), self.y.copy(), self.beta, self.k)

    @classmethod
    def zeros(cls, cover, beta):
        """All-zero state."""
        if not beta > 0:
            raise ValueError("beta must be positive")
        return cls(
            np.zeros((cover.n, cover.d)),
            np.zeros((cover.num_slots, cover.d)),
            np.zeros((cover.num_slots, cover.d)),
            float(beta),
        )

    @classmethod
    def from_x(cls, cover, x, beta):
        """Start from node values ``x`` with ``z`` their subgraph means and ``y = 0``.

        The iteration reads only ``z`` and ``y``, so the starting point has to
        be carried by ``z``; taking subgraph means keeps ``z`` consistent.
        """
        state = cls.zeros(cover, beta)
        x = np.array(cover.as_nodes(x), dtype=float)
        state.x = x
        state.z = cover.consensus_project_blocks(x[cover.slot_node])
        return state


class ActivationSampler:
    """Random subgraph activation sets.

    Parameters
    ----------
    m : int
        Number of subgraphs.
    cardinality : int, optional
        Fixed set size ``1 <= |S| <= m``.  Defaults to ``m``.
    seed : int or SeedSequence
    bernoulli : float, optional
        If given, each subgraph activates independently with this
        probability instead (empty draws are redrawn).
    """

    def __init__(self, m, cardinality=None, seed=0, bernoulli=None):
        self.m = int(m)
        if bernoulli is not None:
            if not 0 < bernoulli <= 1:
                raise ValueError("bernoulli probability must lie in (0, 1]")
            self.cardinality = None
        else:
            c = self.m if cardinality is None else int(cardinality)
            if not 1 <= c <= self.m:
                raise EmptyActivation(f"cardinality must lie in 1..{self.m}, got {c}")
            self.cardinality = c
        self.bernoulli = bernoulli
        self._rng = np.random.default_rng(seed)

    def draw(self):
        """Sorted tuple of 1-based active subgraph ids."""
        if self.bernoulli is not None:
            while True:
                mask = self._rng.random(self.m) < self.bernoulli
                if mask.any():
                    return tuple(int(i) + 1 for i in np.flatnonzero(mask))
        pool = list(range(1, self.m + 1))
        c = self.cardinality
        # partial Fisher-Yates: the first c entries end up a uniform c-subset
        for t in range(c):
            r = t + int(self._rng.integers(self.m - t))
            pool[t], pool[r] = pool[r], pool[t]
        return tuple(sorted(pool[:c]))


@dataclass
class IterationInfo:
    """Side results of one ADMM iteration."""

    active: tuple
    nodes: np.ndarray
    inner_iters: int
    stalled: int
    x_hat: np.ndarray = None


def _check_active(cover, active):
    active = tuple(sorted(set(int(i) for i in active)))
    if not active:
        raise EmptyActivation("no active subgraph")
    if active[0] < 1 or active[-1] > cover.m:
        raise ValueError(f"subgraph ids must lie in 1..{cover.m}")
    return active


def admm_step(state, cover, objectives, active, executor=None, all_nodes=False):
    """One iteration; returns ``(new_state, IterationInfo)``.

    With ``all_nodes=True`` every node's prox is evaluated at its current
    center (``IterationInfo.x_hat``), but only active nodes adopt the
    result.  The merit needs these values.
    """
    active = _check_active(cover, active)
    beta = state.beta
    nodes = cover.nodes_of(active)
    centers = cover.node_average_blocks(state.z - state.y / beta)
    weights = beta * cover.node_counts
    solve_for = range(cover.n) if all_nodes else nodes
    results = solve_node_proxes(objectives, centers, weights, solve_for, executor)

    x = state.x.copy()
    iters = 0
    stalled = 0
    for j in nodes:
        x[j] = results[j].x
    for r in results.values():
        iters += r.iterations
        stalled += not r.converged
    x_hat = None
    if all_nodes:
        x_hat = np.array([results[j].x for j in range(cover.n)])

    slots = cover.slots_of(active)
    w = x[cover.slot_node] + state.y / beta
    zbar = cover.subgraph_mean_blocks(w)
    z = state.z.copy()
    y = state.y.copy()
    z[slots] = zbar[cover.slot_subgraph[slots]]
    y[slots] += beta * (x[cover.slot_node[slots]] - z[slots])
    new = NetworkState(x, z, y, beta, state.k + 1)
    return new, IterationInfo(active, nodes, iters, stalled, x_hat)


def admm_iteration(state, cover, objectives, active, executor=None):
    """Apply one iteration with the given active subgraphs (1-based ids)."""
    new, info = admm_step(state, cover, objectives, active, executor)
    if info.stalled:
        warnings.warn(f"{info.stalled} inner prox solves hit their iteration cap", InnerSolverStalled, stacklevel=2)
    return new


def to_drs_coordinates(state, cover):
    """Shadow point ``s = z - y/beta`` of the equivalent splitting iteration.

    Blockwise this is ``s_(i,j) = x_j - y_(i,j)/beta`` whenever ``z`` agrees
    with ``x`` on subgraph ``i``; using ``z`` makes the map exact at every
    iterate, including nodes whose ``x`` was last updated elsewhere.
    """
    return (state.z - state.y / state.beta).reshape(-1)


def iteration_merit(pre, post, info, cover, objectives):
    """Merit of the splitting image of one iteration.

    ``u = T x_hat`` from the pre-iteration shadow point, ``v`` the consensus
    projection of ``2u - s_pre``, and ``s`` the post-iteration shadow point.
    """
    s_pre = to_drs_coordinates(pre, cover)
    u = stack(cover, info.x_hat)
    v = prox_g_tilde(cover, 2.0 * u - s_pre)
    s = to_drs_coordinates(post, cover)
    return merit(u, v, s, f_tilde_value(objectives, info.x_hat), 1.0 / pre.beta)


def run(state, cover, objectives, sampler, iterations, recorder=None, executor=None,
        track_merit=True, residual_step=None):
    """Iterate, drawing a fresh activation set each step.

    Parameters
    ----------
    sampler : ActivationSampler or None
        ``None`` activates every subgraph (synchronous mode).
    recorder : callable, optional
        Receives each :class:`~asyncadmm.analysis.RunRecord` as it is made.
    track_merit : bool
        Evaluate every node's prox each step so the merit can be recorded;
        otherwise the merit column is NaN.

    Returns
    -------
    (NetworkState, list of RunRecord)
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    everyone = tuple(range(1, cover.m + 1))
    records = []
    stalled_total = 0
    for _ in range(iterations):
        active = everyone if sampler is None else sampler.draw()
        t0 = time.perf_counter()
        new, info = admm_step(state, cover, objectives, active, executor, all_nodes=track_merit)
        wall_ms = (time.perf_counter() - t0) * 1e3
        stalled_total += info.stalled
        L = iteration_merit(state, new, info, cover, objectives) if track_merit else float("nan")
        rec = analysis.make_record(new.k, L, objectives, new.x, info.active, info.inner_iters, wall_ms,
                                   residual_step=residual_step)
        records.append(rec)
        if recorder is not None:
            recorder(rec)
        state = new
    if stalled_total:
        warnings.warn(f"{stalled_total} inner prox solves hit their iteration cap", InnerSolverStalled, stacklevel=2)
    return state, records


def sync_admm_reference(state, cover, objectives, iterations, executor=None):
    """Synchronous baseline: every subgraph active at every iteration."""
    for _ in range(iterations):
        state = admm_iteration(state, cover, objectives, range(1, cover.m + 1), executor)
    return state


def write_checkpoint(state, cover, path):
    """Write ``x``, ``z``, ``y`` as rows ``kind,subgraph,node,coord,value``.

    ``x`` rows use subgraph 0.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "subgraph", "node", "coord", "value"])
        for j in range(cover.n):
            for c in range(cover.d):
                w.writerow(["x", 0, j + 1, c + 1, repr(float(state.x[j, c]))])
        for kind in ("z", "y"):
            arr = getattr(state, kind)
            for k in range(cover.num_slots):
                i = int(cover.slot_subgraph[k]) + 1
                j = int(cover.slot_node[k]) + 1
                for c in range(cover.d):
                    w.writerow([kind, i, j, c + 1, repr(float(arr[k, c]))])


def read_checkpoint(cover, path, beta, k=0):
    """Inverse of :func:`write_checkpoint`."""
    state = NetworkState.zeros(cover, beta)
    state.k = k
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        next(r)
        for kind, i, j, c, val in r:
            i, j, c = int(i), int(j), int(c) - 1
            if kind == "x":
                state.x[j - 1, c] = float(val)
            else:
                getattr(state, kind)[cover.slot_index(i, j), c] = float(val)
    return state
