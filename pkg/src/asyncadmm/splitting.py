"""Douglas-Rachford splitting on the stacked space of a subgraph cover.

The consensus problem ``min sum_j f_j(x_j)`` is lifted to ``s in R^p`` with
``f~(s) = inf {f(x) : T x = s}`` and ``g~`` the indicator of the product of
per-subgraph consensus subspaces.  ``Prox_{gamma f~}`` is evaluated through
the per-node proxes (node ``j`` sees the average of its copies of ``s`` and
weight ``|N_j|/gamma``) and ``Prox_{gamma g~}`` is the subgraph-mean
projection.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, EmptyActivation, MeritInfinite
from .graph import stack, unstack_average

CONSENSUS_TOL = 1e-9


@dataclass
class DrsState:
    """Splitting variables after a step.

    ``u`` and ``v`` are the two prox outputs computed from the previous
    shadow point and ``s`` is the updated shadow point.  ``x`` holds the
    per-node prox solutions behind ``u`` (``u = T x``).
    """

    s: np.ndarray
    u: np.ndarray
    v: np.ndarray
    gamma: float
    x: np.ndarray = None
    inner_iters: int = 0

    @classmethod
    def initial(cls, cover, s, gamma):
        """State holding only a starting shadow point (``u = v = s``)."""
        s = np.array(cover.as_blocks(s), dtype=float).reshape(-1)
        if not gamma > 0:
            raise ValueError("gamma must be positive")
        return cls(s=s, u=s.copy(), v=s.copy(), gamma=float(gamma))


@dataclass(frozen=True)
class BlockSelection:
    """A set of ``d``-coordinate blocks of the stacked space.

    Attributes
    ----------
    slots : ndarray of int
        Sorted 0-based slot indices; slot ``k`` covers coordinates
        ``k*d .. k*d + d - 1``.
    d : int
    """

    slots: np.ndarray
    d: int
    _coords: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        slots = np.unique(np.asarray(self.slots, dtype=np.intp))
        slots.setflags(write=False)
        coords = (slots[:, None] * self.d + np.arange(self.d)).reshape(-1)
        coords.setflags(write=False)
        object.__setattr__(self, "slots", slots)
        object.__setattr__(self, "_coords", coords)

    @classmethod
    def full(cls, cover):
        return cls(np.arange(cover.num_slots), cover.d)

    @classmethod
    def from_subgraphs(cls, cover, ids):
        """All blocks of the given subgraphs (1-based ids)."""
        return cls(cover.slots_of(ids), cover.d)

    @classmethod
    def from_blocks(cls, cover, pairs):
        """Blocks named by ``(subgraph, node)`` pairs, both 1-based."""
        return cls([cover.slot_index(i, j) for i, j in pairs], cover.d)

    @classmethod
    def random(cls, cover, size, rng):
        """Uniformly random set of ``size`` blocks."""
        if not 1 <= size <= cover.num_slots:
            raise EmptyActivation(f"block count must be in 1..{cover.num_slots}")
        return cls(rng.choice(cover.num_slots, size=size, replace=False), cover.d)

    @property
    def coords(self):
        return self._coords

    @property
    def size(self):
        """Number of selected coordinates ``|C|``."""
        return int(self._coords.size)

    def blocks(self, cover):
        """Selected blocks as 1-based ``(subgraph, node)`` pairs."""
        return [
            (int(cover.slot_subgraph[k]) + 1, int(cover.slot_node[k]) + 1) for k in self.slots
        ]


def solve_node_proxes(objectives, centers, weights, nodes, executor=None):
    """Per-node prox solves for the listed nodes.

    Parameters
    ----------
    objectives : sequence of LocalObjective
    centers : ndarray, shape (n, d)
    weights : ndarray, shape (n,)
    nodes : sequence of int
        0-based node positions to solve for.
    executor : concurrent.futures.Executor, optional
        When given, solves run through ``executor.map``; the results are
        collected in node order, so the output does not depend on the
        number of workers.

    Returns
    -------
    dict
        ``{node: ProxResult}``.
    """
    nodes = [int(j) for j in nodes]

    def solve(j):
        return objectives[j].prox_with_info(centers[j], float(weights[j]))

    if executor is None or len(nodes) <= 1:
        results = [solve(j) for j in nodes]
    else:
        results = list(executor.map(solve, nodes))
    return dict(zip(nodes, results))


def prox_f_tilde_info(cover, objectives, s, gamma, executor=None):
    """``Prox_{gamma f~}(s)`` with per-node solutions and inner iteration total."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    if len(objectives) != cover.n:
        raise DimensionMismatch(f"need {cover.n} objectives, got {len(objectives)}")
    centers = unstack_average(cover, s)
    weights = cover.node_counts / gamma
    res = solve_node_proxes(objectives, centers, weights, range(cover.n), executor)
    x = np.empty((cover.n, cover.d))
    iters = 0
    for j in range(cover.n):
        x[j] = res[j].x
        iters += res[j].iterations
    return stack(cover, x), x, iters


def prox_f_tilde(cover, objectives, s, gamma, executor=None):
    """Return ``(u, x)`` with ``u = T x`` and ``x_j = prox`` of ``f_j``.

    Node ``j``'s center is the average of its ``|N_j|`` blocks of ``s`` and
    its prox weight is ``|N_j| / gamma``.
    """
    u, x, _ = prox_f_tilde_info(cover, objectives, s, gamma, executor)
    return u, x


def prox_g_tilde(cover, w):
    """Project onto the consensus set: each subgraph's blocks become their mean."""
    return cover.consensus_project_blocks(cover.as_blocks(w)).reshape(-1)


def rbc_drs_step(state, cover, objectives, selection, scaled=False, executor=None):
    """One randomised block-coordinate Douglas-Rachford step.

    ``u`` and ``v`` are recomputed in full from ``state.s``; only the
    selected blocks of ``s`` move.  With ``scaled=True`` the selected
    increment is multiplied by ``p/|C|``, which makes the step an unbiased
    estimate of the full one.
    """
    if selection is None or selection.size == 0:
        raise EmptyActivation("block selection is empty")
    s = state.s
    u, x, iters = prox_f_tilde_info(cover, objectives, s, state.gamma, executor)
    v = prox_g_tilde(cover, 2.0 * u - s)
    diff = v - u
    s_new = s.copy()
    c = selection.coords
    if scaled:
        s_new[c] += (cover.p / selection.size) * diff[c]
    else:
        s_new[c] += diff[c]
    return DrsState(s=s_new, u=u, v=v, gamma=state.gamma, x=x, inner_iters=iters)


def drs_step(state, cover, objectives, executor=None):
    """Full Douglas-Rachford step ``s+ = s + (v+ - u+)``."""
    return rbc_drs_step(state, cover, objectives, BlockSelection.full(cover), executor=executor)


def consensus_indicator(cover, v, tol=CONSENSUS_TOL):
    """``g~(v)``: 0 when ``v`` is blockwise consistent within ``tol``, else ``inf``."""
    return 0.0 if cover.consensus_violation(cover.as_blocks(v)) <= tol else np.inf


def merit_forms(u, v, s, f_value, gamma, g_value=0.0):
    """The merit in its three algebraically equal forms.

    Returns
    -------
    tuple of float
        ``(inner-product form, three-square form, two-square form)``.
    """
    if not np.isfinite(g_value):
        raise MeritInfinite("v is not in the consensus set")
    u, v, s = (np.asarray(a, dtype=float) for a in (u, v, s))
    if not (u.shape == v.shape == s.shape):
        raise DimensionMismatch("u, v and s must have equal shapes")
    base = f_value + g_value
    vu = v - u
    su = s - u
    L1 = base + float(su @ vu) / gamma - 0.5 * float(vu @ vu) / gamma
    a = 2.0 * u - s - v
    sv = s - v
    L2 = base + 0.5 * float(a @ a) / gamma - 0.5 * float(su @ su) / gamma - float(vu @ vu) / gamma
    L3 = base + 0.5 * (float(su @ su) - float(sv @ sv)) / gamma
    return L1, L2, L3


def merit(u, v, s, f_value, gamma, g_value=0.0):
    """``f~(u) + g~(v) + <s - u, v - u>/gamma - |v - u|^2/(2 gamma)``."""
    return merit_forms(u, v, s, f_value, gamma, g_value)[0]


def f_tilde_value(objectives, x):
    """``sum_j f_j(x_j)`` including nonsmooth terms."""
    return float(sum(o.value(xj) for o, xj in zip(objectives, x)))


def state_merit(state, cover, objectives):
    """Merit of a post-step state, with ``f~(u)`` taken from ``state.x``."""
    if state.x is None:
        raise ValueError("state carries no prox solution; take a step first")
    g = consensus_indicator(cover, state.v)
    return merit(state.u, state.v, state.s, f_tilde_value(objectives, state.x), state.gamma, g)


def xi_term(u, v, selection, p):
    """Block-coordinate noise ``(p/|C|) [v-u]_C - (v-u)``."""
    vu = np.asarray(v, dtype=float) - np.asarray(u, dtype=float)
    if vu.size != p:
        raise DimensionMismatch(f"expected vectors of length {p}")
    out = -vu
    c = selection.coords
    out[c] += (p / selection.size) * vu[c]
    return out


def run_drs(state, cover, objectives, iterations, selector=None, scaled=False, callback=None, executor=None):
    """Iterate (block-coordinate) DRS steps.

    Parameters
    ----------
    selector : callable, optional
        ``selector(k) -> BlockSelection`` for step ``k`` (1-based); full
        steps when omitted.
    callback : callable, optional
        Called as ``callback(k, previous_state, new_state, selection)``.
    """
    full = BlockSelection.full(cover)
    for k in range(1, iterations + 1):
        sel = full if selector is None else selector(k)
        new = rbc_drs_step(state, cover, objectives, sel, scaled=scaled, executor=executor)
        if callback is not None:
            callback(k, state, new, sel)
        state = new
    return state


def write_snapshot(state, cover, path):
    """Dump ``s``, ``u``, ``v`` as rows ``var,subgraph,node,coord,value``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["var", "subgraph", "node", "coord", "value"])
        for name in ("s", "u", "v"):
            blocks = cover.as_blocks(getattr(state, name))
            for k in range(cover.num_slots):
                i = int(cover.slot_subgraph[k]) + 1
                j = int(cover.slot_node[k]) + 1
                for c in range(cover.d):
                    w.writerow([name, i, j, c + 1, repr(float(blocks[k, c]))])
