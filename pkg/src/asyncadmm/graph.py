"""Communication graphs, subgraph covers and the stacked block layout.

Node ids and subgraph ids are 1-based in every public argument and
attribute (``membership``, ``subgraphs``, activation sets).  Arrays indexed
by node or slot are ordinary 0-based numpy arrays: row ``j - 1`` of an
``(n, d)`` array holds node ``j``.

A *slot* is one ``(subgraph, node)`` pair.  Slots are ordered by subgraph
index, then by node position inside the sorted node set, so every
subgraph owns a contiguous run of slots.  The stacked space has
``p = d * num_slots`` coordinates; slot ``k`` occupies coordinates
``k*d : (k+1)*d``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import CoverInvalid, DegenerateRing, DimensionMismatch

__all__ = [
    "CommGraph",
    "SubgraphCover",
    "build_cover",
    "ring_cover",
    "whole_graph_cover",
    "stack",
    "unstack_average",
]


def _norm_edge(a, b):
    a, b = int(a), int(b)
    return (a, b) if a < b else (b, a)


def _connected(nodes, edges):
    """Breadth-first connectivity check of ``(nodes, edges)``."""
    nodes = set(nodes)
    if not nodes:
        return False
    adj = {v: [] for v in nodes}
    for a, b in edges:
        if a in adj and b in adj:
            adj[a].append(b)
            adj[b].append(a)
    start = next(iter(nodes))
    seen = {start}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == len(nodes)


@dataclass(frozen=True)
class CommGraph:
    """Undirected, connected communication graph on nodes ``1..n``.

    Parameters
    ----------
    n : int
        Number of nodes.
    edges : iterable of (int, int)
        Unordered node pairs; duplicates and orientation are normalised.
    """

    n: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if int(self.n) < 1:
            raise ValueError("graph needs at least one node")
        object.__setattr__(self, "n", int(self.n))
        normed = set()
        for e in self.edges:
            a, b = e
            if a == b:
                raise ValueError(f"self-loop at node {a}")
            if not (1 <= a <= self.n and 1 <= b <= self.n):
                raise ValueError(f"edge {e} has an endpoint outside 1..{self.n}")
            normed.add(_norm_edge(a, b))
        object.__setattr__(self, "edges", frozenset(normed))
        if not _connected(range(1, self.n + 1), self.edges):
            raise CoverInvalid("graph_disconnected", "communication graph is not connected")

    @classmethod
    def ring(cls, n):
        if n < 3:
            raise DegenerateRing(f"a ring needs at least 3 nodes, got {n}")
        return cls(n, frozenset(_norm_edge(i, i % n + 1) for i in range(1, n + 1)))

    @classmethod
    def path(cls, n):
        return cls(n, frozenset((i, i + 1) for i in range(1, n)))

    @classmethod
    def complete(cls, n):
        return cls(n, frozenset((i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)))

    def neighbors(self, j):
        out = []
        for a, b in self.edges:
            if a == j:
                out.append(b)
            elif b == j:
                out.append(a)
        return sorted(out)

    def induced_edges(self, nodes):
        nodes = set(nodes)
        return frozenset(e for e in self.edges if e[0] in nodes and e[1] in nodes)


def _readonly(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class SubgraphCover:
    """Validated collection of overlapping connected subgraphs.

    Use :func:`build_cover` or :func:`ring_cover` rather than calling the
    constructor directly.  Instances are immutable after construction.

    Attributes
    ----------
    graph : CommGraph
    d : int
        Per-node variable dimension.
    subgraphs : tuple of (tuple of int, frozenset)
        ``(V_i, E_i)`` for ``i = 1..m``; ``V_i`` sorted, 1-based node ids.
    membership : dict
        ``membership[j]`` is the sorted tuple of subgraph ids containing node ``j``.
    slot_node, slot_subgraph : ndarray of int
        0-based node / subgraph position of each slot.
    starts : ndarray of int
        ``starts[i-1]:starts[i]`` is the slot range of subgraph ``i``.
    node_counts : ndarray of int
        ``|N_j|`` for each node, 0-based.
    """

    def __init__(self, graph, subgraphs, d):
        self.graph = graph
        self.d = int(d)
        self.subgraphs = tuple((tuple(sorted(v)), frozenset(e)) for v, e in subgraphs)
        self._validate()
        n = graph.n
        slot_node, slot_sub, starts = [], [], [0]
        for i, (nodes, _) in enumerate(self.subgraphs):
            for j in nodes:
                slot_node.append(j - 1)
                slot_sub.append(i)
            starts.append(len(slot_node))
        self.slot_node = _readonly(np.array(slot_node, dtype=np.intp))
        self.slot_subgraph = _readonly(np.array(slot_sub, dtype=np.intp))
        self.starts = _readonly(np.array(starts, dtype=np.intp))
        self.sizes = _readonly(np.diff(self.starts))
        counts = np.bincount(self.slot_node, minlength=n)
        self.node_counts = _readonly(counts.astype(np.intp))
        member = {j: [] for j in range(1, n + 1)}
        for i, (nodes, _) in enumerate(self.subgraphs, start=1):
            for j in nodes:
                member[j].append(i)
        self.membership = {j: tuple(v) for j, v in member.items()}
        # slots of each node in fixed (subgraph) order, for deterministic averaging
        node_slots = [[] for _ in range(n)]
        for k, j in enumerate(self.slot_node):
            node_slots[j].append(k)
        self._node_slots = tuple(tuple(v) for v in node_slots)

    def _validate(self):
        n = self.graph.n
        if self.d < 1:
            raise ValueError("block dimension d must be >= 1")
        if not self.subgraphs:
            raise CoverInvalid("bad_node_set", "no subgraphs given")
        union_nodes, union_edges = set(), set()
        for i, (nodes, edges) in enumerate(self.subgraphs, start=1):
            if not nodes:
                raise CoverInvalid("bad_node_set", f"subgraph {i} is empty")
            if len(set(nodes)) != len(nodes):
                raise CoverInvalid("bad_node_set", f"subgraph {i} repeats a node")
            if any(not (1 <= j <= n) for j in nodes):
                raise CoverInvalid("bad_node_set", f"subgraph {i} has a node outside 1..{n}")
            if not edges <= self.graph.edges:
                raise CoverInvalid("bad_node_set", f"subgraph {i} uses an edge absent from the graph")
            if any(a not in nodes or b not in nodes for a, b in edges):
                raise CoverInvalid("bad_node_set", f"subgraph {i} has an edge leaving its node set")
            if not _connected(nodes, edges):
                raise CoverInvalid("subgraph_disconnected", f"subgraph {i} = {list(nodes)} is not connected")
            union_nodes.update(nodes)
            union_edges.update(edges)
        missing = set(range(1, n + 1)) - union_nodes
        if missing:
            raise CoverInvalid("cover_incomplete", f"nodes {sorted(missing)} are in no subgraph")
        if not _connected(range(1, n + 1), union_edges):
            raise CoverInvalid("union_disconnected", "union of subgraph edges does not connect the graph")

    # -- sizes ---------------------------------------------------------------
    @property
    def n(self):
        return self.graph.n

    @property
    def m(self):
        return len(self.subgraphs)

    @property
    def num_slots(self):
        return int(self.starts[-1])

    @property
    def p(self):
        return self.d * self.num_slots

    def node_sets(self):
        return [nodes for nodes, _ in self.subgraphs]

    def offset(self, i, j):
        """Coordinate offset of the block of node ``j`` in subgraph ``i``."""
        nodes = self.subgraphs[i - 1][0]
        try:
            pos = nodes.index(j)
        except ValueError:
            raise KeyError(f"node {j} is not in subgraph {i}") from None
        return int(self.starts[i - 1] + pos) * self.d

    def slot_index(self, i, j):
        return self.offset(i, j) // self.d

    # -- index helpers -------------------------------------------------------
    def _check_ids(self, ids):
        ids = sorted(set(int(i) for i in ids))
        if any(not (1 <= i <= self.m) for i in ids):
            raise ValueError(f"subgraph ids must lie in 1..{self.m}, got {ids}")
        return ids

    def slots_of(self, subgraph_ids):
        """Sorted slot indices owned by the given subgraphs."""
        ids = self._check_ids(subgraph_ids)
        if not ids:
            return np.empty(0, dtype=np.intp)
        return np.concatenate([np.arange(self.starts[i - 1], self.starts[i]) for i in ids])

    def nodes_of(self, subgraph_ids):
        """Sorted 0-based positions of the nodes in the given subgraphs."""
        ids = self._check_ids(subgraph_ids)
        nodes = set()
        for i in ids:
            nodes.update(j - 1 for j in self.subgraphs[i - 1][0])
        return np.array(sorted(nodes), dtype=np.intp)

    # -- block arithmetic on (num_slots, d) arrays ---------------------------
    def as_blocks(self, s):
        s = np.asarray(s, dtype=float)
        if s.size != self.p:
            raise DimensionMismatch(f"stacked vector must have {self.p} entries, got {s.size}")
        return s.reshape(self.num_slots, self.d)

    def as_nodes(self, x):
        x = np.asarray(x, dtype=float)
        if x.size != self.n * self.d:
            raise DimensionMismatch(f"per-node array must have {self.n}x{self.d} entries, got shape {x.shape}")
        return x.reshape(self.n, self.d)

    def node_sum_blocks(self, blocks):
        """Sum each node's slot blocks in fixed subgraph order."""
        out = np.zeros((self.n, self.d))
        for j, slots in enumerate(self._node_slots):
            acc = blocks[slots[0]].copy()
            for k in slots[1:]:
                acc += blocks[k]
            out[j] = acc
        return out

    def node_average_blocks(self, blocks):
        """Per-node mean of the slot blocks, taken about the first copy.

        Averaging the offsets from the first copy makes equal copies map
        back exactly, which a plain sum divided by the count does not.
        """
        first = blocks[[slots[0] for slots in self._node_slots]]
        out = np.zeros((self.n, self.d))
        for j, slots in enumerate(self._node_slots):
            for k in slots[1:]:
                out[j] += blocks[k] - first[j]
        return first + out / self.node_counts[:, None]

    def subgraph_mean_blocks(self, blocks):
        """Per-subgraph block means about each subgraph's first block, shape ``(m, d)``."""
        first = blocks[self.starts[:-1]]
        dev = np.add.reduceat(blocks - first[self.slot_subgraph], self.starts[:-1], axis=0)
        return first + dev / self.sizes[:, None]

    def consensus_project_blocks(self, blocks):
        """Replace every slot block by the mean of its subgraph's blocks."""
        return self.subgraph_mean_blocks(blocks)[self.slot_subgraph]

    def consensus_violation(self, blocks):
        """Largest deviation of a block from its subgraph mean (max-norm)."""
        blocks = np.asarray(blocks, dtype=float).reshape(self.num_slots, self.d)
        if blocks.size == 0:
            return 0.0
        return float(np.max(np.abs(blocks - self.consensus_project_blocks(blocks))))

    def __repr__(self):
        sets = ", ".join("{" + ",".join(map(str, v)) + "}" for v in self.node_sets())
        return f"SubgraphCover(n={self.n}, m={self.m}, d={self.d}, p={self.p}, sets=[{sets}])"


def build_cover(graph, node_sets, d, edge_sets=None):
    """Build and validate a subgraph cover.

    Parameters
    ----------
    graph : CommGraph
    node_sets : sequence of iterables of int
        The node sets ``V_1..V_m`` (1-based ids).
    d : int
        Per-node variable dimension.
    edge_sets : sequence of iterables of (int, int), optional
        Explicit ``E_i``.  By default ``E_i`` is every graph edge with both
        endpoints in ``V_i``.

    Raises
    ------
    CoverInvalid
        With ``reason`` naming the violated requirement.
    """
    node_sets = [tuple(sorted(set(int(j) for j in v))) for v in node_sets]
    if not node_sets:
        raise CoverInvalid("bad_node_set", "no node sets given")
    if d < 1:
        raise ValueError("block dimension d must be >= 1")
    if edge_sets is None:
        edge_sets = [graph.induced_edges(v) for v in node_sets]
    else:
        if len(edge_sets) != len(node_sets):
            raise ValueError("edge_sets and node_sets differ in length")
        edge_sets = [frozenset(_norm_edge(a, b) for a, b in e) for e in edge_sets]
    return SubgraphCover(graph, list(zip(node_sets, edge_sets)), d)


def ring_cover(n, d):
    """Ring graph on ``n`` nodes covered by its ``n`` edges as 2-node subgraphs."""
    if n < 3:
        raise DegenerateRing(f"ring cover needs n >= 3, got {n}")
    graph = CommGraph.ring(n)
    sets = [(i, i + 1) for i in range(1, n)] + [(1, n)]
    return build_cover(graph, sets, d)


def whole_graph_cover(graph, d):
    """Single-subgraph cover ``V_1 = [n]``."""
    return build_cover(graph, [range(1, graph.n + 1)], d)


def stack(cover: SubgraphCover, x) -> np.ndarray:
    """Stack per-node vectors into the cover's layout (the operator ``T``).

    ``x`` may be ``(n, d)`` or flat ``(n*d,)``; the result is flat ``(p,)``.
    """
    x = cover.as_nodes(x)
    return x[cover.slot_node].reshape(-1)


def unstack_average(cover: SubgraphCover, s) -> np.ndarray:
    """Per-node average of the stacked copies; left inverse of :func:`stack`.

    Returns an ``(n, d)`` array whose row ``j-1`` is the mean of node ``j``'s
    ``|N_j|`` blocks.
    """
    return cover.node_average_blocks(cover.as_blocks(s))
