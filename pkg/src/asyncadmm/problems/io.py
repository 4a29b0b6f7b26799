"""Flat-CSV dataset dump and load.

A dataset directory holds ``meta.csv`` (``key,value`` rows), one
``agent_<i>.csv`` per agent (1-based) and, for phase retrieval,
``truth.csv``.  Floats are written with ``repr`` so a round trip is exact.

Per-agent row layouts:

=================  =================================
phase_retrieval    ``b, t_1 .. t_2d``
sparse_pca         ``p_1 .. p_d``
lasso              ``b, a_1 .. a_d``
quadratic          ``q_1 .. q_d, c`` (row k of Q, c_k)
=================  =================================
"""

import csv
import os

import numpy as np

from .lasso import LassoData
from .phase_retrieval import PhaseRetrievalData
from .quadratic import QuadraticData
from .sparse_pca import SparsePcaData

_KINDS = {
    PhaseRetrievalData: "phase_retrieval",
    SparsePcaData: "sparse_pca",
    LassoData: "lasso",
    QuadraticData: "quadratic",
}


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) for v in row])


def _read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        next(r)
        return np.array([[float(v) for v in row] for row in r], dtype=float)


def dump_dataset(objectives, directory):
    """Write ``objectives`` (all of one kind) under ``directory``."""
    objectives = list(objectives)
    if not objectives:
        raise ValueError("nothing to dump")
    kind = _KINDS.get(type(objectives[0]))
    if kind is None or any(type(o) is not type(objectives[0]) for o in objectives):
        raise TypeError("objectives must all be of one supported kind")
    os.makedirs(directory, exist_ok=True)
    meta = [("kind", kind), ("n", len(objectives)), ("dim", objectives[0].dim)]
    first = objectives[0]
    if kind in ("sparse_pca", "lasso"):
        meta.append(("l1_weight", repr(float(first.l1_weight))))
    if kind == "sparse_pca":
        meta.append(("radius", repr(float(first.radius))))
    with open(os.path.join(directory, "meta.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["key", "value"])
        w.writerows(meta)

    for i, o in enumerate(objectives, start=1):
        path = os.path.join(directory, f"agent_{i}.csv")
        d = o.dim
        if kind == "phase_retrieval":
            header = ["b"] + [f"t_{k}" for k in range(1, d + 1)]
            rows = np.column_stack([o.measurements, o.directions])
        elif kind == "sparse_pca":
            header = [f"p_{k}" for k in range(1, d + 1)]
            rows = o.P
        elif kind == "lasso":
            header = ["b"] + [f"a_{k}" for k in range(1, d + 1)]
            rows = np.column_stack([o.b, o.A])
        else:
            header = [f"q_{k}" for k in range(1, d + 1)] + ["c"]
            rows = np.column_stack([o.Q, o.c])
        _write_rows(path, header, rows)
    if kind == "phase_retrieval":
        _write_rows(os.path.join(directory, "truth.csv"), ["x0"], first.x0[:, None])


def load_dataset(directory):
    """Inverse of :func:`dump_dataset`."""
    with open(os.path.join(directory, "meta.csv"), newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        next(r)
        meta = dict(r)
    kind = meta["kind"]
    n = int(meta["n"])
    agents = []
    x0 = None
    if kind == "phase_retrieval":
        x0 = _read_rows(os.path.join(directory, "truth.csv"))[:, 0]
    for i in range(1, n + 1):
        rows = _read_rows(os.path.join(directory, f"agent_{i}.csv"))
        if kind == "phase_retrieval":
            agents.append(PhaseRetrievalData(rows[:, 1:], rows[:, 0], x0))
        elif kind == "sparse_pca":
            agents.append(
                SparsePcaData(rows, l1_weight=float(meta["l1_weight"]), radius=float(meta["radius"]))
            )
        elif kind == "lasso":
            agents.append(LassoData(rows[:, 1:], rows[:, 0], l1_weight=float(meta["l1_weight"])))
        elif kind == "quadratic":
            agents.append(QuadraticData(rows[:, :-1], rows[:, -1]))
        else:
            raise ValueError(f"unknown dataset kind {kind!r}")
    return agents
