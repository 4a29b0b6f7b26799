"""Built-in property checks with a pass/fail table."""

import copy
import sys

import numpy as np

from .. import analysis
from ..admm import ActivationSampler, NetworkState, admm_step, to_drs_coordinates
from ..graph import CommGraph, build_cover, ring_cover, stack, unstack_average
from ..problems import generate_phase_retrieval, generate_quadratic, random_symmetric
from ..problems.quadratic import QuadraticData
from ..splitting import BlockSelection, DrsState, merit_forms, rbc_drs_step

FIG2_EDGES = [(1, 2), (1, 3), (2, 4), (3, 4), (3, 5), (4, 6)]
FIG2_SETS = [(1, 2, 3, 4), (3, 5), (4, 6)]


def fig2_cover(d=1):
    return build_cover(CommGraph(6, FIG2_EDGES), FIG2_SETS, d)


def _corrupt(cover):
    # shift the first subgraph boundary so subgraph 2 claims a slot of subgraph 1
    bad = copy.copy(cover)
    starts = np.array(cover.starts)
    starts[1] -= 1
    bad.starts = starts
    bad.sizes = np.diff(starts)
    return bad


def check_graph():
    cov = fig2_cover(2)
    x = np.arange(12.0).reshape(6, 2)
    expected = x[[0, 1, 2, 3, 2, 4, 3, 5]].reshape(-1)
    ok = (cov.m == 3 and cov.membership[3] == (1, 2) and cov.membership[4] == (1, 3)
          and np.array_equal(stack(cov, x), expected)
          and np.array_equal(unstack_average(cov, stack(cov, x)), x))
    return ok, f"m={cov.m}, p={cov.p}"


def check_prox_lemmas(pairs=100, seed=0):
    rng = np.random.default_rng(seed)
    worst = np.inf
    for _ in range(pairs):
        Q = random_symmetric(rng, 4, -1.0, 2.0)
        o = QuadraticData(Q, rng.standard_normal(4))
        L, ell = o.smoothness_hints()
        gamma = 0.5 / max(L, ell)
        x1, x2 = rng.standard_normal((2, 4))
        y1, y2 = o.prox(x1, 1 / gamma), o.prox(x2, 1 / gamma)
        ip = float((x2 - x1) @ (y2 - y1))
        a = ip - (1 - gamma * ell) * float((y2 - y1) @ (y2 - y1))
        b = ip - float((x2 - x1) @ (x2 - x1)) / (1 + gamma * L)
        worst = min(worst, a, b)
    pr = generate_phase_retrieval(seed, 1, 3, 20)[0]
    c = rng.standard_normal(6)
    y = pr.prox(c, 40.0)
    resid = float(np.linalg.norm(c - (y + pr.smooth_gradient(y) / 40.0)))
    ok = worst >= -1e-10 and resid * 40.0 <= pr.tol * (1 + 1e-6)
    return ok, f"min coercivity slack {worst:.3g}, optimality residual {resid:.3g}"


def check_merit_forms(states=100, seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(states):
        u, v, s = rng.standard_normal((3, 12))
        f, gamma = rng.standard_normal(), rng.uniform(0.1, 2.0)
        forms = merit_forms(u, v, s, f, gamma)
        scale = max(1.0, max(abs(t) for t in forms))
        worst = max(worst, (max(forms) - min(forms)) / scale)
    return worst <= 1e-10, f"max relative gap {worst:.3g}"


def check_equivalence(steps=100, seed=0):
    cover = ring_cover(3, 2)
    objs = generate_quadratic(seed, 3, 2)
    rng = np.random.default_rng(seed)
    state = NetworkState.from_x(cover, rng.standard_normal((3, 2)), 2.0)
    drs = DrsState.initial(cover, to_drs_coordinates(state, cover), 0.5)
    sampler = ActivationSampler(3, 2, seed=seed)
    worst = total = 0.0
    for _ in range(steps):
        act = sampler.draw()
        state, _ = admm_step(state, cover, objs, act)
        drs = rbc_drs_step(drs, cover, objs, BlockSelection.from_subgraphs(cover, act))
        dev = float(np.max(np.abs(to_drs_coordinates(state, cover) - drs.s)))
        worst = max(worst, dev)
        total += dev
    return worst <= 1e-9 and total <= 1e-7, f"max deviation {worst:.3g}, accumulated {total:.3g}"


def check_condition():
    r = analysis.check_gamma_condition(0.05, 1.0, 1.0, 10, 10)
    lim = analysis.minimal_fraction(1e-8, 1.0, 1.0)
    dual = analysis.check_beta_condition(20.0, 1.0, 1.0, 10, 10)
    ok = (abs(r.alpha_value * 0.05 + 0.2225) <= 1e-12 and r.feasible
          and abs(lim - 0.5) <= 1e-6 and dual.alpha_value == analysis.check_gamma_condition(0.05, 1, 1, 10, 10).alpha_value)
    return ok, f"expr(0.05) = {r.alpha_value * 0.05:.6g}, threshold at gamma=1e-8: {lim:.9f}"


def check_locality(corrupt_layout=False):
    ref = fig2_cover(2)
    cover = _corrupt(ref) if corrupt_layout else ref
    objs = generate_quadratic(1, 6, 2)
    rng = np.random.default_rng(3)
    state = NetworkState(rng.standard_normal((6, 2)), rng.standard_normal((8, 2)),
                         rng.standard_normal((8, 2)), 1.5)
    new, _ = admm_step(state, cover, objs, [2])
    free_x = [2, 4]
    free_slots = [4, 5]
    fixed_x = [j for j in range(6) if j not in free_x]
    fixed_slots = [k for k in range(8) if k not in free_slots]
    ok = (np.array_equal(new.x[fixed_x], state.x[fixed_x])
          and np.array_equal(new.z[fixed_slots], state.z[fixed_slots])
          and np.array_equal(new.y[fixed_slots], state.y[fixed_slots]))
    return ok, "inactive variables unchanged" if ok else "inactive variables modified"


CHECKS = [
    ("graph layout", check_graph),
    ("prox lemmas", check_prox_lemmas),
    ("merit forms", check_merit_forms),
    ("admm/drs equivalence", check_equivalence),
    ("condition arithmetic", check_condition),
]


def selftest(corrupt_layout=False, stream=None):
    """Run every check, print a table and return the exit status."""
    stream = stream or sys.stdout
    rows = [(name, *fn()) for name, fn in CHECKS]
    rows.append(("locality", *check_locality(corrupt_layout)))
    width = max(len(r[0]) for r in rows)
    for name, ok, detail in rows:
        print(f"{name:<{width}}  {'PASS' if ok else 'FAIL'}  {detail}", file=stream)
    failed = sum(not ok for _, ok, _ in rows)
    print(f"{len(rows) - failed}/{len(rows)} checks passed", file=stream)
    return 1 if failed else 0
