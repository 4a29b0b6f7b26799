"""Build a problem from a :class:`RunConfig`, run it and write the artifacts."""

import csv
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .. import analysis
from ..admm import ActivationSampler, NetworkState, admm_step, iteration_merit, to_drs_coordinates
from ..errors import AsyncAdmmError, ConfigError, InnerSolverStalled
from ..graph import CommGraph, build_cover, ring_cover
from ..problems import (
    generate_lasso,
    generate_phase_retrieval,
    generate_quadratic,
    generate_sparse_pca,
)
from ..splitting import BlockSelection, DrsState, rbc_drs_step, state_merit

ENV_OUTPUT = "ASYNCADMM_OUTPUT_DIR"
EQUIV_STEP_TOL = 1e-9
EQUIV_TOTAL_TOL = 1e-7


def default_output_dir():
    return os.environ.get(ENV_OUTPUT) or os.path.join(os.getcwd(), "asyncadmm_out")


def _parse_pairs(text):
    pairs = []
    for tok in text.replace(";", ",").split(","):
        tok = tok.strip()
        if not tok:
            continue
        a, b = tok.split("-")
        pairs.append((int(a), int(b)))
    return pairs


def _parse_sets(text):
    return [[int(v) for v in part.split(",") if v.strip()] for part in text.split(";") if part.strip()]


def block_dim(cfg):
    return 2 * cfg.d if cfg.problem == "phase_retrieval" else cfg.d


def make_cover(cfg):
    dim = block_dim(cfg)
    if cfg.graph == "ring":
        return ring_cover(cfg.n, dim)
    try:
        graph = CommGraph(cfg.n, _parse_pairs(cfg.edges))
        sets = _parse_sets(cfg.cover)
    except ValueError as exc:
        raise ConfigError(str(exc), "edges") from None
    return build_cover(graph, sets, dim)


def make_objectives(cfg):
    if cfg.problem == "phase_retrieval":
        return generate_phase_retrieval(
            cfg.seed, cfg.n, cfg.d, cfg.m_per_agent, cfg.noise_sigma,
            tol=cfg.inner_tol or 1e-9, max_iters=cfg.inner_max_iters or 500,
        )
    if cfg.problem == "sparse_pca":
        objs = generate_sparse_pca(cfg.seed, cfg.n, cfg.d, cfg.m_per_agent, cfg.entry_sigma, cfg.lam)
    elif cfg.problem == "lasso":
        objs = generate_lasso(cfg.seed, cfg.n, cfg.d, cfg.m_per_agent, cfg.lam, cfg.noise_sigma)
    else:
        return generate_quadratic(cfg.seed, cfg.n, cfg.d)
    over = {}
    if cfg.inner_tol:
        over["tol"] = cfg.inner_tol
    if cfg.inner_max_iters:
        over["max_iters"] = cfg.inner_max_iters
    return [replace(o, **over) for o in objs] if over else objs


def network_constants(cover, objectives, radius=1.0, samples=100, seed=0):
    """``(L, ell)`` of the lifted objective from per-agent constants.

    On the range of the stacking map a node's copies share one value, so
    per-copy curvature is the agent's divided by its copy count:
    ``L = max_j L_j/|N_j|`` and likewise for ``ell``.
    """
    L = ell = 0.0
    for j, o in enumerate(objectives):
        Lj, ej = analysis.estimate_smoothness(o, radius, samples, seed)
        L = max(L, float(Lj / cover.node_counts[j]))
        ell = max(ell, float(ej / cover.node_counts[j]))
    return L, ell


def activation_fraction(cfg, cover):
    """Expected share of stacked coordinates updated per iteration."""
    if cfg.mode == "sync":
        return 1.0
    if cfg.activation == "bernoulli":
        return cfg.bernoulli_prob
    size = cfg.subset_size or cover.m
    return size / cover.m


def subset_size(cfg, cover):
    size = cfg.subset_size or cover.m
    if size > cover.m:
        raise ConfigError(f"exceeds the {cover.m} subgraphs of the cover", "subset_size")
    return size


# (L, ell) depend only on the generated data and the cover, so curves that
# share them (same seed, different activation) reuse one estimate
_CONSTANTS_CACHE = {}
_DATA_FIELDS = ("problem", "graph", "edges", "cover", "n", "d", "m_per_agent", "noise_sigma",
                "entry_sigma", "lam", "seed", "smoothness_radius", "smoothness_samples")


def _cached_constants(cfg, cover, objectives):
    key = tuple(getattr(cfg, f) for f in _DATA_FIELDS)
    if key not in _CONSTANTS_CACHE:
        if len(_CONSTANTS_CACHE) >= 64:
            _CONSTANTS_CACHE.clear()
        _CONSTANTS_CACHE[key] = network_constants(
            cover, objectives, cfg.smoothness_radius, cfg.smoothness_samples, cfg.seed)
    return _CONSTANTS_CACHE[key]


def choose_beta(cfg, cover, objectives):
    """Return ``(beta, L, ell, note)``.

    ``auto`` takes the smallest beta meeting the step condition at the
    configured activation fraction (times ``beta_safety``).  Sparse PCA
    additionally keeps ``beta >= 2.05 * max lambda_max(P'P)`` so every prox
    subproblem is strongly convex.
    """
    L, ell = _cached_constants(cfg, cover, objectives)
    beta = cfg.resolved_beta()
    if beta is not None:
        return beta, L, ell, "given"
    frac = activation_fraction(cfg, cover)
    beta = analysis.minimal_feasible_beta(L, ell, frac) * cfg.beta_safety
    note = "smallest beta meeting the step condition"
    if cfg.problem == "sparse_pca":
        floor = 2.05 * max(o.gram_lambda_max for o in objectives)
        if floor > beta:
            beta, note = floor, "2.05 * max lambda_max(P'P)"
    return beta, L, ell, note


def initial_state(cfg, cover, beta):
    init = cfg.init
    if init == "auto":
        init = "gaussian" if cfg.problem in ("phase_retrieval", "sparse_pca") else "zeros"
    if init == "zeros":
        return NetworkState.zeros(cover, beta)
    # a stream the data generators never touch
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(cover.n + 2)[-1])
    x = rng.standard_normal(cover.d)
    x /= np.linalg.norm(x)
    return NetworkState.from_x(cover, np.tile(x, (cover.n, 1)), beta)


def make_sampler(cfg, cover):
    if cfg.mode == "sync":
        return None
    seed = cfg.activation_seed
    if seed < 0:
        seed = np.random.SeedSequence(cfg.seed).spawn(cover.n + 3)[-1]
    if cfg.activation == "bernoulli":
        return ActivationSampler(cover.m, seed=seed, bernoulli=cfg.bernoulli_prob)
    return ActivationSampler(cover.m, subset_size(cfg, cover), seed=seed)


@dataclass
class ExperimentResult:
    status: int
    records: list
    summary: list
    beta: float = None
    output_dir: str = None
    extras: dict = field(default_factory=dict)


def write_run_csv(path, records):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(analysis.RunRecord.COLUMNS)
        for r in records:
            w.writerow(r.csv_row())


def _decades(first, last):
    if last <= 0:
        return np.inf
    if first <= 0:
        return 0.0
    return float(np.log10(first / last))


def _loop(cfg, cover, objectives, state, sampler, executor, residual_step):
    """Run ADMM (and its splitting twin when asked); yields records and extras."""
    everyone = tuple(range(1, cover.m + 1))
    records = []
    extras = {"stalled": 0}
    drs = None
    if cfg.mode in ("drs", "equivalence_check"):
        drs = DrsState.initial(cover, to_drs_coordinates(state, cover), 1.0 / state.beta)
    max_dev = total_dev = 0.0
    for _ in range(cfg.iterations):
        active = everyone if sampler is None else sampler.draw()
        t0 = time.perf_counter()
        if cfg.mode == "drs":
            drs = rbc_drs_step(drs, cover, objectives, BlockSelection.from_subgraphs(cover, active),
                               executor=executor)
            wall = (time.perf_counter() - t0) * 1e3
            L = state_merit(drs, cover, objectives) if cfg.track_merit else float("nan")
            k = len(records) + 1
            x, inner = drs.x, drs.inner_iters
        else:
            new, info = admm_step(state, cover, objectives, active, executor, all_nodes=cfg.track_merit)
            wall = (time.perf_counter() - t0) * 1e3
            extras["stalled"] += info.stalled
            L = iteration_merit(state, new, info, cover, objectives) if cfg.track_merit else float("nan")
            state = new
            k, x, inner = new.k, new.x, info.inner_iters
            if drs is not None:
                drs = rbc_drs_step(drs, cover, objectives, BlockSelection.from_subgraphs(cover, active),
                                   executor=executor)
                dev = float(np.max(np.abs(to_drs_coordinates(state, cover) - drs.s)))
                max_dev = max(max_dev, dev)
                total_dev += dev
        rec = analysis.make_record(k, L, objectives, x, active, inner, wall if cfg.timing else 0.0,
                                   residual_step=residual_step)
        records.append(rec)
    if cfg.mode == "equivalence_check":
        extras["max_step_deviation"] = max_dev
        extras["accumulated_deviation"] = total_dev
    extras["state"] = state
    extras["drs_state"] = drs
    return records, extras


def run_experiment(cfg, output_dir=None, write=True):
    """Run one configured experiment.

    Writes ``run.csv`` and ``summary.txt`` under ``output_dir`` (default:
    ``cfg.output``, then ``$ASYNCADMM_OUTPUT_DIR``, then ``./asyncadmm_out``).
    Status 0 means the run finished (and, in ``equivalence_check`` mode,
    the twin trajectories agreed); 1 a failed equivalence check; 2 a solver
    failure.
    """
    out = output_dir or cfg.output or default_output_dir()
    summary = ["# resolved configuration", cfg.to_text().rstrip()]
    status = 0
    records = []
    extras = {}
    beta = None
    try:
        cover = make_cover(cfg)
        objectives = make_objectives(cfg)
        if cfg.mode != "sync":
            subset_size(cfg, cover)
        beta, L, ell, note = choose_beta(cfg, cover, objectives)
        frac = activation_fraction(cfg, cover)
        n_active = subset_size(cfg, cover) if cfg.activation == "fixed" and cfg.mode != "sync" else cover.m
        report = analysis.check_beta_condition(beta, L, ell, cover.p, frac * cover.p, d=cover.d,
                                               num_active=n_active)
        summary += [
            "",
            "# problem",
            f"cover = {cover!r}",
            f"block_dim = {cover.d}",
            f"beta = {beta!r}  ({note})",
            f"L_estimate = {L!r}",
            f"ell_estimate = {ell!r}",
            "",
            "# step condition",
            *report.lines(),
        ]
        state = initial_state(cfg, cover, beta)
        sampler = make_sampler(cfg, cover)
        executor = ThreadPoolExecutor(cfg.workers) if cfg.workers > 1 else None
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", InnerSolverStalled)
                records, extras = _loop(cfg, cover, objectives, state, sampler, executor, 1.0 / beta)
        finally:
            if executor is not None:
                executor.shutdown()
    except ConfigError:
        raise
    except AsyncAdmmError as exc:
        status = 2
        summary += ["", "# failure", f"{type(exc).__name__}: {exc}"]

    if records:
        first, last = records[0], records[-1]
        summary += [
            "",
            "# final metrics",
            f"iterations = {last.iteration}",
            f"merit = {last.merit!r}",
            f"grad_norm = {last.grad_norm!r}  (first {first.grad_norm!r}, "
            f"{_decades(first.grad_norm, last.grad_norm):.2f} decades)",
            f"disagreement = {last.disagreement!r}  (first {first.disagreement!r}, "
            f"{_decades(first.disagreement, last.disagreement):.2f} decades)",
            f"prox_residual = {last.prox_residual!r}",
            f"inner_stalls = {extras.get('stalled', 0)}",
        ]
        if len(records) >= 500 and cfg.track_merit:
            tr = analysis.merit_trend(records)
            summary += [
                f"merit_nonincreasing_after_burn_in = {tr.nonincreasing} "
                f"(max window increase {tr.max_window_increase!r})",
                f"merit_stabilized = {tr.stabilized} (last-decile range {tr.last_decile_range!r})",
            ]
        if cfg.mode == "equivalence_check":
            ok = (extras["max_step_deviation"] <= EQUIV_STEP_TOL
                  and extras["accumulated_deviation"] <= EQUIV_TOTAL_TOL)
            summary += [
                "",
                "# equivalence",
                f"max_step_deviation = {extras['max_step_deviation']!r}",
                f"accumulated_deviation = {extras['accumulated_deviation']!r}",
                f"equivalence = {'pass' if ok else 'FAIL'}",
            ]
            if not ok:
                status = 1
    summary += ["", f"exit_status = {status}"]

    if write:
        os.makedirs(out, exist_ok=True)
        write_run_csv(os.path.join(out, "run.csv"), records)
        with open(os.path.join(out, "summary.txt"), "w", encoding="utf-8") as fh:
            fh.write("\n".join(summary) + "\n")
    return ExperimentResult(status, records, summary, beta, out, extras)
