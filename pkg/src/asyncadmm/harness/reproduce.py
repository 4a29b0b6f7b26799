"""Reproduction bundles for the phase-retrieval and sparse-PCA experiments.

Each bundle is a directory of plot-ready CSVs (one per curve and seed, in
the ``run.csv`` layout) plus ``summary.txt``.  All curves of a bundle share
data, initial point and activation seeds, and one penalty value.
"""

import csv
import os
from dataclasses import replace

import numpy as np

from .config import RunConfig, validate
from .experiment import choose_beta, default_output_dir, make_cover, make_objectives, run_experiment, write_run_csv

FIGURES = ("pr_fig3", "pr_fig4", "spca_fig5")
SCALES = ("desk", "paper")

# phase retrieval: the penalty is not pinned down by the experiment
# description; 20 converges well at both scales (see summary for the
# condition report, which it does not meet)
PR_BETA = 20.0
PR_THRESHOLD_DECADES = 3.0


def _pr_config(scale):
    return RunConfig(
        problem="phase_retrieval", n=15, d=8 if scale == "desk" else 32, m_per_agent=30,
        noise_sigma=0.01, beta=repr(PR_BETA), iterations=3000, seed=1, track_merit=True,
    )


def _spca_config(scale):
    return RunConfig(
        problem="sparse_pca", n=20, d=50 if scale == "desk" else 500, m_per_agent=100,
        entry_sigma=0.1, lam=10.0, beta="auto", iterations=5000, seed=1, track_merit=False,
    )


def iterations_to_threshold(records, decades=PR_THRESHOLD_DECADES):
    """First iteration with ``G <= 10^-decades * G_first``, or ``None``."""
    g0 = records[0].grad_norm
    for r in records:
        if r.grad_norm <= g0 * 10.0 ** (-decades):
            return r.iteration
    return None


def _run_curve(cfg, path):
    res = run_experiment(cfg, write=False)
    if res.status != 0:
        raise RuntimeError(f"curve {os.path.basename(path)} failed:\n" + "\n".join(res.summary[-4:]))
    write_run_csv(path, res.records)
    return res


def reproduce(figure, scale="desk", output_dir=None, seeds=None, beta=None, workers=1, iterations=None):
    """Run a reproduction bundle and return ``(summary_lines, curves)``.

    ``curves`` maps a curve label to the list of CSV paths written for it.
    """
    if figure not in FIGURES:
        raise ValueError(f"figure must be one of {FIGURES}")
    if scale not in SCALES:
        raise ValueError(f"scale must be one of {SCALES}")
    out = os.path.join(output_dir or default_output_dir(), f"{figure}_{scale}")
    os.makedirs(out, exist_ok=True)
    base = _pr_config(scale) if figure.startswith("pr") else _spca_config(scale)
    base = replace(base, workers=workers)
    if iterations:
        base = replace(base, iterations=iterations)
    if beta is not None:
        base = replace(base, beta=repr(float(beta)))
    m = base.n
    lines = [f"figure = {figure}", f"scale = {scale}"]
    if scale == "desk":
        lines.append("desk scale: phase retrieval d=8 (full size 32), sparse PCA d=50 (full size 500)")
    curves = {}

    if figure == "pr_fig3":
        seeds = seeds or [1]
        specs = [("sync", dict(mode="sync")), ("async_full", dict(mode="async", subset_size=m))]
    elif figure == "pr_fig4":
        seeds = seeds or list(range(1, 11))
        specs = [(f"async_S{s}", dict(mode="async", subset_size=s)) for s in (m, 12, 9)]
    else:
        seeds = seeds or (list(range(1, 6)) if scale == "desk" else list(range(1, 51)))
        specs = [(f"async_S{s}", dict(mode="async", subset_size=s)) for s in (m, 16, 12)]
        # one penalty for every curve: the one the smallest subset needs
        smallest = validate(replace(base, subset_size=min(s["subset_size"] for _, s in specs)))
        cover = make_cover(smallest)
        b, L, ell, note = choose_beta(smallest, cover, make_objectives(smallest))
        base = replace(base, beta=repr(b))
        lines.append(f"beta = {b!r} ({note} at |S| = {smallest.subset_size}; L = {L!r}, ell = {ell!r})")

    thresholds = []
    for label, over in specs:
        paths = []
        for seed in seeds:
            cfg = validate(replace(base, seed=seed, **over))
            path = os.path.join(out, f"{label}_seed{seed}.csv")
            res = _run_curve(cfg, path)
            paths.append(path)
            thresholds.append((label, seed, iterations_to_threshold(res.records), res.records))
            if seed == seeds[0] and not any(s.startswith("step condition") for s in lines):
                lines.append("step condition at the chosen beta (first curve):")
                start = res.summary.index("# step condition") + 1
                lines += ["  " + s for s in res.summary[start:start + 6] if s and not s.startswith("#")]
        curves[label] = paths

    with open(os.path.join(out, "thresholds.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["curve", "seed", "iterations_to_threshold", "final_grad_norm", "final_disagreement"])
        for label, seed, it, recs in thresholds:
            w.writerow([label, seed, "" if it is None else it, repr(recs[-1].grad_norm),
                        repr(recs[-1].disagreement)])
    lines.append(f"threshold = grad_norm below 1e-{PR_THRESHOLD_DECADES:g} of its first value")
    for label, _ in specs:
        its = [np.inf if it is None else it for lab, _, it, _ in thresholds if lab == label]
        lines.append(f"{label}: median iterations to threshold = {float(np.median(its)):g} over {len(its)} seeds")

    if figure == "spca_fig5":
        for label, _ in specs:
            recs = [r for lab, _, _, r in thresholds if lab == label]
            _write_aggregate(os.path.join(out, f"{label}_aggregate.csv"), recs)

    with open(os.path.join(out, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return lines, curves


def _write_aggregate(path, runs):
    G = np.array([[r.grad_norm for r in recs] for recs in runs])
    D = np.array([[r.disagreement for r in recs] for recs in runs])
    R = np.array([[r.prox_residual for r in recs] for recs in runs])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iter", "mean_grad_norm", "median_grad_norm", "mean_disagreement",
                    "median_disagreement", "mean_prox_residual", "median_prox_residual"])
        for k in range(G.shape[1]):
            w.writerow([k + 1] + [repr(float(f(a[:, k]))) for a in (G, D, R) for f in (np.mean, np.median)])
