"""Convergence metrics, step-size condition arithmetic and statistical checks."""

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientSamples, NoFeasibleBeta
from .problems.base import project_ball, soft_threshold
from .splitting import BlockSelection, DrsState, run_drs, xi_term


# ---------------------------------------------------------------- metrics


@dataclass(frozen=True)
class RunRecord:
    """One row of a run log."""

    iteration: int
    merit: float
    grad_norm: float
    disagreement: float
    prox_residual: float
    active_ids: tuple
    inner_iters: int
    wall_ms: float

    COLUMNS = ("iter", "merit", "grad_norm", "disagreement", "prox_residual",
               "active_ids", "inner_iters", "wall_ms")

    def csv_row(self):
        return [
            str(self.iteration),
            repr(float(self.merit)),
            repr(float(self.grad_norm)),
            repr(float(self.disagreement)),
            repr(float(self.prox_residual)),
            " ".join(str(i) for i in self.active_ids),
            str(self.inner_iters),
            repr(float(self.wall_ms)),
        ]


def node_mean(x):
    """Mean over nodes, taken about the first row so equal rows give it exactly."""
    x = np.asarray(x, dtype=float)
    return x[0] + np.mean(x - x[0], axis=0)


def gradient_norm(objectives, x):
    """``|sum_i grad f_i(xbar)|`` with ``xbar`` the node average (smooth parts only)."""
    xbar = node_mean(x)
    g = np.zeros_like(xbar)
    for o in objectives:
        g += o.smooth_gradient(xbar)
    return float(np.linalg.norm(g))


def disagreement(x):
    """``max_i |x_i - xbar|``."""
    x = np.asarray(x, dtype=float)
    return float(np.max(np.linalg.norm(x - node_mean(x), axis=1)))


def prox_gradient_residual(objectives, x, step):
    """``|xbar - prox_{step*g}(xbar - step * sum_i grad f_i(xbar))|``.

    ``g`` collects the agents' l1 weights and ball constraint; the prox of
    ``l1*|.|_1`` plus a ball indicator is soft-thresholding followed by
    projection.  For purely smooth objectives this is ``step * G``.
    """
    xbar = node_mean(x)
    g = np.zeros_like(xbar)
    l1 = 0.0
    radius = None
    for o in objectives:
        g += o.smooth_gradient(xbar)
        l1 += o.l1_weight
        if o.radius is not None:
            radius = o.radius if radius is None else min(radius, o.radius)
    w = xbar - step * g
    if l1 > 0:
        w = soft_threshold(w, step * l1)
    w = project_ball(w, radius)
    return float(np.linalg.norm(xbar - w))


def make_record(k, merit_value, objectives, x, active, inner_iters, wall_ms, residual_step=None):
    res = np.nan if residual_step is None else prox_gradient_residual(objectives, x, residual_step)
    return RunRecord(
        iteration=int(k),
        merit=float(merit_value),
        grad_norm=gradient_norm(objectives, x),
        disagreement=disagreement(x),
        prox_residual=res,
        active_ids=tuple(active),
        inner_iters=int(inner_iters),
        wall_ms=float(wall_ms),
    )


# ---------------------------------------------------- condition arithmetic


def condition_expression(gamma, L, ell, fraction):
    """``(1+gL)^2 + gL^2 + 5g*ell/2 + (1+g)(1+g*ell)^2 (1-fraction) - 3/2``."""
    g = gamma
    return ((1 + g * L) ** 2 + g * L * L + 2.5 * g * ell
            + (1 + g) * (1 + g * ell) ** 2 * (1 - fraction) - 1.5)


def beta_expression(beta, L, ell, fraction):
    """The same quantity written in the penalty ``beta = 1/gamma``."""
    b = beta
    return ((b + L) ** 2 / b ** 2 + L * L / b + 5 * ell / (2 * b)
            + (b + 1) * (b + ell) ** 2 / b ** 3 * (1 - fraction) - 1.5)


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of a step-size feasibility check.

    ``alpha_value`` is the condition expression divided by ``gamma``;
    the step size is admissible iff it is negative.
    """

    alpha_value: float
    feasible: bool
    gamma: float
    L: float
    ell: float
    p: int
    C_size: float
    fraction: float
    minimal_fraction: float
    beta: float = None
    minimal_beta: float = None
    literal_fraction: float = None
    literal_feasible: bool = None

    def lines(self):
        out = [
            f"gamma = {self.gamma!r}" + (f"  (beta = {self.beta!r})" if self.beta is not None else ""),
            f"L = {self.L!r}, ell = {self.ell!r}, p = {self.p}, |C| = {self.C_size!r}, |C|/p = {self.fraction!r}",
            f"alpha = {self.alpha_value!r}  -> {'feasible' if self.feasible else 'infeasible'}",
            "minimal fraction = " + ("none (infeasible for every fraction)" if self.minimal_fraction is None
                                     else repr(self.minimal_fraction)),
        ]
        if self.beta is not None:
            out.append("minimal beta = " + ("none in bracket" if self.minimal_beta is None
                                            else repr(self.minimal_beta)))
        if self.literal_fraction is not None:
            out.append(f"d|S|/p = {self.literal_fraction!r} -> "
                       f"{'feasible' if self.literal_feasible else 'infeasible'}")
        return out


def minimal_fraction(gamma, L, ell, tol=1e-9):
    """Smallest ``|C|/p`` making the condition hold at ``gamma``, by bisection.

    Returns the feasible end of the final bracket, ``0.0`` if every fraction
    works and ``None`` if none does.
    """
    if condition_expression(gamma, L, ell, 1.0) >= 0:
        return None
    if condition_expression(gamma, L, ell, 0.0) < 0:
        return 0.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if condition_expression(gamma, L, ell, mid) < 0:
            hi = mid
        else:
            lo = mid
    return hi


def check_gamma_condition(gamma, L, ell, p, C_size, tol=1e-9):
    """Evaluate the step-size condition for ``gamma`` and ``|C|`` of ``p`` coordinates."""
    if not (gamma > 0 and p > 0 and 0 < C_size <= p):
        raise ValueError("need gamma > 0 and 0 < C_size <= p")
    frac = C_size / p
    expr = condition_expression(gamma, L, ell, frac)
    return ConditionReport(
        alpha_value=float(expr / gamma),
        feasible=bool(expr < 0),
        gamma=float(gamma),
        L=float(L),
        ell=float(ell),
        p=int(p),
        C_size=float(C_size),
        fraction=float(frac),
        minimal_fraction=minimal_fraction(gamma, L, ell, tol),
    )


def minimal_feasible_beta(L, ell, fraction, lo=None, hi=1e6, tol=1e-9):
    """Smallest ``beta`` in ``[max(L, 1e-6), hi]`` satisfying the condition.

    The condition expression decreases in ``beta``, so the feasible set is
    an interval ``[beta*, inf)``.  Raises :class:`NoFeasibleBeta` if ``hi``
    itself is infeasible.
    """
    lo = max(L, 1e-6) if lo is None else lo
    if beta_expression(hi, L, ell, fraction) >= 0:
        raise NoFeasibleBeta(f"no beta <= {hi:g} satisfies the condition at fraction {fraction:g}")
    if beta_expression(lo, L, ell, fraction) < 0:
        return float(lo)
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if beta_expression(mid, L, ell, fraction) < 0:
            hi = mid
        else:
            lo = mid
    return float(hi)


def check_beta_condition(beta, L, ell, p, active_block_coords, d=None, num_active=None):
    """Condition in penalty form, ``gamma = 1/beta``.

    ``active_block_coords`` is the number of stacked coordinates an
    iteration updates (``sum over active subgraphs of d*|V_i|``).  When
    ``d`` and ``num_active`` are given, feasibility under the fraction
    ``d*|S|/p`` is reported as well.
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    base = check_gamma_condition(1.0 / beta, L, ell, p, active_block_coords)
    try:
        bmin = minimal_feasible_beta(L, ell, base.fraction)
    except NoFeasibleBeta:
        bmin = None
    lit_frac = lit_ok = None
    if d is not None and num_active is not None:
        lit_frac = d * num_active / p
        lit_ok = bool(beta_expression(beta, L, ell, lit_frac) < 0)
    return ConditionReport(
        alpha_value=base.alpha_value,
        feasible=base.feasible,
        gamma=base.gamma,
        L=base.L,
        ell=base.ell,
        p=base.p,
        C_size=base.C_size,
        fraction=base.fraction,
        minimal_fraction=base.minimal_fraction,
        beta=float(beta),
        minimal_beta=bmin,
        literal_fraction=lit_frac,
        literal_feasible=lit_ok,
    )


# ------------------------------------------------------ smoothness constants


def estimate_smoothness(objective, domain_radius=1.0, samples=200, seed=0, power_steps=20, h=1e-5):
    """``(L, ell)`` for an objective's smooth part.

    Objectives that know their constants (quadratic, LASSO, sparse PCA)
    return them exactly.  Otherwise sample ``samples`` centers uniformly in
    the ball of radius ``domain_radius``; at each, power iteration on
    central gradient differences finds the largest curvature magnitude and,
    after a shift, the most negative curvature.  The result is a lower
    bound on the true constants over the ball and is nondecreasing in
    ``samples`` (sample ``k`` does not depend on the total count).
    """
    hints = objective.smoothness_hints()
    if hints is not None:
        return float(hints[0]), float(hints[1])
    dim = objective.dim
    grad = objective.smooth_gradient

    def hv(a, v):
        return (grad(a + h * v) - grad(a - h * v)) / (2 * h)

    L_hat = 0.0
    ell_hat = 0.0
    for child in np.random.SeedSequence(seed).spawn(samples):
        rng = np.random.default_rng(child)
        a = rng.standard_normal(dim)
        a *= domain_radius * rng.random() ** (1.0 / dim) / np.linalg.norm(a)
        v = rng.standard_normal(dim)
        v /= np.linalg.norm(v)
        top = 0.0
        for _ in range(power_steps):
            w = hv(a, v)
            top = float(np.linalg.norm(w))
            if top == 0:
                break
            v = w / top
        L_hat = max(L_hat, top)
        # shifted power iteration: the top of (top*I - H) is top - lambda_min
        v = rng.standard_normal(dim)
        v /= np.linalg.norm(v)
        shifted = 0.0
        for _ in range(power_steps):
            w = top * v - hv(a, v)
            shifted = float(np.linalg.norm(w))
            if shifted == 0:
                break
            v = w / shifted
        lam_min = float(v @ hv(a, v))
        ell_hat = max(ell_hat, -lam_min)
    return L_hat, ell_hat


# ------------------------------------------------------- statistical checks


@dataclass(frozen=True)
class XiReport:
    """Empirical check of the block-coordinate noise bound."""

    steps: int
    zeta: float
    mean_xi_sq: float
    mean_du_sq: float
    ratio: float
    passed: bool
    moment_ratio: float = None


def xi_bound_check(xi_sq, du_sq, gamma, L, C_fraction, vu_sq=None, slack=0.1):
    """Compare ``mean |xi_k|^2`` with ``zeta * mean |u^{k+1} - u^k|^2``.

    ``zeta = (1 - |C|/p)(1 + gamma L)^2``.  ``xi_sq[k]`` and ``du_sq[k]``
    must refer to the same step ``k``.  When ``vu_sq`` (``|v^k - u^k|^2``)
    is given, ``moment_ratio`` compares ``mean |xi|^2`` with
    ``(1/fraction - 1) * mean |v - u|^2``.
    """
    xi_sq = np.asarray(xi_sq, dtype=float)
    du_sq = np.asarray(du_sq, dtype=float)
    if xi_sq.size < 200:
        raise InsufficientSamples(f"need at least 200 steps, got {xi_sq.size}")
    if du_sq.shape != xi_sq.shape:
        raise ValueError("xi_sq and du_sq must have equal lengths")
    zeta = (1.0 - C_fraction) * (1.0 + gamma * L) ** 2
    mx = float(xi_sq.mean())
    md = float(du_sq.mean())
    if mx == 0.0:
        ratio = 0.0
    elif zeta * md == 0.0:
        ratio = np.inf
    else:
        ratio = mx / (zeta * md)
    mom = None
    if vu_sq is not None:
        expect = (1.0 / C_fraction - 1.0) * float(np.mean(vu_sq))
        mom = 0.0 if mx == 0.0 and expect == 0.0 else mx / expect
    return XiReport(int(xi_sq.size), zeta, mx, md, float(ratio), bool(ratio <= 1.0 + slack), mom)


def xi_trajectory(cover, objectives, s0, gamma, steps, C_blocks, seed=0, scaled=True):
    """Run block-coordinate DRS and collect per-step noise statistics.

    Each step selects ``C_blocks`` blocks uniformly at random.  Returns a
    dict with arrays ``xi_sq``, ``vu_sq`` and ``du_sq`` aligned on the step
    index (the last step is dropped because its ``u^{k+1}`` is unknown).
    """
    rng = np.random.default_rng(seed)
    xi_sq, vu_sq, us = [], [], []

    def select(k):
        return BlockSelection.random(cover, C_blocks, rng)

    def record(k, prev, new, sel):
        xi = xi_term(new.u, new.v, sel, cover.p)
        vu = new.v - new.u
        xi_sq.append(float(xi @ xi))
        vu_sq.append(float(vu @ vu))
        us.append(new.u)

    state = DrsState.initial(cover, s0, gamma)
    run_drs(state, cover, objectives, steps + 1, selector=select, scaled=scaled, callback=record)
    du = [float(np.sum((us[k + 1] - us[k]) ** 2)) for k in range(steps)]
    return {
        "xi_sq": np.array(xi_sq[:steps]),
        "vu_sq": np.array(vu_sq[:steps]),
        "du_sq": np.array(du),
    }


@dataclass(frozen=True)
class TrendReport:
    """Merit behaviour over a run."""

    records: int
    burn_in: int
    max_window_increase: float
    nonincreasing: bool
    last_decile_range: float
    median: float
    stabilized: bool


def merit_trend(records, window=100, burn_in_fraction=0.1, rel_tol=1e-3, noise_tol=1e-10):
    """Check that the merit trends down after burn-in and settles.

    The 100-step moving average of ``L^{k+1} - L^k`` must stay at or below
    ``noise_tol * max(1, |L|)`` (floating-point noise allowance) after the
    burn-in, and the range of the last tenth of the run must be at most
    ``rel_tol * |median|``.
    """
    vals = np.array([r.merit if isinstance(r, RunRecord) else r for r in records], dtype=float)
    if vals.size < 500:
        raise InsufficientSamples(f"need at least 500 records, got {vals.size}")
    burn = int(np.ceil(burn_in_fraction * vals.size))
    tail = vals[burn:]
    diffs = np.diff(tail)
    if diffs.size >= window:
        kernel = np.ones(window) / window
        avg = np.convolve(diffs, kernel, mode="valid")
    else:
        avg = np.array([diffs.mean()])
    scale = noise_tol * max(1.0, float(np.max(np.abs(tail))))
    max_inc = float(avg.max())
    last = vals[-max(1, vals.size // 10):]
    rng_last = float(last.max() - last.min())
    med = float(np.median(last))
    return TrendReport(
        records=int(vals.size),
        burn_in=burn,
        max_window_increase=max_inc,
        nonincreasing=bool(max_inc <= scale),
        last_decile_range=rng_last,
        median=med,
        stabilized=bool(rng_last <= rel_tol * abs(med)),
    )
