"""Pure-numpy inner solvers.  Same signatures as the compiled ``_kernels``.

Phase-retrieval measurement rows are given in the real embedding: for a
complex direction ``t`` the real 2d-vectors ``a = (Re t, Im t)`` and
``b = (Im t, -Re t)`` give ``|<x, t>|^2 = (a.x)^2 + (b.x)^2``.
"""

import numpy as np

BACKEND = "python"


def pr_value_grad(A, B, b, x):
    """Value and gradient of ``mean((|<x,t>|^2 - b)^2)``."""
    re = A @ x
    im = B @ x
    r = re * re + im * im - b
    m = b.shape[0]
    val = float(r @ r) / m
    grad = (4.0 / m) * (A.T @ (r * re) + B.T @ (r * im))
    return val, grad


def _pr_delta(A, B, b, re, im, x, center, weight, step):
    # phi(x + step) - phi(x), evaluated without subtracting two large values
    ra = A @ step
    ia = B @ step
    dq = ra * (2.0 * re + ra) + ia * (2.0 * im + ia)
    q2 = 2.0 * (re * re + im * im - b) + dq
    df = float(dq @ q2) / b.shape[0]
    dprox = 0.5 * weight * float(step @ (2.0 * (x - center) + step))
    return df + dprox


def pr_prox(A, B, b, center, weight, tol, max_iters):
    """Backtracking gradient descent on ``f(u) + weight/2 |u - center|^2``.

    Warm-started at ``center``.  Returns ``(x, iterations, converged)``
    where ``converged`` means the subproblem gradient norm reached ``tol``.
    """
    center = np.asarray(center, dtype=float)
    x = center.copy()
    m = b.shape[0]
    t = 1.0 / weight
    t_floor = 1e-30 / weight
    iters = 0
    converged = False
    while True:
        re = A @ x
        im = B @ x
        r = re * re + im * im - b
        g = (4.0 / m) * (A.T @ (r * re) + B.T @ (r * im)) + weight * (x - center)
        gn2 = float(g @ g)
        if gn2 <= tol * tol:
            converged = True
            break
        if iters >= max_iters:
            break
        t = 2.0 * t
        while True:
            step = -t * g
            if _pr_delta(A, B, b, re, im, x, center, weight, step) <= -0.5 * t * gn2:
                break
            t *= 0.5
            if t < t_floor:
                return x, iters, False
        x = x + step
        iters += 1
    return x, iters, converged


def _soft(v, thresh):
    return np.sign(v) * np.maximum(np.abs(v) - thresh, 0.0)


def quad_composite_prox(H, h, l1, radius, step, x0, tol, max_iters):
    """Proximal gradient for ``u'Hu/2 - h'u + l1*|u|_1 + indicator(|u| <= radius)``.

    ``radius <= 0`` disables the ball.  Each iteration takes a gradient step
    of length ``step``, soft-thresholds, then projects onto the ball.
    Stops when successive iterates differ by at most ``tol``.
    """
    x = np.array(x0, dtype=float)
    iters = 0
    converged = False
    while iters < max_iters:
        y = x - step * (H @ x - h)
        if l1 > 0.0:
            y = _soft(y, step * l1)
        if radius > 0.0:
            nrm = float(np.sqrt(y @ y))
            if nrm > radius:
                y = y * (radius / nrm)
        diff = y - x
        x = y
        iters += 1
        if float(np.sqrt(diff @ diff)) <= tol:
            converged = True
            break
    return x, iters, converged
