import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asyncadmm import kernels
from asyncadmm.problems import generate_phase_retrieval, generate_sparse_pca

compiled = kernels.compiled_backend()
needs_ext = pytest.mark.skipif(compiled is None, reason="compiled extension not built")
py = kernels.python_backend


def pr_args(seed):
    a = generate_phase_retrieval(seed, 1, 4, 15)[0]
    return a._A, a._B, a.measurements


@needs_ext
@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), weight=st.floats(1.0, 200.0))
def test_pr_prox_parity(seed, weight):
    A, B, b = pr_args(seed % 1000)
    c = np.random.default_rng(seed).standard_normal(A.shape[1])
    x1, it1, ok1 = py.pr_prox(A, B, b, c, weight, 1e-9, 500)
    x2, it2, ok2 = compiled.pr_prox(A, B, b, c, weight, 1e-9, 500)
    assert ok1 == ok2
    assert abs(it1 - it2) <= 1
    np.testing.assert_allclose(np.asarray(x2), np.asarray(x1), atol=1e-10)


@needs_ext
def test_pr_value_grad_parity():
    A, B, b = pr_args(3)
    x = np.random.default_rng(0).standard_normal(A.shape[1])
    v1, g1 = py.pr_value_grad(A, B, b, x)
    v2, g2 = compiled.pr_value_grad(A, B, b, x)
    assert v2 == pytest.approx(v1, rel=1e-13)
    np.testing.assert_allclose(np.asarray(g2), g1, rtol=1e-12, atol=1e-14)


@needs_ext
@pytest.mark.parametrize("radius", [1.0, 0.0])
@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_quad_composite_parity(radius, seed):
    o = generate_sparse_pca(seed % 1000, 1, 6, 12, lam=2.0)[0]
    w = 2.1 * o.gram_lambda_max + 0.5
    H = np.ascontiguousarray(w * np.eye(6) - 2 * o._gram)
    c = np.random.default_rng(seed).standard_normal(6)
    step = 1.0 / (w - 2 * o._eig[0])
    args = (H, w * c, o.l1_weight, radius, step, c, 1e-12, 10_000)
    x1, it1, ok1 = py.quad_composite_prox(*args)
    x2, it2, ok2 = compiled.quad_composite_prox(*args)
    assert ok1 == ok2
    np.testing.assert_allclose(np.asarray(x2), np.asarray(x1), atol=1e-10)


def test_backend_selection_env():
    code = "from asyncadmm import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, ASYNCADMM_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    env.pop("ASYNCADMM_PURE_PYTHON")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == ("cython" if compiled is not None else "python")
