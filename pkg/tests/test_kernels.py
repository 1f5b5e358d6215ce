import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from graphtopo import _accel, core, kernels

BACKENDS = ["numpy", "numba"] if _accel.HAS_NUMBA else ["numpy"]


def _problem(seed, n=12, gsize=1):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((3 * n, n))
    G = a.T @ a / n
    c = rng.standard_normal(n) * 2
    pens = rng.uniform(0.1, 1.0, n // gsize)
    return G, c, pens


def _group_kkt(G, c, pens, x, gsize):
    """Largest violation of the group-lasso optimality conditions."""
    grad = G @ x - c
    worst = 0.0
    for g, p in enumerate(pens):
        sl = slice(g * gsize, (g + 1) * gsize)
        xn = np.linalg.norm(x[sl])
        if xn > 0:
            worst = max(worst, np.linalg.norm(grad[sl] + p * x[sl] / xn))
        else:
            worst = max(worst, np.linalg.norm(grad[sl]) - p)
    return worst


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("gsize", [1, 3])
def test_group_bcd_kkt(backend, gsize):
    for seed in range(5):
        G, c, pens = _problem(seed, gsize=gsize)
        x, it, trace = kernels.group_bcd(G, c, pens, gsize=gsize, backend=backend)
        assert _group_kkt(G, c, pens, x, gsize) < 1e-8
        assert np.all(np.diff(trace) <= 1e-12 * max(1.0, abs(trace[0])))


@pytest.mark.parametrize("gsize", [1, 2, 4])
def test_group_bcd_backends_agree(gsize):
    if len(BACKENDS) < 2:
        pytest.skip("numba unavailable")
    G, c, pens = _problem(11, gsize=gsize)
    a = kernels.group_bcd(G, c, pens, gsize=gsize, backend="numpy")
    b = kernels.group_bcd(G, c, pens, gsize=gsize, backend="numba")
    assert np.allclose(a[0], b[0], atol=1e-12)
    assert a[1] == b[1]


def test_group_bcd_large_penalty_gives_zero():
    G, c, _ = _problem(3)
    x, _, _ = kernels.group_bcd(G, c, np.full(12, 1e6))
    assert not x.any()


def test_group_bcd_unpenalized_solves_system():
    G, c, _ = _problem(4)
    x, _, _ = kernels.group_bcd(G, c, np.zeros(12), tol=1e-14, max_iter=100000)
    assert np.allclose(x, np.linalg.solve(G, c), atol=1e-8)


def _factored_problem(seed, ng=5, T=30, d=4):
    rng = np.random.default_rng(seed)
    C = np.zeros((ng, T, d))
    s = np.zeros((ng, d))
    for g in range(ng):
        q, _ = np.linalg.qr(rng.standard_normal((T, d)))
        sv = rng.uniform(0.5, 3.0, d)
        C[g] = q * sv
        s[g] = sv ** 2
    y = rng.standard_normal(T) * 3
    return C, s, y


@pytest.mark.parametrize("backend", BACKENDS)
def test_factored_group_bcd_matches_dense(backend):
    C, s, y = _factored_problem(0)
    ng, T, d = C.shape
    X = np.concatenate(list(C), axis=1)
    pen = 1.5
    x, _, _ = kernels.factored_group_bcd(C, s, y, pen, backend=backend)
    ref, _, _ = kernels.group_bcd(X.T @ X, X.T @ y, np.full(ng, pen), gsize=d, backend="numpy")
    assert np.allclose(x.ravel(), ref, atol=1e-8)
    assert _group_kkt(X.T @ X, X.T @ y, np.full(ng, pen), x.ravel(), d) < 1e-8


def test_factored_backends_agree():
    if len(BACKENDS) < 2:
        pytest.skip("numba unavailable")
    C, s, y = _factored_problem(5)
    a = kernels.factored_group_bcd(C, s, y, 0.7, backend="numpy")
    b = kernels.factored_group_bcd(C, s, y, 0.7, backend="numba")
    assert np.allclose(a[0], b[0], atol=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
def test_admm_lasso_matches_cd(backend):
    G, c, _ = _problem(8)
    G = G + 0.1 * np.eye(12)
    vals, vecs = np.linalg.eigh(G)
    x, _, _, k = kernels.admm_lasso(vals, vecs, c, 0.4, tol=1e-13, max_iter=100000,
                                    backend=backend)
    ref, _, _ = kernels.group_bcd(G, c, np.full(12, 0.4))
    assert k < 100000
    assert np.allclose(x, ref, atol=1e-8)


def test_admm_backends_agree():
    if len(BACKENDS) < 2:
        pytest.skip("numba unavailable")
    G, c, _ = _problem(9)
    G = G + 0.1 * np.eye(12)
    vals, vecs = np.linalg.eigh(G)
    a = kernels.admm_lasso(vals, vecs, c, 0.3, backend="numpy")
    b = kernels.admm_lasso(vals, vecs, c, 0.3, backend="numba")
    assert np.allclose(a[0], b[0], atol=1e-10)


def test_fista_backends_agree():
    if len(BACKENDS) < 2:
        pytest.skip("numba unavailable")
    rng = np.random.default_rng(2)
    n = 8
    y = rng.standard_normal((n, 10))
    rows, cols = core.edge_index(n)
    e = np.sum((y[rows] - y[cols]) ** 2, axis=1)
    out = [kernels.fista_dual(e, rows, cols, n, 1.0, 0.5, np.zeros(n), 1e-12, 5000, 20, backend=b)
           for b in ("numpy", "numba")]
    assert np.allclose(out[0][0], out[1][0], atol=1e-10)
    assert out[0][3] == out[1][3]
    assert np.allclose(out[0][4], out[1][4], atol=1e-10)


@given(st.integers(0, 2**31), st.floats(0.0, 2.0))
def test_group_bcd_objective_not_above_start(seed, pen):
    G, c, _ = _problem(seed % 1000, n=6)
    x, _, trace = kernels.group_bcd(G, c, np.full(6, pen), backend="numpy")
    assert trace[-1] <= trace[0] + 1e-12


def test_env_flag_disables_numba():
    code = "from graphtopo import _accel; print(_accel.USE_NUMBA)"
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                         env={"GRAPHTOPO_DISABLE_NUMBA": "1", "PATH": ""}, check=True)
    assert out.stdout.strip() == "False"
