"""Independent reference solvers used only by the tests."""
import numpy as np
from scipy.optimize import brentq


def smooth_primal_pg(e, alpha, beta, tol=1e-13, max_iter=200000):
    """Projected gradient with backtracking on the primal smooth-learning objective.

    Builds the degree operator densely so it shares no code with the package.
    """
    e = np.asarray(e, dtype=np.float64)
    m = e.shape[0]
    n = int(round((1 + np.sqrt(1 + 8 * m)) / 2))
    S = np.zeros((n, m))
    k = 0
    for j in range(1, n):
        for i in range(j):
            S[i, k] = S[j, k] = 1.0
            k += 1

    def f(w):
        d = S @ w
        if np.any(d <= 0):
            return np.inf
        return 2 * e @ w + beta * w @ w - alpha * np.log(d).sum()

    def grad(w):
        return 2 * e + 2 * beta * w - alpha * S.T @ (1.0 / (S @ w))

    w = np.ones(m)
    step = 1.0
    fw = f(w)
    for _ in range(max_iter):
        g = grad(w)
        while True:
            wn = np.maximum(w - step * g, 0.0)
            fn = f(wn)
            if fn <= fw + g @ (wn - w) + (wn - w) @ (wn - w) / (2 * step):
                break
            step *= 0.5
        if np.max(np.abs(wn - w)) <= tol:
            w = wn
            break
        w, fw = wn, fn
        step *= 2.0
    return _newton_polish(w, S, e, alpha, beta)


def _newton_polish(w, S, e, alpha, beta, iters=50):
    """Newton steps on the support found by projected gradient.

    Projected gradient stalls on ill-conditioned instances; once the active
    set is right the problem is smooth and Newton converges quadratically.
    The polish is kept only if the support and the KKT signs survive.
    """
    act = w > 1e-10
    if not act.any():
        return w
    Sa = S[:, act]
    v = w[act].copy()
    for _ in range(iters):
        d = Sa @ v
        g = 2 * e[act] + 2 * beta * v - alpha * Sa.T @ (1.0 / d)
        H = 2 * beta * np.eye(v.size) + alpha * Sa.T @ (Sa / d[:, None] ** 2)
        step = np.linalg.solve(H, g)
        t = 1.0
        while np.any(v - t * step <= 0):
            t *= 0.5
        v = v - t * step
        if np.max(np.abs(step)) <= 1e-15 * max(1.0, np.max(np.abs(v))):
            break
    out = np.zeros_like(w)
    out[act] = v
    grad = 2 * e + 2 * beta * out - alpha * S.T @ (1.0 / (S @ out))
    if np.all(grad[~act] >= -1e-9):
        return out
    return w


def symmetric_triangle_weight(e, alpha, beta):
    """Common weight of the N=3 instance with all distances equal to ``e``.

    Each node has degree 2w and each edge touches two nodes, so the stationarity
    condition is ``2e + 2 beta w - 2 alpha / (2 w) = 0``.
    """
    return brentq(lambda w: 2 * e + 2 * beta * w - alpha / w, 1e-12, 1e6, xtol=1e-15)
