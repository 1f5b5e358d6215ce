"""Sparse Gaussian graphical models: graphical lasso and the Laplacian-constrained GMRF."""
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import as_signal_array, edge_index, laplacian, vector_to_matrix
from .corrnet import CovarianceEstimate
from .errors import ParamError, ShapeError

GAMMA_MIN = 1e-8


@dataclass(frozen=True)
class PrecisionEstimate:
    theta: np.ndarray
    converged: bool
    iterations: int
    kkt_residual: float = float("nan")
    objective_trace: tuple = field(default=(), repr=False)

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=np.float64)
        if not np.array_equal(th, th.T):
            raise ParamError("precision estimate must be symmetric")
        th = th.copy()
        th.setflags(write=False)
        object.__setattr__(self, "theta", th)


@dataclass(frozen=True)
class LaplacianEstimate:
    laplacian: np.ndarray
    loading: float
    converged: bool = True
    iterations: int = 0
    objective_trace: tuple = field(default=(), repr=False)

    @property
    def theta(self):
        return self.laplacian + self.loading * np.eye(self.laplacian.shape[0])

    @property
    def weights(self):
        w = -self.laplacian.copy()
        np.fill_diagonal(w, 0.0)
        return w


def _sigma(c):
    s = c.sigma if isinstance(c, CovarianceEstimate) else np.asarray(c, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ShapeError("covariance must be square")
    return s


def default_lambda(n_nodes, n_samples):
    """Rate-optimal penalty ``2 sqrt(log(N) / T)``."""
    return 2.0 * np.sqrt(np.log(n_nodes) / n_samples)


def glasso_objective(theta, s, lam, penalize_diagonal=True):
    """``log det Theta - trace(S Theta) - lam ||Theta||_1`` (to be maximized)."""
    sign, logdet = np.linalg.slogdet(theta)
    if sign <= 0:
        return -np.inf
    pen = np.abs(theta).sum()
    if not penalize_diagonal:
        pen -= np.abs(np.diag(theta)).sum()
    return logdet - np.sum(s * theta) - lam * pen


def glasso_kkt(theta, s, lam, penalize_diagonal=True, w=None):
    """Max-norm of the subgradient optimality residual."""
    w = np.linalg.inv(theta) if w is None else w
    g = w - s
    n = s.shape[0]
    off = ~np.eye(n, dtype=bool)
    nz = theta != 0
    res = np.zeros_like(g)
    m = off & nz
    res[m] = np.abs(g[m] - lam * np.sign(theta[m]))
    m = off & ~nz
    res[m] = np.maximum(np.abs(g[m]) - lam, 0.0)
    ld = lam if penalize_diagonal else 0.0
    d = np.diag(g) - ld * np.sign(np.diag(theta))
    return float(max(res.max(initial=0.0), np.abs(d).max()))


def graphical_lasso(c, lam, tol=1e-6, max_iter=500, penalize_diagonal=True, theta0=None):
    """l1-penalized Gaussian maximum likelihood for the precision matrix.

    Cyclic block-coordinate ascent over columns.  Each column update
    maximizes the objective exactly in (theta_12, theta_22) with the rest
    held fixed: the off-diagonal block solves a lasso in the metric of
    ``Theta_11^{-1}``, and ``theta_22`` follows in closed form.  Every update
    keeps Theta positive definite and cannot decrease the objective.
    """
    if lam < 0:
        raise ParamError("lambda must be nonnegative")
    s = _sigma(c)
    n = s.shape[0]
    if np.any(np.diag(s) <= 0):
        raise ParamError("covariance diagonal must be positive")
    ld = lam if penalize_diagonal else 0.0
    if theta0 is None:
        theta = np.diag(1.0 / (np.diag(s) + ld))
    else:
        theta = np.array(theta0, dtype=np.float64)
    w = np.linalg.inv(theta)
    trace = [glasso_objective(theta, s, lam, penalize_diagonal)]
    kkt = glasso_kkt(theta, s, lam, penalize_diagonal, w)
    it = 0
    converged = kkt <= tol
    idx_all = np.arange(n)
    while not converged and it < max_iter:
        it += 1
        for j in range(n):
            idx = idx_all[idx_all != j]
            w11 = w[np.ix_(idx, idx)]
            w12 = w[idx, j]
            v = w11 - np.outer(w12, w12) / w[j, j]
            v = 0.5 * (v + v.T)
            a = s[j, j] + ld
            x, _, _ = kernels.group_bcd(a * v, -s[idx, j], lam, x0=theta[idx, j],
                                        tol=1e-13, max_iter=20000)
            vx = v @ x
            theta[idx, j] = x
            theta[j, idx] = x
            theta[j, j] = 1.0 / a + x @ vx
            w[np.ix_(idx, idx)] = v + a * np.outer(vx, vx)
            w[idx, j] = w[j, idx] = -a * vx
            w[j, j] = a
        w = np.linalg.inv(theta)
        w = 0.5 * (w + w.T)
        trace.append(glasso_objective(theta, s, lam, penalize_diagonal))
        kkt = glasso_kkt(theta, s, lam, penalize_diagonal, w)
        converged = kkt <= tol
    theta = 0.5 * (theta + theta.T)
    return PrecisionEstimate(theta, bool(converged), it, kkt, tuple(trace))


def laplacian_objective(w, gamma, s, lam, penalize_diagonal=False):
    """Penalized log-likelihood of ``Theta = L(w) + gamma I`` (to be maximized)."""
    n = s.shape[0]
    theta = laplacian(vector_to_matrix(w, n)) + gamma * np.eye(n)
    sign, logdet = np.linalg.slogdet(theta)
    if sign <= 0:
        return -np.inf
    pen = 2.0 * w.sum()
    if penalize_diagonal:
        pen += 2.0 * w.sum() + n * gamma
    return logdet - np.sum(s * theta) - lam * pen


def laplacian_gmrf(c, lam, tol=1e-6, max_iter=20000, penalize_diagonal=False):
    """Laplacian-constrained precision estimation ``Theta = L + gamma I``.

    Parameterized by nonnegative edge weights ``w`` and the loading
    ``gamma >= GAMMA_MIN``; solved by projected gradient with Armijo
    backtracking and Barzilai-Borwein trial steps.
    """
    if lam < 0:
        raise ParamError("lambda must be nonnegative")
    s = _sigma(c)
    n = s.shape[0]
    rows, cols = edge_index(n)
    e_s = s[rows, rows] + s[cols, cols] - 2.0 * s[rows, cols]
    ls = 2.0 * lam * (2.0 if penalize_diagonal else 1.0)
    lg = n * lam if penalize_diagonal else 0.0
    tr_s = np.trace(s)

    def f_and_grad(x):
        w, gamma = x[:-1], x[-1]
        theta = laplacian(vector_to_matrix(w, n)) + gamma * np.eye(n)
        try:
            chol = np.linalg.cholesky(theta)
        except np.linalg.LinAlgError:
            return np.inf, None
        logdet = 2.0 * np.log(np.diag(chol)).sum()
        cinv = np.linalg.inv(theta)
        f = -logdet + w @ e_s + gamma * tr_s + ls * w.sum() + lg * gamma
        gw = -(cinv[rows, rows] + cinv[cols, cols] - 2.0 * cinv[rows, cols]) + e_s + ls
        gg = -np.trace(cinv) + tr_s + lg
        return f, np.append(gw, gg)

    lower = np.append(np.zeros(rows.shape[0]), GAMMA_MIN)

    def project(x):
        return np.maximum(x, lower)

    x = np.append(np.zeros(rows.shape[0]), max(n / (tr_s + lg), GAMMA_MIN))
    f, g = f_and_grad(x)
    trace = [-f]
    step = 1.0
    converged = False
    it = 0
    res = np.abs(project(x - g) - x).max()
    for it in range(1, max_iter + 1):
        if res <= tol:
            converged = True
            it -= 1
            break
        t = step
        while True:
            xn = project(x - t * g)
            fn, gn = f_and_grad(xn)
            if gn is not None:
                if fn <= f + 1e-4 * g @ (xn - x):
                    break
                # near the optimum the Armijo decrease drops below the rounding
                # of f; then accept steps that shrink the projected gradient
                if (abs(fn - f) <= 1e-14 * max(1.0, abs(f))
                        and np.abs(project(xn - gn) - xn).max() < res):
                    break
            t *= 0.5
            if t < 1e-20:
                gn = None
                break
        if gn is None:
            break
        res = np.abs(project(xn - gn) - xn).max()
        sdiff, ydiff = xn - x, gn - g
        sy = sdiff @ ydiff
        step = (sdiff @ sdiff) / sy if sy > 1e-300 else 1.0
        step = min(max(step, 1e-10), 1e10)
        x, f, g = xn, fn, gn
        trace.append(-f)
    w, gamma = x[:-1], x[-1]
    lap = laplacian(vector_to_matrix(w, n))
    return LaplacianEstimate(lap, float(gamma), converged, it, tuple(trace))


def smoothness_total(y, lap):
    """Total variation ``sum_t y_t' L y_t`` of the columns of ``y``."""
    y = as_signal_array(y)
    lap = np.asarray(lap, dtype=np.float64)
    if lap.shape != (y.shape[0], y.shape[0]):
        raise ShapeError("Laplacian and signals disagree on the node count")
    return float(np.sum(y * (lap @ y)))
