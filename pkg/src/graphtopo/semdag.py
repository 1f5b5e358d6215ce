"""Directed network models: linear SEMs, continuous DAG learning and sparse VAR models.

Directed weights follow ``W[i, j] != 0`` for an edge ``j -> i``, so a row of
``W`` collects the parents of one node and every least-squares fit decouples
by row.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.optimize import minimize

from . import kernels
from .core import Graph, SignalMatrix, as_signal_array, has_cycle
from .errors import DomainError, InsufficientSamples, ParamError, ShapeError

H_KINDS = ("expm", "poly", "ldet")


@dataclass(frozen=True)
class SemModel:
    w: np.ndarray
    b: np.ndarray
    objective_trace: tuple = field(default=(), repr=False)

    def __post_init__(self):
        w = np.array(self.w, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ShapeError("W must be square")
        if np.any(np.diag(w) != 0):
            raise ParamError("SEM weights must have a zero diagonal")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "b", np.asarray(self.b, dtype=np.float64))

    @property
    def graph(self):
        return Graph(self.w, directed=True)


@dataclass(frozen=True)
class VarmModel:
    lags: tuple
    objective_trace: tuple = field(default=(), repr=False)

    def __post_init__(self):
        lags = tuple(np.asarray(a, dtype=np.float64) for a in self.lags)
        if not lags:
            raise ParamError("a VAR model needs at least one lag")
        n = lags[0].shape[0]
        if any(a.shape != (n, n) for a in lags):
            raise ShapeError("all lag matrices must be N x N")
        object.__setattr__(self, "lags", lags)

    @property
    def order(self):
        return len(self.lags)

    @property
    def n_nodes(self):
        return self.lags[0].shape[0]

    def graph(self, rule="or", weight_tol=0.0):
        """Granger graph: ``j -> i`` when some (``or``) or every (``and``) lag is nonzero.

        Self-lags are estimated but a graph carries no self-loops.
        """
        nz = np.stack([np.abs(a) > weight_tol for a in self.lags])
        if rule == "or":
            sup = nz.any(axis=0)
        elif rule == "and":
            sup = nz.all(axis=0)
        else:
            raise ParamError(f"unknown edge rule {rule!r}")
        w = np.sqrt(sum(a ** 2 for a in self.lags)) * sup
        np.fill_diagonal(w, 0.0)
        return Graph(w, directed=True)


@dataclass(frozen=True)
class DagResult:
    w: np.ndarray
    h_value: float
    is_dag: bool
    w_raw: np.ndarray = field(default=None, repr=False)
    h_trace: tuple = field(default=(), repr=False)
    rho: float = 0.0
    outer_iterations: int = 0

    @property
    def graph(self):
        return Graph(self.w, directed=True)


# --------------------------------------------------------------------------
# linear SEM
# --------------------------------------------------------------------------

def _row_problem(z, target, pen):
    """Quadratic pieces of ``||target - x'z||^2 + sum pen_k |x_k|`` for group_bcd."""
    return 2.0 * z @ z.T, 2.0 * z @ target, pen


def _merge_traces(traces):
    """Sum of row objectives after each sweep; finished rows hold their last value."""
    length = max(len(t) for t in traces)
    total = np.zeros(length)
    for t in traces:
        total += np.concatenate([t, np.full(length - len(t), t[-1])])
    return tuple(total)


def sem_fit(y, x=None, alpha=0.0, tol=1e-12, max_iter=10000, ridge=0.0):
    """Penalized least squares for ``y_t = W y_t + B x_t + e_t``.

    Minimizes ``sum_t ||y_t - W y_t - B x_t||^2 + alpha ||W||_1 + ridge ||W||_F^2``
    over zero-diagonal ``W`` and diagonal ``B = diag(b)`` (``b`` unpenalized).
    Each row is an independent (elastic-net) lasso solved by exact
    coordinate descent.  With ``x=None`` the model has no exogenous term.
    """
    y = as_signal_array(y)
    if alpha < 0 or ridge < 0:
        raise ParamError("alpha and ridge must be nonnegative")
    n, T = y.shape
    if x is not None:
        x = as_signal_array(x)
        if x.shape != y.shape:
            raise ShapeError("Y and X must have the same shape")
    w = np.zeros((n, n))
    b = np.zeros(n)
    traces = []
    for i in range(n):
        others = np.delete(np.arange(n), i)
        z = y[others]
        pen = np.full(n - 1, float(alpha))
        if x is not None:
            z = np.vstack([z, x[i:i + 1]])
            pen = np.append(pen, 0.0)
        G, c, pen = _row_problem(z, y[i], pen)
        G[np.arange(n - 1), np.arange(n - 1)] += 2.0 * ridge
        coef, _, trace = kernels.group_bcd(G, c, pen, tol=tol, max_iter=max_iter)
        traces.append(np.asarray(trace) + y[i] @ y[i])
        w[i, others] = coef[: n - 1]
        if x is not None:
            b[i] = coef[-1]
    return SemModel(w, b, _merge_traces(traces))


def sem_objective(model, y, x=None, alpha=0.0, ridge=0.0):
    y = as_signal_array(y)
    r = y - model.w @ y
    if x is not None:
        r = r - model.b[:, None] * as_signal_array(x)
    return float(np.sum(r ** 2) + alpha * np.abs(model.w).sum() + ridge * np.sum(model.w ** 2))


def simulate_sem(w, n_samples, b=None, noise_scale=0.0, seed=0):
    """Draw ``(Y, X)`` from ``y = W y + diag(b) x + e`` with standard normal inputs."""
    w = np.asarray(w, dtype=np.float64)
    n = w.shape[0]
    rng = np.random.default_rng(seed)
    b = np.ones(n) if b is None else np.asarray(b, dtype=np.float64)
    x = rng.standard_normal((n, int(n_samples)))
    e = noise_scale * rng.standard_normal((n, int(n_samples)))
    y = np.linalg.solve(np.eye(n) - w, b[:, None] * x + e)
    return SignalMatrix(y), SignalMatrix(x)


# --------------------------------------------------------------------------
# acyclicity functions
# --------------------------------------------------------------------------

def _square(w):
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ShapeError("W must be square")
    return w


def acyclicity_expm(w):
    """``trace(exp(W o W)) - N`` and its gradient ``2 exp(W o W)' o W``."""
    w = _square(w)
    with np.errstate(over="ignore", invalid="ignore"):
        e = sla.expm(w * w)
    return float(np.trace(e) - w.shape[0]), 2.0 * e.T * w


def acyclicity_poly(w):
    """``trace((I + W o W / N)^N) - N`` and its gradient."""
    w = _square(w)
    n = w.shape[0]
    m = np.eye(n) + w * w / n
    mp = np.linalg.matrix_power(m, n - 1)
    return float(np.trace(mp @ m) - n), 2.0 * mp.T * w


def spectral_radius(a):
    return float(np.max(np.abs(np.linalg.eigvals(a)))) if a.size else 0.0


def acyclicity_ldet(w, s=1.0):
    """``N log s - log det(sI - W o W)``, defined for ``s > rho(W o W)``."""
    w = _square(w)
    n = w.shape[0]
    if not s > 0:
        raise DomainError("s must be positive")
    a = w * w
    if spectral_radius(a) >= s:
        raise DomainError("s must exceed the spectral radius of W o W")
    m = s * np.eye(n) - a
    sign, logdet = np.linalg.slogdet(m)
    if sign <= 0:
        raise DomainError("sI - W o W is singular or has a nonpositive determinant")
    return float(n * np.log(s) - logdet), 2.0 * np.linalg.inv(m).T * w


def acyclicity(w, kind="expm", s=1.0):
    if kind == "expm":
        return acyclicity_expm(w)
    if kind == "poly":
        return acyclicity_poly(w)
    if kind == "ldet":
        return acyclicity_ldet(w, s)
    raise ParamError(f"unknown acyclicity function {kind!r}")


# --------------------------------------------------------------------------
# DAG learning
# --------------------------------------------------------------------------

def dag_fit(y, alpha=0.1, h_kind="expm", w_tol=0.3, h_tol=1e-8, rho_max=1e16, max_outer=100,
            s=1.0, w0=None, inner_max_iter=None):
    """Least-squares DAG learning with a smooth acyclicity constraint.

    Minimizes ``||Y - W Y||_F^2 / (2T) + alpha ||W||_1`` subject to
    ``h(W) = 0`` by an augmented Lagrangian.  ``W`` is split into nonnegative
    parts so the l1 term is linear and L-BFGS-B handles the bounds.  The
    penalty grows tenfold whenever ``h`` fails to drop by a quarter; the
    multiplier ascends by ``rho * h``.  Entries below ``w_tol`` are then
    zeroed and the support checked for cycles exactly.
    """
    y = as_signal_array(y)
    if h_kind not in H_KINDS:
        raise ParamError(f"unknown acyclicity function {h_kind!r}")
    if alpha < 0:
        raise ParamError("alpha must be nonnegative")
    n, T = y.shape
    if T < 1:
        raise InsufficientSamples("no samples")
    cov = y @ y.T / T
    offdiag = ~np.eye(n, dtype=bool)
    bounds = [(0.0, 0.0) if i == j else (0.0, None)
              for _ in range(2) for i in range(n) for j in range(n)]
    upper_zero = np.array([b[1] == 0.0 for b in bounds])

    w_est = np.zeros((n, n)) if w0 is None else np.array(w0, dtype=np.float64) * offdiag
    if h_kind == "ldet" and spectral_radius(w_est * w_est) >= s:
        # shrink into the domain of the log-det characterization
        w_est *= 0.9 * np.sqrt(s / spectral_radius(w_est * w_est))

    def h_of(wm):
        try:
            return acyclicity(wm, h_kind, s)
        except DomainError:
            return None

    def loss(wm):
        # 0.5/T ||Y - WY||^2 = 0.5 tr((I-W) C (I-W)')
        r = np.eye(n) - wm
        return 0.5 * np.sum((r @ cov) * r), -(r @ cov)

    rho, mu = 1.0, 0.0
    h_val = h_of(w_est)[0]
    h_trace = [h_val]
    xw = np.concatenate([np.maximum(w_est, 0).ravel(), np.maximum(-w_est, 0).ravel()])
    options = {} if inner_max_iter is None else {"maxiter": inner_max_iter}

    def obj(xv):
        wm = (xv[: n * n] - xv[n * n:]).reshape(n, n)
        hv = h_of(wm)
        if hv is None:
            return np.inf, np.zeros_like(xv)
        h, gh = hv
        if not np.isfinite(h):
            return np.inf, np.zeros_like(xv)
        lv, gl = loss(wm)
        f = lv + 0.5 * rho * h * h + mu * h + alpha * xv.sum()
        g = (gl + (rho * h + mu) * gh).ravel()
        return f, np.concatenate([g + alpha, -g + alpha])

    it = 0
    if h_val <= h_tol and w0 is not None:
        # already acyclic: check whether the warm start is stationary
        f0, g0 = obj(xw)
        lo = np.array([b[0] for b in bounds])
        proj = np.where(upper_zero, 0.0, np.maximum(xw - g0, lo))
        if np.max(np.abs(proj - xw)) <= 1e-10:
            return _finish(w_est, h_val, h_trace, w_tol, rho, 0)
    h_val = np.inf  # the first outer step always counts as progress
    while it < max_outer:
        it += 1
        while rho < rho_max:
            sol = minimize(obj, xw, jac=True, method="L-BFGS-B", bounds=bounds, options=options)
            x_new = sol.x
            if h_kind == "ldet":
                # L-BFGS-B stalls when its line search leaves the log-det domain
                x_new = _projected_bb(obj, x_new, upper_zero, inner_max_iter or 20000)
            w_new = (x_new[: n * n] - x_new[n * n:]).reshape(n, n)
            hv = h_of(w_new)
            h_new = np.inf if hv is None else hv[0]
            if h_new > 0.25 * h_val:
                rho *= 10.0
            else:
                break
        xw, w_est, h_val = x_new, w_new, h_new
        h_trace.append(h_val)
        mu += rho * h_val
        if h_val <= h_tol or rho >= rho_max:
            break
    return _finish(w_est, h_val, h_trace, w_tol, rho, it)


def _projected_bb(fun, x, fixed, max_iter, tol=1e-10):
    """Projected gradient onto ``x >= 0`` (``fixed`` entries pinned at 0).

    Barzilai-Borwein trial steps with Armijo backtracking; infinite values
    (points outside the objective's domain) are simply backtracked from.
    """
    def proj(v):
        v = np.maximum(v, 0.0)
        v[fixed] = 0.0
        return v

    f, g = fun(x)
    step = 1.0 / max(np.linalg.norm(g), 1.0)
    for _ in range(max_iter):
        if np.max(np.abs(proj(x - g) - x)) <= tol:
            break
        t = step
        while True:
            xn = proj(x - t * g)
            fn, gn = fun(xn)
            if np.isfinite(fn) and fn <= f + 1e-4 * g @ (xn - x):
                break
            t *= 0.5
            if t < 1e-20:
                return x
        s_, y_ = xn - x, gn - g
        sy = s_ @ y_
        step = min(max((s_ @ s_) / sy, 1e-12), 1e12) if sy > 0 else 2.0 * t
        if abs(f - fn) <= 1e-15 * max(1.0, abs(f)):
            x = xn
            break
        x, f, g = xn, fn, gn
    return x


def _finish(w_raw, h_val, h_trace, w_tol, rho, it):
    w = np.where(np.abs(w_raw) > w_tol, w_raw, 0.0)
    np.fill_diagonal(w, 0.0)
    return DagResult(w, float(h_val), not has_cycle(w), w_raw, tuple(h_trace), float(rho), it)


# --------------------------------------------------------------------------
# sparse VAR
# --------------------------------------------------------------------------

def lagged_design(y, order):
    """Regressors for ``t = L..T-1``: row ``j*L + (l-1)`` holds ``y_j(t - l)``."""
    y = as_signal_array(y)
    n, T = y.shape
    if T <= order:
        raise InsufficientSamples(f"need more than L={order} samples")
    z = np.empty((n * order, T - order))
    for ell in range(1, order + 1):
        z[(ell - 1)::order] = y[:, order - ell:T - ell]
    return z, y[:, order:]


def varm_lambda_max(y, order):
    """Smallest group penalty at which every lag group is zero."""
    z, target = lagged_design(y, order)
    n = target.shape[0]
    c = 2.0 * z @ target.T
    return float(np.sqrt((c.reshape(n, order, n) ** 2).sum(axis=1)).max())


def varm_fit(y, order=1, lam=0.0, tol=1e-12, max_iter=10000):
    """Group-lasso VAR(L): ``sum_t ||y_t - sum_l W_l y_{t-l}||^2 + lam sum_ij ||w_ij||``.

    ``w_ij`` stacks the ``L`` lag coefficients of ``j -> i``; rows of the
    model are fitted independently by exact block coordinate descent.  With
    ``lam=0`` and a full-rank design the least-squares solution is computed
    directly.
    """
    if order < 1:
        raise ParamError("the model order must be at least 1")
    if lam < 0:
        raise ParamError("lambda must be nonnegative")
    z, target = lagged_design(y, order)
    n = target.shape[0]
    if lam == 0.0 and np.linalg.matrix_rank(z) == z.shape[0]:
        # unpenalized and identifiable: ordinary least squares, solved directly
        coef = np.linalg.lstsq(z.T, target.T, rcond=None)[0].T
        resid = target - coef @ z
        lags = coef.reshape(n, n, order).transpose(2, 0, 1)
        return VarmModel(tuple(lags), (float(np.sum(resid * resid)),))
    G = 2.0 * z @ z.T
    eigs = kernels.group_eigs(G, order)
    lags = np.zeros((order, n, n))
    traces = []
    for i in range(n):
        coef, _, trace = kernels.group_bcd(G, 2.0 * z @ target[i], lam, gsize=order, tol=tol,
                                           max_iter=max_iter, eigs=eigs)
        traces.append(np.asarray(trace) + target[i] @ target[i])
        lags[:, i, :] = coef.reshape(n, order).T
    return VarmModel(tuple(lags), _merge_traces(traces))


def simulate_var(lags, n_samples, noise_scale=1.0, seed=0, y0=None, burn_in=0):
    """Trajectory of ``y_t = sum_l W_l y_{t-l} + e_t``."""
    lags = [np.asarray(a, dtype=np.float64) for a in lags]
    L, n = len(lags), lags[0].shape[0]
    rng = np.random.default_rng(seed)
    total = int(n_samples) + burn_in
    y = np.zeros((n, total + L))
    y[:, :L] = rng.standard_normal((n, L)) if y0 is None else np.asarray(y0).reshape(n, L)
    for t in range(L, total + L):
        y[:, t] = sum(lags[ell] @ y[:, t - 1 - ell] for ell in range(L))
        y[:, t] += noise_scale * rng.standard_normal(n)
    return SignalMatrix(y[:, L + burn_in:])


def varm_bic(y, orders, lam=0.0):
    """Gaussian BIC over candidate orders on a common estimation window.

    Returns ``(best_order, {order: bic})``.
    """
    y = as_signal_array(y)
    orders = sorted(int(o) for o in orders)
    top = orders[-1]
    n, T = y.shape
    if T - top <= n:
        raise InsufficientSamples("too few samples for the largest order")
    scores = {}
    for L in orders:
        model = varm_fit(y[:, top - L:], L, lam)
        z, target = lagged_design(y[:, top - L:], L)
        coef = np.hstack([np.stack(model.lags)[:, :, j].T for j in range(n)])
        resid = target - coef @ z
        t_eff = resid.shape[1]
        sigma = resid @ resid.T / t_eff
        sign, logdet = np.linalg.slogdet(sigma)
        if sign <= 0:
            logdet = -np.inf
        k = int(np.count_nonzero(np.stack(model.lags)))
        scores[L] = float(t_eff * logdet + k * np.log(t_eff))
    best = min(scores, key=lambda o: (scores[o], o))
    return best, scores
