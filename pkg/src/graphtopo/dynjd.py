"""Time-varying topologies and topology identification by joint diagonalization.

Three trackers couple per-slot estimators along time.  Smooth-signal graph
learning and the graphical lasso get a squared-Frobenius penalty between
consecutive slots; cascade SEMs use exponentially weighted least squares.  The joint
diagonalization estimator recovers ``H = I - W`` from segment-wise output
correlations, with anchor entries removing the permutation ambiguity.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh
from scipy.optimize import linear_sum_assignment

from . import kernels
from .core import Graph, as_signal_array, vector_to_matrix
from .errors import (AmbiguityError, AnchorError, EmptyInput, EmptySlot, ParamError,
                     ShapeError)
from .gmrf import PrecisionEstimate, glasso_objective
from .smoothlearn import (DistanceVector, _as_distances, learn_graph, primal_objective)

JD_RIDGE = 1e-8


@dataclass(frozen=True)
class GraphSequence:
    graphs: tuple

    def __post_init__(self):
        gs = tuple(self.graphs)
        if not gs:
            raise EmptyInput("empty graph sequence")
        n = gs[0].n_nodes
        if any(g.n_nodes != n for g in gs):
            raise ShapeError("all slots must share the node set")
        object.__setattr__(self, "graphs", gs)

    def __len__(self):
        return len(self.graphs)

    def __getitem__(self, t):
        return self.graphs[t]

    @property
    def n_nodes(self):
        return self.graphs[0].n_nodes

    def temporal_differences(self):
        """Frobenius norms ``||W_t - W_{t-1}||`` for ``t = 1..T-1``."""
        return np.array([np.linalg.norm(b.weights - a.weights)
                         for a, b in zip(self.graphs[:-1], self.graphs[1:])])


# --------------------------------------------------------------------------
# time-varying smooth-signal graph learning
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TvSmoothResult:
    sequence: GraphSequence
    weights: np.ndarray
    objective_trace: tuple = field(repr=False)
    sweeps: int = 0
    converged: bool = False


def tv_smooth_objective(ws, es, alpha, beta, eta):
    """Sum of per-slot smooth-learning objectives plus ``eta ||W_t - W_{t-1}||_F^2``."""
    total = sum(primal_objective(w, e, alpha, beta) for w, e in zip(ws, es))
    # ||W_t - W_{t-1}||_F^2 counts each edge twice
    total += eta * sum(2.0 * np.sum((b - a) ** 2) for a, b in zip(ws[:-1], ws[1:]))
    return float(total)


def tv_smooth_learn(distances, alpha, beta, eta, tol=1e-8, max_sweeps=500, inner_tol=1e-12,
                    inner_max_iter=200000):
    """Jointly learn one graph per slot with temporal smoothness.

    Block coordinate descent over slots.  With the neighbours fixed the slot
    problem is the static one with distances ``e_t - 2 eta sum_nb w_nb`` and
    quadratic weight ``beta + 2 eta n_nb``, solved exactly by dual FISTA.
    Slots start from the consensus solution (all slots equal), which is the
    ``eta -> infinity`` limit.
    """
    es = [_as_distances(e) for e in distances]
    if not es:
        raise EmptyInput("no slots")
    if not alpha > 0 or not beta > 0:
        raise ParamError("alpha and beta must be positive")
    if eta < 0:
        raise ParamError("eta must be nonnegative")
    n = es[0].n_nodes
    if any(e.n_nodes != n for e in es):
        raise ShapeError("all slots must have the same node count")
    T = len(es)
    kw = dict(tol=inner_tol, max_iter=inner_max_iter)
    if eta == 0 or T == 1:
        ws = [learn_graph(e, alpha, beta, **kw).w.w for e in es]
        obj = tv_smooth_objective(ws, es, alpha, beta, eta)
        return _tv_smooth_result(ws, n, (obj,), 0, True)
    total = DistanceVector(sum(e.e for e in es), n)
    consensus = learn_graph(total, T * alpha, T * beta, **kw)
    ws = [consensus.w.w.copy() for _ in range(T)]
    lams = [consensus.dual.lam / T for _ in range(T)]
    trace = [tv_smooth_objective(ws, es, alpha, beta, eta)]
    converged = False
    sweep = 0
    for sweep in range(1, max_sweeps + 1):
        change = 0.0
        for t in range(T):
            nbs = [s for s in (t - 1, t + 1) if 0 <= s < T]
            e_eff = es[t].e - 2.0 * eta * sum(ws[s] for s in nbs)
            res = learn_graph(DistanceVector(e_eff, n), alpha, beta + 2.0 * eta * len(nbs),
                              lam0=lams[t], **kw)
            change = max(change, float(np.max(np.abs(res.w.w - ws[t]), initial=0.0)))
            ws[t] = res.w.w
            lams[t] = res.dual.lam
        trace.append(tv_smooth_objective(ws, es, alpha, beta, eta))
        if change <= tol:
            converged = True
            break
    return _tv_smooth_result(ws, n, tuple(trace), sweep, converged)


def _tv_smooth_result(ws, n, trace, sweeps, converged):
    seq = GraphSequence(tuple(Graph(vector_to_matrix(w, n)) for w in ws))
    return TvSmoothResult(seq, np.array(ws), trace, sweeps, converged)


# --------------------------------------------------------------------------
# time-varying graphical lasso
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TvGlassoResult:
    estimates: tuple
    objective_trace: tuple = field(repr=False)
    iterations: int = 0
    converged: bool = False

    @property
    def thetas(self):
        return [e.theta for e in self.estimates]

    def temporal_differences(self):
        th = self.thetas
        return np.array([np.linalg.norm(b - a) for a, b in zip(th[:-1], th[1:])])


def tv_glasso_objective(thetas, covs, lam, eta, penalize_diagonal=True):
    """Sum of negated glasso objectives plus ``eta ||Theta_t - Theta_{t-1}||_F^2`` (minimized)."""
    total = -sum(glasso_objective(th, s, lam, penalize_diagonal) for th, s in zip(thetas, covs))
    total += eta * sum(np.sum((b - a) ** 2) for a, b in zip(thetas[:-1], thetas[1:]))
    return float(total)


def _soft(x, thr, penalize_diagonal):
    out = np.sign(x) * np.maximum(np.abs(x) - thr, 0.0)
    if not penalize_diagonal:
        np.fill_diagonal(out, np.diag(x))
    return out


def tv_graphical_lasso(covariances, lam, eta, tol=1e-9, max_iter=50000, penalize_diagonal=True):
    """Graphical lasso per slot, coupled by ``eta ||Theta_t - Theta_{t-1}||_F^2``.

    The smooth part (negative log-likelihoods plus the temporal coupling) is
    handled by a gradient step on all slots at once and the l1 term by
    entrywise soft thresholding.  Trial steps come from a Barzilai-Borwein
    rule and are halved until every slot stays PD and the quadratic
    majorization holds, so the joint objective never increases.  With
    ``eta = 0`` the slots decouple exactly.  Stops when no entry moves by
    more than ``tol``.
    """
    covs = [np.asarray(getattr(c, "sigma", c), dtype=np.float64) for c in covariances]
    if not covs:
        raise EmptyInput("no slots")
    if lam < 0 or eta < 0:
        raise ParamError("lambda and eta must be nonnegative")
    n = covs[0].shape[0]
    if any(c.shape != (n, n) for c in covs):
        raise ShapeError("all covariances must be N x N")
    s = np.stack(covs)
    ld = lam if penalize_diagonal else 0.0
    theta = np.stack([np.diag(1.0 / (np.diag(c) + ld)) for c in covs])

    def smooth(th):
        val = 0.0
        for t in range(th.shape[0]):
            chol = np.linalg.cholesky(th[t])
            val += -2.0 * np.log(np.diag(chol)).sum() + np.sum(s[t] * th[t])
        return val + eta * np.sum((th[1:] - th[:-1]) ** 2)

    def grad(th):
        g = -np.linalg.inv(th) + s
        diff = th[1:] - th[:-1]
        g[1:] += 2.0 * eta * diff
        g[:-1] -= 2.0 * eta * diff
        return 0.5 * (g + np.swapaxes(g, 1, 2))

    def penalty(th):
        pen = np.abs(th).sum()
        if not penalize_diagonal:
            pen -= np.abs(np.diagonal(th, axis1=1, axis2=2)).sum()
        return lam * pen

    f = smooth(theta)
    g = grad(theta)
    trace = [f + penalty(theta)]
    step = 1.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        t = step
        while True:
            cand = np.stack([_soft(x, t * lam, penalize_diagonal) for x in theta - t * g])
            cand = 0.5 * (cand + np.swapaxes(cand, 1, 2))
            d = cand - theta
            try:
                fc = smooth(cand)
            except np.linalg.LinAlgError:
                fc = np.inf
            if fc <= f + np.sum(g * d) + np.sum(d * d) / (2.0 * t):
                break
            t *= 0.5
            if t < 1e-20:
                break
        if t < 1e-20:
            break
        gc = grad(cand)
        sd = np.sum(d * d)
        yd = np.sum(d * (gc - g))
        step = min(max(sd / yd if yd > 0 else 2.0 * t, 1e-10), 1e6)
        theta, f, g = cand, fc, gc
        trace.append(f + penalty(theta))
        if np.max(np.abs(d)) <= tol:
            converged = True
            break
    ests = tuple(PrecisionEstimate(th, converged, it) for th in theta)
    return TvGlassoResult(ests, tuple(trace), it, converged)


# --------------------------------------------------------------------------
# exponentially weighted SEM tracking
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SemTrack:
    sequence: GraphSequence
    loadings: np.ndarray

    @property
    def weights(self):
        return np.stack([g.weights for g in self.sequence.graphs])


def dynamic_sem_track(cascades, x, gamma=1.0, alpha=0.0, tol=1e-12, max_iter=10000):
    """Track ``W_t`` and ``b_t`` over slots from cascade data.

    ``cascades`` has shape ``(T, N, C)``: slot ``t`` holds the N x C matrix
    ``Y_t`` whose columns are cascades; ``x`` is the N x C exogenous input.
    At slot ``t`` the estimate minimizes
    ``sum_{s<=t} gamma^{t-s} ||Y_s - W Y_s - diag(b) X||_F^2 + alpha_t ||W||_1``
    over zero-diagonal ``W``.  Per-row Gram matrices are updated recursively
    and each slot is warm-started from the previous one.
    """
    ys = np.asarray(cascades, dtype=np.float64)
    if ys.ndim != 3:
        raise ShapeError("cascades must have shape (T, N, C)")
    T, n, C = ys.shape
    if T == 0:
        raise EmptyInput("no slots")
    if C < 1:
        raise EmptySlot("each slot needs at least one cascade")
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (n, C):
        raise ShapeError("X must be N x C")
    if not 0.0 < gamma <= 1.0:
        raise ParamError("gamma must lie in (0, 1]")
    alphas = np.broadcast_to(np.asarray(alpha, dtype=np.float64), (T,))
    if np.any(alphas < 0):
        raise ParamError("alpha must be nonnegative")
    grams = np.zeros((n, n, n))
    lins = np.zeros((n, n))
    coefs = np.zeros((n, n))
    ws, bs = [], []
    for t in range(T):
        y = ys[t]
        w = np.zeros((n, n))
        b = np.zeros(n)
        for i in range(n):
            others = np.delete(np.arange(n), i)
            z = np.vstack([y[others], x[i:i + 1]])
            grams[i] = gamma * grams[i] + 2.0 * z @ z.T
            lins[i] = gamma * lins[i] + 2.0 * z @ y[i]
            pen = np.append(np.full(n - 1, alphas[t]), 0.0)
            coefs[i], _, _ = kernels.group_bcd(grams[i], lins[i], pen, x0=coefs[i], tol=tol,
                                               max_iter=max_iter)
            w[i, others] = coefs[i, :-1]
            b[i] = coefs[i, -1]
        ws.append(Graph(w, directed=True))
        bs.append(b)
    return SemTrack(GraphSequence(tuple(ws)), np.array(bs))


# --------------------------------------------------------------------------
# joint diagonalization
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class JdProblem:
    """Correlation slices ``R_m`` and anchors ``(i, j, W_ij)`` (0-based)."""

    slices: tuple
    anchors: tuple = ()

    def __post_init__(self):
        sl = tuple(np.asarray(r, dtype=np.float64) for r in self.slices)
        if len(sl) < 2:
            raise AmbiguityError("joint diagonalization needs at least two slices; "
                                 "with one slice every eigenbasis is a solution")
        n = sl[0].shape[0]
        for r in sl:
            if r.shape != (n, n):
                raise ShapeError("slices must be N x N")
            if not np.allclose(r, r.T, rtol=0, atol=1e-12 * max(1.0, np.abs(r).max())):
                raise ParamError("slices must be symmetric")
        anchors = []
        for i, j, v in self.anchors:
            i, j, v = int(i), int(j), float(v)
            if not (0 <= i < n and 0 <= j < n):
                raise AnchorError(f"anchor ({i}, {j}) outside the node range")
            if i == j and v != 0.0:
                raise AnchorError(f"anchor on the diagonal ({i}, {i}) conflicts with h_ii = 1")
            anchors.append((i, j, v))
        seen = {}
        for i, j, v in anchors:
            if seen.setdefault((i, j), v) != v:
                raise AnchorError(f"conflicting anchors for entry ({i}, {j})")
        object.__setattr__(self, "slices", tuple(0.5 * (r + r.T) for r in sl))
        object.__setattr__(self, "anchors", tuple(a for a in anchors if a[0] != a[1]))

    @property
    def n_nodes(self):
        return self.slices[0].shape[0]


@dataclass(frozen=True)
class JdResult:
    h: np.ndarray
    w: Graph
    residual: float
    iterations: int
    objective_trace: tuple = field(default=(), repr=False)
    diagnostics: dict = field(default_factory=dict)


def jd_objective(h, slices):
    total = 0.0
    for r in slices:
        m = h @ r @ h.T
        total += np.sum(m * m) - np.sum(np.diag(m) ** 2)
    return float(total)


def segment_correlations(y, boundaries):
    """Sample correlation ``Y_s Y_s' / |s|`` for each segment ``[b_k, b_{k+1})``.

    ``boundaries`` lists the segment starts after 0 (e.g. ``[100, 250]`` gives
    three segments).  Segments with at most N samples get a ridge of 1e-8 I.
    """
    y = as_signal_array(y)
    n, T = y.shape
    cuts = [0] + sorted(int(b) for b in boundaries) + [T]
    out = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b <= a:
            raise EmptySlot(f"segment [{a}, {b}) is empty")
        seg = y[:, a:b]
        r = seg @ seg.T / (b - a)
        if b - a <= n:
            r = r + JD_RIDGE * np.eye(n)
        out.append(r)
    return out


def _fixed_entries(n, anchors):
    fixed = [dict() for _ in range(n)]
    for i in range(n):
        fixed[i][i] = 1.0
    for i, j, v in anchors:
        fixed[i][j] = -v
    return fixed


def _initial_rows(problem, fixed):
    """Generalized eigenvectors of a slice pencil, matched to nodes.

    For exactly diagonalizable slices the rows of ``H`` are eigenvectors of
    the pencil; each is assigned to the node it will be normalized on so that
    anchors are best respected (Hungarian matching).
    """
    n = problem.n_nodes
    sl = problem.slices
    rng = np.random.default_rng(0)
    b = sum(sl) + 1e-12 * np.trace(sum(sl)) * np.eye(n)
    a = sum(c * r for c, r in zip(rng.standard_normal(len(sl)), sl))
    _, vecs = eigh(a, b)
    rows = vecs.T
    cost = np.zeros((n, n))
    for k in range(n):
        v = rows[k] / np.linalg.norm(rows[k])
        for i in range(n):
            piv = v[i]
            if abs(piv) < 1e-12:
                cost[k, i] = 1e6
                continue
            scaled = v / piv
            mis = sum((scaled[j] - val) ** 2 for j, val in fixed[i].items() if j != i)
            cost[k, i] = 1e3 * mis - np.log(abs(piv))
    ks, nodes = linear_sum_assignment(cost)
    h = np.zeros((n, n))
    for k, i in zip(ks, nodes):
        h[i] = rows[k] / rows[k][i]
    for i in range(n):
        for j, val in fixed[i].items():
            h[i, j] = val
    return h, float(cost[ks, nodes].max())


def jd_fit(problem, tol=1e-14, max_iter=1000, h0=None):
    """Anchored joint diagonalization: ``min_H sum_m ||offdiag(H R_m H')||_F^2``.

    Subject to ``h_ii = 1`` and ``h_ij = -W_ij`` on anchors.  Row-wise block
    coordinate descent: with the other rows fixed the objective is the
    quadratic ``h_i' Q_i h_i`` with ``Q_i = sum_m sum_{k != i} R_m h_k h_k' R_m``,
    minimized exactly over the free entries.  Stops when the objective
    changes by at most ``tol`` (absolute, or relative when larger than 1).
    """
    if not isinstance(problem, JdProblem):
        problem = JdProblem(*problem)
    n = problem.n_nodes
    sl = problem.slices
    fixed = _fixed_entries(n, problem.anchors)
    if h0 is None:
        h, init_cost = _initial_rows(problem, fixed)
    else:
        h = np.array(h0, dtype=np.float64)
        init_cost = float("nan")
        for i in range(n):
            for j, val in fixed[i].items():
                h[i, j] = val
    prev = jd_objective(h, sl)
    trace = [prev]
    it = 0
    for it in range(1, max_iter + 1):
        for i in range(n):
            rh = [r @ h.T for r in sl]  # columns R_m h_k
            q = np.zeros((n, n))
            for m in range(len(sl)):
                cols = np.delete(rh[m], i, axis=1)
                q += cols @ cols.T
            fix_idx = np.array(sorted(fixed[i]))
            fix_val = np.array([fixed[i][j] for j in fix_idx])
            free = np.setdiff1d(np.arange(n), fix_idx)
            if free.size == 0:
                continue
            rhs = -q[np.ix_(free, fix_idx)] @ fix_val
            sol, *_ = np.linalg.lstsq(q[np.ix_(free, free)], rhs, rcond=None)
            cand = h[i].copy()
            cand[free] = sol
            old = h[i].copy()
            f_old = jd_objective(h, sl)
            h[i] = cand
            if jd_objective(h, sl) > f_old:
                h[i] = old  # numerical safeguard; the exact block minimizer cannot increase
        cur = jd_objective(h, sl)
        trace.append(cur)
        if abs(prev - cur) <= tol * max(1.0, abs(prev)):
            break
        prev = cur
    w = np.eye(n) - h
    np.fill_diagonal(w, 0.0)
    diag = {"anchors": len(problem.anchors), "init_assignment_cost": init_cost,
            "anchor_max_violation": max((abs(h[i, j] + v) for i, j, v in problem.anchors),
                                        default=0.0)}
    return JdResult(h, Graph(w, directed=True), trace[-1], it, tuple(trace), diag)


def equivalent_up_to_permutation_scaling(h, h_ref, tol=1e-6):
    """True if the rows of ``h`` are rescaled rows of ``h_ref`` in some order."""
    h = np.asarray(h)
    h_ref = np.asarray(h_ref)
    n = h.shape[0]
    a = h / np.linalg.norm(h, axis=1, keepdims=True)
    b = h_ref / np.linalg.norm(h_ref, axis=1, keepdims=True)
    cos = np.abs(a @ b.T)
    rows, cols = linear_sum_assignment(-cos)
    return bool(np.all(cos[rows, cols] >= 1.0 - tol))


__all__ = [
    "GraphSequence", "TvSmoothResult", "TvGlassoResult", "SemTrack", "JdProblem", "JdResult",
    "tv_smooth_learn", "tv_smooth_objective", "tv_graphical_lasso", "tv_glasso_objective",
    "dynamic_sem_track", "jd_fit", "jd_objective", "segment_correlations",
    "equivalent_up_to_permutation_scaling",
]
