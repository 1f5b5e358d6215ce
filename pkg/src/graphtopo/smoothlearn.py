"""Graph learning from smooth signals.

The problem is

    min_{w >= 0}  2 e'w + beta ||w||^2 - alpha * sum(log(S w))

where ``e`` holds the squared nodal distances and ``S`` maps edge weights to
degrees.  The log barrier keeps every degree positive, so no node is left
isolated.  The solver runs FISTA on the dual.  The Lagrangian minimizer and
the proximal step of the barrier's conjugate both have closed forms, so each
iteration costs O(N^2).
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import (DegreeOperator, EdgeVector, as_signal_array, edge_index, laplacian,
                   n_pairs, nodes_from_pairs)
from .errors import EmptyInput, ParamError, ShapeError, ZeroSignal


@dataclass(frozen=True)
class DistanceVector:
    """Squared nodal distances in the shared edge order.

    Entries may be negative for discriminative effective distances.
    """

    e: np.ndarray
    n_nodes: int

    def __post_init__(self):
        e = np.asarray(self.e, dtype=np.float64).ravel()
        if e.shape[0] != n_pairs(self.n_nodes):
            raise ShapeError(f"distance vector of length {e.shape[0]} does not match N={self.n_nodes}")
        if not np.all(np.isfinite(e)):
            raise ParamError("distances must be finite")
        e = e.copy()
        e.setflags(write=False)
        object.__setattr__(self, "e", e)

    @classmethod
    def from_array(cls, e):
        e = np.asarray(e, dtype=np.float64).ravel()
        return cls(e, nodes_from_pairs(e.shape[0]))


@dataclass(frozen=True)
class DualState:
    lam: np.ndarray
    omega: np.ndarray
    t: float
    k: int

    def __post_init__(self):
        if self.t < 1.0:
            raise ParamError("momentum t must be at least 1")


@dataclass(frozen=True)
class SmoothLearnResult:
    w: EdgeVector
    dual: DualState
    primal_obj: float
    dual_obj: float
    iterations: int
    converged: bool
    history: np.ndarray = field(default=None, repr=False)

    @property
    def graph(self):
        return self.w.to_graph()

    @property
    def duality_gap(self):
        return self.primal_obj + self.dual_obj


def _as_distances(e):
    if isinstance(e, DistanceVector):
        return e
    return DistanceVector.from_array(e)


def distance_vector(y):
    """``E_ij = ||y_i - y_j||^2`` between node rows of ``y``, edge-ordered."""
    y = as_signal_array(y)
    n = y.shape[0]
    sq = np.einsum("it,it->i", y, y)
    gram = y @ y.T
    rows, cols = edge_index(n)
    e = sq[rows] + sq[cols] - 2.0 * gram[rows, cols]
    # cancellation can leave tiny negatives for identical rows
    return DistanceVector(np.maximum(e, 0.0), n)


def primal_objective(w, e, alpha, beta):
    e = _as_distances(e)
    w = np.asarray(w, dtype=np.float64)
    d = DegreeOperator(e.n_nodes).apply(w)
    if np.any(d <= 0):
        return math.inf
    return float(2.0 * w @ e.e + beta * w @ w - alpha * np.log(d).sum())


def dual_objective(lam, e, alpha, beta):
    """Minimization-form dual; its optimum equals minus the primal optimum."""
    e = _as_distances(e)
    lam = np.asarray(lam, dtype=np.float64)
    if np.any(lam <= 0):
        return math.inf
    z = DegreeOperator(e.n_nodes).adjoint(lam) - 2.0 * e.e
    fstar = np.sum(np.maximum(z, 0.0) ** 2) / (4.0 * beta)
    gstar = np.sum(-alpha + alpha * np.log(alpha) - alpha * np.log(lam))
    return float(fstar + gstar)


def primal_from_dual(lam, e, beta):
    e = _as_distances(e)
    z = DegreeOperator(e.n_nodes).adjoint(lam) - 2.0 * e.e
    return np.maximum(z / (2.0 * beta), 0.0)


def learn_graph(e, alpha, beta, tol=1e-8, max_iter=100000, lam0=None, record=0, backend=None):
    """Learn edge weights from a :class:`DistanceVector` by dual FISTA.

    ``record`` keeps the first ``record`` primal iterates (one row per
    iteration) in ``result.history``.  Stops once the dual iterate moves by
    at most ``tol`` relative to its norm.
    """
    if not alpha > 0 or not beta > 0:
        raise ParamError("alpha and beta must be positive")
    e = _as_distances(e)
    n = e.n_nodes
    rows, cols = edge_index(n)
    lam0 = np.zeros(n) if lam0 is None else np.asarray(lam0, dtype=np.float64)
    if lam0.shape != (n,):
        raise ShapeError("lam0 must have one entry per node")
    lam, omega, t, k, hist = kernels.fista_dual(e.e, rows, cols, n, alpha, beta, lam0, tol,
                                                max_iter, n_record=record, backend=backend)
    converged = k < max_iter
    w = primal_from_dual(lam, e, beta)
    return SmoothLearnResult(
        w=EdgeVector(w, n),
        dual=DualState(lam, omega, float(t), int(k)),
        primal_obj=primal_objective(w, e, alpha, beta),
        dual_obj=dual_objective(lam, e, alpha, beta),
        iterations=int(k),
        converged=bool(converged),
        history=hist if record else None,
    )


def envelope_bound(k, lam0, lam_star, beta, n_nodes):
    k = np.asarray(k, dtype=np.float64)
    gap = np.linalg.norm(np.asarray(lam0) - np.asarray(lam_star))
    return np.sqrt(2.0 * (n_nodes - 1)) * gap / (beta * k)


def convergence_envelope(history, lam_star, w_star, beta, n_nodes, lam0=None, atol=1e-10):
    """Check ``||w_k - w*|| <= sqrt(2(N-1)) ||lam_0 - lam*|| / (beta k)`` for every row.

    ``history[k-1]`` is the primal iterate after ``k`` dual steps.  ``atol``
    absorbs the rounding error of the numerically computed reference.
    """
    if history is None or len(history) == 0:
        raise EmptyInput("no recorded iterates")
    history = np.asarray(history, dtype=np.float64)
    lam0 = np.zeros(n_nodes) if lam0 is None else lam0
    k = np.arange(1, history.shape[0] + 1)
    err = np.linalg.norm(history - np.asarray(w_star)[None, :], axis=1)
    return bool(np.all(err <= envelope_bound(k, lam0, lam_star, beta, n_nodes) + atol))


def discriminative_distances(class_distances, gamma, target):
    """Effective distances ``e_c - gamma * sum_{k != c} e_k`` for class ``target``."""
    if gamma < 0:
        raise ParamError("gamma must be nonnegative")
    ds = [_as_distances(d) for d in class_distances]
    if not ds:
        raise EmptyInput("no class distances")
    if not 0 <= target < len(ds):
        raise ParamError(f"class index {target} out of range for {len(ds)} classes")
    n = ds[0].n_nodes
    if any(d.n_nodes != n for d in ds):
        raise ShapeError("all classes must have the same node count")
    others = sum((d.e for i, d in enumerate(ds) if i != target), np.zeros_like(ds[0].e))
    return DistanceVector(ds[target].e - gamma * others, n)


def learn_class_graphs(class_signals, alpha, beta, gamma=0.0, **kw):
    """One graph per class from the discriminative objective."""
    dists = [distance_vector(y) for y in class_signals]
    return [learn_graph(discriminative_distances(dists, gamma, c), alpha, beta, **kw).graph
            for c in range(len(dists))]


def default_n_low(n_nodes):
    return max(1, math.ceil(n_nodes / 10))


def lowpass_energy(g, x, n_low):
    lap = laplacian(g)
    _, vecs = np.linalg.eigh(lap)
    coef = vecs[:, :n_low].T @ x
    return float(coef @ coef / (x @ x))


def gft_classify(class_graphs, signal, n_low=None, tie_tol=1e-12):
    """Index of the class whose K lowest graph frequencies capture most of ``signal``.

    Ties within ``tie_tol`` go to the lowest class index.
    """
    if not class_graphs:
        raise EmptyInput("no class graphs")
    x = np.asarray(signal, dtype=np.float64).ravel()
    n = class_graphs[0].n_nodes
    if any((g.n_nodes != n) for g in class_graphs):
        raise ShapeError("class graphs disagree on the node count")
    if x.shape[0] != n:
        raise ShapeError("signal length does not match the graphs")
    if not np.any(x):
        raise ZeroSignal("cannot classify the zero signal")
    k = default_n_low(n) if n_low is None else int(n_low)
    if not 1 <= k < n:
        raise ParamError("n_low must satisfy 1 <= K < N")
    energy = np.array([lowpass_energy(g, x, k) for g in class_graphs])
    best = energy.max()
    return int(np.nonzero(energy >= best - tie_tol)[0][0])


__all__ = [
    "DistanceVector", "DualState", "SmoothLearnResult", "distance_vector",
    "primal_objective", "dual_objective", "primal_from_dual", "learn_graph", "envelope_bound",
    "convergence_envelope", "discriminative_distances", "learn_class_graphs", "gft_classify",
    "lowpass_energy", "default_n_low",
]
