"""Graph and signal containers, conversions, generators and recovery metrics.

All undirected edge vectors share one ordering: the upper triangle of ``W``
read column by column, i.e. ``(0,1), (0,2), (1,2), (0,3), (1,3), (2,3), ...``.
For directed graphs ``W[i, j] != 0`` means an edge from node ``j`` into node
``i`` (the structural-equation convention ``y = W y + ...``).
"""
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DirectedGraphError, ParamError, ShapeError

WEIGHT_TOL = 1e-6


def _frozen(a):
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SignalMatrix:
    """N x T matrix of nodal observations; column ``t`` is the snapshot y_t."""

    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        if d.ndim != 2:
            raise ShapeError(f"signal matrix must be 2-D, got shape {d.shape}")
        if d.shape[0] < 2:
            raise ShapeError("a signal matrix needs at least two nodes")
        if not np.all(np.isfinite(d)):
            raise ParamError("signal matrix contains non-finite entries")
        object.__setattr__(self, "data", _frozen(d))

    @property
    def n_nodes(self):
        return self.data.shape[0]

    @property
    def n_samples(self):
        return self.data.shape[1]


def as_signal_array(y):
    """Accept a SignalMatrix or array-like and return the validated array."""
    if isinstance(y, SignalMatrix):
        return y.data
    return SignalMatrix(y).data


@dataclass(frozen=True)
class Graph:
    """Dense weighted adjacency.

    ``signed`` relaxes the nonnegativity check for undirected graphs whose
    weights carry correlation signs.
    """

    weights: np.ndarray
    directed: bool = False
    signed: bool = False

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ShapeError(f"adjacency must be square, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ParamError("adjacency contains non-finite entries")
        if np.any(np.diag(w) != 0):
            raise ParamError("adjacency diagonal must be zero")
        if not self.directed:
            if not np.array_equal(w, w.T):
                raise ParamError("undirected adjacency must be symmetric")
            if not self.signed and np.any(w < 0):
                raise ParamError("undirected adjacency must be nonnegative")
        object.__setattr__(self, "weights", _frozen(w))

    @property
    def n_nodes(self):
        return self.weights.shape[0]

    def support(self, weight_tol=WEIGHT_TOL):
        return np.abs(self.weights) > weight_tol

    def n_edges(self, weight_tol=WEIGHT_TOL):
        s = self.support(weight_tol)
        return int(s.sum()) if self.directed else int(np.triu(s, 1).sum())

    def edges(self, weight_tol=WEIGHT_TOL):
        """List of ``(i, j, weight)`` with 0-based indices.

        Undirected graphs list each pair once with ``i < j``.
        """
        s = self.support(weight_tol)
        if not self.directed:
            s = np.triu(s, 1)
        ii, jj = np.nonzero(s)
        return [(int(i), int(j), float(self.weights[i, j])) for i, j in zip(ii, jj)]


@lru_cache(maxsize=64)
def _edge_index(n):
    # column-major upper triangle: transpose of the row-major lower triangle
    cols, rows = np.tril_indices(n, -1)
    rows = rows.astype(np.int64)
    cols = cols.astype(np.int64)
    rows.setflags(write=False)
    cols.setflags(write=False)
    return rows, cols


def edge_index(n_nodes):
    """Row/column index arrays of the shared edge enumeration."""
    return _edge_index(int(n_nodes))


def n_pairs(n_nodes):
    return n_nodes * (n_nodes - 1) // 2


def nodes_from_pairs(m):
    """Invert ``m = N(N-1)/2``."""
    n = int(round((1 + np.sqrt(1 + 8 * m)) / 2))
    if n_pairs(n) != m:
        raise ShapeError(f"{m} is not a triangular number of node pairs")
    return n


@dataclass(frozen=True)
class EdgeVector:
    w: np.ndarray
    n_nodes: int

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64).ravel()
        if w.shape[0] != n_pairs(self.n_nodes):
            raise ShapeError(f"edge vector of length {w.shape[0]} does not match N={self.n_nodes}")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ParamError("edge weights must be finite and nonnegative")
        object.__setattr__(self, "w", _frozen(w))

    def to_graph(self):
        return Graph(vector_to_matrix(self.w, self.n_nodes))


def matrix_to_vector(w_mat):
    """Upper triangle of a square matrix in the shared edge order."""
    w_mat = np.asarray(w_mat)
    rows, cols = edge_index(w_mat.shape[0])
    return w_mat[rows, cols]


def vector_to_matrix(w, n_nodes):
    """Symmetric zero-diagonal matrix from an edge-ordered vector."""
    rows, cols = edge_index(n_nodes)
    out = np.zeros((n_nodes, n_nodes))
    out[rows, cols] = w
    out[cols, rows] = w
    return out


def edge_vector_from_graph(g):
    if g.directed:
        raise DirectedGraphError("edge vectors are defined for undirected graphs only")
    return EdgeVector(matrix_to_vector(g.weights), g.n_nodes)


def graph_from_edge_vector(w):
    return w.to_graph()


class DegreeOperator:
    """The 0/1 matrix S with ``S w = degrees`` for edge-ordered weights ``w``.

    Applied implicitly through the edge index; :meth:`matrix` materializes it.
    """

    def __init__(self, n_nodes):
        self.n_nodes = int(n_nodes)
        self.rows, self.cols = edge_index(self.n_nodes)

    def __matmul__(self, w):
        return self.apply(w)

    def apply(self, w):
        w = np.asarray(w, dtype=np.float64)
        n = self.n_nodes
        return np.bincount(self.rows, w, n) + np.bincount(self.cols, w, n)

    def adjoint(self, lam):
        lam = np.asarray(lam, dtype=np.float64)
        return lam[self.rows] + lam[self.cols]

    def matrix(self):
        m = self.rows.shape[0]
        s = np.zeros((self.n_nodes, m))
        k = np.arange(m)
        s[self.rows, k] = 1.0
        s[self.cols, k] = 1.0
        return s


def degree_map(w):
    """Nodal degrees ``S w`` of an :class:`EdgeVector`."""
    return DegreeOperator(w.n_nodes).apply(w.w)


def laplacian(g):
    """Combinatorial Laplacian ``diag(W 1) - W``."""
    w = g.weights if isinstance(g, Graph) else np.asarray(g, dtype=np.float64)
    if isinstance(g, Graph) and g.directed:
        raise DirectedGraphError("the combinatorial Laplacian needs an undirected graph")
    return np.diag(w.sum(axis=1)) - w


# --------------------------------------------------------------------------
# synthetic data
# --------------------------------------------------------------------------

def _check_prob(p):
    if not (0.0 <= p <= 1.0):
        raise ParamError(f"edge probability must lie in [0, 1], got {p}")


def generate_synthetic(kind, n_nodes, seed=0, p=0.3, weight_range=(1.0, 1.0), signed=False):
    """Random or deterministic ground-truth graphs.

    ``kind`` is one of ``erdos_renyi``, ``chain`` or ``random_dag``.  Weights
    are drawn uniformly from ``weight_range``; ``random_dag`` defaults to
    NOTEARS-style magnitudes in [0.5, 2] with random signs when
    ``weight_range`` is left at its default.
    """
    n = int(n_nodes)
    if n < 2:
        raise ParamError("need at least two nodes")
    lo, hi = weight_range
    if lo > hi:
        raise ParamError("weight_range must satisfy low <= high")
    rng = np.random.default_rng(seed)
    if kind == "chain":
        w = np.zeros((n, n))
        vals = rng.uniform(lo, hi, size=n - 1)
        idx = np.arange(n - 1)
        w[idx, idx + 1] = vals
        w[idx + 1, idx] = vals
        return Graph(w)
    if kind == "erdos_renyi":
        _check_prob(p)
        m = n_pairs(n)
        mask = rng.random(m) < p
        vals = rng.uniform(lo, hi, size=m)
        if signed:
            vals *= rng.choice([-1.0, 1.0], size=m)
        return Graph(vector_to_matrix(np.where(mask, vals, 0.0), n), signed=signed)
    if kind == "random_dag":
        _check_prob(p)
        if weight_range == (1.0, 1.0):
            lo, hi = 0.5, 2.0
            signed = True
        # strictly lower triangular in a random topological order
        mask = np.tril(rng.random((n, n)) < p, -1)
        vals = rng.uniform(lo, hi, size=(n, n))
        if signed:
            vals *= rng.choice([-1.0, 1.0], size=(n, n))
        perm = rng.permutation(n)
        w = np.where(mask, vals, 0.0)
        w = w[np.ix_(perm, perm)]
        return Graph(w, directed=True)
    raise ParamError(f"unknown graph kind {kind!r}")


def generate_smooth_signals(g, n_samples, delta=1e-2, seed=0):
    """Draw T columns from Normal(0, (L + delta I)^-1)."""
    if g.directed:
        raise DirectedGraphError("smooth signals are generated on undirected graphs")
    if delta <= 0:
        raise ParamError("delta must be positive")
    n = g.n_nodes
    T = int(n_samples)
    if T == 0:
        return SignalMatrix(np.zeros((n, 0)))
    prec = laplacian(g) + delta * np.eye(n)
    chol = np.linalg.cholesky(prec)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, T))
    # prec = C C' => y = C^{-T} z has covariance prec^{-1}
    return SignalMatrix(np.linalg.solve(chol.T, z))


def generate_sem_signals(g, n_samples, noise_scale=1.0, seed=0):
    """Samples of ``y = W y + e`` for a directed graph (``y = (I - W)^-1 e``)."""
    n = g.n_nodes
    rng = np.random.default_rng(seed)
    e = noise_scale * rng.standard_normal((n, int(n_samples)))
    return SignalMatrix(np.linalg.solve(np.eye(n) - g.weights, e))


# --------------------------------------------------------------------------
# recovery metrics
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RecoveryReport:
    precision: float
    recall: float
    f1: float
    frobenius_error: float
    true_positives: int = field(default=0)
    n_estimated: int = field(default=0)
    n_true: int = field(default=0)


def score_recovery(estimated, truth, weight_tol=WEIGHT_TOL):
    """Edge-support precision/recall/F1 plus Frobenius error of the weights."""
    if estimated.weights.shape != truth.weights.shape:
        raise ShapeError("graphs have different sizes")
    if estimated.directed != truth.directed:
        raise ShapeError("graphs differ in directedness")
    est = estimated.support(weight_tol)
    tru = truth.support(weight_tol)
    if not truth.directed:
        est = np.triu(est, 1)
        tru = np.triu(tru, 1)
    tp = int(np.sum(est & tru))
    n_est = int(est.sum())
    n_tru = int(tru.sum())
    if n_est == 0 and n_tru == 0:
        prec = rec = f1 = 1.0
    else:
        prec = tp / n_est if n_est else 0.0
        rec = tp / n_tru if n_tru else 0.0
        f1 = 0.0 if prec + rec == 0 else 2 * prec * rec / (prec + rec)
    err = float(np.linalg.norm(estimated.weights - truth.weights))
    return RecoveryReport(prec, rec, f1, err, tp, n_est, n_tru)


def has_cycle(adjacency):
    """Exact cycle check on the support of a directed adjacency (Kahn's algorithm)."""
    a = np.asarray(adjacency) != 0
    n = a.shape[0]
    indeg = a.sum(axis=1).astype(int)  # W[i, j] != 0 is an edge j -> i
    queue = [i for i in range(n) if indeg[i] == 0]
    seen = 0
    while queue:
        j = queue.pop()
        seen += 1
        for i in np.nonzero(a[:, j])[0]:
            indeg[i] -= 1
            if indeg[i] == 0:
                queue.append(int(i))
    return seen < n
