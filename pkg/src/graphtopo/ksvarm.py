"""Nonlinear topology identification with kernel-based sparse structural VAR models.

Each node's value at time ``t`` is modelled as a sum of functions of every
other node's instantaneous value and of every node's lagged values, each
function living in the RKHS of a dictionary kernel.  By the representer
theorem each function is ``K alpha`` on the training window, and a
group-sparse penalty on ``sqrt(alpha' K alpha)`` switches whole
``(source, lag, kernel)`` influences off.
"""
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import Graph, as_signal_array
from .errors import InsufficientSamples, KernelError, ParamError

JITTER = 1e-10
RANK_TOL = 1e-8
KERNEL_KINDS = ("linear", "gaussian", "polynomial")


@dataclass(frozen=True)
class KernelSpec:
    """One dictionary kernel.

    ``bandwidth=None`` for a gaussian kernel selects the median pairwise
    distance of each source series.
    """

    kind: str
    bandwidth: float = None
    degree: int = 2
    offset: float = 1.0

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ParamError(f"unknown kernel {self.kind!r}")
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise ParamError("bandwidth must be positive")
        if int(self.degree) != self.degree or self.degree < 1:
            raise ParamError("degree must be a positive integer")

    @classmethod
    def parse(cls, text):
        """``linear``, ``gaussian``, ``gaussian:0.5``, ``polynomial:3`` or ``polynomial:3:0.5``."""
        parts = text.strip().split(":")
        kind = parts[0].strip().lower()
        try:
            if kind == "gaussian" and len(parts) > 1:
                return cls(kind, bandwidth=float(parts[1]))
            if kind == "polynomial" and len(parts) > 1:
                off = float(parts[2]) if len(parts) > 2 else 1.0
                return cls(kind, degree=int(parts[1]), offset=off)
        except ValueError:
            raise ParamError(f"malformed kernel spec {text!r}") from None
        if len(parts) > 1 and kind == "linear":
            raise ParamError("the linear kernel takes no parameters")
        return cls(kind)

    def gram(self, a, b=None):
        a = np.asarray(a, dtype=np.float64)
        b = a if b is None else np.asarray(b, dtype=np.float64)
        if self.kind == "linear":
            return np.outer(a, b)
        if self.kind == "polynomial":
            return (np.outer(a, b) + self.offset) ** int(self.degree)
        bw = self.bandwidth if self.bandwidth is not None else median_bandwidth(a)
        return np.exp(-np.subtract.outer(a, b) ** 2 / (2.0 * bw * bw))


def median_bandwidth(x):
    """Median of the nonzero pairwise distances (1 if there are none)."""
    x = np.asarray(x, dtype=np.float64)
    d = np.abs(np.subtract.outer(x, x))[np.triu_indices(x.shape[0], 1)]
    d = d[d > 0]
    return float(np.median(d)) if d.size else 1.0


DEFAULT_DICTIONARY = (KernelSpec("linear"), KernelSpec("gaussian"))


@dataclass(frozen=True)
class KernelStack:
    """Jittered Gram matrices keyed by ``(source, lag, kernel)`` plus their eigenfactors."""

    grams: dict = field(repr=False)
    factors: dict = field(repr=False)
    n_nodes: int
    order: int
    specs: tuple
    n_eff: int
    instantaneous: bool = True

    @property
    def first_lag(self):
        return 0 if self.instantaneous else 1

    @property
    def n_kernels(self):
        return len(self.specs)


def build_kernel_stack(y, order, specs=DEFAULT_DICTIONARY, jitter=JITTER, rank_tol=RANK_TOL,
                       instantaneous=True):
    """Gram matrices over the aligned targets ``t = L..T-1``.

    Entry ``(t, t')`` of the ``(i, l, p)`` matrix is
    ``kappa_p(y_i(t - l), y_i(t' - l))``.  A ridge of ``jitter`` times the
    mean diagonal (at least ``jitter``) is added before factoring.  The
    regression uses eigen-directions above ``rank_tol`` times the largest
    eigenvalue; ``rank_tol=0`` keeps all of them.  ``instantaneous=False``
    drops the lag-0 terms, leaving a purely lagged (VAR-type) model.
    """
    y = as_signal_array(y)
    n, T = y.shape
    order = int(order)
    if order < 0:
        raise ParamError("the lag order must be nonnegative")
    if T <= order:
        raise InsufficientSamples(f"need more than L={order} samples")
    specs = tuple(KernelSpec.parse(s) if isinstance(s, str) else s for s in specs)
    if not specs:
        raise ParamError("empty kernel dictionary")
    if order == 0 and not instantaneous:
        raise ParamError("a model without instantaneous terms needs L >= 1")
    t_eff = T - order
    grams, factors = {}, {}
    for i in range(n):
        for ell in range(0 if instantaneous else 1, order + 1):
            x = y[i, order - ell:T - ell]
            for p, spec in enumerate(specs):
                k = spec.gram(x)
                k = 0.5 * (k + k.T)
                k[np.diag_indices(t_eff)] += jitter * max(1.0, float(np.mean(np.diag(k))))
                vals, vecs = np.linalg.eigh(k)
                if not np.all(np.isfinite(vals)) or vals.min() <= 0.0:
                    raise KernelError(f"Gram matrix of node {i}, lag {ell}, kernel {p} "
                                      "is not positive definite after jitter")
                keep = vals > rank_tol * vals[-1]
                vals, vecs = vals[keep], vecs[:, keep]
                grams[(i, ell, p)] = k
                factors[(i, ell, p)] = (vecs * np.sqrt(vals), vals, vecs)
    return KernelStack(grams, factors, n, order, specs, t_eff, bool(instantaneous))


@dataclass(frozen=True)
class KsvarmModel:
    alphas: dict = field(repr=False)
    group_norms: dict = field(repr=False)
    edge_graph: Graph = None
    lam: float = 0.0
    objective_trace: tuple = field(default=(), repr=False)

    def kernel_norms(self):
        """Sum of group norms per dictionary kernel (shows which kernel was selected)."""
        out = {}
        for (_, _, _, p), v in self.group_norms.items():
            out[p] = out.get(p, 0.0) + v
        return out

    def norm_table(self):
        return [{"source": i, "target": j, "lag": ell, "kernel": p, "norm": v}
                for (i, j, ell, p), v in sorted(self.group_norms.items())]


def _groups_for(stack, target):
    return [(i, ell, p) for ell in range(stack.first_lag, stack.order + 1)
            for i in range(stack.n_nodes)
            if not (ell == 0 and i == target) for p in range(stack.n_kernels)]


def ksvarm_lambda_max(stack, y):
    """Smallest penalty at which every group of every target is zero."""
    y = as_signal_array(y)
    best = 0.0
    for j in range(stack.n_nodes):
        target = y[j, stack.order:]
        for key in _groups_for(stack, j):
            best = max(best, float(np.linalg.norm(stack.factors[key][0].T @ target)))
    return best


def fitted_values(stack, model, target):
    """Representer-theorem predictions ``sum_g K_g alpha_g`` for one target node."""
    out = np.zeros(stack.n_eff)
    for (i, j, ell, p), a in model.alphas.items():
        if j == target:
            out += stack.grams[(i, ell, p)] @ a
    return out


def ksvarm_fit(stack, y, lam, edge_threshold=0.0, tol=1e-10, max_iter=5000, backend=None):
    """Group-sparse kernel regression for every target node.

    Minimizes, per target ``j``,
    ``0.5 ||y_j - sum_g K_g alpha_g||^2 + lam sum_g sqrt(alpha_g' K_g alpha_g)``
    with groups ``g = (source, lag, kernel)``.  Writing ``K_g = C_g C_g'``
    with ``C_g = U sqrt(S)`` turns each norm into ``||C_g' alpha_g||`` and
    the problem into a group lasso over orthogonal-column blocks.  An edge
    ``i -> j`` is declared when some group of source ``i`` has norm above
    ``edge_threshold``; its weight is the largest such norm.
    """
    y = as_signal_array(y)
    if lam < 0:
        raise ParamError("lambda must be nonnegative")
    n = stack.n_nodes
    if y.shape[0] != n or y.shape[1] != stack.n_eff + stack.order:
        raise ParamError("signals do not match the kernel stack")
    alphas, norms = {}, {}
    w = np.zeros((n, n))
    traces = []
    for j in range(n):
        keys = _groups_for(stack, j)
        d = max(stack.factors[k][1].shape[0] for k in keys)
        C = np.zeros((len(keys), stack.n_eff, d))
        s = np.zeros((len(keys), d))
        for g, k in enumerate(keys):
            r = stack.factors[k][1].shape[0]
            C[g, :, :r] = stack.factors[k][0]
            s[g, :r] = stack.factors[k][1]
        target = y[j, stack.order:]
        gamma, _, trace = kernels.factored_group_bcd(C, s, target, lam, tol=tol,
                                                     max_iter=max_iter, backend=backend)
        traces.append(np.asarray(trace))
        for g, (i, ell, p) in enumerate(keys):
            _, vals, vecs = stack.factors[(i, ell, p)]
            coef = gamma[g, :vals.shape[0]]
            alphas[(i, j, ell, p)] = vecs @ (coef / np.sqrt(vals))
            nv = float(np.linalg.norm(coef))
            norms[(i, j, ell, p)] = nv
            if i != j and nv > edge_threshold:
                w[j, i] = max(w[j, i], nv)
    length = max(len(t) for t in traces)
    total = sum(np.concatenate([t, np.full(length - len(t), t[-1])]) for t in traces)
    return KsvarmModel(alphas, norms, Graph(w, directed=True), float(lam), tuple(total))


def mkl_fit(stack, y, lam, **kw):
    """Multi-kernel variant: the same solver with groups indexed also by kernel."""
    if stack.n_kernels < 2:
        raise ParamError("multi-kernel learning needs at least two kernels")
    return ksvarm_fit(stack, y, lam, **kw)
