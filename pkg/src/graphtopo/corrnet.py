"""Correlation and partial-correlation networks with FDR-controlled edge tests."""
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .core import Graph, as_signal_array, edge_index, n_pairs, nodes_from_pairs
from .errors import (DegenerateVariance, EmptyInput, InsufficientSamples, InvalidPrecision,
                     NonPositiveDefiniteWarning, ParamError, SaturatedCorrelation)

CLIP_EPS = 1e-12


@dataclass(frozen=True)
class CovarianceEstimate:
    sigma: np.ndarray
    n_samples: int

    def __post_init__(self):
        s = np.asarray(self.sigma, dtype=np.float64)
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise ParamError("covariance must be square")
        if not np.allclose(s, s.T, rtol=0, atol=1e-12 * max(1.0, np.abs(s).max(initial=0))):
            raise ParamError("covariance must be symmetric")
        if np.any(np.diag(s) < 0):
            raise ParamError("covariance diagonal must be nonnegative")
        s = 0.5 * (s + s.T)
        s.setflags(write=False)
        object.__setattr__(self, "sigma", s)


@dataclass(frozen=True)
class EdgeTest:
    i: int
    j: int
    statistic: float
    p_value: float

    def __post_init__(self):
        if not self.i < self.j:
            raise ParamError("edge tests are indexed with i < j")
        if not 0.0 <= self.p_value <= 1.0:
            raise ParamError("p-value outside [0, 1]")


def sample_covariance(y):
    """Unbiased sample covariance of the columns of ``y``."""
    y = as_signal_array(y)
    T = y.shape[1]
    if T < 2:
        raise InsufficientSamples("the unbiased covariance needs at least two samples")
    yc = y - y.mean(axis=1, keepdims=True)
    return CovarianceEstimate(yc @ yc.T / (T - 1), T)


def pearson_matrix(c):
    s = c.sigma if isinstance(c, CovarianceEstimate) else np.asarray(c, dtype=np.float64)
    d = np.diag(s)
    if np.any(d <= 0):
        bad = int(np.argmin(d))
        raise DegenerateVariance(f"node {bad} has zero variance")
    sd = np.sqrt(d)
    rho = s / np.outer(sd, sd)
    np.fill_diagonal(rho, 1.0)
    return rho


def fisher_tests(rho, n_samples, clip=False):
    """Two-sided Fisher-z tests of ``rho_ij = 0`` for every unordered pair.

    Under the null ``atanh(rho_hat) ~ Normal(0, 1/(T-3))``.  Saturated
    correlations (``|rho| >= 1 - 1e-12``) raise unless ``clip`` is set, in
    which case they are clipped to ``+-(1 - 1e-12)`` before the transform.
    """
    T = int(n_samples)
    if T <= 3:
        raise InsufficientSamples("Fisher tests need T >= 4")
    rho = np.asarray(rho, dtype=np.float64)
    rows, cols = edge_index(rho.shape[0])
    r = rho[rows, cols]
    sat = np.abs(r) >= 1.0 - CLIP_EPS
    if np.any(sat):
        if not clip:
            k = int(np.argmax(sat))
            raise SaturatedCorrelation(f"|rho| = 1 between nodes {rows[k]} and {cols[k]}")
        r = np.clip(r, -1.0 + CLIP_EPS, 1.0 - CLIP_EPS)
    z = np.arctanh(r)
    p = 2.0 * ndtr(-np.abs(z) * np.sqrt(T - 3))
    p = np.clip(p, 0.0, 1.0)
    return [EdgeTest(int(i), int(j), float(s), float(q)) for i, j, s, q in zip(rows, cols, z, p)]


def bh_fdr_select(tests, q, weights="binary", n_nodes=None):
    """Benjamini-Hochberg selection over all pairwise tests.

    Edges are declared for the ``k`` smallest p-values where ``k`` is the
    largest index with ``p_(k) <= k q / m``.  ``weights='rho'`` stores the
    sample correlation ``tanh(z)`` instead of 1 (a signed graph).
    """
    if not tests:
        raise EmptyInput("no tests to select from")
    if not 0.0 < q < 1.0:
        raise ParamError("q must lie in (0, 1)")
    if weights not in ("binary", "rho"):
        raise ParamError(f"unknown weight convention {weights!r}")
    m = len(tests)
    n = n_nodes or nodes_from_pairs(m)
    if m != n_pairs(n):
        raise ParamError("tests must cover every unordered pair")
    p = np.array([t.p_value for t in tests])
    order = np.argsort(p, kind="stable")
    thresh = q * np.arange(1, m + 1) / m
    ok = np.nonzero(p[order] <= thresh)[0]
    w = np.zeros((n, n))
    if ok.size:
        k = ok[-1] + 1
        for idx in order[:k]:
            t = tests[idx]
            val = 1.0 if weights == "binary" else float(np.tanh(t.statistic))
            w[t.i, t.j] = w[t.j, t.i] = val
    return Graph(w, signed=(weights == "rho"))


def correlation_network(y, q=0.05, weights="binary", clip=False):
    """Convenience pipeline: covariance -> Pearson -> Fisher tests -> BH."""
    c = sample_covariance(y)
    rho = pearson_matrix(c)
    return bh_fdr_select(fisher_tests(rho, c.n_samples, clip=clip), q, weights, rho.shape[0])


def partial_correlations(theta):
    """``-theta_ij / sqrt(theta_ii theta_jj)`` with a zero diagonal.

    Values outside [-1, 1] (possible only for a non-PD input) are returned
    as computed and flagged with :class:`NonPositiveDefiniteWarning`.
    """
    th = getattr(theta, "theta", theta)
    th = np.asarray(th, dtype=np.float64)
    d = np.diag(th)
    if np.any(d <= 0):
        raise InvalidPrecision("precision diagonal must be positive")
    sd = np.sqrt(d)
    pc = -th / np.outer(sd, sd)
    np.fill_diagonal(pc, 0.0)
    pc = 0.5 * (pc + pc.T)
    if np.any(np.abs(pc) > 1.0 + 1e-12):
        warnings.warn("partial correlations exceed 1 in magnitude; precision is not PD",
                      NonPositiveDefiniteWarning, stacklevel=2)
    return pc
