import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphtopo import core, corrnet, dynjd as dj, gmrf, semdag as sd, smoothlearn as sl
from graphtopo.errors import (AmbiguityError, AnchorError, EmptyInput, EmptySlot, ParamError,
                              ShapeError)


def _distances(seed, n=5, T=3, m=8):
    rng = np.random.default_rng(seed)
    return [sl.distance_vector(rng.standard_normal((n, m))) for _ in range(T)]


def test_graph_sequence_validation():
    g = core.generate_synthetic("chain", 4)
    with pytest.raises(EmptyInput):
        dj.GraphSequence(())
    with pytest.raises(ShapeError):
        dj.GraphSequence((g, core.generate_synthetic("chain", 5)))
    seq = dj.GraphSequence([g, g])
    assert len(seq) == 2 and seq.n_nodes == 4 and seq.temporal_differences().tolist() == [0.0]


def test_tv_smooth_decouples_at_zero_eta():
    es = _distances(0)
    r = dj.tv_smooth_learn(es, 1.0, 0.5, 0.0)
    for w, e in zip(r.weights, es):
        assert np.allclose(w, sl.learn_graph(e, 1.0, 0.5, tol=1e-12).w.w, atol=1e-9)


def test_tv_smooth_single_slot_is_static():
    e = _distances(1, T=1)
    r = dj.tv_smooth_learn(e, 0.7, 1.3, 5.0)
    assert np.allclose(r.weights[0], sl.learn_graph(e[0], 0.7, 1.3, tol=1e-12).w.w, atol=1e-9)


def test_tv_smooth_consensus_limit():
    es = _distances(2)
    T = len(es)
    r = dj.tv_smooth_learn(es, 1.0, 1.0, 1e6)
    total = sl.DistanceVector(sum(e.e for e in es), es[0].n_nodes)
    ref = sl.learn_graph(total, T * 1.0, T * 1.0, tol=1e-12).w.w
    for w in r.weights:
        assert np.allclose(w, ref, atol=1e-5)
    assert r.sequence.temporal_differences().max() <= 1e-5


@given(st.integers(0, 2**31), st.floats(0.01, 10.0))
@settings(max_examples=10)
def test_tv_smooth_objective_monotone(seed, eta):
    es = _distances(seed % 1000)
    r = dj.tv_smooth_learn(es, 1.0, 1.0, eta)
    tr = np.array(r.objective_trace)
    assert np.all(np.diff(tr) <= 1e-8 * max(1.0, abs(tr[0])))
    assert abs(tr[-1] - dj.tv_smooth_objective(list(r.weights), es, 1.0, 1.0, eta)) <= 1e-9


def test_tv_smooth_coupling_reduces_variation():
    es = _distances(3)
    loose = dj.tv_smooth_learn(es, 1.0, 1.0, 0.0).sequence.temporal_differences().sum()
    tight = dj.tv_smooth_learn(es, 1.0, 1.0, 1.0).sequence.temporal_differences().sum()
    assert tight < loose


def test_tv_smooth_errors():
    with pytest.raises(EmptyInput):
        dj.tv_smooth_learn([], 1.0, 1.0, 1.0)
    with pytest.raises(ParamError):
        dj.tv_smooth_learn(_distances(0), 0.0, 1.0, 1.0)
    with pytest.raises(ParamError):
        dj.tv_smooth_learn(_distances(0), 1.0, 1.0, -1.0)


def _covs(seed, n=5, T=3):
    rng = np.random.default_rng(seed)
    return [corrnet.sample_covariance(rng.standard_normal((n, 40))).sigma for _ in range(T)]


def test_tv_glasso_decouples_at_zero_eta():
    covs = _covs(0)
    r = dj.tv_graphical_lasso(covs, 0.1, 0.0)
    for th, s in zip(r.thetas, covs):
        ref = gmrf.graphical_lasso(s, 0.1, tol=1e-10).theta
        assert np.max(np.abs(th - ref)) <= 1e-6


def test_tv_glasso_identical_slots_equal():
    s = _covs(1, T=1)[0]
    for eta in (0.0, 0.5, 10.0):
        th = dj.tv_graphical_lasso([s, s, s], 0.1, eta).thetas
        assert np.allclose(th[0], th[1], atol=1e-10) and np.allclose(th[1], th[2], atol=1e-10)


def test_tv_glasso_monotone_and_consistent():
    covs = _covs(2)
    r = dj.tv_graphical_lasso(covs, 0.05, 0.3)
    tr = np.array(r.objective_trace)
    assert r.converged and np.all(np.diff(tr) <= 1e-10 * max(1.0, abs(tr[0])))
    assert abs(tr[-1] - dj.tv_glasso_objective(r.thetas, covs, 0.05, 0.3)) <= 1e-9 * abs(tr[-1])


def test_tv_glasso_change_point():
    rng = np.random.default_rng(4)
    n, T = 5, 8
    a = np.eye(n) + 0.45 * (np.eye(n, k=1) + np.eye(n, k=-1))
    b = np.eye(n) + 0.45 * (np.eye(n, k=2) + np.eye(n, k=-2))
    covs = []
    for t in range(T):
        cov = np.linalg.inv(a if t < T // 2 else b)
        y = rng.multivariate_normal(np.zeros(n), cov, size=400).T
        covs.append(corrnet.sample_covariance(y).sigma)
    d = dj.tv_graphical_lasso(covs, 0.05, 2.0).temporal_differences()
    assert int(np.argmax(d)) == T // 2 - 1


def test_tv_glasso_errors():
    with pytest.raises(EmptyInput):
        dj.tv_graphical_lasso([], 0.1, 0.1)
    with pytest.raises(ParamError):
        dj.tv_graphical_lasso(_covs(0), -0.1, 0.1)
    with pytest.raises(ShapeError):
        dj.tv_graphical_lasso([np.eye(2), np.eye(3)], 0.1, 0.1)


def _cascades(w, T, C, seed, noise=0.1):
    rng = np.random.default_rng(seed)
    n = w.shape[0]
    x = rng.standard_normal((n, C))
    inv = np.linalg.inv(np.eye(n) - w)
    ys = np.stack([inv @ (x + noise * rng.standard_normal((n, C))) for _ in range(T)])
    return ys, x


def _w(seed, n=5):
    rng = np.random.default_rng(seed)
    w = np.where(rng.random((n, n)) < 0.3, rng.uniform(-0.4, 0.4, (n, n)), 0.0)
    np.fill_diagonal(w, 0.0)
    return w


def test_dyn_sem_unit_forgetting_matches_batch():
    ys, x = _cascades(_w(0), 4, 30, 0)
    tr = dj.dynamic_sem_track(ys, x, gamma=1.0, alpha=0.5)
    pooled_y = np.hstack(list(ys))
    pooled_x = np.hstack([x] * ys.shape[0])
    ref = sd.sem_fit(pooled_y, pooled_x, alpha=0.5)
    assert np.max(np.abs(tr.weights[-1] - ref.w)) <= 1e-8
    assert np.max(np.abs(tr.loadings[-1] - ref.b)) <= 1e-8


def test_dyn_sem_huge_alpha_gives_empty_graphs():
    ys, x = _cascades(_w(1), 3, 20, 1)
    assert not dj.dynamic_sem_track(ys, x, 0.9, 1e12).weights.any()


def test_dyn_sem_tracks_switch():
    w_a, w_b = _w(2), _w(3)
    ya, x = _cascades(w_a, 10, 20, 2, noise=0.0)
    yb = np.stack([np.linalg.solve(np.eye(5) - w_b, x) for _ in range(40)])
    tr = dj.dynamic_sem_track(np.concatenate([ya, yb]), x, gamma=0.9, alpha=1e-8)
    assert np.max(np.abs(tr.weights[9] - w_a)) <= 1e-2
    assert np.max(np.abs(tr.weights[-1] - w_b)) <= 1e-2


def test_dyn_sem_errors():
    ys, x = _cascades(_w(0), 2, 5, 0)
    with pytest.raises(ParamError):
        dj.dynamic_sem_track(ys, x, gamma=0.0)
    with pytest.raises(ParamError):
        dj.dynamic_sem_track(ys, x, gamma=1.5)
    with pytest.raises(ShapeError):
        dj.dynamic_sem_track(ys[0], x)
    with pytest.raises(ShapeError):
        dj.dynamic_sem_track(ys, x[:, :3])


def _jd_instance(seed, n=5, m=3):
    rng = np.random.default_rng(seed)
    w = np.where(rng.random((n, n)) < 0.4, rng.uniform(-0.5, 0.5, (n, n)), 0.0)
    np.fill_diagonal(w, 0.0)
    h0 = np.eye(n) - w
    inv = np.linalg.inv(h0)
    slices = [inv @ np.diag(rng.uniform(0.5, 2.0, n)) @ inv.T for _ in range(m)]
    return h0, w, slices


def test_jd_problem_validation():
    r = np.eye(3)
    with pytest.raises(AmbiguityError):
        dj.JdProblem([r])
    with pytest.raises(AnchorError):
        dj.JdProblem([r, r], [(0, 3, 0.1)])
    with pytest.raises(AnchorError):
        dj.JdProblem([r, r], [(1, 1, 0.5)])
    with pytest.raises(AnchorError):
        dj.JdProblem([r, r], [(0, 1, 0.1), (0, 1, 0.2)])
    with pytest.raises(ParamError):
        dj.JdProblem([r, np.triu(np.ones((3, 3)))])


def test_jd_diagonal_slices_give_identity():
    rng = np.random.default_rng(0)
    slices = [np.diag(rng.uniform(0.5, 2.0, 4)) for _ in range(3)]
    r = dj.jd_fit(dj.JdProblem(slices, [(0, 1, 0.0)]))
    assert np.allclose(r.h, np.eye(4), atol=1e-10) and r.residual <= 1e-20


def test_jd_anchored_recovery():
    h0, w, slices = _jd_instance(1)
    n = h0.shape[0]
    anchors = [(i, (i + 1) % n, w[i, (i + 1) % n]) for i in range(n)]
    r = dj.jd_fit(dj.JdProblem(slices, anchors))
    assert np.max(np.abs(r.h - h0)) <= 1e-6 and r.residual <= 1e-10
    assert np.allclose(np.diag(r.h), 1.0)
    for i, j, v in anchors:
        assert r.h[i, j] == -v
    assert np.allclose(r.w.weights, w, atol=1e-6)


def test_jd_without_anchors_up_to_ambiguity():
    h0, _, slices = _jd_instance(2)
    r = dj.jd_fit(dj.JdProblem(slices))
    assert r.residual <= 1e-10
    assert dj.equivalent_up_to_permutation_scaling(r.h, h0)


def test_jd_objective_trace_monotone():
    _, _, slices = _jd_instance(3)
    noisy = [s + 1e-3 * (lambda a: a + a.T)(np.random.default_rng(k).standard_normal(s.shape))
             for k, s in enumerate(slices)]
    r = dj.jd_fit(dj.JdProblem(noisy, [(0, 1, 0.0)]))
    tr = np.array(r.objective_trace)
    assert np.all(np.diff(tr) <= 1e-12 * max(1.0, tr[0]))


@given(st.integers(0, 2**31))
@settings(max_examples=15)
def test_jd_objective_permutation_equivariant(seed):
    rng = np.random.default_rng(seed)
    h = np.eye(4) + 0.3 * rng.standard_normal((4, 4))
    slices = [(lambda a: a @ a.T)(rng.standard_normal((4, 4))) for _ in range(3)]
    p = np.eye(4)[rng.permutation(4)]
    a = dj.jd_objective(h, slices)
    b = dj.jd_objective(p @ h @ p.T, [p @ s @ p.T for s in slices])
    assert abs(a - b) <= 1e-10 * max(1.0, a)


def test_permutation_scaling_check():
    h = np.array([[1.0, 0.2], [0.3, 1.0]])
    assert dj.equivalent_up_to_permutation_scaling(np.diag([2.0, -1.0]) @ h[::-1], h)
    assert not dj.equivalent_up_to_permutation_scaling(np.eye(2), h)


def test_segment_correlations():
    y = np.arange(12.0).reshape(2, 6)
    out = dj.segment_correlations(y, [4])
    seg = y[:, :4]
    assert np.allclose(out[0], seg @ seg.T / 4)
    # two samples for two nodes: ridge added
    assert np.allclose(out[1], y[:, 4:] @ y[:, 4:].T / 2 + 1e-8 * np.eye(2))
    with pytest.raises(EmptySlot):
        dj.segment_correlations(y, [3, 3])
