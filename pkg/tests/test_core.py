import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from graphtopo import core
from graphtopo.errors import DirectedGraphError, ParamError, ShapeError


def _sym(n, vals):
    return core.vector_to_matrix(vals, n)


def test_edge_vector_single_edge():
    g = core.Graph(np.array([[0.0, 3.0], [3.0, 0.0]]))
    assert core.edge_vector_from_graph(g).w.tolist() == [3.0]


def test_edge_vector_empty_graph():
    w = core.edge_vector_from_graph(core.Graph(np.zeros((4, 4)))).w
    assert w.shape == (6,) and not w.any()


def test_edge_vector_column_major_order():
    w = np.zeros((3, 3))
    w[0, 1] = w[1, 0] = 1.0
    w[0, 2] = w[2, 0] = 2.0
    w[1, 2] = w[2, 1] = 4.0
    assert core.edge_vector_from_graph(core.Graph(w)).w.tolist() == [1.0, 2.0, 4.0]


def test_edge_index_order_n4():
    rows, cols = core.edge_index(4)
    assert list(zip(rows.tolist(), cols.tolist())) == [(0, 1), (0, 2), (1, 2), (0, 3), (1, 3),
                                                        (2, 3)]


def test_edge_vector_rejects_directed():
    with pytest.raises(DirectedGraphError):
        core.edge_vector_from_graph(core.Graph(np.array([[0.0, 1.0], [0.0, 0.0]]), directed=True))


def test_degree_map_examples():
    assert core.degree_map(core.EdgeVector([3.0], 2)).tolist() == [3.0, 3.0]
    assert not core.degree_map(core.EdgeVector(np.zeros(3), 3)).any()
    assert core.degree_map(core.EdgeVector([1.0, 2.0, 4.0], 3)).tolist() == [3.0, 5.0, 6.0]


def test_degree_operator_adjoint_and_matrix():
    op = core.DegreeOperator(5)
    rng = np.random.default_rng(0)
    w, lam = rng.random(10), rng.random(5)
    s = op.matrix()
    assert np.allclose(op.apply(w), s @ w)
    assert np.allclose(op.adjoint(lam), s.T @ lam)
    assert np.isclose(lam @ op.apply(w), op.adjoint(lam) @ w)


def test_laplacian_examples():
    assert core.laplacian(core.Graph(np.array([[0.0, 1.0], [1.0, 0.0]]))).tolist() == [[1, -1],
                                                                                         [-1, 1]]
    assert not core.laplacian(core.Graph(np.zeros((3, 3)))).any()
    lap = core.laplacian(core.EdgeVector([1.0, 2.0, 4.0], 3).to_graph())
    assert lap.tolist() == [[3, -1, -2], [-1, 5, -4], [-2, -4, 6]]


def test_laplacian_rejects_directed():
    with pytest.raises(DirectedGraphError):
        core.laplacian(core.Graph(np.array([[0.0, 1.0], [0.0, 0.0]]), directed=True))


def test_graph_validation():
    with pytest.raises(ShapeError):
        core.Graph(np.zeros((2, 3)))
    with pytest.raises(ParamError):
        core.Graph(np.eye(2))
    with pytest.raises(ParamError):
        core.Graph(np.array([[0.0, 1.0], [2.0, 0.0]]))
    with pytest.raises(ParamError):
        core.Graph(np.array([[0.0, -1.0], [-1.0, 0.0]]))
    assert core.Graph(np.array([[0.0, -1.0], [-1.0, 0.0]]), signed=True).n_edges() == 1


def test_signal_matrix_validation():
    with pytest.raises(ShapeError):
        core.SignalMatrix(np.zeros(3))
    with pytest.raises(ParamError):
        core.SignalMatrix(np.array([[0.0, np.nan], [1.0, 1.0]]))
    assert core.SignalMatrix(np.zeros((3, 0))).n_samples == 0


def test_chain_generator():
    g = core.generate_synthetic("chain", 3)
    assert [(i, j) for i, j, _ in g.edges()] == [(0, 1), (1, 2)]


def test_erdos_renyi_extremes():
    assert core.generate_synthetic("erdos_renyi", 5, p=0.0).n_edges() == 0
    assert core.generate_synthetic("erdos_renyi", 4, p=1.0).n_edges() == 6


def test_generator_rejects_bad_probability():
    with pytest.raises(ParamError):
        core.generate_synthetic("erdos_renyi", 4, p=1.5)
    with pytest.raises(ParamError):
        core.generate_synthetic("star", 4)


def test_random_dag_is_acyclic():
    for seed in range(20):
        g = core.generate_synthetic("random_dag", 8, seed=seed, p=0.6)
        assert g.directed and not core.has_cycle(g.weights)


def test_has_cycle():
    assert core.has_cycle(np.array([[0, 1], [1, 0]]))
    assert not core.has_cycle(np.array([[0, 0], [1, 0]]))


def test_generators_reproducible():
    a = core.generate_synthetic("erdos_renyi", 10, seed=7, p=0.4, weight_range=(0.5, 2.0))
    b = core.generate_synthetic("erdos_renyi", 10, seed=7, p=0.4, weight_range=(0.5, 2.0))
    assert a.weights.tobytes() == b.weights.tobytes()
    ya = core.generate_smooth_signals(a, 20, seed=3).data
    yb = core.generate_smooth_signals(b, 20, seed=3).data
    assert ya.tobytes() == yb.tobytes()
    d = core.generate_synthetic("random_dag", 6, seed=2, p=0.5)
    assert (core.generate_sem_signals(d, 10, seed=1).data.tobytes()
            == core.generate_sem_signals(d, 10, seed=1).data.tobytes())


def test_smooth_signals_empty_and_white():
    g = core.Graph(np.zeros((3, 3)))
    assert core.generate_smooth_signals(g, 0).data.shape == (3, 0)
    y = core.generate_smooth_signals(g, 20000, delta=1.0, seed=0).data
    assert np.allclose(y @ y.T / y.shape[1], np.eye(3), atol=0.05)


def test_smooth_signals_expected_tv():
    g = core.generate_synthetic("chain", 3)
    lap = core.laplacian(g)
    delta = 0.1
    y = core.generate_smooth_signals(g, 10000, delta=delta, seed=1).data
    tv = np.mean(np.einsum("it,ij,jt->t", y, lap, y))
    expected = np.trace(lap @ np.linalg.inv(lap + delta * np.eye(3)))
    assert abs(tv - expected) / expected < 0.05


def test_smooth_signals_smoother_on_true_graph():
    g = core.generate_synthetic("erdos_renyi", 12, seed=0, p=0.3)
    y = core.generate_smooth_signals(g, 500, seed=0).data
    tv_true = np.sum(y * (core.laplacian(g) @ y))
    other = []
    for s in range(1, 11):
        h = core.generate_synthetic("erdos_renyi", 12, seed=100 + s, p=0.3)
        other.append(np.sum(y * (core.laplacian(h) @ y)))
    assert tv_true < np.mean(other)


def test_smooth_signals_need_positive_delta_and_undirected():
    with pytest.raises(ParamError):
        core.generate_smooth_signals(core.generate_synthetic("chain", 3), 5, delta=0.0)
    with pytest.raises(DirectedGraphError):
        core.generate_smooth_signals(core.Graph(np.array([[0, 1.0], [0, 0]]), directed=True), 5)


def test_score_recovery_examples():
    truth = core.generate_synthetic("chain", 4)
    rep = core.score_recovery(truth, truth)
    assert rep.f1 == 1.0 and rep.frobenius_error == 0.0
    rep = core.score_recovery(core.Graph(np.zeros((4, 4))), truth)
    assert rep.recall == 0.0 and rep.f1 == 0.0
    t2 = np.zeros((4, 4))
    t2[0, 1] = t2[1, 0] = t2[2, 3] = t2[3, 2] = 1.0
    e2 = np.zeros((4, 4))
    e2[0, 1] = e2[1, 0] = e2[0, 3] = e2[3, 0] = 1.0
    rep = core.score_recovery(core.Graph(e2), core.Graph(t2))
    assert (rep.precision, rep.recall, rep.f1) == (0.5, 0.5, 0.5)


def test_score_recovery_shape_mismatch():
    with pytest.raises(ShapeError):
        core.score_recovery(core.Graph(np.zeros((3, 3))), core.Graph(np.zeros((4, 4))))


def test_score_recovery_weight_tol():
    w = np.zeros((3, 3))
    w[0, 1] = w[1, 0] = 1e-8
    assert core.score_recovery(core.Graph(w), core.Graph(np.zeros((3, 3)))).f1 == 1.0


@st.composite
def edge_vectors(draw):
    n = draw(st.integers(2, 9))
    w = draw(arrays(np.float64, core.n_pairs(n), elements=st.floats(0, 10)))
    return n, w


@given(edge_vectors())
def test_vectorization_roundtrip(case):
    n, w = case
    g = core.EdgeVector(w, n).to_graph()
    assert np.array_equal(core.edge_vector_from_graph(g).w, w)
    assert np.array_equal(core.vector_to_matrix(core.matrix_to_vector(g.weights), n), g.weights)


@given(edge_vectors())
def test_degree_map_is_row_sum(case):
    n, w = case
    ev = core.EdgeVector(w, n)
    assert np.allclose(core.degree_map(ev), ev.to_graph().weights.sum(axis=1))


@given(edge_vectors(), st.integers(0, 2**31))
def test_laplacian_null_space_and_psd(case, seed):
    n, w = case
    lap = core.laplacian(core.EdgeVector(w, n).to_graph())
    assert np.allclose(lap @ np.ones(n), 0.0, atol=1e-9)
    x = np.random.default_rng(seed).standard_normal(n)
    assert x @ lap @ x >= -1e-9 * max(1.0, np.abs(lap).sum())


@given(st.integers(3, 40))
def test_nodes_from_pairs_inverse(n):
    assert core.nodes_from_pairs(core.n_pairs(n)) == n
