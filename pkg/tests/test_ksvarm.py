import numpy as np
import pytest

from graphtopo import ksvarm as ks, semdag as sd
from graphtopo.errors import InsufficientSamples, KernelError, ParamError

LIN = [ks.KernelSpec("linear")]


def test_kernel_spec_parsing():
    assert ks.KernelSpec.parse("linear") == ks.KernelSpec("linear")
    assert ks.KernelSpec.parse("gaussian:0.5").bandwidth == 0.5
    p = ks.KernelSpec.parse("polynomial:3:0.5")
    assert (p.degree, p.offset) == (3, 0.5)
    for bad in ("cubic", "gaussian:x", "linear:2"):
        with pytest.raises(ParamError):
            ks.KernelSpec.parse(bad)
    with pytest.raises(ParamError):
        ks.KernelSpec("gaussian", bandwidth=0.0)
    with pytest.raises(ParamError):
        ks.KernelSpec("polynomial", degree=0)


def test_gram_examples():
    k = ks.KernelSpec("linear").gram(np.full(4, 3.0))
    assert np.allclose(k, 9.0)
    g = ks.KernelSpec("gaussian").gram(np.random.default_rng(0).standard_normal(6))
    assert np.allclose(np.diag(g), 1.0)
    assert np.allclose(ks.KernelSpec("polynomial", degree=2, offset=1.0).gram([1.0, 2.0]),
                       [[4.0, 9.0], [9.0, 25.0]])


def test_lagged_gram_example():
    y = np.array([[1.0, 2.0, 3.0], [0.5, -1.0, 2.0]])
    st = ks.build_kernel_stack(y, 1, LIN)
    assert st.n_eff == 2
    # entries up to the diagonal jitter
    assert np.allclose(st.grams[(0, 1, 0)], [[1.0, 2.0], [2.0, 4.0]], atol=1e-8)
    assert np.allclose(st.grams[(0, 0, 0)], [[4.0, 6.0], [6.0, 9.0]], atol=1e-8)


def test_rank_one_gram_without_jitter_rejected():
    with pytest.raises(KernelError):
        ks.build_kernel_stack(np.array([[1.0, 2.0, 3.0], [0.5, -1.0, 2.0]]), 1, LIN, jitter=0.0)


def test_stack_errors():
    with pytest.raises(InsufficientSamples):
        ks.build_kernel_stack(np.ones((2, 2)), 2, LIN)
    with pytest.raises(ParamError):
        ks.build_kernel_stack(np.ones((2, 5)), -1, LIN)
    with pytest.raises(ParamError):
        ks.build_kernel_stack(np.ones((2, 5)), 1, [])
    with pytest.raises(ParamError):
        ks.build_kernel_stack(np.ones((2, 5)), 0, LIN, instantaneous=False)


def test_grams_symmetric_psd():
    y = np.random.default_rng(1).standard_normal((3, 40))
    st = ks.build_kernel_stack(y, 2, ks.DEFAULT_DICTIONARY)
    for k in st.grams.values():
        assert np.array_equal(k, k.T) and np.linalg.eigvalsh(k).min() > 0


def _var_data(seed, n=4, T=200):
    rng = np.random.default_rng(seed)
    w = np.where(rng.random((n, n)) < 0.4, rng.uniform(-0.5, 0.5, (n, n)), 0.0)
    np.fill_diagonal(w, 0.0)
    return w, sd.simulate_var([w], T, seed=seed, burn_in=20)


def test_lambda_max_empties_graph():
    _, y = _var_data(0)
    st = ks.build_kernel_stack(y, 1, ks.DEFAULT_DICTIONARY)
    lmax = ks.ksvarm_lambda_max(st, y)
    m = ks.ksvarm_fit(st, y, lmax * 1.0001)
    assert m.edge_graph.n_edges(0.0) == 0 and max(m.group_norms.values()) == 0.0
    assert max(ks.ksvarm_fit(st, y, lmax * 0.8).group_norms.values()) > 0


def test_nonlinear_lagged_dependence():
    rng = np.random.default_rng(0)
    x = 1.5 * rng.standard_normal(201)
    y = np.vstack([x[1:], np.sin(x[:-1])])
    st = ks.build_kernel_stack(y, 1, [ks.KernelSpec("gaussian")])
    m = ks.ksvarm_fit(st, y, 0.3 * ks.ksvarm_lambda_max(st, y))
    w = m.edge_graph.weights
    assert w[1, 0] > 0 and w[0, 1] == 0


def test_objective_and_representer_consistency():
    _, y = _var_data(2)
    st = ks.build_kernel_stack(y, 1, ks.DEFAULT_DICTIONARY)
    lam = 0.1 * ks.ksvarm_lambda_max(st, y)
    m = ks.ksvarm_fit(st, y, lam)
    yd = y.data
    total = 0.0
    for j in range(4):
        fit = ks.fitted_values(st, m, j)
        direct = sum(st.grams[(i, ell, p)] @ a for (i, jj, ell, p), a in m.alphas.items()
                     if jj == j)
        assert np.array_equal(fit, direct)
        total += 0.5 * np.sum((yd[j, 1:] - fit) ** 2)
    total += lam * sum(m.group_norms.values())
    assert abs(total - m.objective_trace[-1]) <= 1e-8 * total
    assert np.all(np.diff(m.objective_trace) <= 1e-10 * m.objective_trace[0])


def test_group_norm_is_kernel_norm():
    _, y = _var_data(3)
    st = ks.build_kernel_stack(y, 1, LIN)
    m = ks.ksvarm_fit(st, y, 0.05 * ks.ksvarm_lambda_max(st, y))
    for (i, j, ell, p), a in m.alphas.items():
        k = st.grams[(i, ell, p)]
        assert abs(np.sqrt(max(a @ k @ a, 0.0)) - m.group_norms[(i, j, ell, p)]) <= 1e-6 * (
            1.0 + m.group_norms[(i, j, ell, p)])


def test_support_invariant_under_scaling():
    _, y = _var_data(4)
    yd = y.data * 3.0  # keeps every linear Gram diagonal above 1
    st = ks.build_kernel_stack(yd, 1, LIN)
    lam = 0.1 * ks.ksvarm_lambda_max(st, yd)
    a = ks.ksvarm_fit(st, yd, lam)
    c = 2.5
    st2 = ks.build_kernel_stack(c * yd, 1, LIN)
    b = ks.ksvarm_fit(st2, c * yd, c * c * lam)
    sa = {k for k, v in a.group_norms.items() if v > 1e-9}
    sb = {k for k, v in b.group_norms.items() if v > 1e-9}
    assert sa == sb


def test_duplicate_kernels_match_single_kernel_objective():
    _, y = _var_data(5)
    lam = 0.1 * ks.ksvarm_lambda_max(ks.build_kernel_stack(y, 1, LIN), y)
    one = ks.ksvarm_fit(ks.build_kernel_stack(y, 1, LIN), y, lam)
    two = ks.mkl_fit(ks.build_kernel_stack(y, 1, LIN * 2), y, lam)
    assert abs(one.objective_trace[-1] - two.objective_trace[-1]) <= 1e-8 * one.objective_trace[-1]


def test_mkl_requires_two_kernels():
    _, y = _var_data(6)
    with pytest.raises(ParamError):
        ks.mkl_fit(ks.build_kernel_stack(y, 1, LIN), y, 1.0)


def test_mkl_large_lambda_empty():
    _, y = _var_data(6)
    st = ks.build_kernel_stack(y, 1, ks.DEFAULT_DICTIONARY)
    assert ks.mkl_fit(st, y, 1e12).edge_graph.n_edges(0.0) == 0


def test_linear_kernel_preferred_on_linear_data():
    wins = 0
    for seed in range(10):
        _, y = _var_data(seed)
        st = ks.build_kernel_stack(y, 1, ks.DEFAULT_DICTIONARY)
        norms = ks.mkl_fit(st, y, 0.1 * ks.ksvarm_lambda_max(st, y)).kernel_norms()
        wins += norms[0] > norms[1]
    assert wins > 5


def test_norm_table_rows():
    _, y = _var_data(7, n=3)
    st = ks.build_kernel_stack(y, 1, LIN)
    table = ks.ksvarm_fit(st, y, 1.0).norm_table()
    assert {"source", "target", "lag", "kernel", "norm"} == set(table[0])
    # lag 0 has no self term, lag 1 does
    assert len(table) == 3 * 2 + 3 * 3


def test_negative_lambda_rejected():
    _, y = _var_data(8)
    with pytest.raises(ParamError):
        ks.ksvarm_fit(ks.build_kernel_stack(y, 1, LIN), y, -1.0)
