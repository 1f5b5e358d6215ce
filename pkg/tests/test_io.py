import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from graphtopo import core, io
from graphtopo.errors import InputFormatError


def test_matrix_roundtrip(tmp_path):
    m = np.random.default_rng(0).standard_normal((3, 5))
    p = tmp_path / "m.csv"
    io.write_matrix(p, m)
    assert np.array_equal(io.read_matrix(p), m)


@given(arrays(np.float64, (3, 4), elements=st.floats(-1e12, 1e12, allow_nan=False)))
def test_fmt_roundtrips_exactly(m):
    text = io.matrix_to_csv(m)
    back = np.array([[float(c) for c in line.split(",")] for line in text.splitlines()])
    assert np.array_equal(back, m)


def test_header_skipped(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("a,b\n1,2\n3,4\n")
    assert io.read_matrix(p, header=True).tolist() == [[1, 2], [3, 4]]


def test_ragged_rows_rejected(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("1,2,3\n4,5\n")
    with pytest.raises(InputFormatError, match="row length mismatch at line 2"):
        io.read_matrix(p)


@pytest.mark.parametrize("body", ["1,x\n", "1,\n", "1,inf\n", ""])
def test_bad_cells_rejected(tmp_path, body):
    p = tmp_path / "m.csv"
    p.write_text(body)
    with pytest.raises(InputFormatError):
        io.read_matrix(p)


def test_missing_cells_become_nan(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("1,,3\n4,5,\n")
    m = io.read_matrix(p, allow_missing=True)
    assert np.isnan(m[0, 1]) and np.isnan(m[1, 2]) and m[1, 0] == 4


def test_edges_are_one_based(tmp_path):
    g = core.generate_synthetic("chain", 3, weight_range=(0.5, 0.5))
    p = tmp_path / "e.csv"
    io.write_edges(p, g)
    assert p.read_text().splitlines() == ["1,2,0.5", "2,3,0.5"]
    assert np.array_equal(io.read_edges(p).weights, g.weights)


def test_directed_edges_roundtrip(tmp_path):
    g = core.generate_synthetic("random_dag", 5, seed=1, p=0.6)
    p = tmp_path / "e.csv"
    io.write_edges(p, g)
    back = io.read_edges(p, n_nodes=5, directed=True)
    assert np.array_equal(back.weights, g.weights)


def test_edge_list_errors(tmp_path):
    p = tmp_path / "e.csv"
    p.write_text("0,1,1.0\n")
    with pytest.raises(InputFormatError, match="1-based"):
        io.read_edges(p)
    p.write_text("1,2\n")
    with pytest.raises(InputFormatError):
        io.read_edges(p)
    p.write_text("")
    with pytest.raises(InputFormatError):
        io.read_edges(p)
