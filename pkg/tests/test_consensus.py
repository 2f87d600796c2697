import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mobidfl.consensus import consensus_contraction_metric, consensus_update, mixing_matrix
from mobidfl.errors import ContractViolation
from mobidfl.topology import GridLocation, build_comm_graph


def test_two_client_weights():
    W = mixing_matrix([{1}, {0}], [100, 300])
    assert W[0].tolist() == [0.25, 0.75]
    assert W[1].tolist() == [0.25, 0.75]


def test_isolated_client_keeps_its_model():
    W = mixing_matrix([set(), {2}, {1}], [5, 1, 1])
    assert W[0].tolist() == [1.0, 0.0, 0.0]


def test_equal_sizes_triangle():
    W = mixing_matrix([{1, 2}, {0, 2}, {0, 1}], [7, 7, 7])
    assert np.allclose(W, 1 / 3, rtol=0, atol=1e-15)


def test_all_empty_neighborhood_falls_back_to_identity_row():
    W = mixing_matrix([{1}, {0}, set()], [0, 0, 0])
    assert np.array_equal(W, np.eye(3))


def test_empty_client_takes_neighbor_average():
    W = mixing_matrix([{1, 2}, {0}, {0}], [0, 10, 30])
    assert W[0].tolist() == [0.0, 0.25, 0.75]
    assert W[1].tolist() == [0.0, 1.0, 0.0]


def test_asymmetric_neighbors_rejected():
    with pytest.raises(ContractViolation):
        mixing_matrix([{1}, set()], [1, 1])
    with pytest.raises(ContractViolation):
        mixing_matrix([{0}], [1])


def test_accepts_comm_graph():
    g = build_comm_graph({0: GridLocation(1, 1), 1: GridLocation(1, 2), 2: GridLocation(9, 9)}, 1)
    W = mixing_matrix(g, [1, 3, 2])
    assert W.tolist() == [[0.25, 0.75, 0.0], [0.25, 0.75, 0.0], [0.0, 0.0, 1.0]]


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 30), st.integers(0, 2**32 - 1))
def test_row_stochastic_with_exact_support(n, seed):
    rng = np.random.default_rng(seed)
    locs = {i: GridLocation(*map(int, rng.integers(1, 13, size=2))) for i in range(n)}
    sizes = rng.integers(0, 50, size=n) * (rng.random(n) < 0.7)
    g = build_comm_graph(locs, float(rng.uniform(0.5, 6)))
    W = mixing_matrix(g, sizes)
    assert np.all(np.abs(W.sum(axis=1) - 1) <= 1e-12)
    assert ((W >= 0) & (W <= 1)).all()
    allowed = g.adjacency | np.eye(n, dtype=bool)
    assert not W[~allowed].any()


def test_consensus_update_examples():
    X = np.array([[0.0], [2.0]])
    assert np.array_equal(consensus_update(X, np.eye(2)), X)
    W = mixing_matrix([{1}, {0}], [4, 4])
    assert consensus_update(X, W).tolist() == [[1.0], [1.0]]
    v = np.tile([1.5, -2.0, 3.25], (3, 1))
    W = mixing_matrix([{1}, {0, 2}, {1}], [1, 5, 2])
    assert np.allclose(consensus_update(v, W), v, rtol=1e-12, atol=0)
    with pytest.raises(ContractViolation):
        consensus_update(np.zeros((3, 2)), np.eye(2))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 15), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_consensus_outputs_lie_in_input_hull(n, d, seed):
    rng = np.random.default_rng(seed)
    locs = {i: GridLocation(*map(int, rng.integers(1, 9, size=2))) for i in range(n)}
    W = mixing_matrix(build_comm_graph(locs, 3), rng.integers(0, 20, size=n))
    X = rng.normal(size=(n, d))
    Y = consensus_update(X, W)
    tol = 1e-12 * (1 + np.abs(X).max())
    assert (Y >= X.min(axis=0) - tol).all() and (Y <= X.max(axis=0) + tol).all()


def test_contraction_metric_examples():
    assert consensus_contraction_metric(np.ones((4, 3))) == 0.0
    assert consensus_contraction_metric(np.array([[0.0], [2.0]])) == 1.0
    X = np.random.default_rng(0).normal(size=(5, 4))
    assert consensus_contraction_metric(X + 7.5) == pytest.approx(consensus_contraction_metric(X), rel=1e-12)


def test_repeated_mixing_contracts_on_connected_graph():
    locs = {i: GridLocation(1 + i, 1 + (i % 2)) for i in range(8)}
    W = mixing_matrix(build_comm_graph(locs, 3), [3, 1, 4, 1, 5, 9, 2, 6])
    X = np.random.default_rng(1).normal(size=(8, 3))
    prev = consensus_contraction_metric(X)
    for _ in range(100):
        X = consensus_update(X, W)
        cur = consensus_contraction_metric(X)
        if prev < 1e-10:
            break
        assert cur < prev
        prev = cur
    assert prev < 1e-10 or cur < 1e-10
