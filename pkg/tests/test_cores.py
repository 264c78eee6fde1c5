import itertools

import numpy as np
import pytest

from qttinterp.cheb import ChebSystem, LocalInterpSystem
from qttinterp.cores import (DangerTree, DecaySchedule, KronCore, build_core_set, build_decay_core,
                             build_decay_cores, build_interp_core, build_inverse_core,
                             build_lagrange_tensor, build_left_core, build_multires_cores,
                             build_multivariate_cores, build_multivariate_left_core,
                             build_right_core, build_sparse_core)
from qttinterp.oracle import FunctionOracle

from test_cheb import LOCAL_FULL_WINDOW_REASON


def dyadic(bits):
    return sum(b * 2.0 ** -(i + 1) for i, b in enumerate(bits))


def test_left_core_values():
    assert np.all(build_left_core(np.ones_like, ChebSystem(5)) == 1.0)
    AL = build_left_core(lambda x: x, ChebSystem(2))
    assert AL.shape == (2, 1, 3)
    assert AL[1, 0, 2] == 0.5
    AL = build_left_core(lambda x: np.sin(2 * np.pi * x), ChebSystem(8))
    assert abs(AL[0, 0, 0]) <= 1e-15


def test_left_core_single_batch():
    oracle = FunctionOracle(np.exp)
    build_left_core(oracle, ChebSystem(10))
    assert oracle.requests == 22
    # 1/2 is a node of both halves
    assert oracle.calls == 21


def test_interp_core_formula():
    sys = ChebSystem(6)
    A = build_interp_core(sys)
    for s in (0, 1):
        expected = sys.cardinal_matrix((s + sys.nodes) / 2).T
        np.testing.assert_allclose(A[s], expected, atol=1e-13)


def test_two_core_identity():
    sys = ChebSystem(7)
    A = build_interp_core(sys)
    for s, t in itertools.product((0, 1), repeat=2):
        lhs = A[s] @ A[t]
        rhs = sys.cardinal_matrix(s / 2 + t / 4 + sys.nodes / 4).T
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


@pytest.mark.parametrize("N", [3, 8])
@pytest.mark.parametrize("p", [1, 2, 3, 4, 5])
def test_chain_identity_exhaustive(N, p):
    sys = ChebSystem(N)
    A = build_interp_core(sys)
    AR = build_right_core(sys)
    for bits in itertools.product((0, 1), repeat=p):
        prod = np.eye(N + 1)
        for s in bits:
            prod = prod @ A[s]
        expected = sys.cardinal_matrix(dyadic(bits) + 2.0 ** -p * sys.nodes).T
        assert np.max(np.abs(prod - expected)) <= 1e-11
        for s in (0, 1):
            tail = prod @ AR[s]
            np.testing.assert_allclose(tail[:, 0], sys.cardinal_matrix(dyadic(bits + (s,)))[0], atol=1e-11)


def test_right_core():
    for N in (4, 5):
        AR = build_right_core(ChebSystem(N))
        assert AR.shape == (2, N + 1, 1)
        np.testing.assert_allclose(AR[0, :, 0], np.eye(N + 1)[N], atol=1e-15)
    AR = build_right_core(ChebSystem(6))
    np.testing.assert_allclose(AR[1, :, 0], np.eye(7)[3], atol=1e-15)


def test_core_set_shapes():
    cs = build_core_set(np.cos, ChebSystem(4))
    assert cs.left.shape == (2, 1, 5) and cs.interior.shape == (2, 5, 5) and cs.right.shape == (2, 5, 1)


@pytest.mark.parametrize("core_fn", [
    lambda: build_interp_core(ChebSystem(9)),
    lambda: build_sparse_core(LocalInterpSystem(ChebSystem(40), 4)).toarray(),
    lambda: build_decay_core(20, 13),
])
def test_row_sums_are_one(core_fn):
    core = core_fn()
    np.testing.assert_allclose(core.sum(axis=1), 1.0, atol=1e-12)


def test_sparse_core_column_counts():
    core = build_sparse_core(LocalInterpSystem(ChebSystem(256), 6))
    for s in (0, 1):
        assert np.diff(core[s].indptr).max() <= 14
        col = core.column(s, 100)
        assert 0 < len(col) <= 14
    assert core.shape == (2, 257, 257)


def test_sparse_core_converges_to_dense():
    sys = ChebSystem(32)
    dense = build_interp_core(sys)
    devs = [np.abs(build_sparse_core(LocalInterpSystem(sys, M)).toarray() - dense).max()
            for M in (2, 4, 8, 16)]
    assert all(b < a for a, b in zip(devs, devs[1:]))


@pytest.mark.xfail(strict=True, reason=LOCAL_FULL_WINDOW_REASON)
def test_sparse_full_window_equals_dense():
    sys = ChebSystem(8)
    dense = build_interp_core(sys)
    assert np.abs(build_sparse_core(LocalInterpSystem(sys, 8)).toarray() - dense).max() <= 1e-10


def test_decay_schedule_shapes():
    sched = DecaySchedule(64, 8, 6)
    assert sched.sizes == (40, 24, 16, 12, 10, 9)
    cores = build_decay_cores(sched)
    assert [c.shape for c in cores] == [(2, 41, 25), (2, 25, 17), (2, 17, 13), (2, 13, 11), (2, 11, 1)]
    assert all(a >= b for a, b in zip(sched.sizes, sched.sizes[1:]))


def test_decay_core_reduces_to_interp_core():
    np.testing.assert_allclose(build_decay_core(9, 9), build_interp_core(ChebSystem(9)), atol=1e-15)


@pytest.mark.parametrize("bad", [(0, 1, 4), (10, 0, 4), (10, 1, 1)])
def test_decay_schedule_validation(bad):
    with pytest.raises(ValueError):
        DecaySchedule(*bad)


@pytest.mark.parametrize("N", [1, 4, 16, 64])
def test_inverse_identity(N):
    sys = ChebSystem(N)
    A, G = build_interp_core(sys), build_inverse_core(sys)
    assert np.abs(A[0] @ G[0] + A[1] @ G[1] - np.eye(N + 1)).max() <= 1e-11


@pytest.mark.parametrize("N", [1, 4, 16])
def test_inverse_entries_bounded(N):
    assert np.abs(build_inverse_core(ChebSystem(N))).max() <= 1 + 1e-12


def test_inverse_entries_exceed_one_slightly_at_64():
    # interior cardinal functions of the Lobatto grid peak a little above 1
    gmax = np.abs(build_inverse_core(ChebSystem(64))).max()
    assert 1.0 < gmax < 1.001


def test_inverse_n1_by_hand():
    G = build_inverse_core(ChebSystem(1))
    # nodes (1, 0): c=0 reads sigma=0 at y=0, c=1 reads sigma=1 at y=1
    assert G[0].tolist() == [[0.0, 0.0], [0.0, 1.0]]
    assert G[1].tolist() == [[1.0, 0.0], [0.0, 0.0]]
    samples = np.array([[3.0, 5.0], [7.0, 3.0]])  # rows sigma, cols beta
    coarse = samples[0] @ G[0] + samples[1] @ G[1]
    assert coarse.tolist() == [7.0, 5.0]


def test_lagrange_tensor_q1_follows_two_point_formula():
    sys = ChebSystem(6)
    L = build_lagrange_tensor(sys, 1)
    np.testing.assert_allclose(L[0], 1 - 2 * sys.nodes, atol=1e-15)
    np.testing.assert_allclose(L[1], 2 * sys.nodes, atol=1e-15)


@pytest.mark.parametrize("q", [1, 2, 3, 4])
def test_lagrange_tensor_partition_and_exactness(q):
    sys = ChebSystem(10)
    L = build_lagrange_tensor(sys, q)
    assert L.shape == (2 ** q, 11)
    np.testing.assert_allclose(L.sum(axis=0), 1.0, atol=1e-12)
    t = np.arange(2 ** q) / 2 ** q
    for deg in range(2 ** q):
        np.testing.assert_allclose(t ** deg @ L, sys.nodes ** deg, atol=1e-12)


@pytest.mark.parametrize("q", [0, 5])
def test_lagrange_tensor_range(q):
    with pytest.raises(ValueError):
        build_lagrange_tensor(ChebSystem(4), q)


def test_danger_tree_validation():
    with pytest.raises(ValueError):
        DangerTree(4, (((0,),), ((1, 0),)))
    with pytest.raises(ValueError):
        DangerTree(4, (((0,), (0,)),))
    with pytest.raises(ValueError):
        DangerTree(4, (((0, 1),),))
    tree = DangerTree.left_edge(5)
    assert [tree.q(k) for k in range(1, 6)] == [1, 1, 1, 1, 0]


def test_danger_tree_containing():
    tree = DangerTree.containing(0.3, 6)
    for k in range(1, 6):
        (p,) = tree.S(k)
        assert dyadic(p) <= 0.3 < dyadic(p) + 2.0 ** -k


def test_multires_empty_tree_matches_basic():
    sys = ChebSystem(5)
    cores = build_multires_cores(np.exp, sys, 6, DangerTree.empty(6))
    cs = build_core_set(np.exp, sys)
    np.testing.assert_allclose(cores[0], cs.left)
    for c in cores[1:-1]:
        np.testing.assert_allclose(c, cs.interior)
    np.testing.assert_allclose(cores[-1], cs.right)


def test_multires_left_edge_indicator_and_samples():
    sys = ChebSystem(4)
    n = 5
    cores = build_multires_cores(np.sqrt, sys, 6, DangerTree.left_edge(6))
    for k in range(1, 5):
        chi = cores[k][:, n:, n:]
        assert chi[0, 0, 0] == 1.0 and chi[1, 0, 0] == 0.0
    # safe child (0, 0, 1) of dangerous prefix (0, 0) at level 3
    F = cores[2][1, n, :n]
    np.testing.assert_allclose(F, np.sqrt(2.0 ** -3 + 2.0 ** -3 * sys.nodes), atol=1e-15)


def test_multires_evaluation_count():
    tree = DangerTree.left_edge(10)
    oracle = FunctionOracle(np.sqrt)
    build_multires_cores(oracle, ChebSystem(6), 10, tree)
    assert oracle.requests == tree.evaluation_count(6) == 7 * 9 + 2


def test_kron_core_matches_dense(rng):
    sys = ChebSystem(4)
    A = build_interp_core(sys)
    for axis in (0, 1, 2):
        kc = KronCore(A, (5, 5, 5), axis)
        dense = kc.to_dense()
        R = rng.standard_normal((3, 125))
        np.testing.assert_allclose(kc.apply(R), np.einsum("ra,sab->srb", R, dense), atol=1e-12)
        v = rng.standard_normal(125)
        np.testing.assert_allclose(kc.matvec(1, v), dense[1] @ v, atol=1e-12)
        np.testing.assert_allclose(kc.rmatvec(0, v), v @ dense[0], atol=1e-12)


def test_kron_cap_removes_factor(rng):
    AR = build_right_core(ChebSystem(3))
    kc = KronCore(AR, (4, 4), 0)
    assert kc.out_sizes == (4,) and kc.shape == (2, 16, 4)
    R = rng.standard_normal((2, 16))
    np.testing.assert_allclose(kc.apply(R), np.einsum("ra,sab->srb", R, kc.to_dense()), atol=1e-13)


def test_kron_sparse_small(rng):
    sp_core = build_sparse_core(LocalInterpSystem(ChebSystem(6), 2))
    kc = KronCore(sp_core, (7, 7), 1)
    R = rng.standard_normal((2, 49))
    np.testing.assert_allclose(kc.apply(R), np.einsum("ra,sab->srb", R, kc.to_dense()), atol=1e-13)


def test_multivariate_left_core_entry():
    f = lambda p: p[:, 0] + 10 * p[:, 1] + 100 * p[:, 2]  # noqa: E731
    AL = build_multivariate_left_core(f, ChebSystem(3), 3)
    assert AL.shape == (2, 1, 64)
    assert AL[0, 0, 0] == pytest.approx(0.5 + 10 + 100)


def test_multivariate_d1_reduces_to_univariate():
    sys = ChebSystem(5)
    mv = build_multivariate_cores(np.exp, sys, 1, 4)
    np.testing.assert_allclose(mv.left, build_left_core(np.exp, sys))
    for kc in mv.cores[:-1]:
        np.testing.assert_allclose(kc.to_dense(), build_interp_core(sys))
    np.testing.assert_allclose(mv.cores[-1].to_dense(), build_right_core(sys))


@pytest.mark.parametrize("ordering", ["interleaved", "serial"])
def test_multivariate_core_count(ordering):
    mv = build_multivariate_cores(lambda p: p.sum(axis=1), ChebSystem(2), 3, 4, ordering)
    assert len(mv.cores) == 11
    with pytest.raises(ValueError):
        build_multivariate_cores(lambda p: p.sum(axis=1), ChebSystem(2), 2, 4, "zigzag")
