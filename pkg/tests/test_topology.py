import pytest
from hypothesis import given, strategies as st

from doflab.errors import StructuralError
from doflab.topology import DOWNLINK, UPLINK, Topology


def test_connected_bs_interior():
    assert Topology(10, 2).connected_bs(5) == {3, 4, 5}


def test_connected_bs_boundary_clip():
    assert Topology(10, 2).connected_bs(1) == {1}


def test_connected_bs_parallel_links():
    assert Topology(10, 0).connected_bs(7) == {7}


def test_connected_bs_out_of_range():
    with pytest.raises(StructuralError):
        Topology(10, 2).connected_bs(11)
    with pytest.raises(StructuralError):
        Topology(10, 2).connected_bs(0)


def test_interference_set_uplink():
    assert Topology(10, 3).interference_set(6, UPLINK) == {3, 4, 5, 6}


def test_interference_set_downlink_clipped():
    assert Topology(10, 3).interference_set(9, DOWNLINK) == {9, 10}


def test_interference_set_downlink_low_index():
    assert Topology(10, 3).interference_set(1, DOWNLINK) == {1, 2, 3, 4}


def test_interference_set_bad_session():
    with pytest.raises(StructuralError):
        Topology(10, 3).interference_set(1, "sideways")


def test_partition_exact_division():
    assert Topology(9, 1).subnetwork_partition(3) == [(1, 3), (4, 6), (7, 9)]


def test_partition_remainder():
    assert Topology(10, 1).subnetwork_partition(3) == [(1, 3), (4, 6), (7, 9), (10, 10)]


def test_partition_block_starts():
    blocks = Topology(14, 1).subnetwork_partition(7)
    assert blocks == [(1, 7), (8, 14)]
    assert blocks[1][0] == 8


def test_invalid_parameters():
    with pytest.raises(StructuralError):
        Topology(0, 0)
    with pytest.raises(StructuralError):
        Topology(3, 3)
    with pytest.raises(StructuralError):
        Topology(3, -1)


@given(st.integers(2, 40), st.integers(0, 6))
def test_interior_degree_is_l_plus_one(K, L):
    if L >= K:
        return
    topo = Topology(K, L)
    for i in range(L + 1, K + 1):
        assert len(topo.connected_bs(i)) == L + 1


@given(st.integers(1, 30), st.integers(0, 5), st.integers(1, 12))
def test_partition_covers_exactly_once(K, L, s):
    if L >= K:
        return
    blocks = Topology(K, L).subnetwork_partition(s)
    seen = []
    for lo, hi in blocks:
        assert lo <= hi
        seen.extend(range(lo, hi + 1))
    assert seen == list(range(1, K + 1))


@given(st.integers(1, 25), st.integers(0, 5))
def test_downlink_set_is_adjacency_transpose(K, L):
    if L >= K:
        return
    topo = Topology(K, L)
    for bs in range(1, K + 1):
        expected = {mt for mt in range(1, K + 1) if bs in topo.connected_bs(mt)}
        assert topo.interference_set(bs, DOWNLINK) == expected
