import pytest

from selfstab import topology
from selfstab.topology import (SpanTree, TopologyError, build_spanning_tree,
                               dump_edge_list, generate, load_network,
                               validate_assume)


class TestLoadNetwork:
    def test_path_from_edge_list(self):
        net = load_network("0 1\n1 2")
        assert net.n == 3
        assert [net.degree(p) for p in net.all_nodes()] == [1, 2, 1]

    def test_both_directions_collapse_to_one_edge(self):
        net = load_network("0 1\n1 0")
        assert net.n == 2
        assert list(net.edges()) == [(0, 1)]
        assert net.degree(0) == net.degree(1) == 1

    def test_self_loop_rejected(self):
        with pytest.raises(TopologyError, match="self-loop"):
            load_network("0 0")

    def test_index_gap_rejected(self):
        with pytest.raises(TopologyError, match="gap"):
            load_network("0 2")

    def test_bad_line_rejected(self):
        with pytest.raises(TopologyError):
            load_network("0 1 2")
        with pytest.raises(TopologyError):
            load_network("a b")

    def test_comments_and_nodes_directive(self):
        net = load_network("# nodes: 3\n# a comment\n0 1\n")
        assert net.n == 3
        assert net.degree(2) == 0

    def test_round_trip(self):
        net = generate("random-connected", 9, seed=3)
        assert load_network(dump_edge_list(net)) == net


class TestChannels:
    def test_channels_ordered_by_peer_id(self):
        net = load_network("1 0\n1 2\n1 3")
        assert net.peers[1] == (0, 2, 3)

    def test_reply_round_trips(self):
        net = generate("random-connected", 12, seed=7)
        for p in net.all_nodes():
            for c in net.channels(p):
                q = net.peers[p][c]
                back = net.reply[p][c]
                assert net.peer(q, back) == p
                assert net.reply[q][back] == c

    def test_channel_to(self):
        net = load_network("0 1\n1 2")
        assert net.channel_to(1, 2) == 1
        assert net.channel_to(0, 2) is None


class TestSpanningTree:
    def test_path_rooted_at_end(self):
        net = generate("path", 3)
        tree = build_spanning_tree(net, 2)
        assert tree.parent(net, 0) == 1
        assert tree.parent(net, 1) == 2
        assert tree.par[2] is None

    def test_single_node(self):
        net = generate("path", 1)
        tree = build_spanning_tree(net, 0)
        assert tree.par == (None,)

    def test_disconnected_reports_unreached_node(self):
        net = load_network("0 1\n2 3")
        with pytest.raises(TopologyError, match="node"):
            build_spanning_tree(net, 0)

    def test_tree_passes_validation(self):
        for kind in topology.GENERATOR_KINDS:
            net = generate(kind, 8, seed=1)
            tree = build_spanning_tree(net, 0)
            ids = topology.identity_ids(net.n)
            assert validate_assume(net, tree, ids).ok

    def test_depth_decreases_toward_root(self):
        from selfstab.kcluster import tree_depths
        net = generate("random-connected", 15, seed=2)
        tree = build_spanning_tree(net, 4)
        depths = tree_depths(net, tree)
        for p in net.all_nodes():
            q = tree.parent(net, p)
            if q is not None:
                assert depths[p] == depths[q] + 1


class TestValidateAssume:
    def test_valid_fixture_gives_empty_report(self, path5):
        net, tree, ids = path5
        report = validate_assume(net, tree, ids)
        assert report.ok
        assert report.violations == []

    def test_duplicate_ids_named(self):
        net = generate("path", 3)
        tree = build_spanning_tree(net, 0)
        report = validate_assume(net, tree, [7, 7, 3])
        assert not report.ok
        assert not report.clause_ok("unique_id")
        assert "0" in str(report) and "1" in str(report)

    def test_parent_two_cycle_detected(self):
        net = generate("path", 3)
        # 0 and 1 point at each other, root 2 untouched
        tree = SpanTree(root=2, par=(0, 0, None))
        report = validate_assume(net, tree, [0, 1, 2])
        assert not report.clause_ok("span_tree")


class TestGenerate:
    def test_path_edge_count(self):
        assert len(list(generate("path", 5).edges())) == 4

    def test_random_tree_edge_count(self):
        for n in (1, 2, 9, 30):
            assert len(list(generate("random-tree", n, seed=5).edges())) == n - 1

    def test_same_seed_same_network(self):
        a = generate("random-connected", 20, seed=11)
        b = generate("random-connected", 20, seed=11)
        assert a == b

    def test_different_seed_usually_differs(self):
        a = generate("random-connected", 20, seed=11)
        b = generate("random-connected", 20, seed=12)
        assert a != b

    def test_random_connected_is_connected(self):
        for seed in range(5):
            net = generate("random-connected", 17, seed=seed)
            build_spanning_tree(net, 0)  # raises if disconnected

    def test_star(self):
        net = generate("star", 6)
        assert net.degree(0) == 5
        assert all(net.degree(p) == 1 for p in range(1, 6))

    def test_ring_plus_chord(self):
        assert len(list(generate("ring-plus-chord", 6).edges())) == 7
        assert len(list(generate("ring-plus-chord", 4).edges())) == 4
        assert len(list(generate("ring-plus-chord", 2).edges())) == 1

    def test_n_zero_rejected(self):
        with pytest.raises(TopologyError):
            generate("path", 0)

    def test_unknown_kind(self):
        with pytest.raises(TopologyError):
            generate("torus", 4)


def test_permuted_ids_deterministic():
    assert topology.permuted_ids(10, 3) == topology.permuted_ids(10, 3)
    assert sorted(topology.permuted_ids(10, 3)) == list(range(10))


def test_dot_export_marks_tree_edges(path5):
    net, tree, _ = path5
    dot = topology.to_dot(net, tree)
    assert dot.count("style=bold") == 4
    assert "graph" in dot
