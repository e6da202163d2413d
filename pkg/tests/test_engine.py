import json
import random

import pytest

from selfstab import engine, topology
from selfstab.daemon import (CentralRandomDaemon, DistributedRandomDaemon,
                             SynchronousDaemon)
from selfstab.engine import (EngineError, StepRecord, apply_step,
                             classify_step, enabled, enabled_set,
                             execute, export_trace_jsonl, is_terminal)
from selfstab.kcluster import (CkAlgorithm, CkState, MeasureMonitor,
                               identity_config, initial_configuration,
                               state_to_json, zero_configuration)

from conftest import path5_terminal_config


@pytest.fixture
def path5_setup(path5):
    net, tree, ids = path5
    return net, tree, ids, CkAlgorithm(1)


class TestEnabled:
    def test_terminal_fixture_all_disabled(self, path5_setup, path5_terminal):
        net, _, _, alg = path5_setup
        for p in net.all_nodes():
            assert not enabled(alg, net, path5_terminal, p)

    def test_leaf_with_garbage_alpha_enabled(self, path5):
        net, tree, ids = path5
        g = identity_config(net, tree, ids, [5, 0, 0, 0, 0],
                            [None] * 5, [0] * 5)
        assert enabled(CkAlgorithm(2), net, g, 0)

    def test_is_terminal_fixture(self, path5_setup, path5_terminal):
        net, _, _, alg = path5_setup
        assert is_terminal(alg, net, path5_terminal)

    def test_one_enabled_not_terminal(self, path5_setup, path5_terminal):
        net, tree, ids, alg = path5_setup
        g = list(path5_terminal)
        g[0] = CkState(id=0, par=g[0].par, alpha=7, parc=g[0].parc,
                       headc=g[0].headc)
        assert not is_terminal(alg, net, tuple(g))

    def test_random_config_guards_match_enabledness(self, path5):
        from selfstab.kcluster import node_guards
        net, tree, ids = path5
        rng = random.Random(0)
        for k in (1, 2):
            alg = CkAlgorithm(k)
            for _ in range(30):
                g = initial_configuration(net, tree, ids, k, rng)
                for p in net.all_nodes():
                    assert enabled(alg, net, g, p) == any(node_guards(net, g, k, p))


class TestApplyStep:
    def test_single_move_is_local(self, path5):
        net, tree, ids = path5
        alg = CkAlgorithm(2)
        g = identity_config(net, tree, ids, [5, 0, 0, 0, 0],
                            [None] * 5, [0] * 5)
        g2, rec = apply_step(alg, net, g, {0})
        assert g2[0].alpha == 0
        assert all(g2[p] is g[p] for p in range(1, 5))  # frame property
        assert rec.activated == frozenset({0})
        assert rec.step_class == "alpha"

    def test_synchronous_all_minus_one_goes_to_zero(self, path5):
        net, tree, ids = path5
        alg = CkAlgorithm(1)
        g = identity_config(net, tree, ids, [-1] * 5, [None] * 5, [0] * 5)
        act = enabled_set(alg, net, g)
        assert act == frozenset(range(5))
        g2, _ = apply_step(alg, net, g, act)
        assert [s.alpha for s in g2] == [0] * 5

    def test_activating_disabled_node_rejected(self, path5_setup, path5_terminal):
        net, _, _, alg = path5_setup
        with pytest.raises(EngineError, match="disabled"):
            apply_step(alg, net, path5_terminal, {0})

    def test_empty_activation_rejected(self, path5_setup, path5_terminal):
        net, _, _, alg = path5_setup
        with pytest.raises(EngineError, match="empty"):
            apply_step(alg, net, path5_terminal, set())

    def test_read_only_violation_caught(self, path5):
        net, tree, ids = path5

        class BadAlgorithm(CkAlgorithm):
            def evaluate(self, state, channels, env, reply):
                out, guards = super().evaluate(state, channels, env, reply)
                if out is not None:
                    out = CkState(id=out.id + 1, par=out.par, alpha=out.alpha,
                                  parc=out.parc, headc=out.headc)
                return out, guards

        g = identity_config(net, tree, ids, [5, 0, 0, 0, 0], [None] * 5, [0] * 5)
        with pytest.raises(EngineError, match="read-only"):
            apply_step(BadAlgorithm(1), net, g, {0})

    def test_no_op_run_caught(self, path5):
        net, tree, ids = path5

        class StutterAlgorithm(engine.Algorithm):
            def run(self, state, channels, env, reply):
                return state  # defined but unchanged: forbidden

        g = zero_configuration(net, tree, ids)
        with pytest.raises(EngineError, match="unchanged"):
            apply_step(StutterAlgorithm(), net, g, {0})


class TestClassify:
    def test_alpha_wins_over_headc(self, path5, path5_terminal):
        net, tree, ids = path5
        alg = CkAlgorithm(1)
        g = list(path5_terminal)
        g[0] = CkState(id=0, par=g[0].par, alpha=7, parc=g[0].parc,
                       headc=g[0].headc)  # alpha-enabled
        g[3] = CkState(id=3, par=g[3].par, alpha=0, parc=g[3].parc,
                       headc=9)  # headc-enabled
        g = tuple(g)
        assert classify_step(alg, net, g, {0, 3}) == "alpha"
        assert classify_step(alg, net, g, {3}) == "headc"

    def test_parc_only(self, path5, path5_terminal):
        net, _, _ = path5
        alg = CkAlgorithm(1)
        g = list(path5_terminal)
        g[0] = CkState(id=0, par=g[0].par, alpha=0, parc=None,
                       headc=g[0].headc)
        assert classify_step(alg, net, tuple(g), {0}) == "parc"

    def test_generic_for_unprioritized(self, path5):
        net, tree, ids = path5

        class Anon(engine.Algorithm):
            def run(self, state, channels, env, reply):
                return None

        assert classify_step(Anon(), net, zero_configuration(net, tree, ids),
                             {0}) == "generic"


class TestExecute:
    def test_already_terminal_zero_steps(self, path5_setup, path5_terminal):
        net, _, _, alg = path5_setup
        trace = execute(alg, net, path5_terminal, SynchronousDaemon())
        assert trace.steps == 0 and trace.terminal

    def test_sync_from_zero_reaches_fixture(self, path5):
        net, tree, ids = path5
        g0 = zero_configuration(net, tree, ids)
        trace = execute(CkAlgorithm(1), net, g0, SynchronousDaemon())
        assert trace.terminal
        assert trace.final == path5_terminal_config(net, tree, ids)

    def test_same_seed_identical_traces(self, path5):
        net, tree, ids = path5
        rng = random.Random(5)
        g0 = initial_configuration(net, tree, ids, 1, rng)
        traces = [execute(CkAlgorithm(1), net, g0, DistributedRandomDaemon(),
                          seed=77) for _ in range(2)]
        assert traces[0].records == traces[1].records
        assert traces[0].final == traces[1].final

    def test_budget_exhaustion_reported(self, path5):
        net, tree, ids = path5
        g0 = zero_configuration(net, tree, ids)
        trace = execute(CkAlgorithm(1), net, g0, SynchronousDaemon(),
                        max_steps=1)
        assert trace.budget_exhausted and not trace.terminal
        assert trace.steps == 1

    def test_terminal_soundness_full_rescan(self, path5):
        net, tree, ids = path5
        alg = CkAlgorithm(1)
        rng = random.Random(11)
        for _ in range(10):
            g0 = initial_configuration(net, tree, ids, 1, rng)
            trace = execute(alg, net, g0, CentralRandomDaemon(), seed=rng.random())
            assert trace.terminal
            assert not enabled_set(alg, net, trace.final)

    def test_assume_rejects_duplicate_ids(self, path5):
        net, tree, _ = path5
        g0 = zero_configuration(net, tree, (7, 7, 3, 4, 5))
        with pytest.raises(EngineError, match="assumption"):
            execute(CkAlgorithm(1), net, g0, SynchronousDaemon())

    def test_activated_subset_of_enabled_every_step(self, path5):
        net, tree, ids = path5
        alg = CkAlgorithm(1)
        g0 = initial_configuration(net, tree, ids, 1, random.Random(3))
        trace = execute(alg, net, g0, DistributedRandomDaemon(0.4), seed=1)
        g = g0
        for rec in trace.records:
            en = enabled_set(alg, net, g)
            assert rec.activated and rec.activated <= en
            assert frozenset(p for p, _ in rec.diff) == rec.activated
            g2, _ = apply_step(alg, net, g, rec.activated)
            for p, s in rec.diff:
                assert g2[p] == s
            g = g2
        assert g == trace.final

    def test_ro_part_constant_along_trace(self, path5):
        net, tree, ids = path5
        alg = CkAlgorithm(1)
        g0 = initial_configuration(net, tree, ids, 1, random.Random(8))
        trace = execute(alg, net, g0, CentralRandomDaemon(), seed=2)
        ro0 = [alg.ro_part(s) for s in g0]
        for i in range(trace.steps + 1):
            assert [alg.ro_part(s) for s in trace.config_at(i)] == ro0


class TestTrace:
    def test_config_at_reconstruction_past_checkpoints(self):
        net = topology.generate("random-connected", 25, seed=6)
        tree = topology.build_spanning_tree(net, 0)
        ids = topology.identity_ids(25)
        alg = CkAlgorithm(2)
        g0 = initial_configuration(net, tree, ids, 2, random.Random(21))
        trace = execute(alg, net, g0, CentralRandomDaemon(), seed=4)
        assert trace.terminal
        assert trace.steps > trace.checkpoint_every  # checkpoints exercised
        assert trace._checkpoints
        g = g0
        for i, rec in enumerate(trace.records):
            assert trace.config_at(i) == g
            g, _ = apply_step(alg, net, g, rec.activated)
        assert trace.config_at(trace.steps) == g == trace.final

    def test_config_at_bounds(self, path5, path5_terminal):
        net, _, _ = path5
        trace = execute(CkAlgorithm(1), net, path5_terminal, SynchronousDaemon())
        with pytest.raises(IndexError):
            trace.config_at(1)

    def test_jsonl_export(self, path5):
        net, tree, ids = path5
        mon = MeasureMonitor(net, tree, 1, record_log=True)
        g0 = zero_configuration(net, tree, ids)
        trace = execute(CkAlgorithm(1), net, g0, SynchronousDaemon(),
                        monitors=[mon])
        lines = list(export_trace_jsonl(trace, state_to_json,
                                        potentials=mon.log))
        assert len(lines) == trace.steps
        first = json.loads(lines[0])
        assert set(first) == {"step", "activated", "deltas", "class",
                              "potentials"}
        assert first["potentials"]["alpha"] == sorted(
            first["potentials"]["alpha"])


class TestStepRecord:
    def test_diff_map(self):
        rec = StepRecord(index=0, activated=frozenset({1}),
                         diff=((1, "s"),), step_class="alpha")
        assert rec.diff_map() == {1: "s"}
