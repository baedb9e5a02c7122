"""
Unit tests for the consensus protocols and their transformations
"""

import unittest
import os
import sys

# Add parent directory to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from src.exceptions import ConfigurationError, TopologyError
from src.formulas import Atom, Implies, Not
from src.measurement import PropertyProfile, execution_profile
from src.model import (
    Event,
    EventKind,
    HandlerContext,
    MessageKind,
    add_oracle,
    apply_event,
    build_system,
    crash_processes,
    extend_configuration,
)
from src.paralogic import CPL, MBC, trivializes
from src.protocols import (
    DummyPadded,
    FloodMin,
    OracleAugmented,
    ParaconsistentConsensus,
    augment_with_oracle,
    oracle_behavior,
    pad_with_dummies,
    protocol_from_key,
    protocol_P0_floodmin,
    protocol_P1_forced,
    protocol_P3_paraconsistent,
)
from src.scheduler import Adversary, run
from tests.fixtures import split_execution

TTT = PropertyProfile(True, True, True)
TFT = PropertyProfile(True, False, True)


class TestFloodMin(unittest.TestCase):
    """Test cases for P0 and P1"""

    def setUp(self):
        self.topology, self.initial = build_system(3, [2, 0, 1])

    def test_fault_free_runs_agree_on_minimum(self):
        for seed in range(20):
            execution = run(
                self.topology, self.initial, protocol_P0_floodmin(), Adversary.seeded_random(seed)
            )
            self.assertEqual(execution.final.outputs(), (0, 0, 0))
            self.assertEqual(execution_profile(execution), TTT)

    def test_forced_termination_never_times_out_without_crash(self):
        for seed in range(20):
            execution = run(
                self.topology, self.initial, protocol_P1_forced(), Adversary.seeded_random(seed)
            )
            self.assertNotIn(EventKind.TIMEOUT, [e.kind for e in execution.events])
            self.assertEqual(execution_profile(execution), TTT)

    def test_split_schedule_breaks_consistency(self):
        execution = split_execution()
        self.assertEqual(execution.final.state(2).output, 1)
        self.assertEqual(execution.final.state(1).output, 0)
        self.assertEqual(execution_profile(execution), TFT)

    def test_timeout_quorum_blocks_lonely_timeouts(self):
        p1 = protocol_P1_forced(timeout_quorum=2)
        config = apply_event(self.initial, Event.start(0), p1, self.topology)
        config = apply_event(config, Event.crash(1), p1, self.topology)
        state = config.state(0)
        context = HandlerContext(self.topology, config.crashed_set())
        self.assertEqual(p1.blocked_on(state, context), frozenset())

    def test_invalid_quorum(self):
        with self.assertRaises(ConfigurationError):
            FloodMin(timeouts=True, timeout_quorum=0)


class TestOracles(unittest.TestCase):
    """Test cases for oracle processes and the oracle augmentation"""

    def setUp(self):
        base_topology, initial = build_system(3, [0, 1, 1])
        self.topology = add_oracle(base_topology, 2)
        self.initial = crash_processes(extend_configuration(initial, self.topology), [2])

    def test_oracle_behavior_is_shared(self):
        self.assertIs(protocol_P0_floodmin().handlers_for(3, self.topology), oracle_behavior())

    def test_reply_carries_chain_verdicts(self):
        protocol = augment_with_oracle(protocol_P1_forced(), [3], self.topology)
        config = apply_event(self.initial, Event.start(0), protocol, self.topology)
        query = [m for m in config.in_flight if m.kind == MessageKind.ORACLE_QUERY][0]
        self.assertEqual((query.src, query.dst), (0, 3))
        config = apply_event(config, Event.deliver(query), protocol, self.topology)
        reply = [m for m in config.in_flight if m.kind == MessageKind.ORACLE_REPLY][0]
        self.assertEqual(reply.body, ((2, True),))
        self.assertTrue(reply.verdict)

    def test_augmented_runs_stay_consistent(self):
        """A correct oracle excludes the known-faulty process and no timeout fires"""
        protocol = augment_with_oracle(protocol_P1_forced(), [3], self.topology)
        for seed in range(15):
            execution = run(self.topology, self.initial, protocol, Adversary.seeded_random(seed))
            self.assertNotIn(EventKind.TIMEOUT, [e.kind for e in execution.events])
            self.assertEqual(execution.final.outputs()[:2], (0, 0))
            self.assertEqual(execution_profile(execution), TTT)

    def test_unknown_oracle_rejected(self):
        with self.assertRaises(TopologyError):
            augment_with_oracle(protocol_P1_forced(), [1], self.topology)

    def test_needs_flood_min_base(self):
        with self.assertRaises(ConfigurationError):
            OracleAugmented(pad_with_dummies(protocol_P1_forced(), 1), [3])


class TestDummyPadding(unittest.TestCase):
    """Test cases for dummy padding"""

    def setUp(self):
        self.topology, self.initial = build_system(2, [3, 5])

    def test_decision_waits_for_dummies(self):
        padded = pad_with_dummies(protocol_P0_floodmin(), 2)
        config = self.initial
        for event in (Event.start(0), Event.start(1)):
            config = apply_event(config, event, padded, self.topology)
        announce = [m for m in config.in_flight if m.kind == MessageKind.VALUE_ANNOUNCE]
        dummies = [m for m in config.in_flight if m.kind == MessageKind.DUMMY and m.dst == 0]
        self.assertEqual(len(dummies), 2)

        config = apply_event(config, Event.deliver(announce[1]), padded, self.topology)
        self.assertFalse(config.state(0).decided)
        self.assertEqual(config.state(0).protocol_locals.deferred, 3)

        config = apply_event(config, Event.deliver(dummies[0]), padded, self.topology)
        self.assertFalse(config.state(0).decided)
        config = apply_event(config, Event.deliver(dummies[1]), padded, self.topology)
        self.assertEqual(config.state(0).output, 3)

    def test_padding_preserves_outcomes(self):
        padded = pad_with_dummies(protocol_P0_floodmin(), 3)
        for seed in range(10):
            execution = run(self.topology, self.initial, padded, Adversary.seeded_random(seed))
            self.assertEqual(execution.final.outputs(), (3, 3))

    def test_negative_padding(self):
        with self.assertRaises(ConfigurationError):
            DummyPadded(protocol_P0_floodmin(), -1)


class TestParaconsistentConsensus(unittest.TestCase):
    """Test cases for P3"""

    def test_requires_paraconsistent_logic(self):
        with self.assertRaises(ConfigurationError):
            protocol_P3_paraconsistent(CPL)

    def test_split_outcome_knowledge_base(self):
        p3 = protocol_P3_paraconsistent(MBC)
        execution = split_execution(p3)
        gamma = p3.knowledge_base(execution)
        d0, d1 = Atom("D0"), Atom("D1")
        self.assertEqual(
            gamma, frozenset({d0, d1, Implies(d0, Not(d1)), Implies(d1, Not(d0))})
        )
        self.assertTrue(trivializes(CPL, gamma))
        self.assertFalse(trivializes(MBC, gamma))

    def test_runs_always_terminate(self):
        """Ten thousand seeds: every run ends and no knowledge base explodes in mbC"""
        topology, initial = build_system(3, [0, 1, 1])
        p3 = protocol_P3_paraconsistent(MBC)
        for seed in range(10_000):
            execution = run(topology, initial, p3, Adversary.seeded_random(seed, crash_budget=1))
            self.assertTrue(execution_profile(execution).termination, f"seed {seed}")
            self.assertFalse(execution.truncated)
            self.assertFalse(trivializes(MBC, p3.knowledge_base(execution)), f"seed {seed}")


class TestProtocolKeys(unittest.TestCase):
    """Test cases for scenario protocol keys"""

    def test_resolves_known_keys(self):
        topology = add_oracle(build_system(3, [0, 1, 1])[0], 2)
        self.assertEqual(protocol_from_key("p0").name, "p0")
        self.assertTrue(protocol_from_key("p1").timeouts_enabled)
        self.assertEqual(protocol_from_key("p1-padded:3").k, 3)
        oracle = protocol_from_key("p1-oracle", topology)
        self.assertEqual(oracle.oracles, frozenset({3}))
        self.assertIsInstance(protocol_from_key("p3:mbc"), ParaconsistentConsensus)
        self.assertEqual(protocol_from_key("p3:c2").logic.key, "c2")

    def test_rejects_unknown_keys(self):
        for key in ("p9", "p1-padded:x", "p3:cpl", "p3:zz"):
            with self.assertRaises(ConfigurationError):
                protocol_from_key(key)


if __name__ == "__main__":
    unittest.main()
