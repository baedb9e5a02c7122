"""
Unit tests for property profiles and fault counters
"""

import unittest
import os
import sys
from dataclasses import replace

# Add parent directory to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from src.formulas import Atom, Implies, Not
from src.measurement import (
    FeatureId,
    FeatureKind,
    PropertyProfile,
    count_faulty,
    count_faulty_total,
    encode_outcome,
    execution_profile,
    fault_counters,
    first_inconsistent_step,
    maximal_level_condition,
    measure_consistency,
    measure_nontriviality,
    measure_termination,
    profile_of,
    worst_profile,
)
from src.model import (
    Event,
    Execution,
    add_oracle,
    build_system,
    crash_processes,
    extend_configuration,
)
from src.protocols import protocol_P0_floodmin
from src.scheduler import Adversary, run
from tests.fixtures import split_execution


class TestPropertyProfile(unittest.TestCase):
    """Test cases for PropertyProfile"""

    def test_code_and_rendering(self):
        profile = PropertyProfile(True, False, True)
        self.assertEqual(profile.code, "TFT")
        self.assertEqual(str(profile), "(T,F,T)")
        self.assertEqual(PropertyProfile.from_code("TFT"), profile)

    def test_bad_code(self):
        with self.assertRaises(ValueError):
            PropertyProfile.from_code("TX")

    def test_worst_profile_is_componentwise(self):
        profiles = [
            PropertyProfile(True, True, True),
            PropertyProfile(True, False, True),
            PropertyProfile(False, True, True),
        ]
        worst = worst_profile(profiles)
        self.assertEqual(worst, PropertyProfile(False, False, True))

    def test_worst_of_nothing(self):
        with self.assertRaises(ValueError):
            worst_profile([])


class TestFeatureId(unittest.TestCase):
    """Test cases for feature identifiers"""

    def test_parse(self):
        self.assertEqual(FeatureId.parse("fault-count"), FeatureId.fault_count())
        self.assertEqual(FeatureId.parse("level:2"), FeatureId.at_level(2))
        self.assertEqual(str(FeatureId.at_level(1)), "g_1")
        self.assertEqual(str(FeatureId.fault_count()), "g_inf")

    def test_parse_rejects_garbage(self):
        for text in ("level:x", "speed", "level:-1"):
            with self.assertRaises(ValueError):
                FeatureId.parse(text)

    def test_only_fault_counts_sweep(self):
        self.assertTrue(FeatureId.at_level(0).sweepable)
        self.assertFalse(FeatureId(FeatureKind.TERMINATION).sweepable)


class TestMeasures(unittest.TestCase):
    """Test cases for execution measures"""

    def test_split_execution(self):
        execution = split_execution()
        self.assertTrue(measure_termination(execution))
        self.assertFalse(measure_termination(execution).advisory)
        self.assertFalse(measure_consistency(execution))
        self.assertTrue(measure_nontriviality(execution))
        self.assertEqual(first_inconsistent_step(execution), 7)

    def test_empty_decisions_are_vacuously_consistent(self):
        topology, initial = build_system(3, [0, 1, 1])
        profile = profile_of(initial, topology)
        self.assertEqual(profile, PropertyProfile(False, True, True))

    def test_crashed_processes_do_not_block_termination(self):
        topology, initial = build_system(1, [4])
        crashed = crash_processes(initial, [0])
        self.assertTrue(profile_of(crashed, topology).termination)

    def test_truncated_termination_is_advisory(self):
        topology, initial = build_system(3, [0, 1, 1])
        execution = run(topology, initial, protocol_P0_floodmin(), Adversary.seeded_random(1), 2)
        measured = measure_termination(execution)
        self.assertFalse(measured)
        self.assertTrue(measured.advisory)

    def test_fault_free_profile(self):
        topology, initial = build_system(4, [3, 1, 2, 1])
        execution = run(topology, initial, protocol_P0_floodmin(), Adversary.seeded_random(5))
        self.assertEqual(execution_profile(execution), PropertyProfile(True, True, True))


class TestFaultCounters(unittest.TestCase):
    """Test cases for hierarchy fault counters"""

    def setUp(self):
        base, initial = build_system(3, [0, 1, 1])
        self.topology = add_oracle(add_oracle(base, 2), 3)
        self.initial = extend_configuration(initial, self.topology)

    def _execution(self, crashed):
        return Execution(self.topology, crash_processes(self.initial, crashed))

    def test_counts_per_level(self):
        execution = self._execution([2, 3, 4])
        self.assertEqual(count_faulty(execution, 0), 1)
        self.assertEqual(fault_counters(execution), (1, 1, 1))
        self.assertEqual(count_faulty_total(execution), 3)

    def test_maximal_level_condition(self):
        self.assertTrue(maximal_level_condition(self._execution([2, 3, 4])))
        self.assertFalse(maximal_level_condition(self._execution([2, 3])))

    def test_split_counts(self):
        execution = split_execution()
        self.assertEqual(fault_counters(execution), (1,))
        self.assertEqual(count_faulty_total(execution), 1)


class TestEncodeOutcome(unittest.TestCase):
    """Test cases for outcome knowledge bases"""

    def test_split_outcome(self):
        d0, d1 = Atom("D0"), Atom("D1")
        self.assertEqual(
            encode_outcome(split_execution()),
            frozenset({d0, d1, Implies(d0, Not(d1)), Implies(d1, Not(d0))}),
        )

    def test_no_decisions(self):
        topology, initial = build_system(2, [0, 1])
        gamma = encode_outcome(Execution(topology, initial))
        self.assertEqual(
            gamma,
            frozenset(
                {Implies(Atom("D0"), Not(Atom("D1"))), Implies(Atom("D1"), Not(Atom("D0")))}
            ),
        )

    def test_explicit_alphabet(self):
        topology, initial = build_system(1, [2])
        execution = Execution(topology, initial, ((Event.start(0), _decided(initial, 2)),))
        gamma = encode_outcome(execution, value_alphabet=[2, 3, 4])
        self.assertIn(Atom("D2"), gamma)
        self.assertEqual(len(gamma), 1 + 6)


def _decided(config, value):
    return config.with_state(replace(config.state(0), started=True, output=value))


if __name__ == "__main__":
    unittest.main()
