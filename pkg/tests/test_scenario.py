"""
Unit tests for scenario files
"""

import unittest
import os
import sys
import tempfile

# Add parent directory to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from src.exceptions import ConfigurationError
from src.scheduler import AdversaryKind
from src.utils.scenario import Scenario, load_scenario, parse_scenario, with_overrides

SPLIT_TEXT = """version=1
# three processes, one of which may crash
name=split
initial_values=0,1,1
protocol=p1
crash_budget=1
crash_plan=3:0
seed=7
"""


class TestParseScenario(unittest.TestCase):
    """Test cases for parse_scenario"""

    def test_parse(self):
        scenario = parse_scenario(SPLIT_TEXT)
        self.assertEqual(scenario.name, "split")
        self.assertEqual(scenario.process_count, 3)
        self.assertEqual(scenario.initial_values, (0, 1, 1))
        self.assertEqual(scenario.protocol, "p1")
        self.assertEqual(scenario.crash_budget, 1)
        self.assertEqual(scenario.crash_plan, ((3, 0),))
        self.assertEqual(scenario.seed, 7)
        self.assertIsNone(scenario.victim)

    def test_default_name(self):
        scenario = parse_scenario("version=1\ninitial_values=4\n", default_name="single")
        self.assertEqual(scenario.name, "single")
        self.assertEqual(scenario.process_count, 1)

    def test_empty_values_keep_defaults(self):
        scenario = parse_scenario("version=1\ninitial_values=0,1\nseed=\n")
        self.assertEqual(scenario.seed, 0)

    def test_version_must_come_first(self):
        with self.assertRaises(ConfigurationError):
            parse_scenario("initial_values=0,1\nversion=1\n")
        with self.assertRaises(ConfigurationError):
            parse_scenario("")

    def test_unsupported_version(self):
        with self.assertRaises(ConfigurationError):
            parse_scenario("version=2\ninitial_values=0,1\n")

    def test_rejects_bad_input(self):
        cases = [
            "version=1\ninitial_values=0,1\nspeed=3\n",
            "version=1\nprotocol=p0\n",
            "version=1\ninitial_values=0,x\n",
            "version=1\ninitial_values=0,1\nseed=soon\n",
            "version=1\ninitial_values=0,1\ncrash_plan=3-0\n",
            "version=1\ninitial_values=0,1\nprocess_count=3\n",
            "version=1\ninitial_values=0,1\nprotocol=p9\n",
            "version=1\ninitial_values=0,1\ntimeout_quorum=0\n",
            "version=1\ninitial_values=0,1\nadversary=psychic\n",
            "version=1\ninitial_values=0,1\nknown_faulty=5\n",
        ]
        for text in cases:
            with self.assertRaises(ConfigurationError, msg=text):
                parse_scenario(text)


class TestScenario(unittest.TestCase):
    """Test cases for Scenario"""

    def test_check_file_extension(self):
        self.assertTrue(Scenario.check_file_extension("split.scn"))
        self.assertTrue(Scenario.check_file_extension("SPLIT.ENV"))
        self.assertFalse(Scenario.check_file_extension("split.png"))
        self.assertFalse(Scenario.check_file_extension("split"))

    def test_materialize_known_faulty(self):
        scenario = Scenario("kf", 3, (0, 1, 1), protocol="p1", known_faulty=(1,))
        system = scenario.materialize()
        self.assertEqual(system.topology.size, 3)
        self.assertEqual(system.initial.crashed_set(), frozenset({1}))
        self.assertEqual(system.crash_targets(0), frozenset({0, 2}))
        self.assertIsNone(system.crash_targets(None))

    def test_materialize_oracle_chain(self):
        scenario = Scenario(
            "chain", 3, (0, 1, 1), protocol="p1-oracle", known_faulty=(2,), oracle_depth=1
        )
        system = scenario.materialize()
        self.assertEqual(system.topology.size, 4)
        self.assertEqual(system.crash_targets(1), frozenset({3}))

    def test_dict_round_trip(self):
        scenario = parse_scenario(SPLIT_TEXT)
        data = scenario.to_dict()
        self.assertEqual(data["crash_plan"], [[3, 0]])
        self.assertEqual(Scenario.from_dict(data), scenario)
        with self.assertRaises(ConfigurationError):
            Scenario.from_dict(dict(data, colour="red"))

    def test_to_adversary(self):
        scenario = parse_scenario(SPLIT_TEXT + "crash_level=0\n")
        system = scenario.materialize()
        adversary = scenario.to_adversary(system.topology)
        self.assertEqual(adversary.kind, AdversaryKind.SEEDED_RANDOM)
        self.assertEqual(adversary.seed, 7)
        self.assertEqual(adversary.crash_plan, ((3, 0),))
        self.assertEqual(adversary.crash_targets, frozenset({0, 1, 2}))

    def test_with_overrides(self):
        scenario = parse_scenario(SPLIT_TEXT)
        changed = with_overrides(scenario, seed=11, depth_bound=None)
        self.assertEqual(changed.seed, 11)
        self.assertEqual(changed.depth_bound, scenario.depth_bound)
        self.assertIs(with_overrides(scenario, seed=None), scenario)


class TestLoadScenario(unittest.TestCase):
    """Test cases for load_scenario"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def test_file_stem_is_default_name(self):
        path = os.path.join(self.tmp.name, "p0_nofault.scn")
        with open(path, "w", encoding="utf-8") as f:
            f.write("version=1\ninitial_values=3,1,2\n")
        self.assertEqual(load_scenario(path).name, "p0_nofault")

    def test_missing_file(self):
        with self.assertRaises(ConfigurationError):
            load_scenario(os.path.join(self.tmp.name, "absent.scn"))

    def test_bundled_scenarios(self):
        folder = os.path.join(os.path.dirname(__file__), "..", "scenarios")
        names = sorted(n for n in os.listdir(folder) if Scenario.check_file_extension(n))
        self.assertEqual(len(names), 4)
        for name in names:
            scenario = load_scenario(os.path.join(folder, name))
            self.assertEqual(scenario.name, name.rsplit(".", 1)[0])


if __name__ == "__main__":
    unittest.main()
