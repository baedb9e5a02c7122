"""
Unit tests for the entailment engine
"""

import unittest
import os
import sys

import numpy as np
from hypothesis import given, settings, strategies as st

# Add parent directory to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from src.exceptions import ResourceCapError, UnsupportedFormulaError
from src.formulas import (
    And,
    Atom,
    Circ,
    Implies,
    Not,
    Or,
    enumerate_formulas,
    gamma_n,
    parse_formula,
    parse_sequent,
)
from src.paralogic import (
    CPL,
    MBC,
    N_MAX,
    EntailmentEngine,
    LogicId,
    closure_fragment,
    closure_set,
    cn,
    cpl_truth_table,
    entails,
    is_inconsistent,
    lfi_circumvention_check,
    trivializes,
)

A, B = Atom("A"), Atom("B")
ALL_LOGICS = [CPL, MBC] + [cn(n) for n in range(1, N_MAX + 1)]

classical_formulas = st.recursive(
    st.sampled_from([Atom("A"), Atom("B"), Atom("C")]),
    lambda children: st.one_of(
        st.builds(Not, children),
        st.builds(And, children, children),
        st.builds(Or, children, children),
        st.builds(Implies, children, children),
    ),
    max_leaves=6,
)


def _query(logic, text):
    gamma, goal = parse_sequent(text)
    return entails(logic, gamma, goal)


def _random_formula(rng, names, max_depth):
    if max_depth == 0 or rng.random() < 0.25:
        return Atom(names[int(rng.integers(len(names)))])
    choice = int(rng.integers(4))
    if choice == 0:
        return Not(_random_formula(rng, names, max_depth - 1))
    left = _random_formula(rng, names, max_depth - 1)
    right = _random_formula(rng, names, max_depth - 1)
    return (And, Or, Implies)[choice - 1](left, right)


class TestLogicId(unittest.TestCase):
    """Test cases for logic identifiers"""

    def test_parse(self):
        self.assertEqual(LogicId.parse("CPL"), CPL)
        self.assertEqual(LogicId.parse("mbc"), MBC)
        self.assertEqual(LogicId.parse("c3"), cn(3))
        self.assertEqual(str(cn(3)), "C3")
        self.assertEqual(str(MBC), "mbC")

    def test_rejects_unknown(self):
        for text in ("c0", "c9", "lp", ""):
            with self.assertRaises(ValueError):
                LogicId.parse(text)

    def test_paraconsistency(self):
        self.assertFalse(CPL.is_paraconsistent)
        self.assertTrue(all(logic.is_paraconsistent for logic in ALL_LOGICS[1:]))


class TestExplosion(unittest.TestCase):
    """Test cases for explosion and its controlled recovery"""

    def test_classical_explosion(self):
        self.assertTrue(_query(CPL, "A, ~A |- B"))
        self.assertEqual(_query(CPL, "A, ~A |- B").verdict(), "ENTAILS")

    def test_paraconsistent_logics_do_not_explode(self):
        for logic in ALL_LOGICS[1:]:
            result = _query(logic, "A, ~A |- B")
            self.assertFalse(result, str(logic))
            self.assertEqual(result.counter_valuation.value(B), 0)
            self.assertEqual(result.counter_valuation.value(A), 1)

    def test_counterexample_verdict(self):
        verdict = _query(cn(1), "A, ~A |- B").verdict()
        self.assertTrue(verdict.startswith("COUNTEREXAMPLE "))
        self.assertIn("A=1", verdict)
        self.assertIn("B=0", verdict)

    def test_consistency_operator_restores_explosion(self):
        self.assertTrue(_query(MBC, "A, ~A, oA |- B"))
        self.assertTrue(_query(cn(1), "A, ~A, oA |- B"))

    def test_circumvention(self):
        self.assertTrue(lfi_circumvention_check({A}, B))
        self.assertTrue(lfi_circumvention_check({A, Implies(A, B)}, B))
        self.assertTrue(trivializes(MBC, {A, B, Not(B), Circ(B)}))


class TestStaircase(unittest.TestCase):
    """Well-behavedness at level n trivializes C_n but not C_(n+1)"""

    def test_staircase(self):
        for n in range(1, N_MAX):
            self.assertTrue(trivializes(cn(n), gamma_n(n)), f"C{n}")
            self.assertFalse(trivializes(cn(n + 1), gamma_n(n)), f"C{n + 1}")

    def test_top_of_the_staircase(self):
        self.assertTrue(trivializes(cn(N_MAX), gamma_n(N_MAX)))

    def test_stronger_annotations_reach_lower_levels(self):
        self.assertTrue(trivializes(cn(1), gamma_n(2)))
        self.assertFalse(trivializes(cn(3), gamma_n(1)))


class TestEntailment(unittest.TestCase):
    """Test cases for positive logic and negation behaviour"""

    def test_positive_fragment_is_classical(self):
        for logic in ALL_LOGICS:
            self.assertTrue(_query(logic, "A & B |- A"), str(logic))
            self.assertTrue(_query(logic, "A, A -> B |- B"), str(logic))
            self.assertTrue(_query(logic, "A |- A | B"), str(logic))
            self.assertTrue(_query(logic, "|- A -> A"), str(logic))
            self.assertFalse(_query(logic, "A | B |- A"), str(logic))

    def test_excluded_middle_holds(self):
        for logic in ALL_LOGICS:
            self.assertTrue(_query(logic, "|- A | ~A"), str(logic))

    def test_double_negation(self):
        self.assertTrue(_query(cn(1), "~~A |- A"))
        self.assertFalse(_query(MBC, "~~A |- A"))
        self.assertFalse(_query(cn(1), "A |- ~~A"))
        self.assertTrue(_query(CPL, "A |- ~~A"))

    def test_inconsistency_without_triviality(self):
        gamma = {A, Not(A)}
        self.assertTrue(is_inconsistent(MBC, gamma))
        self.assertFalse(trivializes(MBC, gamma))
        self.assertTrue(trivializes(CPL, gamma))
        self.assertFalse(is_inconsistent(MBC, {A, B}))

    def test_closure_growth_does_not_change_answers(self):
        queries = ["A, ~A |- B", "A, ~A, oA |- B", "~~A |- A", "A & ~A |- ~B", "|- A | ~A"]
        for logic in ALL_LOGICS[:4]:
            for text in queries:
                gamma, goal = parse_sequent(text)
                once = entails(logic, gamma, goal, closure_rounds=1)
                twice = entails(logic, gamma, goal, closure_rounds=2)
                self.assertEqual(once.entails, twice.entails, f"{logic}: {text}")
                self.assertGreater(twice.closure_size, once.closure_size)

    def test_closure_cap(self):
        with self.assertLogs("src.paralogic", level="ERROR"), self.assertRaises(ResourceCapError):
            EntailmentEngine(MBC, [parse_formula("A & B -> ~(A | B)")], cap=3)

    def test_closure_set_contents(self):
        closure = closure_set(MBC, [Circ(A)], rounds=0)
        self.assertEqual(closure, frozenset({Circ(A), A, Not(A)}))
        self.assertIn(Not(Not(A)), closure_set(MBC, [Circ(A)], rounds=1))


class TestClosureFragment(unittest.TestCase):
    """Test cases for closure_fragment"""

    def test_mbc_fragment(self):
        fragment = closure_fragment(MBC, {A}, ["A"], 1)
        self.assertEqual(fragment, frozenset({A, And(A, A), Or(A, A), Implies(A, A)}))

    def test_classical_fragment_proves_consistency(self):
        fragment = closure_fragment(CPL, {A}, ["A"], 1)
        self.assertIn(Circ(A), fragment)
        self.assertNotIn(Not(A), fragment)


class TestTruthTableOracle(unittest.TestCase):
    """The classical engine agrees with full truth tables"""

    def test_truth_table(self):
        self.assertTrue(cpl_truth_table([A, Not(A)], B))
        self.assertTrue(cpl_truth_table([], Or(A, Not(A))))
        self.assertFalse(cpl_truth_table([Or(A, B)], A))
        with self.assertRaises(UnsupportedFormulaError):
            cpl_truth_table([Circ(A)], A)

    def test_random_agreement(self):
        """Ten thousand seeded instances over four atoms"""
        rng = np.random.default_rng(2024)
        names = ["A", "B", "C", "D"]
        for _ in range(10_000):
            premises = [_random_formula(rng, names, 3) for _ in range(int(rng.integers(3)))]
            goal = _random_formula(rng, names, 3)
            expected = cpl_truth_table(premises, goal)
            result = entails(CPL, premises, goal)
            self.assertEqual(result.entails, expected, f"{premises} |- {goal}")

    def test_exhaustive_single_premise(self):
        """Every premise and goal of depth at most one over three atoms"""
        pool = enumerate_formulas(["A", "B", "C"], 1, with_circ=False)
        self.assertEqual(len(pool), 33)
        for premise in pool:
            for goal in pool:
                self.assertEqual(
                    entails(CPL, [premise], goal).entails,
                    cpl_truth_table([premise], goal),
                    f"{premise} |- {goal}",
                )

    def test_exhaustive_validity(self):
        """
        Every goal of depth at most two over two atoms, without premises.

        Depth three over three atoms runs to millions of formulas, so the deeper
        instances are left to the seeded and property-based checks.
        """
        for goal in enumerate_formulas(["A", "B"], 2, with_circ=False):
            self.assertEqual(entails(CPL, [], goal).entails, cpl_truth_table([], goal), str(goal))

    @settings(max_examples=100, deadline=None)
    @given(st.lists(classical_formulas, max_size=2), classical_formulas)
    def test_agreement_property(self, premises, goal):
        self.assertEqual(entails(CPL, premises, goal).entails, cpl_truth_table(premises, goal))


if __name__ == "__main__":
    unittest.main()
