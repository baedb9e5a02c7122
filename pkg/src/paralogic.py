"""
Paraconsistent Logic Module
Bivaluation-based entailment for classical logic, the C_n hierarchy and an LFI with a
primitive consistency operator.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, Optional, Sequence, Tuple

import numpy as np
import z3

from src import config
from src.exceptions import ResourceCapError, UnsupportedFormulaError
from src.formulas import (
    And,
    Atom,
    BINARY,
    Circ,
    Formula,
    FormulaSet,
    Implies,
    Not,
    Or,
    atoms,
    enumerate_formulas,
    fresh_atom,
    has_circ,
    subformulas,
    well_behaved,
    without_circ,
)

logger = logging.getLogger(__name__)

N_MAX = 5


class LogicKind(str, Enum):
    CPL = "cpl"
    CN = "cn"
    MBC = "mbc"


@dataclass(frozen=True)
class LogicId:
    kind: LogicKind
    n: int = 0

    def __post_init__(self):
        if self.kind == LogicKind.CN and not 1 <= self.n <= N_MAX:
            raise ValueError(f"C_n is available for n in 1..{N_MAX}, got {self.n}")
        if self.kind != LogicKind.CN and self.n != 0:
            raise ValueError(f"{self.kind.value} takes no level")

    SUPPORTED = ("cpl", "mbc") + tuple(f"c{i}" for i in range(1, N_MAX + 1))

    @classmethod
    def parse(cls, text: str) -> "LogicId":
        """Read ``cpl``, ``mbc`` or ``c1`` .. ``c5`` (case-insensitive)."""
        key = text.strip().lower()
        if key == "cpl":
            return CPL
        if key == "mbc":
            return MBC
        if key.startswith("c") and key[1:].isdigit():
            return cn(int(key[1:]))
        raise ValueError(f"Logic {text!r} not supported. Choose from {list(cls.SUPPORTED)}")

    @property
    def key(self) -> str:
        return f"c{self.n}" if self.kind == LogicKind.CN else self.kind.value

    @property
    def is_paraconsistent(self) -> bool:
        return self.kind != LogicKind.CPL

    def __str__(self) -> str:
        return {"cpl": "CPL", "mbc": "mbC"}.get(self.key, f"C{self.n}")


CPL = LogicId(LogicKind.CPL)
MBC = LogicId(LogicKind.MBC)


def cn(n: int) -> LogicId:
    return LogicId(LogicKind.CN, n)


@dataclass(frozen=True)
class Bivaluation:
    """A (possibly non-truth-functional) assignment of 0/1 to formulas."""

    logic: LogicId
    assignment: Tuple[Tuple[str, int], ...]

    def value(self, formula) -> Optional[int]:
        return dict(self.assignment).get(str(formula))

    def render(self) -> str:
        return " ".join(f"{name}={value}" for name, value in self.assignment)


@dataclass(frozen=True)
class EntailmentResult:
    entails: bool
    counter_valuation: Optional[Bivaluation]
    closure_size: int

    def __bool__(self) -> bool:
        return self.entails

    def verdict(self) -> str:
        if self.entails:
            return "ENTAILS"
        return f"COUNTEREXAMPLE {self.counter_valuation.render()}"


def closure_set(logic: LogicId, formulas: Iterable[Formula], rounds: int = 1) -> FrozenSet[Formula]:
    """
    Formulas a bivaluation must be total on.

    Round 0 is the subformula set (plus ``~A`` for every ``oA`` in mbC). Every further
    round adds ``~X`` for each member and, in C_n, the subformulas of ``X(n)``.
    """
    current = set()
    for formula in formulas:
        current |= subformulas(formula)
    if logic.kind == LogicKind.MBC:
        current |= {Not(f.arg) for f in current if isinstance(f, Circ)}
    for _ in range(rounds):
        additions = set()
        for f in current:
            additions.add(Not(f))
            if logic.kind == LogicKind.CN:
                additions |= subformulas(well_behaved(f, logic.n))
        current |= additions
    return frozenset(current)


def _classical_clause(f: Formula, v: Dict[Formula, z3.BoolRef]):
    if isinstance(f, And):
        return v[f] == z3.And(v[f.left], v[f.right])
    if isinstance(f, Or):
        return v[f] == z3.Or(v[f.left], v[f.right])
    if isinstance(f, Implies):
        return v[f] == z3.Implies(v[f.left], v[f.right])
    return None


def _clauses(logic: LogicId, closure: FrozenSet[Formula], v: Dict[Formula, z3.BoolRef]) -> list:
    clauses = []
    for f in closure:
        clause = _classical_clause(f, v)
        if clause is not None:
            clauses.append(clause)
            continue
        if isinstance(f, Not):
            if logic.kind == LogicKind.CPL:
                clauses.append(v[f] == z3.Not(v[f.arg]))
                continue
            # A false formula has a true negation; a true one may have either.
            clauses.append(z3.Or(v[f.arg], v[f]))
            if logic.kind == LogicKind.CN and isinstance(f.arg, Not):
                clauses.append(z3.Implies(v[f], v[f.arg.arg]))
        elif isinstance(f, Circ):
            if logic.kind == LogicKind.CPL:
                clauses.append(v[f])
            else:
                clauses.append(z3.Implies(v[f], z3.Or(z3.Not(v[f.arg]), z3.Not(v[Not(f.arg)]))))

    if logic.kind == LogicKind.CN:
        clauses.extend(_annotation_clauses(logic.n, closure, v))
    return clauses


def _annotation_clauses(n: int, closure: FrozenSet[Formula], v: Dict[Formula, z3.BoolRef]) -> list:
    clauses = []
    annotated = {}
    for f in closure:
        ann = well_behaved(f, n)
        if ann in closure:
            annotated[f] = ann
    for f, ann in annotated.items():
        neg = Not(f)
        if neg in closure:
            # Well-behaved formulas are classical.
            clauses.append(z3.Implies(v[ann], z3.Xor(v[f], v[neg])))
        if neg in annotated:
            clauses.append(z3.Implies(v[ann], v[annotated[neg]]))
        if isinstance(f, BINARY) and f.left in annotated and f.right in annotated:
            clauses.append(
                z3.Implies(z3.And(v[annotated[f.left]], v[annotated[f.right]]), v[ann])
            )
    return clauses


class EntailmentEngine:
    """
    A solver loaded with the clause system of one logic over one closure set.

    Queries are answered with assumptions, so one engine serves any number of
    entailment questions whose formulas lie in its closure.
    """

    def __init__(
        self,
        logic: LogicId,
        formulas: Iterable[Formula],
        closure_rounds: int = 1,
        cap: Optional[int] = None,
    ):
        """
        Build the engine.

        Args:
            logic: Logic whose bivaluations are searched
            formulas: Formulas the engine must be able to evaluate
            closure_rounds: Closure growth rounds (s -> s+1 per extra round)
            cap: Largest closure set accepted (default from FLPE_CLOSURE_CAP)
        """
        self.logic = logic
        cap = config.closure_cap() if cap is None else cap
        prepared = [self.prepare(f) for f in formulas]
        self.closure = closure_set(logic, prepared, closure_rounds)
        if len(self.closure) > cap:
            logger.error(f"Closure of {len(self.closure)} formulas exceeds cap {cap}")
            raise ResourceCapError(
                f"Closure set of {len(self.closure)} formulas exceeds the cap of {cap}"
            )
        ordered = sorted(self.closure, key=lambda f: (len(str(f)), str(f)))
        self._vars = {f: z3.Bool(f"f{i}") for i, f in enumerate(ordered)}
        self._solver = z3.Solver()
        self._solver.add(*_clauses(logic, self.closure, self._vars))
        logger.debug(f"Engine for {logic} over {len(self.closure)} formulas")

    @property
    def size(self) -> int:
        return len(self.closure)

    def prepare(self, formula: Formula) -> Formula:
        # In C_n the consistency operator is the abbreviation ~(A & ~A).
        return without_circ(formula) if self.logic.kind == LogicKind.CN else formula

    def countermodel(self, gamma: Iterable[Formula], goal: Formula) -> Optional[Bivaluation]:
        """A bivaluation making every member of gamma true and goal false, if any."""
        gamma = tuple(gamma)
        assumptions = [self._vars[self.prepare(g)] for g in gamma]
        assumptions.append(z3.Not(self._vars[self.prepare(goal)]))
        result = self._solver.check(*assumptions)
        if result == z3.unsat:
            return None
        if result != z3.sat:
            raise ResourceCapError(f"Solver returned {result} for {self.logic}")
        model = self._solver.model()

        shown = sorted(atoms(gamma + (goal,)))
        entries = [(name, self._value(model, Atom(name))) for name in shown]
        extra = sorted({str(f): f for f in gamma + (goal,) if not isinstance(f, Atom)}.items())
        entries.extend((name, self._value(model, f)) for name, f in extra)
        return Bivaluation(self.logic, tuple(entries))

    def _value(self, model, formula: Formula) -> int:
        var = self._vars[self.prepare(formula)]
        return 1 if z3.is_true(model.eval(var, model_completion=True)) else 0

    def entails(self, gamma: Iterable[Formula], goal: Formula) -> bool:
        return self.countermodel(gamma, goal) is None


@lru_cache(maxsize=4096)
def _entailment(
    logic: LogicId, gamma: FormulaSet, goal: Formula, rounds: int, cap: int
) -> EntailmentResult:
    engine = EntailmentEngine(logic, tuple(gamma) + (goal,), rounds, cap)
    counter = engine.countermodel(gamma, goal)
    return EntailmentResult(counter is None, counter, engine.size)


def entails(
    logic: LogicId, gamma: Iterable[Formula], goal: Formula, closure_rounds: int = 1
) -> EntailmentResult:
    """
    Decide ``gamma |= goal`` in a logic.

    Args:
        logic: CPL, C_n or mbC
        gamma: Premises
        goal: Conclusion
        closure_rounds: Closure growth rounds; answers are decided at the reported size

    Returns:
        EntailmentResult; truthy iff the entailment holds, else carrying a countermodel
    """
    return _entailment(logic, frozenset(gamma), goal, closure_rounds, config.closure_cap())


def is_inconsistent(logic: LogicId, gamma: Iterable[Formula], closure_rounds: int = 1) -> bool:
    """True iff some subformula A of gamma has both A and ~A entailed."""
    gamma = frozenset(gamma)
    candidates = set()
    for formula in gamma:
        candidates |= subformulas(formula)
    for candidate in sorted(candidates, key=str):
        if entails(logic, gamma, candidate, closure_rounds) and entails(
            logic, gamma, Not(candidate), closure_rounds
        ):
            logger.debug(f"{logic}: both {candidate} and its negation follow")
            return True
    return False


def trivializes(logic: LogicId, gamma: Iterable[Formula], closure_rounds: int = 1) -> bool:
    """True iff gamma entails an atom that occurs nowhere in gamma."""
    gamma = frozenset(gamma)
    return entails(logic, gamma, fresh_atom(gamma), closure_rounds).entails


def lfi_circumvention_check(gamma: Iterable[Formula], b: Formula) -> bool:
    """
    If mbC does not derive ``b`` from gamma, then adding ``b, ~b, ob`` explodes.

    Returns:
        The truth of that implication (vacuously true when gamma derives ``b``)
    """
    gamma = frozenset(gamma)
    if entails(MBC, gamma, b):
        return True
    return trivializes(MBC, gamma | {b, Not(b), Circ(b)})


def closure_fragment(
    logic: LogicId,
    gamma: Iterable[Formula],
    alphabet: Iterable[str],
    depth: int,
    closure_rounds: int = 1,
) -> FormulaSet:
    """
    The part of the deductive closure of gamma made of formulas up to a tree depth.

    Args:
        logic: Logic to close under
        gamma: Premises
        alphabet: Atom names the fragment is built from
        depth: Maximum tree depth of fragment formulas
        closure_rounds: Closure growth rounds

    Returns:
        Every enumerated formula gamma entails
    """
    gamma = tuple(frozenset(gamma))
    candidates = enumerate_formulas(alphabet, depth)
    engine = EntailmentEngine(logic, gamma + candidates, closure_rounds)
    fragment = frozenset(f for f in candidates if engine.entails(gamma, f))
    logger.info(
        f"{logic}: {len(fragment)} of {len(candidates)} formulas up to depth {depth} follow"
    )
    return fragment


def _evaluate(formula: Formula, columns: Dict[str, np.ndarray]) -> np.ndarray:
    if isinstance(formula, Atom):
        return columns[formula.name]
    if isinstance(formula, Not):
        return ~_evaluate(formula.arg, columns)
    left = _evaluate(formula.left, columns)
    right = _evaluate(formula.right, columns)
    if isinstance(formula, And):
        return left & right
    if isinstance(formula, Or):
        return left | right
    return ~left | right


def cpl_truth_table(gamma: Sequence[Formula], goal: Formula) -> bool:
    """
    Classical entailment by full truth table.

    Raises:
        UnsupportedFormulaError: if the consistency operator occurs
    """
    formulas = tuple(gamma) + (goal,)
    for formula in formulas:
        if has_circ(formula):
            raise UnsupportedFormulaError(f"Truth tables do not cover the operator o: {formula}")
    names = sorted(atoms(formulas))
    rows = np.arange(2 ** len(names))
    columns = {name: ((rows >> i) & 1).astype(bool) for i, name in enumerate(names)}
    premises = np.ones(len(rows), dtype=bool)
    for formula in gamma:
        premises &= np.broadcast_to(_evaluate(formula, columns), premises.shape)
    conclusion = np.broadcast_to(_evaluate(goal, columns), premises.shape)
    return bool(np.all(~premises | conclusion))
