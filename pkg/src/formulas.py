"""
Formulas Module
Propositional object language with negation, consistency operator and binary connectives.
"""

import logging
import re
from dataclasses import dataclass
from itertools import product
from typing import FrozenSet, Iterable, List, Tuple, Union

from src.exceptions import FormulaSyntaxError

logger = logging.getLogger(__name__)

ATOM_PATTERN = re.compile(r"[A-Z][A-Za-z0-9_]*")


@dataclass(frozen=True)
class Atom:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Not:
    arg: "Formula"

    def __str__(self) -> str:
        return f"~{self.arg}"


@dataclass(frozen=True)
class Circ:
    """The consistency operator."""

    arg: "Formula"

    def __str__(self) -> str:
        return f"o{self.arg}"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"

    def __str__(self) -> str:
        return f"({self.left} & {self.right})"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"

    def __str__(self) -> str:
        return f"({self.left} | {self.right})"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"

    def __str__(self) -> str:
        return f"({self.left} -> {self.right})"


Formula = Union[Atom, Not, Circ, And, Or, Implies]
FormulaSet = FrozenSet[Formula]
UNARY = (Not, Circ)
BINARY = (And, Or, Implies)


_SYMBOLS = {
    "->": "->",
    "→": "->",
    "~": "~",
    "¬": "~",
    "∘": "o",
    "&": "&",
    "∧": "&",
    "|": "|",
    "∨": "|",
    "(": "(",
    ")": ")",
}


def _tokenize(text: str) -> List[Tuple[str, str, int]]:
    tokens = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if text.startswith("->", i):
            tokens.append(("->", "->", i))
            i += 2
            continue
        if ch in _SYMBOLS:
            tokens.append((_SYMBOLS[ch], ch, i))
            i += 1
            continue
        if ch == "o":
            tokens.append(("o", ch, i))
            i += 1
            continue
        match = ATOM_PATTERN.match(text, i)
        if match:
            tokens.append(("atom", match.group(0), i))
            i = match.end()
            continue
        raise FormulaSyntaxError(f"Unexpected character {ch!r}", position=i)
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.index = 0

    def _peek(self) -> str:
        return self.tokens[self.index][0] if self.index < len(self.tokens) else "eof"

    def _position(self) -> int:
        if self.index < len(self.tokens):
            return self.tokens[self.index][2]
        return len(self.text)

    def _take(self, kind: str) -> Tuple[str, str, int]:
        if self._peek() != kind:
            found = "end of input" if self._peek() == "eof" else repr(self.tokens[self.index][1])
            raise FormulaSyntaxError(f"Expected {kind!r}, found {found}", position=self._position())
        token = self.tokens[self.index]
        self.index += 1
        return token

    def parse(self) -> Formula:
        if not self.tokens:
            raise FormulaSyntaxError("Empty formula", position=0)
        formula = self._implication()
        if self._peek() != "eof":
            raise FormulaSyntaxError(
                f"Unexpected {self.tokens[self.index][1]!r}", position=self._position()
            )
        return formula

    def _implication(self) -> Formula:
        left = self._disjunction()
        if self._peek() == "->":
            self.index += 1
            return Implies(left, self._implication())
        return left

    def _disjunction(self) -> Formula:
        left = self._conjunction()
        while self._peek() == "|":
            self.index += 1
            left = Or(left, self._conjunction())
        return left

    def _conjunction(self) -> Formula:
        left = self._unary()
        while self._peek() == "&":
            self.index += 1
            left = And(left, self._unary())
        return left

    def _unary(self) -> Formula:
        kind = self._peek()
        if kind == "~":
            self.index += 1
            return Not(self._unary())
        if kind == "o":
            self.index += 1
            return Circ(self._unary())
        if kind == "(":
            self.index += 1
            inner = self._implication()
            self._take(")")
            return inner
        if kind == "atom":
            return Atom(self._take("atom")[1])
        found = "end of input" if kind == "eof" else repr(self.tokens[self.index][1])
        raise FormulaSyntaxError(f"Expected a formula, found {found}", position=self._position())


def parse_formula(text: str) -> Formula:
    """
    Parse a formula.

    Grammar: ``atom | ~F | oF | F & F | F | F | F -> F`` with parentheses. ``~`` and
    ``o`` bind tightest, then ``&``, then ``|``, then ``->`` (right-associative).
    Atoms start with an upper-case letter.

    Args:
        text: Formula text

    Returns:
        The formula tree

    Raises:
        FormulaSyntaxError: with the 0-based offset of the offending token
    """
    return _Parser(text).parse()


def _split_top_level(text: str, offset: int) -> List[Tuple[str, int]]:
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 0:
            parts.append((text[start:i], offset + start))
            start = i + 1
    parts.append((text[start:], offset + start))
    return parts


def _parse_at(text: str, offset: int) -> Formula:
    try:
        return parse_formula(text)
    except FormulaSyntaxError as e:
        raise FormulaSyntaxError(e.message, position=offset + (e.position or 0))


def parse_formula_set(text: str, offset: int = 0) -> FormulaSet:
    """Parse a comma-separated list of formulas; blank input is the empty set."""
    if not text.strip():
        return frozenset()
    return frozenset(_parse_at(part, start) for part, start in _split_top_level(text, offset))


def parse_sequent(text: str) -> Tuple[FormulaSet, Formula]:
    """Parse a query ``GAMMA |- GOAL``."""
    if text.count("|-") != 1:
        raise FormulaSyntaxError("Query must have the form 'GAMMA |- GOAL'", position=0)
    left, right = text.split("|-")
    gamma = parse_formula_set(left)
    return gamma, _parse_at(right, len(left) + 2)


def subformulas(formula: Formula) -> FrozenSet[Formula]:
    found = set()
    stack = [formula]
    while stack:
        f = stack.pop()
        if f in found:
            continue
        found.add(f)
        if isinstance(f, UNARY):
            stack.append(f.arg)
        elif isinstance(f, BINARY):
            stack.extend((f.left, f.right))
    return frozenset(found)


def atoms(formulas: Union[Formula, Iterable[Formula]]) -> FrozenSet[str]:
    if isinstance(formulas, (Atom,) + UNARY + BINARY):
        formulas = (formulas,)
    names = set()
    for formula in formulas:
        names.update(f.name for f in subformulas(formula) if isinstance(f, Atom))
    return frozenset(names)


def fresh_atom(formulas: Iterable[Formula]) -> Atom:
    """An atom occurring in none of the formulas."""
    used = atoms(tuple(formulas))
    index = 0
    while f"Fresh{index}" in used:
        index += 1
    return Atom(f"Fresh{index}")


def enumerate_formulas(
    alphabet: Iterable[str], max_depth: int, with_circ: bool = True
) -> Tuple[Formula, ...]:
    """Every formula over the alphabet with tree depth at most ``max_depth``."""
    layer = [Atom(name) for name in sorted(set(alphabet))]
    seen = list(layer)
    for _ in range(max_depth):
        current = list(seen)
        new = []
        for f in current:
            new.append(Not(f))
            if with_circ:
                new.append(Circ(f))
        for left, right in product(current, repeat=2):
            new.extend((And(left, right), Or(left, right), Implies(left, right)))
        known = set(seen)
        seen.extend(f for f in new if f not in known)
    return tuple(seen)


def without_circ(formula: Formula) -> Formula:
    """Rewrite ``oA`` as ``~(A & ~A)`` throughout."""
    if isinstance(formula, Atom):
        return formula
    if isinstance(formula, Circ):
        inner = without_circ(formula.arg)
        return Not(And(inner, Not(inner)))
    if isinstance(formula, Not):
        return Not(without_circ(formula.arg))
    return type(formula)(without_circ(formula.left), without_circ(formula.right))


def has_circ(formula: Formula) -> bool:
    return any(isinstance(f, Circ) for f in subformulas(formula))


def _well_behaved_once(a: Formula) -> Formula:
    return Not(And(a, Not(a)))


def well_behaved(a: Formula, n: int) -> Formula:
    """
    The annotation ``A(n) = A1 & ... & An`` where ``A1 = ~(A & ~A)`` and
    ``Ak = ~(A(k-1) & ~A(k-1))`` for the single-step ``A(k-1)``.
    """
    if n < 1:
        raise ValueError(f"Well-behavedness level must be >= 1, got {n}")
    step = _well_behaved_once(a)
    result = step
    for _ in range(n - 1):
        step = _well_behaved_once(step)
        result = And(result, step)
    return result


def gamma_n(n: int, a: Formula = Atom("A")) -> FormulaSet:
    """``{A, ~A, A(n)}``: trivial in C_n, not in C_(n+1)."""
    return frozenset({a, Not(a), well_behaved(a, n)})


def decision_atom(value: int) -> Atom:
    return Atom(f"D{value}")


def outcome_theory(decided: Iterable[int], alphabet: Iterable[int]) -> FormulaSet:
    """
    Decision literals plus value exclusivity.

    Args:
        decided: Values some process decided
        alphabet: Values the exclusivity axioms range over (decided values are added)

    Returns:
        ``{Dv : v decided} | {Da -> ~Db : a != b}``
    """
    decided = set(decided)
    values = sorted(set(alphabet) | decided)
    theory = {decision_atom(v) for v in decided}
    for a in values:
        for b in values:
            if a != b:
                theory.add(Implies(decision_atom(a), Not(decision_atom(b))))
    return frozenset(theory)


def render_set(formulas: Iterable[Formula]) -> str:
    return ", ".join(sorted(str(f) for f in formulas))
