"""
Propositional formulas over an explicit, finite universe of variables.

Semantics are brute force. A formula evaluated over a Universe of n
variables becomes a truth table: an integer of 2^n bits whose bit k is the
value of the formula under the assignment encoded by k (bit j of k is the
value of the j-th universe variable). Model sets, entailment, consistency
and model counting are then plain integer operations.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from functools import cached_property, lru_cache, reduce
from typing import Iterable, Iterator, Mapping, Union

logger = logging.getLogger(__name__)

MAX_UNIVERSE = 16
VARIABLE_PATTERN = re.compile(r"[A-Za-z_][A-Za-z0-9_]*'*")
RESERVED_WORDS = frozenset({"true", "false"})


class LogicError(Exception):
    pass


class FormulaSyntaxError(LogicError):
    def __init__(self, reason: str, line: int = 1, column: int = 1):
        super().__init__(f"{reason} (line {line}, column {column})")
        self.reason = reason
        self.line = line
        self.column = column


class UniverseError(LogicError):
    pass


class SubstitutionError(LogicError):
    pass


class ProfileError(LogicError):
    """Raised when a knowledge profile violates its preconditions."""

    def __init__(self, violations: Iterable[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class Formula:
    """Base class of the formula tree. Nodes are immutable and hashable."""

    __slots__ = ()

    def __str__(self) -> str:
        return to_text(self)

    def __and__(self, other: Formula) -> Formula:
        return And((self, other))

    def __or__(self, other: Formula) -> Formula:
        return Or((self, other))

    def __invert__(self) -> Formula:
        return Not(self)

    def __rshift__(self, other: Formula) -> Formula:
        return Implies(self, other)


@dataclass(frozen=True)
class Const(Formula):
    value: bool


@dataclass(frozen=True, order=True)
class Var(Formula):
    name: str

    def __post_init__(self):
        if not isinstance(self.name, str) or not VARIABLE_PATTERN.fullmatch(self.name):
            raise UniverseError(f"invalid variable name: {self.name!r}")
        if self.name in RESERVED_WORDS:
            raise UniverseError(f"'{self.name}' is a constant, not a variable name")

    def primed(self) -> Var:
        return Var(self.name + "'")


Variable = Var


@dataclass(frozen=True)
class Not(Formula):
    child: Formula


@dataclass(frozen=True)
class And(Formula):
    children: tuple[Formula, ...]

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) < 2:
            raise LogicError("a conjunction needs at least two children")


@dataclass(frozen=True)
class Or(Formula):
    children: tuple[Formula, ...]

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) < 2:
            raise LogicError("a disjunction needs at least two children")


@dataclass(frozen=True)
class Implies(Formula):
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True)
class Iff(Formula):
    lhs: Formula
    rhs: Formula


TRUE = Const(True)
FALSE = Const(False)

Term = Union[Var, Const]


def conjoin(formulas: Iterable[Formula]) -> Formula:
    """Conjunction of the given formulas; `true` when there are none."""
    items = tuple(formulas)
    if not items:
        return TRUE
    if len(items) == 1:
        return items[0]
    return And(items)


def disjoin(formulas: Iterable[Formula]) -> Formula:
    """Disjunction of the given formulas; `false` when there are none."""
    items = tuple(formulas)
    if not items:
        return FALSE
    if len(items) == 1:
        return items[0]
    return Or(items)


def literal(var: Var, positive: bool = True) -> Formula:
    return var if positive else Not(var)


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, Not):
        return (f.child,)
    if isinstance(f, (And, Or)):
        return f.children
    if isinstance(f, (Implies, Iff)):
        return (f.lhs, f.rhs)
    return ()


def _rebuild(f: Formula, fn) -> Formula:
    if isinstance(f, Not):
        return Not(fn(f.child))
    if isinstance(f, And):
        return And(tuple(fn(c) for c in f.children))
    if isinstance(f, Or):
        return Or(tuple(fn(c) for c in f.children))
    if isinstance(f, Implies):
        return Implies(fn(f.lhs), fn(f.rhs))
    if isinstance(f, Iff):
        return Iff(fn(f.lhs), fn(f.rhs))
    return f


@lru_cache(maxsize=65536)
def ordered_variables(f: Formula) -> tuple[Var, ...]:
    """Variables of `f` in order of first occurrence."""
    if isinstance(f, Var):
        return (f,)
    seen: dict[Var, None] = {}
    for child in children(f):
        for v in ordered_variables(child):
            seen.setdefault(v, None)
    return tuple(seen)


def variables(f: Formula) -> frozenset[Var]:
    return frozenset(ordered_variables(f))


# --- universe and models -------------------------------------------------


@lru_cache(maxsize=None)
def _variable_pattern(index: int, width: int) -> int:
    # bit k is set iff bit `index` of k is set, for k < 2**width
    block = 1 << index
    pattern = ((1 << block) - 1) << block
    span = 2 * block
    size = 1 << width
    while span < size:
        pattern |= pattern << span
        span *= 2
    return pattern


@dataclass(frozen=True)
class Universe:
    """Ordered, duplicate-free set of variables fixing the model space."""

    variables: tuple[Var, ...]
    cap: int = field(default=MAX_UNIVERSE, compare=False, repr=False)

    def __post_init__(self):
        items = tuple(v if isinstance(v, Var) else Var(v) for v in self.variables)
        object.__setattr__(self, "variables", items)
        if len(set(items)) != len(items):
            dupes = sorted({v.name for v in items if items.count(v) > 1})
            raise UniverseError(f"duplicate variables in universe: {', '.join(dupes)}")
        if len(items) > self.cap:
            raise UniverseError(
                f"universe has {len(items)} variables, the brute-force cap is {self.cap}"
            )

    @classmethod
    def of(cls, *formulas: Formula, extra: Iterable[Var] = (), cap: int = MAX_UNIVERSE) -> Universe:
        seen: dict[Var, None] = {}
        for f in formulas:
            for v in ordered_variables(f):
                seen.setdefault(v, None)
        for v in extra:
            seen.setdefault(v, None)
        return cls(tuple(seen), cap=cap)

    def extend(self, more: Iterable[Var]) -> Universe:
        seen = dict.fromkeys(self.variables)
        for v in more:
            seen.setdefault(v, None)
        if len(seen) == len(self.variables):
            return self
        return Universe(tuple(seen), cap=max(self.cap, MAX_UNIVERSE))

    def __len__(self) -> int:
        return len(self.variables)

    def __iter__(self) -> Iterator[Var]:
        return iter(self.variables)

    def __contains__(self, v: object) -> bool:
        return v in self._positions

    def __str__(self) -> str:
        return "{" + ", ".join(v.name for v in self.variables) + "}"

    @cached_property
    def _positions(self) -> dict[Var, int]:
        return {v: i for i, v in enumerate(self.variables)}

    def index(self, v: Var) -> int:
        try:
            return self._positions[v]
        except KeyError:
            raise UniverseError(f"variable {v.name} is not in the universe {self}") from None

    @property
    def size(self) -> int:
        """Number of assignments, 2^|vars|."""
        return 1 << len(self.variables)

    @property
    def full(self) -> int:
        """Truth table of `true`."""
        return (1 << self.size) - 1

    def pattern(self, v: Var) -> int:
        return _variable_pattern(self.index(v), len(self.variables))

    @cached_property
    def patterns(self) -> dict[Var, int]:
        n = len(self.variables)
        return {v: _variable_pattern(i, n) for i, v in enumerate(self.variables)}

    def require(self, *formulas: Formula) -> None:
        missing = sorted({v.name for f in formulas for v in ordered_variables(f) if v not in self})
        if missing:
            raise UniverseError(f"variables {', '.join(missing)} are not in the universe {self}")


@dataclass(frozen=True, order=True)
class Model:
    """Total assignment over a universe; bit j of `bits` is the j-th variable."""

    universe: Universe
    bits: int

    def __post_init__(self):
        if not 0 <= self.bits < self.universe.size:
            raise UniverseError(f"assignment {self.bits} out of range for {self.universe}")

    @classmethod
    def from_assignment(cls, universe: Universe, assignment: Mapping[Var, bool]) -> Model:
        missing = [v.name for v in universe if v not in assignment]
        if missing:
            raise UniverseError(f"assignment is not total, missing {', '.join(missing)}")
        bits = sum(1 << i for i, v in enumerate(universe) if assignment[v])
        return cls(universe, bits)

    def value(self, v: Var) -> bool:
        return bool(self.bits >> self.universe.index(v) & 1)

    __getitem__ = value

    def flipped(self, v: Var) -> Model:
        return Model(self.universe, self.bits ^ (1 << self.universe.index(v)))

    def as_dict(self) -> dict[Var, bool]:
        return {v: bool(self.bits >> i & 1) for i, v in enumerate(self.universe)}

    def to_formula(self) -> Formula:
        """The minterm satisfied by this model alone."""
        return conjoin(literal(v, value) for v, value in self.as_dict().items())

    def __str__(self) -> str:
        return "".join("1" if self.bits >> i & 1 else "0" for i in range(len(self.universe)))


# --- semantics ------------------------------------------------------------


def _evaluate(f: Formula, patterns: Mapping[Var, int], full: int) -> int:
    if isinstance(f, Var):
        return patterns[f]
    if isinstance(f, Const):
        return full if f.value else 0
    if isinstance(f, Not):
        return full ^ _evaluate(f.child, patterns, full)
    if isinstance(f, And):
        return reduce(lambda acc, c: acc & _evaluate(c, patterns, full), f.children, full)
    if isinstance(f, Or):
        return reduce(lambda acc, c: acc | _evaluate(c, patterns, full), f.children, 0)
    if isinstance(f, Implies):
        return (full ^ _evaluate(f.lhs, patterns, full)) | _evaluate(f.rhs, patterns, full)
    if isinstance(f, Iff):
        return full ^ (_evaluate(f.lhs, patterns, full) ^ _evaluate(f.rhs, patterns, full))
    raise LogicError(f"unknown formula node: {f!r}")


@lru_cache(maxsize=16384)
def _cached_table(f: Formula, u: Universe) -> int:
    return _evaluate(f, u.patterns, u.full)


def truth_table(f: Formula, u: Universe) -> int:
    """Bit set of the assignments over `u` that satisfy `f`."""
    u.require(f)
    return _cached_table(f, u)


def substituted_table(f: Formula, mapping: Mapping[Var, Term], u: Universe) -> int:
    """Truth table of the simultaneous substitution f[mapping] without building it."""
    patterns = dict(u.patterns)
    for source, target in mapping.items():
        if isinstance(target, Const):
            patterns[source] = u.full if target.value else 0
        else:
            patterns[source] = u.pattern(target)
    missing = sorted({v.name for v in ordered_variables(f) if v not in patterns})
    if missing:
        raise UniverseError(f"variables {', '.join(missing)} are not in the universe {u}")
    return _evaluate(f, patterns, u.full)


def iter_bits(table: int) -> Iterator[int]:
    while table:
        low = table & -table
        yield low.bit_length() - 1
        table ^= low


def models(f: Formula, u: Universe) -> frozenset[Model]:
    return frozenset(Model(u, k) for k in iter_bits(truth_table(f, u)))


def count_models(f: Formula, u: Universe) -> int:
    return truth_table(f, u).bit_count()


def is_satisfiable(f: Formula, u: Universe) -> bool:
    return truth_table(f, u) != 0


def entails(f: Formula, g: Formula, u: Universe) -> bool:
    return truth_table(f, u) & ~truth_table(g, u) == 0


def consistent_with(f: Formula, g: Formula, u: Universe) -> bool:
    return truth_table(f, u) & truth_table(g, u) != 0


def equivalent(f: Formula, g: Formula, u: Universe) -> bool:
    return truth_table(f, u) == truth_table(g, u)


def formula_from_models(selected: Iterable[Model], u: Universe) -> Formula:
    """Disjunction of minterms, in assignment order."""
    return disjoin(m.to_formula() for m in sorted(selected, key=lambda m: m.bits))


def project_table(table: int, u: Universe, keep: Iterable[Var]) -> int:
    """Existential projection of a truth table onto `keep` (Shannon expansion)."""
    keep = frozenset(keep)
    full = u.full
    for v in u:
        if v in keep:
            continue
        pattern = u.pattern(v)
        shift = 1 << u.index(v)
        merged = ((table & pattern) >> shift) | (table & (full ^ pattern))
        table = merged | (merged << shift)
    return table


# --- syntax transformations ----------------------------------------------


def substitute(f: Formula, source: Var, target: Term) -> Formula:
    """Replace every occurrence of `source` by `target`."""
    if source not in variables(f):
        return f

    def walk(node: Formula) -> Formula:
        if isinstance(node, Var):
            return target if node == source else node
        return _rebuild(node, walk)

    return walk(f)


def as_substitution(mapping: Mapping[Var, Term] | Iterable[tuple[Var, Term]]) -> dict[Var, Term]:
    pairs = mapping.items() if isinstance(mapping, Mapping) else mapping
    result: dict[Var, Term] = {}
    for source, target in pairs:
        if source in result:
            raise SubstitutionError(f"variable {source.name} is mapped twice")
        result[source] = target
    return result


def simultaneous_substitute(f: Formula, mapping: Mapping[Var, Term] | Iterable[tuple[Var, Term]]) -> Formula:
    """Apply all replacements in one pass; introduced variables are never re-replaced."""
    table = as_substitution(mapping)
    if not table or not variables(f) & table.keys():
        return f

    def walk(node: Formula) -> Formula:
        if isinstance(node, Var):
            return table.get(node, node)
        return _rebuild(node, walk)

    return walk(f)


def simplify(f: Formula) -> Formula:
    """Constant folding, double negation and flattening. Preserves equivalence."""
    if isinstance(f, (Var, Const)):
        return f
    if isinstance(f, Not):
        child = simplify(f.child)
        if isinstance(child, Const):
            return Const(not child.value)
        if isinstance(child, Not):
            return child.child
        return Not(child)
    if isinstance(f, (And, Or)):
        kind = type(f)
        absorbing, neutral = (FALSE, TRUE) if kind is And else (TRUE, FALSE)
        items: list[Formula] = []
        for c in f.children:
            c = simplify(c)
            if c == absorbing:
                return absorbing
            if c == neutral:
                continue
            items.extend(c.children if isinstance(c, kind) else (c,))
        if not items:
            return neutral
        return items[0] if len(items) == 1 else kind(tuple(items))
    if isinstance(f, Implies):
        lhs, rhs = simplify(f.lhs), simplify(f.rhs)
        if lhs == TRUE:
            return rhs
        if lhs == FALSE or rhs == TRUE:
            return TRUE
        if rhs == FALSE:
            return simplify(Not(lhs))
        return Implies(lhs, rhs)
    if isinstance(f, Iff):
        lhs, rhs = simplify(f.lhs), simplify(f.rhs)
        for a, b in ((lhs, rhs), (rhs, lhs)):
            if a == TRUE:
                return b
            if a == FALSE:
                return simplify(Not(b))
        return Iff(lhs, rhs)
    raise LogicError(f"unknown formula node: {f!r}")


def forget(f: Formula, keep: Iterable[Var], u: Universe | None = None) -> Formula:
    """
    Restrict `f` to the variables in `keep` (existential projection).

    Every dropped variable x is eliminated by Shannon expansion,
    f[x/true] | f[x/false], in order of first occurrence.
    """
    keep = frozenset(keep)
    universe = u if u is not None else Universe.of(f)
    stray = sorted(v.name for v in keep if v not in universe)
    if stray:
        raise SubstitutionError(f"cannot keep {', '.join(stray)}: not in the universe {universe}")
    result = f
    for v in ordered_variables(f):
        if v not in keep:
            result = simplify(Or((substitute(result, v, TRUE), substitute(result, v, FALSE))))
    return result


# --- printing ---------------------------------------------------------------

_PRECEDENCE = {Iff: 1, Implies: 2, Or: 3, And: 4, Not: 5}


def to_text(f: Formula) -> str:
    """Print `f` in the grammar accepted by the parser, with minimal parentheses."""
    return _render(f, 0)


def _render(f: Formula, context: int) -> str:
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Var):
        return f.name
    level = _PRECEDENCE[type(f)]
    if isinstance(f, Not):
        text = "!" + _render(f.child, level)
    elif isinstance(f, And):
        text = " & ".join(_render(c, level + 1) for c in f.children)
    elif isinstance(f, Or):
        text = " | ".join(_render(c, level + 1) for c in f.children)
    elif isinstance(f, Implies):
        text = f"{_render(f.lhs, level + 1)} -> {_render(f.rhs, level)}"
    else:
        text = f"{_render(f.lhs, level)} <-> {_render(f.rhs, level + 1)}"
    return f"({text})" if level < context else text


# --- knowledge profiles --------------------------------------------------------


def fresh_primes(alphabet: Iterable[Var], levels: int = 1, taken: Iterable[Var] = ()) -> dict[Var, tuple[Var, ...]]:
    """
    Fresh variables for each variable of `alphabet`: x', then x'' when x'
    is already taken, and so on. No two variables share a fresh name.
    """
    alphabet = tuple(alphabet)
    used = set(alphabet) | set(taken)
    result: dict[Var, tuple[Var, ...]] = {}
    for v in alphabet:
        names: list[Var] = []
        candidate = v
        while len(names) < levels:
            candidate = candidate.primed()
            if candidate not in used:
                names.append(candidate)
                used.add(candidate)
        result[v] = tuple(names)
    return result


def profile_violations(bases: Iterable[Formula], upper: Formula, lower: Formula,
                       cap: int = MAX_UNIVERSE) -> list[str]:
    bases = tuple(bases)
    problems = []
    if not bases:
        problems.append("the profile has no knowledge bases")
    u = Universe.of(*bases, upper, lower, cap=cap)
    upper_ok = is_satisfiable(upper, u)
    lower_ok = is_satisfiable(lower, u)
    if not upper_ok:
        problems.append("A is unsatisfiable")
    if not lower_ok:
        problems.append("B is unsatisfiable")
    if upper_ok and lower_ok and not consistent_with(upper, lower, u):
        problems.append("A and B contradict")
    return problems


@dataclass(frozen=True)
class KnowledgeProfile:
    """Knowledge bases K_1..K_n with the upper bound A and the lower bound B."""

    bases: tuple[Formula, ...]
    upper: Formula = TRUE
    lower: Formula = TRUE
    cap: int = field(default=MAX_UNIVERSE, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "bases", tuple(self.bases))
        violations = profile_violations(self.bases, self.upper, self.lower, self.cap)
        if violations:
            raise ProfileError(violations)

    @property
    def n(self) -> int:
        return len(self.bases)

    @cached_property
    def alphabet(self) -> tuple[Var, ...]:
        """Variables of the bases and bounds, in order of first occurrence."""
        return Universe.of(*self.bases, self.upper, self.lower, cap=self.cap).variables

    def universe(self) -> Universe:
        return Universe(self.alphabet, cap=self.cap)

    def fresh_primes(self, levels: int = 1) -> dict[Var, tuple[Var, ...]]:
        return fresh_primes(self.alphabet, levels)

    def merge_universe(self, levels: int = 1, cap: int | None = None) -> Universe:
        """The alphabet followed by the fresh primes a merge may introduce."""
        primes = [p for names in self.fresh_primes(levels).values() for p in names]
        return Universe(self.alphabet + tuple(primes), cap=cap if cap is not None else self.cap)

    def conjunction(self) -> Formula:
        return conjoin(self.bases)

    def others(self, index: int) -> tuple[Formula, ...]:
        return tuple(k for i, k in enumerate(self.bases) if i != index)
