"""
Mistake transformations and their inverses.

A source holds a correct formula S and delivers K = L(S), where L is a set
of mistakes: renamings (ren x->y), wrong generalizations (gen x), wrong
particularizations (par x) and value flips (flip M x). The merge engine
works backwards from K, so this module also enumerates the mistakes that
may have been made (forward candidates) and the transformations that undo
them (inverse candidates).
"""

import logging
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping, Sequence, Union

from .logic import (
    TRUE,
    Formula,
    Implies,
    KnowledgeProfile,
    Model,
    Not,
    Or,
    And,
    Universe,
    Var,
    conjoin,
    entails,
    fresh_primes,
    simplify,
    simultaneous_substitute,
    substitute,
    truth_table,
    variables,
)

logger = logging.getLogger(__name__)

RENAMING = "renaming"
GENERALIZATION = "generalization"
PARTICULARIZATION = "particularization"
VALUE_FLIP = "value-flip"
MISTAKE_KINDS = (RENAMING, GENERALIZATION, PARTICULARIZATION)


class TransformError(Exception):
    pass


@dataclass(frozen=True, order=True)
class Renaming:
    source: Var
    target: Var

    kind = RENAMING

    def __post_init__(self):
        if self.source == self.target:
            raise TransformError(f"renaming {self.source.name} to itself")

    def apply(self, f: Formula) -> Formula:
        return simultaneous_substitute(f, {self.source: self.target})

    def __str__(self) -> str:
        return f"ren {self.source.name}->{self.target.name}"


@dataclass(frozen=True, order=True)
class Generalization:
    """Drops the assumption `var`: F becomes F[var/true]."""

    var: Var

    kind = GENERALIZATION

    def apply(self, f: Formula) -> Formula:
        if self.var not in variables(f):
            return f
        return simplify(substitute(f, self.var, TRUE))

    def __str__(self) -> str:
        return f"gen {self.var.name}"


@dataclass(frozen=True, order=True)
class Particularization:
    """Adds the spurious assumption `var`: F becomes var -> F."""

    var: Var

    kind = PARTICULARIZATION

    def apply(self, f: Formula) -> Formula:
        return Implies(self.var, f)

    def __str__(self) -> str:
        return f"par {self.var.name}"


@dataclass(frozen=True, order=True)
class ValueFlip:
    """Mistake of value: the model `model` is replaced by itself with `var` flipped."""

    model: Model
    var: Var

    kind = VALUE_FLIP

    def __post_init__(self):
        if self.var not in self.model.universe:
            raise TransformError(f"{self.var.name} is not in the universe of the flipped model")

    @property
    def flipped(self) -> Model:
        return self.model.flipped(self.var)

    def apply(self, f: Formula) -> Formula:
        u = self.model.universe
        if not truth_table(f, u) >> self.model.bits & 1:
            raise TransformError(f"model {self.model} does not satisfy {f}")
        return Or((And((f, Not(self.model.to_formula()))), self.flipped.to_formula()))

    def __str__(self) -> str:
        return f"flip {self.model} {self.var.name}"


Transformation = Union[Renaming, Generalization, Particularization, ValueFlip]

_KIND_ORDER = {RENAMING: 0, GENERALIZATION: 1, PARTICULARIZATION: 2, VALUE_FLIP: 3}


def sort_key(t: Transformation) -> tuple:
    return (_KIND_ORDER[t.kind], str(t))


def apply(t: Transformation, f: Formula) -> Formula:
    return t.apply(f)


def set_violations(items: Iterable[Transformation]) -> list[str]:
    renamings = [t for t in items if isinstance(t, Renaming)]
    sources = [r.source for r in renamings]
    problems = []
    if len(set(sources)) != len(sources):
        problems.append("two renamings share a source variable")
    clashes = sorted({r.target.name for r in renamings if r.target in sources})
    if clashes:
        problems.append(f"renaming targets {', '.join(clashes)} are also renamed")
    return problems


@dataclass(frozen=True)
class TransformationSet:
    """Transformations hypothesized for one knowledge base."""

    items: frozenset

    def __post_init__(self):
        object.__setattr__(self, "items", frozenset(self.items))
        problems = set_violations(self.items)
        if problems:
            raise TransformError("; ".join(problems))

    @classmethod
    def of(cls, *items: Transformation, budget: int | None = None) -> "TransformationSet":
        result = cls(frozenset(items))
        if budget is not None and len(result) > budget:
            raise TransformError(f"{len(result)} transformations exceed the budget of {budget}")
        return result

    @staticmethod
    def is_legal(items: Iterable[Transformation]) -> bool:
        return not set_violations(items)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(sorted(self.items, key=sort_key))

    def of_kind(self, kind: str) -> list:
        return sorted((t for t in self.items if t.kind == kind), key=sort_key)

    def apply(self, f: Formula) -> Formula:
        return apply_set(self, f)

    def __str__(self) -> str:
        return "{" + ", ".join(str(t) for t in self) + "}"


EMPTY_SET = TransformationSet(frozenset())


def apply_set(s: TransformationSet, f: Formula) -> Formula:
    """
    Apply the members of `s` in canonical order: renamings simultaneously,
    then generalizations, then particularizations, then value flips.
    """
    renamings = s.of_kind(RENAMING)
    result = simultaneous_substitute(f, {r.source: r.target for r in renamings}) if renamings else f
    for kind in (GENERALIZATION, PARTICULARIZATION, VALUE_FLIP):
        for t in s.of_kind(kind):
            result = t.apply(result)
    return result


@dataclass(frozen=True)
class TransformationTuple:
    per_base: tuple[TransformationSet, ...]

    def __post_init__(self):
        object.__setattr__(self, "per_base", tuple(self.per_base))

    @classmethod
    def empty(cls, n: int) -> "TransformationTuple":
        return cls((EMPTY_SET,) * n)

    @property
    def size(self) -> int:
        return sum(len(s) for s in self.per_base)

    def __len__(self) -> int:
        return len(self.per_base)

    def __str__(self) -> str:
        return " ".join(f"K{i}{s}" for i, s in enumerate(self.per_base, 1))


def apply_tuple(t: TransformationTuple, profile: KnowledgeProfile) -> Formula:
    return conjoin(apply_formulas(t, profile.bases))


def apply_formulas(t: TransformationTuple, bases: Sequence[Formula]) -> list[Formula]:
    if len(t) != len(bases):
        raise TransformError(f"tuple has {len(t)} sets for {len(bases)} knowledge bases")
    return [apply_set(s, k) for s, k in zip(t.per_base, bases)]


# --- candidate enumeration -------------------------------------------------


def _particularized(k: Formula, x: Var) -> bool:
    """True when not-x entails k, i.e. k may have been produced by `par x`."""
    return entails(Not(x), k, Universe.of(k, extra=(x,)))


def forward_candidates(k: Formula, pool: Iterable[Var], budget: int | None = None) -> frozenset:
    """
    Mistakes that may have turned some correct formula into `k`.

    Renamings x->y with y in k and x outside it, generalizations of
    variables outside k, and particularizations `par x` whenever not-x
    entails k. With a budget, only the first `budget` candidates in
    canonical order are kept.
    """
    own = variables(k)
    pool = frozenset(pool)
    outside = sorted(pool - own)
    found: set = set()
    for y in sorted(own):
        for x in outside:
            found.add(Renaming(x, y))
    for x in outside:
        found.add(Generalization(x))
    for x in sorted(own | pool):
        if _particularized(k, x):
            found.add(Particularization(x))
    ordered = sorted(found, key=sort_key)
    if budget is not None and len(ordered) > budget:
        logger.warning("Truncating %d forward candidates to a budget of %d", len(ordered), budget)
        ordered = ordered[:budget]
    return frozenset(ordered)


def inverse_candidates(k: Formula, pool: Iterable[Var],
                       fresh: Mapping[Var, Sequence[Var]] | None = None) -> frozenset:
    """
    (forward, inverse) pairs: each hypothesized mistake with a transformation undoing it.

    - ren x->y is undone by ren y->z, z outside k: a pool variable or one of y's own primes
    - gen x is undone by par y, y outside k (pool variable or fresh prime)
    - par x is undone by gen x

    `fresh` maps each variable to its fresh primes. Without it, one prime
    per variable of k and the pool is used.
    """
    own = variables(k)
    pool = frozenset(pool)
    if fresh is None:
        fresh = fresh_primes(sorted(own | pool))
    spare = pool - own
    outside = sorted(spare.union(*fresh.values()) - own)
    pairs = set()
    for forward in forward_candidates(k, outside):
        if isinstance(forward, Renaming):
            y = forward.target
            for z in sorted(spare.union(fresh.get(y, ())) - own):
                pairs.add((forward, Renaming(y, z)))
        elif isinstance(forward, Generalization):
            for y in outside:
                pairs.add((forward, Particularization(y)))
        elif forward.var in own:
            pairs.add((forward, Generalization(forward.var)))
    return frozenset(pairs)


def inverse_transformations(k: Formula, pool: Iterable[Var],
                            fresh: Mapping[Var, Sequence[Var]] | None = None,
                            kinds: Iterable[str] = MISTAKE_KINDS) -> list:
    """Distinct inverse transformations for `k`, filtered by mistake kind, in canonical order."""
    kinds = frozenset(kinds)
    undo = {RENAMING: RENAMING, GENERALIZATION: PARTICULARIZATION, PARTICULARIZATION: GENERALIZATION}
    wanted = {undo[kind] for kind in kinds}
    inverses = {inverse for _, inverse in inverse_candidates(k, pool, fresh) if inverse.kind in wanted}
    return sorted(inverses, key=sort_key)


def legal_sets(inverses: Sequence[Transformation], size: int) -> list[TransformationSet]:
    """All legal TransformationSets of exactly `size` members drawn from `inverses`."""
    return [TransformationSet(frozenset(combo)) for combo in combinations(inverses, size)
            if TransformationSet.is_legal(combo)]
