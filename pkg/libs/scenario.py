"""
Source simulator: correct bases S_i, known injected mistakes, merge, and
a recovery report comparing the merged result with the hidden truth.
"""

import logging
import random
from dataclasses import dataclass
from itertools import combinations, product
from typing import Callable, Iterable, Sequence

from .logic import (
    TRUE,
    Formula,
    KnowledgeProfile,
    Universe,
    Var,
    conjoin,
    consistent_with,
    disjoin,
    entails,
    equivalent,
    is_satisfiable,
    literal,
    variables,
)
from .merge import MergeConfig, MergeOutcome, merge
from .transforms import (
    GENERALIZATION,
    MISTAKE_KINDS,
    PARTICULARIZATION,
    RENAMING,
    Generalization,
    Particularization,
    Renaming,
    TransformationSet,
    apply_set,
)

logger = logging.getLogger(__name__)

MAX_SIM_VARS = 8
MAX_SIM_BUDGET = 2
RESAMPLE_LIMIT = 1000
EQUIVALENCE_MAX_VARS = 6


class ScenarioError(Exception):
    pass


@dataclass(frozen=True)
class Source:
    correct: Formula
    injected: TransformationSet
    delivered: Formula


@dataclass(frozen=True)
class Scenario:
    seed: int
    universe: Universe
    sources: tuple[Source, ...]
    upper: Formula
    lower: Formula

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        u = self.universe.extend(v for s in self.sources for v in variables(s.delivered))
        for i, s in enumerate(self.sources, 1):
            if not equivalent(apply_set(s.injected, s.correct), s.delivered, u):
                raise ScenarioError(f"source {i} does not deliver its injected mistakes")
        truth = self.truth
        if not entails(truth, self.upper, u):
            raise ScenarioError("the correct bases do not entail the upper bound")
        if not consistent_with(truth, self.lower, u):
            raise ScenarioError("the correct bases contradict the lower bound")

    @property
    def truth(self) -> Formula:
        return conjoin(s.correct for s in self.sources)

    @property
    def mistakes(self) -> int:
        return sum(len(s.injected) for s in self.sources)

    def profile(self, cap: int | None = None) -> KnowledgeProfile:
        bases = tuple(s.delivered for s in self.sources)
        if cap is None:
            return KnowledgeProfile(bases, self.upper, self.lower)
        return KnowledgeProfile(bases, self.upper, self.lower, cap=cap)


@dataclass(frozen=True)
class RecoveryReport:
    seed: int
    operator: str
    admissible: bool
    sound_wrt_S: bool
    complete_wrt_S: bool
    equivalent_to_S: bool | None
    disjuncts: int
    mistakes: int
    score: float | None
    unsound_witness: str | None = None

    def to_record(self) -> str:
        """One line of key=value pairs."""

        def show(value):
            if value is None:
                return "-"
            if isinstance(value, bool):
                return "true" if value else "false"
            if isinstance(value, float):
                return f"{value:.4f}"
            return str(value).replace(" ", "")

        pairs = [
            ("seed", self.seed),
            ("operator", self.operator),
            ("admissible", self.admissible),
            ("sound", self.sound_wrt_S),
            ("complete", self.complete_wrt_S),
            ("equivalent", self.equivalent_to_S),
            ("disjuncts", self.disjuncts),
            ("mistakes", self.mistakes),
            ("score", self.score),
            ("witness", self.unsound_witness),
        ]
        return " ".join(f"{key}={show(value)}" for key, value in pairs)


@dataclass(frozen=True)
class BatchSummary:
    runs: int
    admissible: int
    sound: int
    complete: int
    equivalent: int
    equivalence_checked: int

    @classmethod
    def of(cls, reports: Sequence[RecoveryReport]) -> "BatchSummary":
        return cls(
            runs=len(reports),
            admissible=sum(r.admissible for r in reports),
            sound=sum(r.sound_wrt_S for r in reports),
            complete=sum(r.complete_wrt_S for r in reports),
            equivalent=sum(bool(r.equivalent_to_S) for r in reports),
            equivalence_checked=sum(r.equivalent_to_S is not None for r in reports),
        )

    def rate(self, count: int, total: int | None = None) -> float:
        total = self.runs if total is None else total
        return count / total if total else 0.0

    def to_table(self) -> str:
        rows = [
            ("admissible", self.admissible, self.runs),
            ("sound", self.sound, self.runs),
            ("complete", self.complete, self.runs),
            ("equivalent", self.equivalent, self.equivalence_checked),
        ]
        lines = ["| measure    | count | runs | rate   |", "|------------|-------|------|--------|"]
        for name, count, total in rows:
            lines.append(f"| {name:<10} | {count:>5} | {total:>4} | {self.rate(count, total):.4f} |")
        return "\n".join(lines)


# --- generation -----------------------------------------------------------------


def random_formula(rng: random.Random, alphabet: Sequence[Var]) -> Formula:
    """Small CNF or DNF: 1-3 clauses of 1-3 literals over distinct variables."""
    as_cnf = rng.random() < 0.5
    groups = []
    for _ in range(rng.randint(1, 3)):
        chosen = rng.sample(list(alphabet), rng.randint(1, min(3, len(alphabet))))
        lits = [literal(v, rng.random() < 0.5) for v in chosen]
        groups.append(disjoin(lits) if as_cnf else conjoin(lits))
    return conjoin(groups) if as_cnf else disjoin(groups)


def _random_clause(rng: random.Random, alphabet: Sequence[Var], width: int) -> Formula:
    chosen = rng.sample(list(alphabet), min(width, len(alphabet)))
    return disjoin(literal(v, rng.random() < 0.5) for v in chosen)


def _random_upper(rng: random.Random, truth: Formula, alphabet: Sequence[Var], u: Universe) -> Formula:
    if rng.random() < 0.5:
        return TRUE
    for _ in range(10):
        clause = _random_clause(rng, alphabet, rng.randint(1, 2))
        if entails(truth, clause, u):
            return clause
    return TRUE


def _random_lower(rng: random.Random, truth: Formula, alphabet: Sequence[Var], u: Universe) -> Formula:
    if rng.random() < 0.5:
        return TRUE
    for _ in range(10):
        clause = _random_clause(rng, alphabet, rng.randint(1, 2))
        if consistent_with(truth, clause, u):
            return clause
    return TRUE


def _inject(rng: random.Random, correct: Formula, spare: list[Var], images: dict[Var, Var],
            universe: Universe, budget: int, kinds: Sequence[str]) -> TransformationSet:
    """
    Draw up to `budget` mistakes for one source. A renamed variable always
    gets the same unused name in every source, so renamings stay injective
    across the whole profile.
    """
    items: list = []
    renamed: set[Var] = set()
    generalized: set[Var] = set()
    own = sorted(variables(correct))
    for _ in range(rng.randint(0, budget)):
        kind = rng.choice(list(kinds))
        if kind == RENAMING:
            choices = [x for x in own if x not in (renamed | generalized) and (x in images or spare)]
            if not choices:
                continue
            x = rng.choice(choices)
            if x not in images:
                images[x] = spare.pop(rng.randrange(len(spare)))
            items.append(Renaming(x, images[x]))
            renamed.add(x)
        elif kind == GENERALIZATION:
            choices = [x for x in own if x not in (renamed | generalized)]
            if choices:
                x = rng.choice(choices)
                items.append(Generalization(x))
                generalized.add(x)
        elif kind == PARTICULARIZATION:
            choices = [x for x in universe if x not in renamed]
            if choices:
                items.append(Particularization(rng.choice(choices)))
    return TransformationSet(frozenset(items))


def generate(seed: int, n_vars: int, n_sources: int, mistake_budget: int,
             mistake_kinds: Iterable[str] = (RENAMING,)) -> Scenario:
    """
    Build a scenario deterministically from `seed`.

    Correct bases use the first n_vars - mistake_budget variables (at least
    one) so renamings have unused names to move to.
    """
    kinds = sorted(set(mistake_kinds))
    if not 1 <= n_vars <= MAX_SIM_VARS:
        raise ScenarioError(f"n_vars must be between 1 and {MAX_SIM_VARS}, got {n_vars}")
    if not 0 <= mistake_budget <= MAX_SIM_BUDGET:
        raise ScenarioError(f"mistake budget must be between 0 and {MAX_SIM_BUDGET}, got {mistake_budget}")
    if n_sources < 1:
        raise ScenarioError("a scenario needs at least one source")
    unknown = sorted(set(kinds) - set(MISTAKE_KINDS))
    if unknown or not kinds:
        raise ScenarioError(f"invalid mistake kinds {kinds}; choose from {', '.join(MISTAKE_KINDS)}")

    rng = random.Random(seed)
    universe = Universe(tuple(Var(f"x{i}") for i in range(1, n_vars + 1)))
    working = universe.variables[: max(1, n_vars - mistake_budget)]
    for attempt in range(RESAMPLE_LIMIT):
        correct = [random_formula(rng, working) for _ in range(n_sources)]
        truth = conjoin(correct)
        if not is_satisfiable(truth, universe):
            continue
        upper = _random_upper(rng, truth, working, universe)
        lower = _random_lower(rng, truth, working, universe)
        used = set().union(*(variables(f) for f in correct + [upper, lower]))
        spare = [v for v in universe if v not in used]
        images: dict[Var, Var] = {}
        sources = []
        for s in correct:
            injected = _inject(rng, s, spare, images, universe, mistake_budget, kinds)
            sources.append(Source(s, injected, apply_set(injected, s)))
        logger.debug("scenario %d generated after %d resamples", seed, attempt)
        return Scenario(seed, universe, tuple(sources), upper, lower)
    raise ScenarioError(f"no satisfiable scenario after {RESAMPLE_LIMIT} attempts (seed {seed})")


# --- evaluation -------------------------------------------------------------------


def small_clauses(universe: Universe, width: int = 2) -> list[Formula]:
    """Every clause of 1..width literals over distinct variables of `universe`."""
    clauses = []
    for size in range(1, width + 1):
        for chosen in combinations(universe.variables, size):
            for signs in product((True, False), repeat=size):
                clauses.append(disjoin(literal(v, s) for v, s in zip(chosen, signs)))
    return clauses


def report(sc: Scenario, outcome: MergeOutcome) -> RecoveryReport:
    """Compare a merge outcome with the scenario's hidden correct bases."""
    u = outcome.universe.extend(sc.universe.variables)
    truth, result = sc.truth, outcome.result
    witness = next(
        (c for c in small_clauses(sc.universe) if entails(result, c, u) and not entails(truth, c, u)),
        None,
    ) if outcome.admissible else None
    score = outcome.best_score
    return RecoveryReport(
        seed=sc.seed,
        operator=outcome.operator,
        admissible=outcome.admissible,
        sound_wrt_S=witness is None,
        complete_wrt_S=entails(result, truth, u),
        equivalent_to_S=equivalent(result, truth, u) if len(sc.universe) <= EQUIVALENCE_MAX_VARS else None,
        disjuncts=len(outcome.disjuncts),
        mistakes=sc.mistakes,
        score=score.value if score is not None else None,
        unsound_witness=str(witness) if witness is not None else None,
    )


def evaluate(sc: Scenario, cfg: MergeConfig) -> RecoveryReport:
    outcome = merge(sc.profile(cap=cfg.max_universe), cfg)
    result = report(sc, outcome)
    logger.debug("seed %d: %s", sc.seed, result.to_record())
    return result


def run_batch(seed: int, runs: int, n_vars: int, n_sources: int, mistake_budget: int,
              mistake_kinds: Iterable[str], cfg: MergeConfig,
              progress: Callable[[RecoveryReport], None] | None = None) -> list[RecoveryReport]:
    """Evaluate scenarios seeded seed, seed + 1, ..., seed + runs - 1."""
    kinds = tuple(mistake_kinds)
    reports = []
    for offset in range(runs):
        sc = generate(seed + offset, n_vars, n_sources, mistake_budget, kinds)
        reports.append(evaluate(sc, cfg))
        if progress is not None:
            progress(reports[-1])
    return reports
