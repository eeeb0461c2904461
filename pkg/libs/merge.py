"""
Merging operators built on the mistake model.

Each operator hypothesizes which mistakes turned the correct bases into
the delivered ones, keeps the corrections whose merged conjunction entails
the upper bound A and is consistent with the lower bound B, retains the
most plausible of them and disjoins the corrected conjunctions.

Operators:
    general_merge   bounded search over inverse transformation tuples
    rmel_merge      renaming merge, every minimal correction equally likely
    rm_merge        renaming merge ranked by similarity of the corrected bases
    dalal_merge     value-mistake baseline (minimal Hamming repair)
"""

import logging
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from functools import reduce
from itertools import combinations, product
from typing import Callable, Iterable, Iterator, Mapping, Sequence, Union

from .logic import (
    Formula,
    KnowledgeProfile,
    Model,
    Universe,
    UniverseError,
    Var,
    as_substitution,
    conjoin,
    consistent_with,
    disjoin,
    entails,
    formula_from_models,
    is_satisfiable,
    models,
    simultaneous_substitute,
    substituted_table,
    truth_table,
    variables,
    MAX_UNIVERSE,
)
from .similarity import DeltaMode, RankScore, rank_renaming_pair, rank_tuple, score_formulas
from .transforms import (
    MISTAKE_KINDS,
    TransformationSet,
    TransformationTuple,
    ValueFlip,
    inverse_transformations,
    legal_sets,
)

logger = logging.getLogger(__name__)

DEFAULT_BUDGET = 2
DEFAULT_MAX_CANDIDATES = 2_000_000


class MergeError(Exception):
    pass


class CapExceededError(MergeError):
    pass


class Operator(str, Enum):
    RMEL = "rmel"
    RM = "rm"
    GENERAL = "general"
    DALAL = "dalal"


class Ranking(str, Enum):
    EQUAL_LIKELINESS = "equal"
    HEURISTIC = "heuristic"


class CandidateMode(str, Enum):
    INVERSE = "inverse"
    PERMITTED = "permitted"


class RankScope(str, Enum):
    MINIMAL_SIZE = "minimal-size"
    ALL = "all"


class Minimality(str, Enum):
    COMBINED = "combined"
    PARETO = "pareto"
    INCLUSION = "inclusion"


@dataclass(frozen=True)
class MergeConfig:
    """
    Engine settings.

    budget_per_base caps the transformations hypothesized per base in
    general_merge; renaming_budget caps the non-identity entries of each
    substitution in rmel/rm (None explores every substitution).
    """

    operator: Operator = Operator.RMEL
    budget_per_base: int = DEFAULT_BUDGET
    renaming_budget: int | None = None
    delta_mode: DeltaMode = DeltaMode.LINEAR
    ranking: Ranking = Ranking.HEURISTIC
    max_fresh_primes: int = 1
    candidate_kinds: frozenset = frozenset(MISTAKE_KINDS)
    candidate_mode: CandidateMode = CandidateMode.INVERSE
    rank_scope: RankScope = RankScope.MINIMAL_SIZE
    minimality: Minimality = Minimality.COMBINED
    max_universe: int = MAX_UNIVERSE
    max_candidates: int = DEFAULT_MAX_CANDIDATES
    score_table: Mapping[str, float] | None = field(default=None, compare=False)

    def __post_init__(self):
        for f in fields(self):
            if not isinstance(f.default, Enum):
                continue
            enum = type(f.default)
            try:
                object.__setattr__(self, f.name, enum(getattr(self, f.name)))
            except ValueError:
                choices = ", ".join(e.value for e in enum)
                raise MergeError(f"invalid {f.name} {getattr(self, f.name)!r}; expected one of {choices}") from None
        kinds = self.candidate_kinds
        if isinstance(kinds, str):
            kinds = [k.strip() for k in kinds.split(",") if k.strip()]
        kinds = frozenset(kinds)
        unknown = sorted(kinds - set(MISTAKE_KINDS))
        if unknown or not kinds:
            raise MergeError(f"invalid candidate kinds {sorted(kinds)}; choose from {', '.join(MISTAKE_KINDS)}")
        object.__setattr__(self, "candidate_kinds", kinds)
        for name in ("budget_per_base", "max_fresh_primes", "max_universe", "max_candidates"):
            if getattr(self, name) < 0:
                raise MergeError(f"{name} must be non-negative")
        if self.renaming_budget is not None and self.renaming_budget < 0:
            raise MergeError("renaming_budget must be non-negative")
        if self.max_fresh_primes < 1:
            raise MergeError("max_fresh_primes must be at least 1")

    @classmethod
    def from_mapping(cls, data: Mapping) -> "MergeConfig":
        known = {f.name for f in fields(cls)}
        values = {}
        for key, value in data.items():
            name = key.replace("-", "_")
            if name not in known:
                raise MergeError(f"unknown configuration key: {key}")
            values[name] = value
        return cls(**values)


# --- corrections ------------------------------------------------------------


@dataclass(frozen=True)
class Substitution:
    """Simultaneous variable-to-variable map X/Y; identity entries are free."""

    entries: tuple[tuple[Var, Var], ...]

    def __post_init__(self):
        table = as_substitution(self.entries)
        object.__setattr__(self, "entries", tuple(sorted(table.items())))

    @classmethod
    def of(cls, mapping: Mapping[Var, Var] | Iterable[tuple[Var, Var]] = ()) -> "Substitution":
        pairs = mapping.items() if isinstance(mapping, Mapping) else mapping
        return cls(tuple(pairs))

    @property
    def changes(self) -> frozenset:
        return frozenset((s, t) for s, t in self.entries if s != t)

    @property
    def size(self) -> int:
        return len(self.changes)

    def __len__(self) -> int:
        return self.size

    def as_dict(self) -> dict[Var, Var]:
        return dict(self.changes)

    def apply(self, f: Formula) -> Formula:
        return simultaneous_substitute(f, self.as_dict())

    def check_permitted(self, alphabet: Iterable[Var], primes: Mapping[Var, tuple[Var, ...]]) -> None:
        """Every key maps to another problem variable or to one of its own fresh primes."""
        alphabet = frozenset(alphabet)
        for source, target in self.changes:
            if source not in alphabet:
                raise MergeError(f"{source.name} is not a problem variable")
            if target not in alphabet and target not in primes.get(source, ()):
                raise MergeError(f"{source.name}->{target.name} is not a permitted renaming")

    def __str__(self) -> str:
        return "{" + ", ".join(f"ren {s.name}->{t.name}" for s, t in sorted(self.changes)) + "}"


@dataclass(frozen=True)
class RenamingTuple:
    """One substitution per knowledge base."""

    per_base: tuple[Substitution, ...]

    @property
    def size(self) -> int:
        return sum(s.size for s in self.per_base)

    def __str__(self) -> str:
        return " ".join(f"K{i}{s}" for i, s in enumerate(self.per_base, 1))


@dataclass(frozen=True)
class DalalRepair:
    """Provenance of the value-mistake baseline: the minimal number of flips."""

    distance: int

    @property
    def size(self) -> int:
        return self.distance

    def __str__(self) -> str:
        return f"K1{{{self.distance} value flips}} K2{{}}"


Provenance = Union[TransformationTuple, RenamingTuple, DalalRepair]


@dataclass(frozen=True)
class Disjunct:
    formula: Formula
    provenance: tuple[Provenance, ...]
    score: RankScore

    def __str__(self) -> str:
        return f"{self.formula}  <- {' ; '.join(str(p) for p in self.provenance)}  score={self.score}"


@dataclass(frozen=True)
class MergeOutcome:
    disjuncts: tuple[Disjunct, ...]
    universe: Universe
    operator: str

    @property
    def result(self) -> Formula:
        return disjoin(d.formula for d in self.disjuncts)

    @property
    def admissible(self) -> bool:
        return bool(self.disjuncts)

    @property
    def no_admissible_hypothesis(self) -> bool:
        return not self.disjuncts

    @property
    def best_score(self) -> RankScore | None:
        return min((d.score for d in self.disjuncts), default=None)

    def entails(self, query: Formula) -> bool:
        """Whether the merged result implies `query`."""
        u = self.universe.extend(variables(query))
        return entails(self.result, query, u)


# --- search -----------------------------------------------------------------


@dataclass(frozen=True)
class _Option:
    correction: Union[TransformationSet, Substitution]
    base: Formula
    table: int

    @property
    def size(self) -> int:
        return len(self.correction)

    @property
    def formula(self) -> Formula:
        return self.correction.apply(self.base)


Combo = tuple[_Option, ...]


def _compositions(total: int, limits: Sequence[int]) -> Iterator[tuple[int, ...]]:
    if not limits:
        if total == 0:
            yield ()
        return
    head, rest = limits[0], limits[1:]
    for first in range(min(head, total) + 1):
        if total - first <= sum(rest):
            for tail in _compositions(total - first, rest):
                yield (first,) + tail


class _Search:
    """Breadth-first enumeration of correction tuples by total size."""

    def __init__(self, profile: KnowledgeProfile, universe: Universe,
                 sources: Sequence[Callable[[int], list[_Option]]], limits: Sequence[int], cfg: MergeConfig):
        self.universe = universe
        self.sources = list(sources)
        self.limits = list(limits)
        self.cfg = cfg
        self.forbidden = universe.full ^ truth_table(profile.upper, universe)
        self.lower = truth_table(profile.lower, universe)
        self.examined = 0
        self._cache: dict[tuple[int, int], list[_Option]] = {}

    @property
    def max_total(self) -> int:
        return sum(self.limits)

    def options(self, index: int, size: int) -> list[_Option]:
        key = (index, size)
        if key not in self._cache:
            self._cache[key] = self.sources[index](size)
        return self._cache[key]

    def admissible(self, combo: Combo) -> bool:
        conj = reduce(lambda acc, o: acc & o.table, combo, self.universe.full)
        return conj & self.forbidden == 0 and conj & self.lower != 0

    def level(self, total: int) -> list[Combo]:
        found = []
        for sizes in _compositions(total, self.limits):
            lists = [self.options(i, s) for i, s in enumerate(sizes)]
            for combo in product(*lists):
                self.examined += 1
                if self.examined > self.cfg.max_candidates:
                    raise CapExceededError(
                        f"more than {self.cfg.max_candidates} candidate tuples; lower the budget or the universe"
                    )
                if self.admissible(combo):
                    found.append(combo)
        logger.debug("level %d: %d admissible, %d examined so far", total, len(found), self.examined)
        return found

    def admissible_combos(self, exhaustive: bool) -> list[Combo]:
        """Admissible tuples of the first non-empty level, or of every level when exhaustive."""
        found: list[Combo] = []
        for total in range(self.max_total + 1):
            hits = self.level(total)
            found.extend(hits)
            if hits and not exhaustive:
                break
        return found


def _sizes(combo: Combo) -> tuple[int, ...]:
    return tuple(o.size for o in combo)


def _parts(combo: Combo) -> tuple[frozenset, ...]:
    return tuple(o.correction.changes if isinstance(o.correction, Substitution) else o.correction.items
                 for o in combo)


def _pareto_minimal(combos: list[Combo]) -> list[Combo]:
    vectors = [_sizes(c) for c in combos]

    def dominated(v):
        return any(w != v and all(a <= b for a, b in zip(w, v)) for w in vectors)

    return [c for c, v in zip(combos, vectors) if not dominated(v)]


def _inclusion_minimal(combos: list[Combo]) -> list[Combo]:
    parts = [_parts(c) for c in combos]

    def contains_smaller(p):
        return any(q != p and all(a <= b for a, b in zip(q, p)) for q in parts)

    return [c for c, p in zip(combos, parts) if not contains_smaller(p)]


def _select(search: _Search, cfg: MergeConfig, scorer: Callable[[Combo], RankScore]) -> list[tuple[Combo, RankScore]]:
    exhaustive = cfg.minimality is not Minimality.COMBINED or cfg.rank_scope is RankScope.ALL
    found = search.admissible_combos(exhaustive)
    if cfg.minimality is Minimality.PARETO:
        found = _pareto_minimal(found)
    elif cfg.minimality is Minimality.INCLUSION:
        found = _inclusion_minimal(found)
    if not found:
        return []
    scored = [(combo, scorer(combo)) for combo in found]
    best = min(score.key for _, score in scored)
    return [(combo, score) for combo, score in scored if score.key == best]


def _scorer(cfg: MergeConfig, provenance: Callable[[Combo], Provenance],
            heuristic: Callable[[Combo], RankScore]) -> Callable[[Combo], RankScore]:
    if cfg.score_table is not None:
        table = cfg.score_table

        def lookup(combo: Combo) -> RankScore:
            key = str(provenance(combo))
            return RankScore(float(table.get(key, sum(_sizes(combo)))))

        return lookup
    if cfg.ranking is Ranking.EQUAL_LIKELINESS:
        return lambda combo: RankScore(float(sum(_sizes(combo))))
    return heuristic


def _outcome(selected: list[tuple[Combo, RankScore]], provenance: Callable[[Combo], Provenance],
             universe: Universe, operator: Operator) -> MergeOutcome:
    entries = sorted(((provenance(combo), combo, score) for combo, score in selected), key=lambda e: str(e[0]))
    groups: dict[int, list] = {}
    for prov, combo, score in entries:
        table = reduce(lambda acc, o: acc & o.table, combo, universe.full)
        if table in groups:
            groups[table][1].append(prov)
            groups[table][2] = min(groups[table][2], score)
        else:
            groups[table] = [conjoin(o.formula for o in combo), [prov], score]
    disjuncts = tuple(Disjunct(formula, tuple(provs), score) for formula, provs, score in groups.values())
    if disjuncts:
        logger.info("%s merge: %d disjuncts from %d corrections", operator.value, len(disjuncts), len(entries))
    else:
        logger.warning("%s merge: no admissible mistake hypothesis", operator.value)
    return MergeOutcome(disjuncts, universe, operator.value)


def _merge_universe(profile: KnowledgeProfile, cfg: MergeConfig) -> Universe:
    try:
        return profile.merge_universe(cfg.max_fresh_primes, cap=cfg.max_universe)
    except UniverseError as exc:
        raise CapExceededError(f"merge universe too large: {exc}") from exc


def _substitution_source(k: Formula, alphabet: Sequence[Var], primes: Mapping[Var, tuple[Var, ...]],
                         u: Universe) -> Callable[[int], list[_Option]]:
    """Permitted substitutions on the variables of `k`, grouped by size."""
    own = [v for v in alphabet if v in variables(k)]

    def at(size: int) -> list[_Option]:
        result = []
        for keys in combinations(own, size):
            targets = [[t for t in alphabet if t != x] + list(primes[x]) for x in keys]
            for chosen in product(*targets):
                sub = Substitution(tuple(zip(keys, chosen)))
                result.append(_Option(sub, k, substituted_table(k, sub.as_dict(), u)))
        return result

    return at


def _renaming_limits(profile: KnowledgeProfile, budget: int | None) -> list[int]:
    counts = [len(variables(k)) for k in profile.bases]
    return counts if budget is None else [min(budget, c) for c in counts]


def _renaming_search(profile: KnowledgeProfile, cfg: MergeConfig, budget: int | None) -> tuple[_Search, Universe]:
    u = _merge_universe(profile, cfg)
    primes = profile.fresh_primes(cfg.max_fresh_primes)
    sources = [_substitution_source(k, profile.alphabet, primes, u) for k in profile.bases]
    return _Search(profile, u, sources, _renaming_limits(profile, budget), cfg), u


def _renaming_provenance(combo: Combo) -> RenamingTuple:
    return RenamingTuple(tuple(o.correction for o in combo))


def _transformation_provenance(combo: Combo) -> TransformationTuple:
    return TransformationTuple(tuple(o.correction for o in combo))


# --- operators ------------------------------------------------------------------


def general_merge(profile: KnowledgeProfile, cfg: MergeConfig | None = None) -> MergeOutcome:
    """
    Bounded merge over inverse transformation tuples.

    Tuples hold at most `budget_per_base` inverse transformations per base.
    Among the tuples whose corrected conjunction entails A and is
    consistent with B, the best ranked are disjoined.
    """
    cfg = cfg or MergeConfig(operator=Operator.GENERAL)
    if cfg.candidate_mode is CandidateMode.PERMITTED:
        search, u = _renaming_search(profile, cfg, cfg.budget_per_base)
        provenance = _renaming_provenance

        def heuristic(combo: Combo) -> RankScore:
            return score_formulas([o.formula for o in combo], sum(_sizes(combo)), u, cfg.delta_mode)
    else:
        u = _merge_universe(profile, cfg)
        fresh = profile.fresh_primes(cfg.max_fresh_primes)
        sources, limits = [], []
        for i, k in enumerate(profile.bases):
            pool = set().union(*(variables(f) for f in profile.others(i) + (profile.upper, profile.lower)))
            inverses = inverse_transformations(k, pool, fresh, cfg.candidate_kinds)
            logger.debug("K%d: %d inverse transformations", i + 1, len(inverses))
            sources.append(_set_source(k, inverses, u))
            limits.append(min(cfg.budget_per_base, len(inverses)))
        search = _Search(profile, u, sources, limits, cfg)
        provenance = _transformation_provenance

        def heuristic(combo: Combo) -> RankScore:
            return rank_tuple(provenance(combo), profile, cfg.delta_mode, universe=u)

    selected = _select(search, cfg, _scorer(cfg, provenance, heuristic))
    return _outcome(selected, provenance, u, Operator.GENERAL)


def _set_source(k: Formula, inverses: Sequence, u: Universe) -> Callable[[int], list[_Option]]:
    def at(size: int) -> list[_Option]:
        return [_Option(s, k, truth_table(s.apply(k), u)) for s in legal_sets(inverses, size)]

    return at


def _two_base_profile(k1: Formula, k2: Formula, a: Formula, b: Formula, cfg: MergeConfig) -> KnowledgeProfile:
    return KnowledgeProfile((k1, k2), a, b, cap=cfg.max_universe)


def rmel_merge(k1: Formula, k2: Formula, a: Formula, b: Formula, cfg: MergeConfig | None = None) -> MergeOutcome:
    """Renaming merge where every minimal permitted correction is equally likely."""
    cfg = replace(cfg or MergeConfig(), operator=Operator.RMEL, ranking=Ranking.EQUAL_LIKELINESS)
    return _rmel(_two_base_profile(k1, k2, a, b, cfg), cfg)


def _rmel(profile: KnowledgeProfile, cfg: MergeConfig) -> MergeOutcome:
    search, u = _renaming_search(profile, cfg, cfg.renaming_budget)
    scorer = _scorer(cfg, _renaming_provenance, lambda combo: RankScore(float(sum(_sizes(combo)))))
    return _outcome(_select(search, cfg, scorer), _renaming_provenance, u, Operator.RMEL)


def rm_merge(k1: Formula, k2: Formula, a: Formula, b: Formula, cfg: MergeConfig | None = None) -> MergeOutcome:
    """Renaming merge keeping the corrections that make the two bases most similar."""
    cfg = replace(cfg or MergeConfig(), operator=Operator.RM, ranking=Ranking.HEURISTIC)
    return _rm(_two_base_profile(k1, k2, a, b, cfg), cfg)


def _rm(profile: KnowledgeProfile, cfg: MergeConfig) -> MergeOutcome:
    search, u = _renaming_search(profile, cfg, cfg.renaming_budget)
    k1, k2 = profile.bases

    def heuristic(combo: Combo) -> RankScore:
        y_sub, z_sub = (o.correction for o in combo)
        return rank_renaming_pair(y_sub, z_sub, k1, k2, profile, cfg.delta_mode, universe=u)

    scorer = _scorer(cfg, _renaming_provenance, heuristic)
    return _outcome(_select(search, cfg, scorer), _renaming_provenance, u, Operator.RM)


def _nearest_models(k: Formula, p: Formula, u: Universe) -> tuple[frozenset[Model], int]:
    """Models of p at minimal Hamming distance from the models of k, and that distance."""
    p_table = truth_table(p, u)
    frontier = models(k, u)
    hits = frozenset(m for m in frontier if p_table >> m.bits & 1)
    seen = set(frontier)
    distance = 0
    while not hits:
        distance += 1
        layer = set()
        for m in frontier:
            for v in u:
                neighbour = ValueFlip(m, v).flipped
                if neighbour not in seen:
                    layer.add(neighbour)
        seen |= layer
        frontier = frozenset(layer)
        hits = frozenset(m for m in frontier if p_table >> m.bits & 1)
    return hits, distance


def _revise(k: Formula, p: Formula, u: Universe) -> tuple[Formula, int]:
    u.require(k, p)
    if not is_satisfiable(p, u):
        raise MergeError(f"cannot revise by an unsatisfiable formula: {p}")
    if not is_satisfiable(k, u):
        logger.warning("Revising an unsatisfiable base; the result is the revising formula")
        return p, 0
    if consistent_with(k, p, u):
        return conjoin((k, p)), 0
    hits, distance = _nearest_models(k, p, u)
    logger.debug("Dalal repair needs %d value flips", distance)
    return formula_from_models(hits, u), distance


def dalal_revise(k: Formula, p: Formula, u: Universe) -> Formula:
    """
    Revise k by p, assuming p is correct and k holds value mistakes: keep
    the models of p that need the fewest value flips to be reached from a
    model of k.
    """
    return _revise(k, p, u)[0]


def dalal_merge(k: Formula, p: Formula, a: Formula, b: Formula, cfg: MergeConfig | None = None) -> MergeOutcome:
    """Revise k by p & a (p trusted); empty when the revision is not consistent with b."""
    cfg = cfg or MergeConfig(operator=Operator.DALAL)
    profile = KnowledgeProfile((k, p), a, b, cap=cfg.max_universe)
    u = profile.universe()
    trusted = conjoin((p, a))
    if not is_satisfiable(trusted, u):
        logger.warning("dalal merge: the trusted base contradicts the upper bound")
        return MergeOutcome((), u, Operator.DALAL.value)
    revised, distance = _revise(k, trusted, u)
    if not consistent_with(revised, b, u):
        logger.warning("dalal merge: the revision is not consistent with the lower bound")
        return MergeOutcome((), u, Operator.DALAL.value)
    disjunct = Disjunct(revised, (DalalRepair(distance),), RankScore(float(distance)))
    return MergeOutcome((disjunct,), u, Operator.DALAL.value)


def merge(profile: KnowledgeProfile, cfg: MergeConfig) -> MergeOutcome:
    """Run the operator named by `cfg` on a profile."""
    if cfg.operator is Operator.GENERAL:
        return general_merge(profile, cfg)
    if profile.n != 2:
        raise MergeError(f"the {cfg.operator.value} operator merges exactly two bases, got {profile.n}")
    if cfg.operator is Operator.RMEL:
        return _rmel(profile, replace(cfg, ranking=Ranking.EQUAL_LIKELINESS))
    if cfg.operator is Operator.RM:
        return _rm(profile, replace(cfg, ranking=Ranking.HEURISTIC))
    k, p = profile.bases
    return dalal_merge(k, p, profile.upper, profile.lower, cfg)
