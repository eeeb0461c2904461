"""
Similarity between knowledge bases and the plausibility ranking of
transformation tuples.

All measures count models over an explicit universe. The ranking of a
tuple is its number of transformations minus log2(agreement + 1) for
every pair of corrected bases: lower scores are more plausible, so fewer
mistakes and more similar corrected bases both lower the score.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import combinations
from typing import TYPE_CHECKING, Sequence

from .logic import Formula, KnowledgeProfile, Universe, ordered_variables, project_table, truth_table
from .transforms import TransformationTuple, apply_formulas

if TYPE_CHECKING:
    from .merge import Substitution

logger = logging.getLogger(__name__)

RESTRICTED_MAX_VARS = 10
INFINITE_QUOTIENT = math.inf
SCORE_DIGITS = 9


class SimilarityError(Exception):
    pass


class DeltaMode(str, Enum):
    LINEAR = "linear"
    QUOTIENT = "quotient"
    RESTRICTED = "restricted"


@dataclass(frozen=True, order=True)
class RankScore:
    """Plausibility score; lower is more plausible."""

    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise SimilarityError(f"rank scores must be finite, got {self.value}")

    @property
    def key(self) -> float:
        # ties are decided on a rounded value so float noise does not split them
        return round(self.value, SCORE_DIGITS)

    def __str__(self) -> str:
        return f"{self.value:.4f}"


def agreement(t1: int, t2: int, u: Universe) -> int:
    """Number of assignments on which two truth tables agree."""
    return (u.full ^ (t1 ^ t2)).bit_count()


def agreement_count(k1: Formula, k2: Formula, u: Universe) -> int:
    """|Mod(k1 <-> k2)| over `u`."""
    return agreement(truth_table(k1, u), truth_table(k2, u), u)


def delta_linear(k1: Formula, k2: Formula, u: Universe) -> int:
    """Agreeing minus disagreeing assignments: 2 * agree - 2^|u|."""
    return 2 * agreement_count(k1, k2, u) - u.size


def delta_quotient(k1: Formula, k2: Formula, u: Universe) -> Fraction | float:
    """Agreeing over disagreeing assignments; INFINITE_QUOTIENT for equivalent formulas."""
    agree = agreement_count(k1, k2, u)
    disagree = u.size - agree
    if disagree == 0:
        return INFINITE_QUOTIENT
    return Fraction(agree, disagree)


def delta_restricted(k1: Formula, k2: Formula, x: Universe) -> float:
    """
    Sum over every nonempty Y of `x` of the linear delta between the
    restrictions of k1 and k2 to Y, weighted by 1 / (|x| - |Y| + 1).

    Restrictions are computed on truth tables: a table projected onto Y
    is constant along the dropped variables, so its agreement count over
    `x` is the count over Y times 2^(|x| - |Y|).
    """
    n = len(x)
    if n > RESTRICTED_MAX_VARS:
        raise SimilarityError(
            f"restricted similarity enumerates 2^{n} subsets; the limit is {RESTRICTED_MAX_VARS} variables"
        )
    t1, t2 = truth_table(k1, x), truth_table(k2, x)
    total = Fraction(0)
    for size in range(1, n + 1):
        for subset in combinations(x.variables, size):
            p1 = project_table(t1, x, subset)
            p2 = project_table(t2, x, subset)
            agree = agreement(p1, p2, x) >> (n - size)
            total += Fraction(2 * agree - (1 << size), n - size + 1)
    return float(total)


def similarity_term(f_i: Formula, f_j: Formula, u: Universe, mode: DeltaMode = DeltaMode.LINEAR) -> float:
    """log2(similarity + 1) for one pair of corrected bases."""
    mode = DeltaMode(mode)
    if mode is DeltaMode.LINEAR:
        return math.log2(agreement_count(f_i, f_j, u) + 1)
    if mode is DeltaMode.QUOTIENT:
        quotient = delta_quotient(f_i, f_j, u)
        if quotient == INFINITE_QUOTIENT:
            quotient = u.size
        return math.log2(float(quotient) + 1)
    names = set(ordered_variables(f_i)) | set(ordered_variables(f_j))
    local = Universe(tuple(v for v in u if v in names))
    return math.log2(max(delta_restricted(f_i, f_j, local), 0.0) + 1)


def score_formulas(formulas: Sequence[Formula], size: int, u: Universe,
                   mode: DeltaMode = DeltaMode.LINEAR) -> RankScore:
    similarity = sum(similarity_term(f_i, f_j, u, mode) for f_i, f_j in combinations(formulas, 2))
    return RankScore(size - similarity)


def _covering(universe: Universe | None, profile: KnowledgeProfile, formulas: Sequence[Formula]) -> Universe:
    base = universe if universe is not None else profile.merge_universe()
    return base.extend(v for f in formulas for v in ordered_variables(f))


def rank_tuple(t: TransformationTuple, profile: KnowledgeProfile, mode: DeltaMode = DeltaMode.LINEAR,
               universe: Universe | None = None) -> RankScore:
    """
    Score of a transformation tuple: its size minus the pairwise
    similarity terms of the corrected bases. Counts are taken over
    `universe`, by default the profile's variables plus their primes.
    """
    formulas = apply_formulas(t, profile.bases)
    u = _covering(universe, profile, formulas)
    score = score_formulas(formulas, t.size, u, mode)
    logger.debug("rank %s = %s", t, score)
    return score


def rank_renaming_pair(y_sub: "Substitution", z_sub: "Substitution", k1: Formula, k2: Formula,
                       profile: KnowledgeProfile, mode: DeltaMode = DeltaMode.LINEAR,
                       universe: Universe | None = None) -> RankScore:
    """|Y| + |Z| - log2(agree(K1[X/Y], K2[X/Z]) + 1), counting non-identity entries only."""
    formulas = [y_sub.apply(k1), z_sub.apply(k2)]
    u = _covering(universe, profile, formulas)
    return score_formulas(formulas, y_sub.size + z_sub.size, u, mode)
