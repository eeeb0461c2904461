import pytest

from libs.formula_parser import parse_formula
from libs.logic import (
    FALSE,
    MAX_UNIVERSE,
    TRUE,
    KnowledgeProfile,
    LogicError,
    Not,
    ProfileError,
    Universe,
    UniverseError,
    Var,
    count_models,
    equivalent,
    fresh_primes,
)
from libs.merge import MergeConfig, general_merge, rmel_merge
from libs.transforms import Renaming, TransformError, TransformationSet, apply_set

a, b = Var("a"), Var("b")
a1, a2 = Var("a'"), Var("a''")


@pytest.mark.edge_case
class TestUniverseLimits:
    """Test the brute-force envelope."""

    def test_cap_reached(self):
        """Test exactly MAX_UNIVERSE variables are allowed."""
        names = tuple(Var(f"v{i}") for i in range(MAX_UNIVERSE))
        assert len(Universe(names)) == MAX_UNIVERSE

    def test_cap_exceeded(self):
        """Test one more variable is refused."""
        names = tuple(Var(f"v{i}") for i in range(MAX_UNIVERSE + 1))
        with pytest.raises(UniverseError, match="cap"):
            Universe(names)

    def test_empty_universe(self):
        """Test constants are evaluated over no variables."""
        u = Universe(())
        assert u.size == 1
        assert equivalent(TRUE, Not(FALSE), u)

    def test_profile_over_the_cap(self):
        """Test large profiles are refused before any search."""
        big = parse_formula(" & ".join(f"v{i}" for i in range(MAX_UNIVERSE + 1)))
        with pytest.raises(UniverseError):
            KnowledgeProfile((big, TRUE))


@pytest.mark.edge_case
class TestVariableNames:
    """Test identifiers and fresh names."""

    @pytest.mark.parametrize("name", ["true", "false", "1a", "a-b", ""])
    def test_invalid_names(self, name):
        """Test reserved words and malformed identifiers."""
        with pytest.raises(LogicError):
            Var(name)

    def test_primes_skip_taken_names(self):
        """Test a' already in use pushes the fresh name to a''."""
        assert fresh_primes([a, a1]) == {a: (a2,), a1: (a2.primed(),)}

    def test_several_levels(self):
        """Test two fresh names per variable."""
        assert fresh_primes([a], levels=2) == {a: (a1, a2)}

    def test_profile_with_primed_input(self):
        """Test merging bases that already use primed names."""
        outcome = rmel_merge(a1, Not(a1), TRUE, TRUE)
        assert len(outcome.disjuncts) == 2
        assert all("a''" in str(d.formula) for d in outcome.disjuncts)


@pytest.mark.edge_case
class TestDegenerateProfiles:
    """Test profiles at the boundaries."""

    def test_no_bases(self):
        """Test an empty profile."""
        with pytest.raises(ProfileError, match="no knowledge bases"):
            KnowledgeProfile(())

    def test_unsatisfiable_bound(self):
        """Test an unsatisfiable lower bound."""
        with pytest.raises(ProfileError) as info:
            KnowledgeProfile((a,), TRUE, FALSE)
        assert info.value.violations == ["B is unsatisfiable"]

    def test_tautological_bases(self):
        """Test bases without variables merge to true."""
        outcome = rmel_merge(TRUE, TRUE, TRUE, TRUE)
        assert equivalent(outcome.result, TRUE, outcome.universe)

    def test_unsatisfiable_base_cannot_be_renamed_away(self):
        """Test renaming cannot repair a contradiction inside one base."""
        outcome = rmel_merge(parse_formula("a & !a"), b, TRUE, TRUE)
        assert outcome.no_admissible_hypothesis

    def test_zero_budget_general(self):
        """Test a zero budget only accepts the uncorrected profile."""
        cfg = MergeConfig(operator="general", budget_per_base=0)
        assert general_merge(KnowledgeProfile((a, Not(a))), cfg).no_admissible_hypothesis
        assert general_merge(KnowledgeProfile((a, b)), cfg).admissible

    def test_swap_is_not_a_legal_set(self):
        """Test exchanging a and b in one set is refused."""
        with pytest.raises(TransformError, match="also renamed"):
            TransformationSet.of(Renaming(a, b), Renaming(b, a))

    def test_renaming_to_an_absent_name(self):
        """Test a renaming only touches its source."""
        renamed = apply_set(TransformationSet.of(Renaming(a, Var("c"))), parse_formula("a & !b"))
        assert renamed == parse_formula("c & !b")


@pytest.mark.performance
class TestFullCap:
    """Test work at the largest universe the engine accepts."""

    def test_truth_table_at_the_cap(self):
        """Test model counting over 2^16 assignments."""
        names = tuple(Var(f"v{i}") for i in range(MAX_UNIVERSE))
        u = Universe(names)
        conj = parse_formula(" & ".join(v.name for v in names))
        assert count_models(conj, u) == 1
        assert count_models(Not(conj), u) == u.size - 1

    def test_merge_with_primes_at_the_cap(self):
        """Test eight problem variables and their primes fill the universe."""
        k1 = parse_formula("v0 & v1 & v2 & v3 & v4 & v5 & v6 & v7")
        outcome = rmel_merge(k1, Not(Var("v0")), TRUE, TRUE, MergeConfig(renaming_budget=1))
        assert len(outcome.universe) == MAX_UNIVERSE
        assert outcome.admissible
