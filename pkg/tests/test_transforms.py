import random
from itertools import permutations

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from libs.logic import (
    TRUE,
    And,
    Implies,
    KnowledgeProfile,
    Model,
    Not,
    Or,
    Universe,
    Var,
    equivalent,
    models,
    variables,
)
from libs.transforms import (
    EMPTY_SET,
    Generalization,
    Particularization,
    Renaming,
    TransformError,
    TransformationSet,
    TransformationTuple,
    ValueFlip,
    apply,
    apply_set,
    apply_tuple,
    forward_candidates,
    inverse_candidates,
    inverse_transformations,
    legal_sets,
)
from tests.test_utils import formulas, random_formula

a, b, c, d = Var("a"), Var("b"), Var("c"), Var("d")
x, y, z, f_ = Var("x"), Var("y"), Var("z"), Var("f")
ABCD = Universe((a, b, c, d))


@pytest.mark.unit
class TestTransformations:
    """Test the individual mistake transformations."""

    def test_particularization(self):
        """Test par x turns y into x -> y."""
        assert apply(Particularization(x), y) == Implies(x, y)

    def test_generalization_drops_assumption(self):
        """Test gen x undoes a spurious assumption."""
        assert apply(Generalization(x), Implies(x, f_)) == f_

    def test_generalization_of_absent_variable(self):
        """Test gen on an absent variable is the identity."""
        assert Generalization(x).apply(y) == y

    def test_renaming(self):
        """Test a single renaming."""
        assert Renaming(a, Var("a'")).apply(And((a, b))) == And((Var("a'"), b))

    def test_renaming_to_itself_rejected(self):
        """Test ren x->x is not a transformation."""
        with pytest.raises(TransformError):
            Renaming(a, a)

    def test_value_flip(self, ab_universe):
        """Test flipping b in the model a=1, b=1 of a & b."""
        m = Model.from_assignment(ab_universe, {a: True, b: True})
        result = ValueFlip(m, b).apply(And((a, b)))
        assert equivalent(result, And((a, Not(b))), ab_universe)

    def test_value_flip_onto_existing_model(self, ab_universe):
        """Test a flip onto a model already present removes one model."""
        m = Model.from_assignment(ab_universe, {a: True, b: True})
        before = models(a, ab_universe)
        after = models(ValueFlip(m, b).apply(a), ab_universe)
        assert len(before ^ after) == 1

    def test_value_flip_requires_a_model(self, ab_universe):
        """Test a flip of a non-model is a malformed hypothesis."""
        m = Model.from_assignment(ab_universe, {a: False, b: True})
        with pytest.raises(TransformError, match="does not satisfy"):
            ValueFlip(m, b).apply(And((a, b)))

    def test_value_flip_variable_outside_universe(self, ab_universe):
        """Test the flipped variable must be in the model's universe."""
        with pytest.raises(TransformError):
            ValueFlip(Model(ab_universe, 0), c)

    @pytest.mark.parametrize("t, text", [
        (Renaming(a, Var("a'")), "ren a->a'"),
        (Generalization(x), "gen x"),
        (Particularization(x), "par x"),
    ])
    def test_printing(self, t, text):
        """Test the explanation syntax."""
        assert str(t) == text

    def test_flip_printing(self, ab_universe):
        """Test flips print the model bits."""
        m = Model.from_assignment(ab_universe, {a: True, b: True})
        assert str(ValueFlip(m, b)) == "flip 11 b"

    @given(formulas(["a", "b", "c"]), st.sampled_from([a, b, c, d]))
    @settings(max_examples=500, deadline=None)
    def test_generalization_undoes_particularization(self, f, v):
        """Test gen x after par x gives back f when f does not mention x."""
        assume(v not in variables(f))
        restored = Generalization(v).apply(Particularization(v).apply(f))
        assert equivalent(restored, f, ABCD)

    def test_generalization_after_particularization_of_own_variable(self):
        """Test par a then gen a on a gives true, not a."""
        restored = Generalization(a).apply(Particularization(a).apply(a))
        assert restored == TRUE
        assert not equivalent(restored, a, Universe((a,)))

    def test_particularization_does_not_undo_generalization(self):
        """Test par a after gen a on y is a -> y, not y."""
        result = Particularization(a).apply(Generalization(a).apply(y))
        assert result == Implies(a, y)
        assert not equivalent(result, y, Universe((a, y)))

    @given(formulas(), st.sampled_from([a, b, c, d]))
    @settings(max_examples=200, deadline=None)
    def test_generalization_removes_variable(self, f, v):
        """Test the generalized formula never mentions the variable."""
        assert v not in variables(Generalization(v).apply(f))

    @given(formulas(), st.sampled_from([a, b, c, d]), st.data())
    @settings(max_examples=200, deadline=None)
    def test_value_flip_swaps_one_model(self, f, v, data):
        """Test a flip removes one model and adds at most one."""
        before = models(f, ABCD)
        if not before:
            return
        m = data.draw(st.sampled_from(sorted(before, key=lambda mm: mm.bits)))
        after = models(ValueFlip(m, v).apply(f), ABCD)
        expected = 1 if m.flipped(v) in before else 2
        assert len(before ^ after) == expected
        assert m.flipped(v) in after


@pytest.mark.unit
class TestTransformationSets:
    """Test sets, tuples and canonical application."""

    def test_empty_set(self):
        """Test the empty set is the identity."""
        f = Or((a, b))
        assert apply_set(EMPTY_SET, f) is f

    def test_single_renaming(self):
        """Test one renaming."""
        assert apply_set(TransformationSet.of(Renaming(a, Var("a'"))), a) == Var("a'")

    def test_canonical_order(self):
        """Test generalizations run before particularizations."""
        s = TransformationSet.of(Particularization(y), Generalization(x))
        assert apply_set(s, Implies(x, f_)) == Implies(y, f_)

    def test_shared_source_rejected(self):
        """Test two renamings of the same variable."""
        with pytest.raises(TransformError, match="share"):
            TransformationSet.of(Renaming(a, b), Renaming(a, c))

    def test_chained_renaming_rejected(self):
        """Test a target that is also renamed."""
        with pytest.raises(TransformError, match="also renamed"):
            TransformationSet.of(Renaming(a, b), Renaming(b, c))

    def test_budget(self):
        """Test the size budget."""
        with pytest.raises(TransformError, match="budget"):
            TransformationSet.of(Generalization(a), Generalization(b), budget=1)

    def test_printing(self):
        """Test sets print in canonical order."""
        s = TransformationSet.of(Particularization(b), Renaming(a, Var("a'")), Generalization(c))
        assert str(s) == "{ren a->a', gen c, par b}"

    def test_order_independence(self):
        """Test every application order of a legal set agrees with the canonical one."""
        rng = random.Random(7)
        pool = [Renaming(a, Var("a'")), Renaming(c, Var("c'")), Generalization(b), Generalization(d),
                Particularization(Var("e")), Particularization(Var("g"))]
        extra = [Var("a'"), Var("c'"), Var("e"), Var("g")]
        for _ in range(40):
            f = random_formula(rng, ["a", "b", "c", "d"])
            chosen = rng.sample(pool, rng.randint(1, 4))
            canonical = apply_set(TransformationSet(frozenset(chosen)), f)
            u = Universe.of(f, extra=extra)
            for order in permutations(chosen):
                result = f
                for t in order:
                    result = t.apply(result)
                assert equivalent(result, canonical, u)

    def test_tuple_application(self):
        """Test tuples conjoin the corrected bases."""
        profile = KnowledgeProfile((a, Not(a)))
        t = TransformationTuple((TransformationSet.of(Renaming(a, Var("a'"))), EMPTY_SET))
        assert apply_tuple(t, profile) == And((Var("a'"), Not(a)))
        assert str(t) == "K1{ren a->a'} K2{}"
        assert t.size == 1

    def test_empty_tuple(self):
        """Test the empty tuple conjoins the bases."""
        profile = KnowledgeProfile((a, b, c))
        assert apply_tuple(TransformationTuple.empty(3), profile) == And((a, b, c))

    def test_collapsing_tuple(self):
        """Test a renaming that makes two bases identical."""
        x1, x2 = Var("x1"), Var("x2")
        profile = KnowledgeProfile((x1, x2))
        t = TransformationTuple((EMPTY_SET, TransformationSet.of(Renaming(x2, x1))))
        assert equivalent(apply_tuple(t, profile), x1, Universe((x1, x2)))

    def test_tuple_length_mismatch(self):
        """Test tuples must match the profile."""
        with pytest.raises(TransformError, match="2 knowledge bases"):
            apply_tuple(TransformationTuple.empty(1), KnowledgeProfile((a, b)))


@pytest.mark.unit
class TestCandidates:
    """Test forward and inverse candidate enumeration."""

    def test_forward_renamings_into_base(self):
        """Test x may have been renamed to either variable of z | y."""
        found = forward_candidates(Or((z, y)), {x})
        assert Renaming(x, z) in found
        assert Renaming(x, y) in found

    def test_forward_generalization_of_outside_variable(self):
        """Test a tautology may hide any generalized pool variable."""
        assert Generalization(x) in forward_candidates(TRUE, {x})

    def test_forward_particularization(self):
        """Test !x entails !x, so par x is a candidate."""
        assert Particularization(x) in forward_candidates(Not(x), set())

    def test_forward_budget_truncates(self):
        """Test the budget keeps the first candidates in canonical order."""
        found = forward_candidates(Or((z, y)), {x, a, b}, budget=2)
        assert len(found) == 2
        assert all(isinstance(t, Renaming) for t in found)

    def test_inverse_renaming_pair(self):
        """Test ren z->y is undone by renaming y to a pool variable or to y'."""
        pairs = inverse_candidates(And((y, a)), {z})
        assert (Renaming(z, y), Renaming(y, Var("y'"))) in pairs
        assert (Renaming(z, y), Renaming(y, z)) in pairs
        assert (Renaming(z, y), Renaming(y, Var("z'"))) not in pairs

    def test_renaming_targets_never_borrow_another_prime(self):
        """Test fresh targets come from the renamed variable's own primes."""
        fresh = {a: (Var("a'"),), b: (Var("b'"),)}
        renamings = inverse_transformations(a, {a, b}, fresh, kinds=["renaming"])
        assert renamings == [Renaming(a, Var("a'")), Renaming(a, b)]

    def test_inverse_of_particularization(self):
        """Test par x is undone by gen x."""
        pairs = inverse_candidates(Implies(x, f_), set())
        assert (Particularization(x), Generalization(x)) in pairs

    def test_inverse_of_generalization(self):
        """Test gen x is undone by a particularization outside k."""
        pairs = inverse_candidates(a, {b})
        assert (Generalization(b), Particularization(b)) in pairs
        assert (Generalization(b), Particularization(Var("a'"))) in pairs

    def test_empty_pool_without_variables(self):
        """Test a constant base with an empty pool has nothing to undo."""
        assert inverse_candidates(TRUE, set()) == frozenset()

    def test_empty_pool_uses_primes_only(self):
        """Test with an empty pool every target is a fresh prime."""
        pairs = inverse_candidates(a, set())
        targets = {inv.target for fwd, inv in pairs if isinstance(inv, Renaming)}
        assert targets == {Var("a'")}

    def test_inverse_transformations_by_kind(self):
        """Test filtering by mistake kind."""
        renamings = inverse_transformations(And((a, b)), {c}, kinds=["renaming"])
        assert renamings and all(isinstance(t, Renaming) for t in renamings)
        assert all(t.source in {a, b} for t in renamings)

    def test_legal_sets(self):
        """Test enumeration skips illegal combinations."""
        items = [Renaming(a, b), Renaming(a, c), Generalization(d)]
        sets = legal_sets(items, 2)
        assert len(sets) == 2
        assert all(len(s) == 2 for s in sets)
