from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ample.grp import (AbelianGroup, ChainError, ChainLevel, FiniteGroup, FreeGroup, GroupError, QuotientChain,
                       Word, ball_enumerate, cyclic_two_power_chain, elementary_two_chain, equal_words,
                       factor_image, free_abelianized_chain, quotient_image, reduce_word)

F2 = FreeGroup(2, ["a", "b"])


def brute_free_ball(rank: int, radius: int) -> set:
    """Reduce every letter string of length <= radius by hand (stack cancellation)."""
    letters = [c for i in range(1, rank + 1) for c in (i, -i)]
    out = set()
    for n in range(radius + 1):
        for word in itertools.product(letters, repeat=n):
            stack = []
            for c in word:
                if stack and stack[-1] == -c:
                    stack.pop()
                else:
                    stack.append(c)
            out.add(tuple(stack))
    return out


def test_free_cancellation():
    assert str(F2.word("a b b^-1").reduce()) == "a"


def test_already_reduced_word_is_kept():
    w = F2.word("b^-1 a b b")
    assert str(w.reduce()) == "b^-1 a b b"
    assert F2.format(w.element) == "b^-1 a b^2"


def test_cyclic_table_walk():
    Z4 = FiniteGroup.cyclic(4)
    assert Z4.prod(*[Z4.gen(0)] * 4) == Z4.e


def test_equal_words():
    assert equal_words(F2.word("a b"), F2.word("a b"))
    assert not equal_words(F2.word("a"), F2.word("b"))
    Z2 = AbelianGroup.free_abelian(2, ["f", "g"])
    assert equal_words(Z2.word("f g"), Z2.word("g f"))


def test_words_over_different_groups_are_rejected():
    with pytest.raises(GroupError):
        equal_words(F2.word("a"), FreeGroup(2, ["x", "y"]).word("x"))


def test_quotient_images():
    Z = cyclic_two_power_chain(3)
    assert quotient_image(Z, 2, Z.base.word("a^5")) == 1
    assert quotient_image(Z, 2, Z.base.word("1")) == Z.group(2).e
    F = free_abelianized_chain(2)
    img = quotient_image(F, 1, F.base.word("a b a"))
    assert F.group(1).vectors[img] == (0, 1)


def test_factor_images():
    Z = cyclic_two_power_chain(3)
    assert factor_image(Z, 1, 3, 5) == 1
    assert all(factor_image(Z, 3, 3, g) == g for g in range(8))
    assert factor_image(Z, 0, 3, Z.group(3).e) == Z.group(0).e


def test_ball_sizes():
    S = [F2.gen(0), F2.gen(1)]
    assert len(ball_enumerate(F2, S, 2)) == 17
    assert ball_enumerate(F2, S, 0) == [F2.identity()]
    Z = AbelianGroup((0,), ["t"])
    assert sorted(x[0] for x in ball_enumerate(Z, [Z.gen(0)], 3)) == list(range(-3, 4))


@pytest.mark.parametrize("radius", range(7))
def test_free_ball_matches_brute_force(radius):
    ball = ball_enumerate(F2, [F2.gen(0), F2.gen(1)], radius)
    assert set(ball) == brute_free_ball(2, radius)
    assert len(ball) == 2 * 3 ** radius - 1


def test_ball_order_is_length_lexicographic():
    ball = ball_enumerate(F2, [F2.gen(0), F2.gen(1)], 3)
    assert [len(x) for x in ball] == sorted(len(x) for x in ball)
    assert ball == F2.sorted(ball)


def test_chain_without_factor_map_is_rejected():
    ok = cyclic_two_power_chain(2)
    levels = [ChainLevel(ok.levels[0].group, ok.levels[0].gen_images, None), ok.levels[1]]
    with pytest.raises(ChainError, match="missing factor map"):
        QuotientChain(ok.base, levels)


def test_incoherent_chain_is_rejected():
    ok = cyclic_two_power_chain(3)
    # a -> 3 in Z/8 still generates, but pushes down to 3 in Z/4 where a -> 1
    levels = list(ok.levels[:3]) + [ChainLevel(ok.levels[3].group, (3,), None)]
    with pytest.raises(ChainError, match="incoherent chain at level 2"):
        QuotientChain(ok.base, levels)


def test_faithfulness_is_only_a_flag():
    assert cyclic_two_power_chain(3).faithful_assumed
    F = free_abelianized_chain(3)
    assert not F.faithful_assumed
    # the finite check on demand: a b and b a collide in every abelian quotient
    ab, ba = F.base.parse("a b"), F.base.parse("b a")
    assert F.injective_on(3, [ab, ba]) == (ab, ba)


def test_finite_group_table_checks():
    with pytest.raises(GroupError, match="associative"):
        FiniteGroup([[0, 1, 2, 3, 4], [1, 0, 3, 4, 2], [2, 4, 0, 1, 3], [3, 2, 4, 0, 1], [4, 3, 1, 2, 0]])
    with pytest.raises(GroupError):
        FiniteGroup([[0, 1], [1, 1]])


words = st.lists(st.tuples(st.integers(0, 1), st.sampled_from([1, -1])), max_size=12)


@settings(max_examples=200, deadline=None)
@given(words, words)
def test_reduce_is_idempotent_congruence(u, v):
    U, V = Word(tuple(u), F2), Word(tuple(v), F2)
    assert reduce_word(reduce_word(U)) == reduce_word(U)
    assert reduce_word(U * V) == reduce_word(reduce_word(U) * reduce_word(V))


CHAINS = [cyclic_two_power_chain(4), free_abelianized_chain(3), elementary_two_chain(3)]


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(CHAINS), words, words, st.data())
def test_quotient_is_homomorphism_and_coherent(chain, u, v, data):
    base = chain.base
    u = [(i % base.ngens, e) for i, e in u]
    v = [(i % base.ngens, e) for i, e in v]
    x, y = base.from_letters(u), base.from_letters(v)
    n = data.draw(st.integers(0, chain.depth))
    k = data.draw(st.integers(0, n))
    G = chain.group(n)
    assert chain.image(n, base.mul(x, y)) == G.mul(chain.image(n, x), chain.image(n, y))
    assert chain.factor(k, n, chain.image(n, x)) == chain.image(k, x)


def test_abelian_group_roundtrip_of_formats():
    A = AbelianGroup((0, 4), ["t", "s"])
    for v in [(0, 0), (3, 1), (-2, 3)]:
        x = A.parse(list(v))
        assert A.parse(A.format(x)) == x
    assert np.array_equal(FiniteGroup.from_abelian((2, 2)).table, FiniteGroup.from_abelian((2, 2)).table.T)
