from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ample import gpd, pact
from ample.grp import AbelianGroup, FiniteGroup, FreeGroup


def brute_valid(spec) -> bool:
    """Axioms checked straight from the definition, one triple at a time."""
    G, table = spec.group, spec.table
    e = G.identity()
    if table.get(e) != {x: x for x in range(len(spec.points))}:
        return False
    for g, m in table.items():
        back = table.get(G.inv(g), {})
        if any(back.get(y) != x for x, y in m.items()):
            return False
    for g, h in itertools.product(table, repeat=2):
        hg = table.get(G.mul(h, g), {})
        for x, gx in table[g].items():
            if gx in table[h] and hg.get(x) != table[h][gx]:
                return False
    return True


def brute_pair_fib(G, pairs) -> int:
    best = 0
    for u, v in itertools.product(G.units.tolist(), repeat=2):
        src = sum(1 for p, q in pairs if G.s[p] == u and G.s[q] == v)
        rng = sum(1 for p, q in pairs if G.r[p] == u and G.r[q] == v)
        best = max(best, src + rng)
    return best


def test_fix7_is_valid():
    spec = pact.fix7()
    assert pact.validate_partial_action(spec) is spec
    assert brute_valid(spec)


def test_broken_fix7_names_axiom_two_and_suggests_completion():
    with pytest.raises(pact.PartialActionError) as info:
        pact.validate_partial_action(pact.fix7_broken())
    err = info.value
    Z = pact.fix7().group
    a = Z.gen(0)
    assert err.axiom == "axiom2"
    assert err.witness == {"gamma": a, "eta": a, "x": 0}
    assert err.suggestion == pact.fix7()


def test_identity_must_be_total():
    Z = FreeGroup(1)
    spec = pact.PartialActionSpec.build(Z, (0, 1), {Z.identity(): {0: 0}})
    with pytest.raises(pact.PartialActionError) as info:
        pact.validate_partial_action(spec)
    assert info.value.axiom == "axiom1"


def test_non_inverse_pair_rejected():
    Z = FreeGroup(1)
    a = Z.gen(0)
    spec = pact.PartialActionSpec.build(Z, (0, 1), {Z.identity(): {0: 0, 1: 1}, a: {0: 1}, Z.inv(a): {0: 1}})
    with pytest.raises(pact.PartialActionError) as info:
        pact.validate_partial_action(spec)
    assert info.value.axiom == "inverse"


def test_conflicting_composition_is_axiom_three():
    C2 = FiniteGroup.cyclic(2)
    spec = pact.PartialActionSpec.build(C2, (0, 1), {0: {0: 1, 1: 0}, 1: {0: 1, 1: 0}})
    with pytest.raises(pact.PartialActionError) as info:
        pact.validate_partial_action(spec)
    assert info.value.axiom in ("axiom1", "axiom3")


def test_parse_rejects_duplicate_and_unknown_points():
    Z = FreeGroup(1)
    doc = {"points": ["p", "q"], "support": [{"gamma": "e", "domain": ["p", "q"], "map": ["p", "q"]},
                                             {"gamma": "e", "domain": [], "map": []}]}
    with pytest.raises(pact.PartialActionError, match="duplicate"):
        pact.parse_partial_action(doc, Z)
    doc = {"points": ["p"], "support": [{"gamma": "e", "domain": ["z"], "map": ["p"]}]}
    with pytest.raises(pact.PartialActionError, match="unknown point"):
        pact.parse_partial_action(doc, Z)


def test_fix7_transformation_groupoid_has_nine_arrows():
    tg = pact.build_transformation_groupoid(pact.fix7())
    gpd.check_groupoid(tg.groupoid)
    assert tg.groupoid.n == 9
    assert tg.groupoid.units.size == 3


def test_trivial_action_gives_one_arrow_per_point():
    tg = pact.build_transformation_groupoid(pact.trivial_partial_action(FreeGroup(2), "abcd"))
    assert tg.groupoid.n == 4
    assert pact.check_pure_cocycle(tg.cocycle) is None


def test_fix7_roundtrip_is_exact():
    spec = pact.fix7()
    back = pact.cocycle_to_partial_action(pact.build_transformation_groupoid(spec).cocycle)
    assert back.spec == spec
    assert sorted(back.iso.tolist()) == list(range(9))


def test_pair_groupoid_cocycle_into_z_reads_off_a_shift():
    P = gpd.pair_groupoid(2)
    Z = AbelianGroup((0,))
    vals = []
    for g in range(P.n):
        s, r = int(P.s[g]), int(P.r[g])
        pos = {int(u): i for i, u in enumerate(P.units.tolist())}
        vals.append((pos[r] - pos[s],))
    back = pact.cocycle_to_partial_action(pact.Cocycle(P, Z, tuple(vals)))
    table = back.spec.table
    assert table[(1,)] == {0: 1}
    assert table[(-1,)] == {1: 0}
    assert len(back.spec.support) == 3


def test_impure_cocycle_rejected_with_kernel_arrow():
    P = gpd.pair_groupoid(2)
    Z = AbelianGroup((0,))
    c = pact.Cocycle(P, Z, tuple((0,) for _ in range(P.n)))
    bad = pact.check_pure_cocycle(c)
    assert bad is not None and not P.is_unit(bad)
    with pytest.raises(ValueError, match="not pure"):
        pact.cocycle_to_partial_action(c)


def test_non_homomorphism_is_malformed():
    P = gpd.pair_groupoid(2)
    Z = AbelianGroup((0,))
    c = pact.Cocycle(P, Z, tuple((1,) for _ in range(P.n)))
    with pytest.raises(pact.MalformedCocycle):
        pact.check_pure_cocycle(c)


def test_fix7_delta_h_and_audit():
    tg = pact.build_transformation_groupoid(pact.fix7())
    G, c = tg.groupoid, tg.cocycle
    a, b = pact.canonical_delta_h(tg)
    assert a.size == 19  # 3^2 + 2^2 + 2^2 + 1 + 1
    aud = pact.delta_audit(G, a, b, G.units.tolist(), range(G.n), cocycle=c)
    assert aud.bound == 10
    assert aud.left_fib == aud.right_fib == 6
    assert aud.within_bound
    pairs = list(zip(a.tolist(), b.tolist()))
    assert brute_pair_fib(G, pairs) == aud.left_fib


def test_delta_audit_empty_c():
    tg = pact.build_transformation_groupoid(pact.fix7())
    a, b = pact.canonical_delta_h(tg)
    aud = pact.delta_audit(tg.groupoid, a, b, tg.groupoid.units.tolist(), [], cocycle=tg.cocycle)
    assert (aud.left_size, aud.left_fib, aud.bound) == (0, 0, 0)


def test_delta_audit_rejects_non_subgroupoid():
    tg = pact.build_transformation_groupoid(pact.fix7())
    G = tg.groupoid
    a = np.arange(G.n)
    with pytest.raises(pact.DeltaError) as info:
        pact.delta_audit(G, a[:-1], a[:-1], G.units.tolist(), [])
    assert info.value.reason in ("diagonal", "subgroupoid")


def test_random_corpus_is_valid_by_brute_force():
    for spec in pact.random_corpus(7, 40):
        assert brute_valid(spec)
        pact.validate_partial_action(spec)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_roundtrip_identity_on_random_specs(seed):
    spec = pact.random_corpus(seed, 1)[0]
    tg = pact.build_transformation_groupoid(spec)
    back = pact.cocycle_to_partial_action(tg.cocycle)
    assert back.spec == spec
    assert all(pact.preimage_bisections(tg.cocycle).values())


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_delta_bound_on_random_specs(seed):
    spec = pact.random_corpus(seed, 1)[0]
    tg = pact.build_transformation_groupoid(spec)
    G, c = tg.groupoid, tg.cocycle
    a, b = pact.canonical_delta_h(tg)
    sizes = {}
    for v in c.values:
        sizes[v] = sizes.get(v, 0) + 1
    assert a.size == sum(k * k for k in sizes.values())
    rng = np.random.default_rng(seed)
    C = [g for g in range(G.n) if rng.random() < 0.5]
    aud = pact.delta_audit(G, a, b, G.units.tolist(), C, cocycle=c)
    assert aud.within_bound
    assert brute_pair_fib(G, list(zip(*pact.gpd.restrict_pairs(G, a, b, C, np.arange(G.n))))) == aud.right_fib
