from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ample import gpd
from ample.grp import FiniteGroup, cyclic_two_power_chain
from ample.hls import afs_fibre_projection
from ample.pact import build_transformation_groupoid, fix7

LOOP5 = [[0, 1, 2, 3, 4], [1, 0, 3, 4, 2], [2, 4, 0, 1, 3], [3, 2, 4, 0, 1], [4, 3, 1, 2, 0]]


def one_unit(table):
    t = np.asarray(table)
    n = t.shape[0]
    inv = [int(np.nonzero(t[g] == 0)[0][0]) for g in range(n)]
    return gpd.FiniteGroupoid(np.zeros(n), np.zeros(n), np.array(inv), t)


def test_pair_groupoid_is_valid():
    G = gpd.check_groupoid(gpd.pair_groupoid(3))
    assert G.n == 9 and G.units.tolist() == [0, 1, 2]


def test_group_as_groupoid_is_valid():
    G = gpd.check_groupoid(gpd.group_as_groupoid(FiniteGroup.cyclic(2)))
    assert G.n == 2 and G.units.size == 1


def test_non_associative_table_names_the_triple():
    with pytest.raises(gpd.GroupoidError) as info:
        gpd.check_groupoid(one_unit(LOOP5))
    g, h, k = info.value.witness
    t = np.asarray(LOOP5)
    assert info.value.axiom == "associativity"
    assert t[t[g, h], k] != t[g, t[h, k]]


def test_domain_and_inverse_violations():
    G = gpd.pair_groupoid(2)
    comp = G.comp.copy()
    comp[0, 0] = -1
    with pytest.raises(gpd.GroupoidError) as info:
        gpd.check_groupoid(gpd.FiniteGroupoid(G.s, G.r, G.inv, comp))
    assert info.value.axiom == "domain"
    inv = G.inv.copy()
    inv[2] = 2
    with pytest.raises(gpd.GroupoidError) as info:
        gpd.check_groupoid(gpd.FiniteGroupoid(G.s, G.r, inv, G.comp))
    assert info.value.axiom == "inverse"


def test_json_roundtrip():
    G = gpd.pair_groupoid(3)
    H = gpd.validate_groupoid(G.to_json())
    assert np.array_equal(H.comp, G.comp) and H.labels == tuple(G.label(g) for g in range(G.n))
    doc = G.to_json()
    doc["units"] = [0, 1]
    with pytest.raises(gpd.GroupoidError):
        gpd.validate_groupoid(doc)


def test_reduction_examples():
    G = gpd.pair_groupoid(3)
    H, keep = gpd.reduction(G, G.units)
    assert H.n == G.n and keep.tolist() == list(range(G.n))
    H, _ = gpd.reduction(G, [0, 1])
    assert H.n == 4
    gpd.check_groupoid(H)
    H, _ = gpd.reduction(G, [])
    assert H.n == 0


def test_products():
    Z2 = gpd.group_as_groupoid(FiniteGroup.cyclic(2))
    P = gpd.check_groupoid(gpd.product_groupoid(Z2, Z2))
    assert (P.n, P.units.size) == (4, 1)
    P = gpd.check_groupoid(gpd.product_groupoid(gpd.pair_groupoid(2), gpd.pair_groupoid(2)))
    assert P.n == 16
    point = gpd.pair_groupoid(1)
    G = gpd.pair_groupoid(3)
    P = gpd.product_groupoid(G, point)
    assert np.array_equal(P.comp, G.comp)


def test_bisections():
    G = gpd.pair_groupoid(3)
    assert gpd.is_bisection(G, [5])
    assert gpd.is_bisection(G, G.units)
    Z2 = gpd.group_as_groupoid(FiniteGroup.cyclic(2))
    assert not gpd.is_bisection(Z2, [0, 1])


def test_fib_counts():
    G = gpd.pair_groupoid(3)
    assert gpd.fib_count(G, range(9)) == 6
    assert gpd.fib_count(G, G.units) == 2
    tg = build_transformation_groupoid(fix7())
    A = [g for g, v in enumerate(tg.cocycle.values) if v == tg.spec.group.gen(0)]
    assert gpd.fib_count(tg.groupoid, A) == 2


def test_subgroupoids():
    G = gpd.pair_groupoid(3)
    assert gpd.is_subgroupoid(G, G.units)
    assert not gpd.is_subgroupoid(G, [4])
    diag = np.arange(G.n)
    assert gpd.pair_subgroupoid_witness(G, diag, diag) is None


def brute_reduction(G, K):
    return [g for g in range(G.n) if G.s[g] in K and G.r[g] in K]


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.data())
def test_reduction_matches_brute_force(m, data):
    G = gpd.pair_groupoid(m)
    K = data.draw(st.sets(st.sampled_from(G.units.tolist())))
    _, keep = gpd.reduction(G, K)
    assert keep.tolist() == brute_reduction(G, K)


def brute_fib(G, A):
    return max([sum(1 for a in A if G.s[a] == u) + sum(1 for a in A if G.r[a] == u) for u in G.units] or [0])


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.data())
def test_fib_count_bound_on_products(m, data):
    G = gpd.pair_groupoid(m)
    A = sorted(data.draw(st.sets(st.integers(0, G.n - 1))))
    B = sorted(data.draw(st.sets(st.integers(0, G.n - 1))))
    assert gpd.fib_count(G, A) == brute_fib(G, A)
    P = gpd.product_groupoid(G, G)
    AB = [a * G.n + b for a in A for b in B]
    assert gpd.fib_count(P, AB) <= gpd.fib_count(G, A) * len(B) + len(A) * gpd.fib_count(G, B)
    if gpd.is_bisection(G, A):
        assert gpd.fib_count(G, A) <= 2


# ------------------------------------------------------------ positive type


def test_constant_and_unit_indicator_are_positive():
    G = gpd.pair_groupoid(3)
    assert gpd.positive_type_check(gpd.PositiveTypeFn(G, np.ones(G.n))).positive
    Z4 = gpd.group_as_groupoid(FiniteGroup.cyclic(4))
    ind = np.array([1.0 if Z4.is_unit(g) else 0.0 for g in range(Z4.n)])
    res = gpd.positive_type_check(gpd.PositiveTypeFn(Z4, ind))
    assert res.positive


def test_negative_unit_value_gives_witness():
    G = gpd.pair_groupoid(1)
    res = gpd.positive_type_check(gpd.PositiveTypeFn(G, [-1.0]))
    assert not res.positive and res.min_eigenvalue == pytest.approx(-1.0)
    assert res.gram.shape == (1, 1)


def test_tolerance_is_relative():
    G = gpd.pair_groupoid(2)
    big = 1e6 * np.ones(G.n)
    big[0] -= 1e-5           # Gram [[1e6 - 1e-5, 1e6], [1e6, 1e6]]: tiny negative eigenvalue
    assert gpd.positive_type_check(gpd.PositiveTypeFn(G, big)).positive
    small = np.ones(G.n)
    small[0] -= 1e-5
    assert not gpd.positive_type_check(gpd.PositiveTypeFn(G, small)).positive


def test_pullback_examples():
    G = gpd.pair_groupoid(3)
    phi = gpd.random_positive_type(G, np.random.default_rng(1))
    same = gpd.pullback_positive_type(phi, G, np.arange(G.n))
    assert np.array_equal(same.values, phi.values)
    ones = gpd.pullback_positive_type(gpd.PositiveTypeFn(G, np.ones(G.n)), gpd.pair_groupoid(1), [0])
    assert np.all(ones.values == 1)
    with pytest.raises(gpd.GroupoidError):
        gpd.pullback_positive_type(phi, G, np.zeros(G.n, dtype=int) + 3)


def fix1():
    return afs_fibre_projection(cyclic_two_power_chain(2), 2, 1)


def test_fix1_pullback_preserves_positivity():
    fib, afs, P, h = fix1()
    assert gpd.check_homomorphism(fib, P, h) is None
    rng = np.random.default_rng(7)
    for _ in range(5):
        phi = gpd.random_positive_type(P, rng)
        assert gpd.positive_type_check(phi).positive
        assert gpd.positive_type_check(gpd.pullback_positive_type(phi, fib, h)).positive


def test_support_profiles():
    G = gpd.pair_groupoid(2)
    P = gpd.product_groupoid(G, G)
    diag = np.zeros(P.n)
    diag[gpd.pair_ids(G, G, np.arange(G.n), np.arange(G.n))] = 1
    K, C = G.units, [0, 2]
    assert gpd.proper_support_profile(gpd.PositiveTypeFn(P, diag), K, C) == (2, 2)
    assert gpd.proper_support_profile(gpd.PositiveTypeFn(P, np.ones(P.n)), K, C) == (8, 8)


def test_fix1_family_profile():
    # the diagonal-type function on AFS x AFS of the Z chain, depth 0..3
    sizes = []
    for N in range(4):
        fib, afs, P, h = afs_fibre_projection(cyclic_two_power_chain(N), N, 0)
        A = afs.groupoid
        phi = np.zeros(P.n)
        phi[h] = 1.0
        C = np.union1d(h // A.n, h % A.n)
        sizes.append(gpd.proper_support_profile(gpd.PositiveTypeFn(P, phi), A.units, C))
    # every pair (pi(g, x), (g, x)) is counted once on each side: |Γ_N x Γ_N| = 4^N
    assert sizes == [(1, 1), (4, 4), (16, 16), (64, 64)]
