from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ample import gpd, hls
from ample.grp import (ChainError, ChainLevel, QuotientChain, cyclic_two_power_chain, elementary_two_chain,
                       free_abelianized_chain, trivial_chain)


def free_ball_size(rank: int, radius: int) -> int:
    letters = [c for i in range(1, rank + 1) for c in (i, -i)]
    seen = set()
    for n in range(radius + 1):
        for w in itertools.product(letters, repeat=n):
            stack = []
            for c in w:
                if stack and stack[-1] == -c:
                    stack.pop()
                else:
                    stack.append(c)
            seen.add(tuple(stack))
    return len(seen)


def test_hls_arrow_counts():
    assert hls.build_hls(cyclic_two_power_chain(3), 2).groupoid.n == 7
    assert hls.build_hls(trivial_chain(2), 0).groupoid.n == 1
    assert hls.build_hls(elementary_two_chain(2), 2).groupoid.n == 7


def test_hls_fibres_are_groups():
    t = hls.build_hls(cyclic_two_power_chain(3), 3, top=True)
    gpd.check_groupoid(t.groupoid)
    assert hls.fibers_are_groups(t)
    assert t.groupoid.units.size == 5


def test_afs_truncation_is_principal():
    t = hls.build_afs(cyclic_two_power_chain(3), 2)
    gpd.check_groupoid(t.groupoid)
    assert t.groupoid.n == 21
    assert hls.is_principal(t.groupoid)


def test_hls_is_not_principal():
    assert not hls.is_principal(hls.build_hls(cyclic_two_power_chain(2), 2).groupoid)


def test_shadow_in_z_chain():
    Z = cyclic_two_power_chain(3)
    assert hls.shadow(Z, 1, 1, 2) == [(1, 1), (2, 1), (2, 3)]
    with pytest.raises(ChainError):
        hls.shadow(Z, 3, 0, 2)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 3), st.data())
def test_shadow_matches_residues(k, data):
    Z = cyclic_two_power_chain(4)
    g = data.draw(st.integers(0, 2**k - 1))
    expect = [(n, h) for n in range(k, 5) for h in range(2**n) if h % 2**k == g]
    assert hls.shadow(Z, k, g, 4) == expect


@pytest.mark.parametrize("radius,bound", [(0, 1), (1, 5), (2, 17), (3, 53)])
def test_delta_witness_bound_on_f2(radius, bound):
    F = free_abelianized_chain(3)
    S = [F.base.gen(0), F.base.gen(1)]
    cert = hls.delta_violation_witness(F, S, radius, 1)
    assert cert.lower_bound == bound == free_ball_size(2, radius)
    assert hls.replay_delta_witness(F, cert) == []


def test_delta_witness_on_z_chain():
    Z = cyclic_two_power_chain(3)
    cert = hls.delta_violation_witness(Z, [Z.base.gen(0)], 3, 2)
    assert cert.lower_bound == 7
    assert hls.replay_delta_witness(Z, cert) == []


def test_tampered_witness_fails_replay():
    F = free_abelianized_chain(2)
    cert = hls.delta_violation_witness(F, [F.base.gen(0), F.base.gen(1)], 2, 1)
    gam, (fin, inf) = cert.pairs[3]
    n, g, y = fin
    cert.pairs[3] = (gam, ((n, (g + 1) % F.group(1).n, y), inf))
    assert hls.replay_delta_witness(F, cert)


def test_witness_json_carries_scope():
    F = free_abelianized_chain(2)
    d = hls.delta_violation_witness(F, [F.base.gen(0)], 1, 1).to_json(F)
    assert d["lower_bound"] == 3
    assert "lower bound" in d["scope"]
    assert len(d["pairs"]) == 3


@pytest.mark.parametrize("k", [0, 1, 2])
def test_equicontinuity_on_z_chain(k):
    Z = cyclic_two_power_chain(3)
    x0 = hls.compatible_point(Z, 2, 3)
    assert x0 == (0, 1, 3)
    cert = hls.equicontinuity_certificate(Z, 2, [Z.base.gen(0)], 2, x0, hls.level_cover(Z, k))
    assert cert.ok and cert.failure is None
    assert len(cert.trace) == 5


def test_equicontinuity_on_trivial_chain():
    T = trivial_chain(2)
    cert = hls.equicontinuity_certificate(T, 2, [], 3, (0, 0, 0), hls.level_cover(T, 2))
    assert cert.ok


def test_equicontinuity_rejects_bad_point_and_cover():
    Z = cyclic_two_power_chain(3)
    with pytest.raises(ChainError):
        hls.equicontinuity_certificate(Z, 2, [Z.base.gen(0)], 1, (0, 1, 2), hls.level_cover(Z, 1))
    with pytest.raises(ValueError, match="cover misses"):
        hls.equicontinuity_certificate(Z, 2, [Z.base.gen(0)], 1, (0, 1, 3), [(1, 0)])


def test_mis_specified_factor_map_is_caught():
    Z = cyclic_two_power_chain(2)
    lv = list(Z.levels)
    bad = ChainLevel(lv[1].group, lv[1].gen_images, (0, 0, 1, 1))
    with pytest.raises(ChainError, match="not a homomorphism"):
        QuotientChain(Z.base, [lv[0], bad, lv[2]], name="bad")


def delta_bar_pairs(depth: int, N: int) -> set:
    """Pairs of H written as ((level, vector), ...) with no groupoid indexing."""
    pairs = set()
    for n in range(N + 1):
        for x in itertools.product((0, 1), repeat=n):
            full = x + (0,) * (depth - n)
            pts = [(k, full[:k]) for k in range(n, N + 1)] + [("top", full)]
            pairs.update(itertools.product(pts, pts))
    return pairs


def test_locally_finite_delta_bar_size_matches_oracle():
    E = elementary_two_chain(2)
    rep = hls.locally_finite_delta_bar(E, hls.span_family(E, 2), 2)
    assert rep.a.size == len(delta_bar_pairs(2, 2)) == 33
    assert rep.injective_level == {0: 0, 1: 1, 2: 2}
    assert [f["left_fib"] for f in rep.fibre_audit] == [2, 4, 8, 8]


def test_delta_bar_needs_a_growing_family():
    E = elementary_two_chain(2)
    F = hls.span_family(E, 2)
    with pytest.raises(hls.DeltaBarError):
        hls.locally_finite_delta_bar(E, [F[1], F[0], F[2]], 2)
    with pytest.raises(hls.DeltaBarError, match="diagonal"):
        hls.locally_finite_delta_bar(E, [F[0], F[0], F[2]], 2)


def test_delta_bar_needs_a_finite_base():
    Z = cyclic_two_power_chain(2)
    with pytest.raises(ChainError):
        hls.locally_finite_delta_bar(Z, [[(0,)]] * 3, 2)


@pytest.mark.parametrize("N,arrows", [(0, 2), (1, 5), (2, 11)])
def test_hls_matches_trivial_partial_action(N, arrows):
    left, right, res = hls.hls_vs_partial_action_iso(elementary_two_chain(max(N, 1)), N)
    assert left.groupoid.n == right.groupoid.n == arrows
    assert res.status == "isomorphic"


def test_iso_search_tells_cyclic_from_elementary():
    A = hls.build_hls(cyclic_two_power_chain(2), 2, top=True).groupoid
    B = hls.build_hls(elementary_two_chain(2), 2, top=True).groupoid
    assert A.n == B.n == 11
    assert hls.find_isomorphism(A, B).status == "not-isomorphic"


def test_iso_search_budget_is_reported():
    A = hls.build_afs(cyclic_two_power_chain(2), 2).groupoid
    res = hls.find_isomorphism(A, A, budget=3)
    assert res.status == "exhausted"


def test_pullback_projection_is_a_homomorphism():
    fib, afs, P, h = hls.afs_fibre_projection(cyclic_two_power_chain(2), 2, 1)
    assert fib.n == 16
    assert gpd.check_homomorphism(fib, P, h) is None
