from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ample import kzero
from ample.dr import o_graph, single_loop


def det_order(A) -> int:
    """|det(I - A^t)| by float determinant, rounded."""
    A = np.asarray(A, dtype=float)
    return abs(int(round(np.linalg.det(np.eye(A.shape[0]) - A.T))))


def same_class_by_solving(A, x, y) -> bool:
    """x - y lies in (I - A^t) Z^V, decided by solving and checking integrality."""
    M = np.eye(len(x)) - np.asarray(A, dtype=float).T
    z = np.linalg.solve(M, np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
    return bool(np.allclose(z, np.round(z), atol=1e-9))


def points(G, O, P):
    return {x for x in G.points(P) if any(G.has_prefix(x, c) for c in O)}


@pytest.mark.parametrize("n,text", [(2, "0"), (3, "Z/2"), (5, "Z/4")])
def test_o_graph_groups(n, text):
    K = kzero.snf_oracle(o_graph(n))
    assert K.describe() == text
    assert K.order() == n - 1 == det_order([[n]])


def test_single_loop_is_infinite():
    K = kzero.snf_oracle(single_loop())
    assert K.describe() == "Z"
    assert not K.is_finite


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(st.integers(0, 3), min_size=2, max_size=2), min_size=2, max_size=2))
def test_order_matches_determinant(rows):
    A = np.array(rows)
    if (A.sum(axis=1) == 0).any():
        return
    G = kzero.graph_from_matrix(A)
    K = kzero.snf_oracle(G)
    d = det_order(A)
    if d == 0:
        assert not K.is_finite
    else:
        assert K.order() == d
        for x, y in itertools.product(itertools.product(range(-1, 2), repeat=2), repeat=2):
            assert (K.class_of_vector(x) == K.class_of_vector(y)) == same_class_by_solving(A, x, y)


def test_vertex_relation_holds_in_every_small_graph():
    for A in itertools.islice(kzero.small_graph_matrices(2), 60):
        G = kzero.graph_from_matrix(A)
        K = kzero.snf_oracle(G)
        for v in range(G.nv):
            ev = [0] * G.nv
            ev[v] = 1
            # [Z(v)] = sum over edges e into v of [Z(s(e))]
            rhs = [int(c) for c in np.asarray(A)[v]]
            assert K.class_of_vector(ev) == K.class_of_vector(rhs)


def test_vector_for_inverts_the_class_map():
    K = kzero.snf_oracle(o_graph(5))
    for t in K.elements():
        assert K.class_of_vector(K.vector_for(t)) == t


def test_independent_loops():
    rep = kzero.independent_loops_check(o_graph(3))
    assert rep.ok and rep.loops == {"v": ["e1", "e2"]}
    rep = kzero.independent_loops_check(single_loop())
    assert not rep.ok and rep.failing == "v"


def test_paradox_on_o3():
    O3 = o_graph(3)
    par = kzero.paradoxical_witness(O3, (O3.vertex("v"),))
    assert par.U1.to_json(O3) == {"role": "paradoxical-left", "pieces": [["e1", "v"]]}
    assert par.U2.to_json(O3) == {"role": "paradoxical-right", "pieces": [["e2", "v"]]}


def test_neg_and_add_on_o3():
    O3 = o_graph(3)
    v = (O3.vertex("v"),)
    r, step = kzero.neg_witness(O3, v)
    assert kzero.fmt_open(O3, r) == "Z(e3)"
    assert kzero.replay_step(O3, step) == []
    r, step = kzero.add_witness(O3, v, v)
    assert kzero.fmt_open(O3, r) == "Z(e1) ⊔ Z(e2)"
    assert kzero.replay_step(O3, step) == []


def test_neg_on_o2_is_empty():
    O2 = o_graph(2)
    r, _ = kzero.neg_witness(O2, (O2.vertex("v"),))
    assert r == ()


def test_double_negation_returns_the_class():
    G = kzero.graph_from_matrix([[1, 2], [1, 1]])
    K = kzero.snf_oracle(G)
    for v in range(G.nv):
        O = (G.vertex(v),)
        once, _ = kzero.neg_witness(G, O)
        twice, _ = kzero.neg_witness(G, once)
        cls = K.class_of_vector(kzero.class_vector(G, O))
        assert K.class_of_vector(kzero.class_vector(G, once)) == K.neg(cls)
        assert K.class_of_vector(kzero.class_vector(G, twice)) == cls


def test_tampered_step_fails_replay():
    O3 = o_graph(3)
    v = (O3.vertex("v"),)
    _, step = kzero.add_witness(O3, v, v)
    step.result = (O3.parse_path("e3"),)
    assert "result differs" in kzero.replay_step(O3, step)


def test_step_json_roundtrip():
    O3 = o_graph(3)
    v = (O3.vertex("v"),)
    _, step = kzero.add_witness(O3, v, v)
    back = kzero.step_from_json(O3, step.to_json(O3))
    assert kzero.replay_step(O3, back) == []
    assert back.to_json(O3) == step.to_json(O3)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.text("123", min_size=1, max_size=3), max_size=4),
       st.lists(st.text("123", min_size=1, max_size=3), max_size=4))
def test_set_operations_against_points(a, b):
    O3 = o_graph(3)

    def opens(words):
        cyls = []
        for w in words:
            p = O3.parse_path(" ".join(f"e{c}" for c in w))
            if all(kzero._meet(p, q) is None for q in cyls):
                cyls.append(p)
        return kzero.normalize(O3, cyls)

    A, B = opens(a), opens(b)
    P = 4
    assert points(O3, kzero.difference(O3, A, B), P) == points(O3, A, P) - points(O3, B, P)
    assert points(O3, kzero.union(O3, A, B), P) == points(O3, A, P) | points(O3, B, P)
    assert points(O3, kzero.coarsen(O3, A), P) == points(O3, A, P)


def test_realize_classes_on_o3():
    O3 = o_graph(3)
    R = kzero.realize_class(O3, (1,))
    assert kzero.fmt_open(O3, R.Y) == "Z(v)"
    R = kzero.realize_class(O3, (0,))
    assert kzero.fmt_open(O3, R.Y) == "Z(e1) ⊔ Z(e2)"
    assert all(kzero.replay_step(O3, s) == [] for s in R.steps)


def test_realize_respects_budget():
    with pytest.raises(kzero.K0Error, match="budget"):
        kzero.realize_class(o_graph(5), (3,), budget=1)


def test_realize_needs_two_loops():
    with pytest.raises(kzero.K0Error, match="independent loops"):
        kzero.realize_class(single_loop(), (1,))


def test_closure_on_some_graphs():
    for A in ([[3]], [[1, 2], [1, 1]], [[2, 1], [1, 2]]):
        G = kzero.graph_from_matrix(A)
        rep = kzero.closure_from_vertices(G)
        assert rep.equal and rep.realized == rep.target


def test_small_graph_enumeration_is_up_to_relabelling():
    mats = list(kzero.small_graph_matrices(2, 2))
    keys = set()
    for A in mats:
        perm = A[np.ix_([1, 0], [1, 0])] if A.shape[0] == 2 else A
        keys.add(min(A.tobytes(), perm.tobytes()))
    assert len(keys) == len(mats)
    assert all(1 <= s <= 2 for A in mats for s in A.sum(axis=1))
