"""The ten acceptance criteria, each timed against its limit.

Parameters and limits come from ``tests/acceptance.json``.  Every criterion
prints one ``criterion N: PASS|FAIL`` line, repeated in the terminal summary.
One-off numba compilation happens in a fixture before any clock starts.
"""

from __future__ import annotations

import json
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES

from ample import coarse, dr, gpd, hls, kernels, kzero, pact
from ample.coarse import F2, Z, z_elem
from ample.grp import cyclic_two_power_chain, elementary_two_chain, free_abelianized_chain

CONFIG = json.loads((Path(__file__).with_name("acceptance.json")).read_text(encoding="utf-8"))["criteria"]


@pytest.fixture(scope="module", autouse=True)
def compiled():
    kernels.warmup()


@contextmanager
def criterion(num: int, what: str):
    limit = CONFIG[str(num)]["limit_s"]
    t0 = time.perf_counter()
    state = {"ok": False}
    try:
        yield state
        state["ok"] = True
    finally:
        dt = time.perf_counter() - t0
        ok = state["ok"] and dt < limit
        line = f"criterion {num}: {'PASS' if ok else 'FAIL'}  {what}  ({dt:.2f}s, limit {limit}s)"
        print(line)
        ACCEPTANCE_LINES.append(line)
    assert dt < limit, f"criterion {num} took {dt:.2f}s (limit {limit}s)"


@pytest.fixture(scope="module")
def corpus():
    c = CONFIG["1"]
    return pact.random_corpus(c["seed"], c["corpus"], c["max_points"], c["max_support"])


def test_criterion_1_roundtrip(corpus):
    with criterion(1, f"transformation groupoid roundtrip on {len(corpus)} random partial actions"):
        assert len(corpus) >= 200
        for spec in corpus:
            assert len(spec.points) <= 6 and len(spec.support) <= 9
            tg = pact.build_transformation_groupoid(spec)
            back = pact.cocycle_to_partial_action(tg.cocycle)
            assert back.spec == spec
            assert all(pact.preimage_bisections(tg.cocycle).values())


def test_criterion_2_delta_bound(corpus):
    rng = np.random.default_rng(CONFIG["1"]["seed"])
    k = CONFIG["2"]["random_subsets"]
    audits = 0
    with criterion(2, "fibre count <= 2|pr(C)| for canonical H"):
        for spec in corpus:
            tg = pact.build_transformation_groupoid(spec)
            G, c = tg.groupoid, tg.cocycle
            H = pact.DeltaCheck.verify(G, *pact.canonical_delta_h(tg))
            fibres: dict = {}
            for g, v in enumerate(c.values):
                fibres.setdefault(v, []).append(g)
            pieces = [list(range(G.n))] + list(fibres.values()) + [[g] for g in range(G.n)]
            vals = list(fibres.values())
            pieces += [vals[i] + vals[j] for i in range(len(vals)) for j in range(i + 1, len(vals))]
            pieces += [np.nonzero(rng.random(G.n) < 0.5)[0].tolist() for _ in range(k)]
            for C in pieces:
                aud = H.audit(G.units.tolist(), C, cocycle=c)
                assert max(aud.left_fib, aud.right_fib) <= aud.bound
                audits += 1
    assert audits > len(corpus)


def test_criterion_3_witness_growth():
    c = CONFIG["3"]
    with criterion(3, "F2 chain witness bounds 1, 5, 17, 53 with replay"):
        F = free_abelianized_chain(c["chain_depth"])
        S = [F.base.gen(0), F.base.gen(1)]
        got = []
        for l in c["radii"]:
            cert = hls.delta_violation_witness(F, S, l, c["level"])
            assert hls.replay_delta_witness(F, cert) == []
            got.append(cert.lower_bound)
        assert got == c["bounds"] == [2 * 3**l - 1 for l in c["radii"]]


def test_criterion_4_equicontinuity():
    c = CONFIG["4"]
    count = 0
    with criterion(4, "equicontinuity on Z and elementary chains, every level cover, radius <= 4"):
        for chain in (cyclic_two_power_chain(c["z_depth"]), elementary_two_chain(c["elementary_depth"])):
            N = chain.depth
            S = [chain.base.gen(i) for i in range(chain.base.ngens)]
            for h in sorted({0, 1, chain.group(N).n - 1}):
                x0 = hls.compatible_point(chain, N, h)
                for k in range(N + 1):
                    for radius in range(c["max_radius"] + 1):
                        cert = hls.equicontinuity_certificate(chain, N, S, radius, x0, hls.level_cover(chain, k))
                        assert cert.ok, cert.failure
                        assert cert.V and all(t["checked"] == len(cert.V) for t in cert.trace)
                        count += 1
    assert count > 0


def test_criterion_5_isomorphism():
    c = CONFIG["5"]
    with criterion(5, "HLS truncation vs trivial partial action at N = 2"):
        left, right, res = hls.hls_vs_partial_action_iso(elementary_two_chain(c["N"]), c["N"])
        assert left.groupoid.n == right.groupoid.n == c["arrows"]
        assert res.status == "isomorphic"


def test_criterion_6_kgraph_cocycle():
    L = CONFIG["6"]["L"]
    with criterion(6, f"k-graph cocycle on O2, O3, binary, commuting square at L = {L}"):
        for G in (dr.o_graph(2), dr.o_graph(3), dr.binary_graph(), dr.fix6()):
            chk = dr.cocycle_table_check(dr.DrTruncation(G, L))
            assert chk.homomorphism == "ok" and chk.degree_ok
            assert dr.purity_check_kgraph(G, L).verdict in ("pure", "pure-up-to-L")
            prop = dr.local_properness_certificate(G, L)
            assert prop.ok and prop.failure is None


def test_criterion_7_coarse():
    c = CONFIG["7"]
    rng = np.random.default_rng(c["seed"])
    with criterion(7, "coarse map <-> cocycle roundtrip and properness profiles"):
        for G in (Z, F2):
            for _ in range(c["maps_per_group"]):
                n = int(rng.integers(1, c["max_window"] + 1))
                pairs = frozenset((int(x), int(y)) for x, y in rng.integers(n, size=(n, 2)))
                space = coarse.CoarseSpace(tuple(range(n)), [pairs])
                f = coarse.random_injection(rng, n, G)
                assert coarse.roundtrip(f, space, G, int(rng.integers(n)))
        windows = c["windows"]
        zp = coarse.properness_profile(coarse.z_cocycle, Z, windows, [z_elem(1)])
        assert zp.sizes["t"] == windows
        for N in windows:
            counts: dict = {}
            for n in range(N + 1):
                for m in range(N + 1):
                    if n != m:
                        g = coarse.f2_cocycle(n, m)
                        counts[g] = counts.get(g, 0) + 1
            assert max(counts.values()) <= 1


def test_criterion_8_refuter():
    with criterion(8, "greedy refuter gives m distinct labels on 2m points"):
        for m in CONFIG["8"]["m"]:
            f = [z_elem(i) for i in range(1, 2 * m + 1)]
            cert = coarse.maximal_refuter(f, Z)
            assert len(cert.pairs) == m and len(set(cert.labels)) == m
            assert coarse.replay_refuter(f, Z, cert) == []


def test_criterion_9_k0():
    c = CONFIG["9"]
    stats = {"graphs": 0, "finite": 0, "infinite": 0}
    with criterion(9, "K0 oracle, neg witness and closure over small graphs"):
        for n in c["n"]:
            K = kzero.snf_oracle(dr.o_graph(n))
            assert K.order() == n - 1
            cls = K.class_of_vector([1])
            assert cls == ((1,) if n > 2 else ())
        O3 = dr.o_graph(3)
        K3 = kzero.snf_oracle(O3)
        res, step = kzero.neg_witness(O3, (O3.vertex("v"),))
        assert kzero.fmt_open(O3, res) == "Z(e3)" and kzero.replay_step(O3, step) == []
        assert K3.class_of_vector(kzero.class_vector(O3, res)) == K3.neg((1,)) == (1,)
        for A in kzero.small_graph_matrices(c["max_vertices"], c["max_in"]):
            G = kzero.graph_from_matrix(A)
            if not kzero.independent_loops_check(G).ok:
                continue
            stats["graphs"] += 1
            K = kzero.snf_oracle(G)
            rep = kzero.closure_from_vertices(G, K)
            assert rep.equal, A.tolist()
            stats["finite" if K.is_finite else "infinite"] += 1
    assert stats["graphs"] == stats["finite"] + stats["infinite"] > 4000


def test_criterion_10_positive_type():
    c = CONFIG["10"]
    rng = np.random.default_rng(c["seed"])
    tol = c["tolerance"]
    with criterion(10, "Gram-built functions are positive; pullback keeps positivity"):
        spaces = [gpd.pair_groupoid(3), hls.build_afs(cyclic_two_power_chain(2), 2).groupoid,
                  pact.build_transformation_groupoid(pact.fix7()).groupoid]
        for G in spaces:
            for _ in range(c["functions_per_groupoid"]):
                assert gpd.positive_type_check(gpd.random_positive_type(G, rng), tol).positive
        for M in (1, 2):
            for n in range(M + 1):
                fib, _, P, h = hls.afs_fibre_projection(cyclic_two_power_chain(M), M, n)
                for _ in range(c["functions_per_groupoid"]):
                    phi = gpd.random_positive_type(P, rng)
                    assert gpd.positive_type_check(phi, tol).positive
                    assert gpd.positive_type_check(gpd.pullback_positive_type(phi, fib, h), tol).positive
