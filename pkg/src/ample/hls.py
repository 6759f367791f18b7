"""Finite truncations of HLS and AFS groupoids of an approximated group.

The truncation at depth ``N`` keeps the levels ``0..N``.  The level at
infinity is never tabulated together with the finite levels, except through
an optional top layer ``⊤`` when the base group itself is finite (as for the
truncated ``⊕ Z/2`` chain).  Certificates that need points at infinity use
canonical base-group elements for them.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import gpd
from .grp import AbelianGroup, ChainError, QuotientChain, ball_with_factorizations

TOP = "⊤"


def _level_ok(chain: QuotientChain, N: int):
    if N < 0 or N > chain.depth:
        raise ChainError(f"depth {N} exceeds chain depth {chain.depth}")


@dataclass
class HlsTruncation:
    chain: QuotientChain
    N: int
    groupoid: gpd.FiniteGroupoid
    level: np.ndarray
    top: bool = False

    def arrow(self, k, g) -> int:
        return self.groupoid.index((k, g))


def build_hls(chain: QuotientChain, N: int, *, top: bool = False) -> HlsTruncation:
    """Group bundle ``⨿_{k<=N} {k} x Γ_k``; ``top=True`` appends ``{⊤} x Γ_N``."""
    _level_ok(chain, N)
    keys = []
    for k in range(N + 1):
        G = chain.group(k)
        keys += [(k, G.e)] + [(k, g) for g in range(G.n) if g != G.e]
    top_group = chain.group(N)
    if top:
        keys += [(TOP, top_group.e)] + [(TOP, g) for g in range(top_group.n) if g != top_group.e]

    def grp_of(k):
        return top_group if k == TOP else chain.group(k)

    G = gpd.FiniteGroupoid.from_keys(
        keys,
        source=lambda a: (a[0], grp_of(a[0]).e),
        range_=lambda a: (a[0], grp_of(a[0]).e),
        mul=lambda a, b: (a[0], grp_of(a[0]).mul(a[1], b[1])),
        inverse=lambda a: (a[0], grp_of(a[0]).inv(a[1])),
        label=lambda a: f"({a[0]},{grp_of(a[0]).format(a[1])})",
    )
    level = np.array([N + 1 if k == TOP else k for k, _ in keys], dtype=np.int64)
    return HlsTruncation(chain, N, G, level, top)


@dataclass
class AfsTruncation:
    chain: QuotientChain
    N: int
    groupoid: gpd.FiniteGroupoid
    level: np.ndarray

    def arrow(self, k, g, x) -> int:
        return self.groupoid.index((k, g, x))


def build_afs(chain: QuotientChain, N: int, levels=None) -> AfsTruncation:
    """``⨿_{k<=N} Γ_k ⋉ Γ_k`` (left multiplication); arrows ``(k, g, x)`` run ``x -> g x``."""
    _level_ok(chain, N)
    levels = range(N + 1) if levels is None else levels
    keys = []
    for k in levels:
        G = chain.group(k)
        for g in [G.e] + [g for g in range(G.n) if g != G.e]:
            keys += [(k, g, x) for x in range(G.n)]
    grp = chain.group
    G = gpd.FiniteGroupoid.from_keys(
        keys,
        source=lambda a: (a[0], grp(a[0]).e, a[2]),
        range_=lambda a: (a[0], grp(a[0]).e, grp(a[0]).mul(a[1], a[2])),
        mul=lambda a, b: (a[0], grp(a[0]).mul(a[1], b[1]), b[2]),
        inverse=lambda a: (a[0], grp(a[0]).inv(a[1]), grp(a[0]).mul(a[1], a[2])),
        label=lambda a: f"({a[0]},{grp(a[0]).format(a[1])},{grp(a[0]).format(a[2])})",
    )
    level = np.array([k for k, _, _ in keys], dtype=np.int64)
    return AfsTruncation(chain, N, G, level)


def fibers_are_groups(t: HlsTruncation) -> bool:
    G = t.groupoid
    return bool(np.all(G.s == G.r)) and G.units.size == len(set(t.level.tolist()))


def is_principal(G: gpd.FiniteGroupoid) -> bool:
    """Isotropy is trivial: ``s(g) == r(g)`` only for units."""
    loops = np.nonzero(G.s == G.r)[0]
    return bool(np.all(G.s[loops] == loops))


# ------------------------------------------------------------------ shadows


def shadow(chain: QuotientChain, k: int, g: int, N: int) -> list[tuple[int, int]]:
    """``{(n, h) : k <= n <= N, pi_{k,n}(h) = g}``, sorted."""
    _level_ok(chain, N)
    if not 0 <= k <= N:
        raise ChainError(f"shadow level {k} outside 0..{N}")
    if not 0 <= g < chain.group(k).n:
        raise ChainError(f"element {g} not in Γ_{k}")
    return [(n, int(h)) for n in range(k, N + 1) for h in np.nonzero(chain.factor_array(k, n) == g)[0]]


def level_cover(chain: QuotientChain, k: int) -> list[tuple[int, int]]:
    """All level-``k`` shadows, as ``(k, g)`` pairs."""
    return [(k, g) for g in range(chain.group(k).n)]


@dataclass
class EquicontinuityCertificate:
    ok: bool
    x0: tuple
    cover: list
    k: int
    V: list
    trace: list = field(default_factory=list)
    failure: dict | None = None

    def to_json(self) -> dict:
        return {"ok": self.ok, "x0": list(self.x0), "cover": [list(c) for c in self.cover], "k": self.k,
                "V": [list(v) for v in self.V], "trace": self.trace, "failure": self.failure}


def compatible_point(chain: QuotientChain, N: int, h: int) -> tuple:
    """The sequence ``(pi_{k,N}(h))_{k<=N}``: a point at infinity seen through level ``N``."""
    return tuple(chain.factor(k, N, h) for k in range(N + 1))


def equicontinuity_certificate(chain: QuotientChain, N: int, S, radius: int, x0: tuple,
                               cover) -> EquicontinuityCertificate:
    """Check ``γ({x0} x V) ⊆ U`` for every ``γ`` in the ball ``B_S(radius)``.

    ``x0`` is a compatible sequence ``(x_0, ..., x_N)`` standing for a point at
    infinity.  ``cover`` lists shadows ``(k_i, g_i)``; ``U`` is the finite-level
    diagonal together with the squares ``Sh(g_i)^2``.  ``V`` is the shadow of
    ``x0`` at ``k = max k_i``.  Points at infinity in ``V`` agree with their
    level-``N`` images on every shadow test, so the finite points of ``V``
    decide the check.
    """
    chain.check_coherence()
    _level_ok(chain, N)
    x0 = tuple(int(v) for v in x0)
    if len(x0) != N + 1 or any(chain.factor(k, k + 1, x0[k + 1]) != x0[k] for k in range(N)):
        raise ChainError("x0 is not a compatible sequence of length N + 1")
    cover = [(int(k), int(g)) for k, g in cover]
    if not cover:
        raise ValueError("empty cover")
    covered = np.zeros(chain.group(N).n, dtype=bool)
    for kk, g in cover:
        covered |= chain.factor_array(kk, N) == g
    if not covered.all():
        raise ValueError(f"cover misses the points at infinity above ({N}, {int(np.argmin(covered))})")
    k = max(kk for kk, _ in cover)
    V = shadow(chain, k, x0[k], N)
    base = chain.base
    cert = EquicontinuityCertificate(True, x0, cover, k, V)
    # V grouped by level, as id arrays, for a vectorised membership test
    v_levels = {}
    for n, h in V:
        v_levels.setdefault(n, []).append(h)
    v_levels = {n: np.asarray(hs, dtype=np.int64) for n, hs in v_levels.items()}
    for gam in ball_with_factorizations(base, S, radius):
        img = [chain.image(n, gam) for n in range(N + 1)]
        moved = tuple(chain.group(n).mul(img[n], x0[n]) for n in range(N + 1))
        hit = next((i for i, (ki, gi) in enumerate(cover) if moved[ki] == gi), None)
        if hit is None:
            cert.ok = False
            cert.failure = {"gamma": base.format(gam), "reason": "γ x0 outside every cover shadow"}
            return cert
        ki, gi = cover[hit]
        for n, hs in v_levels.items():
            landed = chain.factor_array(ki, n)[chain.group(n).table[img[n], hs]]
            bad = np.nonzero(landed != gi)[0]
            if bad.size:
                cert.ok = False
                cert.failure = {"gamma": base.format(gam), "point": [n, int(hs[bad[0]])], "shadow": [ki, gi]}
                return cert
        cert.trace.append({"gamma": base.format(gam), "shadow": hit, "checked": len(V)})
    return cert


# ------------------------------------------------------ Delta violation


@dataclass
class DeltaViolationCertificate:
    chain_name: str
    S: list
    radius: int
    n: int
    pairs: list            # (gamma, ((n, pi_n gamma, y_n), (∞, gamma, y0)))
    steps: dict            # gamma -> list of generator steps
    lower_bound: int
    scope: str = ("forcing data any open diagonal-containing subgroupoid must absorb; "
                  "a lower bound on the fibre count at the unit pair ((n, y_n), (∞, y0)), "
                  "not a statement about every subgroupoid")

    def to_json(self, chain: QuotientChain) -> dict:
        base, Gn = chain.base, chain.group(self.n)
        out = []
        for gam, ((n, g, y), (_, _, y0)) in self.pairs:
            out.append({
                "gamma": base.format(gam),
                "finite": [n, Gn.format(g), Gn.format(y)],
                "infinite": ["∞", base.format(gam), base.format(y0)],
                "steps": [[Gn.format(a), Gn.format(x), base.format(s), base.format(w)]
                          for a, x, s, w in self.steps[gam]],
            })
        return {"chain": self.chain_name, "S": [base.format(s) for s in self.S], "l": self.radius,
                "n": self.n, "lower_bound": self.lower_bound, "pairs": out, "scope": self.scope,
                "source_unit": [[self.n, Gn.format(Gn.e)], ["∞", base.format(base.identity())]]}


def delta_violation_witness(chain: QuotientChain, S, radius: int, n: int) -> DeltaViolationCertificate:
    """Forced pairs ``((n, π_n γ, y_n), (∞, γ, y0))`` for ``γ`` in ``B_S(radius)``.

    ``y0`` is the identity point at infinity and ``y_n`` its level-``n``
    image.  Each pair comes with its generator steps
    ``((n, π_n γ_j, π_n(γ_{j+1}...) y_n), (∞, γ_j, γ_{j+1}... y0))``.
    """
    _level_ok(chain, n)
    base, Gn = chain.base, chain.group(n)
    ball = ball_with_factorizations(base, S, radius)
    y0, yn = base.identity(), Gn.e
    pairs, steps = [], {}
    for gam, word in ball.items():
        chain_steps = []
        for j in range(len(word)):
            tail = base.prod(*word[j + 1:])
            chain_steps.append((chain.image(n, word[j]), Gn.mul(chain.image(n, tail), yn), word[j], tail))
        steps[gam] = chain_steps
        pairs.append((gam, ((n, chain.image(n, gam), yn), ("∞", gam, y0))))
    sym = sorted({s.element if hasattr(s, "element") else s for s in S}, key=base.key)
    return DeltaViolationCertificate(chain.name, sym, radius, n, pairs, steps, len(ball))


def replay_delta_witness(chain: QuotientChain, cert: DeltaViolationCertificate) -> list:
    """Recompose every pair from its steps; return the list of failures (empty when sound)."""
    base, Gn = chain.base, chain.group(cert.n)
    fib = build_afs(chain, cert.n, levels=[cert.n]).groupoid
    unit_fin = fib.index((cert.n, Gn.e, Gn.e))
    bad = []
    seen = set()
    for gam, ((n, g, y), (_, gam_inf, y0)) in cert.pairs:
        fin = unit_fin
        inf = (base.identity(), base.identity())   # (value, source) with source y0 = 1
        for a, x, s, tail in reversed(cert.steps[gam]):
            step = fib.index((cert.n, a, x))
            if fib.r[fin] != fib.s[step]:
                bad.append((base.format(gam), "finite steps not composable"))
                break
            fin = int(fib.comp[step, fin])
            # ∞ side: (∞, s, tail y0) composed after (∞, value, y0) needs tail == value
            if tail != inf[0]:
                bad.append((base.format(gam), "infinite steps not composable"))
                break
            inf = (base.mul(s, inf[0]), inf[1])
        else:
            if fin != fib.index((cert.n, g, y)) or inf[0] != gam_inf or y != Gn.e or y0 != base.identity():
                bad.append((base.format(gam), "product differs from the listed pair"))
            if int(fib.s[fin]) != unit_fin:
                bad.append((base.format(gam), "source unit differs"))
        seen.add(gam_inf)
    if len(seen) != cert.lower_bound:
        bad.append(("*", "distinct ∞ components differ from the bound"))
    return bad


# ------------------------------------------------- locally finite Delta-bar


@dataclass
class DeltaBarReport:
    a: np.ndarray
    b: np.ndarray
    truncation: HlsTruncation
    injective_level: dict       # n -> least m with pi_m injective on F_n (None if none <= N)
    fibre_audit: list

    def to_json(self) -> dict:
        return {"h_size": int(self.a.size), "injective_level": {str(k): v for k, v in self.injective_level.items()},
                "fibres": self.fibre_audit, "subgroupoid": True, "diagonal": True, "finite": True}


class DeltaBarError(ValueError):
    def __init__(self, message, n=None, witness=None):
        super().__init__(message)
        self.n = n
        self.witness = witness


def locally_finite_delta_bar(chain: QuotientChain, F: list, N: int) -> DeltaBarReport:
    """``H`` built from an increasing family of finite subgroups ``F_0 ⊆ F_1 ⊆ ...``.

    ``F[n]`` lists canonical base elements.  The truncation carries the top
    layer ``⊤`` with the whole (finite) base group, playing the role of the
    level at infinity.
    """
    base = chain.base
    if not (isinstance(base, AbelianGroup) and base.is_finite):
        raise ChainError("this construction needs a finite (locally finite, truncated) base group")
    _level_ok(chain, N)
    if len(F) < N + 1:
        raise ValueError(f"need F_0..F_{N}")
    Fs = [set(Fn) for Fn in F[: N + 1]]
    for n, Fn in enumerate(Fs):
        if base.identity() not in Fn or any(base.inv(x) not in Fn for x in Fn) \
                or any(base.mul(x, y) not in Fn for x in Fn for y in Fn):
            raise DeltaBarError(f"F_{n} is not a subgroup", n)
        if n and not Fs[n - 1] <= Fn:
            raise DeltaBarError(f"F_{n - 1} is not contained in F_{n}", n)
    for n, Fn in enumerate(Fs):
        img = {chain.image(n, x) for x in Fn}
        missing = sorted(set(range(chain.group(n).n)) - img)
        if missing:
            g = missing[0]
            raise DeltaBarError(f"π_{n}(F_{n}) misses ({n},{chain.group(n).format(g)}); the diagonal is not covered",
                                n, (n, g))
    elems = base.elements()
    if not Fs[N] >= set(elems):
        raise DeltaBarError("F_N must exhaust the truncated base group", N)
    t = _hls_with_base_top(chain, N)
    G = t.groupoid

    def proj(k, x):
        return (k, x) if k == TOP else (k, chain.image(k, x))

    pairs = set()
    for n, Fn in enumerate(Fs):
        lev = list(range(n, N + 1)) + [TOP]
        for x in Fn:
            ids = [G.index(proj(k, x)) for k in lev]
            pairs.update(itertools.product(ids, ids))
    a = np.array(sorted(pairs), dtype=np.int64).reshape(-1, 2)
    a, b = a[:, 0].copy(), a[:, 1].copy()
    wit = gpd.pair_subgroupoid_witness(G, a, b)
    if wit is not None:
        raise DeltaBarError(f"H is not a subgroupoid: {wit}", witness=wit)
    d = gpd.diagonal_witness(G, a, b)
    if d is not None:
        raise DeltaBarError(f"H misses the diagonal at {G.label(d)}", witness=(d, d))
    inj = {}
    for n, Fn in enumerate(Fs):
        inj[n] = next((m for m in range(n, N + 1) if chain.injective_on(m, Fn) is None), None)
    audit = []
    for k in list(range(N + 1)) + [TOP]:
        C = np.nonzero(t.level == (N + 1 if k == TOP else k))[0]
        la, lb = gpd.restrict_pairs(G, a, b, C, np.arange(G.n))
        ra, rb = gpd.restrict_pairs(G, a, b, np.arange(G.n), C)
        audit.append({"C": f"fibre {k}", "left": int(la.size), "right": int(ra.size),
                      "left_fib": gpd.pair_fib_count(G, la, lb), "right_fib": gpd.pair_fib_count(G, ra, rb)})
    return DeltaBarReport(a, b, t, inj, audit)


def _hls_with_base_top(chain: QuotientChain, N: int) -> HlsTruncation:
    base = chain.base
    elems = sorted(base.elements(), key=base.key)
    keys = []
    for k in range(N + 1):
        Gk = chain.group(k)
        keys += [(k, Gk.e)] + [(k, g) for g in range(Gk.n) if g != Gk.e]
    keys += [(TOP, x) for x in elems]

    def mul(a, b):
        if a[0] == TOP:
            return (TOP, base.mul(a[1], b[1]))
        return (a[0], chain.group(a[0]).mul(a[1], b[1]))

    def inv(a):
        return (TOP, base.inv(a[1])) if a[0] == TOP else (a[0], chain.group(a[0]).inv(a[1]))

    def unit(a):
        return (TOP, base.identity()) if a[0] == TOP else (a[0], chain.group(a[0]).e)

    def label(a):
        return f"({TOP},{base.format(a[1])})" if a[0] == TOP else f"({a[0]},{chain.group(a[0]).format(a[1])})"

    G = gpd.FiniteGroupoid.from_keys(keys, unit, unit, mul, inv, label=label)
    level = np.array([N + 1 if k == TOP else k for k, _ in keys], dtype=np.int64)
    return HlsTruncation(chain, N, G, level, True)


def span_family(chain: QuotientChain, N: int) -> list:
    """``F_n = span(e_0, ..., e_{n-1})`` inside a finite elementary abelian base."""
    base = chain.base
    out = []
    for n in range(N + 1):
        gens = [base.gen(i) for i in range(min(n, base.ngens))]
        span = {base.identity()}
        for g in gens:
            span |= {base.mul(x, g) for x in span}
        out.append(sorted(span, key=base.key))
    return out


# ---------------------------------------------------- isomorphism search


@dataclass
class IsoResult:
    status: str                 # "isomorphic" | "not-isomorphic" | "exhausted"
    mapping: list | None = None
    reason: str = ""
    nodes: int = 0

    def to_json(self, G=None, H=None) -> dict:
        d = {"status": self.status, "reason": self.reason, "nodes": self.nodes}
        if self.mapping is not None:
            d["mapping"] = ([[G.label(i), H.label(j)] for i, j in enumerate(self.mapping)]
                            if G is not None else self.mapping)
        return d


def _loop_order(G: gpd.FiniteGroupoid, g: int) -> int:
    if G.s[g] != G.r[g]:
        return 0
    k, x = 1, g
    while x != G.s[g]:
        x = int(G.comp[x, g])
        k += 1
    return k


def _signature(G: gpd.FiniteGroupoid, g: int) -> tuple:
    s, r = int(G.s[g]), int(G.r[g])
    iso_s = int(np.sum((G.s == s) & (G.r == s)))
    return (G.is_unit(g), s == r, _loop_order(G, g), int(np.sum(G.s == s)), int(np.sum(G.r == r)), iso_s)


def find_isomorphism(G: gpd.FiniteGroupoid, H: gpd.FiniteGroupoid, budget: int = 100_000) -> IsoResult:
    """Backtracking search for an arrow bijection preserving composition."""
    if G.n != H.n:
        return IsoResult("not-isomorphic", reason=f"arrow counts differ ({G.n} vs {H.n})")
    sg = [_signature(G, g) for g in range(G.n)]
    sh = [_signature(H, h) for h in range(H.n)]
    if sorted(sg) != sorted(sh):
        diff = sorted(set(sg) ^ set(sh)) or sorted(sg)
        return IsoResult("not-isomorphic", reason=f"arrow invariants differ, e.g. {diff[0]}")
    # units, then arrows with rarest signatures first
    counts: dict = {}
    for x in sg:
        counts[x] = counts.get(x, 0) + 1
    order = sorted(range(G.n), key=lambda g: (not G.is_unit(g), counts[sg[g]], g))
    cand = {g: [h for h in range(H.n) if sh[h] == sg[g]] for g in range(G.n)}
    phi = [-1] * G.n
    used = [False] * H.n
    nodes = 0
    assigned: list[int] = []

    def consistent(g, h):
        if G.is_unit(g) != H.is_unit(h):
            return False
        for x, px in ((G.s[g], H.s[h]), (G.r[g], H.r[h]), (G.inv[g], H.inv[h])):
            if x == g and px != h or x != g and phi[x] not in (-1, px):
                return False
        for a in assigned + [g]:
            pa = h if a == g else phi[a]
            for x, y, px, py in ((g, a, h, pa), (a, g, pa, h)):
                c, d = G.comp[x, y], H.comp[px, py]
                if (c < 0) != (d < 0):
                    return False
                if c >= 0:
                    want = h if c == g else phi[c]
                    if want != -1 and want != d:
                        return False
        return True

    def rec(i):
        nonlocal nodes
        if i == len(order):
            return True
        g = order[i]
        for h in cand[g]:
            if used[h]:
                continue
            nodes += 1
            if nodes > budget:
                raise _Budget
            if not consistent(g, h):
                continue
            phi[g] = h
            used[h] = True
            assigned.append(g)
            if rec(i + 1):
                return True
            assigned.pop()
            used[h] = False
            phi[g] = -1
        return False

    try:
        found = rec(0)
    except _Budget:
        return IsoResult("exhausted", reason=f"node budget {budget} exhausted", nodes=nodes)
    if not found:
        return IsoResult("not-isomorphic", reason="search space fully enumerated", nodes=nodes)
    mapping = np.array(phi, dtype=np.int64)
    bad = gpd.check_homomorphism(G, H, mapping)
    if bad is not None or np.unique(mapping).size != G.n:
        raise AssertionError(f"search returned a non-isomorphism: {bad}")
    return IsoResult("isomorphic", mapping.tolist(), "", nodes)


class _Budget(Exception):
    pass


def elementary_partial_action(N: int):
    """``(Z/2)^N`` acting trivially on ``{0, ..., N, ∞}`` with ``D_γ = {n > max supp γ}``."""
    from .pact import PartialActionSpec

    G = AbelianGroup((2,) * N, tuple(f"e{i}" for i in range(N)))
    points = tuple(list(range(N + 1)) + ["∞"])
    entries = {}
    for v in G.elements():
        top = max((i for i, c in enumerate(v) if c), default=-1)
        entries[v] = {p: p for p in range(len(points)) if points[p] == "∞" or points[p] > top}
    return PartialActionSpec.build(G, points, entries)


def hls_vs_partial_action_iso(chain: QuotientChain, N: int, budget: int = 100_000):
    """Compare the HLS truncation (with ``⊤`` carrying ``Γ_N``) and the trivial partial action."""
    from .pact import build_transformation_groupoid, validate_partial_action

    left = build_hls(chain, N, top=True)
    spec = validate_partial_action(elementary_partial_action(N))
    right = build_transformation_groupoid(spec)
    return left, right, find_isomorphism(left.groupoid, right.groupoid, budget)


# ------------------------------------------------- positive-type pullback


def afs_fibre_projection(chain: QuotientChain, M: int, n: int):
    """``h: Γ_M ⋉ Γ_M -> AFS x AFS``, ``h(g, x) = (π̂_{n,M}(g, x), (g, x))``.

    Returns ``(fibre groupoid, AFS truncation at depth M, product groupoid, h)``.
    """
    if not 0 <= n <= M:
        raise ChainError("need 0 <= n <= M")
    afs = build_afs(chain, M)
    fib = build_afs(chain, M, levels=[M]).groupoid
    A = afs.groupoid
    P = gpd.product_groupoid(A, A)
    h = np.empty(fib.n, dtype=np.int64)
    for i, (_, g, x) in enumerate(fib.keys):
        down = A.index((n, chain.factor(n, M, g), chain.factor(n, M, x)))
        h[i] = down * A.n + A.index((M, g, x))
    return fib, afs, P, h
