"""Partial actions on finite sets, transformation groupoids, pure cocycles.

A :class:`PartialActionSpec` stores, for each group element ``gamma`` in a
finite support, the domain ``D_{gamma^-1}`` (points where ``gamma`` acts) and
the bijection ``theta_gamma: D_{gamma^-1} -> D_gamma``.  Points are indices
``0..m-1`` into ``spec.points``; group elements are canonical forms of
``spec.group`` (see :mod:`ample.grp`).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import gpd
from .grp import FiniteGroup, FreeGroup, GroupHandle


class PartialActionError(ValueError):
    def __init__(self, axiom: str, witness: dict, message: str, suggestion=None):
        super().__init__(message)
        self.axiom = axiom
        self.witness = witness
        self.suggestion = suggestion


@dataclass(frozen=True)
class PartialActionSpec:
    group: GroupHandle = field(compare=False)
    points: tuple
    # gamma -> ((x, theta_gamma(x)), ...) sorted by x
    maps: tuple

    @classmethod
    def build(cls, group: GroupHandle, points, entries: dict) -> "PartialActionSpec":
        """``entries`` maps canonical ``gamma`` to ``{x: theta_gamma(x)}``; empty entries are dropped."""
        e = group.identity()
        norm = {}
        for g, m in entries.items():
            if m or g == e:
                norm[g] = tuple(sorted((int(x), int(y)) for x, y in dict(m).items()))
        if e not in norm:
            norm[e] = ()
        order = group.sorted(norm)
        return cls(group, tuple(points), tuple((g, norm[g]) for g in order))

    @property
    def table(self) -> dict:
        return {g: dict(m) for g, m in self.maps}

    @property
    def support(self) -> list:
        return [g for g, _ in self.maps]

    def domain(self, g) -> tuple:
        """``D_{g^-1}``."""
        return tuple(x for x, _ in self.table.get(g, {}).items())

    def theta(self, g, x) -> int:
        return self.table[g][x]

    def to_json(self) -> dict:
        G = self.group
        return {
            "points": list(self.points),
            "support": [
                {"gamma": G.format(g), "domain": [self.points[x] for x, _ in m],
                 "map": [self.points[y] for _, y in m]}
                for g, m in self.maps
            ],
        }


def _first_violation(group: GroupHandle, npts: int, table: dict):
    """Return ``(axiom, witness, message)`` for the first failure, else ``None``."""
    e = group.identity()
    ident = table.get(e)
    if ident is None or sorted(ident) != list(range(npts)) or any(ident[x] != x for x in ident):
        return ("axiom1", {"gamma": e}, "identity must act as the identity on all of X")
    order = group.sorted(table)
    for g in order:
        m = table[g]
        for x, y in m.items():
            if not (0 <= x < npts and 0 <= y < npts):
                return ("points", {"gamma": g, "x": x}, f"point out of range in entry {group.format(g)}")
        if len(set(m.values())) != len(m):
            return ("bijective", {"gamma": g}, f"theta_{group.format(g)} is not injective")
    for g in order:
        gi = group.inv(g)
        inv_map = {y: x for x, y in table[g].items()}
        other = table.get(gi, {})
        if other != inv_map:
            bad = min(set(inv_map) ^ set(other) or {x for x in inv_map if inv_map[x] != other.get(x)})
            return ("inverse", {"gamma": g, "x": bad},
                    f"theta_{group.format(gi)} is not the inverse of theta_{group.format(g)}")
    for g in order:
        for h in order:
            hg = group.mul(h, g)
            target = table.get(hg, {})
            for x, gx in table[g].items():
                if gx not in table[h]:
                    continue
                if x not in target:
                    return ("axiom2", {"gamma": g, "eta": h, "x": x},
                            f"x={x} lies in theta_gamma^-1(D_gamma ∩ D_eta^-1) but not in D_(eta gamma)^-1 "
                            f"for gamma={group.format(g)}, eta={group.format(h)}")
                if target[x] != table[h][gx]:
                    return ("axiom3", {"gamma": g, "eta": h, "x": x},
                            f"theta_(eta gamma)(x) != theta_eta(theta_gamma(x)) for gamma={group.format(g)}, "
                            f"eta={group.format(h)}, x={x}")
    return None


def complete_support(group: GroupHandle, npts: int, table: dict, max_support: int = 10_000) -> dict:
    """Add every forced entry (inverses and axiom-(2) products) until stable.

    Raises :class:`PartialActionError` on a conflicting forced value or when
    the support grows past ``max_support``.
    """
    out = {g: dict(m) for g, m in table.items()}
    out.setdefault(group.identity(), {})
    for x in range(npts):
        out[group.identity()].setdefault(x, x)
    changed = True
    while changed:
        changed = False
        for g in list(out):
            gi = group.inv(g)
            for x, y in list(out[g].items()):
                cur = out.setdefault(gi, {})
                if cur.get(y, x) != x:
                    raise PartialActionError("inverse", {"gamma": g, "x": x}, "conflicting inverse entry")
                if y not in cur:
                    cur[y] = x
                    changed = True
        for g, h in itertools.product(list(out), repeat=2):
            hg = group.mul(h, g)
            for x, gx in list(out[g].items()):
                if gx in out[h]:
                    val = out[h][gx]
                    cur = out.setdefault(hg, {})
                    if cur.get(x, val) != val:
                        raise PartialActionError("axiom3", {"gamma": g, "eta": h, "x": x},
                                                 "forced composition conflicts with given value")
                    if x not in cur:
                        cur[x] = val
                        changed = True
        if sum(1 for m in out.values() if m) > max_support:
            raise PartialActionError("support", {}, f"forced support exceeds {max_support} elements")
    return {g: m for g, m in out.items() if m}


def validate_partial_action(spec: PartialActionSpec) -> PartialActionSpec:
    """Check axioms (1)-(3), inverse compatibility and bijectivity.

    When a failure is only a missing forced entry, the completed support is
    attached to the error as ``suggestion``.
    """
    table = spec.table
    bad = _first_violation(spec.group, len(spec.points), table)
    if bad is None:
        return spec
    axiom, witness, message = bad
    suggestion = None
    if axiom in ("axiom2", "inverse"):
        try:
            done = complete_support(spec.group, len(spec.points), table, max_support=4 * len(table) + 64)
            suggestion = PartialActionSpec.build(spec.group, spec.points, done)
        except PartialActionError:
            suggestion = None
    raise PartialActionError(axiom, witness, message, suggestion)


def parse_partial_action(doc: dict, group: GroupHandle) -> PartialActionSpec:
    """Read the ``paction`` JSON layout (points and support entries by label)."""
    points = tuple(doc["points"])
    where = {p: i for i, p in enumerate(points)}
    if len(where) != len(points):
        raise PartialActionError("points", {}, "point labels must be distinct")
    entries = {}
    for i, ent in enumerate(doc["support"]):
        g = group.parse(ent["gamma"])
        if g in entries:
            raise PartialActionError("duplicate", {"entry": i}, f"duplicate support entry {ent['gamma']!r}")
        dom, img = ent["domain"], ent["map"]
        if len(dom) != len(img):
            raise PartialActionError("bijective", {"entry": i}, "domain and map differ in length")
        try:
            entries[g] = {where[x]: where[y] for x, y in zip(dom, img)}
        except KeyError as exc:
            raise PartialActionError("points", {"entry": i}, f"unknown point {exc}") from None
        if len(entries[g]) != len(dom):
            raise PartialActionError("bijective", {"entry": i}, "repeated domain point")
    return PartialActionSpec.build(group, points, entries)


# ------------------------------------------------------------------ cocycles


@dataclass
class Cocycle:
    groupoid: gpd.FiniteGroupoid
    target: GroupHandle
    values: tuple
    unit_points: tuple | None = None   # point labels of the units, when known

    def value(self, g: int):
        return self.values[g]


def cocycle_violation(c: Cocycle):
    """``None`` if ``c`` is a homomorphism, else a witness tuple."""
    G, T = c.groupoid, c.target
    if len(c.values) != G.n:
        return ("length",)
    e = T.identity()
    for u in G.units:
        if c.values[u] != e:
            return ("unit", int(u))
    gi, hi = np.nonzero(G.comp >= 0)
    for g, h in zip(gi.tolist(), hi.tolist()):
        if c.values[G.comp[g, h]] != T.mul(c.values[g], c.values[h]):
            return ("product", g, h)
    return None


class MalformedCocycle(ValueError):
    pass


def check_pure_cocycle(c: Cocycle) -> int | None:
    """``None`` when pure, else the first non-unit arrow in the kernel."""
    bad = cocycle_violation(c)
    if bad is not None:
        raise MalformedCocycle(f"not a groupoid homomorphism: {bad}")
    e = c.target.identity()
    for g in range(c.groupoid.n):
        if c.values[g] == e and not c.groupoid.is_unit(g):
            return g
    return None


@dataclass
class TransformationGroupoid:
    spec: PartialActionSpec
    groupoid: gpd.FiniteGroupoid
    cocycle: Cocycle

    def arrow(self, g, x) -> int:
        return self.groupoid.index((g, x))


def build_transformation_groupoid(spec: PartialActionSpec) -> TransformationGroupoid:
    """``Γ ⋉ X`` with arrows ``(gamma, x)``, ``x`` in ``D_{gamma^-1}``, and ``c(gamma, x) = gamma``."""
    G = spec.group
    e = G.identity()
    table = spec.table
    keys = [(g, x) for g, m in spec.maps for x, _ in m]
    grp_ = gpd.FiniteGroupoid.from_keys(
        keys,
        source=lambda k: (e, k[1]),
        range_=lambda k: (e, table[k[0]][k[1]]),
        mul=lambda a, b: (G.mul(a[0], b[0]), b[1]),
        inverse=lambda k: (G.inv(k[0]), table[k[0]][k[1]]),
        label=lambda k: f"({G.format(k[0])},{spec.points[k[1]]})",
    )
    coc = Cocycle(grp_, G, tuple(k[0] for k in keys), unit_points=spec.points)
    if check_pure_cocycle(coc) is not None:   # cannot happen for a valid spec
        raise AssertionError("projection cocycle is not pure")
    return TransformationGroupoid(spec, grp_, coc)


@dataclass
class CocycleReadOff:
    spec: PartialActionSpec
    iso: np.ndarray            # arrow of the input groupoid -> arrow of Γ ⋉ X
    transformation: TransformationGroupoid


def cocycle_to_partial_action(c: Cocycle) -> CocycleReadOff:
    """Read off ``D_gamma = r(c^-1(gamma))`` and ``theta_gamma(s(g)) = r(g)``."""
    bad = check_pure_cocycle(c)
    if bad is not None:
        raise ValueError(f"cocycle is not pure: arrow {bad} ({c.groupoid.label(bad)}) lies in the kernel")
    G = c.groupoid
    units = G.units.tolist()
    pos = {u: i for i, u in enumerate(units)}
    points = c.unit_points if c.unit_points is not None else tuple(G.label(u) for u in units)
    fibres: dict = {}
    for g in range(G.n):
        fibres.setdefault(c.values[g], []).append(g)
    entries = {}
    for gam, arrows in fibres.items():
        if not gpd.is_bisection(G, arrows):
            raise AssertionError(f"c^-1({c.target.format(gam)}) is not a bisection although c is pure")
        entries[gam] = {pos[int(G.s[g])]: pos[int(G.r[g])] for g in arrows}
    spec = PartialActionSpec.build(c.target, points, entries)
    validate_partial_action(spec)
    tg = build_transformation_groupoid(spec)
    iso = np.array([tg.arrow(c.values[g], pos[int(G.s[g])]) for g in range(G.n)], dtype=np.int64)
    if np.unique(iso).size != G.n or tg.groupoid.n != G.n:
        raise AssertionError("read-off map is not a bijection")
    bad = gpd.check_homomorphism(G, tg.groupoid, iso)
    if bad is not None:
        raise AssertionError(f"read-off map is not a homomorphism: {bad}")
    return CocycleReadOff(spec, iso, tg)


def preimage_bisections(c: Cocycle) -> dict:
    """``gamma -> is_bisection(c^-1(gamma))`` over the values taken by ``c``."""
    fibres: dict = {}
    for g, v in enumerate(c.values):
        fibres.setdefault(v, []).append(g)
    return {v: gpd.is_bisection(c.groupoid, a) for v, a in fibres.items()}


# ---------------------------------------------------------- property Delta


def canonical_delta_h(tg: TransformationGroupoid) -> tuple[np.ndarray, np.ndarray]:
    """``{((gamma, x), (gamma, y)) : x, y in D_{gamma^-1}}`` as two id arrays."""
    by_gamma: dict = {}
    for g, v in enumerate(tg.cocycle.values):
        by_gamma.setdefault(v, []).append(g)
    a, b = [], []
    for arrows in by_gamma.values():
        for p, q in itertools.product(arrows, repeat=2):
            a.append(p)
            b.append(q)
    return np.array(a, dtype=np.int64), np.array(b, dtype=np.int64)


@dataclass
class DeltaAudit:
    h_size: int
    left_size: int
    right_size: int
    left_fib: int
    right_fib: int
    gamma_image: list | None = None
    bound: int | None = None

    @property
    def within_bound(self) -> bool:
        return self.bound is None or max(self.left_fib, self.right_fib) <= self.bound

    def to_json(self, group: GroupHandle | None = None) -> dict:
        d = {"h_size": self.h_size, "left": {"size": self.left_size, "fib": self.left_fib},
             "right": {"size": self.right_size, "fib": self.right_fib},
             "finite": True, "within_bound": self.within_bound}
        if self.bound is not None:
            d["bound"] = self.bound
            d["F"] = [group.format(g) for g in self.gamma_image] if group else len(self.gamma_image)
        return d


class DeltaError(ValueError):
    def __init__(self, reason, witness, message):
        super().__init__(message)
        self.reason = reason
        self.witness = witness


@dataclass
class DeltaCheck:
    """A pair set ``H`` already verified to be a diagonal-containing subgroupoid of ``G x G``."""

    G: gpd.FiniteGroupoid
    a: np.ndarray
    b: np.ndarray

    @classmethod
    def verify(cls, G: gpd.FiniteGroupoid, a, b) -> "DeltaCheck":
        wit = gpd.pair_subgroupoid_witness(G, a, b)
        if wit is not None:
            raise DeltaError("subgroupoid", wit, f"H is not a subgroupoid: {wit}")
        d = gpd.diagonal_witness(G, a, b)
        if d is not None:
            raise DeltaError("diagonal", (d, d), f"H misses the diagonal pair ({d}, {d})")
        return cls(G, np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64))

    def audit(self, K, C, cocycle: Cocycle | None = None) -> DeltaAudit:
        G, a, b = self.G, self.a, self.b
        _, GK = gpd.reduction(G, K)
        C = np.unique(np.asarray(list(C), dtype=np.int64))
        if C.size and not np.isin(C, GK).all():
            raise ValueError("C must lie in G(K)")
        la, lb = gpd.restrict_pairs(G, a, b, GK, C)
        ra, rb = gpd.restrict_pairs(G, a, b, C, GK)
        aud = DeltaAudit(len(set(zip(a.tolist(), b.tolist()))), la.size, ra.size,
                         gpd.pair_fib_count(G, la, lb), gpd.pair_fib_count(G, ra, rb))
        if cocycle is not None:
            F = cocycle.target.sorted({cocycle.values[g] for g in C.tolist()})
            aud.gamma_image = F
            aud.bound = 2 * len(F)
        return aud


def delta_audit(G: gpd.FiniteGroupoid, a, b, K, C, cocycle: Cocycle | None = None) -> DeltaAudit:
    """Fibre counts of ``H ∩ (G(K) x C)`` and ``H ∩ (C x G(K))`` in ``G x G``.

    With ``cocycle`` given, also report ``2 |pr(C)|`` with ``pr`` read from it.
    Auditing many ``C`` against one ``H``: verify once with :class:`DeltaCheck`.
    """
    return DeltaCheck.verify(G, a, b).audit(K, C, cocycle)


# ------------------------------------------------------------ sample data


def fix7() -> PartialActionSpec:
    """``Z`` on ``{0, 1, 2}`` generated by ``theta_1 : 0 -> 1, 1 -> 2``."""
    Z = FreeGroup(1, ["a"])
    a = Z.gen(0)
    entries = {Z.identity(): {0: 0, 1: 1, 2: 2}, a: {0: 1, 1: 2}, Z.inv(a): {1: 0, 2: 1},
               Z.power(a, 2): {0: 2}, Z.power(a, -2): {2: 0}}
    return PartialActionSpec.build(Z, (0, 1, 2), entries)


def fix7_broken() -> PartialActionSpec:
    Z = FreeGroup(1, ["a"])
    a = Z.gen(0)
    entries = {Z.identity(): {0: 0, 1: 1, 2: 2}, a: {0: 1, 1: 2}, Z.inv(a): {1: 0, 2: 1}}
    return PartialActionSpec.build(Z, (0, 1, 2), entries)


def trivial_partial_action(group: GroupHandle, points) -> PartialActionSpec:
    return PartialActionSpec.build(group, tuple(points), {group.identity(): {x: x for x in range(len(points))}})


def restricted_global_action(group: FiniteGroup, act, npts: int, subset) -> PartialActionSpec:
    """Restrict ``act(g, x)`` on ``range(npts)`` to ``subset`` (relabelled ``0..``)."""
    subset = sorted(subset)
    pos = {x: i for i, x in enumerate(subset)}
    entries = {}
    for g in range(group.n):
        m = {pos[x]: pos[act(g, x)] for x in subset if act(g, x) in pos}
        entries[g] = m
    return PartialActionSpec.build(group, tuple(subset), entries)


def forest_partial_action(rank: int, npts: int, edges) -> PartialActionSpec:
    """Free-group partial action read from a labelled forest.

    ``edges`` lists ``(i, x, y)``: generator ``i`` sends ``x`` to ``y``.  The
    underlying undirected multigraph must be a forest so every reduced word
    labels at most one path from a given point.
    """
    F = FreeGroup(rank)
    adj = {x: [] for x in range(npts)}
    for i, x, y in edges:
        adj[x].append((F.gen(i), y))
        adj[y].append((F.gen(i, -1), x))
    entries: dict = {}
    for start in range(npts):
        stack = [(F.identity(), start, None)]
        while stack:
            w, x, came = stack.pop()
            entries.setdefault(w, {})[start] = x
            for g, y in adj[x]:
                if came is not None and g == F.inv(came):
                    continue
                stack.append((F.mul(g, w), y, g))
    return PartialActionSpec.build(F, tuple(range(npts)), entries)


def _symmetric_group3() -> tuple[FiniteGroup, list]:
    perms = list(itertools.permutations(range(3)))
    index = {p: i for i, p in enumerate(perms)}
    table = [[index[tuple(p[q[x]] for x in range(3))] for q in perms] for p in perms]
    return FiniteGroup(table, gens=[index[(1, 0, 2)], index[(1, 2, 0)]], labels=["s", "t"]), perms


def random_partial_action(rng: np.random.Generator, max_points: int = 6, max_support: int = 9):
    """One random valid spec; returns ``None`` when the draw exceeds the size filter."""
    kind = rng.integers(3)
    if kind == 0:
        n = int(rng.integers(1, 7))
        G = FiniteGroup.cyclic(n)
        sub = [x for x in range(n) if rng.random() < 0.7] or [0]
        spec = restricted_global_action(G, lambda g, x: (g + x) % n, n, sub)
    elif kind == 1:
        G, perms = _symmetric_group3()
        if rng.random() < 0.5:
            sub = [x for x in range(3) if rng.random() < 0.7] or [0]
            spec = restricted_global_action(G, lambda g, x: perms[g][x], 3, sub)
        else:
            sub = [x for x in range(6) if rng.random() < 0.6] or [0]
            spec = restricted_global_action(G, lambda g, x: int(G.table[g, x]), 6, sub)
    else:
        rank = int(rng.integers(1, 3))
        npts = int(rng.integers(1, max_points + 1))
        parent = list(range(npts))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        edges, out_used, in_used = [], set(), set()
        for _ in range(int(rng.integers(0, npts + 1))):
            i = int(rng.integers(rank))
            x, y = (int(v) for v in rng.integers(npts, size=2))
            if (i, x) in out_used or (i, y) in in_used or find(x) == find(y):
                continue
            parent[find(x)] = find(y)
            out_used.add((i, x))
            in_used.add((i, y))
            edges.append((i, x, y))
        spec = forest_partial_action(rank, npts, edges)
    if len(spec.points) > max_points or len(spec.maps) > max_support:
        return None
    return spec


def random_corpus(seed: int, count: int, max_points: int = 6, max_support: int = 9) -> list:
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        spec = random_partial_action(rng, max_points, max_support)
        if spec is not None:
            out.append(spec)
    return out
