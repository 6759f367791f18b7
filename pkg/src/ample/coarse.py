"""Finite coarse spaces, coarse maps into groups and their cocycles.

A finite coarse space is a point set with generating entourages.  On a
finite set the generated structure is the family of subsets of one
maximal entourage: the equivalence relation generated by the generators
and the diagonal.  Windows ``{0, ..., N}`` stand in for infinite spaces;
growth along a window family is reported as evidence, never as a verdict.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Hashable, Sequence

from . import gpd
from .grp import AbelianGroup, FreeGroup, GroupHandle
from .pact import Cocycle, check_pure_cocycle


class CoarseError(ValueError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


@dataclass
class CoarseSpace:
    points: tuple
    generators: list = field(default_factory=list)   # frozensets of (x, y) index pairs
    names: list = field(default_factory=list)

    def __post_init__(self):
        self.points = tuple(self.points)
        if len(set(self.points)) != len(self.points):
            raise CoarseError("points must be distinct")
        self.index = {p: i for i, p in enumerate(self.points)}
        self.generators = [frozenset(E) for E in self.generators]
        for E in self.generators:
            self._check_pairs(E)
        if not self.names:
            self.names = [f"E{i}" for i in range(len(self.generators))]
        self._max = None

    @classmethod
    def from_labels(cls, points: Sequence[Hashable], generators, names=None) -> "CoarseSpace":
        """Generators given as lists of point-label pairs."""
        index = {p: i for i, p in enumerate(points)}
        gens = []
        for E in generators:
            try:
                gens.append(frozenset((index[x], index[y]) for x, y in E))
            except KeyError as exc:
                raise CoarseError(f"entourage mentions a foreign point {exc.args[0]!r}", exc.args[0]) from None
        return cls(tuple(points), gens, list(names or []))

    @property
    def n(self) -> int:
        return len(self.points)

    def _check_pairs(self, E):
        for x, y in E:
            if not (0 <= x < self.n and 0 <= y < self.n):
                raise CoarseError(f"pair {(x, y)} mentions a foreign point", (x, y))

    def pairs(self, E) -> frozenset:
        """Label pairs to index pairs."""
        try:
            return frozenset((self.index[x], self.index[y]) for x, y in E)
        except KeyError as exc:
            raise CoarseError(f"entourage mentions a foreign point {exc.args[0]!r}", exc.args[0]) from None

    def diagonal(self) -> frozenset:
        return frozenset((i, i) for i in range(self.n))

    def components(self) -> list[list[int]]:
        parent = list(range(self.n))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for E in self.generators:
            for x, y in E:
                a, b = find(x), find(y)
                if a != b:
                    parent[max(a, b)] = min(a, b)
        comps: dict[int, list[int]] = {}
        for i in range(self.n):
            comps.setdefault(find(i), []).append(i)
        return sorted(comps.values())

    @property
    def connected(self) -> bool:
        return len(self.components()) <= 1

    def maximal_entourage(self) -> frozenset:
        """The largest element of the generated structure."""
        if self._max is None:
            self._max = frozenset((x, y) for c in self.components() for x in c for y in c)
        return self._max

    def member(self, E, *, labels: bool = False) -> bool:
        """Is ``E`` an entourage of the generated structure?"""
        E = self.pairs(E) if labels else frozenset(E)
        self._check_pairs(E)
        return E <= self.maximal_entourage()

    def ulf_profile(self) -> dict:
        """``sup_x |E[x]|`` for every generator (with the diagonal) and for the maximal entourage."""
        out = {name: slice_bound(self.n, E | self.diagonal()) for name, E in zip(self.names, self.generators)}
        out["max"] = slice_bound(self.n, self.maximal_entourage())
        return out

    def to_json(self) -> dict:
        return {"points": list(self.points),
                "generators": [sorted([self.points[x], self.points[y]] for x, y in E) for E in self.generators]}


def slice_bound(n: int, E) -> int:
    counts = [0] * n
    for x, _ in E:
        counts[x] += 1
    return max(counts, default=0)


def compose(E, F) -> frozenset:
    """``E ∘ F = {(x, z) : (x, y) ∈ E, (y, z) ∈ F}``."""
    by_first: dict = {}
    for y, z in F:
        by_first.setdefault(y, []).append(z)
    return frozenset((x, z) for x, y in E for z in by_first.get(y, ()))


def inverse(E) -> frozenset:
    return frozenset((y, x) for x, y in E)


def chain_window(N: int) -> CoarseSpace:
    """``{0, ..., N}`` with the symmetrised nearest-neighbour entourage."""
    E = [(i, i + 1) for i in range(N)] + [(i + 1, i) for i in range(N)]
    return CoarseSpace(tuple(range(N + 1)), [frozenset(E)], ["chain"])


def discrete_window(n: int, start: int = 0) -> CoarseSpace:
    """Points only; the structure is generated by the diagonal."""
    return CoarseSpace(tuple(range(start, start + n)), [], [])


# -------------------------------------------------------------- coarse maps


@dataclass
class MapCheck:
    labels: dict                  # generator name -> sorted list of formatted labels
    sizes: dict
    injective: bool
    collision: tuple | None = None
    over_budget: list = field(default_factory=list)


def _label_set(space, f, group, E, budget):
    out = set()
    for x, y in E | space.diagonal():
        out.add(group.mul(f[x], group.inv(f[y])))
        if budget is not None and len(out) > budget:
            return out, True
    return out, False


def collision(f, group) -> tuple | None:
    seen = {}
    for i, v in enumerate(f):
        if v in seen:
            return seen[v], i
        seen[v] = i
    return None


def coarse_map_check(f: Sequence, space: CoarseSpace, group: GroupHandle, label_budget: int | None = None) -> MapCheck:
    """Label sets ``S(E) = {f(x) f(y)^-1 : (x, y) ∈ E ∪ Δ}`` for every generator."""
    if len(f) != space.n:
        raise CoarseError(f"map has {len(f)} values for {space.n} points")
    labels, sizes, over = {}, {}, []
    for name, E in zip(space.names, space.generators):
        S, hit = _label_set(space, f, group, E, label_budget)
        labels[name] = [group.format(s) for s in group.sorted(S)]
        sizes[name] = len(S)
        if hit:
            over.append(name)
    col = collision(f, group)
    return MapCheck(labels, sizes, col is None, col, over)


def growth_profile(family, group: GroupHandle, generator: str | None = None) -> list[int]:
    """``|S(E)|`` along a window family ``[(space, f), ...]``."""
    out = []
    for space, f in family:
        name = generator or space.names[0]
        out.append(coarse_map_check(f, space, group).sizes[name])
    return out


# -------------------------------------------------------- the correspondence


def window_groupoid(space: CoarseSpace) -> gpd.FiniteGroupoid:
    """Pair groupoid on the maximal entourage; key ``(x, y)`` is the arrow ``y -> x``."""
    E = space.maximal_entourage()
    keys = [(x, x) for x in range(space.n)] + sorted(((x, y) for x, y in E if x != y), key=lambda k: (k[1], k[0]))
    pts = space.points
    return gpd.FiniteGroupoid.from_keys(keys, lambda k: (k[1], k[1]), lambda k: (k[0], k[0]),
                                        lambda a, b: (a[0], b[1]), lambda k: (k[1], k[0]),
                                        label=lambda k: f"{pts[k[1]]}->{pts[k[0]]}", validate=False)


def map_to_cocycle(f: Sequence, space: CoarseSpace, group: GroupHandle) -> Cocycle:
    """``c(x, y) = f(x) f(y)^-1`` on the window groupoid; ``f`` must be injective."""
    if len(f) != space.n:
        raise CoarseError(f"map has {len(f)} values for {space.n} points")
    col = collision(f, group)
    if col is not None:
        a, b = col
        raise CoarseError(f"map is not injective: f({space.points[a]}) = f({space.points[b]})",
                          (space.points[a], space.points[b]))
    G = window_groupoid(space)
    vals = tuple(group.mul(f[x], group.inv(f[y])) for x, y in G.keys)
    c = Cocycle(G, group, vals, unit_points=space.points)
    bad = check_pure_cocycle(c)
    if bad is not None:                       # cannot happen for injective f
        raise AssertionError(f"injective map produced a non-pure cocycle at {G.label(bad)}")
    return c


@dataclass
class RecoveredMap:
    values: dict                  # point index -> group element, on the component of x0
    x0: int
    missing: list                 # point indices outside that component

    def as_list(self):
        return [self.values[i] for i in sorted(self.values)]


def cocycle_to_map(c: Cocycle, x0: int = 0) -> RecoveredMap:
    """``f(x) = c(x, x0)``; pure ``c`` gives an injective ``f``."""
    bad = check_pure_cocycle(c)
    if bad is not None:
        raise CoarseError(f"cocycle is not pure: {c.groupoid.label(bad)} lies in the kernel", bad)
    G = c.groupoid
    pos = {k: i for i, k in enumerate(G.keys)}
    npts = int(G.units.size)
    vals, missing = {}, []
    for x in range(npts):
        g = pos.get((x, x0))
        if g is None:
            missing.append(x)
        else:
            vals[x] = c.values[g]
    return RecoveredMap(vals, x0, missing)


def roundtrip(f: Sequence, space: CoarseSpace, group: GroupHandle, x0: int = 0) -> bool:
    """``cocycleToMap(mapToCocycle(f))`` is ``x -> f(x) f(x0)^-1``."""
    rec = cocycle_to_map(map_to_cocycle(f, space, group), x0)
    shift = group.inv(f[x0])
    comp = space.components()
    home = next(cc for cc in comp if x0 in cc)
    return sorted(rec.values) == home and all(rec.values[x] == group.mul(f[x], shift) for x in home)


# ------------------------------------------------------------ the examples


Z = AbelianGroup((0,), ("t",))
F2 = FreeGroup(2, ("a", "b"))


def z_elem(n: int):
    return (int(n),)


def z_cocycle(n: int, m: int):
    """``n - m``."""
    return z_elem(n - m)


def f2_cocycle(n: int, m: int):
    """``b^-m a^(n-m) b^n``."""
    a, b = F2.gen(0), F2.gen(1)
    return F2.prod(F2.power(b, -m), F2.power(a, n - m), F2.power(b, n))


def f2_map(n: int):
    """``b^-n a^-n``; its cocycle ``f(n) f(m)^-1`` is ``f2_cocycle(m, n)``."""
    a, b = F2.gen(0), F2.gen(1)
    return F2.mul(F2.power(b, -n), F2.power(a, -n))


@dataclass
class ProperProfile:
    windows: list
    sizes: dict                   # formatted gamma -> sizes per window
    evidence: dict


def properness_profile(c: Callable, group: GroupHandle, windows: Sequence[int], gammas) -> ProperProfile:
    """``|c^-1(gamma)|`` on the windows ``{0, ..., N}`` (all pairs present)."""
    sizes = {group.format(g): [] for g in gammas}
    for N in windows:
        counts = {g: 0 for g in gammas}
        for n in range(N + 1):
            for m in range(N + 1):
                v = c(n, m)
                if v in counts:
                    counts[v] += 1
        for g in gammas:
            sizes[group.format(g)].append(counts[g])
    evidence = {}
    for g in gammas:
        seq = sizes[group.format(g)]
        if group.is_identity(g):
            evidence[group.format(g)] = "diagonal"
        elif all(a < b for a, b in zip(seq, seq[1:])):
            evidence[group.format(g)] = "non-proper evidence"
        elif len(seq) > 1 and seq[-1] == seq[-2]:
            evidence[group.format(g)] = "proper evidence"
        else:
            evidence[group.format(g)] = "undetermined"
    return ProperProfile(list(windows), sizes, evidence)


# ------------------------------------------------------------ the refuter


@dataclass
class RefuterCertificate:
    pairs: list                   # (k, n_k), 1-based indices into the window
    labels: list                  # formatted labels f(x_k) f(x_{n_k})^-1
    stalled_at: int | None        # first k with no admissible n_k inside the window
    slice_bound: int

    def to_json(self) -> dict:
        return {"pairs": [list(p) for p in self.pairs], "labels": self.labels,
                "stalled_at": self.stalled_at, "slice_bound": self.slice_bound}


def maximal_refuter(f: Sequence, group: GroupHandle) -> RefuterCertificate:
    """Greedy ``n_1 = 1 < n_2 < ...`` with ``f(x_k) f(x_{n_k})^-1`` never repeated.

    The entourage ``{(x_k, x_{n_k})}`` has slices of size at most two, so it
    lies in the maximal uniformly locally finite structure, while its label
    set grows with the window.
    """
    n = len(f)
    if n < 1:
        raise CoarseError("empty window")
    order = group.order() if hasattr(group, "order") and callable(group.order) else None
    if order is not None and order < n:
        raise CoarseError(f"a group of order {order} cannot receive {n} points injectively")
    col = collision(f, group)
    if col is not None:
        raise CoarseError(f"map is not injective at indices {col[0] + 1}, {col[1] + 1}", col)
    pairs, labels, used = [], [], set()
    prev = 0
    stalled = None
    for k in range(1, n + 1):
        lo = 1 if k == 1 else prev + 1
        hi = 1 if k == 1 else n
        pick = None
        for j in range(lo, hi + 1):
            lab = group.mul(f[k - 1], group.inv(f[j - 1]))
            if lab not in used:
                pick = (j, lab)
                break
        if pick is None:
            stalled = k
            break
        prev = pick[0]
        used.add(pick[1])
        pairs.append((k, pick[0]))
        labels.append(pick[1])
    E = [(a - 1, b - 1) for a, b in pairs]
    sym = set(E) | {(b, a) for a, b in E}
    return RefuterCertificate(pairs, [group.format(x) for x in labels], stalled, slice_bound(n, sym))


def replay_refuter(f: Sequence, group: GroupHandle, cert: RefuterCertificate) -> list[str]:
    """Independent re-check; returns a list of failures (empty when sound)."""
    bad = []
    ks = [k for k, _ in cert.pairs]
    ns = [m for _, m in cert.pairs]
    if ks != list(range(1, len(ks) + 1)):
        bad.append("k is not 1, 2, 3, ...")
    if ns and ns[0] != 1:
        bad.append("n_1 is not 1")
    if any(a >= b for a, b in zip(ns, ns[1:])):
        bad.append("n_k is not strictly increasing")
    if any(not 1 <= m <= len(f) for m in ns):
        bad.append("index outside the window")
        return bad
    labs = [group.format(group.mul(f[k - 1], group.inv(f[m - 1]))) for k, m in cert.pairs]
    if labs != list(cert.labels):
        bad.append("labels do not match f")
    if len(set(labs)) != len(labs):
        bad.append("labels repeat")
    return bad


def random_injection(rng, n: int, group: GroupHandle, spread: int = 6) -> list:
    """``n`` distinct random elements: integers in ``[-spread*n, spread*n]`` or reduced words."""
    out, seen = [], set()
    while len(out) < n:
        if group.ngens == 1:
            v = group.power(group.gen(0), int(rng.integers(-spread * n, spread * n + 1)))
        else:
            length = int(rng.integers(0, spread + 1))
            v = group.identity()
            for _ in range(length):
                v = group.mul(v, group.gen(int(rng.integers(group.ngens)), int(rng.choice([-1, 1]))))
        if v not in seen:
            seen.add(v)
            out.append(v)
    return out
