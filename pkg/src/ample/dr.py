"""Graphs and k-graphs, cylinder sets, Deaconu-Renault bisections, the F(Λ) cocycle.

Path convention: a path ``e_1 e_2 ... e_n`` has ``r(e_{i+1}) = s(e_i)``; its
range is ``r(e_1)`` and its source is ``s(e_n)``.  An edge runs ``s(e) -> r(e)``
and the adjacency matrix is ``A[v, w] = #{e : s(e) = w, r(e) = v}``.

A k-graph is given by coloured edges and commuting squares ``e f = f' e'``.
Morphisms are stored in their colour-sorted normal form (all colour-0 edges
first, then colour 1, ...), reached by swapping adjacent edges along squares.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .grp import FreeGroup
from .intlin import in_row_lattice


class GraphError(ValueError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


@dataclass(frozen=True, order=True)
class Path:
    r: int
    edges: tuple = ()


@dataclass(frozen=True, order=True)
class Bisection:
    lam: Path
    mu: Path


class KGraph:
    """Coloured graph with commuting squares (``k = 1`` is a plain directed graph)."""

    def __init__(self, vertices, edges, k: int = 1, squares=(), *, require_source_free: bool = True):
        self.vertices = tuple(str(v) for v in vertices)
        vid = {v: i for i, v in enumerate(self.vertices)}
        if len(vid) != len(self.vertices):
            raise GraphError("vertex labels must be distinct")
        self.k = int(k)
        if self.k < 1:
            raise GraphError("rank k must be >= 1")
        names, src, rng, col = [], [], [], []
        for e in edges:
            name, s, r = str(e[0]), str(e[1]), str(e[2])
            c = int(e[3]) if len(e) > 3 else 0
            if s not in vid or r not in vid:
                raise GraphError(f"edge {name} has an unknown endpoint")
            if not 0 <= c < self.k:
                raise GraphError(f"edge {name} has colour {c} outside 0..{self.k - 1}")
            names.append(name)
            src.append(vid[s])
            rng.append(vid[r])
            col.append(c)
        if len(set(names)) != len(names):
            raise GraphError("edge labels must be distinct")
        self.edges = tuple(names)
        self.src = tuple(src)
        self.rng = tuple(rng)
        self.color = tuple(col)
        self.edge_id = {n: i for i, n in enumerate(names)}
        self.swap = self._load_squares(squares)
        if self.k >= 3:
            self._check_cubes()
        self.source_free = all(
            any(self.rng[e] == v and self.color[e] == c for e in range(len(self.edges)))
            for v in range(len(self.vertices)) for c in range(self.k))
        if require_source_free and not self.source_free:
            bad = next((self.vertices[v], c) for v in range(len(self.vertices)) for c in range(self.k)
                       if not any(self.rng[e] == v and self.color[e] == c for e in range(len(self.edges))))
            raise GraphError(f"vertex {bad[0]} receives no edge of colour {bad[1]} (paths cannot be extended)",
                             witness=bad)
        self._free = None
        self._segs = {}

    # -- squares
    def _load_squares(self, squares) -> dict:
        swap = {}
        for sq in squares:
            e, f, f2, e2 = (self.edge_id[str(x)] if str(x) in self.edge_id else None for x in sq)
            if None in (e, f, f2, e2):
                raise GraphError(f"square {list(sq)} mentions an unknown edge", witness=tuple(sq))
            left, right = (e, f), (f2, e2)
            for a, b in (left, right):
                if self.src[a] != self.rng[b]:
                    raise GraphError(f"square {list(sq)}: {self.edges[a]}{self.edges[b]} is not composable",
                                     witness=tuple(sq))
            if (self.color[e], self.color[f]) != (self.color[e2], self.color[f2]) or self.color[e] == self.color[f]:
                raise GraphError(f"square {list(sq)}: colours do not match", witness=tuple(sq))
            if self.rng[e] != self.rng[f2] or self.src[f] != self.src[e2]:
                raise GraphError(f"square {list(sq)}: endpoints do not match", witness=tuple(sq))
            for p, q in ((left, right), (right, left)):
                if p in swap and swap[p] != q:
                    raise GraphError(f"square table identifies {self._fmt(p)} with two different paths",
                                     witness=tuple(sq))
                swap[p] = q
        for e in range(len(self.edges)):
            for f in range(len(self.edges)):
                if self.src[e] == self.rng[f] and self.color[e] != self.color[f] and (e, f) not in swap:
                    raise GraphError(f"missing square for the composable pair {self._fmt((e, f))}",
                                     witness=(self.edges[e], self.edges[f]))
        return swap

    def _fmt(self, seq) -> str:
        return "".join(self.edges[e] for e in seq)

    def _check_cubes(self):
        """Both ways of sorting a tricoloured triple must agree."""
        E = range(len(self.edges))
        for e, f, g in itertools.product(E, repeat=3):
            if self.src[e] != self.rng[f] or self.src[f] != self.rng[g]:
                continue
            if len({self.color[e], self.color[f], self.color[g]}) != 3:
                continue
            a = self._bubble([e, f, g], prefer_left=True)
            b = self._bubble([e, f, g], prefer_left=False)
            if a != b:
                raise GraphError(f"factorisation is not associative on {self._fmt((e, f, g))}",
                                 witness=(self.edges[e], self.edges[f], self.edges[g]))

    def _bubble(self, seq, prefer_left=True, key=None):
        seq = list(seq)
        key = key or (lambda i, e: self.color[e])
        while True:
            idx = range(len(seq) - 1) if prefer_left else range(len(seq) - 2, -1, -1)
            for i in idx:
                if key(i, seq[i]) > key(i + 1, seq[i + 1]):
                    seq[i], seq[i + 1] = self.swap[(seq[i], seq[i + 1])]
                    break
            else:
                return tuple(seq)

    # -- basic path algebra
    @property
    def nv(self) -> int:
        return len(self.vertices)

    @property
    def ne(self) -> int:
        return len(self.edges)

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.nv, self.nv), dtype=np.int64)
        for e in range(self.ne):
            A[self.rng[e], self.src[e]] += 1
        return A

    def vertex(self, v) -> Path:
        return Path(self.vertices.index(str(v)) if not isinstance(v, int) else v, ())

    def s_of(self, p: Path) -> int:
        return self.src[p.edges[-1]] if p.edges else p.r

    def degree(self, p: Path) -> tuple:
        d = [0] * self.k
        for e in p.edges:
            d[self.color[e]] += 1
        return tuple(d)

    def length(self, p: Path) -> int:
        return len(p.edges)

    def normalize(self, seq) -> tuple:
        if self.k == 1:
            return tuple(seq)
        return self._bubble(seq)

    def path(self, seq, r=None) -> Path:
        """Path from an edge sequence (labels or ids); checks composability."""
        unknown = [e for e in seq if isinstance(e, str) and e not in self.edge_id]
        if unknown:
            raise GraphError(f"unknown edge {unknown[0]!r}")
        ids = [self.edge_id[e] if isinstance(e, str) else int(e) for e in seq]
        for a, b in zip(ids, ids[1:]):
            if self.src[a] != self.rng[b]:
                raise GraphError(f"{self.edges[a]} {self.edges[b]} is not composable")
        if not ids:
            if r is None:
                raise GraphError("a vertex path needs its vertex")
            return self.vertex(r)
        return Path(self.rng[ids[0]], self.normalize(ids))

    def parse_path(self, text: str) -> Path:
        """``"v"`` for a vertex, otherwise space- or dot-separated edge labels."""
        text = text.strip()
        if text in self.vertices:
            return self.vertex(text)
        toks = text.replace(".", " ").split()
        if len(toks) == 1 and toks[0] not in self.edge_id and all(c in self.edge_id for c in toks[0]):
            toks = list(toks[0])
        return self.path(toks)

    def fmt(self, p: Path) -> str:
        if not p.edges:
            return self.vertices[p.r]
        sep = "" if all(len(e) == 1 for e in self.edges) else "."
        return sep.join(self.edges[e] for e in p.edges)

    def concat(self, p: Path, q: Path) -> Path:
        if self.s_of(p) != q.r:
            raise GraphError(f"{self.fmt(p)} and {self.fmt(q)} are not composable")
        if not p.edges:
            return q
        return Path(p.r, self.normalize(p.edges + q.edges))

    def factor(self, p: Path, m) -> tuple[Path, Path]:
        """``p = a b`` with ``d(a) = m``."""
        d = self.degree(p)
        m = tuple(m)
        if any(x > y or x < 0 for x, y in zip(m, d)):
            raise GraphError(f"degree {m} does not fit below {d}")
        if self.k == 1:
            a = p.edges[: m[0]]
        else:
            pattern = sorted(c for c in range(self.k) for _ in range(m[c])) + \
                sorted(c for c in range(self.k) for _ in range(d[c] - m[c]))
            seq = list(p.edges)
            for i in range(len(seq)):
                if self.color[seq[i]] == pattern[i]:
                    continue
                j = next(j for j in range(i + 1, len(seq)) if self.color[seq[j]] == pattern[i])
                for t in range(j, i, -1):
                    seq[t - 1], seq[t] = self.swap[(seq[t - 1], seq[t])]
            a = tuple(seq[: sum(m)])
            b = tuple(seq[sum(m):])
            pa = Path(p.r, self.normalize(a)) if a else Path(p.r)
            pb = Path(self.s_of(pa), self.normalize(b)) if b else Path(self.s_of(p))
            return pa, pb
        pa = Path(p.r, a)
        pb = Path(self.s_of(pa), p.edges[m[0]:])
        return pa, pb

    def segment(self, p: Path, lo, hi) -> Path:
        """``p(lo, hi)``."""
        head, _ = self.factor(p, hi)
        _, mid = self.factor(head, lo)
        return mid

    def seg(self, p: Path, lo, hi) -> tuple:
        """Edges of ``p(lo, hi)`` (cached for k > 1)."""
        if self.k == 1:
            return p.edges[lo[0]:hi[0]]
        key = (p, tuple(lo), tuple(hi))
        out = self._segs.get(key)
        if out is None:
            out = self._segs[key] = self.segment(p, lo, hi).edges
        return out

    def paths_of_degree(self, v: int, d) -> list[Path]:
        """All morphisms with range ``v`` and degree ``d``, sorted."""
        colours = [c for c in range(self.k) for _ in range(d[c])]
        out = []

        def rec(at, seq):
            i = len(seq)
            if i == len(colours):
                out.append(Path(v, tuple(seq)))
                return
            for e in range(self.ne):
                if self.rng[e] == at and self.color[e] == colours[i]:
                    rec(self.src[e], seq + [e])

        rec(v, [])
        return sorted(out)

    def paths_upto(self, L: int) -> list[Path]:
        """Every morphism with total length ``<= L``, ordered by (length, range, edges)."""
        out = []
        for n in range(L + 1):
            for d in _compositions(n, self.k):
                for v in range(self.nv):
                    out.extend(self.paths_of_degree(v, d))
        return sorted(out, key=lambda p: (len(p.edges), p.r, p.edges))

    def points(self, P: int) -> list[Path]:
        """Truncated infinite paths: morphisms of degree ``(P, ..., P)``."""
        return [p for v in range(self.nv) for p in self.paths_of_degree(v, (P,) * self.k)]

    def has_prefix(self, x: Path, mu: Path) -> bool:
        dm = self.degree(mu)
        if x.r != mu.r or any(a > b for a, b in zip(dm, self.degree(x))):
            return False
        return self.factor(x, dm)[0] == mu

    # -- F(Λ)
    @property
    def free(self) -> FreeGroup:
        if self._free is None:
            self._free = FreeGroup(self.ne, self.edges if all(_label_ok(e) for e in self.edges)
                                   else [f"x{i}" for i in range(self.ne)])
        return self._free

    def to_json(self) -> dict:
        d = {"vertices": list(self.vertices),
             "edges": [{"name": n, "src": self.vertices[s], "dst": self.vertices[r], "color": c}
                       for n, s, r, c in zip(self.edges, self.src, self.rng, self.color)]}
        if self.k > 1:
            d["k"] = self.k
            seen, sq = set(), []
            for (e, f), (f2, e2) in sorted(self.swap.items()):
                if self.color[e] < self.color[f] and (e, f) not in seen:
                    seen.add((e, f))
                    sq.append([self.edges[e], self.edges[f], self.edges[f2], self.edges[e2]])
            d["squares"] = sq
        return d


def _label_ok(s: str) -> bool:
    return s[:1].isalpha() and all(ch.isalnum() or ch in "_'" for ch in s)


def _compositions(n: int, k: int):
    if k == 1:
        yield (n,)
        return
    for i in range(n, -1, -1):
        for rest in _compositions(n - i, k - 1):
            yield (i,) + rest


# ------------------------------------------------------------ constructors


def o_graph(n: int) -> KGraph:
    """One vertex ``v`` with loops ``e1 .. en``."""
    return KGraph(["v"], [(f"e{i}", "v", "v") for i in range(1, n + 1)])


def binary_graph() -> KGraph:
    return KGraph(["v"], [("0", "v", "v"), ("1", "v", "v")])


def single_loop() -> KGraph:
    return KGraph(["v"], [("e", "v", "v")])


def fix6() -> KGraph:
    """Rank-2 graph: one vertex, blue loop ``f`` (colour 0), red loop ``g`` (colour 1), ``fg = gf``."""
    return KGraph(["v"], [("f", "v", "v", 0), ("g", "v", "v", 1)], k=2, squares=[("f", "g", "g", "f")])


def two_by_two_kgraph() -> KGraph:
    """Rank-2 graph on one vertex with blue loops ``f1, f2`` and red loops ``g1, g2``.

    Squares ``f_i g_j = g_j f_i`` except that ``f1 g1 = g2 f2`` and ``f2 g2 = g1 f1``;
    same-degree words here need square rewriting, not just the degree.
    """
    sq = []
    for i in (1, 2):
        for j in (1, 2):
            if (i, j) == (1, 1):
                sq.append(("f1", "g1", "g2", "f2"))
            elif (i, j) == (2, 2):
                sq.append(("f2", "g2", "g1", "f1"))
            else:
                sq.append((f"f{i}", f"g{j}", f"g{j}", f"f{i}"))
    edges = [("f1", "v", "v", 0), ("f2", "v", "v", 0), ("g1", "v", "v", 1), ("g2", "v", "v", 1)]
    return KGraph(["v"], edges, k=2, squares=sq)


def rooted_binary_tree(depth: int) -> KGraph:
    """Binary tree with root ``r``; the edge ``v -> w`` has ``r(e) = w`` (the parent)."""
    names = ["r"] + ["".join(b) for n in range(1, depth + 1) for b in itertools.product("01", repeat=n)]
    edges = []
    for w in names[1:]:
        parent = "r" if len(w) == 1 else w[:-1]
        edges.append((f"{parent}>{w}", w, parent))
    return KGraph(names, edges, require_source_free=False)


def tree_vertex_path(G: KGraph, root: str, v: str) -> Path:
    """The path from ``root`` to ``v``; its cylinder stands for ``Z_∂(v)``."""
    if v == root:
        return G.vertex(root)
    seq = []
    cur = v
    while cur != root:
        e = next((i for i in range(G.ne) if G.vertices[G.src[i]] == cur), None)
        if e is None:
            raise GraphError(f"{v} is not below {root}")
        seq.append(e)
        cur = G.vertices[G.rng[e]]
    return G.path(list(reversed(seq)))


def graph_from_json(doc: dict, *, require_source_free: bool = True) -> KGraph:
    edges = [(e["name"], e["src"], e["dst"], e.get("color", 0)) for e in doc["edges"]]
    return KGraph(doc["vertices"], edges, k=doc.get("k", 1), squares=doc.get("squares", ()),
                  require_source_free=require_source_free)


# ---------------------------------------------------------------- cylinders


def cylinder_meet(G: KGraph, mu: Path, nu: Path) -> list[Path]:
    """``Z(mu) ∩ Z(nu)`` as a disjoint list of cylinders (empty list for ∅)."""
    if mu.r != nu.r:
        return []
    dm, dn = G.degree(mu), G.degree(nu)
    d = tuple(max(a, b) for a, b in zip(dm, dn))
    out = []
    for alpha in G.paths_of_degree(G.s_of(mu), tuple(x - y for x, y in zip(d, dm))):
        lam = G.concat(mu, alpha)
        if G.factor(lam, dn)[0] == nu:
            out.append(lam)
    return out


def cylinder_diff(G: KGraph, mu: Path, nu: Path) -> list[Path]:
    """``Z(mu) \\ Z(nu)`` as a list of pairwise disjoint cylinders."""
    meet = cylinder_meet(G, mu, nu)
    if not meet:
        return [mu]
    if G.k == 1:
        if len(nu.edges) <= len(mu.edges):
            return []                       # Z(mu) ⊆ Z(nu)
        out = []
        tail = nu.edges[len(mu.edges):]
        prefix = mu.edges
        at = G.s_of(mu)
        for e_i in tail:
            for e in range(G.ne):
                if G.rng[e] == at and e != e_i:
                    out.append(Path(mu.r, prefix + (e,)))
            prefix = prefix + (e_i,)
            at = G.src[e_i]
        return out
    dm, dn = G.degree(mu), G.degree(nu)
    d = tuple(max(a, b) for a, b in zip(dm, dn))
    out = []
    for alpha in G.paths_of_degree(G.s_of(mu), tuple(x - y for x, y in zip(d, dm))):
        lam = G.concat(mu, alpha)
        if G.factor(lam, dn)[0] != nu:
            out.append(lam)
    return out


def cylinder_points(G: KGraph, cyl: Path, P: int) -> set:
    return {x for x in G.points(P) if G.has_prefix(x, cyl)}


def verify_diff(G: KGraph, mu: Path, nu: Path, pieces, P: int | None = None) -> bool:
    """Extensional check of disjointness and union on points of degree ``P``."""
    P = P if P is not None else max(len(mu.edges) + len(nu.edges), 1)
    pts = G.points(P)
    A = {x for x in pts if G.has_prefix(x, mu)}
    B = {x for x in pts if G.has_prefix(x, nu)}
    sets = [{x for x in pts if G.has_prefix(x, c)} for c in pieces]
    union = set().union(*sets) if sets else set()
    return sum(len(s) for s in sets) == len(union) and union == A - B


# ------------------------------------------------------ F(Λ) and the cocycle


class FLambda:
    """Words in ``F(Λ)``: free group on edges modulo the square relations.

    Equality is exact for 1-graphs.  For k-graphs it is three-valued: a
    block normal form under a step budget proves equality; the degree and
    the abelianised edge counts prove inequality; otherwise ``None``.
    """

    def __init__(self, G: KGraph, budget: int = 10_000):
        self.G = G
        self.F = G.free
        self.budget = budget
        rel = []
        for (e, f), (f2, e2) in G.swap.items():
            v = [0] * G.ne
            v[e] += 1
            v[f] += 1
            v[f2] -= 1
            v[e2] -= 1
            if any(v) and v not in rel and [-x for x in v] not in rel:
                rel.append(v)
        self.relations = rel
        self._reps = None

    def of_path(self, p: Path):
        return tuple(e + 1 for e in p.edges)

    def cocycle(self, b: Bisection):
        """``[λ][μ]^-1`` (freely reduced)."""
        return self.F.mul(self.of_path(b.lam), self.F.inv(self.of_path(b.mu)))

    def mul(self, u, v):
        return self.F.mul(u, v)

    def degree(self, w) -> tuple:
        d = [0] * self.G.k
        for c in w:
            d[self.G.color[abs(c) - 1]] += 1 if c > 0 else -1
        return tuple(d)

    def abelian(self, w) -> list:
        v = [0] * self.G.ne
        for c in w:
            v[abs(c) - 1] += 1 if c > 0 else -1
        return v

    def normal_form(self, w, budget: int | None = None):
        """``(blocks, complete)``: alternating signed path blocks after rewriting."""
        if self.G.k == 1:
            return w, True
        G = self.G
        steps = [self.budget if budget is None else budget]
        blocks = _split_blocks(G, w)

        def spend():
            if steps[0] <= 0:
                raise _OutOfBudget
            steps[0] -= 1

        try:
            changed = True
            while changed:
                changed = False
                i = 0
                while i + 1 < len(blocks):
                    (sa, pa), (sb, pb) = blocks[i], blocks[i + 1]
                    if sa == sb:
                        first, second = (pa, pb) if sa > 0 else (pb, pa)
                        if G.s_of(first) == second.r:
                            blocks[i: i + 2] = [(sa, G.concat(first, second))]
                            changed = True
                            continue
                    elif sa > 0:                 # P N^-1: cancel a common suffix
                        na, nb = _cancel(G, pa, pb, suffix=True, spend=spend)
                        if (na, nb) != (pa, pb):
                            blocks[i: i + 2] = [b for b in ((1, na), (-1, nb)) if b[1].edges]
                            changed = True
                            continue
                    else:                        # N^-1 P: cancel a prefix, then swap via an extension
                        na, nb = _cancel(G, pa, pb, suffix=False, spend=spend)
                        if (na, nb) != (pa, pb):
                            blocks[i: i + 2] = [b for b in ((-1, na), (1, nb)) if b[1].edges]
                            changed = True
                            continue
                        ext = cylinder_meet(G, pa, pb)
                        if ext:
                            spend()
                            lam = ext[0]
                            alpha = G.factor(lam, G.degree(pa))[1]
                            beta = G.factor(lam, G.degree(pb))[1]
                            blocks[i: i + 2] = [b for b in ((1, alpha), (-1, beta)) if b[1].edges]
                            changed = True
                            continue
                    i += 1
        except _OutOfBudget:
            return _join_blocks(blocks), False
        return _join_blocks(blocks), True

    def equal(self, u, v):
        """``True`` / ``False`` / ``None`` (undecided)."""
        if u == v:
            return True
        w = self.F.mul(u, self.F.inv(v))
        if any(self.degree(w)):
            return False
        if self.G.k == 1:
            return False                   # reduced non-empty word in a free group
        nf, complete = self.normal_form(w)
        if not nf:
            return True
        if not in_row_lattice(self.relations, self.abelian(w)):
            return False
        # each representation tried costs one step of the budget
        if any(_perm_word(rep, w) != _ID3 for rep in self.reps()[: self.budget]):
            return False
        return None

    def reps(self) -> list:
        """Assignments of edges to permutations of three points that respect every square.

        Each one is a homomorphism out of ``F(Λ)``, so a word with a
        non-trivial image is not the identity.  Only tried for small edge sets.
        """
        if self._reps is None:
            self._reps = []
            if self.G.ne <= 5:
                perms = list(itertools.permutations(range(3)))
                for rep in itertools.product(perms, repeat=self.G.ne):
                    if all(_compose(rep[e], rep[f]) == _compose(rep[f2], rep[e2])
                           for (e, f), (f2, e2) in self.G.swap.items()):
                        self._reps.append(rep)
        return self._reps

    def is_identity(self, w):
        return self.equal(w, ())

    def fmt(self, w) -> str:
        return self.F.format(w)


_ID3 = (0, 1, 2)


def _compose(p, q):
    return tuple(p[q[i]] for i in range(3))


def _perm_word(rep, w):
    out = _ID3
    for c in w:
        p = rep[abs(c) - 1]
        if c < 0:
            inv = [0, 0, 0]
            for i, j in enumerate(p):
                inv[j] = i
            p = tuple(inv)
        out = _compose(out, p)
    return out


class _OutOfBudget(Exception):
    pass


def _split_blocks(G: KGraph, w) -> list:
    """Maximal runs of one sign that are composable paths, as ``(sign, Path)``."""
    blocks = []
    for c in w:
        e, sgn = abs(c) - 1, (1 if c > 0 else -1)
        if blocks and blocks[-1][0] == sgn:
            sign, p = blocks[-1]
            seq = p.edges
            ok = G.src[seq[-1]] == G.rng[e] if sgn > 0 else G.src[e] == p.r
            if ok:
                new = Path(p.r, seq + (e,)) if sgn > 0 else Path(G.rng[e], (e,) + seq)
                blocks[-1] = (sgn, new)
                continue
        blocks.append((sgn, Path(G.rng[e], (e,))))
    return [(s, Path(p.r, G.normalize(p.edges))) for s, p in blocks]


def _join_blocks(blocks) -> tuple:
    out = []
    for s, p in blocks:
        if s > 0:
            out.extend(e + 1 for e in p.edges)
        else:
            out.extend(-(e + 1) for e in reversed(p.edges))
    return tuple(out)


def _cancel(G: KGraph, a: Path, b: Path, *, suffix: bool, spend):
    """Strip common single-colour suffixes (or prefixes) of ``a`` and ``b``."""
    changed = True
    while changed and a.edges and b.edges:
        changed = False
        da, db = G.degree(a), G.degree(b)
        for c in range(G.k):
            if da[c] and db[c]:
                unit = tuple(1 if i == c else 0 for i in range(G.k))
                if suffix:
                    ha, ta = G.factor(a, tuple(x - y for x, y in zip(da, unit)))
                    hb, tb = G.factor(b, tuple(x - y for x, y in zip(db, unit)))
                    if ta == tb:
                        spend()
                        a, b = ha, hb
                        changed = True
                        break
                else:
                    ha, ta = G.factor(a, unit)
                    hb, tb = G.factor(b, unit)
                    if ha == hb:
                        spend()
                        a, b = ta, tb
                        changed = True
                        break
    return a, b


def flam_cocycle(G: KGraph, b: Bisection):
    return FLambda(G).cocycle(b)


# ---------------------------------------------------------- DR truncation


class DrTruncation:
    """Bisections ``Z(λ, μ)`` with ``|λ|, |μ| <= L`` and their partial products.

    Products are computed on demand.  ``product`` returns a tuple of ids
    (the empty tuple for ``∅``) or ``None`` when a piece would exceed ``L``.
    """

    def __init__(self, G: KGraph, L: int):
        if L < 0:
            raise GraphError("L must be >= 0")
        self.G = G
        self.L = L
        self.paths = G.paths_upto(L)
        by_source = defaultdict(list)
        for p in self.paths:
            by_source[G.s_of(p)].append(p)
        self.bisections = [Bisection(a, b) for a in self.paths for b in by_source[G.s_of(a)]]
        self.index = {b: i for i, b in enumerate(self.bisections)}
        self._by_lam = defaultdict(list)
        for i, b in enumerate(self.bisections):
            self._by_lam[b.lam].append(i)
        self._meet = {}
        self._ext = {}

    def __len__(self):
        return len(self.bisections)

    def degree(self, i: int) -> tuple:
        b = self.bisections[i]
        return tuple(x - y for x, y in zip(self.G.degree(b.lam), self.G.degree(b.mu)))

    def inverse(self, i: int) -> int:
        b = self.bisections[i]
        return self.index[Bisection(b.mu, b.lam)]

    def is_unit(self, i: int) -> bool:
        b = self.bisections[i]
        return b.lam == b.mu

    def meet(self, mu: Path, nu: Path):
        key = (mu, nu)
        if key not in self._meet:
            self._meet[key] = cylinder_meet(self.G, mu, nu)
        return self._meet[key]

    def extensions(self, mu: Path, lam: Path):
        """``(alpha, beta)`` with ``mu alpha = lam beta`` minimal, one per common extension."""
        key = (mu, lam)
        out = self._ext.get(key)
        if out is None:
            G = self.G
            out = self._ext[key] = [(G.factor(g, G.degree(mu))[1], G.factor(g, G.degree(lam))[1])
                                    for g in self.meet(mu, lam)]
        return out

    def product(self, i: int, j: int):
        G, L = self.G, self.L
        a, b = self.bisections[i], self.bisections[j]
        pieces = []
        for alpha, beta in self.extensions(a.mu, b.lam):
            if len(a.lam.edges) + len(alpha.edges) > L or len(b.mu.edges) + len(beta.edges) > L:
                return None
            lam, nu = G.concat(a.lam, alpha), G.concat(b.mu, beta)
            pieces.append(self.index[Bisection(lam, nu)])
        return tuple(pieces)

    def partners(self, i: int):
        """Ids ``j`` whose product with ``i`` can be non-empty."""
        mu = self.bisections[i].mu
        for lam, js in self._by_lam.items():
            if lam.r == mu.r and self.meet(mu, lam):
                yield from js

    def products(self):
        """Yield ``(i, j, pieces)`` for every non-empty product; capped ones give ``None``."""
        for i in range(len(self.bisections)):
            for j in self.partners(i):
                yield i, j, self.product(i, j)

    def fmt(self, i: int) -> str:
        b = self.bisections[i]
        return f"Z({self.G.fmt(b.lam)},{self.G.fmt(b.mu)})"


def build_dr_truncation(G: KGraph, L: int) -> DrTruncation:
    return DrTruncation(G, L)


@dataclass
class CocycleCheck:
    homomorphism: str              # "ok" | "violation" | "inconclusive"
    degree_ok: bool
    checked_products: int
    capped_products: int
    violations: list = field(default_factory=list)
    undecided: list = field(default_factory=list)


def cocycle_table_check(T: DrTruncation, flam: FLambda | None = None) -> CocycleCheck:
    """``c(ab) = c(a) c(b)`` on every product inside the cap, and ``d̃(c(b)) = degree(b)``."""
    flam = flam or FLambda(T.G)
    vals = [flam.cocycle(b) for b in T.bisections]
    deg_ok = all(flam.degree(vals[i]) == T.degree(i) for i in range(len(T)))
    checked = capped = 0
    bad, undecided = [], []
    for i, j, pieces in T.products():
        if pieces is None:
            capped += 1
            continue
        want = flam.mul(vals[i], vals[j])
        for p in pieces:
            checked += 1
            eq = flam.equal(vals[p], want)
            if eq is False:
                bad.append((T.fmt(i), T.fmt(j), T.fmt(p)))
            elif eq is None:
                undecided.append((T.fmt(i), T.fmt(j), T.fmt(p)))
    status = "violation" if bad else ("inconclusive" if undecided else "ok")
    return CocycleCheck(status, deg_ok, checked, capped, bad, undecided)


@dataclass
class PurityReport:
    verdict: str                   # "pure" | "pure-up-to-L" | "witness" | "inconclusive"
    L: int
    checked: int
    witness: str | None = None
    undecided: list = field(default_factory=list)
    facts: tuple = ()


_FACTS = ("the degree map d̃ kills every value with n != 0",
          "positive edge words are equal in a free group only when identical")


def purity_check_graph(G: KGraph, L: int) -> PurityReport:
    """1-graphs: ``c(Z(λ, μ))`` is the identity exactly when ``λ = μ``."""
    if G.k != 1:
        raise GraphError("purity_check_graph needs a 1-graph; use purity_check_kgraph")
    T = DrTruncation(G, L)
    flam = FLambda(G)
    for b in T.bisections:
        trivial = flam.cocycle(b) == ()
        if trivial != (b.lam == b.mu):
            raise AssertionError(f"free reduction disagrees with path equality at {b}")
    return PurityReport("pure", L, len(T), facts=_FACTS)


def purity_check_kgraph(G: KGraph, L: int, budget: int = 10_000) -> PurityReport:
    if G.k == 1:
        return purity_check_graph(G, L)
    T = DrTruncation(G, L)
    flam = FLambda(G, budget)
    undecided = []
    for i, b in enumerate(T.bisections):
        if b.lam == b.mu:
            continue
        eq = flam.is_identity(flam.cocycle(b))
        if eq is True:
            return PurityReport("witness", L, len(T), witness=T.fmt(i))
        if eq is None:
            undecided.append(T.fmt(i))
    if undecided:
        return PurityReport("inconclusive", L, len(T), undecided=undecided)
    return PurityReport("pure-up-to-L", L, len(T), facts=_FACTS)


# ------------------------------------------------------ local properness


@dataclass
class ProperReport:
    ok: bool
    L: int
    P: int
    points: int
    arrows: int
    bisections: int
    failure: dict | None = None
    undecided: int = 0


def truncated_arrows(G: KGraph, L: int, P: int, flam: FLambda):
    """Arrows ``(x, n, y)`` on points of degree ``P``: some ``m, l <= L`` with
    ``m - l = n`` and ``x``, ``y`` agreeing after ``m``, ``l`` as far as both
    are known.  Each arrow keeps the cocycle value of its first witnessing
    ``(m, l)`` in (``|l|``, lexicographic) order."""
    pts = G.points(P)
    k = G.k
    box = sorted(itertools.product(range(L + 1), repeat=k), key=lambda t: (sum(t), t))
    full = (P,) * k
    seg = {}

    def cut(x, a):
        key = (x, a)
        if key not in seg:
            seg[key] = G.factor(x, a)
        return seg[key]

    arrows = {}
    for x in pts:
        for y in pts:
            for l in box:
                for m in box:
                    n = tuple(a - b for a, b in zip(m, l))
                    if (x, n, y) in arrows:
                        continue
                    top = tuple(max(a, b) for a, b in zip(m, l))
                    t = tuple(f - tp for f, tp in zip(full, top))
                    if G.seg(x, m, tuple(a + b for a, b in zip(m, t))) == \
                            G.seg(y, l, tuple(a + b for a, b in zip(l, t))):
                        val = flam.mul(flam.of_path(cut(x, m)[0]), flam.F.inv(flam.of_path(cut(y, l)[0])))
                        arrows[(x, n, y)] = val
    return pts, arrows


def local_properness_certificate(G: KGraph, L: int) -> ProperReport:
    """``f^-1(Z(λ) x {[λ][μ]^-1} x Z(μ)) = Z(λ, μ)`` on the points of degree ``L + 1``."""
    P = L + 1
    flam = FLambda(G)
    pts, arrows = truncated_arrows(G, L, P, flam)
    by_pair = defaultdict(list)
    for (x, n, y), v in arrows.items():
        by_pair[(x, y)].append((n, v))
    T = DrTruncation(G, L)
    in_cyl = {p: [x for x in pts if G.has_prefix(x, p)] for p in T.paths}
    full = (P,) * G.k
    undecided = 0
    for i, b in enumerate(T.bisections):
        target = flam.cocycle(b)
        dl, dm = G.degree(b.lam), G.degree(b.mu)
        n0 = tuple(a - c for a, c in zip(dl, dm))
        top = tuple(max(a, c) for a, c in zip(dl, dm))
        t = tuple(f - tp for f, tp in zip(full, top))
        lhs, rhs = set(), set()
        for x in in_cyl[b.lam]:
            xs = G.seg(x, dl, tuple(a + c for a, c in zip(dl, t)))
            hi = tuple(a + c for a, c in zip(dm, t))
            for y in in_cyl[b.mu]:
                if G.seg(y, dm, hi) == xs:
                    rhs.add((x, n0, y))
                for n, v in by_pair.get((x, y), ()):
                    eq = True if v == target else (False if G.k == 1 else flam.equal(v, target))
                    if eq is None:
                        undecided += 1
                    elif eq:
                        lhs.add((x, n, y))
        if lhs != rhs:
            extra = sorted(lhs ^ rhs)[0]
            return ProperReport(False, L, P, len(pts), len(arrows), len(T),
                                {"bisection": T.fmt(i), "arrow": [G.fmt(extra[0]), list(extra[1]), G.fmt(extra[2])],
                                 "side": "preimage" if extra in lhs else "bisection"}, undecided)
    return ProperReport(undecided == 0, L, P, len(pts), len(arrows), len(T), None, undecided)


# ------------------------------------------------------- same-degree H


@dataclass
class SameDegreeReport:
    a: np.ndarray
    b: np.ndarray
    subgroupoid: bool
    diagonal: bool
    window: list
    left_size: int
    bound: int
    capped: int

    def to_json(self) -> dict:
        return {"h_size": int(self.a.size), "subgroupoid": self.subgroupoid, "diagonal": self.diagonal,
                "degree_window": [list(d) for d in self.window], "left_size": self.left_size,
                "bound": self.bound, "capped_products": self.capped}


def same_degree_delta_bar_h(T: DrTruncation, C=None) -> SameDegreeReport:
    """``H = {(a, b) : degree(a) = degree(b)}`` with its closure audit.

    ``C`` (bisection ids, default: all) gives the audited piece; its degree
    window ``F`` bounds ``|H ∩ (G x C)|`` by ``sum_{n in F} |deg^-1(n)| |C_n|``.
    """
    n = len(T)
    deg = [T.degree(i) for i in range(n)]
    cls = defaultdict(list)
    for i, d in enumerate(deg):
        cls[d].append(i)
    pairs = [(i, j) for ids in cls.values() for i in ids for j in ids]
    pairs.sort()
    a = np.array([p[0] for p in pairs], dtype=np.int64)
    b = np.array([p[1] for p in pairs], dtype=np.int64)
    member = set(pairs)
    ok = all((T.inverse(i), T.inverse(j)) in member for i, j in pairs)
    capped = 0
    # product closure: for composable H-pairs the products pair up degree-wise
    prods = defaultdict(dict)
    for i, j, pieces in T.products():
        prods[i][j] = pieces
    for i, j in pairs:
        for i2, pi in prods[i].items():
            for j2, pj in prods[j].items():
                if (i2, j2) not in member:
                    continue
                if pi is None or pj is None:
                    capped += 1
                    continue
                if any((p, q) not in member for p in pi for q in pj if deg[p] == deg[q]) \
                        or any(deg[p] != deg[pi[0]] for p in pi + pj):
                    ok = False
    diag = all((i, i) in member for i in range(n))
    C = list(range(n)) if C is None else list(C)
    window = sorted({deg[c] for c in C})
    left = sum(len(cls[deg[c]]) for c in C)
    bound = sum(len(cls[d]) * sum(1 for c in C if deg[c] == d) for d in window)
    return SameDegreeReport(a, b, ok, diag, window, left, bound, capped)
