"""K_0 classes of compact open sets in a graph's path space, with bisection witnesses.

The oracle is ``coker(I - A^t)`` computed by Smith normal form.  Compact
open sets are finite lists of pairwise disjoint cylinders ``Z(mu)``; the
bisection ``Z(mu, s(mu))`` moves ``Z(s(mu))`` onto ``Z(mu)``, so the class
of ``Z(mu)`` is the basis vector at ``s(mu)``.  Sums and negatives are
realised by sets built from two bisections with disjoint ranges inside
their common source (paradoxical comparison).
"""

from __future__ import annotations

import bisect
import itertools
from dataclasses import dataclass, field

import numpy as np

from .dr import Bisection, GraphError, KGraph, Path, cylinder_diff, cylinder_meet
from .intlin import Smith, smith


class K0Error(ValueError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


# ------------------------------------------------------------------ oracle


@dataclass
class K0Group:
    """``Z^V / (I - A^t) Z^V`` presented by its Smith normal form."""

    M: np.ndarray
    snf: Smith
    factors: tuple                 # invariant factors != 1 (0 is a free summand)
    rows: tuple                    # rows of U that carry those factors

    @property
    def free_rank(self) -> int:
        return sum(1 for d in self.factors if d == 0)

    @property
    def is_finite(self) -> bool:
        return self.free_rank == 0

    def order(self):
        return int(np.prod(self.factors)) if self.is_finite else None

    def class_of_vector(self, x) -> tuple:
        U = self.snf.U
        out = []
        for d, i in zip(self.factors, self.rows):
            y = sum(int(U[i, j]) * int(x[j]) for j in range(len(x)))
            out.append(y % d if d else y)
        return tuple(out)

    def add(self, a, b) -> tuple:
        return tuple((x + y) % d if d else x + y for x, y, d in zip(a, b, self.factors))

    def neg(self, a) -> tuple:
        return tuple((-x) % d if d else -x for x, d in zip(a, self.factors))

    def zero(self) -> tuple:
        return (0,) * len(self.factors)

    def elements(self) -> list[tuple]:
        if not self.is_finite:
            raise K0Error("the group is infinite")
        return [tuple(v) for v in itertools.product(*(range(d) for d in self.factors))]

    def describe(self) -> str:
        parts = ["Z" if d == 0 else f"Z/{d}" for d in self.factors]
        return " + ".join(parts) if parts else "0"

    def vector_for(self, target) -> list[int]:
        """Some integer vector whose class is ``target``."""
        Uinv = self.snf.U.inv()
        n = self.snf.U.rows
        y = [0] * n
        for t, i in zip(target, self.rows):
            y[i] = int(t)
        return [int(sum(Uinv[j, i] * y[i] for i in range(n))) for j in range(n)]


def snf_oracle(G: KGraph) -> K0Group:
    if G.k != 1:
        raise K0Error("the oracle is implemented for 1-graphs")
    A = G.adjacency()
    M = np.eye(G.nv, dtype=np.int64) - A.T
    S = smith(M.tolist())
    # flipping row i of U together with column i of V keeps U M V = D;
    # use it so the first visible coordinate of each row is small and positive
    for i, d in enumerate(S.diagonal):
        row = [int(S.U[i, j]) for j in range(G.nv)]
        lead = next((x % d if d else x for x in row if (x % d if d else x)), 0)
        if (d and lead > d // 2) or (not d and lead < 0):
            S.U[i, :] = -S.U[i, :]
            S.V[:, i] = -S.V[:, i]
    if not S.verify():
        raise AssertionError("Smith decomposition failed its own check")
    diag = S.diagonal
    factors, rows = [], []
    for i in range(G.nv):
        d = diag[i] if i < len(diag) else 0
        if d != 1:
            factors.append(int(d))
            rows.append(i)
    return K0Group(M, S, tuple(factors), tuple(rows))


# ------------------------------------------------------------ compact opens


def _meet(a: Path, b: Path):
    """``Z(a) ∩ Z(b)`` for 1-graph cylinders: the smaller one when nested, else ``None``."""
    if a.r != b.r:
        return None
    la, lb = len(a.edges), len(b.edges)
    if la <= lb:
        return b if b.edges[:la] == a.edges else None
    return a if a.edges[:lb] == b.edges else None


def _diff(G: KGraph, a: Path, b: Path) -> list:
    m = _meet(a, b)
    if m is None:
        return [a]
    if m is a:
        return []
    return cylinder_diff(G, a, b)


def normalize(G: KGraph, cyls) -> tuple:
    """Canonical order; raises if two cylinders overlap."""
    cyls = sorted(set(cyls), key=lambda p: (p.r, p.edges))
    # nested cylinders are adjacent in this order
    for a, b in zip(cyls, cyls[1:]):
        if _meet(a, b) is not None:
            raise K0Error(f"cylinders {G.fmt(a)} and {G.fmt(b)} overlap", (G.fmt(a), G.fmt(b)))
    return tuple(sorted(cyls, key=lambda p: (len(p.edges), p.r, p.edges)))


def coarsen(G: KGraph, O) -> tuple:
    """Replace every complete family ``{Z(mu e) : r(e) = s(mu)}`` by ``Z(mu)``; the class is unchanged."""
    indeg = [0] * G.nv
    for e in range(G.ne):
        indeg[G.rng[e]] += 1
    cur = set(O)
    while True:
        groups: dict = {}
        for p in cur:
            if p.edges:
                groups.setdefault((p.r, p.edges[:-1]), []).append(p)
        merged = False
        for (r, pre), kids in groups.items():
            at = G.src[pre[-1]] if pre else r
            if len(kids) == indeg[at]:
                cur.difference_update(kids)
                cur.add(Path(r, pre))
                merged = True
        if not merged:
            return normalize(G, cur)


def _carve(G: KGraph, a: Path, inner) -> list:
    """``Z(a)`` minus the cylinders ``inner`` (all strict extensions of ``a``)."""
    out = []
    at = G.s_of(a)
    depth = len(a.edges)
    for e in range(G.ne):
        if G.rng[e] != at:
            continue
        child = Path(a.r, a.edges + (e,))
        sub = [b for b in inner if b.edges[depth] == e]
        if not sub:
            out.append(child)
        elif not any(len(b.edges) == depth + 1 for b in sub):
            out.extend(_carve(G, child, sub))
    return out


def difference(G: KGraph, A, B) -> tuple:
    """``A \\ B`` for compact opens given as disjoint cylinder lists."""
    Bset = set(B)
    Bs = sorted(Bset, key=lambda p: (p.r, p.edges))
    keys = [(p.r, p.edges) for p in Bs]
    out = []
    for a in A:
        if any(Path(a.r, a.edges[:i]) in Bset for i in range(len(a.edges) + 1)):
            continue
        n = len(a.edges)
        i = bisect.bisect_left(keys, (a.r, a.edges))
        inner = []
        while i < len(keys) and keys[i][0] == a.r and keys[i][1][:n] == a.edges:
            inner.append(Bs[i])
            i += 1
        out.extend(_carve(G, a, inner) if inner else [a])
    return normalize(G, out)


def union(G: KGraph, A, B) -> tuple:
    return normalize(G, list(A) + list(difference(G, B, A)))


def disjoint(G: KGraph, A, B) -> bool:
    """Both lists are assumed internally disjoint."""
    try:
        normalize(G, list(A) + list(B))
    except K0Error:
        return False
    return len(set(A) & set(B)) == 0 or not (A and B)


def class_vector(G: KGraph, O) -> list[int]:
    v = [0] * G.nv
    for mu in O:
        v[G.s_of(mu)] += 1
    return v


def fmt_open(G: KGraph, O) -> str:
    return " ⊔ ".join(f"Z({G.fmt(p)})" for p in O) if O else "∅"


# ----------------------------------------------------------------- loops


def first_return_loops(G: KGraph, w: int, count: int = 2, max_len: int | None = None) -> list[Path]:
    """The first ``count`` loops at ``w`` that do not pass ``w`` in between,
    ordered by (length, edge ids).  Two distinct ones never extend each other."""
    max_len = max_len if max_len is not None else G.ne * G.nv + 1
    into = [[e for e in range(G.ne) if G.rng[e] == u] for u in range(G.nv)]
    found = []
    # at each length keep the `count` smallest partial paths per vertex
    frontier = {w: [()]}
    for _ in range(max_len):
        nxt: dict = {}
        for u, seqs in frontier.items():
            for seq in seqs:
                for e in into[u]:
                    nxt.setdefault(G.src[e], []).append(seq + (e,))
        if w in nxt:
            found.extend(Path(w, s) for s in sorted(nxt.pop(w))[: count - len(found)])
            if len(found) >= count:
                return found
        frontier = {u: sorted(seqs)[:count] for u, seqs in nxt.items()}
        if not frontier:
            break
    return found


@dataclass
class LoopsReport:
    ok: bool
    loops: dict                    # vertex -> the two loops (formatted)
    failing: str | None = None


def independent_loops_check(G: KGraph) -> LoopsReport:
    loops = {}
    for w in range(G.nv):
        lw = first_return_loops(G, w)
        if len(lw) < 2:
            return LoopsReport(False, loops, G.vertices[w])
        loops[G.vertices[w]] = [G.fmt(p) for p in lw]
    return LoopsReport(True, loops)


# ------------------------------------------------------------- witnesses


@dataclass
class BisectionWitness:
    pieces: tuple                  # Bisection(lam, mu): Z(mu) -> Z(lam)
    role: str

    def source(self):
        return tuple(b.mu for b in self.pieces)

    def range(self):
        return tuple(b.lam for b in self.pieces)

    def to_json(self, G: KGraph) -> dict:
        return {"role": self.role, "pieces": [[G.fmt(b.lam), G.fmt(b.mu)] for b in self.pieces]}


def apply_bisection(G: KGraph, U: BisectionWitness, S) -> tuple:
    """``r(U S)`` for ``S`` inside ``s(U)``: ``Z(lam, mu) Z(mu alpha) = Z(lam alpha)``."""
    out = []
    for sigma in S:
        hit = False
        for b in U.pieces:
            rho = _meet(sigma, b.mu)
            if rho is not None:
                hit = True
                alpha = rho.edges[len(b.mu.edges):]
                out.append(Path(b.lam.r, b.lam.edges + alpha))
        if not hit:
            raise K0Error("set is not inside the source of the bisection")
    return normalize(G, out)


def check_bisection(G: KGraph, U: BisectionWitness) -> bool:
    """Sources pairwise disjoint, ranges pairwise disjoint, each piece a valid ``Z(lam, mu)``."""
    src, rng = U.source(), U.range()
    try:
        normalize(G, src)
        normalize(G, rng)
    except K0Error:
        return False
    return all(G.s_of(b.lam) == G.s_of(b.mu) for b in U.pieces) and len(set(src)) == len(src)


@dataclass
class Paradox:
    O: tuple
    U1: BisectionWitness
    U2: BisectionWitness


def paradoxical_witness(G: KGraph, O) -> Paradox:
    """``U_1, U_2`` with source ``O`` and disjoint ranges inside ``O``."""
    O = normalize(G, O)
    if not O:
        raise K0Error("paradoxical comparison needs a nonempty set")
    loops = {}
    cache = G.__dict__.setdefault("_return_loops", {})
    for w in sorted({G.s_of(mu) for mu in O}):
        if w not in cache:
            cache[w] = first_return_loops(G, w)
        lw = cache[w]
        if len(lw) < 2:
            raise K0Error(f"vertex {G.vertices[w]} lacks two independent loops", G.vertices[w])
        loops[w] = lw
    U1 = BisectionWitness(tuple(Bisection(G.concat(mu, loops[G.s_of(mu)][0]), mu) for mu in O), "paradoxical-left")
    U2 = BisectionWitness(tuple(Bisection(G.concat(mu, loops[G.s_of(mu)][1]), mu) for mu in O), "paradoxical-right")
    r1, r2 = U1.range(), U2.range()
    inside = all(b.lam.r == b.mu.r and b.lam.edges[: len(b.mu.edges)] == b.mu.edges
                 for U in (U1, U2) for b in U.pieces)
    if not (inside and check_bisection(G, U1) and check_bisection(G, U2) and disjoint(G, r1, r2)):
        raise AssertionError("paradoxical witness failed its own check")
    return Paradox(O, U1, U2)


@dataclass
class Step:
    op: str                        # "union" | "add" | "neg"
    inputs: list
    result: tuple
    witnesses: list = field(default_factory=list)

    def to_json(self, G: KGraph) -> dict:
        return {"op": self.op, "inputs": [[G.fmt(p) for p in O] for O in self.inputs],
                "result": [G.fmt(p) for p in self.result],
                "witnesses": [w.to_json(G) for w in self.witnesses]}


def step_from_json(G: KGraph, doc: dict) -> Step:
    """Inverse of :meth:`Step.to_json`; the sets are taken as written, not normalised."""
    def opens(xs):
        return tuple(G.parse_path(t) for t in xs)

    wits = [BisectionWitness(tuple(Bisection(G.parse_path(a), G.parse_path(b)) for a, b in w["pieces"]), w["role"])
            for w in doc.get("witnesses", [])]
    return Step(doc["op"], [opens(O) for O in doc["inputs"]], opens(doc["result"]), wits)


def add_witness(G: KGraph, O1, O2) -> tuple[tuple, Step]:
    """A compact open with class ``[O1] + [O2]``."""
    O1, O2 = normalize(G, O1), normalize(G, O2)
    if not O1 or not O2 or disjoint(G, O1, O2):
        res = coarsen(G, list(O1) + list(O2))
        return res, Step("union", [O1, O2], res)
    par = paradoxical_witness(G, union(G, O1, O2))
    res = coarsen(G, list(apply_bisection(G, par.U1, O1)) + list(apply_bisection(G, par.U2, O2)))
    return res, Step("add", [O1, O2], res, [par.U1, par.U2])


def neg_witness(G: KGraph, O) -> tuple[tuple, Step]:
    """``O \\ (r(U_1) ∪ r(U_2))``, whose class is ``-[O]``."""
    O = normalize(G, O)
    if not O:
        return (), Step("neg", [O], ())
    par = paradoxical_witness(G, O)
    res = coarsen(G, difference(G, O, list(par.U1.range()) + list(par.U2.range())))
    return res, Step("neg", [O], res, [par.U1, par.U2])


def replay_step(G: KGraph, step: Step) -> list[str]:
    """Re-derive a step from its witnesses; returns failures."""
    bad = []
    if step.op == "union":
        if not disjoint(G, *step.inputs) and all(step.inputs):
            bad.append("union of overlapping sets")
        if coarsen(G, [p for O in step.inputs for p in O]) != tuple(step.result):
            bad.append("union result differs")
        return bad
    U1, U2 = step.witnesses
    for U in (U1, U2):
        if not check_bisection(G, U):
            bad.append(f"{U.role} is not a bisection")
    if not disjoint(G, U1.range(), U2.range()):
        bad.append("ranges overlap")
    if step.op == "add":
        O1, O2 = step.inputs
        src = union(G, O1, O2)
        got = coarsen(G, list(apply_bisection(G, U1, O1)) + list(apply_bisection(G, U2, O2)))
    else:
        (src,) = step.inputs
        got = coarsen(G, difference(G, src, list(U1.range()) + list(U2.range())))
    if normalize(G, U1.source()) != normalize(G, src) or normalize(G, U2.source()) != normalize(G, src):
        bad.append("witness source is not the input set")
    if difference(G, U1.range(), src) or difference(G, U2.range(), src):
        bad.append("witness range leaves the input set")
    if got != tuple(step.result):
        bad.append("result differs")
    return bad


# ------------------------------------------------------------ realisation


@dataclass
class Realization:
    target: tuple
    vector: list
    Y: tuple
    steps: list
    budget: int
    used: int

    def to_json(self, G: KGraph) -> dict:
        return {"target": list(self.target), "vector": self.vector, "Y": [G.fmt(p) for p in self.Y],
                "budget": self.budget, "steps_used": self.used, "steps": [s.to_json(G) for s in self.steps]}


def vector_table(K: K0Group, n: int, radius: int = 3, keep: int = 3) -> dict:
    """class -> up to ``keep`` nonzero vectors in ``[-radius, radius]^n``,
    preferring small norm, then few negative entries, then large early entries."""
    cache = K.__dict__.setdefault("_tables", {})
    if (n, radius, keep) in cache:
        return cache[(n, radius, keep)]
    X = np.array(list(itertools.product(range(-radius, radius + 1), repeat=n)), dtype=np.int64)
    X = X[np.abs(X).sum(axis=1) > 0]
    keys = [-X[:, j] for j in range(n - 1, -1, -1)] + [(X < 0).sum(axis=1), np.abs(X).sum(axis=1)]
    X = X[np.lexsort(keys)]
    W = np.array([[int(K.snf.U[i, j]) for j in range(n)] for i in K.rows], dtype=np.int64).reshape(len(K.rows), n)
    Y = X @ W.T
    for c, d in enumerate(K.factors):
        if d:
            Y[:, c] %= d
    table: dict = {}
    for x, y in zip(X.tolist(), Y.tolist()):
        lst = table.setdefault(tuple(y), [])
        if len(lst) < keep:
            lst.append(tuple(x))
    cache[(n, radius, keep)] = table
    return table


def realize_class(G: KGraph, target, budget: int | None = None, K: K0Group | None = None) -> Realization:
    """A nonempty compact open ``Y`` with ``[Y] = target``, folded from vertex cylinders.

    ``target`` is written as ``sum_v x_v [Z(v)]`` for a small vector ``x``;
    positive terms are added with add witnesses, negative ones first pass
    through a neg witness.  The step budget defaults to ``3 (|V| + |x|_1)``.
    """
    K = K or snf_oracle(G)
    target = tuple(int(t) for t in target)
    if len(target) != len(K.factors):
        raise K0Error(f"target needs {len(K.factors)} coordinates for {K.describe()}")
    target = K.add(target, K.zero())
    rep = G.__dict__.get("_loops_report") or independent_loops_check(G)
    G._loops_report = rep
    if not rep.ok:
        raise K0Error(f"vertex {rep.failing} lacks two independent loops", rep.failing)
    cands = list(vector_table(K, G.nv).get(target, []))

    def candidates():
        yield from cands
        fallback = tuple(K.vector_for(target))
        if any(fallback) and fallback not in cands:
            yield fallback

    last_cap = None
    for x in candidates():
        cap = budget if budget is not None else 3 * (G.nv + sum(abs(t) for t in x))
        need = sum(abs(t) for t in x) + sum(1 for t in x if t < 0)
        if need > cap:
            last_cap = cap
            continue
        steps, Y = [], ()
        for v, t in enumerate(x):
            piece = (G.vertex(v),)
            if t < 0:
                piece, st = neg_witness(G, piece)
                steps.append(st)
            for _ in range(abs(t)):
                Y, st = add_witness(G, Y, piece)
                steps.append(st)
        if Y and K.class_of_vector(class_vector(G, Y)) == target:
            return Realization(target, list(x), Y, steps, cap, len(steps))
    if last_cap is not None:
        raise K0Error(f"target {target} not reached within the step budget {last_cap}", {"budget": last_cap})
    raise K0Error(f"no nonempty set realises {target} from the candidate vectors")


# ---------------------------------------------------------- subgroup closure


@dataclass
class ClosureReport:
    realized: int
    target: int                   # group order, or the number of classes in the box
    equal: bool
    operations: int
    radius: int | None = None     # box radius on free coordinates (infinite groups)


def closure_from_vertices(G: KGraph, K: K0Group | None = None, radius: int = 2) -> ClosureReport:
    """Realise classes from vertex cylinders with add/neg witnesses and compare with the oracle.

    Every class of a finite oracle group is targeted; for an infinite one
    the targets are the classes whose free coordinates lie in
    ``[-radius, radius]``.  Each produced set is re-classified by the oracle.
    """
    K = K or snf_oracle(G)
    ranges = [range(-radius, radius + 1) if d == 0 else range(d) for d in K.factors]
    targets = list(itertools.product(*ranges))
    got, ops = set(), 0
    for t in targets:
        try:
            R = realize_class(G, t, K=K)
        except K0Error:
            continue
        ops += R.used
        got.add(K.class_of_vector(class_vector(G, R.Y)))
    ok = got == set(targets)
    return ClosureReport(len(got), len(targets), ok, ops, None if K.is_finite else radius)


def box_realization(G: KGraph, K: K0Group, radius: int = 2) -> int:
    """Realise every class whose free coordinates lie in ``[-radius, radius]``; returns the count."""
    ranges = [range(-radius, radius + 1) if d == 0 else range(d) for d in K.factors]
    n = 0
    for t in itertools.product(*ranges):
        R = realize_class(G, t, K=K)
        if K.class_of_vector(class_vector(G, R.Y)) != tuple(t):
            raise AssertionError(f"realised set has the wrong class for {t}")
        n += 1
    return n


def graph_from_matrix(A) -> KGraph:
    """``A[v, w]`` parallel edges ``w -> v`` named ``v_w_i``."""
    A = np.asarray(A)
    n = A.shape[0]
    verts = [f"v{i}" for i in range(n)]
    edges = [(f"e{v}{w}{i}", verts[w], verts[v]) for v in range(n) for w in range(n) for i in range(int(A[v, w]))]
    return KGraph(verts, edges)


def small_graph_matrices(max_vertices: int = 3, max_in: int = 4):
    """Adjacency matrices up to vertex relabelling, every row sum in ``1..max_in``."""
    for n in range(1, max_vertices + 1):
        rows = [r for r in itertools.product(range(max_in + 1), repeat=n) if 1 <= sum(r) <= max_in]
        seen = set()
        perms = list(itertools.permutations(range(n)))
        for choice in itertools.product(rows, repeat=n):
            A = np.array(choice, dtype=np.int64)
            key = min(A[np.ix_(p, p)].tobytes() for p in perms)
            if key in seen:
                continue
            seen.add(key)
            yield A
