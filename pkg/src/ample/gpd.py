"""Finite discrete groupoids stored as dense tables.

Arrows are ids ``0..n-1``.  Units are the arrows ``u`` with ``s[u] == u``;
``s`` and ``r`` send an arrow to the id of its source/range unit.
``comp[g, h]`` is the id of ``gh`` when ``s[g] == r[h]`` and ``-1``
otherwise.  Constructions elsewhere in the package build groupoids through
:meth:`FiniteGroupoid.from_keys`, which takes hashable arrow keys and the
structure maps on keys.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Hashable, Sequence

import numpy as np

from . import kernels


class GroupoidError(ValueError):
    """A groupoid axiom failed; ``axiom`` names it and ``witness`` holds arrow ids."""

    def __init__(self, axiom: str, witness: tuple, message: str):
        super().__init__(message)
        self.axiom = axiom
        self.witness = tuple(int(w) for w in witness)


@dataclass(eq=False)
class FiniteGroupoid:
    s: np.ndarray
    r: np.ndarray
    inv: np.ndarray
    comp: np.ndarray
    labels: tuple[str, ...] | None = None
    keys: tuple | None = None
    factors: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("s", "r", "inv", "comp"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.int64)
            arr.setflags(write=False)
            setattr(self, name, arr)
        self._index = {k: i for i, k in enumerate(self.keys)} if self.keys is not None else None

    # -- basic views
    @property
    def n(self) -> int:
        return int(self.s.shape[0])

    @property
    def units(self) -> np.ndarray:
        return np.nonzero(self.s == np.arange(self.n))[0]

    def is_unit(self, g) -> bool:
        return int(self.s[g]) == int(g)

    def index(self, key: Hashable) -> int:
        if self._index is None:
            raise KeyError("groupoid has no arrow keys")
        return self._index[key]

    def label(self, g: int) -> str:
        if self.labels is not None:
            return self.labels[g]
        if self.keys is not None:
            return str(self.keys[g])
        return str(g)

    def mul(self, g: int, h: int) -> int:
        out = int(self.comp[g, h])
        if out < 0:
            raise GroupoidError("composable", (g, h), f"s({self.label(g)}) != r({self.label(h)})")
        return out

    def source_fiber(self, u: int) -> np.ndarray:
        return np.nonzero(self.s == u)[0]

    def range_fiber(self, u: int) -> np.ndarray:
        return np.nonzero(self.r == u)[0]

    def to_json(self) -> dict:
        d = {"s": self.s.tolist(), "r": self.r.tolist(), "inv": self.inv.tolist(),
             "comp": self.comp.tolist(), "units": self.units.tolist(), "arrows": list(range(self.n))}
        if self.labels is not None or self.keys is not None:
            d["labels"] = [self.label(g) for g in range(self.n)]
        return d

    @classmethod
    def from_keys(cls, keys: Sequence[Hashable], source: Callable, range_: Callable,
                  mul: Callable, inverse: Callable, label: Callable | None = None,
                  validate: bool = True) -> "FiniteGroupoid":
        """Tabulate a groupoid given on hashable keys.

        ``source``/``range_`` return the *key* of the unit arrow; ``mul(g, h)``
        is only called on composable pairs.
        """
        keys = tuple(keys)
        index = {k: i for i, k in enumerate(keys)}
        if len(index) != len(keys):
            raise ValueError("duplicate arrow keys")
        n = len(keys)
        try:
            s = np.array([index[source(k)] for k in keys], dtype=np.int64)
            r = np.array([index[range_(k)] for k in keys], dtype=np.int64)
            inv = np.array([index[inverse(k)] for k in keys], dtype=np.int64)
        except KeyError as exc:
            raise GroupoidError("closure", (), f"structure map leaves the arrow set: {exc}") from None
        comp = np.full((n, n), -1, dtype=np.int64)
        by_range: dict[int, list[int]] = {}
        for h in range(n):
            by_range.setdefault(int(r[h]), []).append(h)
        for g in range(n):
            for h in by_range.get(int(s[g]), ()):
                key = mul(keys[g], keys[h])
                if key not in index:
                    raise GroupoidError("closure", (g, h), f"product {key!r} is not an arrow")
                comp[g, h] = index[key]
        labels = tuple(label(k) for k in keys) if label is not None else None
        G = cls(s, r, inv, comp, labels=labels, keys=keys)
        if validate:
            check_groupoid(G)
        return G


def check_groupoid(G: FiniteGroupoid, *, use_numba=None) -> FiniteGroupoid:
    """Raise :class:`GroupoidError` naming the first violated axiom."""
    n = G.n
    if G.comp.shape != (n, n) or G.r.shape != (n,) or G.inv.shape != (n,):
        raise GroupoidError("shape", (), "s, r, inv must have length n and comp shape (n, n)")
    for name in ("s", "r", "inv"):
        arr = getattr(G, name)
        bad = np.nonzero((arr < 0) | (arr >= n))[0]
        if bad.size:
            raise GroupoidError("range", (bad[0],), f"{name}[{bad[0]}] out of range")
    ids = np.arange(n)
    for name in ("s", "r"):
        u = getattr(G, name)
        bad = np.nonzero((G.s[u] != u) | (G.r[u] != u))[0]
        if bad.size:
            g = bad[0]
            raise GroupoidError("unit", (g,), f"{name}({g}) = {u[g]} is not a unit arrow")
    if n and (G.comp.min() < -1 or G.comp.max() >= n):
        raise GroupoidError("range", (), "comp entries out of range")
    g, h, code = kernels.first_domain_violation(G.comp, G.s, G.r, use_numba=use_numba)
    if code:
        what = {1: "composable pair has no product",
                2: "product has wrong source or range",
                3: "product defined on a non-composable pair"}[code]
        raise GroupoidError("domain", (g, h), f"composition domain mismatch at ({g}, {h}): {what}")
    g, code = kernels.first_inverse_violation(G.comp, G.s, G.r, G.inv, use_numba=use_numba)
    if code:
        what = {1: "inv is not an involution", 2: "g g^-1 is not r(g)",
                3: "g^-1 g is not s(g)", 4: "unit is not neutral"}[code]
        raise GroupoidError("inverse", (g,), f"inverse axiom fails at {g}: {what}")
    g, h, k = kernels.first_assoc_violation(G.comp, use_numba=use_numba)
    if g >= 0:
        raise GroupoidError("associativity", (g, h, k), f"(g*h)*k != g*(h*k) at (g, h, k) = ({g}, {h}, {k})")
    return G


def validate_groupoid(data: dict) -> FiniteGroupoid:
    """Build from a ``groupoid`` JSON document and check every axiom."""
    n = len(data["s"])
    comp = np.asarray(data["comp"], dtype=np.int64).reshape(n, n) if n else np.zeros((0, 0), np.int64)
    G = FiniteGroupoid(np.asarray(data["s"]), np.asarray(data["r"]), np.asarray(data["inv"]), comp,
                       labels=tuple(data["labels"]) if data.get("labels") else None)
    check_groupoid(G)
    if "units" in data and sorted(data["units"]) != G.units.tolist():
        raise GroupoidError("unit", (), f"declared units {sorted(data['units'])} != {G.units.tolist()}")
    return G


# ------------------------------------------------------------ constructions


def pair_groupoid(m: int) -> FiniteGroupoid:
    """Pair groupoid on ``m`` points; the key ``(x, y)`` is the arrow ``y -> x``.

    Units come first, then the other arrows sorted by (source, range).
    """
    keys = [(x, x) for x in range(m)] + [(x, y) for y in range(m) for x in range(m) if x != y]
    return FiniteGroupoid.from_keys(keys, lambda k: (k[1], k[1]), lambda k: (k[0], k[0]),
                                    lambda a, b: (a[0], b[1]), lambda k: (k[1], k[0]),
                                    label=lambda k: f"{k[1]}->{k[0]}")


def group_as_groupoid(G) -> FiniteGroupoid:
    """A finite group (:class:`ample.grp.FiniteGroup`) with one unit."""
    return FiniteGroupoid(np.full(G.n, G.e), np.full(G.n, G.e), np.array([G.inv(x) for x in range(G.n)]),
                          G.table.copy(), keys=tuple(range(G.n)))


def empty_groupoid() -> FiniteGroupoid:
    z = np.zeros(0, dtype=np.int64)
    return FiniteGroupoid(z, z, z, np.zeros((0, 0), dtype=np.int64), keys=())


def reduction(G: FiniteGroupoid, K) -> tuple[FiniteGroupoid, np.ndarray]:
    """``G(K)``: arrows with source and range in ``K``; also returns the kept ids."""
    K = np.asarray(sorted(set(int(u) for u in K)), dtype=np.int64)
    if K.size and (K.min() < 0 or K.max() >= G.n or np.any(G.s[K] != K)):
        bad = [int(u) for u in K if not (0 <= u < G.n and G.s[u] == u)]
        raise ValueError(f"not unit ids: {bad}")
    inK = np.zeros(G.n, dtype=bool)
    inK[K] = True
    keep = np.nonzero(inK[G.s] & inK[G.r])[0]
    new = np.full(G.n, -1, dtype=np.int64)
    new[keep] = np.arange(keep.size)
    sub = G.comp[np.ix_(keep, keep)]
    comp = np.where(sub >= 0, new[np.maximum(sub, 0)], -1)
    H = FiniteGroupoid(new[G.s[keep]], new[G.r[keep]], new[G.inv[keep]], comp,
                       labels=tuple(G.label(g) for g in keep),
                       keys=tuple(G.keys[g] for g in keep) if G.keys is not None else None)
    return H, keep


def product_groupoid(G: FiniteGroupoid, H: FiniteGroupoid) -> FiniteGroupoid:
    """``G x H``; the arrow ``(g, h)`` has id ``g * H.n + h``."""
    m = H.n
    s = (G.s[:, None] * m + H.s[None, :]).ravel()
    r = (G.r[:, None] * m + H.r[None, :]).ravel()
    inv = (G.inv[:, None] * m + H.inv[None, :]).ravel()
    cg = G.comp[:, None, :, None]
    ch = H.comp[None, :, None, :]
    comp = np.where((cg >= 0) & (ch >= 0), cg * m + ch, -1).reshape(G.n * m, G.n * m)
    return FiniteGroupoid(s, r, inv, comp, factors=(G, H))


def pair_ids(G: FiniteGroupoid, H: FiniteGroupoid, a, b) -> np.ndarray:
    """Ids in ``product_groupoid(G, H)`` of the pairs ``(a[i], b[i])``."""
    return np.asarray(a, dtype=np.int64) * H.n + np.asarray(b, dtype=np.int64)


# ----------------------------------------------------------- subset queries


def _ids(G: FiniteGroupoid, A) -> np.ndarray:
    A = np.unique(np.asarray(list(A) if not isinstance(A, np.ndarray) else A, dtype=np.int64))
    if A.size and (A.min() < 0 or A.max() >= G.n):
        raise ValueError(f"arrow ids out of range 0..{G.n - 1}")
    return A


def is_bisection(G: FiniteGroupoid, A) -> bool:
    A = _ids(G, A)
    return np.unique(G.s[A]).size == A.size and np.unique(G.r[A]).size == A.size


def fib_count(G: FiniteGroupoid, A) -> int:
    """``sup_x |A ∩ G_x| + |A ∩ G^x|``."""
    return kernels.fib_count(G.s, G.r, _ids(G, A), G.n)


def is_subgroupoid(G: FiniteGroupoid, A) -> bool:
    return subgroupoid_witness(G, A) is None


def subgroupoid_witness(G: FiniteGroupoid, A) -> tuple | None:
    """``None`` if ``A`` is a subgroupoid, else ``(reason, arrow ids...)``."""
    A = _ids(G, A)
    member = np.zeros(G.n, dtype=bool)
    member[A] = True
    for g in A:
        if not member[G.inv[g]]:
            return ("inverse", int(g))
        if not (member[G.s[g]] and member[G.r[g]]):
            return ("unit", int(g))
    sub = G.comp[np.ix_(A, A)]
    bad = np.argwhere((sub >= 0) & ~member[np.maximum(sub, 0)])
    if bad.size:
        i, j = bad[0]
        return ("product", int(A[i]), int(A[j]))
    return None


# -- subsets of G x G kept as pair arrays (the product table is never built)


def pair_fib_count(G: FiniteGroupoid, a, b) -> int:
    """``#_fib`` of ``{(a[i], b[i])}`` inside ``G x G``."""
    a, b = _pairs(G, a, b)
    return kernels.pair_fib_count(G.s, G.r, a, b, G.n)


def pair_subgroupoid_witness(G: FiniteGroupoid, a, b) -> tuple | None:
    a, b = _pairs(G, a, b)
    code, p, q = kernels.pair_subgroupoid_violation(G.comp, G.s, G.r, G.inv, a, b)
    if code == 0:
        return None
    reason = {1: "inverse", 2: "unit", 3: "product"}[code]
    if code == 3:
        return (reason, (int(a[p]), int(b[p])), (int(a[q]), int(b[q])))
    return (reason, (int(a[p]), int(b[p])))


def diagonal_witness(G: FiniteGroupoid, a, b) -> int | None:
    """First arrow ``g`` with ``(g, g)`` missing from the pair set, else ``None``."""
    a, b = _pairs(G, a, b)
    have = np.zeros(G.n, dtype=bool)
    have[a[a == b]] = True
    miss = np.nonzero(~have)[0]
    return int(miss[0]) if miss.size else None


def _pairs(G, a, b):
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.shape != b.shape:
        raise ValueError("pair arrays differ in length")
    if a.size and (min(a.min(), b.min()) < 0 or max(a.max(), b.max()) >= G.n):
        raise ValueError("pair ids out of range")
    if a.size:
        codes = np.unique(a * G.n + b)
        a, b = codes // G.n, codes % G.n
    return a, b


def restrict_pairs(G: FiniteGroupoid, a, b, left, right):
    """Pairs with first entry in ``left`` and second in ``right``."""
    a, b = _pairs(G, a, b)
    lm = np.zeros(G.n, dtype=bool)
    rm = np.zeros(G.n, dtype=bool)
    lm[_ids(G, left)] = True
    rm[_ids(G, right)] = True
    keep = lm[a] & rm[b]
    return a[keep], b[keep]


# ---------------------------------------------------------- positive type


@dataclass
class PositiveTypeFn:
    domain: FiniteGroupoid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != (self.domain.n,):
            raise ValueError(f"need one value per arrow ({self.domain.n}), got {self.values.shape}")


@dataclass
class PositivityResult:
    positive: bool
    unit: int | None = None
    min_eigenvalue: float | None = None
    gram: np.ndarray | None = None
    fiber: np.ndarray | None = None


def gram_block(phi: PositiveTypeFn, u: int) -> tuple[np.ndarray, np.ndarray]:
    """``(phi(g_i g_j^-1))_{ij}`` over the source fibre ``G_u``."""
    G = phi.domain
    fib = G.source_fiber(u)
    prod = G.comp[fib[:, None], G.inv[fib][None, :]]
    return phi.values[prod], fib


def positive_type_check(phi: PositiveTypeFn, tol: float = 1e-9) -> PositivityResult:
    if not np.all(np.isfinite(phi.values)):
        raise ValueError("positive-type function has non-finite values")
    for u in phi.domain.units:
        M, fib = gram_block(phi, int(u))
        scale = max(1.0, float(np.abs(M).sum(axis=1).max()))
        if not np.allclose(M, M.conj().T, rtol=0, atol=tol * scale):
            return PositivityResult(False, int(u), None, M, fib)
        lo = float(np.linalg.eigvalsh((M + M.conj().T) / 2).min())
        if lo < -tol * scale:
            return PositivityResult(False, int(u), lo, M, fib)
    return PositivityResult(True)


def check_homomorphism(G: FiniteGroupoid, H: FiniteGroupoid, h) -> tuple | None:
    """``None`` when ``h`` (arrow map ``G -> H``) respects s, r and products."""
    h = np.asarray(h, dtype=np.int64)
    if h.shape != (G.n,) or (h.size and (h.min() < 0 or h.max() >= H.n)):
        return ("shape",)
    for name in ("s", "r"):
        bad = np.nonzero(h[getattr(G, name)] != getattr(H, name)[h])[0]
        if bad.size:
            return (name, int(bad[0]))
    gi, hi = np.nonzero(G.comp >= 0)
    lhs = h[G.comp[gi, hi]]
    rhs = H.comp[h[gi], h[hi]]
    bad = np.nonzero(lhs != rhs)[0]
    if bad.size:
        return ("product", int(gi[bad[0]]), int(hi[bad[0]]))
    return None


def pullback_positive_type(phi: PositiveTypeFn, G: FiniteGroupoid, h) -> PositiveTypeFn:
    """``phi o h`` for a groupoid homomorphism ``h: G -> phi.domain``."""
    bad = check_homomorphism(G, phi.domain, h)
    if bad is not None:
        raise GroupoidError("homomorphism", tuple(x for x in bad[1:]), f"map is not a homomorphism: {bad}")
    return PositiveTypeFn(G, phi.values[np.asarray(h, dtype=np.int64)])


def gram_function(G: FiniteGroupoid, vectors) -> PositiveTypeFn:
    """``phi(g) = <v_{r(g)}, v_{s(g)}>``; ``vectors`` is indexed by unit id."""
    V = np.asarray(vectors, dtype=np.complex128)
    return PositiveTypeFn(G, np.einsum("ij,ij->i", V[G.r], V[G.s].conj()))


def convolution_function(G: FiniteGroupoid, f) -> PositiveTypeFn:
    """``phi(g) = sum_{k in G^{r(g)}} f(k) conj(f(g^-1 k))``, i.e. ``f * f^*``."""
    f = np.asarray(f, dtype=np.complex128)
    vals = np.zeros(G.n, dtype=np.complex128)
    for g in range(G.n):
        ks = G.range_fiber(int(G.r[g]))
        vals[g] = np.sum(f[ks] * np.conj(f[G.comp[G.inv[g], ks]]))
    return PositiveTypeFn(G, vals)


def random_positive_type(G: FiniteGroupoid, rng: np.random.Generator, kind: str = "gram", dim: int = 3):
    if kind == "gram":
        V = rng.normal(size=(G.n, dim)) + 1j * rng.normal(size=(G.n, dim))
        return gram_function(G, V)
    if kind == "convolution":
        return convolution_function(G, rng.normal(size=G.n) + 1j * rng.normal(size=G.n))
    raise ValueError(f"unknown kind {kind!r}")


def proper_support_profile(phi: PositiveTypeFn, K, C, tol: float = 0.0) -> tuple[int, int]:
    """Sizes of ``supp(phi) ∩ (G(K) x C)`` and ``supp(phi) ∩ (C x G(K))``.

    ``phi.domain`` must come from :func:`product_groupoid` of ``G`` with itself.
    """
    P = phi.domain
    if P.factors is None:
        raise ValueError("profile needs a function on a product groupoid")
    G, H = P.factors
    _, GK = reduction(G, K)
    C = _ids(G, C)
    supp = np.abs(phi.values) > tol
    left = supp[pair_ids(G, H, np.repeat(GK, C.size), np.tile(C, GK.size))].sum()
    right = supp[pair_ids(G, H, np.repeat(C, GK.size), np.tile(GK, C.size))].sum()
    return int(left), int(right)
