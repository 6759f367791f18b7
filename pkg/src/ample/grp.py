"""Groups with a solvable word problem, words, finite quotient chains, balls.

Group elements are handled through their canonical forms, which are plain
hashable Python values:

* free groups: a tuple of signed letters ``±(i + 1)`` with no cancelling
  neighbours,
* finitely generated abelian groups: a tuple of exponents (reduced modulo the
  torsion orders; a modulus of 0 means a free ``Z`` factor),
* finite groups: an element id into the multiplication table.

:class:`Word` is the user-facing letter sequence ``((gen, ±1), ...)`` and
reduces to one of the above.
"""

from __future__ import annotations

import itertools
import re
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class GroupError(ValueError):
    pass


class ChainError(GroupError):
    pass


def _default_labels(n: int, first: str = "a") -> tuple[str, ...]:
    if n <= 26:
        return tuple(chr(ord(first) + i) for i in range(n))
    return tuple(f"x{i}" for i in range(n))


_TOKEN = re.compile(r"^([A-Za-z_][A-Za-z0-9_']*)(?:\^(-?\d+))?$")


class GroupHandle:
    """Common interface of the four group kinds."""

    kind: str
    labels: tuple[str, ...]

    @property
    def ngens(self) -> int:
        return len(self.labels)

    # -- element arithmetic; subclasses implement
    def identity(self):
        raise NotImplementedError

    def mul(self, x, y):
        raise NotImplementedError

    def inv(self, x):
        raise NotImplementedError

    def gen(self, i: int, sign: int = 1):
        raise NotImplementedError

    def letters(self, x) -> tuple[tuple[int, int], ...]:
        """Canonical letter sequence spelling ``x``."""
        raise NotImplementedError

    # -- shared helpers
    def from_letters(self, letters: Iterable[tuple[int, int]]):
        out = self.identity()
        for i, sign in letters:
            if not 0 <= i < self.ngens:
                raise GroupError(f"generator index {i} out of range for {self!r}")
            if sign not in (1, -1):
                raise GroupError(f"letter sign must be +1 or -1, got {sign}")
            out = self.mul(out, self.gen(i, sign))
        return out

    def prod(self, *xs):
        out = self.identity()
        for x in xs:
            out = self.mul(out, x)
        return out

    def power(self, x, k: int):
        base = x if k >= 0 else self.inv(x)
        out = self.identity()
        for _ in range(abs(k)):
            out = self.mul(out, base)
        return out

    def is_identity(self, x) -> bool:
        return x == self.identity()

    def key(self, x):
        """Length-lexicographic sort key (by generator index, ``+`` before ``-``)."""
        lt = self.letters(x)
        return (len(lt), tuple((i, 0 if e > 0 else 1) for i, e in lt))

    def sorted(self, xs):
        return sorted(xs, key=self.key)

    def format(self, x) -> str:
        lt = self.letters(x)
        if not lt:
            return "1"
        parts = []
        for (i, e), grp in itertools.groupby(lt):
            k = len(list(grp)) * e
            parts.append(self.labels[i] if k == 1 else f"{self.labels[i]}^{k}")
        return " ".join(parts)

    def parse(self, text):
        """Parse ``"a b^-1 a^2"``; ``"1"``, ``"e"`` and ``""`` mean the identity."""
        if isinstance(text, (list, tuple)):
            return self.from_letters((int(i), int(e)) for i, e in text)
        text = str(text).replace("*", " ").strip()
        if text in ("", "1", "e", "id"):
            return self.identity()
        out = self.identity()
        for tok in text.split():
            m = _TOKEN.match(tok)
            if not m or m.group(1) not in self.labels:
                raise GroupError(f"cannot parse token {tok!r} over labels {self.labels}")
            i = self.labels.index(m.group(1))
            k = int(m.group(2)) if m.group(2) is not None else 1
            out = self.mul(out, self.power(self.gen(i), k))
        return out

    def word(self, text) -> "Word":
        return Word(tuple(self.letters(self.parse(text))), self)


class FreeGroup(GroupHandle):
    kind = "free"

    def __init__(self, rank: int, labels: Sequence[str] | None = None):
        if rank < 0:
            raise GroupError("rank must be >= 0")
        self.rank = rank
        self.labels = tuple(labels) if labels is not None else _default_labels(rank)
        _check_labels(self.labels, rank)

    def __repr__(self):
        return f"FreeGroup({self.rank}, labels={list(self.labels)})"

    def __eq__(self, other):
        return isinstance(other, FreeGroup) and other.labels == self.labels

    def __hash__(self):
        return hash(("free", self.labels))

    def identity(self):
        return ()

    def gen(self, i, sign=1):
        return ((i + 1) * sign,)

    def mul(self, x, y):
        out = list(x)
        for c in y:
            if out and out[-1] == -c:
                out.pop()
            else:
                out.append(c)
        return tuple(out)

    def inv(self, x):
        return tuple(-c for c in reversed(x))

    def letters(self, x):
        return tuple((abs(c) - 1, 1 if c > 0 else -1) for c in x)

    def from_letters(self, letters):
        out = []
        for i, sign in letters:
            if not 0 <= i < self.rank:
                raise GroupError(f"generator index {i} out of range for {self!r}")
            if sign not in (1, -1):
                raise GroupError(f"letter sign must be +1 or -1, got {sign}")
            c = (i + 1) * sign
            if out and out[-1] == -c:
                out.pop()
            else:
                out.append(c)
        return tuple(out)

    def length(self, x) -> int:
        return len(x)


class AbelianGroup(GroupHandle):
    """``Z/m_1 x ... x Z/m_r``; ``m_i = 0`` gives a free factor."""

    kind = "abelian"

    def __init__(self, moduli: Sequence[int], labels: Sequence[str] | None = None):
        self.moduli = tuple(int(m) for m in moduli)
        if any(m < 0 or m == 1 for m in self.moduli):
            raise GroupError(f"moduli must be 0 or >= 2, got {self.moduli}")
        self.labels = tuple(labels) if labels is not None else _default_labels(len(self.moduli))
        _check_labels(self.labels, len(self.moduli))

    @classmethod
    def free_abelian(cls, rank: int, labels=None):
        return cls((0,) * rank, labels)

    @property
    def is_finite(self) -> bool:
        return all(m > 0 for m in self.moduli)

    def order(self):
        return int(np.prod(self.moduli)) if self.is_finite else None

    def __repr__(self):
        return f"AbelianGroup({list(self.moduli)}, labels={list(self.labels)})"

    def __eq__(self, other):
        return isinstance(other, AbelianGroup) and (other.moduli, other.labels) == (self.moduli, self.labels)

    def __hash__(self):
        return hash(("abelian", self.moduli, self.labels))

    def _norm(self, v):
        return tuple(x % m if m else x for x, m in zip(v, self.moduli))

    def identity(self):
        return (0,) * len(self.moduli)

    def gen(self, i, sign=1):
        v = [0] * len(self.moduli)
        v[i] = sign
        return self._norm(v)

    def mul(self, x, y):
        return self._norm([a + b for a, b in zip(x, y)])

    def inv(self, x):
        return self._norm([-a for a in x])

    def letters(self, x):
        out = []
        for i, (a, m) in enumerate(zip(x, self.moduli)):
            if m and a > m // 2:
                a -= m
            out.extend([(i, 1 if a > 0 else -1)] * abs(a))
        return tuple(out)

    def parse(self, text):
        if isinstance(text, (list, tuple)) and all(isinstance(v, int) for v in text):
            if len(text) != len(self.moduli):
                raise GroupError(f"exponent vector {text} has wrong length")
            return self._norm(text)
        return super().parse(text)

    def elements(self):
        if not self.is_finite:
            raise GroupError("infinite group has no element list")
        return [tuple(v) for v in itertools.product(*(range(m) for m in self.moduli))]


class FiniteGroup(GroupHandle):
    """A group given by its multiplication table ``table[x, y] = x*y``."""

    kind = "finite"

    def __init__(self, table, gens: Sequence[int] | None = None, labels=None, names=None):
        t = np.asarray(table, dtype=np.int64)
        if t.ndim != 2 or t.shape[0] != t.shape[1] or t.shape[0] == 0:
            raise GroupError("multiplication table must be a non-empty square array")
        n = t.shape[0]
        if t.min() < 0 or t.max() >= n:
            raise GroupError("table entries out of range")
        ids = np.arange(n)
        units = [e for e in range(n) if np.array_equal(t[e], ids) and np.array_equal(t[:, e], ids)]
        if not units:
            raise GroupError("table has no two-sided identity")
        self.e = units[0]
        lhs = t[t[:, :, None], ids[None, None, :]]    # (xy)z
        rhs = t[ids[:, None, None], t[None, :, :]]     # x(yz)
        bad = np.argwhere(lhs != rhs)
        if bad.size:
            x, y, z = (int(v) for v in bad[0])
            raise GroupError(f"table not associative at ({x}, {y}, {z})")
        inv = np.full(n, -1, dtype=np.int64)
        for x in range(n):
            hits = np.nonzero(t[x] == self.e)[0]
            if hits.size != 1 or t[hits[0], x] != self.e:
                raise GroupError(f"element {x} has no two-sided inverse")
            inv[x] = hits[0]
        self.table = t
        self.table.setflags(write=False)
        self._inv = inv
        self.n = n
        self.gens = tuple(int(g) for g in gens) if gens is not None else tuple(x for x in range(n) if x != self.e)
        if any(not 0 <= g < n for g in self.gens):
            raise GroupError("generator id out of range")
        self.labels = tuple(labels) if labels is not None else tuple(f"g{g}" for g in self.gens)
        _check_labels(self.labels, len(self.gens))
        self.names = tuple(names) if names is not None else None
        self._words = None

    @classmethod
    def cyclic(cls, n: int, label: str = "t"):
        t = (np.arange(n)[:, None] + np.arange(n)[None, :]) % n
        return cls(t, gens=[1 % n] if n > 1 else [], labels=[label] if n > 1 else [],
                   names=[str(i) for i in range(n)])

    @classmethod
    def from_abelian(cls, moduli: Sequence[int], labels=None):
        """Table of ``Z/m_1 x ... x Z/m_r`` with mixed-radix ids (first factor most significant)."""
        moduli = tuple(int(m) for m in moduli)
        elems = list(itertools.product(*(range(m) for m in moduli)))
        index = {v: i for i, v in enumerate(elems)}
        n = len(elems)
        t = np.empty((n, n), dtype=np.int64)
        for i, x in enumerate(elems):
            for j, y in enumerate(elems):
                t[i, j] = index[tuple((a + b) % m for a, b, m in zip(x, y, moduli))]
        gens = [index[tuple(1 if k == i else 0 for k in range(len(moduli)))] for i in range(len(moduli))]
        names = ["(" + ",".join(map(str, v)) + ")" for v in elems] if len(moduli) != 1 else [str(v[0]) for v in elems]
        g = cls(t, gens=gens, labels=labels or _default_labels(len(moduli)), names=names)
        g.vectors = elems
        g.vector_index = index
        return g

    def __repr__(self):
        return f"FiniteGroup(order={self.n}, gens={list(self.gens)})"

    def __eq__(self, other):
        return (isinstance(other, FiniteGroup) and np.array_equal(other.table, self.table)
                and other.gens == self.gens)

    def __hash__(self):
        return hash(("finite", self.n, self.gens, self.table.tobytes()))

    def order(self):
        return self.n

    def identity(self):
        return self.e

    def gen(self, i, sign=1):
        g = self.gens[i]
        return g if sign > 0 else int(self._inv[g])

    def mul(self, x, y):
        return int(self.table[x, y])

    def inv(self, x):
        return int(self._inv[x])

    def elements(self):
        return list(range(self.n))

    def letters(self, x):
        if self._words is None:
            self._words = self._shortlex_words()
        w = self._words[x]
        if w is None:
            raise GroupError(f"element {x} is not in the subgroup generated by {self.gens}")
        return w

    def _shortlex_words(self):
        words = [None] * self.n
        words[self.e] = ()
        queue = deque([self.e])
        alphabet = [(i, s) for i in range(len(self.gens)) for s in (1, -1)]
        while queue:
            x = queue.popleft()
            for i, s in alphabet:
                y = self.mul(x, self.gen(i, s))
                if words[y] is None:
                    words[y] = words[x] + ((i, s),)
                    queue.append(y)
        return words

    def format(self, x):
        if self.names is not None:
            return self.names[x]
        return super().format(x)

    def parse(self, text):
        if isinstance(text, (int, np.integer)):
            if not 0 <= int(text) < self.n:
                raise GroupError(f"element id {text} out of range")
            return int(text)
        if self.names is not None and isinstance(text, str) and text in self.names:
            return self.names.index(text)
        return super().parse(text)

    def generated_subgroup(self, gens: Iterable[int]) -> set[int]:
        gens = list(gens)
        seen = {self.e}
        queue = deque([self.e])
        while queue:
            x = queue.popleft()
            for g in gens:
                y = self.mul(x, g)
                if y not in seen:
                    seen.add(y)
                    queue.append(y)
        return seen

    def element_order(self, x) -> int:
        k, y = 1, x
        while y != self.e:
            y = self.mul(y, x)
            k += 1
        return k


def _check_labels(labels, n):
    if len(labels) != n:
        raise GroupError(f"expected {n} labels, got {len(labels)}")
    if len(set(labels)) != len(labels):
        raise GroupError(f"generator labels must be distinct: {labels}")


@dataclass(frozen=True)
class Word:
    """A letter sequence ``((gen, ±1), ...)`` over ``owner``'s generators."""

    letters: tuple[tuple[int, int], ...]
    owner: GroupHandle = field(compare=False)

    @property
    def element(self):
        return self.owner.from_letters(self.letters)

    def reduce(self) -> "Word":
        return reduce_word(self)

    def __mul__(self, other: "Word") -> "Word":
        _same_owner(self, other)
        return Word(self.letters + other.letters, self.owner)

    def inverse(self) -> "Word":
        return Word(tuple((i, -e) for i, e in reversed(self.letters)), self.owner)

    def __str__(self):
        if not self.letters:
            return "1"
        return " ".join(self.owner.labels[i] + ("" if e > 0 else "^-1") for i, e in self.letters)


def _same_owner(u: Word, v: Word):
    if u.owner != v.owner:
        raise GroupError(f"words over different groups: {u.owner!r} vs {v.owner!r}")


def reduce_word(w: Word) -> Word:
    """Canonical spelling of ``w``; equal elements give identical letters."""
    g = w.owner
    return Word(tuple(g.letters(g.from_letters(w.letters))), g)


def equal_words(u: Word, v: Word) -> bool:
    _same_owner(u, v)
    return u.element == v.element


# ------------------------------------------------------------------- chains


@dataclass(frozen=True)
class ChainLevel:
    group: FiniteGroup
    gen_images: tuple[int, ...]
    factor_map: tuple[int, ...] | None = None   # Gamma_{k+1} -> Gamma_k


class QuotientChain:
    """Finite quotients ``Gamma -> Gamma_k`` with factor maps ``Gamma_{k+1} -> Gamma_k``.

    ``base`` is a free group or a finitely generated abelian group.  Whether
    the kernels intersect trivially cannot be decided at finite depth; it is
    carried as the ``faithful_assumed`` flag and never verified.
    """

    def __init__(self, base: GroupHandle, levels: Sequence[ChainLevel], *,
                 faithful_assumed: bool = True, name: str = "", validate: bool = True):
        if not isinstance(base, (FreeGroup, AbelianGroup)):
            raise ChainError("chain base must be a free or abelian group")
        if not levels:
            raise ChainError("chain needs at least one level")
        self.base = base
        self.levels = tuple(levels)
        self.faithful_assumed = faithful_assumed
        self.name = name
        if validate:
            self.validate()

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def group(self, k: int) -> FiniteGroup:
        self._check_level(k)
        return self.levels[k].group

    def _check_level(self, k):
        if not 0 <= k <= self.depth:
            raise ChainError(f"level {k} out of range 0..{self.depth}")

    def validate(self):
        for k, lev in enumerate(self.levels):
            if len(lev.gen_images) != self.base.ngens:
                raise ChainError(f"level {k}: expected {self.base.ngens} generator images")
            G = lev.group
            if G.generated_subgroup(lev.gen_images) != set(range(G.n)):
                raise ChainError(f"level {k}: generator images do not generate Gamma_{k}")
            if isinstance(self.base, AbelianGroup):
                for i, g in enumerate(lev.gen_images):
                    m = self.base.moduli[i]
                    if m and G.power(g, m) != G.e:
                        raise ChainError(f"level {k}: image of generator {i} has order not dividing {m}")
                for g, h in itertools.combinations(lev.gen_images, 2):
                    if G.mul(g, h) != G.mul(h, g):
                        raise ChainError(f"level {k}: generator images do not commute")
            if k < self.depth:
                if lev.factor_map is None:
                    raise ChainError(f"level {k}: missing factor map Gamma_{k + 1} -> Gamma_{k}")
                self._check_factor(k)
        self.check_coherence()

    def _check_factor(self, k):
        phi = self.levels[k].factor_map
        lo, hi = self.levels[k].group, self.levels[k + 1].group
        if len(phi) != hi.n or any(not 0 <= v < lo.n for v in phi):
            raise ChainError(f"factor map {k + 1}->{k} has wrong size or range")
        p = np.asarray(phi)
        if not np.array_equal(p[hi.table], lo.table[p[:, None], p[None, :]]):
            raise ChainError(f"factor map {k + 1}->{k} is not a homomorphism")
        if set(phi) != set(range(lo.n)):
            raise ChainError(f"factor map {k + 1}->{k} is not surjective")

    def check_coherence(self):
        """``q_k = phi_k o q_{k+1}`` on generators, for every level."""
        for k in range(self.depth):
            phi = self.levels[k].factor_map
            for i, (a, b) in enumerate(zip(self.levels[k].gen_images, self.levels[k + 1].gen_images)):
                if phi is None or phi[b] != a:
                    raise ChainError(
                        f"incoherent chain at level {k}: generator {self.base.labels[i]} maps to "
                        f"{a} in Gamma_{k} but phi_{k}(q_{k + 1}) gives {None if phi is None else phi[b]}")

    def image(self, k: int, x) -> int:
        """``pi_k`` applied to a canonical base element."""
        self._check_level(k)
        G, imgs = self.levels[k].group, self.levels[k].gen_images
        out = G.e
        for i, sign in self.base.letters(x):
            g = imgs[i] if sign > 0 else G.inv(imgs[i])
            out = G.mul(out, g)
        return out

    def factor(self, k: int, n: int, g: int) -> int:
        """``pi_{k,n}``: push an element of ``Gamma_n`` down to ``Gamma_k``."""
        return int(self.factor_array(k, n)[g])

    def factor_array(self, k: int, n: int) -> np.ndarray:
        """``pi_{k,n}`` as a lookup array over the ids of ``Gamma_n`` (cached)."""
        key = (k, n)
        cache = self.__dict__.setdefault("_factor_cache", {})
        if key not in cache:
            self._check_level(k)
            self._check_level(n)
            if k > n:
                raise ChainError(f"factor map needs k <= n, got {k} > {n}")
            arr = np.arange(self.levels[n].group.n)
            for j in range(n - 1, k - 1, -1):
                arr = np.asarray(self.levels[j].factor_map, dtype=np.int64)[arr]
            arr.setflags(write=False)
            cache[key] = arr
        return cache[key]

    def injective_on(self, n: int, elements: Iterable) -> tuple | None:
        """Return a colliding pair under ``pi_n`` or ``None``."""
        seen = {}
        for x in elements:
            y = self.image(n, x)
            if y in seen and seen[y] != x:
                return seen[y], x
            seen[y] = x
        return None

    def __repr__(self):
        sizes = [lev.group.n for lev in self.levels]
        return f"QuotientChain({self.name or self.base!r}, sizes={sizes})"


def quotient_image(chain: QuotientChain, k: int, w: Word) -> int:
    return chain.image(k, w.element)


def factor_image(chain: QuotientChain, k: int, n: int, g: int) -> int:
    return chain.factor(k, n, g)


def cyclic_two_power_chain(depth: int) -> QuotientChain:
    """``Z`` with ``N_k = 2^k Z``."""
    base = FreeGroup(1, ["a"])
    levels = []
    for k in range(depth + 1):
        G = FiniteGroup.cyclic(2 ** k)
        phi = tuple(x % 2 ** (k - 1) for x in range(2 ** k)) if k else None
        levels.append((G, (1 % 2 ** k,), phi))
    return _assemble(base, levels, "Z mod 2^k")


def free_abelianized_chain(depth: int) -> QuotientChain:
    """``F_2 -> (Z/2^k)^2`` by abelianising mod ``2^k``.

    The kernels of this chain all contain the commutator subgroup, so it is
    not a faithful approximation; it is kept because the witness bounds only
    need the free ball structure upstairs.
    """
    base = FreeGroup(2, ["a", "b"])
    levels = []
    for k in range(depth + 1):
        m = 2 ** k
        G = FiniteGroup.from_abelian((m, m)) if m > 1 else FiniteGroup(np.zeros((1, 1)), gens=[], labels=[])
        if m > 1:
            imgs = (G.vector_index[(1, 0)], G.vector_index[(0, 1)])
        else:
            imgs = (0, 0)
        levels.append((G, imgs, None))
    out = []
    for k, (G, imgs, _) in enumerate(levels):
        phi = None
        if k:
            lo = levels[k - 1][0]
            m_lo = 2 ** (k - 1)
            if m_lo > 1:
                phi = tuple(lo.vector_index[(x % m_lo, y % m_lo)] for (x, y) in G.vectors)
            else:
                phi = (0,) * G.n
        out.append((G, imgs, phi))
    chain = _assemble(base, out, "F2 abelianised mod 2^k")
    chain.faithful_assumed = False
    return chain


def elementary_two_chain(depth: int) -> QuotientChain:
    """``Gamma = (Z/2)^depth`` (generators ``e0..``) with ``Gamma_k = span(e_0..e_{k-1})``.

    This is the depth-``depth`` truncation of ``⊕ Z/2`` with
    ``N_k = ⊕_{i >= k} Z/2``.
    """
    labels = tuple(f"e{i}" for i in range(depth))
    base = AbelianGroup((2,) * depth, labels)
    levels = []
    for k in range(depth + 1):
        if k == 0:
            G = FiniteGroup(np.zeros((1, 1)), gens=[], labels=[], names=["()"])
            imgs = (0,) * depth
        else:
            G = FiniteGroup.from_abelian((2,) * k)
            imgs = tuple(G.vector_index[tuple(1 if j == i else 0 for j in range(k))] if i < k else G.e
                         for i in range(depth))
        levels.append((G, imgs))
    out = []
    for k, (G, imgs) in enumerate(levels):
        phi = None
        if k:
            lo = levels[k - 1][0]
            if k - 1:
                phi = tuple(lo.vector_index[v[: k - 1]] for v in G.vectors)
            else:
                phi = (0,) * G.n
        out.append((G, imgs, phi))
    return _assemble(base, out, "⊕Z/2")


def trivial_chain(depth: int, base: GroupHandle | None = None) -> QuotientChain:
    base = base or FreeGroup(1, ["a"])
    triv = FiniteGroup(np.zeros((1, 1)), gens=[], labels=[], names=["1"])
    lv = [(triv, (0,) * base.ngens, (0,) if k < depth else None) for k in range(depth + 1)]
    return QuotientChain(base, [ChainLevel(g, i, f) for g, i, f in lv], name="trivial", faithful_assumed=False)


def _assemble(base, levels, name):
    # factor maps are listed at the upper level above; ChainLevel keeps phi_k at level k
    lv = []
    for k, (G, imgs, _) in enumerate(levels):
        phi_down = levels[k + 1][2] if k + 1 < len(levels) else None
        lv.append(ChainLevel(G, tuple(int(i) for i in imgs), phi_down))
    return QuotientChain(base, lv, name=name)


# -------------------------------------------------------------------- balls


def _symmetrize(G: GroupHandle, S) -> list:
    elems = {G.identity()}
    for s in S:
        x = s.element if isinstance(s, Word) else s
        elems.add(x)
        elems.add(G.inv(x))
    return G.sorted(elems)


def ball_with_factorizations(G: GroupHandle, S, radius: int) -> dict:
    """Map each element of ``B_S(radius)`` to a tuple ``(s_1, ..., s_j)`` of
    symmetrised generators with ``s_1 ... s_j`` equal to it, ``j <= radius``.

    Iteration order of the returned dict is length-lexicographic.
    """
    if radius < 0:
        raise GroupError("radius must be >= 0")
    gens = _symmetrize(G, S)
    e = G.identity()
    found = {e: ()}
    frontier = [e]
    for _ in range(radius):
        nxt = []
        for x in frontier:
            for s in gens:
                y = G.mul(s, x)
                if y not in found:
                    found[y] = (s,) + found[x]
                    nxt.append(y)
        frontier = G.sorted(nxt)
        if not frontier:
            break
    return {x: found[x] for x in G.sorted(found)}


def ball_enumerate(G: GroupHandle, S, radius: int) -> list:
    """Canonical forms of all products of at most ``radius`` letters of ``S ∪ S^-1 ∪ {1}``."""
    return list(ball_with_factorizations(G, S, radius))
