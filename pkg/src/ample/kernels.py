"""Hot loops over integer groupoid tables.

Every public kernel dispatches to an explicit-loop implementation (compiled by
numba) or to a vectorised numpy implementation, depending on
:data:`ample._accel.USE_NUMBA`.  Both paths return identical results; the
test-suite cross-checks them on random tables.

Table conventions: arrows are dense ids ``0..n-1``; ``s``, ``r`` map an arrow
to the arrow id of its source/range unit; ``comp[g, h]`` is ``g*h`` when
``s[g] == r[h]`` and ``-1`` otherwise.
"""

from __future__ import annotations

import numpy as np

from . import _accel
from ._accel import njit

NONE3 = (-1, -1, -1)


# ---------------------------------------------------------------- loop versions


@njit
def _assoc_loop(comp):
    n = comp.shape[0]
    for g in range(n):
        for h in range(n):
            gh = comp[g, h]
            if gh < 0:
                continue
            for k in range(n):
                hk = comp[h, k]
                if hk < 0:
                    continue
                left = comp[gh, k]
                right = comp[g, hk]
                if left < 0 or right < 0 or left != right:
                    return g, h, k
    return -1, -1, -1


@njit
def _domain_loop(comp, s, r):
    n = comp.shape[0]
    for g in range(n):
        for h in range(n):
            gh = comp[g, h]
            if s[g] == r[h]:
                if gh < 0:
                    return g, h, 1
                if gh >= n or s[gh] != s[h] or r[gh] != r[g]:
                    return g, h, 2
            elif gh >= 0:
                return g, h, 3
    return -1, -1, 0


@njit
def _inverse_loop(comp, s, r, inv):
    n = comp.shape[0]
    for g in range(n):
        gi = inv[g]
        if gi < 0 or gi >= n or inv[gi] != g:
            return g, 1
        if comp[g, gi] != r[g]:
            return g, 2
        if comp[gi, g] != s[g]:
            return g, 3
        if comp[r[g], g] != g or comp[g, s[g]] != g:
            return g, 4
    return -1, 0


@njit
def _fib_loop(s, r, subset, n):
    counts = np.zeros(n, dtype=np.int64)
    for i in range(subset.shape[0]):
        a = subset[i]
        counts[s[a]] += 1
        counts[r[a]] += 1
    best = 0
    for u in range(n):
        if counts[u] > best:
            best = counts[u]
    return best


@njit
def _max_multiplicity_loop(codes):
    if codes.shape[0] == 0:
        return 0
    srt = np.sort(codes)
    best = 1
    run = 1
    for i in range(1, srt.shape[0]):
        if srt[i] == srt[i - 1]:
            run += 1
        else:
            run = 1
        if run > best:
            best = run
    return best


@njit
def _contains(sorted_codes, code):
    i = np.searchsorted(sorted_codes, code)
    return i < sorted_codes.shape[0] and sorted_codes[i] == code


@njit
def _pair_subgroupoid_loop(comp, s, r, inv, a, b):
    n = comp.shape[0]
    m = a.shape[0]
    codes = np.sort(a * n + b)
    for p in range(m):
        if not _contains(codes, inv[a[p]] * n + inv[b[p]]):
            return 1, p, -1
        if not _contains(codes, s[a[p]] * n + s[b[p]]):
            return 2, p, -1
        if not _contains(codes, r[a[p]] * n + r[b[p]]):
            return 2, p, -1
    for p in range(m):
        ap = a[p]
        bp = b[p]
        for q in range(m):
            if s[ap] != r[a[q]] or s[bp] != r[b[q]]:
                continue
            code = comp[ap, a[q]] * n + comp[bp, b[q]]
            if not _contains(codes, code):
                return 3, p, q
    return 0, -1, -1


@njit
def _closure_loop(mat):
    out = mat.copy()
    n = out.shape[0]
    for k in range(n):
        for i in range(n):
            if out[i, k]:
                for j in range(n):
                    if out[k, j]:
                        out[i, j] = True
    return out


# --------------------------------------------------------------- numpy versions

_CHUNK = 1 << 20


def _assoc_np(comp):
    n = comp.shape[0]
    g_idx, h_idx = np.nonzero(comp >= 0)
    if g_idx.size == 0:
        return NONE3
    step = max(1, _CHUNK // max(n, 1))
    for lo in range(0, g_idx.size, step):
        g = g_idx[lo:lo + step]
        h = h_idx[lo:lo + step]
        gh = comp[g, h]
        hk = comp[h]                      # (m, n)
        mask = hk >= 0
        left = comp[gh]                   # comp[gh, k]
        right = np.where(mask, comp[g[:, None], np.where(mask, hk, 0)], -1)
        bad = mask & ((left < 0) | (right < 0) | (left != right))
        if bad.any():
            i, k = np.argwhere(bad)[0]
            return int(g[i]), int(h[i]), int(k)
    return NONE3


def _domain_np(comp, s, r):
    n = comp.shape[0]
    composable = s[:, None] == r[None, :]
    defined = comp >= 0
    miss = composable & ~defined
    extra = ~composable & defined
    safe = np.where(defined, comp, 0)
    wrong = defined & composable & (
        (comp >= n) | (s[np.minimum(safe, n - 1)] != s[None, :])
        | (r[np.minimum(safe, n - 1)] != r[:, None])
    )
    first = None
    for code, m in ((1, miss), (2, wrong), (3, extra)):
        if m.any():
            g, h = np.argwhere(m)[0]
            cand = (int(g), int(h), code)
            if first is None or cand[:2] < first[:2]:
                first = cand
    return first if first is not None else (-1, -1, 0)


def _inverse_np(comp, s, r, inv):
    n = comp.shape[0]
    g = np.arange(n)
    ok_range = (inv >= 0) & (inv < n)
    gi = np.where(ok_range, inv, 0)
    checks = [
        ~ok_range | (inv[gi] != g),
        comp[g, gi] != r,
        comp[gi, g] != s,
        (comp[r, g] != g) | (comp[g, s] != g),
    ]
    bad = np.zeros(n, dtype=np.int64)
    for code in (4, 3, 2, 1):
        bad = np.where(checks[code - 1], code, bad)
    hits = np.nonzero(bad)[0]
    if hits.size == 0:
        return -1, 0
    return int(hits[0]), int(bad[hits[0]])


def _fib_np(s, r, subset, n):
    if subset.size == 0:
        return 0
    counts = np.bincount(s[subset], minlength=n) + np.bincount(r[subset], minlength=n)
    return int(counts.max())


def _max_multiplicity_np(codes):
    if codes.size == 0:
        return 0
    _, counts = np.unique(codes, return_counts=True)
    return int(counts.max())


def _pair_subgroupoid_np(comp, s, r, inv, a, b):
    n = comp.shape[0]
    codes = np.unique(a * n + b)

    def member(c):
        i = np.searchsorted(codes, c)
        i = np.minimum(i, codes.size - 1)
        return codes[i] == c

    # same scan order as the loop: pair first, then inverse / source / range
    miss = np.stack([~member(inv[a] * n + inv[b]), ~member(s[a] * n + s[b]), ~member(r[a] * n + r[b])])
    bad = miss.any(axis=0)
    if bad.any():
        p = int(np.argmax(bad))
        return (1 if miss[0, p] else 2), p, -1
    for p in range(a.size):
        q = np.nonzero((r[a] == s[a[p]]) & (r[b] == s[b[p]]))[0]
        if q.size == 0:
            continue
        prod = comp[a[p], a[q]] * n + comp[b[p], b[q]]
        miss = ~member(prod)
        if miss.any():
            return 3, p, int(q[np.argmax(miss)])
    return 0, -1, -1


def _closure_np(mat):
    out = mat.astype(bool).copy()
    while True:
        nxt = out | ((out.astype(np.int64) @ out.astype(np.int64)) > 0)
        if np.array_equal(nxt, out):
            return out
        out = nxt


# ------------------------------------------------------------------- dispatch


def _i64(x):
    return np.ascontiguousarray(x, dtype=np.int64)


def first_assoc_violation(comp, *, use_numba=None):
    """Return the first ``(g, h, k)`` with ``(gh)k != g(hk)``, or ``(-1, -1, -1)``."""
    fn = _assoc_loop if _pick(use_numba) else _assoc_np
    return tuple(int(v) for v in fn(_i64(comp)))


def first_domain_violation(comp, s, r, *, use_numba=None):
    """``(g, h, code)``: 1 missing product, 2 wrong endpoints, 3 product off domain."""
    fn = _domain_loop if _pick(use_numba) else _domain_np
    return tuple(int(v) for v in fn(_i64(comp), _i64(s), _i64(r)))


def first_inverse_violation(comp, s, r, inv, *, use_numba=None):
    """``(g, code)``: 1 not an involution, 2/3 ``g g^-1``/``g^-1 g`` wrong, 4 unit law."""
    fn = _inverse_loop if _pick(use_numba) else _inverse_np
    return tuple(int(v) for v in fn(_i64(comp), _i64(s), _i64(r), _i64(inv)))


def fib_count(s, r, subset, n, *, use_numba=None):
    fn = _fib_loop if _pick(use_numba) else _fib_np
    return int(fn(_i64(s), _i64(r), _i64(subset), int(n)))


def pair_fib_count(s, r, a, b, n, *, use_numba=None):
    """Fibre count of a set of arrow pairs inside ``G x G``."""
    a = _i64(a)
    b = _i64(b)
    s = _i64(s)
    r = _i64(r)
    codes = np.concatenate([s[a] * n + s[b], r[a] * n + r[b]])
    # a pair with s == r lands twice in the same unit, as it should
    fn = _max_multiplicity_loop if _pick(use_numba) else _max_multiplicity_np
    return int(fn(codes))


def pair_subgroupoid_violation(comp, s, r, inv, a, b, *, use_numba=None):
    """``(code, p, q)``: 1 inverse missing, 2 unit missing, 3 product missing."""
    if len(a) == 0:
        return 0, -1, -1
    fn = _pair_subgroupoid_loop if _pick(use_numba) else _pair_subgroupoid_np
    return tuple(int(v) for v in fn(_i64(comp), _i64(s), _i64(r), _i64(inv), _i64(a), _i64(b)))


def transitive_closure(mat, *, use_numba=None):
    mat = np.ascontiguousarray(mat, dtype=np.bool_)
    if mat.size == 0:
        return mat.copy()
    fn = _closure_loop if _pick(use_numba) else _closure_np
    return fn(mat)


def _pick(use_numba):
    if use_numba is None:
        return _accel.USE_NUMBA
    return bool(use_numba) and _accel.HAVE_NUMBA


def warmup():
    """Trigger compilation of every loop kernel on tiny inputs."""
    comp = np.array([[0]], dtype=np.int64)
    z = np.zeros(1, dtype=np.int64)
    first_assoc_violation(comp)
    first_domain_violation(comp, z, z)
    first_inverse_violation(comp, z, z, z)
    fib_count(z, z, z, 1)
    pair_fib_count(z, z, z, z, 1)
    pair_subgroupoid_violation(comp, z, z, z, z, z)
    transitive_closure(np.ones((1, 1), dtype=bool))
