"""Integral Balanced Separator / Uniform Sparsest Cut oracles, structural checkers, reference curves.

Exact modes enumerate every cut with a meet-in-the-middle split: the low
``h`` vertices form a chunk of ``2^h`` masks evaluated at once for each
assignment of the high vertices.  Vertex ``i`` is bit ``i`` of a mask and
ties are broken towards the smallest mask.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .graphs import Graph, as_graph

EXACT_GUARD = 26
_LOW_BITS = 16


@dataclass(frozen=True)
class CutStats:
    crossing: int
    size_a: int
    size_b: int

    @property
    def sparsity(self) -> Fraction | None:
        if self.size_a == 0 or self.size_b == 0:
            return None
        return Fraction(self.crossing, self.size_a * self.size_b)

    @property
    def balance(self) -> Fraction:
        return Fraction(self.size_a, self.size_a + self.size_b)

    def as_row(self) -> dict:
        sp = self.sparsity
        return {"crossing": self.crossing, "size_a": self.size_a, "size_b": self.size_b,
                "sparsity": "" if sp is None else str(sp), "balance": str(self.balance)}


@dataclass(frozen=True)
class Cut:
    side_a: tuple  # sorted vertex indices
    stats: CutStats
    mode: str = "exact"

    def __post_init__(self):
        object.__setattr__(self, "side_a", tuple(sorted(int(v) for v in self.side_a)))

    def to_json(self) -> dict:
        return {"schema": "v1", "kind": "cut", "mode": self.mode, "side_a": list(self.side_a),
                **self.stats.as_row()}


def _side_mask(n: int, side) -> np.ndarray:
    side = np.asarray(list(side) if not isinstance(side, np.ndarray) else side)
    if side.dtype == bool:
        if len(side) != n:
            raise ValueError("boolean side mask has wrong length")
        return side
    mask = np.zeros(n, dtype=bool)
    if len(side):
        if side.min() < 0 or side.max() >= n:
            raise ValueError("vertex out of range")
        mask[side.astype(np.int64)] = True
    return mask


def cut_edges(graph, side) -> int:
    g = as_graph(graph)
    mask = _side_mask(g.n, side)
    if not g.m:
        return 0
    return int(np.count_nonzero(mask[g.edges[:, 0]] != mask[g.edges[:, 1]]))


def cut_stats(graph, side) -> CutStats:
    g = as_graph(graph)
    mask = _side_mask(g.n, side)
    a = int(mask.sum())
    return CutStats(cut_edges(g, mask), a, g.n - a)


# ------------------------------------------------------------ enumeration

def _bit_matrix(h: int) -> np.ndarray:
    masks = np.arange(1 << h, dtype=np.int64)
    return ((masks[:, None] >> np.arange(h)) & 1).astype(np.int32)


def _cut_values(h: int, edges: np.ndarray, bits: np.ndarray) -> np.ndarray:
    """Cut size of every mask over ``h`` vertices for edges inside that range."""
    if len(edges) == 0:
        return np.zeros(len(bits), dtype=np.int64)
    return np.count_nonzero(bits[:, edges[:, 0]] != bits[:, edges[:, 1]], axis=1).astype(np.int64)


def min_cut_by_size(graph) -> tuple:
    """For every k in 0..n: minimum cut with |A| = k and the smallest mask attaining it."""
    g = as_graph(graph)
    n = g.n
    if n > EXACT_GUARD:
        raise ValueError(f"exact guard: |V|={n} > {EXACT_GUARD}")
    h = min(n, _LOW_BITS)
    hi = n - h
    e = g.edges
    low_e = e[(e[:, 0] < h) & (e[:, 1] < h)]
    high_e = e[(e[:, 0] >= h) & (e[:, 1] >= h)] - h
    cross = e[(e[:, 0] < h) & (e[:, 1] >= h)]  # u < v so the low endpoint is first
    low_bits = _bit_matrix(h)
    high_bits = _bit_matrix(hi)
    cut_low = _cut_values(h, low_e, low_bits)
    cut_high = _cut_values(hi, high_e, high_bits)
    b = np.zeros((h, max(hi, 1)), dtype=np.int32)
    np.add.at(b, (cross[:, 0], cross[:, 1] - h), 1)
    b = b[:, :hi]
    deg_low = b.sum(axis=1)  # cross-degree of each low vertex
    deg_high = b.sum(axis=0)
    base_low = cut_low + low_bits @ deg_low
    pc_low = low_bits.sum(axis=1)
    groups = [np.flatnonzero(pc_low == p) for p in range(h + 1)]
    best = np.full(n + 1, np.iinfo(np.int64).max, dtype=np.int64)
    best_mask = np.zeros(n + 1, dtype=np.int64)
    for hm in range(1 << hi):
        hb = high_bits[hm]
        # crossing cross edges: x.deg_low + y.deg_high - 2 x.B.y
        vals = base_low + (cut_high[hm] + int(deg_high @ hb)) - 2 * (low_bits @ (b @ hb))
        off = int(hb.sum())
        for p, idx in enumerate(groups):
            seg = vals[idx]
            j = int(np.argmin(seg))
            if seg[j] < best[p + off]:
                best[p + off] = int(seg[j])
                best_mask[p + off] = (hm << h) | int(idx[j])
    return best, best_mask


def _mask_to_side(n: int, mask: int) -> tuple:
    return tuple(i for i in range(n) if (mask >> i) & 1)


def _bs_range(n: int, tau) -> tuple:
    tau = Fraction(tau).limit_denominator(10**9) if isinstance(tau, float) else Fraction(tau)
    if not 0 < tau <= Fraction(1, 2):
        raise ValueError(f"tau must lie in (0, 1/2], got {tau}")
    lo = math.ceil(tau * n)
    hi = math.floor((1 - tau) * n)
    return lo, hi


def best_balanced_separator(graph, tau, mode: str = "exact", restarts: int = 64, seed: int = 0) -> Cut:
    g = as_graph(graph)
    lo, hi = _bs_range(g.n, tau)
    if lo > hi:
        raise ValueError("no cut size satisfies the balance bounds")
    if mode == "exact":
        best, masks = min_cut_by_size(g)
        k = min(range(lo, hi + 1), key=lambda k: (best[k], masks[k]))
        side = _mask_to_side(g.n, int(masks[k]))
        return Cut(side, cut_stats(g, side), "exact")
    if mode == "local-search":
        return _bs_local_search(g, lo, hi, restarts, seed)
    raise ValueError(f"unknown mode {mode!r}")


def best_sparsest_cut(graph, mode: str = "exact", restarts: int = 64, seed: int = 0) -> Cut:
    g = as_graph(graph)
    if g.n < 2:
        raise ValueError("sparsest cut needs at least 2 vertices")
    if mode == "exact":
        best, masks = min_cut_by_size(g)
        k = min(range(1, g.n), key=lambda k: (Fraction(int(best[k]), k * (g.n - k)), masks[k]))
        side = _mask_to_side(g.n, int(masks[k]))
        return Cut(side, cut_stats(g, side), "exact")
    if mode == "local-search":
        return _usc_local_search(g, restarts, seed)
    raise ValueError(f"unknown mode {mode!r}")


def edge_expansion(graph) -> Fraction:
    """min over 1 <= |T| <= n/2 of edges(T, V \\ T) / |T|, exactly."""
    g = as_graph(graph)
    best, _ = min_cut_by_size(g)
    return min(Fraction(int(best[k]), k) for k in range(1, g.n // 2 + 1))


# ----------------------------------------------------------- local search

def _dense_adj(g: Graph) -> np.ndarray:
    return g.adjacency().astype(np.int64)


def _bs_local_search(g: Graph, lo: int, hi: int, restarts: int, seed: int) -> Cut:
    rng = np.random.Generator(np.random.PCG64(seed))
    adj = _dense_adj(g)
    best = None
    for _ in range(restarts):
        k = int(rng.integers(lo, hi + 1))
        side = np.zeros(g.n, dtype=bool)
        side[rng.permutation(g.n)[:k]] = True
        while True:
            s = side.astype(np.int64) * 2 - 1  # +1 in A, -1 in B
            # gain of moving v across: external minus internal neighbours
            d = -(adj @ s) * s
            a_idx = np.flatnonzero(side)
            b_idx = np.flatnonzero(~side)
            if not len(a_idx) or not len(b_idx):
                break
            gain = d[a_idx][:, None] + d[b_idx][None, :] - 2 * adj[np.ix_(a_idx, b_idx)]
            hit = np.flatnonzero(gain.ravel() > 0)
            if not len(hit):
                break
            i, j = divmod(int(hit[0]), len(b_idx))
            side[a_idx[i]] = False
            side[b_idx[j]] = True
        stats = cut_stats(g, side)
        key = (stats.crossing, tuple(np.flatnonzero(side)))
        if best is None or key < best[0]:
            best = (key, stats)
    (crossing, sidev), stats = best
    return Cut(sidev, stats, "local-search")


def _usc_local_search(g: Graph, restarts: int, seed: int) -> Cut:
    rng = np.random.Generator(np.random.PCG64(seed))
    adj = _dense_adj(g)
    n = g.n
    best = None
    for _ in range(restarts):
        k = int(rng.integers(1, n))
        side = np.zeros(n, dtype=bool)
        side[rng.permutation(n)[:k]] = True
        cur = cut_stats(g, side)
        while True:
            s = side.astype(np.int64) * 2 - 1
            delta = (adj @ s) * s  # change in crossing when v flips
            a = cur.size_a
            new_a = a - side.astype(np.int64) + (~side).astype(np.int64)
            ok = (new_a >= 1) & (new_a <= n - 1)
            moved = False
            for v in np.flatnonzero(ok):
                cand = Fraction(cur.crossing + int(delta[v]), int(new_a[v]) * (n - int(new_a[v])))
                if cand < cur.sparsity:
                    side[v] = not side[v]
                    cur = cut_stats(g, side)
                    moved = True
                    break
            if not moved:
                break
        key = (cur.sparsity, tuple(np.flatnonzero(side)))
        if best is None or key < best[0]:
            best = (key, cur)
    (_, sidev), stats = best
    return Cut(sidev, stats, "local-search")


# -------------------------------------------------- structural checkers

def literal_degrees(inst, host) -> dict:
    """deg(l) per literal (j, bit): left vertices adjacent to that literal's representative."""
    rep_of = {host.rep_index(j, b): (j, b) for j in range(inst.n) for b in (0, 1)}
    left_hi = 4 * inst.m
    deg = {lit: 0 for lit in rep_of.values()}
    for u, v in host.edges:
        u, v = int(u), int(v)
        if u < left_hi and v in rep_of:
            deg[rep_of[v]] += 1
    return deg


@dataclass(frozen=True)
class LiteralSetCheck:
    size: int
    deg: int
    contained: int
    deg_bound: float
    contained_bound: float
    bound1_ok: bool
    bound2_ok: bool
    meaningful: bool


def check_literal_set(inst, host, literals: Iterable, degrees: dict | None = None) -> LiteralSetCheck:
    """Measure deg(L') and the number of contained left vertices against the two bounds.

    The bounds are reported, never enforced; they only carry meaning for
    |L'| >= n/3 and large beta.
    """
    lits = set()
    for lit in literals:
        j, b = int(lit[0]), int(lit[1])
        if not (0 <= j < inst.n and b in (0, 1)):
            raise ValueError(f"invalid literal {lit}")
        lits.add((j, b))
    degrees = literal_degrees(inst, host) if degrees is None else degrees
    deg = sum(degrees[l] for l in lits)
    contained = 0
    for i in range(inst.m):
        s = inst.vars_of(i)
        for alpha in inst.satisfying(i):
            if all((v, a) in lits for v, a in zip(s, alpha)):
                contained += 1
    n, m = inst.n, inst.m
    beta = m / n
    size = len(lits)
    b1 = 6 * m * size / n * (1 - 20 / math.sqrt(beta))
    b2 = m * size**3 / (2 * n**3) * (1 + 100 / math.sqrt(beta))
    return LiteralSetCheck(size, deg, contained, b1, b2, deg >= b1, contained <= b2, 3 * size >= n)


# ------------------------------------------------------ reference curves

@dataclass(frozen=True)
class Reference:
    value: object
    problem: str
    corrections_omitted: bool
    note: str


def soundness_reference_bs(tau, m: int) -> Reference:
    """Leading term 4m(3 tau - tau^3) of the integral lower bound; correction terms are not subtracted."""
    t = Fraction(tau).limit_denominator(10**9) if isinstance(tau, float) else Fraction(tau)
    if not Fraction(1, 3) < t < Fraction(1, 2):
        raise ValueError(f"tau must lie in (1/3, 1/2), got {tau}")
    return Reference(4 * m * (3 * t - t**3), "bs", True,
                     "O(1/sqrt(beta)) and O(1/M) corrections have unknown constants and are omitted")


def soundness_reference_usc(M: int, m: int) -> Reference:
    """gamma = (1 + 1/(100M)) (2M+10)m / (1001Mm)^2 as an exact rational."""
    if M <= 0 or m <= 0:
        raise ValueError("M and m must be positive")
    gamma = (1 + Fraction(1, 100 * M)) * Fraction((2 * M + 10) * m, (1001 * M * m) ** 2)
    return Reference(gamma, "usc", False, "exact formula")


def soundness_reference(problem: str = "bs", *, tau=None, m: int, M: int | None = None) -> Reference:
    if problem == "bs":
        return soundness_reference_bs(tau, m)
    if problem == "usc":
        return soundness_reference_usc(M, m)
    raise ValueError(f"unknown problem {problem!r}")


# ---------------------------------------------------------------- output

def cuts_to_csv(rows: Sequence[tuple]) -> str:
    """rows of (label, CutStats) -> CSV text."""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=["label", "crossing", "size_a", "size_b", "sparsity", "balance"])
    w.writeheader()
    for label, st in rows:
        w.writerow({"label": label, **st.as_row()})
    return buf.getvalue()


def cut_to_json(cut: Cut) -> str:
    return json.dumps(cut.to_json(), sort_keys=True)
