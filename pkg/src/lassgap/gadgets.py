"""Gap-instance graphs built from 3-XOR instances, plus certified random expanders.

Vertex layout of the Balanced Separator graph for m constraints, n
variables and clique size q = M*beta::

    [0, 4m)                  left vertices, 4 per constraint (satisfying assignments, lexicographic)
    [4m, 4m + 2nq)           cliques, literal (j, bit) owns q consecutive slots; slot 0 is the representative
    [4m + 2nq, .. + m)       Z_r

The Sparsest Cut augmentation appends D_l and D_r (lam*M*m vertices each).
"""

from __future__ import annotations

import hashlib
import json
import math
from collections import namedtuple
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from .graphs import Graph
from .xor3 import Xor3Instance

TAGS = ("clique", "left-rep", "left-zr", "zr-expander", "d-expander", "d-link")
TAG = {t: i for i, t in enumerate(TAGS)}
KINDS = ("left", "clique", "zr", "dl", "dr")
KIND = {k: i for i, k in enumerate(KINDS)}

Left = namedtuple("Left", "constraint alpha")
Clique = namedtuple("Clique", "var bit copy")
Zr = namedtuple("Zr", "index")
Dl = namedtuple("Dl", "index")
Dr = namedtuple("Dr", "index")


class ExpanderError(RuntimeError):
    def __init__(self, msg, best_bound=None):
        super().__init__(msg)
        self.best_bound = best_bound


def _rng(seed: int, purpose: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), purpose])))


# --------------------------------------------------------------- expanders

@dataclass(frozen=True)
class ExpanderCertificate:
    size: int
    degree: int
    method: str  # bruteforce | spectral | complete | skipped
    bound: object  # Fraction for exact methods, float for spectral, None when skipped
    target: object
    attempts: int = 1
    lambda2: float | None = None

    @property
    def certified(self) -> bool:
        return self.bound is not None and self.bound >= self.target

    def to_json(self) -> dict:
        b = self.bound
        return {"size": self.size, "degree": self.degree, "method": self.method,
                "bound": None if b is None else str(b), "target": str(self.target),
                "attempts": self.attempts, "lambda2": self.lambda2, "certified": self.certified}


def _canonical_edges(e: np.ndarray) -> np.ndarray:
    e = np.sort(e, axis=1)
    order = np.lexsort((e[:, 1], e[:, 0]))
    return e[order]


def _bad_edges(e: np.ndarray, size: int) -> np.ndarray:
    lo = np.minimum(e[:, 0], e[:, 1]).astype(np.int64)
    hi = np.maximum(e[:, 0], e[:, 1]).astype(np.int64)
    bad = lo == hi
    _, first = np.unique(lo * size + hi, return_index=True)
    dup = np.ones(len(e), dtype=bool)
    dup[first] = False
    return bad | dup


def random_regular(size: int, degree: int, rng: np.random.Generator, max_rounds: int = 500) -> np.ndarray:
    """Configuration-model pairing repaired into a simple graph by random double-edge swaps.

    Dense requests (degree above (size-1)/2) sample the sparser complement instead.
    """
    if degree >= size:
        raise ValueError(f"no simple {degree}-regular graph on {size} vertices")
    if 2 * degree > size - 1:
        adj = np.ones((size, size), dtype=bool)
        np.fill_diagonal(adj, False)
        if size - 1 - degree:
            comp = random_regular(size, size - 1 - degree, rng, max_rounds)
            adj[comp[:, 0], comp[:, 1]] = adj[comp[:, 1], comp[:, 0]] = False
        return np.argwhere(np.triu(adj)).astype(np.int64)
    stubs = np.repeat(np.arange(size, dtype=np.int64), degree)
    rng.shuffle(stubs)
    e = stubs.reshape(-1, 2).copy()
    for _ in range(max_rounds):
        bad = _bad_edges(e, size)
        bi = np.flatnonzero(bad)
        if not len(bi):
            return _canonical_edges(e)
        good = np.flatnonzero(~bad)
        if len(good) < len(bi):
            good = np.arange(len(e))
            good = good[~np.isin(good, bi)]
            if not len(good):
                break
        k = min(len(bi), len(good))
        bi = bi[:k]
        partners = rng.choice(good, size=k, replace=False)
        a, b = e[bi, 0].copy(), e[bi, 1].copy()
        c, d = e[partners, 0].copy(), e[partners, 1].copy()
        flip = rng.integers(0, 2, size=k).astype(bool)
        c2 = np.where(flip, d, c)
        d2 = np.where(flip, c, d)
        e[bi, 0], e[bi, 1] = a, c2
        e[partners, 0], e[partners, 1] = b, d2
    raise ExpanderError(f"could not repair a simple {degree}-regular graph on {size} vertices")


def spectral_bound(size: int, degree: int, edges: np.ndarray) -> tuple:
    """(degree - lambda_2)/2 for a degree-regular graph; returns (bound, lambda_2)."""
    if size <= 2000:
        a = np.zeros((size, size))
        a[edges[:, 0], edges[:, 1]] = 1
        a[edges[:, 1], edges[:, 0]] = 1
        lam = np.linalg.eigvalsh(a)
        lam2 = float(lam[-2])
    else:
        from scipy.sparse import coo_matrix
        from scipy.sparse.linalg import eigsh

        rows = np.concatenate([edges[:, 0], edges[:, 1]])
        cols = np.concatenate([edges[:, 1], edges[:, 0]])
        a = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(size, size)).tocsr()
        vals = eigsh(a, k=2, which="LA", return_eigenvectors=False, tol=1e-8)
        lam2 = float(np.sort(vals)[0])
    # guard the bound against eigensolver round-off
    return (degree - lam2) / 2 - 1e-9 * degree, lam2


def build_expander(size: int, degree: int, target, seed: int, max_attempts: int = 20,
                   certify: bool = True, strict: bool = True) -> tuple:
    """Certified random regular expander; returns (edges, ExpanderCertificate).

    size <= degree + 1 falls back to the complete graph, whose expansion is
    exactly ceil(size/2).  Otherwise graphs of size <= 20 are certified by
    exhaustive cut enumeration and larger ones by the spectral bound.
    """
    if size <= 0:
        raise ValueError("size must be positive")
    if size <= degree + 1:
        iu = np.triu_indices(size, 1)
        edges = np.stack(iu, axis=1).astype(np.int64)
        bound = Fraction(math.ceil(size / 2)) if size > 1 else None
        return edges, ExpanderCertificate(size, size - 1, "complete", bound, target)
    if (degree * size) % 2:
        raise ValueError("degree * size must be even")
    best = None
    for attempt in range(1, max_attempts + 1):
        edges = random_regular(size, degree, _rng(seed, attempt))
        if not certify:
            return edges, ExpanderCertificate(size, degree, "skipped", None, target, attempt)
        if size <= 20:
            from .partition import edge_expansion

            cert = ExpanderCertificate(size, degree, "bruteforce", edge_expansion(Graph(size, edges)), target, attempt)
        else:
            bound, lam2 = spectral_bound(size, degree, edges)
            cert = ExpanderCertificate(size, degree, "spectral", bound, target, attempt, lam2)
        if cert.certified:
            return edges, cert
        if best is None or cert.bound > best[1].bound:
            best = (edges, cert)
    if strict:
        raise ExpanderError(f"expansion {best[1].bound} < target {target} after {max_attempts} attempts",
                            best[1].bound)
    return best


# ------------------------------------------------------------ gadget graph

@dataclass(frozen=True)
class GadgetParams:
    beta: Fraction
    M: int
    c: int = 16
    seed: int = 0
    certify: bool = True

    def __post_init__(self):
        object.__setattr__(self, "beta", Fraction(self.beta))
        if self.M <= 0 or self.beta < 0:
            raise ValueError("M must be positive and beta nonnegative")

    @property
    def clique_size(self) -> int:
        q = self.M * self.beta
        if q.denominator != 1:
            raise ValueError(f"M*beta = {q} is not an integer")
        return int(q)


@dataclass(frozen=True)
class GadgetGraph:
    n: int  # vertex count
    kinds: np.ndarray  # (n,) role kind codes
    role_data: np.ndarray  # (n, 3) role fields
    edges: np.ndarray  # (E, 2), u < v
    tags: np.ndarray  # (E,) tag codes
    params: Mapping
    provenance: Mapping
    certificates: Mapping = field(default_factory=dict)
    name: str = ""

    # -- layout
    @property
    def m(self) -> int:
        return int(self.params["m"])

    @property
    def n_vars(self) -> int:
        return int(self.params["n"])

    @property
    def q(self) -> int:
        return int(self.params["clique_size"])

    def left_index(self, i: int, a: int) -> int:
        return 4 * i + a

    def clique_index(self, j: int, bit: int, t: int) -> int:
        """t counts from 1; t = 1 is the representative."""
        return 4 * self.m + (2 * j + bit) * self.q + (t - 1)

    def rep_index(self, j: int, bit: int) -> int:
        return self.clique_index(j, bit, 1)

    @property
    def h_size(self) -> int:
        """Vertices of the Balanced Separator part (left, cliques, Z_r)."""
        return 4 * self.m + 2 * self.n_vars * self.q + self.m

    def vertices_of(self, kind: str) -> np.ndarray:
        return np.flatnonzero(self.kinds == KIND[kind])

    def role(self, v: int):
        k = KINDS[int(self.kinds[v])]
        a, b, c = (int(t) for t in self.role_data[v])
        if k == "left":
            return Left(a, ((b >> 2) & 1, (b >> 1) & 1, b & 1))
        if k == "clique":
            return Clique(a, b, c)
        return {"zr": Zr, "dl": Dl, "dr": Dr}[k](a)

    def edges_tagged(self, tag: str) -> np.ndarray:
        return self.edges[self.tags == TAG[tag]]

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n)

    def as_graph(self) -> Graph:
        return Graph(self.n, self.edges, self.name)

    # -- identity and output
    @property
    def digest(self) -> str:
        h = hashlib.sha256()
        for arr in (self.kinds, self.role_data, self.edges, self.tags):
            h.update(np.ascontiguousarray(arr).tobytes())
        h.update(json.dumps(_jsonable(self.params), sort_keys=True).encode())
        h.update(json.dumps(_jsonable(self.provenance), sort_keys=True).encode())
        return h.hexdigest()[:16]

    def to_json(self) -> dict:
        return {
            "schema": "v1",
            "kind": "gadget-graph",
            "name": self.name,
            "n": self.n,
            "roles": {"kinds": self.kinds.tolist(), "data": self.role_data.tolist(), "table": list(KINDS)},
            "edges": self.edges.tolist(),
            "tags": self.tags.tolist(),
            "tag_table": list(TAGS),
            "params": _jsonable(self.params),
            "provenance": _jsonable(self.provenance),
            "certificates": {k: c.to_json() for k, c in self.certificates.items()},
        }

    @classmethod
    def from_json(cls, data: Mapping) -> GadgetGraph:
        if data.get("schema") != "v1" or data.get("kind") != "gadget-graph":
            raise ValueError("not a v1 gadget-graph document")
        certs = {}
        for k, c in data.get("certificates", {}).items():
            bound = c["bound"]
            if bound is not None:
                bound = Fraction(bound) if c["method"] in ("bruteforce", "complete") else float(bound)
            certs[k] = ExpanderCertificate(c["size"], c["degree"], c["method"], bound, Fraction(c["target"]),
                                           c["attempts"], c["lambda2"])
        params = dict(data["params"])
        return cls(int(data["n"]), np.asarray(data["roles"]["kinds"], dtype=np.int8),
                   np.asarray(data["roles"]["data"], dtype=np.int64).reshape(-1, 3),
                   np.asarray(data["edges"], dtype=np.int64).reshape(-1, 2),
                   np.asarray(data["tags"], dtype=np.int8), params, dict(data["provenance"]), certs,
                   data.get("name", ""))

    def edge_list_text(self) -> str:
        counts = {k: int(np.count_nonzero(self.kinds == i)) for i, k in enumerate(KINDS)}
        head = [f"# {self.name} vertices={self.n} edges={len(self.edges)}"]
        start = 0
        for k in KINDS:
            if counts[k]:
                head.append(f"# role {k}: {start}..{start + counts[k] - 1}")
                start += counts[k]
        body = "\n".join(f"{u} {v}" for u, v in self.edges.tolist())
        return "\n".join(head) + "\n" + body + ("\n" if body else "")


def _jsonable(obj):
    if isinstance(obj, Mapping):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


# ----------------------------------------------------------- constructions

def attach_pairs(m: int, rng: np.random.Generator, max_attempts: int = 1000) -> np.ndarray:
    """An 8-regular loopless multigraph on m vertices as 4m endpoint pairs (one per left vertex)."""
    if m < 2:
        raise ValueError("an 8-regular loopless multigraph needs m >= 2")
    stubs = np.repeat(np.arange(m, dtype=np.int64), 8)
    for _ in range(max_attempts):
        pairs = rng.permutation(stubs).reshape(-1, 2)
        if not np.any(pairs[:, 0] == pairs[:, 1]):
            return pairs
    # swap repair: a loop (a, a) and a pair (b, c) avoiding a become (a, b), (a, c)
    loops = np.flatnonzero(pairs[:, 0] == pairs[:, 1])
    for li in loops:
        a = pairs[li, 0]
        if pairs[li, 1] != a:
            continue
        ok = np.flatnonzero((pairs[:, 0] != a) & (pairs[:, 1] != a))
        if not len(ok):
            raise ValueError("Z_r pairing infeasible")
        pi = ok[rng.integers(len(ok))]
        b, c = pairs[pi]
        pairs[li] = (a, b)
        pairs[pi] = (a, c)
    return pairs


def build_bs_instance(inst: Xor3Instance, params: GadgetParams) -> GadgetGraph:
    n, m = inst.n, inst.m
    if Fraction(m) != params.beta * n:
        raise ValueError(f"m={m} differs from beta*n={params.beta * n}")
    q = params.clique_size
    left_n, clique_n = 4 * m, 2 * n * q
    total = left_n + clique_n + m
    kinds = np.empty(total, dtype=np.int8)
    data = np.zeros((total, 3), dtype=np.int64)
    kinds[:left_n] = KIND["left"]
    for i in range(m):
        for a, alpha in enumerate(inst.satisfying(i)):
            data[4 * i + a] = (i, alpha[0] * 4 + alpha[1] * 2 + alpha[2], 0)
    kinds[left_n:left_n + clique_n] = KIND["clique"]
    slot = np.arange(clique_n)
    data[left_n:left_n + clique_n] = np.stack([slot // q // 2, (slot // q) % 2, slot % q + 1], axis=1)
    kinds[left_n + clique_n:] = KIND["zr"]
    data[left_n + clique_n:, 0] = np.arange(m)

    parts, tags = [], []
    # cliques
    iu = np.stack(np.triu_indices(q, 1), axis=1)
    starts = left_n + q * np.arange(2 * n)
    ce = (starts[:, None, None] + iu[None]).reshape(-1, 2)
    parts.append(ce)
    tags.append(np.full(len(ce), TAG["clique"]))
    # left to representatives
    lr = []
    for i in range(m):
        s = inst.vars_of(i)
        for a, alpha in enumerate(inst.satisfying(i)):
            for v, bit in zip(s, alpha):
                lr.append((4 * i + a, left_n + (2 * v + bit) * q))
    lr = np.asarray(lr, dtype=np.int64).reshape(-1, 2)
    parts.append(lr)
    tags.append(np.full(len(lr), TAG["left-rep"]))
    zr0 = left_n + clique_n
    zr_edges = np.zeros((0, 2), dtype=np.int64)
    certs = {}
    if m:
        pairs = attach_pairs(m, _rng(params.seed, 1))
        lz = np.concatenate([np.stack([np.arange(left_n), zr0 + pairs[:, 0]], axis=1),
                             np.stack([np.arange(left_n), zr0 + pairs[:, 1]], axis=1)])
        lz = lz[np.lexsort((lz[:, 1], lz[:, 0]))]
        parts.append(lz)
        tags.append(np.full(len(lz), TAG["left-zr"]))
        ze, cert = build_expander(m, params.c * params.M, params.M, params.seed * 1000003 + 17,
                                  certify=params.certify, strict=params.certify)
        zr_edges = ze + zr0
        certs["zr"] = cert
    parts.append(zr_edges)
    tags.append(np.full(len(zr_edges), TAG["zr-expander"]))
    edges = np.concatenate(parts).astype(np.int64)
    edges = np.sort(edges, axis=1)
    p = {"n": n, "m": m, "beta": params.beta, "M": params.M, "c": params.c, "seed": params.seed,
         "clique_size": q, "lam": None}
    prov = {"instance": inst.instance_id, "stage": "H", "parent": None}
    return GadgetGraph(total, kinds, data, edges, np.concatenate(tags).astype(np.int8), p, prov, certs,
                       f"H(n={n},m={m},M={params.M})")


def eb_degrees(H: GadgetGraph) -> np.ndarray:
    """E_b-degree (left-rep edge count) of every vertex."""
    return np.bincount(H.edges_tagged("left-rep")[:, 1], minlength=H.n)


@dataclass(frozen=True)
class Reduction:
    graph: GadgetGraph
    removed: np.ndarray
    Y: int
    threshold: int

    @property
    def bound(self) -> Fraction:
        """2Y/(beta M)"""
        return Fraction(2 * self.Y, self.threshold) if self.threshold else Fraction(0)


def reduce_degree(H: GadgetGraph) -> Reduction:
    """Drop every left-rep edge whose representative has more than beta*M other left-rep edges.

    The predicate is evaluated once against the original degrees.
    """
    if H.provenance.get("stage") != "H":
        raise ValueError(f"reduce_degree expects a stage-H graph, got {H.provenance.get('stage')!r}")
    threshold = H.q  # beta * M
    deg = eb_degrees(H)
    y = int(sum(int(d) * (int(d) - 1) // 2 for d in deg))
    is_eb = H.tags == TAG["left-rep"]
    drop = is_eb & (deg[H.edges[:, 1]] - 1 > threshold)
    removed = H.edges[drop]
    prov = {"instance": H.provenance["instance"], "stage": "H'", "parent": H.digest}
    g = GadgetGraph(H.n, H.kinds, H.role_data, H.edges[~drop], H.tags[~drop], dict(H.params), prov,
                    dict(H.certificates), H.name + "'")
    return Reduction(g, removed, y, threshold)


def build_usc_instance(H: GadgetGraph, lam: int = 1000, seed: int | None = None, certify: bool = True,
                       target=None, max_attempts: int = 3) -> GadgetGraph:
    """Append D_l and D_r (lam*M*m vertices each) with one injective d-link per H-vertex into each."""
    M, m = int(H.params["M"]), H.m
    c = int(H.params["c"])
    base = H.n
    size = lam * M * m
    if size < base:
        raise ValueError(f"injectivity needs lam*M*m={size} >= |V(H)|={base}")
    seed = int(H.params["seed"]) if seed is None else seed
    target = 10**4 * M if target is None else target
    certs = dict(H.certificates)
    ext = []
    for side, purpose in (("dl", 2), ("dr", 3)):
        if not size:
            ext.append(np.zeros((0, 2), dtype=np.int64))
            continue
        e, cert = build_expander(size, c * M, target, seed * 1000003 + purpose, max_attempts=max_attempts,
                                 certify=certify, strict=False)
        certs[side] = cert
        ext.append(e)
    total = base + 2 * size
    kinds = np.concatenate([H.kinds, np.full(size, KIND["dl"], np.int8), np.full(size, KIND["dr"], np.int8)])
    data = np.zeros((total, 3), dtype=np.int64)
    data[:base] = H.role_data
    data[base:base + size, 0] = np.arange(size)
    data[base + size:, 0] = np.arange(size)
    hv = np.arange(base)
    links = np.concatenate([np.stack([hv, base + hv], axis=1), np.stack([hv, base + size + hv], axis=1)])
    edges = np.concatenate([H.edges, ext[0] + base, ext[1] + base + size, links]).astype(np.int64)
    tags = np.concatenate([H.tags, np.full(len(ext[0]) + len(ext[1]), TAG["d-expander"], np.int8),
                           np.full(len(links), TAG["d-link"], np.int8)])
    params = dict(H.params)
    params["lam"] = lam
    prov = {"instance": H.provenance["instance"], "stage": "USC", "parent": H.digest,
            "base_stage": H.provenance["stage"]}
    return GadgetGraph(total, kinds, data, edges, tags, params, prov, certs, f"U(lam={lam})")


# ------------------------------------------------------------------- audit

def audit(G: GadgetGraph, inst: Xor3Instance | None = None) -> list:
    """Cardinality and structure checks; returns a list of failure messages (empty means pass)."""
    fails = []
    n, m, q = G.n_vars, G.m, G.q
    cnt = {k: int(np.count_nonzero(G.kinds == i)) for i, k in enumerate(KINDS)}
    if cnt["left"] != 4 * m:
        fails.append(f"|Left|={cnt['left']} != 4m={4 * m}")
    if cnt["clique"] != 2 * n * q:
        fails.append(f"|Clique|={cnt['clique']} != 2nq={2 * n * q}")
    if cnt["zr"] != m:
        fails.append(f"|Zr|={cnt['zr']} != m={m}")
    e = G.edges
    if len(e):
        if np.any(e[:, 0] >= e[:, 1]):
            fails.append("edge with u >= v (self-loop or unsorted)")
        codes = e[:, 0] * G.n + e[:, 1]
        if len(np.unique(codes)) != len(codes):
            fails.append("duplicate edge")
    left = G.vertices_of("left")
    zr = G.vertices_of("zr")
    lz = G.edges_tagged("left-zr")
    zdeg = np.bincount(lz[:, 1], minlength=G.n)[zr]
    if m and not np.all(zdeg == 8):
        fails.append(f"Z_r left-zr degrees {sorted(set(zdeg.tolist()))} != 8")
    ldeg = np.bincount(lz[:, 0], minlength=G.n)[left]
    if not np.all(ldeg == 2):
        fails.append("a left vertex lacks exactly 2 distinct Z_r neighbours")
    lr = G.edges_tagged("left-rep")
    if G.provenance.get("stage") in ("H", "USC") and G.provenance.get("base_stage", "H") == "H":
        if not np.all(np.bincount(lr[:, 0], minlength=G.n)[left] == 3):
            fails.append("a left vertex lacks exactly 3 left-rep edges")
    reps = {G.rep_index(j, b) for j in range(n) for b in (0, 1)}
    if len(lr) and not set(np.unique(lr[:, 1]).tolist()) <= reps:
        fails.append("left-rep edge ends at a non-representative")
    cl = G.edges_tagged("clique")
    if len(cl) != 2 * n * q * (q - 1) // 2:
        fails.append(f"clique edge count {len(cl)} != 2n*C(q,2)")
    if len(cl):
        owner = (cl - 4 * m) // q
        if np.any(owner[:, 0] != owner[:, 1]):
            fails.append("clique edge joins two different cliques")
    if inst is not None:
        if G.provenance.get("instance") != inst.instance_id:
            fails.append("provenance does not match the instance")
        for v in left:
            r = G.role(int(v))
            c = inst.constraints[r.constraint]
            if (r.alpha[0] ^ r.alpha[1] ^ r.alpha[2]) != c[3]:
                fails.append(f"left vertex {v} carries a non-satisfying assignment")
                break
    if G.provenance.get("stage") == "USC":
        lam, M = int(G.params["lam"]), int(G.params["M"])
        hsize = G.h_size
        if cnt["dl"] != lam * M * m or cnt["dr"] != lam * M * m:
            fails.append("D_l/D_r sizes differ from lam*M*m")
        dl = G.edges_tagged("d-link")
        if len(dl) != 2 * hsize:
            fails.append(f"d-link count {len(dl)} != 2|V(H)|")
        hits = np.bincount(dl[:, 1], minlength=G.n)
        if hits.max(initial=0) > 1:
            fails.append("a D vertex has more than one d-link")
        per_h = np.bincount(dl[:, 0], minlength=G.n)[:hsize]
        if not np.all(per_h == 2):
            fails.append("an H vertex lacks exactly two d-links")
    return fails


def degree_bound_violations(G: GadgetGraph) -> list:
    """Per-role closed-form degree caps for a reduced graph."""
    q, M, c = G.q, int(G.params["M"]), int(G.params["c"])
    deg = G.degrees()
    caps = {"left": 5, "clique": q - 1 + q + 1, "zr": c * M + 8, "dl": c * M + 1, "dr": c * M + 1}
    out = []
    for k, cap in caps.items():
        vs = G.vertices_of(k)
        if len(vs):
            extra = 2 if (k in ("left", "clique", "zr") and G.provenance.get("stage") == "USC") else 0
            worst = int(deg[vs].max())
            if worst > cap + extra:
                out.append(f"{k}: max degree {worst} > {cap + extra}")
    return out
