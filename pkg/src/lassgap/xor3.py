"""3-XOR instances, seeded sampling, brute-force oracles and Lasserre-solution checks.

A constraint is ``(i1, i2, i3, b)`` with ``i1 < i2 < i3`` meaning
x_i1 ^ x_i2 ^ x_i3 = b.  A partial assignment on a sorted variable tuple S
is a bit tuple aligned with S; the pair (S, alpha) indexes the vectors
W_(S, alpha) of a Lasserre solution.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .lasserre import GramSolution, LiftedSDP, MomentBlock, MomentVector, gram_from_moments, solve_lifted
from .poly import enumerate_subsets, union

PRNG_TAG = "numpy-pcg64/v1"
BRUTE_FORCE_GUARD = 28


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & (2**64 - 1)))


@dataclass(frozen=True)
class Xor3Instance:
    n: int
    constraints: tuple  # of (i1, i2, i3, b)
    seed: int | None = None
    prng: str = PRNG_TAG
    planted: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        clean = []
        for c in self.constraints:
            i1, i2, i3, b = (int(v) for v in c)
            triple = tuple(sorted((i1, i2, i3)))
            if len(set(triple)) != 3:
                raise ValueError(f"constraint {c} does not use 3 distinct variables")
            if triple[0] < 0 or triple[2] >= self.n:
                raise ValueError(f"constraint {c} out of range for n={self.n}")
            if b not in (0, 1):
                raise ValueError(f"constraint {c}: rhs must be a bit")
            clean.append(triple + (b,))
        object.__setattr__(self, "constraints", tuple(clean))

    @property
    def m(self) -> int:
        return len(self.constraints)

    def vars_of(self, i: int) -> tuple:
        return self.constraints[i][:3]

    def satisfying(self, i: int) -> list:
        """Satisfying assignments of constraint i (bit tuples over its sorted vars), lexicographic."""
        b = self.constraints[i][3]
        return [a for a in itertools.product((0, 1), repeat=3) if (a[0] ^ a[1] ^ a[2]) == b]

    def to_json(self) -> dict:
        out = {
            "schema": "v1",
            "kind": "xor3-instance",
            "n": self.n,
            "seed": self.seed,
            "prng": self.prng,
            "constraints": [list(c) for c in self.constraints],
        }
        if self.planted is not None:
            out["planted"] = list(self.planted)
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> Xor3Instance:
        planted = data.get("planted")
        return cls(int(data["n"]), tuple(tuple(c) for c in data["constraints"]), data.get("seed"),
                   data.get("prng", PRNG_TAG), tuple(planted) if planted is not None else None)

    def canonical_json(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    @property
    def instance_id(self) -> str:
        core = {"n": self.n, "constraints": [list(c) for c in self.constraints]}
        return hashlib.sha256(json.dumps(core, sort_keys=True).encode()).hexdigest()[:16]

    def to_dimacs(self) -> str:
        lines = [f"p xor {self.n} {self.m}"]
        lines += [f"{a} {b} {c} {r}" for a, b, c, r in self.constraints]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_dimacs(cls, text: str) -> Xor3Instance:
        n, rows = None, []
        for ln in text.splitlines():
            ln = ln.strip()
            if not ln or ln.startswith("c"):
                continue
            if ln.startswith("p"):
                _, kind, n, _m = ln.split()
                if kind != "xor":
                    raise ValueError(f"not an xor file: {ln}")
                n = int(n)
                continue
            rows.append(tuple(int(t) for t in ln.split()))
        if n is None:
            raise ValueError("missing 'p xor n m' header")
        return cls(n, tuple(rows))


def _unrank_triple(rank: int, n: int) -> tuple:
    """The rank-th 3-subset of range(n) in lexicographic order."""
    out = []
    lo = 0
    for k in (3, 2, 1):
        for v in range(lo, n):
            c = comb(n - v - 1, k - 1)
            if rank < c:
                out.append(v)
                lo = v + 1
                break
            rank -= c
    return tuple(out)


def _sample_triples(n: int, m: int, rng) -> list:
    total = 2 * comb(n, 3)
    draws = rng.integers(0, total, size=m)
    return [(_unrank_triple(int(d) // 2, n), int(d) % 2) for d in draws]


def sample_random(n: int, m: int, seed: int) -> Xor3Instance:
    """m independent uniform draws from the 2*C(n,3) possible constraints."""
    if n < 3:
        raise ValueError("need n >= 3")
    rng = make_rng(seed)
    rows = tuple(t + (b,) for t, b in _sample_triples(n, m, rng))
    return Xor3Instance(n, rows, seed)


def sample_planted(n: int, m: int, seed: int, plant: Sequence[int] | None = None) -> tuple:
    """Same triples as :func:`sample_random`, with rhs chosen so ``plant`` satisfies everything."""
    if n < 3:
        raise ValueError("need n >= 3")
    rng = make_rng(seed)
    triples = _sample_triples(n, m, rng)
    if plant is None:
        plant = tuple(int(v) for v in rng.integers(0, 2, size=n))
    plant = tuple(int(v) for v in plant)
    if len(plant) != n:
        raise ValueError("plant length differs from n")
    rows = tuple(t + (plant[t[0]] ^ plant[t[1]] ^ plant[t[2]],) for t, _ in triples)
    return Xor3Instance(n, rows, seed, planted=plant), plant


def satisfied_count(inst: Xor3Instance, x: Sequence[int]) -> int:
    if len(x) != inst.n:
        raise ValueError(f"assignment length {len(x)} != n={inst.n}")
    return sum(1 for a, b, c, r in inst.constraints if (x[a] ^ x[b] ^ x[c]) == r)


def max_sat_bruteforce(inst: Xor3Instance) -> tuple:
    """Exact max number of satisfied constraints and the lexicographically smallest witness."""
    n = inst.n
    if n > BRUTE_FORCE_GUARD:
        raise ValueError(f"brute-force guard: n={n} > {BRUTE_FORCE_GUARD}")
    if inst.m == 0:
        return 0, (0,) * n
    cons = np.array(inst.constraints, dtype=np.int64)
    # x_i is bit (n-1-i) of the mask so increasing masks are lexicographic in x
    shifts = (n - 1 - cons[:, :3]).astype(np.uint64)
    rhs = cons[:, 3].astype(np.uint64)
    best, best_mask = -1, 0
    chunk = 1 << min(n, 18)
    for start in range(0, 1 << n, chunk):
        masks = np.arange(start, min(start + chunk, 1 << n), dtype=np.uint64)
        count = np.zeros(len(masks), dtype=np.int64)
        for (s1, s2, s3), b in zip(shifts, rhs):
            par = ((masks >> s1) ^ (masks >> s2) ^ (masks >> s3)) & np.uint64(1)
            count += par == b
        j = int(np.argmax(count))
        if count[j] > best:
            best, best_mask = int(count[j]), int(masks[j])
    witness = tuple((best_mask >> (n - 1 - i)) & 1 for i in range(n))
    return best, witness


def occurrence_counts(inst: Xor3Instance) -> tuple:
    counts = np.zeros(inst.n, dtype=np.int64)
    for a, b, c, _ in inst.constraints:
        counts[[a, b, c]] += 1
    return counts, int(counts.max(initial=0))


# ------------------------------------------------------- Lasserre solutions

@dataclass(frozen=True)
class PartialAssignment:
    """Bit bindings on a set of variables, stored sorted by variable."""

    bindings: tuple  # of (var, bit)

    def __post_init__(self):
        seen = {}
        for v, b in self.bindings:
            v, b = int(v), int(b)
            if b not in (0, 1):
                raise ValueError(f"binding {v} -> {b} is not a bit")
            if seen.setdefault(v, b) != b:
                raise ValueError(f"variable {v} bound twice")
        object.__setattr__(self, "bindings", tuple(sorted(seen.items())))

    @classmethod
    def from_pair(cls, s, alpha) -> PartialAssignment:
        if len(s) != len(alpha):
            raise ValueError("support and values differ in length")
        return cls(tuple(zip(s, alpha)))

    @property
    def pair(self) -> tuple:
        return tuple(v for v, _ in self.bindings), tuple(b for _, b in self.bindings)

    def compose(self, other: PartialAssignment) -> PartialAssignment | None:
        out = compose(*self.pair, *other.pair)
        return None if out is None else PartialAssignment.from_pair(*out)


def restrict(x: Sequence[int], s: Sequence[int]) -> tuple:
    return tuple(int(x[i]) for i in s)


def compose(s1, a1, s2, a2):
    """alpha1 o alpha2 on S1 u S2, or None when they disagree on the overlap."""
    merged = dict(zip(s1, a1))
    for v, bit in zip(s2, a2):
        if merged.setdefault(v, bit) != bit:
            return None
    s = tuple(sorted(merged))
    return s, tuple(merged[v] for v in s)


def all_pairs(n: int, r: int) -> list:
    """Every (S, alpha) with |S| <= r, ordered by S then alpha."""
    out = []
    for s in enumerate_subsets(n, min(r, n)):
        out.extend((s, a) for a in itertools.product((0, 1), repeat=len(s)))
    return out


class XorLasserreSolution:
    """Vectors W_(S, alpha) for |S| <= r, produced lazily by ``vector_fn``.

    ``exact`` solutions return object arrays of Fractions so every identity
    can be checked with zero tolerance.
    """

    def __init__(self, n: int, r: int, vector_fn: Callable, dim: int, exact: bool,
                 instance_id: str | None = None, source: str = ""):
        self.n = n
        self.r = r
        self.dim = dim
        self.exact = exact
        self.instance_id = instance_id
        self.source = source
        self._fn = vector_fn
        self._memo: dict = {}

    def vec(self, s: Sequence[int], alpha: Sequence[int]) -> np.ndarray:
        key = (tuple(s), tuple(alpha))
        if len(key[0]) > self.r:
            raise KeyError(f"pair {key} exceeds round {self.r}")
        if key not in self._memo:
            self._memo[key] = self._fn(*key)
        return self._memo[key]

    def inner(self, p, q):
        return self.vec(*p) @ self.vec(*q)

    def pairs(self, r: int | None = None) -> list:
        return all_pairs(self.n, self.r if r is None else r)

    def gram(self, pairs: Sequence | None = None) -> tuple:
        pairs = self.pairs() if pairs is None else list(pairs)
        v = np.array([self.vec(*p) for p in pairs], dtype=object if self.exact else float)
        return pairs, v @ v.T


def perfect_solution_from_assignment(inst: Xor3Instance, x: Sequence[int], r: int) -> XorLasserreSolution:
    """Rank-one solution: W_(S, alpha) = e if alpha = x|_S else 0."""
    x = tuple(int(v) for v in x)
    if satisfied_count(inst, x) != inst.m:
        raise ValueError("assignment does not satisfy every constraint")
    one = np.array([Fraction(1)], dtype=object)
    zero = np.array([Fraction(0)], dtype=object)

    def fn(s, alpha):
        return one if restrict(x, s) == alpha else zero

    return XorLasserreSolution(inst.n, r, fn, 1, True, inst.instance_id, "planted")


def mixture_solution(inst: Xor3Instance, xs: Sequence[Sequence[int]], amplitudes: Sequence, r: int) -> XorLasserreSolution:
    """Direct sum of rank-one solutions: coordinate k of W_(S, alpha) is a_k [alpha = x_k|_S].

    Squared amplitudes are the mixture weights and must sum to 1; rational
    amplitudes keep the solution exact.
    """
    xs = [tuple(int(v) for v in x) for x in xs]
    amps = [Fraction(a) for a in amplitudes]
    if len(xs) != len(amps) or not xs:
        raise ValueError("need one amplitude per assignment")
    if sum(a * a for a in amps) != 1:
        raise ValueError("squared amplitudes must sum to 1")
    for x in xs:
        if satisfied_count(inst, x) != inst.m:
            raise ValueError("assignment does not satisfy every constraint")

    def fn(s, alpha):
        v = np.empty(len(xs), dtype=object)
        for k, (x, a) in enumerate(zip(xs, amps)):
            v[k] = a if restrict(x, s) == alpha else Fraction(0)
        return v

    return XorLasserreSolution(inst.n, r, fn, len(xs), True, inst.instance_id, "mixture")


def xor_feasibility_sdp(inst: Xor3Instance, r: int) -> LiftedSDP:
    """Round-r Lasserre feasibility program demanding every constraint hold with probability 1.

    For each constraint and each violating alpha, the probability
    P[x_S = alpha] (an inclusion-exclusion sum of moments) is set to zero.
    """
    if 2 * r < 3:
        raise ValueError("need 2r >= 3 to see a whole constraint")
    n = inst.n
    basis = list(enumerate_subsets(n, min(r, n)))
    entries = {}
    for i, s in enumerate(basis):
        for j in range(i, len(basis)):
            entries[(i, j)] = {union(s, basis[j]): 1}
    block = MomentBlock("M(y)", tuple(basis), entries)
    eqs = []
    for idx in range(inst.m):
        s = inst.vars_of(idx)
        sat = set(inst.satisfying(idx))
        for alpha in itertools.product((0, 1), repeat=3):
            if alpha in sat:
                continue
            eqs.append((_prob_expr(s, alpha), 0))
    return LiftedSDP(n, r, (block,), tuple(eqs), {(): 0}, "min",
                     {"kind": "xor3-feasibility", "instance": inst.instance_id})


def _prob_expr(s, alpha) -> dict:
    """P[x_S = alpha] = sum over T subset of zeros(alpha) of (-1)^|T| y_{ones u T}."""
    ones = tuple(v for v, a in zip(s, alpha) if a)
    zeros = [v for v, a in zip(s, alpha) if not a]
    expr: dict = {}
    for k in range(len(zeros) + 1):
        for t in itertools.combinations(zeros, k):
            key = union(ones, tuple(t))
            expr[key] = expr.get(key, 0) + (-1) ** k
    return expr


def solution_from_gram(u: GramSolution, inst: Xor3Instance, r: int, source: str = "numeric") -> XorLasserreSolution:
    """W_(S, alpha) = sum_{T subset zeros(alpha)} (-1)^|T| U_{ones u T}."""

    def fn(s, alpha):
        out = np.zeros(u.vectors.shape[1])
        for key, c in _prob_expr(s, alpha).items():
            out = out + c * np.asarray(u.vec(key), dtype=float)
        return out

    return XorLasserreSolution(inst.n, r, fn, u.vectors.shape[1], False, inst.instance_id, source)


def solve_xor_lasserre(inst: Xor3Instance, r: int, tol: float = 1e-7, max_iter: int = 200_000) -> tuple:
    """Numerically solve the feasibility program; returns (solution, member result)."""
    lsdp = xor_feasibility_sdp(inst, r)
    res = solve_lifted(lsdp, tol, max_iter)
    y = dict(res.moments)
    y[()] = 1
    for k in enumerate_subsets(inst.n, min(2 * r, inst.n)):
        y.setdefault(k, 0.0)
    mv = MomentVector(inst.n, r, y)
    u = gram_from_moments(mv, r, tol=max(10 * tol, 1e-6))
    return solution_from_gram(u, inst, r), res


@dataclass
class XorValidation:
    value_deviation: float  # (i): sum of satisfied-assignment masses minus m
    min_inner: float  # (ii)
    conflict_max: float  # (iii)
    union_max: float  # (iv)
    normalization_max: float  # (v)
    observation_residual: float  # squared norm of sum_{sat alpha} W - W_empty, maxed over constraints
    pairs_checked: int

    def violations(self) -> dict:
        return {
            "i": abs(self.value_deviation),
            "ii": max(0.0, -self.min_inner),
            "iii": self.conflict_max,
            "iv": self.union_max,
            "v": self.normalization_max,
            "obs2.5": abs(self.observation_residual),
        }

    def ok(self, tol: float = 0.0) -> bool:
        return all(v <= tol for v in self.violations().values())


def validate_gram(pairs: Sequence, gram, inst: Xor3Instance, r: int) -> XorValidation:
    """Check the perfect-solution properties using Gram entries only."""
    index = {p: i for i, p in enumerate(pairs)}

    def g(p, q):
        try:
            return gram[index[p], index[q]]
        except KeyError as exc:
            raise KeyError(f"Gram data missing pair {exc}") from None

    empty = ((), ())
    # (i)
    total = 0
    for i in range(inst.m):
        s = inst.vars_of(i)
        for a in inst.satisfying(i):
            total += g((s, a), (s, a))
    value_dev = total - inst.m
    # (ii)-(iv)
    min_inner = None
    conflict = 0
    union_dev = 0
    groups: dict = {}
    for i, p in enumerate(pairs):
        for j in range(i, len(pairs)):
            q = pairs[j]
            val = gram[i, j]
            min_inner = val if min_inner is None else min(min_inner, val)
            comp = compose(p[0], p[1], q[0], q[1])
            if comp is None:
                conflict = max(conflict, abs(val))
                continue
            ref = gram[index[comp], index[comp]] if comp in index else groups.setdefault(comp, val)
            union_dev = max(union_dev, abs(val - ref))
    # (v)
    norm_dev = 0
    for s in enumerate_subsets(inst.n, min(r, inst.n)):
        tot = sum(g((s, a), (s, a)) for a in itertools.product((0, 1), repeat=len(s)))
        norm_dev = max(norm_dev, abs(tot - 1))
    # observation: ||sum_a W_a - W_0||^2 = sum_{a,b} <W_a, W_b> - 2 sum_a <W_a, W_0> + <W_0, W_0>
    obs = 0
    for i in range(inst.m):
        s = inst.vars_of(i)
        sat = [(s, a) for a in inst.satisfying(i)]
        val = sum(g(p, q) for p in sat for q in sat) - 2 * sum(g(p, empty) for p in sat) + g(empty, empty)
        obs = max(obs, abs(val))
    return XorValidation(value_dev, min_inner if min_inner is not None else 0, conflict, union_dev,
                         norm_dev, obs, len(pairs) * (len(pairs) + 1) // 2)


def validate_solution(sol: XorLasserreSolution, inst: Xor3Instance, r: int | None = None) -> XorValidation:
    r = sol.r if r is None else r
    if r < 3 and inst.m:
        raise ValueError("validation needs r >= 3 to cover whole constraints")
    pairs, gram = sol.gram(all_pairs(inst.n, r))
    return validate_gram(pairs, gram, inst, r)
