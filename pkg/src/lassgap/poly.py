"""Subset keys and multilinear polynomials over 0/1 variables.

A subset of variables is represented by a sorted tuple of distinct indices
(``SubsetKey``).  Polynomials are maps from subset keys to coefficients; on
0/1 inputs every polynomial is multilinear, so this representation is
complete for binary programs.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Iterable, Iterator, Mapping, Sequence, Union

Number = Union[int, Fraction, float]
SubsetKey = tuple  # sorted tuple of distinct ints


def canonical_key(vars: Iterable[int], n: int | None = None) -> SubsetKey:
    """Sort and deduplicate ``vars``; check the range when ``n`` is given."""
    key = tuple(sorted(set(int(v) for v in vars)))
    if key and key[0] < 0:
        raise ValueError(f"negative variable index in {key}")
    if n is not None and key and key[-1] >= n:
        raise ValueError(f"variable index {key[-1]} out of range for n={n}")
    return key


def union(a: SubsetKey, b: SubsetKey) -> SubsetKey:
    if not a:
        return b
    if not b:
        return a
    return tuple(sorted(set(a).union(b)))


def subset_order(key: SubsetKey) -> tuple:
    """Sort key realizing the (size, lexicographic) total order."""
    return (len(key), key)


def enumerate_subsets(n: int, k: int) -> Iterator[SubsetKey]:
    """All subsets of ``range(n)`` of size at most ``k``, ordered by size then lexicographically."""
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    for size in range(k + 1):
        yield from itertools.combinations(range(n), size)


def count_subsets(n: int, k: int) -> int:
    return sum(comb(n, i) for i in range(min(k, n) + 1))


def _exact(c: Number) -> Number:
    if isinstance(c, float):
        return c
    return Fraction(c)


@dataclass(frozen=True)
class MultilinearPoly:
    """Coefficient map ``{subset: coeff}``; zero coefficients are dropped."""

    n: int
    coeffs: Mapping[SubsetKey, Number] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for key, c in self.coeffs.items():
            k = canonical_key(key, self.n)
            c = _exact(c)
            total = clean.get(k, 0) + c
            clean[k] = total
        clean = {k: c for k, c in clean.items() if c != 0}
        object.__setattr__(self, "coeffs", dict(sorted(clean.items(), key=lambda kv: subset_order(kv[0]))))

    @property
    def degree(self) -> int:
        return max((len(k) for k in self.coeffs), default=0)

    def __add__(self, other: MultilinearPoly) -> MultilinearPoly:
        self._check_compatible(other)
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out.get(k, 0) + c
        return MultilinearPoly(self.n, out)

    def __sub__(self, other: MultilinearPoly) -> MultilinearPoly:
        return self + other.scale(-1)

    def __mul__(self, other: MultilinearPoly) -> MultilinearPoly:
        # x_i^2 = x_i on binary inputs, so products stay multilinear
        self._check_compatible(other)
        out: dict = {}
        for ka, ca in self.coeffs.items():
            for kb, cb in other.coeffs.items():
                k = union(ka, kb)
                out[k] = out.get(k, 0) + ca * cb
        return MultilinearPoly(self.n, out)

    def scale(self, a: Number) -> MultilinearPoly:
        return MultilinearPoly(self.n, {k: a * c for k, c in self.coeffs.items()})

    def _check_compatible(self, other):
        if self.n != other.n:
            raise ValueError(f"variable counts differ: {self.n} vs {other.n}")

    def __call__(self, x: Sequence[int]) -> Number:
        return eval_poly(self, x)

    def to_json(self) -> dict:
        terms = []
        for k, c in self.coeffs.items():
            if isinstance(c, float):
                c = Fraction(c)
            terms.append({"vars": list(k), "coeff": f"{c.numerator}/{c.denominator}"})
        return {"n": self.n, "terms": terms}

    @classmethod
    def from_json(cls, data: Mapping) -> MultilinearPoly:
        coeffs = {}
        for t in data["terms"]:
            vars = list(t["vars"])
            if vars != sorted(vars):
                raise ValueError(f"term vars must be sorted ascending: {vars}")
            coeffs[tuple(vars)] = Fraction(t["coeff"])
        return cls(int(data["n"]), coeffs)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def eval_poly(p: MultilinearPoly, x: Sequence[int]) -> Number:
    if len(x) != p.n:
        raise ValueError(f"assignment has length {len(x)}, polynomial has n={p.n}")
    total = 0
    for key, c in p.coeffs.items():
        if all(x[j] for j in key):
            total += c
    return total


def constant(n: int, c: Number) -> MultilinearPoly:
    return MultilinearPoly(n, {(): c})


def linear(n: int, weights: Mapping[int, Number], const: Number = 0) -> MultilinearPoly:
    coeffs = {(int(i),): w for i, w in weights.items()}
    coeffs[()] = const
    return MultilinearPoly(n, coeffs)


def cut_polynomial(n: int, edges: Iterable[tuple[int, int]]) -> MultilinearPoly:
    """Sum over edges of (x_u - x_v)^2 in multilinear form x_u + x_v - 2 x_u x_v."""
    coeffs: dict = {}
    for u, v in edges:
        u, v = int(u), int(v)
        if u == v:
            raise ValueError(f"self-loop at {u}")
        for k, c in (((u,), 1), ((v,), 1), (canonical_key((u, v)), -2)):
            coeffs[k] = coeffs.get(k, 0) + c
    return MultilinearPoly(n, coeffs)


def balance_polynomial(n: int, target: Number) -> MultilinearPoly:
    """sum_v x_v - target."""
    return linear(n, {v: 1 for v in range(n)}, -target)


@dataclass(frozen=True)
class BinaryProgram:
    """Optimize ``objective`` over x in {0,1}^n subject to ``constraint`` >= 0 (or == 0)."""

    n: int
    objective: MultilinearPoly
    constraint: MultilinearPoly
    sense: str = "min"
    constraint_kind: str = "ge"

    def __post_init__(self):
        if self.objective.n != self.n or self.constraint.n != self.n:
            raise ValueError("objective/constraint variable counts must equal n")
        if self.sense not in ("min", "max"):
            raise ValueError(f"sense must be 'min' or 'max', got {self.sense!r}")
        if self.constraint_kind not in ("ge", "eq"):
            raise ValueError(f"constraint_kind must be 'ge' or 'eq', got {self.constraint_kind!r}")

    @property
    def degree(self) -> int:
        return max(self.objective.degree, self.constraint.degree)

    def feasible(self, x: Sequence[int]) -> bool:
        q = eval_poly(self.constraint, x)
        return q == 0 if self.constraint_kind == "eq" else q >= 0

    def brute_force(self) -> tuple[Number, tuple[int, ...]] | None:
        """Exact optimum by enumeration (small n only); None if infeasible."""
        if self.n > 24:
            raise ValueError(f"brute force guard: n={self.n} > 24")
        best = None
        for x in itertools.product((0, 1), repeat=self.n):
            if not self.feasible(x):
                continue
            val = eval_poly(self.objective, x)
            if best is None or (val < best[0] if self.sense == "min" else val > best[0]):
                best = (val, x)
        return best
