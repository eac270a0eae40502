"""Moment vectors, moment matrices and Lasserre relaxations of binary programs.

The relaxation of ``optimize P(x) s.t. Q(x) >= 0, x in {0,1}^n`` at round r
has one variable y_T per subset |T| <= 2r, with y_empty = 1, the moment
matrix M(y) (rows/columns indexed by subsets of size <= r, entry y_{S u T})
PSD, and the localizing matrix M(Q*y) PSD.  ``LiftedSDP`` keeps this
moment-level description; ``LiftedSDP.to_sdp`` lowers it to the
equality-standard form understood by :mod:`lassgap.sdp`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import sdp
from .poly import (BinaryProgram, MultilinearPoly, SubsetKey, count_subsets, cut_polynomial,
                   enumerate_subsets, subset_order, union)


class NotPSDError(ValueError):
    pass


def _is_exact(v) -> bool:
    return isinstance(v, (int, Fraction)) and not isinstance(v, bool)


# ------------------------------------------------------------ moment vectors

@dataclass(frozen=True)
class MomentVector:
    """Map y from subsets of size <= 2r (capped at n) to reals, y_empty = 1."""

    n: int
    r: int
    values: Mapping[SubsetKey, object]

    def __post_init__(self):
        if self.values.get((), None) != 1:
            raise ValueError("moment vector must have y_empty = 1")
        top = min(2 * self.r, self.n)
        if len(self.values) < count_subsets(self.n, top):
            missing = next(k for k in enumerate_subsets(self.n, top) if k not in self.values)
            raise ValueError(f"moment vector missing entry {missing}")

    def __getitem__(self, key: SubsetKey):
        return self.values[key]

    @property
    def top(self) -> int:
        return min(2 * self.r, self.n)

    def as_float(self) -> MomentVector:
        return MomentVector(self.n, self.r, {k: float(v) for k, v in self.values.items()})


def rank1_lift(x: Sequence[int], r: int) -> MomentVector:
    """Moments of the point mass at ``x``: y_S = prod_{i in S} x_i."""
    n = len(x)
    ones = {i for i, b in enumerate(x) if b}
    vals = {k: int(ones.issuperset(k)) for k in enumerate_subsets(n, min(2 * r, n))}
    return MomentVector(n, r, vals)


def mix(moments: Sequence[MomentVector], weights: Sequence) -> MomentVector:
    """Convex combination of moment vectors with the same (n, r)."""
    n, r = moments[0].n, moments[0].r
    vals = {}
    for k in moments[0].values:
        vals[k] = sum(w * m.values[k] for m, w in zip(moments, weights))
    vals[()] = 1
    return MomentVector(n, r, vals)


@dataclass(frozen=True)
class MomentMatrix:
    basis: tuple
    matrix: np.ndarray  # object dtype on the exact path, float otherwise

    def entry(self, s: SubsetKey, t: SubsetKey):
        idx = {b: i for i, b in enumerate(self.basis)}
        return self.matrix[idx[s], idx[t]]


def moment_matrix(y: MomentVector, level: int | None = None) -> MomentMatrix:
    level = y.r if level is None else level
    if level > y.r:
        raise ValueError(f"level {level} exceeds round {y.r}")
    basis = tuple(enumerate_subsets(y.n, min(level, y.n)))
    exact = all(_is_exact(v) for v in y.values.values())
    m = np.empty((len(basis), len(basis)), dtype=object if exact else float)
    for i, s in enumerate(basis):
        for j in range(i, len(basis)):
            key = union(s, basis[j])
            if key not in y.values:
                raise KeyError(f"missing moment entry {key}")
            m[i, j] = m[j, i] = y.values[key]
    return MomentMatrix(basis, m)


def shift(p: MultilinearPoly, y: MomentVector) -> dict:
    """(P*y)_S = sum_T P(T) y_{S u T} for |S| <= 2r - deg(P)."""
    d = p.degree
    if d > y.top:
        raise ValueError(f"degree {d} too large for round {y.r}")
    out = {}
    for s in enumerate_subsets(y.n, y.top - d):
        out[s] = sum((c * y.values[union(s, t)] for t, c in p.coeffs.items()), 0)
    return out


# --------------------------------------------------------------- Gram vectors

@dataclass(frozen=True)
class GramSolution:
    """One vector per basis subset, stored as the rows of ``vectors``."""

    basis: tuple
    vectors: np.ndarray
    index: Mapping = field(default=None, compare=False)

    def __post_init__(self):
        if self.index is None:
            object.__setattr__(self, "index", {b: i for i, b in enumerate(self.basis)})

    def vec(self, s: SubsetKey) -> np.ndarray:
        try:
            return self.vectors[self.index[s]]
        except KeyError:
            raise KeyError(f"no vector for subset {s}") from None

    def inner(self, s: SubsetKey, t: SubsetKey):
        return self.vec(s) @ self.vec(t)

    def gram(self) -> np.ndarray:
        return self.vectors @ self.vectors.T

    def moments(self) -> dict:
        """Squared norms, i.e. the moments y_S for basis subsets."""
        return {s: self.inner(s, s) for s in self.basis}


def gram_from_moments(y: MomentVector, level: int | None = None, tol: float = 1e-9) -> GramSolution:
    """Factor M(y) = U U^T by eigendecomposition, clipping eigenvalues in [-tol, 0)."""
    mm = moment_matrix(y, level)
    m = np.asarray(mm.matrix, dtype=float)
    w, v = np.linalg.eigh(m)
    if w.min(initial=0.0) < -tol:
        raise NotPSDError(f"moment matrix has eigenvalue {w.min():.3e} < -{tol:g}")
    keep = w > 0
    vectors = v[:, keep] * np.sqrt(w[keep])
    if vectors.shape[1] == 0:
        vectors = np.zeros((len(mm.basis), 1))
    return GramSolution(mm.basis, vectors)


def rank1_gram(x: Sequence[int], level: int) -> GramSolution:
    """Exact Gram vectors U_S = x_S * e for a 0/1 point (object dtype)."""
    basis = tuple(enumerate_subsets(len(x), min(level, len(x))))
    ones = {i for i, b in enumerate(x) if b}
    vecs = np.empty((len(basis), 1), dtype=object)
    for i, s in enumerate(basis):
        vecs[i, 0] = Fraction(int(ones.issuperset(s)))
    return GramSolution(basis, vecs)


@dataclass
class VectorReport:
    union_violations: list  # (A, B, deviation)
    negative_inner: list  # (A, B, value)
    empty_norm_deviation: float
    empty_ok: bool = True

    @property
    def ok(self) -> bool:
        return not self.union_violations and not self.negative_inner and self.empty_ok

    @property
    def max_violation(self) -> float:
        vals = [abs(d) for *_, d in self.union_violations] + [-v for *_, v in self.negative_inner]
        vals.append(abs(self.empty_norm_deviation))
        return max(vals)

    def vectors_named(self) -> set:
        out = set()
        for a, b, _ in self.union_violations + self.negative_inner:
            out.update((a, b))
        return out


def verify_vector_constraints(g: GramSolution, tol: float = 1e-8, nonneg: bool = True) -> VectorReport:
    """Check <U_A, U_B> = ||U_{A u B}||^2 (and equal-union consistency), <U_A, U_B> >= 0, ||U_empty||^2 = 1."""
    gram = g.gram()
    exact = gram.dtype == object
    basis = g.basis
    first_of_union: dict = {}
    union_bad, neg_bad = [], []
    for i, a in enumerate(basis):
        for j in range(i, len(basis)):
            b = basis[j]
            val = gram[i, j]
            key = union(a, b)
            if key in g.index:
                ref = gram[g.index[key], g.index[key]]
            else:
                ref = first_of_union.setdefault(key, val)
            dev = val - ref
            if (dev != 0) if exact and tol == 0 else abs(dev) > tol:
                union_bad.append((a, b, float(dev)))
            if nonneg and val < -tol:
                neg_bad.append((a, b, float(val)))
    dev0 = gram[g.index[()], g.index[()]] - 1
    ok0 = (dev0 == 0) if exact and tol == 0 else abs(dev0) <= tol
    return VectorReport(union_bad, neg_bad, float(dev0), ok0)


@dataclass(frozen=True)
class LiftCertificate:
    delta: object
    residual: float
    accepted: bool
    residual_sq: object = None


def _sum_vectors(g, q: MultilinearPoly):
    total = None
    for s, c in q.coeffs.items():
        term = c * np.asarray(g.vec(s))
        total = term if total is None else total + term
    return total


def certify_lift(g, q: MultilinearPoly, tol: float = 1e-9) -> LiftCertificate:
    """Test sum_S Q(S) U_S = delta U_empty with delta >= 0.

    ``g`` is anything exposing ``vec(subset)``.  delta is the component of
    the combination along U_empty; the residual is the norm of what is left.
    Exact (object-dtype) vectors give an exact delta and squared residual.
    """
    u0 = np.asarray(g.vec(()))
    if not q.coeffs:
        zero = 0 * (u0 @ u0)
        return LiftCertificate(zero, 0.0, True, zero)
    try:
        combo = _sum_vectors(g, q)
    except KeyError as exc:
        raise KeyError(f"certify_lift: subset not covered by the vector family: {exc}") from None
    norm0 = u0 @ u0
    delta = (combo @ u0) / norm0
    rest = combo - delta * u0
    res_sq = rest @ rest
    residual = 0.0 if res_sq == 0 else math.sqrt(float(res_sq))
    accepted = residual <= tol and delta >= -tol
    return LiftCertificate(delta, residual, bool(accepted), res_sq)


def implied_y_vectors(g: GramSolution, delta) -> GramSolution:
    """Y_A = sqrt(max(delta, 0)) U_A, the localizing vectors an accepted certificate implies."""
    scale = math.sqrt(max(float(delta), 0.0))
    return GramSolution(g.basis, np.asarray(g.vectors, dtype=float) * scale)


# ----------------------------------------------------------- lifted programs

@dataclass(frozen=True)
class MomentBlock:
    """A PSD (or entrywise nonnegative diagonal) block whose entries are linear in y.

    ``entries`` maps (i, j), i <= j, to ``{moment key: coeff}``.
    """

    name: str
    basis: tuple
    entries: Mapping
    kind: str = "psd"

    @property
    def size(self) -> int:
        return len(self.basis)


@dataclass(frozen=True)
class LiftedSDP:
    n: int
    r: int
    blocks: tuple
    equalities: tuple  # of ({key: coeff}, rhs)
    objective: Mapping
    sense: str = "min"
    meta: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self):
        top = 2 * self.r
        for blk in self.blocks:
            for expr in blk.entries.values():
                for k in expr:
                    if len(k) > top:
                        raise ValueError(f"block {blk.name} references moment {k} beyond round {self.r}")
        for expr, _ in self.equalities:
            if not expr:
                raise ValueError("empty equality row")
            for k in expr:
                if len(k) > top:
                    raise ValueError(f"equality references moment {k} beyond round {self.r}")

    @property
    def block_sizes(self) -> tuple:
        return tuple(b.size for b in self.blocks)

    def moment_keys(self) -> list:
        keys = {()}
        for blk in self.blocks:
            for expr in blk.entries.values():
                keys.update(expr)
        for expr, _ in self.equalities:
            keys.update(expr)
        keys.update(self.objective)
        return sorted(keys, key=subset_order)

    def objective_value(self, y: Mapping):
        return sum((c * y[k] for k, c in self.objective.items()), 0)

    def residuals(self, y: Mapping) -> dict:
        """Evaluate every constraint at moments ``y``.

        Returns max |equality violation| (exact when y and coefficients are),
        the minimum eigenvalue of each block, and the objective value.
        """
        eq = 0
        for expr, rhs in self.equalities:
            v = sum((c * y[k] for k, c in expr.items()), 0) - rhs
            eq = max(eq, abs(v))
        eq = max(eq, abs(y[()] - 1))
        min_eigs = []
        for blk in self.blocks:
            m = np.zeros((blk.size, blk.size))
            for (i, j), expr in blk.entries.items():
                m[i, j] = m[j, i] = float(sum((c * y[k] for k, c in expr.items()), 0))
            if blk.kind == "psd":
                min_eigs.append(float(np.linalg.eigvalsh(m).min()) if blk.size else 0.0)
            else:
                min_eigs.append(float(np.diag(m).min()) if blk.size else 0.0)
        return {"equality": eq, "min_eigs": min_eigs, "objective": self.objective_value(y)}

    def to_sdp(self) -> tuple[sdp.SdpProblem, dict]:
        """Lower to equality-standard form.

        Each moment key gets one representative entry of the first block;
        every other block entry is tied to its linear expression in the
        representatives.  Returns the problem and the key -> entry map.
        """
        first = self.blocks[0]
        rep: dict = {}
        for (i, j), expr in sorted(first.entries.items()):
            if len(expr) == 1:
                (k, c), = expr.items()
                if c == 1 and k not in rep:
                    rep[k] = (0, i, j)
        for k in self.moment_keys():
            if k not in rep:
                raise ValueError(f"moment {k} has no representative entry in block {first.name}")

        def lower(expr):
            out: dict = {}
            for k, c in expr.items():
                e = rep[k]
                out[e] = out.get(e, 0) + float(c)
            return out

        rows, rhs = [], []
        rows.append({rep[()]: 1.0})
        rhs.append(1.0)
        for b, blk in enumerate(self.blocks):
            for (i, j), expr in sorted(blk.entries.items()):
                if b == 0 and len(expr) == 1 and rep.get(next(iter(expr))) == (0, i, j):
                    continue
                row = {(b, i, j): 1.0}
                for e, c in lower(expr).items():
                    row[e] = row.get(e, 0.0) - c
                rows.append(row)
                rhs.append(0.0)
        for expr, r in self.equalities:
            row = {e: c for e, c in lower(expr).items() if c != 0}
            if not row:
                raise ValueError("equality row vanished after lowering")
            rows.append(row)
            rhs.append(float(r))
        problem = sdp.SdpProblem(
            blocks=tuple((blk.size, blk.kind) for blk in self.blocks),
            constraints=tuple(rows),
            rhs=tuple(rhs),
            objective=lower(self.objective),
            sense=self.sense,
            labels={"moment_rep": rep},
        )
        return problem, rep

    def moments_from_solution(self, solution: sdp.SdpSolution, rep: Mapping) -> dict:
        return {k: float(solution.blocks[b][i, j]) for k, (b, i, j) in rep.items()}


def _moment_block(name: str, basis: Sequence[SubsetKey], poly: MultilinearPoly | None = None) -> MomentBlock:
    entries = {}
    for i, s in enumerate(basis):
        for j in range(i, len(basis)):
            st = union(s, basis[j])
            if poly is None:
                entries[(i, j)] = {st: 1}
            else:
                expr: dict = {}
                for t, c in poly.coeffs.items():
                    k = union(st, t)
                    expr[k] = expr.get(k, 0) + c
                entries[(i, j)] = {k: c for k, c in expr.items() if c != 0}
    return MomentBlock(name, tuple(basis), entries)


def build_lifted_sdp(prog: BinaryProgram, r: int) -> LiftedSDP:
    """Round-r relaxation: M(y) PSD, M(Q*y) PSD (or (Q*y)_S = 0 for equality constraints)."""
    d = prog.degree
    if r < d:
        raise ValueError(f"round r={r} is below the program degree d={d}")
    n = prog.n
    dq = prog.constraint.degree
    blocks = [_moment_block("M(y)", list(enumerate_subsets(n, min(r, n))))]
    equalities = []
    if prog.constraint_kind == "ge":
        lvl = r - math.ceil(dq / 2)
        blocks.append(_moment_block("M(Q*y)", list(enumerate_subsets(n, min(lvl, n))), prog.constraint))
    else:
        for s in enumerate_subsets(n, min(2 * r - dq, n)):
            expr: dict = {}
            for t, c in prog.constraint.coeffs.items():
                k = union(s, t)
                expr[k] = expr.get(k, 0) + c
            expr = {k: c for k, c in expr.items() if c != 0}
            if expr:
                equalities.append((expr, 0))
    return LiftedSDP(n, r, tuple(blocks), tuple(equalities), dict(prog.objective.coeffs), prog.sense,
                     {"kind": "lasserre", "degree": d})


# ------------------------------------------------------------ Psi families

def _as_fraction(t) -> Fraction:
    if isinstance(t, float):
        return Fraction(t).limit_denominator(10**9)
    return Fraction(t)


def _graph_parts(graph):
    n = int(graph.n)
    edges = [(int(u), int(v)) for u, v in graph.edges]
    return n, edges


def _balance_equalities(n: int, r: int, k: int) -> list:
    """sum_v y_{S u {v}} = k y_S for every |S| <= 2r - 1."""
    out = []
    for s in enumerate_subsets(n, min(2 * r - 1, n)):
        expr: dict = {}
        for v in range(n):
            key = union(s, (v,))
            expr[key] = expr.get(key, 0) + 1
        expr[s] = expr.get(s, 0) - k
        expr = {key: c for key, c in expr.items() if c != 0}
        if expr:
            out.append((expr, 0))
    return out


def _psi_member(n, r, edges, k, scale, meta, nonneg=True) -> LiftedSDP:
    basis = list(enumerate_subsets(n, min(r, n)))
    blocks = [_moment_block("M(y)", basis)]
    if nonneg:
        # keys of size <= r sit on the diagonal of M(y) and are nonnegative already
        high = [key for key in enumerate_subsets(n, min(2 * r, n)) if len(key) > r]
        if high:
            blocks.append(MomentBlock("nonneg", tuple(high), {(i, i): {key: 1} for i, key in enumerate(high)}, "diag"))
    objective = {key: c * scale for key, c in cut_polynomial(n, edges).coeffs.items()}
    return LiftedSDP(n, r, tuple(blocks), tuple(_balance_equalities(n, r, k)), objective, "min", meta)


def build_psi1(graph, tau, r: int, nonneg: bool = True) -> list:
    """Balanced-separator relaxation family, one member per tau' = k/|V| in [tau, 1 - tau]."""
    tau = _as_fraction(tau)
    if not 0 < tau <= Fraction(1, 2):
        raise ValueError(f"tau must be in (0, 1/2], got {tau}")
    n, edges = _graph_parts(graph)
    lo = math.ceil(tau * n)
    hi = math.floor((1 - tau) * n)
    if lo > hi:
        raise ValueError(f"empty tau' grid for tau={tau}, |V|={n}")
    out = []
    for k in range(lo, hi + 1):
        tp = Fraction(k, n)
        meta = {"kind": "psi1", "tau": tau, "tau_prime": tp, "k": k}
        out.append((tp, _psi_member(n, r, edges, k, 1, meta, nonneg)))
    return out


def build_psi2(graph, r: int, nonneg: bool = True) -> list:
    """Uniform-sparsest-cut relaxation family, tau = k/|V| for k = 1..floor(|V|/2)."""
    n, edges = _graph_parts(graph)
    if n < 2:
        raise ValueError("need at least two vertices")
    out = []
    for k in range(1, n // 2 + 1):
        tau = Fraction(k, n)
        scale = 1 / (n * n * tau * (1 - tau))
        meta = {"kind": "psi2", "tau": tau, "k": k, "scale": scale}
        out.append((tau, _psi_member(n, r, edges, k, scale, meta, nonneg)))
    return out


# --------------------------------------------------------------- solving

@dataclass
class MemberResult:
    param: Fraction
    value: float
    residual: float
    status: str
    iterations: int
    moments: dict = field(repr=False, default_factory=dict)


def solve_lifted(lsdp: LiftedSDP, tol: float = sdp.DEFAULT_TOL, max_iter: int = sdp.DEFAULT_MAX_ITER,
                 param=None) -> MemberResult:
    problem, rep = lsdp.to_sdp()
    sol = sdp.solve(problem, tol=tol, max_iter=max_iter)
    return MemberResult(param, sol.objective, sol.primal_residual, sol.status, sol.iterations,
                        lsdp.moments_from_solution(sol, rep))


def solve_family(family: Iterable, tol: float = sdp.DEFAULT_TOL, max_iter: int = sdp.DEFAULT_MAX_ITER) -> tuple:
    """Solve every member; the family value is the minimum over converged members."""
    results = [solve_lifted(lsdp, tol, max_iter, param) for param, lsdp in family]
    good = [res for res in results if res.status == "converged"]
    value = min((res.value for res in good), default=float("nan"))
    return value, results
