"""Small dense SDPs in equality-standard form, an ADMM solver, and SDPA I/O.

Problems have the form::

    min (or max)  sum_k <C_k, X_k>
    s.t.          sum_k <A_ik, X_k> = b_i      for every row i
                  X_k PSD (dense blocks) or X_k >= 0 entrywise (diagonal blocks)

Rows and the objective are stored as sparse maps ``{(block, i, j): coeff}``
with ``i <= j``; the coefficient multiplies the single matrix entry
``X[i, j]`` (not the trace inner product, which would double off-diagonal
terms).  The SDPA writer converts between the two conventions.
"""

from __future__ import annotations

import io
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence, TextIO

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITER = 200_000

Entry = tuple  # (block, i, j) with i <= j


@dataclass(frozen=True)
class SdpProblem:
    """Equality-standard-form SDP over a block-diagonal variable.

    ``blocks`` holds one ``(size, kind)`` per block, kind ``"psd"`` or
    ``"diag"``.  ``labels`` optionally names block rows (e.g. moment keys)
    and is ignored by the solver and SDPA writer.
    """

    blocks: tuple
    constraints: tuple  # of Mapping[Entry, float]
    rhs: tuple
    objective: Mapping
    sense: str = "min"
    labels: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.sense not in ("min", "max"):
            raise ValueError(f"bad sense {self.sense!r}")
        if len(self.constraints) != len(self.rhs):
            raise ValueError("constraints and rhs differ in length")
        for k, (size, kind) in enumerate(self.blocks):
            if size <= 0 or kind not in ("psd", "diag"):
                raise ValueError(f"bad block {k}: {(size, kind)}")
        for r, row in enumerate(self.constraints):
            if not row:
                raise ValueError(f"constraint row {r} is empty")
            for e in row:
                self._check_entry(e)
        for e in self.objective:
            self._check_entry(e)

    def _check_entry(self, e):
        b, i, j = e
        if not 0 <= b < len(self.blocks):
            raise ValueError(f"entry {e}: block out of range")
        size, kind = self.blocks[b]
        if not (0 <= i <= j < size):
            raise ValueError(f"entry {e}: index out of range or not upper-triangular")
        if kind == "diag" and i != j:
            raise ValueError(f"entry {e}: off-diagonal entry in diagonal block")

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def canonical(self) -> tuple:
        """Hashable normal form: minimization, float coefficients, sorted entries."""
        sign = 1.0 if self.sense == "min" else -1.0
        rows = tuple(
            tuple(sorted((e, float(c)) for e, c in row.items() if c != 0)) for row in self.constraints
        )
        obj = tuple(sorted((e, sign * float(c)) for e, c in self.objective.items() if c != 0))
        blocks = tuple((int(s), k) for s, k in self.blocks)
        return blocks, rows, tuple(float(b) for b in self.rhs), obj

    def evaluate(self, mats: Sequence[np.ndarray]) -> tuple[float, np.ndarray]:
        """Objective value and per-row equality violations ``A(X) - b``."""
        obj = sum(float(c) * mats[b][i, j] for (b, i, j), c in self.objective.items())
        viol = np.array(
            [sum(float(c) * mats[b][i, j] for (b, i, j), c in row.items()) - float(rhs)
             for row, rhs in zip(self.constraints, self.rhs)]
        )
        return obj, viol

    def to_json(self) -> dict:
        return {
            "schema": "v1",
            "kind": "sdp-problem",
            "sense": self.sense,
            "blocks": [[int(s), k] for s, k in self.blocks],
            "constraints": [
                {"entries": [[b, i, j, float(c)] for (b, i, j), c in sorted(row.items())], "rhs": float(r)}
                for row, r in zip(self.constraints, self.rhs)
            ],
            "objective": [[b, i, j, float(c)] for (b, i, j), c in sorted(self.objective.items())],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> SdpProblem:
        rows = tuple({(b, i, j): c for b, i, j, c in row["entries"]} for row in data["constraints"])
        return cls(
            blocks=tuple((s, k) for s, k in data["blocks"]),
            constraints=rows,
            rhs=tuple(row["rhs"] for row in data["constraints"]),
            objective={(b, i, j): c for b, i, j, c in data["objective"]},
            sense=data["sense"],
        )


@dataclass
class SdpSolution:
    blocks: list
    objective: float
    primal_residual: float
    min_eigs: list
    iterations: int
    status: str  # converged | max_iter | infeasible_suspected
    rho: float = float("nan")

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def psd_project(a: np.ndarray) -> np.ndarray:
    """Nearest PSD matrix in Frobenius norm (clip negative eigenvalues)."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    if np.abs(a - a.T).max(initial=0.0) > 1e-12 * scale:
        raise ValueError("psd_project: input is not symmetric")
    w, v = np.linalg.eigh(a)
    w = np.clip(w, 0.0, None)
    out = (v * w) @ v.T
    return (out + out.T) / 2


class _Layout:
    """svec layout: off-diagonal entries scaled by sqrt(2) so Frobenius = Euclidean."""

    def __init__(self, blocks):
        self.blocks = blocks
        self.offsets = []
        self.tri = []
        pos = 0
        for size, kind in blocks:
            self.offsets.append(pos)
            if kind == "psd":
                iu, ju = np.triu_indices(size)
                self.tri.append((iu, ju))
                pos += len(iu)
            else:
                self.tri.append(None)
                pos += size
        self.dim = pos
        self.weight = np.ones(pos)
        for k, (size, kind) in enumerate(blocks):
            if kind == "psd":
                iu, ju = self.tri[k]
                off = self.offsets[k]
                self.weight[off:off + len(iu)][iu != ju] = math.sqrt(2.0)
        self._index = {}
        for k, (size, kind) in enumerate(blocks):
            if kind == "psd":
                iu, ju = self.tri[k]
                for p, (i, j) in enumerate(zip(iu.tolist(), ju.tolist())):
                    self._index[(k, i, j)] = self.offsets[k] + p
            else:
                for i in range(size):
                    self._index[(k, i, i)] = self.offsets[k] + i

    def position(self, entry) -> int:
        return self._index[entry]

    def to_vec(self, coeffs: Mapping) -> np.ndarray:
        """Vector c with <c, svec(X)> = sum coeff * X_ij."""
        out = np.zeros(self.dim)
        for e, c in coeffs.items():
            p = self._index[e]
            out[p] += float(c) / self.weight[p]
        return out

    def to_mats(self, x: np.ndarray) -> list:
        mats = []
        for k, (size, kind) in enumerate(self.blocks):
            off = self.offsets[k]
            if kind == "psd":
                iu, ju = self.tri[k]
                vals = x[off:off + len(iu)] / self.weight[off:off + len(iu)]
                m = np.zeros((size, size))
                m[iu, ju] = vals
                m[ju, iu] = vals
            else:
                m = np.diag(x[off:off + size])
            mats.append(m)
        return mats

    def project_cone(self, x: np.ndarray) -> np.ndarray:
        out = np.empty_like(x)
        for k, (size, kind) in enumerate(self.blocks):
            off = self.offsets[k]
            if kind == "psd":
                iu, ju = self.tri[k]
                w = self.weight[off:off + len(iu)]
                m = np.zeros((size, size))
                m[iu, ju] = x[off:off + len(iu)] / w
                m[ju, iu] = m[iu, ju]
                vals, vecs = np.linalg.eigh(m)
                np.clip(vals, 0.0, None, out=vals)
                p = (vecs * vals) @ vecs.T
                out[off:off + len(iu)] = p[iu, ju] * w
            else:
                out[off:off + size] = np.clip(x[off:off + size], 0.0, None)
        return out


class _AffineProjector:
    """Euclidean projection onto {x : A x = b} via a sparse LU of A A^T.

    A tiny ridge keeps the factorization defined when rows are dependent;
    iterative refinement removes its bias on consistent systems.
    """

    def __init__(self, a: sp.csr_matrix, b: np.ndarray, refine: int = 3):
        self.a = a
        self.at = a.T.tocsr()
        self.b = b
        g = (a @ self.at).tocsc()
        self.g = g
        ridge = 1e-12 * max(1.0, float(abs(g).max()))
        self.lu = spla.splu((g + ridge * sp.identity(g.shape[0], format="csc")).tocsc())
        self.refine = refine

    def __call__(self, v: np.ndarray) -> np.ndarray:
        r = self.a @ v - self.b
        w = self.lu.solve(r)
        for _ in range(self.refine):
            w += self.lu.solve(r - self.g @ w)
        return v - self.at @ w


def _sparse_rows(problem: SdpProblem, layout: _Layout) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    for r, row in enumerate(problem.constraints):
        for e, c in row.items():
            p = layout.position(e)
            rows.append(r)
            cols.append(p)
            vals.append(float(c) / layout.weight[p])
    return sp.csr_matrix((vals, (rows, cols)), shape=(problem.num_constraints, layout.dim))


def solve(problem: SdpProblem, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
          alpha: float = 1.6, rho: float = 1.0, check_every: int = 25) -> SdpSolution:
    """Solve by ADMM: alternate projections onto the affine set and the cone.

    Converged means the returned (cone-feasible) iterate has max equality
    violation <= tol and the scaled successive-iterate change is <= tol.
    All reported residuals are recomputed from the returned matrices.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    layout = _Layout(problem.blocks)
    a = _sparse_rows(problem, layout)
    b = np.array([float(v) for v in problem.rhs])
    c = layout.to_vec(problem.objective)
    if problem.sense == "max":
        c = -c
    proj = _AffineProjector(a, b)

    z = np.zeros(layout.dim)
    u = np.zeros(layout.dim)
    status = "max_iter"
    stall_ref = None
    it = 0
    cscale = 1.0 + np.linalg.norm(c)
    bscale = 1.0 + np.linalg.norm(b)
    for it in range(1, max_iter + 1):
        x = proj(z - u - c / rho)
        xh = alpha * x + (1 - alpha) * z
        z_old = z
        z = layout.project_cone(xh + u)
        u = u + xh - z
        if it % check_every:
            continue
        if not np.all(np.isfinite(z)) or not np.all(np.isfinite(u)):
            raise FloatingPointError(f"NaN/inf in ADMM iterate at iteration {it} (rho={rho:g})")
        r_p = np.linalg.norm(x - z)
        r_d = rho * np.linalg.norm(z - z_old)
        eq = np.abs(a @ z - b).max(initial=0.0)
        if eq <= tol and r_p <= tol * bscale and r_d <= tol * cscale:
            status = "converged"
            break
        # infeasibility: cone iterate stationary while the gap to the affine set persists
        if it % 2000 == 0:
            if stall_ref is not None and r_p > tol and r_p > 0.999 * stall_ref and r_d < 1e-3 * tol:
                status = "infeasible_suspected"
                break
            stall_ref = r_p
        if it % (check_every * 4) == 0:
            if r_p > 10 * r_d:
                rho *= 2.0
                u /= 2.0
            elif r_d > 10 * r_p:
                rho /= 2.0
                u *= 2.0

    mats = layout.to_mats(z)
    obj, viol = problem.evaluate(mats)
    residual = float(np.abs(viol).max(initial=0.0))
    min_eigs = [float(np.linalg.eigvalsh(m).min()) if kind == "psd" else float(np.diag(m).min())
                for m, (_, kind) in zip(mats, problem.blocks)]
    if status == "converged" and (residual > tol or min(min_eigs) < -tol):
        status = "max_iter"
    log.debug("solve: status=%s it=%d obj=%.10g residual=%.2e", status, it, obj, residual)
    return SdpSolution(mats, obj, residual, min_eigs, it, status, rho)


# ---------------------------------------------------------------- SDPA I/O

def export_sdpa(problem: SdpProblem, sink: TextIO | None = None) -> str:
    """Write ``problem`` in SDPA sparse format (.dat-s).

    The problem maps onto SDPA's dual form ``max <F0, Y> s.t. <Fi, Y> = ci``:
    F0 is the objective (negated for minimization), Fi the constraint rows,
    and the c vector on line 4 the right-hand sides.
    """
    if problem.num_constraints == 0:
        raise ValueError("SDPA export needs at least one equality constraint")
    sign = -1.0 if problem.sense == "min" else 1.0
    fmt = "{:.17g}".format
    lines = [
        str(problem.num_constraints),
        str(len(problem.blocks)),
        " ".join(str(s if kind == "psd" else -s) for s, kind in problem.blocks),
        " ".join(fmt(float(v)) for v in problem.rhs),
    ]

    def emit(matno, coeffs, scale):
        for (b, i, j), c in sorted(coeffs.items()):
            c = scale * float(c)
            if c == 0:
                continue
            if i != j:
                c /= 2.0
            lines.append(f"{matno} {b + 1} {i + 1} {j + 1} {fmt(c)}")

    emit(0, problem.objective, sign)
    for r, row in enumerate(problem.constraints, start=1):
        emit(r, row, 1.0)
    text = "\n".join(lines) + "\n"
    if sink is not None:
        sink.write(text)
    return text


def parse_sdpa(source: str | TextIO) -> SdpProblem:
    """Read SDPA sparse format; the result is a maximization problem."""
    text = source.read() if hasattr(source, "read") else source
    lines = [ln.strip() for ln in io.StringIO(text)]
    lines = [ln for ln in lines if ln and ln[0] not in "*\""]

    def nums(ln):
        for ch in ",(){}":
            ln = ln.replace(ch, " ")
        return ln.split()

    m = int(nums(lines[0])[0])
    nblocks = int(nums(lines[1])[0])
    sizes = [int(float(t)) for t in nums(lines[2])][:nblocks]
    rhs = [float(t) for t in nums(lines[3])][:m]
    if len(sizes) != nblocks or len(rhs) != m:
        raise ValueError("malformed SDPA header")
    blocks = tuple((abs(s), "psd" if s > 0 else "diag") for s in sizes)
    mats = [dict() for _ in range(m + 1)]
    for ln in lines[4:]:
        t = nums(ln)
        matno, blk, i, j = (int(v) for v in t[:4])
        val = float(t[4])
        i, j = min(i, j), max(i, j)
        if i != j:
            val *= 2.0
        key = (blk - 1, i - 1, j - 1)
        mats[matno][key] = mats[matno].get(key, 0.0) + val
    return SdpProblem(blocks=blocks, constraints=tuple(mats[1:]), rhs=tuple(rhs),
                      objective=mats[0], sense="max")


def dumps_json(problem: SdpProblem) -> str:
    return json.dumps(problem.to_json(), sort_keys=True)
