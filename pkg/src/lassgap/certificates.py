"""Lift perfect 3-XOR Lasserre solutions to vector solutions on the gadget graphs.

A host subset S (sorted tuple of vertex ids) maps to a *token*: either a
pair (S', alpha) of the base solution or ``None`` for the zero vector.

* BS host: any Z_r vertex gives zero; left vertices contribute their
  constraint's variables and satisfying assignment, clique vertices their
  literal; clashing assignments give zero.
* USC host: any D_r vertex gives zero; D_l vertices are dropped (so a lone
  D_l vertex is the empty pair, i.e. U_empty); the rest is the BS token.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .gadgets import KIND, TAG, TAGS, GadgetGraph
from .lasserre import GramSolution, LiftCertificate, certify_lift
from .poly import MultilinearPoly
from .xor3 import Xor3Instance, XorLasserreSolution, compose

EMPTY = ((), ())


class ProvenanceError(ValueError):
    pass


class ImplicitLiftedSolution:
    """Lazily evaluated lifted vectors U_S for host subsets with |S| <= s."""

    def __init__(self, base: XorLasserreSolution, host: GadgetGraph, s: int, inst: Xor3Instance,
                 usc: bool = False):
        self.base = base
        self.host = host
        self.s = s
        self.inst = inst
        self.usc = usc
        self._tokens: dict = {}
        self._zero = np.zeros(base.dim, dtype=object if base.exact else float)
        if base.exact:
            self._zero[:] = Fraction(0)

    # -- token evaluation
    def _vertex_part(self, v: int):
        """(vars, bits) contributed by one vertex, 'zero' or 'drop'."""
        k = int(self.host.kinds[v])
        a, b, _ = (int(t) for t in self.host.role_data[v])
        if k == KIND["left"]:
            return self.inst.vars_of(a), ((b >> 2) & 1, (b >> 1) & 1, b & 1)
        if k == KIND["clique"]:
            return (a,), (b,)
        if k == KIND["zr"] or k == KIND["dr"]:
            return "zero"
        if k == KIND["dl"]:
            return "drop"
        raise ValueError(f"unknown role at vertex {v}")

    def token(self, subset: Sequence[int]):
        key = tuple(subset)
        if key in self._tokens:
            return self._tokens[key]
        if len(key) > self.s:
            raise ValueError(f"subset of size {len(key)} exceeds s={self.s}")
        tok = EMPTY
        for v in key:
            if not 0 <= v < self.host.n:
                raise ValueError(f"vertex {v} out of range")
            part = self._vertex_part(v)
            if part == "zero":
                tok = None
                break
            if part == "drop":
                continue
            tok = compose(tok[0], tok[1], part[0], part[1])
            if tok is None:
                break
        self._tokens[key] = tok
        return tok

    def vec(self, subset: Sequence[int]) -> np.ndarray:
        tok = self.token(tuple(sorted(subset)))
        return self._zero if tok is None else self.base.vec(*tok)

    def inner(self, a, b):
        return self.vec(a) @ self.vec(b)

    def gram_solution(self, subsets: Iterable[Sequence[int]]) -> GramSolution:
        """Materialize the vectors of a sub-collection (the empty set is always included)."""
        basis = [()]
        seen = {()}
        for s in subsets:
            k = tuple(sorted(s))
            if k not in seen:
                seen.add(k)
                basis.append(k)
        vecs = np.array([self.vec(k) for k in basis], dtype=object if self.base.exact else float)
        return GramSolution(tuple(basis), vecs.reshape(len(basis), -1))


def _check_base(base: XorLasserreSolution, inst: Xor3Instance, host: GadgetGraph, s: int):
    if base.r < 3 * s:
        raise ValueError(f"base round {base.r} < 3s = {3 * s}")
    if host.provenance.get("instance") != inst.instance_id:
        raise ProvenanceError("host graph was not built from this instance")
    if base.instance_id is not None and base.instance_id != inst.instance_id:
        raise ProvenanceError("base solution belongs to a different instance")


def lift_bs_solution(base: XorLasserreSolution, H: GadgetGraph, s: int, inst: Xor3Instance) -> ImplicitLiftedSolution:
    if H.provenance.get("stage") not in ("H", "H'"):
        raise ProvenanceError("lift_bs_solution needs a Balanced Separator host")
    _check_base(base, inst, H, s)
    return ImplicitLiftedSolution(base, H, s, inst)


def lift_usc_solution(bs_sol: ImplicitLiftedSolution, U: GadgetGraph) -> ImplicitLiftedSolution:
    if U.provenance.get("stage") != "USC" or U.provenance.get("parent") != bs_sol.host.digest:
        raise ProvenanceError("USC graph does not extend the lifted solution's host")
    return ImplicitLiftedSolution(bs_sol.base, U, bs_sol.s, bs_sol.inst, usc=True)


# ------------------------------------------------------------- objectives

def _fast_tokens(sol: ImplicitLiftedSolution) -> tuple:
    """Vectorized singleton tokens: D and Z_r vertices are handled without per-vertex calls."""
    G = sol.host
    ids = np.full(G.n, -1, dtype=np.int64)
    table: dict = {}
    slow = np.flatnonzero((G.kinds == KIND["left"]) | (G.kinds == KIND["clique"]))
    for v in slow:
        tok = sol.token((int(v),))
        ids[v] = -1 if tok is None else table.setdefault(tok, len(table))
    dl = np.flatnonzero(G.kinds == KIND["dl"])
    if len(dl):
        ids[dl] = table.setdefault(EMPTY, len(table))
    return ids, list(table)


def edge_objective(sol: ImplicitLiftedSolution) -> tuple:
    """sum over edges of ||U_u - U_v||^2, aggregated over distinct token pairs.

    Returns (total, per-tag totals).  Expander and clique edges join
    vertices carrying the same vector and so contribute exact zeros.
    """
    G = sol.host
    ids, table = _fast_tokens(sol)
    vecs = [sol.base.vec(*t) for t in table]
    zero = 0 * (sol.base.vec(*EMPTY) @ sol.base.vec(*EMPTY))
    per_tag = {}
    total = zero
    if not len(G.edges):
        return total, {t: zero for t in TAGS}
    tu, tv = ids[G.edges[:, 0]], ids[G.edges[:, 1]]
    k = len(table) + 1
    codes = ((tu + 1) * k + (tv + 1)) * len(TAGS) + G.tags.astype(np.int64)
    uniq, counts = np.unique(codes, return_counts=True)
    cache: dict = {}
    for code, cnt in zip(uniq.tolist(), counts.tolist()):
        tag = code % len(TAGS)
        pair = code // len(TAGS)
        a, b = pair // k - 1, pair % k - 1
        if (a, b) not in cache:
            if a == b:
                d = zero
            else:
                va = vecs[a] if a >= 0 else None
                vb = vecs[b] if b >= 0 else None
                if va is None:
                    d = vb @ vb
                elif vb is None:
                    d = va @ va
                else:
                    diff = va - vb
                    d = diff @ diff
            cache[(a, b)] = d
        per_tag[TAGS[tag]] = per_tag.get(TAGS[tag], zero) + cnt * cache[(a, b)]
        total = total + cnt * cache[(a, b)]
    for t in TAGS:
        per_tag.setdefault(t, zero)
    return total, per_tag


def bs_objective(sol: ImplicitLiftedSolution):
    return edge_objective(sol)[0]


@dataclass(frozen=True)
class BalanceCheck:
    delta: object
    residual: float
    expected: object
    certificate: LiftCertificate

    @property
    def deviation(self):
        return None if self.expected is None else self.delta - self.expected

    @property
    def accepted(self) -> bool:
        ok = self.certificate.accepted
        if self.expected is not None:
            ok = ok and abs(self.deviation) <= (0 if isinstance(self.delta, Fraction) else 1e-6)
        return bool(ok)


def _balance(sol: ImplicitLiftedSolution, vertices, expected, tol: float) -> BalanceCheck:
    q = MultilinearPoly(sol.host.n, {(int(v),): 1 for v in vertices})
    cert = certify_lift(sol, q, tol=tol)
    return BalanceCheck(cert.delta, cert.residual, expected, cert)


def bs_balance_residual(sol: ImplicitLiftedSolution, exclude: Iterable[int] = (), tol: float = 1e-9) -> BalanceCheck:
    """sum_v U_v against delta U_empty over the BS host; ``exclude`` drops vertices (fault injection)."""
    drop = set(int(v) for v in exclude)
    verts = [v for v in range(sol.host.h_size) if v not in drop]
    M, m = int(sol.host.params["M"]), sol.host.m
    return _balance(sol, verts, (M + 1) * m, tol)


def implied_tau(check: BalanceCheck, n_vertices: int) -> Fraction:
    return Fraction(check.delta) / n_vertices if not isinstance(check.delta, float) else check.delta / n_vertices


def usc_balance(sol: ImplicitLiftedSolution, tol: float = 1e-9) -> BalanceCheck:
    U = sol.host
    M, m, lam = int(U.params["M"]), U.m, int(U.params["lam"])
    return _balance(sol, range(U.n), ((lam + 1) * M + 1) * m, tol)


@dataclass(frozen=True)
class UscValue:
    raw: object
    scaled: object
    bound: object
    tau: object
    delta: object


def usc_objective(sol: ImplicitLiftedSolution, tau=None, balance: BalanceCheck | None = None) -> UscValue:
    """Raw edge sum, value scaled by 1/(|V|^2 tau (1 - tau)), and the comparison bound raw/(tau |V|)^2."""
    if not sol.usc:
        raise ValueError("usc_objective needs a USC-lifted solution")
    nv = sol.host.n
    balance = usc_balance(sol) if balance is None else balance
    delta = balance.delta
    if nv == 0:
        zero = bs_objective(sol)
        return UscValue(zero, zero, zero, None, delta)
    implied = Fraction(delta) / nv if not isinstance(delta, float) else delta / nv
    if tau is not None and tau != implied:
        raise ValueError(f"tau={tau} differs from the implied balance fraction {implied}")
    raw = bs_objective(sol)
    if raw == 0:
        return UscValue(raw, raw, raw, implied, delta)
    scaled = raw / (delta * (nv - delta))
    bound = raw / (delta * delta)
    return UscValue(raw, scaled, bound, implied, delta)


def observation_residual(sol: ImplicitLiftedSolution) -> object:
    """max over constraints of ||sum of the four left singletons - U_empty||^2."""
    worst = 0
    u0 = sol.vec(())
    for i in range(sol.inst.m):
        tot = sum((sol.vec((4 * i + a,)) for a in range(4)), 0 * u0)
        d = tot - u0
        worst = max(worst, d @ d)
    return worst


# ---------------------------------------------------------------- reports

@dataclass(frozen=True)
class IdentityCheck:
    name: str
    expected: object
    observed: object

    @property
    def residual(self):
        return abs(self.observed - self.expected)

    def accepted(self, tol: float = 0.0) -> bool:
        return self.residual <= tol

    def to_json(self, tol: float = 0.0) -> dict:
        return {"identity": self.name, "expected": str(self.expected), "observed": str(self.observed),
                "residual": str(self.residual), "accepted": self.accepted(tol)}


def bs_identities(sol: ImplicitLiftedSolution) -> list:
    H = sol.host
    M, m = int(H.params["M"]), H.m
    bal = bs_balance_residual(sol)
    return [
        IdentityCheck("bs-objective", 5 * m, bs_objective(sol)),
        IdentityCheck("bs-balance", (M + 1) * m, bal.delta),
        IdentityCheck("bs-balance-residual", 0, bal.certificate.residual_sq),
        IdentityCheck("bs-vertex-count", (2 * M + 5) * m, H.h_size),
        IdentityCheck("observation-sum", 0, observation_residual(sol)),
    ]


def usc_identities(sol: ImplicitLiftedSolution) -> list:
    U = sol.host
    M, m, lam = int(U.params["M"]), U.m, int(U.params["lam"])
    bal = usc_balance(sol)
    val = usc_objective(sol, balance=bal)
    out = [
        IdentityCheck("usc-objective", (2 * M + 10) * m, val.raw),
        IdentityCheck("usc-balance", ((lam + 1) * M + 1) * m, bal.delta),
        IdentityCheck("usc-balance-residual", 0, bal.certificate.residual_sq),
        IdentityCheck("usc-vertex-count", (2 * (lam + 1) * M + 5) * m, U.n),
    ]
    if m:
        exp = Fraction((2 * M + 10) * m, ((lam + 1) * M + 1) * m * ((lam + 1) * M + 4) * m)
        out.append(IdentityCheck("usc-scaled", exp, val.scaled))
    return out


def report_json(checks: Sequence[IdentityCheck], tol: float = 0.0) -> str:
    return json.dumps({"schema": "v1", "kind": "certificate-report",
                       "checks": [c.to_json(tol) for c in checks]}, indent=1, sort_keys=True)
