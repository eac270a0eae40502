"""Command-line pipeline: gen -> build -> lift -> solve -> brute -> gap, plus certify and export.

Artifacts are canonical JSON files named by content hash inside the work
directory (``$LASSGAP_WORKDIR``, default ``./lassgap-work``).  Commands
refer to artifacts by path or by (a prefix of) their hash.

Exit codes: 0 success, 1 usage/guard error, 2 identity-check failure,
3 solver non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

from . import certificates as cert
from . import gadgets, lasserre, partition, sdp, xor3
from .graphs import Graph

SCHEMA = "v1"
EXIT_OK, EXIT_USAGE, EXIT_IDENTITY, EXIT_SOLVER = 0, 1, 2, 3
GAP_MAX_ITER = 20_000  # desk-scale cap per family member for the full pipeline


class CliError(Exception):
    pass


# ------------------------------------------------------------------ store

def workdir() -> Path:
    p = Path(os.environ.get("LASSGAP_WORKDIR", "lassgap-work"))
    p.mkdir(parents=True, exist_ok=True)
    return p


def canonical(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def store(kind: str, doc: dict) -> Path:
    text = canonical(doc)
    digest = hashlib.sha256(text.encode()).hexdigest()[:16]
    path = workdir() / f"{kind}-{digest}.json"
    if not path.exists():
        path.write_text(text + "\n")
    return path


def load(ref: str, kind: str | None = None) -> dict:
    p = Path(ref)
    if not p.exists():
        pattern = f"{kind}-{ref}*.json" if kind else f"*-{ref}*.json"
        hits = sorted(workdir().glob(pattern))
        if len(hits) != 1:
            raise CliError(f"artifact {ref!r} not found" if not hits else f"artifact {ref!r} is ambiguous")
        p = hits[0]
    doc = json.loads(p.read_text())
    if doc.get("schema") != SCHEMA:
        raise CliError(f"{p}: schema {doc.get('schema')!r} != {SCHEMA!r}")
    if kind and not doc.get("kind", "").endswith(kind):
        raise CliError(f"{p}: expected a {kind} artifact, found {doc.get('kind')!r}")
    return doc


# ----------------------------------------------------------------- config

@dataclass
class ExperimentConfig:
    n: int = 4
    beta: str = "2"
    M: int = 2
    lam: int = 10
    c: int = 16
    tau: str = "0.45"
    r: int = 1
    seed: int = 0
    prng: str = xor3.PRNG_TAG
    exact: bool = True
    planted: bool = True
    tol: float = sdp.DEFAULT_TOL
    max_iter: int = sdp.DEFAULT_MAX_ITER

    def __post_init__(self):
        m = Fraction(self.beta) * self.n
        if m.denominator != 1:
            raise CliError(f"m = beta*n = {m} is not an integer")
        if self.tol <= 0:
            raise CliError("tolerances must be positive")

    @property
    def m(self) -> int:
        return int(Fraction(self.beta) * self.n)

    @property
    def tau_fraction(self) -> Fraction:
        return Fraction(self.tau).limit_denominator(10**9)


@dataclass
class GapReport:
    config: dict
    instance_id: str
    graph_digest: str
    sdp_rows: list
    sdp_value: float
    integral: dict
    gap_ratio: float | None
    identities: list
    timings: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return json.loads(json.dumps({"schema": SCHEMA, "kind": "gap-report", **asdict(self)}, default=_plain))


def _plain(obj):
    if hasattr(obj, "item"):
        return obj.item()
    return str(obj)


def _rows_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=["param", "value", "residual", "status", "iterations"])
    w.writeheader()
    for row in rows:
        w.writerow(row)
    return buf.getvalue()


def _member_rows(results) -> list:
    return [{"param": str(r.param), "value": r.value, "residual": r.residual, "status": r.status,
             "iterations": r.iterations} for r in results]


def _graph_from_doc(doc) -> Graph:
    if doc["kind"] == "gadget-graph":
        return gadgets.GadgetGraph.from_json(doc).as_graph()
    return Graph(int(doc["n"]), doc["edges"])


# --------------------------------------------------------------- commands

def cmd_gen(a) -> int:
    if a.planted:
        inst, _ = xor3.sample_planted(a.n, a.m, a.seed)
    else:
        inst = xor3.sample_random(a.n, a.m, a.seed)
    print(store("instance", inst.to_json()))
    return EXIT_OK


def _params(a) -> gadgets.GadgetParams:
    return gadgets.GadgetParams(Fraction(a.beta), a.M, a.c, a.seed, certify=not a.no_certify)


def cmd_build(a) -> int:
    inst = xor3.Xor3Instance.from_json(load(a.instance, "instance"))
    H = gadgets.build_bs_instance(inst, _params(a))
    if a.reduce:
        H = gadgets.reduce_degree(H).graph
    out = H
    if a.usc:
        out = gadgets.build_usc_instance(H, a.lam, certify=not a.no_certify)
    fails = gadgets.audit(out, inst)
    if fails:
        print("\n".join(fails), file=sys.stderr)
        return EXIT_IDENTITY
    print(store("graph", out.to_json()))
    return EXIT_OK


def _lift(inst_doc, graph_doc):
    inst = xor3.Xor3Instance.from_json(inst_doc)
    if inst.planted is None:
        raise CliError("lifting needs a planted instance (no perfect base solution otherwise)")
    G = gadgets.GadgetGraph.from_json(graph_doc)
    base = xor3.perfect_solution_from_assignment(inst, inst.planted, 3)
    if G.provenance["stage"] == "USC":
        raise CliError("pass the Balanced Separator graph to lift; use --usc-graph for the augmentation")
    return inst, G, cert.lift_bs_solution(base, G, 1, inst)


def _emit_checks(checks, kind="certificate") -> int:
    doc = json.loads(cert.report_json(checks))
    print(store(kind, doc))
    for c in checks:
        print(f"{c.name}: expected={c.expected} observed={c.observed} accepted={c.accepted()}")
    return EXIT_OK if all(c.accepted() for c in checks) else EXIT_IDENTITY


def cmd_lift(a) -> int:
    _, _, sol = _lift(load(a.instance, "instance"), load(a.graph, "graph"))
    checks = cert.bs_identities(sol)
    if a.usc_graph:
        U = gadgets.GadgetGraph.from_json(load(a.usc_graph, "graph"))
        checks += cert.usc_identities(cert.lift_usc_solution(sol, U))
    return _emit_checks(checks)


def cmd_certify(a) -> int:
    _, G, sol = _lift(load(a.instance, "instance"), load(a.graph, "graph"))
    checks = cert.bs_identities(sol)
    wanted = {"balance": ("bs-balance", "bs-balance-residual"), "objective": ("bs-objective",)}
    if a.target != "all":
        checks = [c for c in checks if c.name in wanted[a.target]]
    bal = cert.bs_balance_residual(sol)
    print(f"delta={bal.delta} residual={bal.residual} implied_tau={cert.implied_tau(bal, G.h_size)}")
    return _emit_checks(checks)


def cmd_solve(a) -> int:
    g = _graph_from_doc(load(a.graph, "graph"))
    if g.n > a.max_vertices:
        raise CliError(f"guard: |V|={g.n} > --max-vertices {a.max_vertices}")
    tau = Fraction(a.tau).limit_denominator(10**9)
    fam = lasserre.build_psi1(g, tau, a.r) if a.problem == "bs" else lasserre.build_psi2(g, a.r)
    value, results = lasserre.solve_family(fam, a.tol, a.max_iter)
    rows = _member_rows(results)
    doc = {"schema": SCHEMA, "kind": "sdp-result", "problem": a.problem, "tau": str(tau), "r": a.r,
           "value": value, "rows": rows}
    print(store("sdp", doc))
    if a.csv:
        Path(a.csv).write_text(_rows_csv(rows))
    print(f"value={value}")
    return EXIT_OK if all(r["status"] == "converged" for r in rows) else EXIT_SOLVER


def _integral(g: Graph, problem: str, tau, exact: bool) -> dict:
    mode = "exact" if exact and g.n <= partition.EXACT_GUARD else "local-search"
    if problem == "bs":
        c = partition.best_balanced_separator(g, tau, mode)
        value = c.stats.crossing
    else:
        c = partition.best_sparsest_cut(g, mode)
        value = c.stats.sparsity
    return {"mode": mode, "value": str(value), "cut": c.to_json()}


def cmd_brute(a) -> int:
    g = _graph_from_doc(load(a.graph, "graph"))
    tau = Fraction(a.tau).limit_denominator(10**9)
    res = _integral(g, a.problem, tau, not a.heuristic)
    print(store("integral", {"schema": SCHEMA, "kind": "integral", "problem": a.problem, **res}))
    print(f"{res['mode']} value={res['value']}")
    return EXIT_OK


def run_gap(cfg: ExperimentConfig) -> tuple:
    t0 = time.time()
    if cfg.planted:
        inst, _ = xor3.sample_planted(cfg.n, cfg.m, cfg.seed)
    else:
        inst = xor3.sample_random(cfg.n, cfg.m, cfg.seed)
    H = gadgets.build_bs_instance(inst, gadgets.GadgetParams(Fraction(cfg.beta), cfg.M, cfg.c, cfg.seed))
    t1 = time.time()
    identities = []
    if cfg.planted:
        base = xor3.perfect_solution_from_assignment(inst, inst.planted, 3)
        identities = [c.to_json() for c in cert.bs_identities(cert.lift_bs_solution(base, H, 1, inst))]
    t2 = time.time()
    g = H.as_graph()
    value, results = lasserre.solve_family(lasserre.build_psi1(g, cfg.tau_fraction, cfg.r), cfg.tol, cfg.max_iter)
    t3 = time.time()
    integral = _integral(g, "bs", cfg.tau_fraction, cfg.exact)
    t4 = time.time()
    ratio = float(Fraction(integral["value"])) / value if value and value == value else None
    report = GapReport(asdict(cfg), inst.instance_id, H.digest, _member_rows(results), value, integral, ratio,
                       identities, {"build": t1 - t0, "lift": t2 - t1, "sdp": t3 - t2, "integral": t4 - t3})
    return report, results


def cmd_gap(a) -> int:
    cfg = ExperimentConfig(n=a.n, beta=a.beta, M=a.M, c=a.c, tau=a.tau, r=a.r, seed=a.seed,
                           exact=not a.heuristic, planted=a.planted, tol=a.tol, max_iter=a.max_iter)
    report, results = run_gap(cfg)
    path = store("report", report.to_json())
    print(path)
    if a.csv:
        Path(a.csv).write_text(_rows_csv(report.sdp_rows))
    print(f"sdp_value={report.sdp_value} integral={report.integral['value']} ({report.integral['mode']}) "
          f"ratio={report.gap_ratio}")
    if any(not c["accepted"] for c in report.identities):
        return EXIT_IDENTITY
    if any(r.status != "converged" for r in results):
        return EXIT_SOLVER
    return EXIT_OK


def cmd_export(a) -> int:
    doc = load(a.artifact)
    kind = doc["kind"]
    if a.format == "dimacs":
        text = xor3.Xor3Instance.from_json(doc).to_dimacs()
    elif a.format == "edges":
        text = gadgets.GadgetGraph.from_json(doc).edge_list_text()
    elif a.format == "sdpa":
        g = _graph_from_doc(doc)
        tau = Fraction(a.tau).limit_denominator(10**9)
        fam = lasserre.build_psi1(g, tau, a.r)
        problem, _ = fam[a.member][1].to_sdp()
        text = sdp.export_sdpa(problem)
    else:
        text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    if a.out:
        Path(a.out).write_text(text)
        print(a.out)
    else:
        sys.stdout.write(text)
    return EXIT_OK if kind else EXIT_USAGE


# ----------------------------------------------------------------- parser

def _solver_flags(p):
    p.add_argument("--tol", type=float, default=sdp.DEFAULT_TOL)
    p.add_argument("--max-iter", type=int, default=sdp.DEFAULT_MAX_ITER)


def _gadget_flags(p):
    p.add_argument("--beta", default="2")
    p.add_argument("--M", type=int, default=2)
    p.add_argument("--c", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lassgap", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("gen", help="sample a 3-XOR instance")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--planted", action="store_true")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("build", help="build the gadget graph of an instance")
    p.add_argument("--instance", required=True)
    _gadget_flags(p)
    p.add_argument("--reduce", action="store_true", help="apply the degree-reduction pass")
    p.add_argument("--usc", action="store_true", help="append the D_l/D_r augmentation")
    p.add_argument("--lam", type=int, default=10)
    p.add_argument("--no-certify", action="store_true")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("lift", help="lift the planted solution and check the completeness identities")
    p.add_argument("--instance", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--usc-graph")
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("certify", help="run the lifting certificate on planted artifacts")
    p.add_argument("--instance", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--target", choices=("balance", "objective", "all"), default="all")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("solve", help="solve the Lasserre relaxation family of a graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--problem", choices=("bs", "usc"), default="bs")
    p.add_argument("--tau", default="0.5")
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--max-vertices", type=int, default=80)
    p.add_argument("--csv")
    _solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("brute", help="integral optimum (exact up to 26 vertices, else local search)")
    p.add_argument("--graph", required=True)
    p.add_argument("--problem", choices=("bs", "usc"), default="bs")
    p.add_argument("--tau", default="0.5")
    p.add_argument("--heuristic", action="store_true")
    p.set_defaults(func=cmd_brute)

    p = sub.add_parser("gap", help="full pipeline and gap report")
    p.add_argument("--n", type=int, default=4)
    _gadget_flags(p)
    p.add_argument("--tau", default="0.45")
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--planted", action="store_true")
    p.add_argument("--heuristic", action="store_true")
    p.add_argument("--csv")
    _solver_flags(p)
    p.set_defaults(func=cmd_gap, max_iter=GAP_MAX_ITER)

    p = sub.add_parser("export", help="export an artifact (json, dimacs, edges, sdpa)")
    p.add_argument("artifact")
    p.add_argument("--format", choices=("json", "dimacs", "edges", "sdpa"), default="json")
    p.add_argument("--tau", default="0.5")
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--member", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_export)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
