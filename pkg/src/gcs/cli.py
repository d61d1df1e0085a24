"""``gcs``: command-line front end.

Every subcommand assembles a run report — command, input hashes, effective
tolerances, per-check residuals, pass/fail — and exits 0 only when every
check passed.  Exit 2 flags bad input (unknown group, malformed graph file,
out-of-budget request) before any check runs; exit 1 flags a check failure.
Reports are deterministic for fixed inputs and seed up to the wall-time
field, which consumers strip before diffing.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .builder import build_cluster_state, schedule
from .corpus import build_corpus, corpus_battery, corpus_pairs, derive_seed
from .graphs import graph_to_json, load_graph_file, ring_graph
from .groups import (
    ALGEBRA_TOL,
    group_to_json,
    resolve_group,
    validate_group,
    validate_irreps,
)
from .measurement import measure, outcome_distribution
from .peps import compare_to_circuit
from .qdouble import (
    build_qd_lattice,
    prepare_qd_with_measurement,
    random_plaquette_outcomes,
    sector_matched_fidelity,
)
from .stabilizers import (
    STABILIZER_TOL,
    closed_form_stabilizers,
    initial_stabilizers,
    operators_agree_on_random_states,
    propagate,
    verify,
)
from .states import Register
from .symmetry import verify_symmetry_algebra

__all__ = ["main", "run"]


class InputError(Exception):
    """Bad input: reported on stderr with exit code 2."""


def _sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _sha256_file(path: str) -> str:
    with open(path, "rb") as fh:
        return _sha256_bytes(fh.read())


def _canonical_hash(obj) -> str:
    return _sha256_bytes(json.dumps(obj, sort_keys=True).encode("utf-8"))


def _load_group(spec: str):
    try:
        G = resolve_group(spec)
    except (KeyError, FileNotFoundError, ValueError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot load group {spec!r}: {exc}")
    if os.path.exists(spec):
        digest = _sha256_file(spec)
    else:
        digest = _canonical_hash(group_to_json(G))
    return G, {"spec": spec, "sha256": digest}


def _load_graph(path: str):
    try:
        g = load_graph_file(path)
    except (FileNotFoundError, KeyError, ValueError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot load graph {path!r}: {exc}")
    return g, {"spec": path, "sha256": _sha256_file(path)}


def _check(label: str, residual: float, tol: float) -> dict:
    return {
        "label": label,
        "residual": float(residual),
        "tol": float(tol),
        "passed": bool(residual <= tol),
    }


def _fidelity_check(label: str, fid: float, tol: float) -> dict:
    # fidelity targets 1; report the shortfall as the residual
    return _check(label, max(0.0, 1.0 - float(fid)), tol)


def _assemble(command: str, inputs: dict, tolerances: dict, checks: list,
              seed, extra: dict | None = None) -> dict:
    failures = [c["label"] for c in checks if not c["passed"]]
    report = {
        "command": command,
        "inputs": inputs,
        "tolerances": {k: float(v) for k, v in tolerances.items()},
        "seed": seed,
        "checks": checks,
        "first_failure": failures[0] if failures else None,
        "passed": not failures,
    }
    if extra:
        report.update(extra)
    return report


def _emit(report: dict, args) -> int:
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    if args.json:
        print(text)
    else:
        for c in report["checks"]:
            status = "PASS" if c["passed"] else "FAIL"
            print(f"  {status}  {c['label']}: residual={c['residual']:.3e} "
                  f"tol={c['tol']:.1e}")
        overall = "PASS" if report["passed"] else "FAIL"
        print(f"{report['command']}: {overall} "
              f"({len(report['checks'])} checks, {report['wall_time_s']:.2f}s)")
        if report["first_failure"]:
            print(f"first failure: {report['first_failure']}")
    return 0 if report["passed"] else 1


# --- Subcommands ---


def _cmd_group(args) -> dict:
    if args.action != "validate" and args.action != "show":
        raise InputError(f"unknown group action {args.action!r}")
    G, ghash = _load_group(args.group)
    if args.action == "show":
        return _assemble("group", {"group": ghash}, {}, [], None,
                         extra={"group_json": group_to_json(G)})
    tol = args.tol if args.tol is not None else ALGEBRA_TOL
    table_rep = validate_group(G)
    checks = []
    if not table_rep.violations:
        # the table axioms are exact integer checks; a clean pass is residual 0
        checks.append(_check(f"{G.name}:table_axioms", 0.0, tol))
    for rep in (table_rep, validate_irreps(G)):
        for name, residual in sorted(rep.residuals.items()):
            checks.append(_check(f"{rep.subject}:{name}", residual, tol))
        for violation in rep.violations:
            checks.append(_check(f"{rep.subject}:{violation}", float("inf"), tol))
    return _assemble("group", {"group": ghash}, {"algebra": tol}, checks, None)


def _cmd_build(args) -> dict:
    G, ghash = _load_group(args.group)
    g, fhash = _load_graph(args.graph)
    tol = args.tol if args.tol is not None else STABILIZER_TOL
    psi = build_cluster_state(g, G)
    checks = [_check("norm", abs(psi.norm() - 1.0), tol)]
    extra = {
        "sites": list(psi.register.sites),
        "keys": len(psi),
        "gates": len(schedule(g)),
    }
    if len(psi) <= args.dump_cap:
        extra["amplitudes"] = [
            [[G.labels[d] for d in key], float(a.real), float(a.imag)]
            for key, a in psi.items()
        ]
    return _assemble("build", {"group": ghash, "graph": fhash},
                     {"residual": tol}, checks, None, extra=extra)


def _cmd_stabilizers(args) -> dict:
    G, ghash = _load_group(args.group)
    g, fhash = _load_graph(args.graph)
    tol = args.tol if args.tol is not None else STABILIZER_TOL
    psi = build_cluster_state(g, G)
    closed = closed_form_stabilizers(g, G)
    propagated = propagate(schedule(g), initial_stabilizers(g, G))
    checks = []
    for route, stabs in (("closed", closed), ("propagated", propagated)):
        rep = verify(stabs, psi, tol=tol)
        for label, residual in rep.residuals.items():
            checks.append(_check(f"{route}:{label}", residual, tol))
    if args.cross_check:
        reg = Register(G, g.vertex_ids)
        by_label = {lab: op for lab, op in propagated}
        for lab, op in closed:
            rng = np.random.default_rng(
                derive_seed(args.seed, g.name, G.name, lab))
            dev = operators_agree_on_random_states(
                op, by_label[lab], reg, rng, states=5, keys_per_state=64)
            checks.append(_check(f"routes:{lab}", dev, tol))
    return _assemble("stabilizers", {"group": ghash, "graph": fhash},
                     {"residual": tol}, checks, args.seed)


def _cmd_measure(args) -> dict:
    G, ghash = _load_group(args.group)
    g, fhash = _load_graph(args.graph)
    tol = args.tol if args.tol is not None else STABILIZER_TOL
    psi = build_cluster_state(g, G)
    if args.site not in psi.register.sites:
        raise InputError(f"site {args.site!r} not in graph {g.name!r}")
    try:
        dist = outcome_distribution(psi, args.site, args.basis)
    except (KeyError, ValueError) as exc:
        raise InputError(str(exc))
    forced = None
    if args.forced is not None:
        if args.basis == "group":
            forced = args.forced
        else:
            parts = args.forced.split(",")
            if len(parts) != 3:
                raise InputError(
                    "rep-basis forced outcome must be 'irrep,i,j'")
            forced = (parts[0], int(parts[1]), int(parts[2]))
    rng = np.random.default_rng(args.seed)
    try:
        out = measure(psi, args.site, args.basis, rng=rng, forced=forced)
    except (KeyError, ValueError) as exc:
        raise InputError(str(exc))
    total = sum(p for _, p in dist)
    checks = [
        _check("distribution_total", abs(total - 1.0), tol),
        _check("post_state_norm", abs(out.post_state.norm() - 1.0), tol),
    ]
    return _assemble(
        "measure", {"group": ghash, "graph": fhash}, {"residual": tol},
        checks, args.seed,
        extra={
            "site": args.site,
            "basis": args.basis,
            "outcome": str(out.outcome),
            "probability": float(out.probability),
            "distribution": [[str(o), float(p)] for o, p in dist],
            "post_keys": len(out.post_state),
        })


def _cmd_symmetry(args) -> dict:
    G, ghash = _load_group(args.group)
    if (args.graph is None) == (args.ring is None):
        raise InputError("pass exactly one of --graph or --ring")
    if args.graph is not None:
        g, fhash = _load_graph(args.graph)
    else:
        if args.ring < 4 or args.ring % 2:
            raise InputError("--ring needs an even length of at least 4")
        g = ring_graph(args.ring)
        fhash = {"spec": f"ring{args.ring}",
                 "sha256": _canonical_hash(graph_to_json(g))}
    tol = args.tol if args.tol is not None else STABILIZER_TOL
    rng = np.random.default_rng(args.seed)
    try:
        result = verify_symmetry_algebra(g, G, rng=rng, states=args.states,
                                         tol=tol)
    except ValueError as exc:
        raise InputError(str(exc))
    checks = [_check(name, residual, tol)
              for name, residual in sorted(result["checks"].items())]
    return _assemble("symmetry", {"group": ghash, "graph": fhash},
                     {"residual": tol}, checks, args.seed,
                     extra={"states": args.states})


def _cmd_peps_compare(args) -> dict:
    G, ghash = _load_group(args.group)
    g, fhash = _load_graph(args.graph)
    tol = args.tol if args.tol is not None else STABILIZER_TOL
    try:
        fid = compare_to_circuit(g, G)
    except (ValueError, RuntimeError) as exc:
        raise InputError(str(exc))
    checks = [_fidelity_check("contract_vs_circuit", fid, tol)]
    return _assemble("peps-compare", {"group": ghash, "graph": fhash},
                     {"fidelity_gap": tol}, checks, None,
                     extra={"fidelity": float(fid)})


def _parse_dims(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise InputError(f"--dims wants LxM, got {text!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise InputError(f"--dims wants integers, got {text!r}")


def _cmd_qdouble(args) -> dict:
    G, ghash = _load_group(args.group)
    dims = _parse_dims(args.dims)
    try:
        lat = build_qd_lattice(*dims)
    except ValueError as exc:
        raise InputError(str(exc))
    tol = args.tol if args.tol is not None else STABILIZER_TOL
    outcomes: dict = {}
    if args.random_outcomes:
        rng = np.random.default_rng(args.seed)
        outcomes = random_plaquette_outcomes(lat, G, rng)
    for text in args.outcome or ():
        pid, _, label = text.partition("=")
        if not label:
            raise InputError(f"--outcome wants 'plaquette=label', got {text!r}")
        outcomes[pid] = label
    try:
        psi, stabs = prepare_qd_with_measurement(lat, G, outcomes)
    except (KeyError, ValueError) as exc:
        raise InputError(str(exc))
    rep = verify(stabs, psi, tol=tol)
    checks = [_check(label, residual, tol)
              for label, residual in rep.residuals.items()]
    extra = {
        "dims": list(dims),
        "links": len(lat.links),
        "keys": len(psi),
        "outcomes": {p.id: G.labels[outcomes[p.id]]
                     if isinstance(outcomes.get(p.id), (int, np.integer))
                     else str(outcomes.get(p.id, G.labels[0]))
                     for p in lat.plaquettes},
    }
    if G.order == 2 and not outcomes:
        fid = sector_matched_fidelity(lat, psi)
        checks.append(_fidelity_check("toric_reference", fid, tol))
        extra["toric_fidelity"] = float(fid)
    inputs = {"group": ghash,
              "lattice": {"spec": args.dims,
                          "sha256": _canonical_hash(list(dims))}}
    return _assemble("qdouble", inputs, {"residual": tol}, checks, args.seed,
                     extra=extra)


def _cmd_corpus(args) -> dict:
    tol = args.tol if args.tol is not None else STABILIZER_TOL
    if args.dump_graphs:
        os.makedirs(args.dump_graphs, exist_ok=True)
        written = []
        for entry in build_corpus():
            path = os.path.join(args.dump_graphs, f"{entry.name}.json")
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(graph_to_json(entry.graph), fh, indent=2,
                          sort_keys=True)
                fh.write("\n")
            written.append(path)
        return _assemble("corpus", {}, {}, [], args.seed,
                         extra={"dumped": written})
    pairs = corpus_pairs(max_edges=args.max_edges,
                         groups=args.groups or None)
    if not pairs:
        raise InputError("the requested filters leave no corpus pairs")
    workers = os.environ.get("GCS_THREADS", "")
    try:
        max_workers = max(1, int(workers)) if workers else min(4, os.cpu_count() or 1)
    except ValueError:
        raise InputError(f"GCS_THREADS must be an integer, got {workers!r}")

    def battery(pair):
        entry, gname = pair
        return corpus_battery(entry, gname, seed=args.seed, tol=tol)

    if max_workers == 1:
        results = [battery(p) for p in pairs]
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(battery, pairs))  # submission order
    checks = []
    for res in results:
        label = f"{res['graph']}+{res['group']}"
        worst = max(res["closed_form_max_residual"],
                    res["propagated_max_residual"],
                    res["routes_max_residual"])
        if "peps_fidelity" in res:
            worst = max(worst, 1.0 - res["peps_fidelity"])
        checks.append(_check(label, worst, tol))
    corpus_hash = _canonical_hash(
        [graph_to_json(e.graph) for e in build_corpus()])
    return _assemble("corpus", {"corpus": {"spec": "builtin",
                                           "sha256": corpus_hash}},
                     {"residual": tol}, checks, args.seed,
                     extra={"pairs": len(pairs), "results": results})


# --- Entry point ---


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="gcs",
        description="exact construction and verification of generalized "
                    "cluster states over finite group algebras",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, group=True, graph=False, seed=False):
        if group:
            p.add_argument("--group", required=True,
                           help="catalog name or group JSON file")
        if graph:
            p.add_argument("--graph", required=True,
                           help="graph JSON file")
        if seed:
            p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol", type=float, default=None,
                       help="override the default tolerance")
        p.add_argument("--out", default=None, help="write the JSON report here")
        p.add_argument("--json", action="store_true",
                       help="print the JSON report instead of a summary")

    p = sub.add_parser("group", help="validate a group/irrep catalog entry")
    p.add_argument("action", choices=("validate", "show"))
    p.add_argument("--name", dest="group", required=True,
                   help="catalog name or group JSON file")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=_cmd_group)

    p = sub.add_parser("build", help="build a cluster state and dump it")
    common(p, graph=True)
    p.add_argument("--dump-cap", type=int, default=64,
                   help="dump amplitudes when the state has at most this many keys")
    p.set_defaults(fn=_cmd_build)

    p = sub.add_parser("stabilizers",
                       help="derive both stabilizer routes and verify them")
    common(p, graph=True, seed=True)
    p.add_argument("--cross-check", action="store_true",
                   help="also compare the two routes on random states")
    p.set_defaults(fn=_cmd_stabilizers)

    p = sub.add_parser("measure", help="measure one site of a cluster state")
    common(p, graph=True, seed=True)
    p.add_argument("--site", required=True)
    p.add_argument("--basis", choices=("group", "rep"), default="group")
    p.add_argument("--forced", default=None,
                   help="pin the outcome: element label, or 'irrep,i,j'")
    p.set_defaults(fn=_cmd_measure)

    p = sub.add_parser("symmetry", help="check the ring symmetry algebra")
    common(p, seed=True)
    p.add_argument("--graph", default=None, help="ring graph JSON file")
    p.add_argument("--ring", type=int, default=None,
                   help="generate a ring of this length instead of --graph")
    p.add_argument("--states", type=int, default=10)
    p.set_defaults(fn=_cmd_symmetry)

    p = sub.add_parser("peps-compare",
                       help="recontract the tensor-network form and compare")
    common(p, graph=True)
    p.set_defaults(fn=_cmd_peps_compare)

    p = sub.add_parser("qdouble",
                       help="prepare a torus ground state and verify it")
    common(p, seed=True)
    p.add_argument("--dims", default="2x2", help="torus size, e.g. 2x2")
    p.add_argument("--outcome", action="append",
                   help="force a plaquette outcome: 'p[x,y]=label' (repeatable)")
    p.add_argument("--random-outcomes", action="store_true",
                   help="draw a consistent random outcome set from --seed")
    p.set_defaults(fn=_cmd_qdouble)

    p = sub.add_parser("corpus", help="run the battery over the whole corpus")
    common(p, group=False, seed=True)
    p.add_argument("--max-edges", type=int, default=None)
    p.add_argument("--groups", nargs="*", default=None,
                   help="restrict to these groups")
    p.add_argument("--dump-graphs", default=None,
                   help="write every corpus graph as JSON into this directory")
    p.set_defaults(fn=_cmd_corpus)
    return ap


def run(argv=None) -> int:
    args = _parser().parse_args(argv)
    start = time.perf_counter()
    try:
        report = args.fn(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report["wall_time_s"] = round(time.perf_counter() - start, 6)
    return _emit(report, args)


def main(argv=None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
