"""A fixed benchmark corpus: small bipartite graphs paired with groups
sized so every check stays exact and fast.

The corpus is deterministic — the random families are seeded and frozen by
tests — so batteries run over it can be compared byte for byte."""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from .builder import build_cluster_state, schedule
from .graphs import ClusterGraph, Edge, build_graph, line_graph, ring_graph
from .groups import builtin_group
from .peps import CONTRACTION_BUDGET, compare_to_circuit
from .qdouble import build_qd_lattice, qd_cluster_graph
from .stabilizers import (
    closed_form_stabilizers,
    initial_stabilizers,
    operators_agree_on_random_states,
    propagate,
    verify,
)
from .states import Register

__all__ = [
    "CorpusEntry",
    "build_corpus",
    "corpus_entry",
    "corpus_pairs",
    "general_small_graph",
    "corpus_battery",
    "derive_seed",
]


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    graph: ClusterGraph
    groups: tuple  # paired group names
    tags: tuple


def general_small_graph() -> ClusterGraph:
    """Three evens, three odds, seven edges with mixed directions and a
    triple-ordered even: the smallest graph that exercises every word rule."""
    vertices = [("e0", "even"), ("e1", "even"), ("e2", "even"),
                ("o0", "odd"), ("o1", "odd"), ("o2", "odd")]
    edges = [
        Edge("a", "e0", "o0"),
        Edge("b", "o1", "e0"),
        Edge("c", "e1", "o1"),
        Edge("d", "e1", "o0"),
        Edge("f", "o2", "e1"),
        Edge("g", "e2", "o2"),
        Edge("h", "e2", "o1"),
    ]
    return build_graph("general-small", vertices, edges)


def _random_bipartite(name: str, n_odd: int, n_even: int, extra: int,
                      seed: int) -> ClusterGraph:
    """Seeded bipartite graph: every vertex gets one incident edge, then
    ``extra`` more are sprinkled in; directions are coin flips."""
    rng = np.random.default_rng(seed)
    odds = [f"o{i}" for i in range(n_odd)]
    evens = [f"v{i}" for i in range(n_even)]
    vertices = [(v, "even") for v in evens] + [(o, "odd") for o in odds]
    pairs = []
    for o in odds:
        pairs.append((o, evens[int(rng.integers(n_even))]))
    for v in evens:
        pairs.append((odds[int(rng.integers(n_odd))], v))
    for _ in range(extra):
        pairs.append((odds[int(rng.integers(n_odd))],
                      evens[int(rng.integers(n_even))]))
    edges = []
    for k, (o, v) in enumerate(pairs):
        if rng.integers(2):
            edges.append(Edge(f"e{k}", v, o))
        else:
            edges.append(Edge(f"e{k}", o, v))
    return build_graph(name, vertices, edges)


def _qd_groups(lat_dims) -> tuple:
    return ("Z2", "Z3", "S3") if lat_dims == (2, 2) else ("Z2",)


def _paired_groups(g: ClusterGraph) -> tuple:
    o, m = len(g.odd_vertices), len(g.edges)
    if o <= 5 and m <= 10:
        return ("Z2", "Z3", "Z4", "S3", "D4")
    if o <= 6:
        return ("Z2", "Z3", "S3")
    if o <= 8:
        return ("Z2", "Z3")
    return ("Z2",)


def build_corpus() -> tuple:
    entries = []

    def add(graph, tags, groups=None):
        entries.append(CorpusEntry(
            graph.name, graph,
            groups if groups is not None else _paired_groups(graph),
            tuple(tags),
        ))

    three_e = line_graph(3, "e")
    three_o = line_graph(3, "o")
    add(ClusterGraph("line3e", three_e.vertices, three_e.edges,
                     three_e.orderings), ["line"])
    add(ClusterGraph("line3o", three_o.vertices, three_o.edges,
                     three_o.orderings), ["line"])
    for n in range(4, 9):
        pat = "e" if n % 2 == 0 else "o"
        g = line_graph(n, pat)
        add(ClusterGraph(f"line{n}{pat}", g.vertices, g.edges, g.orderings),
            ["line"])
    for n in (4, 6, 8):
        g = ring_graph(n)
        add(ClusterGraph(f"ring{n}", g.vertices, g.edges, g.orderings),
            ["ring"])
    add(general_small_graph(), ["general"])
    add(_random_bipartite("random-small", 4, 3, 0, seed=20260501), ["random"])
    add(_random_bipartite("random-medium", 8, 4, 0, seed=20260502), ["random"])
    for dims in ((2, 2), (2, 4)):
        lat = build_qd_lattice(*dims)
        add(qd_cluster_graph(lat), ["qd"], groups=_qd_groups(dims))
    return tuple(entries)


def corpus_entry(name: str) -> CorpusEntry:
    for e in build_corpus():
        if e.name == name:
            return e
    raise KeyError(f"no corpus entry named {name!r}")


def corpus_pairs(max_edges: int | None = None, groups=None,
                 tags=None) -> tuple:
    """(entry, group name) pairs, optionally filtered."""
    out = []
    for e in build_corpus():
        if max_edges is not None and len(e.graph.edges) > max_edges:
            continue
        if tags is not None and not set(tags) & set(e.tags):
            continue
        for gname in e.groups:
            if groups is not None and gname not in groups:
                continue
            out.append((e, gname))
    return tuple(out)


def derive_seed(*parts) -> int:
    """Platform-stable seed from a master seed and string tags."""
    text = ":".join(str(p) for p in parts)
    return zlib.crc32(text.encode("utf-8"))


def corpus_battery(entry: CorpusEntry, gname: str, seed: int = 0,
                   tol: float = 1e-10, routes_states: int = 5) -> dict:
    """The standard per-pair battery: build the state, derive stabilizers
    along both routes, check each fixes the state, check the routes agree
    in action on seeded random states, and (when the enumeration is small
    enough) recontract the tensor-network form."""
    g = entry.graph
    G = builtin_group(gname)
    psi = build_cluster_state(g, G)
    closed = closed_form_stabilizers(g, G)
    propagated = propagate(schedule(g), initial_stabilizers(g, G))
    rep_closed = verify(closed, psi, tol=tol)
    rep_prop = verify(propagated, psi, tol=tol)
    reg = Register(G, g.vertex_ids)
    routes = 0.0
    by_label = {lab: op for lab, op in propagated}
    for lab, op in closed:
        rng = np.random.default_rng(derive_seed(seed, entry.name, gname, lab))
        routes = max(routes, operators_agree_on_random_states(
            op, by_label[lab], reg, rng,
            states=routes_states, keys_per_state=64,
        ))
    result = {
        "graph": entry.name,
        "group": gname,
        "closed_form_max_residual": float(rep_closed.max_residual),
        "propagated_max_residual": float(rep_prop.max_residual),
        "routes_max_residual": float(routes),
        "checks_passed": bool(
            rep_closed.passed and rep_prop.passed and routes <= tol
        ),
    }
    n_edges = len(g.edges) + sum(
        1 for o in g.odd_vertices if not g.incident_edges(o)
    )
    if G.order ** n_edges <= min(CONTRACTION_BUDGET, 2 * 10**6):
        fid = compare_to_circuit(g, G)
        result["peps_fidelity"] = float(fid)
        result["checks_passed"] = bool(
            result["checks_passed"] and fid > 1 - tol
        )
    return result
