"""Decorated graphs specifying generalized cluster states.

A cluster graph is a directed bipartite graph (every edge joins an "even"
and an "odd" vertex) together with, at each even vertex, a total order over
its incident edges.  The order fixes the sequence in which entangling gates
hit that vertex, which matters for non-abelian groups.

Vertex and edge ids are strings throughout (JSON-safe).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

__all__ = [
    "Edge",
    "ClusterGraph",
    "GraphReport",
    "validate_graph",
    "build_graph",
    "line_graph",
    "ring_graph",
    "graph_to_json",
    "graph_from_json",
    "load_graph_file",
    "scramble_ordering",
]


@dataclass(frozen=True)
class Edge:
    id: str
    tail: str
    head: str


@dataclass(frozen=True)
class ClusterGraph:
    name: str
    vertices: tuple[tuple[str, str], ...]  # (id, parity) with parity "even"/"odd"
    edges: tuple[Edge, ...]
    orderings: dict  # even vertex id -> tuple of edge ids (gate order at that vertex)

    # --- Lookups ---

    def parity(self, v: str) -> str:
        for vid, p in self.vertices:
            if vid == v:
                return p
        raise KeyError(f"unknown vertex {v!r}")

    @property
    def vertex_ids(self) -> tuple[str, ...]:
        return tuple(v for v, _ in self.vertices)

    @property
    def even_vertices(self) -> tuple[str, ...]:
        return tuple(v for v, p in self.vertices if p == "even")

    @property
    def odd_vertices(self) -> tuple[str, ...]:
        return tuple(v for v, p in self.vertices if p == "odd")

    def edge(self, eid: str) -> Edge:
        for e in self.edges:
            if e.id == eid:
                return e
        raise KeyError(f"unknown edge {eid!r}")

    def incident_edges(self, v: str) -> tuple[Edge, ...]:
        return tuple(e for e in self.edges if v in (e.tail, e.head))

    def neighbours(self, v: str) -> tuple[str, ...]:
        out = []
        for e in self.incident_edges(v):
            out.append(e.head if e.tail == v else e.tail)
        return tuple(dict.fromkeys(out))

    def with_ordering(self, vertex: str, order: Sequence[str]) -> "ClusterGraph":
        new = dict(self.orderings)
        new[vertex] = tuple(order)
        return ClusterGraph(self.name, self.vertices, self.edges, new)


@dataclass(frozen=True)
class GraphReport:
    violations: tuple[str, ...]
    notes: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def as_dict(self) -> dict:
        return {"violations": list(self.violations), "notes": list(self.notes)}


def validate_graph(g: ClusterGraph) -> GraphReport:
    bad: list[str] = []
    notes: list[str] = []
    vids = [v for v, _ in g.vertices]
    if len(set(vids)) != len(vids):
        bad.append("duplicate vertex ids")
    parities = dict(g.vertices)
    for v, p in g.vertices:
        if p not in ("even", "odd"):
            bad.append(f"vertex {v}: parity {p!r} is not 'even'/'odd'")
    eids = [e.id for e in g.edges]
    if len(set(eids)) != len(eids):
        bad.append("duplicate edge ids")
    pair_seen = set()
    for e in g.edges:
        if e.tail not in parities or e.head not in parities:
            bad.append(f"edge {e.id}: endpoint missing")
            continue
        if e.tail == e.head:
            bad.append(f"edge {e.id}: self-loop")
            continue
        if parities[e.tail] == parities[e.head]:
            bad.append(
                f"edge {e.id}: joins two {parities[e.tail]} vertices (not bipartite)"
            )
        pair = frozenset((e.tail, e.head))
        if pair in pair_seen:
            notes.append(f"parallel edges between {sorted(pair)} (multigraph extension)")
        pair_seen.add(pair)
    if bad:
        return GraphReport(tuple(bad), tuple(notes))
    evens = set(g.even_vertices)
    if set(g.orderings) != evens:
        missing = evens - set(g.orderings)
        extra = set(g.orderings) - evens
        if missing:
            bad.append(f"orderings missing for even vertices {sorted(missing)}")
        if extra:
            bad.append(f"orderings given for non-even vertices {sorted(extra)}")
    for v in sorted(evens & set(g.orderings)):
        want = sorted(e.id for e in g.incident_edges(v))
        got = sorted(g.orderings[v])
        if want != got:
            bad.append(
                f"ordering at {v} is not a permutation of its incident edges "
                f"(got {got}, expected a permutation of {want})"
            )
    return GraphReport(tuple(bad), tuple(notes))


def _declaration_orderings(vertices, edges) -> dict:
    orderings = {}
    for v, p in vertices:
        if p == "even":
            orderings[v] = tuple(e.id for e in edges if v in (e.tail, e.head))
    return orderings


def build_graph(name, vertices, edges, orderings=None) -> ClusterGraph:
    """Validated constructor; gate orderings default to declaration order."""
    if orderings is None:
        orderings = _declaration_orderings(vertices, edges)
    g = ClusterGraph(name, tuple(vertices), tuple(edges),
                     {v: tuple(o) for v, o in orderings.items()})
    rep = validate_graph(g)
    if not rep.ok:
        raise ValueError(f"graph {name}: {rep.violations}")
    return g


_build = build_graph


def line_graph(n: int, pattern: str, directions: Sequence[str] | None = None) -> ClusterGraph:
    """Path of ``n`` vertices "0".."n-1" with alternating parity.

    ``pattern`` is either a full parity string of length n over {'e','o'} or
    any string whose first character fixes the start parity (alternation is
    implied).  ``directions`` optionally gives one of "fwd" (i -> i+1) /
    "bwd" per edge.  Defaults: an even-start line directs every edge from
    its even endpoint to its odd endpoint (3 sites: e->o<-e); an odd-start
    line directs every edge toward the lower index (3 sites: o<-e<-o, the
    repeating pattern of the infinite alternating chain).
    """
    if n < 2:
        raise ValueError("line needs at least 2 vertices")
    if len(pattern) == n:
        pars = list(pattern)
    else:
        start = pattern[0]
        pars = [start if i % 2 == 0 else ("o" if start == "e" else "e") for i in range(n)]
    if any(c not in "eo" for c in pars) or len(pars) != n:
        raise ValueError(f"bad parity pattern {pattern!r} for n={n}")
    for i in range(n - 1):
        if pars[i] == pars[i + 1]:
            raise ValueError("parity pattern must alternate")
    vertices = [(str(i), "even" if pars[i] == "e" else "odd") for i in range(n)]
    if directions is None:
        if pars[0] == "e":
            directions = ["fwd" if pars[i] == "e" else "bwd" for i in range(n - 1)]
        else:
            directions = ["bwd"] * (n - 1)
    if len(directions) != n - 1 or any(d not in ("fwd", "bwd") for d in directions):
        raise ValueError("directions must be 'fwd'/'bwd', one per edge")
    edges = []
    for i, d in enumerate(directions):
        a, b = str(i), str(i + 1)
        tail, head = (a, b) if d == "fwd" else (b, a)
        edges.append(Edge(f"e{i}", tail, head))
    return _build(f"line{n}:{''.join(pars)}", vertices, edges)


def ring_graph(n: int, directions: Sequence[str] | None = None) -> ClusterGraph:
    """Even cycle "0".."n-1", vertex i even iff i is even.

    Edge ``e{j}`` joins j and j+1 (mod n); the default orientation points
    every edge toward the lower index (tail j+1, head j), the ring closure
    of the alternating chain's repeating pattern.  Odd ``n`` is rejected:
    an odd cycle has no bipartition.
    """
    if n % 2 != 0:
        raise ValueError(f"ring of length {n} has no even/odd bipartition")
    if n < 4:
        raise ValueError("ring needs at least 4 vertices")
    vertices = [(str(i), "even" if i % 2 == 0 else "odd") for i in range(n)]
    if directions is None:
        directions = ["bwd"] * n
    if len(directions) != n or any(d not in ("fwd", "bwd") for d in directions):
        raise ValueError("directions must be 'fwd'/'bwd', one per edge")
    edges = []
    for j, d in enumerate(directions):
        a, b = str(j), str((j + 1) % n)
        tail, head = (a, b) if d == "fwd" else (b, a)
        edges.append(Edge(f"e{j}", tail, head))
    return _build(f"ring{n}", vertices, edges)


def scramble_ordering(g: ClusterGraph, vertex: str, rotation: int = 1) -> ClusterGraph:
    """Cyclically rotate the gate order at one even vertex (negative-control
    helper: changes the state iff the group is non-abelian and the vertex
    has two same-direction edges)."""
    order = list(g.orderings[vertex])
    k = rotation % len(order)
    return g.with_ordering(vertex, order[k:] + order[:k])


# --- Serialization ---


def graph_to_json(g: ClusterGraph) -> dict:
    return {
        "name": g.name,
        "vertices": [{"id": v, "parity": p} for v, p in g.vertices],
        "edges": [{"id": e.id, "tail": e.tail, "head": e.head} for e in g.edges],
        "orderings": {v: list(order) for v, order in sorted(g.orderings.items())},
    }


def graph_from_json(obj: dict, validate: bool = True) -> ClusterGraph:
    vertices = tuple((str(v["id"]), str(v["parity"])) for v in obj["vertices"])
    edges = tuple(Edge(str(e["id"]), str(e["tail"]), str(e["head"])) for e in obj["edges"])
    if "orderings" in obj:
        orderings = {str(v): tuple(str(x) for x in order)
                     for v, order in obj["orderings"].items()}
    else:
        # hand-written files may omit orderings; fall back to declaration
        # order, same as build_graph
        orderings = _declaration_orderings(vertices, edges)
    g = ClusterGraph(
        name=str(obj.get("name", "graph")),
        vertices=vertices,
        edges=edges,
        orderings=orderings,
    )
    if validate:
        rep = validate_graph(g)
        if not rep.ok:
            raise ValueError(f"graph {g.name} failed validation: {rep.violations}")
    return g


def load_graph_file(path: str, validate: bool = True) -> ClusterGraph:
    with open(path, "r", encoding="utf-8") as fh:
        return graph_from_json(json.load(fh), validate=validate)
