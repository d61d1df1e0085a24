"""Tensor-network (PEPS) form of the cluster states.

One tensor per site, one maximally correlated bond per edge, bond dimension
= group order.  Odd sites carry the copy tensor (physical digit equals
every incident bond); even sites carry the word tensor (physical digit
equals the gate-accumulated word of the incident bond values, outward legs
direct and inward legs inverted, in the site's gate order).  Contracting
every bond therefore reproduces the circuit state exactly, which is the
module's main check.

The gate that writes an even site's digit also acts simply on the word
tensor's virtual side: a physical left multiplication slides to the
last-ordered outward leg, or, when the site has no outward legs, to a
right multiplication on the first-ordered inward leg.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .builder import build_cluster_state
from .graphs import ClusterGraph
from .groups import FiniteGroup
from .states import Register, SparseState, fidelity

__all__ = [
    "PepsNetwork",
    "build_peps",
    "odd_tensor",
    "even_tensor",
    "contract",
    "compare_to_circuit",
]

CONTRACTION_BUDGET = 10**8


def odd_tensor(G: FiniteGroup, legs: int) -> np.ndarray:
    """Copy tensor, axes (physical, leg 1, ..., leg k)."""
    n = G.order
    t = np.zeros((n,) * (legs + 1))
    for g in range(n):
        t[(g,) * (legs + 1)] = 1.0
    return t


def _word_values(G: FiniteGroup, senses, cols) -> np.ndarray:
    """Accumulated word per assignment row: outward legs multiply in
    reverse order, then inward legs inverted in forward order."""
    val = np.zeros(cols[0].shape, dtype=np.int64) if cols else np.int64(0)
    for sense, col in zip(senses, cols):  # later outward legs multiply on the left
        if sense == "out":
            val = G.table[col, val]
    for sense, col in zip(senses, cols):  # inward legs invert in forward order
        if sense == "in":
            val = G.table[val, G.inverse[col]]
    return val


def even_tensor(G: FiniteGroup, senses) -> np.ndarray:
    """Word tensor for one even site, axes (physical, leg 1, ..., leg k);
    ``senses`` gives each leg's orientation, "out" or "in", in gate order."""
    n = G.order
    k = len(senses)
    legs = np.indices((n,) * k).reshape(k, -1)
    words = _word_values(G, senses, [legs[i] for i in range(k)])
    t = np.zeros((n,) * (k + 1))
    flat = t.reshape(n, -1)
    flat[words, np.arange(legs.shape[1] if k else 1)] = 1.0
    return t


@dataclass(frozen=True)
class PepsNetwork:
    graph: ClusterGraph
    group: FiniteGroup
    bond_dim: int
    legs: dict  # site -> tuple of edge ids (gate order at evens)
    senses: dict  # even site -> tuple of "out"/"in" per leg

    def tensor(self, site) -> np.ndarray:
        if self.graph.parity(site) == "odd":
            return odd_tensor(self.group, len(self.legs[site]))
        return even_tensor(self.group, self.senses[site])


def build_peps(g: ClusterGraph, G: FiniteGroup) -> PepsNetwork:
    legs = {}
    senses = {}
    for v in g.vertex_ids:
        if g.parity(v) == "even":
            order = g.orderings[v]
            legs[v] = tuple(order)
            senses[v] = tuple(
                "out" if g.edge(eid).tail == v else "in" for eid in order
            )
        else:
            legs[v] = tuple(e.id for e in g.incident_edges(v))
    return PepsNetwork(g, G, G.order, legs, senses)


def contract(net: PepsNetwork, budget: int = CONTRACTION_BUDGET) -> SparseState:
    """Exact contraction by enumerating one group element per bond.

    Returns the unnormalized physical state (every surviving assignment
    contributes amplitude 1)."""
    g, G = net.graph, net.group
    n = G.order
    edge_ids = [e.id for e in g.edges]
    isolated = [w for w in g.odd_vertices if not net.legs[w]]
    k = len(edge_ids)
    total = n ** (k + len(isolated))
    if total > budget:
        raise RuntimeError(
            f"bond enumeration needs {total} assignments, over the budget {budget}"
        )
    col_of = {eid: i for i, eid in enumerate(edge_ids)}
    for extra, w in enumerate(isolated):  # unbonded copy tensors still sum
        col_of[w] = k + extra
    assign = np.empty((total, max(k + len(isolated), 1)), dtype=np.int64)
    idx = np.arange(total)
    for col in range(k + len(isolated) - 1, -1, -1):
        idx, assign[:, col] = np.divmod(idx, n)
    reg = Register(G, g.vertex_ids)
    keys = np.zeros((total, reg.width), dtype=np.int16)
    mask = np.ones(total, dtype=bool)
    for w in g.odd_vertices:
        cols = [col_of[eid] for eid in net.legs[w]] or [col_of[w]]
        val = assign[:, cols[0]]
        for c in cols[1:]:
            mask &= assign[:, c] == val
        keys[:, reg.axis(w)] = val
    for v in g.even_vertices:
        cols = [assign[:, col_of[eid]] for eid in net.legs[v]]
        keys[:, reg.axis(v)] = _word_values(G, net.senses[v], cols)
    amps = np.ones(int(mask.sum()), dtype=complex)
    return SparseState(reg, keys[mask], amps)


def compare_to_circuit(g: ClusterGraph, G: FiniteGroup,
                       budget: int = CONTRACTION_BUDGET) -> float:
    """Fidelity between the contracted network and the circuit state."""
    return fidelity(contract(build_peps(g, G), budget), build_cluster_state(g, G))
