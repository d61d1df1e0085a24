"""Ring symmetry checks: both operator families fix the cluster state, obey
the expected composition/tensor/direct-sum laws, and refuse non-rings."""

from __future__ import annotations

import numpy as np
import pytest

from gcs.builder import build_cluster_state
from gcs.graphs import Edge, build_graph, line_graph, ring_graph
from gcs.groups import builtin_group, rep_tensor
from gcs.states import Register, fidelity, random_state
from gcs.symmetry import (
    apply_u_even,
    apply_u_odd,
    ring_even_cycle,
    verify_symmetry_algebra,
)


@pytest.mark.parametrize("n", [4, 6, 8])
@pytest.mark.parametrize("gname", ["Z2", "Z3", "S3"])
def test_both_families_fix_the_ring_cluster_state(n, gname):
    G = builtin_group(gname)
    g = ring_graph(n)
    psi = build_cluster_state(g, G)
    for x in range(G.order):
        out = apply_u_odd(psi, g, x)
        assert out.add(psi.scaled(-1.0)).norm() < 1e-10 * psi.norm()
    for r in G.irreps:
        out = apply_u_even(psi, g, r.label)
        assert out.add(psi.scaled(-1.0)).norm() < 1e-10 * psi.norm()


def test_even_cycle_order_on_builtin_ring():
    g = ring_graph(6)
    assert ring_even_cycle(g) == ("0", "2", "4")


def test_unnormalized_even_weight_is_dimension_on_cluster_state():
    G = builtin_group("S3")
    g = ring_graph(4)
    psi = build_cluster_state(g, G)
    out = apply_u_even(psi, g, "std", normalized=False)
    assert out.add(psi.scaled(-2.0)).norm() < 1e-10


def test_algebra_report_all_rings():
    G = builtin_group("S3")
    g = ring_graph(4)
    report = verify_symmetry_algebra(g, G, rng=np.random.default_rng(9), states=10)
    assert report["passed"], report
    assert set(report["checks"]) == {
        "odd_composition",
        "odd_identity",
        "even_trivial_identity",
        "even_tensor",
        "even_direct_sum",
        "odd_even_commutation",
    }
    assert report["max_residual"] < 1e-10


def test_order_two_relations():
    # for the two-element group the two families generate commuting
    # involutions: each squares to the identity
    G = builtin_group("Z2")
    g = ring_graph(6)
    reg = Register(G, g.vertex_ids)
    rng = np.random.default_rng(4)
    for _ in range(10):
        psi = random_state(reg, rng, 30).normalized()
        twice = apply_u_odd(apply_u_odd(psi, g, 1), g, 1)
        assert twice.add(psi.scaled(-1.0)).norm() < 1e-12
        ee = apply_u_even(apply_u_even(psi, g, "w1", normalized=False), g, "w1",
                          normalized=False)
        assert ee.add(psi.scaled(-1.0)).norm() < 1e-12
        sq = rep_tensor(G.irrep("w1"), G.irrep("w1"))
        assert apply_u_even(psi, g, sq, normalized=False).add(
            psi.scaled(-1.0)
        ).norm() < 1e-12


def test_even_operator_is_basis_diagonal_but_not_identity():
    G = builtin_group("Z3")
    g = ring_graph(4)
    reg = Register(G, g.vertex_ids)
    rng = np.random.default_rng(8)
    psi = random_state(reg, rng, 50).normalized()
    out = apply_u_even(psi, g, "w1", normalized=False)
    assert np.array_equal(out.keys, psi.keys)  # same canonical key set
    assert out.add(psi.scaled(-1.0)).norm() > 1e-3


def test_open_chain_and_bad_orientation_rejected():
    G = builtin_group("Z3")
    line = line_graph(4, "e")
    psi = build_cluster_state(line, G)
    with pytest.raises(ValueError, match="closed ring"):
        apply_u_odd(psi, line, 1)
    with pytest.raises(ValueError, match="closed ring"):
        apply_u_even(psi, line, "w1")
    with pytest.raises(ValueError, match="closed ring"):
        verify_symmetry_algebra(line, G)
    # a ring where one odd vertex controls both of its edges cannot
    # telescope, so it is rejected even though degrees all equal 2
    bad = build_graph(
        "bad-ring",
        [("0", "even"), ("1", "odd"), ("2", "even"), ("3", "odd")],
        [Edge("e0", "1", "0"), Edge("e1", "1", "2"),
         Edge("e2", "2", "3"), Edge("e3", "0", "3")],
    )
    with pytest.raises(ValueError, match="controls both"):
        ring_even_cycle(bad)


def test_odd_symmetry_composition_matches_group():
    G = builtin_group("S3")
    g = ring_graph(4)
    psi = build_cluster_state(g, G)
    reg = Register(G, g.vertex_ids)
    rng = np.random.default_rng(2)
    chi = random_state(reg, rng, 40).normalized()
    for a in range(6):
        for b in range(6):
            lhs = apply_u_odd(apply_u_odd(chi, g, b), g, a)
            rhs = apply_u_odd(chi, g, G.table[a, b])
            assert lhs.add(rhs.scaled(-1.0)).norm() < 1e-12
    assert fidelity(apply_u_odd(psi, g, 3), psi) == pytest.approx(1.0)
