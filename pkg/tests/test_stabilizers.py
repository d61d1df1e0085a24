"""Stabilizer engine checks.

The gate conjugation rules are pinned against a brute-force oracle: build
the dense controlled-multiplication unitary U and compare the rewritten
operator's dense matrix against U S U^dagger entry by entry.  The closed
forms are then required to agree with circuit propagation in action, and
both must fix the states the circuit builder produces.
"""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from gcs.builder import build_cluster_state, schedule
from gcs.graphs import Edge, build_graph, line_graph, ring_graph, scramble_ordering
from gcs.groups import builtin_group
from gcs.stabilizers import (
    ConditionalMonomial,
    Factor,
    StabilizerSet,
    UnsupportedConjugation,
    Word,
    closed_form_even,
    closed_form_odd,
    closed_form_stabilizers,
    conjugate_by_cmult,
    css_stabilizers,
    initial_stabilizers,
    operators_agree_on_basis,
    propagate,
    verify,
)
from gcs.states import Register, SparseState, group_basis_state, random_state


def mono(G, variables, sites, scalar=1.0):
    return ConditionalMonomial(G, tuple(variables),
                               {s: tuple(fs) for s, fs in sites.items()}, scalar)


def dense_cmult(G, sense):
    n = G.order
    U = np.zeros((n * n, n * n))
    for g in range(n):
        for k in range(n):
            out = G.table[g, k] if sense == "left" else G.table[k, G.inverse[g]]
            U[g * n + out, g * n + k] = 1.0
    return U


def dense_of(op, reg):
    n = reg.group.order
    dim = n ** reg.width
    M = np.zeros((dim, dim), dtype=complex)
    for idx in range(dim):
        key = []
        rest = idx
        for _ in range(reg.width):
            rest, d = divmod(rest, n)
            key.append(d)
        key = tuple(reversed(key))
        M[:, idx] = op.apply(group_basis_state(reg, key)).dense()
    return M


# --- Conjugation rule oracle ---


@pytest.mark.parametrize("gname", ["Z3", "S3"])
@pytest.mark.parametrize("sense", ["left", "right"])
def test_conjugation_rules_match_dense_oracle(gname, sense):
    G = builtin_group(gname)
    reg = Register(G, ("c", "t"))
    U = dense_cmult(G, sense)
    cases = []
    for w in range(G.order):
        for site in ("c", "t"):
            for kind in ("T", "XL", "XR"):
                cases.append(mono(G, (), {site: [Factor(kind, Word.const(w))]}))
    for op in cases:
        out = conjugate_by_cmult(op, "c", "t", sense, tag="e")
        lhs = dense_of(out, reg)
        rhs = U @ dense_of(op, reg) @ U.conj().T
        assert np.max(np.abs(lhs - rhs)) < 1e-12


@pytest.mark.parametrize("sense", ["left", "right"])
def test_conjugation_of_composite_with_variables(sense):
    G = builtin_group("S3")
    reg = Register(G, ("c", "t"))
    U = dense_cmult(G, sense)
    g = 3  # a transposition
    word = Word.var("v").times(Word.const(g)).times(Word.var("v", inverted=True))
    op = mono(G, ("v",), {"c": [Factor("T", Word.var("v"))],
                          "t": [Factor("XL", word), Factor("XR", Word.const(g))]})
    out = conjugate_by_cmult(op, "c", "t", sense, tag="e")
    lhs = dense_of(out, reg)
    rhs = U @ dense_of(op, reg) @ U.conj().T
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_representation_factors_refuse_conjugation():
    G = builtin_group("S3")
    op = mono(G, (), {"t": [Factor("Z", irrep_label="std", i=0, j=1)]})
    with pytest.raises(UnsupportedConjugation):
        conjugate_by_cmult(op, "c", "t", "left")
    bystander = mono(G, (), {"x": [Factor("Z", irrep_label="std")]})
    assert conjugate_by_cmult(bystander, "c", "t", "left") is bystander


def test_untouched_operator_passes_through():
    G = builtin_group("Z3")
    op = mono(G, (), {"a": [Factor("XL", Word.const(1))]})
    assert conjugate_by_cmult(op, "c", "t", "left") is op


# --- Word algebra ---


def test_word_inverse_and_evaluation():
    G = builtin_group("S3")
    w = Word.const(3).times(Word.var("a")).times(Word.var("b", inverted=True))
    env = {"a": 4, "b": 5}
    val = w.evaluate(G, env)
    inv = w.inverse().evaluate(G, env)
    assert G.table[val, inv] == 0
    assert G.table[inv, val] == 0
    arr_env = {"a": np.array([4, 1]), "b": np.array([5, 2])}
    vals = w.evaluate(G, arr_env)
    assert vals[0] == val
    assert w.inverse().inverse().factors == w.factors


def test_word_pretty_forms():
    G = builtin_group("S3")
    w = Word.var("h").times(Word.const(3)).times(Word.var("h", inverted=True))
    assert w.pretty(G) == "h (12) h^-1"
    assert Word().pretty(G) == "e"
    assert Word.const(3).inverse().pretty(G) == "(12)^-1"


# --- Monomial application mechanics ---


def test_apply_projector_multiplication_and_weight():
    G = builtin_group("S3")
    reg = Register(G, ("a", "b"))
    psi = SparseState.from_dict(reg, {(3, 2): 1.0, (1, 2): 2.0})
    op = mono(G, (), {"a": [Factor("T", Word.const(3)), Factor("XL", Word.const(1))]})
    out = op.apply(psi)
    assert out.to_dict() == {(G.table[1, 3], 2): 1.0}
    zop = mono(G, (), {"b": [Factor("Z", irrep_label="std", i=0, j=0)]})
    out2 = zop.apply(psi)
    mats = G.irrep("std").matrices
    assert abs(out2.amplitude((3, 2)) - mats[2, 0, 0]) < 1e-15


def test_apply_solves_chained_variables_without_enumeration():
    G = builtin_group("S3")
    reg = Register(G, ("a", "b", "c"))
    # sum[x,y] T(x)@a T(x y)@b Xl(y)@c : y solvable only after x
    op = mono(G, ("x", "y"), {
        "a": [Factor("T", Word.var("x"))],
        "b": [Factor("T", Word.var("x").times(Word.var("y")))],
        "c": [Factor("XL", Word.var("y"))],
    })
    psi = SparseState.from_dict(reg, {(2, 4, 1): 1.0})
    env, free = op._solve_variables(psi)
    assert not free
    y = G.table[G.inverse[2], 4]
    out = op.apply(psi)
    assert out.to_dict() == {(2, 4, G.table[y, 1]): 1.0}


def test_apply_enumerates_unsolvable_variables():
    G = builtin_group("Z3")
    reg = Register(G, ("a",))
    # sum[x] Xl(x)@a with no projector anywhere: 3 shifted copies
    op = mono(G, ("x",), {"a": [Factor("XL", Word.var("x"))]})
    psi = group_basis_state(reg, (1,))
    out = op.apply(psi)
    assert out.to_dict() == {(0,): 1.0, (1,): 1.0, (2,): 1.0}


def test_apply_scalar_and_missing_site_error():
    G = builtin_group("Z3")
    reg = Register(G, ("a",))
    op = mono(G, (), {"a": [Factor("T", Word.const(1))]}, scalar=2.5)
    psi = group_basis_state(reg, (1,))
    assert op.apply(psi).amplitude((1,)) == 2.5
    stray = mono(G, (), {"zz": [Factor("T", Word())]})
    with pytest.raises(KeyError):
        stray.apply(psi)


# --- Printable syntax ---


def test_pretty_golden_strings():
    G = builtin_group("S3")
    eoe = line_graph(3, "eoe")
    assert closed_form_even(eoe, G, "0").pretty() == "sum[g_e0] T[0:(g_e0)] T[1:(g_e0)]"
    assert closed_form_odd(eoe, G, "1", 3).pretty() == \
        "Xl[0:((12))] Xl[1:((12))] Xl[2:((12))]"
    ring = ring_graph(4)
    assert closed_form_even(ring, G, "0").pretty() == \
        "sum[g_e0,g_e3] T[0:(g_e3 g_e0^-1)] T[1:(g_e0)] T[3:(g_e3)]"
    assert closed_form_odd(ring, G, "1", 1).pretty() == \
        "Xr[0:((123))] Xl[1:((123))] Xl[2:((123))]"
    scaled = mono(G, (), {"0": [Factor("T", Word())]}, scalar=0.5)
    assert scaled.pretty() == "(0.5)* T[0:(e)]"


def test_pretty_shows_operator_order_last_applied_first():
    G = builtin_group("S3")
    op = mono(G, (), {"a": [Factor("T", Word.const(1)), Factor("XL", Word.const(3))]})
    assert op.pretty() == "Xl[a:((12))] T[a:((123))]"


# --- Closed form vs propagation: action equality ---


def general_small():
    vertices = [("e0", "even"), ("e1", "even"), ("e2", "even"),
                ("o0", "odd"), ("o1", "odd"), ("o2", "odd")]
    edges = [Edge("a", "e0", "o0"), Edge("b", "o1", "e0"),
             Edge("c", "e1", "o1"), Edge("d", "e1", "o0"),
             Edge("f", "o2", "e1"), Edge("g", "e2", "o2"),
             Edge("h", "e2", "o1")]
    return build_graph("general-small", vertices, edges)


def double_edge():
    vertices = [("p", "even"), ("w", "odd"), ("q", "even")]
    edges = [Edge("eA", "p", "w"), Edge("eB", "p", "w"), Edge("eC", "w", "q")]
    return build_graph("double-edge", vertices, edges)


def triple_edge():
    vertices = [("p", "even"), ("w", "odd")]
    edges = [Edge("e1", "p", "w"), Edge("e2", "p", "w"), Edge("e3", "p", "w")]
    return build_graph("triple-edge", vertices, edges)


SMALL_GRAPHS = {
    "eoe": lambda: line_graph(3, "eoe"),
    "oeo": lambda: line_graph(3, "oeo"),
    "line4": lambda: line_graph(4, "e"),
    "line5-odd": lambda: line_graph(5, "o"),
    "ring4": lambda: ring_graph(4),
    "general-small": general_small,
    "double-edge": double_edge,
    "triple-edge": triple_edge,
}


@pytest.mark.parametrize("gname", ["Z3", "S3"])
@pytest.mark.parametrize("graph_name", sorted(SMALL_GRAPHS))
def test_routes_agree_in_action(gname, graph_name):
    G = builtin_group(gname)
    g = SMALL_GRAPHS[graph_name]()
    reg = Register(G, g.vertex_ids)
    sched = schedule(g)
    prop = propagate(sched, initial_stabilizers(g, G))
    closed = closed_form_stabilizers(g, G)
    assert prop.labels == closed.labels
    rng = np.random.default_rng(7)
    for label in prop.labels:
        a, b = prop.get(label), closed.get(label)
        support = set(a.support()) | set(b.support())
        if G.order ** len(support) <= 1296:
            assert operators_agree_on_basis(a, b, reg) < 1e-12, label
        else:
            for _ in range(8):
                psi = random_state(reg, rng, 60)
                diff = a.apply(psi).add(b.apply(psi).scaled(-1.0))
                assert diff.norm() < 1e-10, label


@pytest.mark.parametrize("gname", ["Z2", "Z3", "S3"])
@pytest.mark.parametrize("graph_name", sorted(SMALL_GRAPHS))
def test_both_routes_fix_built_state(gname, graph_name):
    G = builtin_group(gname)
    g = SMALL_GRAPHS[graph_name]()
    state = build_cluster_state(g, G)
    sched = schedule(g)
    for stabs in (propagate(sched, initial_stabilizers(g, G)),
                  closed_form_stabilizers(g, G)):
        report = verify(stabs, state, tol=1e-10)
        assert report.passed, report.first_failure


def test_right_multiplication_family_also_fixes_state():
    G = builtin_group("S3")
    g = line_graph(4, "e")
    state = build_cluster_state(g, G)
    stabs = propagate(schedule(g), initial_stabilizers(g, G, include_right=True))
    assert any(lab.startswith("odd-right[") for lab in stabs.labels)
    report = verify(stabs, state, tol=1e-10)
    assert report.passed, report.first_failure


def test_odd_stabilizers_compose_as_the_group():
    G = builtin_group("S3")
    g = general_small()
    reg = Register(G, g.vertex_ids)
    rng = np.random.default_rng(11)
    for x, y in [(1, 3), (3, 4), (2, 2)]:
        sx = closed_form_odd(g, G, "o1", x)
        sy = closed_form_odd(g, G, "o1", y)
        sxy = closed_form_odd(g, G, "o1", G.table[x, y])
        for _ in range(5):
            psi = random_state(reg, rng, 50)
            lhs = sx.apply(sy.apply(psi))
            rhs = sxy.apply(psi)
            assert lhs.add(rhs.scaled(-1.0)).norm() < 1e-10


def test_ordering_scramble_changes_the_state_and_the_stabilizers():
    G = builtin_group("S3")
    g = general_small()
    g2 = scramble_ordering(g, "e1")
    state = build_cluster_state(g, G)
    state2 = build_cluster_state(g2, G)
    stabs = closed_form_stabilizers(g, G)
    stabs2 = closed_form_stabilizers(g2, G)
    assert verify(stabs, state).passed
    assert verify(stabs2, state2).passed
    assert not verify(stabs, state2).passed
    assert not verify(stabs2, state).passed


def test_support_stays_within_two_neighbourhoods():
    G = builtin_group("Z3")
    g = general_small()
    sched = schedule(g)
    adj = {}
    for gate in sched:
        adj.setdefault(gate.control, set()).add(gate.target)
        adj.setdefault(gate.target, set()).add(gate.control)
    stabs = propagate(sched, initial_stabilizers(g, G))
    for label, op in stabs:
        origin = label.split("[")[1].split(",")[0].rstrip("]")
        bound = {origin} | adj[origin] | set().union(*(adj[v] for v in adj[origin]))
        assert set(op.support()) <= bound, label


# --- Frozen small stabilizers ---


def test_eoe_even_stabilizer_explicit_action():
    G = builtin_group("Z3")
    g = line_graph(3, "eoe")
    op = closed_form_even(g, G, "0")
    reg = Register(G, g.vertex_ids)
    psi = SparseState.from_dict(reg, {(2, 2, 0): 1.0, (1, 2, 0): 1.0})
    out = op.apply(psi)
    assert out.to_dict() == {(2, 2, 0): 1.0}


def test_initial_stabilizer_labels_and_forms():
    G = builtin_group("Z3")
    g = line_graph(3, "eoe")
    init = initial_stabilizers(g, G)
    assert init.labels == ("even[0]", "even[2]",
                           "odd[1,0]", "odd[1,1]", "odd[1,2]")
    assert init.get("even[0]").pretty() == "T[0:(0)]"
    assert init.get("odd[1,2]").pretty() == "Xl[1:(2)]"


# --- Verification reports ---


def test_verify_reports_residual_and_first_failure():
    G = builtin_group("Z3")
    g = line_graph(3, "eoe")
    state = build_cluster_state(g, G)
    stabs = closed_form_stabilizers(g, G)
    ok = verify(stabs, state)
    assert ok.passed and ok.max_residual < 1e-12 and ok.first_failure is None
    reg = state.register
    bad = state.add(group_basis_state(reg, (0, 1, 0)).scaled(0.3))
    rep = verify(stabs, bad)
    assert not rep.passed
    assert rep.first_failure is not None
    assert rep.residuals[rep.first_failure] > rep.tol
    d = rep.as_dict()
    assert set(d) == {"residuals", "max_residual", "tol", "passed", "first_failure"}
    with pytest.raises(ValueError):
        verify(stabs, SparseState.zero(reg))


# --- Order-2 split forms ---


@pytest.mark.parametrize("graph_name", ["eoe", "line4", "ring4", "general-small"])
def test_split_forms_for_order_two_groups(graph_name):
    G = builtin_group("Z2")
    g = SMALL_GRAPHS[graph_name]()
    state = build_cluster_state(g, G)
    css = css_stabilizers(g, G)
    assert verify(css, state, tol=1e-12).passed
    reg = Register(G, g.vertex_ids)
    # derived even projector == (1 + split even)/2; derived odd(g=1) == split odd
    for v in g.even_vertices:
        derived = closed_form_even(g, G, v)
        split = css.get(f"css-even[{v}]")
        rng = np.random.default_rng(3)
        for _ in range(5):
            psi = random_state(reg, rng, 40)
            lhs = derived.apply(psi)
            rhs = psi.add(split.apply(psi)).scaled(0.5)
            assert lhs.add(rhs.scaled(-1.0)).norm() < 1e-12
    for w in g.odd_vertices:
        derived = closed_form_odd(g, G, w, 1)
        split = css.get(f"css-odd[{w}]")
        assert operators_agree_on_basis(derived, split, reg) < 1e-12


def test_split_forms_require_order_two():
    G = builtin_group("Z3")
    with pytest.raises(ValueError):
        css_stabilizers(line_graph(3, "eoe"), G)


def test_closed_forms_reject_wrong_parity():
    G = builtin_group("Z3")
    g = line_graph(3, "eoe")
    with pytest.raises(ValueError):
        closed_form_even(g, G, "1")
    with pytest.raises(ValueError):
        closed_form_odd(g, G, "0", 1)
