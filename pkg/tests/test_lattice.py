"""Patch geometry, stabilizer projectors, string operators and validation."""

import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qudit_surgery.groupalg import AlgebraElement, Basis, clock, qpow, shift
from qudit_surgery.lattice import (BudgetError, GeometryError, Site, build_patch, load_patch,
                                   make_string, patch_from_dict, patch_to_dict, projector,
                                   rotate, shortest_string, site_action, string_operator,
                                   validate_patch, vacuum_dimension)
from qudit_surgery.sim import PureState, apply, measure_site, overlap

from conftest import dense_product_projector


def _kron(mats):
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


@pytest.mark.parametrize("d,rows,cols", [(2, 1, 1), (3, 0, 1), (2, 0, 2)])
def test_vacuum_dimension_against_dense_rank(d, rows, cols):
    g = build_patch(d, rows, cols)
    p = dense_product_projector(g)
    assert np.allclose(p @ p, p, atol=1e-10)
    assert np.linalg.matrix_rank(p, tol=1e-8) == d
    assert vacuum_dimension(g) == d


def test_minimal_patch_shapes():
    assert build_patch(2, 1, 1).n_edges == 8
    assert build_patch(3, 1, 1).n_edges == 8
    rep = validate_patch(build_patch(2, 1, 1))
    assert rep.ok and rep.vacuum_dim == 2
    rep = validate_patch(build_patch(5, 0, 1))
    assert rep.ok and rep.vacuum_dim == 5


def test_degenerate_and_oversized_patches():
    with pytest.raises(GeometryError):
        build_patch(2, 0, 0)
    with pytest.raises(GeometryError):
        build_patch(1, 1, 1)
    with pytest.raises(BudgetError):
        build_patch(3, 4, 4)
    with pytest.raises(BudgetError):
        build_patch(2, 1, 1, budget=2 ** 7)


def test_boundary_typing_and_orientation():
    g = build_patch(3, 1, 2)
    assert g.boundary == {"top": "rough", "bottom": "rough", "left": "smooth", "right": "smooth"}
    for (tx, ty), (hx, hy) in g.edges:
        assert (hx - tx, hy - ty) in ((1, 0), (0, 1))
    for s in g.vertices + g.faces:
        for e in s.edges:
            uses = [t for t in (g.vertices if s.kind == "vertex" else g.faces) if e in t.edges]
            assert len(uses) <= 2
    # dangling endpoints and outer half-planes carry no stabilizer
    assert not g.vertex((0, -1)).stabilized
    assert not g.face(("L",)).stabilized
    assert all(s.weight >= 2 for s in g.stabilizers())


def test_vertex_signs_follow_arrows():
    g = build_patch(2, 1, 1)
    v = g.vertex((0, 0))
    for e, s in zip(v.edges, v.signs):
        assert s == (1 if e[0] == (0, 0) else -1)


def test_single_edge_stabilizer_fails_validation():
    g = build_patch(2, 1, 1)
    e = g.edges[0]
    bad = g.with_sites(faces=g.faces + (Site("face", ("bad",), (e,), (1,)),))
    rep = validate_patch(bad)
    assert not rep.ok
    names = [n for n, _ in rep.failures()]
    assert "no single-edge stabilizers" in names
    with pytest.raises(GeometryError):
        rep.raise_for_failure()


def test_bulk_vertex_action_is_four_shifts():
    g = build_patch(2, 1, 2)
    v = g.vertex((1, 0))
    assert v.weight == 4
    op = site_action(g, v, AlgebraElement.basis_vector(2, 1))
    x = shift(2, 1)
    assert np.allclose(op.matrix(), _kron([x] * 4))
    ident = site_action(g, v, AlgebraElement.basis_vector(2, 0))
    assert np.allclose(ident.matrix(), np.eye(16))


@pytest.mark.parametrize("d", [2, 3])
def test_face_action_of_phase_element_is_clock_string(d):
    g = build_patch(d, 1, 1)
    p = g.face(("cell", 0, 0))
    m = 1
    el = AlgebraElement(d, Basis.FUNCTION, qpow(d, m * np.arange(d)))
    op = site_action(g, p, el)
    want = _kron([clock(d, s * m) for s in p.signs])
    assert np.allclose(op.matrix(), want)


def test_site_action_basis_mismatch():
    g = build_patch(2, 1, 1)
    with pytest.raises(GeometryError):
        site_action(g, g.vertex((0, 0)), AlgebraElement.basis_vector(2, 1, Basis.FUNCTION))
    with pytest.raises(GeometryError):
        site_action(g, g.face(("cell", 0, 0)), AlgebraElement.basis_vector(2, 1))


@pytest.mark.parametrize("d", [2, 3])
def test_projector_algebra(d):
    g = build_patch(d, 1, 1)
    for s in g.stabilizers():
        ps = [projector(g, s, j).matrix() for j in range(d)]
        assert np.allclose(sum(ps), np.eye(d ** s.weight), atol=1e-12)
        for j in range(d):
            for k in range(d):
                assert np.allclose(ps[j] @ ps[k], ps[j] if j == k else 0, atol=1e-12)
    stabs = g.stabilizers()
    for a in stabs:
        for b in stabs:
            union = tuple(dict.fromkeys(a.edges + b.edges))
            ma, mb = projector(g, a, 0).matrix(union), projector(g, b, 0).matrix(union)
            assert np.abs(ma @ mb - mb @ ma).max() < 1e-12


def _random_state(g, seed=0):
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=g.d ** g.n_edges) + 1j * rng.normal(size=g.d ** g.n_edges)
    return PureState(g.d, g.edges, amps / np.linalg.norm(amps))


@pytest.mark.parametrize("d", [2, 3])
def test_x_string_composition_and_concatenation(d):
    g = build_patch(d, 1, 1)
    s = g.x_logical
    head = make_string(g, "X", s.path[:2])
    tail = make_string(g, "X", s.path[1:])
    assert head + tail == s
    psi = _random_state(g)
    for i in range(d):
        fi = apply(psi, string_operator(g, s, i))
        split = apply(apply(psi, string_operator(g, head, i)), string_operator(g, tail, i))
        assert np.allclose(fi.amps, split.amps)
        for j in range(d):
            fij = apply(apply(psi, string_operator(g, s, j)), string_operator(g, s, i))
            assert np.allclose(fij.amps, apply(psi, string_operator(g, s, i + j)).amps)


@pytest.mark.parametrize("d", [2, 3])
def test_z_string_quasiparticle_composition(d):
    g = build_patch(d, 1, 1)
    s = g.z_logical
    psi = _random_state(g, 1)
    for m in range(d):
        for n in range(d):
            a = apply(apply(psi, string_operator(g, s, n)), string_operator(g, s, m))
            assert np.allclose(a.amps, apply(psi, string_operator(g, s, m + n)).amps)
    # the quasiparticle string is the Fourier sum of delta strings
    for m in range(d):
        acc = sum(qpow(d, m * j) * apply(psi, string_operator(g, s, j, "delta")).amps for j in range(d))
        assert np.allclose(acc, apply(psi, string_operator(g, s, m)).amps)


def _loops(g):
    x = make_string(g, "X", [("cell", 0, -1), ("L",), ("cell", 0, 0), ("cell", 0, -1)])
    z = make_string(g, "Z", [(0, 0), (1, 0), (1, 1), (0, 1), (0, 0)])
    return x, z


@pytest.mark.parametrize("d", [2, 3])
def test_closed_loops_on_vacuum(d, minimal):
    g = minimal[d].patch
    x, z = _loops(g)
    assert x.closed and z.closed
    for vac in minimal[d].states + minimal[d].fourier_states:
        for i in range(d):
            assert abs(overlap(vac, apply(vac, string_operator(g, x, i))) - 1) < 1e-9
            assert abs(overlap(vac, apply(vac, string_operator(g, z, i))) - 1) < 1e-9
            killed = apply(vac, string_operator(g, z, i, "delta"))
            assert killed.norm() < 1e-12 if i else abs(overlap(vac, killed) - 1) < 1e-9


@pytest.mark.parametrize("d", [2, 3])
def test_deformed_strings_agree_on_vacuum(d, minimal):
    g = minimal[d].patch
    direct = make_string(g, "X", [("cell", 0, -1), ("cell", 0, 0)])
    around = make_string(g, "X", [("cell", 0, -1), ("L",), ("cell", 0, 0)])
    for vac in minimal[d].states:
        for i in range(d):
            a = apply(vac, string_operator(g, direct, i))
            b = apply(vac, string_operator(g, around, i))
            assert np.allclose(a.amps, b.amps, atol=1e-9)


@pytest.mark.parametrize("d", [2, 3])
def test_string_endpoints_report_opposite_charges(d, minimal):
    g = minimal[d].patch
    s = make_string(g, "X", [("cell", 0, -1), ("cell", 0, 0)])
    vac = minimal[d].states[0]
    for i in range(d):
        st_ = apply(vac, string_operator(g, s, i))
        p0 = measure_site(st_, g, g.face(s.path[0]))
        p1 = measure_site(st_, g, g.face(s.path[-1]))
        assert abs(p0[i % d].probability - 1) < 1e-9
        assert abs(p1[(-i) % d].probability - 1) < 1e-9


def test_string_construction_errors():
    g = build_patch(2, 1, 1)
    with pytest.raises(GeometryError):
        make_string(g, "X", [("cell", 0, -1)])
    with pytest.raises(GeometryError):
        make_string(g, "X", [("cell", 0, -1), ("cell", 0, 1)])
    with pytest.raises(GeometryError):
        make_string(g, "Y", [(0, 0), (1, 0)])
    a = make_string(g, "Z", [(0, 0), (1, 0)])
    with pytest.raises(GeometryError):
        a + a


def test_shortest_string_and_reverse():
    g = build_patch(2, 1, 2)
    s = shortest_string(g, "X", ("cell", 0, 0), [("L",), ("R",)])
    assert s.endpoints == (("cell", 0, 0), ("L",))
    assert len(s.crossings) == 1
    r = s.reversed()
    assert r.endpoints == (("L",), ("cell", 0, 0))
    with pytest.raises(GeometryError):
        shortest_string(g, "X", ("cell", 0, 0), [("nowhere",)])


def test_rotation_swaps_sites():
    g = build_patch(3, 1, 1)
    r = rotate(g)
    assert len(r.vertices) == len(g.faces) and len(r.faces) == len(g.vertices)
    assert validate_patch(r).ok


def test_patch_file_round_trip(tmp_path):
    g = build_patch(3, 1, 1)
    path = tmp_path / "patch.json"
    path.write_text(json.dumps(patch_to_dict(g)))
    h = load_patch(path)
    assert h.edges == g.edges and h.vertices == g.vertices and h.faces == g.faces
    assert validate_patch(h).ok
    small = patch_from_dict({"d": 2, "rows": 0, "cols": 1})
    assert small.n_edges == 5


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 3), st.integers(0, 1), st.integers(1, 2))
def test_default_patches_validate(d, rows, cols):
    g = build_patch(d, rows, cols)
    rep = validate_patch(g)
    assert rep.ok, rep.failures()
