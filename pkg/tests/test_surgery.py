"""Logical bases, splits, merges, units, counits, rotations and map extraction."""

import numpy as np
import pytest

from qudit_surgery.checks import CX_SCRIPT, expected_map
from qudit_surgery.groupalg import cx, hmat, qpow
from qudit_surgery.lattice import build_patch, rotate
from qudit_surgery.sim import measure_site, overlap
from qudit_surgery.surgery import (SurgeryError, counit, extract_logical_map, extract_maps,
                                   logical_gate, merge, place, prepare, proportional, run_script,
                                   split, transversal_fourier, antipode)

ONE = [0, 1]


def _delta(d, j):
    """Coefficients of the normalised |delta_j>_L on the |k>_L basis."""
    return qpow(d, -j * np.arange(d)) / np.sqrt(d)


def _in_vacuum(reg):
    for g in reg.patches:
        for s in g.stabilizers():
            if abs(measure_site(reg.state, g, s)[0].probability - 1) > 1e-9:
                return False
    return True


@pytest.mark.parametrize("d", [2, 3])
def test_logical_basis_relations(d, minimal):
    basis = minimal[d]
    g = basis.patch
    for i in range(d):
        assert _in_vacuum(prepare([g], [i]))
        coeffs = np.array([overlap(k, basis.fourier_states[i]) for k in basis.states])
        assert np.allclose(coeffs, _delta(d, i), atol=1e-9)
    gram = basis.matrix().conj().T @ basis.matrix()
    assert np.allclose(gram, np.eye(d), atol=1e-9)


@pytest.mark.parametrize("d", [2, 3])
def test_logical_gates(d, minimal):
    basis = minimal[d]
    g = basis.patch
    zero, delta0 = basis.states[0], basis.fourier_states[0]
    assert abs(overlap(basis.states[1], logical_gate(zero, g, "X", 1)) - 1) < 1e-9
    for i in range(d):
        assert abs(overlap(basis.fourier_states[i], logical_gate(delta0, g, "Z", i)) - 1) < 1e-9
        for k in range(d):
            out = logical_gate(basis.states[k], g, "Z", i)
            assert abs(overlap(basis.states[k], out) - qpow(d, -i * k)) < 1e-9
    with pytest.raises(SurgeryError):
        logical_gate(zero, g, "Y")


def test_identity_procedure():
    m = extract_logical_map({"inputs": [ONE], "steps": []}, 3)
    assert np.allclose(m.matrix, np.eye(3), atol=1e-9)


@pytest.mark.parametrize("d", [2, 3])
def test_smooth_split_copies_every_branch(d):
    patches = place([(0, 3)], d)
    for i in range(d):
        results = split(prepare(patches, [i]), 0, "smooth")
        assert len(results) == d ** len(results[0].outcome)
        for r in results:
            coords, leak = r.register.logical_coords()
            want = np.zeros(d * d)
            want[i * d + i] = 1
            assert leak < 1e-9 and proportional(coords, want)
            assert _in_vacuum(r.register)


@pytest.mark.parametrize("d", [2, 3])
def test_rough_split_in_both_bases(d):
    patches = place([(2, 1)], d)
    for i in range(d):
        reg = prepare(patches, coeffs=_delta(d, i))
        for r in split(reg, 0, "rough"):
            coords, _ = r.register.logical_coords()
            assert proportional(coords, np.kron(_delta(d, i), _delta(d, i)))
    if d == 2:
        coords, _ = split(prepare(patches, [0]), 0, "rough")[0].register.logical_coords()
        assert np.allclose(np.abs(coords), [1 / np.sqrt(2), 0, 0, 1 / np.sqrt(2)], atol=1e-9)


def test_split_needs_room():
    reg = prepare(place([(0, 1)], 2), [0])
    with pytest.raises(SurgeryError):
        split(reg, 0, "smooth")
    with pytest.raises(SurgeryError):
        split(reg, 0, "rough")
    with pytest.raises(SurgeryError):
        split(reg, 0, "diagonal")


def test_smooth_merge_examples():
    d = 3
    patches = place([ONE, ONE], d)
    reg = prepare(patches, coeffs=np.kron(_delta(d, 1), _delta(d, 1)))
    zero = [r for r in merge(reg, [0, 1], "smooth") if r.n == 0]
    coords, leak = zero[0].register.logical_coords()
    assert leak < 1e-9 and proportional(coords, _delta(d, 2))
    for j in range(d):
        for r in merge(prepare(patches, [0, j]), [0, 1], "smooth"):
            if r.register is None:
                assert r.probability == 0
                continue
            assert r.n == j
            coords, _ = r.register.logical_coords()
            assert proportional(coords, np.eye(d)[r.n])


def test_rough_merge_example_and_outcome_sum():
    d = 3
    patches = place([ONE, ONE], d)
    results = merge(prepare(patches, [1, 2]), [0, 1], "rough")
    for r in results:
        assert r.n == sum(r.outcome) % d
        assert _in_vacuum(r.register)
    zero = [r for r in results if r.n == 0]
    assert zero
    for r in zero:
        coords, _ = r.register.logical_coords()
        assert proportional(coords, np.eye(d)[0])


def test_merge_errors():
    d = 2
    patches = place([(0, 1), (1, 1)], d)
    reg = prepare(patches, [0, 0])
    with pytest.raises(SurgeryError):
        merge(reg, [0, 1], "smooth")
    patches = place([(0, 1), (0, 2)], d)
    with pytest.raises(SurgeryError):
        merge(prepare(patches, [0, 0]), [0, 1], "rough")
    with pytest.raises(SurgeryError):
        merge(prepare(place([ONE, ONE], d), [0, 0]), [0, 1], "sideways")


def _counit_kraus(kind, d):
    """Kraus operators grouped by the reduced outcome n."""
    maps = extract_maps({"inputs": [ONE], "steps": [{"op": "counit", "kind": kind, "wire": 0}]}, d)
    out = {}
    for m in maps:
        out.setdefault(m.n, []).append(m.matrix)
    return out


@pytest.mark.parametrize("d", [2, 3])
def test_counits(d):
    rough, smooth = _counit_kraus("rough", d), _counit_kraus("smooth", d)
    assert sorted(rough) == sorted(smooth) == list(range(d))
    for n in range(d):
        # Z readout: |0>_L survives only in branch n = 0
        p0 = sum(abs((k @ np.eye(d)[0])[0]) ** 2 for k in rough[n])
        assert abs(p0 - (n == 0)) < 1e-9
        for k in smooth[n]:
            # X readout: |i>_L -> q^{in}
            assert proportional(k, qpow(d, n * np.arange(d)).reshape(1, d))
        for k in rough[n]:
            # Z readout on Fourier states: |delta_j>_L -> q^{-nj}
            vals = np.array([(k @ _delta(d, j))[0] for j in range(d)])
            assert np.allclose(vals / vals[0], qpow(d, -n * np.arange(d)), atol=1e-9)
        # and |delta_0>_L gives the same weight to every n
        p = sum(abs((k @ _delta(d, 0))[0]) ** 2 for k in rough[n])
        assert abs(p - 1 / d) < 1e-9
    with pytest.raises(SurgeryError):
        counit(prepare(place([ONE], d), [0]), 0, "middle")


@pytest.mark.parametrize("d", [2, 3])
def test_counit_families(d):
    for kind in ("smooth", "rough"):
        maps = extract_maps({"inputs": [ONE], "steps": [{"op": "counit", "kind": kind, "wire": 0}]}, d)
        for m in maps:
            assert proportional(m.matrix, expected_map(f"{kind}_counit", d, m.n))
        acc = sum(m.matrix.conj().T @ m.matrix for m in maps)
        assert np.allclose(acc, np.eye(d), atol=1e-9)


def test_counit_rejects_impossible_readout():
    from qudit_surgery.surgery import _counit_constraints
    g = build_patch(2, 0, 1)
    readout = {e: 0 for e in g.edges}
    readout[g.edges[0]] = 1
    assert _counit_constraints(g, "rough", readout) or _counit_constraints(g, "smooth", readout)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_transversal_fourier_and_antipode(d):
    if d == 5:
        patches = (build_patch(5, 0, 1),)
    else:
        patches = (build_patch(d, 1, 1),)
    for i in range(d):
        reg = transversal_fourier(prepare(patches, [i]), 0)
        assert reg.patches[0].rotations == 1
        coords, leak = reg.logical_coords()
        assert leak < 1e-9
        assert np.allclose(coords, _delta(d, i), atol=1e-9)
        twice = transversal_fourier(reg, 0)
        coords, _ = twice.logical_coords()
        assert np.allclose(coords, np.eye(d)[(-i) % d], atol=1e-9)
        coords, _ = antipode(prepare(patches, [i]), 0).logical_coords()
        assert np.allclose(coords, np.eye(d)[(-i) % d], atol=1e-9)


def test_fourier_map_and_d2_antipode():
    m = extract_logical_map({"inputs": [ONE], "steps": [{"op": "fourier", "wire": 0}]}, 3)
    assert proportional(m.matrix, hmat(3))
    s = extract_logical_map({"inputs": [ONE], "steps": [{"op": "antipode", "wire": 0}]}, 2)
    assert np.allclose(s.matrix, np.eye(2), atol=1e-9)


def test_rotated_patch_matches_rotate():
    g = build_patch(3, 1, 1)
    reg = transversal_fourier(prepare([g], [0]), 0)
    r = rotate(g)
    assert reg.patches[0].vertices == r.vertices and reg.patches[0].faces == r.faces


@pytest.mark.parametrize("d", [2, 3])
def test_rough_split_then_merge_is_identity(d):
    script = {"inputs": [[2, 1]], "steps": [
        {"op": "split", "kind": "rough", "wire": 0, "branch": "first"},
        {"op": "merge", "kind": "rough", "wires": [0, 1], "n": 0}]}
    m = extract_logical_map(script, d, 0)
    assert proportional(m.matrix, np.eye(d))
    assert m.leakage < 1e-9


def test_split_maps_do_not_depend_on_outcome():
    for kind, shape in (("smooth", [0, 3]), ("rough", [2, 1])):
        maps = extract_maps({"inputs": [shape], "steps": [{"op": "split", "kind": kind, "wire": 0}]}, 3)
        assert len(maps) == 3
        for m in maps:
            assert proportional(m.matrix, maps[0].matrix)


def test_cx_script_extracts_cx():
    m = extract_logical_map(CX_SCRIPT, 2, 0)
    assert proportional(m.matrix, cx(2))
    assert m.leakage < 1e-9


def test_in_basis_function_legs():
    m = extract_logical_map({"inputs": [ONE, ONE], "steps": [
        {"op": "merge", "kind": "smooth", "wires": [0, 1]}]}, 3, 0)
    f = m.in_basis("function", "function")
    # delta_i (x) delta_j -> delta_{i+j} at n = 0
    for i in range(3):
        for j in range(3):
            col = f[:, i * 3 + j]
            assert np.count_nonzero(np.abs(col) > 1e-9) == 1
            assert np.argmax(np.abs(col)) == (i + j) % 3


def test_sampled_runs_are_reproducible():
    patches = place([ONE, ONE], 3)
    script = {"steps": [{"op": "merge", "kind": "rough", "wires": [0, 1]}]}
    reg = prepare(patches, coeffs=np.ones(9) / 3)
    a = run_script(script, reg, "sample", seed=4)
    b = run_script(script, reg, "sample", seed=4)
    assert a[0].outcomes == b[0].outcomes
    assert np.array_equal(a[0].register.state.amps, b[0].register.state.amps)


def test_unknown_step():
    with pytest.raises(SurgeryError):
        extract_maps({"inputs": [ONE], "steps": [{"op": "teleport"}]}, 2)
