"""Dictionary rows, Kraus families and the single-qudit closure check."""

import numpy as np
import pytest

from qudit_surgery import checks
from qudit_surgery.checks import (check_row, closure, dictionary_scripts, expected_map, non_universality,
                                  pauli_clifford_group, sqrt_x, verify_dictionary)
from qudit_surgery.groupalg import Basis, shift, structure_map


def test_dictionary_has_nine_rows():
    assert len(dictionary_scripts()) == 9


@pytest.mark.parametrize("name,kind,basis", [
    ("smooth_merge", "mult", Basis.FUNCTION), ("smooth_split", "comult", Basis.GROUP),
    ("rough_merge", "mult", Basis.GROUP), ("rough_split", "comult", Basis.FUNCTION),
    ("rough_unit", "unit", Basis.GROUP), ("smooth_unit", "unit", Basis.FUNCTION),
])
def test_expected_maps_are_structure_maps(name, kind, basis):
    for d in (2, 3, 5):
        assert np.allclose(expected_map(name, d, 0), structure_map(kind, basis, d))


def test_expected_map_unknown():
    with pytest.raises(KeyError):
        expected_map("braid", 2)


def test_verify_dictionary_d2():
    rows = verify_dictionary(2)
    assert [r.name for r in rows] == list(dictionary_scripts())
    assert all(r.ok for r in rows), [r for r in rows if not r.ok]
    assert max(r.leakage for r in rows) < 1e-9


def test_corrupted_row_is_reported():
    scripts = dictionary_scripts()
    # a rough merge script checked against the smooth merge row
    bad = check_row("smooth_merge", 2, scripts["rough_merge"])
    assert not bad.ok and not bad.surgery_ok and not bad.zx_ok


def test_corrupted_expected_map_is_reported(monkeypatch):
    real = checks.expected_map
    monkeypatch.setattr(checks, "expected_map",
                        lambda op, d, n=0: real("rough_merge" if op == "smooth_merge" else op, d, n))
    rows = {r.name: r for r in verify_dictionary(2)}
    assert not rows["smooth_merge"].ok
    assert sum(r.ok for r in rows.values()) == 8


@pytest.mark.parametrize("d,size", [(2, 8), (3, 36)])
def test_pauli_clifford_reference_group(d, size):
    # d^2 Paulis modulo phase times the Fourier orbit: H^2 = S is trivial at d = 2
    # and H has order 4 for odd d
    assert len(pauli_clifford_group(d)) == size


@pytest.mark.parametrize("d", [2, 3])
def test_non_universality(d):
    rep = non_universality(d)
    assert rep.ok, rep
    assert rep.size <= rep.reference_size
    group = closure([shift(d, 1), np.diag(np.exp(2j * np.pi * np.arange(d) / d))])
    assert len(group) == d * d
    root = sqrt_x(d)
    assert np.allclose(root @ root, shift(d, 1))
    assert checks._canonical(root / np.abs(root).max()) not in pauli_clifford_group(d)


def test_closure_limit():
    t = np.diag([1, np.exp(1j * 0.1)])
    assert closure([t], limit=50) is None
