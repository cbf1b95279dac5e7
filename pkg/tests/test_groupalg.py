"""Hopf algebra structure of CZ_d and C(Z_d), the Fourier isomorphism and
the one-qudit gate matrices."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qudit_surgery.groupalg import (AlgebraElement, AlgebraError, Basis, MAX_D, fourier,
                                    fourier_matrix, gate, hopf_op, qpow, root_of_unity,
                                    shift, structure_map)

DIMS = [2, 3, 4, 5]
BASES = [Basis.GROUP, Basis.FUNCTION]
ATOL = 1e-12


def _swap(d):
    p = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            p[j * d + i, i * d + j] = 1
    return p


def _laws(d, basis):
    """Every Hopf law as a pair (lhs, rhs) of matrices."""
    m, dl = structure_map("mult", basis, d), structure_map("comult", basis, d)
    eta, eps = structure_map("unit", basis, d), structure_map("counit", basis, d)
    s = structure_map("antipode", basis, d)
    i1 = np.eye(d)
    return {
        "associativity": (m @ np.kron(m, i1), m @ np.kron(i1, m)),
        "coassociativity": (np.kron(dl, i1) @ dl, np.kron(i1, dl) @ dl),
        "left unit": (m @ np.kron(eta, i1), i1),
        "right unit": (m @ np.kron(i1, eta), i1),
        "left counit": (np.kron(eps, i1) @ dl, i1),
        "right counit": (np.kron(i1, eps) @ dl, i1),
        "bialgebra": (dl @ m, np.kron(m, m) @ np.kron(np.kron(i1, _swap(d)), i1) @ np.kron(dl, dl)),
        "counit multiplicative": (eps @ m, np.kron(eps, eps)),
        "unit comultiplicative": (dl @ eta, np.kron(eta, eta)),
        "left antipode": (m @ np.kron(s, i1) @ dl, eta @ eps),
        "right antipode": (m @ np.kron(i1, s) @ dl, eta @ eps),
    }


@pytest.mark.parametrize("d", DIMS)
@pytest.mark.parametrize("basis", BASES)
def test_hopf_laws(d, basis):
    for name, (lhs, rhs) in _laws(d, basis).items():
        assert np.allclose(lhs, rhs, atol=ATOL, rtol=0), name


@pytest.mark.parametrize("d", DIMS)
@pytest.mark.parametrize("basis", BASES)
def test_integral_is_normalised_and_absorbing(d, basis):
    lam = structure_map("integral", basis, d)
    m, eps = structure_map("mult", basis, d), structure_map("counit", basis, d)
    assert np.isclose((eps @ lam)[0, 0], 1)
    for i in range(d):
        x = np.zeros((d, 1))
        x[i] = 1
        # x Lambda = eps(x) Lambda
        assert np.allclose(m @ np.kron(x, lam), (eps @ x)[0, 0] * lam, atol=ATOL)


def test_paper_examples():
    one, two = (AlgebraElement.basis_vector(3, k) for k in (1, 2))
    assert hopf_op("mult", Basis.GROUP, [one, two]).allclose(AlgebraElement.basis_vector(3, 0))
    d1, d2 = (AlgebraElement.basis_vector(3, k, Basis.FUNCTION) for k in (1, 2))
    assert np.allclose(hopf_op("mult", Basis.FUNCTION, [d1, d2]).amps, 0)
    assert hopf_op("mult", Basis.FUNCTION, [d1, d1]).allclose(d1)
    assert hopf_op("antipode", Basis.GROUP, [one]).allclose(two)
    lam = hopf_op("integral", Basis.GROUP, d=2)
    assert np.allclose(lam.amps, [0.5, 0.5])


def test_hopf_op_errors():
    g = AlgebraElement.basis_vector(3, 1)
    f = AlgebraElement.basis_vector(3, 1, Basis.FUNCTION)
    with pytest.raises(AlgebraError):
        hopf_op("mult", Basis.GROUP, [g, f])
    with pytest.raises(AlgebraError):
        hopf_op("mult", Basis.GROUP, [g, AlgebraElement.basis_vector(2, 1)])
    with pytest.raises(AlgebraError):
        hopf_op("mult", Basis.GROUP, [g])
    with pytest.raises(AlgebraError):
        hopf_op("unit", Basis.GROUP)
    with pytest.raises(AlgebraError):
        g + f
    with pytest.raises(AlgebraError):
        AlgebraElement(3, Basis.GROUP, [1, 0])
    with pytest.raises(AlgebraError):
        AlgebraElement(MAX_D + 1, Basis.GROUP, np.zeros(MAX_D + 1))


@pytest.mark.parametrize("d", [2, 3, 5, 7])
def test_root_of_unity_is_primitive(d):
    q = root_of_unity(d)
    assert abs(q ** d - 1) < ATOL
    assert all(abs(q ** k - 1) > 1e-6 for k in range(1, d))


def test_fourier_examples():
    q = root_of_unity(3)
    img = fourier(AlgebraElement.basis_vector(3, 1))
    assert img.basis is Basis.FUNCTION
    assert np.allclose(img.amps, [1, q, q * q], atol=ATOL)
    back = fourier(AlgebraElement.basis_vector(2, 1, Basis.FUNCTION))
    assert back.basis is Basis.GROUP
    assert np.allclose(back.amps, [0.5, -0.5], atol=ATOL)


@pytest.mark.parametrize("d", DIMS)
def test_fourier_is_algebra_isomorphism(d):
    f = fourier_matrix(d, Basis.GROUP)
    mg, mf = structure_map("mult", Basis.GROUP, d), structure_map("mult", Basis.FUNCTION, d)
    assert np.allclose(f @ mg, mf @ np.kron(f, f), atol=1e-9)
    assert np.allclose(f @ structure_map("unit", Basis.GROUP, d), structure_map("unit", Basis.FUNCTION, d))
    assert np.allclose(fourier_matrix(d, Basis.FUNCTION) @ f, np.eye(d), atol=ATOL)


amps = st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
                min_size=5, max_size=5)


@given(amps)
def test_fourier_round_trip_d5(a):
    x = AlgebraElement(5, Basis.GROUP, a)
    y = fourier(fourier(x))
    assert y.basis is Basis.GROUP
    assert np.allclose(y.amps, x.amps, atol=1e-9)


@settings(max_examples=50)
@given(st.integers(2, 6), st.data())
def test_fourier_intertwines_products(d, data):
    a = np.array(data.draw(st.lists(st.floats(-3, 3), min_size=d, max_size=d)))
    b = np.array(data.draw(st.lists(st.floats(-3, 3), min_size=d, max_size=d)))
    x, y = AlgebraElement(d, Basis.GROUP, a), AlgebraElement(d, Basis.GROUP, b)
    lhs = fourier(hopf_op("mult", Basis.GROUP, [x, y]))
    rhs = hopf_op("mult", Basis.FUNCTION, [fourier(x), fourier(y)])
    assert lhs.allclose(rhs, atol=1e-9)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_gate_relations(d):
    q = root_of_unity(d)
    x, z = gate("X", d).matrix, gate("Z", d).matrix
    assert np.allclose(z @ x, q * x @ z, atol=ATOL)
    h = gate("H", d)
    assert np.allclose(h.unitary @ h.unitary.conj().T, np.eye(d), atol=ATOL)
    h2 = gate("H2", d).matrix
    assert np.allclose(h2, d * gate("S", d).matrix, atol=1e-9)
    assert np.allclose(h2 @ h2, d * d * np.eye(d), atol=1e-9)
    for i in range(d):
        assert np.allclose(gate("S", d).matrix[:, i], np.eye(d)[:, (-i) % d])
    c = gate("CX", d).matrix
    assert np.allclose(c @ c.conj().T, np.eye(d * d))


def test_hadamard_d2_and_cx_action():
    assert np.allclose(gate("H", 2).matrix, [[1, 1], [1, -1]])
    d = 3
    c = gate("CX", d).matrix
    for i in range(d):
        for j in range(d):
            v = np.zeros(d * d)
            v[i * d + j] = 1
            assert np.argmax(c @ v) == i * d + (i + j) % d


@given(st.integers(2, 9), st.integers(-20, 20), st.integers(-20, 20))
def test_shift_powers_add(d, a, b):
    assert np.array_equal(shift(d, a) @ shift(d, b), shift(d, (a + b) % d))
    assert np.allclose(gate("Z", d, a).matrix @ gate("Z", d, b).matrix, gate("Z", d, a + b).matrix)


def test_unknown_gate():
    with pytest.raises(AlgebraError):
        gate("T", 3)


def test_qpow_reduces_exponent():
    assert np.allclose(qpow(3, 4), qpow(3, 1))
    assert np.allclose(qpow(4, -1), -1j)
