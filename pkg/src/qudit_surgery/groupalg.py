"""The Hopf algebras CZ_d (group basis) and C(Z_d) (function basis).

Elements are length-d amplitude vectors tagged with the basis they are
written in.  Structure maps are exposed both as functions on elements
(:func:`hopf_op`) and as plain matrices (:func:`structure_map`), the latter
using the Kronecker convention where the first tensor factor is the most
significant index.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

MAX_D = 64
ATOL = 1e-12


class Basis(enum.Enum):
    GROUP = "group"
    FUNCTION = "function"


class AlgebraError(ValueError):
    pass


def root_of_unity(d: int) -> complex:
    """Primitive d-th root of unity q = exp(2 pi i / d)."""
    _check_d(d)
    return np.exp(2j * np.pi / d)


def qpow(d: int, k) -> np.ndarray:
    """q**k with the exponent reduced mod d first (keeps phases exact-ish)."""
    return np.exp(2j * np.pi * (np.asarray(k) % d) / d)


def _check_d(d: int) -> None:
    if not isinstance(d, (int, np.integer)) or d < 2:
        raise AlgebraError(f"dimension must be an integer >= 2, got {d!r}")
    if d > MAX_D:
        raise AlgebraError(f"dimension {d} exceeds the supported bound {MAX_D}")


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    d: int
    basis: Basis
    amps: np.ndarray

    def __post_init__(self):
        _check_d(self.d)
        amps = np.array(self.amps, dtype=complex).reshape(-1)
        if amps.shape != (self.d,):
            raise AlgebraError(f"expected {self.d} amplitudes, got {amps.shape[0]}")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @classmethod
    def basis_vector(cls, d: int, i: int, basis: Basis = Basis.GROUP) -> "AlgebraElement":
        amps = np.zeros(d, dtype=complex)
        amps[i % d] = 1.0
        return cls(d, basis, amps)

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        _same_kind(self, other)
        return AlgebraElement(self.d, self.basis, self.amps + other.amps)

    def __rmul__(self, scalar: complex) -> "AlgebraElement":
        return AlgebraElement(self.d, self.basis, scalar * self.amps)

    def allclose(self, other: "AlgebraElement", atol: float = ATOL) -> bool:
        _same_kind(self, other)
        return bool(np.allclose(self.amps, other.amps, atol=atol, rtol=0))

    def __repr__(self) -> str:
        sym = "|{}>" if self.basis is Basis.GROUP else "|d_{}>"
        terms = [f"({a:.3g}){sym.format(i)}" for i, a in enumerate(self.amps) if abs(a) > ATOL]
        return " + ".join(terms) or "0"


def _same_kind(a: AlgebraElement, b: AlgebraElement) -> None:
    if a.d != b.d:
        raise AlgebraError(f"dimension mismatch: {a.d} vs {b.d}")
    if a.basis is not b.basis:
        raise AlgebraError(f"basis mismatch: {a.basis.value} vs {b.basis.value}")


def structure_map(kind: str, basis: Basis, d: int) -> np.ndarray:
    """Matrix of a Hopf structure map in the given basis.

    Shapes: mult (d, d*d), comult (d*d, d), unit/integral (d, 1),
    counit (1, d), antipode (d, d).
    """
    _check_d(d)
    idx = np.arange(d)
    if kind == "mult":
        m = np.zeros((d, d * d), dtype=complex)
        for i in idx:
            for j in idx:
                if basis is Basis.GROUP:
                    m[(i + j) % d, i * d + j] = 1
                elif i == j:
                    m[i, i * d + j] = 1
        return m
    if kind == "comult":
        m = np.zeros((d * d, d), dtype=complex)
        for i in idx:
            if basis is Basis.GROUP:
                m[i * d + i, i] = 1
            else:
                for h in idx:
                    m[h * d + (i - h) % d, i] = 1
        return m
    if kind == "unit":
        v = np.zeros((d, 1), dtype=complex)
        if basis is Basis.GROUP:
            v[0, 0] = 1
        else:
            v[:, 0] = 1
        return v
    if kind == "counit":
        if basis is Basis.GROUP:
            return np.ones((1, d), dtype=complex)
        v = np.zeros((1, d), dtype=complex)
        v[0, 0] = 1
        return v
    if kind == "antipode":
        m = np.zeros((d, d), dtype=complex)
        m[(-idx) % d, idx] = 1
        return m
    if kind == "integral":
        if basis is Basis.GROUP:
            return np.full((d, 1), 1.0 / d, dtype=complex)
        v = np.zeros((d, 1), dtype=complex)
        v[0, 0] = 1
        return v
    raise AlgebraError(f"unknown structure map {kind!r}")


_ARITY = {"mult": 2, "comult": 1, "unit": 0, "integral": 0, "counit": 1, "antipode": 1}


def hopf_op(kind: str, basis: Basis, args: Sequence[AlgebraElement] = (), d: int | None = None
            ) -> Union[AlgebraElement, np.ndarray, complex]:
    """Apply a structure map by linear extension.

    ``comult`` returns the (d, d) coefficient array of the output in
    A (x) A; ``counit`` returns a scalar; the rest return elements.
    Nullary maps need ``d``.
    """
    if kind not in _ARITY:
        raise AlgebraError(f"unknown structure map {kind!r}")
    if len(args) != _ARITY[kind]:
        raise AlgebraError(f"{kind} takes {_ARITY[kind]} argument(s), got {len(args)}")
    for a in args:
        if a.basis is not basis:
            raise AlgebraError(f"basis mismatch: {kind} in {basis.value} basis given {a.basis.value} element")
        if d is not None and a.d != d:
            raise AlgebraError(f"dimension mismatch: {a.d} vs {d}")
    if args:
        d = args[0].d
        for a in args[1:]:
            _same_kind(args[0], a)
    if d is None:
        raise AlgebraError(f"{kind} needs an explicit dimension")
    m = structure_map(kind, basis, d)
    if kind == "mult":
        return AlgebraElement(d, basis, m @ np.kron(args[0].amps, args[1].amps))
    if kind == "comult":
        return (m @ args[0].amps).reshape(d, d)
    if kind == "counit":
        return complex((m @ args[0].amps)[0])
    if kind == "antipode":
        return AlgebraElement(d, basis, m @ args[0].amps)
    return AlgebraElement(d, basis, m[:, 0])


def fourier_matrix(d: int, source: Basis) -> np.ndarray:
    """Matrix of the Fourier isomorphism out of ``source`` coordinates."""
    j, k = np.meshgrid(np.arange(d), np.arange(d), indexing="xy")
    if source is Basis.GROUP:
        # |j> -> sum_k q^{jk} |d_k>;  rows k, columns j
        return qpow(d, j * k)
    return qpow(d, -j * k) / d


def fourier(x: AlgebraElement) -> AlgebraElement:
    """Fourier isomorphism; flips the basis tag."""
    other = Basis.FUNCTION if x.basis is Basis.GROUP else Basis.GROUP
    return AlgebraElement(x.d, other, fourier_matrix(x.d, x.basis) @ x.amps)


# ---------------------------------------------------------------- gates

@dataclass(frozen=True, eq=False)
class GateMatrix:
    """An exact gate matrix; ``matrix / norm`` is unitary."""

    d: int
    kind: str
    matrix: np.ndarray
    norm: float = 1.0

    @property
    def unitary(self) -> np.ndarray:
        return self.matrix / self.norm


def shift(d: int, l: int = 1) -> np.ndarray:
    """X^l : |i> -> |i+l>."""
    m = np.zeros((d, d), dtype=complex)
    i = np.arange(d)
    m[(i + l) % d, i] = 1
    return m


def clock(d: int, m: int = 1) -> np.ndarray:
    """Z^m : |i> -> q^{mi} |i>."""
    return np.diag(qpow(d, m * np.arange(d)))


def hmat(d: int) -> np.ndarray:
    """Unnormalised Fourier transform H = sum_{j,k} q^{-jk} |k><j|."""
    j, k = np.meshgrid(np.arange(d), np.arange(d), indexing="xy")
    return qpow(d, -j * k)


def cx(d: int) -> np.ndarray:
    """CX : |i>|j> -> |i>|i+j>, control first."""
    m = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            m[i * d + (i + j) % d, i * d + j] = 1
    return m


def gate(kind: str, d: int, param: int = 1) -> GateMatrix:
    """Build a named gate. Kinds: X, Z, H, H2, S, CX."""
    _check_d(d)
    if kind == "X":
        return GateMatrix(d, f"X^{param % d}", shift(d, param))
    if kind == "Z":
        return GateMatrix(d, f"Z^{param % d}", clock(d, param))
    if kind == "H":
        return GateMatrix(d, "H", hmat(d), float(np.sqrt(d)))
    if kind == "H2":
        h = hmat(d)
        return GateMatrix(d, "H2", h @ h, float(d))
    if kind == "S":
        return GateMatrix(d, "S", structure_map("antipode", Basis.GROUP, d))
    if kind == "CX":
        return GateMatrix(d, "CX", cx(d))
    raise AlgebraError(f"unknown gate kind {kind!r}")
