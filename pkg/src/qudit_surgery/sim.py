"""Dense pure-state engine over edge qudits.

A :class:`PureState` stores ``d**E`` amplitudes for the edges listed in
``edges``.  The flat index is mixed-radix little-endian by position in
``edges``: configuration (x_0, ..., x_{E-1}) sits at sum_e x_e d**e.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Sequence

import numpy as np

from .groupalg import gate, qpow
from .lattice import (DEFAULT_BUDGET, BudgetError, LocalOperator, PatchGeometry, Site,
                      dense_operator, projector)

PROB_TOL = 1e-12


class SimulationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PureState:
    d: int
    edges: tuple
    amps: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex).reshape(-1)
        if amps.size != self.d ** len(self.edges):
            raise SimulationError(f"{amps.size} amplitudes for {len(self.edges)} edges at d={self.d}")
        if len(set(self.edges)) != len(self.edges):
            raise SimulationError("repeated edge key")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @classmethod
    def from_tensor(cls, d: int, edges: Sequence, tensor: np.ndarray) -> "PureState":
        return cls(d, tuple(edges), np.asarray(tensor).reshape(-1, order="F"))

    @property
    def tensor(self) -> np.ndarray:
        """View with axis k holding edge ``edges[k]``."""
        return self.amps.reshape((self.d,) * len(self.edges), order="F")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalized(self) -> "PureState":
        n = self.norm()
        if n < PROB_TOL:
            raise SimulationError("cannot normalize the zero vector")
        return PureState(self.d, self.edges, self.amps / n)

    def axis(self, edge: Hashable) -> int:
        try:
            return self.edges.index(edge)
        except ValueError:
            raise SimulationError(f"edge {edge!r} not in state") from None

    def reorder(self, edges: Sequence) -> "PureState":
        """Same state with edges listed in a new order."""
        edges = tuple(edges)
        if set(edges) != set(self.edges) or len(edges) != len(self.edges):
            raise SimulationError("reorder needs the same edge set")
        perm = [self.axis(e) for e in edges]
        return PureState.from_tensor(self.d, edges, np.transpose(self.tensor, perm))

    def relabel(self, mapping: dict) -> "PureState":
        return PureState(self.d, tuple(mapping.get(e, e) for e in self.edges), self.amps)

    def kron(self, other: "PureState", budget: int = DEFAULT_BUDGET) -> "PureState":
        """Tensor product; ``self``'s edges come first."""
        if self.d != other.d:
            raise SimulationError("dimension mismatch")
        if self.d ** (self.n_edges + other.n_edges) > budget:
            raise BudgetError("tensor product exceeds the state budget")
        # little-endian: self occupies the low digits
        return PureState(self.d, self.edges + other.edges, np.kron(other.amps, self.amps))

    def __repr__(self) -> str:
        return f"PureState(d={self.d}, edges={self.n_edges}, norm={self.norm():.6g})"


@dataclass(frozen=True, eq=False)
class Branch:
    outcome: object
    probability: float
    state: PureState | None  # None marks an impossible branch


def product_state(d: int, edges: Sequence, vec: np.ndarray | Sequence[np.ndarray]) -> PureState:
    """Every edge in ``vec`` (one vector, or one per edge)."""
    edges = tuple(edges)
    vecs = [np.asarray(vec, dtype=complex)] * len(edges) if np.ndim(vec) == 1 else list(vec)
    amps = np.ones(1, dtype=complex)
    for v in vecs:
        amps = np.kron(v, amps)
    return PureState(d, edges, amps)


def basis_vector(d: int, i: int) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[i % d] = 1
    return v


def fourier_vector(d: int, i: int) -> np.ndarray:
    """Normalized physical |delta_i> = d^{-1/2} sum_k q^{-ik} |k>."""
    return qpow(d, -i * np.arange(d)) / np.sqrt(d)


def plus_vector(d: int) -> np.ndarray:
    """Unnormalized sum_i |i>."""
    return np.ones(d, dtype=complex)


# ---------------------------------------------------------------- operations

def apply(state: PureState, op: LocalOperator) -> PureState:
    if op.d != state.d:
        raise SimulationError("operator and state dimensions differ")
    axes = [state.axis(e) for e in op.support]
    return PureState.from_tensor(state.d, state.edges, op.act(state.tensor, axes))


def overlap(a: PureState, b: PureState) -> complex:
    """<a|b>; ``b`` is reordered to ``a``'s edge order if needed."""
    if a.d != b.d or set(a.edges) != set(b.edges):
        raise SimulationError("overlap needs states on the same edges")
    if b.edges != a.edges:
        b = b.reorder(a.edges)
    return complex(np.vdot(a.amps, b.amps))


def _branches(projected: list, outcomes: list, norm2: float, mode: str, rng) -> list[Branch]:
    out = []
    for k, ps in zip(outcomes, projected):
        p = float(np.vdot(ps.amps, ps.amps).real) / norm2
        out.append(Branch(k, p, PureState(ps.d, ps.edges, ps.amps / np.sqrt(p * norm2)) if p > PROB_TOL else None))
    if mode == "enumerate":
        return out
    if mode != "sample":
        raise SimulationError(f"unknown mode {mode!r}")
    probs = np.array([b.probability if b.state is not None else 0.0 for b in out])
    pick = rng.choice(len(out), p=probs / probs.sum())
    return [out[pick]]


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def measure_site(state: PureState, g: PatchGeometry, site: Site, mode: str = "enumerate",
                 seed=None) -> list[Branch]:
    """Projective stabilizer measurement with the d projectors P(j).

    ``enumerate`` returns every branch in ascending outcome order;
    ``sample`` returns the single branch drawn from ``seed``.
    """
    norm2 = float(np.vdot(state.amps, state.amps).real)
    projected = [apply(state, projector(g, site, j)) for j in range(g.d)]
    return _branches(projected, list(range(g.d)), norm2, mode, _rng(seed))


def measure_edge_basis(state: PureState, edge: Hashable, basis: str = "Z", mode: str = "enumerate",
                       seed=None) -> list[Branch]:
    """Measure one edge in the Z ({|i>}) or X (Fourier) basis and remove it."""
    d = state.d
    ax = state.axis(edge)
    if basis == "Z":
        vecs = [basis_vector(d, i) for i in range(d)]
    elif basis == "X":
        vecs = [fourier_vector(d, i) for i in range(d)]
    else:
        raise SimulationError(f"unknown basis {basis!r}")
    rest = state.edges[:ax] + state.edges[ax + 1:]
    t = state.tensor
    projected = [PureState.from_tensor(d, rest, np.tensordot(v.conj(), t, axes=([0], [ax]))) for v in vecs]
    norm2 = float(np.vdot(state.amps, state.amps).real)
    return _branches(projected, list(range(d)), norm2, mode, _rng(seed))


def adjoin_edge(state: PureState, edge: Hashable, vec: np.ndarray, position: int | None = None,
                budget: int = DEFAULT_BUDGET) -> PureState:
    """Tensor in a fresh edge in state ``vec`` (normalized on the way in)."""
    d = state.d
    if d ** (state.n_edges + 1) > budget:
        raise BudgetError(f"adjoining an edge needs {d}^{state.n_edges + 1} amplitudes, budget {budget}")
    if edge in state.edges:
        raise SimulationError(f"edge {edge!r} already present")
    vec = np.asarray(vec, dtype=complex)
    vec = vec / np.linalg.norm(vec)
    new = PureState(d, state.edges + (edge,), np.kron(vec, state.amps))
    if position is None:
        return new
    order = list(state.edges)
    order.insert(position, edge)
    return new.reorder(order)


def dump_state(state: PureState, path: str | Path, fmt: str = "text") -> None:
    """Write amplitudes in flat little-endian index order.

    ``text``: a header line then one ``index real imag`` line per amplitude.
    ``binary``: raw complex128.
    """
    path = Path(path)
    if fmt == "binary":
        state.amps.astype(np.complex128).tofile(path)
        return
    with open(path, "w") as fh:
        fh.write(f"# d={state.d} edges={state.n_edges} order=little-endian\n")
        for i, a in enumerate(state.amps):
            fh.write(f"{i} {a.real:.17g} {a.imag:.17g}\n")


def load_state(path: str | Path, d: int, edges: Sequence, fmt: str = "text") -> PureState:
    if fmt == "binary":
        return PureState(d, tuple(edges), np.fromfile(path, dtype=np.complex128))
    data = np.loadtxt(path, comments="#")
    return PureState(d, tuple(edges), data[:, 1] + 1j * data[:, 2])


# ---------------------------------------------------------------- syndrome circuits

ANCILLA = ("ancilla",)


def syndrome_circuit(state: PureState, g: PatchGeometry, site: Site, mode: str = "enumerate",
                     seed=None) -> list[Branch]:
    """Measure a stabilizer through an ancilla built from CX, H and H^2.

    Face: ancilla in |0>, CX from each edge onto the ancilla (conjugated by
    H^2 on the ancilla for negatively signed edges), then a Z readout.
    Vertex: ancilla in the uniform state, CX from the ancilla onto each edge
    (conjugated by H^2 on the edge for negative signs), then an X readout.
    The ancilla is appended as the last edge and removed by the readout.
    """
    d = state.d
    cxm = gate("CX", d).matrix
    h2 = gate("H2", d).unitary
    if site.kind == "face":
        st = adjoin_edge(state, ANCILLA, basis_vector(d, 0), budget=float("inf"))
        for e, s in zip(site.edges, site.signs):
            if s < 0:
                st = apply(st, dense_operator(d, [ANCILLA], h2, "H2"))
            st = apply(st, dense_operator(d, [e, ANCILLA], cxm, "CX"))
            if s < 0:
                st = apply(st, dense_operator(d, [ANCILLA], h2, "H2"))
        return measure_edge_basis(st, ANCILLA, "Z", mode, seed)
    st = adjoin_edge(state, ANCILLA, np.ones(d), budget=float("inf"))
    for e, s in zip(site.edges, site.signs):
        if s < 0:
            st = apply(st, dense_operator(d, [e], h2, "H2"))
        st = apply(st, dense_operator(d, [ANCILLA, e], cxm, "CX"))
        if s < 0:
            st = apply(st, dense_operator(d, [e], h2, "H2"))
    return measure_edge_basis(st, ANCILLA, "X", mode, seed)
