"""Cross-checks between surgery extraction, the expected linear maps and ZX
diagrams: the nine-row operation dictionary, the outcome-indexed Kraus
families, and a closure check on the single-qudit maps the operation set can
produce.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .groupalg import gate, hmat, qpow, shift
from .surgery import LogicalMap, extract_maps, proportional
from .zx import evaluate, from_surgery

TOL = 1e-9


# ---------------------------------------------------------------- expected maps

def expected_map(op: str, d: int, n: int = 0) -> np.ndarray:
    """Logical map of a dictionary operation in the group basis, for outcome n."""
    i = np.arange(d)
    if op == "smooth_unit":
        return np.ones((d, 1), dtype=complex)
    if op == "rough_unit":
        m = np.zeros((d, 1), dtype=complex)
        m[0, 0] = 1
        return m
    if op == "smooth_split":
        m = np.zeros((d * d, d), dtype=complex)
        m[i * d + i, i] = 1
        return m
    if op == "rough_split":
        m = np.zeros((d * d, d), dtype=complex)
        for a in i:
            m[i * d + (a - i) % d, a] = 1
        return m
    if op == "smooth_merge":
        m = np.zeros((d, d * d), dtype=complex)
        m[(i + n) % d, i * d + (i + n) % d] = 1
        return m
    if op == "rough_merge":
        m = np.zeros((d, d * d), dtype=complex)
        for a in i:
            m[(a + i) % d, a * d + i] = qpow(d, a * n)
        return m
    if op == "smooth_counit":
        return qpow(d, i * n).reshape(1, d)
    if op == "rough_counit":
        m = np.zeros((1, d), dtype=complex)
        m[0, n % d] = 1
        return m
    if op == "fourier":
        return hmat(d)
    raise KeyError(op)


def dictionary_scripts() -> dict:
    """One surgery script per dictionary row, on the smallest patches that allow it."""
    one = [0, 1]
    return {
        "smooth_unit": {"inputs": [], "steps": [{"op": "unit", "kind": "smooth"}]},
        "smooth_split": {"inputs": [[0, 3]], "steps": [{"op": "split", "kind": "smooth", "wire": 0}]},
        "smooth_merge": {"inputs": [one, one], "steps": [{"op": "merge", "kind": "smooth", "wires": [0, 1]}]},
        "smooth_counit": {"inputs": [one], "steps": [{"op": "counit", "kind": "smooth", "wire": 0}]},
        "rough_unit": {"inputs": [], "steps": [{"op": "unit", "kind": "rough"}]},
        "rough_split": {"inputs": [[2, 1]], "steps": [{"op": "split", "kind": "rough", "wire": 0}]},
        "rough_merge": {"inputs": [one, one], "steps": [{"op": "merge", "kind": "rough", "wires": [0, 1]}]},
        "rough_counit": {"inputs": [one], "steps": [{"op": "counit", "kind": "rough", "wire": 0}]},
        "fourier": {"inputs": [one], "steps": [{"op": "fourier", "wire": 0}]},
    }


CX_SCRIPT = {
    "inputs": [[0, 3], [0, 1]],
    "steps": [
        {"op": "split", "kind": "smooth", "wire": 0, "branch": "first"},
        {"op": "merge", "kind": "rough", "wires": [1, 2], "n": 0},
    ],
}


@dataclass
class RowCheck:
    name: str
    branches: int
    surgery_ok: bool  # n = 0 branch matches the expected map
    zx_ok: bool  # ZX tensor matches the expected map
    agree: bool  # surgery and ZX agree
    families_ok: bool  # every branch matches the family member for its n
    complete: bool  # sum of K^dagger K is the identity
    leakage: float

    @property
    def ok(self) -> bool:
        return self.surgery_ok and self.zx_ok and self.agree and self.families_ok and self.complete


def completeness_defect(maps: list[LogicalMap]) -> float:
    """max |sum_b K_b^dagger K_b - I| over all recorded branches."""
    dim = maps[0].matrix.shape[1]
    acc = sum(m.matrix.conj().T @ m.matrix for m in maps)
    return float(np.abs(acc - np.eye(dim)).max())


def check_row(name: str, d: int, script: dict | None = None, tol: float = TOL) -> RowCheck:
    script = dictionary_scripts()[name] if script is None else script
    maps = extract_maps(script, d)
    zero = [m for m in maps if m.n in (None, 0)]
    ref = expected_map(name, d, 0)
    surgery_ok = bool(zero) and all(proportional(m.matrix, ref, tol) for m in zero)
    zx_t = evaluate(from_surgery(script, d)).matrix
    zx_ok = proportional(zx_t, ref, tol)
    agree = bool(zero) and proportional(zero[0].matrix, zx_t, tol)
    fam = all(proportional(m.matrix, expected_map(name, d, m.n or 0), tol) for m in maps)
    complete = completeness_defect(maps) < tol
    return RowCheck(name, len(maps), surgery_ok, zx_ok, agree, fam, complete,
                    max(m.leakage for m in maps))


def verify_dictionary(d: int, tol: float = TOL) -> list[RowCheck]:
    return [check_row(name, d, tol=tol) for name in dictionary_scripts()]


# ---------------------------------------------------------------- non-universality

def _canonical(m: np.ndarray, digits: int = 6) -> bytes:
    """Representative of m modulo nonzero scalars."""
    flat = m.reshape(-1)
    k = int(np.argmax(np.abs(flat) > 1e-9))
    z = np.round(m / flat[k], digits) + 0.0  # +0.0 folds -0 into 0
    return z.tobytes()


def closure(gens: list[np.ndarray], limit: int = 20000) -> dict | None:
    """Group generated by ``gens`` modulo scalars, as {key: matrix}; None if it
    exceeds ``limit`` elements."""
    dim = gens[0].shape[0]
    ident = np.eye(dim, dtype=complex)
    seen = {_canonical(ident): ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for a in frontier:
            for g in gens:
                b = g @ a
                b = b / np.abs(b).max()
                key = _canonical(b)
                if key not in seen:
                    seen[key] = b
                    nxt.append(b)
                    if len(seen) > limit:
                        return None
        frontier = nxt
    return seen


def single_qudit_maps(d: int) -> dict:
    """Every invertible one-qudit logical map the operation set produces
    directly: logical X and Z, rotation, antipode, and the split-counit and
    unit-merge gadgets for every outcome."""
    one = [0, 1]
    scripts = {
        "X": {"inputs": [one], "steps": [{"op": "gate", "kind": "X", "wire": 0}]},
        "Z": {"inputs": [one], "steps": [{"op": "gate", "kind": "Z", "wire": 0}]},
        "H": {"inputs": [one], "steps": [{"op": "fourier", "wire": 0}]},
        "S": {"inputs": [one], "steps": [{"op": "antipode", "wire": 0}]},
        "smooth split+counit": {"inputs": [[0, 3]], "steps": [
            {"op": "split", "kind": "smooth", "wire": 0, "branch": "first"},
            {"op": "counit", "kind": "smooth", "wire": 1}]},
        "rough split+counit": {"inputs": [[2, 1]], "steps": [
            {"op": "split", "kind": "rough", "wire": 0, "branch": "first"},
            {"op": "counit", "kind": "rough", "wire": 1}]},
        "smooth unit+merge": {"inputs": [one], "steps": [
            {"op": "unit", "kind": "smooth"}, {"op": "merge", "kind": "smooth", "wires": [0, 1]}]},
        "rough unit+merge": {"inputs": [one], "steps": [
            {"op": "unit", "kind": "rough"}, {"op": "merge", "kind": "rough", "wires": [0, 1]}]},
    }
    out = {}
    for name, sc in scripts.items():
        for m in extract_maps(sc, d):
            out.setdefault(name, []).append(m.matrix)
    return out


def pauli_clifford_group(d: int) -> dict:
    """The group generated by X, Z, H and S, modulo scalars."""
    return closure([shift(d, 1), gate("Z", d).matrix, gate("H", d).unitary, gate("S", d).matrix])


def _phase_entries(m: np.ndarray, d: int, tol: float = 1e-6) -> bool:
    """After scaling, every entry is 0 or a power of q."""
    flat = m.reshape(-1)
    k = int(np.argmax(np.abs(flat) > 1e-9))
    z = m / flat[k]
    nz = z[np.abs(z) > tol]
    powers = qpow(d, np.arange(d))
    return bool(np.all(np.min(np.abs(nz[:, None] - powers[None, :]), axis=1) < tol))


@dataclass
class ClosureReport:
    d: int
    generators: int
    size: int | None  # None: closure exceeded the limit
    reference_size: int
    contained: bool
    phases_ok: bool
    sqrt_x_free: bool  # every square root of X in the closure is a power of X

    @property
    def ok(self) -> bool:
        return self.size is not None and self.contained and self.phases_ok and self.sqrt_x_free


def non_universality(d: int) -> ClosureReport:
    maps = single_qudit_maps(d)
    uniq = {}
    for mats in maps.values():
        for m in mats:
            if np.linalg.matrix_rank(m, tol=1e-9) == d:
                uniq.setdefault(_canonical(m), m / np.abs(m).max())
    gens = list(uniq.values())
    group = closure(gens)
    ref = pauli_clifford_group(d)
    if group is None:
        return ClosureReport(d, len(gens), None, len(ref), False, False, False)
    contained = set(group) <= set(ref)
    phases = all(_phase_entries(m, d) for m in group.values())
    x = shift(d, 1)
    x_powers = {_canonical(np.linalg.matrix_power(x, k)) for k in range(d)}
    roots = [m for m in group.values() if _canonical(m @ m) == _canonical(x)]
    sqrt_free = all(_canonical(m) in x_powers for m in roots)
    return ClosureReport(d, len(gens), len(group), len(ref), contained, phases, sqrt_free)


def sqrt_x(d: int) -> np.ndarray:
    """Principal square root of X, diagonalised by the Fourier transform."""
    f = gate("H", d).unitary
    # X = F^dagger diag(q^{k}) F with F = H / sqrt(d) in our sign convention
    evals = np.diag(f @ shift(d, 1) @ f.conj().T)
    return f.conj().T @ np.diag(np.sqrt(evals)) @ f
