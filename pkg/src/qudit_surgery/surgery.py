"""Logical operations on patches: bases, splits, merges, units, counits,
transversal Fourier/antipode and logical string gates, plus extraction of the
induced logical maps.

A :class:`Register` is an ordered list of patches (the logical wires) with
one joint :class:`~qudit_surgery.sim.PureState` over all their edges.  Every
operation returns a list of :class:`SurgeryResult` branches: all possible
ones in ``enumerate`` mode, a single seeded draw in ``sample`` mode.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .groupalg import gate
from .lattice import (DEFAULT_BUDGET, GeometryError, LocalOperator, PatchGeometry, Site,
                      build_patch, edge_shift_map, projector, rotate, shortest_string,
                      string_operator, validate_patch)
from .sim import (PROB_TOL, PureState, adjoin_edge, apply, basis_vector,
                  measure_edge_basis, plus_vector, product_state)

LEAK_TOL = 1e-9
SLOT = 1000  # x-spacing between independent patches


class SurgeryError(ValueError):
    pass


# ---------------------------------------------------------------- logical bases

@dataclass(frozen=True, eq=False)
class LogicalBasis:
    patch: PatchGeometry
    states: tuple  # |i>_L, normalized
    fourier_states: tuple  # |delta_i>_L, normalized

    def matrix(self, fourier: bool = False) -> np.ndarray:
        """Columns are the basis states (flat, in the patch's edge order)."""
        sts = self.fourier_states if fourier else self.states
        return np.stack([s.amps for s in sts], axis=1)


_BASIS_CACHE: dict = {}
_VALID_CACHE: dict = {}


def _geom_key(g: PatchGeometry):
    return (g.d, g.edges, g.vertices, g.faces, g.x_path, g.z_path)


def checked_patch(g: PatchGeometry) -> PatchGeometry:
    """Run validate_patch once per distinct geometry and raise on failure."""
    key = _geom_key(g)
    if key not in _VALID_CACHE:
        validate_patch(g).raise_for_failure()
        _VALID_CACHE[key] = True
    return g


def _project_all(state: PureState, g: PatchGeometry, kind: str) -> PureState:
    for s in g.stabilizers():
        if s.kind == kind:
            state = apply(state, projector(g, s, 0))
    return state


def logical_basis(g: PatchGeometry) -> LogicalBasis:
    """|0>_L from the all-zero state, |i>_L by the X logical string,
    |delta_0>_L from the uniform state, |delta_i>_L by the Z logical string."""
    key = _geom_key(g)
    if key in _BASIS_CACHE:
        return _BASIS_CACHE[key]
    d = g.d
    zero = _project_all(product_state(d, g.edges, basis_vector(d, 0)), g, "vertex")
    plus = _project_all(product_state(d, g.edges, plus_vector(d)), g, "face")
    if zero.norm() < PROB_TOL or plus.norm() < PROB_TOL:
        raise GeometryError("logical projection vanished; invalid geometry")
    zero, plus = zero.normalized(), plus.normalized()
    xs, zs = g.x_logical, g.z_logical
    states = tuple(apply(zero, string_operator(g, xs, i)) for i in range(d))
    fstates = tuple(apply(plus, string_operator(g, zs, i, "quasiparticle")) for i in range(d))
    out = LogicalBasis(g, states, fstates)
    _BASIS_CACHE[key] = out
    return out


def logical_gate(state: PureState, g: PatchGeometry, kind: str, power: int = 1) -> PureState:
    """X^i_L (left-to-right X string) or Z^i_L (top-to-bottom Z string, quasiparticle basis)."""
    if kind == "X":
        return apply(state, string_operator(g, g.x_logical, power))
    if kind == "Z":
        return apply(state, string_operator(g, g.z_logical, power, "quasiparticle"))
    raise SurgeryError(f"unknown logical gate {kind!r}")


# ---------------------------------------------------------------- registers

@dataclass(frozen=True, eq=False)
class Register:
    patches: tuple
    state: PureState

    @property
    def d(self) -> int:
        return self.state.d

    def edge_order(self) -> tuple:
        return tuple(e for g in self.patches for e in g.edges)

    def logical_coords(self) -> tuple[np.ndarray, float]:
        """Coefficients on the product logical basis (Kronecker order) and leakage norm."""
        d = self.d
        st = self.state.reorder(self.edge_order())
        dims = [d ** g.n_edges for g in self.patches]
        t = st.amps.reshape(dims, order="F") if dims else st.amps.reshape(())
        mats = [logical_basis(g).matrix() for g in self.patches]
        c = t
        for k, m in enumerate(mats):
            c = np.moveaxis(np.tensordot(m.conj(), c, axes=([0], [k])), 0, k)
        coords = c.reshape(-1) if mats else st.amps.copy()
        # leakage: norm of the component outside the logical space
        rebuilt = c
        for k, m in enumerate(mats):
            rebuilt = np.moveaxis(np.tensordot(m, rebuilt, axes=([1], [k])), 0, k)
        leak = float(np.linalg.norm(rebuilt.reshape(-1, order="F") - st.amps)) if mats else 0.0
        return coords, leak


def _slot_origin(patches: Sequence[PatchGeometry]) -> tuple:
    if not patches:
        return (0, 0)
    return (max(g.origin[0] for g in patches) + SLOT, 0)


def prepare(patches: Sequence[PatchGeometry], labels: Sequence[int] | None = None,
            coeffs: np.ndarray | None = None) -> Register:
    """Register holding a product of logical basis states, or any logical state.

    ``coeffs`` is a Kronecker-ordered coefficient vector on the product of the
    patches' |i>_L bases.
    """
    patches = tuple(patches)
    if not patches:
        return Register((), PureState(2 if coeffs is None else 2, (), np.ones(1)))
    d = patches[0].d
    bases = [logical_basis(g).matrix() for g in patches]
    if coeffs is None:
        coeffs = np.zeros(d ** len(patches), dtype=complex)
        coeffs[np.ravel_multi_index(tuple(int(l) % d for l in labels), (d,) * len(patches))] = 1
    c = np.asarray(coeffs, dtype=complex).reshape((d,) * len(patches))
    for k, m in enumerate(bases):
        c = np.moveaxis(np.tensordot(m, c, axes=([1], [k])), 0, k)
    edges = tuple(e for g in patches for e in g.edges)
    return Register(patches, PureState(d, edges, c.reshape(-1, order="F")))


def place(shapes: Sequence[tuple], d: int) -> tuple:
    """Default patches of the given (rows, cols) at separated origins."""
    return tuple(build_patch(d, r, c, (k * SLOT, 0)) for k, (r, c) in enumerate(shapes))


# ---------------------------------------------------------------- results

@dataclass(frozen=True, eq=False)
class SurgeryResult:
    kind: str
    outcome: tuple  # raw outcomes, ordered as measured
    n: int | None  # reduced outcome for merges and counits
    probability: float
    register: Register | None  # None for impossible branches
    corrections: tuple = ()


def _measure_sites(state: PureState, g: PatchGeometry, sites: Sequence[Site], mode: str, rng):
    """Sequential stabilizer measurement; returns [(outcomes, prob, state)] for possible branches."""
    from .sim import measure_site
    branches = [((), 1.0, state)]
    for s in sites:
        nxt = []
        for outs, p, st in branches:
            for b in measure_site(st, g, s, "enumerate"):
                if b.state is not None:
                    nxt.append((outs + (b.outcome,), p * b.probability, b.state))
        if mode == "sample":
            probs = np.array([p for _, p, _ in nxt])
            nxt = [nxt[rng.choice(len(nxt), p=probs / probs.sum())]]
        branches = nxt
    return branches


def _measure_edges(state: PureState, edges: Sequence, basis: str, mode: str, rng):
    branches = [((), 1.0, state)]
    for e in edges:
        nxt = []
        for outs, p, st in branches:
            for b in measure_edge_basis(st, e, basis, "enumerate"):
                if b.state is not None:
                    nxt.append((outs + (b.outcome,), p * b.probability, b.state))
        if mode == "sample":
            probs = np.array([p for _, p, _ in nxt])
            nxt = [nxt[rng.choice(len(nxt), p=probs / probs.sum())]]
        branches = nxt
    return branches


def _boundary_targets(g: PatchGeometry, kind: str, prefer: str | None) -> list:
    """Unstabilized sites usable as string ends, preferred side first."""
    if kind == "vertex":
        ends = [v.name for v in g.vertices if not v.stabilized]
        if g.rows is not None and g.rotations == 0:
            top = g.origin[1] + g.rows + 1
            on_top = [v for v in ends if v[1] == top]
            on_bottom = [v for v in ends if v[1] != top]
            if prefer == "top":
                return on_top
            if prefer == "bottom":
                return on_bottom
            return on_top + on_bottom
        return ends
    ends = [f.name for f in g.faces if not f.stabilized]
    if prefer == "right":
        return [f for f in ends if f == ("R",)] or ends
    if prefer == "left":
        return [f for f in ends if f == ("L",)] or ends
    return ends


def correct_syndromes(state: PureState, g: PatchGeometry, syndromes: dict, prefer: dict | None = None
                      ) -> tuple[PureState, tuple]:
    """Return every flagged site to outcome 0 with a string to the boundary.

    ``syndromes`` maps sites to outcomes.  Vertex outcomes are cleared by a
    quasiparticle Z string, face outcomes by an X string, each running to the
    nearest unstabilized site on the preferred side.
    """
    prefer = prefer or {}
    applied = []
    for site, out in syndromes.items():
        if out % g.d == 0:
            continue
        if site.kind == "vertex":
            s = shortest_string(g, "Z", site.name, _boundary_targets(g, "vertex", prefer.get("vertex")))
            op = string_operator(g, s, -out, "quasiparticle")
        else:
            s = shortest_string(g, "X", site.name, _boundary_targets(g, "face", prefer.get("face")))
            op = string_operator(g, s, -out)
        state = apply(state, op)
        applied.append((op.label, s.path))
    return state, tuple(applied)


def _syndromes(state: PureState, g: PatchGeometry) -> dict:
    """Outcomes of a state that is an eigenstate of every stabilizer."""
    from .sim import measure_site
    out = {}
    for s in g.stabilizers():
        probs = [b.probability for b in measure_site(state, g, s, "enumerate")]
        k = int(np.argmax(probs))
        if abs(probs[k] - 1) > 1e-9:
            raise SurgeryError(f"site {s.name} is not in a definite syndrome state")
        out[s] = k
    return out


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _require_default(g: PatchGeometry) -> None:
    if g.rows is None or g.rotations % 4 != 0:
        raise SurgeryError("surgery needs an unrotated default patch; rotate it back first")


def _swap_patches(reg: Register, index: int, new: Sequence[PatchGeometry], remove: Sequence[int] = ()) -> tuple:
    patches = [g for k, g in enumerate(reg.patches) if k not in remove]
    pos = index - sum(1 for r in remove if r < index)
    return tuple(patches[:pos]) + tuple(new) + tuple(patches[pos + 1:])


# ---------------------------------------------------------------- splits

def split(reg: Register, wire: int, kind: str, at: int | None = None, mode: str = "enumerate",
          seed=None) -> list[SurgeryResult]:
    """Smooth split (vertical seam, X-basis readout) or rough split
    (horizontal seam, Z-basis readout).  The new patches replace ``wire``:
    left/bottom first."""
    g = reg.patches[wire]
    _require_default(g)
    d = g.d
    ox, oy = g.origin
    if kind == "smooth":
        c1 = (g.cols - 1) // 2 if at is None else at
        c2 = g.cols - c1 - 1
        if c1 < 1 or c2 < 1:
            raise SurgeryError(f"a smooth split needs cols >= 3, got {g.cols}")
        x = ox + c1
        seam = [((x, y), (x + 1, y)) for y in range(oy, oy + g.rows + 1)]
        parts = (build_patch(d, g.rows, c1, (ox, oy)), build_patch(d, g.rows, c2, (x + 1, oy)))
        basis, prefer = "X", {"vertex": "top"}
    elif kind == "rough":
        r1 = (g.rows - 2) // 2 if at is None else at
        r2 = g.rows - r1 - 2
        if r1 < 0 or r2 < 0:
            raise SurgeryError(f"a rough split needs rows >= 2, got {g.rows}")
        y = oy + r1 + 1
        seam = [((x, y), (x + 1, y)) for x in range(ox, ox + g.cols)]
        parts = (build_patch(d, r1, g.cols, (ox, oy)), build_patch(d, r2, g.cols, (ox, y + 1)))
        basis, prefer = "Z", {"face": "right"}
    else:
        raise SurgeryError(f"unknown split kind {kind!r}")
    results = []
    for outs, p, st in _measure_edges(reg.state, seam, basis, mode, _rng(seed)):
        fixes = ()
        for part in parts:
            syn = {s: k for s, k in _syndromes(st, part).items() if k}
            st, f = correct_syndromes(st, part, syn, prefer)
            fixes += f
        new = Register(_swap_patches(reg, wire, parts), st)
        results.append(SurgeryResult(f"{kind}_split", outs, None, p, new, fixes))
    return results


# ---------------------------------------------------------------- merges

def merge_outcome(kind: str, seam_sites: Sequence[Site], outcomes: Sequence[int], d: int) -> int:
    """Reduce the seam outcomes of a merge to the single logical outcome n.

    Every seam site meets the seam with sign +1, so n is the plain sum.
    """
    return int(sum(outcomes)) % d


def merge(reg: Register, wires: Sequence[int], kind: str, mode: str = "enumerate", seed=None,
          budget: int = DEFAULT_BUDGET) -> list[SurgeryResult]:
    """Smooth merge (``wires[0]`` left of ``wires[1]``, seam qudits in
    sum_i |i>) or rough merge (``wires[0]`` below ``wires[1]``, seam in |0>).

    The seam stabilizers are measured and their outcomes cleared with
    strings run to the boundary of the first patch; n is the sum of the seam
    outcomes.
    """
    a_i, b_i = wires
    a, b = reg.patches[a_i], reg.patches[b_i]
    _require_default(a)
    _require_default(b)
    d = a.d
    ox, oy = a.origin
    if kind == "smooth":
        if a.rows != b.rows:
            raise SurgeryError("smooth merge needs equal row counts")
        dest = (ox + a.cols + 1, oy)
        seam = [((ox + a.cols, y), (ox + a.cols + 1, y)) for y in range(oy, oy + a.rows + 1)]
        merged = checked_patch(build_patch(d, a.rows, a.cols + b.cols + 1, (ox, oy), budget))
        vec, prefer, seam_kind = plus_vector(d), {"face": "left"}, "face"
    elif kind == "rough":
        if a.cols != b.cols:
            raise SurgeryError("rough merge needs equal column counts")
        dest = (ox, oy + a.rows + 2)
        seam = [((x, oy + a.rows + 1), (x + 1, oy + a.rows + 1)) for x in range(ox, ox + a.cols)]
        merged = checked_patch(build_patch(d, a.rows + b.rows + 2, a.cols, (ox, oy), budget))
        vec, prefer, seam_kind = basis_vector(d, 0), {"vertex": "bottom"}, "vertex"
    else:
        raise SurgeryError(f"unknown merge kind {kind!r}")
    shift_map = edge_shift_map(b, dest[0] - b.origin[0], dest[1] - b.origin[1])
    others = {e for k, g in enumerate(reg.patches) if k not in wires for e in g.edges}
    if others & (set(shift_map.values()) | set(seam)):
        raise SurgeryError("patches cannot be brought adjacent without overlapping another patch")
    st = reg.state.relabel(shift_map)
    for e in seam:
        st = adjoin_edge(st, e, vec, budget=budget)
    seam_set = set(seam)
    seam_sites = [s for s in merged.stabilizers() if s.kind == seam_kind and seam_set & set(s.edges)]
    quiet = [s for s in merged.stabilizers() if s not in seam_sites]
    results = []
    for outs, p, st2 in _measure_sites(st, merged, seam_sites, mode, _rng(seed)):
        for s in quiet:
            # every other stabilizer was already satisfied before the merge
            if abs(float(np.vdot(st2.amps, apply(st2, projector(merged, s, 0)).amps).real) - 1) > 1e-9:
                raise SurgeryError(f"site {s.name} left the vacuum during the merge")
        st3, fixes = correct_syndromes(st2, merged, dict(zip(seam_sites, outs)), prefer)
        n = merge_outcome(kind, seam_sites, outs, d)
        new = Register(_swap_patches(reg, a_i, [merged], remove=[b_i]), st3)
        results.append(SurgeryResult(f"{kind}_merge", outs, n, p, new, fixes))
    return results


# ---------------------------------------------------------------- units and counits

def unit(reg: Register, kind: str, shape: tuple = (0, 1), mode: str = "enumerate", seed=None
         ) -> list[SurgeryResult]:
    """Append a fresh patch in |0>_L (rough) or |delta_0>_L (smooth)."""
    d = reg.d
    g = build_patch(d, shape[0], shape[1], _slot_origin(reg.patches))
    vec = basis_vector(d, 0) if kind == "rough" else plus_vector(d) / np.sqrt(d)
    if kind not in ("rough", "smooth"):
        raise SurgeryError(f"unknown unit kind {kind!r}")
    st = reg.state.kron(product_state(d, g.edges, vec)) if reg.patches else product_state(d, g.edges, vec)
    sk = "vertex" if kind == "rough" else "face"
    sites = [s for s in g.stabilizers() if s.kind == sk]
    results = []
    for outs, p, st2 in _measure_sites(st, g, sites, mode, _rng(seed)):
        st3, fixes = correct_syndromes(st2, g, dict(zip(sites, outs)))
        results.append(SurgeryResult(f"{kind}_unit", outs, None, p, Register(reg.patches + (g,), st3), fixes))
    return results


def counit_outcome(g: PatchGeometry, kind: str, outcomes: dict) -> int:
    """Logical outcome of deleting a patch, from its per-edge readouts.

    Rough (Z readout): minus the signed sum of the readouts along the Z
    logical string.  Smooth (X readout): the signed sum along the X logical
    string.
    """
    d = g.d
    if kind == "rough":
        return int(-sum(s * outcomes[e] for e, s in g.z_logical.crossings)) % d
    return int(sum(s * outcomes[e] for e, s in g.x_logical.crossings)) % d


def _counit_constraints(g: PatchGeometry, kind: str, outcomes: dict) -> list:
    """Sites whose readout constraint fails (must be empty for vacuum input)."""
    bad = []
    sk = "face" if kind == "rough" else "vertex"
    for s in g.stabilizers():
        if s.kind == sk and sum(sg * outcomes[e] for e, sg in zip(s.edges, s.signs)) % g.d:
            bad.append(s.name)
    return bad


def counit(reg: Register, wire: int, kind: str, mode: str = "enumerate", seed=None) -> list[SurgeryResult]:
    """Delete a patch by reading out every edge (Z basis rough, X basis smooth)."""
    g = reg.patches[wire]
    basis = {"rough": "Z", "smooth": "X"}.get(kind)
    if basis is None:
        raise SurgeryError(f"unknown counit kind {kind!r}")
    results = []
    for outs, p, st in _measure_edges(reg.state, g.edges, basis, mode, _rng(seed)):
        record = dict(zip(g.edges, outs))
        bad = _counit_constraints(g, kind, record)
        if bad:
            raise GeometryError(f"readout violates the vacuum constraints at {bad}")
        n = counit_outcome(g, kind, record)
        patches = reg.patches[:wire] + reg.patches[wire + 1:]
        results.append(SurgeryResult(f"{kind}_counit", outs, n, p, Register(patches, st)))
    return results


# ---------------------------------------------------------------- Fourier and antipode

def transversal_fourier(reg: Register, wire: int) -> Register:
    """H on every edge of the patch; the geometry is rotated (vertices <-> faces)."""
    g = reg.patches[wire]
    h = gate("H", g.d).unitary
    st = reg.state
    st = apply(st, LocalOperator(g.d, g.edges, factors=tuple(h for _ in g.edges), label="H_L"))
    new = rotate(g)
    if new.rotations % 4 == 0 and g.rows is not None:
        new = build_patch(g.d, g.rows, g.cols, g.origin, budget=float("inf"))
    return Register(reg.patches[:wire] + (new,) + reg.patches[wire + 1:], st)


def antipode(reg: Register, wire: int) -> Register:
    """H^2 on every edge: |i>_L -> |-i>_L.

    Two rotations negate every sign, which leaves the stabilizer projectors
    and the logical strings unchanged, so the geometry is kept as is.
    """
    g = reg.patches[wire]
    s = gate("H2", g.d).unitary
    st = apply(reg.state, LocalOperator(g.d, g.edges, factors=tuple(s for _ in g.edges), label="S_L"))
    return Register(reg.patches, st)


def apply_logical_gate(reg: Register, wire: int, kind: str, power: int = 1) -> Register:
    return Register(reg.patches, logical_gate(reg.state, reg.patches[wire], kind, power))


# ---------------------------------------------------------------- scripts

@dataclass(frozen=True)
class Trace:
    """One path through a script: recorded outcomes and the final register."""
    outcomes: tuple  # ((step index, raw outcome), ...)
    ns: tuple  # ((step index, n), ...) for merges and counits
    probability: float
    register: Register


def _script_shapes(script: dict) -> list:
    return [tuple(s) if not isinstance(s, dict) else (s.get("rows", 0), s.get("cols", 1))
            for s in script.get("inputs", [])]


def _keep(step: dict, res: SurgeryResult) -> bool:
    sel = step.get("n")
    return sel is None or res.n is None or res.n == int(sel) % res.register.d


def run_script(script: dict, register: Register, mode: str = "enumerate", seed=None,
               budget: int = DEFAULT_BUDGET) -> list[Trace]:
    """Run the steps of a script on a prepared register.

    Steps are dicts with ``op`` in unit, split, merge, counit, fourier,
    antipode, gate.  A step may carry ``"n": k`` to keep only branches with
    logical outcome k, or ``"branch": "first"`` to follow a single possible
    branch (useful for splits, whose logical action does not depend on the
    outcome).
    """
    rng = _rng(seed)
    traces = [Trace((), (), 1.0, register)]
    for k, step in enumerate(script.get("steps", [])):
        op = step["op"]
        nxt = []
        for tr in traces:
            reg = tr.register
            if op in ("fourier", "antipode", "gate"):
                if op == "fourier":
                    new = transversal_fourier(reg, step["wire"])
                elif op == "antipode":
                    new = antipode(reg, step["wire"])
                else:
                    new = apply_logical_gate(reg, step["wire"], step["kind"], step.get("power", 1))
                nxt.append(replace(tr, register=new))
                continue
            if op == "unit":
                res = unit(reg, step["kind"], tuple(step.get("shape", (0, 1))), mode, rng)
            elif op == "split":
                res = split(reg, step["wire"], step["kind"], step.get("at"), mode, rng)
            elif op == "merge":
                res = merge(reg, step["wires"], step["kind"], mode, rng, budget)
            elif op == "counit":
                res = counit(reg, step["wire"], step["kind"], mode, rng)
            else:
                raise SurgeryError(f"unknown script op {op!r}")
            res = [r for r in res if _keep(step, r)]
            if step.get("branch") == "first":
                res = res[:1]
            for r in res:
                ns = tr.ns + (((k, r.n),) if r.n is not None else ())
                # a followed-first branch is recorded without its raw outcome so
                # that every input lands in the same Kraus operator
                rec = "first" if step.get("branch") == "first" else r.outcome
                nxt.append(Trace(tr.outcomes + ((k, rec),), ns, tr.probability * r.probability, r.register))
        traces = nxt
    return traces


@dataclass(frozen=True, eq=False)
class LogicalMap:
    """Kraus operator of one branch on the logical group bases.

    ``matrix`` has Kronecker-ordered rows (outputs) and columns (inputs);
    ``leakage`` is the largest norm found outside the logical subspace.
    """
    d: int
    matrix: np.ndarray
    outcomes: tuple
    ns: tuple
    leakage: float

    @property
    def n(self) -> int | None:
        return self.ns[-1][1] if self.ns else None

    def in_basis(self, source: str = "group", target: str = "group") -> np.ndarray:
        """Matrix re-expressed with function-basis (|delta_j>) legs where asked."""
        from .groupalg import Basis, fourier_matrix
        d = self.d
        n_out = int(round(np.log(self.matrix.shape[0]) / np.log(d))) if self.matrix.shape[0] > 1 else 0
        n_in = int(round(np.log(self.matrix.shape[1]) / np.log(d))) if self.matrix.shape[1] > 1 else 0
        m = self.matrix
        if target == "function":
            f = fourier_matrix(d, Basis.GROUP)
            m = _kron_power(f, n_out) @ m
        if source == "function":
            f = fourier_matrix(d, Basis.FUNCTION)
            m = m @ _kron_power(f, n_in)
        return m


def _kron_power(m: np.ndarray, k: int) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for _ in range(k):
        out = np.kron(out, m)
    return out


def extract_maps(script: dict, d: int | None = None, mode: str = "enumerate", seed=None,
                 budget: int = DEFAULT_BUDGET) -> list[LogicalMap]:
    """Kraus operators of a script, one per outcome record.

    Every product of logical basis states is fed in; each branch contributes
    sqrt(p) times the logical coordinates of its output as a column.
    """
    d = int(script.get("d", 2) if d is None else d)
    shapes = _script_shapes(script)
    patches = place(shapes, d)
    n_in = len(patches)
    cols: dict = {}
    meta: dict = {}
    leak = 0.0
    for idx in range(d ** n_in):
        labels = np.unravel_index(idx, (d,) * n_in) if n_in else ()
        reg = prepare(patches, labels) if n_in else Register((), PureState(d, (), np.ones(1)))
        for tr in run_script(script, reg, mode, seed, budget):
            coords, lk = tr.register.logical_coords()
            leak = max(leak, lk)
            key = tr.outcomes
            cols.setdefault(key, {})[idx] = np.sqrt(tr.probability) * coords
            meta[key] = tr.ns
    maps = []
    for key, colmap in cols.items():
        n_out = len(next(iter(colmap.values())))
        m = np.zeros((n_out, d ** n_in), dtype=complex)
        for idx, c in colmap.items():
            m[:, idx] = c
        maps.append(LogicalMap(d, m, key, meta[key], leak))
    return maps


def extract_logical_map(script: dict, d: int | None = None, n: int | None = None,
                        budget: int = DEFAULT_BUDGET) -> LogicalMap:
    """The Kraus operator of the first branch in which every logical outcome equals ``n``."""
    for m in extract_maps(script, d, budget=budget):
        if n is None or all(k == n % m.d for _, k in m.ns):
            return m
    raise SurgeryError(f"no branch with outcome n={n}")


def proportional(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    """True when a = c b for some nonzero scalar c."""
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        return False
    k = np.argmax(np.abs(b))
    if abs(b.flat[k]) < tol or abs(a.flat[k]) < tol:
        return False
    c = a.flat[k] / b.flat[k]
    return bool(np.allclose(a, c * b, atol=tol * max(1.0, np.abs(a).max())))
