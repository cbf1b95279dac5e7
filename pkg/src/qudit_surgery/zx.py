"""Qudit ZX diagrams with integer phases: tensor semantics and rewrites.

Generators (``q = exp(2 pi i / d)``, tensors indexed (outputs, inputs)):

* green spider, m inputs, k outputs, phase a: ``sum_i q^{a i} |i..i><i..i|``.
  1->2 copies in the group basis, 2->1 is ``delta_{ij}|i>``, 1->1 is Z^a.
* red spider, phase a: ``sum delta(sum(out) - sum(in) - a) |out><in|``.
  2->1 adds, 1->2 is ``sum_h |h>|i-h>``, 1->1 is X^a, 0->1 is |a>.
* fourier box H = sum q^{-jk}|k><j| (unnormalized), or H^dagger with ``dagger``.
* antipode box S: |i> -> |-i>.
* cup (0->2) ``sum_h |h h>`` and cap (2->0) ``sum_h <h h|``.

Wires run from a source (node output port or boundary input) to a target
(node input port or boundary output).  Boundary ports use node id ``-1``.
Every rewrite keeps the tensor exactly equal, compensating scalars in
``Diagram.scalar``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .groupalg import hmat, qpow

BOUNDARY = -1
KINDS = ("green", "red", "fourier", "antipode", "cup", "cap")
SPIDERS = ("green", "red")
EQ_TOL = 1e-9


class DiagramError(ValueError):
    pass


class RewriteError(DiagramError):
    pass


@dataclass(frozen=True)
class Node:
    kind: str
    n_in: int = 1
    n_out: int = 1
    phase: int = 0
    dagger: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DiagramError(f"unknown node kind {self.kind!r}")
        fixed = {"fourier": (1, 1), "antipode": (1, 1), "cup": (0, 2), "cap": (2, 0)}
        if self.kind in fixed and (self.n_in, self.n_out) != fixed[self.kind]:
            raise DiagramError(f"{self.kind} has fixed arity {fixed[self.kind]}")
        if self.n_in < 0 or self.n_out < 0:
            raise DiagramError("negative arity")


def green(n_in: int, n_out: int, phase: int = 0) -> Node:
    return Node("green", n_in, n_out, phase)


def red(n_in: int, n_out: int, phase: int = 0) -> Node:
    return Node("red", n_in, n_out, phase)


FOURIER = Node("fourier")
FOURIER_DAG = Node("fourier", dagger=True)
ANTIPODE = Node("antipode")
CUP = Node("cup", 0, 2)
CAP = Node("cap", 2, 0)


@dataclass(frozen=True)
class Diagram:
    """Immutable open diagram.

    ``nodes`` is a sorted tuple of (id, Node); ``wires`` a sorted tuple of
    ((src_id, out_port), (dst_id, in_port)), with id -1 for the boundary.
    """

    d: int
    n_in: int
    n_out: int
    nodes: tuple
    wires: tuple
    scalar: complex = 1.0

    def __post_init__(self):
        nodes = tuple(sorted((i, replace(n, phase=int(n.phase) % self.d) if n.kind in SPIDERS else n)
                             for i, n in self.nodes))
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "wires", tuple(sorted(self.wires)))
        check_wellformed(self)

    @property
    def node_map(self) -> dict:
        return dict(self.nodes)

    def node(self, nid: int) -> Node:
        try:
            return self.node_map[nid]
        except KeyError:
            raise DiagramError(f"no node {nid}") from None

    def wire_from(self, src: tuple) -> tuple:
        for w in self.wires:
            if w[0] == src:
                return w
        raise DiagramError(f"no wire from {src}")

    def wire_to(self, dst: tuple) -> tuple:
        for w in self.wires:
            if w[1] == dst:
                return w
        raise DiagramError(f"no wire into {dst}")

    def __repr__(self) -> str:
        kinds = ", ".join(f"{i}:{n.kind}{'' if n.kind not in SPIDERS else f'({n.n_in},{n.n_out},{n.phase})'}"
                          for i, n in self.nodes)
        return f"Diagram(d={self.d}, {self.n_in}->{self.n_out}, [{kinds}])"


def check_wellformed(g: Diagram) -> None:
    """Every port has exactly one wire, and every wire two valid endpoints."""
    nodes = dict(g.nodes)
    if len(nodes) != len(g.nodes):
        raise DiagramError("duplicate node id")
    if BOUNDARY in nodes:
        raise DiagramError("node id -1 is reserved for the boundary")
    srcs = [w[0] for w in g.wires]
    dsts = [w[1] for w in g.wires]
    want_src = {(BOUNDARY, k) for k in range(g.n_in)} | {(i, p) for i, n in nodes.items() for p in range(n.n_out)}
    want_dst = {(BOUNDARY, k) for k in range(g.n_out)} | {(i, p) for i, n in nodes.items() for p in range(n.n_in)}
    if len(set(srcs)) != len(srcs) or set(srcs) != want_src:
        raise DiagramError("every output port and boundary input needs exactly one wire")
    if len(set(dsts)) != len(dsts) or set(dsts) != want_dst:
        raise DiagramError("every input port and boundary output needs exactly one wire")


# ---------------------------------------------------------------- building

class DiagramBuilder:
    """Mutable helper for assembling diagrams port by port."""

    def __init__(self, d: int, n_in: int = 0):
        self.d = d
        self.n_in = n_in
        self.nodes: dict = {}
        self.wires: list = []
        self.outputs: list = []
        self.scalar: complex = 1.0

    def add(self, node: Node) -> int:
        nid = max(self.nodes, default=-1) + 1
        self.nodes[nid] = node
        return nid

    def connect(self, src: tuple, dst: tuple) -> None:
        self.wires.append((src, dst))

    def node_after(self, node: Node, srcs: Sequence[tuple]) -> list:
        """Add ``node`` fed by ``srcs``; return its output source ports."""
        if len(srcs) != node.n_in:
            raise DiagramError(f"{node.kind} needs {node.n_in} inputs, got {len(srcs)}")
        nid = self.add(node)
        for p, s in enumerate(srcs):
            self.connect(s, (nid, p))
        return [(nid, p) for p in range(node.n_out)]

    def finish(self, outputs: Sequence[tuple]) -> Diagram:
        wires = list(self.wires) + [(s, (BOUNDARY, k)) for k, s in enumerate(outputs)]
        return Diagram(self.d, self.n_in, len(outputs), tuple(self.nodes.items()), tuple(wires), self.scalar)


def inputs(n: int) -> list:
    return [(BOUNDARY, k) for k in range(n)]


def single(d: int, node: Node) -> Diagram:
    """A diagram holding one generator with its ports as the boundary."""
    b = DiagramBuilder(d, node.n_in)
    return b.finish(b.node_after(node, inputs(node.n_in)))


# ---------------------------------------------------------------- semantics

def node_tensor(d: int, node: Node) -> np.ndarray:
    """Generator tensor with axes (outputs..., inputs...)."""
    m, k = node.n_in, node.n_out
    if node.kind == "green":
        if k + m == 0:
            return np.array(qpow(d, node.phase * np.arange(d)).sum())
        t = np.zeros((d,) * (k + m), dtype=complex)
        for i in range(d):
            t[(i,) * (k + m)] = qpow(d, node.phase * i)
        return t
    if node.kind == "red":
        grids = np.indices((d,) * (k + m))
        s = grids[:k].sum(axis=0) - grids[k:].sum(axis=0) - node.phase if k + m else np.array(-node.phase)
        return (np.mod(s, d) == 0).astype(complex)
    if node.kind == "fourier":
        h = hmat(d)
        return h.conj() if node.dagger else h
    if node.kind == "antipode":
        i = np.arange(d)
        t = np.zeros((d, d), dtype=complex)
        t[(-i) % d, i] = 1
        return t
    return np.eye(d, dtype=complex)  # cup and cap


@dataclass(frozen=True, eq=False)
class DiagramTensor:
    d: int
    n_in: int
    n_out: int
    tensor: np.ndarray  # axes: outputs then inputs

    @property
    def matrix(self) -> np.ndarray:
        """Kronecker-ordered (d**n_out, d**n_in) matrix."""
        return self.tensor.reshape(self.d ** self.n_out, self.d ** self.n_in)


def evaluate(g: Diagram) -> DiagramTensor:
    """Contract the generator tensors along the wires."""
    wire_id = {w: k for k, w in enumerate(g.wires)}
    ops: list = []
    for nid, node in g.nodes:
        idx = [wire_id[g.wire_from((nid, p))] for p in range(node.n_out)]
        idx += [wire_id[g.wire_to((nid, p))] for p in range(node.n_in)]
        ops += [node_tensor(g.d, node), idx]
    out_idx = [wire_id[g.wire_to((BOUNDARY, k))] for k in range(g.n_out)]
    in_idx = [wire_id[g.wire_from((BOUNDARY, k))] for k in range(g.n_in)]
    # a wire straight from input to output needs an identity tensor of its own
    nxt = len(g.wires)
    for k, ix in enumerate(in_idx):
        if ix in out_idx:
            ops += [np.eye(g.d, dtype=complex), [ix, nxt]]
            in_idx[k] = nxt
            nxt += 1
    if not ops:
        t = np.array(1.0 + 0j)
    else:
        t = np.einsum(*ops, out_idx + in_idx, optimize=len(ops) > 4)
    return DiagramTensor(g.d, g.n_in, g.n_out, g.scalar * np.asarray(t, dtype=complex))


def tensors_equal(a: np.ndarray, b: np.ndarray, up_to_scalar: bool = True, tol: float = EQ_TOL) -> bool:
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        return False
    scale = max(1.0, float(np.abs(a).max(initial=0)), float(np.abs(b).max(initial=0)))
    if not up_to_scalar:
        return bool(np.allclose(a, b, atol=tol * scale, rtol=0))
    za, zb = np.abs(a).max(initial=0) < tol, np.abs(b).max(initial=0) < tol
    if za or zb:
        return bool(za and zb)
    k = int(np.argmax(np.abs(b)))
    c = a.flat[k] / b.flat[k]
    if abs(c) < tol:
        return False
    return bool(np.allclose(a, c * b, atol=tol * scale, rtol=0))


def equal(a: Diagram, b: Diagram, up_to_scalar: bool = True, tol: float = EQ_TOL) -> bool:
    """Compare evaluated tensors entrywise, optionally modulo one nonzero scalar."""
    if a.d != b.d or a.n_in != b.n_in or a.n_out != b.n_out:
        raise DiagramError(f"arity mismatch: {a.n_in}->{a.n_out} vs {b.n_in}->{b.n_out} (d={a.d}, {b.d})")
    return tensors_equal(evaluate(a).tensor, evaluate(b).tensor, up_to_scalar, tol)


# ---------------------------------------------------------------- editing helpers

class _Edit:
    """Mutable copy of a diagram used inside rewrites."""

    def __init__(self, g: Diagram):
        self.g = g
        self.nodes = dict(g.nodes)
        self.wires = set(g.wires)
        self.scalar = g.scalar

    def new_id(self) -> int:
        return max(self.nodes, default=-1) + 1

    def add(self, node: Node) -> int:
        nid = self.new_id()
        self.nodes[nid] = node
        return nid

    def src_of(self, dst: tuple) -> tuple | None:
        return next((w[0] for w in self.wires if w[1] == dst), None)

    def dst_of(self, src: tuple) -> tuple | None:
        return next((w[1] for w in self.wires if w[0] == src), None)

    def remove_node(self, nid: int) -> tuple[list, list]:
        """Drop a node; return the (sources into it, targets out of it).

        Ports whose wire went with an earlier removal come back as None.
        """
        node = self.nodes.pop(nid)
        ins = [self.src_of((nid, p)) for p in range(node.n_in)]
        outs = [self.dst_of((nid, p)) for p in range(node.n_out)]
        self.wires = {w for w in self.wires if w[0][0] != nid and w[1][0] != nid}
        return ins, outs

    def connect(self, src: tuple, dst: tuple) -> None:
        self.wires.add((src, dst))

    def done(self) -> Diagram:
        # compact ids so equal structures compare equal
        order = sorted(self.nodes)
        ren = {old: new for new, old in enumerate(order)}
        ren[BOUNDARY] = BOUNDARY
        nodes = tuple((ren[i], n) for i, n in self.nodes.items())
        wires = tuple(((ren[s[0]], s[1]), (ren[t[0]], t[1])) for s, t in self.wires)
        return Diagram(self.g.d, self.g.n_in, self.g.n_out, nodes, wires, self.scalar)


def _links(g: Diagram, a: int, b: int) -> list:
    return [w for w in g.wires if {w[0][0], w[1][0]} == {a, b} and a != b]


def _self_loop(g: Diagram, nid: int) -> bool:
    return any(w[0][0] == nid and w[1][0] == nid for w in g.wires)


# ---------------------------------------------------------------- rewrite rules

def _fuse(g: Diagram, loc) -> Diagram:
    a, b = loc
    na, nb = g.node(a), g.node(b)
    if a == b or na.kind != nb.kind or na.kind not in SPIDERS:
        raise RewriteError("spider_fuse needs two distinct spiders of one colour")
    links = _links(g, a, b)
    if not links or _self_loop(g, a) or _self_loop(g, b):
        raise RewriteError("spider_fuse needs connected spiders without self-loops")
    e = _Edit(g)
    link_set = set(links)
    ext_in, ext_out = [], []
    for nid, node in ((a, na), (b, nb)):
        for p in range(node.n_in):
            w = next(w for w in g.wires if w[1] == (nid, p))
            if w not in link_set:
                ext_in.append(w[0])
        for p in range(node.n_out):
            w = next(w for w in g.wires if w[0] == (nid, p))
            if w not in link_set:
                ext_out.append(w[1])
    for nid in (a, b):
        e.nodes.pop(nid)
    e.wires = {w for w in e.wires if w[0][0] not in (a, b) and w[1][0] not in (a, b)}
    if na.kind == "red":
        e.scalar *= g.d ** (len(links) - 1)
    fused = e.add(Node(na.kind, len(ext_in), len(ext_out), (na.phase + nb.phase) % g.d))
    for p, s in enumerate(ext_in):
        e.connect(s, (fused, p))
    for p, t in enumerate(ext_out):
        e.connect((fused, p), t)
    return e.done()


def _unfuse(g: Diagram, loc) -> Diagram:
    """Split spider ``nid`` in two joined by one wire.

    ``loc = (nid, move_in, move_out, feed)``: the listed input/output ports
    move to a new phaseless spider of the same colour; ``feed`` is True when
    the new spider feeds the old one, False when the old feeds the new.
    """
    nid, move_in, move_out, feed = loc
    node = g.node(nid)
    if node.kind not in SPIDERS or _self_loop(g, nid):
        raise RewriteError("unfuse applies to spiders without self-loops")
    move_in, move_out = sorted(set(move_in)), sorted(set(move_out))
    if any(not 0 <= p < node.n_in for p in move_in) or any(not 0 <= p < node.n_out for p in move_out):
        raise RewriteError("unfuse port out of range")
    e = _Edit(g)
    ins, outs = e.remove_node(nid)
    keep_in = [s for p, s in enumerate(ins) if p not in move_in]
    keep_out = [t for p, t in enumerate(outs) if p not in move_out]
    new_in = [ins[p] for p in move_in]
    new_out = [outs[p] for p in move_out]
    a = e.add(Node(node.kind, len(keep_in) + int(feed), len(keep_out) + int(not feed), node.phase))
    b = e.add(Node(node.kind, len(new_in) + int(not feed), len(new_out) + int(feed), 0))
    for p, s in enumerate(keep_in):
        e.connect(s, (a, p))
    for p, t in enumerate(keep_out):
        e.connect((a, p), t)
    for p, s in enumerate(new_in):
        e.connect(s, (b, p))
    for p, t in enumerate(new_out):
        e.connect((b, p), t)
    if feed:
        e.connect((b, len(new_out)), (a, len(keep_in)))
    else:
        e.connect((a, len(keep_out)), (b, len(new_in)))
    return e.done()


def _identity_remove(g: Diagram, nid) -> Diagram:
    node = g.node(nid)
    if node.kind not in SPIDERS or (node.n_in, node.n_out) != (1, 1) or node.phase % g.d:
        raise RewriteError("identity_remove needs a phaseless 1->1 spider")
    e = _Edit(g)
    if g.wire_from((nid, 0))[1] == (nid, 0):
        raise RewriteError("identity_remove on a self-loop")
    (s,), (t,) = e.remove_node(nid)
    e.connect(s, t)
    return e.done()


def _color_change(g: Diagram, nid) -> Diagram:
    """Swap spider colour, negating the phase and adding Fourier boxes.

    green(a) = d^{1-m-k} (H on outputs) red(-a) (H^dagger on inputs)
    red(a)   = d^{-1}    (H^dagger on outputs) green(-a) (H on inputs)
    """
    node = g.node(nid)
    if node.kind not in SPIDERS:
        raise RewriteError("color_change applies to spiders")
    m, k = node.n_in, node.n_out
    if node.kind == "green":
        new_kind, in_box, out_box, factor = "red", FOURIER_DAG, FOURIER, float(g.d) ** (1 - m - k)
    else:
        new_kind, in_box, out_box, factor = "green", FOURIER, FOURIER_DAG, 1.0 / g.d
    e = _Edit(g)
    ins, outs = e.remove_node(nid)
    s_new = e.add(Node(new_kind, m, k, (-node.phase) % g.d))
    for p, s in enumerate(ins):
        if s[0] == nid:  # self-loop: the partner port is rewired below
            continue
        box = e.add(in_box)
        e.connect(s, (box, 0))
        e.connect((box, 0), (s_new, p))
    for p, t in enumerate(outs):
        box = e.add(out_box)
        e.connect((s_new, p), (box, 0))
        if t[0] == nid:
            # output p loops back to input t[1]; route through both boxes
            box2 = e.add(in_box)
            e.connect((box, 0), (box2, 0))
            e.connect((box2, 0), (s_new, t[1]))
        else:
            e.connect((box, 0), t)
    e.scalar *= factor
    return e.done()


def _bialgebra(g: Diagram, loc) -> Diagram:
    """A phaseless 2->1 spider feeding a phaseless 1->2 spider of the other
    colour becomes two copies of each, cross-connected."""
    a, b = loc
    na, nb = g.node(a), g.node(b)
    ok = (na.kind in SPIDERS and nb.kind in SPIDERS and na.kind != nb.kind
          and (na.n_in, na.n_out) == (2, 1) and (nb.n_in, nb.n_out) == (1, 2)
          and na.phase % g.d == 0 and nb.phase % g.d == 0 and g.wire_from((a, 0))[1] == (b, 0))
    if not ok:
        raise RewriteError("bialgebra pattern not found")
    e = _Edit(g)
    ins = [e.src_of((a, 0)), e.src_of((a, 1))]
    outs = [e.dst_of((b, 0)), e.dst_of((b, 1))]
    if any(s[0] in (a, b) for s in ins) or any(t[0] in (a, b) for t in outs):
        raise RewriteError("bialgebra pattern with loops is not handled")
    e.remove_node(a)
    e.remove_node(b)
    copies = [e.add(Node(nb.kind, 1, 2)) for _ in range(2)]
    merges = [e.add(Node(na.kind, 2, 1)) for _ in range(2)]
    for i in range(2):
        e.connect(ins[i], (copies[i], 0))
        for j in range(2):
            e.connect((copies[i], j), (merges[j], i))
        e.connect((merges[i], 0), outs[i])
    return e.done()


def _box_pair(g: Diagram, loc) -> tuple:
    a, b = loc
    if g.wire_from((a, 0))[1] != (b, 0) or a == b:
        raise RewriteError("boxes are not adjacent")
    return g.node(a), g.node(b)


def _antipode_cancel(g: Diagram, loc) -> Diagram:
    """S followed by S is the identity."""
    na, nb = _box_pair(g, loc)
    if na.kind != "antipode" or nb.kind != "antipode":
        raise RewriteError("antipode_cancel needs two antipodes in sequence")
    e = _Edit(g)
    (s,), _ = e.remove_node(loc[0])
    _, (t,) = e.remove_node(loc[1])
    e.connect(s, t)
    return e.done()


def _antipode_insert(g: Diagram, wire) -> Diagram:
    """Put S then S on a wire (inverse of antipode_cancel)."""
    if wire not in g.wires:
        raise RewriteError("no such wire")
    e = _Edit(g)
    e.wires.discard(wire)
    s1, s2 = e.add(ANTIPODE), e.add(ANTIPODE)
    e.connect(wire[0], (s1, 0))
    e.connect((s1, 0), (s2, 0))
    e.connect((s2, 0), wire[1])
    return e.done()


def _fourier_square(g: Diagram, loc) -> Diagram:
    """H H = d S, H^dagger H^dagger = d S, H^dagger H = H H^dagger = d I."""
    na, nb = _box_pair(g, loc)
    if na.kind != "fourier" or nb.kind != "fourier":
        raise RewriteError("fourier_square needs two Fourier boxes in sequence")
    e = _Edit(g)
    (s,), _ = e.remove_node(loc[0])
    _, (t,) = e.remove_node(loc[1])
    e.scalar *= g.d
    if na.dagger == nb.dagger:
        mid = e.add(ANTIPODE)
        e.connect(s, (mid, 0))
        e.connect((mid, 0), t)
    else:
        e.connect(s, t)
    return e.done()


def _antipode_push(g: Diagram, nid) -> Diagram:
    """A spider with S on every leg equals the spider with negated phase.

    If every leg already carries an antipode box they are absorbed;
    otherwise boxes are pulled out onto every leg.
    """
    node = g.node(nid)
    if node.kind not in SPIDERS:
        raise RewriteError("antipode_push applies to spiders")
    in_srcs = [g.wire_to((nid, p))[0] for p in range(node.n_in)]
    out_dsts = [g.wire_from((nid, p))[1] for p in range(node.n_out)]
    legs = [s[0] for s in in_srcs] + [t[0] for t in out_dsts]
    if nid in legs:
        raise RewriteError("antipode_push on a spider with a self-loop")
    absorb = bool(legs) and all(l != BOUNDARY and g.node(l).kind == "antipode" for l in legs) \
        and len(set(legs)) == len(legs)
    e = _Edit(g)
    ins, outs = e.remove_node(nid)
    new = e.add(replace(node, phase=(-node.phase) % g.d))
    for p, s in enumerate(ins):
        if absorb:
            (s2,), _ = e.remove_node(s[0])
            e.connect(s2, (new, p))
        else:
            box = e.add(ANTIPODE)
            e.connect(s, (box, 0))
            e.connect((box, 0), (new, p))
    for p, t in enumerate(outs):
        if absorb:
            _, (t2,) = e.remove_node(t[0])
            e.connect((new, p), t2)
        else:
            box = e.add(ANTIPODE)
            e.connect((new, p), (box, 0))
            e.connect((box, 0), t)
    return e.done()


def _cup_convert(g: Diagram, loc) -> Diagram:
    """Exchange a cup with an equal spider gadget.

    ``loc = (nid, target)``: target "green" turns a cup into a phaseless
    green 0->2 spider (or back), target "red" turns a cup into a phaseless
    red 0->2 spider with S on its second leg.
    """
    nid, target = loc
    node = g.node(nid)
    e = _Edit(g)
    if node.kind == "cup":
        _, (t0, t1) = e.remove_node(nid)
        sp = e.add(Node(target, 0, 2))
        e.connect((sp, 0), t0)
        if target == "green":
            e.connect((sp, 1), t1)
        elif target == "red":
            box = e.add(ANTIPODE)
            e.connect((sp, 1), (box, 0))
            e.connect((box, 0), t1)
        else:
            raise RewriteError(f"unknown cup target {target!r}")
        return e.done()
    if node.kind == "green" and (node.n_in, node.n_out) == (0, 2) and node.phase % g.d == 0 and target == "cup":
        _, (t0, t1) = e.remove_node(nid)
        cup = e.add(CUP)
        e.connect((cup, 0), t0)
        e.connect((cup, 1), t1)
        return e.done()
    raise RewriteError("cup_convert pattern not found")


def _cup_cap_snake(g: Diagram, loc) -> Diagram:
    """A cup leg entering a cap straightens into a plain wire."""
    c, k = loc
    if g.node(c).kind != "cup" or g.node(k).kind != "cap":
        raise RewriteError("cup_cap_snake needs a cup and a cap")
    links = _links(g, c, k)
    if not links:
        raise RewriteError("cup and cap are not connected")
    e = _Edit(g)
    _, outs = e.remove_node(c)
    ins, _ = e.remove_node(k)
    if len(links) == 2:  # closed loop
        e.scalar *= g.d
        return e.done()
    (w,) = links
    free_dst = outs[1 - w[0][1]]
    free_src = ins[1 - w[1][1]]
    e.connect(free_src, free_dst)
    return e.done()


RULES = {
    "spider_fuse": _fuse,
    "unfuse": _unfuse,
    "identity_remove": _identity_remove,
    "color_change": _color_change,
    "bialgebra": _bialgebra,
    "antipode_cancel": _antipode_cancel,
    "antipode_insert": _antipode_insert,
    "antipode_push": _antipode_push,
    "fourier_square": _fourier_square,
    "cup_convert": _cup_convert,
    "cup_cap_snake": _cup_cap_snake,
}


def rewrite(g: Diagram, rule: str, location) -> Diagram:
    """Apply ``rule`` at ``location``; raises RewriteError on a mismatch."""
    try:
        fn = RULES[rule]
    except KeyError:
        raise RewriteError(f"unknown rule {rule!r}") from None
    try:
        return fn(g, location)
    except (DiagramError, StopIteration, KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, RewriteError):
            raise
        raise RewriteError(f"{rule} does not match at {location!r}: {exc}") from None


def matches(g: Diagram, rule: str) -> list:
    """Locations where ``rule`` applies (unfuse and antipode_insert get one
    representative location per node/wire)."""
    out = []
    nodes = g.node_map
    pairs = {(w[0][0], w[1][0]) for w in g.wires if w[0][0] != BOUNDARY and w[1][0] != BOUNDARY}
    for loc in _candidates(g, rule, nodes, pairs):
        try:
            rewrite(g, rule, loc)
        except RewriteError:
            continue
        out.append(loc)
    return out


def _candidates(g, rule, nodes, pairs):
    if rule in ("spider_fuse", "bialgebra", "antipode_cancel", "fourier_square", "cup_cap_snake"):
        seen = set()
        for a, b in sorted(pairs):
            key = (a, b) if rule != "spider_fuse" else tuple(sorted((a, b)))
            if a != b and key not in seen:
                seen.add(key)
                yield key
                if rule == "cup_cap_snake" and (b, a) not in seen:
                    seen.add((b, a))
                    yield (b, a)
    elif rule in ("identity_remove", "color_change", "antipode_push"):
        yield from sorted(nodes)
    elif rule == "unfuse":
        for nid, n in sorted(nodes.items()):
            if n.kind in SPIDERS:
                yield (nid, tuple(range(n.n_in // 2)), tuple(range(n.n_out // 2)), True)
    elif rule == "antipode_insert":
        yield from g.wires
    elif rule == "cup_convert":
        for nid, n in sorted(nodes.items()):
            if n.kind == "cup":
                yield (nid, "green")
                yield (nid, "red")
            elif n.kind == "green":
                yield (nid, "cup")


def fuse_all(g: Diagram, max_steps: int = 1000) -> Diagram:
    """Greedy spider fusion until no same-colour neighbours remain."""
    for _ in range(max_steps):
        locs = matches(g, "spider_fuse")
        if not locs:
            return g
        g = rewrite(g, "spider_fuse", locs[0])
    return g


# ---------------------------------------------------------------- the CX diagrams

def cx_diagrams(d: int) -> dict:
    """Four diagrams for CX (control first).

    1. green copy of the control, one leg red-merged with the target.
    2. red split of the target, one leg through S into a green merge with
       the control.
    3. red unit and red split making an entangled pair; one leg goes through
       S into a green merge with the control, the other into a red merge
       with the target.
    4. as 3, with S on the leg to the red merge instead.
    """
    c, t = (BOUNDARY, 0), (BOUNDARY, 1)
    out = {}

    b = DiagramBuilder(d, 2)
    g0, g1 = b.node_after(green(1, 2), [c])
    (r,) = b.node_after(red(2, 1), [g1, t])
    out[1] = b.finish([g0, r])

    b = DiagramBuilder(d, 2)
    r0, r1 = b.node_after(red(1, 2), [t])
    (s,) = b.node_after(ANTIPODE, [r0])
    (gm,) = b.node_after(green(2, 1), [c, s])
    out[2] = b.finish([gm, r1])

    for k in (3, 4):
        b = DiagramBuilder(d, 2)
        (u,) = b.node_after(red(0, 1), [])
        h0, h1 = b.node_after(red(1, 2), [u])
        if k == 3:
            (h0,) = b.node_after(ANTIPODE, [h0])
        else:
            (h1,) = b.node_after(ANTIPODE, [h1])
        (gm,) = b.node_after(green(2, 1), [c, h0])
        (rm,) = b.node_after(red(2, 1), [h1, t])
        out[k] = b.finish([gm, rm])
    return out


def _find(g: Diagram, pred) -> int:
    for nid, n in g.nodes:
        if pred(n):
            return nid
    raise RewriteError("node not found")


def _is(kind, n_in, n_out):
    return lambda n: n.kind == kind and (n.n_in, n.n_out) == (n_in, n_out)


def cx_rewrite_chain(d: int) -> list[tuple[str, Diagram]]:
    """Rewrite diagram 1 into 2, then 3, then 4 (see :func:`cx_diagrams`).

    Uses spider fusion and unfusion, swapping a green pair for a cup and a
    cup for a red pair with an antipode, and moving antipodes across a red
    pair.  Returns (step name, diagram) pairs starting from diagram 1.
    """
    g = cx_diagrams(d)[1]
    steps = [("diagram 1", g)]

    def step(name, rule, loc):
        nonlocal g
        g = rewrite(g, rule, loc)
        steps.append((name, g))

    # a green copy is a green merge of the control with one leg of a green pair
    step("unfuse green copy", "unfuse", (_find(g, _is("green", 1, 2)), (), (1,), True))
    step("green pair to cup", "cup_convert", (_find(g, _is("green", 0, 2)), "cup"))
    step("cup to red pair with antipode", "cup_convert", (_find(g, lambda n: n.kind == "cup"), "red"))
    step("diagram 2", "spider_fuse", (_find(g, _is("red", 0, 2)), _find(g, _is("red", 2, 1))))
    step("unfuse red split", "unfuse", (_find(g, _is("red", 1, 2)), (0,), (1,), False))
    step("diagram 3", "unfuse", (_find(g, _is("red", 0, 2)), (), (0, 1), False))
    step("fuse red pair", "spider_fuse", (_find(g, _is("red", 0, 1)), _find(g, _is("red", 1, 2))))
    step("pull antipodes out of red pair", "antipode_push", _find(g, _is("red", 0, 2)))
    for nid, n in g.nodes:
        if n.kind == "antipode":
            nxt = g.wire_from((nid, 0))[1][0]
            if nxt != BOUNDARY and g.node(nxt).kind == "antipode":
                step("cancel double antipode", "antipode_cancel", (nid, nxt))
                break
    step("diagram 4", "unfuse", (_find(g, _is("red", 0, 2)), (), (0, 1), False))
    return steps


def same_shape(a: Diagram, b: Diagram) -> bool:
    """Cheap structural comparison: boundary arity and multiset of node types."""
    key = lambda g: sorted((n.kind, n.n_in, n.n_out, n.phase % g.d, n.dagger) for _, n in g.nodes)
    return (a.n_in, a.n_out) == (b.n_in, b.n_out) and key(a) == key(b)


# ---------------------------------------------------------------- random diagrams

def random_diagram(d: int, rng: np.random.Generator, max_nodes: int = 8, max_boundary: int = 4,
                   plant: float = 0.25) -> Diagram:
    """A random well-formed diagram with at most ``max_nodes`` nodes.

    With probability ``plant`` the first two nodes form a bialgebra pattern
    (phaseless 2->1 spider wired into a phaseless 1->2 of the other colour),
    which uniform wiring would almost never produce.
    """
    while True:
        n_nodes = int(rng.integers(1, max_nodes + 1))
        nodes = []
        planted = n_nodes >= 2 and rng.random() < plant
        if planted:
            first = str(rng.choice(SPIDERS))
            nodes = [Node(first, 2, 1), Node("red" if first == "green" else "green", 1, 2)]
        for _ in range(n_nodes - len(nodes)):
            kind = rng.choice(["green", "green", "red", "red", "fourier", "antipode", "cup", "cap"])
            if kind in SPIDERS:
                nodes.append(Node(kind, int(rng.integers(0, 3)), int(rng.integers(0, 3)), int(rng.integers(0, d))))
            elif kind == "fourier":
                nodes.append(Node("fourier", dagger=bool(rng.integers(0, 2))))
            else:
                nodes.append({"antipode": ANTIPODE, "cup": CUP, "cap": CAP}[kind])
        outs = sum(n.n_out for n in nodes)
        ins = sum(n.n_in for n in nodes)
        n_in = int(rng.integers(0, 3))
        n_out = n_in + outs - ins
        if n_out < 0:
            n_in -= n_out
            n_out = 0
        if n_in + n_out > max_boundary:
            continue
        srcs = [(BOUNDARY, k) for k in range(n_in)] + [(i, p) for i, n in enumerate(nodes) for p in range(n.n_out)]
        dsts = [(BOUNDARY, k) for k in range(n_out)] + [(i, p) for i, n in enumerate(nodes) for p in range(n.n_in)]
        fixed = []
        if planted:
            fixed = [((0, 0), (1, 0))]
            srcs.remove((0, 0))
            dsts.remove((1, 0))
        perm = rng.permutation(len(dsts))
        wires = tuple(fixed) + tuple((s, dsts[j]) for s, j in zip(srcs, perm))
        return Diagram(d, n_in, n_out, tuple(enumerate(nodes)), wires)


def random_rewrite(g: Diagram, rng: np.random.Generator) -> tuple[str, object, Diagram] | None:
    """Apply one randomly chosen applicable rewrite, or None if nothing applies."""
    options = {rule: locs for rule in RULES if (locs := matches(g, rule))}
    if not options:
        return None
    # pick the rule first so that rules with many sites do not crowd out the rest
    rule = sorted(options)[int(rng.integers(len(options)))]
    loc = options[rule][int(rng.integers(len(options[rule])))]
    if rule == "unfuse":
        node = g.node(loc[0])
        mi = tuple(p for p in range(node.n_in) if rng.integers(0, 2))
        mo = tuple(p for p in range(node.n_out) if rng.integers(0, 2))
        loc = (loc[0], mi, mo, bool(rng.integers(0, 2)))
    return rule, loc, rewrite(g, rule, loc)


# ---------------------------------------------------------------- surgery scripts

def from_surgery(script: dict, d: int | None = None) -> Diagram:
    """The dictionary diagram of a surgery script in the n = 0 fragment.

    smooth ops are green spiders, rough ops red spiders, rotation is H,
    antipode is S, a logical X^p is red(p) and a logical Z^p is green(-p).
    """
    d = int(script.get("d", 2) if d is None else d)
    n_in = len(script.get("inputs", []))
    b = DiagramBuilder(d, n_in)
    wires = inputs(n_in)
    colour = {"smooth": "green", "rough": "red"}
    for step in script.get("steps", []):
        op = step["op"]
        if step.get("n", 0) != 0:
            raise DiagramError("only the n = 0 branches have a dictionary diagram")
        if op == "unit":
            wires += b.node_after(Node(colour[step["kind"]], 0, 1), [])
        elif op == "split":
            w = step["wire"]
            wires[w:w + 1] = b.node_after(Node(colour[step["kind"]], 1, 2), [wires[w]])
        elif op == "merge":
            i, j = step["wires"]
            (o,) = b.node_after(Node(colour[step["kind"]], 2, 1), [wires[i], wires[j]])
            wires[i] = o
            del wires[j]
        elif op == "counit":
            w = step["wire"]
            b.node_after(Node(colour[step["kind"]], 1, 0), [wires[w]])
            del wires[w]
        elif op == "fourier":
            (wires[step["wire"]],) = b.node_after(FOURIER, [wires[step["wire"]]])
        elif op == "antipode":
            (wires[step["wire"]],) = b.node_after(ANTIPODE, [wires[step["wire"]]])
        elif op == "gate":
            p = int(step.get("power", 1))
            node = red(1, 1, p) if step["kind"] == "X" else green(1, 1, -p)
            (wires[step["wire"]],) = b.node_after(node, [wires[step["wire"]]])
        else:
            raise DiagramError(f"step {op!r} has no dictionary diagram")
    return b.finish(wires)


# ---------------------------------------------------------------- files

def diagram_to_dict(g: Diagram) -> dict:
    return {
        "d": g.d, "inputs": g.n_in, "outputs": g.n_out,
        "scalar": [float(np.real(g.scalar)), float(np.imag(g.scalar))],
        "nodes": [{"id": i, "kind": n.kind, "in": n.n_in, "out": n.n_out, "phase": n.phase,
                   "dagger": n.dagger} for i, n in g.nodes],
        "wires": [[list(s), list(t)] for s, t in g.wires],
    }


def diagram_from_dict(data: dict) -> Diagram:
    """Parse the JSON form; boundary ports are written with node id -1."""
    try:
        nodes = tuple((int(n["id"]), Node(n["kind"], int(n.get("in", 1)), int(n.get("out", 1)),
                                         int(n.get("phase", 0)), bool(n.get("dagger", False))))
                      for n in data["nodes"])
        wires = tuple(((int(s[0]), int(s[1])), (int(t[0]), int(t[1]))) for s, t in data["wires"])
        sc = data.get("scalar", [1.0, 0.0])
        return Diagram(int(data["d"]), int(data["inputs"]), int(data["outputs"]), nodes, wires,
                       complex(sc[0], sc[1]))
    except (KeyError, TypeError, IndexError) as exc:
        raise DiagramError(f"malformed diagram file: {exc}") from None


def load_diagram(path: str | Path) -> Diagram:
    return diagram_from_dict(json.loads(Path(path).read_text()))


def save_diagram(g: Diagram, path: str | Path) -> None:
    Path(path).write_text(json.dumps(diagram_to_dict(g), indent=1, sort_keys=True) + "\n")
