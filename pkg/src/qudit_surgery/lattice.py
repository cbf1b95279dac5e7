"""Patch geometry and the local operators that act on it.

A geometry is a set of oriented edges (one qudit each) together with
vertex and face *sites*.  Every site records its incident edges and a sign
per edge:

* vertex sign is +1 when the edge points away from the vertex;
* face sign is +1 when the face lies to the left of the edge, i.e. the edge
  runs counter-clockwise around the face in (x right, y up) coordinates.
  Drawn with rows increasing downwards this is the clockwise circulation.

Sites that carry no stabilizer (the free ends of the dangling edges on the
rough boundaries and the two half-planes beyond the smooth boundaries) are
kept with ``stabilized=False``; string operators need their signs.

Default patch (``build_patch``): grid vertices (x, y), 0 <= x <= cols,
0 <= y <= rows, horizontal edges pointing right, vertical edges pointing
up, plus one dangling vertical edge above each top vertex and below each
bottom vertex.
"""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Hashable, Iterable, Sequence

import numpy as np

from .groupalg import AlgebraElement, Basis, clock, qpow, shift

DEFAULT_BUDGET = 2 ** 24

EdgeKey = Hashable


class GeometryError(ValueError):
    pass


class BudgetError(GeometryError):
    pass


@dataclass(frozen=True)
class Site:
    kind: str  # "vertex" | "face"
    name: Hashable
    edges: tuple
    signs: tuple
    stabilized: bool = True

    def sign(self, edge: EdgeKey) -> int:
        return self.signs[self.edges.index(edge)]

    @property
    def weight(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class StringSpec:
    """An X-type (face to face) or Z-type (vertex to vertex) string."""

    kind: str  # "X" | "Z"
    path: tuple
    crossings: tuple  # ((edge, sign), ...)

    @property
    def endpoints(self) -> tuple:
        return self.path[0], self.path[-1]

    @property
    def closed(self) -> bool:
        return self.path[0] == self.path[-1]

    @property
    def edges(self) -> tuple:
        return tuple(e for e, _ in self.crossings)

    def reversed(self) -> "StringSpec":
        # the crossing sign is taken from the site the string comes from,
        # and an edge has opposite signs in its two sites
        return StringSpec(self.kind, self.path[::-1], tuple((e, -s) for e, s in self.crossings[::-1]))

    def __add__(self, other: "StringSpec") -> "StringSpec":
        """Concatenation: ``self`` then ``other``."""
        if self.kind != other.kind or self.path[-1] != other.path[0]:
            raise GeometryError("strings do not concatenate")
        return StringSpec(self.kind, self.path + other.path[1:], self.crossings + other.crossings)


@dataclass(frozen=True, eq=False)
class PatchGeometry:
    d: int
    edges: tuple
    vertices: tuple  # of Site
    faces: tuple  # of Site
    boundary: dict = field(default_factory=dict)
    x_path: tuple = ()
    z_path: tuple = ()
    rows: int | None = None
    cols: int | None = None
    origin: tuple = (0, 0)
    rotations: int = 0

    def __post_init__(self):
        index = {e: i for i, e in enumerate(self.edges)}
        if len(index) != len(self.edges):
            raise GeometryError("duplicate edge keys")
        object.__setattr__(self, "_edge_index", index)
        sites = {}
        for s in self.vertices + self.faces:
            key = (s.kind, s.name)
            if key in sites:
                raise GeometryError(f"duplicate site {key}")
            for e in s.edges:
                if e not in index:
                    raise GeometryError(f"site {s.name} references unknown edge {e}")
            sites[key] = s
        object.__setattr__(self, "_sites", sites)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def edge_index(self, e: EdgeKey) -> int:
        return self._edge_index[e]

    def site(self, kind: str, name: Hashable) -> Site:
        try:
            return self._sites[(kind, name)]
        except KeyError:
            raise GeometryError(f"no {kind} named {name!r}") from None

    def vertex(self, name) -> Site:
        return self.site("vertex", name)

    def face(self, name) -> Site:
        return self.site("face", name)

    def stabilizers(self) -> list[Site]:
        return [s for s in self.vertices + self.faces if s.stabilized]

    @property
    def x_logical(self) -> StringSpec:
        return make_string(self, "X", self.x_path)

    @property
    def z_logical(self) -> StringSpec:
        return make_string(self, "Z", self.z_path)

    def with_sites(self, vertices=None, faces=None) -> "PatchGeometry":
        return replace(self, vertices=tuple(vertices if vertices is not None else self.vertices),
                       faces=tuple(faces if faces is not None else self.faces))

    def __repr__(self) -> str:
        shape = f"rows={self.rows}, cols={self.cols}, " if self.rows is not None else ""
        return (f"PatchGeometry(d={self.d}, {shape}edges={self.n_edges}, "
                f"stabilizers={len(self.stabilizers())}, rotations={self.rotations})")


# ---------------------------------------------------------------- building

def _add(p, o):
    return (p[0] + o[0], p[1] + o[1])


def check_budget(d: int, n_edges: int, budget: int = DEFAULT_BUDGET) -> None:
    if d ** n_edges > budget:
        raise BudgetError(f"state vector of {d}^{n_edges} amplitudes exceeds budget {budget}")


def build_patch(d: int, rows: int, cols: int, origin: tuple = (0, 0),
                budget: int = DEFAULT_BUDGET) -> PatchGeometry:
    """Default rectangular patch: rough top/bottom, smooth left/right."""
    if d < 2:
        raise GeometryError("d must be >= 2")
    if rows < 0 or cols < 1:
        raise GeometryError(f"need rows >= 0 and cols >= 1, got rows={rows}, cols={cols}")
    ox, oy = origin
    edges = []
    for y in range(rows + 1):
        for x in range(cols):
            edges.append(((x, y), (x + 1, y)))
    for x in range(cols + 1):
        for y in range(-1, rows + 1):
            edges.append(((x, y), (x, y + 1)))
    edges = sorted((_add(t, origin), _add(h, origin)) for t, h in edges)
    check_budget(d, len(edges), budget)

    def cell_name(cx, cy):
        if cx < 0:
            return ("L",)
        if cx >= cols:
            return ("R",)
        return ("cell", cx + ox, cy + oy)

    vstar: dict = {}
    fbound: dict = {}
    for e in edges:
        (tx, ty), (hx, hy) = e
        vstar.setdefault((tx, ty), []).append((e, +1))
        vstar.setdefault((hx, hy), []).append((e, -1))
        rx, ry = tx - ox, ty - oy
        if hy == ty:  # horizontal: face above is on the left
            left, right = cell_name(rx, ry), cell_name(rx, ry - 1)
        else:  # vertical, pointing up: face to the west is on the left
            left, right = cell_name(rx - 1, ry), cell_name(rx, ry)
        fbound.setdefault(left, []).append((e, +1))
        fbound.setdefault(right, []).append((e, -1))

    vertices = []
    for name in sorted(vstar):
        inc = vstar[name]
        ry = name[1] - oy
        stab = 0 <= ry <= rows and len(inc) > 1
        vertices.append(Site("vertex", name, tuple(e for e, _ in inc), tuple(s for _, s in inc), stab))
    faces = []
    for name in sorted(fbound, key=repr):
        inc = fbound[name]
        stab = name[0] == "cell" and len(inc) > 1
        faces.append(Site("face", name, tuple(e for e, _ in inc), tuple(s for _, s in inc), stab))

    x_path = (("L",),) + tuple(("cell", cx + ox, oy) for cx in range(cols)) + (("R",),)
    z_path = tuple((ox, y + oy) for y in range(rows + 1, -2, -1))
    return PatchGeometry(d, tuple(edges), tuple(vertices), tuple(faces),
                         {"top": "rough", "bottom": "rough", "left": "smooth", "right": "smooth"},
                         x_path, z_path, rows, cols, tuple(origin))


def rotate(g: PatchGeometry) -> PatchGeometry:
    """Exchange vertices and faces, as induced by a transversal Fourier transform.

    The new vertices are the old faces (vertex sign = old face sign) and the
    new faces are the old vertices (face sign = minus old vertex sign).  The
    picture is a quarter turn counter-clockwise: the old Z path becomes the
    new X path and the old X path, reversed, becomes the new Z path.
    """
    verts = [Site("vertex", f.name, f.edges, f.signs, f.stabilized) for f in g.faces]
    faces = [Site("face", v.name, v.edges, tuple(-s for s in v.signs), v.stabilized) for v in g.vertices]
    swap = {"rough": "smooth", "smooth": "rough"}
    turn = {"top": "left", "left": "bottom", "bottom": "right", "right": "top"}
    boundary = {turn[k]: swap[v] for k, v in g.boundary.items()}
    return PatchGeometry(g.d, g.edges, tuple(verts), tuple(faces), boundary,
                         tuple(g.z_path), tuple(g.x_path[::-1]), g.rows, g.cols, g.origin,
                         g.rotations + 1)


def translate(g: PatchGeometry, dx: int, dy: int) -> PatchGeometry:
    """Shift a default-built patch (all coordinates) by (dx, dy)."""
    if g.rows is None or g.rotations % 2:
        raise GeometryError("only unrotated default patches can be translated")
    out = build_patch(g.d, g.rows, g.cols, _add(g.origin, (dx, dy)), budget=float("inf"))
    if g.rotations:
        out = rotate(rotate(out))
    return out


def edge_shift_map(g: PatchGeometry, dx: int, dy: int) -> dict:
    return {e: (_add(e[0], (dx, dy)), _add(e[1], (dx, dy))) for e in g.edges}


# ---------------------------------------------------------------- strings

def _shared_edges(g: PatchGeometry, kind: str, a, b) -> list:
    sk = "face" if kind == "X" else "vertex"
    sa, sb = g.site(sk, a), g.site(sk, b)
    return [e for e in sa.edges if e in sb.edges]


def make_string(g: PatchGeometry, kind: str, path: Sequence, edges: Sequence | None = None) -> StringSpec:
    """String through consecutive sites of ``path``.

    X strings pass between faces, Z strings between vertices.  The sign of
    each crossing is the sign of the crossed edge in the site the string is
    leaving, so a label-i string reports i at its start and -i at its end.
    """
    if kind not in ("X", "Z"):
        raise GeometryError(f"unknown string kind {kind!r}")
    path = tuple(path)
    if len(path) < 2:
        raise GeometryError("a string needs at least two sites")
    sk = "face" if kind == "X" else "vertex"
    crossings = []
    for k, (a, b) in enumerate(zip(path, path[1:])):
        if edges is not None:
            e = edges[k]
            if e not in _shared_edges(g, kind, a, b):
                raise GeometryError(f"edge {e} does not join {a} and {b}")
        else:
            shared = _shared_edges(g, kind, a, b)
            if len(shared) != 1:
                raise GeometryError(f"sites {a} and {b} share {len(shared)} edges; pass edges explicitly")
            e = shared[0]
        crossings.append((e, g.site(sk, a).sign(e)))
    return StringSpec(kind, path, tuple(crossings))


def _site_graph(g: PatchGeometry, kind: str) -> dict:
    sites = g.faces if kind == "X" else g.vertices
    by_edge: dict = {}
    for s in sites:
        for e in s.edges:
            by_edge.setdefault(e, []).append(s.name)
    adj: dict = {s.name: [] for s in sites}
    for e in g.edges:
        names = by_edge.get(e, [])
        for a, b in itertools.permutations(names, 2):
            adj[a].append((b, e))
    return adj


def shortest_string(g: PatchGeometry, kind: str, start, targets: Iterable) -> StringSpec:
    """Breadth-first shortest string from ``start`` to the nearest target site.

    Ties are broken by the order of ``targets`` first, then by edge order.
    """
    targets = list(targets)
    adj = _site_graph(g, kind)
    prev = {start: None}
    dist = {start: 0}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v, e in sorted(adj[u], key=lambda t: g.edge_index(t[1])):
            if v not in dist:
                dist[v] = dist[u] + 1
                prev[v] = (u, e)
                queue.append(v)
    reach = [t for t in targets if t in dist]
    if not reach:
        raise GeometryError(f"no path from {start!r} to any of {targets!r}")
    best = min(reach, key=lambda t: (dist[t], targets.index(t)))
    path, edges = [best], []
    while prev[path[-1]] is not None:
        u, e = prev[path[-1]]
        path.append(u)
        edges.append(e)
    return make_string(g, kind, path[::-1], edges[::-1])


# ---------------------------------------------------------------- operators

@dataclass(frozen=True, eq=False)
class LocalOperator:
    """Operator on a few edges, identity elsewhere.

    Exactly one representation is set: ``dense`` with axes
    (out_1..out_k, in_1..in_k) in support order, ``diagonal`` of shape
    (d,)*k, or ``factors``, one d x d matrix per support edge.
    """

    d: int
    support: tuple
    dense: np.ndarray | None = None
    diagonal: np.ndarray | None = None
    factors: tuple | None = None
    label: str = ""

    def __post_init__(self):
        if len(set(self.support)) != len(self.support):
            raise GeometryError("repeated edge in operator support")
        if sum(x is not None for x in (self.dense, self.diagonal, self.factors)) != 1:
            raise GeometryError("exactly one operator representation must be given")

    @property
    def k(self) -> int:
        return len(self.support)

    def act(self, tensor: np.ndarray, axes: Sequence[int]) -> np.ndarray:
        """Apply to ``tensor`` whose axes ``axes`` correspond to the support."""
        axes = list(axes)
        if self.factors is not None:
            out = tensor
            for m, ax in zip(self.factors, axes):
                out = np.moveaxis(np.tensordot(m, out, axes=([1], [ax])), 0, ax)
            return out
        if self.diagonal is not None:
            shape = [1] * tensor.ndim
            for ax, n in zip(axes, self.diagonal.shape):
                shape[ax] = n
            order = np.argsort(axes)
            diag = np.transpose(self.diagonal, order).reshape(shape)
            return tensor * diag
        k = self.k
        out = np.tensordot(self.dense, tensor, axes=(list(range(k, 2 * k)), axes))
        return np.moveaxis(out, list(range(k)), axes)

    def matrix(self, support: Sequence | None = None) -> np.ndarray:
        """Dense matrix on ``support`` (default: own support).

        Kronecker convention: the first support edge is the most significant
        index.
        """
        support = tuple(self.support if support is None else support)
        missing = set(self.support) - set(support)
        if missing:
            raise GeometryError(f"support {support} misses edges {missing}")
        n = len(support)
        eye = np.eye(self.d ** n, dtype=complex).reshape((self.d,) * (2 * n))
        out = self.act(eye, [support.index(e) for e in self.support])
        return out.reshape(self.d ** n, self.d ** n)

    def dagger(self) -> "LocalOperator":
        if self.factors is not None:
            return replace(self, factors=tuple(m.conj().T for m in self.factors), label=self.label + "^dag")
        if self.diagonal is not None:
            return replace(self, diagonal=self.diagonal.conj(), label=self.label + "^dag")
        k = self.k
        perm = list(range(k, 2 * k)) + list(range(k))
        return replace(self, dense=np.transpose(self.dense, perm).conj(), label=self.label + "^dag")

    def then(self, other: "LocalOperator") -> "LocalOperator":
        """``other`` after ``self`` as a dense operator on the union support."""
        support = tuple(dict.fromkeys(self.support + other.support))
        m = other.matrix(support) @ self.matrix(support)
        return dense_operator(self.d, support, m, f"{other.label}*{self.label}")


def dense_operator(d: int, support: Sequence, matrix: np.ndarray, label: str = "") -> LocalOperator:
    k = len(support)
    return LocalOperator(d, tuple(support), dense=np.asarray(matrix, dtype=complex).reshape((d,) * (2 * k)),
                         label=label)


def identity_operator(d: int, support: Sequence = ()) -> LocalOperator:
    return LocalOperator(d, tuple(support), factors=tuple(np.eye(d, dtype=complex) for _ in support),
                         label="I")


def _signed_sum_table(d: int, signs: Sequence[int]) -> np.ndarray:
    """Array of shape (d,)*k holding sum_e signs[e] * x_e mod d."""
    k = len(signs)
    grids = np.meshgrid(*([np.arange(d)] * k), indexing="ij") if k else []
    total = np.zeros((d,) * k, dtype=int)
    for s, gx in zip(signs, grids):
        total = total + s * gx
    return total % d


def site_action(g: PatchGeometry, site: Site, element: AlgebraElement) -> LocalOperator:
    """Action of a CZ_d element at a vertex or of a C(Z_d) element at a face."""
    d = g.d
    if element.d != d:
        raise GeometryError("element dimension does not match the lattice")
    if site.kind == "vertex":
        if element.basis is not Basis.GROUP:
            raise GeometryError("vertices are acted on by group-basis elements")
        k = site.weight
        m = np.zeros((d ** k, d ** k), dtype=complex)
        for l, a in enumerate(element.amps):
            if a == 0:
                continue
            term = np.ones((1, 1), dtype=complex)
            for s in site.signs:
                term = np.kron(term, shift(d, s * l))
            m += a * term
        return dense_operator(d, site.edges, m, f"A[{site.name}]")
    if element.basis is not Basis.FUNCTION:
        raise GeometryError("faces are acted on by function-basis elements")
    table = _signed_sum_table(d, site.signs)
    return LocalOperator(d, site.edges, diagonal=element.amps[table], label=f"B[{site.name}]")


def projector(g: PatchGeometry, site: Site, outcome: int = 0) -> LocalOperator:
    """P_v(j) = (1/d) sum_k q^{jk} |k> |> v  or  P_p(j) = |delta_j> |> p."""
    d = g.d
    if site.kind == "vertex":
        el = AlgebraElement(d, Basis.GROUP, qpow(d, outcome * np.arange(d)) / d)
    else:
        el = AlgebraElement.basis_vector(d, outcome, Basis.FUNCTION)
    op = site_action(g, site, el)
    return replace(op, label=f"P[{site.name}]({outcome % d})")


def string_operator(g: PatchGeometry, s: StringSpec, label: int, basis: str = "quasiparticle") -> LocalOperator:
    """X-type string with label i, or Z-type string.

    Z-type strings take ``basis="delta"`` (label j gives the diagonal
    delta_j of the signed sum over crossed edges) or ``basis="quasiparticle"``
    (label m gives Z^{+-m} on every crossed edge).
    """
    d = g.d
    for e, _ in s.crossings:
        g.edge_index(e)
    if s.kind == "X":
        return LocalOperator(d, s.edges, factors=tuple(shift(d, sg * label) for _, sg in s.crossings),
                             label=f"xF^{label % d}")
    if basis == "delta":
        table = _signed_sum_table(d, [sg for _, sg in s.crossings])
        return LocalOperator(d, s.edges, diagonal=(table == label % d).astype(complex),
                             label=f"zF^d{label % d}")
    if basis != "quasiparticle":
        raise GeometryError(f"unknown Z string basis {basis!r}")
    return LocalOperator(d, s.edges, factors=tuple(clock(d, sg * label) for _, sg in s.crossings),
                         label=f"zF^q{label % d}")


# ---------------------------------------------------------------- validation

@dataclass
class ValidationReport:
    checks: list = field(default_factory=list)  # (name, passed, detail)
    vacuum_dim: int | None = None

    @property
    def ok(self) -> bool:
        return all(p for _, p, _ in self.checks)

    def add(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append((name, bool(passed), detail))

    def failures(self) -> list:
        return [(n, det) for n, p, det in self.checks if not p]

    def raise_for_failure(self) -> None:
        if not self.ok:
            raise GeometryError("; ".join(f"{n}: {det}" for n, det in self.failures()))


def _commutes(a: LocalOperator, b: LocalOperator, rng, tol: float, dense_limit: int = 256) -> bool:
    support = tuple(dict.fromkeys(a.support + b.support))
    d, n = a.d, len(support)
    if d ** n <= dense_limit:
        ma, mb = a.matrix(support), b.matrix(support)
        return bool(np.abs(ma @ mb - mb @ ma).max() <= tol)
    # matrix-free: compare on a batch of random vectors
    vecs = rng.normal(size=(d,) * n + (4,)) + 1j * rng.normal(size=(d,) * n + (4,))
    axes_a = [support.index(e) for e in a.support]
    axes_b = [support.index(e) for e in b.support]
    ab = a.act(b.act(vecs, axes_b), axes_a)
    ba = b.act(a.act(vecs, axes_a), axes_b)
    return bool(np.abs(ab - ba).max() <= tol * np.abs(vecs).max() * 10)


def vacuum_dimension(g: PatchGeometry) -> int:
    """Rank of prod A(v) prod B(p).

    All face projectors are diagonal, so the rank is computed on the span of
    configurations satisfying every face constraint (vertex projectors
    preserve it); there the product of vertex projectors is a real matrix
    whose rank is read off its trace, cross-checked by SVD on small blocks.
    """
    d = g.d
    E = g.n_edges
    check_budget(d, E)
    configs = np.indices((d,) * E).reshape(E, -1).T if E else np.zeros((1, 0), dtype=int)
    keep = np.ones(len(configs), dtype=bool)
    for s in g.stabilizers():
        if s.kind == "face":
            idx = [g.edge_index(e) for e in s.edges]
            keep &= (configs[:, idx] @ np.array(s.signs)) % d == 0
    sub = configs[keep]
    n = len(sub)
    if n == 0:
        return 0
    weights = d ** np.arange(E)  # little-endian, only used as a lookup key
    lookup = np.full(d ** E, -1, dtype=np.int64)
    lookup[sub @ weights] = np.arange(n)
    m = np.eye(n)
    for s in g.stabilizers():
        if s.kind != "vertex":
            continue
        delta = np.zeros(E, dtype=int)
        for e, sg in zip(s.edges, s.signs):
            delta[g.edge_index(e)] += sg
        acc = np.zeros_like(m)
        for l in range(d):
            moved = (sub + l * delta) % d
            perm = lookup[moved @ weights]
            acc[perm] += m
        m = acc / d
    # commuting projectors multiply to a projector, whose rank is its trace
    rank = int(round(np.trace(m)))
    if n <= 600 and np.linalg.matrix_rank(m, tol=1e-8) != rank:
        raise GeometryError("stabilizer product is not a projector")
    return rank


def validate_patch(g: PatchGeometry, tol: float = 1e-12, seed: int = 0) -> ValidationReport:
    """Run the geometry checks and return a report (never raises on failure)."""
    rng = np.random.default_rng(seed)
    rep = ValidationReport()
    d = g.d
    stabs = g.stabilizers()

    single = [s.name for s in stabs if s.weight < 2]
    rep.add("no single-edge stabilizers", not single, f"sites {single}" if single else "")
    edge_use: dict = {}
    for s in g.vertices + g.faces:
        for e in s.edges:
            edge_use.setdefault((s.kind, e), 0)
            edge_use[(s.kind, e)] += 1
    over = [k for k, c in edge_use.items() if c > 2]
    rep.add("each edge in at most two stars/boundaries", not over, f"{over}" if over else "")

    bad = []
    for s in stabs:
        m = projector(g, s, 0).matrix()
        if np.abs(m @ m - m).max() > tol:
            bad.append(s.name)
    rep.add("projectors idempotent", not bad, f"sites {bad}" if bad else "")

    bad = []
    ops = {(s.kind, s.name): projector(g, s, 0) for s in stabs}
    for (ka, a), (kb, b) in itertools.combinations(ops, 2):
        pa, pb = ops[(ka, a)], ops[(kb, b)]
        if not set(pa.support) & set(pb.support):
            continue
        if not _commutes(pa, pb, rng, tol):
            bad.append((a, b))
    rep.add("projectors commute", not bad, f"pairs {bad}" if bad else "")

    bad = []
    try:
        logicals = [string_operator(g, g.x_logical, 1), string_operator(g, g.z_logical, 1)]
    except GeometryError as exc:
        logicals = []
        rep.add("logical strings defined", False, str(exc))
    for lop in logicals:
        for key, p in ops.items():
            if set(p.support) & set(lop.support) and not _commutes(lop, p, rng, 1e-9):
                bad.append((lop.label, key[1]))
    rep.add("logical strings commute with stabilizers", not bad, f"{bad}" if bad else "")

    try:
        dim = vacuum_dimension(g)
    except GeometryError as exc:  # includes BudgetError
        rep.add("vacuum dimension", False, str(exc))
    else:
        rep.vacuum_dim = dim
        rep.add("vacuum dimension", dim == d, f"rank={dim}, expected {d}")
    return rep


# ---------------------------------------------------------------- files

def _tuplify(x):
    if isinstance(x, list):
        return tuple(_tuplify(v) for v in x)
    return x


def _listify(x):
    if isinstance(x, tuple):
        return [_listify(v) for v in x]
    return x


def patch_from_dict(data: dict, budget: int = DEFAULT_BUDGET) -> PatchGeometry:
    """Build from ``{"d", "rows", "cols"}`` or an explicit incidence listing."""
    d = int(data["d"])
    if "edges" not in data:
        origin = tuple(data.get("origin", (0, 0)))
        return build_patch(d, int(data["rows"]), int(data["cols"]), origin, budget)
    edges = tuple(_tuplify(e) for e in data["edges"])
    check_budget(d, len(edges), budget)

    def sites(kind):
        out = []
        for s in data.get("vertices" if kind == "vertex" else "faces", []):
            out.append(Site(kind, _tuplify(s["name"]), tuple(_tuplify(e) for e in s["edges"]),
                            tuple(int(x) for x in s["signs"]), bool(s.get("stabilized", True))))
        return tuple(out)

    return PatchGeometry(d, edges, sites("vertex"), sites("face"), dict(data.get("boundary", {})),
                         tuple(_tuplify(p) for p in data.get("x_path", ())),
                         tuple(_tuplify(p) for p in data.get("z_path", ())))


def patch_to_dict(g: PatchGeometry) -> dict:
    def site(s):
        return {"name": _listify(s.name), "edges": [_listify(e) for e in s.edges],
                "signs": list(s.signs), "stabilized": s.stabilized}
    return {"d": g.d, "edges": [_listify(e) for e in g.edges],
            "vertices": [site(s) for s in g.vertices], "faces": [site(s) for s in g.faces],
            "boundary": dict(g.boundary), "x_path": [_listify(p) for p in g.x_path],
            "z_path": [_listify(p) for p in g.z_path]}


def load_patch(path: str | Path, budget: int = DEFAULT_BUDGET) -> PatchGeometry:
    with open(path) as fh:
        return patch_from_dict(json.load(fh), budget)
