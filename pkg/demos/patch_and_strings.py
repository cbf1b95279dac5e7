"""Build a minimal patch, check its stabilizers, prepare the two logical bases
and watch an open X string leave a pair of opposite charges."""

import numpy as np

from qudit_surgery.lattice import build_patch, make_string, string_operator, validate_patch
from qudit_surgery.sim import apply, measure_site, overlap
from qudit_surgery.surgery import logical_basis

d = 3
g = build_patch(d, 1, 1)
rep = validate_patch(g)
print(f"patch d={d}: {g.n_edges} edges, {len(g.stabilizers())} stabilizers, vacuum rank {rep.vacuum_dim}")
for name, ok, detail in rep.checks:
    print(f"  {name:45s} {'pass' if ok else 'FAIL'} {detail}")

basis = logical_basis(g)
print("\n<k|delta_j> on the logical space (rows j, columns k):")
table = np.array([[overlap(k, f) for k in basis.states] for f in basis.fourier_states])
print(np.round(table * np.sqrt(d), 6))

s = make_string(g, "X", [("cell", 0, -1), ("cell", 0, 0)])
excited = apply(basis.states[0], string_operator(g, s, 1))
for end in s.path:
    probs = [round(b.probability, 6) for b in measure_site(excited, g, g.face(end))]
    print(f"charge distribution at face {end}: {probs}")
