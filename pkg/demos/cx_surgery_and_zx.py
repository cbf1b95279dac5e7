"""CX by a smooth split followed by a rough merge, and the same gate as four
equal ZX diagrams joined by a chain of rewrites."""

import numpy as np

from qudit_surgery import zx
from qudit_surgery.checks import CX_SCRIPT
from qudit_surgery.groupalg import cx
from qudit_surgery.surgery import extract_logical_map

m = extract_logical_map(CX_SCRIPT, 2, 0)
scaled = m.matrix / m.matrix[0, 0]
print("surgery CX at d=2 (n = 0 branch, rescaled):")
print(np.round(scaled.real, 6))
print("equals CX:", np.allclose(scaled, cx(2)))

for d in (2, 3, 5):
    diags = zx.cx_diagrams(d)
    ok = [zx.tensors_equal(zx.evaluate(g).matrix, cx(d)) for g in diags.values()]
    print(f"\nd={d}: diagrams 1-4 evaluate to CX: {ok}")
    chain = zx.cx_rewrite_chain(d)
    ref = zx.evaluate(chain[0][1]).tensor
    for name, g in chain:
        same = zx.tensors_equal(zx.evaluate(g).tensor, ref, up_to_scalar=False)
        print(f"  {name:40s} nodes={len(g.nodes):2d} same tensor={same}")
