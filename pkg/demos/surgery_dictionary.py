"""Extract the logical map of every dictionary operation at d = 2 and 3 and
compare it with the expected linear map and the ZX tensor."""

from qudit_surgery.checks import verify_dictionary

for d in (2, 3):
    rows = verify_dictionary(d)
    print(f"d={d}")
    for r in rows:
        print(f"  {r.name:14s} branches={r.branches:3d} surgery={r.surgery_ok!s:5s} zx={r.zx_ok!s:5s} "
              f"families={r.families_ok!s:5s} complete={r.complete!s:5s} leakage={r.leakage:.1e}")
    print(f"  {sum(r.ok for r in rows)}/{len(rows)} rows match")
