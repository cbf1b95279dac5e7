"""Command-line entry point: ``qudit-surgery <command> [flags]``.

Commands
  patch-validate   validate a default or file-described patch
  map-extract      run a surgery script and print its Kraus operators
  dict-verify      check the nine dictionary rows against ZX tensors
  zx eval|rewrite|equal|cx
                   evaluate, rewrite or compare diagram files; check the CX
                   diagrams and their rewrite chain

Every flag can also be set through an environment variable named
``QSURG_<FLAG>`` (for example ``QSURG_D=3`` or ``QSURG_TOL=1e-8``); explicit
flags win.  The exit code is 0 exactly when every check in the run passes.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import checks, lattice, surgery, zx

ENV_PREFIX = "QSURG_"

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _env(name: str, default, cast=str):
    raw = os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"))
    return default if raw is None else cast(raw)


def _num(x: float) -> str:
    s = f"{x:.12g}"
    return "0" if s in ("-0", "0") else s


def _matrix_csv(m: np.ndarray, prefix: list) -> list[str]:
    rows = []
    for (r, c), v in np.ndenumerate(m):
        rows.append(",".join([*map(str, prefix), str(r), str(c), _num(v.real), _num(v.imag)]))
    return rows


def _table(fmt: str, header: list, rows: list) -> str:
    if fmt == "csv":
        return "\n".join([",".join(header)] + [",".join(map(str, r)) for r in rows]) + "\n"
    out = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    out += ["| " + " | ".join(map(str, r)) + " |" for r in rows]
    return "\n".join(out) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands

def cmd_patch_validate(a) -> int:
    if a.patch_file:
        g = lattice.load_patch(a.patch_file, budget=a.budget)
    else:
        g = lattice.build_patch(a.d, a.rows, a.cols, budget=a.budget)
    rep = lattice.validate_patch(g, tol=a.tol, seed=a.seed or 0)
    rows = [(name, "pass" if ok else "FAIL", det) for name, ok, det in rep.checks]
    text = _table(a.format, ["check", "result", "detail"], rows)
    verdict = "all checks pass" if rep.ok else f"{len(rep.failures())} check(s) failed"
    text += f"rank={rep.vacuum_dim}, {verdict}\n"
    _emit(text, a.out)
    return EXIT_OK if rep.ok else EXIT_FAIL


def _load_script(a) -> dict:
    if not a.script:
        _usage("map-extract needs --script")
    script = json.loads(Path(a.script).read_text())
    if a.d_given or "d" not in script:
        script["d"] = a.d
    return script


def cmd_map_extract(a) -> int:
    script = _load_script(a)
    maps = surgery.extract_maps(script, script["d"], mode=a.mode, seed=a.seed, budget=a.budget)
    lines = [f"# d={script['d']} branches={len(maps)} basis=group"]
    if a.format == "csv":
        lines.append("branch,n,row,col,real,imag")
    worst = 0.0
    for k, m in enumerate(maps):
        ns = "/".join(str(v) for _, v in m.ns) or "-"
        worst = max(worst, m.leakage)
        if a.format == "csv":
            lines += _matrix_csv(m.matrix, [k, ns])
        else:
            lines.append(f"## branch {k} n={ns} outcomes={list(m.outcomes)}")
            for row in m.matrix:
                lines.append("| " + " | ".join(_num(v.real) + ("" if abs(v.imag) < 1e-15 else f"{'+' if v.imag >= 0 else '-'}{_num(abs(v.imag))}i")
                                               for v in row) + " |")
    ok = worst <= a.tol
    lines.append(f"# leakage={_num(worst)} {'ok' if ok else 'ABOVE TOLERANCE'}")
    _emit("\n".join(lines) + "\n", a.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_dict_verify(a) -> int:
    rows = checks.verify_dictionary(a.d, tol=a.tol)
    table = [(r.name, r.branches, _yn(r.surgery_ok), _yn(r.zx_ok), _yn(r.agree), _yn(r.families_ok),
              _yn(r.complete), "match" if r.ok else "MISMATCH") for r in rows]
    text = _table(a.format, ["row", "branches", "surgery", "zx", "agree", "families", "complete", "result"], table)
    good = sum(r.ok for r in rows)
    text += f"d={a.d}: {good}/{len(rows)} rows match\n"
    _emit(text, a.out)
    return EXIT_OK if good == len(rows) else EXIT_FAIL


def _yn(x: bool) -> str:
    return "yes" if x else "no"


def cmd_zx(a) -> int:
    if a.zx_cmd == "eval":
        g = zx.load_diagram(_one(a.diagram))
        t = zx.evaluate(g)
        lines = [f"# d={g.d} inputs={g.n_in} outputs={g.n_out}", "row,col,real,imag"]
        lines += _matrix_csv(t.matrix, [])
        _emit("\n".join(lines) + "\n", a.out)
        return EXIT_OK
    if a.zx_cmd == "rewrite":
        g = zx.load_diagram(_one(a.diagram))
        loc = _tuplify(json.loads(a.location)) if a.location else None
        h = zx.rewrite(g, a.rule, loc)
        _emit(json.dumps(zx.diagram_to_dict(h), indent=1, sort_keys=True) + "\n", a.out)
        return EXIT_OK
    if a.zx_cmd == "equal":
        if not a.diagram or len(a.diagram) != 2:
            _usage("zx equal needs exactly two --diagram files")
        g, h = (zx.load_diagram(p) for p in a.diagram)
        try:
            same = zx.equal(g, h, up_to_scalar=not a.exact, tol=a.tol)
        except zx.DiagramError as exc:
            print(f"usage error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        _emit(f"equal{'' if a.exact else ' up to scalar'}: {str(same).lower()}\n", a.out)
        return EXIT_OK if same else EXIT_FAIL
    if a.zx_cmd == "cx":
        from .groupalg import cx
        diags = zx.cx_diagrams(a.d)
        rows = [(f"diagram {k}", _yn(zx.tensors_equal(zx.evaluate(g).matrix, cx(a.d), tol=a.tol)))
                for k, g in diags.items()]
        chain = zx.cx_rewrite_chain(a.d)
        ref = zx.evaluate(chain[0][1]).tensor
        rows += [(f"chain: {name}", _yn(zx.tensors_equal(zx.evaluate(g).tensor, ref, False, a.tol)))
                 for name, g in chain[1:]]
        ok = all(r[1] == "yes" for r in rows)
        text = _table(a.format, ["check", "holds"], rows) + f"d={a.d}: {'all equal' if ok else 'MISMATCH'}\n"
        if a.out:
            for k, g in diags.items():
                zx.save_diagram(g, Path(a.out).with_name(f"{Path(a.out).stem}_cx{k}.json"))
        _emit(text, a.out)
        return EXIT_OK if ok else EXIT_FAIL
    raise SystemExit(f"unknown zx command {a.zx_cmd!r}")


def _usage(msg: str):
    print(f"usage error: {msg}", file=sys.stderr)
    raise SystemExit(EXIT_USAGE)


def _one(paths):
    if not paths or len(paths) != 1:
        _usage("exactly one --diagram is needed")
    return paths[0]


def _tuplify(x):
    if isinstance(x, list):
        return tuple(_tuplify(v) for v in x)
    return x


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--d", type=int, default=None, help="qudit dimension [env QSURG_D, default 2]")
    common.add_argument("--rows", type=int, default=_env("rows", 0, int))
    common.add_argument("--cols", type=int, default=_env("cols", 1, int))
    common.add_argument("--patch-file", default=_env("patch_file", None))
    common.add_argument("--script", default=_env("script", None))
    common.add_argument("--diagram", action="append", default=None)
    common.add_argument("--mode", choices=["sample", "enumerate"], default=_env("mode", "enumerate"))
    common.add_argument("--seed", type=int, default=_env("seed", None, int),
                        help="RNG seed (required in sample mode)")
    common.add_argument("--budget", type=int, default=_env("budget", lattice.DEFAULT_BUDGET, int))
    common.add_argument("--tol", type=float, default=_env("tol", 1e-9, float))
    common.add_argument("--out", default=_env("out", None))
    common.add_argument("--format", choices=["csv", "md"], default=_env("format", "md"))

    p = argparse.ArgumentParser(prog="qudit-surgery", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="cmd", required=True)
    sub.add_parser("patch-validate", parents=[common], help="validate a patch")
    sub.add_parser("map-extract", parents=[common], help="extract logical maps of a script")
    sub.add_parser("dict-verify", parents=[common], help="verify the dictionary rows")
    pz = sub.add_parser("zx", help="ZX diagram tools")
    zsub = pz.add_subparsers(dest="zx_cmd", required=True)
    zsub.add_parser("eval", parents=[common])
    pr = zsub.add_parser("rewrite", parents=[common])
    pr.add_argument("--rule", required=True, choices=sorted(zx.RULES))
    pr.add_argument("--location", default=None, help="JSON location, e.g. '[0, 1]'")
    pe = zsub.add_parser("equal", parents=[common])
    pe.add_argument("--exact", action="store_true", help="compare without rescaling")
    zsub.add_parser("cx", parents=[common])
    return p


def main(argv=None) -> int:
    a = build_parser().parse_args(argv)
    a.d_given = a.d is not None
    if a.d is None:
        a.d = _env("d", 2, int)
    if a.mode == "sample" and a.seed is None:
        print("sample mode needs --seed", file=sys.stderr)
        return EXIT_USAGE
    try:
        if a.cmd == "patch-validate":
            return cmd_patch_validate(a)
        if a.cmd == "map-extract":
            return cmd_map_extract(a)
        if a.cmd == "dict-verify":
            return cmd_dict_verify(a)
        return cmd_zx(a)
    except lattice.BudgetError as exc:
        print(f"budget error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (lattice.GeometryError, surgery.SurgeryError, zx.DiagramError, ValueError,
            FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
