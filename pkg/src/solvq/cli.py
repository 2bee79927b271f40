"""Command-line entry point: ``solvq run`` and ``solvq compare``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from pydantic import ValidationError

from .config import METHODS, bundled_config, load_config

log = logging.getLogger("solvq")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_NOT_CONVERGED = 2


def _format_validation(path, err: ValidationError) -> str:
    lines = [f"{path}: invalid configuration"]
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"  {loc}: {e['msg']}")
    return "\n".join(lines)


def _resolve_path(name: str) -> Path:
    p = Path(name)
    if p.exists():
        return p
    try:
        return bundled_config(name)
    except FileNotFoundError:
        raise FileNotFoundError(f"config not found: {name}") from None


def run_one(path, seed=None, method=None, dump_state=False, dump_hamiltonian=False, output_dir=None):
    """Load, execute and persist one config; returns ``(exit_code, report_or_None)``."""
    from .pipeline import execute, write_outputs

    overrides = {}
    if seed is not None:
        overrides["seed"] = seed
    if method is not None:
        overrides["method"] = method
    if output_dir is not None:
        overrides["output_dir"] = str(Path(output_dir).resolve())
    try:
        cfg = load_config(_resolve_path(str(path)), overrides)
    except ValidationError as err:
        print(_format_validation(path, err), file=sys.stderr)
        return EXIT_FAILURE, None
    except (OSError, ValueError) as err:
        print(f"{path}: {err}", file=sys.stderr)
        return EXIT_FAILURE, None
    try:
        report, artifacts = execute(cfg)
    except Exception as err:  # numerical failures surface as a nonzero exit with context
        log.debug("run failed", exc_info=True)
        print(f"{path}: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_FAILURE, None
    out = write_outputs(cfg, report, artifacts, dump_state, dump_hamiltonian)
    value = report["value_Ha"]
    line = f"{cfg.name or Path(str(path)).stem}: {report['method']} value = {value:.10f} Ha"
    if report.get("delta_g_Ha") is not None:
        line += f", dG = {report['delta_g_Ha']:.6f} Ha"
    print(f"{line} -> {out}")
    return (EXIT_OK if report["converged"] else EXIT_NOT_CONVERGED), report


def compare_reports(a: dict, b: dict) -> dict:
    """Field-wise deltas ``b - a``; the solvation free energy is filled in when exactly one report is solvated."""
    sa, sb = a.get("system", {}), b.get("system", {})
    for key in ("molecule", "basis", "n_qubits", "n_active_electrons"):
        if key in sa and key in sb and sa[key] != sb[key]:
            raise ValueError(f"reports differ in system.{key}: {sa[key]!r} vs {sb[key]!r}")
    solv_a, solv_b = a["method"].startswith("pcm"), b["method"].startswith("pcm")
    errs = [r.get("stderr_Ha") for r in (a, b) if r.get("stderr_Ha") is not None]
    err = math.sqrt(sum(e * e for e in errs)) if errs else None
    out = {"a": a["method"], "b": b["method"], "delta_value_Ha": b["value_Ha"] - a["value_Ha"],
           "delta_value_stderr_Ha": err, "delta_g_Ha": None, "delta_g_stderr_Ha": None, "deltas": {}}
    if solv_a != solv_b:
        sol, vac = (a, b) if solv_a else (b, a)
        out["delta_g_Ha"] = sol["value_Ha"] - vac["value_Ha"]
        out["delta_g_stderr_Ha"] = err
    for key in sorted(set(a) & set(b)):
        va, vb = a[key], b[key]
        if isinstance(va, (int, float)) and isinstance(vb, (int, float)) and not isinstance(va, bool) \
                and not isinstance(vb, bool):
            out["deltas"][key] = vb - va
    return out


def _cmd_run(args) -> int:
    jobs = max(1, args.jobs)
    kwargs = dict(seed=args.seed, method=args.method, dump_state=args.dump_state,
                  dump_hamiltonian=args.dump_hamiltonian, output_dir=args.output_dir)
    if args.output_dir is not None and len(args.configs) > 1:
        print("--output-dir applies to a single config only", file=sys.stderr)
        return EXIT_FAILURE
    if jobs == 1 or len(args.configs) == 1:
        codes = [run_one(c, **kwargs)[0] for c in args.configs]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            codes = [f.result()[0] for f in [pool.submit(run_one, c, **kwargs) for c in args.configs]]
    return max(codes)


def _cmd_compare(args) -> int:
    try:
        a = json.loads(Path(args.a).read_text())
        b = json.loads(Path(args.b).read_text())
        result = compare_reports(a, b)
    except (OSError, ValueError, KeyError) as err:
        print(f"compare: {err}", file=sys.stderr)
        return EXIT_FAILURE
    text = json.dumps(result, indent=1, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="solvq", description="Solvated VQE with a polarizable continuum.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one or more YAML/JSON configs (or bundled config names)")
    r.add_argument("configs", nargs="+")
    r.add_argument("--seed", type=int, default=None, help="override the config seed")
    r.add_argument("--method", choices=METHODS, default=None,
                   help="override the method, e.g. a reference fci or pcm-fci run")
    r.add_argument("--jobs", type=int, default=1, help="run configs concurrently")
    r.add_argument("--dump-state", action="store_true", help="write the final statevector to state.csv")
    r.add_argument("--dump-hamiltonian", action="store_true",
                   help="write hamiltonian.json (Pauli terms) and an FCIDUMP")
    r.add_argument("--output-dir", default=None, help="override the output directory")
    r.set_defaults(func=_cmd_run)

    c = sub.add_parser("compare", help="solvation free energy and field deltas between two reports")
    c.add_argument("a")
    c.add_argument("b")
    c.add_argument("--out", default=None)
    c.set_defaults(func=_cmd_compare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
