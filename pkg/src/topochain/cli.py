"""Command line entry point: ``topochain <command> [options]``.

Exit codes: 0 all checks passed, 1 a check failed, 2 invalid input.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")
CONFIG_KEYS = {"potential", "integrator", "quadrature", "n_max", "alpha", "seed", "t", "suite", "out"}
MAX_DUMP_PARTICLES = 6
DEFAULT_OUT = "topochain-out"


class ConfigError(ValueError):
    pass


def _apply_thread_cap():
    cap = os.environ.get("TOPOCHAIN_THREADS")
    if cap is None:
        return
    if not cap.isdigit() or int(cap) < 1:
        raise ConfigError(f"TOPOCHAIN_THREADS must be a positive integer, got {cap!r}")
    for var in THREAD_VARS:
        os.environ[var] = cap


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return data


def build_run_config(data: dict, args):
    from .numerics import QuadratureSpec
    from .suites import RunConfig

    kw = {}
    pot = data.get("potential", {})
    integ = data.get("integrator", {})
    for src, keys in ((pot, ("sigma", "range", "epsilon")), (integ, ("dt", "event_tol"))):
        extra = set(src) - set(keys)
        if extra:
            raise ConfigError(f"unknown keys {sorted(extra)}")
        kw.update(src)
    quad = dict(data.get("quadrature", {}))
    fields = {f.name for f in dataclasses.fields(QuadratureSpec)}
    if set(quad) - fields:
        raise ConfigError(f"unknown quadrature keys {sorted(set(quad) - fields)}")
    kw["quadrature"] = quad
    for key in ("n_max", "alpha", "seed", "t"):
        if key in data:
            kw[key] = data[key]
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.max_particles is not None:
        kw["n_max"] = args.max_particles
    if args.t is not None:
        kw["t"] = args.t
    rc = RunConfig(**kw)
    try:
        rc.pot, rc.cfg, rc.spec()
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if rc.n_max < 1:
        raise ConfigError("n_max must be at least 1")
    if rc.alpha <= 1:
        raise ConfigError("alpha must exceed 1")
    return rc


def write_report(out: Path, command: str, records: list[dict]) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / "report.json"
    body = {"command": command, "passed": all(r["pass"] for r in records), "checks": records}
    path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")
    return path


def _summarize(records) -> int:
    failed = [r for r in records if not r["pass"]]
    for r in records:
        print(f"{'PASS' if r['pass'] else 'FAIL'} {r['check_id']} {json.dumps(r['params'], sort_keys=True)} "
              f"err={r['abs_err']} tol={r['tolerance']}")
    print(f"{len(records) - len(failed)}/{len(records)} checks passed")
    return 1 if failed else 0


def cmd_verify(args, rc) -> int:
    from .suites import RUNNERS, SUITES

    names = SUITES if args.suite == "all" else (args.suite,)
    records = []
    for name in names:
        records.extend(RUNNERS[name](rc))
    write_report(Path(args.out), f"verify {args.suite}", records)
    return _summarize(records)


def cmd_simple_suite(name):
    def run(args, rc) -> int:
        from .suites import RUNNERS

        records = RUNNERS[name](rc)
        write_report(Path(args.out), name, records)
        return _summarize(records)

    return run


def cmd_simulate(args, rc) -> int:
    import csv

    import numpy as np

    from .dynamics import simulate
    from .suites import allowed_chain, record

    if args.particles < 1 or args.frames < 1:
        raise ConfigError("--particles and --frames must be positive")
    rng = np.random.default_rng(rc.seed)
    x = allowed_chain(rng, args.particles, rc.sigma, (0.1, 0.6))
    T = 5.0 if rc.t is None else rc.t
    rows, drift = simulate(x, T, rc.pot, rc.cfg, frames=args.frames)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dump = Path(args.dump) if args.dump else out / "trajectory.csv"
    with open(dump, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "label", "q", "p", "energy_drift"])
        n = args.particles
        w.writerows(row + (drift[k // n],) for k, row in enumerate(rows))
    records = [record("energy_drift", {"particles": n, "t": T, "frames": args.frames}, max(drift), 0.0, 1e-8)]
    write_report(out, "simulate", records)
    return _summarize(records)


def _parse_component(text: str):
    try:
        s1, s2 = (int(v) for v in text.split(","))
    except ValueError as exc:
        raise ConfigError("component must look like S1,S2") from exc
    if s1 < 0 or s2 < 0 or s1 + s2 < 1:
        raise ConfigError("component needs s1, s2 >= 0 and s1 + s2 >= 1")
    if s1 + s2 > MAX_DUMP_PARTICLES:
        raise ConfigError(f"size cap exceeded: s1 + s2 <= {MAX_DUMP_PARTICLES}")
    return s1, s2


FACTOR = {"cluster": "g", "cumulant": "D", "group": "S*"}


def dump_expansions(s, kind: str) -> dict:
    """Symbolic term list of the expansion of one component."""
    from .combinatorics import arity, canonical_labels
    from .star import symbolic_terms

    labels = canonical_labels(*s)
    terms = symbolic_terms(labels, "cluster" if kind == "cluster" else "cumulant")
    for term in terms:
        term["factors"] = ["{}_{{{}+{}}}({})".format(FACTOR[kind], *arity(b), ",".join(map(str, b)))
                           for b in term["blocks"]]
    name = {"cluster": "D", "cumulant": "g", "group": "A"}[kind]
    return {"component": list(s), "kind": kind, "name": f"{name}_{{{s[0]}+{s[1]}}}", "terms": terms}


def cmd_dump(args, rc) -> int:
    s = _parse_component(args.component)
    body = dump_expansions(s, args.kind)
    text = json.dumps(body, indent=2, sort_keys=True) + "\n"
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"expansion_{args.kind}_{s[0]}_{s[1]}.json").write_text(text)
    sys.stdout.write(text)
    return 0


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help=f"output directory (default {DEFAULT_OUT})")
    common.add_argument("--seed", type=int)
    common.add_argument("--max-particles", type=int, dest="max_particles")
    common.add_argument("--t", type=float)

    parser = argparse.ArgumentParser(prog="topochain", description="Correlation dynamics of ordered chains.")
    sub = parser.add_subparsers(dest="command", required=True)
    from .suites import SUITES

    p = sub.add_parser("verify", parents=[common], help="run a verification suite")
    p.add_argument("suite", nargs="?", choices=SUITES + ("all",))
    p.add_argument("--suite", dest="suite_flag", choices=SUITES + ("all",))
    p.set_defaults(func=cmd_verify)
    p = sub.add_parser("simulate", parents=[common], help="integrate one random chain")
    p.add_argument("--particles", type=int, default=4)
    p.add_argument("--frames", type=int, default=50)
    p.add_argument("--dump", help="trajectory CSV path")
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("dump-expansions", parents=[common], help="symbolic term lists")
    p.add_argument("--component", default="1,2", help="S1,S2")
    p.add_argument("--kind", choices=("cluster", "cumulant", "group"), default="cumulant")
    p.set_defaults(func=cmd_dump)
    p = sub.add_parser("norm-bounds", parents=[common], help="cumulant and solution norm bounds")
    p.set_defaults(func=cmd_simple_suite("norm-bounds"))
    p = sub.add_parser("duality", parents=[common], help="observable/state duality")
    p.set_defaults(func=cmd_simple_suite("duality"))
    return parser


def main(argv=None) -> int:
    try:
        _apply_thread_cap()
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    parser = make_parser()
    args = parser.parse_args(argv)
    if args.command == "verify":
        if args.suite and args.suite_flag and args.suite != args.suite_flag:
            parser.error("conflicting suite names")
        args.suite = args.suite or args.suite_flag
        if args.suite is None:
            parser.error("verify needs a suite name")
    try:
        data = load_config(args.config)
        if args.command == "verify" and args.suite is None:
            args.suite = data.get("suite")
        if args.out is None and args.command != "dump-expansions":
            args.out = data.get("out", DEFAULT_OUT)
        rc = build_run_config(data, args)
        return args.func(args, rc)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
