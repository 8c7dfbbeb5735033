"""Command-line front end.

Subcommands:

  compare        expansion partial sums against the quadrature reference
  verify         run the invariant suites (exit 1 on any failure)
  enumerate      tree / forest / jungle counts, optionally edge lists
  oracle         Z and log Z for one parameter set
  verify-bounds  CSV of the combinatorial inequality margins
  domain-map     grid of the analyticity-domain membership in g
  mayer          polymer-gas expansion versus direct enumeration

All file outputs are UTF-8 CSV with a header row, or JSON with a
schema_version field; at fixed configuration and a single thread the
outputs are byte-identical across runs.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

SCHEMA_VERSION = 1


def _fail_usage(message: str) -> "NoReturn":  # noqa: F821 - doc only
    print(f"error: {message}", file=sys.stderr)
    raise SystemExit(2)


def load_config(path: str | None) -> dict:
    defaults = {
        "lambda": 0.2,
        "M": 2,
        "j_min": 1,
        "j_max": 3,
        "n_max": 3,
        "oracle_nodes": 200,
        "gl_nodes": 12,
        "gh_nodes": None,
        "threads": 1,
    }
    if path is None:
        return defaults
    p = Path(path)
    if not p.is_file():
        _fail_usage(f"config file not found: {path}")
    try:
        loaded = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        _fail_usage(f"config is not valid JSON: {exc}")
    unknown = set(loaded) - set(defaults) - {"schema_version"}
    if unknown:
        _fail_usage(f"unknown config keys: {sorted(unknown)}")
    defaults.update(loaded)
    return defaults


def _coupling(value) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(value[0], value[1])
    _fail_usage(f"cannot parse coupling {value!r} (number or [re, im])")


def _params(cfg):
    from .model_core import ModelParams

    try:
        return ModelParams(_coupling(cfg["lambda"]), int(cfg["M"]), int(cfg["j_min"]), int(cfg["j_max"]))
    except ValueError as exc:
        _fail_usage(str(exc))


def _engine_options(cfg, threads: int):
    from .engine import EngineOptions, default_gh_nodes

    gh = default_gh_nodes()
    if cfg.get("gh_nodes"):
        gh.update({int(k): int(v) for k, v in cfg["gh_nodes"].items()})
    return EngineOptions(gh_nodes=gh, gl_nodes=int(cfg["gl_nodes"]), threads=threads)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_compare(args) -> int:
    from . import engine, oracle

    cfg = load_config(args.config)
    params = _params(cfg)
    opts = _engine_options(cfg, args.threads)
    n_max = int(cfg["n_max"])
    ref = oracle.logz_oracle(params, int(cfg["oracle_nodes"]))
    out = _out_dir(args)

    ev = engine.TermEvaluator(params, opts)
    orders, sums, rows, trace_rows = [], [], [], []
    running = 0j
    for n in range(1, n_max + 1):
        if args.trace:
            total = 0j
            for idx, (jungle, slices, value) in enumerate(ev.order_terms(n)):
                total += value
                if value != 0:
                    trace_rows.append(
                        {
                            "n": n,
                            "jungle": idx,
                            "bosonic": sorted(jungle.bosonic.edges),
                            "fermionic": sorted(jungle.fermionic),
                            "slices": list(slices),
                            "value": [value.real, value.imag],
                        }
                    )
            value_n = total / math.factorial(n)
        else:
            value_n = ev.order_contribution(n)
        orders.append(value_n)
        running += value_n
        sums.append(running)
        rows.append((n, running.real, running.imag, abs(running - ref)))

    with (out / "orders.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "partial_sum_re", "partial_sum_im", "abs_error_vs_oracle"])
        for row in rows:
            writer.writerow([row[0], f"{row[1]:.15e}", f"{row[2]:.15e}", f"{row[3]:.15e}"])
    summary = {
        "schema_version": SCHEMA_VERSION,
        "lambda": [params.lam.real, params.lam.imag] if isinstance(params.lam, complex) else params.lam,
        "M": params.M,
        "j_min": params.j_min,
        "j_max": params.j_max,
        "cutoff": params.cutoff,
        "oracle_logz": [ref.real, ref.imag],
        "orders": [[o.real, o.imag] for o in orders],
        "partial_sums": [[s.real, s.imag] for s in sums],
        "abs_errors": [row[3] for row in rows],
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    if args.trace:
        with (out / "trace.jsonl").open("w", encoding="utf-8") as fh:
            for rec in trace_rows:
                fh.write(json.dumps(rec) + "\n")
    print(f"log Z oracle = {ref:.12g}")
    for n, re, im, err in rows:
        print(f"S_{n} = {re:.12g}{im:+.3g}i   |S_{n} - oracle| = {err:.3e}")
    return 0


def cmd_verify(args) -> int:
    from .verify import run_suites

    names = args.suite or None
    try:
        results = run_suites(names)
    except KeyError as exc:
        _fail_usage(str(exc.args[0]))
    exit_code = 0
    for res in results:
        status = "PASS" if res.ok else "FAIL"
        print(f"[{status}] {res.name}")
        for warning in res.warnings:
            print(f"  WARN: {warning}")
        for failure in res.failures:
            print(f"  FAIL: {failure}")
            exit_code = 1
    return exit_code


def cmd_enumerate(args) -> int:
    from . import combinatorics as cb

    n = args.n
    if args.kind == "trees":
        items = cb.enumerate_trees(n)
    elif args.kind == "forests":
        items = cb.enumerate_forests(n)
    else:
        items = cb.enumerate_jungles(n, spanning=args.spanning)
    count = 0
    for item in items:
        count += 1
        if args.edges:
            if args.kind == "jungles":
                rec = {
                    "bosonic": sorted(item.bosonic.edges),
                    "fermionic": sorted(item.fermionic),
                }
            else:
                rec = {"edges": sorted(item.edges)}
            print(json.dumps(rec))
    print(f"{args.kind} n={n}: {count}")
    return 0


def cmd_oracle(args) -> int:
    from . import oracle

    cfg = load_config(args.config)
    params = _params(cfg)
    nodes = int(cfg["oracle_nodes"])
    z, delta, reliable = oracle.z_reliable(params, nodes)
    logz = oracle.logz_oracle(params, nodes) if reliable and abs(z) > 1e-8 else None
    record = {
        "schema_version": SCHEMA_VERSION,
        "lambda": [params.lam.real, params.lam.imag],
        "M": params.M,
        "j_min": params.j_min,
        "j_max": params.j_max,
        "cutoff": params.cutoff,
        "nodes": nodes,
        "Z": [z.real, z.imag],
        "node_doubling_delta": delta,
        "reliable": reliable,
        "logZ": None if logz is None else [logz.real, logz.imag],
    }
    out = _out_dir(args)
    (out / "oracle.json").write_text(json.dumps(record, indent=2) + "\n", encoding="utf-8")
    print(json.dumps(record, indent=2))
    return 0 if reliable else 1


def cmd_verify_bounds(args) -> int:
    from . import bounds

    out = _out_dir(args)
    rows = bounds.stirling_chain_check(range(1, args.q_max + 1))
    with (out / "stirling_chain.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["q", "log_lhs", "log_rhs", "margin"])
        for r in rows:
            writer.writerow([r.q, f"{r.log_lhs:.15e}", f"{r.log_rhs:.15e}", f"{r.margin:.15e}"])
    bad = [r for r in rows if not r.ok]
    thr = bounds.m_threshold_check(args.M, range(1, args.q_max + 1))
    with (out / "m_threshold.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["q", "value", "ok"])
        for r in thr:
            writer.writerow([r.q, f"{r.value:.15e}", int(r.ok)])
    print(f"stirling chain: {len(rows)} rows, {len(bad)} violations")
    for r in thr:
        if not r.ok:
            print(f"WARN m-threshold: q={r.q} value={r.value:.4g} > 1")
    return 1 if bad else 0


def cmd_domain_map(args) -> int:
    out = _out_dir(args)
    res = args.resolution
    with (out / "domain_map.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["re_g", "im_g", "inside"])
        for i in range(res):
            re = args.re_min + (args.re_max - args.re_min) * i / (res - 1)
            for j in range(res):
                im = args.im_min + (args.im_max - args.im_min) * j / (res - 1)
                # the map is of the open disk |g - 1/2| < 1/2 itself
                inside = abs(complex(re, im) - 0.5) < 0.5
                writer.writerow([f"{re:.17g}", f"{im:.17g}", int(inside)])
    print(f"domain map: {res * res} points -> {out / 'domain_map.csv'}")
    return 0


def cmd_mayer(args) -> int:
    from . import mayer

    path = Path(args.gas)
    if not path.is_file():
        _fail_usage(f"gas file not found: {args.gas}")
    spec = json.loads(path.read_text(encoding="utf-8"))
    monomers = frozenset(spec["monomers"])
    acts = {frozenset(entry["polymer"]): complex(entry["activity"]) for entry in spec["activities"]}
    gas = mayer.PolymerGas(monomers, acts)
    direct = mayer.polymer_z_direct(gas)
    orders = [mayer.mayer_order_term(gas, n) for n in range(1, args.n_max + 1)]
    total = sum(orders)
    record = {
        "schema_version": SCHEMA_VERSION,
        "monomers": sorted(monomers),
        "z_direct": [direct.real, direct.imag],
        "log_z_direct": math.log(abs(direct)),
        "orders": [[o.real, o.imag] for o in orders],
        "tree_sum": [total.real, total.imag],
        "abs_error": abs(math.e ** total.real - abs(direct)),
    }
    out = _out_dir(args)
    (out / "mayer.json").write_text(json.dumps(record, indent=2) + "\n", encoding="utf-8")
    print(json.dumps(record, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mlve", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("compare", help="expansion vs oracle")
    common(p)
    p.add_argument("--trace", action="store_true", help="emit per-term JSON lines")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("verify", help="invariant suites")
    p.add_argument("--suite", action="append", help="run only this suite (repeatable)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("enumerate", help="combinatorial counts")
    p.add_argument("--kind", choices=["trees", "forests", "jungles"], default="trees")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--spanning", action="store_true")
    p.add_argument("--edges", action="store_true", help="print edge lists as JSON lines")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("oracle", help="quadrature Z and log Z")
    common(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("verify-bounds", help="inequality margin tables")
    common(p)
    p.add_argument("--q-max", type=int, default=1000)
    p.add_argument("--M", type=float, default=1e8)
    p.set_defaults(func=cmd_verify_bounds)

    p = sub.add_parser("domain-map", help="analyticity domain grid")
    common(p)
    p.add_argument("--re-min", type=float, default=-0.5)
    p.add_argument("--re-max", type=float, default=1.5)
    p.add_argument("--im-min", type=float, default=-1.0)
    p.add_argument("--im-max", type=float, default=1.0)
    p.add_argument("--resolution", type=int, default=41)
    p.set_defaults(func=cmd_domain_map)

    p = sub.add_parser("mayer", help="polymer gas expansion")
    common(p)
    p.add_argument("--gas", required=True, help="gas spec JSON file")
    p.add_argument("--n-max", type=int, default=4)
    p.set_defaults(func=cmd_mayer)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
