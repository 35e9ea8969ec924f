"""Command-line entry point: ``kpzlab <subcommand> [options]``."""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import sys
from dataclasses import fields, replace

from .bm_core import KpzParams, SeedSpec, read_path, sample_path, write_path
from .dim_est import ScalePolicy
from .harness import (SET_KINDS, ExperimentSpec, RANGE_KINDS, detect_path_set, identities_pass,
                      reports_json, run_experiment, sample_range_set, verify_identities,
                      verify_table)
from .peanomap import EdgeKind, build_mated_crt, degree_stats

_SPEC_FIELDS = {f.name: f for f in fields(ExperimentSpec)}
_POLICY_KEYS = ("n_scales", "coarsest_fraction", "finest_multiple")
_ALIASES = {"steps": "n_steps", "kappa-prime": "kappa_prime", "set": "set_kind"}


def _convert(key: str, raw: str):
    if key in ("n_steps", "replicates", "seed", "m", "n_scales"):
        return int(float(raw)) if key != "seed" else int(raw, 0)
    if key == "set_kind":
        return raw.strip()
    if key == "tol_sweep":
        return tuple(float(x) for x in raw.split(",") if x.strip())
    if raw.strip().lower() in ("", "none"):
        return None
    return float(raw)


def read_config(path: str) -> dict:
    """Flat ``key = value`` file; keys mirror ExperimentSpec plus the scale-policy fields."""
    parser = configparser.ConfigParser()
    with open(path) as fh:
        parser.read_string("[experiment]\n" + fh.read())
    out = {}
    for key, raw in parser["experiment"].items():
        key = _ALIASES.get(key, key.replace("-", "_"))
        if key not in _SPEC_FIELDS and key not in _POLICY_KEYS and key != "threads":
            raise SystemExit(f"unknown config key {key!r}")
        out[key] = _convert(key, raw) if key != "threads" else int(raw)
    return out


def _common(p: argparse.ArgumentParser, top: bool) -> None:
    # accepted before or after the subcommand; the subcommand copy must not
    # overwrite a value given before it, hence SUPPRESS there
    dflt = None if top else argparse.SUPPRESS
    g = p.add_argument_group("global")
    g.add_argument("--config", default=dflt, help="flat key=value experiment file; flags override it")
    g.add_argument("--seed", type=lambda s: int(s, 0), default=dflt)
    g.add_argument("--steps", type=int, dest="n_steps", default=dflt)
    g.add_argument("--dt", type=float, default=dflt)
    g.add_argument("--replicates", type=int, default=dflt)
    g.add_argument("--threads", type=int, default=dflt)
    g.add_argument("--out", default=dflt, help="output file (default stdout)")
    g.add_argument("--format", choices=("json", "csv"), default="json" if top else argparse.SUPPRESS)


def _spec_from(args, set_kind: str | None = None) -> tuple[ExperimentSpec, int]:
    vals: dict = {}
    if getattr(args, "config", None):
        vals.update(read_config(args.config))
    for key in list(_SPEC_FIELDS) + list(_POLICY_KEYS) + ["threads"]:
        v = getattr(args, key, None)
        if v is not None:
            vals[key] = v
    if set_kind is not None:
        vals["set_kind"] = set_kind
    vals.setdefault("set_kind", "running_infima_L")
    pol = {k: vals.pop(k) for k in _POLICY_KEYS if k in vals}
    threads = int(vals.pop("threads", 1) or 1)
    if pol:
        vals["scale_policy"] = ScalePolicy(**pol)
    return ExperimentSpec(**vals), threads


def _emit(args, text: str | bytes) -> None:
    if args.out:
        mode = "wb" if isinstance(text, bytes) else "w"
        with open(args.out, mode) as fh:
            fh.write(text)
    elif isinstance(text, bytes):
        sys.stdout.buffer.write(text)
    else:
        sys.stdout.write(text)


def _csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    names: list[str] = []
    for r in rows:
        names.extend(k for k in r if k not in names)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=names, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _path_for(args, spec: ExperimentSpec):
    if getattr(args, "path", None):
        return read_path(args.path)
    return sample_path(spec.n_steps, spec.dt, KpzParams(spec.kappa_prime), SeedSpec(spec.seed, 0))


def cmd_simulate(args) -> int:
    spec, _ = _spec_from(args)
    path = sample_path(spec.n_steps, spec.dt, KpzParams(spec.kappa_prime), SeedSpec(spec.seed, 0),
                       origin_index=args.origin)
    if not args.out:
        raise SystemExit("simulate writes a binary dump; pass --out")
    write_path(path, args.out)
    return 0


def cmd_detect(args) -> int:
    spec, _ = _spec_from(args, args.set)
    if spec.set_kind in RANGE_KINDS:
        rs = sample_range_set(spec, SeedSpec(spec.seed, 0))
        gaps = rs.gaps()
        if args.format == "json":
            _emit(args, json.dumps({"total": rs.total, "gaps": gaps.tolist()}, sort_keys=True) + "\n")
        else:
            _emit(args, rs.gaps_text())
        return 0
    path = _path_for(args, spec)
    ts, _ = detect_path_set(spec, path)
    if args.format == "json":
        _emit(args, json.dumps({"grid_dt": ts.grid_dt, "source_len": ts.source_len,
                                "indices": ts.indices.tolist()}) + "\n")
    else:
        _emit(args, ts.to_text(runs=args.runs))
    return 0


def cmd_estimate(args) -> int:
    spec, threads = _spec_from(args, args.set)
    rep = run_experiment(spec, threads)
    if args.format == "json":
        _emit(args, rep.to_json() + "\n")
    else:
        rows = [{"replicate": r["replicate"], "n_points": r["n_points"],
                 "slope": None if r["estimate"] is None else r["estimate"]["slope"],
                 "stderr": None if r["estimate"] is None else r["estimate"]["stderr"],
                 "r_squared": None if r["estimate"] is None else r["estimate"]["r_squared"]}
                for r in rep.estimates]
        _emit(args, _csv(rows))
    return 0 if rep.passed in (True, None) else 1


def cmd_verify_table(args) -> int:
    kps = [float(x) for x in args.kappa_prime.split(",") if x.strip()]
    records = verify_identities(kps)
    ok = identities_pass(records)
    reports = []
    if args.monte_carlo:
        ns = argparse.Namespace(**{k: v for k, v in vars(args).items() if k != "kappa_prime"})
        spec, threads = _spec_from(ns)
        reports = verify_table(kps, spec, monte_carlo=True, threads=threads)
        ok = ok and all(r.passed is not False for r in reports)
    if args.format == "json":
        if args.monte_carlo:
            text = ('{"identities": ' + json.dumps(records, sort_keys=True, indent=1)
                    + ', "reports": ' + reports_json(reports) + "}\n")
        else:
            text = json.dumps(records, sort_keys=True, indent=1) + "\n"
        _emit(args, text)
    else:
        _emit(args, _csv(records))
    return 0 if ok else 1


def cmd_mate(args) -> int:
    spec, _ = _spec_from(args)
    path = _path_for(args, spec)
    g = build_mated_crt(path, args.cell_steps)
    if args.adjacency:
        _emit(args, g.adjacency_text())
    elif args.format == "json":
        _emit(args, json.dumps({"stats": degree_stats(g),
                                "edges": [[i, j, EdgeKind(k).label] for (i, j), k in
                                          zip(g.edges.tolist(), g.kinds.tolist())]}) + "\n")
    else:
        _emit(args, g.edge_list_text())
    return 0 if g.is_connected() else 1


def cmd_compose(args) -> int:
    spec, threads = _spec_from(args, "composed_range")
    spec = replace(spec, alpha1=args.alpha1, alpha2=args.alpha2,
                   n_jumps=args.n_jumps if args.n_jumps is not None else spec.n_jumps)
    if args.gaps:
        rs = sample_range_set(spec, SeedSpec(spec.seed, 0))
        _emit(args, rs.gaps_text())
        return 0
    rep = run_experiment(spec, threads)
    _emit(args, rep.to_json() + "\n")
    return 0 if rep.passed in (True, None) else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kpzlab", description=__doc__)
    _common(p, top=True)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        _common(sp, top=False)
        sp.set_defaults(func=fn)
        return sp

    s = add("simulate", cmd_simulate, "sample a path and write the binary dump")
    s.add_argument("--kappa-prime", type=float, dest="kappa_prime")
    s.add_argument("--origin", type=int, default=0)

    d = add("detect", cmd_detect, "emit a detected time set (or range gaps)")
    d.add_argument("--set", required=True, choices=SET_KINDS)
    d.add_argument("--kappa-prime", type=float, dest="kappa_prime")
    d.add_argument("--path", help="read a binary path dump instead of sampling")
    d.add_argument("--runs", action="store_true", help="csv output as start,end runs")
    d.add_argument("--m", type=int)
    d.add_argument("--alpha", type=float)
    d.add_argument("--burn-in", type=float, dest="burn_in")

    e = add("estimate", cmd_estimate, "replicated dimension estimate with pooled report")
    e.add_argument("--set", required=True, choices=SET_KINDS)
    e.add_argument("--kappa-prime", type=float, dest="kappa_prime")
    e.add_argument("--m", type=int)
    e.add_argument("--tol", type=float)
    e.add_argument("--delta-fraction", type=float, dest="delta_fraction")
    e.add_argument("--alpha", type=float)
    e.add_argument("--alpha1", type=float)
    e.add_argument("--alpha2", type=float)
    e.add_argument("--n-jumps", type=float, dest="n_jumps")
    e.add_argument("--tolerance", type=float)
    e.add_argument("--n-scales", type=int, dest="n_scales")
    e.add_argument("--coarsest-fraction", type=float, dest="coarsest_fraction")
    e.add_argument("--finest-multiple", type=float, dest="finest_multiple")

    v = add("verify-table", cmd_verify_table, "check the dimension table")
    v.add_argument("--kappa-prime", required=True, help="comma-separated list")
    v.add_argument("--monte-carlo", action="store_true",
                   help="also estimate every implementable row by simulation")

    m = add("mate", cmd_mate, "emit the mated-CRT map edge list")
    m.add_argument("--kappa-prime", type=float, dest="kappa_prime")
    m.add_argument("--cell-steps", type=int, default=1)
    m.add_argument("--path", help="read a binary path dump instead of sampling")
    m.add_argument("--adjacency", action="store_true", help="adjacency lists instead of edges")

    c = add("compose-ranges", cmd_compose, "composed subordinator range")
    c.add_argument("--alpha1", type=float, required=True)
    c.add_argument("--alpha2", type=float, required=True)
    c.add_argument("--n-jumps", type=float, dest="n_jumps")
    c.add_argument("--gaps", action="store_true", help="emit gap_start,gap_end pairs of replicate 0")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
