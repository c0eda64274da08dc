"""Command-line front end.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from . import analysis
from .config import builtin_config, load_grid_config
from .dataset import DatasetError, load_dataset, write_dataset
from .engine import run_grid
from .exceptions import ConfigurationError, DomainError

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2
OUT_ENV = "ORGSIM_OUT"
FIGURES = ("fig2", "fig3", "fig4")
DESK_REPLICATIONS = 200
FIGURE_SCOPES = {
    "fig2": [["alpha", "tau_mode", "K_kind"]],
    "fig3": [["alpha", "tau_mode", "K_kind", "t"], ["alpha", "tau_mode", "K_kind", "pair_prob"]],
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _default_out() -> str | None:
    return os.environ.get(OUT_ENV)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="orgsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check a grid config file")
    p.add_argument("--config", required=True)

    p = sub.add_parser("run", help="execute a grid and write the dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=_default_out())
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, help="override master_seed")
    p.add_argument("--s-override", type=int, dest="s_override", help="override replications")

    p = sub.add_parser("analyze", help="compute analysis tables from a dataset")
    p.add_argument("--data", required=True, help="dataset directory (with manifest.json)")
    p.add_argument("--out", help="output directory (default: <data>/analysis)")
    p.add_argument("--figure", choices=FIGURES + ("all",))
    p.add_argument("--scope", help="comma-separated grid variables for a custom partial dependence")
    p.add_argument("--bootstrap", type=int, default=1000)

    p = sub.add_parser("reproduce-figure", help="run a desk-scale grid and analyze one figure")
    p.add_argument("--figure", required=True, choices=FIGURES)
    p.add_argument("--config", help="grid config (default: built-in full grid)")
    p.add_argument("--out", default=_default_out())
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--s-override", type=int, dest="s_override", default=DESK_REPLICATIONS)
    return parser


def _load_config(path):
    return builtin_config("full") if path is None else load_grid_config(path)


def cmd_validate(args) -> int:
    cfg = load_grid_config(args.config)
    cells = cfg.cells()
    dims = f"{len(cfg.kinds)} kinds x {len(cfg.pair_probs)} pair_prob x {len(cfg.alphas)} alpha x {len(cfg.taus)} tau"
    print(f"{args.config}: valid, {len(cells)} grid cells ({dims}), {cfg.replications} replications each")
    return EXIT_OK


def _execute(cfg, out, jobs) -> int:
    if out is None:
        raise UsageError(f"--out is required (or set {OUT_ENV})")
    cells = cfg.cells()
    total = cfg.replications

    def progress(r):
        print(f"  replication {r + 1}/{total} finished for all {len(cells)} cells", file=sys.stderr)

    print(f"running {len(cells)} cells x {total} replications, jobs={jobs}", file=sys.stderr)
    result = run_grid(cells, n_jobs=jobs, progress=progress)
    manifest = write_dataset(result, out, cfg)
    failed = {}
    for f in result.failures:
        failed[f.config_id] = failed.get(f.config_id, 0) + 1
    for c in cells:
        bad = failed.get(c.config_id, 0)
        print(f"cell {c.config_id} {c.k_label} alpha={c.alpha} P={c.pair_prob} tau={c.tau_label}: "
              f"{c.replications - bad} ok, {bad} failed")
    print(f"wrote {manifest['rows']} records to {out} (manifest {manifest['manifest_hash'][:12]})")
    return EXIT_OK if result.complete else EXIT_RUNTIME


def cmd_run(args) -> int:
    cfg = _load_config(args.config).with_overrides(args.seed, args.s_override)
    return _execute(cfg, args.out, args.jobs)


def _scope_name(scope) -> str:
    return "_".join(scope)


def analyze_dataset(data_dir, out_dir=None, figure=None, scope=None, n_boot=1000) -> list[Path]:
    records, transfers, manifest = load_dataset(data_dir)
    out = Path(out_dir) if out_dir else Path(data_dir) / "analysis"
    out.mkdir(parents=True, exist_ok=True)
    written = []
    seed = manifest["master_seed"]

    def pd_table(sc, name=None):
        table = analysis.partial_dependence(records, sc, n_boot=n_boot, seed=seed)
        path = out / f"pd_{name or sc[-1]}.csv"
        table.to_csv(path, index=False)
        written.append(path)

    figures = FIGURES if figure == "all" else ((figure,) if figure else ())
    for fig in figures:
        for sc in FIGURE_SCOPES.get(fig, []):
            pd_table(sc)
        if fig == "fig4":
            emergent = records[records["tau_mode"] != "none"]
            cdf = analysis.efficiency_cdf(emergent if len(emergent) else records, ("alpha", "K_kind"))
            path = out / "eff_cdf.csv"
            cdf.to_csv(path, index=False)
            written.append(path)
    if scope:
        pd_table(scope, _scope_name(scope))
    summary = analysis.summarize(records, n_boot=n_boot, seed=seed)
    path = out / "summary.csv"
    summary.to_csv(path, index=False)
    written.append(path)
    (out / "analysis.json").write_text(json.dumps({
        "manifest_hash": manifest["manifest_hash"],
        "dataset": str(Path(data_dir).resolve()),
        "outputs": sorted(p.name for p in written),
    }, indent=2) + "\n")
    return written


def cmd_analyze(args) -> int:
    scope = [s.strip() for s in args.scope.split(",")] if args.scope else None
    if not args.figure and not scope:
        raise UsageError("analyze needs --figure or --scope")
    for path in analyze_dataset(args.data, args.out, args.figure, scope, args.bootstrap):
        print(path)
    return EXIT_OK


def cmd_reproduce(args) -> int:
    cfg = _load_config(args.config).with_overrides(args.seed, args.s_override)
    if args.figure == "fig4":
        taus = tuple(t for t in cfg.taus if t is not None) or cfg.taus
        cfg = dataclasses.replace(cfg, taus=taus)
    out = args.out
    if out is None:
        raise UsageError(f"--out is required (or set {OUT_ENV})")
    data_dir = Path(out) / "data"
    status = _execute(cfg, data_dir, args.jobs)
    for path in analyze_dataset(data_dir, Path(out) / args.figure, args.figure):
        print(path)
    return status


COMMANDS = {"validate": cmd_validate, "run": cmd_run, "analyze": cmd_analyze, "reproduce-figure": cmd_reproduce}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigurationError, DomainError, DatasetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
