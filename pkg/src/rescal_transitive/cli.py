"""Command line entry point: ``rescal-transitive <command> ...``.

Data goes to files and standard output; progress and warnings go to
standard error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import theory
from .config import ConfigError, ExperimentConfig, config_hash, load_experiment_config
from .evaluation import (CellFailure, EvalReport, aggregate_runs, evaluate_all, pretty_table,
                         render_table)
from .graph import (build_complete_binary_tree, edge_partitions, export_edge_list, ingest_edge_list,
                    transitive_closure)
from .model import difference_matrix, load_model, save_model
from .training import train

_logger = logging.getLogger("rescal_transitive")


def _tree_partitions(depth: int):
    return edge_partitions(transitive_closure(build_complete_binary_tree(depth)))


def _file_partitions(path):
    graph, _ = ingest_edge_list(path)
    return edge_partitions(transitive_closure(graph))


def cmd_gen_tree(args) -> int:
    closed = transitive_closure(build_complete_binary_tree(args.depth))
    parts = edge_partitions(closed)
    try:
        export_edge_list(closed, args.out)
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
        return 1
    print(f"V={parts.num_vertices}")
    print(f"|E|={parts.num_e}")
    print(f"|E^c|={parts.num_ec}")
    return 0


def _sources(config: ExperimentConfig):
    """(V, partitions) for each configured data source, in config order."""
    for depth in config.depths:
        parts = _tree_partitions(depth)
        yield parts.num_vertices, f"depth={depth}", parts
    if config.edges:
        parts = _file_partitions(config.edges)
        yield parts.num_vertices, f"edges={config.edges}", parts


def _cell_name(mode, V, d, seed):
    return f"{mode}_V{V}_d{d}_seed{seed}"


def _run_cell(parts, config, mode, d, seed):
    train_config = config.train_config(d, mode, seed)
    model = train(parts, train_config)
    report = evaluate_all(model, parts, ec_cap=config.ec_cap, seed=seed,
                          config=train_config.as_dict())
    history = model.meta.get("loss_history") or model.meta.get("epoch_losses") or []
    return model, report, history


def cmd_run(args) -> int:
    try:
        config = load_experiment_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.out is not None:
        config.out = args.out
    if args.seed is not None:
        config.seed = args.seed
    digest = config_hash(config)
    out = Path(config.out)
    (out / "cells").mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(
        json.dumps({"config_hash": digest, "config": config.as_dict()}, indent=2, sort_keys=True) + "\n",
        encoding="utf-8")

    summaries = {}
    v_values = []
    failures = 0
    for V, label, parts in _sources(config):
        v_values.append(V)
        for mode in config.modes:
            for d in config.d_values:
                reports = []
                failed = None
                for seed in config.seeds():
                    name = _cell_name(mode, V, d, seed)
                    print(f"[run] {label} {name}", file=sys.stderr)
                    record = {"config_hash": digest, "seed": seed, "source": label,
                              "mode": mode, "V": V, "d": d}
                    try:
                        model, report, history = _run_cell(parts, config, mode, d, seed)
                    except Exception as exc:  # a bad cell must not stop the sweep
                        _logger.error("cell %s failed: %s", name, exc)
                        failed = CellFailure(f"{type(exc).__name__}: {exc}")
                        record["error"] = failed.message
                    else:
                        reports.append(report)
                        record["report"] = report.to_dict()
                        record["objective_history"] = [float(x) for x in history]
                        if args.save_models:
                            model.meta["config_hash"] = digest
                            save_model(model, out / "cells" / f"{name}.npz")
                    (out / "cells" / f"{name}.json").write_text(
                        json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8")
                if failed is not None:
                    failures += 1
                    summaries[(mode, V, d)] = failed
                else:
                    summaries[(mode, V, d)] = aggregate_runs(reports)

    csv_text = render_table(summaries, config.d_values, v_values, config.modes,
                            extra={"config_hash": digest, "seed_base": config.seed})
    (out / "results.csv").write_text(csv_text, encoding="utf-8")
    tables = "".join(pretty_table(summaries, config.d_values, v_values, mode) + "\n"
                     for mode in config.modes)
    (out / "tables.txt").write_text(f"config_hash={digest} seed_base={config.seed}\n\n" + tables,
                                    encoding="utf-8")
    sys.stdout.write(tables)
    if failures:
        print(f"error: {failures} cell(s) failed; see {out / 'results.csv'}", file=sys.stderr)
        return 1
    return 0


def cmd_eval(args) -> int:
    try:
        model = load_model(args.model)
        parts = _tree_partitions(args.depth) if args.depth is not None else _file_partitions(args.edges)
        report = evaluate_all(model, parts, ec_cap=args.ec_cap, seed=args.seed)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    text = json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0


def cmd_check_matrix(args) -> int:
    try:
        if args.matrix is not None:
            M = theory.read_matrix(args.matrix)
        else:
            M = difference_matrix(load_model(args.model))
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    defect = theory.symmetry_defect(M)
    print(f"symmetry_defect: {defect:.6g}")
    if defect <= args.tol:
        print("symmetric: no witness attempted")
        return 0

    ok = True
    sampled = theory.sampled_transitivity_check(M, args.samples, args.tol, args.seed)
    if sampled is None:
        print(f"sampled_check: no violation in {args.samples} triples")
    else:
        verified = sampled.verify(M, args.tol)
        ok &= verified
        print(f"sampled_check: violation found (verified={verified})")
    try:
        witness = theory.transitivity_violation_witness(M, args.tol, args.seed)
    except theory.WitnessSearchError as exc:
        print(f"witness: none ({exc})")
        return 1
    verified = witness.verify(M, args.tol)
    ok &= verified
    print(theory.format_witness(witness))
    print(f"witness_verified: {verified}")
    return 0 if ok else 1


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    records = []
    for path in sorted((run_dir / "cells").glob("*.json")):
        records.append(json.loads(path.read_text(encoding="utf-8")))
    if not records:
        print(f"error: no cell reports under {run_dir / 'cells'}", file=sys.stderr)
        return 1
    grouped = {}
    for rec in records:
        grouped.setdefault((rec["mode"], rec["V"], rec["d"]), []).append(rec)
    summaries = {}
    for key, recs in grouped.items():
        errors = [r["error"] for r in recs if "error" in r]
        if errors:
            summaries[key] = CellFailure(errors[0])
        else:
            reports = [EvalReport.from_dict(r["report"]) for r in sorted(recs, key=lambda r: r["seed"])]
            summaries[key] = aggregate_runs(reports)
    modes = sorted({k[0] for k in summaries})
    d_values = sorted({k[2] for k in summaries})
    v_values = sorted({k[1] for k in summaries})
    extra = {}
    hashes = sorted({r["config_hash"] for r in records})
    if len(hashes) == 1:
        extra["config_hash"] = hashes[0]
    sys.stdout.write(render_table(summaries, d_values, v_values, modes, extra))
    for mode in modes:
        sys.stdout.write("\n" + pretty_table(summaries, d_values, v_values, mode))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rescal-transitive",
                                     description="RESCAL on transitive tree relations")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-tree", help="write the closed complete binary tree as an edge list")
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_tree)

    p = sub.add_parser("run", help="train and evaluate every cell of a config sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("--seed", type=int, help="seed base (overrides the config)")
    p.add_argument("--deterministic", action="store_true",
                   help="run cells serially in config order (the only schedule implemented)")
    p.add_argument("--save-models", action="store_true", help="also write each trained model")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="evaluate a saved model")
    p.add_argument("--model", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--depth", type=int)
    src.add_argument("--edges")
    p.add_argument("--seed", type=int, default=0, help="seed for sampling E^c above the cap")
    p.add_argument("--ec-cap", type=int, default=10_000_000)
    p.add_argument("--out", help="also write the JSON report here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("check-matrix", help="symmetry defect and transitivity witness")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--matrix", help="whitespace-separated square matrix")
    src.add_argument("--model", help="saved model; checks M_r1 - M_r0")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--tol", type=float, default=theory.DEFAULT_TOL)
    p.set_defaults(func=cmd_check_matrix)

    p = sub.add_parser("report", help="re-aggregate the cell reports of a run directory")
    p.add_argument("--run-dir", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
