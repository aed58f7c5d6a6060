"""Command line front end: ``run``, ``sweep`` and ``compare``.

Exit codes: 0 on success, 2 for invalid configuration or arguments, 3 for
failures while simulating or writing results. The log level is read from
the ``NOMASCHED_LOG`` environment variable (default ``WARNING``).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, config_to_dict, load_config
from .engine import ExperimentConfig, ExperimentResult, run_comparison, run_experiment
from .sched import SchedulerKind

__all__ = ["OUTPUT_COLUMNS", "SCHEMA_VERSION", "cmd_run", "cmd_sweep", "cmd_compare", "main"]

SCHEMA_VERSION = 1
OUTPUT_COLUMNS = ("experiment", "scheduler", "K", "S", "drops", "metric", "value", "unit")
EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

log = logging.getLogger("nomasched")


def _fmt(x) -> str:
    # 17 significant digits round-trip any double
    return format(float(x), ".17g")


def _json_safe(x):
    if isinstance(x, dict):
        return {str(k): _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    if isinstance(x, np.ndarray):
        return _json_safe(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x) if math.isfinite(x) else None
    if isinstance(x, SchedulerKind):
        return x.value
    return x


def metric_rows(experiment: str, result: ExperimentResult) -> list[tuple]:
    """Flatten an aggregate report into one row per metric."""
    rep = result.report
    cfg = result.config
    head = (experiment, rep.kind.value, cfg.num_users, cfg.geometry.num_subbands, rep.num_drops)
    items = [
        ("system_throughput", rep.system_throughput_bps, "bps"),
        ("gini_long", rep.gini_long, "1"),
        ("cell_edge_throughput", rep.cell_edge_bps, "bps"),
        ("service_utility", rep.service_utility, "ln(bps)"),
        ("gini_short_final", rep.gini_short_per_slot[-1], "1"),
        ("rate_latency_max", rep.rate_latency_slots.max(), "slots"),
    ]
    for name, g in rep.per_group.items():
        items += [
            (f"group_rate[{name}]", g["group_rate_bps"], "bps"),
            (f"group_gini[{name}]", g["gini"], "1"),
            (f"group_success_fraction[{name}]", g["success_fraction"], "1"),
        ]
    if rep.ratio1 is not None:
        items += [("ratio1", rep.ratio1, "1"), ("ratio2", rep.ratio2, "1")]
    return [head + (m, _fmt(v), u) for m, v, u in items]


def report_dict(result: ExperimentResult) -> dict:
    rep = result.report
    return _json_safe({
        "scheduler": rep.kind.value,
        "num_drops": rep.num_drops,
        "system_throughput_bps": rep.system_throughput_bps,
        "gini_long": rep.gini_long,
        "cell_edge_bps": rep.cell_edge_bps,
        "service_utility": rep.service_utility,
        "gini_short_per_slot": rep.gini_short_per_slot,
        "system_throughput_per_drop": rep.system_throughput_per_drop,
        "gini_long_per_drop": rep.gini_long_per_drop,
        "service_utility_per_drop": rep.service_utility_per_drop,
        "rate_latency_slots": rep.rate_latency_slots,
        "per_group": rep.per_group,
        "ratio1": rep.ratio1,
        "ratio2": rep.ratio2,
    })


def _write_csv(path: Path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _write_json(path: Path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _rate_rows(result: ExperimentResult):
    kind = result.kind.value
    for lg in result.logs:
        for k in range(lg.user_rates.shape[1]):
            for t, r in enumerate(lg.user_rates[:, k], start=1):
                yield (kind, lg.drop_index, k, t, _fmt(r))


def _gini_rows(result: ExperimentResult):
    for t, g in enumerate(result.report.gini_short_per_slot, start=1):
        yield (result.kind.value, t, _fmt(g))


def _emit(out_dir: Path, experiments, config: ExperimentConfig, extra=None) -> list[Path]:
    """Write metrics.csv, summary.json, user_rates.csv and gini_short.csv."""
    out_dir.mkdir(parents=True, exist_ok=True)
    rows, rates, ginis, reports = [], [], [], []
    for exp_id, res in experiments:
        rows += metric_rows(exp_id, res)
        rates += [(exp_id,) + r for r in _rate_rows(res)]
        ginis += [(exp_id,) + r for r in _gini_rows(res)]
        reports.append({"experiment": exp_id, "K": res.config.num_users,
                        "S": res.config.geometry.num_subbands, **report_dict(res)})
    paths = [out_dir / n for n in ("metrics.csv", "summary.json", "user_rates.csv", "gini_short.csv")]
    _write_csv(paths[0], OUTPUT_COLUMNS, rows)
    summary = {"schema_version": SCHEMA_VERSION, "config": config_to_dict(config),
               "experiments": reports}
    if extra:
        summary.update(_json_safe(extra))
    _write_json(paths[1], summary)
    _write_csv(paths[2], ("experiment", "scheduler", "drop", "user", "slot", "rate_bps"), rates)
    _write_csv(paths[3], ("experiment", "scheduler", "slot", "gini"), ginis)
    return paths


def cmd_run(config: ExperimentConfig, out_dir) -> list[Path]:
    """Run every scheduler listed in the config and write the result files."""
    exps = [("run", run_experiment(config, kind)) for kind in config.schedulers]
    return _emit(Path(out_dir), exps, config)


def _axis_value(axis: str, text):
    if axis in ("K", "S"):
        try:
            return int(text)
        except (TypeError, ValueError):
            raise ConfigError(f"values: {text!r} is not an integer") from None
    return SchedulerKind.parse(text)


def cmd_sweep(config: ExperimentConfig, axis: str, values, out_dir) -> list[Path]:
    """One experiment per axis value (and per scheduler), merged into one table."""
    if axis not in ("K", "S", "scheduler"):
        raise ConfigError(f"axis: expected K, S or scheduler, got {axis!r}")
    values = [_axis_value(axis, v) for v in values]
    if not values:
        raise ConfigError("values: at least one value is required")
    exps = []
    for v in values:
        if axis == "K":
            cfg, kinds = config.with_(num_users=v), config.schedulers
        elif axis == "S":
            cfg, kinds = config.with_(num_subbands=v), config.schedulers
        else:
            cfg, kinds = config, (v,)
        label = f"{axis}={v.value if isinstance(v, SchedulerKind) else v}"
        for kind in kinds:
            exps.append((label, run_experiment(cfg, kind)))
    return _emit(Path(out_dir), exps, config, {"sweep": {"axis": axis, "values": [str(v) for v in values]}})


def cmd_compare(config: ExperimentConfig, kind_a, kind_b, out_dir) -> list[Path]:
    """Paired run of two schedulers plus the scheduling-probability ratios."""
    comp = run_comparison(config, kind_a, kind_b)
    r = comp.ratios
    extra = {"comparison": {
        "a": comp.a.kind.value, "b": comp.b.kind.value,
        "ratio1": r.ratio1, "ratio2": r.ratio2,
        "ratio1_per_drop": r.ratio1_per_drop, "ratio2_per_drop": r.ratio2_per_drop,
        "excluded": [list(e) for e in r.excluded],
    }}
    return _emit(Path(out_dir), [("compare", comp.a), ("compare", comp.b)], config, extra)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nomasched", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the configured scheduler(s)")
    run.add_argument("--config", required=True)
    run.add_argument("--out", required=True)
    sw = sub.add_parser("sweep", help="sweep K, S or the scheduler")
    sw.add_argument("--config", required=True)
    sw.add_argument("--axis", required=True, choices=("K", "S", "scheduler"))
    sw.add_argument("--values", required=True, help="comma separated, e.g. 5,10,15")
    sw.add_argument("--out", required=True)
    cp = sub.add_parser("compare", help="paired comparison of two schedulers")
    cp.add_argument("--config", required=True)
    cp.add_argument("--a", required=True)
    cp.add_argument("--b", required=True)
    cp.add_argument("--out", required=True)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("NOMASCHED_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = _parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if args.command == "compare":
            kinds = SchedulerKind.parse(args.a), SchedulerKind.parse(args.b)
        elif args.command == "sweep":
            values = [v for v in args.values.split(",") if v.strip()]
            values = [_axis_value(args.axis, v.strip()) for v in values]
    except OSError as exc:
        print(f"error: cannot read config {args.config}: {exc.strerror}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "run":
            paths = cmd_run(config, args.out)
        elif args.command == "sweep":
            paths = cmd_sweep(config, args.axis, values, args.out)
        else:
            paths = cmd_compare(config, *kinds, args.out)
    except OSError as exc:
        print(f"error: {exc.filename or args.out}: {exc.strerror}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for path in paths:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
