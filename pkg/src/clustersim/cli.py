"""Command line entry point: run, compare and validate-data."""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import __version__
from .config import INPUT_KEYS, ConfigError, ScenarioConfig, load_config, tomllib
from .engine import RunResult, run_scenario
from .geodata import GeometryError
from .metrics import compare_runs, movement_drop, write_comparison_csv, write_metrics_csv
from .population import DataError, bundled_paths
from .validate import validate_data

BUNDLED_SCENARIO = Path(__file__).with_name("data") / "scenarios" / "india.toml"


def _sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def parse_seeds(text: str) -> list[int]:
    """'3' -> [3]; '0-4' -> [0..4]; '1,5,9' -> [1, 5, 9]."""
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            a, b = int(lo), int(hi)
            if b < a:
                raise ValueError(f"bad seed range {part!r}")
            seeds.extend(range(a, b + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise ValueError("empty seed list")
    return seeds


def _override_value(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def build_config(args) -> ScenarioConfig:
    cfg = load_config(args.config) if args.config else load_config(BUNDLED_SCENARIO)
    changes = {}
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key = key.strip()
        if key.startswith("inputs."):
            sub = key.split(".", 1)[1]
            if sub not in INPUT_KEYS:
                raise ConfigError(f"unknown input key {sub!r}")
            changes.setdefault("inputs", dict(cfg.inputs))[sub] = value.strip()
            continue
        if key not in cfg.to_dict():
            raise ConfigError(f"unknown config key {key!r}")
        val = _override_value(value.strip())
        if key == "lockdown_day" and val in ("none", "None", False, -1):
            val = None
        changes[key] = val
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if args.horizon is not None:
        changes["horizon_days"] = args.horizon
    if args.snapshot_days is not None:
        changes["snapshot_days"] = tuple(int(d) for d in args.snapshot_days.split(",") if d)
    if "snapshot_days" in changes:
        changes["snapshot_days"] = tuple(changes["snapshot_days"])
    try:
        return cfg.replace(**changes) if changes else cfg
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def manifest(config: ScenarioConfig) -> dict:
    return {
        "version": __version__,
        "seed": config.seed,
        "config": config.to_dict(),
        "inputs_sha256": {k: _sha256(config.inputs[k]) for k in INPUT_KEYS},
    }


def write_run(result: RunResult, config: ScenarioConfig, out_dir: Path) -> Path:
    """Write metrics.csv, snapshot_dayNNN.csv files and manifest.json."""
    out_dir.mkdir(parents=True, exist_ok=True)
    write_metrics_csv(out_dir / "metrics.csv", result.metrics)
    for day, snap in sorted(result.snapshots.items()):
        snap.write_csv(out_dir / f"snapshot_day{day:03d}.csv")
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest(config), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out_dir


def cmd_run(args) -> int:
    cfg = build_config(args)
    dataset = cfg.load_dataset()
    result = run_scenario(cfg, dataset, threads=args.threads)
    path = write_run(result, cfg, Path(args.out) / cfg.name / str(cfg.seed))
    last = result.metrics[-1]
    print(f"{cfg.name} seed {cfg.seed}: day {last.day} infected {last.infected_clusters} "
          f"({last.high_risk_fraction:.2%}) -> {path}")
    return 0


def cmd_compare(args) -> int:
    cfg = build_config(args)
    if cfg.lockdown_day is None:
        raise ConfigError("compare needs a config with a lockdown_day")
    seeds = parse_seeds(args.seeds) if args.seeds else [cfg.seed]
    dataset = cfg.load_dataset()
    total = sum(r.cluster_quota for r in dataset.records)
    out = Path(args.out)
    before, after = cfg.lockdown_day - 1, cfg.lockdown_day + 1
    summary = ["seed,lockdown_final_infected,no_lockdown_final_infected,final_ratio,"
               "plateau_day,movement_drop"]
    for seed in seeds:
        lock = cfg.replace(seed=seed, name=f"{cfg.name}_lockdown")
        free = cfg.replace(seed=seed, name=f"{cfg.name}_no_lockdown", lockdown_day=None)
        a = run_scenario(lock, dataset, threads=args.threads)
        b = run_scenario(free, dataset, threads=args.threads)
        write_run(a, lock, out / lock.name / str(seed))
        write_run(b, free, out / free.name / str(seed))
        comp = compare_runs(a.metrics, b.metrics, total_clusters=total,
                            plateau_fraction=cfg.plateau_fraction)
        cdir = out / f"{cfg.name}_compare" / str(seed)
        cdir.mkdir(parents=True, exist_ok=True)
        write_comparison_csv(cdir / "comparison.csv", comp)
        drop = (movement_drop(a.metrics, before, after)
                if after <= cfg.horizon_days and before >= 0 else float("nan"))
        plateau = "" if comp.plateau_day is None else str(comp.plateau_day)
        row = (f"{seed},{a.metrics[-1].infected_clusters},{b.metrics[-1].infected_clusters},"
               f"{comp.final_ratio:.6f},{plateau},{drop:.6f}")
        summary.append(row)
        print(row)
    sdir = out / f"{cfg.name}_compare"
    sdir.mkdir(parents=True, exist_ok=True)
    (sdir / "summary.csv").write_text("\n".join(summary) + "\n")
    return 0


def cmd_validate(args) -> int:
    paths = {k: str(v) for k, v in bundled_paths().items()}
    if args.config:
        paths = dict(load_config(args.config).inputs)
    for key in INPUT_KEYS:
        if getattr(args, key):
            paths[key] = getattr(args, key)
    expected = {"expected_clusters": None, "expected_infected": None} if args.no_totals else {}
    checks = validate_data(**paths, **expected)
    for c in checks:
        print(c.line())
    failed = [c for c in checks if not c.ok]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return 1 if failed else 0


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="clustersim", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def scenario_args(sp):
        sp.add_argument("--config", help="scenario TOML (default: bundled India scenario)")
        sp.add_argument("--out", default="out", help="output root (default: %(default)s)")
        sp.add_argument("--threads", type=int, default=1,
                        help="worker threads for contact detection")
        sp.add_argument("--horizon", type=int, help="override horizon_days")
        sp.add_argument("--snapshot-days", help="comma-separated days, e.g. 5,15,25")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override any config key (TOML value syntax); repeatable")

    run = sub.add_parser("run", help="run one scenario for one seed")
    scenario_args(run)
    run.add_argument("--seed", type=int)
    run.set_defaults(func=cmd_run)

    cmp_ = sub.add_parser("compare", help="lockdown vs no-lockdown over seeds")
    scenario_args(cmp_)
    cmp_.add_argument("--seeds", help="e.g. 0-9 or 1,2,3 (default: config seed)")
    cmp_.set_defaults(func=cmd_compare)

    val = sub.add_parser("validate-data", help="check input tables and geometry")
    val.add_argument("--config", help="take input paths from this scenario TOML")
    for key in INPUT_KEYS:
        val.add_argument(f"--{key.replace('_', '-')}", dest=key, help=f"{key} file")
    val.add_argument("--no-totals", action="store_true",
                     help="skip the bundled 29,918 / 258 total checks")
    val.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ConfigError, DataError, GeometryError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
