"""Batch experiment harness: JSON configs in, CSV/JSON result bundles out.

Verbs: ``run <config.json>``, ``compare <dirA> <dirB>``, ``presets list``,
``presets emit <name>``.  Exit codes: 0 success, 2 invalid config (with a
machine-readable error object on stderr), 3 numerical infeasibility.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import scaling
from .dynsys import SystemSpec
from .entropy import append_estimates_csv
from .errors import InfeasibleError, OrbentError, ParameterError
from .semimetric import Semimetric
from .scaling import SCALING_CSV_HEADER

WORKERS_ENV = "ORBENT_WORKERS"
OUTPUT_DIR_ENV = "ORBENT_OUTPUT_DIR"

METHODS = ("Covering", "Kantorovich")


class ConfigError(ParameterError):
    """Invalid experiment configuration; remembers the offending field."""

    def __init__(self, field: str, message: str):
        super().__init__(message)
        self.field = field


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemSpec
    metric: Semimetric
    eps_grid: tuple[float, ...]
    n_schedule: tuple[int, ...]
    m: int
    seeds: tuple[int, ...]
    method: str
    output_dir: str

    def to_json(self) -> dict:
        return {
            "system": self.system.to_json(),
            "metric": self.metric.to_json(),
            "eps_grid": list(self.eps_grid),
            "n_schedule": list(self.n_schedule),
            "m": self.m,
            "seeds": list(self.seeds),
            "method": self.method,
            "output_dir": self.output_dir,
        }


def parse_config(obj: dict) -> ExperimentConfig:
    """Validate a raw config object; errors name the offending field."""
    if not isinstance(obj, dict):
        raise ConfigError("config", "config must be a JSON object")
    required = ("system", "metric", "eps_grid", "n_schedule", "m", "seeds",
                "method", "output_dir")
    for key in required:
        if key not in obj:
            raise ConfigError(key, f"missing required field {key!r}")
    try:
        system = SystemSpec.from_json(obj["system"])
    except (OrbentError, KeyError, TypeError) as exc:
        raise ConfigError("system", f"invalid system: {exc}") from exc
    try:
        metric = Semimetric.from_json(obj["metric"])
    except (OrbentError, KeyError, TypeError) as exc:
        raise ConfigError("metric", f"invalid metric: {exc}") from exc

    eps_grid = obj["eps_grid"]
    if not isinstance(eps_grid, list) or not eps_grid:
        raise ConfigError("eps_grid", "eps_grid must be a nonempty list")
    try:
        eps_grid = tuple(float(e) for e in eps_grid)
    except (TypeError, ValueError) as exc:
        raise ConfigError("eps_grid", "eps_grid entries must be numbers") from exc
    if any(not (e > 0) for e in eps_grid):
        raise ConfigError("eps_grid", "eps values must be positive")

    schedule = obj["n_schedule"]
    if not isinstance(schedule, list) or not schedule:
        raise ConfigError("n_schedule", "n_schedule must be a nonempty list")
    try:
        schedule = tuple(int(n) for n in schedule)
    except (TypeError, ValueError) as exc:
        raise ConfigError("n_schedule", "n_schedule entries must be integers") from exc
    if any(n < 1 for n in schedule):
        raise ConfigError("n_schedule", "n_schedule entries must be >= 1")
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ConfigError("n_schedule", "n_schedule must be strictly increasing")

    try:
        m = int(obj["m"])
    except (TypeError, ValueError) as exc:
        raise ConfigError("m", "m must be an integer") from exc
    if m < 2:
        raise ConfigError("m", "m must be >= 2")

    seeds = obj["seeds"]
    if not isinstance(seeds, list) or not seeds:
        raise ConfigError("seeds", "seeds must be a nonempty list")
    try:
        seeds = tuple(int(s) for s in seeds)
    except (TypeError, ValueError) as exc:
        raise ConfigError("seeds", "seeds entries must be integers") from exc

    method = str(obj["method"]).strip().capitalize()
    if method not in METHODS:
        raise ConfigError("method", f"method must be one of {METHODS}")

    output_dir = obj["output_dir"]
    if not isinstance(output_dir, str) or not output_dir:
        raise ConfigError("output_dir", "output_dir must be a nonempty path")

    # shift systems: make the symbol window cover the whole schedule
    if system.is_symbolic:
        needed = max(schedule) + metric.symbol_horizon() + 1
        if system.horizon < needed:
            system = system.with_horizon(needed)

    return ExperimentConfig(
        system=system, metric=metric, eps_grid=eps_grid, n_schedule=schedule,
        m=m, seeds=seeds, method=method, output_dir=output_dir,
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError("config", f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"config is not valid JSON: {exc}") from exc
    return parse_config(obj)


# ---------------------------------------------------------------------------
# experiment runner


def _dump_json(path: Path, obj: dict) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_experiment(config: ExperimentConfig, workers: Optional[int] = None) -> dict:
    """Run the full pipeline and write the result bundle to output_dir.

    Returns a dict of written paths.  Outputs are byte-identical for
    identical configs regardless of the worker count.
    """
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    workers = workers or 1

    def seed_job(seed: int):
        return scaling.profile_cells(
            config.system, config.metric, config.n_schedule, config.m, [seed],
            config.eps_grid, config.method,
        )

    cells: dict = {}
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(seed_job, config.seeds):
                cells.update(part)
    else:
        for seed in config.seeds:
            cells.update(seed_job(seed))

    profiles = [
        scaling.assemble_profile(
            config.system, config.metric, config.method, eps,
            config.n_schedule, config.seeds, cells,
        )
        for eps in config.eps_grid
    ]
    verdict = scaling.discreteness_verdict(profiles) if len(set(config.eps_grid)) >= 2 else None

    # admissibility diagnostics: base metric and the largest-n average
    from . import admit  # local import to keep module load light

    diag_eps = min(config.eps_grid)
    base_report = admit.admissibility_report(
        config.system, config.metric, m=min(config.m, 1024), seed=config.seeds[0],
        eps=diag_eps, c=0.4,
    )
    min_eps_profile = min(profiles, key=lambda p: p.eps)
    limit_report = scaling.limit_metric_check(
        config.system, config.metric, n_big=max(config.n_schedule), m=config.m,
        seeds=config.seeds, eps=diag_eps, c=0.4,
        profile_class=min_eps_profile.growth_class,
    )

    paths = {
        "config": out / "config.json",
        "rows": out / "rows.csv",
        "estimates": out / "estimates.csv",
        "profile": out / "profile.json",
        "verdict": out / "verdict.json",
        "admissibility": out / "admissibility.json",
    }

    _dump_json(paths["config"], config.to_json())

    system_label = config.system.label()
    metric_label = config.metric.label()
    with open(paths["rows"], "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SCALING_CSV_HEADER)
        for eps in config.eps_grid:
            for n in config.n_schedule:
                for seed in config.seeds:
                    est = cells[(float(eps), int(n), int(seed))]
                    writer.writerow([
                        system_label, metric_label, f"{eps:.17g}", n, seed,
                        config.method, f"{est.value_bits:.17g}",
                    ])

    if paths["estimates"].exists():
        paths["estimates"].unlink()
    append_estimates_csv(
        paths["estimates"],
        [
            (system_label, metric_label, n, cells[(float(eps), int(n), int(seed))])
            for eps in config.eps_grid
            for n in config.n_schedule
            for seed in config.seeds
        ],
    )

    _dump_json(paths["profile"], {"profiles": [p.to_json() for p in profiles]})
    _dump_json(
        paths["verdict"],
        verdict.to_json() if verdict is not None else
        {"verdict": "Undetermined", "basis": "needs >= 2 eps values", "per_eps": {}},
    )
    _dump_json(paths["admissibility"], {
        "base": base_report.to_json(),
        "averaged": limit_report.to_json(),
    })
    return {name: str(path) for name, path in paths.items()}


# ---------------------------------------------------------------------------
# bundle comparison


def compare_bundles(dir_a, dir_b) -> dict:
    """Per-eps growth-class and verdict diff of two result bundles."""

    def load(bundle_dir):
        bundle_dir = Path(bundle_dir)
        try:
            with open(bundle_dir / "profile.json") as fh:
                profiles = [
                    scaling.ScalingProfile.from_json(p) for p in json.load(fh)["profiles"]
                ]
            with open(bundle_dir / "verdict.json") as fh:
                verdict = json.load(fh)["verdict"]
        except (FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
            raise ConfigError("bundle", f"not a result bundle: {bundle_dir} ({exc})") from exc
        return profiles, verdict

    profiles_a, verdict_a = load(dir_a)
    profiles_b, verdict_b = load(dir_b)
    grid_a = sorted(p.eps for p in profiles_a)
    grid_b = sorted(p.eps for p in profiles_b)
    if grid_a != grid_b:
        raise ConfigError(
            "eps_grid", f"bundles have incompatible eps grids: {grid_a} vs {grid_b}"
        )
    by_eps_a = {p.eps: p.growth_class for p in profiles_a}
    by_eps_b = {p.eps: p.growth_class for p in profiles_b}
    rows = []
    for eps in grid_a:
        cls_a, cls_b = by_eps_a[eps], by_eps_b[eps]
        rows.append({
            "eps": eps, "class_a": str(cls_a), "class_b": str(cls_b),
            "differs": cls_a != cls_b,
        })
    return {
        "eps_grid": grid_a,
        "classes": rows,
        "verdict_a": verdict_a,
        "verdict_b": verdict_b,
        "verdicts_differ": verdict_a != verdict_b,
        "any_difference": verdict_a != verdict_b or any(r["differs"] for r in rows),
    }


def format_compare(diff: dict) -> str:
    lines = [f"{'eps':>8}  {'A':<20} {'B':<20} differ"]
    for row in diff["classes"]:
        lines.append(
            f"{row['eps']:>8g}  {row['class_a']:<20} {row['class_b']:<20} "
            f"{'yes' if row['differs'] else 'no'}"
        )
    lines.append(f"verdict A: {diff['verdict_a']}")
    lines.append(f"verdict B: {diff['verdict_b']}")
    lines.append("verdicts differ" if diff["verdicts_differ"] else "verdicts agree")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# presets


_ROTATION_GRID = {
    "eps_grid": [0.25, 0.1],
    "n_schedule": [16, 32, 64, 128, 256, 512, 1024],
    "m": 512,
    "seeds": [101, 202, 303],
    "method": "Covering",
}


def _preset(system: dict, metric: dict, name: str) -> dict:
    config = {"system": system, "metric": metric, "output_dir": f"results/{name}"}
    config.update(_ROTATION_GRID)
    return config


def _presets() -> dict[str, dict]:
    rotation = {"kind": "CircleRotation", "alpha": (5 ** 0.5 - 1) / 2}
    torus = {"kind": "TorusTranslation", "alpha": (5 ** 0.5 - 1) / 2, "beta": 2 ** 0.5 - 1}
    anzai = {"kind": "AnzaiSkew", "alpha": (5 ** 0.5 - 1) / 2}
    fair = {"kind": "BernoulliShift", "weights": [0.5, 0.5]}
    biased = {"kind": "BernoulliShift", "weights": [0.9, 0.1]}
    euclid = {"type": "Euclidean1D"}
    abs_sq = {"type": "ClosedForm", "tag": "abs_plus_square"}
    arc_l1 = {"type": "TorusArcL1"}
    cut = {"type": "FirstSymbolCut"}
    block2 = {"type": "Block",
              "partition": {"kind": "first_symbols", "count": 2, "alphabet": 2}}
    names = {
        "rotation-euclid1d": (rotation, euclid),
        "rotation-abssq": (rotation, abs_sq),
        "torus-arc": (torus, arc_l1),
        "torus-euclid1d": (torus, euclid),
        "anzai-arc": (anzai, arc_l1),
        "anzai-euclid1d": (anzai, euclid),
        "bernoulli-fair-cut": (fair, cut),
        "bernoulli-fair-block2": (fair, block2),
        "bernoulli-biased-cut": (biased, cut),
        "bernoulli-biased-block2": (biased, block2),
    }
    return {name: _preset(sys_, met, name) for name, (sys_, met) in names.items()}


PRESETS = _presets()


# ---------------------------------------------------------------------------
# entry point


def _error_json(code: str, message: str, field: Optional[str] = None) -> str:
    err = {"code": code, "message": message}
    if field is not None:
        err["field"] = field
    return json.dumps({"error": err})


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="orbent",
        description="entropy growth of orbit-averaged semimetrics",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    run_p = sub.add_parser("run", help="run an experiment config")
    run_p.add_argument("config", help="path to a JSON experiment config")
    run_p.add_argument("--output-dir", default=None, help="override the config output_dir")
    run_p.add_argument("--workers", type=int, default=None,
                       help=f"worker threads (default 1 or ${WORKERS_ENV})")

    cmp_p = sub.add_parser("compare", help="diff two result bundles")
    cmp_p.add_argument("dir_a")
    cmp_p.add_argument("dir_b")
    cmp_p.add_argument("--json", action="store_true", help="print the diff as JSON")

    pre_p = sub.add_parser("presets", help="bundled experiment configs")
    pre_sub = pre_p.add_subparsers(dest="preset_verb", required=True)
    pre_sub.add_parser("list", help="list preset names")
    emit_p = pre_sub.add_parser("emit", help="print a preset config as JSON")
    emit_p.add_argument("name")

    args = parser.parse_args(argv)

    try:
        if args.verb == "run":
            config = load_config(args.config)
            output_dir = args.output_dir or os.environ.get(OUTPUT_DIR_ENV)
            if output_dir:
                config = ExperimentConfig(
                    system=config.system, metric=config.metric,
                    eps_grid=config.eps_grid, n_schedule=config.n_schedule,
                    m=config.m, seeds=config.seeds, method=config.method,
                    output_dir=output_dir,
                )
            workers = args.workers
            if workers is None:
                workers = int(os.environ.get(WORKERS_ENV, "1"))
            paths = run_experiment(config, workers=workers)
            print(json.dumps(paths, indent=2, sort_keys=True))
            return 0
        if args.verb == "compare":
            diff = compare_bundles(args.dir_a, args.dir_b)
            print(json.dumps(diff, indent=2, sort_keys=True) if args.json
                  else format_compare(diff))
            return 0
        if args.verb == "presets":
            if args.preset_verb == "list":
                for name in sorted(PRESETS):
                    print(name)
                return 0
            if args.name not in PRESETS:
                raise ConfigError("name", f"unknown preset {args.name!r}; "
                                          f"known: {sorted(PRESETS)}")
            print(json.dumps(PRESETS[args.name], indent=2, sort_keys=True))
            return 0
        raise ConfigError("verb", f"unknown verb {args.verb!r}")
    except ConfigError as exc:
        print(_error_json("invalid_config", str(exc), exc.field), file=sys.stderr)
        return 2
    except InfeasibleError as exc:
        print(_error_json("infeasible", str(exc)), file=sys.stderr)
        return 3
    except OrbentError as exc:
        print(_error_json("invalid_config", str(exc)), file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
