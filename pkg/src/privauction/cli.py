"""Experiment runner: seeded scenario execution, parameter sweeps, and the
verification suite, driven by a single JSON config file.

Commands:
    privauction run <config>      execute the configured scenario
    privauction verify <config>   run the property-check suite
    privauction sweep <config>    one record per swept parameter value

Exit codes: 0 success, 1 property failure, 2 config error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from . import verify as verify_mod
from .core import (CostFamily, DomainError, PopulationSpec, generate_population)
from .dp import ACCURACY_CONST, trial_stream
from .mechanisms import (AccuracyInstance, BudgetInstance, fair_query,
                         min_cost_auction)

REPORT_VERSION = 1
SWEEPABLE = ("budget", "alpha", "threshold", "q", "n", "seed")


class ConfigError(ValueError):
    """The config file failed to parse or validate."""


@dataclass
class ExperimentConfig:
    scenario: str                   # "budget" | "accuracy"
    population: PopulationSpec
    cost_family: CostFamily
    budget: Optional[float] = None
    alpha: Optional[float] = None
    trials: int = 1
    seed: int = 0
    sweep: Optional[dict] = None    # {"parameter": name, "values": [...]}
    output_path: Optional[str] = None
    output_format: str = "json"
    clamp_estimates: bool = False
    negative_control: bool = False

    def __post_init__(self):
        if self.scenario not in ("budget", "accuracy"):
            raise ConfigError(f"scenario must be 'budget' or 'accuracy', got {self.scenario!r}")
        if self.scenario == "budget" and (self.budget is None or self.alpha is not None):
            raise ConfigError("budget scenario requires 'budget' and forbids 'alpha'")
        if self.scenario == "accuracy" and (self.alpha is None or self.budget is not None):
            raise ConfigError("accuracy scenario requires 'alpha' and forbids 'budget'")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.output_format not in ("json", "csv"):
            raise ConfigError(f"format must be 'json' or 'csv', got {self.output_format!r}")
        if self.sweep is not None:
            param = self.sweep.get("parameter")
            values = self.sweep.get("values")
            if param not in SWEEPABLE:
                raise ConfigError(f"sweep parameter must be one of {SWEEPABLE}, got {param!r}")
            if not values:
                raise ConfigError("sweep values must be a non-empty list")

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        try:
            population = PopulationSpec.from_dict(raw["population"])
            family = CostFamily(raw["cost_family"])
            output = raw.get("output") or {}
            return cls(
                scenario=raw["scenario"],
                population=population,
                cost_family=family,
                budget=raw.get("budget"),
                alpha=raw.get("alpha"),
                trials=int(raw.get("trials", 1)),
                seed=int(raw.get("seed", 0)),
                sweep=raw.get("sweep"),
                output_path=output.get("path"),
                output_format=output.get("format", "json"),
                clamp_estimates=bool(raw.get("clamp_estimates", False)),
                negative_control=bool(raw.get("negative_control", False)),
            )
        except KeyError as exc:
            raise ConfigError(f"config missing required field {exc}") from exc
        except (ValueError, DomainError) as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        d = {
            "scenario": self.scenario,
            "population": self.population.to_dict(),
            "cost_family": self.cost_family.value,
            "trials": self.trials,
            "seed": self.seed,
            "clamp_estimates": self.clamp_estimates,
        }
        if self.budget is not None:
            d["budget"] = self.budget
        if self.alpha is not None:
            d["alpha"] = self.alpha
        if self.sweep is not None:
            d["sweep"] = self.sweep
        if self.negative_control:
            d["negative_control"] = True
        return d


def _instance(config: ExperimentConfig):
    pop = generate_population(config.population)
    if config.scenario == "budget":
        return BudgetInstance(pop=pop, model=config.cost_family,
                              budget=float(config.budget))
    return AccuracyInstance(pop=pop, model=config.cost_family,
                            alpha=float(config.alpha))


def _mechanism(config: ExperimentConfig):
    if config.scenario == "budget":
        if config.negative_control:
            return verify_mod.pay_your_bid_control
        return fair_query
    return min_cost_auction


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("PRIVAUCTION_THREADS", "1")))
    except ValueError:
        return 1


def _run_record(config: ExperimentConfig) -> dict:
    """Execute the scenario `trials` times; aggregate into one record."""
    inst = _instance(config)
    mech = _mechanism(config)
    n = inst.pop.n
    s = inst.pop.total
    estimates = np.empty(config.trials)

    def one(t: int) -> None:
        out = mech(inst, trial_stream(config.seed, t))
        estimates[t] = out.estimate

    threads = _thread_count()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(one, range(config.trials)))
    else:
        for t in range(config.trials):
            one(t)

    # payments and winner sets are deterministic; take them from trial 0
    out0 = mech(inst, trial_stream(config.seed, 0))
    k = out0.winner_count
    if config.scenario == "budget":
        bound = ACCURACY_CONST * (n - k)
    else:
        bound = float(config.alpha) * n
    shown = np.clip(estimates, 0.0, n) if config.clamp_estimates else estimates
    errors = shown - s
    return {
        "seed": config.seed,
        "n": n,
        "k": k,
        "total_payment": out0.total_payment,
        "winner_count": k,
        "accuracy_bound": bound,
        "error_rate_at_bound": float(np.mean(np.abs(estimates - s) >= bound)),
        "estimate_error_mean": float(errors.mean()),
        "estimate_error_std": float(errors.std()),
    }


def _quick_verification(config: ExperimentConfig) -> List[dict]:
    """Deterministic per-outcome checks embedded in run/sweep reports."""
    inst = _instance(config)
    mech = _mechanism(config)
    out = mech(inst, trial_stream(config.seed, 0))
    reports = [
        verify_mod.check_individual_rationality(out, inst.pop, inst.model),
        verify_mod.check_envy_freeness(out, inst.pop, inst.model),
    ]
    if config.scenario == "budget":
        reports.append(verify_mod.check_budget_feasibility(out, inst.budget))
    return [r.to_dict() for r in reports]


def _sweep_config(config: ExperimentConfig, value) -> ExperimentConfig:
    param = config.sweep["parameter"]
    if param == "budget":
        return dataclasses.replace(config, budget=float(value), sweep=None)
    if param == "alpha":
        return dataclasses.replace(config, alpha=float(value), sweep=None)
    if param == "seed":
        return dataclasses.replace(config, seed=int(value), sweep=None)
    if param == "n":
        pop = dataclasses.replace(config.population, n=int(value))
        return dataclasses.replace(config, population=pop, sweep=None)
    if param == "q":
        from .core import IndependentBits
        pop = dataclasses.replace(config.population, bits=IndependentBits(q=float(value)))
        return dataclasses.replace(config, population=pop, sweep=None)
    if param == "threshold":
        from .core import CorrelatedBits
        pop = dataclasses.replace(config.population,
                                  bits=CorrelatedBits(threshold=float(value)))
        return dataclasses.replace(config, population=pop, sweep=None)
    raise ConfigError(f"unknown sweep parameter {param!r}")  # pragma: no cover


# ---------------------------------------------------------------------------
# Report emission
# ---------------------------------------------------------------------------

def _emit(report: dict, config: ExperimentConfig, stream) -> None:
    if config.output_format == "csv":
        _emit_csv(report, stream)
    else:
        json.dump(report, stream, indent=2, sort_keys=True)
        stream.write("\n")


def _emit_csv(report: dict, stream) -> None:
    records = report["records"]
    fields = sorted({k for rec in records for k in rec})
    writer = csv.DictWriter(stream, fieldnames=fields, lineterminator="\r\n")
    writer.writeheader()
    for rec in records:
        writer.writerow({k: rec.get(k, "") for k in fields})


def _write_report(report: dict, config: ExperimentConfig) -> None:
    if config.output_path:
        with open(config.output_path, "w", newline="") as fh:
            _emit(report, config, fh)
    else:
        _emit(report, config, sys.stdout)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_run(config: ExperimentConfig) -> int:
    record = _run_record(config)
    report = {
        "version": REPORT_VERSION,
        "command": "run",
        "config": config.to_dict(),
        "records": [record],
        "verification": _quick_verification(config),
    }
    _write_report(report, config)
    return 0


def cmd_verify(config: ExperimentConfig) -> int:
    instances = []
    for i in range(config.trials):
        spec = dataclasses.replace(config.population, seed=config.seed + i)
        sub = dataclasses.replace(config, population=spec, sweep=None)
        instances.append(_instance(sub))
    reports = verify_mod.run_suite(instances,
                                   negative_control=config.negative_control)
    all_pass = all(r.passed for r in reports)
    report = {
        "version": REPORT_VERSION,
        "command": "verify",
        "config": config.to_dict(),
        "records": [{"property": r.property_name, "pass": r.passed,
                     "violation_count": len(r.violations)} for r in reports],
        "verification": [r.to_dict() for r in reports],
    }
    _write_report(report, config)
    return 0 if all_pass else 1


def cmd_sweep(config: ExperimentConfig) -> int:
    if config.sweep is None:
        raise ConfigError("sweep command requires a 'sweep' section in the config")
    records = []
    for value in config.sweep["values"]:
        sub = _sweep_config(config, value)
        try:
            rec = _run_record(sub)
            rec["swept_value"] = value
            rec["error"] = ""
        except DomainError as exc:
            rec = {"swept_value": value, "error": str(exc)}
        records.append(rec)
    report = {
        "version": REPORT_VERSION,
        "command": "sweep",
        "config": config.to_dict(),
        "records": records,
        "verification": [],
    }
    _write_report(report, config)
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="privauction",
        description="Auctions for buying differential privacy: experiment runner.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "verify", "sweep"):
        p = sub.add_parser(name)
        p.add_argument("config", help="path to JSON config file")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--trials", type=int, default=None, help="override trial count")
        p.add_argument("--output", default=None, help="override output path")
        p.add_argument("--format", choices=("json", "csv"), default=None,
                       help="override output format")
        p.add_argument("--clamp", action="store_true",
                       help="clamp reported estimates to [0, n]")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = ExperimentConfig.from_file(args.config)
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.trials is not None:
            overrides["trials"] = args.trials
        if args.output is not None:
            overrides["output_path"] = args.output
        if args.format is not None:
            overrides["output_format"] = args.format
        if args.clamp:
            overrides["clamp_estimates"] = True
        if overrides:
            config = dataclasses.replace(config, **overrides)
        handler = {"run": cmd_run, "verify": cmd_verify, "sweep": cmd_sweep}[args.command]
        return handler(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
