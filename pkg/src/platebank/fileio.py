"""On-disk formats: scenario, policy and sweep-plan files (JSON with field
names mirroring the in-memory types), fit reports, and run manifests."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import asdict
from pathlib import Path

from .core import (
    AgeProfile,
    CostParams,
    InputError,
    ScenarioConfig,
    SCENARIO_NAMES,
    builtin_scenario,
    validate_scenario,
)
from .optimize import FitReport, GAConfig
from .policies import (
    ISSUING_MODES,
    IssuingPolicy,
    StandingOrderPolicy,
    WeeklySSPolicy,
)


def scenario_to_dict(cfg: ScenarioConfig) -> dict:
    return {
        "max_life": cfg.max_life,
        "lead_time": cfg.lead_time,
        "max_order": cfg.max_order,
        "demand_means": list(cfg.demand_means),
        "return_rate": cfg.return_rate,
        "slippage_rate": cfg.slippage_rate,
        "age_profiles": [list(p.probabilities) for p in cfg.age_profiles],
        "costs": asdict(cfg.costs),
    }


def scenario_from_dict(data: dict) -> ScenarioConfig:
    try:
        costs = CostParams(**data.get("costs", {}))
        cfg = ScenarioConfig(
            max_life=int(data["max_life"]),
            demand_means=tuple(float(v) for v in data["demand_means"]),
            return_rate=float(data["return_rate"]),
            slippage_rate=float(data["slippage_rate"]),
            age_profiles=tuple(AgeProfile.from_row(row, renormalize=False)
                               for row in data["age_profiles"]),
            costs=costs,
            max_order=int(data.get("max_order", 100)),
            lead_time=int(data.get("lead_time", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed scenario data: {exc}") from exc
    return validate_scenario(cfg)


def load_scenario(ref: str | Path) -> ScenarioConfig:
    """A built-in scenario name, or a path to a scenario JSON file."""
    if isinstance(ref, str) and ref in SCENARIO_NAMES:
        return builtin_scenario(ref)
    path = Path(ref)
    if not path.exists():
        raise InputError(
            f"unknown scenario {ref!r}: not a built-in name "
            f"({', '.join(SCENARIO_NAMES)}) and no such file")
    return scenario_from_dict(_read_json(path))


def save_scenario(cfg: ScenarioConfig, path) -> None:
    _write_json(scenario_to_dict(cfg), path)


def policy_to_dict(replenishment, issuing: IssuingPolicy | None = None,
                   trace_path: str | None = None) -> dict:
    data: dict = {}
    if isinstance(replenishment, StandingOrderPolicy):
        data["q"] = replenishment.q
    elif isinstance(replenishment, WeeklySSPolicy):
        for tau in range(7):
            data[f"s{tau}"] = replenishment.s[tau]
            data[f"cap_s{tau}"] = replenishment.big_s[tau]
    else:
        raise InputError(f"unknown replenishment policy {replenishment!r}")
    if issuing is not None:
        block = {"mode": issuing.mode}
        if issuing.mode == "yupr":
            block["alpha"] = issuing.sensitivity
            block["beta"] = issuing.specificity
        data["issuing"] = block
    elif trace_path is not None:
        data["issuing"] = {"mode": "yupr", "trace_path": trace_path}
    return data


def policy_from_dict(data: dict, max_order: int = 100):
    """Returns (replenishment, issuing, trace_path).  `issuing` is None when
    the policy file points at trace predictions instead."""
    if "q" in data:
        replenishment = StandingOrderPolicy(int(data["q"])).validate(max_order)
    elif all(f"s{t}" in data and f"cap_s{t}" in data for t in range(7)):
        replenishment = WeeklySSPolicy(
            tuple(int(data[f"s{t}"]) for t in range(7)),
            tuple(int(data[f"cap_s{t}"]) for t in range(7)),
        ).validate(max_order)
    else:
        raise InputError("policy file needs either q or s0..s6 with cap_s0..cap_s6")
    block = data.get("issuing", {"mode": "oufo"})
    mode = block.get("mode")
    if mode not in ISSUING_MODES:
        raise InputError(f"policy issuing mode must be one of {ISSUING_MODES}")
    trace_path = block.get("trace_path")
    if trace_path is not None:
        return replenishment, None, trace_path
    if mode == "yupr":
        issuing = IssuingPolicy("yupr", float(block.get("alpha", 0.0)),
                                float(block.get("beta", 1.0))).validate()
    else:
        issuing = IssuingPolicy(mode).validate()
    return replenishment, issuing, None


def load_policy(path, max_order: int = 100):
    return policy_from_dict(_read_json(path), max_order)


def save_policy(replenishment, issuing, path, trace_path=None) -> None:
    _write_json(policy_to_dict(replenishment, issuing, trace_path), path)


def fit_report_to_dict(report: FitReport) -> dict:
    return {
        "best_params": report.best_params,
        "best_mean_return": report.best_mean_return,
        "generations_run": report.generations_run,
        "evaluation_count": report.evaluation_count,
        "stop_reason": report.stop_reason,
        "history": [
            {"generation": g, "params": p, "mean_return": r}
            for g, p, r in report.history
        ],
    }


def save_fit_report(report: FitReport, path) -> None:
    _write_json(fit_report_to_dict(report), path)


def ga_config_from_dict(data: dict) -> GAConfig:
    known = {f for f in GAConfig.__dataclass_fields__}
    unknown = set(data) - known
    if unknown:
        raise InputError(f"unknown GA config fields: {sorted(unknown)}")
    return GAConfig(**data).validate()


def config_digest(data: dict) -> str:
    blob = json.dumps(data, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def write_manifest(out_dir, command_line: list[str], resolved_config: dict,
                   master_seed: int, elapsed_seconds: float,
                   outputs: list[str], version: str) -> Path:
    """Run manifest written atomically next to the outputs."""
    manifest = {
        "command_line": list(command_line),
        "config_digest": config_digest(resolved_config),
        "master_seed": master_seed,
        "tool_version": version,
        "elapsed_seconds": elapsed_seconds,
        "outputs": sorted(str(o) for o in outputs),
    }
    path = Path(out_dir) / "manifest.json"
    _write_json(manifest, path)
    return path


def _read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def _write_json(data: dict, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(data, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
