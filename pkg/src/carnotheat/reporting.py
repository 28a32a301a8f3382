"""Experiment configuration, run reports and deterministic emission.

The config format is flat `key = value` text with dotted sections,
hand-editable and diff-friendly; see README for the schema.  Emitted
CSV/JSON files are byte-identical for identical config bytes: float
formatting uses shortest round-trip repr, JSON keys are sorted, and
volatile data (wall-clock) is kept out of the files (it is reported on
stderr and retained on the in-memory report only).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError

__all__ = ["ConvergenceReport", "ExperimentConfig", "RunReport",
           "parse_config", "emit"]


@dataclass
class ConvergenceReport:
    """Parameter sweep with an extrapolated limit and its target."""

    grid: np.ndarray
    values: np.ndarray
    errors: np.ndarray
    extrapolated: float
    extrapolated_error: float
    fit_residual: float
    target: float
    deviation: float
    label: str = ""

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.errors = np.asarray(self.errors, dtype=float)
        d = np.diff(self.grid)
        if len(self.grid) > 1 and not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError("grid must be strictly monotone")
        if not np.isfinite(self.fit_residual):
            raise ValueError("fit residual must be finite")

    def rows(self):
        for g, v, e in zip(self.grid, self.values, self.errors):
            yield {"param": float(g), "value": float(v), "error": float(e),
                   "target": float(self.target),
                   "deviation": float(abs(v - self.target) / abs(self.target))
                   if self.target else float("nan")}

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "grid": [float(g) for g in self.grid],
            "values": [float(v) for v in self.values],
            "errors": [float(e) for e in self.errors],
            "extrapolated": float(self.extrapolated),
            "extrapolated_error": float(self.extrapolated_error),
            "fit_residual": float(self.fit_residual),
            "target": float(self.target),
            "deviation": float(self.deviation),
        }


@dataclass
class ExperimentConfig:
    """Parsed experiment configuration (see README for the key schema)."""

    name: str = "run"
    group: str = "heisenberg:1"
    region: str = "cylinder:1,1"
    experiments: tuple = ("bbm-limit",)
    s_grid: tuple = (0.40, 0.44, 0.47, 0.49)
    t_min: float = 1e-4
    t_max: float = 10.0
    t_ratio: float = 1.3
    plateau_ts: tuple = (3e-3, 1e-3, 3e-4)
    budget_scale: float = 1.0
    seed: int = 91452
    out_dir: str = "out"
    formats: tuple = ("json", "csv")
    raw: dict = field(default_factory=dict)


def parse_config(text: str) -> ExperimentConfig:
    """Parse the flat dotted key-value format; '#' starts a comment."""
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, _, val = stripped.partition("=")
        values[key.strip()] = val.strip()

    def get(key, default, cast=str):
        if key not in values:
            return default
        try:
            return cast(values[key])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key!r}: {values[key]!r}") from exc

    def floats(raw):
        return tuple(float(v) for v in raw.replace(";", ",").split(",") if v.strip())

    def strings(raw):
        return tuple(v.strip() for v in raw.split(",") if v.strip())

    cfg = ExperimentConfig(
        name=get("run.name", "run"),
        group=get("group", "heisenberg:1"),
        region=get("region", "cylinder:1,1"),
        experiments=get("experiments", ("bbm-limit",), strings),
        s_grid=get("bbm.s_grid", (0.40, 0.44, 0.47, 0.49), floats),
        t_min=get("tgrid.min", 1e-4, float),
        t_max=get("tgrid.max", 10.0, float),
        t_ratio=get("tgrid.ratio", 1.3, float),
        plateau_ts=get("ledoux.t_grid", (3e-3, 1e-3, 3e-4), floats),
        budget_scale=get("budget.scale", 1.0, float),
        seed=get("seed", 91452, int),
        out_dir=get("out.dir", "out"),
        formats=get("out.format", ("json", "csv"), strings),
        raw=values,
    )
    if cfg.t_min <= 0 or cfg.t_max <= cfg.t_min or cfg.t_ratio <= 1.0:
        raise ConfigError("invalid time grid")
    if cfg.budget_scale <= 0:
        raise ConfigError("budget.scale must be positive")
    for s in cfg.s_grid:
        if not 0.0 < s < 0.5:
            raise ConfigError("bbm.s_grid values must lie in (0, 1/2)")
    return cfg


@dataclass
class RunReport:
    """Results of one orchestrated run.

    Every numeric result carries an error estimate or the tag
    'closed-form'.  wall_clock_s is in-memory/stderr only and never
    written to the emitted files, which must be reproducible byte for
    byte.
    """

    config_echo: dict
    results: list
    passed: bool
    tool_version: str
    wall_clock_s: float = 0.0

    def to_dict(self) -> dict:
        return {
            "config": self.config_echo,
            "results": self.results,
            "passed": self.passed,
            "tool_version": self.tool_version,
        }


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def emit(report: RunReport, out_dir: str, formats=("json", "csv"),
         stem: str = "report") -> list[str]:
    """Write the report; returns the file paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "json" in formats:
        path = out / f"{stem}.json"
        path.write_text(json.dumps(report.to_dict(), sort_keys=True, indent=1) + "\n",
                        encoding="utf-8")
        written.append(str(path))
    if "csv" in formats:
        path = out / f"{stem}.csv"
        lines = ["experiment,param,value,error,target,deviation"]
        for res in report.results:
            name = res.get("experiment", "")
            for row in res.get("rows", []):
                lines.append(",".join([name] + [_fmt(row[c]) for c in
                                                ("param", "value", "error",
                                                 "target", "deviation")]))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        written.append(str(path))
    return written
