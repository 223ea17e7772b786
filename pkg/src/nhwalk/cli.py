"""Command line front end: ``nhwalk run`` and ``nhwalk validate``.

Configuration is a flat text file of ``section.key = value`` lines (``#``
starts a comment, ``[section]`` headers prefix the keys that follow), or the
JSON written to ``config.resolved.json`` by a previous run.  ``--set k=v``
overrides win over file values; bare keys such as ``g`` resolve to their
unique section.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from .experiments import (
    DEFAULT_RATIOS,
    DYNAMICS_CONFIG,
    FIG2_G,
    FIG3_DELTA,
    MODELS,
    PRESETS,
    DynamicsComparison,
    SweepResult,
    SweepRow,
    SweepSpec,
    run_dynamics_comparison,
    run_model,
    run_sweep,
)
from .integrate import IntegratorConfig, ObservableSeries
from .lattice import LatticeError, LatticeParams

log = logging.getLogger("nhwalk")

SCENARIOS = ("fig2", "fig3", "fig4", "fig5", "custom")
FORMATS = ("csv", "json", "svg")
SWEEP_HEADER = ["ratio", "model", "g", "delta", "dm_final", "stop_time", "survival", "error"]
SERIES_HEADER = ["t", "norm", "rho00", "dm_t"]
# rings smaller than this let decay products wrap around and distort dm
WRAP_WARNING_CELLS = 12


class ConfigError(ValueError):
    pass


_FLOAT, _INT, _OPT_FLOAT, _FLOATS, _STRS = "float", "int", "optional float", "float list", "string list"

SCHEMA = {
    "lattice": {
        "v": _FLOAT, "v_prime": _FLOAT, "gamma": _FLOAT, "g": _FLOAT,
        "eps_a": _FLOAT, "eps_b": _FLOAT, "delta_offset": _FLOAT, "n_cells": _INT,
    },
    "integrator": {
        "rel_tol": _FLOAT, "abs_tol": _FLOAT, "t_final": _FLOAT, "max_step": _FLOAT,
        "n_samples": _INT, "stop_survival": _OPT_FLOAT, "safety": _FLOAT, "max_steps": _INT,
    },
    "sweep": {"g_values": _FLOATS, "delta_values": _FLOATS, "ratios": _FLOATS, "models": _STRS},
    "output": {"formats": _STRS},
}


@dataclass
class RunConfig:
    scenario: str = "fig2"
    lattice: LatticeParams = field(default_factory=LatticeParams)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    g_values: tuple = FIG2_G
    delta_values: tuple = FIG3_DELTA
    ratios: tuple = DEFAULT_RATIOS
    models: tuple = ("full_gpe", "incoherent_formula")
    formats: tuple = ("csv",)
    warnings: list = field(default_factory=list, compare=False)

    def to_json(self) -> str:
        integ = asdict(self.integrator)
        if math.isinf(integ["max_step"]):
            integ["max_step"] = "inf"
        doc = {
            "scenario": self.scenario,
            "lattice": asdict(self.lattice),
            "integrator": integ,
            "sweep": {
                "g_values": list(self.g_values),
                "delta_values": list(self.delta_values),
                "ratios": list(self.ratios),
                "models": list(self.models),
            },
            "output": {"formats": list(self.formats)},
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# parsing

def _qualify(key: str) -> tuple[str, str]:
    key = key.strip()
    if key == "scenario":
        return "", "scenario"
    if "." in key:
        section, name = key.split(".", 1)
        if section in SCHEMA and name in SCHEMA[section]:
            return section, name
        raise ConfigError(f"unknown config key {key!r}")
    hits = [s for s, names in SCHEMA.items() if key in names]
    if len(hits) != 1:
        raise ConfigError(f"unknown config key {key!r}")
    return hits[0], key


def _coerce(key: str, kind: str, raw):
    try:
        if kind == _FLOAT:
            value = float(raw)
        elif kind == _INT:
            if isinstance(raw, float) and not raw.is_integer():
                raise ValueError
            value = int(raw) if not isinstance(raw, str) else int(raw.strip())
        elif kind == _OPT_FLOAT:
            if raw is None or (isinstance(raw, str) and raw.strip().lower() in ("none", "null", "")):
                return None
            value = float(raw)
        elif kind == _FLOATS:
            items = raw if isinstance(raw, (list, tuple)) else [s for s in str(raw).split(",") if s.strip()]
            value = tuple(float(x) for x in items)
        else:
            items = raw if isinstance(raw, (list, tuple)) else str(raw).split(",")
            value = tuple(str(x).strip() for x in items if str(x).strip())
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected {kind}, got {raw!r}") from None
    if isinstance(raw, bool):
        raise ConfigError(f"{key}: expected {kind}, got {raw!r}")
    return value


def parse_text(text: str) -> dict:
    """``section.key = value`` lines -> ``{qualified key: raw string}``."""
    out = {}
    section = ""
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if section and "." not in key:
            key = f"{section}.{key}"
        out[key] = value
    return out


def _flatten(doc: dict, prefix: str = "") -> dict:
    out = {}
    for key, value in doc.items():
        name = f"{prefix}.{key}" if prefix else key
        if isinstance(value, dict):
            out.update(_flatten(value, name))
        else:
            out[name] = value
    return out


def load_file(path) -> dict:
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        try:
            return _flatten(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_text(text)


def parse_sets(items) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def scenario_defaults(scenario: str) -> RunConfig:
    if scenario not in SCENARIOS:
        raise ConfigError(f"scenario: unknown scenario {scenario!r} (choose from {', '.join(SCENARIOS)})")
    cfg = RunConfig(scenario=scenario)
    if scenario == "fig3":
        cfg.models = ("full_gpe", "incoherent_formula")
    elif scenario == "fig4":
        cfg.lattice, cfg.integrator = PRESETS["fig4"], DYNAMICS_CONFIG
    elif scenario == "fig5":
        cfg.lattice, cfg.integrator = PRESETS["fig5_upper"], DYNAMICS_CONFIG
    elif scenario == "custom":
        cfg.models = ("full_gpe",)
    return cfg


def resolve(file_values: Optional[dict] = None, overrides: Optional[dict] = None,
            scenario: Optional[str] = None) -> RunConfig:
    """Merge defaults, file values and overrides into a validated :class:`RunConfig`."""
    merged = dict(file_values or {})
    merged.update(overrides or {})
    if scenario is not None:
        merged["scenario"] = scenario
    chosen = str(merged.pop("scenario", "fig2")).strip()
    cfg = scenario_defaults(chosen)

    sections: dict[str, dict] = {s: {} for s in SCHEMA}
    for key, raw in merged.items():
        section, name = _qualify(key)
        sections[section][name] = _coerce(f"{section}.{name}", SCHEMA[section][name], raw)

    try:
        cfg.lattice = replace(cfg.lattice, **sections["lattice"])
    except LatticeError as exc:
        raise ConfigError(f"lattice: {exc}") from None
    try:
        cfg.integrator = replace(cfg.integrator, **sections["integrator"])
    except ValueError as exc:
        raise ConfigError(f"integrator: {exc}") from None

    sweep = sections["sweep"]
    cfg.g_values = sweep.get("g_values", cfg.g_values)
    cfg.delta_values = sweep.get("delta_values", cfg.delta_values)
    cfg.ratios = sweep.get("ratios", cfg.ratios)
    cfg.models = sweep.get("models", cfg.models)
    bad = [m for m in cfg.models if m not in MODELS]
    if bad:
        raise ConfigError(f"sweep.models: unknown model(s) {bad}")
    if any(not 0 <= r <= 1 for r in cfg.ratios):
        raise ConfigError("sweep.ratios: every ratio must lie in [0, 1]")
    if not cfg.ratios or not cfg.models:
        raise ConfigError("sweep.ratios and sweep.models must be non-empty")
    cfg.formats = sections["output"].get("formats", cfg.formats)
    bad = [f for f in cfg.formats if f not in FORMATS]
    if bad:
        raise ConfigError(f"output.formats: unknown format(s) {bad}")

    if cfg.lattice.n_cells < WRAP_WARNING_CELLS:
        cfg.warnings.append(
            f"lattice.n_cells={cfg.lattice.n_cells} is small: probability wraps around the ring "
            "and distorts the displacement"
        )
    return cfg


# ---------------------------------------------------------------------------
# writers

def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    return f"{float(x):.12g}"


def write_sweep_csv(path: Path, result: SweepResult):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for r in result.rows:
            w.writerow([fmt(r.ratio), r.model, fmt(r.g), fmt(r.delta), fmt(r.dm_final),
                        fmt(r.stop_time), fmt(r.survival), r.error])


def write_series_csv(path: Path, series: ObservableSeries):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SERIES_HEADER)
        for row in zip(series.times, series.norm, series.rho00, series.dm_t):
            w.writerow([fmt(x) for x in row])


def series_id(row: SweepRow) -> str:
    return f"{row.model}_g{fmt(row.g)}_d{fmt(row.delta)}_r{row.ratio:.4f}"


def _json_number(x):
    if x is None or (isinstance(x, float) and not math.isfinite(x)):
        return None if x is None else str(x)
    return float(fmt(x))


def write_sweep_json(path: Path, result: SweepResult):
    rows = [
        {"ratio": _json_number(r.ratio), "model": r.model, "g": _json_number(r.g),
         "delta": _json_number(r.delta), "dm_final": _json_number(r.dm_final),
         "stop_time": _json_number(r.stop_time), "survival": _json_number(r.survival),
         "error": r.error, "near_degenerate": r.near_degenerate}
        for r in result.rows
    ]
    path.write_text(json.dumps(rows, indent=2) + "\n")


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    plt.rcParams["svg.hashsalt"] = "nhwalk"
    return plt


def plot_sweep(path: Path, result: SweepResult, axis_label: str):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    groups: dict = {}
    for r in result.rows:
        if r.model == "incoherent_formula" or r.dm_final is None:
            continue
        value = r.g if axis_label == "g" else r.delta
        groups.setdefault((r.model, value), []).append((r.ratio, r.dm_final))
    for (model, value), pts in groups.items():
        pts.sort()
        ax.plot(*zip(*pts), "o", ms=4, label=f"{model} {axis_label}={value:g}")
    ref = sorted((r.ratio, r.dm_final) for r in result.rows if r.model == "incoherent_formula")
    if ref:
        ax.plot(*zip(*ref), "k-", label="incoherent")
    ax.plot([0, 0.5, 0.5, 1], [1, 1, 0, 0], "k--", lw=0.8, label="coherent, infinite")
    ax.set_xlabel("v / (v + v')")
    ax.set_ylabel("displacement")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_dynamics(path: Path, comparisons: list[tuple[str, DynamicsComparison]]):
    plt = _pyplot()
    fig, axes = plt.subplots(len(comparisons), 1, figsize=(6, 3 * len(comparisons)), squeeze=False)
    for ax, (label, cmp) in zip(axes[:, 0], comparisons):
        ax.plot(cmp.full.times, cmp.full.rho00, "b-", label="rho00 full")
        ax.plot(cmp.rate.times, cmp.rate.rho00, "b-.", label="rho00 rate")
        ax.plot(cmp.full.times, cmp.full.dm_t, "r-", lw=2, label="dm_t full")
        ax.plot(cmp.rate.times, cmp.rate.dm_t, "r--", label="dm_t rate")
        ax.set_xlim(0, min(60.0, cmp.full.times[-1]))
        ax.set_title(label, fontsize=9)
        ax.legend(fontsize=7)
    axes[-1, 0].set_xlabel("t")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


# ---------------------------------------------------------------------------
# run

def execute(cfg: RunConfig, out: Path, jobs: int = 1) -> int:
    """Run the configured scenario and write all artifacts; returns the exit code."""
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.resolved.json").write_text(cfg.to_json())
    for w in cfg.warnings:
        log.warning(w)

    if cfg.scenario in ("fig4", "fig5"):
        return _execute_dynamics(cfg, out)

    keep = "csv" in cfg.formats
    if cfg.scenario == "custom":
        rows = [run_model(cfg.lattice, m, cfg.integrator, keep) for m in cfg.models]
        result = SweepResult(sorted(rows, key=SweepRow.key))
    else:
        axis, values = ("g", cfg.g_values) if cfg.scenario == "fig2" else ("delta_offset", cfg.delta_values)
        base = cfg.lattice if cfg.scenario == "fig2" else replace(cfg.lattice, g=0.0)
        spec = SweepSpec(base, axis, values, cfg.ratios, cfg.models, cfg.integrator)
        result = run_sweep(spec, jobs=jobs, keep_series=keep)

    if "csv" in cfg.formats:
        write_sweep_csv(out / "sweep.csv", result)
        for row in result.rows:
            if row.series is not None:
                write_series_csv(out / f"series_{series_id(row)}.csv", row.series)
    if "json" in cfg.formats:
        write_sweep_json(out / "sweep.json", result)
    if "svg" in cfg.formats:
        plot_sweep(out / f"plot_{cfg.scenario}.svg", result,
                   "g" if cfg.scenario != "fig3" else "delta")

    if result.rows and result.n_failed == len(result.rows):
        log.error("all points failed")
        return 2
    return 0


def _execute_dynamics(cfg: RunConfig, out: Path) -> int:
    if cfg.scenario == "fig4":
        cases = [("", cfg.lattice)]
    else:
        # upper panel g = 4 (or the configured g), lower panel g = 0.5
        lower = replace(cfg.lattice, g=PRESETS["fig5_lower"].g)
        cases = [(f"_g{fmt(cfg.lattice.g)}", cfg.lattice), (f"_g{fmt(lower.g)}", lower)]

    comparisons, rows, metrics = [], [], {}
    for suffix, params in cases:
        cmp = run_dynamics_comparison(params, cfg.integrator)
        comparisons.append((f"g={params.g:g}, delta={params.delta_offset:g}", cmp))
        metrics[suffix.lstrip("_") or "fig4"] = cmp.metrics()
        for model, series in (("full_gpe", cmp.full), ("rate_selfconsistent", cmp.rate)):
            rows.append(SweepRow(params.ratio, model, params.g, params.delta_offset,
                                 series.dm_final, series.t_stop, series.survival))
            if "csv" in cfg.formats:
                name = "full" if model == "full_gpe" else "rate"
                write_series_csv(out / f"series_{name}{suffix}.csv", series)

    result = SweepResult(rows)
    if "csv" in cfg.formats:
        write_sweep_csv(out / "sweep.csv", result)
    if "json" in cfg.formats:
        write_sweep_json(out / "sweep.json", result)
        (out / "comparison.json").write_text(json.dumps(metrics, indent=2, sort_keys=True) + "\n")
    if "svg" in cfg.formats:
        plot_dynamics(out / f"plot_{cfg.scenario}.svg", comparisons)
    return 0


# ---------------------------------------------------------------------------
# entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nhwalk", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and write CSV/JSON/SVG artifacts")
    run.add_argument("--scenario", choices=SCENARIOS)
    run.add_argument("--config", help="config file (key = value text or resolved JSON)")
    run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                     help="override one config value (repeatable)")
    run.add_argument("--out", default="results", help="output directory")
    run.add_argument("--formats", help="comma-separated subset of csv,json,svg")
    run.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")

    val = sub.add_parser("validate", help="resolve a config and print the effective parameters")
    val.add_argument("config", nargs="?")
    val.add_argument("--scenario", choices=SCENARIOS)
    val.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    return parser


def _resolve_args(args) -> RunConfig:
    file_values = load_file(args.config) if getattr(args, "config", None) else {}
    overrides = parse_sets(args.set)
    if getattr(args, "formats", None):
        overrides["output.formats"] = args.formats
    return resolve(file_values, overrides, args.scenario)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve_args(args)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    if args.command == "validate":
        for w in cfg.warnings:
            print(f"warning: {w}", file=sys.stderr)
        sys.stdout.write(cfg.to_json())
        return 0
    if args.jobs < 1:
        print("config error: --jobs must be >= 1", file=sys.stderr)
        return 1
    return execute(cfg, Path(args.out), jobs=args.jobs)


if __name__ == "__main__":
    sys.exit(main())
