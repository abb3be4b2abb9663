"""Command-line front end wiring source -> routing -> detectors -> counting.

Subcommands: run (simulate one acquisition and write reports), compare
(same source stream through several routing models), calibrate (closed-form
fit of slot rate and efficiency), predict (closed-form rates, no simulation).

Configuration is a flat ``key = value`` text file with ``#`` comments; every
key can also be given as a command-line flag. Precedence: flag > file >
preset > built-in default. Exit codes: 0 success, 1 configuration error,
2 runtime failure. Progress goes to stderr; stdout carries only data.
"""

from __future__ import annotations

import argparse
import dataclasses
import functools
import math
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .coincidence_unit import (
    PAIR_KEYS,
    REFERENCE_PAIRS,
    TRIPLE_KEYS,
    CcuConfig,
    TallyTable,
    accumulate,
    counter_name,
    tally_from_csv,
    tally_to_csv,
    tally_to_json,
)
from .detector_bank import Detector, DetectorConfig, write_events
from .photon_source import SourceConfig
from .routing_models import RoutingModel
from .simulate import SimConfig, config_metadata, simulate_streams
from .statistics import (
    REFERENCE_BLOCKS,
    CorrelationResult,
    ReferenceBlock,
    calibrate,
    equal_ratio_chisquare,
    g2_zero,
    predicted_rates,
)


class ConfigError(Exception):
    """All configuration violations found, not just the first."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {v}" for v in self.violations))


@dataclass(frozen=True)
class ExperimentConfig:
    model: str
    mean_photon_number: float
    seed: int
    slot_rate: float
    efficiency: float
    dark_rate: float
    dead_time_ps: int
    pulse_width_ps: int
    jitter_ps: float
    window_ps: int
    acquisition_s: float
    output_dir: str
    events_format: str

    def sim_config(self) -> SimConfig:
        return SimConfig(
            source=SourceConfig(
                mean_photon_number=self.mean_photon_number,
                slot_rate=self.slot_rate,
                duration=self.acquisition_s,
                seed=self.seed,
            ),
            detectors=DetectorConfig(
                efficiency=self.efficiency,
                dead_time_ps=self.dead_time_ps,
                pulse_width_ps=self.pulse_width_ps,
                jitter_sigma_ps=self.jitter_ps,
                dark_rate=self.dark_rate,
            ),
            model=RoutingModel(self.model),
            ccu=CcuConfig(window_ps=self.window_ps, acquisition_s=self.acquisition_s),
        )


@functools.lru_cache(maxsize=1)
def _block1_calibration():
    return calibrate(REFERENCE_BLOCKS["block1"])


def _default_slot_rate() -> float:
    return _block1_calibration().slot_rate


def _default_efficiency() -> float:
    return _block1_calibration().efficiency


_MODEL_NAMES = tuple(m.value for m in RoutingModel)
_EVENT_FORMATS = ("none", "text", "binary")
_REQUIRED = object()

# key -> (converter, default-or-required-marker, range check)
_CONFIG_FIELDS = {
    "model": (str, _REQUIRED, lambda v: v in _MODEL_NAMES or f"must be one of {', '.join(_MODEL_NAMES)}"),
    "mean_photon_number": (float, _REQUIRED, lambda v: v >= 0 or "must be >= 0"),
    "seed": (int, _REQUIRED, lambda v: v >= 0 or "must be >= 0"),
    "slot_rate": (float, _default_slot_rate, lambda v: v > 0 or "must be > 0"),
    "efficiency": (float, _default_efficiency, lambda v: 0 <= v <= 1 or "must be in [0, 1]"),
    "dark_rate": (float, 27.0, lambda v: v >= 0 or "must be >= 0"),
    "dead_time_ps": (int, 22_000, lambda v: v >= 0 or "must be >= 0"),
    "pulse_width_ps": (int, 10_000, lambda v: v >= 0 or "must be >= 0"),
    "jitter_ps": (float, 350.0, lambda v: v >= 0 or "must be >= 0"),
    "window_ps": (int, 5_000, lambda v: v > 0 or "must be > 0"),
    "acquisition_s": (float, 1.0, lambda v: v > 0 or "must be > 0"),
    "output_dir": (str, "out", lambda v: True),
    "events_format": (str, "none", lambda v: v in _EVENT_FORMATS or f"must be one of {', '.join(_EVENT_FORMATS)}"),
}


def preset_values(name: str) -> dict:
    """Published-condition presets: block calibration plus the block's source strength."""
    blocks = {"table1-block1": "block1", "table1-block2": "block2"}
    if name not in blocks:
        raise ConfigError([f"preset: unknown preset '{name}' (choices: {', '.join(sorted(blocks))})"])
    cal = _block1_calibration()
    return {
        "mean_photon_number": REFERENCE_BLOCKS[blocks[name]].mean_photon_number,
        "acquisition_s": REFERENCE_BLOCKS[blocks[name]].acquisition_s,
        "dark_rate": 27.0,
        "slot_rate": cal.slot_rate,
        "efficiency": cal.efficiency,
    }


def _parse_lines(text: str):
    """(values, violations) from the flat key = value format."""
    values: dict = {}
    violations = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            violations.append(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        if key in values:
            violations.append(f"line {lineno}: duplicate key '{key}'")
            continue
        values[key] = value
    return values, violations


def parse_config(text: str, overrides: dict | None = None, require_seed: bool = True) -> ExperimentConfig:
    """Validate the layered configuration, collecting every violation.

    overrides (typically command-line flags) take precedence over the file,
    which takes precedence over a preset named by either, which takes
    precedence over the defaults. require_seed=False serves the closed-form
    paths that never draw a random number.
    """
    file_values, violations = _parse_lines(text)
    overrides = dict(overrides or {})
    preset = overrides.pop("preset", None) or file_values.pop("preset", None)

    merged: dict = {}
    if preset is not None:
        try:
            merged.update(preset_values(str(preset)))
        except ConfigError as err:
            violations.extend(err.violations)
    merged.update(file_values)
    merged.update(overrides)

    values = {}
    unparsable = set()
    for key, supplied in merged.items():
        if key not in _CONFIG_FIELDS:
            violations.append(f"{key}: unknown key")
            continue
        convert = _CONFIG_FIELDS[key][0]
        try:
            values[key] = convert(supplied)
        except (TypeError, ValueError):
            violations.append(f"{key}: cannot read {supplied!r} as {convert.__name__}")
            unparsable.add(key)

    for key, (_, default, check) in _CONFIG_FIELDS.items():
        if key not in values:
            if key in unparsable:
                continue
            if default is _REQUIRED:
                if key == "seed" and not require_seed:
                    values[key] = 0
                else:
                    violations.append(f"{key}: required key is missing")
                continue
            values[key] = default() if callable(default) else default
        verdict = check(values[key])
        if verdict is not True:
            violations.append(f"{key}: {verdict}")

    if "dead_time_ps" in values and "pulse_width_ps" in values:
        if values["pulse_width_ps"] > values["dead_time_ps"]:
            violations.append("pulse_width_ps: must not exceed dead_time_ps")

    if violations:
        raise ConfigError(violations)
    return ExperimentConfig(**values)


# --- report writing -----------------------------------------------------------


def _analysis_rows(tally: TallyTable, corr: CorrelationResult):
    ref_counts = [tally.pairs[k] for k in REFERENCE_PAIRS]
    try:
        chisq, p = equal_ratio_chisquare(ref_counts)
    except ValueError:
        chisq, p = math.nan, math.nan
    return [
        ("g2_cross", corr.g2_cross),
        ("g2_same", corr.g2_same),
        ("bunching_fraction", corr.bunching_fraction),
        ("reference_pair_chisq", chisq),
        ("reference_pair_p", p),
    ]


def analysis_csv(tally: TallyTable, corr: CorrelationResult) -> str:
    lines = ["quantity,value"]
    lines.extend(f"{name},{value!r}" for name, value in _analysis_rows(tally, corr))
    return "\n".join(lines) + "\n"


def run_experiment(cfg: ExperimentConfig, workers: int = 1, progress=None):
    """Simulate one acquisition; write tally.csv, analysis.csv and run.json.

    Returns (TallyTable, CorrelationResult). Outputs are deterministic for a
    fixed config and seed, whatever the worker count.
    """
    sim = cfg.sim_config()
    streams, metadata = simulate_streams(sim, workers=workers, progress=progress)
    metadata["version"] = __version__
    tally = accumulate(
        streams,
        sim.ccu,
        stream_duration_ps=int(round(sim.source.duration * 1e12)),
        metadata=metadata,
    )
    corr = g2_zero(tally, cfg.slot_rate)

    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "tally.csv").write_text(tally_to_csv(tally))
    (out / "analysis.csv").write_text(analysis_csv(tally, corr))
    (out / "run.json").write_text(tally_to_json(tally))
    if cfg.events_format != "none":
        suffix = "txt" if cfg.events_format == "text" else "bin"
        write_events(out / f"events.{suffix}", streams, fmt=cfg.events_format)
    return tally, corr


def _unique_labels(names):
    counts = {}
    total = {n: names.count(n) for n in names}
    labels = []
    for n in names:
        if total[n] == 1:
            labels.append(n)
        else:
            counts[n] = counts.get(n, 0) + 1
            labels.append(f"{n}_{counts[n]}")
    return labels


def comparison_csv(results) -> str:
    """Side-by-side counters plus Poisson z-scores for every model pair."""
    names = [name for name, _, _ in results]
    labels = _unique_labels(names)
    pairs = [(i, j) for i in range(len(results)) for j in range(i + 1, len(results))]
    header = ["counter_name", *labels]
    header += [f"z_{labels[i]}_vs_{labels[j]}" for i, j in pairs]
    lines = [",".join(header)]

    counter_rows = []
    for det in Detector:
        counter_rows.append((counter_name("single", det), [t.singles[det] for _, t, _ in results]))
    for key in PAIR_KEYS:
        counter_rows.append((counter_name("pair", key), [t.pairs[key] for _, t, _ in results]))
    for key in TRIPLE_KEYS:
        counter_rows.append((counter_name("triple", key), [t.triples[key] for _, t, _ in results]))
    for name, counts in counter_rows:
        cells = [name, *(str(c) for c in counts)]
        for i, j in pairs:
            a, b = counts[i], counts[j]
            cells.append(repr((a - b) / math.sqrt(a + b)) if a + b else "")
        lines.append(",".join(cells))

    for quantity in ("bunching_fraction", "g2_cross", "g2_same"):
        cells = [quantity, *(repr(getattr(corr, quantity)) for _, _, corr in results)]
        cells += [""] * len(pairs)
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def compare_models(cfg: ExperimentConfig, models, workers: int = 1, progress=None):
    """Replay the same seeded source stream through each model.

    The source substream never depends on the routing model, so every run
    sees identical slot occupancies; differences are pure model effects.
    """
    models = list(models)
    if len(models) < 2:
        raise ConfigError(["compare: need at least two models"])
    bad = [m for m in models if m not in _MODEL_NAMES]
    if bad:
        raise ConfigError([f"compare: unknown model '{m}'" for m in bad])

    results = []
    for name in models:
        run_cfg = dataclasses.replace(cfg, model=name)
        sim = run_cfg.sim_config()
        streams, metadata = simulate_streams(sim, workers=workers, progress=progress)
        metadata["version"] = __version__
        tally = accumulate(
            streams,
            sim.ccu,
            stream_duration_ps=int(round(sim.source.duration * 1e12)),
            metadata=metadata,
        )
        results.append((name, tally, g2_zero(tally, run_cfg.slot_rate)))

    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "comparison.csv").write_text(comparison_csv(results))
    return results


# --- argument parsing ----------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; here that code means runtime failure."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_config_flags(parser):
    parser.add_argument("--config", metavar="PATH", help="flat key = value configuration file")
    parser.add_argument("--preset", help="named preset: table1-block1 or table1-block2")
    parser.add_argument("--model", choices=_MODEL_NAMES)
    parser.add_argument("--mean-photon-number", type=float, dest="mean_photon_number")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--slot-rate", type=float, dest="slot_rate")
    parser.add_argument("--efficiency", type=float)
    parser.add_argument("--dark-rate", type=float, dest="dark_rate")
    parser.add_argument("--dead-time-ps", type=int, dest="dead_time_ps")
    parser.add_argument("--pulse-width-ps", type=int, dest="pulse_width_ps")
    parser.add_argument("--jitter-ps", type=float, dest="jitter_ps")
    parser.add_argument("--window-ps", type=int, dest="window_ps")
    parser.add_argument("--acquisition-s", type=float, dest="acquisition_s")
    parser.add_argument("--output-dir", dest="output_dir")
    parser.add_argument("--events-format", choices=_EVENT_FORMATS, dest="events_format")


def _config_from_args(args, require_seed: bool = True) -> ExperimentConfig:
    text = ""
    if args.config:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as err:
            raise ConfigError([f"config: cannot read {args.config}: {err}"]) from err
    overrides = {
        key: getattr(args, key)
        for key in (*_CONFIG_FIELDS, "preset")
        if getattr(args, key, None) is not None
    }
    return parse_config(text, overrides, require_seed=require_seed)


def _progress_printer(label: str):
    def progress(done: int, total: int):
        sys.stderr.write(f"\r{label}: chunk {done}/{total}")
        sys.stderr.flush()
        if done == total:
            sys.stderr.write("\n")

    return progress


def _cmd_run(args) -> int:
    cfg = _config_from_args(args)
    progress = None if args.quiet else _progress_printer("run")
    tally, _ = run_experiment(cfg, workers=args.workers, progress=progress)
    sys.stdout.write(tally_to_csv(tally))
    sys.stderr.write(f"reports written to {cfg.output_dir}\n")
    return 0


def _cmd_compare(args) -> int:
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    if len(models) < 2:
        raise ConfigError(["compare: need at least two models"])
    if args.model is None:
        args.model = models[0]  # base config; replaced per run anyway
    cfg = _config_from_args(args)
    progress = None if args.quiet else _progress_printer("compare")
    results = compare_models(cfg, models, workers=args.workers, progress=progress)
    sys.stdout.write(comparison_csv(results))
    sys.stderr.write(f"comparison written to {cfg.output_dir}\n")
    return 0


def _cmd_calibrate(args) -> int:
    if args.from_tally:
        if args.mean_photon_number is None:
            raise ConfigError(["--mean-photon-number is required with --from-tally"])
        tally = tally_from_csv(
            Path(args.from_tally).read_text(encoding="utf-8"), acquisition_s=args.acquisition_s
        )
        targets = ReferenceBlock(
            mean_photon_number=args.mean_photon_number,
            acquisition_s=tally.acquisition_s,
            singles=tally.singles,
            pairs=tally.pairs,
            triples=tally.triples,
        )
        result = calibrate(targets)
    else:
        result = calibrate(REFERENCE_BLOCKS[args.block], args.mean_photon_number)
    lines = ["quantity,value"]
    lines.append(f"slot_rate,{result.slot_rate!r}")
    lines.append(f"efficiency,{result.efficiency!r}")
    lines.extend(f"residual_{name},{value!r}" for name, value in result.residuals.items())
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


def _cmd_predict(args) -> int:
    cfg = _config_from_args(args, require_seed=False)
    prediction = predicted_rates(
        RoutingModel(cfg.model),
        cfg.mean_photon_number,
        cfg.slot_rate,
        cfg.efficiency,
        cfg.dark_rate,
        window_ps=cfg.window_ps,
        exact=args.exact,
    )
    lines = ["counter_name,rate_per_s"]
    lines.extend(f"{name},{rate!r}" for name, rate in prediction.counters())
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bunchsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one acquisition and write reports")
    _add_config_flags(p_run)
    p_run.add_argument("--workers", type=int, default=1)
    p_run.add_argument("--quiet", action="store_true", help="suppress progress output")
    p_run.set_defaults(func=_cmd_run)

    p_cmp = sub.add_parser("compare", help="replay one source stream through several models")
    _add_config_flags(p_cmp)
    p_cmp.add_argument("--models", required=True, help="comma-separated model names (at least two)")
    p_cmp.add_argument("--workers", type=int, default=1)
    p_cmp.add_argument("--quiet", action="store_true")
    p_cmp.set_defaults(func=_cmd_compare)

    p_cal = sub.add_parser("calibrate", help="closed-form slot-rate/efficiency fit")
    p_cal.add_argument("--block", choices=sorted(REFERENCE_BLOCKS), default="block1")
    p_cal.add_argument("--mean-photon-number", type=float, dest="mean_photon_number")
    p_cal.add_argument("--from-tally", metavar="PATH", help="calibrate from a tally.csv instead")
    p_cal.add_argument("--acquisition-s", type=float, dest="acquisition_s", default=1.0)
    p_cal.set_defaults(func=_cmd_calibrate)

    p_pred = sub.add_parser("predict", help="closed-form counter rates, no simulation")
    _add_config_flags(p_pred)
    p_pred.add_argument("--exact", action="store_true", help="full Poisson sums instead of leading order")
    p_pred.set_defaults(func=_cmd_predict)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        sys.stderr.write(str(err) + "\n")
        return 1
    except Exception as err:  # noqa: BLE001 - boundary: report, don't trace
        sys.stderr.write(f"error: {err}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
