"""Experiment orchestration: JSON configs in, deterministic CSV + manifest out.

The CLI mirrors the experiment modes as subcommands (``pd``, ``pfa``,
``fused``, ``mc``, ``ccrt-check``, ``simulate``). Every run writes one CSV
with a fixed per-mode column schema and a JSON manifest alongside it carrying
the effective config, the seed, library versions, and the outcome of the
internal cross-checks. Exit status is 0 only when every cross-check passed.

Probabilities are written with 17 significant digits so a rerun from the
manifest's echoed config reproduces the CSV byte for byte.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
import scipy

from .ccrt import CongruenceSystem, PrfChannel, ccrt_solve, common_bin_spacing
from .detection_stats import (
    SNR_SCALE_DEFAULT,
    FusionRule,
    combine_m_of_l,
    from_snr,
    pd_closed_form,
    pd_oracle,
    pfa_closed_form,
    pfa_oracle,
)
from .montecarlo import McConfig, estimate
from .radar_sim import (
    RadarSetup,
    TargetTruth,
    detect_and_unfold,
    export_maps,
    simulate_channel,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "RunResult",
    "SCHEMAS",
    "load_config",
    "run",
    "main",
]

MODES = ("pd_sweep", "pfa_sweep", "fused_sweep", "mc_validate", "ccrt_check", "simulate")

# Fixed, documented column order per mode. Tests pin these.
SCHEMAS = {
    "pd_sweep": (
        "snr1_db", "channel", "pulses", "subpulses",
        "pd_closed", "pd_oracle", "pd_mc", "pd_mc_stderr",
    ),
    "pfa_sweep": (
        "snr1_db", "channel", "pulses", "subpulses",
        "pfa_closed", "pfa_oracle", "pfa_mc", "pfa_mc_stderr",
    ),
    "fused_sweep": (
        "snr1_db", "required", "total",
        "fused_pd_closed", "fused_pd_oracle", "fused_pfa_closed", "fused_pfa_oracle",
    ),
    "mc_validate": (
        "snr1_db", "channel", "pulses", "subpulses", "trials",
        "pd_closed", "pd_mc", "pd_z", "pd_agree",
        "pfa_closed", "pfa_mc", "pfa_z", "pfa_agree",
    ),
    "ccrt_check": ("moduli", "theta", "checked", "passed", "all_pass"),
    "simulate": (
        "channel", "prf_hz", "pulses", "subpulses",
        "apparent_bin", "coarse_bin", "peak_range_bin", "peak_ratio", "detected",
        "fused_bin", "fused_doppler_hz", "velocity_mps", "all_detected",
    ),
}

_ORACLE_TOL = 1e-6  # closed form vs quadrature, absolute
_MC_Z_LIMIT = 5.0


class ConfigError(ValueError):
    """Configuration rejected; the message names the offending field."""


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    channels: tuple[tuple[int, int], ...]
    lambda1: float = 0.5
    lambda2: float = 0.99
    snr_start_db: Optional[float] = None
    snr_stop_db: Optional[float] = None
    snr_step_db: Optional[float] = None
    snr_scale: float = SNR_SCALE_DEFAULT
    fusion: Optional[FusionRule] = None
    mc_trials: int = 10**6
    mc_batch: int = 1 << 16
    seed: Optional[int] = None
    radar: Optional[RadarSetup] = None
    target: Optional[TargetTruth] = None
    noise_sigma: float = 0.0
    spacing_tolerance_hz: float = 0.0
    export_map_files: bool = False
    output_path: str = "results.csv"
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def snr_grid(self) -> tuple[float, ...]:
        if self.snr_start_db is None:
            return ()
        count = int(math.floor((self.snr_stop_db - self.snr_start_db) / self.snr_step_db + 1e-9)) + 1
        return tuple(self.snr_start_db + i * self.snr_step_db for i in range(count))


@dataclass(frozen=True)
class RunResult:
    exit_code: int
    rows: tuple[dict, ...]
    csv_path: Optional[Path]
    manifest_path: Path
    failures: tuple[str, ...]


def _parse_json(path) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as err:
        raise ConfigError(
            f"config parse error at line {err.lineno} column {err.colno}: {err.msg}"
        ) from err
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    return data


def _need(raw: dict, key: str, kind, *, default=None, required=False):
    if key not in raw:
        if required:
            raise ConfigError(f"missing required field '{key}'")
        return default
    value = raw[key]
    if kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if kind is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if not isinstance(value, kind):
        raise ConfigError(f"field '{key}' must be {kind.__name__}, got {type(value).__name__}")
    return value


def _parse_channels(raw: dict) -> tuple[tuple[int, int], ...]:
    items = _need(raw, "channels", list, required=True)
    if not items:
        raise ConfigError("field 'channels' must be a non-empty list")
    channels = []
    for i, item in enumerate(items):
        if not isinstance(item, dict):
            raise ConfigError(f"channels[{i}] must be an object with 'pulses' and 'subpulses'")
        for key in ("pulses", "subpulses"):
            v = item.get(key, 1 if key == "subpulses" else None)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ConfigError(f"channels[{i}].{key} must be a positive integer")
        channels.append((item["pulses"], item.get("subpulses", 1)))
    for i in range(len(channels)):
        for j in range(i + 1, len(channels)):
            g = math.gcd(channels[i][0], channels[j][0])
            if g != 1:
                raise ConfigError(
                    f"channels[{i}].pulses={channels[i][0]} and "
                    f"channels[{j}].pulses={channels[j][0]} are not coprime (gcd {g}); "
                    "congruence unfolding needs pairwise-coprime pulse counts"
                )
    return tuple(channels)


def _parse_radar(
    raw: dict, channels: tuple[tuple[int, int], ...], spacing_tolerance_hz: float
) -> RadarSetup:
    section = _need(raw, "radar", dict, required=True)
    carrier = _need(section, "carrier_hz", float, required=True)
    width = _need(section, "pulse_width_s", float, required=True)
    bandwidth = _need(section, "bandwidth_hz", float, required=True)
    fs = _need(section, "sample_rate_hz", float)
    prfs = _need(section, "prf_hz", list, required=True)
    if len(prfs) != len(channels):
        raise ConfigError(
            f"radar.prf_hz has {len(prfs)} entries but 'channels' has {len(channels)}"
        )
    prf_channels = []
    for i, prf in enumerate(prfs):
        if not isinstance(prf, (int, float)) or isinstance(prf, bool) or prf <= 0:
            raise ConfigError(f"radar.prf_hz[{i}] must be a positive number")
        pulses, subpulses = channels[i]
        prf_channels.append(PrfChannel(prf=float(prf), num_pulses=pulses, num_subpulses=subpulses))
    spacings = [ch.bin_spacing for ch in prf_channels]
    if spacing_tolerance_hz > 0:
        spread = max(spacings) - min(spacings)
        if spread > spacing_tolerance_hz:
            raise ConfigError(
                f"radar.prf_hz: bin spacings spread {spread:.6g} Hz exceeds "
                f"spacing_tolerance_hz={spacing_tolerance_hz:.6g}"
            )
    else:
        try:
            common_bin_spacing(prf_channels)
        except ValueError as err:
            raise ConfigError(
                f"radar.prf_hz: {err} (set 'spacing_tolerance_hz' or pass "
                "--tolerance-hz to use coincidence-mode unfolding)"
            ) from err
    try:
        return RadarSetup.build(
            carrier_hz=carrier,
            pulse_width_s=width,
            bandwidth_hz=bandwidth,
            channels=tuple(prf_channels),
            sample_rate_hz=fs,
        )
    except ValueError as err:
        raise ConfigError(f"radar: {err}") from err


def _config_from_dict(raw: dict, *, mode: Optional[str] = None) -> ExperimentConfig:
    file_mode = _need(raw, "mode", str)
    if file_mode is not None and mode is not None and file_mode != mode:
        raise ConfigError(f"config mode '{file_mode}' conflicts with subcommand mode '{mode}'")
    effective = file_mode or mode
    if effective is None:
        raise ConfigError("missing required field 'mode' (or pass a subcommand)")
    if effective not in MODES:
        raise ConfigError(f"field 'mode' must be one of {MODES}, got '{effective}'")
    raw = dict(raw)
    raw["mode"] = effective

    channels = _parse_channels(raw)
    lambda1 = _need(raw, "lambda1", float, default=0.5)
    lambda2 = _need(raw, "lambda2", float, default=0.99)
    for name, lam in (("lambda1", lambda1), ("lambda2", lambda2)):
        if not 0.0 < lam < 1.0:
            raise ConfigError(f"field '{name}' must lie strictly between 0 and 1, got {lam}")
    snr_scale = _need(raw, "snr_scale", float, default=SNR_SCALE_DEFAULT)
    if snr_scale <= 0:
        raise ConfigError(f"field 'snr_scale' must be positive, got {snr_scale}")

    start = stop = step = None
    if effective in ("pd_sweep", "pfa_sweep", "fused_sweep", "mc_validate"):
        grid = _need(raw, "snr_db", dict, required=True)
        start = _need(grid, "start", float, required=True)
        stop = _need(grid, "stop", float, required=True)
        step = _need(grid, "step", float, default=1.0)
        if step <= 0:
            raise ConfigError(f"snr_db.step must be > 0, got {step}")
        if stop < start:
            raise ConfigError(f"snr_db grid is empty: start {start} exceeds stop {stop}")

    fusion = None
    if effective == "fused_sweep":
        section = _need(raw, "fusion", dict, default={})
        required = _need(section, "required", int, default=len(channels))
        total = _need(section, "total", int, default=len(channels))
        if total != len(channels):
            raise ConfigError(
                f"fusion.total={total} must equal the channel count {len(channels)}"
            )
        try:
            fusion = FusionRule(required=required, total=total)
        except ValueError as err:
            raise ConfigError(f"fusion: {err}") from err

    mc_section = _need(raw, "mc", dict, default={})
    mc_trials = _need(mc_section, "trials", int, default=10**6)
    mc_batch = _need(mc_section, "batch_size", int, default=1 << 16)
    seed = _need(raw, "seed", int, default=_need(mc_section, "seed", int))
    if mc_trials < 1:
        raise ConfigError(f"mc.trials must be >= 1, got {mc_trials}")
    if mc_batch < 1:
        raise ConfigError(f"mc.batch_size must be >= 1, got {mc_batch}")

    wants_mc = effective == "mc_validate" or (
        effective in ("pd_sweep", "pfa_sweep") and "mc" in raw
    )
    if wants_mc and seed is None:
        raise ConfigError(
            "an explicit seed is required when Monte Carlo runs "
            "(set 'seed' or 'mc.seed' in the config, or pass --seed)"
        )

    radar = None
    target = None
    noise_sigma = 0.0
    spacing_tolerance = 0.0
    export_map_files = False
    if effective == "simulate":
        spacing_tolerance = _need(raw, "spacing_tolerance_hz", float, default=0.0)
        if spacing_tolerance < 0:
            raise ConfigError(
                f"field 'spacing_tolerance_hz' must be >= 0, got {spacing_tolerance}"
            )
        radar = _parse_radar(raw, channels, spacing_tolerance)
        section = _need(raw, "target", dict, default={})
        range_m = _need(section, "range_m", float, default=10_000.0)
        velocity = _need(section, "velocity_mps", float, default=-900.0)
        amplitude = _need(section, "amplitude", float, default=1.0)
        if range_m <= 0:
            raise ConfigError(f"target.range_m must be positive, got {range_m}")
        target = TargetTruth(range_m=range_m, radial_velocity_mps=velocity, amplitude=amplitude)
        noise_sigma = _need(raw, "noise_sigma", float, default=0.0)
        if noise_sigma < 0:
            raise ConfigError(f"field 'noise_sigma' must be >= 0, got {noise_sigma}")
        export_map_files = bool(raw.get("export_maps", False))

    output_path = _need(raw, "output_path", str, default="results.csv")
    if not output_path:
        raise ConfigError("field 'output_path' must be a non-empty path")

    return ExperimentConfig(
        mode=effective,
        channels=channels,
        lambda1=lambda1,
        lambda2=lambda2,
        snr_start_db=start,
        snr_stop_db=stop,
        snr_step_db=step,
        snr_scale=snr_scale,
        fusion=fusion,
        mc_trials=mc_trials,
        mc_batch=mc_batch,
        seed=seed,
        radar=radar,
        target=target,
        noise_sigma=noise_sigma,
        spacing_tolerance_hz=spacing_tolerance,
        export_map_files=export_map_files,
        output_path=output_path,
        raw=raw,
    )


def load_config(path, *, mode: Optional[str] = None) -> ExperimentConfig:
    """Parse and validate a JSON experiment config.

    Cross-field rules (pairwise-coprime pulse counts, one shared bin spacing,
    sample rate covering the sweep bandwidth, non-empty SNR grid) are all
    enforced here so every later stage can assume a coherent setup.
    """
    return _config_from_dict(_parse_json(path), mode=mode)


def _stats_for(config: ExperimentConfig, snr_db: float, pulses: int, subpulses: int):
    return from_snr(
        snr1_db=snr_db,
        lambda1=config.lambda1,
        lambda2=config.lambda2,
        M=pulses,
        N=subpulses,
        snr_scale=config.snr_scale,
    )


def _mc_for(config: ExperimentConfig, stats, row_index: int):
    return estimate(
        McConfig(
            stats=stats,
            seed=config.seed + row_index,
            trials=config.mc_trials,
            batch_size=config.mc_batch,
        )
    )


def _rows_prob_sweep(config: ExperimentConfig, which: str, failures: list):
    rows = []
    closed_fn = pd_closed_form if which == "pd" else pfa_closed_form
    oracle_fn = pd_oracle if which == "pd" else pfa_oracle
    use_mc = "mc" in config.raw
    for snr_db in config.snr_grid():
        for index, (pulses, subpulses) in enumerate(config.channels):
            stats = _stats_for(config, snr_db, pulses, subpulses)
            closed = closed_fn(stats)
            oracle = oracle_fn(stats)
            if abs(closed - oracle) > _ORACLE_TOL:
                failures.append(
                    f"{which} closed-form vs oracle disagree at snr={snr_db} dB, "
                    f"M={pulses}: {closed!r} vs {oracle!r}"
                )
            mc_val = mc_err = None
            if use_mc:
                est = _mc_for(config, stats, len(rows))
                mc_val = est.pd_hat if which == "pd" else est.pfa_hat
                mc_err = est.stderr_pd if which == "pd" else est.stderr_pfa
                if abs(mc_val - closed) > _MC_Z_LIMIT * mc_err + 10.0 / config.mc_trials:
                    failures.append(
                        f"{which} Monte Carlo disagrees at snr={snr_db} dB, M={pulses}: "
                        f"{mc_val!r} vs closed {closed!r} (stderr {mc_err!r})"
                    )
            rows.append({
                "snr1_db": snr_db,
                "channel": index,
                "pulses": pulses,
                "subpulses": subpulses,
                f"{which}_closed": closed,
                f"{which}_oracle": oracle,
                f"{which}_mc": mc_val,
                f"{which}_mc_stderr": mc_err,
            })
    return rows


def _rows_fused(config: ExperimentConfig, failures: list):
    rows = []
    rule = config.fusion or FusionRule(len(config.channels), len(config.channels))
    for snr_db in config.snr_grid():
        stats_list = [
            _stats_for(config, snr_db, pulses, subpulses)
            for pulses, subpulses in config.channels
        ]
        pd_c = combine_m_of_l([pd_closed_form(s) for s in stats_list], rule)
        pd_o = combine_m_of_l([pd_oracle(s) for s in stats_list], rule)
        pfa_c = combine_m_of_l([pfa_closed_form(s) for s in stats_list], rule)
        pfa_o = combine_m_of_l([pfa_oracle(s) for s in stats_list], rule)
        if abs(pd_c - pd_o) > _ORACLE_TOL or abs(pfa_c - pfa_o) > _ORACLE_TOL:
            failures.append(
                f"fused closed-form vs oracle disagree at snr={snr_db} dB: "
                f"pd {pd_c!r}/{pd_o!r} pfa {pfa_c!r}/{pfa_o!r}"
            )
        rows.append({
            "snr1_db": snr_db,
            "required": rule.required,
            "total": rule.total,
            "fused_pd_closed": pd_c,
            "fused_pd_oracle": pd_o,
            "fused_pfa_closed": pfa_c,
            "fused_pfa_oracle": pfa_o,
        })
    return rows


def _rows_mc_validate(config: ExperimentConfig, failures: list):
    rows = []
    floor = 10.0 / config.mc_trials
    for snr_db in config.snr_grid():
        for index, (pulses, subpulses) in enumerate(config.channels):
            stats = _stats_for(config, snr_db, pulses, subpulses)
            pd_c = pd_closed_form(stats)
            pfa_c = pfa_closed_form(stats)
            est = _mc_for(config, stats, len(rows))
            pd_z = (est.pd_hat - pd_c) / max(est.stderr_pd, floor)
            pfa_z = (est.pfa_hat - pfa_c) / max(est.stderr_pfa, floor)
            pd_ok = abs(pd_z) <= _MC_Z_LIMIT
            pfa_ok = abs(pfa_z) <= _MC_Z_LIMIT
            if not (pd_ok and pfa_ok):
                failures.append(
                    f"mc_validate z-score out of range at snr={snr_db} dB, M={pulses}: "
                    f"pd_z={pd_z:.2f} pfa_z={pfa_z:.2f}"
                )
            rows.append({
                "snr1_db": snr_db,
                "channel": index,
                "pulses": pulses,
                "subpulses": subpulses,
                "trials": config.mc_trials,
                "pd_closed": pd_c,
                "pd_mc": est.pd_hat,
                "pd_z": pd_z,
                "pd_agree": int(pd_ok),
                "pfa_closed": pfa_c,
                "pfa_mc": est.pfa_hat,
                "pfa_z": pfa_z,
                "pfa_agree": int(pfa_ok),
            })
    return rows


def _rows_ccrt_check(config: ExperimentConfig, failures: list):
    moduli = tuple(pulses for pulses, _ in config.channels)
    theta = math.prod(moduli)
    passed = 0
    for true_bin in range(theta):
        system = CongruenceSystem(
            moduli=moduli, residues=tuple(true_bin % m for m in moduli)
        )
        if ccrt_solve(system) == true_bin:
            passed += 1
    if passed != theta:
        failures.append(f"ccrt round-trip failed for {theta - passed} of {theta} bins")
    return [{
        "moduli": "x".join(str(m) for m in moduli),
        "theta": theta,
        "checked": theta,
        "passed": passed,
        "all_pass": int(passed == theta),
    }]


def _rows_simulate(config: ExperimentConfig, failures: list, exports: list):
    from .numerics import RngStream

    setup = config.radar
    maps = []
    for index, channel in enumerate(setup.channels):
        rng = RngStream(config.seed, stream_id=index) if config.seed is not None else None
        _, dmap = simulate_channel(
            setup, channel, config.target, rng=rng, noise_sigma=config.noise_sigma
        )
        maps.append(dmap)
        if config.export_map_files:
            base = str(Path(config.output_path).with_suffix("")) + f".ch{index}"
            for p in export_maps(dmap, base):
                exports.append(str(p))
                exports.append(str(p) + ".json")
    report = detect_and_unfold(maps, setup, spacing_tolerance_hz=config.spacing_tolerance_hz)
    if not report.detected:
        failures.append("simulate: fused detection did not succeed")
    rows = []
    for index, (channel, det) in enumerate(zip(setup.channels, report.channels)):
        rows.append({
            "channel": index,
            "prf_hz": channel.prf,
            "pulses": channel.num_pulses,
            "subpulses": channel.num_subpulses,
            "apparent_bin": det.apparent_bin,
            "coarse_bin": det.coarse_bin,
            "peak_range_bin": det.peak_range_bin,
            "peak_ratio": det.peak_ratio,
            "detected": int(det.detected),
            "fused_bin": report.fused.bin if report.fused else None,
            "fused_doppler_hz": report.fused.doppler_hz if report.fused else None,
            "velocity_mps": report.velocity_mps,
            "all_detected": int(report.detected),
        })
    return rows


def _format_cell(value) -> str:
    if value is None:
        return "NA"
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return format(v, ".17g") if math.isfinite(v) else "NA"
    return str(value)


def _write_csv(path: Path, mode: str, rows: Sequence[dict]) -> bytes:
    columns = SCHEMAS[mode]
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_format_cell(row[c]) for c in columns))
    body = ("\n".join(lines) + "\n").encode()
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(body)
    return body


def _versions() -> dict:
    try:
        from importlib.metadata import version

        package = version("subpulse")
    except Exception:
        package = "unknown"
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "subpulse": package,
    }


def run(config: ExperimentConfig) -> RunResult:
    """Dispatch one experiment, write CSV + manifest, report cross-check status."""
    csv_path = Path(config.output_path)
    manifest_path = Path(str(csv_path) + ".manifest.json")
    failures: list = []
    exports: list = []
    rows: list = []
    error = None
    try:
        if config.mode == "pd_sweep":
            rows = _rows_prob_sweep(config, "pd", failures)
        elif config.mode == "pfa_sweep":
            rows = _rows_prob_sweep(config, "pfa", failures)
        elif config.mode == "fused_sweep":
            rows = _rows_fused(config, failures)
        elif config.mode == "mc_validate":
            rows = _rows_mc_validate(config, failures)
        elif config.mode == "ccrt_check":
            rows = _rows_ccrt_check(config, failures)
        elif config.mode == "simulate":
            rows = _rows_simulate(config, failures, exports)
        else:
            raise ConfigError(f"unhandled mode {config.mode!r}")
    except Exception as err:  # module errors become manifest records
        error = {"type": type(err).__name__, "message": str(err)}

    body = b""
    if error is None:
        body = _write_csv(csv_path, config.mode, rows)

    manifest = {
        "mode": config.mode,
        "seed": config.seed,
        "config": config.raw,
        "versions": _versions(),
        "output": str(csv_path) if error is None else None,
        "rows": len(rows),
        "csv_sha256": hashlib.sha256(body).hexdigest() if error is None else None,
        "exports": exports,
        "cross_checks": {"passed": error is None and not failures, "failures": failures},
        "error": error,
    }
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    exit_code = 0 if (error is None and not failures) else 1
    return RunResult(
        exit_code=exit_code,
        rows=tuple(rows),
        csv_path=csv_path if error is None else None,
        manifest_path=manifest_path,
        failures=tuple(failures),
    )


_SUBCOMMANDS = {
    "pd": "pd_sweep",
    "pfa": "pfa_sweep",
    "fused": "fused_sweep",
    "mc": "mc_validate",
    "ccrt-check": "ccrt_check",
    "simulate": "simulate",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subpulse",
        description="Run detection-statistics sweeps, Monte Carlo validation, "
        "congruence checks, and range-Doppler simulations from a JSON config.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command, mode in _SUBCOMMANDS.items():
        p = sub.add_parser(command, help=f"run the {mode} experiment")
        p.add_argument("config", help="path to the JSON config file")
        p.add_argument("--output", help="override output_path")
        p.add_argument("--seed", type=int, help="override the run seed")
        p.add_argument("--trials", type=int, help="override mc.trials")
        p.add_argument("--batch-size", type=int, help="override mc.batch_size")
        p.add_argument("--snr-scale", type=float, help="override snr_scale")
        if mode == "simulate":
            p.add_argument("--noise-sigma", type=float, help="override noise_sigma")
            p.add_argument(
                "--tolerance-hz", type=float, dest="tolerance_hz",
                help="allow unequal bin spacings up to this spread (coincidence mode)",
            )
            p.add_argument("--velocity-mps", type=float, help="override target.velocity_mps")
            p.add_argument("--range-m", type=float, help="override target.range_m")
            p.add_argument("--export-maps", action="store_true", help="write map files")
    return parser


def _apply_overrides(raw: dict, args: argparse.Namespace) -> dict:
    raw = dict(raw)
    if args.output is not None:
        raw["output_path"] = args.output
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.trials is not None or args.batch_size is not None:
        mc = dict(raw.get("mc", {}))
        if args.trials is not None:
            mc["trials"] = args.trials
        if args.batch_size is not None:
            mc["batch_size"] = args.batch_size
        raw["mc"] = mc
    if args.snr_scale is not None:
        raw["snr_scale"] = args.snr_scale
    if getattr(args, "noise_sigma", None) is not None:
        raw["noise_sigma"] = args.noise_sigma
    target_keys = (("velocity_mps", "velocity_mps"), ("range_m", "range_m"))
    for attr, key in target_keys:
        value = getattr(args, attr, None)
        if value is not None:
            target = dict(raw.get("target", {}))
            target[key] = value
            raw["target"] = target
    if getattr(args, "tolerance_hz", None) is not None:
        raw["spacing_tolerance_hz"] = args.tolerance_hz
    if getattr(args, "export_maps", False):
        raw["export_maps"] = True
    return raw


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    mode = _SUBCOMMANDS[args.command]
    try:
        raw = _apply_overrides(_parse_json(args.config), args)
        config = _config_from_dict(raw, mode=mode)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    result = run(config)
    for failure in result.failures:
        print(f"cross-check failed: {failure}", file=sys.stderr)
    if result.exit_code == 0:
        print(f"wrote {result.csv_path} ({len(result.rows)} rows); all cross-checks passed")
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
