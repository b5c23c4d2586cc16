"""Writing runs and sweeps to disk."""

from __future__ import annotations

import datetime as _dt
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .config import config_hash, render_config
from .metrics import ALL_MODES, ReportRow, format_report, summarize, torque_reduction_pct
from .sim import ControllerMode, Scenario, SimulationError, TrajectoryLog, run

# Bump CSV_SCHEMA_VERSION whenever CSV_HEADER or its meaning changes.
CSV_HEADER = "time,theta,theta_r,e,tau_h,tau_a,tau_m,G,xi,That1,That2,That3,theta_tilde_norm,V"
CSV_SCHEMA_VERSION = 1
SUMMARY_HEADER = "payload,rms_unassisted,rms_gc,rms_agc,red_gc_pct,red_agc_pct,final_theta_tilde_norm"
DEFAULT_OUT_DIR = "exosim_out"
OUT_ENV_VAR = "EXOSIM_OUT"


class OutputError(OSError):
    """A result file could not be written."""


def resolve_output_dir(cli_value: str | None) -> Path:
    """CLI flag, else ``$EXOSIM_OUT``, else ``./exosim_out``."""
    if cli_value:
        return Path(cli_value)
    return Path(os.environ.get(OUT_ENV_VAR) or DEFAULT_OUT_DIR)


def _fmt(x: float) -> str:
    # repr of a Python float is the shortest string that round-trips exactly.
    return repr(float(x))


def log_to_csv(log: TrajectoryLog, degrees: bool = False) -> str:
    angle = (180.0 / math.pi) if degrees else 1.0
    columns = [
        log.time,
        log.theta * angle,
        log.theta_r * angle,
        log.e * angle,
        log.tau_h,
        log.tau_a,
        log.tau_m,
        log.G,
        log.xi,
        log.theta_hat[:, 0],
        log.theta_hat[:, 1],
        log.theta_hat[:, 2],
        log.theta_tilde_norm,
        log.V,
    ]
    table = np.column_stack(columns).tolist()
    lines = [CSV_HEADER]
    lines.extend(",".join(map(repr, row)) for row in table)
    return "\n".join(lines) + "\n"


def run_summary_text(log: TrajectoryLog, reduction_pct: float | None = None) -> str:
    sc = log.scenario
    lines = [
        f"mode            {sc.controller_mode.value}",
        f"payload_M       {sc.payload_M:g} kg",
        f"duration / dt   {sc.duration:g} s / {sc.dt:g} s ({len(log)} ticks)",
        f"max |e|         {np.max(np.abs(log.e)):.6e} rad",
        f"rms tau_h       {np.sqrt(np.mean(log.tau_h ** 2)):.6e} N m",
        f"rms tau_a       {np.sqrt(np.mean(log.tau_a ** 2)):.6e} N m",
        f"max |tau_m|     {np.max(np.abs(log.tau_m)):.6e} N m",
        f"final theta_hat {', '.join(f'{v:.6g}' for v in log.theta_hat[-1])}",
        f"final |Th~|     {log.theta_tilde_norm[-1]:.6e}",
        f"final V         {log.V[-1]:.6e}",
    ]
    if reduction_pct is not None:
        lines.append(f"tau_h reduction {reduction_pct:.3f} % vs unassisted")
    return "\n".join(lines) + "\n"


@dataclass
class ResultBundle:
    csv_path: Path
    summary_path: Path
    metadata_path: Path
    metadata: dict = field(default_factory=dict)
    log: TrajectoryLog | None = None


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _prepare_dir(output_dir) -> Path:
    out = Path(output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create output directory {out}: {exc.strerror or exc}") from exc
    return out


def _metadata(sc: Scenario, degrees: bool) -> dict:
    return {
        "config_hash": config_hash(sc),
        "tool_version": __version__,
        "csv_schema_version": CSV_SCHEMA_VERSION,
        "csv_header": CSV_HEADER,
        "angle_unit": "deg" if degrees else "rad",
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }


def run_experiment(
    scenario: Scenario, output_dir, degrees: bool = False, stem: str = "run"
) -> ResultBundle:
    """Simulate one scenario and write ``<stem>.csv``, ``<stem>_summary.txt``,
    ``<stem>_config.toml`` and ``<stem>_meta.json`` into ``output_dir``.

    Only the metadata file carries a timestamp; everything else is
    byte-identical across re-runs of the same scenario.
    """
    out = _prepare_dir(output_dir)
    log = run(scenario)
    reduction = None
    if scenario.controller_mode is not ControllerMode.UNASSISTED:
        baseline = run(scenario.with_mode(ControllerMode.UNASSISTED))
        reduction = torque_reduction_pct(baseline, log)
    bundle = ResultBundle(
        csv_path=out / f"{stem}.csv",
        summary_path=out / f"{stem}_summary.txt",
        metadata_path=out / f"{stem}_meta.json",
        metadata=_metadata(scenario, degrees),
        log=log,
    )
    _write(bundle.csv_path, log_to_csv(log, degrees))
    _write(bundle.summary_path, run_summary_text(log, reduction))
    _write(out / f"{stem}_config.toml", render_config(scenario))
    _write(bundle.metadata_path, json.dumps(bundle.metadata, indent=2, sort_keys=True) + "\n")
    return bundle


def cell_stem(payload: float, mode: ControllerMode) -> str:
    return f"M{payload:g}kg_{mode.value}"


def summary_csv(rows: Sequence[ReportRow]) -> str:
    lines = [SUMMARY_HEADER]
    for r in rows:
        values = (
            r.payload,
            r.rms_unassisted,
            r.rms_gc,
            r.rms_agc,
            r.red_gc_pct,
            r.red_agc_pct,
            r.final_theta_tilde_norm,
        )
        lines.append(",".join(_fmt(v) for v in values))
    return "\n".join(lines) + "\n"


@dataclass
class SweepResult:
    output_dir: Path
    run_csvs: dict[tuple[float, ControllerMode], Path]
    summary_path: Path
    report_path: Path
    rows: list[ReportRow]
    failures: dict[tuple[float, ControllerMode], str]

    @property
    def partial(self) -> bool:
        return bool(self.failures)


def sweep(
    base: Scenario,
    payloads: Iterable[float],
    modes: Iterable[ControllerMode] = ALL_MODES,
    output_dir=DEFAULT_OUT_DIR,
    degrees: bool = False,
) -> SweepResult:
    """Run the payload x mode grid, one CSV per cell plus ``summary.csv``.

    A failing cell does not stop the sweep; it is listed in ``failures`` and
    in the text report, and its summary entries come out as NaN.
    """
    out = _prepare_dir(output_dir)
    modes = [ControllerMode(m) for m in modes]
    payloads = [float(M) for M in payloads]
    logs: dict[tuple[float, ControllerMode], TrajectoryLog] = {}
    csvs: dict[tuple[float, ControllerMode], Path] = {}
    failures: dict[tuple[float, ControllerMode], str] = {}
    for M in payloads:
        for mode in modes:
            sc = base.with_payload(M).with_mode(mode)
            try:
                log = run(sc)
            except SimulationError as exc:
                failures[(M, mode)] = str(exc)
                continue
            logs[(M, mode)] = log
            path = out / f"{cell_stem(M, mode)}.csv"
            _write(path, log_to_csv(log, degrees))
            csvs[(M, mode)] = path

    rows = summarize(logs)
    have = {r.payload for r in rows}
    nan = math.nan
    for M in payloads:
        if M not in have:
            rows.append(ReportRow(M, *([nan] * 9)))
    rows.sort(key=lambda r: r.payload)

    summary_path = out / "summary.csv"
    report_path = out / "summary.txt"
    _write(summary_path, summary_csv(rows))
    report = format_report(rows)
    if failures:
        report += "\n\nPARTIAL RESULTS, failed cells:\n" + "\n".join(
            f"  M={M:g} kg {mode.value}: {msg}" for (M, mode), msg in failures.items()
        )
    _write(report_path, report + "\n")
    meta = _metadata(base, degrees)
    meta.update(payloads=payloads, modes=[m.value for m in modes], failed_cells=len(failures))
    _write(out / "sweep_meta.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return SweepResult(out, csvs, summary_path, report_path, rows, failures)
