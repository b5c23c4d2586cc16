"""Effort and estimation metrics over trajectory logs, and the payload x mode sweep."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .arm import ParamVector, true_params
from .sim import ControllerMode, Scenario, TrajectoryLog, run

ALL_MODES = (ControllerMode.UNASSISTED, ControllerMode.GC, ControllerMode.AGC)
DEFAULT_PAYLOADS = (0.0, 3.0, 5.0, 10.0)


def rms(series: Sequence[float]) -> float:
    a = np.asarray(series, dtype=float)
    if a.size == 0:
        raise ValueError("rms of an empty series")
    return float(np.sqrt(np.mean(a * a)))


def torque_reduction_pct(unassisted: TrajectoryLog, assisted: TrajectoryLog) -> float:
    """Percent drop in RMS human torque; negative when assistance makes things worse."""
    if len(unassisted) == 0 or len(assisted) == 0:
        raise ValueError("empty trajectory log")
    if len(unassisted) != len(assisted) or not np.array_equal(unassisted.time, assisted.time):
        raise ValueError("logs must share the same time grid")
    if not np.array_equal(unassisted.theta_r, assisted.theta_r):
        raise ValueError("logs must share the same reference trajectory")
    base = rms(unassisted.tau_h)
    if base == 0.0:
        raise ValueError("unassisted RMS torque is zero")
    return 100.0 * (1.0 - rms(assisted.tau_h) / base)


def estimation_error_norm(log: TrajectoryLog, true_params: ParamVector) -> np.ndarray:
    if log.scenario.controller_mode is not ControllerMode.AGC:
        raise ValueError(
            f"estimation error needs an AGC log, got {log.scenario.controller_mode.value}"
        )
    return np.linalg.norm(np.asarray(true_params, dtype=float) - log.theta_hat, axis=1)


@dataclass(frozen=True)
class ReportRow:
    payload: float
    rms_unassisted: float
    rms_gc: float
    rms_agc: float
    red_gc_pct: float
    red_agc_pct: float
    final_theta_tilde_norm: float
    max_abs_e_unassisted: float
    max_abs_e_gc: float
    max_abs_e_agc: float


def _run_cell(scenario: Scenario) -> TrajectoryLog:
    return run(scenario)


def run_grid(
    base: Scenario,
    payloads: Iterable[float] = DEFAULT_PAYLOADS,
    modes: Iterable[ControllerMode] = ALL_MODES,
    workers: int = 1,
) -> dict[tuple[float, ControllerMode], TrajectoryLog]:
    """Run every (payload, mode) cell; results are keyed, so order never depends on scheduling."""
    cells = [(float(M), ControllerMode(m)) for M in payloads for m in modes]
    scenarios = [base.with_payload(M).with_mode(m) for M, m in cells]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            logs = list(pool.map(_run_cell, scenarios))
    else:
        logs = [_run_cell(s) for s in scenarios]
    return dict(zip(cells, logs))


def summarize(logs: Mapping[tuple[float, ControllerMode], TrajectoryLog]) -> list[ReportRow]:
    """One row per payload; cells that were not run come out as NaN."""
    nan = math.nan
    rows = []
    for M in sorted({M for M, _ in logs}):
        un = logs.get((M, ControllerMode.UNASSISTED))
        gc = logs.get((M, ControllerMode.GC))
        agc = logs.get((M, ControllerMode.AGC))
        rows.append(
            ReportRow(
                payload=M,
                rms_unassisted=rms(un.tau_h) if un else nan,
                rms_gc=rms(gc.tau_h) if gc else nan,
                rms_agc=rms(agc.tau_h) if agc else nan,
                red_gc_pct=torque_reduction_pct(un, gc) if un and gc else nan,
                red_agc_pct=torque_reduction_pct(un, agc) if un and agc else nan,
                final_theta_tilde_norm=(
                    float(estimation_error_norm(agc, true_params(agc.scenario.arm))[-1])
                    if agc
                    else nan
                ),
                max_abs_e_unassisted=float(np.max(np.abs(un.e))) if un else nan,
                max_abs_e_gc=float(np.max(np.abs(gc.e))) if gc else nan,
                max_abs_e_agc=float(np.max(np.abs(agc.e))) if agc else nan,
            )
        )
    return rows


def compare_report(
    base: Scenario,
    payloads: Iterable[float] = DEFAULT_PAYLOADS,
    modes: Iterable[ControllerMode] = ALL_MODES,
    workers: int = 1,
) -> list[ReportRow]:
    return summarize(run_grid(base, payloads, modes, workers))


def format_report(rows: Sequence[ReportRow]) -> str:
    lines = [
        f"{'M [kg]':>7} {'rms_un':>9} {'rms_gc':>9} {'rms_agc':>9} "
        f"{'red_gc%':>8} {'red_agc%':>8} {'|Th~|(T)':>9} {'max|e|agc':>9}"
    ]
    for r in rows:
        lines.append(
            f"{r.payload:7.1f} {r.rms_unassisted:9.4f} {r.rms_gc:9.4f} {r.rms_agc:9.4f} "
            f"{r.red_gc_pct:8.2f} {r.red_agc_pct:8.2f} {r.final_theta_tilde_norm:9.4f} "
            f"{r.max_abs_e_agc:9.4f}"
        )
    return "\n".join(lines)
