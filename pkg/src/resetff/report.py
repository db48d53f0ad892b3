"""CSV export of simulation logs and the key: value summary report."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .sim import (
    TimeSeriesLog,
    error_reduction,
    ideal_parameters,
    rms_error,
    theta_convergence_error,
)

FINAL_WINDOW = 10.0


def csv_columns(m: int) -> list[str]:
    return ["t", "r", "e", "u_fb", "u_ff", "y"] + [f"theta_{i + 1}" for i in range(m)] + ["psi", "did_reset", "J"]


def write_csv(log: TimeSeriesLog, path) -> None:
    m = log.theta.shape[1]
    data = np.column_stack(
        [log.t, log.r, log.e, log.u_fb, log.u_ff, log.y, log.theta, log.psi, log.did_reset.astype(int), log.J]
    )
    fmt = ["%.17g"] * (6 + m) + ["%d", "%d", "%.17g"]
    np.savetxt(path, data, fmt=fmt, delimiter=",", header=",".join(csv_columns(m)), comments="")


def read_csv(path) -> dict[str, np.ndarray]:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    out = {name: data[:, i] for i, name in enumerate(header)}
    out["psi"] = out["psi"].astype(np.int8)
    out["did_reset"] = out["did_reset"].astype(bool)
    return out


def _f(x: float) -> str:
    return repr(float(x)) if math.isfinite(x) else str(x)


def summarize(name: str, log: TimeSeriesLog, scenario, baseline: TimeSeriesLog | None = None) -> dict:
    """Metrics over the final 10 s (or the whole log if shorter)."""
    span = min(FINAL_WINDOW, len(log) * log.metadata["Ts"])
    window = log.final_window(span)
    ts = ideal_parameters(scenario)
    out = {
        "controller": log.metadata["controller"]["kind"],
        "ff_enabled": str(log.metadata["ff_enabled"]).lower(),
        "diverged": str(log.diverged).lower(),
        "steps": str(len(log)),
        "window": f"{_f(window[0])}, {_f(window[1])}",
        "reset_count": str(log.reset_count),
        "rms_error": _f(rms_error(log, window)),
        "theta_final": ", ".join(_f(x) for x in log.theta[-1]),
        "theta_star": ", ".join(_f(x) for x in ts),
        "theta_convergence_error": _f(theta_convergence_error(log, ts, window)),
    }
    if baseline is not None and not log.diverged and not baseline.diverged:
        out["error_reduction"] = _f(error_reduction(log, baseline, window))
    return out


def format_report(summaries: dict[str, dict]) -> str:
    lines = []
    for name, items in summaries.items():
        lines.append(f"scenario: {name}")
        lines.extend(f"{name}.{k}: {v}" for k, v in items.items())
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        if ": " in line:
            k, v = line.split(": ", 1)
            if k != "scenario":
                out[k] = v
    return out
