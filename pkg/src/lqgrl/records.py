"""CSV schemas for training and sweep results.

Floats are printed with 17 significant digits so a read back parses to
the identical double; ``inf`` and ``-inf`` are legal literals and an
empty field means undefined (margins of a run that found no stabilizing
policy). The sweep schema is::

    b,trial,seed,J,cost,md,alpha,gain_lo,gain_hi,phase_deg,theta0,...

with one ``theta<k>`` column per policy parameter. Summary files carry
per-level statistics plus one reference row for the model-based LQG
controller::

    kind,b,trials,md_mean,md_std,cost_mean,cost_std
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

__all__ = ["SweepRecord", "SummaryRow", "format_float", "parse_float",
           "write_sweep_csv", "read_sweep_csv",
           "write_summary_csv", "read_summary_csv", "summarize"]

_FIXED_COLUMNS = ["b", "trial", "seed", "J", "cost", "md", "alpha",
                  "gain_lo", "gain_hi", "phase_deg"]


def format_float(x) -> str:
    """17-significant-digit decimal rendering; empty string for None."""
    if x is None:
        return ""
    x = float(x)
    if np.isnan(x):
        raise ValueError("NaN is not representable in result files")
    if np.isposinf(x):
        return "inf"
    if np.isneginf(x):
        return "-inf"
    return format(x, ".17g")


def parse_float(s: str):
    if s == "":
        return None
    return float(s)


@dataclass(frozen=True)
class SweepRecord:
    """One (perturbation level, trial) outcome.

    Margin fields are None when the trial found no stabilizing policy
    (``J = -inf``); ``cost`` is always ``-J``.
    """

    b: float
    trial: int
    seed: int
    J: float
    theta: np.ndarray
    md: float | None = None
    alpha: float | None = None
    gain_lo: float | None = None
    gain_hi: float | None = None
    phase_deg: float | None = None

    @property
    def cost(self) -> float:
        return -self.J


def write_sweep_csv(path, records, n_theta: int):
    records = list(records)
    for rec in records:
        if len(rec.theta) != n_theta:
            raise ValueError("record theta length does not match n_theta")
    header = _FIXED_COLUMNS + [f"theta{k}" for k in range(n_theta)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for rec in sorted(records, key=lambda r: (r.b, r.trial)):
            row = [format_float(rec.b), str(rec.trial), str(rec.seed),
                   format_float(rec.J), format_float(rec.cost),
                   format_float(rec.md), format_float(rec.alpha),
                   format_float(rec.gain_lo), format_float(rec.gain_hi),
                   format_float(rec.phase_deg)]
            row += [format_float(t) for t in rec.theta]
            writer.writerow(row)


def read_sweep_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"{path}: empty file") from None
        if header[:len(_FIXED_COLUMNS)] != _FIXED_COLUMNS:
            raise ConfigError(f"{path}: unexpected header {header!r}")
        theta_cols = header[len(_FIXED_COLUMNS):]
        expected = [f"theta{k}" for k in range(len(theta_cols))]
        if theta_cols != expected:
            raise ConfigError(f"{path}: malformed theta columns {theta_cols!r}")
        records = []
        for line, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ConfigError(f"{path}:{line}: expected {len(header)} fields")
            vals = dict(zip(header, row))
            theta = np.array([parse_float(vals[c]) for c in theta_cols], dtype=float)
            records.append(SweepRecord(
                b=parse_float(vals["b"]),
                trial=int(vals["trial"]),
                seed=int(vals["seed"]),
                J=parse_float(vals["J"]),
                theta=theta,
                md=parse_float(vals["md"]),
                alpha=parse_float(vals["alpha"]),
                gain_lo=parse_float(vals["gain_lo"]),
                gain_hi=parse_float(vals["gain_hi"]),
                phase_deg=parse_float(vals["phase_deg"]),
            ))
    return records


@dataclass(frozen=True)
class SummaryRow:
    kind: str  # "stats" for a sweep level, "lqg_ref" for the baseline row
    b: float | None
    trials: int | None
    md_mean: float | None
    md_std: float | None
    cost_mean: float | None
    cost_std: float | None


def summarize(records, lqg_md=None, lqg_cost=None):
    """Per-level mean and sample standard deviation over finite trials."""
    rows = []
    for b in sorted({rec.b for rec in records}):
        group = [rec for rec in records if rec.b == b and np.isfinite(rec.J)]
        n = len(group)
        if n == 0:
            rows.append(SummaryRow("stats", b, 0, None, None, None, None))
            continue
        mds = np.array([rec.md for rec in group], dtype=float)
        costs = np.array([rec.cost for rec in group], dtype=float)
        md_std = float(mds.std(ddof=1)) if n > 1 else 0.0
        cost_std = float(costs.std(ddof=1)) if n > 1 else 0.0
        rows.append(SummaryRow("stats", b, n, float(mds.mean()), md_std,
                               float(costs.mean()), cost_std))
    if lqg_md is not None or lqg_cost is not None:
        rows.append(SummaryRow("lqg_ref", None, None, lqg_md, None, lqg_cost, None))
    return rows


def write_summary_csv(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["kind", "b", "trials", "md_mean", "md_std",
                         "cost_mean", "cost_std"])
        for r in rows:
            writer.writerow([
                r.kind, format_float(r.b),
                "" if r.trials is None else str(r.trials),
                format_float(r.md_mean), format_float(r.md_std),
                format_float(r.cost_mean), format_float(r.cost_std),
            ])


def read_summary_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        expected = ["kind", "b", "trials", "md_mean", "md_std", "cost_mean", "cost_std"]
        if header != expected:
            raise ConfigError(f"{path}: unexpected summary header {header!r}")
        rows = []
        for row in reader:
            vals = dict(zip(header, row))
            rows.append(SummaryRow(
                kind=vals["kind"],
                b=parse_float(vals["b"]),
                trials=None if vals["trials"] == "" else int(vals["trials"]),
                md_mean=parse_float(vals["md_mean"]),
                md_std=parse_float(vals["md_std"]),
                cost_mean=parse_float(vals["cost_mean"]),
                cost_std=parse_float(vals["cost_std"]),
            ))
    return rows
