"""Experiment orchestration: analyze, simulate, sweep.

Every output file is a pure function of the configuration (and seed), so
reruns are byte-identical. Wall-clock time is kept on the in-memory summary
and logged, never written.
"""
from __future__ import annotations

import csv
import hashlib
import io
import itertools
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import functionals as fn
from .bounds import BoundReport, audit_run
from .config import ProblemConfig, _fmt, override
from .dynamics import COLUMNS, TrajectoryRecord, energy_monotone, integrate_system, max_relative_residual

log = logging.getLogger(__name__)

SWEEP_COLUMNS = ("index", "status", "error", "digest", "termination", "T_num", "T_num_hi", "E0", "J0", "I0",
                 "tags", "T_upper", "T_upper_kind", "T_lower", "max_rel_residual")


@dataclass
class RunSummary:
    digest: str
    well: fn.WellAnalysis
    regime: fn.RegimeTag
    report: BoundReport
    termination: str
    wall_clock: float
    files: dict[str, str] = field(default_factory=dict)  # name -> sha256
    record: TrajectoryRecord | None = field(default=None, repr=False)

    @property
    def failed(self) -> list[str]:
        return [k for k, v in self.report.verdicts.items() if v.status == "Fail"]


# --- writers -------------------------------------------------------------------------

def format_items(items) -> str:
    lines = []
    for k, v in items:
        if v is None:
            continue
        if isinstance(v, (np.floating, np.integer)):
            v = v.item()
        lines.append(f"{k} = {_fmt(v)}\n")
    return "".join(lines)


def _write(path: Path, text: str) -> str:
    path.parent.mkdir(parents=True, exist_ok=True)
    data = text.encode()
    path.write_bytes(data)
    return hashlib.sha256(data).hexdigest()


def trajectory_csv(record: TrajectoryRecord) -> str:
    buf = io.StringIO()
    buf.write(",".join(COLUMNS) + "\n")
    cols = [record[c].tolist() for c in COLUMNS]
    for row in zip(*cols):
        buf.write(",".join(repr(x) for x in row) + "\n")
    return buf.getvalue()


def _out_dir(config: ProblemConfig, out: str | Path | None) -> Path:
    return Path(out if out is not None else config.output.dir)


# --- commands ------------------------------------------------------------------------

def analysis_items(config: ProblemConfig, well: fn.WellAnalysis, regime: fn.RegimeTag):
    items = [("config.name", config.name), ("config.digest", config.digest())]
    items += [(f"well.{k}", v) for k, v in well.as_items()]
    items += [(f"regime.{k}", v) for k, v in regime.as_items()]
    return items


def cmd_analyze(config: ProblemConfig, out: str | Path | None = None) -> tuple[fn.WellAnalysis, fn.RegimeTag]:
    well = config.well_analysis()
    u0, u1 = config.initial_fields()
    regime = fn.classify_initial_data(u0, u1, well, config.exponents, u0.domain.lambda1)
    _write(_out_dir(config, out) / config.output.report, format_items(analysis_items(config, well, regime)))
    return well, regime


def cmd_simulate(config: ProblemConfig, out: str | Path | None = None) -> RunSummary:
    t_start = time.perf_counter()
    out_dir = _out_dir(config, out)
    well, regime = cmd_analyze(config, out_dir)
    u0, u1 = config.initial_fields()
    try:
        record, _ = integrate_system(config.system(), u0, u1, config.integrator, config.detector)
        report = audit_run(config, record, well, u0, u1)
    except Exception as exc:
        raise RuntimeError(f"simulation of {config.name!r} ({config.digest()[:12]}) failed: {exc}") from exc

    files = {config.output.report: hashlib.sha256((out_dir / config.output.report).read_bytes()).hexdigest()}
    files[config.output.csv] = _write(out_dir / config.output.csv, trajectory_csv(record))
    items = [("config.name", config.name), ("config.digest", config.digest())]
    items += [(f"well.{k}", v) for k, v in well.as_items()]
    items += report.items()
    items += [
        ("run.samples", len(record)),
        ("run.rejected_steps", record.rejected_steps),
        ("run.t_end", float(record["t"][-1])),
        ("run.max_relative_residual", max_relative_residual(record)),
        ("run.energy_monotone", energy_monotone(record)),
    ]
    items += [(f"file.{k}.sha256", v) for k, v in sorted(files.items())]
    _write(out_dir / config.output.summary, format_items(items))
    files[config.output.summary] = hashlib.sha256((out_dir / config.output.summary).read_bytes()).hexdigest()

    wall = time.perf_counter() - t_start
    log.info("simulate %s: %s after %d samples in %.2fs", config.name, record.termination, len(record), wall)
    return RunSummary(config.digest(), well, regime, report, record.termination, wall, files, record)


# --- sweeps --------------------------------------------------------------------------

def _run_point(args) -> dict:
    index, config, coords, point_dir = args
    row = {"index": index, "status": "ok", "error": ""}
    row.update(coords)
    try:
        cfg = config
        for key, val in coords.items():
            cfg = override(cfg, key, val)
        s = cmd_simulate(cfg, point_dir)
    except Exception as exc:  # recorded, the sweep carries on
        row.update(status="failed", error=f"{type(exc).__name__}: {exc}".replace("\n", " "))
        return row
    rep, rt = s.report, s.regime
    row.update(
        digest=s.digest, termination=s.termination, T_num=rep.T_num,
        T_num_hi=rep.T_num_bracket[1] if rep.T_num_bracket else None,
        E0=rt.E0, J0=rt.J0, I0=rt.I0, tags=",".join(t for t in fn.REGIME_TAGS if rt.has(t)),
        T_upper=rep.T_upper, T_upper_kind=rep.T_upper_kind,
        T_lower=rep.lower.T_lower if rep.lower else None,
        max_rel_residual=max_relative_residual(s.record),
    )
    return row


def _sort_key(v):
    return (0, float(v), "") if isinstance(v, (int, float)) else (1, 0.0, str(v))


def sign_change_brackets(values, f) -> list[tuple[float, float]]:
    """Consecutive (x_i, x_{i+1}) where f changes sign (zeros count as a change)."""
    out = []
    for (x0, y0), (x1, y1) in zip(zip(values, f), zip(values[1:], f[1:])):
        if y0 is None or y1 is None:
            continue
        if y0 == 0 or y1 == 0 or (y0 < 0) != (y1 < 0):
            out.append((x0, x1))
    return out


def cmd_sweep(
    config: ProblemConfig,
    axes: list[tuple[str, tuple]] | None = None,
    out: str | Path | None = None,
    workers: int = 1,
) -> list[dict]:
    """Run every grid point as an independent simulation and merge in coordinate order."""
    axes = list(axes if axes is not None else config.sweep)
    if not axes:
        raise ValueError("no sweep axes given")
    for key, vals in axes:
        if not vals or any(isinstance(v, float) and not np.isfinite(v) for v in vals):
            raise ValueError(f"sweep axis {key} must be a finite non-empty list")
    out_dir = _out_dir(config, out)
    keys = [k for k, _ in axes]
    grid = sorted(itertools.product(*[vals for _, vals in axes]), key=lambda c: [_sort_key(v) for v in c])
    base = config if not config.sweep else _strip_sweep(config)
    jobs = [(i, base, dict(zip(keys, c)), out_dir / "points" / f"{i:04d}") for i, c in enumerate(grid)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_point, jobs))
    else:
        rows = [_run_point(j) for j in jobs]
    rows.sort(key=lambda r: r["index"])

    header = ["index"] + keys + [c for c in SWEEP_COLUMNS if c != "index"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in header])
    _write(out_dir / "sweep.csv", buf.getvalue())

    items = [("sweep.points", len(rows)), ("sweep.failed", sum(r["status"] != "ok" for r in rows))]
    items += [(f"sweep.axis.{i}", k) for i, k in enumerate(keys)]
    # crossings along the first axis, one line per setting of the other axes
    others = keys[1:]
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        groups.setdefault(tuple(r[k] for k in others), []).append(r)
    for g, members in groups.items():
        tag = "".join(f"[{k}={_fmt(v)}]" for k, v in zip(others, g))
        xs = [m[keys[0]] for m in members]
        for q in ("E0", "I0"):
            for j, (a, b) in enumerate(sign_change_brackets(xs, [m.get(q) for m in members])):
                items.append((f"crossing.{q}{tag}.{j}", [a, b]))
    _write(out_dir / "sweep_summary.txt", format_items(items))
    return rows


def _strip_sweep(config: ProblemConfig) -> ProblemConfig:
    from dataclasses import replace

    return replace(config, sweep=())


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)
