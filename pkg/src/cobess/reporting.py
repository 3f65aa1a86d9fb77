"""Plot-ready tables and accounting checks recomputed from raw metrics.

Everything emitted here is a pure function of the metrics files a run
wrote: the revenue decomposition (with the identity
sum_reward + baseline_revenue = net_revenue re-verified row by row),
per-design quartile tables recomputed from raw sweep cells, and the
design-mean trajectory.  Malformed inputs fail with the file and line.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

from . import trainer
from .errors import ValidationError
from .trainer import SweepCell, SweepSummary, summarize_cells

DECOMPOSITION_FILE = "decomposition.csv"
QUARTILES_FILE = "g_quartiles.csv"
MU_TRAJECTORY_FILE = "mu_trajectory.csv"
REPORT_FILE = "report.json"

IDENTITY_TOLERANCE = 1e-9


def _read_table(path: Path, expected_header: str) -> list[dict[str, str]]:
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"{path}: cannot read: {exc}") from exc
    lines = text.splitlines()
    if not lines or lines[0] != expected_header:
        found = lines[0] if lines else "<empty file>"
        raise ValidationError(
            f"{path}: line 1: expected header '{expected_header}', "
            f"found '{found}'")
    names = expected_header.split(",")
    rows = []
    for line_no, row in enumerate(csv.reader(lines[1:]), start=2):
        if not row:
            continue
        if len(row) != len(names):
            raise ValidationError(
                f"{path}: line {line_no}: expected {len(names)} fields, "
                f"found {len(row)}")
        rows.append(dict(zip(names, row)))
    return rows


def _number(row: dict[str, str], column: str, path: Path, line_no: int,
            kind=float):
    try:
        return kind(row[column])
    except ValueError as exc:
        raise ValidationError(
            f"{path}: line {line_no}: column '{column}': "
            f"not a number: {row[column]!r}") from exc


@dataclass(frozen=True)
class DecompositionRow:
    """One evaluation's accounting, with the recomputed identity gap."""

    episode: int
    design: float
    sum_reward: float
    baseline_revenue: float
    market_revenue: float
    net_revenue: float
    deviation_penalty: float
    degradation: float
    negative_flag: int
    identity_gap: float


@dataclass
class ReportResult:
    decomposition: list[DecompositionRow]
    quartiles: list[SweepSummary]
    mu_trajectory: list[tuple[int, int, float, float]]
    max_identity_gap: float
    written: list[str]


def check_decomposition(metrics_dir: str | Path,
                        tolerance: float = IDENTITY_TOLERANCE
                        ) -> list[DecompositionRow]:
    """Re-verify sum_reward + baseline_revenue = net_revenue per evaluation."""
    path = Path(metrics_dir) / trainer.EVAL_FILE
    rows = _read_table(path, trainer._CSV_HEADERS[trainer.EVAL_FILE])
    out = []
    for line_no, row in enumerate(rows, start=2):
        values = {c: _number(row, c, path, line_no)
                  for c in ("design", "sum_reward", "baseline_revenue",
                            "market_revenue", "net_revenue",
                            "deviation_penalty", "degradation")}
        episode = _number(row, "episode", path, line_no, int)
        flag = _number(row, "negative_flag", path, line_no, int)
        gap = abs(values["sum_reward"] + values["baseline_revenue"]
                  - values["net_revenue"])
        if gap > tolerance * max(1.0, abs(values["net_revenue"])):
            raise ValidationError(
                f"{path}: line {line_no}: revenue decomposition broken: "
                f"|{values['sum_reward']} + {values['baseline_revenue']} - "
                f"{values['net_revenue']}| = {gap}")
        out.append(DecompositionRow(episode=episode, negative_flag=flag,
                                    identity_gap=gap, **values))
    return out


def _read_sweep_cells(path: Path) -> list[SweepCell]:
    rows = _read_table(path, trainer._SWEEP_HEADER)
    cells = []
    for line_no, row in enumerate(rows, start=2):
        cells.append(SweepCell(
            omega=_number(row, "omega", path, line_no),
            repeat=_number(row, "repeat", path, line_no, int),
            seed=_number(row, "seed", path, line_no, int),
            objective=_number(row, "objective", path, line_no),
            sum_reward=_number(row, "sum_reward", path, line_no),
            negative_flag=bool(_number(row, "negative_flag", path, line_no, int)),
            failed=bool(_number(row, "failed", path, line_no, int)),
            error=row["error"]))
    return cells


def _read_mu_rows(path: Path) -> list[tuple[int, int, float, float]]:
    rows = _read_table(path, trainer._CSV_HEADERS[trainer.MU_FILE])
    return [(_number(r, "update", path, n, int),
             _number(r, "episode", path, n, int),
             _number(r, "mu", path, n),
             _number(r, "gradient", path, n))
            for n, r in enumerate(rows, start=2)]


def report(metrics_dir: str | Path, out_dir: str | Path,
           tolerance: float = IDENTITY_TOLERANCE) -> ReportResult:
    """Recompute summary tables from one run directory's raw metrics.

    Emits whichever tables the directory supports: decomposition.csv from
    evaluations, g_quartiles.csv from raw sweep cells, mu_trajectory.csv
    from design updates, and report.json tying them together.
    """
    metrics_dir = Path(metrics_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[str] = []

    decomposition: list[DecompositionRow] = []
    if (metrics_dir / trainer.EVAL_FILE).exists():
        decomposition = check_decomposition(metrics_dir, tolerance)
        lines = [("episode,design,sum_reward,baseline_revenue,market_revenue,"
                  "net_revenue,deviation_penalty,degradation,negative_flag,"
                  "identity_gap")]
        for r in decomposition:
            lines.append(f"{r.episode},{r.design!r},{r.sum_reward!r},"
                         f"{r.baseline_revenue!r},{r.market_revenue!r},"
                         f"{r.net_revenue!r},{r.deviation_penalty!r},"
                         f"{r.degradation!r},{r.negative_flag},"
                         f"{r.identity_gap!r}")
        (out / DECOMPOSITION_FILE).write_text("\n".join(lines) + "\n")
        written.append(DECOMPOSITION_FILE)

    quartiles: list[SweepSummary] = []
    if (metrics_dir / trainer.SWEEP_FILE).exists():
        cells = _read_sweep_cells(metrics_dir / trainer.SWEEP_FILE)
        seen: list[float] = []
        for cell in cells:
            if cell.omega not in seen:
                seen.append(cell.omega)
        quartiles = [summarize_cells(w, [c for c in cells if c.omega == w])
                     for w in seen]
        trainer._write_rows(out / QUARTILES_FILE,
                            trainer._SWEEP_SUMMARY_HEADER, quartiles)
        written.append(QUARTILES_FILE)

    mu_trajectory: list[tuple[int, int, float, float]] = []
    if (metrics_dir / trainer.MU_FILE).exists():
        mu_trajectory = _read_mu_rows(metrics_dir / trainer.MU_FILE)
        lines = [trainer._CSV_HEADERS[trainer.MU_FILE]]
        for update, episode, mu, gradient in mu_trajectory:
            lines.append(f"{update},{episode},{mu!r},{gradient!r}")
        (out / MU_TRAJECTORY_FILE).write_text("\n".join(lines) + "\n")
        written.append(MU_TRAJECTORY_FILE)

    if not written:
        raise ValidationError(
            f"{metrics_dir}: no metrics files found "
            f"({trainer.EVAL_FILE}, {trainer.SWEEP_FILE}, {trainer.MU_FILE})")

    gaps = [r.identity_gap for r in decomposition]
    summary = {
        "metrics_dir": str(metrics_dir),
        "n_evaluations": len(decomposition),
        "max_identity_gap": max(gaps) if gaps else None,
        "identity_tolerance": tolerance,
        "n_sweep_designs": len(quartiles),
        "n_mu_updates": len(mu_trajectory),
        "tables": written,
    }
    (out / REPORT_FILE).write_text(json.dumps(summary, indent=2) + "\n")
    written.append(REPORT_FILE)
    return ReportResult(decomposition, quartiles, mu_trajectory,
                        max(gaps) if gaps else 0.0, written)
