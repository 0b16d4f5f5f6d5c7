"""
Output Handler

CSV result files and the plain-text summaries the harness prints. CSVs use
the csv module's default dialect (comma separated, CRLF rows) and repr()
floats, so identical runs give byte-identical files in any locale.
"""

import io
import csv
import logging
from typing import Iterable, List, Sequence

from susp.harness.gradcheck import CheckResult
from susp.learning.trainer import METRICS_COLUMNS, RunMetrics
from susp.sim.env import EpisodeTrace, EvaluationResult
from susp.utils import atomic_write

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ("time", "pitch", "velocity", "q3", "q4", "reward")
COMPARE_COLUMNS = ("time", "pitch_active", "pitch_passive", "vel_active", "vel_passive")


def _cell(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> int:
    """Write header + rows; returns the number of data rows"""
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(header)
    count = 0
    for row in rows:
        writer.writerow([_cell(v) for v in row])
        count += 1
    atomic_write(path, buffer.getvalue())
    logger.debug(f"wrote {count} rows to {path}")
    return count


def write_metrics_csv(path: str, metrics: RunMetrics) -> int:
    return write_csv(path, METRICS_COLUMNS, (row.values() for row in metrics.rows))


def write_trace_csv(path: str, trace: EpisodeTrace) -> int:
    return write_csv(
        path,
        TRACE_COLUMNS,
        zip(trace.time, trace.pitch, trace.velocity, trace.q3, trace.q4, trace.reward),
    )


def write_compare_csv(path: str, active: EpisodeTrace, passive: EpisodeTrace) -> int:
    """Per-tick active/passive traces over the ticks both episodes lasted"""
    n = min(len(active.tick_time), len(passive.tick_time))
    rows = (
        (
            active.tick_time[i],
            active.tick_pitch[i],
            passive.tick_pitch[i],
            active.tick_velocity[i],
            passive.tick_velocity[i],
        )
        for i in range(n)
    )
    return write_csv(path, COMPARE_COLUMNS, rows)


def format_evaluation(result: EvaluationResult) -> str:
    lines = [
        f"episodes:               {len(result.traces)}",
        f"success rate:           {result.success_rate:.3f}",
        f"peak |pitch| (deg):     {result.peak_pitch:.2f}",
        f"mean crossing vel (m/s): {result.mean_crossing_velocity:.3f}",
    ]
    return "\n".join(lines)


def format_comparison(active: EpisodeTrace, passive: EpisodeTrace) -> str:
    reduction = passive.peak_pitch - active.peak_pitch
    lines = [
        f"peak |pitch| active (deg):  {active.peak_pitch:.2f}  (crossed: {active.success})",
        f"peak |pitch| passive (deg): {passive.peak_pitch:.2f}  (crossed: {passive.success})",
        f"reduction (deg):            {reduction:.2f}",
    ]
    return "\n".join(lines)


def format_gradcheck(results: List[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [
        f"{r.name:<{width}}  max_rel_err={r.max_rel_error:.3e}  tol={r.tolerance:.0e}  "
        f"{'PASS' if r.passed else 'FAIL'}"
        for r in results
    ]
    return "\n".join(lines)
