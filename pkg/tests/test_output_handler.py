import csv

from susp.harness.gradcheck import CheckResult
from susp.harness.output_handler import (
    COMPARE_COLUMNS,
    TRACE_COLUMNS,
    format_comparison,
    format_evaluation,
    format_gradcheck,
    write_compare_csv,
    write_csv,
    write_metrics_csv,
    write_trace_csv,
)
from susp.learning.trainer import METRICS_COLUMNS, MetricsRow, RunMetrics
from susp.sim.env import EpisodeTrace, EvaluationResult


def _read(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.reader(f))


def _trace(n, pitch, success=False):
    return EpisodeTrace(
        time=[0.05 * (i + 1) for i in range(n)],
        pitch=[pitch] * n,
        velocity=[0.7] * n,
        q3=[1.0] * n,
        q4=[-2.0] * n,
        reward=[0.0] * (n - 1) + [100.0 if success else -100.0],
        tick_time=[0.001 * (i + 1) for i in range(10 * n)],
        tick_pitch=[pitch] * (10 * n),
        tick_velocity=[0.7] * (10 * n),
        success=success,
        peak_pitch=abs(pitch),
    )


def test_cells_are_exact(tmp_path):
    path = tmp_path / "x.csv"
    count = write_csv(str(path), ("a", "b", "c"), [(1, 0.1, True), (2, 1e-17, False)])
    assert count == 2
    assert _read(path) == [["a", "b", "c"], ["1", "0.1", "1"], ["2", "1e-17", "0"]]


def test_metrics_file(tmp_path):
    metrics = RunMetrics(rows=[MetricsRow(1000, -75.0, 12.5, 0.25, 1.5, 0.8)])
    path = tmp_path / "metrics.csv"
    write_metrics_csv(str(path), metrics)
    rows = _read(path)
    assert tuple(rows[0]) == METRICS_COLUMNS
    assert rows[1] == ["1000", "-75.0", "12.5", "0.25", "1.5", "0.8"]


def test_trace_file(tmp_path):
    path = tmp_path / "trace_0.csv"
    assert write_trace_csv(str(path), _trace(4, 3.0, success=True)) == 4
    rows = _read(path)
    assert tuple(rows[0]) == TRACE_COLUMNS
    assert rows[-1][-1] == "100.0"


def test_compare_file_uses_common_length(tmp_path):
    path = tmp_path / "compare.csv"
    count = write_compare_csv(str(path), _trace(3, 5.0), _trace(5, 12.0))
    assert count == 30
    rows = _read(path)
    assert tuple(rows[0]) == COMPARE_COLUMNS
    assert rows[1][1:3] == ["5.0", "12.0"]


def test_summaries():
    result = EvaluationResult([_trace(3, 8.0, success=True), _trace(3, 21.0)])
    text = format_evaluation(result)
    assert "0.500" in text
    assert "21.00" in text

    text = format_comparison(_trace(3, 8.0, success=True), _trace(3, 21.0))
    assert "13.00" in text

    text = format_gradcheck([CheckResult("critic_loss", 1e-9, 1e-4), CheckResult("mlp", 0.5, 1e-4)])
    assert "PASS" in text and "FAIL" in text
