"""
Report writing: one CSV row per parameter point plus a JSON summary.

CSV cells never carry wall-clock data, so reruns with the same inputs and
seed give identical bytes. Timing lives in the summary only.
"""

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

BASE_COLUMNS = ("experiment", "input_digest")
TRAILING_COLUMNS = ("passed", "diagnostic")


@dataclass
class ReportRow:
    """
    One parameter point of an experiment.

    Attributes:
        experiment: Experiment id, e.g. "flow" or "sweep-kappa/3"
        input_digest: Combined SHA-256 of the input files
        values: Column name to measured or predicted value
        passed: Outcome of the bound check, None when the row checks nothing
        diagnostic: Failure or warning text
    """

    experiment: str
    input_digest: str
    values: Dict[str, Any]
    passed: Optional[bool] = None
    diagnostic: str = ""


@dataclass
class ExperimentOutcome:
    """Everything a subcommand produced, ready to be written."""

    command: str
    header: Tuple[str, ...]
    rows: List[ReportRow]
    parameters: Dict[str, Any]
    input_digests: Dict[str, str] = field(default_factory=dict)
    summary: Dict[str, Any] = field(default_factory=dict)
    diagnostics: List[str] = field(default_factory=list)
    checks: Dict[str, bool] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        rows_ok = all(row.passed is not False for row in self.rows)
        return rows_ok and all(self.checks.values())


def format_value(value: Any, digits: int = 17) -> str:
    """Cell text: floats with the given significant digits, booleans lowercase."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.{digits}g}"
    if hasattr(value, "item"):
        return format_value(value.item(), digits)
    return str(value)


def write_csv(path: Path, outcome: ExperimentOutcome, digits: int = 17) -> None:
    columns = BASE_COLUMNS + tuple(outcome.header) + TRAILING_COLUMNS
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(columns)
        for row in outcome.rows:
            cells = [row.experiment, row.input_digest]
            cells += [format_value(row.values.get(name), digits) for name in outcome.header]
            cells += [format_value(row.passed, digits), row.diagnostic]
            writer.writerow(cells)


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, complex):
        return [_jsonable(value.real), _jsonable(value.imag)]
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        return _jsonable(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        return format_value(value)
    return value


def build_summary(
    outcome: ExperimentOutcome, schema_version: int, timing: Dict[str, float]
) -> Dict[str, Any]:
    rows = [
        {
            "experiment": row.experiment,
            "values": row.values,
            "passed": row.passed,
            "diagnostic": row.diagnostic,
        }
        for row in outcome.rows
    ]
    return _jsonable({
        "schema_version": schema_version,
        "command": outcome.command,
        "parameters": outcome.parameters,
        "input_digests": outcome.input_digests,
        "passed": outcome.passed,
        "checks": outcome.checks,
        "summary": outcome.summary,
        "rows": rows,
        "diagnostics": outcome.diagnostics,
        "timing": timing,
    })


def write_reports(
    out_dir: Path,
    outcome: ExperimentOutcome,
    report_settings: Dict[str, Any],
    timing: Dict[str, float],
) -> Sequence[Path]:
    """
    Write the CSV and JSON summary into out_dir, creating it if needed.

    Returns:
        Paths of the written files
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / report_settings["csv_name"]
    summary_path = out_dir / report_settings["summary_name"]
    write_csv(csv_path, outcome, int(report_settings["float_digits"]))
    summary = build_summary(outcome, int(report_settings["schema_version"]), timing)
    with open(summary_path, 'w', encoding='utf-8') as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    return csv_path, summary_path
