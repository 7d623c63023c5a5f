"""Text tables and CSV artifacts for study reports."""

import logging
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

import pandas as pd
from tabulate import tabulate

from src.exceptions import InvalidParameterError
from src.models.structural import StructuralReport
from src.models.study import DecompositionReport, EventStudyResult

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ['component', 'sign', 'coefficient', 'se', 'ci_low', 'ci_high', 'n', 'clusters']
EVENT_COLUMNS = ['year', 'coefficient', 'ci_low', 'ci_high']
STRUCTURAL_COLUMNS = ['quantity', 'value']

Report = Union[DecompositionReport, EventStudyResult, StructuralReport]


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def _header(name: str, sign: str) -> str:
    return f"{name} ({sign})" if sign else name


def decomposition_text(report: DecompositionReport) -> str:
    """Components side by side with their signs in the column headers."""
    rows = report.rows()
    lines = [f"Study: {report.study}", ""]
    if rows:
        headers = [''] + [_header(r['component'], r['sign']) for r in rows]
        body = [
            ['coefficient'] + [_fmt(r['coefficient']) for r in rows],
            ['se'] + [_fmt(r['se']) for r in rows],
            ['ci_low'] + [_fmt(r['ci_low']) for r in rows],
            ['ci_high'] + [_fmt(r['ci_high']) for r in rows],
            ['n'] + [_fmt(r['n']) for r in rows],
            ['clusters'] + [_fmt(r['clusters']) for r in rows],
        ]
        lines.append(tabulate(body, headers=headers, tablefmt='simple'))
    residual = report.additivity_residual
    if residual is not None:
        lines.append("")
        lines.append(f"additivity: signed components - total = {residual:.3e}")
    for reason, munis in report.exclusions.items():
        if munis:
            lines.append(f"excluded ({reason}): {len(munis)} municipalities")
    for note in report.notes:
        lines.append(f"note: {note}")
    return "\n".join(lines) + "\n"


def event_text(result: EventStudyResult) -> str:
    rows = [[r['year'], _fmt(r['coefficient']), _fmt(r['ci_low']), _fmt(r['ci_high'])]
            for r in result.rows()]
    lines = [f"Event study: {result.outcome}", "",
             tabulate(rows, headers=EVENT_COLUMNS, tablefmt='simple')]
    if result.skipped:
        lines.append(f"skipped years: {', '.join(str(y) for y in sorted(result.skipped))}")
    return "\n".join(lines) + "\n"


def structural_text(report: StructuralReport) -> str:
    rows = [[r['quantity'], _fmt(r['value'])] for r in report.rows()]
    table = tabulate(rows, headers=STRUCTURAL_COLUMNS, tablefmt='simple')
    lines = ["Study: structural", "", table]
    for note in report.notes:
        lines.append(f"note: {note}")
    return "\n".join(lines) + "\n"


def _write_csv(rows: List[Dict[str, Any]], columns: Sequence[str], path: Path) -> Path:
    pd.DataFrame(rows, columns=list(columns)).to_csv(path, index=False, lineterminator='\n')
    return path


def _write_text(text: str, path: Path) -> Path:
    with open(path, 'w', newline='\n') as f:
        f.write(text)
    return path


def render_tables(reports: Sequence[Report], out_dir: Union[str, Path]) -> Dict[str, Path]:
    """Write one text table and one CSV per report.

    Decomposition reports go to <study>.txt/.csv, event studies to
    event_<outcome>.txt/.csv and the structural report to structural.txt/.csv.

    Returns:
        Artifact name -> path

    Raises:
        InvalidParameterError: If reports is empty
    """
    if not reports:
        raise InvalidParameterError("No reports to render; select at least one study")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    artifacts: Dict[str, Path] = {}
    for report in reports:
        if isinstance(report, DecompositionReport):
            stem = report.study
            text = decomposition_text(report)
            rows, columns = report.rows(), REPORT_COLUMNS
        elif isinstance(report, EventStudyResult):
            stem = f"event_{report.outcome}"
            text = event_text(report)
            rows, columns = report.rows(), EVENT_COLUMNS
        elif isinstance(report, StructuralReport):
            stem = 'structural'
            text = structural_text(report)
            rows, columns = report.rows(), STRUCTURAL_COLUMNS
        else:
            raise InvalidParameterError(f"Cannot render {type(report).__name__}")
        artifacts[f"{stem}.txt"] = _write_text(text, out / f"{stem}.txt")
        artifacts[f"{stem}.csv"] = _write_csv(rows, columns, out / f"{stem}.csv")
        logger.info(f"Wrote {stem}.txt and {stem}.csv")
    return artifacts


def read_report_csv(path: Union[str, Path]) -> pd.DataFrame:
    """Read a report CSV back, keeping an empty sign as ''."""
    frame = pd.read_csv(path)
    if 'sign' in frame.columns:
        frame['sign'] = frame['sign'].fillna('').astype(str)
    return frame
