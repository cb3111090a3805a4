"""
Report files of one or more evaluations.

Written into one directory:

- ``<stem>.csv``: one row per report (variant, sr1..srN, avg_len, n, seed)
- ``<stem>_records.jsonl``: every per-sequence record
- ``<stem>_sr.png`` and ``<stem>_avg_len.png``: bar charts
- ``<stem>.html``: summary page

Rows are sorted by variant name, so identical inputs give identical bytes.
"""

import csv
import json
import logging
from pathlib import Path

from django.template.loader import render_to_string

from core.exceptions import ValidationFailure
from services.plot_service import PlotService

from .metrics import EvalReport

logger = logging.getLogger(__name__)


def _ordered(reports: list[EvalReport]) -> list[EvalReport]:
    return sorted(reports, key=lambda report: (report.variant, str(report.seed)))


def metric_rows(reports: list[EvalReport]) -> list[dict]:
    rows = []
    for report in _ordered(reports):
        row = {"variant": report.variant}
        row.update({f"sr{i}": repr(rate) for i, rate in enumerate(report.sr, start=1)})
        row.update({"avg_len": repr(report.avg_len), "n": report.n_sequences, "seed": report.seed})
        rows.append(row)
    return rows


def write_report(reports: list[EvalReport], out_dir, stem: str = "metrics") -> dict[str, Path]:
    """
    Write the metrics table, the records, the plots and the HTML summary.

    Returns:
        dict: artifact name -> path
    """
    if not reports:
        raise ValidationFailure("a report needs at least one evaluation")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ordered = _ordered(reports)
    rows = metric_rows(ordered)
    paths = {}

    paths["table"] = out_dir / f"{stem}.csv"
    with open(paths["table"], "w", encoding="utf-8", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)

    paths["records"] = out_dir / f"{stem}_records.jsonl"
    with open(paths["records"], "w", encoding="utf-8") as handle:
        for report in ordered:
            for record in report.to_dict()["per_sequence_records"]:
                line = {"variant": report.variant, "report_seed": report.seed, **record}
                handle.write(json.dumps(line, sort_keys=True) + "\n")

    chain = len(ordered[0].sr)
    labels = [_label(report) for report in ordered]
    paths["sr_plot"] = PlotService.grouped_bars(
        out_dir / f"{stem}_sr.png",
        "Success rate by number of consecutive subtasks",
        groups=[str(i) for i in range(1, chain + 1)],
        series={label: list(report.sr) for label, report in zip(labels, ordered)},
        y_max=1.0,
    )
    paths["avg_len_plot"] = PlotService.grouped_bars(
        out_dir / f"{stem}_avg_len.png",
        "Average completed sequence length",
        groups=["avg_len"],
        series={label: [report.avg_len] for label, report in zip(labels, ordered)},
        y_max=float(chain),
    )

    paths["html"] = out_dir / f"{stem}.html"
    html = render_to_string(
        "evalharness/report.html",
        {
            "rows": rows,
            "rate_columns": [f"sr{i}" for i in range(1, chain + 1)],
            "subtask_rows": [
                {"label": label, "rates": sorted(report.subtask_success.items())}
                for label, report in zip(labels, ordered)
            ],
            "plots": [paths["sr_plot"].name, paths["avg_len_plot"].name],
        },
    )
    paths["html"].write_text(html, encoding="utf-8")
    logger.info("Wrote %d report rows to %s", len(rows), paths["table"])
    return paths


def _label(report: EvalReport) -> str:
    return report.variant if isinstance(report.seed, str) else f"{report.variant}@{report.seed}"
