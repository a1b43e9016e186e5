"""
CSV and SVG output of experiment records.

Both outputs are byte-for-byte deterministic for a given record selection: values are written
with 17 significant digits and the SVG carries neither a date nor random element ids.

Functions:
    - select_records(records, phase=None, key_prefix=None) -> list[ExperimentRecord]
    - emit_csv(records, path) -> Path
    - emit_plot(records, path, title=None) -> Path
"""

import csv
from collections import defaultdict
from logging import Logger, getLogger
from pathlib import Path
from typing import Iterable, Optional, Union

import matplotlib
from matplotlib.figure import Figure

from ..utilities.records import ExperimentRecord

CSV_COLUMNS: tuple[str, ...] = ("phase", "key", "step", "value")

PathLike = Union[str, Path]


def select_records(
    records: Iterable[ExperimentRecord],
    phase: Optional[str] = None,
    key_prefix: Optional[str] = None,
) -> list[ExperimentRecord]:
    """Records of one phase and / or whose key starts with a prefix, in stream order."""
    return [
        record
        for record in records
        if (phase is None or record.phase == phase)
        and (key_prefix is None or record.key.startswith(key_prefix))
    ]


def emit_csv(
    records: Iterable[ExperimentRecord], path: PathLike, logger: Optional[Logger] = None
) -> Path:
    """
    Write ``phase,key,step,value`` rows.

    An empty selection produces a header-only file and a warning.
    """
    logger = logger if isinstance(logger, Logger) else getLogger(__name__)
    rows = list(records)
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w", newline="", encoding="utf-8") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for record in rows:
            writer.writerow([record.phase, record.key, record.step, f"{record.value:.17g}"])
    if not rows:
        logger.warning("No records selected, %s holds the header only", target)
    else:
        logger.info("Wrote %d records to %s", len(rows), target)
    return target


def emit_plot(
    records: Iterable[ExperimentRecord],
    path: PathLike,
    title: Optional[str] = None,
    logger: Optional[Logger] = None,
) -> Path:
    """
    Line chart of value against step, one line per key, as SVG.

    An empty selection produces a chart with a notice and a warning.
    """
    logger = logger if isinstance(logger, Logger) else getLogger(__name__)
    series: dict[str, list[tuple[int, float]]] = defaultdict(list)
    for record in records:
        series[record.key].append((record.step, record.value))
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context({"svg.hashsalt": "ddae", "svg.fonttype": "none"}):
        figure = Figure(figsize=(6.4, 4.0))
        axes = figure.subplots()
        if series:
            for key in sorted(series):
                points = sorted(series[key])
                axes.plot([p[0] for p in points], [p[1] for p in points], marker=".", label=key)
            axes.legend(fontsize="small")
        else:
            axes.text(0.5, 0.5, "no records selected", ha="center", va="center")
            logger.warning("No records selected, %s holds an empty chart", target)
        axes.set_xlabel("step")
        axes.set_ylabel("value")
        if title:
            axes.set_title(title)
        figure.savefig(target, format="svg", metadata={"Date": None})
    return target
