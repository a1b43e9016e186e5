"""
Experiment record stream.

Every measurement a run produces (epoch loss, grid cell accuracy, metric value, ...) is one
`ExperimentRecord`, appended as a JSON line to ``records.jsonl`` in the run directory. Records are
append-only and flushed row by row, so a crashed run keeps everything it measured.

Classes:
    - ExperimentRecord: One measurement.
    - RecordSink: Thread-safe appender, optionally backed by a file.

Functions:
    - read_records(path, logger=None) -> list[ExperimentRecord]
"""

import json
import math
import threading
import time
from dataclasses import asdict, dataclass
from logging import Logger, getLogger
from pathlib import Path
from typing import Callable, Optional, TextIO, Union

from ..exceptions import DataFormatError

PHASES: tuple[str, ...] = (
    "pretrain",
    "grid",
    "probe",
    "finetune",
    "metric",
    "sample",
    "fid",
    "ablation",
)


@dataclass(frozen=True)
class ExperimentRecord:
    """
    One measurement.

    Attributes:
        run_id (str): Run identifier (first 12 hex digits of the config hash).
        config_hash (str): SHA-256 of the canonical run configuration.
        phase (str): One of `PHASES`.
        key (str): What was measured, e.g. ``"loss"`` or ``"acc/up.1.0@16/t=11"``.
        step (int): Epoch, level or sample index the value belongs to.
        value (float): The measurement.
        wall_time (float): Unix time of emission.
    """

    run_id: str
    config_hash: str
    phase: str
    key: str
    step: int
    value: float
    wall_time: float

    def content(self) -> tuple:
        """Every field but `wall_time`; equal for two runs of one seeded configuration."""
        return (self.run_id, self.config_hash, self.phase, self.key, self.step, self.value)

    def to_json(self) -> str:
        """One JSON line; non-finite values are written as null."""
        data = asdict(self)
        if not math.isfinite(self.value):
            data["value"] = None
        return json.dumps(data, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "ExperimentRecord":
        """Parse one JSON line (ValueError / KeyError / TypeError on malformed input)."""
        data = json.loads(line)
        value = data["value"]
        return cls(
            run_id=str(data["run_id"]),
            config_hash=str(data["config_hash"]),
            phase=str(data["phase"]),
            key=str(data["key"]),
            step=int(data["step"]),
            value=float("nan") if value is None else float(value),
            wall_time=float(data["wall_time"]),
        )


class RecordSink:
    """
    Collects records in memory and appends them to a JSON lines file.

    Attributes:
        run_id (str): Stamped on every record.
        config_hash (str): Stamped on every record.
        path (Optional[Path]): Backing file, None for memory only.
        records (list[ExperimentRecord]): Everything emitted through this sink.
    """

    def __init__(
        self,
        path: Optional[Union[str, Path]] = None,
        run_id: str = "",
        config_hash: str = "",
        logger: Optional[Logger] = None,
        clock: Callable[[], float] = time.time,
    ) -> None:
        self.logger = logger if isinstance(logger, Logger) else getLogger(__name__)
        self.run_id = run_id
        self.config_hash = config_hash
        self.path = Path(path) if path is not None else None
        self.records: list[ExperimentRecord] = []
        self.__clock = clock
        self.__lock = threading.Lock()
        self.__stream: Optional[TextIO] = None
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            # pylint: disable=consider-using-with
            self.__stream = open(self.path, "a", encoding="utf-8")

    def emit(self, phase: str, key: str, step: int, value: float) -> ExperimentRecord:
        """Create, store and persist one record."""
        if phase not in PHASES:
            raise ValueError(f"Unknown record phase {phase!r}")
        record = ExperimentRecord(
            self.run_id, self.config_hash, phase, key, int(step), float(value), self.__clock()
        )
        with self.__lock:
            self.records.append(record)
            if self.__stream is not None:
                self.__stream.write(record.to_json() + "\n")
                self.__stream.flush()
        self.logger.debug("RECORD %s %s[%d] = %g", phase, key, step, value)
        return record

    def close(self) -> None:
        """Close the backing file."""
        with self.__lock:
            if self.__stream is not None:
                self.__stream.close()
                self.__stream = None

    def __enter__(self) -> "RecordSink":
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        self.close()


def read_records(path: Union[str, Path], logger: Optional[Logger] = None) -> list[ExperimentRecord]:
    """
    Load a records file.

    A truncated last line (a run killed mid-write) is skipped with a warning.

    Raises:
        DataFormatError: A malformed line before the last one; `offset` is the 1-based line number.
    """
    logger = logger if isinstance(logger, Logger) else getLogger(__name__)
    lines = Path(path).read_text(encoding="utf-8").split("\n")
    complete = lines[-1] == ""
    if complete:
        lines = lines[:-1]
    records: list[ExperimentRecord] = []
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            records.append(ExperimentRecord.from_json(line))
        except (ValueError, KeyError, TypeError) as exc:
            if number == len(lines) and not complete:
                logger.warning("Skipping truncated last record in %s", path)
                break
            raise DataFormatError(f"Malformed record: {exc}", str(path), number) from exc
    return records
