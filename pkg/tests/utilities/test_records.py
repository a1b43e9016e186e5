"""Test the experiment record stream."""

import math

import pytest

try:
    from src.nts.ddae.exceptions import DataFormatError
    from src.nts.ddae.utilities.records import ExperimentRecord, RecordSink, read_records
except ModuleNotFoundError:
    from nts.ddae.exceptions import DataFormatError
    from nts.ddae.utilities.records import ExperimentRecord, RecordSink, read_records

# pylint: disable=import-error,unused-import,redefined-outer-name
from tests.fixtures import logger_fixture


def _fixed_clock() -> float:
    return 1700000000.5


def test_sink_writes_lines(tmp_path) -> None:
    """
    Test that every record is stamped and appended as one line.
    """
    path = tmp_path / "run" / "records.jsonl"
    with RecordSink(path, "abc", "f" * 64, clock=_fixed_clock) as sink:
        sink.emit("pretrain", "loss", 1, 0.5)
        sink.emit("grid", "acc/up.0.0@8/t=3", 3, 0.75)
        sink.emit("metric", "uniformity", 0, float("nan"))
    assert len(path.read_text(encoding="utf-8").splitlines()) == 3
    records = read_records(path)
    assert [r.content() for r in records[:2]] == [r.content() for r in sink.records[:2]]
    assert records[0].wall_time == 1700000000.5
    assert records[1].run_id == "abc" and records[1].step == 3
    assert math.isnan(records[2].value)
    assert '"value": null' in records[2].to_json()


def test_unknown_phase() -> None:
    """
    Test that phases are checked.
    """
    with pytest.raises(ValueError):
        RecordSink().emit("training", "loss", 0, 1.0)


def test_truncated_last_line_is_skipped(tmp_path, logger_fixture) -> None:
    """
    Test that a run killed mid-write keeps its complete records.
    """
    path = tmp_path / "records.jsonl"
    record = ExperimentRecord("r", "h", "probe", "pixel", 0, 0.3, 1.0)
    path.write_text(record.to_json() + "\n" + record.to_json()[:20], encoding="utf-8")
    records = read_records(path, logger_fixture)
    assert len(records) == 1 and records[0] == record


def test_malformed_inner_line(tmp_path) -> None:
    """
    Test that a broken line before the last one is a data format error with its line number.
    """
    path = tmp_path / "records.jsonl"
    good = ExperimentRecord("r", "h", "fid", "fid/pca", 8, 12.5, 1.0).to_json()
    path.write_text(good + "\n{broken\n" + good + "\n", encoding="utf-8")
    with pytest.raises(DataFormatError) as info:
        read_records(path)
    assert info.value.offset == 2


def test_empty_file(tmp_path) -> None:
    """
    Test an empty records file.
    """
    path = tmp_path / "records.jsonl"
    path.write_text("", encoding="utf-8")
    assert not read_records(path)


if __name__ == "__main__":
    pytest.main()
