"""Test CSV and SVG output of experiment records."""

import csv

import pytest

try:
    from src.nts.ddae.harness import RecordSink, emit_csv, emit_plot, select_records
except ModuleNotFoundError:
    from nts.ddae.harness import RecordSink, emit_csv, emit_plot, select_records


def sample_records() -> list:
    """A few grid and pre-training records."""
    sink = RecordSink(clock=lambda: 0.0)
    sink.emit("pretrain", "loss", 1, 0.5)
    sink.emit("grid", "acc/up.0.0@8", 1, 0.25)
    sink.emit("grid", "acc/up.0.0@8", 5, 1.0 / 3.0)
    sink.emit("grid", "acc/up.0.1@8", 1, 0.75)
    return sink.records


def test_select_records() -> None:
    """Phase and key prefix filters keep stream order."""
    records = sample_records()
    assert len(select_records(records)) == 4
    assert [r.step for r in select_records(records, "grid", "acc/up.0.0")] == [1, 5]
    assert select_records(records, "fid") == []


def test_empty_csv(tmp_path) -> None:
    """An empty selection writes the header only."""
    path = emit_csv([], tmp_path / "empty.csv")
    assert path.read_text(encoding="utf-8") == "phase,key,step,value\n"


def test_csv_round_trip(tmp_path) -> None:
    """Values are written with enough digits to be read back exactly."""
    records = select_records(sample_records(), "grid")
    path = emit_csv(records, tmp_path / "out" / "grid.csv")
    with open(path, newline="", encoding="utf-8") as stream:
        rows = list(csv.DictReader(stream))
    assert [row["key"] for row in rows] == ["acc/up.0.0@8", "acc/up.0.0@8", "acc/up.0.1@8"]
    assert [int(row["step"]) for row in rows] == [1, 5, 1]
    assert [float(row["value"]) for row in rows] == [r.value for r in records]


def test_svg_is_deterministic(tmp_path) -> None:
    """Equal selections give byte-identical charts."""
    records = sample_records()
    first = emit_plot(records, tmp_path / "a.svg", "grid")
    second = emit_plot(records, tmp_path / "b.svg", "grid")
    assert first.read_bytes() == second.read_bytes()
    assert b"<svg" in first.read_bytes()
    empty = emit_plot([], tmp_path / "empty.svg")
    assert b"no records selected" in empty.read_bytes()


if __name__ == "__main__":
    pytest.main()
