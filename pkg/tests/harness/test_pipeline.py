"""Test the run pipeline, ablations and the command line."""

import csv
import json

import pytest

try:
    from src.nts.ddae.corruption import ImageBatch
    from src.nts.ddae.exceptions import DDAEConfigError
    from src.nts.ddae.harness import (
        DDAERun,
        RecordSink,
        Variant,
        beta_range_variant,
        levels_variant,
        main,
        read_records,
        run_ablation,
        standard_variants,
    )
    from src.nts.ddae.config import RunConfig, ScheduleConfig
except ModuleNotFoundError:
    from nts.ddae.corruption import ImageBatch
    from nts.ddae.exceptions import DDAEConfigError
    from nts.ddae.harness import (
        DDAERun,
        RecordSink,
        Variant,
        beta_range_variant,
        levels_variant,
        main,
        read_records,
        run_ablation,
        standard_variants,
    )
    from nts.ddae.config import RunConfig, ScheduleConfig

# pylint: disable=import-error,unused-import,redefined-outer-name
from tests.fixtures import run_config, tiny_data, tiny_images


def test_run_phases(run_config, tiny_data) -> None:
    """Every phase runs on a tiny in-memory dataset and leaves its artefacts behind."""
    with DDAERun(run_config) as run:
        run.use_data(tiny_data, tiny_images(8, seed=9))
        net = run.pretrain()
        assert run.model_path.exists() and len(run.checkpoints()) == 1
        assert [t.key for t in run.search_taps(net)] == ["up.0.0@8", "up.0.1@8"]

        report = run.gridsearch(net)
        assert len(report.cells) == 4
        assert (run.run_dir / "grid" / "grid_report.json").exists()
        assert run.cell(run.network()) == (report.best.tap, report.best.t)

        results = run.probe(net)
        assert set(results) == {"linear", "pixel", "random_init"}
        assert all(0.0 <= value <= 1.0 for value in results.values())
        assert 0.0 <= run.finetune(net) <= 1.0

        metrics = run.metrics(net)
        assert [row["epoch"] for row in metrics["trajectory"]] == [1]
        assert metrics["sweep"].timesteps == [1, 5]

        images = run.sample(net, 4)
        assert isinstance(images, ImageBatch) and len(images) == 4
        assert (run.run_dir / "samples" / "samples.png").exists()
        assert run.fid(net, 4) >= 0.0

    stored = json.loads((run.run_dir / "config.json").read_text(encoding="utf-8"))
    assert stored["seed"] == 3
    phases = {record.phase for record in read_records(run.run_dir / "records.jsonl")}
    assert {"pretrain", "grid", "probe", "finetune", "metric", "sample", "fid"} <= phases
    assert {record.run_id for record in read_records(run.run_dir / "records.jsonl")} == {
        run_config.run_id
    }


def test_adopted_cell_from_config(run_config, tiny_data) -> None:
    """A configured tap and level skip the grid search."""
    config = run_config.from_dict({**run_config.to_dict(), "tap": "up.0.1@8", "t_fixed": 5})
    with DDAERun(config) as run:
        run.use_data(tiny_data)
        tap, t = run.cell(run.fresh_network())
        assert (tap.key, t) == ("up.0.1@8", 5)
        assert not (run.run_dir / "grid").exists()
        with pytest.raises(FileNotFoundError):
            run.network()


def test_variants() -> None:
    """Level variants keep the base noise range; range variants halve the rate interval."""
    schedule = ScheduleConfig(kind="VP", levels=20, beta_min=1e-3, beta_max=0.2)
    variant = levels_variant(10, schedule)
    assert variant.name == "T=10"
    assert variant.overrides["schedule"] == {"levels": 10, "beta_min": 1e-3, "beta_max": 0.2}
    assert variant.overrides["timesteps"] == [] and variant.overrides["t_fixed"] is None
    applied = variant.apply(RunConfig.from_dict({"schedule": schedule.to_dict()}))
    assert applied.schedule.levels == 10
    assert (applied.schedule.beta_min, applied.schedule.beta_max) == (1e-3, 0.2)
    reference = levels_variant(64, ScheduleConfig(kind="VP", levels=1000))
    assert reference.overrides["schedule"]["beta_min"] == pytest.approx(1e-4)
    assert reference.overrides["schedule"]["beta_max"] == pytest.approx(0.02)
    ve_levels = levels_variant(5, ScheduleConfig(kind="VE", levels=20, sigma_max=40.0))
    assert ve_levels.overrides["schedule"]["sigma_max"] == 40.0
    smaller = beta_range_variant("smaller-half", schedule)
    assert smaller.overrides["schedule"]["beta_max"] == pytest.approx(0.1005)
    assert beta_range_variant("larger-half", schedule).overrides["schedule"][
        "beta_min"
    ] == pytest.approx(0.1005)
    assert [v.name for v in standard_variants(schedule)] == ["smaller-half", "larger-half"]
    large = ScheduleConfig(kind="VP", levels=1000)
    assert [v.name for v in standard_variants(large)][:3] == ["T=512", "T=256", "T=64"]
    ve = ScheduleConfig(kind="VE", levels=20)
    assert [v.name for v in standard_variants(ve)] == []
    for bad in (
        lambda: beta_range_variant("middle", schedule),
        lambda: beta_range_variant("smaller-half", ve),
        lambda: levels_variant(0, schedule),
        lambda: Variant("base"),
        lambda: Variant("a/b"),
    ):
        with pytest.raises(DDAEConfigError):
            bad()


def test_ablation_keeps_going(run_config, tiny_data) -> None:
    """A broken variant is reported while the others still run."""
    broken = Variant("broken", {"schedule": {"beta_min": 0.5, "beta_max": 0.1}})
    results = run_ablation(run_config, [broken], tiny_data, tiny_images(8, seed=9))
    assert [(r["status"], r["data"]["variant"]) for r in results] == [
        ("OK", "base"),
        ("ERROR", "broken"),
    ]
    assert 0.0 <= results[0]["data"]["best_probe_acc"] <= 1.0
    assert "DDAEConfigError" in results[1]["data"]["error"]
    out_dir = run_config.out_dir + f"/ablation_{run_config.run_id}"
    with open(f"{out_dir}/summary.csv", newline="", encoding="utf-8") as stream:
        rows = list(csv.DictReader(stream))
    assert [row["variant"] for row in rows] == ["base", "broken"]
    assert rows[1]["fid"] == "" and rows[1]["error"]
    keys = [r.key for r in read_records(f"{out_dir}/records.jsonl")]
    assert keys == ["base/final_loss", "base/best_probe_acc", "base/fid"]
    with pytest.raises(DDAEConfigError):
        run_ablation(run_config, [broken, broken], tiny_data)


def test_cli_exit_codes(run_config, tmp_path) -> None:
    """Configuration problems exit with 2, missing data or models with 3."""
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    assert main(["gridsearch", "--config", str(bad)]) == 2
    assert main(["probe", "--preset", "no-such-preset"]) == 2
    good = tmp_path / "good.json"
    good.write_text(json.dumps(run_config.to_dict()), encoding="utf-8")
    assert main(["pretrain", "--config", str(good)]) == 3
    assert main(["fid", "--config", str(good), "--data", str(tmp_path / "none.bin")]) == 3
    with pytest.raises(SystemExit) as stop:
        main(["--version"])
    assert stop.value.code == 0


def test_cli_unwritable_output(run_config, tmp_path) -> None:
    """An output directory that cannot be created exits with the data / I/O code."""
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory", encoding="utf-8")
    good = tmp_path / "good.json"
    good.write_text(json.dumps(run_config.to_dict()), encoding="utf-8")
    assert main(["pretrain", "--config", str(good), "--out", str(blocker / "runs")]) == 3
    records = tmp_path / "records.jsonl"
    with RecordSink(records, "run", "hash") as sink:
        sink.emit("grid", "acc/up.0.0@8", 1, 0.5)
    target = ["--csv", str(blocker / "out.csv")]
    assert main(["plot", str(records), *target]) == 3


def test_cli_plot(tmp_path) -> None:
    """The plot subcommand writes CSV and SVG next to the records file."""
    path = tmp_path / "records.jsonl"
    with RecordSink(path, "run", "hash") as sink:
        sink.emit("grid", "acc/up.0.0@8", 1, 0.5)
        sink.emit("pretrain", "loss", 1, 0.9)
    assert main(["plot", str(path), "--phase", "grid"]) == 0
    lines = (tmp_path / "records.csv").read_text(encoding="utf-8").splitlines()
    assert lines == ["phase,key,step,value", "grid,acc/up.0.0@8,1,0.5"]
    assert (tmp_path / "records.svg").exists()


if __name__ == "__main__":
    pytest.main()
