"""Desk-scale checks on real CIFAR-10 batches (need DDAE_DATA_DIR)."""

import pytest

try:
    from src.nts.ddae.config import resolve_run_config
    from src.nts.ddae.harness import DDAERun, levels_variant, beta_range_variant, run_ablation
except ModuleNotFoundError:
    from nts.ddae.config import resolve_run_config
    from nts.ddae.harness import DDAERun, levels_variant, beta_range_variant, run_ablation

# pylint: disable=import-error,unused-import,redefined-outer-name
from tests.fixtures import slow

CIFAR = "cifar-10-batches-bin"


def desk_config(tmp_path, **overrides):
    """Desk preset on the first 5000 training images, scored on the test batch."""
    data = {"dataset_path": CIFAR, "test_path": CIFAR, "limit": 5000, "out_dir": str(tmp_path)}
    data.update(overrides)
    return resolve_run_config("desk", data)


@slow
def test_denoising_features_beat_reference_probes(tmp_path) -> None:
    """The best grid cell beats pixel and random-init probes, at an intermediate level."""
    with DDAERun(desk_config(tmp_path)) as run:
        net = run.pretrain()
        report = run.gridsearch(net)
        scores = run.probe(net)
    assert scores["linear"] >= scores["pixel"] + 0.05
    assert scores["linear"] >= scores["random_init"] + 0.05
    assert min(report.timesteps) < report.best.t < max(report.timesteps)


@slow
def test_noise_configuration_orderings(tmp_path) -> None:
    """Fewer levels do not probe better; the larger rate half trains to a higher loss."""
    base = desk_config(tmp_path)
    variants = [
        levels_variant(64, base.schedule),
        beta_range_variant("larger-half", base.schedule),
    ]
    results = run_ablation(base, variants)
    assert all(result["status"] == "OK" for result in results)
    rows = {result["data"]["variant"]: result["data"] for result in results}
    full, few, larger = rows["base"], rows[variants[0].name], rows["larger-half"]
    assert full["best_probe_acc"] >= few["best_probe_acc"] - 0.01
    assert full["final_loss"] < larger["final_loss"]


@slow
def test_finetuning_does_not_lose_to_the_linear_probe(tmp_path) -> None:
    """End-to-end fine-tuning keeps at least the linear probe accuracy of the adopted cell."""
    with DDAERun(desk_config(tmp_path)) as run:
        net = run.pretrain()
        run.gridsearch(net)
        linear = run.probe(net)["linear"]
        tuned = run.finetune(net)
    assert tuned >= linear - 0.01


@pytest.fixture(scope="module")
def desk_metrics(tmp_path_factory):
    """One desk run with a checkpoint every five epochs, through grid search and metrics."""
    config = desk_config(tmp_path_factory.mktemp("metrics"), train={"checkpoint_every": 5})
    with DDAERun(config) as run:
        net = run.pretrain()
        run.gridsearch(net)
        yield run.metrics(net)


@slow
def test_alignment_and_uniformity_improve_during_training(desk_metrics) -> None:
    """At the grid-best tap both hypersphere losses fall from the first to the last checkpoint."""
    trajectory = desk_metrics["trajectory"]
    assert len(trajectory) >= 2
    first, last = trajectory[0], trajectory[-1]
    assert first["epoch"] < last["epoch"]
    assert last["alignment"] < first["alignment"]
    assert last["uniformity"] < first["uniformity"]


@slow
def test_classifier_accuracy_falls_with_noise(desk_metrics) -> None:
    """Noise-conditional classifier accuracy is negatively rank-correlated with the level."""
    sweep = desk_metrics["sweep"]
    assert sweep.timesteps == sorted(sweep.timesteps)
    assert sweep.spearman < 0.0


if __name__ == "__main__":
    pytest.main()
