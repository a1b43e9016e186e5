"""Test diffusion pre-training."""

import pytest
import torch

try:
    from src.nts.ddae.backbone import build_ddae, load_network
    from src.nts.ddae.corruption import ImageBatch
    from src.nts.ddae.exceptions import ContractError, NumericalError
    from src.nts.ddae.trainer import checkpoint_paths, pretrain, pretrain_step, sample_levels
    from src.nts.ddae.utilities.digest import module_digest
    from src.nts.ddae.utilities.records import RecordSink
except ModuleNotFoundError:
    from nts.ddae.backbone import build_ddae, load_network
    from nts.ddae.corruption import ImageBatch
    from nts.ddae.exceptions import ContractError, NumericalError
    from nts.ddae.trainer import checkpoint_paths, pretrain, pretrain_step, sample_levels
    from nts.ddae.utilities.digest import module_digest
    from nts.ddae.utilities.records import RecordSink

# pylint: disable=import-error,unused-import,redefined-outer-name
from tests.fixtures import (
    tiny_config,
    tiny_data,
    tiny_net,
    train_opts,
    vp_schedule,
    ve_schedule,
    logger_fixture,
    TINY_LEVELS,
)


def test_sample_levels() -> None:
    """Levels cover [1, T] and nothing else."""
    t = sample_levels(4000, TINY_LEVELS, torch.Generator().manual_seed(0))
    assert t.dtype == torch.int64
    assert int(t.min()) == 1 and int(t.max()) == TINY_LEVELS
    assert len(torch.unique(t)) == TINY_LEVELS


def test_sample_levels_deciles() -> None:
    """Each tenth of [1, 1000] receives 10% +- 1% of 100k draws."""
    t = sample_levels(100_000, 1000, torch.Generator().manual_seed(1))
    counts = torch.bincount((t - 1) // 100, minlength=10)
    assert counts.shape == (10,)
    shares = counts.double() / t.numel()
    assert bool(torch.all((shares - 0.1).abs() <= 0.01))


def test_zero_network_loss_is_unit(tiny_net, tiny_data, vp_schedule) -> None:
    """A network predicting zero scores E[eps^2] = 1."""
    with torch.no_grad():
        tiny_net.conv_out.weight.zero_()
        tiny_net.conv_out.bias.zero_()
    optimizer = torch.optim.Adam(tiny_net.parameters(), lr=0.0)
    losses = [
        pretrain_step(tiny_net, tiny_data, vp_schedule, torch.Generator().manual_seed(k), optimizer)
        for k in range(4)
    ]
    assert sum(losses) / len(losses) == pytest.approx(1.0, abs=0.1)


def test_zero_learning_rate_keeps_weights(tiny_net, tiny_data, ve_schedule) -> None:
    """A step with learning rate 0 leaves every weight bitwise unchanged."""
    before = module_digest(tiny_net)
    optimizer = torch.optim.Adam(tiny_net.parameters(), lr=0.0)
    generator = torch.Generator().manual_seed(1)
    for step in range(3):
        loss = pretrain_step(
            tiny_net.train(), tiny_data, ve_schedule, generator, optimizer, 1.0, step
        )
        assert loss > 0.0
    assert module_digest(tiny_net) == before


def test_step_contract(tiny_net, vp_schedule) -> None:
    """Wrong image sizes and level counts are refused."""
    optimizer = torch.optim.Adam(tiny_net.parameters(), lr=1e-3)
    generator = torch.Generator().manual_seed(0)
    with pytest.raises(ContractError):
        pretrain_step(tiny_net, torch.zeros(2, 3, 16, 16), vp_schedule, generator, optimizer)
    tiny_net.levels = TINY_LEVELS + 5
    with pytest.raises(ContractError):
        pretrain_step(tiny_net, torch.zeros(2, 3, 8, 8), vp_schedule, generator, optimizer)


def test_non_finite_loss_aborts(tiny_net, tiny_data, vp_schedule) -> None:
    """A diverged network raises with the step and a level histogram."""
    with torch.no_grad():
        tiny_net.conv_out.bias.fill_(float("nan"))
    optimizer = torch.optim.Adam(tiny_net.parameters(), lr=1e-3)
    with pytest.raises(NumericalError) as info:
        pretrain_step(
            tiny_net, tiny_data, vp_schedule, torch.Generator().manual_seed(0), optimizer, step=7
        )
    assert info.value.diagnostics["step"] == 7
    assert sum(info.value.diagnostics["t_histogram"]) == len(tiny_data)


def test_zero_epochs(tiny_net, tiny_data, vp_schedule, train_opts) -> None:
    """No epochs: the network comes back untouched with no records."""
    before = module_digest(tiny_net)
    train_opts.epochs = 0
    net, records = pretrain(tiny_net, tiny_data, vp_schedule, train_opts)
    assert net is tiny_net and records == []
    assert module_digest(net) == before


def test_pretrain_is_deterministic(
    tiny_config, tiny_data, vp_schedule, train_opts, tmp_path, logger_fixture
) -> None:
    """Two seeded runs produce identical weights and loss records."""
    results = []
    for name in ("first", "second"):
        sink = RecordSink(tmp_path / name / "records.jsonl")
        net = build_ddae(tiny_config, seed=0, levels=TINY_LEVELS)
        net, records = pretrain(
            net, tiny_data, vp_schedule, train_opts, sink, tmp_path / name, logger=logger_fixture
        )
        sink.close()
        results.append((module_digest(net), [(r.key, r.step, r.value) for r in records]))
    assert results[0] == results[1]
    assert [step for _, step, _ in results[0][1]] == [1, 2]
    for epoch in (1, 2):
        weights, sidecar = checkpoint_paths(tmp_path / "first", epoch)
        assert weights.exists() and sidecar.exists()
    assert module_digest(load_network(checkpoint_paths(tmp_path / "first", 2)[0])) == results[0][0]


def test_resume_matches_uninterrupted_run(
    tiny_config, tiny_data, vp_schedule, train_opts, tmp_path
) -> None:
    """Resuming from the first checkpoint reproduces the uninterrupted run bitwise."""
    full = build_ddae(tiny_config, seed=0, levels=TINY_LEVELS)
    full, _ = pretrain(full, tiny_data, vp_schedule, train_opts, out_dir=tmp_path / "full")
    resumed = build_ddae(tiny_config, seed=9, levels=TINY_LEVELS)
    resumed, records = pretrain(
        resumed,
        tiny_data,
        vp_schedule,
        train_opts,
        out_dir=tmp_path / "resumed",
        resume_from=checkpoint_paths(tmp_path / "full", 1)[0],
    )
    assert [r.step for r in records] == [2]
    assert module_digest(resumed) == module_digest(full)


def test_ema_weights_are_returned(tiny_config, tiny_data, vp_schedule, train_opts) -> None:
    """With decay 1 the shadow never moves, so the initial weights come back."""
    net = build_ddae(tiny_config, seed=0, levels=TINY_LEVELS)
    train_opts.ema_decay = 1.0 - 1e-12
    train_opts.epochs = 1
    net, _ = pretrain(net, tiny_data, vp_schedule, train_opts)
    initial = build_ddae(tiny_config, seed=0, levels=TINY_LEVELS)
    for trained, reference in zip(net.parameters(), initial.parameters()):
        assert torch.allclose(trained, reference, atol=1e-6)


def test_empty_dataset(tiny_net, vp_schedule, train_opts) -> None:
    """Pre-training needs images."""
    with pytest.raises(ContractError):
        pretrain(tiny_net, ImageBatch(torch.zeros(0, 3, 8, 8)), vp_schedule, train_opts)


if __name__ == "__main__":
    pytest.main()
