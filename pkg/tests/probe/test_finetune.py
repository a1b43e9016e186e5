"""Test fine-tuning and the reference probes."""

import pytest
import torch

try:
    from src.nts.ddae.backbone import truncate
    from src.nts.ddae.config import ProbeOpts
    from src.nts.ddae.corruption import ImageBatch
    from src.nts.ddae.exceptions import ContractError
    from src.nts.ddae.probe import (
        EncoderClassifier,
        classifier_accuracy,
        finetune,
        init_linear_head,
        random_init_probe,
        train_from_scratch,
    )
    from src.nts.ddae.utilities.digest import module_digest
    from src.nts.ddae.utilities.records import RecordSink
except ModuleNotFoundError:
    from nts.ddae.backbone import truncate
    from nts.ddae.config import ProbeOpts
    from nts.ddae.corruption import ImageBatch
    from nts.ddae.exceptions import ContractError
    from nts.ddae.probe import (
        EncoderClassifier,
        classifier_accuracy,
        finetune,
        init_linear_head,
        random_init_probe,
        train_from_scratch,
    )
    from nts.ddae.utilities.digest import module_digest
    from nts.ddae.utilities.records import RecordSink

# pylint: disable=import-error,unused-import,redefined-outer-name
from tests.fixtures import tiny_config, tiny_data, tiny_net, vp_schedule, tiny_images, TINY_LEVELS

TAP = "up.0.1@8"


def opts_with(epochs: int) -> ProbeOpts:
    """Small fine-tuning options."""
    return ProbeOpts(
        epochs=epochs, batch_size=16, learning_rate=1e-3, lr_schedule="constant", augmentations=[]
    )


def test_zero_epochs_evaluates_initial_head(tiny_net, tiny_data) -> None:
    """Without epochs the result is the accuracy of the initial head on the frozen encoder."""
    encoder = truncate(tiny_net, TAP, 3)
    digest = module_digest(encoder)
    held = tiny_images(8, seed=4)
    first = finetune(encoder, tiny_data, opts_with(0), held)
    again = finetune(encoder, tiny_data, opts_with(0), held)
    assert first == again
    assert first * 8 == pytest.approx(round(first * 8))
    assert module_digest(encoder) == digest


def test_finetune_copies_unless_in_place(tiny_net, tiny_data) -> None:
    """Training touches a copy by default and the given encoder with `in_place`."""
    encoder = truncate(tiny_net, TAP, 3)
    digest = module_digest(encoder)
    sink = RecordSink()
    accuracy = finetune(encoder, tiny_data, opts_with(1), tiny_images(8, seed=4), sink=sink)
    assert 0.0 <= accuracy <= 1.0
    assert module_digest(encoder) == digest
    assert [(r.phase, r.key, r.step) for r in sink.records] == [
        ("finetune", "loss", 1),
        ("finetune", f"acc/{TAP}", 3),
    ]
    assert sink.records[-1].value == accuracy
    finetune(encoder, tiny_data, opts_with(1), tiny_images(8, seed=4), in_place=True)
    assert module_digest(encoder) != digest


def test_finetune_holdout(tiny_net, tiny_data) -> None:
    """Without a test split a seeded holdout is used; results repeat."""
    encoder = truncate(tiny_net, TAP, 3)
    first = finetune(encoder, tiny_data, opts_with(1))
    again = finetune(encoder, tiny_data, opts_with(1))
    assert first == again


def test_classifier_accuracy(tiny_net) -> None:
    """Accuracy counts argmax hits; unlabelled images are refused."""
    encoder = truncate(tiny_net, TAP, 3)
    head = init_linear_head(encoder.feature_dim, 2, torch.Generator().manual_seed(0))
    with torch.no_grad():
        head.weight.zero_()
        head.bias.copy_(torch.tensor([1.0, 0.0]))
    model = EncoderClassifier(encoder, head)
    assert classifier_accuracy(model, tiny_images(8), batch_size=3) == 0.5
    with pytest.raises(ContractError):
        classifier_accuracy(model, ImageBatch(tiny_images(4).data))
    with pytest.raises(ContractError):
        finetune(encoder, ImageBatch(tiny_images(4).data), opts_with(0))


def test_reference_probes(tiny_config, tiny_data, vp_schedule) -> None:
    """Random-init probe and scratch training run on the same architecture and repeat."""
    opts = opts_with(1)
    held = tiny_images(8, seed=4)
    random_init = random_init_probe(tiny_config, TAP, 3, tiny_data, vp_schedule, opts, held, 9)
    assert random_init == random_init_probe(
        tiny_config, TAP, 3, tiny_data, vp_schedule, opts, held, 9
    )
    assert 0.0 <= random_init <= 1.0
    sink = RecordSink()
    scratch = train_from_scratch(
        tiny_config, TAP, 3, tiny_data, opts, held, TINY_LEVELS, seed=9, sink=sink
    )
    assert 0.0 <= scratch <= 1.0
    assert sink.records[-1].key == f"acc/{TAP}"


if __name__ == "__main__":
    pytest.main()
