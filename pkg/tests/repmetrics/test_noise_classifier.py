"""Test the noise-conditional classifier."""

import math

import pytest
import torch

try:
    from src.nts.ddae.backbone import build_ddae
    from src.nts.ddae.config import MetricOpts
    from src.nts.ddae.corruption import ImageBatch
    from src.nts.ddae.exceptions import ContractError
    from src.nts.ddae.repmetrics import (
        ClassifierHead,
        NoiseConditionalClassifier,
        accuracy_vs_noise,
        classify_noised,
        guidance_report,
        train_noise_cond_classifier,
    )
    from src.nts.ddae.utilities.digest import module_digest
    from src.nts.ddae.utilities.records import RecordSink
except ModuleNotFoundError:
    from nts.ddae.backbone import build_ddae
    from nts.ddae.config import MetricOpts
    from nts.ddae.corruption import ImageBatch
    from nts.ddae.exceptions import ContractError
    from nts.ddae.repmetrics import (
        ClassifierHead,
        NoiseConditionalClassifier,
        accuracy_vs_noise,
        classify_noised,
        guidance_report,
        train_noise_cond_classifier,
    )
    from nts.ddae.utilities.digest import module_digest
    from nts.ddae.utilities.records import RecordSink

# pylint: disable=import-error,unused-import,redefined-outer-name
from tests.fixtures import (
    tiny_config,
    tiny_data,
    tiny_net,
    vp_schedule,
    metric_opts,
    tiny_images,
    TINY_LEVELS,
)

TAP = "mid.0.1@4"


def seeded_head(classes: int = 2, dtype: torch.dtype = torch.float32) -> ClassifierHead:
    """Head on the 16 channels of the tiny middle taps."""
    torch.manual_seed(0)
    return ClassifierHead(16, classes, TINY_LEVELS, 8).to(dtype).eval()


def test_zero_output_layer_gives_uniform_posterior(tiny_net) -> None:
    """Zero logits mean log p = -log(classes) for every image and level."""
    head = seeded_head(3)
    with torch.no_grad():
        head.mlp[2].weight.zero_()
        head.mlp[2].bias.zero_()
    classifier = NoiseConditionalClassifier(tiny_net, TAP, head)
    x = tiny_images(4).data
    logits, log_probs = classify_noised(head, classifier.features, x, 7)
    assert torch.equal(logits, torch.zeros(4, 3))
    assert torch.allclose(log_probs, torch.full((4, 3), -math.log(3.0)))


def test_posterior_normalizes(tiny_net) -> None:
    """Class probabilities sum to one; the level embedding starts at zero."""
    head = seeded_head(3)
    classifier = NoiseConditionalClassifier(tiny_net, TAP, head)
    x = tiny_images(4).data
    with torch.no_grad():
        log_probs = classifier.log_prob(x, torch.tensor([1, 5, 9, 20]))
        assert torch.allclose(log_probs.exp().sum(dim=1), torch.ones(4))
        features = classifier.features(x, 3)
        assert torch.equal(head(features, 1), head(features, TINY_LEVELS))
    with pytest.raises(ContractError):
        head(features, 0)
    with pytest.raises(ContractError):
        head(features, TINY_LEVELS + 1)


def test_one_pass_for_noise_and_logits(tiny_net) -> None:
    """The forward pass runs the network once and matches the separate computations."""
    classifier = NoiseConditionalClassifier(tiny_net, TAP, seeded_head())
    calls = []
    handle = tiny_net.conv_in.register_forward_hook(lambda *args: calls.append(1))
    x = tiny_images(3).data
    with torch.no_grad():
        eps, logits = classifier(x, 4)
    assert len(calls) == 1
    handle.remove()
    with torch.no_grad():
        assert torch.allclose(eps, tiny_net(x, 4), atol=1e-6)
        assert torch.allclose(logits, classifier.head(classifier.features(x, 4), 4), atol=1e-6)


def test_log_prob_gradient_matches_finite_differences(tiny_config) -> None:
    """d log p(y | x_t) / d x_t against central differences in double precision."""
    net = build_ddae(tiny_config, seed=1, levels=TINY_LEVELS).double().eval()
    classifier = NoiseConditionalClassifier(net, TAP, seeded_head(dtype=torch.float64))
    x = tiny_images(1).data.double().requires_grad_(True)
    classifier.log_prob(x, 5)[0, 1].backward()
    analytic = float(x.grad[0, 0, 2, 3])
    step = 1e-6
    with torch.no_grad():
        plus, minus = x.detach().clone(), x.detach().clone()
        plus[0, 0, 2, 3] += step
        minus[0, 0, 2, 3] -= step
        numeric = float(classifier.log_prob(plus, 5)[0, 1] - classifier.log_prob(minus, 5)[0, 1])
    assert analytic == pytest.approx(numeric / (2 * step), rel=1e-4, abs=1e-8)


def test_training_keeps_the_network(tiny_net, tiny_data, vp_schedule, metric_opts) -> None:
    """Only the head learns; equal seeds give equal heads; a loss record per epoch."""
    digest = module_digest(tiny_net)
    sink = RecordSink()
    opts = MetricOpts(classifier_hidden=8, classifier_epochs=2)
    head = train_noise_cond_classifier(
        tiny_net, TAP, tiny_data, vp_schedule, opts, batch_size=16, seed=5, sink=sink
    )
    again = train_noise_cond_classifier(
        tiny_net, TAP, tiny_data, vp_schedule, opts, batch_size=16, seed=5
    )
    assert module_digest(tiny_net) == digest
    assert torch.equal(head.mlp[0].weight, again.mlp[0].weight)
    assert not torch.equal(head.tau.weight, torch.zeros_like(head.tau.weight))
    assert [(r.key, r.step) for r in sink.records] == [
        ("classifier_loss", 1),
        ("classifier_loss", 2),
    ]
    with pytest.raises(ContractError):
        train_noise_cond_classifier(
            tiny_net, TAP, ImageBatch(tiny_data.data), vp_schedule, metric_opts
        )


def test_accuracy_vs_noise(tiny_net, tiny_data, vp_schedule, metric_opts) -> None:
    """One accuracy per distinct level, in increasing level order."""
    head = train_noise_cond_classifier(tiny_net, TAP, tiny_data, vp_schedule, metric_opts)
    classifier = NoiseConditionalClassifier(tiny_net, TAP, head)
    sink = RecordSink()
    sweep = accuracy_vs_noise(
        classifier, tiny_data, vp_schedule, [20, 1, 10, 1], torch.Generator(), 10, sink
    )
    assert sweep.timesteps == [1, 10, 20]
    assert all(0.0 <= a <= 1.0 and (a * 32) == int(a * 32) for a in sweep.accuracies)
    assert math.isnan(sweep.spearman) or -1.0 <= sweep.spearman <= 1.0
    assert [r.step for r in sink.records] == [1, 10, 20]
    assert sink.records[0].key == f"classifier_acc/{TAP}"


def test_guidance_report(tiny_net, vp_schedule) -> None:
    """Hit rates per scale, all scales drawn from the same noise stream."""
    classifier = NoiseConditionalClassifier(tiny_net, TAP, seeded_head())
    sink = RecordSink()
    rows = guidance_report(tiny_net, classifier, vp_schedule, 1, [0.0, 2.0], 4, seed=1, sink=sink)
    assert [row["scale"] for row in rows] == [0.0, 2.0]
    assert all(row["hit_rate"] in (0.0, 0.25, 0.5, 0.75, 1.0) for row in rows)
    assert [r.key for r in sink.records] == ["guidance_hit_rate/1/s=0", "guidance_hit_rate/1/s=2"]


if __name__ == "__main__":
    pytest.main()
