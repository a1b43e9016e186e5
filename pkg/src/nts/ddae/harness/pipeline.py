"""
Run pipeline.

A `DDAERun` owns the run directory ``<out_dir>/<run_id>`` of one configuration:

    config.json             canonical configuration
    records.jsonl           experiment records
    checkpoints/            pre-training checkpoints (containers + resume sidecars)
    model.ddae              final pre-trained network
    grid/                   grid report and probe heads
    samples/                PNG grids and sample containers

Every phase can be run on its own; later phases pick up the artefacts of earlier ones.

Classes:
    - DDAERun: Phases of one run.
"""

import json
from logging import Logger, getLogger
from pathlib import Path
from typing import Optional, Sequence

import torch

from .datasets import load_dataset
from ..backbone import DDAENetwork, TapId, build_ddae, load_network, save_network, truncate
from ..config import RunConfig
from ..corruption import ImageBatch
from ..exceptions import ContractError
from ..probe import (
    GridReport,
    extract_features,
    finetune,
    grid_search,
    pixel_probe,
    random_init_probe,
    train_from_scratch,
    train_linear_probe,
)
from ..probe.grid import REPORT_FILE, split_images
from ..repmetrics import (
    EncoderEmbedder,
    NoiseConditionalClassifier,
    PixelPCAEmbedder,
    accuracy_vs_noise,
    fid,
    guidance_report,
    monitor_checkpoints,
    train_noise_cond_classifier,
)
from ..sampler import GuidanceSpec, sample, save_samples
from ..trainer import pretrain
from ..utilities.records import RecordSink
from ..utilities.seeding import STREAM_INIT, STREAM_METRICS, STREAM_SAMPLING, SeedBank

MODEL_FILE = "model.ddae"


# pylint: disable=too-many-instance-attributes
class DDAERun:
    """
    Phases of one configured run.

    Attributes:
        config (RunConfig): Run configuration.
        run_dir (Path): Output directory of the run.
        sink (RecordSink): Record stream of the run.
        sched (NoiseSchedule): Corruption schedule.
        seeds (SeedBank): Master seed fan-out.
    """

    def __init__(
        self, config: RunConfig, progress: bool = False, logger: Optional[Logger] = None
    ) -> None:
        self.logger = logger if isinstance(logger, Logger) else getLogger(__name__)
        self.config = config
        self.progress = progress
        self.run_dir = Path(config.out_dir) / config.run_id
        self.run_dir.mkdir(parents=True, exist_ok=True)
        (self.run_dir / "config.json").write_text(
            json.dumps(config.to_dict(), indent=2, sort_keys=True), encoding="utf-8"
        )
        self.sink = RecordSink(
            self.run_dir / "records.jsonl", config.run_id, config.config_hash, self.logger
        )
        self.sched = config.schedule.build()
        self.seeds = SeedBank(config.seed)
        self.__train: Optional[ImageBatch] = None
        self.__test: Optional[ImageBatch] = None
        self.__test_loaded = False
        self.logger.info("Run %s in %s", config.run_id, self.run_dir)

    # Data

    @property
    def train_data(self) -> ImageBatch:
        """Training split (loaded once)."""
        if self.__train is None:
            self.__train = load_dataset(self.config, "train", self.logger)
        return self.__train

    @property
    def test_data(self) -> Optional[ImageBatch]:
        """Designated test split, None when not configured."""
        if not self.__test_loaded:
            self.__test = load_dataset(self.config, "test", self.logger)
            self.__test_loaded = True
        return self.__test

    def use_data(self, train: ImageBatch, test: Optional[ImageBatch] = None) -> None:
        """Supply in-memory splits instead of reading the configured paths."""
        self.__train, self.__test, self.__test_loaded = train, test, True

    # Network

    @property
    def model_path(self) -> Path:
        return self.run_dir / MODEL_FILE

    def checkpoints(self) -> list[Path]:
        """Pre-training checkpoints in epoch order (EMA copies excluded)."""
        folder = self.run_dir / "checkpoints"
        return sorted(p for p in folder.glob("epoch_*.ddae") if not p.name.endswith(".ema.ddae"))

    def fresh_network(self) -> DDAENetwork:
        """Network initialized from the ``init`` substream."""
        return build_ddae(self.config.network, self.seeds.seed(STREAM_INIT), self.sched.levels)

    def network(self) -> DDAENetwork:
        """
        The pre-trained network of this run.

        Raises:
            FileNotFoundError: `pretrain` has not been run.
        """
        if not self.model_path.exists():
            raise FileNotFoundError(
                f"No pre-trained model at {self.model_path}; run pretrain first"
            )
        return load_network(self.model_path).eval()

    # Phases

    def pretrain(self, resume: bool = False) -> DDAENetwork:
        """Pre-train from scratch (or from the last checkpoint) and save the final network."""
        net = self.fresh_network()
        resume_from = None
        if resume and self.checkpoints():
            resume_from = self.checkpoints()[-1]
        net, _ = pretrain(
            net,
            self.train_data,
            self.sched,
            self.config.train,
            self.sink,
            self.run_dir,
            resume_from,
            self.progress,
            self.logger,
        )
        save_network(net, self.model_path, logger=self.logger)
        return net

    def search_taps(self, net: DDAENetwork) -> list[TapId]:
        """Configured taps, every up-path tap when none are configured."""
        if self.config.taps:
            return [net.tap(tap) for tap in self.config.taps]
        return net.taps_on("up")

    def gridsearch(self, net: DDAENetwork) -> GridReport:
        """Layer x level grid search on the training split."""
        return grid_search(
            net,
            self.train_data,
            self.search_taps(net),
            self.config.default_timesteps(),
            self.sched,
            self.config.probe,
            self.test_data,
            self.sink,
            self.run_dir / "grid",
            self.logger,
        )

    def cell(self, net: DDAENetwork) -> tuple[TapId, int]:
        """
        The adopted (tap, t): configured values, else the best cell of the saved grid report,
        else a fresh grid search.
        """
        if self.config.tap is not None and self.config.t_fixed is not None:
            return net.tap(self.config.tap), self.config.t_fixed
        report_path = self.run_dir / "grid" / REPORT_FILE
        if report_path.exists():
            best = GridReport.load(report_path).best
        else:
            best = self.gridsearch(net).best
        tap = net.tap(self.config.tap) if self.config.tap is not None else best.tap
        t = self.config.t_fixed if self.config.t_fixed is not None else best.t
        return tap, t

    def probe(self, net: DDAENetwork) -> dict[str, float]:
        """Linear probe at the adopted cell and the two reference probes."""
        tap, t = self.cell(net)
        opts = self.config.probe
        train, held = split_images(self.train_data, self.test_data, opts)
        generator = self.seeds.generator("probe-features", tap.key, t)
        table = extract_features(net, tap, t, train, self.sched, generator, opts.noising)
        test_table = extract_features(net, tap, t, held, self.sched, generator, opts.noising)
        _, linear = train_linear_probe(table, opts, test_table, self.logger)
        pixels = pixel_probe(train, opts, held, self.logger)
        random_init = random_init_probe(
            self.config.network, tap, t, train, self.sched, opts, held,
            self.seeds.seed(STREAM_INIT, "reference"), self.logger,
        )
        self.sink.emit("probe", f"linear/{tap.key}", t, linear)
        self.sink.emit("probe", "pixel", 0, pixels)
        self.sink.emit("probe", f"random_init/{tap.key}", t, random_init)
        return {"linear": linear, "pixel": pixels, "random_init": random_init}

    def finetune(self, net: DDAENetwork, from_scratch: bool = False) -> float:
        """Fine-tune the encoder of the adopted cell (or train it from a random init)."""
        tap, t = self.cell(net)
        if from_scratch:
            return train_from_scratch(
                self.config.network, tap, t, self.train_data, self.config.probe, self.test_data,
                self.sched.levels, self.seeds.seed(STREAM_INIT, "scratch"), self.sink, self.logger,
            )
        return finetune(
            truncate(net, tap, t), self.train_data, self.config.probe, self.test_data,
            sink=self.sink, progress=self.progress, logger=self.logger,
        )

    def metrics(
        self,
        net: DDAENetwork,
        guidance_label: Optional[int] = None,
        scales: Sequence[float] = (0.0, 1.0, 10.0),
        n: int = 16,
    ) -> dict:
        """
        Alignment / uniformity over checkpoints and the noise-conditional classifier sweep.

        With `guidance_label` set, guided samples are also drawn at every scale in `scales` and
        the share classified as the target is reported.
        """
        tap, t = self.cell(net)
        opts = self.config.metrics
        data = self.test_data if self.test_data is not None else self.train_data
        paths = self.checkpoints() or [self.model_path]
        trajectory = monitor_checkpoints(
            paths, tap, t, data, self.sched, opts, self.config.seed, self.sink, self.logger
        )
        head = train_noise_cond_classifier(
            net, tap, self.train_data, self.sched, opts, self.config.probe.batch_size,
            self.config.probe.learning_rate, self.config.seed, self.sink, self.progress,
            self.logger,
        )
        classifier = NoiseConditionalClassifier(net, tap, head)
        sweep = accuracy_vs_noise(
            classifier, data, self.sched, self.config.default_timesteps(),
            self.seeds.generator(STREAM_METRICS, "sweep"), sink=self.sink,
        )
        if sweep.spearman == sweep.spearman:
            self.sink.emit("metric", "classifier_spearman", 0, sweep.spearman)
        torch.save(head.state_dict(), self.run_dir / "classifier_head.pt")
        result = {"trajectory": trajectory, "sweep": sweep}
        if guidance_label is not None:
            result["guidance"] = guidance_report(
                net, classifier, self.sched, guidance_label, scales, n, self.config.seed,
                opts.guidance_scaling, self.sink, self.logger,
            )
        return result

    def sample(
        self, net: DDAENetwork, n: int, target_label: Optional[int] = None, scale: float = 0.0
    ) -> ImageBatch:
        """Draw and save samples, optionally guided by a freshly trained classifier."""
        guidance = None
        if target_label is not None:
            tap, _ = self.cell(net)
            head = train_noise_cond_classifier(
                net, tap, self.train_data, self.sched, self.config.metrics,
                self.config.probe.batch_size, self.config.probe.learning_rate, self.config.seed,
                logger=self.logger,
            )
            classifier = NoiseConditionalClassifier(net, tap, head)
            guidance = GuidanceSpec(
                classifier.log_prob, target_label, scale, self.config.metrics.guidance_scaling
            )
        images = sample(
            net, self.sched, n, self.seeds.generator(STREAM_SAMPLING), guidance,
            allow_ve=True, progress=self.progress, logger=self.logger,
        )
        stem = "samples" if guidance is None else f"samples_y{target_label}_s{scale:g}"
        save_samples(images, self.run_dir / "samples", stem, logger=self.logger)
        self.sink.emit("sample", f"{stem}/mean_pixel", n, float(images.data.mean()))
        return images

    def fid(self, net: DDAENetwork, n: Optional[int] = None) -> float:
        """Frechet distance between training images and fresh samples."""
        n = n if n is not None else self.config.metrics.fid_samples
        real = self.train_data
        if len(real) < 2:
            raise ContractError("FID needs at least two reference images")
        generated = sample(
            net, self.sched, n, self.seeds.generator(STREAM_SAMPLING, "fid"), allow_ve=True,
            progress=self.progress, logger=self.logger,
        )
        if self.config.metrics.fid_embedder == "pca":
            embedder = PixelPCAEmbedder(self.config.metrics.pca_components, self.logger).fit(real)
        else:
            tap, t = self.cell(net)
            embedder = EncoderEmbedder(truncate(net, tap, t).eval())
        value = fid(embedder, real, generated)
        self.sink.emit("fid", f"fid/{self.config.metrics.fid_embedder}", n, value)
        self.logger.info("FID (%s embedder, %d samples): %.4f",
                         self.config.metrics.fid_embedder, n, value)
        return value

    def close(self) -> None:
        self.sink.close()

    def __enter__(self) -> "DDAERun":
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        self.close()
