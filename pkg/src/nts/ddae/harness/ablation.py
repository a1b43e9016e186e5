"""
Noise-configuration ablations.

Each variant is a set of configuration overrides merged over a base configuration. Variants run
one after the other in-process, each in its own run directory with its own record sink. A
failing variant is logged and reported; the remaining variants still run.

Classes:
    - Variant: Named configuration overrides.

Functions:
    - levels_variant(levels, schedule) -> Variant
    - beta_range_variant(half, schedule) -> Variant
    - standard_variants(schedule) -> list[Variant]
    - run_ablation(base, variants, ...) -> list[dict]
"""

import csv
import math
import traceback
from dataclasses import dataclass, field
from logging import Logger, getLogger
from pathlib import Path
from typing import Any, Optional, Sequence

from .pipeline import DDAERun
from ..config import RunConfig, ScheduleConfig, deep_merge
from ..corruption import ImageBatch
from ..exceptions import DDAEConfigError
from ..utilities.records import RecordSink

BASE_VARIANT = "base"
SUMMARY_COLUMNS: tuple[str, ...] = ("variant", "final_loss", "best_probe_acc", "fid", "error")
REFERENCE_LEVELS: tuple[int, ...] = (512, 256, 64)


@dataclass(frozen=True)
class Variant:
    """
    Named configuration overrides.

    Attributes:
        name (str): Variant name, used as record key prefix.
        overrides (dict): Nested partial configuration merged over the base.
    """

    name: str
    overrides: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not isinstance(self.name, str) or not self.name or "/" in self.name:
            raise DDAEConfigError(
                f"Variant name must be a non-empty string without '/': {self.name!r}"
            )
        if self.name == BASE_VARIANT:
            raise DDAEConfigError(f"Variant name {BASE_VARIANT!r} is reserved")

    def apply(self, base: RunConfig) -> RunConfig:
        """The variant configuration."""
        return RunConfig.from_dict(deep_merge(base.to_dict(), self.overrides))


def levels_variant(levels: int, schedule: ScheduleConfig) -> Variant:
    """
    Fewer (or more) noise levels over the same noise range.

    Only the level count changes: VP rates stay linearly spaced over the base
    ``[beta_min, beta_max]`` and VE scales over the base ``[sigma_min, sigma_max]``. Grid levels
    and the adopted level are cleared since they refer to the old level count.
    """
    if not isinstance(levels, int) or levels < 1:
        raise DDAEConfigError(f"levels must be a positive integer, got {levels!r}")
    if schedule.kind == "VP":
        noise_range = {"beta_min": schedule.beta_min, "beta_max": schedule.beta_max}
    else:
        noise_range = {"sigma_min": schedule.sigma_min, "sigma_max": schedule.sigma_max}
    overrides: dict[str, Any] = {
        "schedule": {"levels": levels, **noise_range},
        "timesteps": [],
        "t_fixed": None,
    }
    return Variant(f"T={levels}", overrides)


def beta_range_variant(half: str, schedule: ScheduleConfig) -> Variant:
    """
    Half of the VP rate range with the level count kept.

    Args:
        half (str): "smaller-half" for [beta_min, mid], "larger-half" for [mid, beta_max].
        schedule (ScheduleConfig): Base schedule (must be VP).
    """
    if schedule.kind != "VP":
        raise DDAEConfigError("beta range variants need a VP schedule")
    middle = (schedule.beta_min + schedule.beta_max) / 2.0
    if half == "smaller-half":
        bounds = (schedule.beta_min, middle)
    elif half == "larger-half":
        bounds = (middle, schedule.beta_max)
    else:
        raise DDAEConfigError(f"half must be 'smaller-half' or 'larger-half', got {half!r}")
    return Variant(half, {"schedule": {"beta_min": bounds[0], "beta_max": bounds[1]}})


def standard_variants(schedule: ScheduleConfig) -> list[Variant]:
    """Level counts 512, 256, 64 below the base count, plus both rate halves for VP."""
    variants = [levels_variant(t, schedule) for t in REFERENCE_LEVELS if t < schedule.levels]
    if schedule.kind == "VP":
        variants += [beta_range_variant(h, schedule) for h in ("smaller-half", "larger-half")]
    return variants


def _run_variant(
    config: RunConfig,
    data: Optional[tuple[ImageBatch, Optional[ImageBatch]]],
    progress: bool,
    logger: Logger,
) -> dict:
    with DDAERun(config, progress, logger) as run:
        if data is not None:
            run.use_data(*data)
        net = run.pretrain()
        losses = [r.value for r in run.sink.records if r.phase == "pretrain" and r.key == "loss"]
        report = run.gridsearch(net)
        return {
            "run_id": config.run_id,
            "final_loss": losses[-1] if losses else math.nan,
            "best_probe_acc": report.best.accuracy,
            "fid": run.fid(net),
        }


# pylint: disable=too-many-arguments, too-many-positional-arguments, too-many-locals
def run_ablation(
    base: RunConfig,
    variants: Sequence[Variant],
    train: Optional[ImageBatch] = None,
    test: Optional[ImageBatch] = None,
    progress: bool = False,
    logger: Optional[Logger] = None,
) -> list[dict]:
    """
    Run the base configuration and every variant through pretrain, grid search and FID.

    Ablation records (phase ``ablation``, keys ``<variant>/<quantity>``) and ``summary.csv`` are
    written to ``<out_dir>/ablation_<base run id>``.

    Args:
        base (RunConfig): Base configuration.
        variants (Sequence[Variant]): Variants; an empty list runs the base only.
        train (Optional[ImageBatch]): In-memory training split, read from the config when None.
        test (Optional[ImageBatch]): In-memory test split.
        progress (bool): Show progress bars.
        logger (Optional[Logger]): Logger, module logger when None.

    Returns:
        list[dict]: Status messages ``{"status": "OK" | "ERROR", "data": {...}}`` per variant,
        base first.
    """
    logger = logger if isinstance(logger, Logger) else getLogger(__name__)
    names = [variant.name for variant in variants]
    if len(set(names)) != len(names):
        raise DDAEConfigError(f"Duplicate variant names in {names}")
    data = (train, test) if train is not None else None
    out_dir = Path(base.out_dir) / f"ablation_{base.run_id}"
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(BASE_VARIANT, base)] + [(variant.name, variant) for variant in variants]
    results = []
    with RecordSink(out_dir / "records.jsonl", base.run_id, base.config_hash, logger) as sink:
        for name, job in jobs:
            logger.info("Ablation variant %s", name)
            try:
                config = job if isinstance(job, RunConfig) else job.apply(base)
                row = _run_variant(config, data, progress, logger)
            except Exception as exc:  # pylint: disable=broad-exception-caught
                logger.error("Variant %s failed: %s", name, exc)
                results.append(
                    {
                        "status": "ERROR",
                        "data": {
                            "variant": name,
                            "error": f"{type(exc).__name__}: {exc}",
                            "traceback": traceback.format_exc(),
                        },
                    }
                )
                continue
            for quantity in ("final_loss", "best_probe_acc", "fid"):
                sink.emit("ablation", f"{name}/{quantity}", 0, row[quantity])
            results.append({"status": "OK", "data": {"variant": name, **row}})
    write_summary(results, out_dir / "summary.csv")
    return results


def write_summary(results: Sequence[dict], path: Path) -> Path:
    """Variant x {final loss, best probe accuracy, FID, error} table."""
    with open(path, "w", newline="", encoding="utf-8") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for result in results:
            row = result["data"]
            writer.writerow(
                [row["variant"]]
                + [
                    f"{row[q]:.17g}" if q in row else ""
                    for q in ("final_loss", "best_probe_acc", "fid")
                ]
                + [row.get("error", "")]
            )
    return path
