"""
Background batch producer.

A worker thread shuffles the dataset, slices it into batches and applies the augmentations while
the consumer runs the optimizer. The worker reports through a queue of status messages:

    {"status": "OK", "data": (images, labels)}
    {"status": "ERROR", "data": {"error": str, "traceback": str, "exception": Exception}}
    {"status": "DONE", "data": batches_sent}

Only the worker touches the batch generator, so the batch order is the same whatever the prefetch
depth.

Classes:
    - BatchProducer: Iterable over one epoch of (images, labels) batches.

Functions:
    - epoch_batches(dataset, batch_size, augmentations, generator) -> Iterator
"""

import queue
import threading
import traceback
from logging import Logger, getLogger
from typing import Iterator, Optional, Sequence

import torch

from .augment import augment
from ..corruption import ImageBatch
from ..exceptions import ContractError

Batch = tuple[torch.Tensor, torch.Tensor]


def epoch_batches(
    dataset: ImageBatch,
    batch_size: int,
    augmentations: Sequence[str],
    generator: torch.Generator,
) -> Iterator[Batch]:
    """
    One shuffled pass over `dataset`. The last batch may be smaller.

    Yields:
        tuple[torch.Tensor, torch.Tensor]: Images [B, C, S, S] and labels [B] (-1 when unlabelled).
    """
    order = torch.randperm(len(dataset), generator=generator)
    for start in range(0, len(dataset), batch_size):
        index = order[start : start + batch_size]
        images = augment(dataset.data[index], augmentations, generator)
        if dataset.labels is None:
            yield images, torch.full((index.numel(),), -1, dtype=torch.int64)
        else:
            yield images, dataset.labels[index]


class BatchProducer:
    """
    Threaded producer of one epoch of batches.

    Use it as a context manager; leaving the block early stops the worker.

    Example:
        >>> with BatchProducer(data, 128, ("horizontal_flip",), gen) as batches:
        ...     for images, labels in batches:
        ...         ...
    """

    def __init__(
        self,
        dataset: ImageBatch,
        batch_size: int,
        augmentations: Sequence[str],
        generator: torch.Generator,
        prefetch: int = 2,
        logger: Optional[Logger] = None,
    ) -> None:
        if len(dataset) == 0:
            raise ContractError("Cannot draw batches from an empty dataset")
        self.logger = logger if isinstance(logger, Logger) else getLogger(__name__)
        self.dataset = dataset
        self.batch_size = batch_size
        self.augmentations = tuple(augmentations)
        self.generator = generator
        self.__queue: queue.Queue = queue.Queue(maxsize=max(prefetch, 1))
        self.__stop = threading.Event()
        self.__thread: Optional[threading.Thread] = None

    def _put(self, message: dict) -> bool:
        while not self.__stop.is_set():
            try:
                self.__queue.put(message, timeout=0.1)
                return True
            except queue.Full:
                continue
        return False

    def _work(self) -> None:
        sent = 0
        try:
            for batch in epoch_batches(
                self.dataset, self.batch_size, self.augmentations, self.generator
            ):
                if not self._put({"status": "OK", "data": batch}):
                    return
                sent += 1
        # pylint: disable=broad-exception-caught
        except Exception as e:
            self._put(
                {
                    "status": "ERROR",
                    "data": {"error": str(e), "traceback": traceback.format_exc(), "exception": e},
                }
            )
            return
        self._put({"status": "DONE", "data": sent})

    def start(self) -> None:
        """Start the worker thread."""
        self.logger.debug("PRODUCER: STARTING")
        self.__stop.clear()
        self.__thread = threading.Thread(target=self._work, name="ddae-batches", daemon=True)
        self.__thread.start()

    def stop(self) -> None:
        """Stop the worker and drop pending batches."""
        self.__stop.set()
        if self.__thread is not None:
            self.__thread.join()
            self.__thread = None
        while not self.__queue.empty():
            self.__queue.get_nowait()
        self.logger.debug("PRODUCER: STOPPED")

    def __iter__(self) -> Iterator[Batch]:
        if self.__thread is None:
            self.start()
        while True:
            response = self.__queue.get()
            if response["status"] == "OK":
                yield response["data"]
            elif response["status"] == "DONE":
                self.logger.debug("PRODUCER: %d batches", response["data"])
                return
            elif response["status"] == "ERROR":
                self.logger.error("PRODUCER: ERROR (%s)", response["data"]["error"])
                self.logger.debug(response["data"]["traceback"])
                raise response["data"]["exception"]

    def __len__(self) -> int:
        return -(-len(self.dataset) // self.batch_size)

    def __enter__(self) -> "BatchProducer":
        self.start()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        self.stop()
