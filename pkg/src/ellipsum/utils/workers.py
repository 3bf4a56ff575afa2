"""
Worker threads for sharded numerical jobs.

Shards are defined by the caller independently of the worker count.
Results are stored by shard index, so the merge order (and therefore
every floating point reduction downstream) does not depend on how many
workers ran or which finished first.
"""

from __future__ import annotations

from dataclasses import dataclass
from queue import Empty, Queue
from threading import Event, Thread
from typing import Any, Callable, Generic, List, Optional, Sequence, TypeVar

from ellipsum.utils.logging import logger

P = TypeVar("P")
R = TypeVar("R")


@dataclass(frozen=True)
class ShardJob:
    """
    One unit of sharded work.

    :ivar job_id (str): Identifier used in log messages.
    :ivar index (int): Position of the shard in the merge order.
    :ivar payload (Any): Argument handed to the shard function.
    """

    job_id: str
    index: int
    payload: Any


@dataclass(frozen=True)
class ShardResult:
    """
    Result of a processed shard.

    :ivar job_id (str): Identifier of the job.
    :ivar index (int): Position of the shard in the merge order.
    :ivar ok (bool): Whether the shard function returned normally.
    :ivar value (Any): Returned value when ok.
    :ivar error (Optional[BaseException]): Raised exception otherwise.
    """

    job_id: str
    index: int
    ok: bool
    value: Any = None
    error: Optional[BaseException] = None


class _ShardWorker:
    """Single worker thread draining a shared job queue."""

    def __init__(
        self,
        name: str,
        q: "Queue[ShardJob]",
        fn: Callable[[Any], Any],
        sink: List[Optional[ShardResult]],
    ):
        self._q = q
        self._fn = fn
        self._sink = sink
        self._stop = Event()
        self._thread = Thread(target=self._run, name=name, daemon=True)

    def start(self):
        """Start the worker thread."""
        if self._thread.is_alive():
            return
        self._stop.clear()
        self._thread.start()

    def stop(self):
        """Stop the worker thread."""
        self._stop.set()
        if self._thread.is_alive():
            self._thread.join(timeout=2.0)

    def _run(self):
        while not self._stop.is_set():
            try:
                job = self._q.get(timeout=0.05)
            except Empty:
                continue
            try:
                self._process_job(job)
            finally:
                self._q.task_done()

    def _process_job(self, job: ShardJob):
        try:
            value = self._fn(job.payload)
            res = ShardResult(job.job_id, job.index, ok=True, value=value)
        # Justification: the error is re-raised by ShardPool.map.
        # pylint: disable=broad-exception-caught
        except Exception as exc:
            logger.debug(f"Shard {job.job_id} failed: {exc}")
            res = ShardResult(job.job_id, job.index, ok=False, error=exc)
        self._sink[job.index] = res


class ShardPool(Generic[P, R]):
    """
    Runs a shard function over payloads with a fixed number of threads
    and returns the results in payload order.
    """

    def __init__(
        self,
        fn: Callable[[P], R],
        workers: int = 1,
        name: str = "ellipsum-shard",
    ):
        """
        :param fn: Function applied to every payload.
        :type fn: Callable[[P], R]
        :param workers: Number of worker threads; 1 runs inline.
        :type workers: int
        :param name: Thread name prefix.
        :type name: str
        """
        self.fn = fn
        self.workers = max(1, int(workers))
        self.name = name

    def map(self, payloads: Sequence[P]) -> List[R]:
        """
        Apply the shard function to every payload.

        :param payloads: Shard payloads in merge order.
        :type payloads: Sequence[P]
        :return: Results in the same order as ``payloads``.
        :rtype: List[R]
        :raises Exception: The first (by shard index) exception raised by
            the shard function.
        """
        if self.workers == 1 or len(payloads) <= 1:
            return [self.fn(p) for p in payloads]

        sink: List[Optional[ShardResult]] = [None] * len(payloads)
        q: "Queue[ShardJob]" = Queue()
        for i, payload in enumerate(payloads):
            q.put_nowait(ShardJob(f"{self.name}-{i}", i, payload))

        pool = [
            _ShardWorker(f"{self.name}-w{k}", q, self.fn, sink)
            for k in range(min(self.workers, len(payloads)))
        ]
        for w in pool:
            w.start()
        q.join()
        for w in pool:
            w.stop()

        out: List[R] = []
        for res in sink:
            if res is None:
                raise RuntimeError("Shard pool finished with a missing result")
            if not res.ok:
                assert res.error is not None
                raise res.error
            out.append(res.value)
        return out
