"""Randomized QMC experiments: the product test function f1 and a single-server queue.

Estimators are replicated over independent digital shifts; the spread of the
replicate means gives the variance, and the RMSE against a known exact value
when one exists. A plain Monte Carlo baseline runs through the same code path.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .points import PointGenerator

log = logging.getLogger(__name__)

# tag mixed into seed sequences of the queue's pseudorandom overflow stream
_OVERFLOW_TAG = 0x51EE
# tag for the plain Monte Carlo baseline streams
_MC_TAG = 0x3C


# --- test function -------------------------------------------------------------------------------


def f1_alphas(s: int, variant: str) -> np.ndarray:
    j = np.arange(1, s + 1, dtype=np.float64)
    if variant == "i":
        return j
    if variant == "ii":
        return s - j + 1
    raise ValueError(f"variant must be 'i' or 'ii', got {variant!r}")


def f1(u: np.ndarray, variant: str = "ii") -> np.ndarray | float:
    """prod_j (|4 u_j - 2| + a_j) / (1 + a_j); integrates to 1 over the unit cube.

    ``u`` is one point (s,) or a batch (n, s); a batch returns (n,) values.
    """
    u = np.asarray(u, dtype=np.float64)
    a = f1_alphas(u.shape[-1], variant)
    vals = np.prod((np.abs(4.0 * u - 2.0) + a) / (1.0 + a), axis=-1)
    return float(vals) if u.ndim == 1 else vals


# --- queue ----------------------------------------------------------------------------------------


@dataclass(frozen=True)
class QueueModel:
    """Single server, Poisson arrivals, exponential service. Times in minutes."""

    T: float = 1000.0
    arrival_rate: float = 1.0
    service_mean: float = 55.0 / 60.0
    threshold: float = 5.0

    def __post_init__(self):
        if self.T < 0:
            raise ValueError("horizon must be non-negative")
        if self.arrival_rate <= 0 or self.service_mean <= 0 or self.threshold < 0:
            raise ValueError("rates and service mean must be positive")

    def default_dim(self) -> int:
        """Coordinates needed so that running out is a > 4 sigma event."""
        return 2 * math.ceil(self.T + 4.0 * math.sqrt(self.T))


def _inv_exp(u: float, mean: float) -> float:
    if not 0.0 <= u < 1.0:
        raise ValueError(f"uniform coordinate {u!r} outside [0, 1)")
    return -mean * math.log1p(-u)


def _clients(stream: Iterable[float], model: QueueModel) -> Iterator[tuple[float, float]]:
    """(arrival time, service time) of each client arriving by time T."""
    it = iter(stream)
    t = 0.0
    while True:
        try:
            ua, us = next(it), next(it)
        except StopIteration:
            raise ValueError("coordinate stream exhausted") from None
        t += _inv_exp(ua, 1.0 / model.arrival_rate)
        if t > model.T:
            return
        yield t, _inv_exp(us, model.service_mean)


def queue_wait_count(stream: Iterable[float], model: QueueModel) -> tuple[int, int]:
    """(number of clients waiting longer than the threshold, number of clients L).

    Client i uses coordinates 2i-1 (interarrival) and 2i (service) of the
    stream; waits follow the Lindley recursion.
    """
    count = n = 0
    wait = 0.0
    prev_arrival = prev_service = None
    for arrival, service in _clients(stream, model):
        if n:
            wait = max(0.0, wait + prev_service - (arrival - prev_arrival))
        count += wait > model.threshold
        n += 1
        prev_arrival, prev_service = arrival, service
    return count, n


def queue_wait_count_events(stream: Iterable[float], model: QueueModel) -> tuple[int, int]:
    """Same quantity from an event-driven FIFO simulation (independent check)."""
    clients = list(_clients(stream, model))
    events: list[tuple[float, int, int]] = []  # (time, kind 0=departure 1=arrival, client)
    for i, (a, _) in enumerate(clients):
        heapq.heappush(events, (a, 1, i))
    queue: list[int] = []
    busy = False
    count = 0
    while events:
        now, kind, i = heapq.heappop(events)
        if kind == 1:
            queue.append(i)
        else:
            busy = False
        if not busy and queue:
            k = queue.pop(0)
            count += now - clients[k][0] > model.threshold
            busy = True
            heapq.heappush(events, (now + clients[k][1], 0, k))
    return count, len(clients)


def overflow_stream(seed: int, replication: int, index: int) -> Iterator[float]:
    """Pseudorandom coordinates used once a point's own coordinates run out."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, replication, index, _OVERFLOW_TAG]))
    while True:
        yield from rng.random(256)


def queue_counts(
    points: np.ndarray,
    model: QueueModel,
    seed: int = 0,
    replication: int = 0,
    start: int = 0,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Vectorized queue over a batch of points (rows = points, indices start...).

    Returns (wait counts, L values, number of points that needed overflow
    coordinates). A point that is still generating arrivals after its last
    coordinate pair is re-simulated from the chained stream
    ``point + overflow_stream(seed, replication, index)``, so every value equals
    ``queue_wait_count`` on that stream.
    """
    points = np.asarray(points, dtype=np.float64)
    n, s = points.shape
    if np.any(points >= 1.0) or np.any(points < 0.0):
        raise ValueError("coordinates must lie in [0, 1)")
    t = np.zeros(n)
    wait = np.zeros(n)
    prev_service = np.zeros(n)
    count = np.zeros(n, dtype=np.int64)
    L = np.zeros(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    mean_a = 1.0 / model.arrival_rate
    for i in range(s // 2):
        a = -mean_a * np.log1p(-points[:, 2 * i])
        t += a
        active &= t <= model.T
        if not active.any():
            break
        if i:
            wait = np.where(active, np.maximum(0.0, wait + prev_service - a), wait)
        count += active & (wait > model.threshold)
        L += active
        prev_service = -model.service_mean * np.log1p(-points[:, 2 * i + 1])
    overflow = np.flatnonzero(active) if s // 2 else np.arange(n)
    for k in overflow:
        stream = itertools.chain(points[k, : 2 * (s // 2)], overflow_stream(seed, replication, start + int(k)))
        count[k], L[k] = queue_wait_count(stream, model)
    return count, L, len(overflow)


# --- estimators -----------------------------------------------------------------------------------


@dataclass
class RqmcConfig:
    replications: int = 25
    m_min: int = 8
    m_max: int = 16
    seed: int = 0
    threads: int = 1
    chunk: int = 1 << 13

    def validate(self) -> None:
        if self.replications < 2:
            raise ValueError("need at least 2 replications for a variance estimate")
        if not 0 <= self.m_min <= self.m_max:
            raise ValueError("need 0 <= m_min <= m_max")
        if self.threads < 1 or self.chunk < 1:
            raise ValueError("threads and chunk must be positive")

    @property
    def ms(self) -> list[int]:
        return list(range(self.m_min, self.m_max + 1))


@dataclass
class EstimateRow:
    """One row of plot-ready output: statistics of R replicate means at n = b^m."""

    method: str
    m: int
    n: int
    mean: float
    variance: float
    rmse: float | None
    overflow: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class EstimateResult:
    rows: list[EstimateRow]
    replicate_means: np.ndarray  # (R, len(ms))
    extras: dict = field(default_factory=dict)

    def row(self, m: int) -> EstimateRow:
        return next(r for r in self.rows if r.m == m)

    def slope(self, stat: str = "rmse") -> float:
        """Least-squares slope of log_b(stat) against m."""
        ms = np.array([r.m for r in self.rows], dtype=float)
        ys = np.array([getattr(r, stat) for r in self.rows], dtype=float)
        base = self.rows[-1].n ** (1.0 / self.rows[-1].m) if self.rows[-1].m else 2.0
        return float(np.polyfit(ms, np.log(ys) / np.log(base), 1)[0])


# an integrand maps a batch of points (with the replication index and the index of
# its first point) to one value per point; it may add to a shared counter dict
Integrand = Callable[[np.ndarray, int, int], np.ndarray]


class F1Integrand:
    def __init__(self, variant: str = "ii"):
        self.variant = variant
        self.exact = 1.0

    def __call__(self, x: np.ndarray, replication: int, start: int) -> np.ndarray:
        return f1(x, self.variant)


class QueueIntegrand:
    """Wait-count (default) or client-count L of the queue model."""

    def __init__(self, model: QueueModel, seed: int = 0, quantity: str = "wait"):
        if quantity not in ("wait", "L"):
            raise ValueError("quantity must be 'wait' or 'L'")
        self.model, self.seed, self.quantity = model, seed, quantity
        self.exact = model.T * model.arrival_rate if quantity == "L" else None
        self.overflow = 0

    def __call__(self, x: np.ndarray, replication: int, start: int) -> np.ndarray:
        count, L, over = queue_counts(x, self.model, self.seed, replication, start)
        self.overflow += over
        return (count if self.quantity == "wait" else L).astype(np.float64)


def _prefix_means(values_of: Callable[[int, int], np.ndarray], ms: Sequence[int], base: int, chunk: int) -> np.ndarray:
    """Means over the first b^m values for each m, accumulated in index order."""
    targets = [base**m for m in ms]
    out = np.empty(len(ms))
    total, done, k = 0.0, 0, 0
    while k < len(targets):
        stop = min(done + chunk, targets[k])
        total += float(np.sum(values_of(done, stop - done)))
        done = stop
        while k < len(targets) and done == targets[k]:
            out[k] = total / done
            k += 1
    return out


def _summarize(method: str, means: np.ndarray, ms: Sequence[int], base: int, exact: float | None, overflow: Sequence[int]) -> list[EstimateRow]:
    rows = []
    for i, m in enumerate(ms):
        col = means[:, i]
        rmse = float(np.sqrt(np.mean((col - exact) ** 2))) if exact is not None else None
        rows.append(EstimateRow(method, m, base**m, float(col.mean()), float(col.var(ddof=1)), rmse, int(overflow[i])))
    return rows


def _run_replications(job: Callable[[int], np.ndarray], R: int, threads: int) -> np.ndarray:
    if threads <= 1:
        return np.stack([job(r) for r in range(R)])
    with ThreadPoolExecutor(max_workers=threads) as ex:
        # map preserves replication order, so the reduction is schedule independent
        return np.stack(list(ex.map(job, range(R))))


def rqmc_estimate(
    integrand: Integrand,
    generator: PointGenerator,
    cfg: RqmcConfig,
    exact: float | None = None,
) -> EstimateResult:
    """Digitally shifted replications of the equal-weight rule over b^m prefixes."""
    cfg.validate()
    exact = exact if exact is not None else getattr(integrand, "exact", None)
    b = generator.base
    if cfg.m_max > generator.cols:
        raise ValueError(f"m_max={cfg.m_max} exceeds matrix columns {generator.cols}")

    def job(r: int) -> np.ndarray:
        g = generator.apply_shift(cfg.seed, replication=r)
        return _prefix_means(lambda start, count: integrand(g.points(start, count), r, start), cfg.ms, b, cfg.chunk)

    threads = 1 if isinstance(integrand, QueueIntegrand) else cfg.threads  # counter is not thread safe
    means = _run_replications(job, cfg.replications, threads)
    over = getattr(integrand, "overflow", 0)
    return EstimateResult(_summarize("rqmc", means, cfg.ms, b, exact, [over] * len(cfg.ms)), means, {"overflow_points": over})


def mc_estimate(
    integrand: Integrand,
    dim: int,
    cfg: RqmcConfig,
    exact: float | None = None,
    base: int = 2,
) -> EstimateResult:
    """Plain Monte Carlo baseline with the same replication layout."""
    cfg.validate()
    exact = exact if exact is not None else getattr(integrand, "exact", None)

    def job(r: int) -> np.ndarray:
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, r, _MC_TAG]))
        return _prefix_means(lambda start, count: integrand(rng.random((count, dim)), r, start), cfg.ms, base, cfg.chunk)

    threads = 1 if isinstance(integrand, QueueIntegrand) else cfg.threads
    means = _run_replications(job, cfg.replications, threads)
    over = getattr(integrand, "overflow", 0)
    return EstimateResult(_summarize("mc", means, cfg.ms, base, exact, [over] * len(cfg.ms)), means, {"overflow_points": over})
