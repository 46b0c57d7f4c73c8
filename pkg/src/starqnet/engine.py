"""Deterministic event scheduler and seeded randomness.

Simulated time is integer nanoseconds.  Events with equal fire times
dispatch in scheduling order (FIFO among ties), so a run is a total order
over (fire_at, sequence).

Randomness is counter-based: the value of draw ``i`` of a stream depends
only on (seed, stream_id, i), never on how many draws other streams made.
This keeps runs reproducible across platforms and lets the batch kernels
evaluate draws out of order without changing any result.  The generator is
the splitmix64 finalizer over a Weyl sequence.
"""

import heapq
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import BadProbabilityError, PastTimeError

SimTime = int  # nanoseconds since run start

NS_PER_S = 1_000_000_000

# Photon travel time is fixed per fiber traversal regardless of length;
# callers may override per run.
DEFAULT_TRAVEL_NS = 1

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_STREAM_SALT = 0xA3EC647659359ACD
U01_SCALE = 2.0 ** -53


def mix64(z: int) -> int:
    """splitmix64 output function (64-bit avalanche)."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def stream_base(seed: int, stream_id: int) -> int:
    """Derive the 64-bit counter base of stream ``stream_id`` under ``seed``."""
    return mix64(mix64(seed) ^ mix64((stream_id * _STREAM_SALT + 1) & _MASK))


def u64_at(base: int, index: int) -> int:
    """The ``index``-th raw 64-bit draw of a stream."""
    return mix64((base + ((index + 1) * _GAMMA)) & _MASK)


def u01_at(base: int, index: int) -> float:
    """The ``index``-th uniform double in [0, 1)."""
    return (u64_at(base, index) >> 11) * U01_SCALE


def u01_block(base: int, start: int, count: int) -> np.ndarray:
    """Vectorized draws [start, start+count) of a stream; equals u01_at pointwise."""
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    z = np.uint64(base) + idx * np.uint64(_GAMMA)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    z ^= z >> np.uint64(31)
    return (z >> np.uint64(11)).astype(np.float64) * U01_SCALE


class RngStream:
    """One node's private random stream.

    Identical (seed, stream_id, draw index) gives the identical draw on any
    platform.  Sequential consumers use :meth:`random`/:meth:`bernoulli`;
    the batch kernels index the same counter space directly via ``base``.
    """

    __slots__ = ("seed", "stream_id", "base", "cursor")

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = seed
        self.stream_id = stream_id
        self.base = stream_base(seed, stream_id)
        self.cursor = 0

    def random(self) -> float:
        u = u01_at(self.base, self.cursor)
        self.cursor += 1
        return u

    def bernoulli(self, p: float) -> bool:
        if not 0.0 <= p <= 1.0:
            raise BadProbabilityError(f"probability {p!r} outside [0, 1]")
        return self.random() < p

    def bit(self) -> int:
        return 0 if self.random() < 0.5 else 1

    def pauli(self) -> int:
        """Uniform choice in {0: I, 1: X, 2: Y, 3: Z}."""
        return min(int(self.random() * 4.0), 3)

    def block(self, count: int) -> np.ndarray:
        """Consume ``count`` draws at once (same values a loop would see)."""
        out = u01_block(self.base, self.cursor, count)
        self.cursor += count
        return out


def draw_bernoulli(stream: RngStream, p: float) -> bool:
    """True with probability ``p``; consumes exactly one draw of ``stream``."""
    return stream.bernoulli(p)


@dataclass
class Event:
    """Queue entry: dispatch ``action`` at ``fire_at``; equal times go by sequence."""

    fire_at: SimTime
    sequence: int
    action: Callable
    label: str | None = None
    canceled: bool = field(default=False, compare=False)

    def cancel(self):
        self.canceled = True


class Scheduler:
    """Single-run discrete-event loop.

    Not thread-safe; a run owns its scheduler.  Separate runs (other seeds)
    may execute in parallel since no state is shared.
    """

    def __init__(self, trace: bool = False):
        self._heap: list[tuple[SimTime, int, Event]] = []
        self._now: SimTime = 0
        self._seq = 0
        self.trace: list[tuple[SimTime, int, str | None]] | None = [] if trace else None

    def now(self) -> SimTime:
        return self._now

    def schedule(self, fire_at: SimTime, action: Callable, label: str | None = None) -> Event:
        if fire_at < self._now:
            raise PastTimeError(f"fire_at={fire_at} < now={self._now}")
        event = Event(int(fire_at), self._seq, action, label)
        self._seq += 1
        heapq.heappush(self._heap, (event.fire_at, event.sequence, event))
        return event

    def cancel(self, event: Event):
        event.cancel()

    def run_until(self, t_end: SimTime) -> int:
        """Dispatch every event with fire_at <= t_end in (fire_at, sequence) order.

        Returns the number of dispatched (non-canceled) events; leaves
        now() == t_end.
        """
        dispatched = 0
        heap = self._heap
        while heap and heap[0][0] <= t_end:
            fire_at, seq, event = heapq.heappop(heap)
            if event.canceled:
                continue
            self._now = fire_at
            if self.trace is not None:
                self.trace.append((fire_at, seq, event.label))
            event.action(self)
            dispatched += 1
        self._now = t_end
        return dispatched


def attempt_times_ns(frequency_hz: float, duration_s: float) -> list[SimTime]:
    """Nanosecond timestamps of source attempts in [0, duration); floor(T*f) of them."""
    n = attempt_count(frequency_hz, duration_s)
    return [step_time_ns(k, frequency_hz) for k in range(n)]


def attempt_count(frequency_hz: float, duration_s: float) -> int:
    # Small epsilon so that exact products (1e-3 s * 80e6 Hz) are not lost
    # to float rounding; the count is still floor(T*f).
    return int(duration_s * frequency_hz + 1e-6)


def step_time_ns(step: int, frequency_hz: float) -> SimTime:
    f = int(frequency_hz)
    if f == frequency_hz:
        return step * NS_PER_S // f
    return int(step * NS_PER_S / frequency_hz)
