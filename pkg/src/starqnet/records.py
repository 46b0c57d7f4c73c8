"""Record streams and per-run statistics shared by protocols and metrics."""

from dataclasses import dataclass, field

import numpy as np

from ._kernels import KIND_DARK, KIND_SIGNAL
from .qstate import Basis

_BASIS_CODE = {Basis.Z: 0, Basis.X: 1}
_CODE_BASIS = {0: Basis.Z, 1: Basis.X}


@dataclass(frozen=True)
class KeyRecord:
    """One stored bit: timestep, basis and value at one node."""

    timestep_index: int
    basis: Basis
    bit: int
    node: str = ""


@dataclass
class RecordStream:
    """Columnar key records for one node: parallel arrays sorted by timestep.

    ``kinds`` distinguishes signal/dark/double clicks on receiver streams;
    sender streams leave it as all-signal.
    """

    steps: np.ndarray
    bases: np.ndarray
    bits: np.ndarray
    kinds: np.ndarray | None = None

    def __len__(self):
        return len(self.steps)

    @classmethod
    def from_arrays(cls, steps, bases, bits, kinds=None):
        return cls(
            np.asarray(steps, np.int64),
            np.asarray(bases, np.uint8),
            np.asarray(bits, np.uint8),
            None if kinds is None else np.asarray(kinds, np.uint8),
        )

    @classmethod
    def from_records(cls, records: list[KeyRecord]):
        records = sorted(records, key=lambda r: r.timestep_index)
        return cls.from_arrays(
            [r.timestep_index for r in records],
            [_BASIS_CODE[r.basis] for r in records],
            [r.bit for r in records],
        )

    def to_records(self, node: str = "") -> list[KeyRecord]:
        return [
            KeyRecord(int(s), _CODE_BASIS[int(b)], int(v), node)
            for s, b, v in zip(self.steps, self.bases, self.bits)
        ]

    def usable(self) -> "RecordStream":
        """Drop rows that carry no outcome (double-discards)."""
        if self.kinds is None:
            return self
        keep = (self.kinds == KIND_SIGNAL) | (self.kinds == KIND_DARK)
        return RecordStream(
            self.steps[keep], self.bases[keep], self.bits[keep], self.kinds[keep]
        )


@dataclass
class GhzRoundStream:
    """Delivered multipartite rounds: one outcome per party per round."""

    parties: tuple[str, ...]
    steps: np.ndarray                 # delivered timestep indices
    outcomes: np.ndarray              # shape (rounds, n_parties)

    def __len__(self):
        return len(self.steps)

    def error_mask(self) -> np.ndarray:
        """Rounds where any outcome deviates from the all-equal pattern."""
        return (self.outcomes != self.outcomes[:, :1]).any(axis=1)


@dataclass
class RunResult:
    """Aggregates of one simulation run."""

    sifted_bits: int
    channel_uses: int
    flipped_bits: int
    simulated_seconds: float
    seed: int


@dataclass
class ProtocolStats:
    """Per-protocol aggregate over one or more runs."""

    sifted_bits: int = 0
    channel_uses: int = 0
    flipped_bits: int = 0
    simulated_seconds: float = 0.0
    per_run: list[RunResult] = field(default_factory=list)
    has_qber: bool = True
    records: tuple | None = None  # streams of the (last) run when requested

    def add_run(self, run: RunResult):
        assert run.flipped_bits <= run.sifted_bits <= run.channel_uses
        self.sifted_bits += run.sifted_bits
        self.channel_uses += run.channel_uses
        self.flipped_bits += run.flipped_bits
        self.simulated_seconds += run.simulated_seconds
        self.per_run.append(run)

    @classmethod
    def merge(cls, parts: list["ProtocolStats"]) -> "ProtocolStats":
        out = cls(has_qber=parts[0].has_qber if parts else True)
        for part in parts:
            for run in part.per_run:
                out.add_run(run)
            if part.records is not None:
                out.records = part.records
        out.per_run.sort(key=lambda r: r.seed)
        return out

    @property
    def sifted_rate_per_s(self) -> float:
        return self.sifted_bits / self.simulated_seconds if self.simulated_seconds else 0.0

    @property
    def throughput(self) -> float:
        return self.sifted_bits / self.channel_uses if self.channel_uses else 0.0

    @property
    def qber(self) -> float | None:
        if not self.has_qber or self.sifted_bits == 0:
            return None
        return self.flipped_bits / self.sifted_bits

    def rate_ci_halfwidth(self) -> float:
        """3-sigma halfwidth of the mean per-run rate (0 for a single run)."""
        if len(self.per_run) < 2:
            return 0.0
        rates = np.array([r.sifted_bits / r.simulated_seconds for r in self.per_run])
        return float(3.0 * rates.std(ddof=1) / np.sqrt(len(rates)))
