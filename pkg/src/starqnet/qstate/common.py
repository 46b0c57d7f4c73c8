"""Enums and small value types shared by the two state backends."""

import enum
from dataclasses import dataclass


class Basis(enum.Enum):
    Z = "Z"  # computational / "x" basis of the source
    X = "X"  # diagonal / "+" basis
    Y = "Y"  # circular; only used by verification-style measurement patterns


class Gate(enum.Enum):
    H = "H"
    X = "X"
    Z = "Z"
    SX = "SX"  # square root of X


class BellLabel(enum.Enum):
    PHI_PLUS = "PHI+"
    PHI_MINUS = "PHI-"
    PSI_PLUS = "PSI+"
    PSI_MINUS = "PSI-"


@dataclass(frozen=True)
class BB84Payload:
    """One prepare-and-measure qubit: a classical bit in a preparation basis."""

    bit: int
    basis: Basis

    def __post_init__(self):
        if self.bit not in (0, 1):
            raise ValueError(f"bit must be 0 or 1, not {self.bit!r}")
        if self.basis == Basis.Y:
            raise ValueError("payloads are prepared in Z or X only")


@dataclass(frozen=True)
class OpaquePayload:
    """An uninterpreted payload carried through the network (e.g. rotated
    single-qubit states handed to a compute node); never measured here."""

    tag: int = 0
