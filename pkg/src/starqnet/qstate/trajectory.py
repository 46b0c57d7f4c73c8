"""Stochastic trajectory backend.

Tracks a classical payload plus a sampled Pauli error frame per qubit and
collapse bookkeeping per entangled group.  Valid for the Z/X (and
verification-style Y) measurement patterns the protocols use; anything
else raises UnsupportedPatternError and belongs on the dense backend.

Measurement sign rules (frame X^a Z^b, toggle iff it anticommutes with
the measured operator): Z basis toggles on a, X basis on b, Y basis on
a XOR b.
"""

import numpy as np

from ..engine import RngStream
from ..errors import (
    AlreadyMeasuredError,
    BadProbabilityError,
    UnsupportedPatternError,
    UnsupportedWidthError,
)
from . import dense
from .common import Basis, BB84Payload, BellLabel, Gate, OpaquePayload


class PauliFrame:
    """Accumulated X/Z error record; frames compose by XOR."""

    __slots__ = ("x", "z")

    def __init__(self, x: bool = False, z: bool = False):
        self.x = x
        self.z = z

    def compose(self, other: "PauliFrame"):
        self.x ^= other.x
        self.z ^= other.z

    def toggles(self, basis: Basis) -> bool:
        if basis == Basis.Z:
            return self.x
        if basis == Basis.X:
            return self.z
        return self.x ^ self.z

    def __repr__(self):
        return f"PauliFrame(x={self.x}, z={self.z})"


class TrajQubit:
    __slots__ = ("payload", "group", "frame", "pending", "measured")

    def __init__(self, payload=None, group=None):
        self.payload = payload
        self.group = group
        self.frame = PauliFrame()
        self.pending: Gate | None = None  # basis rotation applied before a Z readout
        self.measured = False


class EntangledGroup:
    """Shared state of an EPR pair or GHZ group of trajectory qubits."""

    EPR = "epr_psi_minus"
    GHZ = "ghz"

    def __init__(self, kind: str, members: list[TrajQubit]):
        self.kind = kind
        self.members = members
        self.n = len(members)
        # epr collapse record
        self._first: tuple[Basis, int] | None = None
        # ghz collapse records
        self._z_value: int | None = None
        self._xy_count = 0
        self._xy_parity = 0
        self._y_count = 0

    def measure_member(
        self, qubit: TrajQubit, basis: Basis, toggle_basis: Basis, rng: RngStream
    ) -> int:
        """Measure one member; ``basis`` picks the collapse rule (pre-rotation
        state) while ``toggle_basis`` is the basis the frame currently lives
        in (Z once a rotation conjugated it, the measured basis otherwise)."""
        if self.kind == self.EPR:
            ideal = self._epr_ideal(basis, rng)
        else:
            ideal = self._ghz_ideal(basis, rng)
        return ideal ^ int(qubit.frame.toggles(toggle_basis))

    def _epr_ideal(self, basis: Basis, rng: RngStream) -> int:
        if self._first is None:
            v = rng.bit()
            self._first = (basis, v)
            return v
        b0, v0 = self._first
        if basis == b0:
            return v0 ^ 1  # singlet: anticorrelated in every matching basis
        return rng.bit()

    def _ghz_ideal(self, basis: Basis, rng: RngStream) -> int:
        if basis == Basis.Z:
            if self._xy_count:
                raise UnsupportedPatternError(
                    "Z after X/Y measurements on a GHZ group: use the dense backend"
                )
            if self._z_value is None:
                self._z_value = rng.bit()
            return self._z_value
        # X or Y measurement
        if self._z_value is not None:
            return rng.bit()  # already collapsed to a product state
        self._xy_count += 1
        if basis == Basis.Y:
            self._y_count += 1
        if self._xy_count < self.n:
            v = rng.bit()
            self._xy_parity ^= v
            return v
        # last member: X^n-type stabilizer fixes the parity when the Y count
        # is even; an odd Y count leaves the parity uniform.
        if self._y_count % 2 == 1:
            return rng.bit()
        target = (self._y_count // 2) % 2
        return target ^ self._xy_parity


def prepare_bb84(payload: BB84Payload) -> TrajQubit:
    return TrajQubit(payload=payload)


def prepare_opaque(tag: int = 0) -> TrajQubit:
    return TrajQubit(payload=OpaquePayload(tag))


def prepare_epr() -> tuple[TrajQubit, TrajQubit]:
    a, b = TrajQubit(), TrajQubit()
    group = EntangledGroup(EntangledGroup.EPR, [a, b])
    a.group = b.group = group
    return a, b


def prepare_ghz(n: int) -> tuple[TrajQubit, ...]:
    if not 3 <= n <= 6:
        raise UnsupportedWidthError(f"GHZ width {n} outside 3..6")
    qubits = [TrajQubit() for _ in range(n)]
    group = EntangledGroup(EntangledGroup.GHZ, qubits)
    for q in qubits:
        q.group = group
    return tuple(qubits)


def apply_gate(qubit: TrajQubit, gate: Gate):
    if qubit.measured:
        raise AlreadyMeasuredError("gate on a measured qubit")
    if gate == Gate.X:
        _require_no_pending(qubit)
        qubit.frame.x ^= True
    elif gate == Gate.Z:
        _require_no_pending(qubit)
        qubit.frame.z ^= True
    elif gate == Gate.H:
        qubit.frame.x, qubit.frame.z = qubit.frame.z, qubit.frame.x
        if qubit.payload is not None:
            _flip_payload_basis(qubit)
        elif qubit.pending is None:
            qubit.pending = Gate.H
        elif qubit.pending == Gate.H:
            qubit.pending = None
        else:
            raise UnsupportedPatternError("H after sqrt(X) on a group member")
    elif gate == Gate.SX:
        if qubit.payload is not None or qubit.pending is not None:
            raise UnsupportedPatternError("sqrt(X) only supported directly before readout")
        # frame conjugation under sqrt(X): X -> X, Z -> (XZ up to phase)
        if qubit.frame.z:
            qubit.frame.x ^= True
        qubit.pending = Gate.SX
    else:
        raise UnsupportedPatternError(f"gate {gate} not supported on trajectory backend")


def _require_no_pending(qubit: TrajQubit):
    if qubit.pending is not None:
        raise UnsupportedPatternError("Pauli gate after a basis rotation")


def _flip_payload_basis(qubit: TrajQubit):
    p = qubit.payload
    if isinstance(p, BB84Payload):
        qubit.payload = BB84Payload(p.bit, Basis.X if p.basis == Basis.Z else Basis.Z)
    else:
        raise UnsupportedPatternError("H on an opaque payload")


def apply_dephase(qubit: TrajQubit, p_flip: float, rng: RngStream):
    if rng.bernoulli(p_flip):
        qubit.frame.z ^= True


def apply_depolarize(qubit: TrajQubit, lambda1: float, rng: RngStream):
    if not 0.0 <= lambda1 <= 1.0:
        raise BadProbabilityError(f"probability {lambda1!r} outside [0, 1]")
    if rng.bernoulli(1.0 - lambda1):
        pauli = rng.pauli()
        if pauli in (1, 2):
            qubit.frame.x ^= True
        if pauli in (2, 3):
            qubit.frame.z ^= True


def _effective_basis(qubit: TrajQubit, basis: Basis) -> Basis:
    if qubit.pending is None:
        return basis
    if basis != Basis.Z:
        raise UnsupportedPatternError("rotated qubits are read out in Z")
    return Basis.X if qubit.pending == Gate.H else Basis.Y


def measure(qubit: TrajQubit, basis: Basis, rng: RngStream) -> int:
    if qubit.measured:
        raise AlreadyMeasuredError("qubit already measured")
    eff = _effective_basis(qubit, basis)
    toggle_basis = basis if qubit.pending is None else Basis.Z
    qubit.measured = True
    if qubit.group is not None:
        return qubit.group.measure_member(qubit, eff, toggle_basis, rng)
    p = qubit.payload
    if isinstance(p, OpaquePayload):
        raise UnsupportedPatternError("opaque payloads are carried, not measured")
    if eff == p.basis:
        return p.bit ^ int(qubit.frame.toggles(eff))
    return rng.bit()  # conjugate or Y readout of a Z/X eigenstate is uniform


def bsm_outcome(qubit_a: TrajQubit, qubit_b: TrajQubit, rng: RngStream) -> BellLabel:
    """Bell-basis label of a qubit pair (same EPR group or independent payloads)."""
    for q in (qubit_a, qubit_b):
        if q.measured:
            raise AlreadyMeasuredError("qubit already measured")
        if q.pending is not None:
            raise UnsupportedPatternError("Bell measurement after a basis rotation")
    qubit_a.measured = qubit_b.measured = True

    if qubit_a.group is not None or qubit_b.group is not None:
        group = qubit_a.group
        if group is None or group is not qubit_b.group or group.kind != EntangledGroup.EPR:
            raise UnsupportedPatternError(
                "Bell measurement across groups: use the dense backend"
            )
        # psi- transformed by the pair's combined frame: an X flips the
        # parity bit, a Z flips the phase bit.
        parity = 1 ^ int(qubit_a.frame.x ^ qubit_b.frame.x)
        phase = 1 ^ int(qubit_a.frame.z ^ qubit_b.frame.z)
        return _label_from_bits(parity, phase)

    va = _payload_vector_with_frame(qubit_a)
    vb = _payload_vector_with_frame(qubit_b)
    joint = np.kron(va, vb)
    u = rng.random()
    acc = 0.0
    labels = list(BellLabel)
    for label in labels:
        pr = abs(np.vdot(dense.BELL_VECTORS[label], joint)) ** 2
        acc += pr
        if u < acc:
            return label
    return labels[-1]


def _payload_vector_with_frame(qubit: TrajQubit) -> np.ndarray:
    p = qubit.payload
    if not isinstance(p, BB84Payload):
        raise UnsupportedPatternError("Bell measurement needs payload qubits")
    v = dense.payload_vector(p.bit, p.basis)
    if qubit.frame.z:
        v = dense.GATE_MATRICES[Gate.Z] @ v
    if qubit.frame.x:
        v = dense.GATE_MATRICES[Gate.X] @ v
    return v


def _label_from_bits(parity: int, phase: int) -> BellLabel:
    return {
        (0, 0): BellLabel.PHI_PLUS,
        (0, 1): BellLabel.PHI_MINUS,
        (1, 0): BellLabel.PSI_PLUS,
        (1, 1): BellLabel.PSI_MINUS,
    }[(parity, phase)]
