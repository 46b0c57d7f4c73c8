"""Quantum state backends: dense density operators and Pauli-frame trajectories."""

from .common import Basis, BB84Payload, BellLabel, Gate, OpaquePayload  # noqa: F401
from .dense import DenseState, nearest_bell_fidelity, payload_vector  # noqa: F401
