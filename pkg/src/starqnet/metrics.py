"""Estimators and analytic oracles: sifting, QBER and closed-form rates.

The oracle chain mirrors the simulated component pipeline; Monte Carlo
estimates are expected to land within 3 binomial sigma of these products.
The closed-form QBER oracle ignores crosstalk and dark-count contributions
(1e-5 and 1e-8 scale; below statistical resolution at desk scale) so it
stays exact and testable.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .errors import EmptyKeyError, MalformedChainError, NoDeliveredRoundsError, ValidationError
from .hardware import FiberParams, ghz_success_probability
from .netconfig import Topology
from .records import GhzRoundStream, RecordStream


class CorrelationRule(enum.Enum):
    EQUAL = "equal"
    ANTICORRELATED_PSI_MINUS = "anticorrelated_psi_minus"


@dataclass
class SiftedKey:
    """Timestep- and basis-aligned bit pairs."""

    steps: np.ndarray
    bases: np.ndarray
    sender_bits: np.ndarray
    receiver_bits: np.ndarray

    def __len__(self):
        return len(self.steps)


def sift(sender: RecordStream, receiver: RecordStream) -> SiftedKey:
    """Inner join on timestep where bases match; rows without an outcome
    (double-discards) are dropped first."""
    a = sender.usable()
    b = receiver.usable()
    common, ia, ib = np.intersect1d(a.steps, b.steps, return_indices=True)
    match = a.bases[ia] == b.bases[ib]
    return SiftedKey(
        steps=common[match],
        bases=a.bases[ia][match],
        sender_bits=a.bits[ia][match],
        receiver_bits=b.bits[ib][match],
    )


def qber(key: SiftedKey, rule: CorrelationRule = CorrelationRule.EQUAL) -> float:
    """Fraction of sifted pairs violating the expected correlation."""
    if len(key) == 0:
        raise EmptyKeyError("no sifted bits")
    if rule == CorrelationRule.EQUAL:
        flips = int((key.sender_bits != key.receiver_bits).sum())
    else:
        flips = int((key.sender_bits == key.receiver_bits).sum())
    return flips / len(key)


def count_flips(key: SiftedKey, rule: CorrelationRule) -> int:
    if rule == CorrelationRule.EQUAL:
        return int((key.sender_bits != key.receiver_bits).sum())
    return int((key.sender_bits == key.receiver_bits).sum())


# -- oracle chains ----------------------------------------------------------


@dataclass(frozen=True)
class Source:
    frequency_hz: float
    p_success: float


@dataclass(frozen=True)
class Coupling:
    p: float


@dataclass(frozen=True)
class Fiber:
    length_km: float
    eta_db_per_km: float = 0.18

    @property
    def p(self) -> float:
        return 10.0 ** (-self.eta_db_per_km * self.length_km / 10.0)


@dataclass(frozen=True)
class Switch:
    p: float


@dataclass(frozen=True)
class Detector:
    p: float


@dataclass(frozen=True)
class BsmStation:
    p: float


@dataclass(frozen=True)
class OracleChain:
    """Ordered component descriptors: a source, loss elements, and a
    terminal detector (or BSM input).  ``basis_sift`` applies the 1/2
    matched-basis factor of prepare-and-measure key protocols."""

    elements: tuple
    basis_sift: bool = False

    def validate(self):
        if not self.elements or not isinstance(self.elements[0], Source):
            raise MalformedChainError("chain must start with a source")
        if not isinstance(self.elements[-1], (Detector, BsmStation)):
            raise MalformedChainError("chain must end with a detector or BSM input")
        for el in self.elements[1:-1]:
            if isinstance(el, (Source, Detector, BsmStation)):
                raise MalformedChainError(f"{type(el).__name__} in chain interior")
        for el in self.elements[1:]:
            if not 0.0 <= el.p <= 1.0:
                raise MalformedChainError(f"{el} survival outside [0, 1]")

    @property
    def source(self) -> Source:
        return self.elements[0]


def expected_throughput(chain: OracleChain) -> float:
    """Product of per-component survival factors times the sifting factor."""
    chain.validate()
    p = 1.0
    for el in chain.elements[1:]:
        p *= el.p
    if chain.basis_sift:
        p *= 0.5
    return p


def expected_rate(chain: OracleChain) -> float:
    """source frequency x source success x expected throughput."""
    return chain.source.frequency_hz * chain.source.p_success * expected_throughput(chain)


def expected_coincidence_rate(chain_a: OracleChain, chain_b: OracleChain) -> float:
    """Joint-measurement round rate of two arms feeding one BSM station.

    Both arms must terminate in the same-probability BSM input; the
    success draw is counted once.
    """
    chain_a.validate()
    chain_b.validate()
    last_a, last_b = chain_a.elements[-1], chain_b.elements[-1]
    if not (isinstance(last_a, BsmStation) and isinstance(last_b, BsmStation)):
        raise MalformedChainError("both arms must end at the BSM station")
    if last_a.p != last_b.p:
        raise MalformedChainError("arms disagree on the BSM success probability")
    fa, fb = chain_a.source.frequency_hz, chain_b.source.frequency_hz
    if fa != fb:
        raise MalformedChainError("arms must share the attempt frequency")
    per_step_a = chain_a.source.p_success * expected_throughput(chain_a)
    per_step_b = chain_b.source.p_success * expected_throughput(chain_b)
    return fa * per_step_a * per_step_b / last_a.p  # one shared BSM draw


def ghz_error_rate(rounds: GhzRoundStream) -> float:
    """Fraction of delivered rounds where any outcome broke the all-equal
    correlation."""
    if len(rounds) == 0:
        raise NoDeliveredRoundsError("no fully delivered rounds")
    return float(rounds.error_mask().mean())


def accumulate_curve(checkpoints: list[tuple[float, float]]) -> tuple[np.ndarray, np.ndarray]:
    """Turn (time_s, new_bits) checkpoints into a cumulative series."""
    times = np.array([t for t, _ in checkpoints], dtype=float)
    if len(times) and (np.diff(times) < 0).any():
        raise ValidationError("checkpoint times must be monotone")
    bits = np.array([b for _, b in checkpoints], dtype=float)
    if (bits < 0).any():
        raise ValidationError("per-checkpoint bit counts must be non-negative")
    return times, np.cumsum(bits)


# -- chain builders for the simulated protocols ------------------------------


def _arm(topology: Topology, leaf: str) -> tuple[Coupling, Fiber]:
    fiber: FiberParams = topology.link_for(leaf).fiber
    return Coupling(fiber.p_coupling), Fiber(fiber.length_km, fiber.eta_fiber)


def chain_bb84(topology: Topology, sender: str, receiver: str) -> OracleChain:
    snd, rcv = topology.node(sender), topology.node(receiver)
    leaf = rcv.name if snd.role.value == "qonnector" else snd.name
    coupling, fiber = _arm(topology, leaf)
    src = Source(snd.hardware.source.f_qubit, snd.hardware.source.p_qubit)
    return OracleChain(
        (src, coupling, fiber, Detector(rcv.hardware.detector.p_det)), basis_sift=True
    )


def chain_transmitted(
    topology: Topology, sender: str, receiver: str, basis_sift: bool = True
) -> OracleChain:
    snd, rcv = topology.node(sender), topology.node(receiver)
    hub = topology.qonnector()
    c1, f1 = _arm(topology, snd.name)
    c2, f2 = _arm(topology, rcv.name)
    src = Source(snd.hardware.source.f_qubit, snd.hardware.source.p_qubit)
    return OracleChain(
        (
            src,
            c1,
            f1,
            Switch(hub.hardware.p_transmit),
            c2,
            f2,
            Detector(rcv.hardware.detector.p_det),
        ),
        basis_sift=basis_sift,
    )


def chain_bbm92_arm(topology: Topology, leaf: str) -> OracleChain:
    hub = topology.qonnector()
    coupling, fiber = _arm(topology, leaf)
    det = topology.node(leaf).hardware.detector.p_det
    src = Source(hub.hardware.source.f_EPR, hub.hardware.source.p_EPR)
    return OracleChain((src, coupling, fiber, Detector(det)))


def expected_bbm92_throughput(topology: Topology, a: str, b: str) -> float:
    """Coincidence throughput per emitted pair, including the matched-basis
    half."""
    ta = expected_throughput(chain_bbm92_arm(topology, a))
    tb = expected_throughput(chain_bbm92_arm(topology, b))
    return ta * tb * 0.5


def expected_bbm92_rate(topology: Topology, a: str, b: str) -> float:
    src = topology.qonnector().hardware.source
    return src.f_EPR * src.p_EPR * expected_bbm92_throughput(topology, a, b)


def chain_mdi_arm(topology: Topology, leaf: str) -> OracleChain:
    node = topology.node(leaf)
    coupling, fiber = _arm(topology, leaf)
    src = Source(node.hardware.source.f_qubit, node.hardware.source.p_qubit)
    p_bsm = topology.qonnector().hardware.p_BSM
    return OracleChain((src, coupling, fiber, BsmStation(p_bsm)))


def expected_mdi_rate(topology: Topology, a: str, b: str) -> float:
    return expected_coincidence_rate(chain_mdi_arm(topology, a), chain_mdi_arm(topology, b))


def chain_ghz_arm(topology: Topology, leaf: str) -> OracleChain:
    # the n-dependent creation probability sits outside the per-arm chain
    hub = topology.qonnector()
    coupling, fiber = _arm(topology, leaf)
    det = topology.node(leaf).hardware.detector.p_det
    src = Source(hub.hardware.source.f_GHZ, 1.0)
    return OracleChain((src, coupling, fiber, Detector(det)))


def expected_ghz_rate(topology: Topology, parties: list[str]) -> float:
    hub = topology.qonnector()
    p = ghz_success_probability(len(parties), hub.hardware.source)
    rate = hub.hardware.source.f_GHZ * p
    for leaf in parties:
        rate *= expected_throughput(chain_ghz_arm(topology, leaf))
    return rate
