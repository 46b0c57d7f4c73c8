"""Physical component models: sources, fiber links, detectors, switch, BSM.

Defaults follow the baseline hardware set used throughout the bundled
presets.  All stochastic decisions draw from an explicit RngStream owned
by the node operating the component.

Fiber attenuation uses the dB convention: survival over L km at
eta dB/km is 10^(-eta*L/10) (times the coupling efficiency at fiber
entry).  Photon loss is erasure: a lost photon simply never reaches the
detector; the depolarizing channel stays available as an optional noise
knob and is off by default.
"""

from dataclasses import dataclass, field, replace

from .engine import RngStream
from .errors import BadProbabilityError, UnsupportedWidthError
from .qstate import Basis, BB84Payload
from .qstate import trajectory as traj
from .qstate.common import OpaquePayload
from .qstate.trajectory import TrajQubit


@dataclass
class SourceParams:
    f_qubit: float = 80e6          # single-qubit creation attempt frequency (Hz)
    p_qubit: float = 8e-3          # success probability per attempt
    p_flip: float = 0.0            # bit flip at creation (acts on the encoded bit)
    f_EPR: float = 80e6            # pair creation attempt frequency (Hz)
    p_EPR: float = 1e-2            # pair success probability (1-2 qubit experiments)
    p_EPR_multi: float = 0.1       # pair success probability in multiphoton mode
    f_GHZ: float = 8e6             # multipartite attempt frequency (Hz)
    p_fusion: float = 0.36         # pairwise fusion success probability
    eta_herald: float = 0.7        # heralding efficiency for odd widths


@dataclass
class DetectorParams:
    p_det: float = 0.95            # detection efficiency
    p_crosstalk: float = 1e-5      # outcome flip probability
    R_dark: float = 1e2            # dark count rate (Hz)
    dt_det: float = 100e-12        # detection gate width (s)

    @property
    def p_dark(self) -> float:
        """Dark count probability within one gate: R_dark * dt_det."""
        p = self.R_dark * self.dt_det
        if not 0.0 <= p <= 1.0:
            raise BadProbabilityError(f"R_dark*dt_det = {p} outside [0, 1]")
        return p


@dataclass
class FiberParams:
    length_km: float = 0.0
    eta_fiber: float = 0.18        # attenuation (dB/km)
    p_coupling: float = 0.9        # coupling efficiency at fiber entry
    p_dephase: float = 0.02        # phase flip probability per traversal


@dataclass
class HardwareParams:
    """Per-node bundle: source + detector + node-level probabilities."""

    source: SourceParams = field(default_factory=SourceParams)
    detector: DetectorParams = field(default_factory=DetectorParams)
    p_transmit: float = 0.9        # routing switch success
    p_BSM: float = 0.36            # joint Bell measurement success
    t_gate: float = 1e-9           # single-qubit gate duration (s)
    p_depolar: float = 0.0         # optional per-qubit depolarizing weight (off)

    def copy(self) -> "HardwareParams":
        return HardwareParams(
            source=replace(self.source),
            detector=replace(self.detector),
            p_transmit=self.p_transmit,
            p_BSM=self.p_BSM,
            t_gate=self.t_gate,
            p_depolar=self.p_depolar,
        )


@dataclass
class DetectionRecord:
    timestep_index: int
    basis: Basis | None
    outcome: int | None
    click_kind: str  # "signal" | "dark" | "none" | "double_discard"


@dataclass
class Photon:
    """A tracked flying qubit plus its emission timestep."""

    qubit: TrajQubit
    emit_step: int


def fiber_survival(fiber: FiberParams) -> float:
    """Coupling times attenuation: p_coupling * 10^(-eta*L/10)."""
    return fiber.p_coupling * 10.0 ** (-fiber.eta_fiber * fiber.length_km / 10.0)


def attempt_single_qubit(
    src: SourceParams, payload: BB84Payload, rng: RngStream, step: int = 0
) -> Photon | None:
    """One source attempt; on success the photon carries the payload with the
    bit flipped with probability p_flip."""
    if not rng.bernoulli(src.p_qubit):
        return None
    if src.p_flip > 0.0 and rng.bernoulli(src.p_flip):
        payload = BB84Payload(payload.bit ^ 1, payload.basis)
    return Photon(traj.prepare_bb84(payload), step)


def attempt_epr(src: SourceParams, rng: RngStream, step: int = 0) -> tuple[Photon, Photon] | None:
    if not rng.bernoulli(src.p_EPR):
        return None
    a, b = traj.prepare_epr()
    return Photon(a, step), Photon(b, step)


def ghz_success_probability(n: int, src: SourceParams) -> float:
    """Closed-form creation probability of an n-qubit entangled state.

    Even n = 2m states come from fusing m pairs: p_EPR^m * p_fusion^(m-1);
    odd n = 2m-1 adds a heralding detection: the even formula times
    eta_herald.  Uses the multiphoton pair success probability.
    """
    if not 3 <= n <= 6:
        raise UnsupportedWidthError(f"GHZ width {n} outside 3..6")
    m = (n + 1) // 2
    p = src.p_EPR_multi**m * src.p_fusion ** (m - 1)
    if n % 2 == 1:
        p *= src.eta_herald
    return p


def attempt_ghz(src: SourceParams, n: int, rng: RngStream, step: int = 0) -> tuple[Photon, ...] | None:
    if not rng.bernoulli(ghz_success_probability(n, src)):
        return None
    return tuple(Photon(q, step) for q in traj.prepare_ghz(n))


def fiber_transmit(photon: Photon | None, fiber: FiberParams, rng: RngStream) -> Photon | None:
    """Erasure with probability 1 - coupling*attenuation; survivors dephase
    with probability p_dephase.  Arrival is one travel time later; the
    caller owns scheduling."""
    if photon is None:
        return None
    if not rng.bernoulli(fiber_survival(fiber)):
        return None
    traj.apply_dephase(photon.qubit, fiber.p_dephase, rng)
    return photon


def switch_route(photon: Photon | None, p_transmit: float, rng: RngStream) -> Photon | None:
    if photon is None:
        return None
    return photon if rng.bernoulli(p_transmit) else None


def detect(
    photon: Photon | None,
    det: DetectorParams,
    basis: Basis | None,
    rng: RngStream,
    timestep_index: int | None = None,
) -> DetectionRecord:
    """One gated detection attempt.

    A present photon registers with probability p_det; its outcome is the
    qubit measurement XOR a crosstalk flip.  A dark count fires
    independently with probability R_dark*dt_det; photon click + dark
    click in one gate is discarded, a lone dark click yields a uniform
    outcome.
    """
    step = photon.emit_step if photon is not None else timestep_index
    if step is None:
        raise ValueError("timestep_index required when no photon is present")

    signal = photon is not None and rng.bernoulli(det.p_det)
    outcome = None
    if signal:
        if isinstance(photon.qubit.payload, OpaquePayload):
            outcome = None  # carried payloads are counted, not read out
        else:
            outcome = traj.measure(photon.qubit, basis, rng)
            if det.p_crosstalk > 0.0 and rng.bernoulli(det.p_crosstalk):
                outcome ^= 1
    dark = rng.bernoulli(det.p_dark)

    if signal and dark:
        return DetectionRecord(step, None, None, "double_discard")
    if signal:
        return DetectionRecord(step, basis, outcome, "signal")
    if dark:
        return DetectionRecord(step, basis, rng.bit(), "dark")
    return DetectionRecord(step, None, None, "none")


def bsm_station(
    photon_a: Photon | None,
    photon_b: Photon | None,
    p_bsm: float,
    rng: RngStream,
):
    """Joint measurement of two photons arriving in the same timestep.

    Returns a Bell label on success, else None.  Succeeds only when both
    photons are present with equal emission timestep indices and the
    p_bsm draw passes.
    """
    if photon_a is None or photon_b is None:
        return None
    if photon_a.emit_step != photon_b.emit_step:
        return None
    if not rng.bernoulli(p_bsm):
        return None
    return traj.bsm_outcome(photon_a.qubit, photon_b.qubit, rng)
