"""Multipartite protocols: state sharing, verification, anonymous pairing.

Sharing is throughput-style and runs on the batch kernel; verification
and anonymous pairing are round-driven on the dense backend, sequenced
through the event scheduler at the expected delivery spacing.
"""

from dataclasses import dataclass, field

import numpy as np

from .. import _kernels, metrics
from ..engine import NS_PER_S, RngStream, Scheduler, attempt_count, stream_base
from ..errors import BadBudgetError, TopologyError, ValidationError
from ..hardware import ghz_success_probability
from ..netconfig import Role, Topology
from ..qstate import Basis, Gate
from ..qstate.dense import DenseState, nearest_bell_fidelity
from ..records import GhzRoundStream, ProtocolStats, RunResult


def _check_parties(topology: Topology, qlients: list[str]) -> list[str]:
    if not 3 <= len(qlients) <= 5:
        raise ValidationError(f"multiparty protocols take 3..5 parties, got {len(qlients)}")
    names = []
    for name in qlients:
        node = topology.node(name)
        if node.role == Role.QONNECTOR:
            raise TopologyError("the qonnector is the source, not a party")
        names.append(node.name)
    if len(set(names)) != len(names):
        raise ValidationError("parties must be distinct")
    return names


def run_ghz_share(
    topology: Topology,
    qlients: list[str],
    duration_s: float,
    *,
    seed: int = 0,
) -> tuple[ProtocolStats, GhzRoundStream]:
    """Share multipartite states; a round is delivered when every party
    clicks in the same timestep, and errors are rounds where outcomes are
    not all equal (fixed Z readout)."""
    parties = _check_parties(topology, qlients)
    hub = topology.qonnector()
    n = len(parties)
    src = hub.hardware.source
    p_ghz = ghz_success_probability(n, src)
    surv, deph, p_det, p_xtalk, p_dark, det_streams = [], [], [], [], [], []
    for name in parties:
        fiber = topology.link_for(name).fiber
        det = topology.node(name).hardware.detector
        surv.append(fiber.p_coupling * metrics.Fiber(fiber.length_km, fiber.eta_fiber).p)
        deph.append(fiber.p_dephase)
        p_det.append(det.p_det)
        p_xtalk.append(det.p_crosstalk)
        p_dark.append(det.p_dark)
        det_streams.append(stream_base(seed, topology.stream_id(name)))

    n_steps = attempt_count(src.f_GHZ, duration_s)
    n_emitted, delivered_steps, outcomes, _ = _kernels.ghz_run(
        stream_base(seed, topology.stream_id(hub.name)),
        det_streams,
        n_steps,
        p_ghz,
        surv,
        deph,
        hub.hardware.p_depolar,
        p_det,
        p_xtalk,
        p_dark,
    )
    rounds = GhzRoundStream(tuple(parties), delivered_steps, outcomes)
    stats = ProtocolStats()
    stats.add_run(
        RunResult(
            sifted_bits=len(rounds),
            channel_uses=n_emitted,
            flipped_bits=int(rounds.error_mask().sum()),
            simulated_seconds=duration_s,
            seed=seed,
        )
    )
    return stats, rounds


@dataclass
class VerificationStats:
    rounds: int
    accepted: int
    simulated_seconds: float
    per_round: list[tuple[tuple[int, ...], tuple[int, ...], bool]] = field(default_factory=list)

    @property
    def accept_fraction(self) -> float:
        return self.accepted / self.rounds if self.rounds else 0.0


def even_parity_inputs(n: int):
    """All input vectors with an even number of ones."""
    for mask in range(2**n):
        bits = tuple((mask >> i) & 1 for i in range(n))
        if sum(bits) % 2 == 0:
            yield bits


def _verified_dense_state(n, x, p_deph, depol_w=0.0, inject_z_on=None) -> DenseState:
    state = DenseState.ghz(n)
    for q in range(n):
        state.apply_dephase(q, p_deph[q])
        if depol_w:
            state.apply_depolarize(q, 1.0 - depol_w)
    if inject_z_on is not None:
        state.apply_gate(inject_z_on, Gate.Z)
    for q in range(n):
        state.apply_gate(q, Gate.SX if x[q] else Gate.H)
    return state


def verification_accept_probability(
    n: int,
    x: tuple[int, ...],
    p_deph=None,
    depol_w: float = 0.0,
    inject_z_on: int | None = None,
) -> float:
    """Exact probability that the readout parity satisfies the verifier
    condition sum(y) = sum(x)/2 (mod 2)."""
    if sum(x) % 2 != 0:
        raise ValidationError("verification inputs must have even parity")
    p_deph = p_deph if p_deph is not None else [0.0] * n
    state = _verified_dense_state(n, x, p_deph, depol_w, inject_z_on)
    dist = state.outcome_distribution({q: Basis.Z for q in range(n)})
    target = (sum(x) // 2) % 2
    return sum(p for outcome, p in dist.items() if sum(outcome) % 2 == target)


def run_ghz_verification(
    topology: Topology,
    qlients: list[str],
    verifier: str,
    rounds: int,
    *,
    seed: int = 0,
    keep_records: bool = False,
) -> VerificationStats:
    """Round-driven state verification: the verifier hands out even-parity
    inputs, parties rotate (H for 0, sqrt(X) for 1) and read out in Z, and
    the verifier checks the outcome parity."""
    parties = _check_parties(topology, qlients)
    verifier_name = topology.node(verifier).name
    if verifier_name not in parties:
        raise ValidationError("the verifier must be one of the parties")
    n = len(parties)
    hub = topology.qonnector()
    p_deph = [topology.link_for(name).fiber.p_dephase for name in parties]
    depol_w = hub.hardware.p_depolar

    verifier_rng = RngStream(seed, topology.stream_id(verifier_name))
    party_rngs = [RngStream(seed + 1, topology.stream_id(name)) for name in parties]

    # Rounds are paced at the expected delivery spacing of the sharing chain.
    rate = metrics.expected_ghz_rate(topology, parties)
    interval_ns = max(int(NS_PER_S / rate) if rate > 0 else 1, 1)

    stats = VerificationStats(rounds=0, accepted=0, simulated_seconds=0.0)

    def one_round(_scheduler):
        x = [verifier_rng.bit() for _ in range(n - 1)]
        x.append(sum(x) % 2)  # close to even parity
        state = _verified_dense_state(n, x, p_deph, depol_w)
        y = [state.measure(q, Basis.Z, party_rngs[q]) for q in range(n)]
        accepted = sum(y) % 2 == (sum(x) // 2) % 2
        stats.rounds += 1
        stats.accepted += int(accepted)
        if keep_records:
            stats.per_round.append((tuple(x), tuple(y), accepted))

    scheduler = Scheduler()
    for k in range(rounds):
        scheduler.schedule(k * interval_ns, one_round)
    scheduler.run_until(rounds * interval_ns)
    stats.simulated_seconds = rounds * interval_ns / NS_PER_S
    return stats


@dataclass(frozen=True)
class BudgetEstimate:
    usage_probability: float
    seconds_per_verified_state: float


def estimate_verification_budget(
    n: int, epsilon: float, delta: float, delivered_rate: float
) -> BudgetEstimate:
    """Verification overhead of consuming 4*n*delta/epsilon^2 shared states
    per state actually used.

    The usage probability is the reciprocal of that overhead; the time per
    verified state divides the overhead by the delivery rate.
    """
    if n < 1 or epsilon <= 0 or delta <= 0 or delivered_rate <= 0:
        raise ValidationError("n, epsilon, delta and delivered_rate must be positive")
    overhead = 4.0 * n * delta / epsilon**2
    usage = 1.0 / overhead
    if usage > 1.0:
        raise BadBudgetError(f"usage probability {usage} exceeds 1")
    return BudgetEstimate(usage, overhead / delivered_rate)


@dataclass
class AnonEntanglementStats:
    rounds: int
    fidelities: np.ndarray
    transcripts: list[tuple[tuple[int, ...], int, int]]

    @property
    def mean_fidelity(self) -> float:
        return float(self.fidelities.mean()) if len(self.fidelities) else 0.0

    @property
    def min_fidelity(self) -> float:
        return float(self.fidelities.min()) if len(self.fidelities) else 0.0


def run_anonymous_entanglement(
    topology: Topology,
    qlients: list[str],
    sender: str,
    receiver: str,
    rounds: int,
    *,
    seed: int = 0,
) -> AnonEntanglementStats:
    """Anonymous pairing over shared multipartite states: every other party
    rotates to X and broadcasts its outcome; the sender applies Z on a random
    bit, the receiver conditions its Z on the broadcast parity.  Returns the
    fidelity of the leftover pair with the nearest Bell state per round."""
    parties = _check_parties(topology, qlients)
    sender_name = topology.node(sender).name
    receiver_name = topology.node(receiver).name
    if sender_name == receiver_name:
        raise ValidationError("sender and receiver must differ")
    if sender_name not in parties or receiver_name not in parties:
        raise ValidationError("sender and receiver must be among the parties")
    n = len(parties)
    s_idx, r_idx = parties.index(sender_name), parties.index(receiver_name)
    others = [q for q in range(n) if q not in (s_idx, r_idx)]
    p_deph = [topology.link_for(name).fiber.p_dephase for name in parties]
    depol_w = topology.qonnector().hardware.p_depolar

    rngs = [RngStream(seed, topology.stream_id(name)) for name in parties]

    fidelities = np.empty(rounds)
    transcripts = []
    rate = metrics.expected_ghz_rate(topology, parties)
    interval_ns = max(int(NS_PER_S / rate) if rate > 0 else 1, 1)
    scheduler = Scheduler()
    state_of_round = {}

    def one_round(scheduler, k=None):
        state = DenseState.ghz(n)
        for q in range(n):
            state.apply_dephase(q, p_deph[q])
            if depol_w:
                state.apply_depolarize(q, 1.0 - depol_w)
        m = []
        for q in others:
            state.apply_gate(q, Gate.H)
            m.append(state.measure(q, Basis.Z, rngs[q]))
        b = rngs[s_idx].bit()
        if b:
            state.apply_gate(s_idx, Gate.Z)
        b_prime = rngs[r_idx].bit()
        if (b + sum(m)) % 2 == 1:
            state.apply_gate(r_idx, Gate.Z)
        pair = state.marginal([s_idx, r_idx])
        fidelity, _ = nearest_bell_fidelity(pair)
        state_of_round[k] = (fidelity, (tuple(m), b, b_prime))

    for k in range(rounds):
        scheduler.schedule(k * interval_ns, lambda s, k=k: one_round(s, k))
    scheduler.run_until(rounds * interval_ns if rounds else 0)

    for k in range(rounds):
        fidelity, transcript = state_of_round[k]
        fidelities[k] = fidelity
        transcripts.append(transcript)
    return AnonEntanglementStats(rounds, fidelities, transcripts)
