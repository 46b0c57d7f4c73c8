"""Key distribution and qubit transmission protocols over a topology.

The per-timestep cascade (attempt, fiber, optional switch, gated
detection) runs in the batch kernels, which execute the same draw
sequence the event schedule would (one attempt per 1/f timestep, arrival
one travel time later); sifting joins the resulting record streams on
timestep index and basis.
"""

from .. import _kernels, metrics
from ..engine import attempt_count, stream_base
from ..errors import TopologyError, ValidationError
from ..metrics import CorrelationRule
from ..netconfig import Role, Topology
from ..records import ProtocolStats, RecordStream, RunResult


def _leaf(topology: Topology, name: str):
    node = topology.node(name)
    if node.role == Role.QONNECTOR:
        raise TopologyError(f"{node.name} is the qonnector, expected an end node")
    return node


def _stream(topology: Topology, seed: int, name: str) -> int:
    return stream_base(seed, topology.stream_id(name))


def _single_run_stats(sifted, flips, channel_uses, duration_s, seed, has_qber=True):
    stats = ProtocolStats(has_qber=has_qber)
    stats.add_run(RunResult(sifted, channel_uses, flips, duration_s, seed))
    return stats


def run_bb84(
    topology: Topology,
    sender: str,
    receiver: str,
    duration_s: float,
    *,
    seed: int = 0,
    keep_records: bool = False,
) -> ProtocolStats:
    """Prepare-and-measure key exchange across one fiber; either direction
    between the qonnector and an end node."""
    snd, rcv = topology.node(sender), topology.node(receiver)
    if snd.name == rcv.name:
        raise TopologyError("sender and receiver must differ")
    roles = {snd.role == Role.QONNECTOR, rcv.role == Role.QONNECTOR}
    if roles != {True, False}:
        raise TopologyError("exactly one endpoint must be the qonnector")
    leaf = rcv if snd.role == Role.QONNECTOR else snd
    fiber = topology.link_for(leaf.name).fiber

    src = snd.hardware.source
    det = rcv.hardware.detector
    n_steps = attempt_count(src.f_qubit, duration_s)
    out = _kernels.bb84_run(
        _stream(topology, seed, snd.name),
        0,
        _stream(topology, seed, rcv.name),
        n_steps,
        src.p_qubit,
        src.p_flip,
        fiber.p_coupling * metrics.Fiber(fiber.length_km, fiber.eta_fiber).p,
        fiber.p_dephase,
        False,
        1.0,
        1.0,
        0.0,
        det.p_det,
        det.p_crosstalk,
        det.p_dark,
        True,
    )
    return _finish_sifted(out, duration_s, seed, keep_records)


def run_bb84_transmitted(
    topology: Topology,
    sender: str,
    receiver: str,
    duration_s: float,
    *,
    seed: int = 0,
    keep_records: bool = False,
) -> ProtocolStats:
    """End node to end node through the routing switch at the qonnector."""
    snd, rcv = _leaf(topology, sender), _leaf(topology, receiver)
    if snd.name == rcv.name:
        raise TopologyError("sender and receiver must differ")
    return _run_two_hop(topology, snd, rcv, duration_s, seed, keep_records, sift=True)


def run_delegated_transmission(
    topology: Topology,
    qlient: str,
    qomputer: str,
    duration_s: float,
    *,
    seed: int = 0,
    keep_records: bool = False,
) -> ProtocolStats:
    """Qubit transmission to the compute node: same chain as the transmitted
    configuration but counting arrivals, no basis sifting; payloads are
    carried opaquely."""
    snd = _leaf(topology, qlient)
    rcv = topology.node(qomputer)
    if rcv.role != Role.QOMPUTER:
        raise TopologyError(f"{rcv.name} is not a compute node")
    if snd.name == rcv.name:
        raise TopologyError("sender and receiver must differ")
    return _run_two_hop(topology, snd, rcv, duration_s, seed, keep_records, sift=False)


def _run_two_hop(topology, snd, rcv, duration_s, seed, keep_records, sift):
    hub = topology.qonnector()
    fiber1 = topology.link_for(snd.name).fiber
    fiber2 = topology.link_for(rcv.name).fiber
    src = snd.hardware.source
    det = rcv.hardware.detector
    n_steps = attempt_count(src.f_qubit, duration_s)
    out = _kernels.bb84_run(
        _stream(topology, seed, snd.name),
        _stream(topology, seed, hub.name),
        _stream(topology, seed, rcv.name),
        n_steps,
        src.p_qubit,
        src.p_flip,
        fiber1.p_coupling * metrics.Fiber(fiber1.length_km, fiber1.eta_fiber).p,
        fiber1.p_dephase,
        True,
        hub.hardware.p_transmit,
        fiber2.p_coupling * metrics.Fiber(fiber2.length_km, fiber2.eta_fiber).p,
        fiber2.p_dephase,
        det.p_det,
        det.p_crosstalk,
        det.p_dark,
        sift,
    )
    if sift:
        return _finish_sifted(out, duration_s, seed, keep_records)
    sent_steps, _, _, rec_steps, _, _, rec_kinds = out
    arrivals = int((rec_kinds == _kernels.KIND_SIGNAL).sum())
    stats = _single_run_stats(arrivals, 0, len(sent_steps), duration_s, seed, has_qber=False)
    if keep_records:
        stats.records = _streams_from(out)
    return stats


def _streams_from(out):
    sent_steps, sent_bits, sent_bases, rec_steps, rec_bases, rec_bits, rec_kinds = out
    sender_stream = RecordStream.from_arrays(sent_steps, sent_bases, sent_bits)
    receiver_stream = RecordStream.from_arrays(rec_steps, rec_bases, rec_bits, rec_kinds)
    return sender_stream, receiver_stream


def _finish_sifted(out, duration_s, seed, keep_records):
    sender_stream, receiver_stream = _streams_from(out)
    key = metrics.sift(sender_stream, receiver_stream)
    flips = metrics.count_flips(key, CorrelationRule.EQUAL)
    stats = _single_run_stats(len(key), flips, len(sender_stream), duration_s, seed)
    if keep_records:
        stats.records = (sender_stream, receiver_stream, key)
    return stats


def run_bbm92(
    topology: Topology,
    qlient_a: str,
    qlient_b: str,
    duration_s: float,
    *,
    seed: int = 0,
    keep_records: bool = False,
) -> ProtocolStats:
    """Pair distribution from the qonnector; both end nodes measure in
    random bases, sifting keeps equal timestep and basis, and flips count
    violations of the singlet anticorrelation."""
    a, b = _leaf(topology, qlient_a), _leaf(topology, qlient_b)
    if a.name == b.name:
        raise TopologyError("end nodes must differ")
    hub = topology.qonnector()
    fiber_a = topology.link_for(a.name).fiber
    fiber_b = topology.link_for(b.name).fiber
    src = hub.hardware.source
    n_steps = attempt_count(src.f_EPR, duration_s)
    n_emitted, rec_a, rec_b = _kernels.bbm92_run(
        _stream(topology, seed, hub.name),
        _stream(topology, seed, a.name),
        _stream(topology, seed, b.name),
        n_steps,
        src.p_EPR,
        fiber_a.p_coupling * metrics.Fiber(fiber_a.length_km, fiber_a.eta_fiber).p,
        fiber_a.p_dephase,
        fiber_b.p_coupling * metrics.Fiber(fiber_b.length_km, fiber_b.eta_fiber).p,
        fiber_b.p_dephase,
        a.hardware.detector.p_det,
        a.hardware.detector.p_crosstalk,
        a.hardware.detector.p_dark,
        b.hardware.detector.p_det,
        b.hardware.detector.p_crosstalk,
        b.hardware.detector.p_dark,
    )
    stream_a = RecordStream.from_arrays(*rec_a)
    stream_b = RecordStream.from_arrays(*rec_b)
    key = metrics.sift(stream_a, stream_b)
    flips = metrics.count_flips(key, CorrelationRule.ANTICORRELATED_PSI_MINUS)
    stats = _single_run_stats(len(key), flips, n_emitted, duration_s, seed)
    if keep_records:
        stats.records = (stream_a, stream_b, key)
    return stats


def run_mdi_qkd(
    topology: Topology,
    qlient_a: str,
    qlient_b: str,
    duration_s: float,
    *,
    seed: int = 0,
) -> ProtocolStats:
    """Both end nodes send toward the joint measurement at the qonnector; a
    round succeeds when both photons from the same timestep arrive and the
    joint measurement draw passes.  Channel uses count timesteps where both
    sources emitted."""
    a, b = _leaf(topology, qlient_a), _leaf(topology, qlient_b)
    if a.name == b.name:
        raise TopologyError("end nodes must differ")
    hub = topology.qonnector()
    src_a, src_b = a.hardware.source, b.hardware.source
    if src_a.f_qubit != src_b.f_qubit:
        raise ValidationError("both senders must share the attempt frequency")
    fiber_a = topology.link_for(a.name).fiber
    fiber_b = topology.link_for(b.name).fiber
    n_steps = attempt_count(src_a.f_qubit, duration_s)
    _, _, n_joint, success_steps = _kernels.mdi_run(
        _stream(topology, seed, a.name),
        _stream(topology, seed, b.name),
        _stream(topology, seed, hub.name),
        n_steps,
        src_a.p_qubit,
        fiber_a.p_coupling * metrics.Fiber(fiber_a.length_km, fiber_a.eta_fiber).p,
        src_b.p_qubit,
        fiber_b.p_coupling * metrics.Fiber(fiber_b.length_km, fiber_b.eta_fiber).p,
        hub.hardware.p_BSM,
    )
    stats = ProtocolStats(has_qber=False)
    stats.add_run(RunResult(len(success_steps), n_joint, 0, duration_s, seed))
    return stats
