import math

import numpy as np
import pytest

from starqnet import metrics
from starqnet.errors import (
    BadBudgetError,
    TopologyError,
    ValidationError,
)
from starqnet.hardware import FiberParams
from starqnet.netconfig import LinkSpec, NodeSpec, Role, Topology, paris_preset
from starqnet.protocols import (
    estimate_verification_budget,
    repeat_runs,
    run_anonymous_entanglement,
    run_bb84,
    run_bb84_transmitted,
    run_bbm92,
    run_delegated_transmission,
    run_ghz_share,
    run_ghz_verification,
    run_mdi_qkd,
    verification_accept_probability,
)


def lossless_topology(n_leaves=4, qomputer_last=True):
    """Star with every loss/noise knob at its harmless extreme."""
    nodes = [NodeSpec("Hub", Role.QONNECTOR)]
    links = []
    names = [f"N{i}" for i in range(n_leaves)]
    for i, name in enumerate(names):
        role = Role.QOMPUTER if (qomputer_last and i == n_leaves - 1) else Role.QLIENT
        nodes.append(NodeSpec(name, role))
        links.append(
            LinkSpec("Hub", name, FiberParams(length_km=0.0, p_coupling=1.0, p_dephase=0.0))
        )
    topology = Topology(nodes, links)
    for node in topology.nodes.values():
        node.hardware.detector.p_det = 1.0
        node.hardware.detector.p_crosstalk = 0.0
        node.hardware.detector.R_dark = 0.0
        node.hardware.source.p_flip = 0.0
        node.hardware.p_transmit = 1.0
    return topology


PARIS = paris_preset()


class TestBB84:
    def test_lossless_throughput_is_sifting_only(self):
        topology = lossless_topology()
        topology.node("N0").hardware.source.p_qubit = 1.0
        stats = run_bb84(topology, "Hub", "N0", 5e-5, seed=3)
        n = stats.channel_uses
        assert abs(stats.throughput - 0.5) < 3 * math.sqrt(0.25 / n)
        assert stats.qber == 0.0

    def test_against_oracle_3_sigma(self):
        stats = repeat_runs(
            run_bb84, runs=10, base_seed=5, topology=PARIS,
            sender="Qonnector", receiver="Bob", duration_s=5e-3,
        )
        p = metrics.expected_throughput(metrics.chain_bb84(PARIS, "Qonnector", "Bob"))
        n = stats.channel_uses
        assert abs(stats.throughput - p) < 3 * math.sqrt(p * (1 - p) / n)

    def test_reversed_direction_same_expectation(self):
        down = repeat_runs(
            run_bb84, runs=10, base_seed=5, topology=PARIS,
            sender="Qonnector", receiver="Bob", duration_s=2e-3,
        )
        up = repeat_runs(
            run_bb84, runs=10, base_seed=105, topology=PARIS,
            sender="Bob", receiver="Qonnector", duration_s=2e-3,
        )
        assert abs(down.throughput - up.throughput) < 0.02

    def test_adjacency_required(self):
        with pytest.raises(TopologyError):
            run_bb84(PARIS, "Alice", "Bob", 1e-5)
        with pytest.raises(TopologyError):
            run_bb84(PARIS, "Alice", "Alice", 1e-5)

    def test_sifting_alignment(self):
        stats = run_bb84(PARIS, "Qonnector", "Alice", 1e-4, seed=2, keep_records=True)
        sender, receiver, key = stats.records
        assert len(key.sender_bits) == len(key.receiver_bits) == stats.sifted_bits

    def test_determinism(self):
        a = run_bb84(PARIS, "Qonnector", "Dina", 1e-3, seed=11)
        b = run_bb84(PARIS, "Qonnector", "Dina", 1e-3, seed=11)
        assert (a.sifted_bits, a.channel_uses, a.flipped_bits) == (
            b.sifted_bits, b.channel_uses, b.flipped_bits
        )


class TestTransmitted:
    def test_both_endpoints_must_be_leaves(self):
        with pytest.raises(TopologyError):
            run_bb84_transmitted(PARIS, "Qonnector", "Bob", 1e-5)

    def test_zero_switch_probability(self):
        topology = paris_preset()
        topology.node("Qonnector").hardware.p_transmit = 0.0
        stats = run_bb84_transmitted(topology, "Alice", "Bob", 1e-4, seed=1)
        assert stats.sifted_bits == 0

    def test_against_double_coupling_oracle(self):
        stats = repeat_runs(
            run_bb84_transmitted, runs=10, base_seed=9, topology=PARIS,
            sender="Alice", receiver="Bob", duration_s=5e-3,
        )
        p = metrics.expected_throughput(metrics.chain_transmitted(PARIS, "Alice", "Bob"))
        assert abs(stats.throughput - p) < 3 * math.sqrt(p * (1 - p) / stats.channel_uses)

    def test_two_hop_qber_doubles(self):
        stats = repeat_runs(
            run_bb84_transmitted, runs=20, base_seed=3, topology=PARIS,
            sender="Alice", receiver="Bob", duration_s=5e-3,
        )
        # two dephasing traversals: net X-error 2p(1-p), halved by basis mix
        expect = 2 * 0.02 * 0.98 / 2
        assert abs(stats.qber - expect) < 3 * math.sqrt(expect / stats.sifted_bits)


class TestBBM92:
    def test_noiseless_qber_zero(self):
        topology = lossless_topology()
        topology.node("Hub").hardware.source.p_EPR = 1.0
        stats = run_bbm92(topology, "N0", "N1", 5e-5, seed=1)
        assert stats.qber == 0.0
        assert stats.sifted_bits > 0

    def test_against_oracle(self):
        stats = repeat_runs(
            run_bbm92, runs=10, base_seed=21, topology=PARIS,
            qlient_a="Alice", qlient_b="Erika", duration_s=5e-3,
        )
        p = metrics.expected_bbm92_throughput(PARIS, "Alice", "Erika")
        assert abs(stats.throughput - p) < 3 * math.sqrt(p * (1 - p) / stats.channel_uses)

    def test_qber_from_arm_dephasing(self):
        stats = repeat_runs(
            run_bbm92, runs=20, base_seed=2, topology=PARIS,
            qlient_a="Alice", qlient_b="Bob", duration_s=5e-3,
        )
        expect = 2 * 0.02 * 0.98 / 2
        assert abs(stats.qber - expect) < 3 * math.sqrt(expect / stats.sifted_bits)

    def test_z_sifted_subset_never_dephased(self):
        stats = run_bbm92(PARIS, "Alice", "Bob", 2e-3, seed=8, keep_records=True)
        _, _, key = stats.records
        z_rows = key.bases == 0
        # anticorrelation can break only through crosstalk/darks (~1e-5)
        violations = int((key.sender_bits[z_rows] == key.receiver_bits[z_rows]).sum())
        assert violations <= 2


class TestMdi:
    def test_bsm_zero_probability(self):
        topology = paris_preset()
        topology.node("Qonnector").hardware.p_BSM = 0.0
        stats = run_mdi_qkd(topology, "Alice", "Bob", 1e-3, seed=1)
        assert stats.sifted_bits == 0

    def test_rate_against_oracle(self):
        stats = repeat_runs(
            run_mdi_qkd, runs=20, base_seed=31, topology=PARIS,
            qlient_a="Alice", qlient_b="Bob", duration_s=10e-3,
        )
        expect = metrics.expected_mdi_rate(PARIS, "Alice", "Bob") * stats.simulated_seconds
        assert abs(stats.sifted_bits - expect) < 3 * math.sqrt(expect)

    def test_no_qber_column(self):
        stats = run_mdi_qkd(PARIS, "Alice", "Bob", 1e-4, seed=1)
        assert stats.qber is None


class TestDelegated:
    def test_receiver_must_be_compute_node(self):
        with pytest.raises(TopologyError):
            run_delegated_transmission(PARIS, "Alice", "Bob", 1e-5)

    def test_unit_chain_rate_equals_source(self):
        topology = lossless_topology()
        topology.node("N0").hardware.source.p_qubit = 1.0
        stats = run_delegated_transmission(topology, "N0", "N3", 5e-5, seed=1)
        assert stats.sifted_bits == stats.channel_uses  # every photon arrives

    def test_rate_against_oracle(self):
        stats = repeat_runs(
            run_delegated_transmission, runs=10, base_seed=41, topology=PARIS,
            qlient="Alice", qomputer="Erika", duration_s=5e-3,
        )
        chain = metrics.chain_transmitted(PARIS, "Alice", "Erika", basis_sift=False)
        p = metrics.expected_throughput(chain)
        assert abs(stats.throughput - p) < 3 * math.sqrt(p * (1 - p) / stats.channel_uses)


class TestGhzShare:
    def test_arity(self):
        with pytest.raises(ValidationError):
            run_ghz_share(PARIS, ["Alice", "Bob"], 1e-4)
        with pytest.raises(ValidationError):
            run_ghz_share(PARIS, ["Alice", "Alice", "Bob"], 1e-4)

    def test_dead_party_blocks_delivery(self):
        topology = paris_preset()
        topology.node("Bob").hardware.detector.p_det = 0.0
        stats, rounds = run_ghz_share(topology, ["Alice", "Bob", "Charlie"], 1e-3, seed=1)
        assert stats.sifted_bits == 0 and len(rounds) == 0

    def test_rate_against_oracle(self):
        parties = ["Alice", "Bob", "Charlie", "Dina"]
        stats = repeat_runs(
            run_ghz_share, runs=40, base_seed=51, topology=PARIS,
            qlients=parties, duration_s=5e-3,
        )
        expect = metrics.expected_ghz_rate(PARIS, parties) * stats.simulated_seconds
        assert abs(stats.sifted_bits - expect) < 3 * math.sqrt(expect)

    def test_depolar_knob_raises_error_rate(self):
        topology = paris_preset()
        topology.node("Qonnector").hardware.p_depolar = 0.01
        stats = repeat_runs(
            run_ghz_share, runs=40, base_seed=61, topology=topology,
            qlients=["Alice", "Bob", "Charlie", "Dina"], duration_s=5e-3,
        )
        expect = 1 - (1 - 0.01 / 2) ** 4  # ~1.99%
        assert abs(stats.qber - expect) < 3 * math.sqrt(expect / stats.sifted_bits)

    def test_round_stream_matches_stats(self):
        stats, rounds = run_ghz_share(PARIS, ["Alice", "Bob", "Charlie"], 2e-3, seed=7)
        assert len(rounds) == stats.sifted_bits
        assert rounds.outcomes.shape == (len(rounds), 3)
        assert stats.flipped_bits == int(rounds.error_mask().sum())


class TestVerification:
    def test_perfect_state_accepts(self):
        topology = lossless_topology()
        stats = run_ghz_verification(topology, ["N0", "N1", "N2"], "N0", rounds=50, seed=1)
        assert stats.accept_fraction == 1.0

    def test_exact_probability_perfect(self):
        for n in (3, 4, 5):
            assert verification_accept_probability(n, (0,) * n) == pytest.approx(1.0, abs=1e-12)

    def test_exact_probability_with_z_error(self):
        assert verification_accept_probability(4, (0, 0, 1, 1), inject_z_on=2) == pytest.approx(
            0.0, abs=1e-12
        )

    def test_odd_parity_inputs_rejected(self):
        with pytest.raises(ValidationError):
            verification_accept_probability(3, (1, 0, 0))

    def test_verifier_must_participate(self):
        with pytest.raises(ValidationError):
            run_ghz_verification(PARIS, ["Alice", "Bob", "Charlie"], "Dina", rounds=5)

    def test_noisy_accept_fraction_below_one(self):
        stats = run_ghz_verification(
            PARIS, ["Alice", "Bob", "Charlie", "Dina"], "Alice", rounds=400, seed=5
        )
        assert 0.8 < stats.accept_fraction < 1.0


class TestBudget:
    def test_linear_in_n(self):
        base = estimate_verification_budget(4, 0.1, 100, 1000.0)
        doubled = estimate_verification_budget(8, 0.1, 100, 1000.0)
        assert doubled.seconds_per_verified_state == pytest.approx(
            2 * base.seconds_per_verified_state
        )

    def test_delta_scaling(self):
        base = estimate_verification_budget(4, 0.1, 100, 1000.0)
        double_delta = estimate_verification_budget(4, 0.1, 200, 1000.0)
        assert double_delta.seconds_per_verified_state == pytest.approx(
            2 * base.seconds_per_verified_state
        )
        assert double_delta.usage_probability == pytest.approx(base.usage_probability / 2)

    def test_bad_budget(self):
        with pytest.raises(BadBudgetError):
            estimate_verification_budget(1, 10.0, 0.01, 1000.0)

    def test_overhead_anchor_order_of_magnitude(self):
        # 4 parties, 99% confidence of 90%-fidelity states, measured
        # delivery ~4.5-5k states/s: tens of seconds per verified state.
        budget = estimate_verification_budget(4, 0.1, 100, 4_495.0)
        assert 5.0 < budget.seconds_per_verified_state < 500.0


class TestAnonymousEntanglement:
    def test_sender_receiver_distinct(self):
        with pytest.raises(ValidationError):
            run_anonymous_entanglement(PARIS, ["Alice", "Bob", "Charlie", "Dina"],
                                       "Alice", "Alice", rounds=2)

    def test_ideal_hardware_bell_fidelity_one(self):
        topology = lossless_topology()
        parties = ["N0", "N1", "N2", "N3"]
        stats = run_anonymous_entanglement(topology, parties, "N0", "N2", rounds=20, seed=3)
        assert stats.min_fidelity > 1 - 1e-9

    def test_dephasing_lowers_fidelity_monotonically(self):
        means = []
        for p in (0.0, 0.02, 0.1):
            topology = lossless_topology()
            for link in topology.links:
                link.fiber.p_dephase = p
            stats = run_anonymous_entanglement(
                topology, ["N0", "N1", "N2", "N3"], "N0", "N1", rounds=40, seed=9
            )
            means.append(stats.mean_fidelity)
        assert means[0] > means[1] > means[2]
        assert 0.9 < means[1] < 1.0

    def test_transcript_independent_of_identities(self):
        # Transcript values (broadcast bit count, b, b') must not distinguish
        # sender/receiver pairs under ideal hardware: chi-square homogeneity
        # over ~1e4 rounds split across three pairs.
        from collections import Counter

        from scipy.stats import chi2_contingency

        topology = lossless_topology()
        parties = ["N0", "N1", "N2", "N3"]
        pairs = [("N0", "N1"), ("N2", "N0"), ("N3", "N1")]
        rows = []
        cells = [(ones, b, bp) for ones in (0, 1, 2) for b in (0, 1) for bp in (0, 1)]
        for i, (snd, rcv) in enumerate(pairs):
            stats = run_anonymous_entanglement(
                topology, parties, snd, rcv, rounds=3400, seed=100 + i
            )
            counts = Counter((sum(m), b, bp) for m, b, bp in stats.transcripts)
            rows.append([counts.get(cell, 0) for cell in cells])
        _, p_value, _, _ = chi2_contingency(np.array(rows))
        assert p_value > 0.001


class TestRepeatRuns:
    def test_merge_is_order_independent(self):
        kwargs = dict(topology=PARIS, sender="Qonnector", receiver="Alice", duration_s=1e-4)
        serial = repeat_runs(run_bb84, runs=4, base_seed=7, workers=1, **kwargs)
        parallel = repeat_runs(run_bb84, runs=4, base_seed=7, workers=2, **kwargs)
        assert serial.sifted_bits == parallel.sifted_bits
        assert [r.seed for r in serial.per_run] == [r.seed for r in parallel.per_run]
        assert serial.rate_ci_halfwidth() == parallel.rate_ci_halfwidth()
