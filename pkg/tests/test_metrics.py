import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from starqnet.errors import (
    EmptyKeyError,
    MalformedChainError,
    NoDeliveredRoundsError,
    ValidationError,
)
from starqnet.metrics import (
    BsmStation,
    CorrelationRule,
    Coupling,
    Detector,
    Fiber,
    OracleChain,
    SiftedKey,
    Source,
    Switch,
    accumulate_curve,
    chain_bb84,
    chain_transmitted,
    expected_bbm92_throughput,
    expected_coincidence_rate,
    expected_ghz_rate,
    expected_mdi_rate,
    expected_rate,
    expected_throughput,
    ghz_error_rate,
    qber,
    sift,
)
from starqnet.netconfig import paris_preset
from starqnet.records import GhzRoundStream, RecordStream


def stream(steps, bases, bits, kinds=None):
    return RecordStream.from_arrays(steps, bases, bits, kinds)


class TestSift:
    def test_disjoint_timesteps_empty(self):
        key = sift(stream([1, 2], [0, 0], [0, 1]), stream([3, 4], [0, 0], [0, 1]))
        assert len(key) == 0

    def test_identical_bases_full_join(self):
        a = stream([0, 1, 2], [1, 1, 1], [0, 1, 0])
        b = stream([0, 1, 2], [1, 1, 1], [0, 1, 1])
        key = sift(a, b)
        assert len(key) == 3
        assert np.array_equal(key.sender_bits, [0, 1, 0])
        assert np.array_equal(key.receiver_bits, [0, 1, 1])

    def test_basis_mismatch_dropped(self):
        key = sift(stream([0, 1], [0, 1], [0, 0]), stream([0, 1], [1, 1], [1, 1]))
        assert len(key) == 1 and key.steps[0] == 1

    def test_double_discard_rows_dropped(self):
        a = stream([0, 1], [0, 0], [0, 0])
        b = stream([0, 1], [0, 0], [0, 0], kinds=[3, 1])  # first row is a double
        assert len(sift(a, b)) == 1

    def test_random_bases_expected_half(self):
        n = 100_000
        rng = np.random.default_rng(5)
        steps = np.arange(n)
        a = stream(steps, rng.integers(0, 2, n), rng.integers(0, 2, n))
        b = stream(steps, rng.integers(0, 2, n), rng.integers(0, 2, n))
        frac = len(sift(a, b)) / n
        assert abs(frac - 0.5) < 3 * math.sqrt(0.25 / n)

    @given(
        st.lists(st.tuples(st.integers(0, 300), st.integers(0, 1), st.integers(0, 1)), max_size=80),
        st.lists(st.tuples(st.integers(0, 300), st.integers(0, 1), st.integers(0, 1)), max_size=80),
    )
    @settings(max_examples=50, deadline=None)
    def test_sifting_symmetry(self, rows_a, rows_b):
        # one record per timestep per side; sifted halves stay aligned
        rows_a = list({t: (t, b, v) for t, b, v in rows_a}.values())
        rows_b = list({t: (t, b, v) for t, b, v in rows_b}.values())
        rows_a.sort()
        rows_b.sort()
        a = stream([r[0] for r in rows_a], [r[1] for r in rows_a], [r[2] for r in rows_a])
        b = stream([r[0] for r in rows_b], [r[1] for r in rows_b], [r[2] for r in rows_b])
        key = sift(a, b)
        assert len(key.sender_bits) == len(key.receiver_bits) == len(key.steps)
        lookup_a = {r[0]: r for r in rows_a}
        lookup_b = {r[0]: r for r in rows_b}
        for t, basis, sb, rb in zip(key.steps, key.bases, key.sender_bits, key.receiver_bits):
            assert lookup_a[t][1] == lookup_b[t][1] == basis
            assert lookup_a[t][2] == sb and lookup_b[t][2] == rb


class TestQber:
    def test_empty_key(self):
        key = SiftedKey(np.empty(0, np.int64), np.empty(0, np.uint8), np.empty(0, np.uint8), np.empty(0, np.uint8))
        with pytest.raises(EmptyKeyError):
            qber(key)

    def test_equal_rule(self):
        key = SiftedKey(np.arange(4), np.zeros(4, np.uint8),
                        np.array([0, 1, 0, 1], np.uint8), np.array([0, 1, 1, 1], np.uint8))
        assert qber(key, CorrelationRule.EQUAL) == 0.25

    def test_anticorrelated_rule(self):
        key = SiftedKey(np.arange(4), np.zeros(4, np.uint8),
                        np.array([0, 1, 0, 1], np.uint8), np.array([1, 0, 0, 0], np.uint8))
        assert qber(key, CorrelationRule.ANTICORRELATED_PSI_MINUS) == 0.25

    def test_invariant_under_timestep_relabeling(self):
        bits_a = np.array([0, 1, 1, 0], np.uint8)
        bits_b = np.array([0, 0, 1, 1], np.uint8)
        k1 = SiftedKey(np.array([1, 2, 3, 4]), np.zeros(4, np.uint8), bits_a, bits_b)
        k2 = SiftedKey(np.array([10, 400, 7, 2]), np.zeros(4, np.uint8), bits_a, bits_b)
        assert qber(k1) == qber(k2)


class TestOracleChains:
    def chain(self):
        return OracleChain(
            (Source(80e6, 8e-3), Coupling(0.9), Fiber(3.0), Detector(0.95)),
            basis_sift=True,
        )

    def test_reference_throughputs(self):
        topo = paris_preset()
        assert expected_throughput(chain_bb84(topo, "Qonnector", "Bob")) == pytest.approx(0.3775, abs=2e-4)
        assert expected_throughput(chain_bb84(topo, "Qonnector", "Charlie")) == pytest.approx(0.3334, abs=2e-4)
        assert expected_throughput(chain_bb84(topo, "Qonnector", "Erika")) == pytest.approx(0.1183, abs=2e-4)

    def test_unit_probability_chain_is_half(self):
        chain = OracleChain(
            (Source(1e6, 1.0), Coupling(1.0), Fiber(0.0), Detector(1.0)), basis_sift=True
        )
        assert expected_throughput(chain) == 0.5

    def test_reference_rates(self):
        topo = paris_preset()
        assert expected_rate(chain_bb84(topo, "Qonnector", "Alice")) == pytest.approx(273_600, rel=2e-3)
        assert expected_ghz_rate(topo, ["Alice", "Bob", "Charlie", "Dina"]) == pytest.approx(5_030, rel=2e-2)
        assert expected_rate(
            chain_transmitted(topo, "Bob", "Erika")
        ) * 2 == pytest.approx(2 * 0.0846 * 640_000, rel=2e-3)

    def test_zero_frequency_rate(self):
        chain = OracleChain((Source(0.0, 0.5), Coupling(1.0), Detector(1.0)))
        assert expected_rate(chain) == 0.0

    def test_malformed_chains(self):
        with pytest.raises(MalformedChainError):
            expected_throughput(OracleChain((Coupling(0.5), Detector(1.0))))
        with pytest.raises(MalformedChainError):
            expected_throughput(OracleChain((Source(1.0, 1.0), Coupling(0.5))))
        with pytest.raises(MalformedChainError):
            expected_throughput(
                OracleChain((Source(1.0, 1.0), Detector(0.9), Detector(0.9)))
            )

    def test_fiber_split_multiplicative(self):
        for total, cut in [(10.0, 3.0), (31.0, 15.5), (0.002, 0.001)]:
            whole = OracleChain((Source(1.0, 1.0), Fiber(total), Detector(1.0)))
            split = OracleChain(
                (Source(1.0, 1.0), Fiber(cut), Fiber(total - cut), Detector(1.0))
            )
            assert abs(expected_throughput(whole) - expected_throughput(split)) < 1e-12

    def test_mdi_arms_must_match(self):
        a = OracleChain((Source(80e6, 8e-3), Coupling(0.9), BsmStation(0.36)))
        b = OracleChain((Source(80e6, 8e-3), Coupling(0.9), BsmStation(0.5)))
        with pytest.raises(MalformedChainError):
            expected_coincidence_rate(a, b)

    def test_mdi_reference_rate(self):
        topo = paris_preset()
        # f * (p_qubit*s_A) * (p_qubit*s_B) * p_BSM
        s_a = 0.9 * 10 ** (-0.18 * 0.001 / 10)
        s_b = 0.9 * 10 ** (-0.18 * 3 / 10)
        expected = 80e6 * (8e-3 * s_a) * (8e-3 * s_b) * 0.36
        assert expected_mdi_rate(topo, "Alice", "Bob") == pytest.approx(expected, rel=1e-9)

    def test_bbm92_reference(self):
        topo = paris_preset()
        assert expected_bbm92_throughput(topo, "Alice", "Erika") == pytest.approx(0.1011, abs=2e-4)
        assert expected_bbm92_throughput(topo, "Dina", "Charlie") == pytest.approx(0.1352, abs=2e-4)


class TestGhzErrorRate:
    def test_noiseless_zero(self):
        rounds = GhzRoundStream(("a", "b", "c"), np.arange(5), np.zeros((5, 3), np.uint8))
        assert ghz_error_rate(rounds) == 0.0

    def test_no_rounds(self):
        rounds = GhzRoundStream(("a",), np.empty(0, np.int64), np.empty((0, 1), np.uint8))
        with pytest.raises(NoDeliveredRoundsError):
            ghz_error_rate(rounds)

    def test_counts_any_deviation(self):
        outcomes = np.array([[0, 0, 0], [1, 1, 1], [0, 1, 0], [1, 1, 0]], np.uint8)
        rounds = GhzRoundStream(("a", "b", "c"), np.arange(4), outcomes)
        assert ghz_error_rate(rounds) == 0.5


class TestAccumulateCurve:
    def test_empty(self):
        times, bits = accumulate_curve([])
        assert len(times) == 0 and len(bits) == 0

    def test_monotone_output(self):
        times, cum = accumulate_curve([(0.0, 5), (0.1, 3), (0.2, 0), (0.3, 7)])
        assert np.array_equal(cum, [5, 8, 8, 15])
        assert (np.diff(cum) >= 0).all()

    def test_out_of_order_rejected(self):
        with pytest.raises(ValidationError):
            accumulate_curve([(0.2, 1), (0.1, 1)])

    def test_constant_rate_slope(self):
        rate, dt = 1000.0, 0.01
        rng = np.random.default_rng(3)
        checkpoints = [(i * dt, rng.poisson(rate * dt)) for i in range(100)]
        times, cum = accumulate_curve(checkpoints)
        total = cum[-1]
        expect = rate * dt * 100
        assert abs(total - expect) < 3 * math.sqrt(expect)
