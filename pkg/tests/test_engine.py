import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from starqnet.engine import (
    NS_PER_S,
    RngStream,
    Scheduler,
    attempt_count,
    draw_bernoulli,
    step_time_ns,
    stream_base,
    u01_at,
    u01_block,
)
from starqnet.errors import BadProbabilityError, PastTimeError


def test_schedule_at_now_boundary_dispatches_first():
    sched = Scheduler()
    order = []
    sched.schedule(5, lambda s: order.append("later"))
    sched.schedule(0, lambda s: order.append("boundary"))
    sched.run_until(10)
    assert order == ["boundary", "later"]


def test_equal_fire_times_dispatch_in_schedule_order():
    sched = Scheduler()
    order = []
    first = sched.schedule(100, lambda s: order.append("a"))
    second = sched.schedule(100, lambda s: order.append("b"))
    assert first.sequence < second.sequence
    sched.run_until(100)
    assert order == ["a", "b"]


def test_schedule_in_past_raises():
    sched = Scheduler()
    sched.schedule(10, lambda s: None)
    sched.run_until(10)
    with pytest.raises(PastTimeError):
        sched.schedule(5, lambda s: None)


def test_run_until_empty_queue():
    sched = Scheduler()
    assert sched.run_until(1_000_000) == 0
    assert sched.now() == 1_000_000


def test_cancel_prevents_dispatch():
    sched = Scheduler()
    fired = []
    ev = sched.schedule(10, lambda s: fired.append(1))
    sched.cancel(ev)
    assert sched.run_until(20) == 0
    assert fired == []


def test_source_attempt_chain_count():
    # 80 MHz source over 1 ms: floor(T*f) = 80_000 attempt events.
    f = 80e6
    duration_ns = NS_PER_S // 1000
    sched = Scheduler()
    count = [0]

    def emit(s, k=[0]):
        count[0] += 1
        k[0] += 1
        t_next = step_time_ns(k[0], f)
        if t_next < duration_ns:
            s.schedule(t_next, emit)

    sched.schedule(0, emit)
    sched.run_until(duration_ns)
    assert count[0] == 80_000
    assert count[0] == attempt_count(f, 1e-3)


def test_attempt_count_matches_floor():
    for f, t in [(80e6, 1e-3), (8e6, 2e-3), (80e6, 12.3e-3), (7.5e6, 1e-3)]:
        assert attempt_count(f, t) == math.floor(f * t + 1e-6)


def test_event_trace_replay_identical():
    def build():
        sched = Scheduler(trace=True)
        rng = RngStream(seed=42, stream_id=0)
        for _ in range(50):
            t = int(rng.random() * 1000)
            sched.schedule(t, lambda s: None, label=f"t{t}")
        sched.run_until(1000)
        return sched.trace

    assert build() == build()


@given(st.lists(st.integers(0, 1000), max_size=60))
@settings(max_examples=50, deadline=None)
def test_dispatch_total_order(times):
    # Dispatch is sorted by (fire_at, sequence) whatever the insertion order.
    sched = Scheduler()
    seen = []
    for i, t in enumerate(times):
        sched.schedule(t, lambda s, i=i: seen.append(i))
    sched.run_until(1001)
    assert seen == [i for _, i in sorted((t, i) for i, t in enumerate(times))]


class TestRngStream:
    def test_bernoulli_extremes(self):
        rng = RngStream(1, 0)
        assert not any(draw_bernoulli(rng, 0.0) for _ in range(1000))
        assert all(draw_bernoulli(rng, 1.0) for _ in range(1000))

    def test_bernoulli_bad_probability(self):
        rng = RngStream(1, 0)
        with pytest.raises(BadProbabilityError):
            rng.bernoulli(1.5)
        with pytest.raises(BadProbabilityError):
            rng.bernoulli(-0.1)

    def test_bernoulli_mean_within_3_sigma(self):
        # p=0.36 over 1e6 draws: 3 sigma = 3*sqrt(p(1-p)/n) ~ 0.00144
        n, p = 1_000_000, 0.36
        rng = RngStream(7, 3)
        mean = float(np.mean(rng.block(n) < p))
        assert abs(mean - p) < 3 * math.sqrt(p * (1 - p) / n)

    def test_same_seed_stream_index_same_draw(self):
        a = RngStream(123, 5)
        b = RngStream(123, 5)
        assert [a.random() for _ in range(20)] == [b.random() for _ in range(20)]
        assert u01_at(a.base, 1000) == u01_at(b.base, 1000)

    def test_block_matches_sequential(self):
        a = RngStream(9, 2)
        b = RngStream(9, 2)
        block = a.block(257)
        seq = np.array([b.random() for _ in range(257)])
        assert np.array_equal(block, seq)

    def test_streams_independent_of_each_other(self):
        # Draw order in one stream never perturbs another stream's draws.
        lone = RngStream(11, 1)
        expected = [lone.random() for _ in range(5)]
        other = RngStream(11, 0)
        for _ in range(1234):
            other.random()
        fresh = RngStream(11, 1)
        assert [fresh.random() for _ in range(5)] == expected

    def test_distinct_streams_differ(self):
        assert stream_base(5, 0) != stream_base(5, 1)
        assert stream_base(5, 0) != stream_base(6, 0)

    def test_u01_block_free_function(self):
        base = stream_base(3, 4)
        assert np.array_equal(u01_block(base, 0, 64), RngStream(3, 4).block(64))
        assert u01_block(base, 10, 1)[0] == u01_at(base, 10)

    def test_range(self):
        u = RngStream(2, 0).block(10000)
        assert (u >= 0).all() and (u < 1).all()
