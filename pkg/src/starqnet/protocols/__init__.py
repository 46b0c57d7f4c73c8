"""Protocol orchestrations over a topology."""

import os
from concurrent.futures import ProcessPoolExecutor
from functools import partial

from ..records import ProtocolStats
from .multiparty import (  # noqa: F401
    AnonEntanglementStats,
    BudgetEstimate,
    VerificationStats,
    estimate_verification_budget,
    even_parity_inputs,
    run_anonymous_entanglement,
    run_ghz_share,
    run_ghz_verification,
    verification_accept_probability,
)
from .qkd import (  # noqa: F401
    run_bb84,
    run_bb84_transmitted,
    run_bbm92,
    run_delegated_transmission,
    run_mdi_qkd,
)


def _one_run(fn, kwargs, seed):
    result = fn(seed=seed, **kwargs)
    return result[0] if isinstance(result, tuple) else result


def repeat_runs(fn, runs: int, base_seed: int = 0, workers: int = 1, **kwargs) -> ProtocolStats:
    """Run ``fn`` ``runs`` times with seeds base_seed..base_seed+runs-1.

    Runs share no mutable state; with workers > 1 they execute in separate
    processes and the aggregation is a sorted merge, so the result is
    independent of scheduling order.
    """
    seeds = [base_seed + i for i in range(runs)]
    if workers <= 1 or runs == 1:
        parts = [_one_run(fn, kwargs, seed) for seed in seeds]
    else:
        workers = min(workers, runs, os.cpu_count() or 1)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(partial(_one_run, fn, kwargs), seeds))
    return ProtocolStats.merge(parts)
