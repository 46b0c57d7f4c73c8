"""Pure-Python (numpy) Monte Carlo kernels.

Vectorized twin of the compiled kernels in ``_core.pyx``.  Both implement
the draw layout documented in ``_layout`` on top of the counter-based
generator from :mod:`starqnet.engine`, so outputs are bit-identical
between the two backends.  The numpy path evaluates whole draw columns
and masks; the compiled path walks timesteps and skips unneeded slots.

Round formation for GHZ sharing is restricted to timesteps where the
source actually emitted: an all-parties dark-count coincidence at an
empty attempt (probability ~p_dark^n per step) is below any observable
rate and is not simulated.
"""

import numpy as np

from ..engine import U01_SCALE, _GAMMA, _MASK, _MIX1, _MIX2
from . import _layout as L

BACKEND_NAME = "pure"

_U64 = np.uint64


def _u01(base: int, idx: np.ndarray) -> np.ndarray:
    """Uniform [0,1) draws of a stream at the given counter indices."""
    z = _U64(base) + (idx + _U64(1)) * _U64(_GAMMA)
    z = (z ^ (z >> _U64(30))) * _U64(_MIX1)
    z = (z ^ (z >> _U64(27))) * _U64(_MIX2)
    z ^= z >> _U64(31)
    return (z >> _U64(11)).astype(np.float64) * U01_SCALE


def _bits(base: int, idx: np.ndarray) -> np.ndarray:
    """Bit draws: 0 when u < 0.5, else 1."""
    return (_u01(base, idx) >= 0.5).astype(np.uint8)


def _empty_records():
    return (
        np.empty(0, np.int64),
        np.empty(0, np.uint8),
        np.empty(0, np.uint8),
        np.empty(0, np.uint8),
    )


def _sorted_records(parts):
    """Merge (steps, bases, bits, kinds) chunks into one step-sorted stream."""
    parts = [p for p in parts if p[0].size]
    if not parts:
        return _empty_records()
    steps = np.concatenate([p[0] for p in parts])
    bases = np.concatenate([p[1] for p in parts])
    bits = np.concatenate([p[2] for p in parts])
    kinds = np.concatenate([p[3] for p in parts])
    order = np.argsort(steps, kind="stable")
    return steps[order], bases[order], bits[order], kinds[order]


def bb84_run(
    src_base,
    mid_base,
    det_base,
    n_steps,
    p_emit,
    p_flip,
    surv1,
    deph1,
    has_mid,
    p_switch,
    surv2,
    deph2,
    p_det,
    p_xtalk,
    p_dark,
    sift,
):
    """One prepare-and-measure run: source -> fiber [-> switch -> fiber] -> detector.

    With ``sift`` the receiver picks a random basis per click (BB84); without
    it clicks are only counted (qubit transmission), outcomes forced to 0.

    Returns (sent_steps, sent_bits, sent_bases, rec_steps, rec_bases,
    rec_bits, rec_kinds).  Sender records hold the intended bit (before any
    creation flip); receiver records are step-sorted clicks.
    """
    steps = np.arange(n_steps, dtype=_U64)
    S, M, D = L.SRC_STRIDE, L.MID_STRIDE, L.DET_STRIDE

    emitted = _u01(src_base, steps * _U64(S) + _U64(L.SRC_EMIT)) < p_emit
    es = steps[emitted]
    sent_bits = _bits(src_base, es * _U64(S) + _U64(L.SRC_BIT))
    sent_bases = _bits(src_base, es * _U64(S) + _U64(L.SRC_BASIS))
    if p_flip > 0.0:
        flips = _u01(src_base, es * _U64(S) + _U64(L.SRC_FLIP)) < p_flip
        photon_bits = sent_bits ^ flips
    else:
        photon_bits = sent_bits

    alive = _u01(src_base, es * _U64(S) + _U64(L.SRC_SURV)) < surv1
    zflip = alive & (_u01(src_base, es * _U64(S) + _U64(L.SRC_DEPH)) < deph1)
    if has_mid:
        alive &= _u01(mid_base, es * _U64(M) + _U64(L.MID_SWITCH)) < p_switch
        alive &= _u01(mid_base, es * _U64(M) + _U64(L.MID_SURV)) < surv2
        zflip ^= alive & (_u01(mid_base, es * _U64(M) + _U64(L.MID_DEPH)) < deph2)

    dark_all = _u01(det_base, steps * _U64(D) + _U64(L.DET_DARK)) < p_dark

    det_ok = np.zeros(es.size, bool)
    det_ok[alive] = _u01(det_base, es[alive] * _U64(D) + _U64(L.DET_DET)) < p_det
    dark_at_es = dark_all[emitted]
    double_mask = det_ok & dark_at_es
    signal_mask = det_ok & ~dark_at_es

    sig_steps = es[signal_mask]
    if sift:
        mbases = _bits(det_base, sig_steps * _U64(D) + _U64(L.DET_BASIS))
        matched = mbases == sent_bases[signal_mask]
        ideal = photon_bits[signal_mask] ^ (
            (sent_bases[signal_mask] == 1) & zflip[signal_mask]
        ).astype(np.uint8)
        coin = _bits(det_base, sig_steps * _U64(D) + _U64(L.DET_COIN))
        outs = np.where(matched, ideal, coin).astype(np.uint8)
        if p_xtalk > 0.0:
            outs ^= _u01(det_base, sig_steps * _U64(D) + _U64(L.DET_XTALK)) < p_xtalk
    else:
        mbases = np.zeros(sig_steps.size, np.uint8)
        outs = np.zeros(sig_steps.size, np.uint8)

    # Dark-only clicks: dark gate fired and no signal click landed there.
    dark_steps = steps[dark_all]
    if dark_steps.size:
        occupied = np.concatenate([sig_steps, es[double_mask]])
        dark_steps = dark_steps[~np.isin(dark_steps, occupied)]
    if dark_steps.size and sift:
        dark_bases = _bits(det_base, dark_steps * _U64(D) + _U64(L.DET_BASIS))
    else:
        dark_bases = np.zeros(dark_steps.size, np.uint8)
    dark_bits = _bits(det_base, dark_steps * _U64(D) + _U64(L.DET_DARK_BIT))

    rec = _sorted_records(
        [
            (
                sig_steps.astype(np.int64),
                mbases,
                outs,
                np.full(sig_steps.size, L.KIND_SIGNAL, np.uint8),
            ),
            (
                es[double_mask].astype(np.int64),
                np.zeros(int(double_mask.sum()), np.uint8),
                np.zeros(int(double_mask.sum()), np.uint8),
                np.full(int(double_mask.sum()), L.KIND_DOUBLE, np.uint8),
            ),
            (
                dark_steps.astype(np.int64),
                dark_bases,
                dark_bits,
                np.full(dark_steps.size, L.KIND_DARK, np.uint8),
            ),
        ]
    )
    return (es.astype(np.int64), sent_bits, sent_bases) + rec


def bbm92_run(
    src_base,
    a_base,
    b_base,
    n_steps,
    p_epr,
    surv_a,
    deph_a,
    surv_b,
    deph_b,
    p_det_a,
    p_xtalk_a,
    p_dark_a,
    p_det_b,
    p_xtalk_b,
    p_dark_b,
):
    """Entangled-pair run: source emits pairs, each arm is measured in a random basis.

    Outcomes realize the singlet correlations: equal bases anticorrelate
    (arm dephasing toggles X-basis outcomes), unequal bases are independent
    coins.  Returns (n_emitted, recs_a, recs_b) with each ``recs`` a
    (steps, bases, bits, kinds) tuple.
    """
    steps = np.arange(n_steps, dtype=_U64)
    S, D = L.EPR_STRIDE, L.DET_STRIDE

    emitted = _u01(src_base, steps * _U64(S) + _U64(L.EPR_EMIT)) < p_epr
    es = steps[emitted]
    shared = _bits(src_base, es * _U64(S) + _U64(L.EPR_SHARED))

    alive_a = _u01(src_base, es * _U64(S) + _U64(L.EPR_A_SURV)) < surv_a
    z_a = alive_a & (_u01(src_base, es * _U64(S) + _U64(L.EPR_A_DEPH)) < deph_a)
    alive_b = _u01(src_base, es * _U64(S) + _U64(L.EPR_B_SURV)) < surv_b
    z_b = alive_b & (_u01(src_base, es * _U64(S) + _U64(L.EPR_B_DEPH)) < deph_b)

    def arm(det_base, alive, p_det, p_dark):
        dark_all = _u01(det_base, steps * _U64(D) + _U64(L.DET_DARK)) < p_dark
        det_ok = np.zeros(es.size, bool)
        det_ok[alive] = _u01(det_base, es[alive] * _U64(D) + _U64(L.DET_DET)) < p_det
        dark_at_es = dark_all[emitted]
        double_mask = det_ok & dark_at_es
        signal_mask = det_ok & ~dark_at_es
        mbases = np.zeros(es.size, np.uint8)
        mbases[signal_mask] = _bits(
            det_base, es[signal_mask] * _U64(D) + _U64(L.DET_BASIS)
        )
        return dark_all, double_mask, signal_mask, mbases

    dark_a, double_a, signal_a, mb_a = arm(a_base, alive_a, p_det_a, p_dark_a)
    dark_b, double_b, signal_b, mb_b = arm(b_base, alive_b, p_det_b, p_dark_b)

    both = signal_a & signal_b
    matched = both & (mb_a == mb_b)

    def outcomes(det_base, signal_mask, mbases, z, ideal_bit, p_xtalk):
        outs = np.zeros(es.size, np.uint8)
        use_coin = signal_mask & ~matched
        outs[use_coin] = _bits(det_base, es[use_coin] * _U64(D) + _U64(L.DET_COIN))
        m = signal_mask & matched
        outs[m] = ideal_bit[m] ^ ((mbases[m] == 1) & z[m]).astype(np.uint8)
        if p_xtalk > 0.0:
            flip = _u01(
                det_base, es[signal_mask] * _U64(D) + _U64(L.DET_XTALK)
            ) < p_xtalk
            outs[signal_mask] ^= flip
        return outs

    outs_a = outcomes(a_base, signal_a, mb_a, z_a, shared, p_xtalk_a)
    outs_b = outcomes(b_base, signal_b, mb_b, z_b, shared ^ 1, p_xtalk_b)

    def assemble(det_base, signal_mask, double_mask, dark_all, mbases, outs):
        sig_steps = es[signal_mask]
        dark_steps = steps[dark_all]
        if dark_steps.size:
            occupied = np.concatenate([sig_steps, es[double_mask]])
            dark_steps = dark_steps[~np.isin(dark_steps, occupied)]
        dark_bases = _bits(det_base, dark_steps * _U64(D) + _U64(L.DET_BASIS))
        dark_bits = _bits(det_base, dark_steps * _U64(D) + _U64(L.DET_DARK_BIT))
        return _sorted_records(
            [
                (
                    sig_steps.astype(np.int64),
                    mbases[signal_mask],
                    outs[signal_mask],
                    np.full(sig_steps.size, L.KIND_SIGNAL, np.uint8),
                ),
                (
                    es[double_mask].astype(np.int64),
                    np.zeros(int(double_mask.sum()), np.uint8),
                    np.zeros(int(double_mask.sum()), np.uint8),
                    np.full(int(double_mask.sum()), L.KIND_DOUBLE, np.uint8),
                ),
                (
                    dark_steps.astype(np.int64),
                    dark_bases,
                    dark_bits,
                    np.full(dark_steps.size, L.KIND_DARK, np.uint8),
                ),
            ]
        )

    recs_a = assemble(a_base, signal_a, double_a, dark_a, mb_a, outs_a)
    recs_b = assemble(b_base, signal_b, double_b, dark_b, mb_b, outs_b)
    return int(es.size), recs_a, recs_b


def mdi_run(a_base, b_base, relay_base, n_steps, p_emit_a, surv_a, p_emit_b, surv_b, p_bsm):
    """Both endpoints emit toward a joint-measurement relay.

    A round succeeds when both sources emitted in the same timestep, both
    photons survived their fibers, and the joint measurement draw succeeded.
    Returns (n_emit_a, n_emit_b, n_joint, success_steps).
    """
    steps = np.arange(n_steps, dtype=_U64)
    S = L.SRC_STRIDE

    emit_a = _u01(a_base, steps * _U64(S) + _U64(L.SRC_EMIT)) < p_emit_a
    emit_b = _u01(b_base, steps * _U64(S) + _U64(L.SRC_EMIT)) < p_emit_b
    joint = emit_a & emit_b
    js = steps[joint]

    alive = (_u01(a_base, js * _U64(S) + _U64(L.SRC_SURV)) < surv_a) & (
        _u01(b_base, js * _U64(S) + _U64(L.SRC_SURV)) < surv_b
    )
    success = np.zeros(js.size, bool)
    success[alive] = (
        _u01(relay_base, js[alive] * _U64(L.BSM_STRIDE) + _U64(L.BSM_DRAW)) < p_bsm
    )
    return (
        int(emit_a.sum()),
        int(emit_b.sum()),
        int(js.size),
        js[success].astype(np.int64),
    )


def ghz_run(src_base, det_bases, n_steps, p_ghz, surv, deph, depol_w, p_det, p_xtalk, p_dark):
    """Multipartite sharing run: n-qubit source, one fiber+detector per party.

    All parties measure in the fixed Z basis.  A round is delivered when
    every party clicks (signal or dark) in the same timestep; double clicks
    discard the party and hence the round.  The optional depolarizing
    weight flips a party's outcome with probability depol_w / 2.

    Returns (n_emitted, delivered_steps, outcomes[n_delivered, n],
    click_counts[n]).
    """
    n = len(det_bases)
    stride = L.ghz_src_stride(n)
    steps = np.arange(n_steps, dtype=_U64)

    emitted = _u01(src_base, steps * _U64(stride) + _U64(0)) < p_ghz
    es = steps[emitted]
    shared = _bits(src_base, es * _U64(stride) + _U64(1))

    click = np.ones(es.size, bool)
    outcomes = np.zeros((es.size, n), np.uint8)
    click_counts = np.zeros(n, np.int64)
    D = L.GHZDET_STRIDE

    for i in range(n):
        arm_off = L.GHZSRC_FIXED + L.GHZSRC_PER_ARM * i
        alive = _u01(src_base, es * _U64(stride) + _U64(arm_off)) < surv[i]
        xflip = np.zeros(es.size, bool)
        if depol_w > 0.0:
            evt = _u01(src_base, es * _U64(stride) + _U64(arm_off + 2)) < depol_w
            if evt.any():
                u = _u01(src_base, es[evt] * _U64(stride) + _U64(arm_off + 3))
                pauli = np.minimum((u * 4.0).astype(np.int64), 3)
                xflip[evt] = (pauli == 1) | (pauli == 2)

        det_ok = np.zeros(es.size, bool)
        det_ok[alive] = (
            _u01(det_bases[i], es[alive] * _U64(D) + _U64(L.GHZDET_DET)) < p_det[i]
        )
        dark = _u01(det_bases[i], es * _U64(D) + _U64(L.GHZDET_DARK)) < p_dark[i]
        double = det_ok & dark
        signal = det_ok & ~dark
        dark_only = dark & ~det_ok

        out_i = np.zeros(es.size, np.uint8)
        ideal = shared ^ xflip.astype(np.uint8)
        if p_xtalk[i] > 0.0:
            xt = _u01(det_bases[i], es * _U64(D) + _U64(L.GHZDET_XTALK)) < p_xtalk[i]
            ideal = ideal ^ (signal & xt).astype(np.uint8)
        out_i[signal] = ideal[signal]
        out_i[dark_only] = _bits(
            det_bases[i], es[dark_only] * _U64(D) + _U64(L.GHZDET_DARK_BIT)
        )

        clicked_i = signal | dark_only
        click_counts[i] = int(clicked_i.sum())
        click &= clicked_i & ~double
        outcomes[:, i] = out_i

    delivered = es[click].astype(np.int64)
    return int(es.size), delivered, outcomes[click], click_counts
