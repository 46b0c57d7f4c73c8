# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Monte Carlo kernels.

Scalar twin of ``_pure``: walks timesteps and evaluates only the draw
slots the control flow touches.  Because the generator is counter-based,
skipping slots never shifts later draws, so outputs are bit-identical to
the numpy implementation.  See ``_layout`` for the slot map.
"""

import numpy as np

BACKEND_NAME = "compiled"

cdef unsigned long long GAMMA = 0x9E3779B97F4A7C15ULL
cdef unsigned long long MIX1 = 0xBF58476D1CE4E5B9ULL
cdef unsigned long long MIX2 = 0x94D049BB133111EBULL
cdef double U01 = 1.0 / 9007199254740992.0  # 2^-53

# slot offsets, mirroring _layout
cdef enum:
    SRC_STRIDE = 6
    SRC_EMIT = 0
    SRC_BIT = 1
    SRC_BASIS = 2
    SRC_FLIP = 3
    SRC_SURV = 4
    SRC_DEPH = 5
    MID_STRIDE = 3
    MID_SWITCH = 0
    MID_SURV = 1
    MID_DEPH = 2
    DET_STRIDE = 6
    DET_DARK = 0
    DET_DARK_BIT = 1
    DET_BASIS = 2
    DET_DET = 3
    DET_XTALK = 4
    DET_COIN = 5
    EPR_EMIT = 0
    EPR_SHARED = 1
    EPR_A_SURV = 2
    EPR_A_DEPH = 3
    EPR_B_SURV = 4
    EPR_B_DEPH = 5
    GHZDET_STRIDE = 4
    GHZDET_DARK = 0
    GHZDET_DARK_BIT = 1
    GHZDET_DET = 2
    GHZDET_XTALK = 3
    KIND_SIGNAL = 1
    KIND_DARK = 2
    KIND_DOUBLE = 3

LAYOUT = {
    "SRC_STRIDE": SRC_STRIDE,
    "MID_STRIDE": MID_STRIDE,
    "DET_STRIDE": DET_STRIDE,
    "EPR_STRIDE": 6,
    "BSM_STRIDE": 1,
    "GHZDET_STRIDE": GHZDET_STRIDE,
    "GHZSRC_FIXED": 2,
    "GHZSRC_PER_ARM": 4,
    "LAYOUT_VERSION": 1,
}


cdef inline unsigned long long _mix(unsigned long long z) noexcept:
    z = (z ^ (z >> 30)) * MIX1
    z = (z ^ (z >> 27)) * MIX2
    return z ^ (z >> 31)


cdef inline double _u01(unsigned long long base, unsigned long long idx) noexcept:
    return <double>(_mix(base + (idx + 1) * GAMMA) >> 11) * U01


cdef inline int _bit(unsigned long long base, unsigned long long idx) noexcept:
    return 0 if _u01(base, idx) < 0.5 else 1


def bb84_run(
    unsigned long long src_base,
    unsigned long long mid_base,
    unsigned long long det_base,
    long long n_steps,
    double p_emit,
    double p_flip,
    double surv1,
    double deph1,
    bint has_mid,
    double p_switch,
    double surv2,
    double deph2,
    double p_det,
    double p_xtalk,
    double p_dark,
    bint sift,
):
    sent_steps = np.empty(n_steps, np.int64)
    sent_bits = np.empty(n_steps, np.uint8)
    sent_bases = np.empty(n_steps, np.uint8)
    rec_steps = np.empty(n_steps, np.int64)
    rec_bases = np.empty(n_steps, np.uint8)
    rec_bits = np.empty(n_steps, np.uint8)
    rec_kinds = np.empty(n_steps, np.uint8)
    cdef long long[::1] ss = sent_steps
    cdef unsigned char[::1] sb = sent_bits
    cdef unsigned char[::1] sba = sent_bases
    cdef long long[::1] rs = rec_steps
    cdef unsigned char[::1] rba = rec_bases
    cdef unsigned char[::1] rb = rec_bits
    cdef unsigned char[::1] rk = rec_kinds

    cdef Py_ssize_t n_sent = 0, n_rec = 0
    cdef long long k
    cdef unsigned long long kk
    cdef bint dark, emit, alive, zf, det_ok, sig, dbl
    cdef int bit0, basis, pbit, mbasis, out

    for k in range(n_steps):
        kk = <unsigned long long>k
        dark = _u01(det_base, kk * DET_STRIDE + DET_DARK) < p_dark
        emit = _u01(src_base, kk * SRC_STRIDE + SRC_EMIT) < p_emit
        sig = False
        dbl = False
        if emit:
            bit0 = _bit(src_base, kk * SRC_STRIDE + SRC_BIT)
            basis = _bit(src_base, kk * SRC_STRIDE + SRC_BASIS)
            pbit = bit0
            if p_flip > 0.0 and _u01(src_base, kk * SRC_STRIDE + SRC_FLIP) < p_flip:
                pbit ^= 1
            ss[n_sent] = k
            sb[n_sent] = <unsigned char>bit0
            sba[n_sent] = <unsigned char>basis
            n_sent += 1

            alive = _u01(src_base, kk * SRC_STRIDE + SRC_SURV) < surv1
            zf = alive and _u01(src_base, kk * SRC_STRIDE + SRC_DEPH) < deph1
            if has_mid and alive:
                alive = _u01(mid_base, kk * MID_STRIDE + MID_SWITCH) < p_switch
                if alive:
                    alive = _u01(mid_base, kk * MID_STRIDE + MID_SURV) < surv2
                if alive and _u01(mid_base, kk * MID_STRIDE + MID_DEPH) < deph2:
                    zf = not zf
            det_ok = alive and _u01(det_base, kk * DET_STRIDE + DET_DET) < p_det
            if det_ok and dark:
                dbl = True
                rs[n_rec] = k
                rba[n_rec] = 0
                rb[n_rec] = 0
                rk[n_rec] = KIND_DOUBLE
                n_rec += 1
            elif det_ok:
                sig = True
                if sift:
                    mbasis = _bit(det_base, kk * DET_STRIDE + DET_BASIS)
                    if mbasis == basis:
                        out = pbit ^ (1 if (basis == 1 and zf) else 0)
                    else:
                        out = _bit(det_base, kk * DET_STRIDE + DET_COIN)
                    if p_xtalk > 0.0 and _u01(det_base, kk * DET_STRIDE + DET_XTALK) < p_xtalk:
                        out ^= 1
                else:
                    mbasis = 0
                    out = 0
                rs[n_rec] = k
                rba[n_rec] = <unsigned char>mbasis
                rb[n_rec] = <unsigned char>out
                rk[n_rec] = KIND_SIGNAL
                n_rec += 1
        if dark and not sig and not dbl:
            mbasis = _bit(det_base, kk * DET_STRIDE + DET_BASIS) if sift else 0
            rs[n_rec] = k
            rba[n_rec] = <unsigned char>mbasis
            rb[n_rec] = <unsigned char>_bit(det_base, kk * DET_STRIDE + DET_DARK_BIT)
            rk[n_rec] = KIND_DARK
            n_rec += 1

    return (
        sent_steps[:n_sent].copy(),
        sent_bits[:n_sent].copy(),
        sent_bases[:n_sent].copy(),
        rec_steps[:n_rec].copy(),
        rec_bases[:n_rec].copy(),
        rec_bits[:n_rec].copy(),
        rec_kinds[:n_rec].copy(),
    )


def bbm92_run(
    unsigned long long src_base,
    unsigned long long a_base,
    unsigned long long b_base,
    long long n_steps,
    double p_epr,
    double surv_a,
    double deph_a,
    double surv_b,
    double deph_b,
    double p_det_a,
    double p_xtalk_a,
    double p_dark_a,
    double p_det_b,
    double p_xtalk_b,
    double p_dark_b,
):
    steps_a = np.empty(n_steps, np.int64)
    bases_a = np.empty(n_steps, np.uint8)
    bits_a = np.empty(n_steps, np.uint8)
    kinds_a = np.empty(n_steps, np.uint8)
    steps_b = np.empty(n_steps, np.int64)
    bases_b = np.empty(n_steps, np.uint8)
    bits_b = np.empty(n_steps, np.uint8)
    kinds_b = np.empty(n_steps, np.uint8)
    cdef long long[::1] sa = steps_a
    cdef unsigned char[::1] ba = bases_a
    cdef unsigned char[::1] oa = bits_a
    cdef unsigned char[::1] ka = kinds_a
    cdef long long[::1] sbv = steps_b
    cdef unsigned char[::1] bb = bases_b
    cdef unsigned char[::1] ob = bits_b
    cdef unsigned char[::1] kb = kinds_b

    cdef Py_ssize_t na = 0, nb = 0
    cdef long long k, n_emitted = 0
    cdef unsigned long long kk
    cdef bint dark_a, dark_b, emit, alive_a, alive_b, z_a, z_b
    cdef bint det_a, det_b, sig_a, sig_b, dbl_a, dbl_b, matched
    cdef int v, mb_a, mb_b, out

    for k in range(n_steps):
        kk = <unsigned long long>k
        dark_a = _u01(a_base, kk * DET_STRIDE + DET_DARK) < p_dark_a
        dark_b = _u01(b_base, kk * DET_STRIDE + DET_DARK) < p_dark_b
        emit = _u01(src_base, kk * 6 + EPR_EMIT) < p_epr
        sig_a = sig_b = dbl_a = dbl_b = False
        mb_a = mb_b = 0
        if emit:
            n_emitted += 1
            v = _bit(src_base, kk * 6 + EPR_SHARED)
            alive_a = _u01(src_base, kk * 6 + EPR_A_SURV) < surv_a
            z_a = alive_a and _u01(src_base, kk * 6 + EPR_A_DEPH) < deph_a
            alive_b = _u01(src_base, kk * 6 + EPR_B_SURV) < surv_b
            z_b = alive_b and _u01(src_base, kk * 6 + EPR_B_DEPH) < deph_b

            det_a = alive_a and _u01(a_base, kk * DET_STRIDE + DET_DET) < p_det_a
            det_b = alive_b and _u01(b_base, kk * DET_STRIDE + DET_DET) < p_det_b
            dbl_a = det_a and dark_a
            sig_a = det_a and not dark_a
            dbl_b = det_b and dark_b
            sig_b = det_b and not dark_b
            if sig_a:
                mb_a = _bit(a_base, kk * DET_STRIDE + DET_BASIS)
            if sig_b:
                mb_b = _bit(b_base, kk * DET_STRIDE + DET_BASIS)
            matched = sig_a and sig_b and mb_a == mb_b

            if dbl_a:
                sa[na] = k; ba[na] = 0; oa[na] = 0; ka[na] = KIND_DOUBLE; na += 1
            elif sig_a:
                if matched:
                    out = v ^ (1 if (mb_a == 1 and z_a) else 0)
                else:
                    out = _bit(a_base, kk * DET_STRIDE + DET_COIN)
                if p_xtalk_a > 0.0 and _u01(a_base, kk * DET_STRIDE + DET_XTALK) < p_xtalk_a:
                    out ^= 1
                sa[na] = k; ba[na] = <unsigned char>mb_a; oa[na] = <unsigned char>out
                ka[na] = KIND_SIGNAL; na += 1
            if dbl_b:
                sbv[nb] = k; bb[nb] = 0; ob[nb] = 0; kb[nb] = KIND_DOUBLE; nb += 1
            elif sig_b:
                if matched:
                    out = (v ^ 1) ^ (1 if (mb_b == 1 and z_b) else 0)
                else:
                    out = _bit(b_base, kk * DET_STRIDE + DET_COIN)
                if p_xtalk_b > 0.0 and _u01(b_base, kk * DET_STRIDE + DET_XTALK) < p_xtalk_b:
                    out ^= 1
                sbv[nb] = k; bb[nb] = <unsigned char>mb_b; ob[nb] = <unsigned char>out
                kb[nb] = KIND_SIGNAL; nb += 1
        if dark_a and not sig_a and not dbl_a:
            sa[na] = k
            ba[na] = <unsigned char>_bit(a_base, kk * DET_STRIDE + DET_BASIS)
            oa[na] = <unsigned char>_bit(a_base, kk * DET_STRIDE + DET_DARK_BIT)
            ka[na] = KIND_DARK; na += 1
        if dark_b and not sig_b and not dbl_b:
            sbv[nb] = k
            bb[nb] = <unsigned char>_bit(b_base, kk * DET_STRIDE + DET_BASIS)
            ob[nb] = <unsigned char>_bit(b_base, kk * DET_STRIDE + DET_DARK_BIT)
            kb[nb] = KIND_DARK; nb += 1

    ra = (steps_a[:na].copy(), bases_a[:na].copy(), bits_a[:na].copy(), kinds_a[:na].copy())
    rb_ = (steps_b[:nb].copy(), bases_b[:nb].copy(), bits_b[:nb].copy(), kinds_b[:nb].copy())
    return int(n_emitted), ra, rb_


def mdi_run(
    unsigned long long a_base,
    unsigned long long b_base,
    unsigned long long relay_base,
    long long n_steps,
    double p_emit_a,
    double surv_a,
    double p_emit_b,
    double surv_b,
    double p_bsm,
):
    succ = np.empty(n_steps, np.int64)
    cdef long long[::1] sv = succ
    cdef Py_ssize_t n_succ = 0
    cdef long long k, n_a = 0, n_b = 0, n_joint = 0
    cdef unsigned long long kk
    cdef bint ea, eb, alive

    for k in range(n_steps):
        kk = <unsigned long long>k
        ea = _u01(a_base, kk * SRC_STRIDE + SRC_EMIT) < p_emit_a
        eb = _u01(b_base, kk * SRC_STRIDE + SRC_EMIT) < p_emit_b
        if ea:
            n_a += 1
        if eb:
            n_b += 1
        if ea and eb:
            n_joint += 1
            alive = _u01(a_base, kk * SRC_STRIDE + SRC_SURV) < surv_a
            if alive:
                alive = _u01(b_base, kk * SRC_STRIDE + SRC_SURV) < surv_b
            if alive and _u01(relay_base, kk) < p_bsm:
                sv[n_succ] = k
                n_succ += 1

    return int(n_a), int(n_b), int(n_joint), succ[:n_succ].copy()


def ghz_run(
    unsigned long long src_base,
    det_bases,
    long long n_steps,
    double p_ghz,
    surv,
    deph,
    double depol_w,
    p_det,
    p_xtalk,
    p_dark,
):
    cdef int n = len(det_bases)
    if n < 1 or n > 8:
        raise ValueError("ghz_run supports 1..8 parties")
    cdef unsigned long long stride = 2 + 4 * n
    det_arr = np.asarray(det_bases, np.uint64)
    surv_arr = np.asarray(surv, np.float64)
    pdet_arr = np.asarray(p_det, np.float64)
    pxt_arr = np.asarray(p_xtalk, np.float64)
    pdark_arr = np.asarray(p_dark, np.float64)
    cdef unsigned long long[::1] det_v = det_arr
    cdef double[::1] surv_v = surv_arr
    cdef double[::1] pdet_v = pdet_arr
    cdef double[::1] pxt_v = pxt_arr
    cdef double[::1] pdark_v = pdark_arr

    cap = max(int(n_steps * min(1.0, p_ghz * 1.5) + 1024), 1024)
    delivered = np.empty(cap, np.int64)
    outcomes = np.empty((cap, n), np.uint8)
    counts = np.zeros(n, np.int64)
    cdef long long[::1] dv = delivered
    cdef unsigned char[:, ::1] ov = outcomes
    cdef long long[::1] cv = counts

    cdef Py_ssize_t n_del = 0
    cdef long long k, n_emitted = 0
    cdef unsigned long long kk, arm_off
    cdef int i, v, out, pauli
    cdef bint alive, xflip, det_ok, dark, signal, dark_only, click_all
    cdef unsigned char row[8]

    for k in range(n_steps):
        kk = <unsigned long long>k
        if _u01(src_base, kk * stride) >= p_ghz:
            continue
        n_emitted += 1
        v = _bit(src_base, kk * stride + 1)
        click_all = True
        for i in range(n):
            arm_off = 2 + 4 * <unsigned long long>i
            alive = _u01(src_base, kk * stride + arm_off) < surv_v[i]
            xflip = False
            if depol_w > 0.0 and _u01(src_base, kk * stride + arm_off + 2) < depol_w:
                pauli = <int>(_u01(src_base, kk * stride + arm_off + 3) * 4.0)
                if pauli > 3:
                    pauli = 3
                xflip = pauli == 1 or pauli == 2
            det_ok = alive and _u01(det_v[i], kk * GHZDET_STRIDE + GHZDET_DET) < pdet_v[i]
            dark = _u01(det_v[i], kk * GHZDET_STRIDE + GHZDET_DARK) < pdark_v[i]
            signal = det_ok and not dark
            dark_only = dark and not det_ok
            out = 0
            if signal:
                out = v ^ (1 if xflip else 0)
                if pxt_v[i] > 0.0 and _u01(det_v[i], kk * GHZDET_STRIDE + GHZDET_XTALK) < pxt_v[i]:
                    out ^= 1
            elif dark_only:
                out = _bit(det_v[i], kk * GHZDET_STRIDE + GHZDET_DARK_BIT)
            if signal or dark_only:
                cv[i] += 1
            else:
                click_all = False
            row[i] = <unsigned char>out
        if click_all:
            if n_del >= cap:
                delivered = np.concatenate([delivered, np.empty(cap, np.int64)])
                outcomes = np.concatenate([outcomes, np.empty((cap, n), np.uint8)], axis=0)
                cap *= 2
                dv = delivered
                ov = outcomes
            dv[n_del] = k
            for i in range(n):
                ov[n_del, i] = row[i]
            n_del += 1

    return int(n_emitted), delivered[:n_del].copy(), outcomes[:n_del].copy(), counts
