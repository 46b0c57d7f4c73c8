"""Fixed per-timestep draw layout shared by the pure and compiled kernels.

Every stream consumes a fixed number of counter slots per source timestep,
whether or not a draw is needed; unneeded slots are simply never evaluated
(the counter-based generator makes skipping free).  Both kernel backends
therefore produce bit-identical outputs for identical inputs.

Stream roles and strides:

  SRC   (single-qubit source + its outgoing fiber hop), stride 6:
        0 EMIT, 1 BIT, 2 BASIS, 3 FLIP, 4 HOP_SURV, 5 HOP_DEPH
  MID   (relay: routing switch + second fiber hop), stride 3:
        0 SWITCH, 1 HOP_SURV, 2 HOP_DEPH
  DET   (measuring node), stride 6:
        0 DARK, 1 DARK_BIT, 2 BASIS, 3 DET, 4 XTALK, 5 COIN
  EPR   (pair source + both fiber hops), stride 6:
        0 EMIT, 1 SHARED, 2 A_SURV, 3 A_DEPH, 4 B_SURV, 5 B_DEPH
  BSM   (measurement relay), stride 1:
        0 BSM
  GHZSRC (n-qubit source + all fiber hops), stride 2 + 4n:
        0 EMIT, 1 SHARED, then per arm i:
        2+4i SURV, 3+4i DEPH, 4+4i DEPOL_EVT, 5+4i DEPOL_PAULI
  GHZDET (fixed Z-basis detector), stride 4:
        0 DARK, 1 DARK_BIT, 2 DET, 3 XTALK

Bit convention everywhere: a uniform u in [0,1) maps to bit 0 when u < 0.5.
Basis encoding: 0 = Z, 1 = X.  Click kinds: 1 signal, 2 dark, 3 double
(discarded).
"""

SRC_STRIDE = 6
SRC_EMIT, SRC_BIT, SRC_BASIS, SRC_FLIP, SRC_SURV, SRC_DEPH = range(6)

MID_STRIDE = 3
MID_SWITCH, MID_SURV, MID_DEPH = range(3)

DET_STRIDE = 6
DET_DARK, DET_DARK_BIT, DET_BASIS, DET_DET, DET_XTALK, DET_COIN = range(6)

EPR_STRIDE = 6
EPR_EMIT, EPR_SHARED, EPR_A_SURV, EPR_A_DEPH, EPR_B_SURV, EPR_B_DEPH = range(6)

BSM_STRIDE = 1
BSM_DRAW = 0

GHZDET_STRIDE = 4
GHZDET_DARK, GHZDET_DARK_BIT, GHZDET_DET, GHZDET_XTALK = range(4)

GHZSRC_FIXED = 2  # EMIT, SHARED
GHZSRC_PER_ARM = 4  # SURV, DEPH, DEPOL_EVT, DEPOL_PAULI

KIND_SIGNAL = 1
KIND_DARK = 2
KIND_DOUBLE = 3


def ghz_src_stride(n_arms: int) -> int:
    return GHZSRC_FIXED + GHZSRC_PER_ARM * n_arms


LAYOUT_VERSION = 1
