"""Dense density-operator backend (reference semantics, up to 8 qubits).

Qubit 0 is the first tensor factor (most significant index bit).  All
channels are trace preserving; invariants (trace 1, Hermitian, positive)
are checked by the test suite after every channel application.
"""

import numpy as np

from ..engine import RngStream
from ..errors import (
    AlreadyMeasuredError,
    BadProbabilityError,
    UnsupportedWidthError,
)
from .common import Basis, BellLabel, Gate

MAX_QUBITS = 8

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_S = np.array([[1, 0], [0, 1j]], dtype=complex)
_SX = 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]], dtype=complex)
_I = np.eye(2, dtype=complex)

GATE_MATRICES = {Gate.H: _H, Gate.X: _X, Gate.Z: _Z, Gate.SX: _SX}

# Basis-change unitaries: measuring basis B equals applying U† then measuring Z,
# i.e. outcome y projects onto U|y>.
_BASIS_U = {Basis.Z: _I, Basis.X: _H, Basis.Y: _S @ _H}

# Bell vectors indexed by label.
BELL_VECTORS = {
    BellLabel.PHI_PLUS: np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2),
    BellLabel.PHI_MINUS: np.array([1, 0, 0, -1], dtype=complex) / np.sqrt(2),
    BellLabel.PSI_PLUS: np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2),
    BellLabel.PSI_MINUS: np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2),
}


def _check_probability(p):
    if not 0.0 <= p <= 1.0:
        raise BadProbabilityError(f"probability {p!r} outside [0, 1]")


class DenseState:
    """An n-qubit density operator with per-qubit channel/measurement ops."""

    def __init__(self, matrix: np.ndarray, qubit_count: int):
        if qubit_count > MAX_QUBITS:
            raise UnsupportedWidthError(f"dense backend capped at {MAX_QUBITS} qubits")
        self.qubit_count = qubit_count
        self.matrix = np.asarray(matrix, dtype=complex)
        self.measured: set[int] = set()
        assert self.matrix.shape == (2**qubit_count, 2**qubit_count)

    @classmethod
    def from_vector(cls, vec: np.ndarray) -> "DenseState":
        vec = np.asarray(vec, dtype=complex)
        n = int(np.log2(vec.size))
        return cls(np.outer(vec, vec.conj()), n)

    # -- constructors ------------------------------------------------------

    @classmethod
    def bb84(cls, bit: int, basis: Basis) -> "DenseState":
        vec = payload_vector(bit, basis)
        return cls.from_vector(vec)

    @classmethod
    def epr_psi_minus(cls) -> "DenseState":
        return cls.from_vector(BELL_VECTORS[BellLabel.PSI_MINUS])

    @classmethod
    def ghz(cls, n: int) -> "DenseState":
        if not 3 <= n <= 6:
            raise UnsupportedWidthError(f"GHZ width {n} outside 3..6")
        vec = np.zeros(2**n, dtype=complex)
        vec[0] = vec[-1] = 1 / np.sqrt(2)
        return cls.from_vector(vec)

    # -- internals ---------------------------------------------------------

    def _op_on(self, qubit: int, u: np.ndarray) -> np.ndarray:
        """Expand a single-qubit operator to the full Hilbert space."""
        ops = [u if q == qubit else _I for q in range(self.qubit_count)]
        full = ops[0]
        for op in ops[1:]:
            full = np.kron(full, op)
        return full

    def _apply_kraus(self, qubit: int, kraus: list[tuple[float, np.ndarray]]):
        out = np.zeros_like(self.matrix)
        for weight, k in kraus:
            full = self._op_on(qubit, k)
            out += weight * (full @ self.matrix @ full.conj().T)
        self.matrix = out

    # -- operations --------------------------------------------------------

    def apply_gate(self, qubit: int, gate: Gate):
        u = self._op_on(qubit, GATE_MATRICES[gate])
        self.matrix = u @ self.matrix @ u.conj().T

    def apply_depolarize(self, qubit: int, lambda1: float):
        """rho -> lambda1*rho + (1-lambda1) * I/2 on the qubit's marginal."""
        _check_probability(lambda1)
        w = (1.0 - lambda1) / 4.0
        self._apply_kraus(
            qubit,
            [(lambda1 + w, _I), (w, _X), (w, _Y), (w, _Z)],
        )

    def apply_dephase(self, qubit: int, p_flip: float):
        """rho -> (1-p)*rho + p * Z rho Z on the qubit."""
        _check_probability(p_flip)
        self._apply_kraus(qubit, [(1.0 - p_flip, _I), (p_flip, _Z)])

    def measure(self, qubit: int, basis: Basis, rng: RngStream) -> int:
        if qubit in self.measured:
            raise AlreadyMeasuredError(f"qubit {qubit} already measured")
        u = _BASIS_U[basis]
        p = []
        projs = []
        for y in (0, 1):
            v = u[:, y]
            proj = self._op_on(qubit, np.outer(v, v.conj()))
            projs.append(proj)
            p.append(float(np.real(np.trace(proj @ self.matrix))))
        p0 = min(max(p[0], 0.0), 1.0)
        outcome = 0 if rng.random() < p0 else 1
        proj = projs[outcome]
        norm = p[outcome] if p[outcome] > 0 else 1.0
        self.matrix = proj @ self.matrix @ proj / norm
        self.measured.add(qubit)
        return outcome

    def outcome_distribution(self, bases: dict[int, Basis]) -> dict[tuple[int, ...], float]:
        """Exact joint Born distribution of measuring the given qubits."""
        qubits = sorted(bases)
        rho = self.matrix
        for q in qubits:
            u = self._op_on(q, _BASIS_U[bases[q]].conj().T)
            rho = u @ rho @ u.conj().T
        diag = np.real(np.diag(rho))
        dist: dict[tuple[int, ...], float] = {}
        n = self.qubit_count
        for idx in range(2**n):
            outcome = tuple((idx >> (n - 1 - q)) & 1 for q in qubits)
            dist[outcome] = dist.get(outcome, 0.0) + float(diag[idx])
        return dist

    def bsm(self, qubit_a: int, qubit_b: int, rng: RngStream) -> BellLabel:
        """Projective Bell-basis measurement of two qubits."""
        for q in (qubit_a, qubit_b):
            if q in self.measured:
                raise AlreadyMeasuredError(f"qubit {q} already measured")
        probs = []
        projs = []
        for label in BellLabel:
            proj = self._pair_projector(qubit_a, qubit_b, BELL_VECTORS[label])
            projs.append((label, proj))
            probs.append(float(np.real(np.trace(proj @ self.matrix))))
        u = rng.random()
        acc = 0.0
        pick = len(probs) - 1
        for i, pr in enumerate(probs):
            acc += max(pr, 0.0)
            if u < acc:
                pick = i
                break
        label, proj = projs[pick]
        norm = probs[pick] if probs[pick] > 0 else 1.0
        self.matrix = proj @ self.matrix @ proj / norm
        self.measured.update((qubit_a, qubit_b))
        return label

    def _pair_projector(self, qa: int, qb: int, vec: np.ndarray) -> np.ndarray:
        n = self.qubit_count
        full = np.zeros((2**n, 2**n), dtype=complex)
        pair_proj = np.outer(vec, vec.conj())
        # Embed the two-qubit projector: iterate basis states of the pair.
        for i in range(2**n):
            for j in range(2**n):
                ia = (i >> (n - 1 - qa)) & 1
                ib = (i >> (n - 1 - qb)) & 1
                ja = (j >> (n - 1 - qa)) & 1
                jb = (j >> (n - 1 - qb)) & 1
                rest_i = i & ~((1 << (n - 1 - qa)) | (1 << (n - 1 - qb)))
                rest_j = j & ~((1 << (n - 1 - qa)) | (1 << (n - 1 - qb)))
                if rest_i == rest_j:
                    full[i, j] = pair_proj[2 * ia + ib, 2 * ja + jb]
        return full

    # -- inspection --------------------------------------------------------

    def marginal(self, keep: list[int]) -> np.ndarray:
        """Partial trace keeping the listed qubits (in the given order)."""
        n = self.qubit_count
        t = self.matrix.reshape((2,) * (2 * n))
        cur = n
        for q in sorted((q for q in range(n) if q not in keep), reverse=True):
            t = np.trace(t, axis1=q, axis2=cur + q)
            cur -= 1
        k = len(keep)
        out = t.reshape((2**k, 2**k))
        keep_sorted = sorted(keep)
        if keep_sorted != list(keep):
            perm = [keep_sorted.index(q) for q in keep]
            tt = out.reshape((2,) * (2 * k))
            tt = np.transpose(tt, perm + [k + p for p in perm])
            out = tt.reshape((2**k, 2**k))
        return out

    def trace_error(self) -> float:
        return abs(float(np.real(np.trace(self.matrix))) - 1.0)

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def min_eigenvalue(self) -> float:
        return float(np.min(np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))))

    def fidelity_with_vector(self, vec: np.ndarray) -> float:
        vec = np.asarray(vec, dtype=complex)
        return float(np.real(vec.conj() @ self.matrix @ vec))


def payload_vector(bit: int, basis: Basis) -> np.ndarray:
    if basis == Basis.Z:
        v = np.zeros(2, dtype=complex)
        v[bit] = 1.0
    else:
        v = np.array([1.0, -1.0 if bit else 1.0], dtype=complex) / np.sqrt(2)
    return v


def nearest_bell_fidelity(rho_pair: np.ndarray) -> tuple[float, BellLabel]:
    """Max fidelity of a two-qubit density matrix with the four Bell states."""
    best, best_label = -1.0, BellLabel.PHI_PLUS
    for label, vec in BELL_VECTORS.items():
        f = float(np.real(vec.conj() @ rho_pair @ vec))
        if f > best:
            best, best_label = f, label
    return best, best_label
