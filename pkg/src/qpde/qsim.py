"""Dense statevector simulation for a small, fixed gate set.

Basis convention: qubit 0 is the MOST significant bit of the basis index,
so a register |s_0 s_1 ... s_{n-1}> has index s = sum_k s_k 2^{n-1-k}.
The simulator is deliberately minimal: RY, X, H, CPhase, CNOT and SWAP are
the only gates, states are immutable, and everything stays dense (n <= 14).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MAX_QUBITS = 14

_ONE_QUBIT_KINDS = ("ry", "x", "h")
_TWO_QUBIT_KINDS = ("cphase", "cnot", "swap")


@dataclass(frozen=True)
class Gate:
    """One gate of the supported set.

    ``control`` is required for the two-qubit kinds; for ``swap`` the
    control/target slots are symmetric. ``angle`` is only meaningful for
    ``ry`` and ``cphase``. ``duration`` (seconds) is ignored by the
    statevector path and consumed by the noise module; ``None`` means
    "use the noise model's default for this gate class".
    """

    kind: str
    target: int
    control: int | None = None
    angle: float = 0.0
    duration: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in _ONE_QUBIT_KINDS + _TWO_QUBIT_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.kind in _TWO_QUBIT_KINDS:
            if self.control is None:
                raise ValueError(f"{self.kind} gate needs a control qubit")
            if self.control == self.target:
                raise ValueError("control and target must differ")
        elif self.control is not None:
            raise ValueError(f"{self.kind} gate takes no control qubit")
        if not math.isfinite(self.angle):
            raise ValueError("gate angle must be finite")

    @property
    def qubits(self) -> tuple[int, ...]:
        if self.control is None:
            return (self.target,)
        return (self.control, self.target)

    @property
    def is_two_qubit(self) -> bool:
        return self.kind in _TWO_QUBIT_KINDS


def ry(target: int, angle: float, duration: float | None = None) -> Gate:
    return Gate("ry", target, angle=angle, duration=duration)


def x(target: int) -> Gate:
    return Gate("x", target)


def h(target: int) -> Gate:
    return Gate("h", target)


def cphase(angle: float, control: int, target: int) -> Gate:
    return Gate("cphase", target, control=control, angle=angle)


def cnot(control: int, target: int) -> Gate:
    return Gate("cnot", target, control=control)


def swap(a: int, b: int) -> Gate:
    return Gate("swap", b, control=a)


@dataclass(frozen=True)
class Circuit:
    """An ordered gate list over a fixed-width register."""

    n_qubits: int
    gates: tuple[Gate, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ValueError(f"n_qubits must be in [1, {MAX_QUBITS}]")
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            for q in g.qubits:
                if not 0 <= q < self.n_qubits:
                    raise ValueError(
                        f"gate {g.kind} on qubit {q} outside register of width {self.n_qubits}"
                    )

    def __len__(self) -> int:
        return len(self.gates)

    def extended(self, other: "Circuit") -> "Circuit":
        """Concatenate with another circuit on the same register."""
        if other.n_qubits != self.n_qubits:
            raise ValueError("cannot concatenate circuits of different widths")
        return Circuit(self.n_qubits, self.gates + other.gates)


@dataclass(frozen=True)
class QuantumState:
    """Immutable n-qubit statevector (complex amplitudes, length 2^n)."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (2**self.n_qubits,):
            raise ValueError(
                f"amplitude vector of shape {amps.shape} does not match {self.n_qubits} qubits"
            )
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @staticmethod
    def zero(n_qubits: int) -> "QuantumState":
        return QuantumState.basis(n_qubits, 0)

    @staticmethod
    def basis(n_qubits: int, index: int) -> "QuantumState":
        if not 0 <= index < 2**n_qubits:
            raise ValueError("basis index out of range")
        amps = np.zeros(2**n_qubits, dtype=np.complex128)
        amps[index] = 1.0
        return QuantumState(n_qubits, amps)

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def _gate_matrix(gate: Gate) -> np.ndarray:
    if gate.kind == "ry":
        c, s = math.cos(gate.angle / 2.0), math.sin(gate.angle / 2.0)
        return np.array([[c, -s], [s, c]], dtype=np.complex128)
    if gate.kind == "x":
        return np.array([[0, 1], [1, 0]], dtype=np.complex128)
    if gate.kind == "h":
        r = 1.0 / math.sqrt(2.0)
        return np.array([[r, r], [r, -r]], dtype=np.complex128)
    raise ValueError(f"{gate.kind} has no dense 2x2 matrix")


def _apply_unitary(arr: np.ndarray, n_qubits: int, gate: Gate) -> np.ndarray:
    """Apply ``gate`` along the first (length 2^n) axis of ``arr``.

    Used with a vector this is plain statevector evolution; used with a
    matrix it applies U to the column index, which the noise module turns
    into U rho U^dagger with two calls.
    """
    for q in gate.qubits:
        if not 0 <= q < n_qubits:
            raise ValueError(f"qubit index {q} out of range for {n_qubits} qubits")
    dim = 2**n_qubits
    if arr.shape[0] != dim:
        raise ValueError("array leading dimension does not match qubit count")
    idx = np.arange(dim)

    if not gate.is_two_qubit:
        # Reshape so the target qubit is its own axis; qubit 0 is the most
        # significant bit, so axis k of the (2,)*n view is qubit k.
        tail = arr.shape[1:]
        psi = arr.reshape((2,) * n_qubits + tail)
        psi = np.moveaxis(psi, gate.target, 0)
        kept = psi.shape
        psi = _gate_matrix(gate) @ psi.reshape(2, -1)
        psi = np.moveaxis(psi.reshape(kept), 0, gate.target)
        return np.ascontiguousarray(psi.reshape((dim,) + tail))

    c_bit = 1 << (n_qubits - 1 - gate.control)
    t_bit = 1 << (n_qubits - 1 - gate.target)
    if gate.kind == "cphase":
        out = arr.copy()
        sel = (idx & c_bit).astype(bool) & (idx & t_bit).astype(bool)
        out[sel] = out[sel] * np.exp(1j * gate.angle)
        return out
    if gate.kind == "cnot":
        perm = np.where(idx & c_bit, idx ^ t_bit, idx)
        return arr[perm]
    # swap: exchange the two bits wherever they differ
    differ = ((idx & c_bit) != 0) != ((idx & t_bit) != 0)
    perm = np.where(differ, idx ^ (c_bit | t_bit), idx)
    return arr[perm]


def apply_gate(state: QuantumState, gate: Gate) -> QuantumState:
    """Return U_gate |state>.

    Parameters
    ----------
    state : QuantumState
    gate : Gate
        Gate whose qubit indices must fit the state's register.

    Returns
    -------
    QuantumState
        New state; the input is left untouched.
    """
    amps = _apply_unitary(state.amplitudes, state.n_qubits, gate)
    return QuantumState(state.n_qubits, amps)


def run_circuit(circuit: Circuit, initial: QuantumState) -> QuantumState:
    """Apply all gates of ``circuit`` to ``initial`` in order."""
    if circuit.n_qubits != initial.n_qubits:
        raise ValueError("circuit and state have different register widths")
    amps = initial.amplitudes
    for gate in circuit.gates:
        amps = _apply_unitary(amps, circuit.n_qubits, gate)
    return QuantumState(circuit.n_qubits, amps)


def qft_circuit(n_qubits: int, qubits: "tuple[int, ...] | None" = None) -> Circuit:
    """Build the QFT as a gate circuit on a contiguous sub-register.

    The unitary restricted to the sub-register is the plain DFT
    |r> -> 2^{-k/2} sum_s exp(+i 2 pi r s / 2^k) |s> (k = sub-register
    size), i.e. the final SWAP layer that undoes the bit reversal is
    included. With no ``qubits`` argument the whole register is
    transformed.

    Parameters
    ----------
    n_qubits : int
        Width of the full register the circuit acts on.
    qubits : tuple of int, optional
        Contiguous, increasing qubit indices forming the sub-register.

    Returns
    -------
    Circuit
    """
    if qubits is None:
        qubits = tuple(range(n_qubits))
    else:
        qubits = tuple(qubits)
    if len(qubits) == 0:
        raise ValueError("QFT needs a non-empty sub-register")
    if list(qubits) != list(range(qubits[0], qubits[0] + len(qubits))):
        raise ValueError("QFT sub-register must be contiguous and increasing")
    k = len(qubits)
    gates: list[Gate] = []
    for j in range(k):
        gates.append(h(qubits[j]))
        for l in range(j + 1, k):
            gates.append(cphase(2.0 * math.pi / 2 ** (l - j + 1), qubits[l], qubits[j]))
    for i in range(k // 2):
        gates.append(swap(qubits[i], qubits[k - 1 - i]))
    return Circuit(n_qubits, tuple(gates))


def inverse_circuit(circuit: Circuit) -> Circuit:
    """Exact inverse: reversed gate order with negated angles."""
    inv = []
    for g in reversed(circuit.gates):
        if g.kind in ("ry", "cphase"):
            inv.append(Gate(g.kind, g.target, control=g.control, angle=-g.angle,
                            duration=g.duration))
        else:
            inv.append(g)
    return Circuit(circuit.n_qubits, tuple(inv))


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    """Dense unitary of the circuit (small registers; used by tests)."""
    dim = 2**circuit.n_qubits
    mat = np.eye(dim, dtype=np.complex128)
    for gate in circuit.gates:
        mat = _apply_unitary(mat, circuit.n_qubits, gate)
    return mat


def sample(state: QuantumState, shots: int, rng_seed: int) -> np.ndarray:
    """Sample computational-basis outcomes.

    Parameters
    ----------
    state : QuantumState
    shots : int
        Number of measurements, >= 1.
    rng_seed : int
        Seed for the generator; identical seeds give identical histograms.

    Returns
    -------
    numpy.ndarray
        Integer counts per basis index, length 2^n, summing to ``shots``.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    probs = state.probabilities
    total = probs.sum()
    if not math.isfinite(total) or total <= 0.0:
        raise ValueError("state has no sampleable probability mass")
    rng = np.random.default_rng(rng_seed)
    return rng.multinomial(shots, probs / total)


def expectation_diagonal(state: QuantumState, diag: np.ndarray) -> float:
    """Exact <state| diag(d) |state> for a real diagonal observable."""
    diag = np.asarray(diag, dtype=np.float64)
    if diag.shape != state.amplitudes.shape:
        raise ValueError("diagonal length does not match state dimension")
    return float(np.dot(state.probabilities, diag))
