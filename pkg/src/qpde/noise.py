"""Density-matrix simulation of hardware noise, plus zero-noise extrapolation.

The error model is deliberately coarse. Every gate is applied exactly as a
unitary on the density matrix; afterwards each qubit the gate touched is hit
by amplitude damping and pure dephasing for the gate's duration, and
optionally by a depolarizing kick with a per-gate-class probability. Qubits
the gate does not touch idle noiselessly, and readout errors enter only at
sampling time as independent per-bit flips.

Channel conventions, with tau the gate duration:

* amplitude damping with p_ad = 1 - exp(-tau / T1),
* dephasing that multiplies the off-diagonal element by exactly
  1 - p_phi where p_phi = 1 - exp(-tau / Tphi) and
  1 / Tphi = 1 / T2 - 1 / (2 T1).

Composed, a single idle qubit's coherence decays by exp(-tau / T2) and its
excited population by exp(-tau / T1), which is what the two time constants
mean on hardware datasheets. Everything stays dense, so registers are capped
at 8 qubits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numpy.polynomial import polynomial as npoly

from .qsim import Circuit, Gate, QuantumState, _apply_unitary, qft_circuit, run_circuit

NOISY_MAX_QUBITS = 8
DEFAULT_TAU_1Q = 30e-9
DEFAULT_TAU_2Q = 300e-9
ZNE_MODES = ("lsq", "richardson")
ZNE_MAX_DEGREE = 5

_EYE2 = np.eye(2, dtype=np.complex128)
_PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
_PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=np.complex128)
_PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128)


@dataclass(frozen=True)
class NoiseModel:
    """Per-gate thermal relaxation plus optional depolarizing and readout error.

    ``t1`` and ``t2`` are in seconds and apply uniformly to all qubits;
    ``math.inf`` switches the corresponding decay off. ``readout_error`` is a
    2x2 confusion matrix, ``C[i, j] = P(read j | prepared i)``, shared by all
    qubits; ``None`` means ideal readout. ``tau_1q`` / ``tau_2q`` are the
    default gate durations used when a gate carries no explicit ``duration``.
    """

    t1: float
    t2: float
    readout_error: np.ndarray | None = None
    tau_1q: float = DEFAULT_TAU_1Q
    tau_2q: float = DEFAULT_TAU_2Q
    depol_1q: float = 0.0
    depol_2q: float = 0.0

    def __post_init__(self) -> None:
        if math.isnan(self.t1) or self.t1 <= 0.0:
            raise ValueError("T1 must be positive (math.inf disables damping)")
        if math.isnan(self.t2) or self.t2 <= 0.0:
            raise ValueError("T2 must be positive")
        if self.t2 > 2.0 * self.t1:
            raise ValueError("T2 may not exceed 2*T1")
        for name in ("tau_1q", "tau_2q"):
            tau = getattr(self, name)
            if not math.isfinite(tau) or tau < 0.0:
                raise ValueError(f"{name} must be a finite non-negative duration")
        for name in ("depol_1q", "depol_2q"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be a probability")
        if self.readout_error is not None:
            conf = np.asarray(self.readout_error, dtype=np.float64)
            if conf.shape != (2, 2):
                raise ValueError("readout_error must be a 2x2 confusion matrix")
            if not np.all(np.isfinite(conf)) or np.any(conf < 0.0):
                raise ValueError("confusion matrix entries must be finite and >= 0")
            if not np.allclose(conf.sum(axis=1), 1.0, atol=1e-9):
                raise ValueError("confusion matrix rows must each sum to 1")
            conf = conf.copy()
            conf.flags.writeable = False
            object.__setattr__(self, "readout_error", conf)

    @property
    def dephasing_rate(self) -> float:
        """Pure-dephasing rate 1/Tphi; zero when T2 saturates its 2*T1 bound."""
        rate = 1.0 / self.t2 - 0.5 / self.t1
        return max(rate, 0.0)

    def p_amplitude(self, tau: float) -> float:
        return -math.expm1(-tau / self.t1)

    def p_dephasing(self, tau: float) -> float:
        return -math.expm1(-tau * self.dephasing_rate)

    def gate_duration(self, gate: Gate) -> float:
        if gate.duration is not None:
            return gate.duration
        return self.tau_2q if gate.is_two_qubit else self.tau_1q

    def gate_depolarizing(self, gate: Gate) -> float:
        return self.depol_2q if gate.is_two_qubit else self.depol_1q

    @classmethod
    def noiseless(cls) -> "NoiseModel":
        """Model under which run_noisy reproduces the statevector projector."""
        return cls(t1=math.inf, t2=math.inf)

    @classmethod
    def thermal_relaxation(cls, t1: float, t2_ratio: float = 1.0) -> "NoiseModel":
        """Relaxation-only model with T2 = t2_ratio * T1; the extrapolation knob.

        This is the model swept during zero-noise extrapolation runs: readout
        and depolarizing errors stay off so the only scale is 1/T1.
        """
        return cls(t1=t1, t2=t2_ratio * t1)

    @classmethod
    def santiago_like(cls) -> "NoiseModel":
        """Device-flavoured preset: 100 us relaxation, 1% readout, depolarizing."""
        confusion = np.array([[0.99, 0.01], [0.01, 0.99]])
        return cls(
            t1=100e-6,
            t2=100e-6,
            readout_error=confusion,
            depol_1q=5e-4,
            depol_2q=5e-3,
        )


@dataclass(frozen=True)
class DensityState:
    """Immutable n-qubit density matrix, validated on construction.

    The matrix must be Hermitian (to 1e-12), unit trace (to 1e-10) and
    positive semidefinite up to a -1e-10 eigenvalue tolerance.
    """

    n_qubits: int
    matrix: np.ndarray

    def __post_init__(self) -> None:
        if not 1 <= self.n_qubits <= NOISY_MAX_QUBITS:
            raise ValueError(f"n_qubits must be in [1, {NOISY_MAX_QUBITS}]")
        dim = 2**self.n_qubits
        rho = np.asarray(self.matrix, dtype=np.complex128)
        if rho.shape != (dim, dim):
            raise ValueError(f"density matrix shape {rho.shape} does not match {self.n_qubits} qubits")
        if not np.all(np.isfinite(rho.real)) or not np.all(np.isfinite(rho.imag)):
            raise ValueError("density matrix entries must be finite")
        if np.max(np.abs(rho - rho.conj().T)) > 1e-12:
            raise ValueError("density matrix is not Hermitian")
        trace = float(rho.trace().real)
        if abs(trace - 1.0) > 1e-10:
            raise ValueError(f"density matrix trace {trace} is not 1")
        if float(np.linalg.eigvalsh(rho)[0]) < -1e-10:
            raise ValueError("density matrix has a significantly negative eigenvalue")
        rho = rho.copy()
        rho.flags.writeable = False
        object.__setattr__(self, "matrix", rho)

    @staticmethod
    def from_statevector(state: QuantumState) -> "DensityState":
        amps = state.amplitudes
        return DensityState(state.n_qubits, np.outer(amps, amps.conj()))

    @property
    def probabilities(self) -> np.ndarray:
        """Diagonal as a probability vector (clipped at 0 and renormalized)."""
        diag = np.clip(self.matrix.diagonal().real, 0.0, None)
        return diag / diag.sum()

    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))


def _apply_matrix(arr: np.ndarray, n_qubits: int, qubit: int, matrix: np.ndarray) -> np.ndarray:
    """Apply a 2x2 matrix to one qubit along the leading (length 2^n) axis."""
    dim = 2**n_qubits
    tail = arr.shape[1:]
    t = arr.reshape((2,) * n_qubits + tail)
    t = np.moveaxis(t, qubit, 0)
    kept = t.shape
    t = matrix @ t.reshape(2, -1)
    t = np.moveaxis(t.reshape(kept), 0, qubit)
    return t.reshape((dim,) + tail)


def _sandwich(rho: np.ndarray, n_qubits: int, qubit: int, kraus: np.ndarray) -> np.ndarray:
    """K rho K^dagger for a single-qubit Kraus operator K."""
    out = _apply_matrix(rho, n_qubits, qubit, kraus)
    return _apply_matrix(out.T, n_qubits, qubit, kraus.conj()).T


def _apply_kraus(rho: np.ndarray, n_qubits: int, qubit: int, kraus_ops: "list[np.ndarray]") -> np.ndarray:
    out = _sandwich(rho, n_qubits, qubit, kraus_ops[0])
    for kraus in kraus_ops[1:]:
        out = out + _sandwich(rho, n_qubits, qubit, kraus)
    return out


def _amplitude_damping_kraus(p: float) -> "list[np.ndarray]":
    k0 = np.array([[1.0, 0.0], [0.0, math.sqrt(1.0 - p)]], dtype=np.complex128)
    k1 = np.array([[0.0, math.sqrt(p)], [0.0, 0.0]], dtype=np.complex128)
    return [k0, k1]


def _dephasing_kraus(p: float) -> "list[np.ndarray]":
    # Phase flip with probability p/2 scales the coherence by exactly 1 - p.
    q = 0.5 * p
    return [math.sqrt(1.0 - q) * _EYE2, math.sqrt(q) * _PAULI_Z]


def _depolarizing_kraus(p: float) -> "list[np.ndarray]":
    # rho -> (1 - p) rho + p I/2, i.e. full depolarization with probability p.
    w = math.sqrt(p / 4.0)
    return [math.sqrt(1.0 - 0.75 * p) * _EYE2, w * _PAULI_X, w * _PAULI_Y, w * _PAULI_Z]


def _conjugated(gate: Gate) -> Gate:
    """Gate whose matrix is the elementwise conjugate of ``gate``'s matrix."""
    if gate.kind == "cphase":
        return replace(gate, angle=-gate.angle)
    return gate


def _evolve_unitary(rho: np.ndarray, n_qubits: int, gate: Gate) -> np.ndarray:
    """U rho U^dagger via two one-sided applications."""
    out = _apply_unitary(rho, n_qubits, gate)
    return _apply_unitary(out.T, n_qubits, _conjugated(gate)).T


def run_noisy(
    circuit: Circuit,
    noise_model: NoiseModel,
    initial: "QuantumState | DensityState | None" = None,
) -> DensityState:
    """Run a circuit under the noise model and return the final density matrix.

    Parameters
    ----------
    circuit : Circuit
        Gate sequence; at most ``NOISY_MAX_QUBITS`` qubits.
    noise_model : NoiseModel
        Supplies T1/T2, per-class gate durations and depolarizing strengths.
        Readout error is not applied here; it belongs to ``measure_noisy``.
    initial : QuantumState | DensityState | None
        Starting state; ``None`` means the all-zeros register.

    Returns
    -------
    DensityState
    """
    n = circuit.n_qubits
    if n > NOISY_MAX_QUBITS:
        raise ValueError(f"density-matrix path is limited to {NOISY_MAX_QUBITS} qubits")
    if initial is None:
        initial = QuantumState.zero(n)
    if initial.n_qubits != n:
        raise ValueError("initial state and circuit have different register widths")
    if isinstance(initial, DensityState):
        rho = np.array(initial.matrix)
    else:
        rho = np.outer(initial.amplitudes, initial.amplitudes.conj())

    for gate in circuit.gates:
        rho = _evolve_unitary(rho, n, gate)
        tau = noise_model.gate_duration(gate)
        p_ad = noise_model.p_amplitude(tau)
        p_phi = noise_model.p_dephasing(tau)
        p_dep = noise_model.gate_depolarizing(gate)
        for q in gate.qubits:
            if p_ad > 0.0:
                rho = _apply_kraus(rho, n, q, _amplitude_damping_kraus(p_ad))
            if p_phi > 0.0:
                rho = _apply_kraus(rho, n, q, _dephasing_kraus(p_phi))
            if p_dep > 0.0:
                rho = _apply_kraus(rho, n, q, _depolarizing_kraus(p_dep))

    rho = 0.5 * (rho + rho.conj().T)
    return DensityState(n, rho)


def measure_noisy(
    state: DensityState,
    readout_error: np.ndarray | None,
    shots: int,
    rng_seed: int,
) -> np.ndarray:
    """Sample the diagonal of a density matrix through a readout confusion.

    Outcomes are drawn from the diagonal first; each bit of each shot is then
    flipped independently with the confusion matrix's off-diagonal
    probabilities. With ``readout_error=None`` this reduces to plain diagonal
    sampling with the same random stream as ``qsim.sample``.

    Returns
    -------
    np.ndarray
        int64 histogram over all 2^n outcomes.
    """
    if shots <= 0:
        raise ValueError("shots must be positive")
    rng = np.random.default_rng(rng_seed)
    counts = rng.multinomial(shots, state.probabilities).astype(np.int64)
    if readout_error is None:
        return counts

    conf = np.asarray(readout_error, dtype=np.float64)
    if conf.shape != (2, 2):
        raise ValueError("readout_error must be a 2x2 confusion matrix")
    if not np.allclose(conf.sum(axis=1), 1.0, atol=1e-9):
        raise ValueError("confusion matrix rows must each sum to 1")
    p_read1_given0 = conf[0, 1]
    p_read0_given1 = conf[1, 0]

    n = state.n_qubits
    dim = 2**n
    outcomes = np.repeat(np.arange(dim), counts)
    positions = np.arange(n)
    bits = (outcomes[:, None] >> positions) & 1
    p_flip = np.where(bits == 1, p_read0_given1, p_read1_given0)
    flips = rng.random(bits.shape) < p_flip
    reported = ((bits ^ flips) << positions).sum(axis=1)
    return np.bincount(reported, minlength=dim).astype(np.int64)


def circuit_fidelity_probe(
    circuit: Circuit,
    noise_model: NoiseModel,
    target_state: QuantumState | None = None,
) -> "tuple[float, float]":
    """Fidelity of the noisy output in the position and momentum bases.

    Returns ``(f_x, f_p)`` where ``f_x`` is the overlap of the noisy density
    matrix with the ideal circuit output and ``f_p`` is the same overlap after
    appending the QFT (which itself runs noisily, so ``f_p <= f_x`` whenever
    the model actually decoheres). ``target_state`` overrides the ideal
    reference; by default it is the noiseless statevector of ``circuit``.
    """
    n = circuit.n_qubits
    if target_state is None:
        target_state = run_circuit(circuit, QuantumState.zero(n))
    elif target_state.n_qubits != n:
        raise ValueError("target state and circuit have different register widths")

    rho_x = run_noisy(circuit, noise_model)
    psi = target_state.amplitudes
    f_x = float(np.real(psi.conj() @ (rho_x.matrix @ psi)))

    qft = qft_circuit(n)
    psi_p = run_circuit(qft, target_state).amplitudes
    rho_p = run_noisy(circuit.extended(qft), noise_model)
    f_p = float(np.real(psi_p.conj() @ (rho_p.matrix @ psi_p)))
    return f_x, f_p


@dataclass(frozen=True)
class ZneFit:
    """Polynomial fit of energy against 1/T1 with its zero-noise intercept."""

    value: float
    coefficients: np.ndarray
    residual: float
    degree: int
    mode: str

    def __post_init__(self) -> None:
        coeffs = np.asarray(self.coefficients, dtype=np.float64).copy()
        coeffs.flags.writeable = False
        object.__setattr__(self, "coefficients", coeffs)

    def to_dict(self) -> dict:
        return {
            "e0": self.value,
            "coefficients": [float(c) for c in self.coefficients],
            "residual": self.residual,
            "degree": self.degree,
            "mode": self.mode,
        }


def zne_extrapolate(
    points: "list[tuple[float, float]]",
    degree: int | None = None,
    mode: str = "lsq",
) -> ZneFit:
    """Extrapolate measured energies to the zero-noise (infinite T1) limit.

    Fits ``E(lambda) = c0 + c1 lambda + ... + c_d lambda^d`` with
    ``lambda = 1/T1`` by unweighted least squares and returns the intercept
    ``c0``. In ``"richardson"`` mode the degree is forced to
    ``len(points) - 1`` so the polynomial interpolates every point exactly.

    Parameters
    ----------
    points : list of (t1_seconds, mean_energy)
        At least ``degree + 1`` entries with pairwise distinct T1 values.
    degree : int | None
        Polynomial degree, at most ``ZNE_MAX_DEGREE``; ``None`` picks
        ``min(3, len(points) - 1)`` in lsq mode.
    mode : str
        ``"lsq"`` or ``"richardson"``.
    """
    if mode not in ZNE_MODES:
        raise ValueError(f"mode must be one of {ZNE_MODES}")
    t1s = np.array([float(t) for t, _ in points], dtype=np.float64)
    energies = np.array([float(e) for _, e in points], dtype=np.float64)
    if t1s.size < 2:
        raise ValueError("extrapolation needs at least two (T1, energy) points")
    if not np.all(np.isfinite(t1s)) or np.any(t1s <= 0.0):
        raise ValueError("T1 values must be finite and positive")
    if not np.all(np.isfinite(energies)):
        raise ValueError("energies must be finite")
    if np.unique(t1s).size != t1s.size:
        raise ValueError("duplicate T1 values make the fit degenerate")

    if mode == "richardson":
        forced = t1s.size - 1
        if degree is not None and degree != forced:
            raise ValueError("richardson mode fixes degree to len(points) - 1")
        degree = forced
    elif degree is None:
        degree = min(3, t1s.size - 1)
    if degree < 1:
        raise ValueError("degree must be at least 1")
    if degree > ZNE_MAX_DEGREE:
        raise ValueError(f"degree must be at most {ZNE_MAX_DEGREE}")
    if t1s.size < degree + 1:
        raise ValueError(f"degree {degree} needs at least {degree + 1} points")

    lam = 1.0 / t1s
    coeffs = npoly.polyfit(lam, energies, degree)
    fitted = npoly.polyval(lam, coeffs)
    residual = float(np.sqrt(np.mean((energies - fitted) ** 2)))
    return ZneFit(
        value=float(coeffs[0]),
        coefficients=coeffs,
        residual=residual,
        degree=int(degree),
        mode=mode,
    )
