"""Benchmark eigenproblems and energy estimation.

Each problem is a one-dimensional stationary Schrodinger-type operator
split as H = D(p) + V(x), with both terms diagonal in the momentum and
position registers respectively. The quantum estimate of an energy is
the sum of two expectation values: V over samples of the prepared state
and D over samples of its Fourier transform, matching how the circuits
measure it. The classical reference diagonalizes the same operator as a
dense matrix, with the kinetic term built from the identical Fourier
symbol, so grid-level quantities (eigenvalues, fidelity targets) agree
with the circuit path to round-off rather than to discretization error.

Problems:

* ``harmonic_oscillator``: V = m w^2 x^2 / 2, D = hbar^2 p^2 / 2m, on a
  window of length sqrt(2 pi 2^n) (times the oscillator length, which is
  1 at the default parameters), chosen to balance position and momentum
  resolution.
* ``transmon``: V = -E_J cos(phi), D = 4 E_C p^2 on the fixed window
  [-pi, pi), E_C = E_J / 50.
* ``flux_qubit``: V = -E_J (2 cos(phi) - alpha cos(2 phi)),
  D = E_C p^2 / (1/2 + alpha), same window, alpha = 0.7. The potential
  is a double well with minima at cos(phi) = 1/(2 alpha).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.linalg import eigh

from .fourier import Grid
from .qsim import (
    QuantumState,
    expectation_diagonal,
    qft_circuit,
    run_circuit,
    sample,
)

PROBLEM_NAMES = ("harmonic_oscillator", "transmon", "flux_qubit")

# Dense diagonalization cap; 2^12 x 2^12 is the largest matrix the
# reference path is asked to handle.
REFERENCE_MAX_QUBITS = 12


@dataclass(frozen=True)
class Problem:
    """A benchmark eigenproblem with its physical parameters.

    The fields not used by a given problem keep their defaults and are
    ignored; the benchmarks all run at the published parameter point
    (unit HO constants, E_C = E_J / 50, alpha = 0.7).
    """

    name: str
    mass: float = 1.0
    omega: float = 1.0
    hbar: float = 1.0
    e_j: float = 1.0
    e_c: float = 0.02
    alpha: float = 0.7

    def __post_init__(self) -> None:
        if self.name not in PROBLEM_NAMES:
            raise ValueError(f"unknown problem {self.name!r}; expected one of {PROBLEM_NAMES}")

    def grid(self, n_qubits: int) -> Grid:
        """The canonical grid at a given register width.

        The oscillator window grows as sqrt(2 pi 2^n) so that position
        and momentum are resolved equally well; the circuit problems
        live on the fixed phase window [-pi, pi), whose length is not
        ours to choose. Both use symmetric centering, which the
        even/odd ansatz wrapper requires.
        """
        if self.name == "harmonic_oscillator":
            scale = math.sqrt(self.hbar / (self.mass * self.omega))
            half = 0.5 * scale * math.sqrt(2.0 * math.pi * 2**n_qubits)
            return Grid(-half, half, n_qubits, "symmetric")
        return Grid(-math.pi, math.pi, n_qubits, "symmetric")

    def potential(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.name == "harmonic_oscillator":
            return 0.5 * self.mass * self.omega**2 * x**2
        if self.name == "transmon":
            return -self.e_j * np.cos(x)
        return -self.e_j * (2.0 * np.cos(x) - self.alpha * np.cos(2.0 * x))

    def kinetic_symbol(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if self.name == "harmonic_oscillator":
            return self.hbar**2 * p**2 / (2.0 * self.mass)
        if self.name == "transmon":
            return 4.0 * self.e_c * p**2
        return self.e_c * p**2 / (0.5 + self.alpha)


HARMONIC_OSCILLATOR = Problem("harmonic_oscillator")
TRANSMON = Problem("transmon")
FLUX_QUBIT = Problem("flux_qubit")


def problem_from_name(name: str) -> Problem:
    return Problem(name.lower())


@dataclass(frozen=True)
class Hamiltonian:
    """Diagonal representations of one problem on one grid."""

    grid: Grid
    v_diag: np.ndarray
    d_diag: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.v_diag, dtype=float)
        d = np.asarray(self.d_diag, dtype=float)
        if v.shape != (self.grid.n_points,) or d.shape != (self.grid.n_points,):
            raise ValueError("diagonals must match the grid size")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(d))):
            raise ValueError("diagonals must be finite")
        v.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "v_diag", v)
        object.__setattr__(self, "d_diag", d)

    @property
    def n_qubits(self) -> int:
        return self.grid.n_qubits


@dataclass(frozen=True)
class EnergyEstimate:
    """An energy split into its position and momentum contributions.

    ``shots_per_term`` is the number of measurement shots spent on each
    of the two expectation circuits; 0 marks an exact statevector value.
    """

    value: float
    v_part: float
    d_part: float
    shots_per_term: int

    def __post_init__(self) -> None:
        if self.shots_per_term < 0:
            raise ValueError("shots_per_term must be >= 0")
        parts = self.v_part + self.d_part
        if abs(self.value - parts) > 1e-12 * max(1.0, abs(parts)):
            raise ValueError("value must equal v_part + d_part")


def hamiltonian_on_grid(problem: Problem, grid: Grid) -> Hamiltonian:
    """Evaluate the problem's diagonals pointwise on an explicit grid."""
    v = problem.potential(grid.points)
    d = problem.kinetic_symbol(grid.momentum().values)
    return Hamiltonian(grid, v, d)


def build_hamiltonian(problem: Problem, n_qubits: int) -> Hamiltonian:
    """The problem's Hamiltonian on its canonical grid at width n."""
    return hamiltonian_on_grid(problem, problem.grid(n_qubits))


@lru_cache(maxsize=None)
def _qft(n_qubits: int):
    return qft_circuit(n_qubits)


def _momentum_state(state: QuantumState) -> QuantumState:
    return run_circuit(_qft(state.n_qubits), state)


def exact_energy(state: QuantumState, hamiltonian: Hamiltonian) -> EnergyEstimate:
    """Statevector energy: <f|V|f> plus <f~|D|f~> with f~ the QFT of f."""
    if state.n_qubits != hamiltonian.n_qubits:
        raise ValueError("state and Hamiltonian widths differ")
    v_part = expectation_diagonal(state, hamiltonian.v_diag)
    d_part = expectation_diagonal(_momentum_state(state), hamiltonian.d_diag)
    return EnergyEstimate(v_part + d_part, v_part, d_part, shots_per_term=0)


def sampled_energy(
    state: QuantumState, hamiltonian: Hamiltonian, shots: int, rng_seed: int
) -> EnergyEstimate:
    """Finite-shot energy: sample the position and momentum circuits.

    Each term averages the diagonal observable over ``shots`` measured
    bitstrings; the two circuits use independent substreams derived from
    ``rng_seed``, so the estimate is reproducible per seed.
    """
    if state.n_qubits != hamiltonian.n_qubits:
        raise ValueError("state and Hamiltonian widths differ")
    if shots < 1:
        raise ValueError("shots must be >= 1")
    pos_seed, mom_seed = (int(s) for s in np.random.SeedSequence(rng_seed).generate_state(2))
    pos_counts = sample(state, shots, pos_seed)
    mom_counts = sample(_momentum_state(state), shots, mom_seed)
    v_part = float(pos_counts @ hamiltonian.v_diag) / shots
    d_part = float(mom_counts @ hamiltonian.d_diag) / shots
    return EnergyEstimate(v_part + d_part, v_part, d_part, shots_per_term=shots)


def _dense_matrix(v_diag: np.ndarray, d_diag: np.ndarray) -> np.ndarray:
    n = v_diag.size
    kernel = np.fft.ifft(d_diag)
    if np.max(np.abs(kernel.imag)) > 1e-12 * max(1.0, np.max(np.abs(kernel.real))):
        raise ValueError("kinetic symbol must be even in p")
    offsets = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
    matrix = kernel.real[offsets] + np.diag(v_diag)
    return 0.5 * (matrix + matrix.T)


def hamiltonian_matrix(hamiltonian: Hamiltonian) -> np.ndarray:
    """Dense matrix F^dag diag(D) F + diag(V) over the position register.

    The kinetic block is a real symmetric circulant: its first row is
    the inverse DFT of the momentum symbol, which is real because D is
    even in p.
    """
    return _dense_matrix(hamiltonian.v_diag, hamiltonian.d_diag)


class ReferenceSolution(NamedTuple):
    """Two lowest eigenpairs' worth of reference data."""

    e0: float
    e1: float
    ground: np.ndarray


def _fix_phase(vector: np.ndarray) -> np.ndarray:
    peak = int(np.argmax(np.abs(vector)))
    if vector[peak] < 0.0:
        vector = -vector
    vector.setflags(write=False)
    return vector


def dense_eigenpairs(v_diag: np.ndarray, d_diag: np.ndarray) -> ReferenceSolution:
    """Two lowest eigenpairs of diag(V) + F^dag diag(D) F from raw diagonals.

    The position lattice enters only through the sampled potential, so this
    also serves shifted lattices (such as interpolation targets) that do not
    correspond to a Grid instance. The ground vector comes back read-only
    with its largest-magnitude entry made positive.
    """
    v = np.asarray(v_diag, dtype=np.float64)
    d = np.asarray(d_diag, dtype=np.float64)
    if v.shape != d.shape or v.ndim != 1:
        raise ValueError("potential and kinetic diagonals must be 1-d and equal length")
    if v.size > 2**REFERENCE_MAX_QUBITS:
        raise ValueError(f"dense reference capped at {REFERENCE_MAX_QUBITS} qubits")
    values, vectors = eigh(_dense_matrix(v, d), subset_by_index=[0, 1])
    ground = _fix_phase(vectors[:, 0].copy())
    return ReferenceSolution(float(values[0]), float(values[1]), ground)


@lru_cache(maxsize=64)
def solve_on_grid(problem: Problem, grid: Grid) -> ReferenceSolution:
    """Two lowest eigenpairs of the dense grid operator.

    Cached in memory per (problem, grid); the returned ground vector is
    read-only. The ground state's sign is fixed so its largest-magnitude
    entry is positive.
    """
    if grid.n_qubits > REFERENCE_MAX_QUBITS:
        raise ValueError(f"dense reference capped at {REFERENCE_MAX_QUBITS} qubits")
    hamiltonian = hamiltonian_on_grid(problem, grid)
    return dense_eigenpairs(hamiltonian.v_diag, hamiltonian.d_diag)


def _cache_root(cache_dir: str | Path | None) -> Path:
    if cache_dir is not None:
        return Path(cache_dir)
    env = os.environ.get("QPDE_CACHE_DIR")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "qpde"


def reference_solve(
    problem: Problem, n_qubits: int, cache_dir: str | Path | None = None
) -> ReferenceSolution:
    """Reference eigenpairs on the canonical grid, cached on disk.

    The cache key is (problem name, n); entries are JSON so they stay
    inspectable. A corrupt or unreadable entry is recomputed and
    rewritten. Set ``QPDE_CACHE_DIR`` (or pass ``cache_dir``) to move
    the cache away from ``~/.cache/qpde``.
    """
    if not 1 <= n_qubits <= REFERENCE_MAX_QUBITS:
        raise ValueError(f"n_qubits must be in [1, {REFERENCE_MAX_QUBITS}]")
    root = _cache_root(cache_dir)
    path = root / f"reference_{problem.name}_n{n_qubits}.json"
    if path.exists():
        try:
            payload = json.loads(path.read_text())
            ground = np.asarray(payload["ground"], dtype=float)
            if ground.shape == (2**n_qubits,):
                ground.setflags(write=False)
                return ReferenceSolution(float(payload["e0"]), float(payload["e1"]), ground)
        except (ValueError, KeyError, OSError):
            pass
    solution = solve_on_grid(problem, problem.grid(n_qubits))
    root.mkdir(parents=True, exist_ok=True)
    payload = {
        "e0": solution.e0,
        "e1": solution.e1,
        "ground": solution.ground.tolist(),
    }
    scratch = path.with_suffix(f".tmp{os.getpid()}")
    scratch.write_text(json.dumps(payload))
    os.replace(scratch, path)
    return solution
