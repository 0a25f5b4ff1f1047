"""Classical optimizers driving the variational energy.

Three methods share one trajectory contract: Adam consumes analytic
parameter-shift gradients, SPSA estimates a descent direction from two
randomized evaluations per step, and Nelder-Mead is the gradient-free
simplex baseline. Every run is deterministic per seed: the estimator's
shot noise, the SPSA perturbations, and the initial point all derive
from explicitly passed seeds, so a repeated run reproduces bitwise.

``EnergyObjective`` packages E(theta) for one ansatz and one grid
Hamiltonian at a fixed shot budget. With shots > 0 the optimizers drive
on the sampled estimator and record the exact energy alongside, which
is what the convergence plots compare; with shots = 0 both columns
coincide.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize as scipy_minimize

from .ansatz import AnsatzSpec, build_circuit, parameter_count
from .problems import Hamiltonian, exact_energy, sampled_energy
from .qsim import QuantumState, run_circuit

METHODS = ("adam", "spsa", "nelder_mead")
DEFAULT_ITERATIONS = {"adam": 300, "spsa": 500, "nelder_mead": 500}
SPSA_ALPHA = 0.602
SPSA_GAMMA = 0.101
INIT_SCALE = 0.1

__all__ = [
    "METHODS",
    "DEFAULT_ITERATIONS",
    "OptimizationError",
    "OptimizerConfig",
    "Trajectory",
    "EnergyObjective",
    "initial_parameters",
    "parameter_shift_gradient",
    "adam_minimize",
    "spsa_minimize",
    "nelder_mead_minimize",
    "minimize_energy",
]


class OptimizationError(RuntimeError):
    """Raised when an optimizer meets a non-finite energy or gradient."""


@dataclass(frozen=True)
class OptimizerConfig:
    """Method choice plus every tunable the optimizers expose.

    ``max_iterations = None`` resolves to the method's default (Adam 300,
    SPSA and Nelder-Mead 500). ``shots`` is carried for drivers that build
    the estimator from the config; the optimizers themselves take the
    estimator as given. ``spsa_a = None`` calibrates the gain so the first
    step moves each parameter by about ``spsa_target_step`` radians.
    """

    method: str = "adam"
    max_iterations: int | None = None
    shots: int = 0
    rng_seed: int = 0
    learning_rate: float = 0.05
    lr_decay: float = 0.97
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    spsa_a: float | None = None
    spsa_c: float = 0.1
    spsa_stability: float = 30.0
    spsa_alpha: float = SPSA_ALPHA
    spsa_gamma: float = SPSA_GAMMA
    spsa_target_step: float = 0.1

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.shots < 0:
            raise ValueError("shots must be >= 0")
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be > 0")
        if not 0.0 < self.lr_decay <= 1.0:
            raise ValueError("lr_decay must be in (0, 1]")
        for label in ("beta1", "beta2"):
            if not 0.0 <= getattr(self, label) < 1.0:
                raise ValueError(f"{label} must be in [0, 1)")
        if self.eps_adam <= 0.0:
            raise ValueError("eps_adam must be > 0")
        if self.spsa_a is not None and self.spsa_a <= 0.0:
            raise ValueError("spsa_a must be > 0 when given")
        for label in ("spsa_c", "spsa_alpha", "spsa_gamma", "spsa_target_step"):
            if getattr(self, label) <= 0.0:
                raise ValueError(f"{label} must be > 0")
        if self.spsa_stability < 0.0:
            raise ValueError("spsa_stability must be >= 0")

    @property
    def iterations(self) -> int:
        if self.max_iterations is not None:
            return self.max_iterations
        return DEFAULT_ITERATIONS[self.method]


@dataclass(frozen=True)
class Trajectory:
    """Per-iteration record of one optimization run.

    Row k holds the parameters after k steps and the driving energy
    there. ``exact_energies`` runs in parallel when the driver was
    sampled; it equals ``energies`` in exact mode. ``gradient_norms``
    holds the norm of the update direction computed at each row (NaN on
    the final row and everywhere for methods without one). ``theta_opt``
    is the row with the lowest driving energy, which is the quantity the
    optimizer can actually observe.
    """

    thetas: np.ndarray
    energies: np.ndarray
    exact_energies: np.ndarray
    gradient_norms: np.ndarray

    def __post_init__(self) -> None:
        thetas = np.asarray(self.thetas, dtype=float)
        energies = np.asarray(self.energies, dtype=float)
        exact = np.asarray(self.exact_energies, dtype=float)
        norms = np.asarray(self.gradient_norms, dtype=float)
        rows = thetas.shape[0]
        if thetas.ndim != 2 or rows == 0:
            raise ValueError("thetas must be a non-empty (rows, params) array")
        if energies.shape != (rows,) or exact.shape != (rows,) or norms.shape != (rows,):
            raise ValueError("per-row arrays must all have one entry per row")
        if not np.all(np.isfinite(energies)):
            raise ValueError("recorded energies must be finite")
        for name, arr in (("thetas", thetas), ("energies", energies),
                          ("exact_energies", exact), ("gradient_norms", norms)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_iterations(self) -> int:
        return self.thetas.shape[0] - 1

    @property
    def theta_opt(self) -> np.ndarray:
        return self.thetas[int(np.argmin(self.energies))]

    @property
    def energy_opt(self) -> float:
        return float(np.min(self.energies))

    def write_csv(self, path: str | Path) -> None:
        """Dump rows as (iteration, sampled_energy, exact_energy, gradient_norm)."""
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["iteration", "sampled_energy", "exact_energy", "gradient_norm"])
            for k in range(self.thetas.shape[0]):
                norm = self.gradient_norms[k]
                writer.writerow(
                    [
                        k,
                        repr(float(self.energies[k])),
                        repr(float(self.exact_energies[k])),
                        "" if math.isnan(norm) else repr(float(norm)),
                    ]
                )


class EnergyObjective:
    """E(theta) for one ansatz on one grid Hamiltonian.

    ``shots = 0`` evaluates exact expectations; otherwise each call draws
    fresh measurement noise from a seed stream spawned at construction,
    so the call sequence is reproducible while successive calls stay
    independent. ``n_evaluations`` counts driving-estimator calls, which
    is the budget the shot-based comparisons meter.
    """

    def __init__(
        self,
        spec: AnsatzSpec,
        hamiltonian: Hamiltonian,
        shots: int = 0,
        rng_seed: int = 0,
    ) -> None:
        if spec.n_qubits != hamiltonian.n_qubits:
            raise ValueError("ansatz and Hamiltonian widths differ")
        if shots < 0:
            raise ValueError("shots must be >= 0")
        self.spec = spec
        self.hamiltonian = hamiltonian
        self.shots = shots
        self.n_parameters = parameter_count(spec)
        self.n_evaluations = 0
        self._seeds = np.random.SeedSequence(rng_seed)

    def state(self, theta: np.ndarray) -> QuantumState:
        circuit = build_circuit(self.spec, np.asarray(theta, dtype=float))
        return run_circuit(circuit, QuantumState.zero(self.spec.n_qubits))

    def exact(self, theta: np.ndarray) -> float:
        return exact_energy(self.state(theta), self.hamiltonian).value

    def sampled(self, theta: np.ndarray) -> float:
        if self.shots == 0:
            raise ValueError("objective was built with shots = 0")
        seed = int(self._seeds.spawn(1)[0].generate_state(1)[0])
        estimate = sampled_energy(self.state(theta), self.hamiltonian, self.shots, seed)
        return estimate.value

    def __call__(self, theta: np.ndarray) -> float:
        self.n_evaluations += 1
        return self.sampled(theta) if self.shots > 0 else self.exact(theta)


def initial_parameters(n_parameters: int, rng_seed: int = 0) -> np.ndarray:
    """Small random start, uniform in (-0.1, 0.1) per parameter.

    Small angles keep the early state near |0...0> and away from the flat
    regions that plague larger-amplitude starts at these register sizes.
    """
    if n_parameters < 1:
        raise ValueError("n_parameters must be positive")
    rng = np.random.default_rng(rng_seed)
    return rng.uniform(-INIT_SCALE, INIT_SCALE, size=n_parameters)


def parameter_shift_gradient(
    energy_fn: Callable[[np.ndarray], float], theta: np.ndarray
) -> np.ndarray:
    """Analytic gradient [E(theta + pi/2 e_k) - E(theta - pi/2 e_k)] / 2.

    Exact for energies whose parameters enter through single RY rotations;
    evaluated with whatever estimator ``energy_fn`` wraps, so a sampled
    objective yields a sampled gradient.
    """
    theta = np.asarray(theta, dtype=float)
    grad = np.empty_like(theta)
    for k in range(theta.size):
        shift = np.zeros_like(theta)
        shift[k] = 0.5 * math.pi
        grad[k] = 0.5 * (energy_fn(theta + shift) - energy_fn(theta - shift))
    return grad


def _driving_and_exact(
    energy_fn: Callable[[np.ndarray], float],
) -> tuple[Callable[[np.ndarray], float], Callable[[np.ndarray], float] | None]:
    """Split an objective into its driving estimator and an exact shadow."""
    if isinstance(energy_fn, EnergyObjective) and energy_fn.shots > 0:
        return energy_fn, energy_fn.exact
    return energy_fn, None


def _check_finite(value: float, iteration: int, what: str) -> float:
    if not math.isfinite(value):
        raise OptimizationError(f"{what} became non-finite at iteration {iteration}")
    return value


class _Recorder:
    def __init__(self, exact_fn: Callable[[np.ndarray], float] | None) -> None:
        self.exact_fn = exact_fn
        self.thetas: list[np.ndarray] = []
        self.energies: list[float] = []
        self.exact: list[float] = []
        self.norms: list[float] = []

    def add(self, theta: np.ndarray, energy: float, norm: float = math.nan) -> None:
        self.thetas.append(np.array(theta, dtype=float))
        self.energies.append(energy)
        self.exact.append(self.exact_fn(theta) if self.exact_fn is not None else energy)
        self.norms.append(norm)

    def set_last_norm(self, norm: float) -> None:
        self.norms[-1] = norm

    def build(self) -> Trajectory:
        return Trajectory(
            np.vstack(self.thetas),
            np.array(self.energies),
            np.array(self.exact),
            np.array(self.norms),
        )


def adam_minimize(
    energy_fn: Callable[[np.ndarray], float],
    theta0: Sequence[float],
    config: OptimizerConfig | None = None,
    gradient_fn: Callable[[np.ndarray], np.ndarray] | None = None,
) -> Trajectory:
    """Adam with parameter-shift gradients and a decaying learning rate.

    ``gradient_fn`` overrides the parameter-shift rule (used by tests
    that inject closed-form gradients). The learning rate follows
    eta_k = learning_rate * lr_decay^k; with the default constant-rate
    disabled (decay 0.97) the iterates settle instead of limit-cycling
    at the learning-rate scale, which matters for the deep floors.
    """
    config = replace(config or OptimizerConfig(), method="adam")
    driving, exact_fn = _driving_and_exact(energy_fn)
    theta = np.asarray(theta0, dtype=float).copy()
    recorder = _Recorder(exact_fn)
    recorder.add(theta, _check_finite(driving(theta), 0, "energy"))
    first = np.zeros_like(theta)
    second = np.zeros_like(theta)
    for k in range(config.iterations):
        grad = (gradient_fn or (lambda t: parameter_shift_gradient(driving, t)))(theta)
        grad = np.asarray(grad, dtype=float)
        if not np.all(np.isfinite(grad)):
            raise OptimizationError(f"gradient became non-finite at iteration {k}")
        recorder.set_last_norm(float(np.linalg.norm(grad)))
        first = config.beta1 * first + (1.0 - config.beta1) * grad
        second = config.beta2 * second + (1.0 - config.beta2) * grad**2
        first_hat = first / (1.0 - config.beta1 ** (k + 1))
        second_hat = second / (1.0 - config.beta2 ** (k + 1))
        rate = config.learning_rate * config.lr_decay**k
        theta = theta - rate * first_hat / (np.sqrt(second_hat) + config.eps_adam)
        recorder.add(theta, _check_finite(driving(theta), k + 1, "energy"))
    return recorder.build()


def _calibrate_spsa_gain(
    driving: Callable[[np.ndarray], float],
    theta: np.ndarray,
    config: OptimizerConfig,
    rng: np.random.Generator,
) -> float:
    """Pick ``a`` so the first step moves parameters by the target size."""
    magnitudes = []
    for _ in range(3):
        delta = rng.integers(0, 2, size=theta.size) * 2.0 - 1.0
        diff = driving(theta + config.spsa_c * delta) - driving(theta - config.spsa_c * delta)
        magnitudes.append(abs(diff) / (2.0 * config.spsa_c))
    scale = float(np.median(magnitudes))
    if scale < 1e-12:
        scale = 1.0
    return config.spsa_target_step * (config.spsa_stability + 1.0) ** config.spsa_alpha / scale


def spsa_minimize(
    energy_fn: Callable[[np.ndarray], float],
    theta0: Sequence[float],
    config: OptimizerConfig | None = None,
) -> Trajectory:
    """Simultaneous-perturbation descent with Bernoulli +/-1 directions.

    Gains follow a_k = a / (k + 1 + A)^alpha and c_k = c / (k + 1)^gamma.
    The perturbation stream derives from ``config.rng_seed`` and is
    independent of the estimator's shot noise.
    """
    config = replace(config or OptimizerConfig(), method="spsa")
    driving, exact_fn = _driving_and_exact(energy_fn)
    theta = np.asarray(theta0, dtype=float).copy()
    rng = np.random.default_rng(config.rng_seed)
    gain = config.spsa_a
    if gain is None:
        gain = _calibrate_spsa_gain(driving, theta, config, rng)
    recorder = _Recorder(exact_fn)
    recorder.add(theta, _check_finite(driving(theta), 0, "energy"))
    for k in range(config.iterations):
        a_k = gain / (k + 1.0 + config.spsa_stability) ** config.spsa_alpha
        c_k = config.spsa_c / (k + 1.0) ** config.spsa_gamma
        delta = rng.integers(0, 2, size=theta.size) * 2.0 - 1.0
        plus = _check_finite(driving(theta + c_k * delta), k, "energy")
        minus = _check_finite(driving(theta - c_k * delta), k, "energy")
        estimate = (plus - minus) / (2.0 * c_k) * delta
        recorder.set_last_norm(float(np.linalg.norm(estimate)))
        theta = theta - a_k * estimate
        recorder.add(theta, _check_finite(driving(theta), k + 1, "energy"))
    return recorder.build()


def nelder_mead_minimize(
    energy_fn: Callable[[np.ndarray], float],
    theta0: Sequence[float],
    config: OptimizerConfig | None = None,
) -> Trajectory:
    """Adaptive Nelder-Mead simplex baseline, same trajectory contract.

    One row is recorded per simplex iteration (the current best vertex),
    so the trajectory length stays within the iteration bound even though
    the simplex itself evaluates the energy several times per step.
    """
    config = replace(config or OptimizerConfig(), method="nelder_mead")
    driving, exact_fn = _driving_and_exact(energy_fn)
    theta = np.asarray(theta0, dtype=float).copy()
    recorder = _Recorder(exact_fn)
    recorder.add(theta, _check_finite(driving(theta), 0, "energy"))
    iteration = {"k": 0}

    def objective(x: np.ndarray) -> float:
        return _check_finite(driving(x), iteration["k"], "energy")

    def on_iteration(xk: np.ndarray) -> None:
        iteration["k"] += 1
        if len(recorder.energies) < config.iterations + 1:
            recorder.add(xk, objective(xk))

    result = scipy_minimize(
        objective,
        theta,
        method="Nelder-Mead",
        callback=on_iteration,
        options={"maxiter": config.iterations, "adaptive": True, "xatol": 1e-10, "fatol": 1e-12},
    )
    final_energy = objective(np.asarray(result.x, dtype=float))
    if final_energy < min(recorder.energies):
        if len(recorder.energies) < config.iterations + 1:
            recorder.add(np.asarray(result.x, dtype=float), final_energy)
        else:
            recorder.thetas[-1] = np.array(result.x, dtype=float)
            recorder.energies[-1] = final_energy
            recorder.exact[-1] = (
                exact_fn(result.x) if exact_fn is not None else final_energy
            )
            recorder.norms[-1] = math.nan
    return recorder.build()


_MINIMIZERS = {
    "adam": adam_minimize,
    "spsa": spsa_minimize,
    "nelder_mead": nelder_mead_minimize,
}


def minimize_energy(
    energy_fn: Callable[[np.ndarray], float],
    theta0: Sequence[float],
    config: OptimizerConfig,
) -> Trajectory:
    """Dispatch on ``config.method``; the drivers' single entry point."""
    return _MINIMIZERS[config.method](energy_fn, theta0, config)
