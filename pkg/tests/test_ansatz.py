"""Ansatz tests: gate accounting, realness, symmetry, tree-walk structure."""

import numpy as np
import pytest

from qpde.ansatz import (
    AnsatzSpec,
    build_circuit,
    cnot_count,
    parameter_count,
    ry_ansatz,
    spec_from_name,
    symmetrize,
    zgr_ansatz,
)
from qpde.qsim import QuantumState, run_circuit

REALNESS_TOL = 1e-14

# Published accounting for the symmetrized variants: one row per
# (total qubits, variant, parameters, CNOT gates), 2 through 6 qubits.
TABLE_ROWS = [
    (2, "ry1", 2, 1),
    (2, "ry2", 3, 1),
    (2, "zgr", 1, 1),
    (3, "ry1", 4, 3),
    (3, "ry2", 6, 4),
    (3, "zgr", 3, 4),
    (4, "ry1", 6, 6),
    (4, "ry2", 9, 9),
    (4, "zgr", 7, 9),
    (5, "ry1", 8, 10),
    (5, "ry2", 12, 16),
    (5, "zgr", 15, 18),
    (6, "ry1", 10, 15),
    (6, "ry2", 15, 25),
    (6, "zgr", 31, 35),
]


def prepare(spec: AnsatzSpec, theta: np.ndarray) -> np.ndarray:
    circuit = build_circuit(spec, theta)
    return run_circuit(circuit, QuantumState.zero(spec.n_qubits)).amplitudes


def random_theta(spec: AnsatzSpec, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(-np.pi, np.pi, size=parameter_count(spec))


class TestSpecValidation:
    def test_unknown_family_rejected(self):
        with pytest.raises(ValueError, match="family"):
            AnsatzSpec("su4", 3)

    def test_symmetrized_needs_two_qubits(self):
        with pytest.raises(ValueError, match="2 qubits"):
            AnsatzSpec("ry", 1, symmetrized=True)

    def test_zgr_rejects_depth(self):
        with pytest.raises(ValueError, match="depth"):
            AnsatzSpec("zgr", 3, depth=2)

    def test_parity_needs_symmetrization(self):
        with pytest.raises(ValueError, match="parity"):
            AnsatzSpec("ry", 3, parity=1)
        with pytest.raises(ValueError, match="parity"):
            AnsatzSpec("ry", 3, symmetrized=True, parity=2)

    def test_spec_from_name(self):
        assert spec_from_name("ry1", 3) == AnsatzSpec("ry", 3, depth=1, symmetrized=True)
        assert spec_from_name("RY2", 4) == AnsatzSpec("ry", 4, depth=2, symmetrized=True)
        assert spec_from_name("zgr", 5, symmetrized=False) == AnsatzSpec("zgr", 5)
        with pytest.raises(ValueError, match="ansatz name"):
            spec_from_name("ry3", 3)

    def test_inner_of_unsymmetrized_rejected(self):
        with pytest.raises(ValueError, match="not symmetrized"):
            AnsatzSpec("ry", 3).inner()


class TestAccounting:
    @pytest.mark.parametrize("n_qubits,name,n_params,n_cnots", TABLE_ROWS)
    def test_published_rows(self, n_qubits, name, n_params, n_cnots):
        spec = spec_from_name(name, n_qubits)
        assert parameter_count(spec) == n_params
        assert cnot_count(spec) == n_cnots

    @pytest.mark.parametrize("n_qubits,name,n_params,n_cnots", TABLE_ROWS)
    def test_built_circuits_match_the_accounting(self, n_qubits, name, n_params, n_cnots):
        spec = spec_from_name(name, n_qubits)
        circuit = build_circuit(spec, random_theta(spec, seed=7 * n_qubits))
        kinds = [g.kind for g in circuit.gates]
        assert kinds.count("cnot") == n_cnots
        assert kinds.count("ry") == n_params

    def test_unsymmetrized_formulas(self):
        assert parameter_count(AnsatzSpec("ry", 2, depth=1)) == 4
        assert cnot_count(AnsatzSpec("ry", 2, depth=1)) == 1
        assert parameter_count(AnsatzSpec("zgr", 1)) == 1
        assert cnot_count(AnsatzSpec("zgr", 1)) == 0
        assert parameter_count(AnsatzSpec("zgr", 3)) == 7
        assert cnot_count(AnsatzSpec("zgr", 3)) == 6

    def test_symmetrized_ry1_on_four_qubits(self):
        # Wrapper around a 3-qubit depth-1 RY inner block.
        spec = AnsatzSpec("ry", 4, depth=1, symmetrized=True)
        circuit = build_circuit(spec, random_theta(spec, seed=3))
        assert circuit.n_qubits == 4
        assert parameter_count(spec) == 6
        assert sum(g.kind == "cnot" for g in circuit.gates) == 6


class TestRyAnsatz:
    def test_zero_angles_give_zero_state(self):
        state = run_circuit(ry_ansatz(3, 2, np.zeros(9)), QuantumState.zero(3))
        expected = np.zeros(8)
        expected[0] = 1.0
        np.testing.assert_allclose(state.amplitudes, expected, atol=1e-15)

    def test_wrong_parameter_length_rejected(self):
        with pytest.raises(ValueError, match="parameters"):
            ry_ansatz(3, 1, np.zeros(5))

    def test_layer_structure(self):
        circuit = ry_ansatz(3, 2, np.arange(9, dtype=float))
        kinds = [g.kind for g in circuit.gates]
        # [ry ry ry, cnot cnot cnot] twice, then a closing ry layer.
        assert kinds == ["ry"] * 3 + ["cnot"] * 3 + ["ry"] * 3 + ["cnot"] * 3 + ["ry"] * 3
        angles = [g.angle for g in circuit.gates if g.kind == "ry"]
        assert angles == list(range(9))
        pairs = [(g.control, g.target) for g in circuit.gates if g.kind == "cnot"]
        assert pairs == [(0, 1), (0, 2), (1, 2)] * 2


class TestZgrAnsatz:
    def test_single_qubit_is_one_rotation(self):
        circuit = zgr_ansatz(1, np.array([0.7]))
        assert len(circuit) == 1
        assert circuit.gates[0].kind == "ry"

    def test_zero_angles_give_zero_state(self):
        state = run_circuit(zgr_ansatz(3, np.zeros(7)), QuantumState.zero(3))
        expected = np.zeros(8)
        expected[0] = 1.0
        np.testing.assert_allclose(state.amplitudes, expected, atol=1e-15)

    def test_wrong_parameter_length_rejected(self):
        with pytest.raises(ValueError, match="parameters"):
            zgr_ansatz(3, np.zeros(6))

    def test_control_pattern_follows_changed_bits(self):
        circuit = zgr_ansatz(4, np.zeros(15))
        controls = {1: [], 2: [], 3: []}
        for g in circuit.gates:
            if g.kind == "cnot":
                controls[g.target].append(g.control)
        assert controls[1] == [0, 0]
        assert controls[2] == [0, 1, 0, 1]
        assert controls[3] == [0, 2, 1, 2, 0, 2, 1, 2]

    def test_every_rotation_is_preceded_by_its_cnot(self):
        circuit = zgr_ansatz(3, np.zeros(7))
        kinds = [g.kind for g in circuit.gates]
        assert kinds == ["ry"] + ["cnot", "ry"] * 6

    @pytest.mark.parametrize("seed", range(6))
    def test_two_qubit_tree_reaches_any_real_state(self, seed):
        # Oracle: the 2-qubit tree walk realizes
        #   [c0 cos(a), c0 sin(a), s0 cos(b), s0 sin(b)]
        # with c0 = cos(theta0/2), s0 = sin(theta0/2), a = (theta1+theta2)/2,
        # b = (theta2-theta1)/2, so the angles for a target vector follow
        # from polar coordinates of its two halves.
        rng = np.random.default_rng(seed)
        target = rng.normal(size=4)
        target /= np.linalg.norm(target)
        r0 = np.hypot(target[0], target[1])
        r1 = np.hypot(target[2], target[3])
        a = np.arctan2(target[1], target[0])
        b = np.arctan2(target[3], target[2])
        theta = np.array([2 * np.arctan2(r1, r0), a - b, a + b])
        state = run_circuit(zgr_ansatz(2, theta), QuantumState.zero(2))
        np.testing.assert_allclose(state.amplitudes.real, target, atol=1e-12)


class TestSymmetrization:
    @pytest.mark.parametrize("n_qubits,name,n_params,n_cnots", TABLE_ROWS)
    @pytest.mark.parametrize("parity", [0, 1])
    def test_halves_mirror_exactly(self, n_qubits, name, n_params, n_cnots, parity):
        spec = spec_from_name(name, n_qubits, parity=parity)
        amps = prepare(spec, random_theta(spec, seed=11 * n_qubits + parity))
        half = 2 ** (n_qubits - 1)
        sign = -1.0 if parity else 1.0
        upper = amps[half:]
        mirrored = sign * amps[half - 1 :: -1]
        if parity == 0:
            np.testing.assert_array_equal(upper, mirrored)
        else:
            # cphase(pi) carries an e^{i pi} rounding residue of order 1e-16,
            # so the odd sector matches to machine precision, not bitwise.
            np.testing.assert_allclose(upper, mirrored, atol=1e-15)

    def test_inner_state_lands_in_the_upper_half(self):
        # amp(1, t) must equal f_t / sqrt(2) with f the inner state.
        inner = AnsatzSpec("zgr", 2)
        theta = random_theta(inner, seed=5)
        f = run_circuit(build_circuit(inner, theta), QuantumState.zero(2)).amplitudes
        for parity in (0, 1):
            amps = prepare(AnsatzSpec("zgr", 3, symmetrized=True, parity=parity), theta)
            np.testing.assert_allclose(amps[4:], f / np.sqrt(2), atol=1e-15)

    def test_nested_symmetrization_rejected(self):
        inner = AnsatzSpec("ry", 3, symmetrized=True)
        with pytest.raises(ValueError, match="unsymmetrized"):
            symmetrize(inner, np.zeros(parameter_count(inner)))

    def test_wrong_parameter_length_rejected(self):
        with pytest.raises(ValueError, match="parameters"):
            symmetrize(AnsatzSpec("zgr", 2), np.zeros(5))


class TestRealness:
    @pytest.mark.parametrize("name", ["ry1", "ry2", "zgr"])
    @pytest.mark.parametrize("n_qubits", [2, 3, 5])
    @pytest.mark.parametrize("parity", [0, 1])
    def test_amplitudes_are_real(self, name, n_qubits, parity):
        spec = spec_from_name(name, n_qubits, parity=parity)
        amps = prepare(spec, random_theta(spec, seed=n_qubits + 31 * parity))
        assert np.max(np.abs(amps.imag)) < REALNESS_TOL
        assert abs(np.linalg.norm(amps) - 1.0) < 1e-12

    @pytest.mark.parametrize("n_qubits", [1, 2, 4])
    def test_unsymmetrized_families_are_real(self, n_qubits):
        for spec in (AnsatzSpec("ry", n_qubits, depth=2), AnsatzSpec("zgr", n_qubits)):
            amps = prepare(spec, random_theta(spec, seed=n_qubits))
            assert np.max(np.abs(amps.imag)) < REALNESS_TOL
