import math

import numpy as np
import pytest

from qnksim import qcore
from qnksim.qcore import (
    AXIS_X,
    AXIS_Y,
    AXIS_Z,
    Axis,
    DegenerateOutcomeError,
    FormMismatchError,
    LayoutError,
    QState,
    ShapeMismatchError,
    SizeLimitError,
    UnitaryOp,
    apply,
    basis_state,
    commutator,
    hs_inner,
    measure,
    partial_trace,
    phase_distance,
    realign,
    rotation,
    tensor,
)

X = qcore.PAULI_X
Y = qcore.PAULI_Y
Z = qcore.PAULI_Z
H = qcore.HADAMARD
I2 = qcore.PAULI_I


def ket(layout, bits):
    return basis_state(layout, bits)


class TestTensor:
    def test_basis_concatenation(self):
        a = ket([("a", 1)], "0")
        b = ket([("b", 1)], "1")
        out = tensor(a, b)
        assert np.allclose(out.data, [0, 1, 0, 0])
        assert out.layout == (("a", 1), ("b", 1))

    def test_identity_unitaries(self):
        out = tensor(UnitaryOp(I2), UnitaryOp(I2))
        assert np.allclose(out.matrix, np.eye(4))

    def test_x_tensor_z_on_10(self):
        # oracle: explicit 4x4 matrix applied to e_2 by hand
        xz = np.array(
            [[0, 0, 1, 0],
             [0, 0, 0, -1],
             [1, 0, 0, 0],
             [0, -1, 0, 0]], dtype=complex)
        expected = xz @ np.array([0, 0, 1, 0], dtype=complex)
        op = tensor(UnitaryOp(X), UnitaryOp(Z))
        state = ket([("a", 1), ("b", 1)], "10")
        out = apply(op, state)
        assert np.allclose(op.matrix, xz)
        assert np.allclose(out.data, expected)
        # i.e. (X tensor Z)|10> = +|00>
        assert np.allclose(out.data, [1, 0, 0, 0])

    def test_form_mismatch(self):
        pure = ket([("a", 1)], "0")
        mixed = pure.to_mixed()
        with pytest.raises(FormMismatchError):
            tensor(pure, mixed)


class TestApply:
    def test_identity(self):
        s = ket([("M", 2)], "01")
        out = apply(UnitaryOp(np.eye(4)), s)
        assert phase_distance(out, s) <= 1e-12

    def test_bit_flip(self):
        s = ket([("M", 1)], "0")
        out = apply(UnitaryOp(X), s)
        assert np.allclose(out.data, [0, 1])

    def test_hadamard_pair(self):
        s = ket([("M", 2)], "00")
        out = apply(tensor(UnitaryOp(H), UnitaryOp(H)), s)
        assert np.allclose(out.data, np.full(4, 0.5))

    def test_targeted_apply_matches_full_lift(self):
        rng = np.random.default_rng(7)
        layout = (("a", 1), ("b", 2), ("c", 1))
        s = qcore.random_state(layout, rng)
        u = qcore.random_unitary(4, rng)
        via_target = apply(u, s, ["c", "a"])
        full = qcore.lift(u, layout, ["c", "a"])
        assert np.allclose(via_target.data, full @ s.data)

    def test_mixed_apply_matches_conjugation(self):
        rng = np.random.default_rng(8)
        s = qcore.random_state((("a", 1), ("b", 1)), rng).to_mixed()
        u = qcore.random_unitary(2, rng)
        out = apply(u, s, ["b"])
        full = qcore.lift(u, s.layout, ["b"])
        assert np.allclose(out.data, full @ s.data @ full.conj().T)

    def test_dimension_mismatch(self):
        s = ket([("M", 2)], "00")
        with pytest.raises(ShapeMismatchError):
            apply(UnitaryOp(X), s)


class TestPartialTrace:
    def test_product_state(self):
        s = tensor(ket([("a", 1)], "0"), ket([("b", 1)], "1")).to_mixed()
        out = partial_trace(s, ["a"])
        assert np.allclose(out.data, [[1, 0], [0, 0]])

    def test_bell_state_reduces_to_maximally_mixed(self):
        bell = QState((("a", 1), ("b", 1)), np.array([1, 0, 0, 1]) / math.sqrt(2))
        rho = bell.to_mixed()
        for keep in (["a"], ["b"]):
            out = partial_trace(rho, keep)
            assert np.max(np.abs(out.data - np.eye(2) / 2)) <= 1e-9

    def test_keep_all_is_identity(self):
        rng = np.random.default_rng(3)
        s = qcore.random_state((("a", 1), ("b", 1)), rng).to_mixed()
        out = partial_trace(s, ["a", "b"])
        assert np.allclose(out.data, s.data)

    def test_unknown_register(self):
        s = ket([("a", 1)], "0").to_mixed()
        with pytest.raises(LayoutError):
            partial_trace(s, ["nope"])

    def test_trace_preserved(self):
        rng = np.random.default_rng(4)
        s = qcore.random_state((("a", 2), ("b", 1)), rng).to_mixed()
        out = partial_trace(s, ["b"])
        assert abs(np.trace(out.data) - 1.0) <= 1e-9


class TestRotation:
    def test_zero_angle_is_identity(self):
        for axis in (AXIS_X, AXIS_Y, AXIS_Z, Axis.normalized(1, 1, 1)):
            assert np.allclose(rotation(axis, 0.0).matrix, I2)

    def test_z_axis_pi_gives_iZ(self):
        assert np.allclose(rotation(AXIS_Z, math.pi).matrix, 1j * Z, atol=1e-12)

    def test_inverse(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            v = rng.standard_normal(3)
            axis = Axis.normalized(*v)
            phi = rng.uniform(0, 2 * math.pi)
            prod = rotation(axis, phi).matrix @ rotation(axis, -phi).matrix
            assert np.max(np.abs(prod - I2)) <= 1e-12

    def test_group_law_up_to_phase(self):
        rng = np.random.default_rng(6)
        for _ in range(25):
            axis = Axis.normalized(*rng.standard_normal(3))
            p1, p2 = rng.uniform(0, 2 * math.pi, 2)
            lhs = rotation(axis, p1).matrix @ rotation(axis, p2).matrix
            rhs = rotation(axis, p1 + p2).matrix
            assert qcore.deviation_up_to_phase(lhs, rhs) <= 1e-9

    def test_non_unit_axis_rejected(self):
        with pytest.raises(ShapeMismatchError):
            Axis(1.0, 1.0, 0.0)


class TestCommutator:
    def test_same_axis_rotations_commute(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            p1, p2 = rng.uniform(0, 2 * math.pi, 2)
            c = commutator(rotation(AXIS_Z, p1), rotation(AXIS_Z, p2))
            assert np.max(np.abs(c)) <= 1e-12

    def test_x_z_anticommute(self):
        c = commutator(UnitaryOp(X), UnitaryOp(Z))
        assert np.allclose(c, 2 * X @ Z)
        assert np.max(np.abs(c)) > 1.0

    def test_pi_rotations_match_cross_product_formula(self):
        # [U_x(pi), U_y(pi)] = -2 i sin(pi/2)^2 (x cross y).sigma = -2i Z
        c = commutator(rotation(AXIS_X, math.pi), rotation(AXIS_Y, math.pi))
        assert np.allclose(c, -2j * Z, atol=1e-12)


class TestHsInnerRealign:
    def test_hs_inner_values(self):
        assert hs_inner(X, X) == pytest.approx(2)
        assert hs_inner(X, Z) == pytest.approx(0)
        for d in (2, 4, 8):
            assert hs_inner(np.eye(d), np.eye(d)) == pytest.approx(d)

    def test_realign_basics(self):
        assert np.allclose(realign(I2), [1, 0, 0, 1])
        assert np.allclose(realign(X), [0, 1, 1, 0])

    @pytest.mark.parametrize("dim", [2, 4])
    def test_realign_identity_random(self, dim):
        rng = np.random.default_rng(11)
        for _ in range(100):
            a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
            x = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
            b = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
            lhs = np.kron(a, b.T) @ realign(x)
            rhs = realign(a @ x @ b)
            assert np.max(np.abs(lhs - rhs)) <= 1e-10


class TestPhaseDistance:
    def test_global_phase_invisible(self):
        rng = np.random.default_rng(12)
        s = qcore.random_state((("M", 2),), rng)
        t = QState(s.layout, 1j * s.data)
        assert phase_distance(s, t) <= 1e-12

    def test_orthogonal_states(self):
        a = ket([("M", 1)], "0")
        b = ket([("M", 1)], "1")
        assert phase_distance(a, b) == pytest.approx(math.sqrt(2))

    def test_mixed_self_distance(self):
        rng = np.random.default_rng(13)
        s = qcore.random_state((("M", 2),), rng).to_mixed()
        assert phase_distance(s, s) <= 1e-12

    def test_layout_mismatch(self):
        a = ket([("M", 1)], "0")
        b = ket([("N", 1)], "0")
        with pytest.raises(LayoutError):
            phase_distance(a, b)


class TestMeasure:
    def test_deterministic_ancilla(self):
        rng = np.random.default_rng(0)
        s = tensor(ket([("anc", 1)], "0"), ket([("M", 1)], "1"))
        out = measure(s, "anc", rng)
        assert out.outcome == "0"
        assert out.probability == pytest.approx(1.0)

    def test_hadamard_statistics(self):
        rng = np.random.default_rng(21)
        s = apply(UnitaryOp(H), ket([("M", 1)], "0"))
        trials = 10_000
        zeros = sum(measure(s, "M", rng).outcome == "0" for _ in range(trials))
        sigma = math.sqrt(0.25 / trials)
        assert abs(zeros / trials - 0.5) <= 3 * sigma

    def test_collapse_rule(self):
        # measuring anc of (|0>|a> + |1>|b>)/sqrt(2) with outcome 0 leaves |a>
        rng = np.random.default_rng(2)
        a = np.array([1, 0], dtype=complex)
        b = np.array([0, 1], dtype=complex)
        vec = np.concatenate([a, b]) / math.sqrt(2)
        s = QState((("anc", 1), ("M", 1)), vec)
        while True:
            out = measure(s, "anc", rng)
            if out.outcome == "0":
                break
        expected = QState(s.layout, np.concatenate([a, np.zeros(2)]))
        assert phase_distance(out.post_state, expected) <= 1e-9

    def test_born_probabilities_sum_to_one(self):
        rng = np.random.default_rng(23)
        for _ in range(10):
            s = qcore.random_state((("M", 3),), rng)
            probs = qcore.outcome_probabilities(s, "M")
            assert probs.sum() == pytest.approx(1.0, abs=1e-9)

    def test_seed_determinism(self):
        s = apply(UnitaryOp(H), ket([("M", 1)], "0"))
        a = [measure(s, "M", np.random.default_rng(99)).outcome for _ in range(5)]
        b = [measure(s, "M", np.random.default_rng(99)).outcome for _ in range(5)]
        assert a == b


class TestInvariantsAndLimits:
    def test_unitarity_enforced(self):
        with pytest.raises(ShapeMismatchError):
            UnitaryOp(np.array([[1, 1], [0, 1]], dtype=complex))

    def test_pure_size_limit(self):
        with pytest.raises(SizeLimitError):
            qcore.zero_state((("M", 15),))

    def test_mixed_size_limit(self):
        with pytest.raises(SizeLimitError):
            QState((("M", 9),), np.eye(512) / 512)

    def test_trace_preservation_under_apply(self):
        rng = np.random.default_rng(31)
        s = qcore.random_state((("M", 2),), rng).to_mixed()
        u = qcore.random_unitary(4, rng)
        out = apply(u, s)
        assert abs(np.trace(out.data) - 1.0) <= 1e-9

    def test_normalisation_enforced(self):
        with pytest.raises(ShapeMismatchError):
            QState((("M", 1),), np.array([1.0, 1.0]))


class TestProductSurgery:
    def test_factor_roundtrip(self):
        rng = np.random.default_rng(41)
        s = qcore.random_product_state((("M", 3),), rng)
        chi = qcore.product_factor(s, 1)
        back = qcore.replace_factor(s, 1, chi)
        assert phase_distance(back, s) <= 1e-9

    def test_replace_changes_only_target(self):
        rng = np.random.default_rng(42)
        s = qcore.random_product_state((("M", 3),), rng)
        new = qcore.replace_factor(s, 0, np.array([0, 1]))
        assert qcore.deviation_up_to_phase(
            qcore.product_factor(new, 0).reshape(2, 1), np.array([[0], [1]])) <= 1e-9
        for q in (1, 2):
            assert qcore.deviation_up_to_phase(
                qcore.product_factor(new, q).reshape(2, 1),
                qcore.product_factor(s, q).reshape(2, 1)) <= 1e-9

    def test_entangled_factor_rejected(self):
        bell = QState((("M", 2),), np.array([1, 0, 0, 1]) / math.sqrt(2))
        with pytest.raises(FormMismatchError):
            qcore.product_factor(bell, 0)
