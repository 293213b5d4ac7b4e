import numpy as np
import pytest

from qnksim import algebra, pqc, qcore
from qnksim.pqc import (
    PqcKey,
    average_cipher,
    generalized_commutation_phase,
    key_unitary,
    make_scheme,
    search_generator_pairs,
    validate_generators,
)
from qnksim.qcore import QState

X = qcore.PAULI_X
Y = qcore.PAULI_Y
Z = qcore.PAULI_Z
H = qcore.HADAMARD
I2 = qcore.PAULI_I


class TestValidateGenerators:
    @pytest.mark.parametrize("pair", [(X, Y), (Y, H), (X, Z)])
    def test_listed_pairs_pass(self, pair):
        assert validate_generators(*pair).passed

    def test_identical_generators_fail(self):
        report = validate_generators(X, X)
        assert not report.passed
        assert report.traces["tr_u1u2"] == pytest.approx(2.0)

    def test_identity_fails_trace_condition(self):
        assert not validate_generators(I2, X).passed


class TestKeyUnitary:
    def test_zero_key_is_identity(self):
        s = make_scheme("XZ", 3)
        u = key_unitary(s, PqcKey("000", "000"))
        assert np.allclose(u.matrix, np.eye(8))

    def test_single_qubit_xz(self):
        s = make_scheme("XZ", 1)
        u = key_unitary(s, PqcKey("1", "1"))
        assert np.allclose(u.matrix, X @ Z)

    def test_unitarity_roundtrip(self):
        rng = np.random.default_rng(5)
        s = make_scheme("YH", 2)
        k = s.random_key(rng)
        u = key_unitary(s, k)
        assert np.allclose(u.matrix @ u.matrix.conj().T, np.eye(4), atol=1e-12)


class TestAverageCipher:
    def test_xz_single_qubit_ground_state(self):
        s = make_scheme("XZ", 1)
        rho = qcore.basis_state((("M", 1),), "0")
        out = average_cipher(s, rho)
        assert qcore.max_abs(out.data - np.eye(2) / 2) <= 1e-9

    def test_yh_two_qubits_random_state(self):
        rng = np.random.default_rng(7)
        s = make_scheme("YH", 2)
        rho = qcore.random_state((("M", 2),), rng)
        out = average_cipher(s, rho)
        assert qcore.max_abs(out.data - np.eye(4) / 4) <= 1e-9

    def test_maximally_mixed_is_fixed_point(self):
        s = make_scheme("XY", 2)
        rho = QState((("M", 2),), np.eye(4) / 4)
        out = average_cipher(s, rho)
        assert qcore.max_abs(out.data - rho.data) <= 1e-9

    @pytest.mark.parametrize("name", ["XY", "YH", "XZ"])
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_perfect_encryption_property(self, name, n):
        rng = np.random.default_rng(11)
        s = make_scheme(name, n)
        for _ in range(5):
            rho = qcore.random_state((("M", n),), rng)
            out = average_cipher(s, rho)
            assert qcore.max_abs(out.data - np.eye(2**n) / 2**n) <= 1e-9

    def test_enumeration_size_limit(self):
        s = make_scheme("XZ", 5)
        rho = QState((("M", 5),), np.eye(32) / 32)
        with pytest.raises(qcore.SizeLimitError):
            average_cipher(s, rho)


class TestCommutationPhase:
    def test_self_commutation(self):
        s = make_scheme("YH", 2)
        k = PqcKey("10", "01")
        assert generalized_commutation_phase(s, k, k) == 1

    def test_x_vs_z_anticommute(self):
        s = make_scheme("XZ", 1)
        assert generalized_commutation_phase(s, PqcKey("1", "0"), PqcKey("0", "1")) == -1

    @pytest.mark.parametrize("name", ["XY", "YH", "XZ"])
    def test_sign_matches_matrix_computation(self, name):
        rng = np.random.default_rng(13)
        s = make_scheme(name, 3)
        for _ in range(50):
            k, l = s.random_key(rng), s.random_key(rng)
            uk = key_unitary(s, k).matrix
            ul = key_unitary(s, l).matrix
            predicted = generalized_commutation_phase(s, k, l)
            phase = algebra.scalar_identity_phase(
                uk @ ul @ np.linalg.inv(ul @ uk))
            assert phase is not None
            assert np.exp(1j * phase) == pytest.approx(predicted, abs=1e-9)

    def test_key_product_homomorphism_up_to_sign(self):
        rng = np.random.default_rng(15)
        s = make_scheme("YH", 2)
        for _ in range(25):
            k, l = s.random_key(rng), s.random_key(rng)
            uk = key_unitary(s, k).matrix
            ul = key_unitary(s, l).matrix
            ukl = key_unitary(s, k.xor(l)).matrix
            dev_plus = qcore.max_abs(uk @ ul - ukl)
            dev_minus = qcore.max_abs(uk @ ul + ukl)
            assert min(dev_plus, dev_minus) <= 1e-9


class TestEncryptDecrypt:
    @pytest.mark.parametrize("name", ["XY", "YH", "XZ"])
    def test_roundtrip_identity(self, name):
        rng = np.random.default_rng(21)
        s = make_scheme(name, 2)
        psi = qcore.random_state((("M", 2),), rng)
        k = s.random_key(rng)
        u = key_unitary(s, k)
        enc = qcore.apply(u, psi)
        dec = qcore.apply(u.dagger(), enc)
        assert qcore.phase_distance(dec, psi) <= 1e-9


class TestSearchGeneratorPairs:
    def test_standard_candidates(self):
        candidates = {"X": X, "Y": Y, "Z": Z, "H": H, "I": I2}
        found = search_generator_pairs(candidates)
        for pair in [("X", "Y"), ("Y", "H"), ("X", "Z")]:
            assert pair in found
        assert not any("I" in pair for pair in found)

    def test_zh_pair_rejected(self):
        # direct check: Z H + H Z != 0, so (Z, H) must not pass
        assert qcore.max_abs(Z @ H + H @ Z) > 1.0
        found = search_generator_pairs({"Z": Z, "H": H})
        assert ("Z", "H") not in found and ("H", "Z") not in found
