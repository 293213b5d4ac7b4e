"""Quantum perfect encryption from anticommuting trace-free generator pairs.

A scheme is built from two 2x2 unitaries U1, U2 with U1 U2 = -U2 U1 and
tr(U1) = tr(U2) = tr(U1 U2) = tr(U1^dag U2) = 0.  Keys are pairs of n-bit
strings (alpha, beta) selecting the tensor-factor unitary U1^a U2^b per
qubit; averaging the conjugation over all 4^n keys sends every n-qubit
state to I/2^n.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import algebra, qcore
from .qcore import (
    ATOL,
    HADAMARD,
    PAULI_I,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    QState,
    ShapeMismatchError,
    SizeLimitError,
    UnitaryOp,
    as_matrix,
    kron_all,
)


@dataclass
class GeneratorReport:
    passed: bool
    anticommutation: float
    traces: dict[str, float]
    basis_passed: bool


def validate_generators(u1: np.ndarray | UnitaryOp, u2: np.ndarray | UnitaryOp) -> GeneratorReport:
    """Check the trace conditions, anticommutation, and that
    {I, U1, U2, U1U2} is a complete orthogonal basis at d = 2.
    """
    m1, m2 = as_matrix(u1), as_matrix(u2)
    if m1.shape != (2, 2) or m2.shape != (2, 2):
        raise ShapeMismatchError("generators must be 2x2")
    traces = {
        "tr_u1": abs(np.trace(m1)),
        "tr_u2": abs(np.trace(m2)),
        "tr_u1u2": abs(np.trace(m1 @ m2)),
        "tr_u1dag_u2": abs(np.trace(m1.conj().T @ m2)),
    }
    anti = qcore.max_abs(m1 @ m2 + m2 @ m1)
    passed = anti <= ATOL and all(v <= ATOL for v in traces.values())
    basis_passed = False
    if passed:
        fam = algebra.OperatorFamily("generated", [PAULI_I, m1, m2, m1 @ m2])
        basis_passed = algebra.check_orthogonal_basis(fam).passed
        passed = passed and basis_passed
    return GeneratorReport(passed=passed, anticommutation=anti, traces=traces,
                           basis_passed=basis_passed)


@dataclass(frozen=True)
class PqcScheme:
    """Keyed unitary ensemble U_k = prod_i u1^{alpha_i} u2^{beta_i}."""

    u1: np.ndarray
    u2: np.ndarray
    n: int
    label: str = "custom"

    def __post_init__(self):
        report = validate_generators(self.u1, self.u2)
        if not report.passed:
            raise ShapeMismatchError(
                f"generators do not satisfy the perfect-encryption conditions: {report}")

    @property
    def key_count(self) -> int:
        return 1 << (2 * self.n)

    def key_from_index(self, index: int) -> "PqcKey":
        alpha = format(index >> self.n, f"0{self.n}b")
        beta = format(index & ((1 << self.n) - 1), f"0{self.n}b")
        return PqcKey(alpha, beta)

    def random_key(self, rng: np.random.Generator) -> "PqcKey":
        return self.key_from_index(int(rng.integers(0, self.key_count)))


@dataclass(frozen=True)
class PqcKey:
    alpha: str
    beta: str

    def __post_init__(self):
        if len(self.alpha) != len(self.beta):
            raise ShapeMismatchError("alpha and beta must have equal length")
        if any(c not in "01" for c in self.alpha + self.beta):
            raise ShapeMismatchError("key strings must be binary")

    @property
    def n(self) -> int:
        return len(self.alpha)

    def xor(self, other: "PqcKey") -> "PqcKey":
        a = format(int(self.alpha, 2) ^ int(other.alpha, 2), f"0{self.n}b")
        b = format(int(self.beta, 2) ^ int(other.beta, 2), f"0{self.n}b")
        return PqcKey(a, b)


SCHEME_GENERATORS = {
    "XY": (PAULI_X, PAULI_Y),
    "YH": (PAULI_Y, HADAMARD),
    "XZ": (PAULI_X, PAULI_Z),
}


def make_scheme(name: str, n: int) -> PqcScheme:
    if name not in SCHEME_GENERATORS:
        raise ValueError(f"unknown scheme {name!r}; options: {sorted(SCHEME_GENERATORS)}")
    u1, u2 = SCHEME_GENERATORS[name]
    return PqcScheme(u1=u1, u2=u2, n=n, label=name)


def key_unitary(scheme: PqcScheme, key: PqcKey) -> UnitaryOp:
    """Bitwise tensor product of u1^{alpha_i} u2^{beta_i}."""
    if key.n != scheme.n:
        raise ShapeMismatchError(f"key length {key.n} != scheme width {scheme.n}")
    factors = []
    for ai, bi in zip(key.alpha, key.beta):
        m = PAULI_I
        if bi == "1":
            m = scheme.u2 @ m
        if ai == "1":
            m = scheme.u1 @ m
        factors.append(m)
    return UnitaryOp(kron_all(factors))


def average_cipher(scheme: PqcScheme, rho: QState) -> QState:
    """Key-average of the conjugated state: sum_k p_k U_k rho U_k^dag."""
    if rho.num_qubits != scheme.n:
        raise ShapeMismatchError(f"state has {rho.num_qubits} qubits, scheme expects {scheme.n}")
    if scheme.n > 4:
        raise SizeLimitError("key enumeration limited to n <= 4")
    mixed = rho.to_mixed()
    dim = mixed.dim
    acc = np.zeros((dim, dim), dtype=complex)
    for index in range(scheme.key_count):
        u = key_unitary(scheme, scheme.key_from_index(index)).matrix
        acc += u @ mixed.data @ u.conj().T
    return QState(mixed.layout, acc / scheme.key_count)


def generalized_commutation_phase(scheme: PqcScheme, k: PqcKey, l: PqcKey) -> int:
    """Sign s with U_k U_l = s U_l U_k, i.e. (-1)^(beta.gamma + alpha.delta)."""
    if k.n != scheme.n or l.n != scheme.n:
        raise ShapeMismatchError("keys must match the scheme width")
    bg = bin(int(k.beta, 2) & int(l.alpha, 2)).count("1")
    ad = bin(int(k.alpha, 2) & int(l.beta, 2)).count("1")
    return -1 if (bg + ad) % 2 else 1


def search_generator_pairs(candidates: dict[str, np.ndarray] | Sequence[np.ndarray]
                           ) -> list[tuple[str, str]]:
    """All ordered pairs from the candidate set passing validate_generators."""
    if isinstance(candidates, dict):
        named = list(candidates.items())
    else:
        named = [(f"u{i}", m) for i, m in enumerate(candidates)]
    passing = []
    for (na, ma), (nb, mb) in itertools.permutations(named, 2):
        if validate_generators(ma, mb).passed:
            passing.append((na, nb))
    return passing
