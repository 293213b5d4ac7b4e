"""Numeric witnesses for the operator-algebra results behind the protocols.

These verifiers enumerate finite operator families and report residuals;
they witness the identities on concrete instances rather than proving them.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import qcore
from .qcore import (
    ATOL,
    HADAMARD,
    PAULI_I,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    ShapeMismatchError,
    SimulationError,
    UnitaryOp,
    as_matrix,
    hs_inner,
    kron_all,
    realign,
)


class PreconditionError(SimulationError):
    """A verifier's stated precondition does not hold on the inputs."""


def wrap_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    out = math.fmod(theta + math.pi, 2 * math.pi)
    if out <= 0:
        out += 2 * math.pi
    return out - math.pi


def angle_distance(a: float, b: float) -> float:
    return abs(wrap_angle(a - b))


@dataclass(frozen=True)
class OperatorFamily:
    """A labelled list of unitaries of common dimension."""

    label: str
    members: tuple[UnitaryOp, ...]

    def __init__(self, label: str, members: Sequence[UnitaryOp | np.ndarray]):
        ops = tuple(m if isinstance(m, UnitaryOp) else UnitaryOp(m) for m in members)
        if not ops:
            raise ShapeMismatchError("operator family must be non-empty")
        d = ops[0].dim
        if any(m.dim != d for m in ops):
            raise ShapeMismatchError("family members must share one dimension")
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "members", ops)

    @property
    def dim(self) -> int:
        return self.members[0].dim

    def __len__(self) -> int:
        return len(self.members)

    def matrices(self) -> list[np.ndarray]:
        return [m.matrix for m in self.members]


@dataclass(frozen=True)
class PhaseTable:
    """Angles phi(k, l) indexed by member pairs."""

    entries: dict[tuple[int, int], float]

    def __call__(self, k: int, l: int) -> float:
        return self.entries[(k, l)]

    def corrupted(self, k: int, l: int, delta: float = math.pi) -> "PhaseTable":
        out = dict(self.entries)
        out[(k, l)] = out[(k, l)] + delta
        return PhaseTable(out)


def scalar_identity_phase(m: np.ndarray, atol: float = ATOL) -> float | None:
    """If m = e^{i phi} I within tolerance, return phi; otherwise None."""
    m = as_matrix(m)
    d = m.shape[0]
    scale = np.trace(m) / d
    if abs(abs(scale) - 1.0) > atol:
        return None
    if qcore.max_abs(m - scale * np.eye(d)) > atol:
        return None
    return cmath.phase(scale)


# ---------------------------------------------------------------------------
# Orthogonal bases

@dataclass
class BasisReport:
    passed: bool
    gram: np.ndarray
    gram_deviation: float
    complete: bool
    reconstruction_error: float | None = None
    coefficients: np.ndarray | None = None


def check_orthogonal_basis(family: OperatorFamily,
                           test_matrix: np.ndarray | None = None) -> BasisReport:
    """Check hs_inner(M_i, M_j) = d delta_ij and, optionally, that a test
    matrix is reconstructed from its expansion coefficients tr(rho M_i^dag)/d.
    """
    d = family.dim
    mats = family.matrices()
    n = len(mats)
    gram = np.array([[hs_inner(a, b) for b in mats] for a in mats])
    target = d * np.eye(n)
    gram_dev = qcore.max_abs(gram - target)
    complete = n == d * d
    passed = complete and gram_dev <= ATOL
    report = BasisReport(passed=passed, gram=gram, gram_deviation=gram_dev, complete=complete)
    if test_matrix is not None and passed:
        rho = as_matrix(test_matrix)
        coeffs = np.array([np.trace(rho @ m.conj().T) / d for m in mats])
        recon = sum(c * m for c, m in zip(coeffs, mats))
        report.coefficients = coeffs
        report.reconstruction_error = qcore.max_abs(recon - rho)
        report.passed = passed and report.reconstruction_error <= ATOL
    return report


# ---------------------------------------------------------------------------
# Realignment lemma

@dataclass
class LemmaReport:
    residual_first: float
    residual_second: float

    @property
    def passed(self) -> bool:
        return self.residual_first <= ATOL and self.residual_second <= ATOL


def verify_lemma1(n: UnitaryOp, m: UnitaryOp, a: UnitaryOp, b: UnitaryOp,
                  p: UnitaryOp) -> LemmaReport:
    """Witness the realignment identity for unitarily similar A, B.

    Preconditions (checked): N A M = B and P^{-1} B P = A.  The second-form
    residual uses P' = P^{-1}, for which P'^{-1} A P' = B.
    """
    nm, mm, am, bm, pm = (as_matrix(x) for x in (n, m, a, b, p))
    d = am.shape[0]
    if any(x.shape != (d, d) for x in (nm, mm, bm, pm)):
        raise ShapeMismatchError("all operators must share one dimension")
    p_inv = pm.conj().T
    if qcore.max_abs(nm @ am @ mm - bm) > ATOL:
        raise PreconditionError("N A M != B")
    if qcore.max_abs(p_inv @ bm @ pm - am) > ATOL:
        raise PreconditionError("P^{-1} B P != A")
    first = np.kron(nm @ p_inv, (pm @ mm).T) - np.eye(d * d)
    res1 = float(np.linalg.norm(first @ realign(bm)))
    # second form, with P' = P^{-1} so that P'^{-1} A P' = B
    second = np.kron(nm, mm.T) - np.kron(pm, p_inv.T)
    res2 = float(np.linalg.norm(second @ realign(am)))
    return LemmaReport(residual_first=res1, residual_second=res2)


def make_lemma1_instance(dim: int, rng: np.random.Generator
                         ) -> tuple[UnitaryOp, UnitaryOp, UnitaryOp, UnitaryOp, UnitaryOp]:
    """Random (N, M, A, B, P) with N A M = B and P^{-1} B P = A."""
    a = qcore.random_unitary(dim, rng)
    p = qcore.random_unitary(dim, rng)
    b = UnitaryOp(p.matrix @ a.matrix @ p.matrix.conj().T)
    n = qcore.random_unitary(dim, rng)
    m = UnitaryOp(a.matrix.conj().T @ n.matrix.conj().T @ b.matrix)
    return n, m, a, b, p


# ---------------------------------------------------------------------------
# Four-family factorisation theorem

@dataclass
class Theorem1Report:
    passed: bool
    m_deviation: float
    n_deviation: float
    max_residual: float
    m_common: np.ndarray
    n_common: np.ndarray
    failures: list[tuple[int, int]] = field(default_factory=list)


def phase_table_from_families(fa: OperatorFamily, fb: OperatorFamily,
                              fc: OperatorFamily, fd: OperatorFamily) -> PhaseTable:
    """Read phi(k, l) off D_l C_k B_l A_k = e^{i phi} I; error if non-scalar."""
    entries: dict[tuple[int, int], float] = {}
    for k, ak in enumerate(fa.matrices()):
        ck = fc.matrices()[k]
        for l, bl in enumerate(fb.matrices()):
            dl = fd.matrices()[l]
            phi = scalar_identity_phase(dl @ ck @ bl @ ak)
            if phi is None:
                raise PreconditionError(f"D_l C_k B_l A_k is not scalar at (k={k}, l={l})")
            entries[(k, l)] = phi
    return PhaseTable(entries)


def verify_theorem1(fa: OperatorFamily, fb: OperatorFamily, fc: OperatorFamily,
                    fd: OperatorFamily, phases: PhaseTable) -> Theorem1Report:
    """Witness that M = C_k A_k is k-independent, N = D_l B_l is l-independent,
    and the realignment identity holds for every pair.
    """
    amats, bmats = fa.matrices(), fb.matrices()
    cmats, dmats = fc.matrices(), fd.matrices()
    if not (len(amats) == len(bmats) == len(cmats) == len(dmats)):
        raise ShapeMismatchError("the four families must have equal size")
    for k, ak in enumerate(amats):
        for l, bl in enumerate(bmats):
            phi = scalar_identity_phase(dmats[l] @ cmats[k] @ bl @ ak)
            if phi is None or angle_distance(phi, phases(k, l)) > 1e-6:
                raise PreconditionError(
                    f"precondition D_l C_k B_l A_k = e^(i phi(k,l)) I fails at (k={k}, l={l})")
    m_ops = [cmats[k] @ amats[k] for k in range(len(amats))]
    n_ops = [dmats[l] @ bmats[l] for l in range(len(bmats))]
    m_dev = max(qcore.max_abs(op - m_ops[0]) for op in m_ops)
    n_dev = max(qcore.max_abs(op - n_ops[0]) for op in n_ops)
    m_common, n_common = m_ops[0], n_ops[0]
    max_res = 0.0
    failures = []
    for k, ak in enumerate(amats):
        for l, bl in enumerate(bmats):
            bld = bl.conj().T
            phi = phases(k, l)
            # (N kron M^T) vec(X) = vec(N X M), avoiding the Kronecker product
            lhs = cmath.exp(-1j * phi) * (n_common @ bld @ m_common)
            rhs = ak.conj().T @ bld @ ak
            res = float(np.linalg.norm(realign(lhs - rhs)))
            max_res = max(max_res, res)
            if res > ATOL:
                failures.append((k, l))
    passed = m_dev <= ATOL and n_dev <= ATOL and max_res <= ATOL
    return Theorem1Report(passed, m_dev, n_dev, max_res, m_common, n_common, failures)


@dataclass
class Theorem2Report:
    passed: bool
    pairs: dict[tuple[int, int], tuple[bool, bool]]
    violations: list[tuple[int, int]]


def verify_theorem2(fa: OperatorFamily, fb: OperatorFamily) -> Theorem2Report:
    """With C_k = A_k^dag and D_l = B_l^dag, check that the pairwise
    generalized-commutation condition and the scalar-composite condition
    agree at every (k, l).
    """
    amats, bmats = fa.matrices(), fb.matrices()
    pairs: dict[tuple[int, int], tuple[bool, bool]] = {}
    violations = []
    for k, ak in enumerate(amats):
        ck = ak.conj().T
        for l, bl in enumerate(bmats):
            dl = bl.conj().T
            # (i) C_k B_l = e^{i phi} B_l C_k for some phase
            cond_i = scalar_identity_phase(ck @ bl @ ck.conj().T @ bl.conj().T) is not None
            # (ii) D_l C_k B_l A_k = e^{i phi} I
            cond_ii = scalar_identity_phase(dl @ ck @ bl @ ak) is not None
            pairs[(k, l)] = (cond_i, cond_ii)
            if cond_i != cond_ii:
                violations.append((k, l))
    return Theorem2Report(passed=not violations, pairs=pairs, violations=violations)


# ---------------------------------------------------------------------------
# Commutation equivalences

def verify_prop1(ua: UnitaryOp, ub: UnitaryOp) -> tuple[bool, bool, bool]:
    """Evaluate the three equivalent commutation conditions independently."""
    a, b = as_matrix(ua), as_matrix(ub)
    if a.shape != b.shape:
        raise ShapeMismatchError("operators must share one dimension")
    ad, bd = a.conj().T, b.conj().T
    c1 = qcore.max_abs(a @ b - b @ a) <= ATOL
    c2 = qcore.max_abs(bd @ ad - ad @ bd) <= ATOL
    c3 = qcore.max_abs(b @ ad - ad @ b) <= ATOL
    return c1, c2, c3


def _xor_shift_unitary(shift: int, nbits: int) -> np.ndarray:
    dim = 1 << nbits
    u = np.zeros((dim, dim), dtype=complex)
    for x in range(dim):
        u[x ^ shift, x] = 1.0
    return u


def _table_xor_unitary(table: Sequence[int], in_bits: int, out_bits: int,
                       slot: int, nslots: int) -> np.ndarray:
    """Permutation |m>|r_1>..|r_s> -> |m>|..., r_slot xor F(m), ...>."""
    dim = 1 << (in_bits + nslots * out_bits)
    u = np.zeros((dim, dim), dtype=complex)
    for x in range(dim):
        regs_bits = in_bits + nslots * out_bits
        m = x >> (regs_bits - in_bits)
        shift_pos = (nslots - 1 - slot) * out_bits
        y = x ^ (int(table[m]) << shift_pos)
        u[y, x] = 1.0
    return u


def remark1_families(kind: int, params: dict) -> tuple[OperatorFamily, OperatorFamily]:
    """Build commuting permutation-unitary pairs on a shared layout.

    kind 1: basis shifts |m> -> |m xor s| for shift strings ``s_a``, ``s_b``.
    kind 2: one auxiliary register, both parties XOR their table into it.
    kind 3: two auxiliary registers, one per party.
    Each param may be a single shift/table or a list of them; the returned
    families contain one unitary per entry and are pairwise commuting.
    """
    if kind == 1:
        shifts_a = params["s_a"] if isinstance(params["s_a"], list) else [params["s_a"]]
        shifts_b = params["s_b"] if isinstance(params["s_b"], list) else [params["s_b"]]
        nbits = len(shifts_a[0])
        if any(len(s) != nbits for s in shifts_a + shifts_b):
            raise ShapeMismatchError("shift strings must share one length")
        fam_a = OperatorFamily("shift_a", [_xor_shift_unitary(int(s, 2), nbits) for s in shifts_a])
        fam_b = OperatorFamily("shift_b", [_xor_shift_unitary(int(s, 2), nbits) for s in shifts_b])
    elif kind in (2, 3):
        tables_a = params["f_a"] if isinstance(params["f_a"][0], (list, tuple)) else [params["f_a"]]
        tables_b = params["f_b"] if isinstance(params["f_b"][0], (list, tuple)) else [params["f_b"]]
        in_bits = (len(tables_a[0]) - 1).bit_length()
        out_bits = params["width"]
        if any(len(t) != 1 << in_bits for t in tables_a + tables_b):
            raise ShapeMismatchError("table sizes must match the input arity")
        nslots = 1 if kind == 2 else 2
        slot_b = 0 if kind == 2 else 1
        fam_a = OperatorFamily(
            "aux_a", [_table_xor_unitary(t, in_bits, out_bits, 0, nslots) for t in tables_a])
        fam_b = OperatorFamily(
            "aux_b", [_table_xor_unitary(t, in_bits, out_bits, slot_b, nslots) for t in tables_b])
    else:
        raise ValueError(f"unknown kind {kind}")
    for ua in fam_a.members:
        for ub in fam_b.members:
            if not all(verify_prop1(ua, ub)):
                raise PreconditionError("constructed pair does not commute")
    return fam_a, fam_b


# ---------------------------------------------------------------------------
# Stock families

def pauli_family(n_qubits: int = 1) -> OperatorFamily:
    """Tensor powers of {I, X, Y, Z}: a complete orthogonal unitary basis."""
    singles = [PAULI_I, PAULI_X, PAULI_Y, PAULI_Z]
    mats = [np.array([[1.0 + 0j]])]
    for _ in range(n_qubits):
        mats = [np.kron(m, s) for m in mats for s in singles]
    return OperatorFamily(f"pauli_{n_qubits}", mats)


def generated_family(u1: np.ndarray, u2: np.ndarray, n_qubits: int = 1,
                     label: str = "generated") -> OperatorFamily:
    """All tensor products of u1^a u2^b over per-qubit exponent bits."""
    singles = [PAULI_I, as_matrix(u1), as_matrix(u2), as_matrix(u1) @ as_matrix(u2)]
    mats = [np.array([[1.0 + 0j]])]
    for _ in range(n_qubits):
        mats = [np.kron(m, s) for m in mats for s in singles]
    return OperatorFamily(label, mats)


def yh_family(n_qubits: int = 1) -> OperatorFamily:
    return generated_family(PAULI_Y, HADAMARD, n_qubits, label=f"yh_{n_qubits}")
