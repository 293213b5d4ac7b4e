"""Exact dense simulation primitives.

States are either pure amplitude vectors or density matrices over a named
register layout.  Qubit 0 is the first qubit of the first register and is
the most significant bit of a computational-basis index, which matches the
ordering produced by ``np.kron``.  All operations are pure functions; any
randomness is drawn from an explicitly passed ``numpy.random.Generator``.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

# Tolerances: algebraic identities vs scalar constructions.
ATOL = 1e-9
ATOL_SCALAR = 1e-12

# Desk-scale register budget.
MAX_PURE_QUBITS = 14
MAX_MIXED_QUBITS = 8


class SimulationError(Exception):
    """Base class for simulator errors."""


class FormMismatchError(SimulationError):
    """Operands have incompatible forms (pure vs mixed)."""


class ShapeMismatchError(SimulationError):
    """Matrix or vector dimensions do not line up."""


class LayoutError(SimulationError):
    """Unknown, duplicate or mismatched register names."""


class SizeLimitError(SimulationError):
    """Register budget exceeded (configuration error)."""


class DegenerateOutcomeError(SimulationError):
    """Renormalisation after measurement is numerically impossible."""


Layout = tuple[tuple[str, int], ...]


def _normalize_layout(layout: Iterable[tuple[str, int]]) -> Layout:
    out = tuple((str(name), int(n)) for name, n in layout)
    names = [name for name, _ in out]
    if len(set(names)) != len(names):
        raise LayoutError(f"duplicate register names in layout {names}")
    if any(n <= 0 for _, n in out):
        raise LayoutError("register sizes must be positive")
    return out


def total_qubits(layout: Layout) -> int:
    return sum(n for _, n in layout)


def register_slices(layout: Layout) -> dict[str, tuple[int, int]]:
    """Map register name to its (first qubit, qubit count)."""
    out = {}
    pos = 0
    for name, n in layout:
        out[name] = (pos, n)
        pos += n
    return out


def target_qubits(layout: Layout, targets: Sequence[str]) -> list[int]:
    """Global qubit indices covered by `targets`, in the given register order."""
    slices = register_slices(layout)
    idx: list[int] = []
    for name in targets:
        if name not in slices:
            raise LayoutError(f"unknown register {name!r}")
        start, n = slices[name]
        idx.extend(range(start, start + n))
    if len(set(idx)) != len(idx):
        raise LayoutError(f"repeated register in targets {tuple(targets)}")
    return idx


@dataclass(frozen=True)
class QState:
    """A quantum register state: pure amplitude vector or density matrix."""

    layout: Layout
    data: np.ndarray

    def __init__(self, layout: Iterable[tuple[str, int]], data: np.ndarray):
        layout = _normalize_layout(layout)
        data = np.asarray(data, dtype=complex)
        n = total_qubits(layout)
        dim = 1 << n
        if data.ndim == 1:
            if n > MAX_PURE_QUBITS:
                raise SizeLimitError(f"{n} qubits exceeds pure-state limit {MAX_PURE_QUBITS}")
            if data.shape != (dim,):
                raise ShapeMismatchError(f"vector length {data.shape} != 2^{n}")
            norm = np.linalg.norm(data)
            if abs(norm - 1.0) > ATOL:
                raise ShapeMismatchError(f"pure state not normalised: |norm-1|={abs(norm-1):.2e}")
        elif data.ndim == 2:
            if n > MAX_MIXED_QUBITS:
                raise SizeLimitError(f"{n} qubits exceeds density-matrix limit {MAX_MIXED_QUBITS}")
            if data.shape != (dim, dim):
                raise ShapeMismatchError(f"matrix shape {data.shape} != (2^{n}, 2^{n})")
            if np.max(np.abs(data - data.conj().T)) > ATOL:
                raise ShapeMismatchError("density matrix not Hermitian")
            if abs(np.trace(data).real - 1.0) > ATOL or abs(np.trace(data).imag) > ATOL:
                raise ShapeMismatchError("density matrix trace != 1")
            if np.min(np.linalg.eigvalsh((data + data.conj().T) / 2)) < -ATOL:
                raise ShapeMismatchError("density matrix not positive semidefinite")
        else:
            raise ShapeMismatchError("state data must be a vector or a square matrix")
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "data", data)

    @property
    def is_pure(self) -> bool:
        return self.data.ndim == 1

    @property
    def num_qubits(self) -> int:
        return total_qubits(self.layout)

    @property
    def dim(self) -> int:
        return 1 << self.num_qubits

    def to_mixed(self) -> "QState":
        if not self.is_pure:
            return self
        return QState(self.layout, np.outer(self.data, self.data.conj()))

    def digest(self) -> str:
        """Deterministic hash of the state content (rounded to kill noise)."""
        h = hashlib.sha256()
        h.update(repr(self.layout).encode())
        h.update(np.round(np.ascontiguousarray(self.data), 10).tobytes())
        return h.hexdigest()[:16]


@dataclass(frozen=True)
class UnitaryOp:
    """A dense unitary matrix on a power-of-two dimension."""

    matrix: np.ndarray
    dim: int

    def __init__(self, matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ShapeMismatchError("unitary must be a square matrix")
        d = matrix.shape[0]
        if d & (d - 1) != 0 or d == 0:
            raise ShapeMismatchError(f"dimension {d} is not a power of two")
        if np.max(np.abs(matrix @ matrix.conj().T - np.eye(d))) > ATOL:
            raise ShapeMismatchError("matrix is not unitary within tolerance")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "dim", d)

    @property
    def num_qubits(self) -> int:
        return self.dim.bit_length() - 1

    def dagger(self) -> "UnitaryOp":
        return UnitaryOp(self.matrix.conj().T)


@dataclass(frozen=True)
class Axis:
    """Unit 3-vector on the Bloch sphere."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        if abs(self.x**2 + self.y**2 + self.z**2 - 1.0) > ATOL_SCALAR:
            raise ShapeMismatchError("axis is not a unit vector")

    @staticmethod
    def normalized(x: float, y: float, z: float) -> "Axis":
        r = math.sqrt(x * x + y * y + z * z)
        if r == 0.0:
            raise ShapeMismatchError("cannot normalise the zero vector")
        return Axis(x / r, y / r, z / r)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def cross_norm(self, other: "Axis") -> float:
        return float(np.linalg.norm(np.cross(self.as_array(), other.as_array())))


AXIS_X = Axis(1.0, 0.0, 0.0)
AXIS_Y = Axis(0.0, 1.0, 0.0)
AXIS_Z = Axis(0.0, 0.0, 1.0)

# Standard single-qubit matrices (plain arrays; wrap in UnitaryOp as needed).
PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


@dataclass(frozen=True)
class MeasurementOutcome:
    register: str
    outcome: str
    probability: float
    post_state: QState


def as_matrix(op: UnitaryOp | np.ndarray) -> np.ndarray:
    if isinstance(op, UnitaryOp):
        return op.matrix
    return np.asarray(op, dtype=complex)


# ---------------------------------------------------------------------------
# Construction helpers

def basis_state(layout: Iterable[tuple[str, int]], bits: str) -> QState:
    """Computational basis state |bits> (most significant bit first)."""
    layout = _normalize_layout(layout)
    n = total_qubits(layout)
    if len(bits) != n or any(c not in "01" for c in bits):
        raise ShapeMismatchError(f"bit string {bits!r} does not match {n} qubits")
    vec = np.zeros(1 << n, dtype=complex)
    vec[int(bits, 2)] = 1.0
    return QState(layout, vec)


def zero_state(layout: Iterable[tuple[str, int]]) -> QState:
    layout = _normalize_layout(layout)
    return basis_state(layout, "0" * total_qubits(layout))


def random_state(layout: Iterable[tuple[str, int]], rng: np.random.Generator) -> QState:
    """Haar-like random pure state from a normalised complex Gaussian."""
    layout = _normalize_layout(layout)
    dim = 1 << total_qubits(layout)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return QState(layout, v / np.linalg.norm(v))


def random_product_state(layout: Iterable[tuple[str, int]], rng: np.random.Generator) -> QState:
    layout = _normalize_layout(layout)
    vec = np.array([1.0 + 0j])
    for _ in range(total_qubits(layout)):
        q = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        vec = np.kron(vec, q / np.linalg.norm(q))
    return QState(layout, vec)


def random_unitary(dim: int, rng: np.random.Generator) -> UnitaryOp:
    """Haar-like random unitary: QR of a complex Gaussian matrix."""
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return UnitaryOp(q)


def kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for m in mats:
        out = np.kron(out, np.asarray(m, dtype=complex))
    return out


# ---------------------------------------------------------------------------
# Core operations

def tensor(a, b):
    """Kronecker product of two states (same form) or two unitaries."""
    if isinstance(a, UnitaryOp) and isinstance(b, UnitaryOp):
        return UnitaryOp(np.kron(a.matrix, b.matrix))
    if isinstance(a, QState) and isinstance(b, QState):
        if a.is_pure != b.is_pure:
            raise FormMismatchError("cannot tensor a pure state with a mixed state")
        return QState(a.layout + b.layout, np.kron(a.data, b.data))
    raise FormMismatchError(f"cannot tensor {type(a).__name__} with {type(b).__name__}")


def lift(u: UnitaryOp | np.ndarray, layout: Layout, targets: Sequence[str]) -> np.ndarray:
    """Expand an operator on `targets` to the full layout dimension."""
    m = as_matrix(u)
    idx = target_qubits(layout, targets)
    n = total_qubits(layout)
    k = len(idx)
    if m.shape != (1 << k, 1 << k):
        raise ShapeMismatchError(f"operator dim {m.shape[0]} != 2^{k} for targets {tuple(targets)}")
    if n == k:
        if idx == list(range(n)):
            return m
    rest = [q for q in range(n) if q not in idx]
    full = np.kron(m, np.eye(1 << len(rest), dtype=complex))
    # kron ordering is [targets..., rest...]; permute axes back to global order
    t = full.reshape((2,) * (2 * n))
    perm = idx + rest
    inv = [perm.index(q) for q in range(n)]
    t = np.transpose(t, inv + [n + p for p in inv])
    return t.reshape(1 << n, 1 << n)


def apply(u: UnitaryOp | np.ndarray, state: QState, targets: Sequence[str] | None = None) -> QState:
    """Apply a unitary to the named target registers (all registers if None)."""
    m = as_matrix(u)
    if targets is None:
        targets = [name for name, _ in state.layout]
    idx = target_qubits(state.layout, targets)
    k = len(idx)
    if m.shape != (1 << k, 1 << k):
        raise ShapeMismatchError(
            f"operator dim {m.shape[0]} != 2^{k} qubits of targets {tuple(targets)}")
    n = state.num_qubits
    if state.is_pure:
        if k == n and idx == list(range(n)):
            return QState(state.layout, m @ state.data)
        psi = state.data.reshape((2,) * n)
        mt = m.reshape((2,) * (2 * k))
        out = np.tensordot(mt, psi, axes=(list(range(k, 2 * k)), idx))
        # tensordot puts the output axes first; move them back into place
        out = np.moveaxis(out, list(range(k)), idx)
        return QState(state.layout, out.reshape(-1))
    full = lift(m, state.layout, targets)
    return QState(state.layout, full @ state.data @ full.conj().T)


def partial_trace(state: QState, keep: Sequence[str]) -> QState:
    """Reduced density matrix over `keep` (mixed-form input required)."""
    if state.is_pure:
        raise FormMismatchError("partial_trace requires a density matrix; use to_mixed()")
    keep = list(keep)
    keep_layout = tuple((name, n) for name, n in state.layout if name in keep)
    if len(keep_layout) != len(keep):
        known = {name for name, _ in state.layout}
        raise LayoutError(f"unknown register in keep: {set(keep) - known}")
    n = state.num_qubits
    keep_idx = target_qubits(state.layout, [name for name, _ in keep_layout])
    drop_idx = [q for q in range(n) if q not in keep_idx]
    if not drop_idx:
        return state
    t = state.data.reshape((2,) * (2 * n))
    for q in sorted(drop_idx, reverse=True):
        t = np.trace(t, axis1=q, axis2=q + t.ndim // 2)
    k = len(keep_idx)
    return QState(keep_layout, t.reshape(1 << k, 1 << k))


def rotation(axis: Axis, phi: float) -> UnitaryOp:
    """Bloch rotation cos(phi/2) I + i sin(phi/2) (n . sigma)."""
    ns = axis.x * PAULI_X + axis.y * PAULI_Y + axis.z * PAULI_Z
    return UnitaryOp(math.cos(phi / 2) * PAULI_I + 1j * math.sin(phi / 2) * ns)


def commutator(a: UnitaryOp | np.ndarray, b: UnitaryOp | np.ndarray) -> np.ndarray:
    ma, mb = as_matrix(a), as_matrix(b)
    if ma.shape != mb.shape:
        raise ShapeMismatchError("commutator operands must have equal dimensions")
    return ma @ mb - mb @ ma


def hs_inner(m1: np.ndarray, m2: np.ndarray) -> complex:
    """Hilbert-Schmidt inner product Tr(m1 m2^dagger)."""
    m1, m2 = as_matrix(m1), as_matrix(m2)
    if m1.shape != m2.shape:
        raise ShapeMismatchError("hs_inner operands must have equal dimensions")
    return complex(np.trace(m1 @ m2.conj().T))


def realign(m: np.ndarray) -> np.ndarray:
    """Row-major vectorisation, so that realign(A X B) = (A kron B^T) realign(X)."""
    m = as_matrix(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeMismatchError("realign expects a square matrix")
    return m.reshape(-1)


def phase_distance(a: QState, b: QState) -> float:
    """Global-phase-invariant distance between two states of the same form.

    Pure states: min over theta of ||a - e^{i theta} b||_2.  Mixed states:
    trace distance.  Zero iff the states are equal up to a global phase.
    """
    if a.layout != b.layout:
        raise LayoutError(f"layout mismatch: {a.layout} vs {b.layout}")
    if a.is_pure != b.is_pure:
        raise FormMismatchError("states must have the same form")
    if a.is_pure:
        # align b's global phase first; the closed form sqrt(2 - 2|<a|b>|)
        # loses half the significant digits near zero
        ip = np.vdot(b.data, a.data)
        if abs(ip) < ATOL_SCALAR:
            return float(np.linalg.norm(a.data - b.data))
        return float(np.linalg.norm(a.data - (ip / abs(ip)) * b.data))
    diff = a.data - b.data
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


def measure(state: QState, register: str, rng: np.random.Generator) -> MeasurementOutcome:
    """Computational-basis measurement of one register, sampled by Born rule.

    The post-state keeps the full layout with the measured register collapsed
    to the sampled basis string and renormalised.
    """
    idx = target_qubits(state.layout, [register])
    k = len(idx)
    n = state.num_qubits
    if state.is_pure:
        psi = state.data.reshape((2,) * n)
        moved = np.moveaxis(psi, idx, range(k)).reshape(1 << k, -1)
        probs = np.sum(np.abs(moved) ** 2, axis=1)
    else:
        rho = state.data.reshape((2,) * (2 * n))
        moved = np.moveaxis(rho, list(idx) + [n + q for q in idx],
                            list(range(k)) + [n + q for q in range(k)])
        flat = moved.reshape(1 << k, 1 << (n - k), 1 << k, 1 << (n - k))
        probs = np.einsum("abab->a", flat).real
    total = probs.sum()
    if not math.isfinite(total) or total <= ATOL:
        raise DegenerateOutcomeError("outcome probabilities do not sum to a positive value")
    probs = np.clip(probs / total, 0.0, None)
    probs = probs / probs.sum()
    outcome = int(rng.choice(1 << k, p=probs))
    p = float(probs[outcome])
    if p <= 0.0:
        raise DegenerateOutcomeError("sampled a zero-probability outcome")
    bits = format(outcome, f"0{k}b")
    if state.is_pure:
        proj = np.zeros_like(moved)
        proj[outcome] = moved[outcome]
        post = np.moveaxis(proj.reshape((2,) * n), range(k), idx).reshape(-1)
        post = post / np.linalg.norm(post)
    else:
        proj = np.zeros_like(flat)
        proj[outcome, :, outcome, :] = flat[outcome, :, outcome, :]
        back = np.moveaxis(
            proj.reshape((2,) * (2 * n)),
            list(range(k)) + [n + q for q in range(k)],
            list(idx) + [n + q for q in idx],
        ).reshape(1 << n, 1 << n)
        post = back / np.trace(back).real
    return MeasurementOutcome(register, bits, p, QState(state.layout, post))


def outcome_probabilities(state: QState, register: str) -> np.ndarray:
    """Exhaustive Born-rule probabilities for measuring one register."""
    idx = target_qubits(state.layout, [register])
    k = len(idx)
    n = state.num_qubits
    if state.is_pure:
        psi = state.data.reshape((2,) * n)
        moved = np.moveaxis(psi, idx, range(k)).reshape(1 << k, -1)
        return np.sum(np.abs(moved) ** 2, axis=1)
    full = state.data.reshape((2,) * (2 * n))
    moved = np.moveaxis(full, list(idx) + [n + q for q in idx],
                        list(range(k)) + [n + q for q in range(k)])
    flat = moved.reshape(1 << k, 1 << (n - k), 1 << k, 1 << (n - k))
    return np.einsum("abab->a", flat).real


# ---------------------------------------------------------------------------
# Product-state surgery (used by per-photon adversaries)

def product_factor(state: QState, qubit: int) -> np.ndarray:
    """Extract the single-qubit factor at global index `qubit`.

    Requires the qubit to be unentangled from the rest (Schmidt rank 1);
    raises FormMismatchError otherwise.
    """
    if not state.is_pure:
        raise FormMismatchError("product_factor requires a pure state")
    n = state.num_qubits
    psi = state.data.reshape((2,) * n)
    mat = np.moveaxis(psi, qubit, 0).reshape(2, -1)
    u, s, _ = np.linalg.svd(mat, full_matrices=False)
    if len(s) > 1 and s[1] > 1e-7:
        raise FormMismatchError(f"qubit {qubit} is entangled with the rest (s1={s[1]:.2e})")
    return u[:, 0] * np.sign(s[0])


def replace_factor(state: QState, qubit: int, chi: np.ndarray) -> QState:
    """Replace the unentangled qubit at `qubit` with single-qubit state `chi`."""
    if not state.is_pure:
        raise FormMismatchError("replace_factor requires a pure state")
    chi = np.asarray(chi, dtype=complex)
    if chi.shape != (2,):
        raise ShapeMismatchError("replacement must be a single-qubit amplitude pair")
    chi = chi / np.linalg.norm(chi)
    n = state.num_qubits
    psi = state.data.reshape((2,) * n)
    mat = np.moveaxis(psi, qubit, 0).reshape(2, -1)
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    if len(s) > 1 and s[1] > 1e-7:
        raise FormMismatchError(f"qubit {qubit} is entangled with the rest (s1={s[1]:.2e})")
    rest = vh[0] * s[0]
    rest = rest / np.linalg.norm(rest)
    new = np.outer(chi, rest).reshape((2,) + (2,) * (n - 1))
    new = np.moveaxis(new, 0, qubit)
    return QState(state.layout, new.reshape(-1))


# ---------------------------------------------------------------------------
# Small matrix utilities shared by the verifier modules

def max_abs(m: np.ndarray) -> float:
    return float(np.max(np.abs(m))) if m.size else 0.0


def deviation_up_to_phase(m1: np.ndarray, m2: np.ndarray) -> float:
    """max-entry deviation between m1 and e^{i theta} m2, minimised over theta."""
    m1, m2 = as_matrix(m1), as_matrix(m2)
    ip = np.vdot(m2.reshape(-1), m1.reshape(-1))
    if abs(ip) < ATOL_SCALAR:
        return max_abs(m1 - m2)
    phase = ip / abs(ip)
    return max_abs(m1 - phase * m2)
