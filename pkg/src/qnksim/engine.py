"""Generic four-pass no-key session machine.

A protocol is four steps: Alice encrypts and sends (pass 1), Bob optionally
verifies/measures then encrypts and sends (pass 2), Alice likewise (pass 3),
Bob verifies and decrypts.  Step operations are built per session from the
owner's random choice and the preshared identity keys.  An adversary hook may
rewrite the in-flight state at each pass and keeps private memory across
passes.  Failed identification checks abort the session; decoy states are
substituted downstream so adversary-visible traffic continues.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from . import qcore
from .algebra import scalar_identity_phase
from .qcore import (
    ATOL,
    LayoutError,
    QState,
    ShapeMismatchError,
    SizeLimitError,
    UnitaryOp,
    apply,
    lift,
    phase_distance,
    tensor,
)

# Builders return a list of (matrix, target registers) applied in order.
OpList = list[tuple[np.ndarray, tuple[str, ...]]]
OpBuilder = Callable[[Any, "IdentityKeys | None"], OpList]

HOLDING_ENUMERATION_CAP = 4096


@dataclass(frozen=True)
class IdentityKeys:
    """Opaque preshared secrets; protocols document the names they read."""

    values: Mapping[str, Any]

    def __getitem__(self, name: str) -> Any:
        return self.values[name]

    def get(self, name: str, default: Any = None) -> Any:
        return self.values.get(name, default)


@dataclass(frozen=True)
class Domain:
    """Finite uniform randomness domain, decoded lazily from an index."""

    size: int
    decode: Callable[[int], Any] = lambda i: i

    @staticmethod
    def from_values(values: Sequence[Any]) -> "Domain":
        vals = list(values)
        return Domain(size=len(vals), decode=lambda i: vals[i])

    def values(self):
        return (self.decode(i) for i in range(self.size))


@dataclass(frozen=True)
class MeasureSpec:
    register: str
    expected: str


@dataclass(frozen=True)
class StepSpec:
    party: str                      # "alice" or "bob"
    verify: OpBuilder | None = None
    check: MeasureSpec | None = None
    encrypt: OpBuilder | None = None


@dataclass(frozen=True)
class ProtocolDef:
    name: str
    layout: tuple[tuple[str, int], ...]
    alice_domain: Domain
    bob_domain: Domain
    steps: tuple[StepSpec, StepSpec, StepSpec, StepSpec]
    message_register: str = "M"
    default_keys: IdentityKeys | None = None
    params: Mapping[str, Any] | None = None

    def __post_init__(self):
        if len(self.steps) != 4:
            raise ShapeMismatchError("a protocol has exactly four steps")
        if self.alice_domain.size < 1 or self.bob_domain.size < 1:
            raise ShapeMismatchError("randomness domains must be non-empty")
        names = [name for name, _ in self.layout]
        if self.message_register not in names:
            raise LayoutError(f"layout lacks message register {self.message_register!r}")
        if names[0] != self.message_register:
            raise LayoutError("message register must come first in the layout")
        expected = ("alice", "bob", "alice", "bob")
        if tuple(s.party for s in self.steps) != expected:
            raise ShapeMismatchError(f"step parties must be {expected}")

    @property
    def ancilla_layout(self) -> tuple[tuple[str, int], ...]:
        return tuple(entry for entry in self.layout if entry[0] != self.message_register)

    def message_qubits(self) -> int:
        return dict(self.layout)[self.message_register]


@dataclass
class MeasurementEvent:
    step: int
    register: str
    outcome: str
    expected: str
    probability: float

    @property
    def passed(self) -> bool:
        return self.outcome == self.expected


@dataclass
class PassRecord:
    pass_index: int
    digest: str
    adversary: str | None = None
    measurements: list[MeasurementEvent] = field(default_factory=list)
    state: QState | None = None


@dataclass
class Transcript:
    session_id: int
    seed: int
    protocol: str
    k_index: int
    l_index: int
    passes: list[PassRecord]
    status: str
    phase_distance: float | None
    final_state: QState | None = None
    adversary_memory: dict | None = None

    @property
    def delivered(self) -> bool:
        return self.status == "delivered"


@dataclass(frozen=True)
class AdversaryHook:
    """Per-pass interception with private memory and a final extraction."""

    label: str
    on_pass: Callable[[int, QState, dict, np.random.Generator], QState] | None = None
    extract: Callable[[dict], Any] | None = None


def _apply_ops(state: QState, ops: OpList) -> QState:
    for matrix, targets in ops:
        state = apply(matrix, state, targets)
    return state


def _initial_state(protocol: ProtocolDef, message: QState) -> QState:
    expected = ((protocol.message_register, protocol.message_qubits()),)
    if message.layout != expected:
        raise LayoutError(
            f"message layout {message.layout} does not match {expected}")
    if not message.is_pure:
        raise ShapeMismatchError("run_session expects a pure message state")
    state = message
    anc = protocol.ancilla_layout
    if anc:
        state = tensor(state, qcore.zero_state(anc))
    return state


def run_session(protocol: ProtocolDef, message: QState,
                keys: IdentityKeys | None = None,
                adversary: AdversaryHook | None = None,
                seed: int = 0, session_id: int = 0,
                bob_keys: IdentityKeys | None = None,
                record_states: bool = False) -> Transcript:
    """Execute one seeded session and return its transcript.

    ``keys`` are Alice's identity keys; Bob uses the same unless ``bob_keys``
    is given (mismatched keys model impersonation and corruption scenarios).
    """
    rng = np.random.default_rng(seed)
    keys = keys if keys is not None else protocol.default_keys
    bob_keys = bob_keys if bob_keys is not None else keys
    state = _initial_state(protocol, message)
    initial = state
    k_index = int(rng.integers(protocol.alice_domain.size))
    l_index = int(rng.integers(protocol.bob_domain.size))
    k = protocol.alice_domain.decode(k_index)
    l = protocol.bob_domain.decode(l_index)
    memory: dict = {}
    passes: list[PassRecord] = []
    status = "delivered"

    for step_no, step in enumerate(protocol.steps, start=1):
        choice = k if step.party == "alice" else l
        party_keys = keys if step.party == "alice" else bob_keys
        if step.verify is not None:
            state = _apply_ops(state, step.verify(choice, party_keys))
        if step.check is not None:
            outcome = qcore.measure(state, step.check.register, rng)
            state = outcome.post_state
            event = MeasurementEvent(step_no, step.check.register, outcome.outcome,
                                     step.check.expected, outcome.probability)
            if passes:
                passes[-1].measurements.append(event)
            if not event.passed and status == "delivered":
                status = f"aborted-at-pass-{step_no - 1}"
                state = qcore.random_product_state(protocol.layout, rng)
        if step.encrypt is not None:
            state = _apply_ops(state, step.encrypt(choice, party_keys))
        if step_no <= 3:
            record = PassRecord(pass_index=step_no, digest=state.digest(),
                                state=state if record_states else None)
            if adversary is not None and adversary.on_pass is not None:
                state = adversary.on_pass(step_no, state, memory, rng)
                record.adversary = adversary.label
            passes.append(record)

    dist = None
    if status == "delivered":
        dist = phase_distance(state, initial)
    return Transcript(session_id=session_id, seed=seed, protocol=protocol.name,
                      k_index=k_index, l_index=l_index, passes=passes, status=status,
                      phase_distance=dist, final_state=state,
                      adversary_memory=memory if adversary is not None else None)


# ---------------------------------------------------------------------------
# Holding condition

def _slot_matrix(protocol: ProtocolDef, builder: OpBuilder | None, choice: Any,
                 keys: IdentityKeys | None) -> np.ndarray:
    dim = 1 << qcore.total_qubits(protocol.layout)
    out = np.eye(dim, dtype=complex)
    if builder is None:
        return out
    for matrix, targets in builder(choice, keys):
        out = lift(matrix, protocol.layout, targets) @ out
    return out


def step_matrix(protocol: ProtocolDef, step_no: int, choice: Any,
                keys: IdentityKeys | None = None) -> np.ndarray:
    """Full-layout unitary for one step (verify first, then encrypt)."""
    step = protocol.steps[step_no - 1]
    keys = keys if keys is not None else protocol.default_keys
    v = _slot_matrix(protocol, step.verify, choice, keys)
    e = _slot_matrix(protocol, step.encrypt, choice, keys)
    return e @ v


@dataclass
class HoldingReport:
    passed: bool
    phases: dict[tuple[int, int], float]
    failures: list[tuple[int, int]]
    max_scalar_deviation: float
    eq4_max_residual: float

    def phase(self, k: int, l: int) -> float:
        return self.phases[(k, l)]


def verify_holding_condition(protocol: ProtocolDef,
                             keys: IdentityKeys | None = None) -> HoldingReport:
    """Enumerate all (k, l) and check the composed four-step operator is a
    global phase times the identity; also evaluate the necessary-condition
    residual with M = U'_k U_k and N = V'_l V_l.
    """
    na, nb = protocol.alice_domain.size, protocol.bob_domain.size
    if na * nb > HOLDING_ENUMERATION_CAP:
        raise SizeLimitError(
            f"domain product {na * nb} exceeds enumeration cap {HOLDING_ENUMERATION_CAP}")
    keys = keys if keys is not None else protocol.default_keys
    dim = 1 << qcore.total_qubits(protocol.layout)
    u1 = [step_matrix(protocol, 1, k, keys) for k in protocol.alice_domain.values()]
    v2 = [step_matrix(protocol, 2, l, keys) for l in protocol.bob_domain.values()]
    u3 = [step_matrix(protocol, 3, k, keys) for k in protocol.alice_domain.values()]
    v4 = [step_matrix(protocol, 4, l, keys) for l in protocol.bob_domain.values()]
    phases: dict[tuple[int, int], float] = {}
    failures: list[tuple[int, int]] = []
    max_dev = 0.0
    eq4_max = 0.0
    eye = np.eye(dim)
    for ki in range(na):
        m_k = u3[ki] @ u1[ki]
        uk = u1[ki]
        for li in range(nb):
            comp = v4[li] @ u3[ki] @ v2[li] @ uk
            phi = scalar_identity_phase(comp)
            if phi is None:
                failures.append((ki, li))
                max_dev = max(max_dev, qcore.max_abs(comp - (np.trace(comp) / dim) * eye))
                continue
            phases[(ki, li)] = phi
            max_dev = max(max_dev, qcore.max_abs(comp - cmath.exp(1j * phi) * eye))
            # necessary condition: [e^{-i phi} N kron M^T - U_k^dag kron U_k^T] vec(V_l^dag) = 0,
            # evaluated as e^{-i phi} N V_l^dag M - U_k^dag V_l^dag U_k without the Kronecker
            n_l = v4[li] @ v2[li]
            vld = v2[li].conj().T
            res = qcore.max_abs(
                cmath.exp(-1j * phi) * (n_l @ vld @ m_k) - uk.conj().T @ vld @ uk)
            eq4_max = max(eq4_max, res)
    return HoldingReport(passed=not failures and eq4_max <= ATOL, phases=phases,
                         failures=failures, max_scalar_deviation=max_dev,
                         eq4_max_residual=eq4_max)


# ---------------------------------------------------------------------------
# Ancilla framework

@dataclass(frozen=True)
class AncillaOp:
    """One framework operation: optional fresh ancilla plus a joint unitary.

    Alice's unitaries act on (ancilla, message); Bob's act on (message,
    ancilla).  The transmitted cipher is always the reduced message state;
    the party's register is retained in place across rounds.
    """

    party: str
    unitary: UnitaryOp
    prep: QState | None = None


def run_ancilla_session(ops: Sequence[AncillaOp], message: QState,
                        seed: int = 0, session_id: int = 0) -> Transcript:
    """Run the retained-ancilla framework (prepare, entangle, trace out).

    The joint system (A, M, B) is simulated globally as a density matrix so
    retained registers keep their correlations with the in-flight cipher.
    Pass records hold digests of the reduced (transmitted) cipher states.
    """
    if len(ops) != 4:
        raise ShapeMismatchError("the framework uses exactly four operations")
    if tuple(o.party for o in ops) != ("alice", "bob", "alice", "bob"):
        raise ShapeMismatchError("operations must alternate alice, bob, alice, bob")
    if ops[0].prep is None or ops[1].prep is None:
        raise ShapeMismatchError("the first operation of each party needs an ancilla prep")
    if len(ops[0].prep.layout) != 1 or len(ops[1].prep.layout) != 1:
        raise LayoutError("ancilla preps must be single-register states")
    rho_a = QState((("A", ops[0].prep.num_qubits),), ops[0].prep.to_mixed().data)
    rho_b = QState((("B", ops[1].prep.num_qubits),), ops[1].prep.to_mixed().data)
    msg = QState((("M", message.num_qubits),), message.data).to_mixed()
    state = tensor(tensor(rho_a, msg), rho_b)

    passes = []
    for round_no, op in enumerate(ops, start=1):
        if round_no > 2 and op.prep is not None:
            raise ShapeMismatchError("rounds 3 and 4 reuse the retained registers")
        targets = ("A", "M") if op.party == "alice" else ("M", "B")
        state = apply(op.unitary, state, targets)
        if round_no <= 3:
            cipher = qcore.partial_trace(state, ["M"])
            passes.append(PassRecord(pass_index=round_no, digest=cipher.digest()))
    delivered = qcore.partial_trace(state, ["M"])
    dist = phase_distance(delivered, msg)
    return Transcript(session_id=session_id, seed=seed, protocol="ancilla-framework",
                      k_index=0, l_index=0, passes=passes, status="delivered",
                      phase_distance=dist, final_state=delivered)


def controlled_unitary(single: np.ndarray, control_first: bool = True) -> UnitaryOp:
    """Two-qubit controlled-u.  With ``control_first`` the first qubit
    controls u on the second; otherwise the second controls u on the first
    (the layout needed when the ancilla register precedes the message).
    """
    u = qcore.as_matrix(single)
    p0 = np.diag([1.0, 0.0]).astype(complex)
    p1 = np.diag([0.0, 1.0]).astype(complex)
    if control_first:
        out = np.kron(p0, np.eye(2)) + np.kron(p1, u)
    else:
        out = np.kron(np.eye(2), p0) + np.kron(u, p1)
    return UnitaryOp(out)


# ---------------------------------------------------------------------------
# Identified-session conditions

@dataclass
class IdentifiedReport:
    passed: bool
    deterministic_checks: bool
    restoration: bool
    strict_factorization: dict[int, bool]
    key_independent: bool
    max_check_leak: float
    max_restoration_residual: float
    phases: dict[tuple[int, int], float]


def _embed_columns(layout, message_register) -> slice:
    """Column slice of a full-layout operator for ancilla-in = |0..0>."""
    anc_qubits = sum(n for name, n in layout if name != message_register)
    return slice(None, None, 1 << anc_qubits) if anc_qubits else slice(None)


def identified_condition_check(protocol: ProtocolDef,
                               keys_samples: Sequence[IdentityKeys | None] | None = None
                               ) -> IdentifiedReport:
    """Check the identified-session conditions by exact enumeration.

    For every (k, l) and sampled key set: (a) each declared identification
    measurement is deterministic on the honest flow (measured register
    exactly at its expected value), (b) the full flow restores the ancillas
    and acts as a global phase on the message register, (c) each pass
    composite factors as (operator) x (identity on the measured register)
    at the operator level, reported per pass, and (d) the honest flow is
    independent of the identity keys across the samples.
    """
    na, nb = protocol.alice_domain.size, protocol.bob_domain.size
    if na * nb > HOLDING_ENUMERATION_CAP:
        raise SizeLimitError("domain product exceeds enumeration cap")
    if keys_samples is None:
        keys_samples = [protocol.default_keys]
    layout = protocol.layout
    n_total = qcore.total_qubits(layout)
    dim = 1 << n_total
    m_qubits = protocol.message_qubits()
    anc_qubits = n_total - m_qubits
    cols = _embed_columns(layout, protocol.message_register)
    embed = np.eye(dim, dtype=complex)[:, cols]

    check_specs = [(i + 1, s.check) for i, s in enumerate(protocol.steps) if s.check]
    slices = qcore.register_slices(layout)

    def register_rows_ok(register: str, expected: str) -> np.ndarray:
        start, n = slices[register]
        want = int(expected, 2)
        idx = np.arange(dim)
        bits = (idx >> (n_total - start - n)) & ((1 << n) - 1)
        return bits == want

    max_leak = 0.0
    max_restore = 0.0
    phases: dict[tuple[int, int], float] = {}
    strict: dict[int, bool] = {1: True, 2: True, 3: True}
    flows: list[dict[tuple[int, int], np.ndarray]] = []
    ok_checks = True
    ok_restore = True

    for keys in keys_samples:
        flow_by_kl: dict[tuple[int, int], tuple[np.ndarray, ...]] = {}
        for ki, k in enumerate(protocol.alice_domain.values()):
            for li, l in enumerate(protocol.bob_domain.values()):
                choices = (k, l, k, l)
                kset = (keys, keys, keys, keys)
                # cumulative unitary, restricted to ancilla-in = 0; snapshots
                # are taken at each post-verification point, where the paper's
                # per-pass message factors live
                cum = embed.copy()
                snapshots: list[np.ndarray] = []
                for step_no, step in enumerate(protocol.steps, start=1):
                    ch, kk = choices[step_no - 1], kset[step_no - 1]
                    if step.verify is not None:
                        cum = _slot_matrix(protocol, step.verify, ch, kk) @ cum
                    if step_no >= 2:
                        snapshots.append(cum.copy())
                    if step.check is not None:
                        bad = ~register_rows_ok(step.check.register, step.check.expected)
                        leak = float(np.max(np.abs(cum[bad, :]))) if bad.any() else 0.0
                        max_leak = max(max_leak, leak)
                        if leak > ATOL:
                            ok_checks = False
                    if step.encrypt is not None:
                        cum = _slot_matrix(protocol, step.encrypt, ch, kk) @ cum
                flow_by_kl[(ki, li)] = tuple(snapshots)
                # restoration: cum = e^{i phi} embed
                ip = np.vdot(embed.reshape(-1), cum.reshape(-1))
                phi = cmath.phase(ip) if abs(ip) > 1e-12 else 0.0
                residual = qcore.max_abs(cum - cmath.exp(1j * phi) * embed)
                max_restore = max(max_restore, residual)
                if residual > ATOL:
                    ok_restore = False
                phases[(ki, li)] = phi
                # strict per-pass factorization against the measured register
                for pass_no in (1, 2, 3):
                    enc = protocol.steps[pass_no - 1].encrypt
                    ver = protocol.steps[pass_no].verify
                    spec = protocol.steps[pass_no].check
                    comp = (_slot_matrix(protocol, ver, choices[pass_no], kset[pass_no])
                            @ _slot_matrix(protocol, enc, choices[pass_no - 1], kset[pass_no - 1]))
                    if spec is None:
                        continue
                    if not _factors_on_register(comp, layout, spec.register):
                        strict[pass_no] = False
        flows.append(flow_by_kl)

    key_indep = True
    for other in flows[1:]:
        for kl, snaps in flows[0].items():
            for a, b in zip(snaps, other[kl]):
                if qcore.max_abs(a - b) > ATOL:
                    key_indep = False
    passed = ok_checks and ok_restore
    return IdentifiedReport(passed=passed, deterministic_checks=ok_checks,
                            restoration=ok_restore, strict_factorization=strict,
                            key_independent=key_indep, max_check_leak=max_leak,
                            max_restoration_residual=max_restore, phases=phases)


def _factors_on_register(op: np.ndarray, layout, register: str) -> bool:
    """True if op = u (x) I on the named register (operator-level factoring)."""
    n_total = qcore.total_qubits(layout)
    start, n = qcore.register_slices(layout)[register]
    reg_axes = list(range(start, start + n))
    rest = [q for q in range(n_total) if q not in reg_axes]
    t = op.reshape((2,) * (2 * n_total))
    perm = rest + reg_axes
    t = np.transpose(t, perm + [n_total + p for p in perm])
    d_rest, d_reg = 1 << len(rest), 1 << n
    t = t.reshape(d_rest, d_reg, d_rest, d_reg)
    u = np.einsum("abcb->ac", t) / d_reg
    recon = np.einsum("ac,bd->abcd", u, np.eye(d_reg, dtype=complex))
    return qcore.max_abs(t - recon) <= ATOL
