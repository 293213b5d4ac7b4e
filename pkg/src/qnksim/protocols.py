"""Concrete protocol instantiations for the session engine.

Rotation schemes use polarization-plane rotations R(theta) around one public
axis, so R(a)|theta> = |theta + a> with |theta> = cos(theta)|0> +
sin(theta)|1>; theta = pi/2 is the computational |1>.  Boolean-function
schemes are XOR-mask permutations controlled on the message register.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from . import qcore
from .engine import Domain, IdentityKeys, MeasureSpec, ProtocolDef, StepSpec, run_session
from .pqc import PqcScheme, key_unitary, make_scheme
from .qcore import (
    Axis,
    HADAMARD,
    QState,
    ShapeMismatchError,
    basis_state,
    kron_all,
    rotation,
)

# Rotations act in the |0>/|1> polarization plane: R(t) = rotation by Bloch
# angle 2t about this axis, i.e. [[cos t, -sin t], [sin t, cos t]].
PLANE_AXIS = Axis(0.0, -1.0, 0.0)


def plane_rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


def polar_state(theta: float) -> np.ndarray:
    return np.array([math.cos(theta), math.sin(theta)], dtype=complex)


@dataclass(frozen=True)
class AngleGrid:
    """The public 2K-element angle set {k pi / K}."""

    K: int

    def __post_init__(self):
        if self.K < 1:
            raise ShapeMismatchError("K must be positive")

    @property
    def size(self) -> int:
        return 2 * self.K

    @property
    def values(self) -> tuple[float, ...]:
        return tuple(k * math.pi / self.K for k in range(2 * self.K))

    def angle(self, index: int) -> float:
        return (index % self.size) * math.pi / self.K

    def partner_index(self, index: int) -> int:
        """Index of pi - angle(index), the other root of cos(2 theta)."""
        return (self.K - index) % self.size

    def nearest_index_by_cos2(self, c: float) -> int:
        """Grid index whose cos(2 theta) is closest to c (ties -> smaller k)."""
        best, best_err = 0, abs(math.cos(0.0) - c)
        for idx in range(1, self.size):
            err = abs(math.cos(2 * self.angle(idx)) - c)
            if err < best_err - 1e-15:
                best, best_err = idx, err
        return best


def _angle_tuple_domain(grid: AngleGrid, n: int) -> Domain:
    base = grid.size

    def decode(index: int) -> tuple[int, ...]:
        out = []
        for _ in range(n):
            out.append(index % base)
            index //= base
        return tuple(out)

    return Domain(size=base**n, decode=decode)


# ---------------------------------------------------------------------------
# Rotation protocols

def _rotation_ops(axes: Sequence[Axis], thetas: Sequence[float], register: str):
    mats = [rotation(ax, 2 * th).matrix for ax, th in zip(axes, thetas)]
    return [(kron_all(mats), (register,))]


def rotation_protocol(n_qubits: int, grid: AngleGrid,
                      axes: Sequence[Axis] | None = None,
                      bob_axes: Sequence[Axis] | None = None) -> ProtocolDef:
    """Per-qubit rotation scheme: encrypt with random grid angles, decrypt by
    rotating back.  Alice and Bob share the public axes (one per qubit); a
    deliberate axis mismatch breaks the holding condition.
    """
    axes = list(axes) if axes is not None else [PLANE_AXIS] * n_qubits
    bob_axes = list(bob_axes) if bob_axes is not None else list(axes)
    if len(axes) != n_qubits or len(bob_axes) != n_qubits:
        raise ShapeMismatchError("one axis per qubit required")
    dom = _angle_tuple_domain(grid, n_qubits)

    def alice(sign):
        def build(choice, keys):
            return _rotation_ops(axes, [sign * grid.angle(i) for i in choice], "M")
        return build

    def bob(sign):
        def build(choice, keys):
            return _rotation_ops(bob_axes, [sign * grid.angle(i) for i in choice], "M")
        return build

    steps = (
        StepSpec("alice", encrypt=alice(+1)),
        StepSpec("bob", encrypt=bob(+1)),
        StepSpec("alice", encrypt=alice(-1)),
        StepSpec("bob", verify=bob(-1)),
    )
    return ProtocolDef(name="rotation", layout=(("M", n_qubits),), alice_domain=dom,
                       bob_domain=dom, steps=steps,
                       params={"n_qubits": n_qubits, "grid": grid, "axes": tuple(axes),
                               "bob_axes": tuple(bob_axes)})


def rotation_with_id(base: ProtocolDef, phi_c: Sequence[float]) -> ProtocolDef:
    """Rotation scheme with a preshared angle offset: Alice adds phi_c at
    pass 1, Bob removes it with his decryption.  Reduces to the base
    protocol when phi_c is the zero vector.
    """
    p = base.params
    n_qubits, grid = p["n_qubits"], p["grid"]
    axes, bob_axes = list(p["axes"]), list(p["bob_axes"])
    if len(phi_c) != n_qubits:
        raise ShapeMismatchError("phi_c needs one angle per qubit")
    dom = _angle_tuple_domain(grid, n_qubits)

    def alice_enc(choice, keys):
        offs = keys["phi_c"]
        return _rotation_ops(axes, [grid.angle(i) + o for i, o in zip(choice, offs)], "M")

    def alice_dec(choice, keys):
        return _rotation_ops(axes, [-grid.angle(i) for i in choice], "M")

    def bob_enc(choice, keys):
        return _rotation_ops(bob_axes, [grid.angle(i) for i in choice], "M")

    def bob_dec(choice, keys):
        offs = keys["phi_c"]
        return _rotation_ops(bob_axes, [-grid.angle(i) - o for i, o in zip(choice, offs)], "M")

    steps = (
        StepSpec("alice", encrypt=alice_enc),
        StepSpec("bob", encrypt=bob_enc),
        StepSpec("alice", encrypt=alice_dec),
        StepSpec("bob", verify=bob_dec),
    )
    return ProtocolDef(name="rotation-id", layout=(("M", n_qubits),), alice_domain=dom,
                       bob_domain=dom, steps=steps,
                       default_keys=IdentityKeys({"phi_c": tuple(phi_c)}),
                       params={**p, "phi_c": tuple(phi_c)})


# ---------------------------------------------------------------------------
# Mutual identification over photon groups

@dataclass(frozen=True)
class PhotonGroupLayout:
    """Wire layout of one photon group: n message (IF) photons and m
    identification (ID) photons interleaved by a secret permutation, plus
    the per-pass ID angles.
    """

    if_positions: tuple[int, ...]
    id_positions: tuple[int, ...]
    psi1: tuple[float, ...]
    psi2: tuple[float, ...]
    psi3: tuple[float, ...]

    def __post_init__(self):
        n, m = len(self.if_positions), len(self.id_positions)
        if sorted(self.if_positions + self.id_positions) != list(range(n + m)):
            raise ShapeMismatchError("positions must partition 0..n+m-1")
        if not (len(self.psi1) == len(self.psi2) == len(self.psi3) == m):
            raise ShapeMismatchError("need one ID angle triple per ID photon")

    @property
    def n(self) -> int:
        return len(self.if_positions)

    @property
    def m(self) -> int:
        return len(self.id_positions)

    def wire_map(self) -> list[tuple[str, int]]:
        """Position p -> (register, index) under the secret interleave."""
        out: list[tuple[str, int]] = [("", 0)] * (self.n + self.m)
        for i, p in enumerate(self.if_positions):
            out[p] = ("M", i)
        for j, p in enumerate(self.id_positions):
            out[p] = ("ID", j)
        return out

    @staticmethod
    def random(n: int, m: int, rng: np.random.Generator) -> "PhotonGroupLayout":
        order = rng.permutation(n + m)
        return PhotonGroupLayout(
            if_positions=tuple(int(p) for p in order[:n]),
            id_positions=tuple(int(p) for p in order[n:]),
            psi1=tuple(rng.uniform(0, 2 * math.pi, m)),
            psi2=tuple(rng.uniform(0, 2 * math.pi, m)),
            psi3=tuple(rng.uniform(0, 2 * math.pi, m)),
        )


def mutual_id_protocol(group: PhotonGroupLayout, grid: AngleGrid,
                       phi_c: Sequence[float]) -> ProtocolDef:
    """Group scheme with ID photons checked at every pass.  Each party
    verifies the incoming ID photons (rotate back, measure |0..0>), aborts
    into random decoys on mismatch, and re-arms them for the next pass.
    """
    n, m = group.n, group.m
    if len(phi_c) != n:
        raise ShapeMismatchError("phi_c needs one angle per IF photon")
    if m == 0:
        base = rotation_protocol(n, grid)
        prot = rotation_with_id(base, phi_c)
        return ProtocolDef(name="mutual-id", layout=prot.layout,
                           alice_domain=prot.alice_domain, bob_domain=prot.bob_domain,
                           steps=prot.steps, default_keys=IdentityKeys(
                               {"phi_c": tuple(phi_c), "group": group}),
                           params={"grid": grid, "group": group, "phi_c": tuple(phi_c)})
    dom = _angle_tuple_domain(grid, n)
    plane = [PLANE_AXIS] * max(n, m)

    def if_ops(thetas):
        return _rotation_ops(plane[:n], thetas, "M")

    def id_ops(thetas):
        return _rotation_ops(plane[:m], thetas, "ID")

    def s1_enc(choice, keys):
        g = keys["group"]
        offs = keys["phi_c"]
        return (if_ops([grid.angle(i) + o for i, o in zip(choice, offs)])
                + id_ops(list(g.psi1)))

    def s2_ver(choice, keys):
        return id_ops([-a for a in keys["group"].psi1])

    def s2_enc(choice, keys):
        return if_ops([grid.angle(i) for i in choice]) + id_ops(list(keys["group"].psi2))

    def s3_ver(choice, keys):
        return id_ops([-a for a in keys["group"].psi2])

    def s3_enc(choice, keys):
        return if_ops([-grid.angle(i) for i in choice]) + id_ops(list(keys["group"].psi3))

    def s4_ver(choice, keys):
        offs = keys["phi_c"]
        return (if_ops([-grid.angle(i) - o for i, o in zip(choice, offs)])
                + id_ops([-a for a in keys["group"].psi3]))

    zeros = "0" * m
    steps = (
        StepSpec("alice", encrypt=s1_enc),
        StepSpec("bob", verify=s2_ver, check=MeasureSpec("ID", zeros), encrypt=s2_enc),
        StepSpec("alice", verify=s3_ver, check=MeasureSpec("ID", zeros), encrypt=s3_enc),
        StepSpec("bob", verify=s4_ver, check=MeasureSpec("ID", zeros)),
    )
    return ProtocolDef(name="mutual-id", layout=(("M", n), ("ID", m)), alice_domain=dom,
                       bob_domain=dom, steps=steps,
                       default_keys=IdentityKeys({"phi_c": tuple(phi_c), "group": group}),
                       params={"grid": grid, "group": group, "phi_c": tuple(phi_c)})


# ---------------------------------------------------------------------------
# Classical payload over the rotation scheme

@dataclass
class ClassicalResult:
    sent: str
    recovered: str
    share_bits: str
    transcript: Any


def classical_simple(bits: str, grid: AngleGrid, phi_c: Sequence[float],
                     seed: int = 0, shares: int = 1) -> ClassicalResult:
    """Send a classical bit string by encoding bit x as the polar state
    |x pi/2> and running the offset rotation scheme.  With ``shares`` > 1
    each bit is split into random XOR shares carried by separate photons
    and recombined by the receiver.
    """
    if any(c not in "01" for c in bits):
        raise ShapeMismatchError("message must be a bit string")
    rng = np.random.default_rng([seed, 1])
    n = len(bits) * shares
    if len(phi_c) != n:
        raise ShapeMismatchError(f"phi_c needs {n} angles ({shares} shares per bit)")
    share_bits = []
    for c in bits:
        parts = [int(rng.integers(0, 2)) for _ in range(shares - 1)]
        parts.append(int(c) ^ (sum(parts) % 2))
        share_bits.extend(parts)
    share_str = "".join(str(b) for b in share_bits)
    message = basis_state((("M", n),), share_str)
    protocol = rotation_with_id(rotation_protocol(n, grid), phi_c)
    transcript = run_session(protocol, message, seed=seed)
    out = qcore.measure(transcript.final_state, "M", np.random.default_rng([seed, 2]))
    recovered_shares = out.outcome
    recovered = ""
    for i in range(len(bits)):
        chunk = recovered_shares[i * shares:(i + 1) * shares]
        recovered += str(sum(int(c) for c in chunk) % 2)
    return ClassicalResult(sent=bits, recovered=recovered, share_bits=share_str,
                           transcript=transcript)


# ---------------------------------------------------------------------------
# Hadamard/CNOT masked scheme

def _xor_mask_unitary(in_bits: int, out_bits: int, fn: Callable[[int], int]) -> np.ndarray:
    """Permutation |m>|r> -> |m>|r xor fn(m)> on in_bits + out_bits qubits."""
    dim = 1 << (in_bits + out_bits)
    u = np.zeros((dim, dim), dtype=complex)
    for x in range(dim):
        m = x >> out_bits
        u[x ^ fn(m), x] = 1.0
    return u


def _shift_unitary(bits: int, shift: int) -> np.ndarray:
    dim = 1 << bits
    u = np.zeros((dim, dim), dtype=complex)
    for x in range(dim):
        u[x ^ shift, x] = 1.0
    return u


def _mask_value(m: int, n: int, const: int, coeffs: Sequence[int]) -> int:
    # bit 1 of m is the most significant bit
    out = const
    for j in range(n):
        if (m >> (n - 1 - j)) & 1:
            out ^= coeffs[j]
    return out


def hadamard_cnot_protocol(n: int, s_a: str, s_b: str) -> ProtocolDef:
    """Classical-message scheme: Hadamard the message register, then both
    parties mask their check registers with message-controlled XOR patterns
    and the preshared strings.  Alice checks her register returns to |0..0>
    at pass 3; the final Hadamard layer restores |x>.
    """
    if len(s_a) != n or len(s_b) != n:
        raise ShapeMismatchError("identity strings must have length n")
    if 3 * n > qcore.MAX_PURE_QUBITS:
        raise qcore.SizeLimitError(f"3n = {3 * n} qubits exceeds the register budget")
    h_layer = kron_all([HADAMARD] * n)

    def decode(index: int) -> tuple[int, tuple[int, ...]]:
        const = index & ((1 << n) - 1)
        index >>= n
        coeffs = []
        for _ in range(n):
            coeffs.append(index & ((1 << n) - 1))
            index >>= n
        return const, tuple(coeffs)

    dom = Domain(size=1 << (n * (n + 1)), decode=decode)

    def mask_op(const: int, coeffs: Sequence[int], reg: str):
        u = _xor_mask_unitary(n, n, lambda m: _mask_value(m, n, const, coeffs))
        return (u, ("M", reg))

    def s1_enc(choice, keys):
        i, k_a = choice
        return [(h_layer, ("M",)), mask_op(i, k_a, "A")]

    def s2_enc(choice, keys):
        j, k_b = choice
        return [(_shift_unitary(n, int(keys["s_b"], 2)), ("A",)), mask_op(j, k_b, "B")]

    def s3_ver(choice, keys):
        i, k_a = choice
        return [mask_op(i ^ int(keys["s_b"], 2), k_a, "A")]

    def s3_enc(choice, keys):
        return [(_shift_unitary(n, int(keys["s_a"], 2)), ("B",))]

    def s4_ver(choice, keys):
        j, k_b = choice
        return [mask_op(j ^ int(keys["s_a"], 2), k_b, "B"), (h_layer, ("M",))]

    steps = (
        StepSpec("alice", encrypt=s1_enc),
        StepSpec("bob", encrypt=s2_enc),
        StepSpec("alice", verify=s3_ver, check=MeasureSpec("A", "0" * n), encrypt=s3_enc),
        StepSpec("bob", verify=s4_ver),
    )
    return ProtocolDef(name="hadamard-cnot", layout=(("M", n), ("A", n), ("B", n)),
                       alice_domain=dom, bob_domain=dom, steps=steps,
                       default_keys=IdentityKeys({"s_a": s_a, "s_b": s_b}),
                       params={"n": n, "s_a": s_a, "s_b": s_b})


def run_hadamard_cnot(x: str, s_a: str, s_b: str, seed: int = 0):
    """Convenience: build the scheme, send |x>, and read the result."""
    protocol = hadamard_cnot_protocol(len(x), s_a, s_b)
    message = basis_state((("M", len(x)),), x)
    transcript = run_session(protocol, message, seed=seed)
    recovered = None
    if transcript.delivered:
        out = qcore.measure(transcript.final_state, "M", np.random.default_rng(seed + 1))
        recovered = out.outcome
    return protocol, transcript, recovered


# ---------------------------------------------------------------------------
# Boolean-function schemes

@dataclass(frozen=True)
class BooleanFunctionTable:
    """Explicit truth table {0,1}^arity -> {0,1}^width."""

    arity: int
    width: int
    table: tuple[int, ...]

    def __post_init__(self):
        if self.arity > 8:
            raise ShapeMismatchError("table arity limited to 8 bits")
        if len(self.table) != 1 << self.arity:
            raise ShapeMismatchError(f"table needs {1 << self.arity} entries")
        if any(not 0 <= v < (1 << self.width) for v in self.table):
            raise ShapeMismatchError("table entries exceed the output width")

    def __call__(self, x: int) -> int:
        return self.table[x]

    @staticmethod
    def random(arity: int, width: int, rng: np.random.Generator) -> "BooleanFunctionTable":
        vals = tuple(int(v) for v in rng.integers(0, 1 << width, 1 << arity))
        return BooleanFunctionTable(arity, width, vals)

    @staticmethod
    def constant(arity: int, width: int, value: int = 0) -> "BooleanFunctionTable":
        return BooleanFunctionTable(arity, width, (value,) * (1 << arity))


def _tables_domain(tables) -> Domain:
    if isinstance(tables, BooleanFunctionTable):
        tables = [tables]
    return Domain.from_values(list(tables))


def table_unitary(table: BooleanFunctionTable) -> np.ndarray:
    return _xor_mask_unitary(table.arity, table.width, table)


def boolean_protocol(fa, fb) -> ProtocolDef:
    """Ancilla-register scheme: each party XORs its function of the message
    into its own register and removes it again one round later.  ``fa`` and
    ``fb`` may be single tables or lists of tables to randomise over.
    """
    dom_a, dom_b = _tables_domain(fa), _tables_domain(fb)
    probe_a, probe_b = dom_a.decode(0), dom_b.decode(0)
    k, n = probe_a.arity, probe_a.width
    if probe_b.arity != k or probe_b.width != n:
        raise ShapeMismatchError("tables must share arity and width")

    def mask(reg):
        def build(choice, keys):
            return [(table_unitary(choice), ("M", reg))]
        return build

    steps = (
        StepSpec("alice", encrypt=mask("FA")),
        StepSpec("bob", encrypt=mask("FB")),
        StepSpec("alice", encrypt=mask("FA")),
        StepSpec("bob", verify=mask("FB")),
    )
    return ProtocolDef(name="boolean", layout=(("M", k), ("FA", n), ("FB", n)),
                       alice_domain=dom_a, bob_domain=dom_b, steps=steps,
                       params={"k": k, "n": n})


def boolean_with_id(fa, fb, s_a: BooleanFunctionTable, s_b: BooleanFunctionTable) -> ProtocolDef:
    """Boolean scheme with inherent identification: the identity tables are
    XORed on top of the function registers and checked by measurement at
    every pass.  Choosing s_a == s_b weakens the step-3 substitution check.
    """
    dom_a, dom_b = _tables_domain(fa), _tables_domain(fb)
    probe = dom_a.decode(0)
    k, n = probe.arity, probe.width
    for t in (dom_b.decode(0), s_a, s_b):
        if t.arity != k or t.width != n:
            raise ShapeMismatchError("all tables must share arity and width")
    if s_a.table == s_b.table:
        warnings.warn("s_a == s_b weakens third-register substitution detection",
                      stacklevel=2)

    def fmask(reg):
        def build(choice, keys):
            return [(table_unitary(choice), ("M", reg))]
        return build

    def smask(which, reg):
        def build(choice, keys):
            return [(table_unitary(keys[which]), ("M", reg))]
        return build

    def s3_ver(choice, keys):
        return [(table_unitary(keys["s_b"]), ("M", "R2")),
                (table_unitary(choice), ("M", "R2"))]

    def s4_ver(choice, keys):
        return [(table_unitary(keys["s_a"]), ("M", "R3")),
                (table_unitary(choice), ("M", "R3"))]

    def s1_enc(choice, keys):
        return [(table_unitary(choice), ("M", "R2")),
                (table_unitary(keys["s_a"]), ("M", "R3"))]

    def s2_enc(choice, keys):
        return [(table_unitary(choice), ("M", "R3")),
                (table_unitary(keys["s_b"]), ("M", "R2"))]

    zeros = "0" * n
    steps = (
        StepSpec("alice", encrypt=s1_enc),
        StepSpec("bob", verify=smask("s_a", "R3"), check=MeasureSpec("R3", zeros),
                 encrypt=s2_enc),
        StepSpec("alice", verify=s3_ver, check=MeasureSpec("R2", zeros),
                 encrypt=smask("s_a", "R3")),
        StepSpec("bob", verify=s4_ver, check=MeasureSpec("R3", zeros)),
    )
    return ProtocolDef(name="boolean-id", layout=(("M", k), ("R2", n), ("R3", n)),
                       alice_domain=dom_a, bob_domain=dom_b, steps=steps,
                       default_keys=IdentityKeys({"s_a": s_a, "s_b": s_b}),
                       params={"k": k, "n": n})


def phase_kickback_protocol(fa, fb) -> ProtocolDef:
    """Diagonal phase-oracle scheme for 1-bit-output functions: applying the
    same oracle twice cancels the (-1)^f(m) signs, so Alice and Bob each
    apply theirs at two passes.
    """
    dom_a, dom_b = _tables_domain(fa), _tables_domain(fb)
    n = dom_a.decode(0).arity
    for d in (dom_a, dom_b):
        for t in d.values():
            if t.width != 1 or t.arity != n:
                raise ShapeMismatchError("phase oracles need width-1 tables of equal arity")

    def oracle(choice, keys):
        signs = np.array([(-1.0) ** choice(m) for m in range(1 << n)], dtype=complex)
        return [(np.diag(signs), ("M",))]

    steps = (
        StepSpec("alice", encrypt=oracle),
        StepSpec("bob", encrypt=oracle),
        StepSpec("alice", encrypt=oracle),
        StepSpec("bob", verify=oracle),
    )
    return ProtocolDef(name="phase-kickback", layout=(("M", n),), alice_domain=dom_a,
                       bob_domain=dom_b, steps=steps, params={"n": n})


# ---------------------------------------------------------------------------
# Perfect-encryption based scheme and the bare commutative reference

def pqc_qnk_protocol(scheme: PqcScheme) -> ProtocolDef:
    """Three-pass scheme built from a perfect-encryption key ensemble; the
    holding condition follows from commutation up to a sign.
    """
    dom = Domain(size=scheme.key_count, decode=scheme.key_from_index)

    def enc(choice, keys):
        return [(key_unitary(scheme, choice).matrix, ("M",))]

    def dec(choice, keys):
        return [(key_unitary(scheme, choice).matrix.conj().T, ("M",))]

    steps = (
        StepSpec("alice", encrypt=enc),
        StepSpec("bob", encrypt=enc),
        StepSpec("alice", encrypt=dec),
        StepSpec("bob", verify=dec),
    )
    return ProtocolDef(name="pqc-qnk", layout=(("M", scheme.n),), alice_domain=dom,
                       bob_domain=dom, steps=steps,
                       params={"scheme": scheme.label, "n": scheme.n})


def xor_shift_protocol(n: int) -> ProtocolDef:
    """Commutative basis-shift scheme |m> -> |m xor s>, the minimal
    no-identification instance (each shift is its own inverse).
    """
    dom = Domain(size=1 << n)

    def shift(choice, keys):
        return [(_shift_unitary(n, choice), ("M",))]

    steps = (
        StepSpec("alice", encrypt=shift),
        StepSpec("bob", encrypt=shift),
        StepSpec("alice", encrypt=shift),
        StepSpec("bob", verify=shift),
    )
    return ProtocolDef(name="commutative-basic", layout=(("M", n),), alice_domain=dom,
                       bob_domain=dom, steps=steps, params={"n": n})


# ---------------------------------------------------------------------------
# Classical reference scheme

@dataclass
class ShamirResult:
    c1: str
    c2: str
    c3: str
    recovered: str


def shamir_classical(message: str, k_a: str, k_b: str) -> ShamirResult:
    """XOR-mask instantiation of the classical three-pass exchange.  The
    XOR of the three ciphers equals the message, which is exactly why XOR
    masks are insecure against a passive classical eavesdropper.
    """
    if not (len(message) == len(k_a) == len(k_b)):
        raise ShapeMismatchError("message and masks must have equal length")
    n = len(message)
    m, a, b = int(message, 2), int(k_a, 2), int(k_b, 2)
    c1 = m ^ a
    c2 = c1 ^ b
    c3 = c2 ^ a
    out = c3 ^ b
    fmt = f"0{n}b"
    return ShamirResult(c1=format(c1, fmt), c2=format(c2, fmt), c3=format(c3, fmt),
                        recovered=format(out, fmt))


# ---------------------------------------------------------------------------
# Registry used by the CLI and the acceptance suite

def make_protocol(name: str, params: Mapping[str, Any] | None = None,
                  rng: np.random.Generator | None = None) -> ProtocolDef:
    """Instantiate a named protocol with the given (or default) parameters."""
    p = dict(params or {})
    rng = rng if rng is not None else np.random.default_rng(0)
    if name == "commutative-basic":
        return xor_shift_protocol(int(p.get("n", 2)))
    if name == "rotation":
        grid = AngleGrid(int(p.get("K", 4)))
        return rotation_protocol(int(p.get("n", 1)), grid)
    if name == "rotation-id":
        grid = AngleGrid(int(p.get("K", 4)))
        n = int(p.get("n", 1))
        base = rotation_protocol(n, grid)
        phi_c = p.get("phi_c")
        if phi_c is None:
            phi_c = [grid.angle(int(i)) for i in rng.integers(0, grid.size, n)]
        return rotation_with_id(base, phi_c)
    if name == "mutual-id":
        grid = AngleGrid(int(p.get("K", 2)))
        n, m = int(p.get("n", 2)), int(p.get("m", 1))
        group = PhotonGroupLayout.random(n, m, rng)
        phi_c = p.get("phi_c")
        if phi_c is None:
            phi_c = [grid.angle(int(i)) for i in rng.integers(0, grid.size, n)]
        return mutual_id_protocol(group, grid, phi_c)
    if name == "pqc-qnk":
        return pqc_qnk_protocol(make_scheme(str(p.get("scheme", "YH")), int(p.get("n", 1))))
    if name == "boolean":
        k, n = int(p.get("k", 2)), int(p.get("n", 2))
        fa = BooleanFunctionTable.random(k, n, rng)
        fb = BooleanFunctionTable.random(k, n, rng)
        return boolean_protocol(fa, fb)
    if name == "boolean-id":
        k, n = int(p.get("k", 2)), int(p.get("n", 2))
        fa = BooleanFunctionTable.random(k, n, rng)
        fb = BooleanFunctionTable.random(k, n, rng)
        s_a = BooleanFunctionTable.random(k, n, rng)
        s_b = BooleanFunctionTable.random(k, n, rng)
        while s_b.table == s_a.table:
            s_b = BooleanFunctionTable.random(k, n, rng)
        return boolean_with_id(fa, fb, s_a, s_b)
    if name == "phase-kickback":
        n = int(p.get("n", 2))
        count = int(p.get("functions", 4))
        fas = [BooleanFunctionTable.random(n, 1, rng) for _ in range(count)]
        fbs = [BooleanFunctionTable.random(n, 1, rng) for _ in range(count)]
        return phase_kickback_protocol(fas, fbs)
    if name == "hadamard-cnot":
        n = int(p.get("n", 2))
        s_a = p.get("s_a") or "".join(str(int(v)) for v in rng.integers(0, 2, n))
        s_b = p.get("s_b") or "".join(str(int(v)) for v in rng.integers(0, 2, n))
        return hadamard_cnot_protocol(n, s_a, s_b)
    raise ValueError(f"unknown protocol {name!r}; see list_protocols()")


def list_protocols() -> list[str]:
    return ["commutative-basic", "rotation", "rotation-id", "mutual-id", "pqc-qnk",
            "boolean", "boolean-id", "phase-kickback", "hadamard-cnot"]


def default_message(protocol: ProtocolDef, rng: np.random.Generator,
                    bits: str | None = None) -> QState:
    """A message state appropriate for the protocol's register.

    ``bits`` forces the computational basis state |bits>; otherwise rotation
    schemes get a random product of grid polar states and everything else a
    random pure state.
    """
    n = protocol.message_qubits()
    layout = ((protocol.message_register, n),)
    if bits is not None:
        return basis_state(layout, bits)
    grid = (protocol.params or {}).get("grid")
    if grid is not None:
        vec = np.array([1.0 + 0j])
        for i in rng.integers(0, grid.size, n):
            vec = np.kron(vec, polar_state(grid.angle(int(i))))
        return QState(layout, vec)
    return qcore.random_state(layout, rng)
