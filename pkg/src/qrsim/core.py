"""Dense statevector and density-matrix simulation.

Basis convention used throughout the package: a bitstring ``b0 b1 ... b(n-1)``
has ``b0`` belonging to qubit 0, and the amplitude index is
``sum(b_k * 2**(n-1-k))``, i.e. qubit 0 is the most significant bit.  The same
ordering is used for histogram keys, probability vectors and the text format.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, Union

import numpy as np

MAX_QUBITS = 12
STATE_TOL = 1e-10
CPTP_TOL = 1e-12
PSD_TOL = 1e-8


class InvalidOperationError(ValueError):
    """A gate or channel application that is malformed (e.g. duplicate operands)."""


class ChannelError(ValueError):
    """A Kraus channel that is not completely positive and trace preserving."""


# ---------------------------------------------------------------------------
# gate matrices

_SQ2 = 1 / np.sqrt(2)

I2 = np.eye(2, dtype=complex)
H = np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
S = np.array([[1, 0], [0, 1j]], dtype=complex)
SDG = np.array([[1, 0], [0, -1j]], dtype=complex)
CX = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


def u1(theta: float) -> np.ndarray:
    """Phase gate ``diag(1, exp(i*theta))``."""
    return np.array([[1, 0], [0, np.exp(1j * theta)]], dtype=complex)


_FIXED = {"H": H, "X": X, "Y": Y, "Z": Z, "S": S, "SDG": SDG, "CX": CX}
GATE_KINDS = ("H", "X", "Y", "Z", "S", "SDG", "U1", "CX")


@dataclass(frozen=True)
class GateOp:
    """One gate application.  ``targets`` is ``(control, target)`` for CX."""

    kind: str
    targets: tuple[int, ...]
    theta: float | None = None

    def __post_init__(self):
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if kind not in GATE_KINDS:
            raise InvalidOperationError(f"unknown gate kind {self.kind!r}")
        arity = 2 if kind == "CX" else 1
        if len(self.targets) != arity:
            raise InvalidOperationError(
                f"{kind} takes {arity} qubit(s), got {len(self.targets)}"
            )
        if len(set(self.targets)) != len(self.targets):
            raise InvalidOperationError(f"{kind} operands must be distinct: {self.targets}")
        if any(t < 0 for t in self.targets):
            raise IndexError(f"negative qubit index in {self.targets}")
        if (kind == "U1") != (self.theta is not None):
            raise InvalidOperationError("theta is required for U1 and forbidden otherwise")
        if self.theta is not None:
            if not np.isfinite(self.theta):
                raise InvalidOperationError(f"non-finite angle {self.theta}")
            object.__setattr__(self, "theta", float(self.theta))

    @property
    def matrix(self) -> np.ndarray:
        if self.kind == "U1":
            return u1(self.theta)
        return _FIXED[self.kind]

    def inverse(self) -> "GateOp":
        if self.kind == "U1":
            return GateOp("U1", self.targets, -self.theta)
        if self.kind == "S":
            return GateOp("SDG", self.targets)
        if self.kind == "SDG":
            return GateOp("S", self.targets)
        return self


@dataclass
class Circuit:
    """Ordered gate program plus terminal measurements ``(qubit, cbit)``."""

    num_qubits: int
    ops: list[GateOp] = field(default_factory=list)
    measurements: list[tuple[int, int]] = field(default_factory=list)

    def __post_init__(self):
        if not 1 <= self.num_qubits <= MAX_QUBITS:
            raise ValueError(f"num_qubits must be in [1, {MAX_QUBITS}], got {self.num_qubits}")

    def append(self, op: GateOp) -> "Circuit":
        if max(op.targets) >= self.num_qubits:
            raise IndexError(f"{op.kind} target out of range for {self.num_qubits} qubits")
        if any(q in op.targets for q, _ in self.measurements):
            raise InvalidOperationError("gate on a qubit that is already measured")
        self.ops.append(op)
        return self

    def h(self, q):
        return self.append(GateOp("H", (q,)))

    def x(self, q):
        return self.append(GateOp("X", (q,)))

    def y(self, q):
        return self.append(GateOp("Y", (q,)))

    def z(self, q):
        return self.append(GateOp("Z", (q,)))

    def s(self, q):
        return self.append(GateOp("S", (q,)))

    def sdg(self, q):
        return self.append(GateOp("SDG", (q,)))

    def u1(self, theta, q):
        return self.append(GateOp("U1", (q,), theta))

    def cx(self, control, target):
        return self.append(GateOp("CX", (control, target)))

    def measure(self, qubit: int, cbit: int) -> "Circuit":
        if not 0 <= qubit < self.num_qubits:
            raise IndexError(f"measured qubit {qubit} out of range")
        if cbit < 0 or any(c == cbit for _, c in self.measurements):
            raise InvalidOperationError(f"classical bit {cbit} invalid or already used")
        self.measurements.append((qubit, cbit))
        return self

    def extend(self, ops: Iterable[GateOp]) -> "Circuit":
        for op in ops:
            self.append(op)
        return self

    def copy(self) -> "Circuit":
        return Circuit(self.num_qubits, list(self.ops), list(self.measurements))

    def inverse(self) -> "Circuit":
        return Circuit(self.num_qubits, [op.inverse() for op in reversed(self.ops)])

    def measured_qubits(self) -> list[int]:
        """Measured qubits ordered by classical bit index."""
        return [q for q, _ in sorted(self.measurements, key=lambda m: m[1])]


# ---------------------------------------------------------------------------
# states


def _check_qubits(qubits: Sequence[int], n: int) -> None:
    for q in qubits:
        if not 0 <= q < n:
            raise IndexError(f"qubit index {q} out of range for {n} qubits")


def _num_qubits_for(dim: int) -> int:
    n = dim.bit_length() - 1
    if dim < 2 or 1 << n != dim:
        raise ValueError(f"dimension {dim} is not a power of two >= 2")
    return n


class StateVector:
    """Pure state of ``num_qubits`` qubits."""

    def __init__(self, amplitudes, validate: bool = True):
        data = np.asarray(amplitudes, dtype=complex).reshape(-1)
        self.num_qubits = _num_qubits_for(data.size)
        self.data = data
        if validate:
            if not np.all(np.isfinite(data)):
                raise ValueError("amplitudes must be finite")
            norm = np.linalg.norm(data)
            if abs(norm - 1) > STATE_TOL:
                raise ValueError(f"state is not normalized (norm={norm})")

    @classmethod
    def zero(cls, num_qubits: int) -> "StateVector":
        data = np.zeros(2**num_qubits, dtype=complex)
        data[0] = 1
        return cls(data, validate=False)

    @classmethod
    def from_bitstring(cls, bits: str) -> "StateVector":
        data = np.zeros(2 ** len(bits), dtype=complex)
        data[int(bits, 2)] = 1
        return cls(data, validate=False)

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.data, self.data.conj()), validate=False)

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def __repr__(self):
        return f"StateVector(num_qubits={self.num_qubits})"


class DensityMatrix:
    """Mixed state of ``num_qubits`` qubits stored as a dense ``2^n x 2^n`` array."""

    def __init__(self, entries, validate: bool = True, psd: bool = True):
        data = np.asarray(entries, dtype=complex)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {data.shape}")
        self.num_qubits = _num_qubits_for(data.shape[0])
        self.data = data
        if validate:
            if not np.all(np.isfinite(data)):
                raise ValueError("entries must be finite")
            if np.max(np.abs(data - data.conj().T)) > STATE_TOL:
                raise ValueError("density matrix is not Hermitian")
            tr = np.trace(data).real
            if abs(tr - 1) > STATE_TOL:
                raise ValueError(f"density matrix trace is {tr}, expected 1")
            if psd and self.min_eigenvalue() < -PSD_TOL:
                raise ValueError(
                    f"density matrix is not positive semidefinite "
                    f"(min eigenvalue {self.min_eigenvalue():.3g})"
                )

    @classmethod
    def zero(cls, num_qubits: int) -> "DensityMatrix":
        return StateVector.zero(num_qubits).to_density()

    @classmethod
    def maximally_mixed(cls, num_qubits: int) -> "DensityMatrix":
        d = 2**num_qubits
        return cls(np.eye(d, dtype=complex) / d, validate=False)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh((self.data + self.data.conj().T) / 2)[0])

    def trace(self) -> float:
        return float(np.trace(self.data).real)

    def purity(self) -> float:
        return float(np.real(np.vdot(self.data, self.data)))

    def __repr__(self):
        return f"DensityMatrix(num_qubits={self.num_qubits})"


State = Union[StateVector, DensityMatrix]


# ---------------------------------------------------------------------------
# local operator application


def _apply_on_axes(tensor: np.ndarray, matrix: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    k = len(axes)
    m = matrix.reshape((2,) * (2 * k))
    out = np.tensordot(m, tensor, axes=(list(range(k, 2 * k)), list(axes)))
    return np.moveaxis(out, list(range(k)), list(axes))


def _apply_vector(data: np.ndarray, matrix: np.ndarray, targets: Sequence[int], n: int):
    t = data.reshape((2,) * n)
    return _apply_on_axes(t, matrix, targets).reshape(-1)


def _conjugate_density(data: np.ndarray, matrix: np.ndarray, targets: Sequence[int], n: int):
    """Return ``M rho M^dagger`` with M acting on ``targets``."""
    t = data.reshape((2,) * (2 * n))
    t = _apply_on_axes(t, matrix, targets)
    t = _apply_on_axes(t, matrix.conj(), [n + q for q in targets])
    return t.reshape(2**n, 2**n)


def apply_gate(state: State, op: GateOp) -> State:
    """Apply ``op`` and return a new state of the same kind."""
    n = state.num_qubits
    _check_qubits(op.targets, n)
    if isinstance(state, StateVector):
        return StateVector(_apply_vector(state.data, op.matrix, op.targets, n), validate=False)
    return DensityMatrix(_conjugate_density(state.data, op.matrix, op.targets, n), validate=False)


def apply_unitary(state: State, matrix: np.ndarray, targets: Sequence[int]) -> State:
    n = state.num_qubits
    _check_qubits(targets, n)
    if isinstance(state, StateVector):
        return StateVector(_apply_vector(state.data, matrix, targets, n), validate=False)
    return DensityMatrix(_conjugate_density(state.data, matrix, targets, n), validate=False)


# ---------------------------------------------------------------------------
# channels


class KrausChannel:
    """CPTP map given by Kraus operators; completeness is checked on construction."""

    def __init__(self, operators: Sequence[np.ndarray], label: str = "", tol: float = 1e-10):
        ops = [np.asarray(k, dtype=complex) for k in operators]
        if not ops:
            raise ChannelError("a channel needs at least one Kraus operator")
        dim = ops[0].shape[0]
        if any(k.shape != (dim, dim) for k in ops):
            raise ChannelError("Kraus operators must share one square shape")
        self.arity = _num_qubits_for(dim)
        self.operators = ops
        self.label = label
        err = self.completeness_error()
        if err > tol:
            raise ChannelError(f"channel {label!r} violates completeness by {err:.3g}")

    def completeness_error(self) -> float:
        dim = self.operators[0].shape[0]
        acc = sum(k.conj().T @ k for k in self.operators)
        return float(np.max(np.abs(acc - np.eye(dim))))

    def __repr__(self):
        return f"KrausChannel({self.label!r}, arity={self.arity}, terms={len(self.operators)})"


def apply_channel(rho: DensityMatrix, channel: KrausChannel, targets: Sequence[int]) -> DensityMatrix:
    """Return ``sum_m K_m rho K_m^dagger`` with the channel acting on ``targets``."""
    targets = list(targets)
    if len(targets) != channel.arity:
        raise InvalidOperationError(
            f"channel {channel.label!r} acts on {channel.arity} qubit(s), got {len(targets)} targets"
        )
    if len(set(targets)) != len(targets):
        raise InvalidOperationError(f"duplicate channel targets {targets}")
    n = rho.num_qubits
    _check_qubits(targets, n)
    out = np.zeros_like(rho.data)
    for k in channel.operators:
        out += _conjugate_density(rho.data, k, targets, n)
    out = (out + out.conj().T) / 2
    return DensityMatrix(out, validate=False)


NoiseFn = Callable[[GateOp], Sequence[tuple[KrausChannel, Sequence[int]]]]


def simulate(circuit: Circuit, initial: State | None = None, noise: NoiseFn | None = None,
             density: bool | None = None) -> State:
    """Run all gates of ``circuit``; measurements are ignored here.

    With ``noise`` the simulation runs on a density matrix and the channels
    returned by ``noise(op)`` are applied right after each gate.
    """
    if initial is None:
        use_density = density if density is not None else noise is not None
        initial = DensityMatrix.zero(circuit.num_qubits) if use_density else StateVector.zero(circuit.num_qubits)
    if initial.num_qubits != circuit.num_qubits:
        raise ValueError("initial state size does not match circuit")
    if noise is not None and isinstance(initial, StateVector):
        initial = initial.to_density()
    state = initial
    for op in circuit.ops:
        state = apply_gate(state, op)
        if noise is not None:
            for channel, targets in noise(op):
                state = apply_channel(state, channel, targets)
    return state


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    """Full ``2^n x 2^n`` unitary of the gate list."""
    n = circuit.num_qubits
    d = 2**n
    cols = np.eye(d, dtype=complex)
    for op in circuit.ops:
        cols = np.stack([_apply_vector(cols[:, j], op.matrix, op.targets, n) for j in range(d)], axis=1)
    return cols


# ---------------------------------------------------------------------------
# measurement


@dataclass
class Counts:
    """Measurement histogram keyed by bitstrings (classical bit 0 leftmost)."""

    shots: int
    histogram: dict[str, int]

    def __post_init__(self):
        if self.shots <= 0:
            raise ValueError("shots must be positive")
        if any(v < 0 for v in self.histogram.values()):
            raise ValueError("negative count in histogram")
        if sum(self.histogram.values()) != self.shots:
            raise ValueError("histogram does not sum to shots")

    def frequencies(self) -> dict[str, float]:
        return {k: v / self.shots for k, v in self.histogram.items()}


def _diag_probs(state: State) -> np.ndarray:
    if isinstance(state, StateVector):
        return np.abs(state.data) ** 2
    return np.clip(np.real(np.diag(state.data)), 0.0, None)


def exact_probabilities(state: State, qubits: Sequence[int] | None = None) -> np.ndarray:
    """Born-rule marginal over ``qubits``; index bit order follows ``qubits``."""
    n = state.num_qubits
    qubits = list(range(n)) if qubits is None else list(qubits)
    _check_qubits(qubits, n)
    if len(set(qubits)) != len(qubits):
        raise InvalidOperationError(f"duplicate qubits {qubits}")
    p = _diag_probs(state).reshape((2,) * n)
    rest = tuple(q for q in range(n) if q not in qubits)
    p = p.sum(axis=rest) if rest else p
    # remaining axes are in ascending qubit order; reorder to the requested order
    ascending = sorted(qubits)
    p = np.transpose(p, [ascending.index(q) for q in qubits])
    p = p.reshape(-1)
    return p / p.sum()


def sample_distribution(probs: np.ndarray, shots: int, seed) -> dict[str, int]:
    """Multinomial draw from ``probs``; keys are zero-padded bitstrings."""
    if shots <= 0:
        raise ValueError("shots must be positive")
    probs = np.clip(np.asarray(probs, dtype=float), 0.0, None)
    probs = probs / probs.sum()
    nbits = _num_qubits_for(probs.size) if probs.size > 1 else 0
    rng = np.random.default_rng(seed)
    draws = rng.multinomial(shots, probs)
    return {format(i, f"0{max(nbits, 1)}b"): int(c) for i, c in enumerate(draws) if c}


def _measured_list(measurements) -> list[int]:
    pairs = []
    for pos, m in enumerate(measurements):
        pairs.append(tuple(m) if isinstance(m, (tuple, list)) else (int(m), pos))
    cbits = [c for _, c in pairs]
    if len(set(cbits)) != len(cbits):
        raise InvalidOperationError("classical bit indices must be unique")
    return [q for q, _ in sorted(pairs, key=lambda m: m[1])]


def sample_measurements(state: State, measurements, shots: int, seed) -> Counts:
    """Sample ``shots`` terminal measurements.

    ``measurements`` is a sequence of ``(qubit, cbit)`` pairs or of bare qubit
    indices (classical bit = position).  Unmeasured qubits are marginalized.
    """
    qubits = _measured_list(measurements)
    probs = exact_probabilities(state, qubits)
    return Counts(shots, sample_distribution(probs, shots, seed))


# ---------------------------------------------------------------------------
# reduced states and comparisons


def partial_trace(rho: State, keep: Sequence[int]) -> DensityMatrix:
    """Reduced density matrix on ``keep`` (order of ``keep`` is preserved)."""
    if isinstance(rho, StateVector):
        rho = rho.to_density()
    keep = list(keep)
    n = rho.num_qubits
    if not keep:
        raise ValueError("keep must name at least one qubit")
    _check_qubits(keep, n)
    if len(set(keep)) != len(keep):
        raise ValueError(f"duplicate qubits in keep: {keep}")
    t = rho.data.reshape((2,) * (2 * n))
    traced = [q for q in range(n) if q not in keep]
    # einsum subscripts: row index i_q, column index j_q (equal to i_q when traced)
    letters = iter("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ")
    row = [next(letters) for _ in range(n)]
    col = [row[q] if q in traced else next(letters) for q in range(n)]
    out = "".join(row[q] for q in keep) + "".join(col[q] for q in keep)
    reduced = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    d = 2 ** len(keep)
    return DensityMatrix(reduced.reshape(d, d), validate=False)


def reduced_pure_state(state: State, keep: Sequence[int], tol: float = STATE_TOL) -> StateVector:
    """Pure state of the ``keep`` subsystem; raises if it is entangled with the rest."""
    rho = partial_trace(state, keep)
    vals, vecs = np.linalg.eigh(rho.data)
    if abs(vals[-1] - 1) > tol:
        raise ValueError(f"subsystem {list(keep)} is not in a pure state (purity {rho.purity():.6g})")
    vec = vecs[:, -1]
    j = int(np.argmax(np.abs(vec)))
    vec = vec * np.exp(-1j * np.angle(vec[j]))
    return StateVector(vec / np.linalg.norm(vec), validate=False)


def equal_up_to_global_phase(a: StateVector, b: StateVector, tol: float = STATE_TOL) -> bool:
    ad = np.asarray(getattr(a, "data", a), dtype=complex).reshape(-1)
    bd = np.asarray(getattr(b, "data", b), dtype=complex).reshape(-1)
    if ad.shape != bd.shape:
        raise ValueError(f"dimension mismatch: {ad.size} vs {bd.size}")
    j = int(np.argmax(np.abs(bd)))
    if abs(bd[j]) == 0:
        return bool(np.max(np.abs(ad)) < tol)
    gamma = np.angle(ad[j]) - np.angle(bd[j])
    return bool(np.max(np.abs(ad - np.exp(1j * gamma) * bd)) < tol)


def bell_phi_plus() -> StateVector:
    return StateVector(np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2), validate=False)
