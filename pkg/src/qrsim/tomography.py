"""One- and two-qubit state tomography from Pauli-basis measurement counts.

Each setting rotates the measured qubits so that a computational-basis
readout measures X (prefix ``H``), Y (prefix ``U1(-pi/2)`` then ``H``) or Z
(no prefix).  Outcome bit ``b`` counts as eigenvalue ``(-1)**b``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .core import (
    I2,
    PSD_TOL,
    X,
    Y,
    Z,
    Circuit,
    Counts,
    DensityMatrix,
    GateOp,
    State,
    StateVector,
    apply_gate,
    apply_channel,
    exact_probabilities,
    sample_distribution,
    simulate,
)
from .device import DeviceCalibration, NoiseModel, apply_readout_error, channels_for_gate

PAULI_MATRICES = {"I": I2, "X": X, "Y": Y, "Z": Z}
PAULI_INDEX = {"I": 0, "X": 1, "Y": 2, "Z": 3}
BASES = ("X", "Y", "Z")
DEFAULT_SHOTS = 8192


class IncompleteDataError(ValueError):
    """A tomography setting is missing or has no counts."""


@dataclass(frozen=True)
class TomographySetting:
    labels: tuple[str, ...]
    circuit: Circuit

    @property
    def name(self) -> str:
        return "".join(self.labels)


@dataclass
class StokesVector:
    s: np.ndarray


@dataclass
class CorrelationTensor:
    t: np.ndarray

    def __getitem__(self, key):
        if isinstance(key, str):
            return float(self.t[PAULI_INDEX[key[0]], PAULI_INDEX[key[1]]])
        return self.t[key]


@dataclass
class TomographyResult:
    tensor: CorrelationTensor | StokesVector
    rho_raw: DensityMatrix
    rho_physical: DensityMatrix
    shots_per_setting: int | None
    settings_used: list[str]
    qubits: tuple[int, ...] = ()
    counts: dict[str, dict] = field(default_factory=dict)

    @property
    def raw_is_physical(self) -> bool:
        return self.rho_raw.min_eigenvalue() >= -PSD_TOL


def _basis_prefix(basis: str, q: int) -> list[GateOp]:
    if basis == "X":
        return [GateOp("H", (q,))]
    if basis == "Y":
        return [GateOp("U1", (q,), -np.pi / 2), GateOp("H", (q,))]
    if basis == "Z":
        return []
    raise ValueError(f"unknown measurement basis {basis!r}")


def tomography_settings(num_qubits: int, qubits: Sequence[int] | None = None,
                        total_qubits: int | None = None) -> list[TomographySetting]:
    """All 3**num_qubits Pauli measurement settings as basis-change circuits."""
    if num_qubits not in (1, 2):
        raise ValueError(f"tomography supports 1 or 2 qubits, got {num_qubits}")
    qubits = tuple(range(num_qubits)) if qubits is None else tuple(qubits)
    if len(qubits) != num_qubits or len(set(qubits)) != num_qubits:
        raise ValueError(f"need {num_qubits} distinct qubits, got {qubits}")
    total = total_qubits if total_qubits is not None else max(qubits) + 1
    settings = []
    for labels in itertools.product(BASES, repeat=num_qubits):
        circ = Circuit(total)
        for basis, q in zip(labels, qubits):
            circ.extend(_basis_prefix(basis, q))
        for cbit, q in enumerate(qubits):
            circ.measure(q, cbit)
        settings.append(TomographySetting(labels, circ))
    return settings


def _normalize(hist) -> dict[str, float]:
    if isinstance(hist, Counts):
        hist = hist.histogram
    total = float(sum(hist.values()))
    if total <= 0:
        raise IncompleteDataError("empty histogram")
    return {k: v / total for k, v in hist.items()}


def _expectation(freqs: Mapping[str, float], positions: Sequence[int]) -> float:
    return sum(f * (-1) ** sum(int(k[p]) for p in positions) for k, f in freqs.items())


def _key(labels) -> str:
    return labels if isinstance(labels, str) else "".join(labels)


def stokes_from_counts(counts: Mapping) -> StokesVector:
    """Single-qubit Stokes vector ``(1, <X>, <Y>, <Z>)``."""
    data = {_key(k): v for k, v in counts.items()}
    s = np.zeros(4)
    s[0] = 1.0
    for i, b in enumerate(BASES, start=1):
        if b not in data:
            raise IncompleteDataError(f"missing tomography setting {b}")
        s[i] = _expectation(_normalize(data[b]), [0])
    return StokesVector(s)


def correlation_from_counts(counts: Mapping, factorized: bool = False) -> CorrelationTensor:
    """Two-qubit Pauli correlation tensor from the nine joint settings.

    ``counts`` maps a setting label (``"XY"`` or ``("X", "Y")``) to a
    :class:`Counts` or to a plain histogram/probability mapping.  Joint terms
    come from the joint setting; one-body terms average the single-qubit
    marginal over the partner's three settings.  ``factorized=True`` instead
    builds every entry as a product of the two single-qubit Stokes values.
    """
    data = {_key(k): v for k, v in counts.items()}
    missing = [a + b for a, b in itertools.product(BASES, repeat=2) if a + b not in data]
    if missing:
        raise IncompleteDataError(f"missing tomography settings: {', '.join(missing)}")
    freqs = {k: _normalize(data[k]) for k in (a + b for a, b in itertools.product(BASES, repeat=2))}
    t = np.zeros((4, 4))
    t[0, 0] = 1.0
    for i, b in enumerate(BASES, start=1):
        t[i, 0] = np.mean([_expectation(freqs[b + o], [0]) for o in BASES])
        t[0, i] = np.mean([_expectation(freqs[o + b], [1]) for o in BASES])
    if factorized:
        t[1:, 1:] = np.outer(t[1:, 0], t[0, 1:])
    else:
        for (i, a), (j, b) in itertools.product(enumerate(BASES, 1), repeat=2):
            t[i, j] = _expectation(freqs[a + b], [0, 1])
    return CorrelationTensor(t)


def reconstruct_density(tensor: CorrelationTensor | StokesVector) -> DensityMatrix:
    """Linear inversion ``rho = 2^-n sum T_ij sigma_i (x) sigma_j``."""
    paulis = list(PAULI_MATRICES.values())
    if isinstance(tensor, StokesVector):
        rho = sum(tensor.s[i] * paulis[i] for i in range(4)) / 2
    else:
        t = np.asarray(tensor.t)
        rho = sum(t[i, j] * np.kron(paulis[i], paulis[j]) for i in range(4) for j in range(4)) / 4
    return DensityMatrix(rho, validate=False)


def project_physical(rho_raw: DensityMatrix) -> DensityMatrix:
    """Nearest trace-one PSD matrix by eigenvalue clipping.

    Eigenvalues are visited from the smallest up; a value that would stay
    negative after absorbing its share of the accumulated deficit is zeroed
    and its mass is spread evenly over the eigenvalues still in play.
    """
    m = np.asarray(rho_raw.data if isinstance(rho_raw, DensityMatrix) else rho_raw, dtype=complex)
    m = (m + m.conj().T) / 2
    vals, vecs = np.linalg.eigh(m)
    vals = vals / vals.sum()
    if vals[0] >= 0:
        return DensityMatrix(m / np.trace(m).real, validate=False)
    order = np.argsort(vals)[::-1]
    lam = vals[order].copy()
    d = lam.size
    acc = 0.0
    i = d - 1
    while i >= 0 and lam[i] + acc / (i + 1) < 0:
        acc += lam[i]
        lam[i] = 0.0
        i -= 1
    lam[: i + 1] += acc / (i + 1)
    v = vecs[:, order]
    out = (v * lam) @ v.conj().T
    return DensityMatrix((out + out.conj().T) / 2, validate=False)


def _as_density(x) -> DensityMatrix:
    if isinstance(x, StateVector):
        return x.to_density()
    if isinstance(x, DensityMatrix):
        return x
    return DensityMatrix(np.asarray(x, dtype=complex), validate=False)


# eigenvalues below this are rounding noise; their square roots (~1e-8) would not be
_EIG_FLOOR = 1e-14


def _floored_sqrt(vals: np.ndarray) -> np.ndarray:
    return np.sqrt(np.where(vals > _EIG_FLOOR, vals, 0.0))


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh((m + m.conj().T) / 2)
    return (vecs * _floored_sqrt(vals)) @ vecs.conj().T


def fidelity(rho_target, rho_exp, method: str = "auto") -> float:
    """Root fidelity ``Tr sqrt(sqrt(rho_t) rho_e sqrt(rho_t))``.

    ``method="auto"`` uses ``sqrt(<psi|rho_e|psi>)`` when the target is pure.
    """
    a = _as_density(rho_target)
    b = _as_density(rho_exp)
    if a.data.shape != b.data.shape:
        raise ValueError(f"dimension mismatch: {a.data.shape} vs {b.data.shape}")
    for name, r in (("target", a), ("experimental", b)):
        if r.min_eigenvalue() < -PSD_TOL:
            raise ValueError(f"{name} state is not positive semidefinite; project it first")
    if method not in ("auto", "general", "pure"):
        raise ValueError(f"unknown fidelity method {method!r}")
    pure = a.purity() > 1 - 1e-10
    if method == "pure" or (method == "auto" and pure):
        if not pure:
            raise ValueError("pure-target shortcut requested for a mixed target")
        vals, vecs = np.linalg.eigh(a.data)
        psi = vecs[:, -1]
        overlap = np.real(np.vdot(psi, b.data @ psi))
        return float(np.sqrt(max(overlap, 0.0)))
    sa = _psd_sqrt(a.data)
    m = sa @ b.data @ sa
    vals = np.linalg.eigvalsh((m + m.conj().T) / 2)
    return float(np.sum(_floored_sqrt(vals)))


def overlap_fidelity(target: StateVector, rho) -> float:
    """``sqrt(<psi|rho|psi>)`` with the overlap clipped to [0, 1].

    Usable on raw (possibly non-PSD) estimates.
    """
    r = _as_density(rho).data
    ov = np.real(np.vdot(target.data, r @ target.data))
    return float(np.sqrt(min(max(ov, 0.0), 1.0)))


# ---------------------------------------------------------------------------
# simulated tomography runs


def setting_probabilities(state: State, setting: TomographySetting,
                          cal: DeviceCalibration | None = None) -> np.ndarray:
    """Outcome distribution of one setting, including prefix-gate and readout noise."""
    rho = state.to_density() if isinstance(state, StateVector) else state
    for op in setting.circuit.ops:
        rho = apply_gate(rho, op)
        if cal is not None:
            for channel, targets in channels_for_gate(cal, op):
                rho = apply_channel(rho, channel, targets)
    qubits = setting.circuit.measured_qubits()
    probs = exact_probabilities(rho, qubits)
    if cal is not None:
        probs = apply_readout_error(probs, cal, qubits)
    return probs


def _probs_to_hist(probs: np.ndarray) -> dict[str, float]:
    k = int(np.log2(probs.size))
    return {format(i, f"0{k}b"): float(p) for i, p in enumerate(probs)}


def tomograph_state(state: State, qubits: Sequence[int], shots: int | None = DEFAULT_SHOTS,
                    seed=1, cal: DeviceCalibration | None = None,
                    factorized: bool = False) -> TomographyResult:
    """Reconstruct the reduced state of ``qubits`` from simulated Pauli measurements.

    ``shots=None`` uses exact outcome probabilities.  Each setting draws from
    its own child of ``np.random.SeedSequence(seed)``, spawned in setting
    order (XX, XY, ..., ZZ), so results depend only on ``(seed, shots)``.
    """
    qubits = tuple(qubits)
    settings = tomography_settings(len(qubits), qubits, state.num_qubits)
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    seeds = root.spawn(len(settings)) if shots is not None else [None] * len(settings)
    counts = {}
    for setting, child in zip(settings, seeds):
        probs = setting_probabilities(state, setting, cal)
        if shots is None:
            counts[setting.name] = _probs_to_hist(probs)
        else:
            counts[setting.name] = sample_distribution(probs, shots, child)
    if len(qubits) == 1:
        tensor = stokes_from_counts(counts)
    else:
        tensor = correlation_from_counts(counts, factorized=factorized)
    raw = reconstruct_density(tensor)
    return TomographyResult(
        tensor=tensor,
        rho_raw=raw,
        rho_physical=project_physical(raw),
        shots_per_setting=shots,
        settings_used=[s.name for s in settings],
        qubits=qubits,
        counts=counts,
    )


def tomograph_circuit(circuit: Circuit, qubits: Sequence[int], shots: int | None = DEFAULT_SHOTS,
                      seed=1, cal: DeviceCalibration | None = None,
                      factorized: bool = False) -> TomographyResult:
    """Simulate ``circuit`` (noisy when ``cal`` is given) and tomograph ``qubits``."""
    if cal is not None and circuit.num_qubits > cal.num_qubits:
        raise ValueError(f"circuit needs {circuit.num_qubits} qubits, device has {cal.num_qubits}")
    state = simulate(circuit, noise=NoiseModel(cal) if cal is not None else None, density=True)
    return tomograph_state(state, qubits, shots=shots, seed=seed, cal=cal, factorized=factorized)
