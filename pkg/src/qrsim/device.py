"""Device calibration model: per-qubit T1/T2, gate errors, readout errors, coupling map."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import jsonschema
import numpy as np

from .channels import amplitude_damping, dephasing, depolarizing
from .core import Circuit, GateOp, KrausChannel

DEFAULT_GATE_TIME_1Q_NS = 60.0
DEFAULT_GATE_TIME_2Q_NS = 300.0
DEFAULT_DEPOL_1Q = 0.001
DEFAULT_DEPOL_2Q = 0.02
DEFAULT_READOUT_ERROR = 0.03

BUNDLED = ("ibmqx4",)


class CalibrationError(ValueError):
    """Calibration document is malformed or unphysical."""


_NUM = {"type": "number"}
CALIBRATION_SCHEMA = {
    "type": "object",
    "required": ["qubits"],
    "properties": {
        "name": {"type": "string"},
        "qubits": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["id", "t1_us", "t2_us"],
                "properties": {
                    "id": {"type": "integer", "minimum": 0},
                    "resonator_freq_ghz": _NUM,
                    "qubit_freq_ghz": _NUM,
                    "anharmonicity_mhz": _NUM,
                    "coupling_khz": _NUM,
                    "t1_us": _NUM,
                    "t2_us": _NUM,
                    "readout_error": {"type": "number", "minimum": 0, "maximum": 0.5},
                },
            },
        },
        "coupling_map": {
            "type": "array",
            "items": {
                "type": "array",
                "items": {"type": "integer", "minimum": 0},
                "minItems": 2,
                "maxItems": 2,
            },
        },
        "gate_time_1q_ns": {"type": "number", "minimum": 0},
        "gate_time_2q_ns": {"type": "number", "minimum": 0},
        "depol_1q": {"type": "number", "minimum": 0, "maximum": 1},
        "depol_2q": {"type": "number", "minimum": 0, "maximum": 1},
    },
}


@dataclass(frozen=True)
class QubitCalibration:
    t1_us: float
    t2_us: float
    readout_error: float = DEFAULT_READOUT_ERROR
    resonator_freq_ghz: float | None = None
    qubit_freq_ghz: float | None = None
    anharmonicity_mhz: float | None = None
    coupling_khz: float | None = None

    def __post_init__(self):
        if not (self.t1_us > 0 and self.t2_us > 0):
            raise CalibrationError(f"T1 and T2 must be positive (T1={self.t1_us}, T2={self.t2_us})")
        if self.t2_us > 2 * self.t1_us + 1e-9:
            raise CalibrationError(
                f"unphysical coherence: T2={self.t2_us} us exceeds 2*T1={2 * self.t1_us} us"
            )
        if not 0 <= self.readout_error <= 0.5:
            raise CalibrationError(f"readout_error must lie in [0, 0.5], got {self.readout_error}")

    @property
    def t_phi_us(self) -> float:
        """Pure-dephasing time from ``1/T_phi = 1/T2 - 1/(2 T1)``; ``inf`` when T2 = 2 T1."""
        rate = 1 / self.t2_us - 1 / (2 * self.t1_us)
        return math.inf if rate <= 0 else 1 / rate


@dataclass(frozen=True)
class DeviceCalibration:
    qubits: tuple[QubitCalibration, ...]
    coupling_map: tuple[tuple[int, int], ...] = ()
    gate_time_1q_ns: float = DEFAULT_GATE_TIME_1Q_NS
    gate_time_2q_ns: float = DEFAULT_GATE_TIME_2Q_NS
    depol_1q: float = DEFAULT_DEPOL_1Q
    depol_2q: float = DEFAULT_DEPOL_2Q
    name: str = ""
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(self.qubits))
        object.__setattr__(self, "coupling_map", tuple(tuple(int(x) for x in p) for p in self.coupling_map))
        n = len(self.qubits)
        for c, t in self.coupling_map:
            if c == t:
                raise CalibrationError(f"coupling map has a self-pair ({c}, {t})")
            if not (0 <= c < n and 0 <= t < n):
                raise CalibrationError(f"coupling pair ({c}, {t}) references a missing qubit")
        for name in ("gate_time_1q_ns", "gate_time_2q_ns"):
            if getattr(self, name) < 0:
                raise CalibrationError(f"{name} must be non-negative")
        for name in ("depol_1q", "depol_2q"):
            if not 0 <= getattr(self, name) <= 1:
                raise CalibrationError(f"{name} must lie in [0, 1]")

    @property
    def num_qubits(self) -> int:
        return len(self.qubits)

    def replace(self, **changes) -> "DeviceCalibration":
        """Copy with top-level fields changed; ``readout_error``/``t1_us``/``t2_us`` apply to every qubit."""
        per_qubit = {k: changes.pop(k) for k in ("readout_error", "t1_us", "t2_us") if k in changes}
        qubits = self.qubits
        if per_qubit:
            qubits = tuple(
                QubitCalibration(**{**q.__dict__, **per_qubit}) for q in qubits
            )
        fields = dict(
            qubits=qubits,
            coupling_map=self.coupling_map,
            gate_time_1q_ns=self.gate_time_1q_ns,
            gate_time_2q_ns=self.gate_time_2q_ns,
            depol_1q=self.depol_1q,
            depol_2q=self.depol_2q,
            name=self.name,
        )
        fields.update(changes)
        return DeviceCalibration(**fields)

    def to_dict(self) -> dict:
        qubits = []
        for i, q in enumerate(self.qubits):
            entry = {"id": i}
            for key in ("resonator_freq_ghz", "qubit_freq_ghz", "anharmonicity_mhz", "coupling_khz"):
                if getattr(q, key) is not None:
                    entry[key] = getattr(q, key)
            entry.update(t1_us=q.t1_us, t2_us=q.t2_us, readout_error=q.readout_error)
            qubits.append(entry)
        return {
            "name": self.name,
            "qubits": qubits,
            "coupling_map": [list(p) for p in self.coupling_map],
            "gate_time_1q_ns": self.gate_time_1q_ns,
            "gate_time_2q_ns": self.gate_time_2q_ns,
            "depol_1q": self.depol_1q,
            "depol_2q": self.depol_2q,
        }


def load_calibration(document: str | bytes | Mapping) -> DeviceCalibration:
    """Build a :class:`DeviceCalibration` from JSON text or an already-decoded mapping."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise CalibrationError(f"calibration is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(document, CALIBRATION_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise CalibrationError(f"calibration schema violation at {where}: {exc.message}") from exc

    entries = sorted(document["qubits"], key=lambda q: q["id"])
    ids = [q["id"] for q in entries]
    if ids != list(range(len(entries))):
        raise CalibrationError(f"qubit ids must be 0..{len(entries) - 1} without gaps, got {ids}")
    qubits = []
    for q in entries:
        try:
            qubits.append(
                QubitCalibration(
                    t1_us=float(q["t1_us"]),
                    t2_us=float(q["t2_us"]),
                    readout_error=float(q.get("readout_error", DEFAULT_READOUT_ERROR)),
                    resonator_freq_ghz=q.get("resonator_freq_ghz"),
                    qubit_freq_ghz=q.get("qubit_freq_ghz"),
                    anharmonicity_mhz=q.get("anharmonicity_mhz"),
                    coupling_khz=q.get("coupling_khz"),
                )
            )
        except CalibrationError as exc:
            raise CalibrationError(f"qubit {q['id']}: {exc}") from exc
    return DeviceCalibration(
        qubits=tuple(qubits),
        coupling_map=tuple(tuple(p) for p in document.get("coupling_map", [])),
        gate_time_1q_ns=float(document.get("gate_time_1q_ns", DEFAULT_GATE_TIME_1Q_NS)),
        gate_time_2q_ns=float(document.get("gate_time_2q_ns", DEFAULT_GATE_TIME_2Q_NS)),
        depol_1q=float(document.get("depol_1q", DEFAULT_DEPOL_1Q)),
        depol_2q=float(document.get("depol_2q", DEFAULT_DEPOL_2Q)),
        name=document.get("name", ""),
    )


def bundled_calibration_text(name: str = "ibmqx4") -> str:
    name = name[:-5] if name.endswith(".json") else name
    if name not in BUNDLED:
        raise CalibrationError(f"no bundled calibration named {name!r}")
    return resources.files("qrsim").joinpath("data").joinpath(f"{name}.json").read_text()


def load_calibration_file(path: str | Path) -> DeviceCalibration:
    """Load a calibration file; a bare bundled name such as ``ibmqx4.json`` also works."""
    p = Path(path)
    if p.exists():
        return load_calibration(p.read_text())
    if p.name in {f"{b}.json" for b in BUNDLED} | set(BUNDLED) and str(p) == p.name:
        return load_calibration(bundled_calibration_text(p.name))
    raise FileNotFoundError(f"calibration file not found: {path}")


def ibmqx4() -> DeviceCalibration:
    return load_calibration(bundled_calibration_text("ibmqx4"))


# ---------------------------------------------------------------------------
# gate noise


def damping_probabilities(q: QubitCalibration, gate_time_ns: float) -> tuple[float, float]:
    """``(p_amp, p_phi)`` for a gate of the given duration."""
    t_us = gate_time_ns * 1e-3
    p_amp = 1 - math.exp(-t_us / q.t1_us)
    p_phi = 1 - math.exp(-t_us / q.t_phi_us)
    return p_amp, p_phi


def channels_for_gate(cal: DeviceCalibration, op: GateOp) -> list[tuple[KrausChannel, tuple[int, ...]]]:
    """Noise channels to apply right after ``op``: T1/T2 damping on each touched qubit,
    then depolarizing noise (two-qubit depolarizing on both CX operands)."""
    key = (op.kind == "CX", op.targets)
    cached = cal._cache.get(key)
    if cached is not None:
        return cached
    two_qubit = op.kind == "CX"
    t_gate = cal.gate_time_2q_ns if two_qubit else cal.gate_time_1q_ns
    out = []
    for q in op.targets:
        if q >= cal.num_qubits:
            raise IndexError(f"qubit {q} is not on the {cal.num_qubits}-qubit device")
        p_amp, p_phi = damping_probabilities(cal.qubits[q], t_gate)
        out.append((amplitude_damping(p_amp), (q,)))
        out.append((dephasing(p_phi), (q,)))
    if two_qubit:
        out.append((depolarizing(cal.depol_2q, 2), op.targets))
    else:
        out.append((depolarizing(cal.depol_1q, 1), op.targets))
    cal._cache[key] = out
    return out


class NoiseModel:
    """Callable adapter so a calibration can be passed to :func:`qrsim.core.simulate`."""

    def __init__(self, cal: DeviceCalibration):
        self.cal = cal

    def __call__(self, op: GateOp):
        return channels_for_gate(self.cal, op)


def apply_readout_error(probs, cal: DeviceCalibration, measured_qubits: Sequence[int]) -> np.ndarray:
    """Push a distribution over ``measured_qubits`` through symmetric bit-flip confusion."""
    p = np.asarray(probs, dtype=float)
    k = len(measured_qubits)
    if p.size != 2**k:
        raise ValueError(f"distribution of size {p.size} does not match {k} measured qubits")
    t = p.reshape((2,) * k) if k else p
    for axis, q in enumerate(measured_qubits):
        e = cal.qubits[q].readout_error
        if e == 0:
            continue
        confusion = np.array([[1 - e, e], [e, 1 - e]])
        t = np.moveaxis(np.tensordot(confusion, t, axes=([1], [axis])), 0, axis)
    return t.reshape(-1)


# ---------------------------------------------------------------------------
# coupling map


@dataclass(frozen=True)
class CouplingViolation:
    op_index: int
    control: int
    target: int

    def __str__(self):
        return f"op {self.op_index}: cx q[{self.control}], q[{self.target}] is not on the coupling map"


def validate_coupling(
    cal: DeviceCalibration, circuit: Circuit, rewrite: bool = False
) -> tuple[Circuit, list[CouplingViolation]]:
    """Check every CX against the directed coupling map.

    Strict mode (``rewrite=False``) returns the circuit untouched plus every
    offending CX.  Rewrite mode replaces a CX whose reverse direction is
    allowed by ``H.H . CX(reversed) . H.H``; CXs with no edge in either
    direction are still reported.
    """
    if circuit.num_qubits > cal.num_qubits:
        raise ValueError(
            f"circuit uses {circuit.num_qubits} qubits but the device has {cal.num_qubits}"
        )
    edges = set(cal.coupling_map)
    violations = []
    new_ops: list[GateOp] = []
    for i, op in enumerate(circuit.ops):
        if op.kind != "CX" or op.targets in edges:
            new_ops.append(op)
            continue
        c, t = op.targets
        if rewrite and (t, c) in edges:
            new_ops += [GateOp("H", (c,)), GateOp("H", (t,)), GateOp("CX", (t, c)),
                        GateOp("H", (c,)), GateOp("H", (t,))]
        else:
            violations.append(CouplingViolation(i, c, t))
            new_ops.append(op)
    if not rewrite:
        return circuit, violations
    return Circuit(circuit.num_qubits, new_ops, list(circuit.measurements)), violations
