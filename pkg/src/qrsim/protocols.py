"""Entanglement swapping and error-injection/purification circuits and experiments.

The purification stages assume the error location is known in advance (the
errors are injected deliberately).  This is a demonstration protocol, not a
general error-correcting code: each correction stage is emitted only for an
error that the :class:`ErrorSpec` says was injected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    Circuit,
    Counts,
    GateOp,
    StateVector,
    bell_phi_plus,
    partial_trace,
    reduced_pure_state,
    simulate,
)
from .device import DeviceCalibration
from .tomography import DEFAULT_SHOTS, TomographyResult, fidelity, overlap_fidelity, tomograph_circuit

PAIR = (0, 1)
ANCILLA = 2
MODES = ("ancilla", "direct")


@dataclass(frozen=True)
class SwapLayout:
    a1: int = 0
    b1: int = 1
    a2: int = 2
    b2: int = 3

    def __post_init__(self):
        if len({self.a1, self.b1, self.a2, self.b2}) != 4:
            raise ValueError(f"swap layout qubits must be distinct: {self}")
        if min(self.a1, self.b1, self.a2, self.b2) < 0:
            raise ValueError("swap layout qubits must be non-negative")

    @property
    def num_qubits(self) -> int:
        return max(self.a1, self.b1, self.a2, self.b2) + 1


@dataclass(frozen=True)
class ErrorSpec:
    bit_flip: bool = True
    phase_flip: bool = True
    phase_change: bool = True
    phi: float = 0.125
    error_qubit: int = 0

    def __post_init__(self):
        if not math.isfinite(self.phi):
            raise ValueError("phi must be finite")
        if self.error_qubit not in PAIR:
            raise ValueError(f"error_qubit must be 0 or 1, got {self.error_qubit}")

    def injected_ops(self) -> list[GateOp]:
        q = (self.error_qubit,)
        ops = []
        if self.bit_flip:
            ops.append(GateOp("X", q))
        if self.phase_flip:
            ops.append(GateOp("U1", q, math.pi))
        if self.phase_change:
            ops.append(GateOp("U1", q, self.phi))
        return ops


@dataclass
class ProtocolReport:
    experiment: str
    seed: int
    shots: int
    variants: dict[str, dict] = field(default_factory=dict)
    fidelities: dict[str, float] = field(default_factory=dict)
    stage_states: list[tuple[str, StateVector]] = field(default_factory=list)
    tomography: dict[str, dict[str, TomographyResult]] = field(default_factory=dict)
    counts: dict[str, dict[str, dict[str, Counts | dict]]] = field(default_factory=dict)
    headline: str = "sampled"


# ---------------------------------------------------------------------------
# circuit builders


def bell_prep_circuit(q_a: int, q_b: int, num_qubits: int | None = None) -> Circuit:
    """``H(q_a)`` then ``CX(q_a -> q_b)``: |00> becomes (|00> + |11>)/sqrt2."""
    if q_a == q_b:
        raise ValueError(f"Bell pair needs two distinct qubits, got {q_a} twice")
    n = num_qubits if num_qubits is not None else max(q_a, q_b) + 1
    return Circuit(n).h(q_a).cx(q_a, q_b)


def swap_circuit(layout: SwapLayout = SwapLayout(), num_qubits: int | None = None) -> Circuit:
    """Bell pairs on (a1, b1) and (a2, b2), then CX(a2->b1), CX(b1->a2), CX(a1->b2).

    The result is Bell(a1, a2) (x) Bell(b1, b2).
    """
    n = num_qubits if num_qubits is not None else layout.num_qubits
    c = Circuit(n)
    c.extend(bell_prep_circuit(layout.a1, layout.b1, n).ops)
    c.extend(bell_prep_circuit(layout.a2, layout.b2, n).ops)
    c.cx(layout.a2, layout.b1)
    c.cx(layout.b1, layout.a2)
    c.cx(layout.a1, layout.b2)
    return c


def inject_errors(circuit: Circuit, spec: ErrorSpec) -> Circuit:
    """Append X, U1(pi), U1(phi) (those enabled, in that order) on ``spec.error_qubit``."""
    return circuit.copy().extend(spec.injected_ops())


def purification_stages(spec: ErrorSpec, mode: str = "ancilla") -> list[tuple[str, list[GateOp]]]:
    """Correction stages as ``(label, ops)`` acting on pair (0, 1) and ancilla 2."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    q = spec.error_qubit
    if mode == "direct":
        return [(f"undo_{op.kind.lower()}", [op.inverse()]) for op in reversed(spec.injected_ops())]
    other = PAIR[1 - q]
    stages = []
    if spec.bit_flip:
        # parity of the pair into the ancilla, flip the partner on odd parity, reset the ancilla
        stages.append(("bit_flip_correction", [
            GateOp("CX", (q, ANCILLA)),
            GateOp("CX", (other, ANCILLA)),
            GateOp("CX", (ANCILLA, other)),
            GateOp("X", (ANCILLA,)),
        ]))
    if spec.phase_flip:
        stages.append(("phase_flip_correction", [GateOp("U1", (q,), math.pi)]))
    if spec.phase_change:
        stages.append(("phase_change_correction", [GateOp("U1", (q,), -spec.phi)]))
    return stages


def purification_circuit(spec: ErrorSpec = ErrorSpec(), mode: str = "ancilla",
                         num_qubits: int = 3) -> Circuit:
    """Correction circuit only (no preparation/injection); pair (0, 1), ancilla 2."""
    c = Circuit(num_qubits)
    for _, ops in purification_stages(spec, mode):
        c.extend(ops)
    return c


def purification_pipeline(spec: ErrorSpec = ErrorSpec(), mode: str = "ancilla",
                          num_qubits: int = 3) -> Circuit:
    """Bell preparation + error injection + correction."""
    c = inject_errors(bell_prep_circuit(0, 1, num_qubits), spec)
    return c.extend(purification_circuit(spec, mode, num_qubits).ops)


# ---------------------------------------------------------------------------
# experiments


def _variant_seeds(seed: int) -> dict[str, np.random.SeedSequence]:
    sampled, noisy = np.random.SeedSequence(seed).spawn(2)
    return {"sampled": sampled, "noisy": noisy}


def _tomography_runs(circuits: dict[str, tuple[Circuit, tuple[int, int]]], cal, shots, seed):
    """Run every labelled tomography in each variant; returns {variant: {label: result}}."""
    seeds = _variant_seeds(seed)
    plan = {"ideal": (None, None), "sampled": (None, shots)}
    if cal is not None:
        plan["noisy"] = (cal, shots)
    out = {}
    for variant, (vcal, vshots) in plan.items():
        children = seeds[variant].spawn(len(circuits)) if variant in seeds else [None] * len(circuits)
        out[variant] = {
            label: tomograph_circuit(circ, qubits, shots=vshots, seed=child, cal=vcal)
            for (label, (circ, qubits)), child in zip(circuits.items(), children)
        }
    return out


def _fidelity_pair(result: TomographyResult) -> tuple[float, float]:
    target = bell_phi_plus()
    return fidelity(target.to_density(), result.rho_physical), overlap_fidelity(target, result.rho_raw)


def _finish(report: ProtocolReport, runs: dict, names: dict[str, str]) -> ProtocolReport:
    for variant, results in runs.items():
        fids = {}
        for label, res in results.items():
            f_phys, f_raw = _fidelity_pair(res)
            fids[names[label]] = f_phys
            fids[names[label] + "_raw"] = f_raw
        report.variants[variant] = {"fidelities": fids}
        report.tomography[variant] = results
        report.counts[variant] = {label: res.counts for label, res in results.items()}
    report.headline = "noisy" if "noisy" in runs else "sampled"
    report.fidelities = dict(report.variants[report.headline]["fidelities"])
    return report


def run_swap_experiment(cal: DeviceCalibration | None = None, shots: int = DEFAULT_SHOTS,
                        seed: int = 1, layout: SwapLayout = SwapLayout()) -> ProtocolReport:
    """Swap circuit followed by tomography of (a1, a2) and (b1, b2).

    Variants: ``ideal`` (exact probabilities), ``sampled`` (shot noise) and,
    when ``cal`` is given, ``noisy`` (gate channels, readout error, shot noise).
    """
    if shots <= 0:
        raise ValueError("shots must be positive")
    circ = swap_circuit(layout)
    if cal is not None and circ.num_qubits > cal.num_qubits:
        raise ValueError(f"swap needs {circ.num_qubits} qubits, device has {cal.num_qubits}")
    final = simulate(circ)
    stages = [
        ("initial", simulate(Circuit(circ.num_qubits, circ.ops[:4]))),
        ("final", final),
        ("A1A2", reduced_pure_state(final, (layout.a1, layout.a2))),
        ("B1B2", reduced_pure_state(final, (layout.b1, layout.b2))),
    ]
    runs = _tomography_runs(
        {"A1A2": (circ, (layout.a1, layout.a2)), "B1B2": (circ, (layout.b1, layout.b2))},
        cal, shots, seed,
    )
    report = ProtocolReport("swap", seed, shots, stage_states=stages)
    return _finish(report, runs, {"A1A2": "F_A1A2", "B1B2": "F_B1B2"})


def purification_stage_states(spec: ErrorSpec = ErrorSpec(), mode: str = "ancilla"):
    """Noiseless pair state (ancilla traced out) after preparation, injection and each stage."""
    circ = bell_prep_circuit(0, 1, 3)
    state = simulate(circ)
    out = [("initial", reduced_pure_state(state, PAIR))]
    state = simulate(Circuit(3, spec.injected_ops()), initial=state)
    out.append(("unpurified", reduced_pure_state(state, PAIR)))
    for label, ops in purification_stages(spec, mode):
        state = simulate(Circuit(3, ops), initial=state)
        out.append((label, reduced_pure_state(state, PAIR)))
    return out, state


def run_purification_experiment(cal: DeviceCalibration | None = None, spec: ErrorSpec = ErrorSpec(),
                                mode: str = "ancilla", shots: int = DEFAULT_SHOTS,
                                seed: int = 1) -> ProtocolReport:
    """Tomograph the pair before (F_BP) and after (F_AP) purification."""
    if shots <= 0:
        raise ValueError("shots must be positive")
    if cal is not None and cal.num_qubits < 3:
        raise ValueError("purification needs 3 device qubits")
    before = inject_errors(bell_prep_circuit(0, 1, 3), spec)
    after = purification_pipeline(spec, mode)
    stages, final = purification_stage_states(spec, mode)
    runs = _tomography_runs({"before": (before, PAIR), "after": (after, PAIR)}, cal, shots, seed)
    report = ProtocolReport("purify", seed, shots, stage_states=stages)
    report = _finish(report, runs, {"before": "F_BP", "after": "F_AP"})
    target = bell_phi_plus().to_density()
    report.variants["ideal"]["analytic"] = {
        "F_BP": fidelity(target, partial_trace(simulate(before), PAIR)),
        "F_AP": fidelity(target, partial_trace(final, PAIR)),
        "ancilla_p0": float(np.real(partial_trace(final, (ANCILLA,)).data[0, 0])),
    }
    return report
