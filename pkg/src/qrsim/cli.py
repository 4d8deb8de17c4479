"""Command-line entry point ``qrsim``.

Exit codes: 0 success, 1 diagnostics or I/O error, 2 bad flags.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import reports
from .core import Circuit, exact_probabilities, sample_distribution, simulate
from .device import CalibrationError, NoiseModel, apply_readout_error, load_calibration_file, validate_coupling
from .dsl import ParseError, parse_circuit
from .protocols import MODES, ErrorSpec, run_purification_experiment, run_swap_experiment
from .tomography import DEFAULT_SHOTS, fidelity, tomograph_circuit
from .core import bell_phi_plus

TARGETS = {"bell-phi-plus": lambda: bell_phi_plus().to_density()}


class CliError(Exception):
    """Reported on stderr with exit code 1."""


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _qubit_list(text: str) -> tuple[int, ...]:
    try:
        qubits = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated qubit indices, got {text!r}")
    if not 1 <= len(qubits) <= 2 or len(set(qubits)) != len(qubits) or min(qubits) < 0:
        raise argparse.ArgumentTypeError("--qubits takes one or two distinct non-negative indices")
    return qubits


def _common(p: argparse.ArgumentParser, noise: bool = True) -> None:
    p.add_argument("--shots", type=_positive_int, default=DEFAULT_SHOTS)
    p.add_argument("--seed", type=int, default=1)
    if noise:
        p.add_argument("--noise", metavar="CALIB_JSON", help="device calibration file (e.g. ibmqx4.json)")
    p.add_argument("--out", metavar="PATH", help="write JSON here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qrsim", description="Quantum-repeater protocol simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a circuit file and emit counts")
    run.add_argument("file")
    _common(run)
    coupling = run.add_mutually_exclusive_group()
    coupling.add_argument("--strict-coupling", action="store_true")
    coupling.add_argument("--rewrite-coupling", action="store_true")

    swap = sub.add_parser("swap", help="entanglement-swapping experiment")
    _common(swap)

    purify = sub.add_parser("purify", help="error injection + purification experiment")
    purify.add_argument("--phi", type=float, default=0.125)
    purify.add_argument("--mode", choices=MODES, default="ancilla")
    _common(purify)

    tomo = sub.add_parser("tomo", help="state tomography of a circuit's output")
    tomo.add_argument("file")
    tomo.add_argument("--qubits", type=_qubit_list, required=True)
    _common(tomo)

    fid = sub.add_parser("fidelity", help="fidelity between two density matrices")
    fid.add_argument("--target", required=True, help="bell-phi-plus or a density-matrix JSON file")
    fid.add_argument("--rho", required=True)
    return parser


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _load_circuit(path: str) -> Circuit:
    text = _read(path)
    try:
        return parse_circuit(text)
    except ParseError as exc:
        raise CliError("\n".join(f"{path}: {d}" for d in exc.diagnostics)) from exc


def _load_noise(path: str | None):
    if path is None:
        return None
    try:
        return load_calibration_file(path)
    except FileNotFoundError as exc:
        raise CliError(str(exc)) from exc
    except CalibrationError as exc:
        raise CliError(f"{path}: {exc}") from exc


def _emit(payload: dict, out: str | None) -> None:
    text = reports.dumps(payload)
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise CliError(f"cannot write {out}: {exc.strerror or exc}") from exc


def _print_fidelities(fids: dict, out: str | None) -> None:
    if out is not None:
        for name, value in fids.items():
            if not name.endswith("_raw"):
                print(f"{name} {value:.4f}")


def cmd_run(args) -> None:
    circuit = _load_circuit(args.file)
    cal = _load_noise(args.noise)
    if (args.strict_coupling or args.rewrite_coupling) and cal is None:
        raise CliError("coupling checks need a device calibration (--noise)")
    if cal is not None:
        if circuit.num_qubits > cal.num_qubits:
            raise CliError(f"circuit needs {circuit.num_qubits} qubits, device has {cal.num_qubits}")
        if args.strict_coupling or args.rewrite_coupling:
            circuit, violations = validate_coupling(cal, circuit, rewrite=args.rewrite_coupling)
            if violations:
                raise CliError("\n".join(f"{args.file}: {v}" for v in violations))
    measurements = circuit.measurements or [(q, q) for q in range(circuit.num_qubits)]
    qubits = [q for q, _ in sorted(measurements, key=lambda m: m[1])]
    state = simulate(circuit, noise=NoiseModel(cal) if cal is not None else None)
    probs = exact_probabilities(state, qubits)
    if cal is not None:
        probs = apply_readout_error(probs, cal, qubits)
    hist = sample_distribution(probs, args.shots, args.seed)
    _emit({
        "circuit": args.file,
        "noise": args.noise,
        "shots": args.shots,
        "seed": args.seed,
        "measurements": [list(m) for m in measurements],
        "counts": reports.counts_to_json(hist),
    }, args.out)


def cmd_swap(args) -> None:
    cal = _load_noise(args.noise)
    report = run_swap_experiment(cal, shots=args.shots, seed=args.seed)
    _emit(reports.report_to_json(report), args.out)
    _print_fidelities(report.fidelities, args.out)


def cmd_purify(args) -> None:
    cal = _load_noise(args.noise)
    report = run_purification_experiment(cal, ErrorSpec(phi=args.phi), mode=args.mode,
                                         shots=args.shots, seed=args.seed)
    _emit(reports.report_to_json(report), args.out)
    _print_fidelities(report.fidelities, args.out)


def cmd_tomo(args) -> None:
    circuit = _load_circuit(args.file)
    cal = _load_noise(args.noise)
    if max(args.qubits) >= circuit.num_qubits:
        raise CliError(f"--qubits {args.qubits} out of range for a {circuit.num_qubits}-qubit circuit")
    result = tomograph_circuit(circuit, args.qubits, shots=args.shots, seed=args.seed, cal=cal)
    payload = reports.tomography_to_json(result, seed=args.seed)
    payload["noise"] = args.noise
    if len(args.qubits) == 2:
        target = bell_phi_plus().to_density()
        payload["fidelity_bell_phi_plus"] = fidelity(target, result.rho_physical)
    _emit(payload, args.out)


def _load_rho(path: str):
    try:
        return reports.density_from_json(_read(path))
    except ValueError as exc:
        raise CliError(f"{path}: {exc}") from exc


def cmd_fidelity(args) -> None:
    target = TARGETS[args.target]() if args.target in TARGETS else _load_rho(args.target)
    rho = _load_rho(args.rho)
    try:
        value = fidelity(target, rho)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    print(f"{value:.4f}")


COMMANDS = {"run": cmd_run, "swap": cmd_swap, "purify": cmd_purify, "tomo": cmd_tomo, "fidelity": cmd_fidelity}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        COMMANDS[args.command](args)
    except CliError as exc:
        print(f"qrsim: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
