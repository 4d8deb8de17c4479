"""Desk-scale simulator for quantum-repeater primitives: entanglement
swapping, error injection with purification, and two-qubit state tomography
under an optional device-calibrated noise model."""

from .core import (
    Circuit,
    Counts,
    DensityMatrix,
    GateOp,
    KrausChannel,
    StateVector,
    apply_channel,
    apply_gate,
    equal_up_to_global_phase,
    exact_probabilities,
    partial_trace,
    sample_measurements,
    simulate,
)
from .device import (
    DeviceCalibration,
    QubitCalibration,
    apply_readout_error,
    channels_for_gate,
    load_calibration,
    validate_coupling,
)
from .tomography import (
    correlation_from_counts,
    fidelity,
    project_physical,
    reconstruct_density,
    tomography_settings,
)
from .protocols import (
    ErrorSpec,
    SwapLayout,
    bell_prep_circuit,
    inject_errors,
    purification_circuit,
    run_purification_experiment,
    run_swap_experiment,
    swap_circuit,
)

__version__ = "0.1.0"
