"""JSON encodings for density matrices, counts, tomography results and protocol reports."""

from __future__ import annotations

import json
from typing import Any, Mapping

import numpy as np

from .core import Counts, DensityMatrix, StateVector
from .protocols import ProtocolReport
from .tomography import CorrelationTensor, TomographyResult


def dumps(obj: Any) -> str:
    """Stable JSON text (fixed key order as built, two-space indent, trailing newline)."""
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _mat(a: np.ndarray) -> list[list[float]]:
    return [[float(x) for x in row] for row in a]


def density_to_json(rho: DensityMatrix) -> dict:
    return {"dim": int(rho.data.shape[0]), "re": _mat(rho.data.real), "im": _mat(rho.data.imag)}


def density_from_json(doc: Mapping | str, require_psd: bool = False) -> DensityMatrix:
    if isinstance(doc, str):
        doc = json.loads(doc)
    try:
        dim = int(doc["dim"])
        re_part = np.asarray(doc["re"], dtype=float)
        im_part = np.asarray(doc.get("im", np.zeros((dim, dim))), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed density-matrix JSON: {exc}") from exc
    if re_part.shape != (dim, dim) or im_part.shape != (dim, dim):
        raise ValueError(f"density-matrix JSON arrays must be {dim}x{dim}")
    return DensityMatrix(re_part + 1j * im_part, validate=True, psd=require_psd)


def statevector_to_json(label: str, sv: StateVector) -> dict:
    return {"label": label, "re": [float(x) for x in sv.data.real], "im": [float(x) for x in sv.data.imag]}


def counts_to_json(counts: Counts | Mapping) -> dict:
    hist = counts.histogram if isinstance(counts, Counts) else counts
    return {k: hist[k] for k in sorted(hist)}


def tomography_to_json(result: TomographyResult, seed=None) -> dict:
    tensor = result.tensor
    vec = tensor.t if isinstance(tensor, CorrelationTensor) else tensor.s
    return {
        "qubits": list(result.qubits),
        "shots_per_setting": result.shots_per_setting,
        "seed": seed,
        "settings_used": list(result.settings_used),
        "tensor": np.asarray(vec, dtype=float).tolist(),
        "rho_raw": density_to_json(result.rho_raw),
        "rho_raw_min_eigenvalue": result.rho_raw.min_eigenvalue(),
        "rho_raw_is_physical": result.raw_is_physical,
        "rho_physical": density_to_json(result.rho_physical),
        "counts": {k: counts_to_json(v) for k, v in result.counts.items()},
    }


def report_to_json(report: ProtocolReport) -> dict:
    variants = {}
    for name, info in report.variants.items():
        entry = dict(info)
        entry["tomography"] = {
            label: tomography_to_json(res) for label, res in report.tomography.get(name, {}).items()
        }
        variants[name] = entry
    return {
        "experiment": report.experiment,
        "headline": report.headline,
        "variants": variants,
        "fidelities": report.fidelities,
        "stage_states": [statevector_to_json(label, sv) for label, sv in report.stage_states],
        "seed": report.seed,
        "shots": report.shots,
    }
