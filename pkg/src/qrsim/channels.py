"""Built-in Kraus channels."""

from __future__ import annotations

import itertools

import numpy as np

from .core import I2, X, Y, Z, KrausChannel

_PAULIS = (I2, X, Y, Z)


def _check_prob(p: float, name: str) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {p}")
    return p


def identity_channel(num_qubits: int = 1) -> KrausChannel:
    return KrausChannel([np.eye(2**num_qubits, dtype=complex)], label="identity")


def amplitude_damping(p: float) -> KrausChannel:
    """Energy relaxation |1> -> |0> with probability ``p``."""
    p = _check_prob(p, "p")
    k0 = np.array([[1, 0], [0, np.sqrt(1 - p)]], dtype=complex)
    k1 = np.array([[0, np.sqrt(p)], [0, 0]], dtype=complex)
    return KrausChannel([k0, k1], label=f"amplitude_damping({p:.6g})")


def dephasing(p: float) -> KrausChannel:
    """Pure dephasing that scales the off-diagonal elements by ``1 - p``."""
    p = _check_prob(p, "p")
    return KrausChannel(
        [np.sqrt(1 - p / 2) * I2, np.sqrt(p / 2) * Z], label=f"dephasing({p:.6g})"
    )


def depolarizing(p: float, num_qubits: int = 1) -> KrausChannel:
    """``(1-p) rho + p/(4^n - 1) * sum of the non-identity Pauli conjugations``.

    ``p = 3/4`` on one qubit (``15/16`` on two) sends every state to the
    maximally mixed state.
    """
    p = _check_prob(p, "p")
    n_terms = 4**num_qubits - 1
    ops = []
    for idx, paulis in enumerate(itertools.product(_PAULIS, repeat=num_qubits)):
        m = paulis[0]
        for extra in paulis[1:]:
            m = np.kron(m, extra)
        weight = 1 - p if idx == 0 else p / n_terms
        if weight > 0:
            ops.append(np.sqrt(weight) * m)
    return KrausChannel(ops, label=f"depolarizing{num_qubits}({p:.6g})")


def bit_flip(p: float) -> KrausChannel:
    p = _check_prob(p, "p")
    return KrausChannel([np.sqrt(1 - p) * I2, np.sqrt(p) * X], label=f"bit_flip({p:.6g})")


def phase_flip(p: float) -> KrausChannel:
    p = _check_prob(p, "p")
    return KrausChannel([np.sqrt(1 - p) * I2, np.sqrt(p) * Z], label=f"phase_flip({p:.6g})")
