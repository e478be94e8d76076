"""Dense statevector simulation of the quadratic-response neuron circuit.

The routine prepares the amplitude encoding of ``x``, applies a weight
unitary that rotates the encoding of ``w`` onto the last basis state, flips
an ancilla controlled on that basis state and reads the ancilla. The result
is computed from amplitudes only and never calls into :mod:`hybridqc.response`,
so it can serve as an independent check of the quadratic response.
"""

from __future__ import annotations

import numpy as np

from .core import SeededRng, is_power_of_two, sample_sign

_DEPENDENCE_TOL = 1e-9


def _require_power_of_two(n: int) -> None:
    if not is_power_of_two(n) or n < 2:
        raise ValueError(f"vector length must be a power of two >= 2, got {n}")


def encode_amplitude(x) -> np.ndarray:
    """Real amplitude vector ``x / sqrt(N)`` of the input state."""
    x = np.asarray(x, dtype=float)
    _require_power_of_two(x.shape[0])
    return x / np.sqrt(x.shape[0])


def build_weight_unitary(w) -> np.ndarray:
    """Orthogonal matrix whose last row is ``w / sqrt(N)``.

    The remaining rows come from Gram-Schmidt over the standard basis
    ``e_0, e_1, ...`` in order, skipping vectors dependent on those already
    accepted, so the completion is deterministic.
    """
    target = encode_amplitude(w)
    n = target.shape[0]
    basis = [target]
    for i in range(n):
        if len(basis) == n:
            break
        v = np.zeros(n)
        v[i] = 1.0
        # two passes of classical Gram-Schmidt keep rows orthogonal to ~1e-16
        for _ in range(2):
            for b in basis:
                v -= np.dot(b, v) * b
        norm = np.linalg.norm(v)
        if norm < _DEPENDENCE_TOL:
            continue
        basis.append(v / norm)
    return np.vstack(basis[1:] + basis[:1])


def ancilla_probability(x, w) -> float:
    """Born-rule probability that the ancilla reads 1 after the circuit."""
    x = np.asarray(x)
    w = np.asarray(w)
    if x.shape != w.shape:
        raise ValueError(f"length mismatch: {x.shape[0]} != {w.shape[0]}")
    n = x.shape[0]
    phi = build_weight_unitary(w) @ encode_amplitude(x)
    # joint register: row j = system basis state, column = ancilla value
    joint = np.zeros((n, 2))
    joint[:, 0] = phi
    joint[n - 1, [0, 1]] = joint[n - 1, [1, 0]]  # multi-controlled NOT on |N-1>
    return float(np.sum(joint[:, 1] ** 2))


def sample_measurement(p: float, rng: SeededRng) -> int:
    """Single projective measurement of an ancilla firing with probability ``p``."""
    return sample_sign(p, rng)
