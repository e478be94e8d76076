"""Response functions mapping a normalized inner product to a firing probability."""

from __future__ import annotations

from enum import Enum

import numpy as np

EPS = 1e-6


class ResponseKind(str, Enum):
    QUADRATIC = "q"
    BIASED_QUADRATIC = "bq"
    BIASED_CENTERED_QUADRATIC = "bcq"
    LINEAR = "l"
    SIGMOID = "sigmoid"

    @classmethod
    def parse(cls, value: "str | ResponseKind") -> "ResponseKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            names = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown response kind {value!r} (expected one of {names})") from None

    @property
    def is_quantum(self) -> bool:
        return self is not ResponseKind.SIGMOID


def sigmoid(a):
    # exp(-log(1 + e^-a)) avoids overflow for large |a|
    return np.exp(-np.logaddexp(0.0, -np.asarray(a, dtype=float)))


def response(kind: ResponseKind | str, ip, *, negated_linear: bool = False):
    """Evaluate the response ``kind`` at ``ip`` and clamp into ``[EPS, 1 - EPS]``.

    ``ip`` may be a scalar or an array. Quantum kinds require ``ip`` in [-1, 1];
    the sigmoid accepts any real. ``negated_linear`` selects the ``1/2 - ip/2``
    variant of the linear response.
    """
    kind = ResponseKind.parse(kind)
    a = np.asarray(ip, dtype=float)
    if kind.is_quantum and np.any(np.abs(a) > 1.0):
        raise ValueError(f"inner product outside [-1, 1] for response {kind.value!r}")
    if kind is ResponseKind.QUADRATIC:
        g = a * a
    elif kind is ResponseKind.BIASED_QUADRATIC:
        g = 0.5 + 0.5 * a * a
    elif kind is ResponseKind.BIASED_CENTERED_QUADRATIC:
        g = 0.5 + 0.5 * (a - 0.5) ** 2
    elif kind is ResponseKind.LINEAR:
        g = 0.5 - 0.5 * a if negated_linear else 0.5 + 0.5 * a
    else:
        g = sigmoid(a)
    g = np.clip(g, EPS, 1.0 - EPS)
    return float(g) if g.ndim == 0 else g
