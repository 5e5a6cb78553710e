"""Log-min-max normalisation of raw readouts."""

import numpy as np

from ..core import EncodedSignal
from ..errors import ConstantSignal, NonPositive

FLOOR_RATIO = 1e-12


def log_min_max_rows(Y, clamp: bool = True) -> np.ndarray:
    """Row-wise ``(z - min z) / (max z - min z)`` with ``z = log(y)``.

    With ``clamp`` each entry is first raised to ``1e-12 * max(y)`` so exact
    zeros (e.g. a dark channel) stay finite.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if clamp:
        top = Y.max(axis=1, keepdims=True)
        if np.any(top <= 0):
            raise NonPositive("readout has no positive entry")
        Y = np.maximum(Y, FLOOR_RATIO * top)
    elif np.any(Y <= 0):
        raise NonPositive("log-min-max needs strictly positive readouts")
    Z = np.log(Y)
    lo = Z.min(axis=1, keepdims=True)
    span = Z.max(axis=1, keepdims=True) - lo
    if np.any(span < 1e-12):
        raise ConstantSignal("readout is constant; log-min-max is undefined")
    return (Z - lo) / span


def log_min_max(y: EncodedSignal, clamp: bool = True) -> EncodedSignal:
    values = y.values if isinstance(y, EncodedSignal) else np.asarray(y, dtype=np.float64)
    return EncodedSignal(log_min_max_rows(values, clamp)[0], normalized=True)
