"""Private arbitrary-exponent arithmetic context.

Residuals in the recursively renormed space decay doubly exponentially, far
below the double-precision range, so those computations run on a dedicated
mpmath context. Its precision is fixed at import and never changed, which
keeps it safe to share across threads.
"""
import math

import mpmath
import numpy as np

MP = mpmath.MPContext()
MP.dps = 50


def is_mp(value):
    return hasattr(value, "_mpf_")


def to_mp(value):
    if is_mp(value):
        return value
    return MP.mpf(float(value))


def to_float(value):
    """Convert to a Python float (values below the double range become 0.0)."""
    return float(value)


def exact_sum(values):
    values = list(values)
    if any(is_mp(v) for v in values):
        return MP.fsum(values)
    return math.fsum(values)


def object_array(values):
    out = np.empty(len(values), dtype=object)
    for i, v in enumerate(values):
        out[i] = v
    return out
