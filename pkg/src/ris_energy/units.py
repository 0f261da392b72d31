"""dB <-> linear conversions. Everything inside the package is linear."""
import math

import numpy as np


def db_to_linear(x_db):
    """Power ratio in dB to linear scale. ``-inf`` maps to 0."""
    if np.ndim(x_db) == 0:
        return 10.0 ** (float(x_db) / 10.0)
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    if np.ndim(x) == 0:
        x = float(x)
        return -math.inf if x == 0.0 else 10.0 * math.log10(x)
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(x, dtype=float))
