"""Global nearest-rank percentile thresholding in native polar geometry."""

import math
from fractions import Fraction

import numpy as np

from .cube import PowerVolume3D, RadarTensor4D, cells_to_cloud, power_map
from .errors import DomainError


def check_percentile(r):
    r = float(r)
    if not 0.0 <= r <= 100.0:
        raise DomainError(f"percentile r must lie in [0, 100], got {r}")
    return r


def nearest_rank_index(r, n):
    """Zero-based index into the ascending sort: ``ceil(r/100 * n) - 1`` clamped to [0, n-1].

    ``r`` is taken at its shortest decimal representation so that e.g.
    ``r=99.9, n=10**6`` lands on 998999 rather than suffering binary rounding.
    """
    r = check_percentile(r)
    if n < 1:
        raise DomainError("percentile of an empty set")
    k = math.ceil(Fraction(repr(r)) * n / 100) - 1
    return min(max(k, 0), n - 1)


def percentile_of(values, r):
    """Nearest-rank percentile of a flat array, by partial selection."""
    values = np.asarray(values).ravel()
    if values.size == 0:
        raise DomainError("percentile of an empty set")
    k = nearest_rank_index(r, values.size)
    return values[np.argpartition(values, k)[k]]


def percentile_threshold(volume: PowerVolume3D, r) -> float:
    return float(percentile_of(volume.values, r))


def percentile_mask(volume: PowerVolume3D, r):
    """Boolean mask of cells whose power is >= the r-th percentile."""
    return volume.values >= percentile_threshold(volume, r)


def filter_polar_percentile(tensor: RadarTensor4D, r, frame_id=""):
    volume = power_map(tensor)
    return cells_to_cloud(volume, percentile_mask(volume, r), frame_id)
