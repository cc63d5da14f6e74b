"""4D radar tensor pre-processing and multi-teacher distillation support."""

from .cube import (
    PointCloud,
    PolarGridSpec,
    PowerVolume3D,
    RadarPoint,
    RadarTensor4D,
    cartesian_to_polar,
    discrete_to_continuous,
    polar_to_cartesian,
    power_map,
    read_4drt,
    write_4drt,
)
from .cartesian import (
    CartesianGridSpec,
    CartesianVoxelVolume,
    filter_cartesian_percentile,
    resample_to_cartesian,
)
from .cfar import CfarConfig, TlpConfig, ca_cfar, two_level_preproc
from .percentile import filter_polar_percentile, percentile_threshold
from .scene import Scatterer, SceneConfig, generate_4drt

__version__ = "0.1.0"
