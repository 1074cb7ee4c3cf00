"""deglint: design passive on-orbit inspection trajectories that keep
specular sun glint out of the camera.

The pipeline differentiates an image-based reflection cost through a
near-Earth SGP4 propagator, an analytic sun model and a ray-cast render of
the target, then walks the chaser's orbital elements downhill with Adam.
"""

from .autodiff import Dual, constant, seed
from .ephemeris import JulianDate, SunState, julian_day, sun_direction
from .geometry import TriangleMesh, load_mesh, panel_satellite
from .imaging import CameraPose, ImagingSettings, RenderBuffers, look_at, render
from .objective import (
    CostBreakdown,
    CostWeights,
    InspectionConfig,
    distance_cost,
    reflection_vector,
    specular_cost,
    trajectory_cost,
)
from .optimizer import (
    OptimizationResult,
    OptimizerSettings,
    evaluate_report,
    init_chaser,
    optimize,
)
from .sgp4 import (
    MeanElements,
    PropagatorModel,
    StateVector,
    elements_from_tle,
    semi_major_axis,
)
from .tle import Tle, parse, perturb, serialize

__version__ = "0.1.0"
