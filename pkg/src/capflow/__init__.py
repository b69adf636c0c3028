"""Capillary inverse-mean-curvature-type flow of radial graphs over the half-sphere.

The public surface is re-exported here; see the submodules for details.
"""
from .caps import (AngleError, CapConstants, CapSpec, ContactAngle, as_angle, b_theta,
                   b_theta_closed_form, cap_constants, cap_gauge, cap_radial, radial_gauge)
from .config import ConfigError, FlowConfig, load_config, config_from_dict
from .geometry import GeometrySnapshot, snapshot
from .grid import (GhostClosureError, GridError, GridSpec, HalfSphereGrid, RadialField,
                   build_grid, capillary_ghost, differentiate)
from .initial import InadmissibleInitialData, InitSpec, make_initial, validate
from .integrals import CSV_COLUMNS, QuermassRecord, capillary_area, integrate, minkowski_deficit
from .solver import (FlowState, MeanConvexityLost, MonitorSuite, RunResult, StopReason,
                     distance_to_cap, fitted_radius, predicted_limit_radius, rhs, run,
                     stable_dt, step, tendency)

__version__ = "0.1.0"
