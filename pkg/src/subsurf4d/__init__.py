"""Semi-implicit 4D (3D + time) subjective-surface segmentation and cell tracking."""

from .edge import EdgeParams, face_coefficients, face_gradients
from .eoc import EocConfig, error_report, run_levelset_row
from .grid import Field4D, GridSpec, Index4
from .io import CentersTable, read_centers, read_image4d, write_image4d
from .preprocess import SmoothingParams, ThresholdParams, heat_smooth, local_threshold
from .segmentation import SegmentationParams, segment
from .seedinit import InitParams, build_initial, local_rescale
from .sor import Partition, SolverParams, assemble_step, redblack_sor, solve_step
from .tracking import track

__all__ = [
    "CentersTable", "EdgeParams", "EocConfig", "Field4D", "GridSpec", "Index4",
    "InitParams", "Partition", "SegmentationParams", "SmoothingParams", "SolverParams",
    "ThresholdParams", "assemble_step", "build_initial", "error_report", "face_coefficients",
    "face_gradients", "heat_smooth", "local_rescale", "local_threshold", "read_centers",
    "read_image4d", "redblack_sor", "run_levelset_row", "segment", "solve_step", "track",
    "write_image4d",
]
