"""Change point localization for high-dimensional covariance matrices."""

from .bsop import BsopParams, bsop_detect
from .cusum import OuterPrefix, SegmentModel, cov_cusum, cusum_1d, pop_cusum, project_series
from .datagen import GenSpec, gen_series, hard_instance, spiked_cov
from .errors import ContractError, NumericalError
from .evaluation import EvalReport, compare, oracle_1d_argmax, oracle_single_cp
from .linalg import op_norm_eig, outer
from .results import Detection, DetectionResult
from .wbsip import IntervalSet, WbsipParams, draw_intervals, pc_directions, run_wbsip, split_series, wbsip_detect

__version__ = "0.1.0"
