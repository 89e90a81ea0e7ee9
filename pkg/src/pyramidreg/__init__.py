"""Global point cloud registration with pyramid consistency graphs.

Sparse semantic landmarks are matched all-to-all, checked for pairwise
consistency at several thresholds, solved for the densest clique per
threshold with a warm-started cascade, turned into pose candidates by
graduated non-convexity, and verified against the dense clouds.
"""

from .config import PipelineConfig, load_config
from .errors import RegistrationError
from .geometry import SE2, SE3, RigidMotion, apply, compose, inverse, pose_error
from .ingestion import DenseCloud, LabeledCloud, LandmarkSet, extract_landmarks, read_kitti_bin, read_xyz
from .pipeline import CloudSource, RegistrationResult, register, register_files

__version__ = "0.1.0"
