"""Object recognition that fuses tactile appearance with contact
positions: word-labeled 4-D point clouds classified by iterative
closest-point registration, alongside position-only and bag-of-words
baselines."""

from .codebook import (BowHistogram, Codebook, InfeasibleClusteringError,
                       assign_label, assign_labels, bow_histogram,
                       build_labeled_cloud, kmeans_fit, load_codebook,
                       save_codebook)
from .data import (Cloud, Dataset, Exploration, ParseError, TactileFrame,
                   TouchSample, parse_exploration, serialize_exploration)
from .descriptors import (DegenerateFrameError, Descriptor, DescriptorConfig,
                          DescriptorKind, describe_exploration,
                          describe_samples, hu_moments,
                          normalized_central_moments, raw_moments,
                          zernike_moments)
from .recognition import (ClassificationReport, CodebookParams, EvalCurve,
                          Method, ObjectModel, build_model, classify_bow,
                          classify_icp3, classify_iclap, evaluate_touch_sweep,
                          pair_rate, serialize_curve)
from .registration import (IcpParams, KdTree, RegistrationResult,
                           RigidTransform, StopReason, build_kdtree, centroid,
                           cross_covariance, iclap_distance, icp_register,
                           kabsch, nearest, random_rotation,
                           trace_optimality_check)
from .synth import (ExplorationSpec, SynthObjectSpec, generate_exploration,
                    render_touch, standard_benchmark)

__version__ = "0.1.0"
