"""tof-forge: photon-counting LiDAR histogram simulation and evaluation."""

__version__ = "0.1.0"

from .errors import (ConfigError, DatasetFormatError, DepthGridError,
                     GenerationError, OutOfWindowError, PayloadChecksumError,
                     SchemaVersionError, TofForgeError, TruncatedPayloadError)
from .scene import (C_LIGHT, ImpulseResponse, MockDroneSpec, PointCloud, Pose,
                    SurfaceSet, discretize_response, first_return_window_start,
                    load_depth_grid, make_mock_drone, project_to_surfaces, rotate)
from .photon import (DetectionProfile, DetectorModel, FluxProfile, Histogram,
                     PulseModel, deadtime_correct, flux_profile, gaussian_blur,
                     mc_detector_oracle, poisson_prob, sample_histogram)
from .linkbudget import (LinkBudget, NoiseSpec, SignalAnchor, noise_photons,
                         photons_at_target, required_pulse_energy, signal_photons)
from .forge import (DEFAULT_MASTER_SEED, LabeledDataset, ScenarioSpec, generate,
                    preprocess, preprocess_matrix, sample_rng, smoothed_peak,
                    thin, thin_dataset)
from .dataio import (export_csv, generate_to_dir, read_dataset, read_manifest,
                     write_dataset, write_golden_vectors)
from .evaluate import (CentroidClassifier, CVResult, FoldPlan, SplitPlan,
                       SweepReport, classify_centroid, confusion_matrix,
                       evaluate_dataset, make_folds, make_ratio_split, run_cv,
                       run_split, sweep_report, train_centroid_baseline,
                       write_report)
from .presets import comparison_spec, distance_spec, spec_from_config

__all__ = [name for name in dir() if not name.startswith("_")]
