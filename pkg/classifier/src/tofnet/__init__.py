"""tofnet: deep 1D classifiers for photon-counting LiDAR histograms."""

__version__ = "0.1.0"

from .data import (HistogramDataset, check_golden, load_csv, load_dataset,
                   preprocess, preprocess_matrix, read_fold_file, read_manifest)
from .models import ARCHITECTURES, NetSpec, ResidualBlock, build_model, small_spec
from .train import (DivergenceError, TrainResult, TrainSpec, predict,
                    stratified_ratio_split, train)
from .evalcv import EvalReport, evaluate_cv, write_report
