import numpy as np
import pytest

from tof_forge.forge import ScenarioSpec
from tof_forge.presets import default_pose_grid


def tiny_spec(**overrides):
    """Small custom grid for fast functional tests: 4 poses, 1 cell."""
    poses, names = default_pose_grid((0.0, 30.0), (0.0, 120.0))
    kwargs = dict(dataset_kind="custom", poses=poses, pose_names=names,
                  snr_list=(1.0,), n_pulses_list=(100_000,), replicates=5,
                  master_seed=11)
    kwargs.update(overrides)
    return ScenarioSpec(**kwargs)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
