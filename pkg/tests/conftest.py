import numpy as np
import pytest

from vipera.head import HeadConfig
from vipera.sources import SyntheticClusterSource
from vipera.store import split_manifest
from tests.test_store import synthetic_manifest

# toy separable task shared by trainer/acceptance tests
T_V, E_IN = 4, 8
CLUSTER_SEED = 1234


def cluster_task(n_sources=40, noise=1.0, center=0.5, seed=CLUSTER_SEED,
                 generators=("TF", "DC"), split_seed=0):
    """Split manifest + deterministic two-cluster embedding source.

    Real windows ~ N(+u, noise^2), fake windows ~ N(-u, noise^2) with
    u = center * ones(T_V, E_IN).
    """
    entries = split_manifest(synthetic_manifest(n_sources, generators=generators),
                             seed=split_seed)
    u = np.full((T_V, E_IN), center)
    source = SyntheticClusterSource(u, noise=noise, seed=seed)
    return entries, source, u


@pytest.fixture
def small_cluster_task():
    return cluster_task(n_sources=20)


def head_cfg():
    return HeadConfig(t_v=T_V, e_in=E_IN, t=2, e_red=4)
