import numpy as np
import pytest

from lpquant.norms import parse_norm
from lpquant.space import MeasureSpace

SMOOTH_NORMS = ["euclidean", "q:3", "q:1.5", "weighted:1,4"]


def random_space(rng, n, d, infinite_mass=False, scale=1.0):
    w = rng.uniform(0.2, 2.0, size=n)
    f = rng.normal(scale=scale, size=(n, d))
    return MeasureSpace(w, f, infinite_mass)


def norm_for(spec, d):
    if spec.startswith("weighted:"):
        base = [float(x) for x in spec.split(":")[1].split(",")]
        spec = "weighted:" + ",".join(str(base[i % len(base)]) for i in range(d))
    return parse_norm(spec, dim=d)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
