import numpy as np
import pytest

from funcpd.core import FunctionalSample
from funcpd.kernels import KernelSpec

ALL_KERNELS = [KernelSpec.cusum(), KernelSpec.spatial_sign(), KernelSpec.clipped(0.7)]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_sample(rng, n, d):
    return FunctionalSample(rng.standard_normal((n, d)))


@pytest.fixture(params=ALL_KERNELS, ids=lambda k: k.kind.value)
def kernel(request):
    return request.param
