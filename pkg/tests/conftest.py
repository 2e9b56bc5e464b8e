import numpy as np
import pytest

from branchrange import _kernels as kernels


def make_shifted_pair(rng: np.random.Generator, h: int, w: int, shift: int):
    """Stereo pair with exact uniform disparity = ``shift``.

    Both views crop a common wide texture so that
    right(x - shift, y) = left(x, y) for every x >= shift, with no
    untextured padding in either view.
    """
    texture = rng.integers(0, 256, (h, w + shift), dtype=np.uint8)
    left = texture[:, :w].copy()
    right = texture[:, shift:].copy()
    return left, right


@pytest.fixture(params=sorted(kernels.available_backends()))
def backend(request):
    """Each available kernel backend (cython build + numpy fallback)."""
    return kernels.available_backends()[request.param]
