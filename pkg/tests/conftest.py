import numpy as np
import pytest
from hypothesis import settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.linalg import expm

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

entries = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False, allow_infinity=False)
mat3 = arrays(np.float64, (3, 3), elements=entries)


def as_sym(a):
    return 0.5 * (a + a.T)


@st.composite
def sym3(draw, scale=1.0):
    return scale * as_sym(draw(mat3))


@st.composite
def spd3(draw, scale=0.8):
    return expm(scale * as_sym(draw(mat3)))


@st.composite
def gl3(draw, scale=0.5):
    """Invertible matrix with positive determinant (close enough to a rotation-free expm)."""
    return expm(scale * draw(mat3))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
