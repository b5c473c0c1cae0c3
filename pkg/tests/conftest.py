import numpy as np
import pytest

from hiflow.geometry import generate_curve

# the five-curve corpus used by the dissipation, Fenchel and no-blow-up checks
CORPUS = {
    "circle2": ("circle", {"r": 2.0}),
    "ellipse21": ("ellipse", {"a": 2.0, "b": 1.0}),
    "fourier": ("fourier", {"coefficients": [1.5, 0.0, 0.0, 0.2, 0.0, 0.1, 0.0]}),
    "rounded_square": ("rounded_polygon", {"sides": 4, "radius": 1.5, "sharpness": 6.0}),
    "figure_eight": ("figure_eight", {"scale": 1.5}),
}


def corpus_curve(name, N=128, **kw):
    shape, params = CORPUS[name]
    return generate_curve(shape, N, **params, **kw)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def ellipse64():
    return generate_curve("ellipse", 64, equal_chords=True, a=2.0, b=1.0)
