import numpy as np
import pytest

from pif.synth import calibration_image, textured_image


@pytest.fixture(scope="session")
def texture():
    return textured_image(96, 128, seed=3)


@pytest.fixture(scope="session")
def small_anchor():
    """Calibration texture at a size fast enough for fit tests."""
    from pif.fit import style_anchor

    img = calibration_image(128, 128, seed=5)
    return style_anchor(img)


def random_image(shape=(32, 32, 3), seed=0):
    return np.random.default_rng(seed).random(shape)
