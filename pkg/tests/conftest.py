import numpy as np
import pytest

from sounderfeit import adversarial, dataset


@pytest.fixture(scope="session")
def bowed1_small():
    """Tiny bowed1 corpus (grid step 16): fast shared fixture."""
    return dataset.build_bowed1(grid_step=16)


@pytest.fixture(scope="session")
def bowed1_step4():
    """Desk-scale bowed1 corpus used by the acceptance criteria."""
    return dataset.build_bowed1(grid_step=4)


@pytest.fixture(scope="session")
def bowed2_20k():
    """Desk-scale bowed2 corpus used by the acceptance criteria."""
    return dataset.build_bowed2(20000, seed=0)


@pytest.fixture(scope="session")
def quick_model(bowed1_small):
    """A fully-trained (but tiny-corpus) D1_Z2_Y model for plumbing tests."""
    model, _ = adversarial.train(
        bowed1_small, "D1_Z2_Y",
        adversarial.TrainConfig(seed=1))
    return model


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
