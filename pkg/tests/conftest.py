import numpy as np
import pytest

from dexkin.model import ARCHETYPE_KINDS, build_archetype


@pytest.fixture(scope="session")
def archetypes():
    return {kind: build_archetype(kind) for kind in ARCHETYPE_KINDS}


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)


def random_config(rng, chain):
    lim = chain.joint_limits()
    return rng.uniform(lim[:, 0], lim[:, 1])


def random_hand_config(rng, model):
    lim = model.joint_limits()
    return rng.uniform(lim[:, 0], lim[:, 1])
