import numpy as np
import pytest

from epscap import Dmc, MixedChannel

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def mixed_bsc():
    return MixedChannel.from_pairs([(0.5, Dmc.bsc(0.1)), (0.5, Dmc.bsc(0.2))])


@pytest.fixture(scope="session")
def mixed_bsc_cost():
    return MixedChannel.from_pairs([(0.5, Dmc.bsc(0.1)), (0.5, Dmc.bsc(0.2))], cost=[0.0, 1.0])


@pytest.fixture(scope="session")
def three_bsc():
    # well-ordered: capacities increase with the index
    return MixedChannel.from_pairs([(0.2, Dmc.bsc(0.3)), (0.3, Dmc.bsc(0.2)), (0.5, Dmc.bsc(0.1))])


@pytest.fixture(scope="session")
def z_mirror():
    # equal capacities but different optimizers: not well-ordered
    z = Dmc.z_channel(0.5)
    return MixedChannel.from_pairs([(0.5, z), (0.5, z.relabel_inputs([1, 0]))])


def random_mixed(rng, nx, ny, n_comp, cost=False):
    from oracles import random_matrix

    weights = rng.dirichlet(np.ones(n_comp))
    weights = np.maximum(weights, 1e-3)
    weights /= weights.sum()
    mats = [Dmc(random_matrix(rng, nx, ny)) for _ in range(n_comp)]
    c = rng.random(nx) if cost else None
    return MixedChannel(weights, tuple(mats), cost=c)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
