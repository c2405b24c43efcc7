import numpy as np
import pytest

import wegnerlab as wl


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # compile the jitted kernels once so per-test timings stay honest
    op = wl.TridiagonalOperator(np.array([2.0, 2.0]), np.array([-1.0]), 1.0,
                                "dirichlet", np.array([0.0, 1.0]))
    wl.count_below(op, 0.0)
    wl.eigenvalue_by_index(op, 1)


@pytest.fixture(scope="session")
def model():
    return wl.default_model()


@pytest.fixture(scope="session")
def free_model():
    # couplings confined to [0, 1e-300]: draws vanish against 2/h^2 exactly
    return wl.CanonicalModel(wl.zero_periodic(), wl.indicator_site(0.15),
                             wl.uniform_density(0.0, 1e-300))


def zero_realization(box_length, site):
    sites = wl.coupling_sites(box_length, site)
    return wl.Realization(sites, np.zeros(sites.size), box_length)


def constant_realization(box_length, site, value):
    sites = wl.coupling_sites(box_length, site)
    return wl.Realization(sites, np.full(sites.size, float(value)), box_length)


@pytest.fixture(scope="session")
def free_op():
    site = wl.indicator_site(0.15)
    model = wl.CanonicalModel(wl.zero_periodic(), site, wl.uniform_density(0.0, 1e-300))
    grid = wl.GridSpec(1, 4)
    return wl.assemble(model, zero_realization(1, site), grid)


def random_operator(rng, n=None, scale=100.0, h=1.0):
    n = int(rng.integers(2, 128)) if n is None else n
    diag = rng.uniform(-scale, scale, n)
    off = rng.uniform(-scale, scale, n - 1)
    return wl.TridiagonalOperator(diag, off, h, "dirichlet", np.arange(n, dtype=float))
