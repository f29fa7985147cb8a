import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def dual_cache_path(tmp_path_factory):
    return tmp_path_factory.mktemp("cache") / "bspline_norm_cache.json"


@pytest.fixture(scope="session")
def growth_report(dual_cache_path):
    """The default-config experiment, run once per session (several minutes)."""
    import time

    from modlab.harness import run_growth_experiment

    t0 = time.perf_counter()
    report = run_growth_experiment({}, cache_path=dual_cache_path)
    report.elapsed = time.perf_counter() - t0
    return report


@pytest.fixture(scope="session")
def identity_checks():
    """Closed-form, Moyal and adjoint checks at the default config (a few minutes)."""
    from modlab.harness import identity_suite

    return identity_suite({})
