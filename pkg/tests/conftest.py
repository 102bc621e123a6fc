import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from logwave.spectral import build_domain

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def line():
    return build_domain(1, math.pi, 32)


@pytest.fixture(scope="session")
def rect():
    return build_domain(2, (math.pi, 2.0), (12, 10))


def smooth_coeffs(rng, domain, decay=2.0, scale=1.0):
    ks = np.meshgrid(*[np.arange(1, m + 1) for m in domain.modes], indexing="ij")
    k2 = sum(k**2 for k in ks)
    return scale * rng.standard_normal(domain.modes) / k2**decay


_RUNS = {}


def preset_run(name, **overrides):
    """(config, record, well) for a shipped preset; cached for the session."""
    from logwave.config import preset_config
    from logwave.dynamics import simulate

    key = (name, tuple(sorted(overrides.items())))
    if key not in _RUNS:
        cfg = preset_config(name, **overrides)
        rec, _ = simulate(cfg)
        _RUNS[key] = (cfg, rec, cfg.well_analysis())
    return _RUNS[key]


_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def verdict():
    """Record one ``PASS/FAIL criterion N: detail`` line, then assert it."""

    def record(n: int, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
        _ACCEPTANCE[n] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[n])
