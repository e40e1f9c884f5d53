import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from socpmw.jordan import ConePartition, MulticoneVector

settings.register_profile(
    "default", max_examples=60, deadline=None, derandomize=True, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def random_multicone(rng, sizes, scale=1.0) -> MulticoneVector:
    part = ConePartition(np.asarray(sizes))
    return MulticoneVector(part, scale * rng.standard_normal(part.n))


def random_cone_point(rng, sizes, trace_total=1.0) -> MulticoneVector:
    """Strictly interior point with the given total trace."""
    part = ConePartition(np.asarray(sizes))
    t = trace_total * rng.dirichlet(np.ones(part.r))
    vals = np.zeros(part.n)
    for k in range(part.r):
        blk = part.block(k)
        vals[blk.start] = t[k] / 2
        if blk.stop - blk.start > 1:
            d = rng.standard_normal(blk.stop - blk.start - 1)
            vals[blk.start + 1 : blk.stop] = 0.9 * (t[k] / 2) * d / np.linalg.norm(d)
    return MulticoneVector(part, vals)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance results, filled by tests/test_acceptance.py and printed at the end of the run
ACCEPTANCE_RESULTS: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        ok, title, detail = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n}. {title}: {detail}")
