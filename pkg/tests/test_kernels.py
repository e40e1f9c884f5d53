"""The numba kernels and the numpy fallback must agree."""
import os
import subprocess
import sys

import numpy as np
import pytest

from socpmw import kernels
from socpmw._accel import HAVE_NUMBA
from socpmw.harness import gen_feasible, gen_infeasible_uniform

needs_numba = pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")


def _cones(rng, r=30):
    sizes = rng.integers(1, 9, size=r).astype(np.int64)
    offsets = np.concatenate(([0], np.cumsum(sizes)[:-1])).astype(np.int64)
    return sizes, offsets


@needs_numba
def test_cone_parts_agree(rng):
    sizes, offsets = _cones(rng)
    v = rng.standard_normal(int(sizes.sum()))
    for a, b in zip(kernels.cone_parts_numpy(v, offsets, sizes), kernels.cone_parts_numba(v, offsets, sizes)):
        np.testing.assert_allclose(a, b, rtol=1e-14)


@needs_numba
@pytest.mark.parametrize("scale", [1e-9, 1e-3, 1.0, 30.0])
def test_cone_exp_agree(rng, scale):
    sizes, offsets = _cones(rng)
    v = scale * rng.standard_normal(int(sizes.sum()))
    a = kernels.cone_exp_numpy(v, offsets, sizes, 0.5)
    b = kernels.cone_exp_numba(v, offsets, sizes, 0.5)
    np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-300)


@needs_numba
def test_mw_direct_agree_infeasible():
    F = gen_infeasible_uniform(0.1, r=4, sizes=3, m=3)
    args = (F.A, F.b, F.partition.offsets, F.partition.sizes, 0.1, 7486)
    a = kernels.mw_direct_numpy(*args)
    b = kernels.mw_direct_numba(*args)
    assert a[0] == b[0] == kernels.MW_INFEASIBLE
    assert a[4] == b[4] == 7486
    np.testing.assert_array_equal(a[1], b[1])
    np.testing.assert_array_equal(a[2], b[2])


@needs_numba
@pytest.mark.parametrize("seed", range(4))
def test_mw_direct_agree_feasible(seed):
    F = gen_feasible(seed, r=6, size_range=(1, 5), m=6, theta=0.1).instance
    b = F.b - 0.04  # make the loop do some work
    args = (F.A, b, F.partition.offsets, F.partition.sizes, 0.1, 3000)
    x = kernels.mw_direct_numpy(*args)
    y = kernels.mw_direct_numba(*args)
    assert x[0] == y[0]
    np.testing.assert_array_equal(x[2], y[2])
    np.testing.assert_allclose(x[3], y[3], rtol=1e-10, atol=1e-12)


@needs_numba
def test_mom_batch_means_agree(rng):
    row = rng.standard_normal(7)
    row[3] = 0.0
    sq = row * row
    cum = np.cumsum(sq)
    p = rng.standard_normal(7)
    u = rng.random((9, 500))
    a = kernels.mom_batch_means_numpy(row, cum, p, float(cum[-1]), 6, u)
    b = kernels.mom_batch_means_numba(row, cum, p, float(cum[-1]), 6, u)
    np.testing.assert_allclose(a, b, rtol=1e-13)


def test_env_flag_selects_numpy():
    code = "from socpmw import kernels; print(kernels.cone_exp is kernels.cone_exp_numpy)"
    env = dict(os.environ, SOCPMW_NUMBA="0")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "True"


def test_fallback_solves_the_same(tmp_path):
    """A full feasibility solve under the numpy path matches the default path."""
    code = (
        "from socpmw.harness import gen_feasible\n"
        "from socpmw.mw import feasibility_solve\n"
        "F = gen_feasible(7, r=4, size_range=(1, 4), m=5, theta=0.1).instance\n"
        "res = feasibility_solve(F)\n"
        "print(res.status, res.iterations, sorted(res.y.counts.items()))\n"
    )
    outs = []
    for flag in ("0", "1"):
        env = dict(os.environ, SOCPMW_NUMBA=flag)
        outs.append(subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                                   text=True, check=True).stdout)
    assert outs[0] == outs[1]
