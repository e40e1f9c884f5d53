import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from socpmw.harness import gen_feasible, gen_infeasible_uniform
from socpmw.instance import FeasibilityInstance, feasibility_check
from socpmw.jordan import ConePartition, cone_min_eigenvalue, jordan_exp, MulticoneVector, trace
from socpmw.mw import (
    AllSatisfied,
    DualWeights,
    OracleFailure,
    Violated,
    build_x_from_y,
    dual_image,
    feasibility_solve,
    iteration_count,
)
from socpmw.oracles import DirectOracle


def test_iteration_count_values():
    assert iteration_count(2, 0.1) == 4991
    assert 1.0 / (3 * iteration_count(2, 0.1)) == pytest.approx(1 / 14973)
    assert iteration_count(4, 0.1) == 7486


class TestDualWeights:
    def test_lattice(self):
        y = DualWeights(4, 0.25)
        y.add(2)
        y.add(2)
        y.add(0)
        assert y.entries == {0: 0.25, 2: 0.5}
        assert y.s == 2 and y.beta == pytest.approx(0.75)
        np.testing.assert_array_equal(y.dense(), [0.25, 0, 0.5, 0])
        assert DualWeights.from_dense(y.dense(), 0.25).counts == y.counts

    def test_bounds(self):
        with pytest.raises(IndexError):
            DualWeights(2, 0.1).add(2)
        with pytest.raises(ValueError):
            DualWeights.from_dense([0.15], 0.1)


class TestGibbsPoint:
    def test_zero_y(self):
        part = ConePartition([1, 3])
        F = FeasibilityInstance(part, (np.zeros((1, 1)), np.zeros((1, 3))), [0.0], 0.1)
        x = build_x_from_y(F, DualWeights(1, 0.1))
        np.testing.assert_allclose(x.values, [0.25, 0.25, 0, 0])

    @given(st.integers(0, 10_000))
    def test_unit_trace_interior(self, seed):
        F = gen_feasible(seed, r=3, size_range=(1, 5), m=4).instance
        rng = np.random.default_rng(seed)
        y = DualWeights.from_counts(rng.integers(0, 400, size=F.m), 1 / 60)
        x = build_x_from_y(F, y)
        assert trace(x) == pytest.approx(1.0, abs=1e-12)
        assert cone_min_eigenvalue(x) >= 0

    def test_matches_unshifted_formula(self, rng):
        F = gen_feasible(2, r=3, size_range=(1, 4), m=3).instance
        y = DualWeights.from_counts([3, 1, 2], 0.1)
        ex = jordan_exp(MulticoneVector(F.partition, -dual_image(F, y))).values
        np.testing.assert_allclose(build_x_from_y(F, y).values, ex / (2 * ex[F.partition.offsets].sum()), rtol=1e-13)

    def test_huge_weights_do_not_overflow(self):
        F = gen_feasible(3, r=2, size_range=(2, 2), m=2).instance
        y = DualWeights.from_counts([10**6, 0], 1.0)
        assert np.isfinite(build_x_from_y(F, y).values).all()


class TestSolve:
    @pytest.mark.parametrize("seed", range(5))
    def test_feasible_instances(self, seed):
        G = gen_feasible(seed, r=5, size_range=(1, 6), m=6, theta=0.1)
        res = feasibility_solve(G.instance)
        assert res.feasible and res.iterations <= res.T
        x = build_x_from_y(G.instance, res.y)
        assert feasibility_check(G.instance, x, slack=0.1, tol=1e-8).passed
        assert res.log[-1][1] is None

    def test_infeasible_runs_T(self):
        F = gen_infeasible_uniform(0.2, r=2, sizes=2, m=2)
        res = feasibility_solve(F)
        assert res.status == "Infeasible"
        assert res.iterations == res.T == iteration_count(2, 0.2)
        assert res.y.beta == pytest.approx(res.T * 0.2 / 6)
        assert res.oracle_calls == res.T

    @pytest.mark.parametrize("seed", range(4))
    def test_fused_matches_generic(self, seed):
        F = gen_feasible(seed, r=4, size_range=(1, 5), m=5, theta=0.1).instance
        F = FeasibilityInstance(F.partition, F.A_blocks, F.b - 0.05, F.theta)
        a = feasibility_solve(F, DirectOracle(), fused=True, T=2000)
        b = feasibility_solve(F, DirectOracle(), fused=False, T=2000)
        assert a.status == b.status and a.y.counts == b.y.counts
        np.testing.assert_array_equal(a.log_j, b.log_j)

    def test_oracle_failure_wrapped(self):
        F = gen_feasible(0).instance

        def bad(inst, y, xi):
            raise RuntimeError("boom")

        with pytest.raises(OracleFailure) as err:
            feasibility_solve(F, bad)
        assert err.value.iteration == 0

    def test_custom_oracle_protocol(self):
        F = gen_feasible(0, m=3).instance
        calls = []

        def scripted(inst, y, xi):
            calls.append(xi)
            return Violated(1, 1.0) if len(calls) < 4 else AllSatisfied(0.0)

        res = feasibility_solve(F, scripted, T=10)
        assert res.feasible and res.iterations == 3 and res.y.counts == {1: 3}
        assert calls[0] == pytest.approx(1 / 30)

    def test_theta_range(self):
        F = gen_feasible(0).instance
        with pytest.raises(ValueError):
            feasibility_solve(FeasibilityInstance(F.partition, F.A_blocks, F.b, 1.0))

    def test_no_constraints(self):
        part = ConePartition([2])
        F = FeasibilityInstance(part, (np.zeros((0, 2)),), np.zeros(0), 0.1)
        assert feasibility_solve(F).feasible
