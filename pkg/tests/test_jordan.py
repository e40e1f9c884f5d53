import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from socpmw.harness import matrix_exp_oracle
from socpmw.jordan import (
    ConePartition,
    JordanOverflowError,
    MulticoneVector,
    PartitionMismatchError,
    arrowhead_dense,
    cone_min_eigenvalue,
    eigenvalues,
    identity_element,
    inner,
    is_in_cone,
    jordan_exp,
    jordan_product,
    soc_norm,
    spectral_decompose,
    trace,
    trace_exp,
)

from conftest import random_multicone

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)


@st.composite
def multicone(draw, max_r=4, max_size=6):
    sizes = draw(st.lists(st.integers(1, max_size), min_size=1, max_size=max_r))
    vals = draw(arrays(np.float64, sum(sizes), elements=finite))
    return MulticoneVector(ConePartition(np.array(sizes)), vals)


@st.composite
def multicone_pair(draw):
    v = draw(multicone())
    w = draw(arrays(np.float64, v.partition.n, elements=finite))
    return v, MulticoneVector(v.partition, w)


class TestPartition:
    def test_offsets_and_blocks(self):
        p = ConePartition([3, 1, 2])
        assert p.n == 6 and p.r == 3
        assert p.offsets.tolist() == [0, 3, 4]
        assert p.block(2) == slice(4, 6)
        assert p.cone_of().tolist() == [0, 0, 0, 1, 2, 2]

    @pytest.mark.parametrize("sizes", [[], [0], [2, -1]])
    def test_rejects_bad_sizes(self, sizes):
        with pytest.raises(ValueError):
            ConePartition(np.asarray(sizes, dtype=np.int64))

    def test_extend_and_equality(self):
        p = ConePartition([2, 2])
        assert p.extend(1) == ConePartition([2, 2, 1])
        assert hash(p) == hash(ConePartition([2, 2]))

    def test_vector_length_checked(self):
        with pytest.raises(ValueError):
            MulticoneVector(ConePartition([2]), [1.0, 2.0, 3.0])


class TestSpectral:
    def test_hand_example(self):
        v = MulticoneVector(ConePartition([3]), [2.0, 3.0, 4.0])
        sd = spectral_decompose(v)
        assert sd.lambda_plus[0] == pytest.approx(7.0)
        assert sd.lambda_minus[0] == pytest.approx(-3.0)
        cp, cm = sd.frame(0)
        np.testing.assert_allclose(cp, [0.5, 0.3, 0.4])
        np.testing.assert_allclose(cm, [0.5, -0.3, -0.4])

    def test_degenerate_frame(self):
        v = MulticoneVector(ConePartition([1, 3]), [2.0, 1.0, 0.0, 0.0])
        sd = spectral_decompose(v)
        assert sd.directions == (None, None)
        assert sd.lambda_plus.tolist() == sd.lambda_minus.tolist() == [2.0, 1.0]

    @given(multicone())
    def test_reconstruction(self, v):
        sd = spectral_decompose(v)
        for k in range(v.partition.r):
            fr = sd.frame(k)
            blk = v.cone(k)
            if fr is None:
                assert np.linalg.norm(blk[1:]) <= 1e-13 * (1 + abs(blk[0])) + 1e-300
                continue
            rec = sd.lambda_plus[k] * fr[0] + sd.lambda_minus[k] * fr[1]
            np.testing.assert_allclose(rec, blk, atol=1e-12 * (1 + np.abs(blk).max()))

    @given(multicone())
    def test_frame_idempotents(self, v):
        sd = spectral_decompose(v)
        for k in range(v.partition.r):
            fr = sd.frame(k)
            if fr is None:
                continue
            part = ConePartition([fr[0].size])
            cp, cm = (MulticoneVector(part, c) for c in fr)
            np.testing.assert_allclose(jordan_product(cp, cp).values, cp.values, atol=1e-12)
            np.testing.assert_allclose(jordan_product(cp, cm).values, 0.0, atol=1e-12)
            np.testing.assert_allclose((cp + cm).values, identity_element(part).values, atol=1e-15)


class TestProductAndNorm:
    @given(multicone_pair())
    def test_product_is_arrowhead(self, vw):
        v, w = vw
        dense = arrowhead_dense(v) @ w.values
        np.testing.assert_allclose(jordan_product(v, w).values, dense, rtol=0, atol=1e-12 * 100)

    @given(multicone_pair())
    def test_product_commutes(self, vw):
        v, w = vw
        np.testing.assert_allclose(jordan_product(v, w).values, jordan_product(w, v).values, atol=1e-12)

    @given(multicone())
    def test_identity(self, v):
        e = identity_element(v.partition)
        np.testing.assert_allclose(jordan_product(e, v).values, v.values, atol=0)

    @given(multicone())
    def test_soc_norm_is_spectral_norm(self, v):
        dense = np.linalg.norm(arrowhead_dense(v), 2)
        assert soc_norm(v) == pytest.approx(dense, rel=1e-10, abs=1e-12)

    @given(multicone())
    def test_trace_identities(self, v):
        lp, lm = eigenvalues(v)
        assert trace(v) == pytest.approx(float(np.sum(lp + lm)), abs=1e-10)
        e = identity_element(v.partition)
        assert inner(e, v) == pytest.approx(trace(v) / 2, abs=1e-12)

    def test_mismatch_raises(self):
        v = MulticoneVector(ConePartition([2]), [1.0, 0.0])
        w = MulticoneVector(ConePartition([1, 1]), [1.0, 0.0])
        with pytest.raises(PartitionMismatchError):
            jordan_product(v, w)

    def test_cone_membership(self):
        p = ConePartition([3])
        assert is_in_cone(MulticoneVector(p, [1.0, 0.6, 0.8]), tol=1e-15)
        assert not is_in_cone(MulticoneVector(p, [1.0, 0.7, 0.8]))
        assert cone_min_eigenvalue(MulticoneVector(p, [2.0, 0.0, 1.0])) == pytest.approx(1.0)


class TestExponential:
    def test_zero_gives_identity(self):
        p = ConePartition([1, 4])
        np.testing.assert_allclose(jordan_exp(MulticoneVector(p, np.zeros(5))).values, identity_element(p).values)

    def test_scalar_cone(self):
        v = MulticoneVector(ConePartition([2]), [math.log(2.0), 0.0])
        np.testing.assert_allclose(jordan_exp(v).values, [2.0, 0.0], rtol=1e-15)

    @given(multicone())
    def test_exp_in_interior_and_trace(self, v):
        shift = float(np.max(eigenvalues(v)[0]))
        ex = jordan_exp(v, shift)
        assert cone_min_eigenvalue(ex) > 0
        assert trace(ex) == pytest.approx(trace_exp(v, shift), rel=1e-12)

    @given(multicone())
    def test_shift_scales(self, v):
        a = jordan_exp(v).values
        b = jordan_exp(v, shift=1.5).values * math.exp(1.5)
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-300)

    @given(multicone_pair())
    def test_exp_of_sum_when_commuting(self, vw):
        v, _ = vw
        w = v * 0.5  # commutes with v
        lhs = jordan_exp(v + w).values
        rhs = jordan_product(jordan_exp(v), jordan_exp(w)).values
        np.testing.assert_allclose(lhs, rhs, rtol=1e-10, atol=1e-10)

    def test_against_dense_oracle(self, rng):
        for size in range(1, 17):
            v = random_multicone(rng, [size], scale=1.5)
            ref = matrix_exp_oracle(v.values)
            np.testing.assert_allclose(jordan_exp(v).values, ref, rtol=1e-11, atol=1e-12 * np.abs(ref).max())

    def test_overflow_guard(self):
        v = MulticoneVector(ConePartition([2]), [800.0, 1.0])
        with pytest.raises(JordanOverflowError):
            jordan_exp(v)
        assert np.isfinite(jordan_exp(v, shift=801.0).values).all()
