import math
import warnings
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from projdim.errors import DomainError, PrecisionLoss, SingularInput
from projdim.linalg import (
    Matrix3,
    exterior_square,
    frobenius_bracket,
    mat_mul,
    operator_norm,
    opnorm_batch,
    singular_values,
    svf,
    svf_via_norms,
    sym3_eigenvalues,
)
from projdim.systems import rauzy_alphabet

# Singular values of the first Rauzy generator, frozen from an independent
# dense eigensolver run on A A^T = [[3,1,1],[1,1,0],[1,0,1]] before this
# module was written.
A1_SV = (1.9318516525781364, 1.0, 0.5176380902050415)


def test_mat_mul_identity_and_inverse():
    a1, a2, _ = rauzy_alphabet()
    ident = Matrix3.identity()
    assert mat_mul(a1, ident) == a1
    assert mat_mul(a1, a1.inverse()) == ident
    assert mat_mul(a1, a2) == Matrix3.from_rows([[2, 1, 2], [1, 1, 1], [0, 0, 1]])


def test_exterior_square_trivial_cases():
    ident = Matrix3.identity()
    assert exterior_square(ident) == ident
    d = Matrix3.diagonal(2, 3, 5)
    assert exterior_square(d) == Matrix3.diagonal(6, 10, 15)


@given(st.lists(st.integers(min_value=-4, max_value=4), min_size=18, max_size=18))
@settings(max_examples=100, deadline=None)
def test_exterior_square_functorial_exact(vals):
    a = Matrix3.from_rows([vals[0:3], vals[3:6], vals[6:9]])
    b = Matrix3.from_rows([vals[9:12], vals[12:15], vals[15:18]])
    assert exterior_square(mat_mul(a, b)) == mat_mul(exterior_square(a), exterior_square(b))


def test_singular_values_identity_and_diagonal():
    sv = singular_values(Matrix3.identity())
    assert (sv.a1, sv.a2, sv.a3) == (1.0, 1.0, 1.0)
    sv = singular_values(Matrix3.diagonal(4, 1, F(1, 4)))
    assert sv.a1 == pytest.approx(4.0, rel=1e-14)
    assert sv.a2 == pytest.approx(1.0, rel=1e-14)
    assert sv.a3 == pytest.approx(0.25, rel=1e-14)


def test_singular_values_rauzy_frozen():
    a1 = rauzy_alphabet()[0]
    sv = singular_values(a1)
    for got, want in zip((sv.a1, sv.a2, sv.a3), A1_SV):
        assert got == pytest.approx(want, rel=1e-12)


def test_singular_values_rejects_singular():
    with pytest.raises(SingularInput):
        singular_values(Matrix3.from_rows([[1, 2, 3], [2, 4, 6], [0, 0, 1]]))


def test_precision_loss_warning():
    m = Matrix3.diagonal(10**7, 1, F(1, 10**7))
    with pytest.warns(PrecisionLoss):
        singular_values(m)


def _random_positive_unimodular(rng, max_len=4):
    """Random products of the Rauzy generators; unimodular, mostly positive."""
    a = Matrix3.identity()
    alphabet = rauzy_alphabet()
    for idx in rng.integers(0, 3, size=rng.integers(2, max_len + 1)):
        a = mat_mul(a, alphabet[idx])
    return a


def test_unimodular_product_of_singular_values():
    rng = np.random.default_rng(0)
    for _ in range(200):
        a = _random_positive_unimodular(rng, max_len=6)
        sv = singular_values(a)
        assert sv.a1 * sv.a2 * sv.a3 == pytest.approx(1.0, rel=1e-9)


def test_singular_values_against_lapack():
    # cross-check the Jacobi/Gram route against LAPACK's SVD
    rng = np.random.default_rng(1)
    for _ in range(100):
        a = _random_positive_unimodular(rng, max_len=8)
        sv = singular_values(a)
        ref = np.linalg.svd(a.float_view, compute_uv=False)
        assert sv.a1 == pytest.approx(ref[0], rel=1e-10)
        assert sv.a2 == pytest.approx(ref[1], rel=1e-9)
        assert sv.a3 == pytest.approx(ref[2], rel=1e-9)


def test_svf_trivial_branches():
    ident = Matrix3.identity()
    for s in (0.0, 0.7, 1.0, 1.5, 2.0, 3.0):
        assert svf(ident, s) == 1.0
    d = Matrix3.diagonal(4, 1, F(1, 4))
    assert svf(d, 1.0) == pytest.approx(0.25, rel=1e-12)
    assert svf(d, 1.5) == pytest.approx(1.0 / 16.0, rel=1e-12)
    assert svf(d, 2.0) == pytest.approx(1.0 / 64.0, rel=1e-12)


def test_svf_monotone_and_continuous_at_joints():
    rng = np.random.default_rng(2)
    grid = np.linspace(0.0, 2.5, 11)
    for _ in range(50):
        a = _random_positive_unimodular(rng)
        vals = [svf(a, s) for s in grid]
        assert all(x >= y - 1e-15 for x, y in zip(vals, vals[1:]))
        for joint in (1.0, 2.0):
            for eps in (1e-3, 1e-6):
                gap = abs(svf(a, joint - eps) - svf(a, joint + eps))
                assert gap <= 10 * eps * max(svf(a, joint - eps), 1e-300)


def test_svf_cross_oracle():
    rng = np.random.default_rng(3)
    for _ in range(300):
        a = _random_positive_unimodular(rng, max_len=6)
        for s in (0.0, 0.3, 1.0, 1.5, 2.0):
            assert svf_via_norms(a, s) == pytest.approx(svf(a, s), rel=1e-9)


def test_svf_via_norms_domain():
    with pytest.raises(DomainError):
        svf_via_norms(Matrix3.identity(), 2.5)
    d = Matrix3.diagonal(4, 1, F(1, 4))
    assert svf_via_norms(d, 1.0) == pytest.approx(0.25, rel=1e-12)
    assert svf_via_norms(Matrix3.identity(), 1.0) == 1.0


def test_operator_norm_and_frobenius_bracket():
    assert operator_norm(Matrix3.identity()) == pytest.approx(1.0, rel=1e-14)
    assert operator_norm(Matrix3.diagonal(4, 1, F(1, 4))) == pytest.approx(4.0, rel=1e-14)
    rng = np.random.default_rng(4)
    for _ in range(100):
        a = _random_positive_unimodular(rng)
        lo2, hi2 = frobenius_bracket(a)
        n = operator_norm(a)
        assert float(lo2) * (1 - 1e-12) <= n * n <= float(hi2) * (1 + 1e-12)


def test_exterior_square_norm_is_a1_a2():
    rng = np.random.default_rng(5)
    for _ in range(100):
        a = _random_positive_unimodular(rng)
        sv = singular_values(a)
        assert operator_norm(exterior_square(a)) == pytest.approx(sv.a1 * sv.a2, rel=1e-9)


def test_sym3_eigenvalues_matches_lapack():
    rng = np.random.default_rng(6)
    for _ in range(200):
        m = rng.normal(size=(3, 3))
        s = m @ m.T
        mine = sym3_eigenvalues(s)
        ref = np.linalg.eigvalsh(s)[::-1]
        assert np.allclose(mine, ref, rtol=1e-9, atol=1e-11)


def test_opnorm_batch_matches_scalar():
    rng = np.random.default_rng(7)
    mats = [_random_positive_unimodular(rng) for _ in range(64)]
    batch = opnorm_batch(np.stack([m.float_view for m in mats]))
    for m, b in zip(mats, batch):
        assert b == pytest.approx(operator_norm(m), rel=1e-10)


def test_json_roundtrip_strings():
    a = Matrix3.from_rows([["1/3", "2", "0"], [1, F(5, 7), 3], [0, 0, 1]])
    s = a.to_strings()
    assert s[0][0] == "1/3" and s[1][1] == "5/7"
    assert Matrix3.from_rows(s) == a
