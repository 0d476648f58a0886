import math
from fractions import Fraction as F

import numpy as np
import pytest

from projdim.errors import BadVector, DegenerateSpectrum, DomainError
from projdim.ergodic import (
    LyapunovStats,
    dyadic_entropy,
    empirical_delta,
    furstenberg_plane_sample,
    lyapunov_dimension,
    lyapunov_exponents,
    shannon_entropy,
)
from projdim.linalg import Matrix3, mat_mul
from projdim.pressure import rauzy_gamma_system
from projdim.semigroup import SystemSpec
from projdim.systems import (
    gamma_letter,
    positivizing_conjugator,
    rauzy_alphabet,
    rauzy_system,
)

# Frozen regression values from a pre-build prototype (independent script,
# QR cadences 1-8 all agreeing to 5 digits):
RAUZY_CHI = (0.5009, -0.2021, -0.2989)
GAMMA10_CHI = (2.0601, -0.6618, -1.3983)


def test_shannon_entropy_values():
    assert shannon_entropy([F(1)]) == 0.0
    assert shannon_entropy([F(1, 3)] * 3) == pytest.approx(math.log(3), rel=1e-14)
    assert shannon_entropy([F(1, 2), F(1, 4), F(1, 4)]) == pytest.approx(
        1.5 * math.log(2), rel=1e-14
    )


def test_shannon_entropy_rejects_bad_vectors():
    with pytest.raises(BadVector):
        shannon_entropy([])
    with pytest.raises(BadVector):
        shannon_entropy([F(1, 2), F(1, 3)])
    with pytest.raises(BadVector):
        shannon_entropy([F(3, 2), F(-1, 2)])


def test_lyapunov_singleton_diagonal_exact():
    sys = SystemSpec.uniform("d9", (Matrix3.diagonal(9, 1, F(1, 9)),))
    stats = lyapunov_exponents(sys, 1000, seed=0)
    assert stats.chi1 == pytest.approx(math.log(9), abs=1e-12)
    assert stats.chi2 == pytest.approx(0.0, abs=1e-12)
    assert stats.chi3 == pytest.approx(-math.log(9), abs=1e-12)


def test_lyapunov_rejects_tiny_runs():
    sys = rauzy_system()
    with pytest.raises(DomainError):
        lyapunov_exponents(sys, 10, seed=0)


def test_lyapunov_rauzy_structure_and_regression():
    stats = lyapunov_exponents(rauzy_system(), 20_000, seed=7)
    assert stats.chi1 - stats.chi2 > 3 * (stats.stderr1 + stats.stderr2)
    assert stats.chi2 - stats.chi3 > 3 * (stats.stderr2 + stats.stderr3)
    total_se = stats.stderr1 + stats.stderr2 + stats.stderr3
    assert abs(stats.chi1 + stats.chi2 + stats.chi3) <= 3 * max(total_se, 1e-12)
    for got, want in zip(stats.chis, RAUZY_CHI):
        assert got == pytest.approx(want, abs=0.01)


def test_lyapunov_gamma10_regression_guards_renorm_cadence():
    sys = rauzy_gamma_system(10)
    stats = lyapunov_exponents(sys, 20_000, seed=11)
    assert stats.diagnostics["renorm_cadence"] < 20
    for got, want in zip(stats.chis, GAMMA10_CHI):
        assert got == pytest.approx(want, abs=0.02)
    total_se = stats.stderr1 + stats.stderr2 + stats.stderr3
    assert abs(stats.chi1 + stats.chi2 + stats.chi3) <= 3 * max(total_se, 1e-10)


def _stats(chi1, chi2, chi3):
    return LyapunovStats(chi1, chi2, chi3, 0.0, 0.0, 0.0, steps=0)


def test_lyapunov_dimension_branches():
    stats = _stats(1.0, 0.25, -1.25)
    assert lyapunov_dimension(0.0, stats) == 0.0
    g12 = stats.chi1 - stats.chi2
    g13 = stats.chi1 - stats.chi3
    assert lyapunov_dimension(g12, stats) == pytest.approx(1.0, abs=1e-14)
    assert lyapunov_dimension(g12 + g13, stats) == 2.0
    assert lyapunov_dimension(10.0, stats) == 2.0
    lo = lyapunov_dimension(g12 * (1 - 1e-9), stats)
    hi = lyapunov_dimension(g12 * (1 + 1e-9), stats)
    assert abs(hi - lo) <= 1e-6
    grid = np.linspace(0.0, 5.0, 60)
    vals = [lyapunov_dimension(h, stats) for h in grid]
    assert all(a <= b + 1e-14 for a, b in zip(vals, vals[1:]))


def test_lyapunov_dimension_degenerate():
    with pytest.raises(DegenerateSpectrum):
        lyapunov_dimension(1.0, _stats(1.0, 1.0, -2.0))
    with pytest.raises(DomainError):
        lyapunov_dimension(-1.0, _stats(1.0, 0.0, -1.0))


def test_furstenberg_singleton_converges_to_contracting_axis():
    sys = SystemSpec.uniform("d9", (Matrix3.diagonal(9, 1, F(1, 9)),))
    n = furstenberg_plane_sample(sys, 200, seed=0)
    assert np.allclose(n, [0, 0, 1], atol=1e-10)
    assert abs(np.linalg.norm(n) - 1.0) <= 1e-12


def test_furstenberg_batches_agree():
    sys = rauzy_gamma_system(2)
    a = np.stack([furstenberg_plane_sample(sys, 200, seed=(0, w)) for w in range(200)])
    b = np.stack([furstenberg_plane_sample(sys, 200, seed=(1, w)) for w in range(200)])
    se = np.sqrt(a.var(axis=0, ddof=1) / len(a) + b.var(axis=0, ddof=1) / len(b))
    assert np.all(np.abs(a.mean(axis=0) - b.mean(axis=0)) <= 3.5 * se + 1e-12)


def test_dyadic_entropy_basics():
    assert dyadic_entropy(np.full(100, 0.375), 8) == 0.0
    cells = (np.arange(256) + 0.5) / 256.0
    assert dyadic_entropy(np.repeat(cells, 4), 8) == pytest.approx(8 * math.log(2), rel=1e-12)
    rng = np.random.default_rng(0)
    u = rng.random(10**6)
    assert dyadic_entropy(u, 8) == pytest.approx(8 * math.log(2), abs=0.01)


def test_dyadic_entropy_scaling_commutes():
    rng = np.random.default_rng(1)
    x = rng.random(5000) * 3.0
    for k in (1, 3):
        assert dyadic_entropy(x * 2.0**k, 8) == dyadic_entropy(x, 8 + k)
        assert dyadic_entropy(x * 2.0**-k, 8 + k) == dyadic_entropy(x, 8)


from hypothesis import given, settings
from hypothesis import strategies as st


@given(
    st.lists(st.floats(min_value=-8.0, max_value=8.0, allow_nan=False),
             min_size=1, max_size=200),
    st.integers(min_value=-3, max_value=3),
)
@settings(max_examples=60, deadline=None)
def test_dyadic_entropy_scaling_property(xs, k):
    x = np.array(xs)
    assert dyadic_entropy(x * 2.0**k, 6) == dyadic_entropy(x, 6 + k)


def test_dyadic_entropy_bounded_by_occupancy():
    rng = np.random.default_rng(2)
    x = rng.random(400)
    h = dyadic_entropy(x, 6)
    occupied = len(np.unique(np.floor(x * 64).astype(int)))
    assert h <= math.log(occupied) + 1e-12


def test_empirical_delta_singleton_point_mass():
    sys = SystemSpec.uniform("g", (gamma_letter(0, 1, 2),),
                             conjugator=positivizing_conjugator())
    est = empirical_delta(sys, planes=4, samples=5000, n=10, seed=0, lyap_steps=1000)
    assert est.value == pytest.approx(0.0, abs=1e-6)


def _mixed_word_letters():
    """Distinct conjugated three-letter words that are entrywise positive."""
    a = rauzy_alphabet()
    conj = positivizing_conjugator()
    minv = conj.inverse()
    out = []
    for i in range(3):
        for j in range(3):
            for k in range(3):
                w = mat_mul(mat_mul(a[i], a[j]), a[k])
                c = mat_mul(mat_mul(minv, w), conj)
                if all(x > 0 for row in c.entries for x in row):
                    out.append(w)
    return out


def test_empirical_delta_saturates_for_high_entropy():
    letters = _mixed_word_letters()
    assert len(letters) == 12
    sys = SystemSpec.uniform("mixed3", tuple(letters),
                             conjugator=positivizing_conjugator())
    est = empirical_delta(sys, planes=8, samples=400_000, n=12, seed=0,
                          lyap_steps=4000)
    assert est.diagnostics["target"] == 1.0
    assert abs(est.value - 1.0) <= 0.1
