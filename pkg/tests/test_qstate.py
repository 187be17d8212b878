import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from wva_fisher.errors import InvalidInput, TruncationOverflow
from wva_fisher.qstate import (
    coherent_overlap,
    coherent_wavefunction,
    fock_expand,
    integrate_converged,
    integrate_scalar,
    poisson_cutoff,
    poisson_mass,
    poisson_pmf,
)

amplitudes = st.builds(
    lambda r, t: r * cmath.exp(1j * t),
    st.floats(0.0, 5.0),
    st.floats(0.0, 2 * math.pi),
)


def wavefunction_overlap(a1, a2, phi=0.0):
    lo = -math.sqrt(2) * max(abs(a1), abs(a2)) - 12
    hi = -lo

    def part(f):
        return integrate_scalar(lambda x: f(np.conj(coherent_wavefunction(a1, phi, x)) * coherent_wavefunction(a2, phi, x)), lo, hi, rtol=1e-12, atol=1e-14)

    return complex(part(np.real), part(np.imag))


def test_overlap_with_itself_is_one():
    for a in (0, 1.3, 2 - 0.7j, 4j):
        assert coherent_overlap(a, a) == pytest.approx(1.0, abs=1e-15)


def test_overlap_with_vacuum():
    a = 1.7 + 0.4j
    assert coherent_overlap(0, a) == pytest.approx(math.exp(-abs(a) ** 2 / 2), rel=1e-15)


def test_overlap_of_phase_shifted_branches_against_fock_sum():
    a1, a2 = 2 * cmath.exp(-0.1j), 2 * cmath.exp(0.1j)
    expected = cmath.exp(-4 * (1 - cmath.exp(0.2j)))
    series = np.vdot(oracles.fock_coeffs(a1, 80), oracles.fock_coeffs(a2, 80))
    assert abs(coherent_overlap(a1, a2) - expected) < 1e-14
    assert abs(coherent_overlap(a1, a2) - series) < 1e-10


@given(amplitudes, amplitudes)
def test_overlap_matches_fock_series(a1, a2):
    n = oracles.cutoff(25.0)
    series = complex(np.vdot(oracles.fock_coeffs(a1, n), oracles.fock_coeffs(a2, n)))
    assert abs(coherent_overlap(a1, a2) - series) <= 1e-10
    assert abs(coherent_overlap(a1, a2)) <= 1.0 + 1e-15


def test_fock_expand_vacuum():
    v = fock_expand(0.0)
    assert v.coeffs[0] == 1.0
    assert np.all(v.coeffs[1:] == 0)


def test_fock_expand_normalization_alpha_2():
    v = fock_expand(2.0, tol=1e-12)
    assert 1 - 1e-12 <= v.norm_squared <= 1 + 1e-12
    assert v.tail_bound <= 1e-12


def test_fock_expand_matches_poisson_mass():
    v = fock_expand(2.0)
    ref = oracles.poisson(4.0, v.n_max)
    np.testing.assert_allclose(v.probabilities, ref, rtol=1e-13, atol=0)


@given(st.floats(0.0, 1e4))
def test_fock_normalization_up_to_large_nbar(nbar):
    v = fock_expand(math.sqrt(nbar), tol=1e-12)
    assert abs(1 - math.fsum(v.probabilities)) <= 1e-12 + 1e-13
    assert v.tail_bound <= 1e-12


@given(amplitudes, st.floats(-math.pi, math.pi))
def test_phase_shift_identity(a, lam):
    base = fock_expand(a)
    shifted = fock_expand(a * cmath.exp(1j * lam), n_max=base.n_max)
    n = np.arange(base.n_max + 1)
    np.testing.assert_allclose(shifted.coeffs, base.coeffs * np.exp(1j * lam * n), rtol=0, atol=1e-12)


def test_truncation_cap():
    with pytest.raises(TruncationOverflow):
        fock_expand(100.0, cap=1000)
    with pytest.raises(InvalidInput):
        poisson_cutoff(4.0, tol=0.0)


def test_cutoff_is_smallest_certified():
    n, tail = poisson_cutoff(4.0, 1e-12)
    pmf = oracles.poisson(4.0, 200)
    assert pmf[n + 1 :].sum() < 1e-12
    assert pmf[n:].sum() >= 1e-12
    assert tail == pytest.approx(pmf[n + 1 :].sum(), rel=1e-6)


@pytest.mark.parametrize("mu", [0.5, 4.0, 37.2, 1e3, 2.5e5])
def test_poisson_mass_against_lgamma(mu):
    for k in (0, 1, int(mu), int(mu) + 7, int(2 * mu) + 3):
        ref = math.exp(-mu + k * math.log(mu) - math.lgamma(k + 1))
        assert poisson_mass(k, mu) == pytest.approx(ref, rel=1e-9 if mu > 1e4 else 1e-12)


def test_poisson_pmf_handles_beyond_factorial_overflow():
    pmf = poisson_pmf(1e4, 11000)
    assert np.all(np.isfinite(pmf))
    assert math.fsum(pmf) == pytest.approx(1.0, abs=1e-12)


def test_wavefunction_vacuum():
    x = np.linspace(-5, 5, 11)
    for phi in (0.0, 1.1, 3.0):
        np.testing.assert_allclose(coherent_wavefunction(0.0, phi, x), math.pi**-0.25 * np.exp(-x * x / 2), rtol=1e-15)


def test_wavefunction_normalization():
    norm = integrate_scalar(lambda x: np.abs(coherent_wavefunction(2.0, 0.0, x)) ** 2, -15, 15)
    assert abs(norm - 1) <= 1e-8


def test_wavefunction_overlap_of_branches():
    a1, a2 = 2 * cmath.exp(-0.1j), 2 * cmath.exp(0.1j)
    assert abs(wavefunction_overlap(a1, a2) - coherent_overlap(a1, a2)) <= 1e-8


@given(amplitudes, amplitudes, st.floats(0, 2 * math.pi))
def test_wavefunction_overlaps_match_closed_form(a1, a2, phi):
    assert abs(wavefunction_overlap(a1, a2, phi) - coherent_overlap(a1, a2)) <= 1e-8


def test_wavefunction_matches_independent_formula():
    x = np.linspace(-6, 6, 25)
    for a in (2.0, 1 + 1j, -0.3j):
        np.testing.assert_allclose(coherent_wavefunction(a, 0.7, x), oracles.wavefunction(a, 0.7, x), rtol=1e-12)


def test_integrate_converged_batches_and_refines_narrow_features():
    widths = np.array([1.0, 0.05])

    def f(x, active):
        w = widths[active][:, None]
        return np.exp(-((x[None, :] - 0.3) ** 2) / (2 * w * w)) / (w * math.sqrt(2 * math.pi))

    out = integrate_converged(f, -10, 10, size=2, rtol=1e-10)
    np.testing.assert_allclose(out, [1.0, 1.0], rtol=1e-9)
