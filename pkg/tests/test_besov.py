import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from schattenlab.besov import (
    LittlewoodPaleyBank,
    besov_seminorm_littlewood_paley,
    besov_seminorm_wavelet,
    finite_difference_besov,
    lp_bump,
    lp_theta,
    reconstruct_with_correction,
)
from schattenlab.errors import AliasingError, InvalidInputError
from schattenlab.wavelets import WaveletCoefficients, daubechies_system, wavelet_coefficients

DB10 = daubechies_system(10)


def bump(c=0.0, w=1.0):
    return lambda t: np.exp(-(((t - c) / w) ** 2))


# -- wavelet path ----------------------------------------------------------------------


@pytest.mark.parametrize("j0,k0", [(0, 0), (-2, 3), (3, -5)])
@pytest.mark.parametrize("s,p,q", [(1, 1, 1), (2, 0.5, 2), (0.5, math.inf, 1), (1, 2, math.inf)])
def test_single_basis_element(j0, k0, s, p, q):
    coeffs = WaveletCoefficients.from_mapping(DB10, {(j0, k0): 1.0}, j_range=(-4, 4))
    inv_p = 0 if math.isinf(p) else 1 / p
    report = besov_seminorm_wavelet(coeffs, s, p, q)
    assert report.value == 2.0 ** (j0 * (s + 0.5 - inv_p))
    assert report.j_window == (-4, 4)


def test_zero_function():
    coeffs = wavelet_coefficients(lambda t: 0 * t, DB10, (-2, 2), (-1, 1))
    report = besov_seminorm_wavelet(coeffs, 1, 1, 1)
    assert report.value == 0.0 and report.tail_share == 0.0


@settings(max_examples=30, deadline=None)
@given(
    st.just(0.0) | st.floats(1e-6, 100).flatmap(lambda x: st.sampled_from([x, -x])),
    st.sampled_from([(1, 1, 1), (2, math.inf, 2), (1, 0.5, 0.5)]),
)
def test_absolute_homogeneity(lam, spq):
    rng = np.random.default_rng(0)
    entries = {(j, k): complex(*rng.standard_normal(2)) for j in range(-1, 2) for k in range(4)}
    base = WaveletCoefficients.from_mapping(DB10, entries)
    scaled = WaveletCoefficients.from_mapping(DB10, {key: lam * v for key, v in entries.items()})
    a = besov_seminorm_wavelet(base, *spq).value
    b = besov_seminorm_wavelet(scaled, *spq).value
    assert b == pytest.approx(abs(lam) * a, rel=1e-12, abs=0)


def test_bump_is_stable_under_truncation():
    f = bump()
    narrow = wavelet_coefficients(f, DB10, (-6, 6), (-8, 8))
    wide = wavelet_coefficients(f, DB10, (-8, 8), (-8, 8))
    for s, p, q in [(1, 1, 1), (2, math.inf, math.inf), (1, 2, 2)]:
        a = besov_seminorm_wavelet(narrow, s, p, q)
        b = besov_seminorm_wavelet(wide, s, p, q)
        assert math.isfinite(a.value)
        assert abs(a.value / b.value - 1) <= 0.05
        assert b.tail_share < 0.05


def test_low_regularity_warns():
    coeffs = WaveletCoefficients.from_mapping(daubechies_system(2), {(0, 0): 1.0})
    with pytest.warns(RuntimeWarning):
        besov_seminorm_wavelet(coeffs, 1, 1, 1)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        besov_seminorm_wavelet(WaveletCoefficients.from_mapping(DB10, {(0, 0): 1.0}), 1, 1, 1)


def test_bad_exponents():
    coeffs = WaveletCoefficients.from_mapping(DB10, {(0, 0): 1.0})
    with pytest.raises(InvalidInputError):
        besov_seminorm_wavelet(coeffs, 1, 0, 1)


# -- Littlewood-Paley path ---------------------------------------------------------------------


def test_bump_profile():
    xi = np.linspace(-3, 3, 6001)
    phi = lp_bump(xi)
    assert np.all(phi >= 0) and np.all(phi <= 1)
    assert np.all(phi[np.abs(xi) <= 6 / 7] == 0) and np.all(phi[np.abs(xi) >= 2] == 0)
    mid = (np.abs(xi) >= 1) & (np.abs(xi) <= 12 / 7)
    assert np.all(phi[mid] == 1)
    assert np.array_equal(lp_theta(xi), lp_theta(-xi))


def test_partition_of_unity():
    bank = LittlewoodPaleyBank(-5, 9, 16, 1.0)
    lo, hi = bank.resolved_band()
    xi = np.geomspace(lo, hi, 5000)
    assert np.max(np.abs(bank.partition_sum(xi) - 1)) <= 1e-8
    assert np.max(np.abs(bank.partition_sum(-xi) - 1)) <= 1e-8


def test_bank_for_grid():
    bank = LittlewoodPaleyBank.for_grid(2**14, 1 / 256)
    assert bank.n_max == 8 and bank.n_min == -4
    with pytest.raises(InvalidInputError):
        LittlewoodPaleyBank.for_grid(2**14, 1 / 256, n_max=11)


def test_lp_zero_function():
    bank = LittlewoodPaleyBank.for_grid(1024, 1 / 16)
    assert besov_seminorm_littlewood_paley(np.zeros(1024), 1, 1, 1, bank).value == 0.0


@pytest.mark.parametrize("j,s,p", [(2, 1.0, 1.0), (3, 2.0, math.inf), (1, 0.5, 2.0)])
def test_single_annulus(j, s, p):
    # f^ = g, a smooth bump strictly inside 2^j < |xi| < 2^j 12/7, so only Delta_j is nonzero
    L, dt = 64.0, 1 / 128
    t = np.arange(-L / 2, L / 2, dt)
    lo, hi = 2.0**j * 1.02, 2.0**j * 12 / 7 * 0.98
    xi = np.linspace(lo, hi, 4001)
    u = (xi - lo) / (hi - lo)
    g = np.exp(-1 / np.maximum(u * (1 - u), 1e-300)) * (u > 0) * (u < 1)
    # real f: f(t) = (1/pi) int_lo^hi g(xi) cos(xi t) dxi, trapezoid in xi (spectrally accurate)
    f = np.trapezoid(g[None, :] * np.cos(np.outer(t, xi)), xi, axis=1) / np.pi
    direct = float(np.max(np.abs(f))) if math.isinf(p) else float(np.sum(np.abs(f) ** p) * dt) ** (1 / p)
    bank = LittlewoodPaleyBank.for_grid(t.size, dt, n_min=-3, n_max=6)
    report = besov_seminorm_littlewood_paley(f, s, p, p, bank)
    assert report.value == pytest.approx(2.0 ** (j * s) * direct, rel=0.02)
    others = [v for n, v in report.terms.items() if n != j]
    assert max(others) <= 1e-3 * report.terms[j]


def test_aliasing_is_refused():
    t = np.arange(0, 8, 1 / 8)
    bank = LittlewoodPaleyBank.for_grid(t.size, 1 / 8)
    rng = np.random.default_rng(0)
    with pytest.raises(AliasingError):
        besov_seminorm_littlewood_paley(rng.standard_normal(t.size), 1, 1, 1, bank)


def test_cross_path_band(band):
    L, dt = 64.0, 1 / 256
    t = np.arange(-L / 2, L / 2, dt)
    bank = LittlewoodPaleyBank.for_grid(t.size, dt, n_min=-4, n_max=8)
    ratios = []
    for c, w in [(0.0, 1.0), (0.3, 0.5), (0.0, 2.0), (-0.7, 1.5)]:
        f = bump(c, w)
        coeffs = wavelet_coefficients(f, DB10, (-6, 6), (-8, 8))
        for s in (1, 2):
            for p in (1, math.inf):
                a = besov_seminorm_wavelet(coeffs, s, p, p).value
                b = besov_seminorm_littlewood_paley(f(t), s, p, p, bank).value
                ratios.append(a / b)
    C = max(max(ratios), 1 / min(ratios))
    assert C <= 50
    band("besov_cross_path", {"ratio_min": min(ratios), "ratio_max": max(ratios)})


# -- reconstruction -------------------------------------------------------------------------


def test_reconstruct_basis_element():
    f = DB10.psi_jk(0, -5)
    coeffs = wavelet_coefficients(f, DB10, (-2, 2), (-6, 6))
    rec = reconstruct_with_correction(coeffs, f, probe=np.linspace(-4, 4, 401))
    assert abs(rec.c) <= 1e-5 and rec.residual <= 1e-5


def test_reconstruct_linear_function():
    f = lambda t: t
    coeffs = wavelet_coefficients(f, DB10, (-3, 3), (-4, 4))
    assert max(abs(c) for _, _, c in coeffs.items()) <= 1e-9
    rec = reconstruct_with_correction(coeffs, f)
    assert abs(rec.c - 1) <= 1e-5 and rec.residual <= 1e-5


def test_reconstruct_linear_plus_oscillation():
    f = lambda t: t + 0.1 * np.sin(2 * np.pi * t)
    coeffs = wavelet_coefficients(f, DB10, (-6, 10), (-4, 4))
    rec = reconstruct_with_correction(coeffs, f, probe=np.linspace(-4, 4, 401))
    assert rec.residual <= 1e-3 and abs(rec.c - 1) <= 0.05


def test_residual_decreases_with_more_levels():
    f = lambda t: t + 0.1 * np.sin(2 * np.pi * t)
    coeffs = wavelet_coefficients(f, DB10, (-6, 10), (-4, 4))
    probe = np.linspace(-4, 4, 401)
    residuals = [reconstruct_with_correction(coeffs, f, (-2, hi), probe).residual for hi in (-1, 1, 3, 10)]
    assert all(b <= a for a, b in zip(residuals, residuals[1:]))


def test_reconstruct_needs_covered_levels():
    coeffs = WaveletCoefficients.from_mapping(DB10, {(0, 0): 1.0}, j_range=(0, 1), box=(-4, 4))
    with pytest.raises(InvalidInputError):
        reconstruct_with_correction(coeffs, lambda t: t, (-1, 1))


# -- finite differences -------------------------------------------------------------------


def test_difference_seminorm_of_zero_and_affine():
    t = np.linspace(-8, 8, 4097)
    assert finite_difference_besov(np.zeros_like(t), t[1] - t[0], 1.5, 1.0, 2).value == 0.0
    assert finite_difference_besov(3 * t - 1, t[1] - t[0], 1.5, 1.0, 2).value <= 1e-9


def test_difference_seminorm_of_a_cusp_is_stable():
    # |t|^1/2 at p = 1/2: s = 1/2 + 1/p_sharp = 3/2, second differences
    values = []
    for dt in (1 / 256, 1 / 1024):
        t = np.arange(-8, 8 + dt / 2, dt)
        f = np.sqrt(np.abs(t))
        dense = sorted({int(round(2 ** (i / 4))) for i in range(48)})
        dense = [m for m in dense if 2 * m < t.size]
        coarse = finite_difference_besov(f, dt, 1.5, 1.0, 2)
        fine = finite_difference_besov(f, dt, 1.5, 1.0, 2, h_steps=dense)
        assert math.isfinite(coarse.value)
        assert abs(fine.value / coarse.value - 1) <= 0.1
        values.append(coarse.value)
    assert abs(values[1] / values[0] - 1) <= 0.1


def test_difference_order_and_grid_checks():
    f = np.zeros(64)
    with pytest.raises(InvalidInputError):
        finite_difference_besov(f, 0.1, 2.0, 1.0, 2)
    with pytest.raises(InvalidInputError):
        finite_difference_besov(f, 0.1, 1.5, 1.0, 2, h_steps=[32])
