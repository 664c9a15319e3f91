import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from schattenlab.errors import (
    InvalidInputError,
    ParseError,
    SeparationError,
    ShapeMismatchError,
    UnsupportedIndexError,
)
from schattenlab.schur import (
    FunctionTag,
    MultiplierEstimate,
    OptimizerConfig,
    block_diagonal_bound,
    divided_difference_matrix,
    homogeneity_check,
    inflate,
    mp_lower_bound,
    psharp_upper_bound,
    rank_one_value,
    schur_product,
    toeplitz_m1_upper,
    verify_inflation_identity,
)
from schattenlab.spectral import conjugate_index, lp_sequence_norm, schatten_norm

FAST = OptimizerConfig(restarts=8)


def unit(rng, n):
    z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return z / np.linalg.norm(z)


# -- Schur products and divided differences ---------------------------------


def test_schur_product_examples():
    A = np.array([[1, 2], [3, 4]])
    assert np.array_equal(schur_product(A, np.ones((2, 2))), A)
    assert np.array_equal(schur_product(A, np.zeros((2, 2))), np.zeros((2, 2)))
    assert np.array_equal(schur_product(A, [[5, 6], [7, 8]]), [[5, 12], [21, 32]])


def test_schur_product_shape_mismatch():
    with pytest.raises(ShapeMismatchError):
        schur_product(np.ones((2, 2)), np.ones((2, 3)))


def test_divided_difference_of_identity_is_all_ones():
    D = divided_difference_matrix(lambda t: t, [0.5, 1.5, 7.0], [-1.0, 2.0])
    assert np.allclose(D.entries, 1.0)


def test_divided_difference_of_square():
    D = divided_difference_matrix(lambda t: t**2, [0.0], [1.0])
    assert np.allclose(D.entries, [[1.0]])


def test_divided_difference_of_periodic_function():
    eps, n = 0.3, 6
    f = lambda t: np.cos(2 * np.pi * t) + 0.5 * np.sin(4 * np.pi * t)
    lam, mu = np.arange(n) + eps, np.arange(n, dtype=float)
    D = divided_difference_matrix(f, lam, mu)
    j, k = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    expected = (f(eps) - f(0.0)) / (eps + j - k)
    assert np.max(np.abs(D.entries - expected)) <= 1e-12


def test_divided_difference_rejects_collisions():
    with pytest.raises(SeparationError):
        divided_difference_matrix(np.sin, [0.0, 1.0], [1.0, 2.0])
    with pytest.raises(SeparationError):
        divided_difference_matrix(np.sin, [0.0], [1e-3], delta=1e-2)


def test_divided_difference_tag():
    D = divided_difference_matrix(np.sin, [0.0], [1.0], tag=FunctionTag("sin", 1.0))
    assert D.tag.lipschitz == 1.0
    assert np.all(np.abs(D.entries) <= D.tag.lipschitz)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_lipschitz_bound_on_entries(seed):
    rng = np.random.default_rng(seed)
    lam = rng.uniform(-5, 5, 6)
    mu = lam + rng.uniform(0.01, 1, 6) * rng.choice([-1, 1], 6)
    gap = np.min(np.abs(lam[:, None] - mu[None, :]))
    if gap < 1e-9:
        return
    D = divided_difference_matrix(np.sin, lam, mu, delta=gap / 2)
    assert np.all(np.abs(D.entries) <= 1 + 1e-12)


# -- m_p lower bounds ----------------------------------------------------------


def test_single_entry():
    est = mp_lower_bound(np.array([[-7.0]]), 0.5)
    assert est.value == pytest.approx(7.0)
    assert abs(est.xi[0]) == pytest.approx(1.0)


@pytest.mark.parametrize("n", [1, 4, 8])
@pytest.mark.parametrize("p", [0.3, 0.5, 1.0])
def test_all_ones_gives_one(n, p):
    est = mp_lower_bound(np.ones((n, n)), p, FAST)
    assert abs(est.value - 1) <= 1e-6


def _simplex_grid(n, steps):
    for c in itertools.product(range(steps + 1), repeat=n - 1):
        if sum(c) <= steps:
            yield np.array(list(c) + [steps - sum(c)], dtype=float) / steps


@pytest.mark.parametrize("p", [0.5, 2 / 3])
def test_diagonal_matches_brute_force_simplex_search(p):
    lam = np.array([1.0, -2.0, 0.5])
    best = 0.0
    for a in _simplex_grid(3, 60):
        # for a diagonal matrix only the common support of a and b matters,
        # and b = a is optimal by the AM-GM step in the rank-one reduction
        best = max(best, rank_one_value(np.diag(lam), np.sqrt(a), np.sqrt(a), p))
    est = mp_lower_bound(np.diag(lam), p, FAST)
    closed = lp_sequence_norm(lam, conjugate_index(p))
    assert est.value == pytest.approx(closed, rel=1e-6)
    assert best <= closed * (1 + 1e-12)
    assert best >= closed * (1 - 1e-3)


def test_diagonal_at_p_one_is_max_modulus():
    est = mp_lower_bound(np.diag([1.0, -3.0, 2.0]), 1.0, FAST)
    assert est.value == pytest.approx(3.0, rel=1e-6)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([0.5, 0.75, 1.0]))
def test_witness_is_feasible_and_below_upper_bound(seed, p):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((4, 5)) + 1j * rng.standard_normal((4, 5))
    est = mp_lower_bound(A, p, OptimizerConfig(restarts=4, seed=seed))
    assert abs(np.linalg.norm(est.xi) - 1) <= 1e-12
    assert abs(np.linalg.norm(est.eta) - 1) <= 1e-12
    assert est.recompute(A) == pytest.approx(est.value, rel=1e-10)
    assert est.value <= psharp_upper_bound(A, p) * (1 + 1e-10)
    assert len(est.trace) == est.restarts


def test_estimate_is_deterministic_in_seed():
    A = np.random.default_rng(3).standard_normal((5, 5))
    a = mp_lower_bound(A, 0.5, OptimizerConfig(restarts=6, seed=11))
    b = mp_lower_bound(A, 0.5, OptimizerConfig(restarts=6, seed=11))
    assert a.value == b.value and a.trace == b.trace


def test_warm_start_cannot_lower_the_estimate():
    A = np.random.default_rng(4).standard_normal((6, 6))
    cold = mp_lower_bound(A, 0.5, OptimizerConfig(restarts=2))
    warm = mp_lower_bound(A, 0.5, OptimizerConfig(restarts=2), warm_starts=[(cold.xi, cold.eta)])
    assert warm.value >= cold.value * (1 - 1e-12)


def test_rejects_large_p_and_empty():
    with pytest.raises(UnsupportedIndexError):
        mp_lower_bound(np.eye(2), 1.5)
    with pytest.raises(InvalidInputError):
        mp_lower_bound(np.zeros((0, 0)), 0.5)


def test_estimate_text_round_trip():
    A = np.random.default_rng(5).standard_normal((3, 3))
    est = mp_lower_bound(A, 0.5, FAST)
    back = MultiplierEstimate.from_text(est.to_text())
    assert back.value == est.value
    assert np.array_equal(back.xi, est.xi) and np.array_equal(back.eta, est.eta)
    assert back.trace == est.trace and back.iterations == est.iterations
    assert back.recompute(A) == pytest.approx(est.value, rel=1e-12)


def test_estimate_text_parse_errors():
    with pytest.raises(ParseError):
        MultiplierEstimate.from_text("value = 1\nnot a pair\n")
    with pytest.raises(ParseError):
        MultiplierEstimate.from_text("value = 1\n")


def test_psharp_upper_bound_at_p_one_is_operator_norm():
    A = np.diag([3.0, 1.0])
    assert psharp_upper_bound(A, 1.0) == pytest.approx(3.0)
    assert psharp_upper_bound(A, 0.5) == pytest.approx(4.0)


# -- Toeplitz and block bounds -----------------------------------------------------


def test_toeplitz_constant_symbol():
    b = toeplitz_m1_upper({0: 1.0})
    assert b.value == pytest.approx(1.0, abs=1e-14)
    assert b.converged


def test_toeplitz_poisson_kernel():
    r = 0.6
    coeffs = {n: r ** abs(n) for n in range(-80, 81)}
    b = toeplitz_m1_upper(coeffs)
    # the Poisson kernel is nonnegative with mean one
    assert b.value == pytest.approx(1.0, abs=1e-12)


def test_toeplitz_reciprocal_coefficients_are_finite():
    eps = 0.5
    coeffs = {n: 1 / (eps + n) for n in range(-512, 513)}
    b = toeplitz_m1_upper(coeffs)
    assert math.isfinite(b.value) and b.value > 0
    assert b.converged


def test_toeplitz_bound_dominates_trace_duality_value():
    # ||T||_{m_1} >= ||T o (xi (x) eta)||_1 for any unit pair
    eps, n = 0.5, 24
    coeffs = {k: 1 / (eps + k) for k in range(-n, n + 1)}
    T = np.array([[coeffs[j - k] for k in range(n)] for j in range(n)])
    est = mp_lower_bound(T, 1.0, OptimizerConfig(restarts=4))
    assert est.value <= toeplitz_m1_upper(coeffs).value * (1 + 1e-9)


def test_toeplitz_empty():
    with pytest.raises(InvalidInputError):
        toeplitz_m1_upper({})


def test_block_diagonal_examples():
    assert block_diagonal_bound([2.5], 0.5) == 2.5
    assert block_diagonal_bound([1.0, 1.0], 1.0) == 1.0
    assert block_diagonal_bound([1.0, 1.0], 0.5) == pytest.approx(2.0)
    assert block_diagonal_bound([3.0, 4.0], 2 / 3) == pytest.approx(5.0)


def test_block_diagonal_matches_estimates():
    blocks = [np.diag([1.0, 2.0]), np.diag([3.0])]
    A = np.zeros((3, 3))
    A[:2, :2] = blocks[0]
    A[2:, 2:] = blocks[1]
    ests = [mp_lower_bound(B, 0.5, FAST).value for B in blocks]
    assert mp_lower_bound(A, 0.5, FAST).value == pytest.approx(block_diagonal_bound(ests, 0.5), rel=1e-6)


# -- inflation ----------------------------------------------------------------------


def test_inflate_examples():
    A = np.array([[2.0 + 1j]])
    assert np.array_equal(inflate(A, 1), A)
    assert np.array_equal(inflate(A, 2), np.full((2, 2), 2.0 + 1j))


def test_inflate_index_pattern():
    A = np.random.default_rng(0).standard_normal((3, 3))
    N = 2
    big = inflate(A, N)
    for j, l1, k, l2 in itertools.product(range(3), range(N), range(3), range(N)):
        assert big[j * N + l1, k * N + l2] == A[j, k]


def test_inflation_identity_trivial():
    A = np.random.default_rng(1).standard_normal((3, 3))
    e = np.zeros(3)
    e[0] = 1
    w = verify_inflation_identity(A, e, e)
    assert w.residual == 0.0


def test_inflation_identity_with_vanishing_group():
    rng = np.random.default_rng(2)
    A = rng.standard_normal((3, 3))
    u = unit(rng, 6)
    u[2:4] = 0
    u /= np.linalg.norm(u)
    w = verify_inflation_identity(A, u, unit(rng, 6))
    assert np.all(w.Qu[:, 1] == 0)
    assert w.residual <= 1e-12 * (1 + np.linalg.norm(A, 2))
    assert w.isometry_defect <= 1e-12


def test_inflation_identity_random():
    rng = np.random.default_rng(3)
    for _ in range(100):
        A = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        w = verify_inflation_identity(A, unit(rng, 9), unit(rng, 9))
        assert w.residual <= 1e-12 * (1 + np.linalg.norm(A, 2))
        assert w.isometry_defect <= 1e-12


def test_inflation_rejects_non_unit():
    with pytest.raises(InvalidInputError):
        verify_inflation_identity(np.eye(2), np.ones(4), np.ones(4) / 2)


# -- homogeneity ----------------------------------------------------------------------


@pytest.mark.parametrize("scale", [0.5, 3.0])
def test_homogeneity(scale):
    lam = np.array([0.1, 1.3, 2.2])
    mu = np.array([0.6, 1.9, 2.9])
    res = homogeneity_check(np.sin, lam, mu, scale, 0.5, OptimizerConfig(restarts=6))
    assert res.proportionality_error <= 1e-12
    assert res.discrepancy <= 1e-6
