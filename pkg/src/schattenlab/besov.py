"""Homogeneous Besov seminorms by wavelet coefficients, by a Littlewood-Paley
FFT bank and by finite differences, plus reconstruction of a Lipschitz f
from its level projections up to a linear term.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import linprog
from scipy.special import comb

from .errors import AliasingError, InvalidInputError
from .spectral import lp_sequence_norm
from .wavelets import WaveletCoefficients, level_projection

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SeminormReport:
    """A truncated seminorm with its per-level terms.

    `tail_share` is the larger of the two edge levels' share of the total
    (in the q-th power), a cheap indicator of truncation error.
    """

    value: float
    j_window: tuple[int, int]
    tail_share: float
    terms: dict[int, float] = field(default_factory=dict)

    def __float__(self):
        return self.value

    def to_record(self) -> dict:
        return {
            "value": self.value,
            "j_window": list(self.j_window),
            "tail_share": self.tail_share,
            "terms": {str(j): t for j, t in sorted(self.terms.items())},
        }


def _combine(terms: dict[int, float], q: float, window) -> SeminormReport:
    vals = np.array([terms[j] for j in sorted(terms)])
    value = lp_sequence_norm(vals, q)
    if value == 0:
        share = 0.0
    elif math.isinf(q):
        share = max(vals[0], vals[-1]) / value
    else:
        share = (max(vals[0], vals[-1]) / value) ** q
    return SeminormReport(value, window, float(share), terms)


def _check_pq(p, q):
    if not (p > 0 and q > 0):
        raise InvalidInputError(f"p and q must be positive, got p={p}, q={q}")


def besov_seminorm_wavelet(coeffs: WaveletCoefficients, s: float, p: float, q: float) -> SeminormReport:
    """(sum_j 2^{jq(s + 1/2 - 1/p)} ||<f, psi_j.>||_p^q)^{1/q}, sup at q = inf."""
    _check_pq(p, q)
    if not coeffs.levels:
        raise InvalidInputError("no coefficient levels")
    if coeffs.system.regularity_hint <= abs(s):
        warnings.warn(
            f"wavelet regularity ~{coeffs.system.regularity_hint:.3f} does not exceed |s| = {abs(s)}",
            RuntimeWarning,
            stacklevel=2,
        )
    inv_p = 0.0 if math.isinf(p) else 1 / p
    terms = {}
    for j in range(coeffs.j_min, coeffs.j_max + 1):
        c = coeffs.level_array(j)
        terms[j] = 2.0 ** (j * (s + 0.5 - inv_p)) * lp_sequence_norm(c, p)
    return _combine(terms, q, coeffs.j_range)


# -- Littlewood-Paley -----------------------------------------------------------


def _smooth_step(u):
    """C-infinity step: 1 for u <= 0, 0 for u >= 1."""
    u = np.clip(u, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(u < 1, np.exp(-1 / np.maximum(1 - u, 1e-300)), 0.0)
        b = np.where(u > 0, np.exp(-1 / np.maximum(u, 1e-300)), 0.0)
    return a / (a + b)


def lp_theta(xi):
    """Even cutoff: 1 on |xi| <= 6/7, 0 on |xi| >= 1."""
    x = np.abs(np.asarray(xi, dtype=float))
    return _smooth_step((x - 6 / 7) * 7)


def lp_bump(xi):
    """Phi(xi) = theta(xi/2) - theta(xi): supported in 6/7 < |xi| < 2, equal to 1 on [1, 12/7]."""
    xi = np.asarray(xi, dtype=float)
    return lp_theta(xi / 2) - lp_theta(xi)


@dataclass(frozen=True)
class LittlewoodPaleyBank:
    """Band-pass multipliers Phi(2^-n xi), n in [n_min, n_max], on a uniform grid.

    Frequencies are angular: xi = 2 pi * (cycles per unit length).
    """

    n_min: int
    n_max: int
    size: int
    step: float

    @classmethod
    def for_grid(cls, size: int, step: float, n_min: int | None = None, n_max: int | None = None):
        """Widest window resolved by `size` samples at spacing `step`."""
        nyquist = math.pi / step
        lowest = 2 * math.pi / (size * step)
        top = math.floor(math.log2(nyquist / 2))
        bottom = math.floor(math.log2(lowest))
        n_max = top if n_max is None else n_max
        n_min = bottom if n_min is None else n_min
        if n_max > top:
            raise InvalidInputError(f"band {n_max} exceeds the grid's Nyquist band {top}")
        if n_min > n_max:
            raise InvalidInputError(f"empty band window [{n_min}, {n_max}]")
        return cls(int(n_min), int(n_max), int(size), float(step))

    @property
    def frequencies(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.size, self.step)

    def multiplier(self, n: int) -> np.ndarray:
        return lp_bump(self.frequencies / 2.0**n)

    def partition_sum(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        return sum(lp_bump(xi / 2.0**n) for n in range(self.n_min, self.n_max + 1))

    def resolved_band(self) -> tuple[float, float]:
        """|xi| range on which the partition sums to one."""
        return 2.0**self.n_min, 2.0 ** (self.n_max + 1) * 6 / 7

    def pieces(self, samples) -> dict[int, np.ndarray]:
        """Delta_n f for each band, after the aliasing check."""
        f = np.asarray(samples)
        if f.shape != (self.size,):
            raise InvalidInputError(f"expected {self.size} samples, got shape {f.shape}")
        F = np.fft.fft(f)
        energy = float(np.sum(np.abs(F) ** 2))
        if energy == 0:
            return {n: np.zeros(self.size) for n in range(self.n_min, self.n_max + 1)}
        above = 1 - lp_theta(self.frequencies / 2.0 ** (self.n_max + 1))
        leak = float(np.sum(np.abs(F) ** 2 * above**2)) / energy
        if leak > 1e-6:
            raise AliasingError(f"{leak:.2e} of the energy lies above band {self.n_max}; refine the grid")
        real = np.isrealobj(f)
        out = {}
        for n in range(self.n_min, self.n_max + 1):
            piece = np.fft.ifft(F * self.multiplier(n))
            out[n] = piece.real if real else piece
        return out


def besov_seminorm_littlewood_paley(samples, s: float, p: float, q: float, bank: LittlewoodPaleyBank) -> SeminormReport:
    """(sum_n (2^{ns} ||Delta_n f||_p)^q)^{1/q} over the bank's window, ||.||_p by grid quadrature."""
    _check_pq(p, q)
    terms = {}
    for n, piece in bank.pieces(samples).items():
        a = np.abs(piece)
        norm = float(a.max()) if math.isinf(p) else lp_sequence_norm(a, p) * bank.step ** (1 / p)
        terms[n] = 2.0 ** (n * s) * norm
    return _combine(terms, q, (bank.n_min, bank.n_max))


# -- reconstruction ------------------------------------------------------------


@dataclass(frozen=True)
class Reconstruction:
    c: float
    residual: float
    probe: np.ndarray
    remainder: np.ndarray  # f(t) - f(0) - sum_j (f_j(t) - f_j(0)), before removing c t


def reconstruct_with_correction(coeffs: WaveletCoefficients, f: Callable, j_range=None, probe=None) -> Reconstruction:
    """Fit c minimising max_t |f(t) - f(0) - c t - sum_j (f_j(t) - f_j(0))| over the probe grid.

    The fit is a linear program for the real minimax line through the origin.
    """
    j_lo, j_hi = coeffs.j_range if j_range is None else j_range
    if j_hi < j_lo or j_lo < coeffs.j_min or j_hi > coeffs.j_max:
        raise InvalidInputError(f"level range {(j_lo, j_hi)} not covered by coefficients {coeffs.j_range}")
    if probe is None:
        a, b = coeffs.box
        probe = np.linspace(a + (b - a) / 4, b - (b - a) / 4, 401)
    t = np.asarray(probe, dtype=float)
    total = np.zeros(t.shape)
    for j in range(j_lo, j_hi + 1):
        fj = level_projection(coeffs, j)
        total = total + np.real(fj(t) - fj(0.0))
    r = np.real(np.asarray(f(t)) - f(np.array(0.0))) - total
    # minimise z subject to |r_i - c t_i| <= z
    A = np.concatenate([np.stack([-t, -np.ones_like(t)], 1), np.stack([t, -np.ones_like(t)], 1)])
    rhs = np.concatenate([-r, r])
    res = linprog([0, 1], A_ub=A, b_ub=rhs, bounds=[(None, None), (0, None)], method="highs")
    if not res.success:
        raise InvalidInputError(f"minimax fit failed: {res.message}")
    c = float(res.x[0])
    return Reconstruction(c, float(np.max(np.abs(r - c * t))), t, r)


# -- finite differences ----------------------------------------------------------


@dataclass(frozen=True)
class DifferenceSeminorm:
    value: float
    h_values: np.ndarray
    profile: np.ndarray  # h^-s ||Delta_h^n f||_{p_sharp} for each h

    def __float__(self):
        return self.value


def finite_difference_besov(samples, step: float, s: float, p_sharp: float, n: int, h_steps=None) -> DifferenceSeminorm:
    """sup_h h^-s (int |sum_k C(n,k) (-1)^{n-k} f(t + kh)|^{p_sharp} dt)^{1/p_sharp}.

    `samples` are values on a uniform grid of spacing `step`; h runs over
    multiples of the step (powers of two by default) and the integral is a
    Riemann sum over the t for which every f(t + kh) is sampled.
    """
    f = np.asarray(samples)
    if n <= s:
        raise InvalidInputError(f"difference order n = {n} must exceed s = {s}")
    if not p_sharp > 0:
        raise InvalidInputError(f"p_sharp must be positive, got {p_sharp}")
    size = f.size
    if h_steps is None:
        h_steps = [2**i for i in range(int(math.log2(max(size // (2 * n), 1))) + 1)]
    h_steps = np.asarray(h_steps, dtype=int)
    if h_steps.size == 0 or np.any(h_steps < 1):
        raise InvalidInputError("h grid must be positive multiples of the step")
    if n * int(h_steps.max()) >= size:
        raise InvalidInputError("h grid exhausts the sampled domain")
    weights = [comb(n, k, exact=True) * (-1) ** (n - k) for k in range(n + 1)]
    profile = []
    for m in h_steps:
        span = size - n * m
        d = sum(w * f[k * m : k * m + span] for k, w in enumerate(weights))
        a = np.abs(d)
        if math.isinf(p_sharp):
            norm = float(a.max())
        else:
            norm = lp_sequence_norm(a, p_sharp) * step ** (1 / p_sharp)
        profile.append((m * step) ** (-s) * norm)
    profile = np.array(profile)
    return DifferenceSeminorm(float(profile.max()), h_steps * step, profile)
