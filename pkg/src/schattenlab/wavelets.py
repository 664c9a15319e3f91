"""Daubechies wavelets: filters, dyadic evaluation, coefficients and level
projections f_j = sum_k <f, psi_jk> psi_jk.

Conventions: phi(x) = sqrt(2) sum_k h_k phi(2x - k) on [0, 2N-1],
psi(x) = sqrt(2) sum_k g_k phi(2x - k) with g_k = (-1)^k h_{2N-1-k}, so
N = 1 gives the Haar function (+1 on [0, 1/2), -1 on [1/2, 1)), and
psi_jk(t) = 2^{j/2} psi(2^j t - k).
"""

from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import mpmath
import numpy as np
from scipy import signal

from .errors import InvalidInputError, OutOfDomainError, ParseError, ResolutionError

log = logging.getLogger(__name__)

MAX_LEVEL = 14
MAX_VANISHING_MOMENTS = 20

# Hoelder exponents of the Daubechies scaling functions (rounded); beyond the
# table it grows at the asymptotic slope 1 - log(3)/(2 log 2) ~ 0.2075 per moment.
_HOLDER_TABLE = {1: 0.0, 2: 0.550, 3: 1.088, 4: 1.618, 5: 1.969, 6: 2.189, 7: 2.460, 8: 2.761, 9: 3.074, 10: 3.361}


def regularity_hint(N: int) -> float:
    if N in _HOLDER_TABLE:
        return _HOLDER_TABLE[N]
    top = max(_HOLDER_TABLE)
    return _HOLDER_TABLE[top] + (1 - math.log(3) / (2 * math.log(2))) * (N - top)


@lru_cache(maxsize=None)
def _daubechies_filter(N: int) -> tuple[float, ...]:
    if N == 1:
        r = 1 / math.sqrt(2)
        return (r, r)
    with mpmath.workdps(60):
        # |m0|^2 = cos^{2N}(w/2) Q(sin^2(w/2)),  Q(y) = sum_k C(N-1+k, k) y^k
        q = [mpmath.binomial(N - 1 + k, k) for k in range(N)]
        ys = mpmath.polyroots(q[::-1], maxsteps=500, extraprec=400)
        poly = [mpmath.mpf(1)]  # ascending powers of w = exp(-i omega)
        for _ in range(N):
            poly = _polymul(poly, [1, 1])
        for y in ys:
            # sin^2 = (2 - w - 1/w)/4 = y  <=>  w^2 - (2 - 4y) w + 1 = 0
            b = 2 - 4 * y
            disc = mpmath.sqrt(b * b - 4)
            w1, w2 = (b + disc) / 2, (b - disc) / 2
            root = w1 if abs(w1) > abs(w2) else w2
            poly = _polymul(poly, [-root, 1])
        coeffs = [mpmath.re(c) for c in poly]
        total = mpmath.fsum(coeffs)
        scale = mpmath.sqrt(2) / total
        return tuple(float(c * scale) for c in coeffs)


def _polymul(a, b):
    out = [mpmath.mpf(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def daubechies_filter(N: int) -> np.ndarray:
    """Minimal-phase Daubechies scaling filter with N vanishing moments (sum = sqrt 2)."""
    if int(N) != N or not 1 <= N <= MAX_VANISHING_MOMENTS:
        raise InvalidInputError(f"vanishing moments must be an integer in [1, {MAX_VANISHING_MOMENTS}], got {N}")
    return np.array(_daubechies_filter(int(N)))


class WaveletSystem:
    """A Daubechies system with a write-once cache of dyadic samples.

    Samples of phi and psi at level J live on the grid m 2^-J, m = 0 .. (2N-1) 2^J,
    and are exact up to round-off: integer values come from the eigenvector
    of the refinement matrix and every finer level follows from the
    two-scale relation.
    """

    def __init__(self, N: int):
        self.vanishing_moments = int(N)
        self.scaling_filter = daubechies_filter(N)
        L = self.scaling_filter.size
        self.wavelet_filter = np.array([(-1) ** k * self.scaling_filter[L - 1 - k] for k in range(L)])
        self.support = (0, L - 1)
        self.regularity_hint = regularity_hint(self.vanishing_moments)
        self._phi_cache: dict[int, np.ndarray] = {}
        self._psi_cache: dict[int, np.ndarray] = {}
        self._lock = threading.Lock()

    def __repr__(self):
        return f"WaveletSystem(N={self.vanishing_moments})"

    @property
    def length(self) -> int:
        """Support length 2N - 1."""
        return self.support[1]

    @property
    def is_haar(self) -> bool:
        return self.vanishing_moments == 1

    @property
    def psi_cache(self):
        return dict(self._psi_cache)

    # -- dyadic samples ----------------------------------------------------

    def _phi_integer_values(self) -> np.ndarray:
        h = self.scaling_filter
        L = h.size
        if self.is_haar:
            return np.array([1.0, 0.0])
        M = np.zeros((L, L))
        for n in range(L):
            for m in range(L):
                k = 2 * n - m
                if 0 <= k < L:
                    M[n, m] = math.sqrt(2) * h[k]
        w, V = np.linalg.eig(M)
        i = int(np.argmin(np.abs(w - 1)))
        v = np.real(V[:, i])
        v = v / v.sum()
        v[0] = v[-1] = 0.0  # continuous phi vanishes at the support ends
        return v

    def phi_samples(self, J: int) -> np.ndarray:
        """phi at m 2^-J, m = 0 .. (2N-1) 2^J."""
        self._check_level(J)
        with self._lock:
            return self._phi_level(J)

    def _phi_level(self, J):
        if J not in self._phi_cache:
            vals = self._phi_integer_values() if J == 0 else self._refine(self._phi_level(J - 1), J - 1)
            vals.setflags(write=False)
            self._phi_cache[J] = vals
        return self._phi_cache[J]

    def _refine(self, coarse: np.ndarray, J: int) -> np.ndarray:
        """Samples at level J+1 from level J via phi(x) = sqrt2 sum h_k phi(2x - k)."""
        h = self.scaling_filter
        if self.is_haar:
            n = 2 ** (J + 1)
            out = np.ones(n + 1)
            out[-1] = 0.0
            return out
        step = 2**J
        size = self.length * 2 ** (J + 1) + 1
        out = np.zeros(size)
        idx = np.arange(size)
        for k, hk in enumerate(h):
            src = idx - k * step
            ok = (src >= 0) & (src < coarse.size)
            out[ok] += math.sqrt(2) * hk * coarse[src[ok]]
        return out

    def psi_samples(self, J: int) -> np.ndarray:
        """psi at m 2^-J, m = 0 .. (2N-1) 2^J."""
        self._check_level(J)
        if J in self._psi_cache:
            return self._psi_cache[J]
        if self.is_haar:
            n = 2**J
            vals = np.where(np.arange(n + 1) < n / 2, 1.0, -1.0)
            vals[-1] = 0.0
        else:
            phi = self.phi_samples(J)
            size = self.length * 2**J + 1
            idx = 2 * np.arange(size)
            vals = np.zeros(size)
            for k, gk in enumerate(self.wavelet_filter):
                src = idx - k * 2**J
                ok = (src >= 0) & (src < phi.size)
                vals[ok] += math.sqrt(2) * gk * phi[src[ok]]
        vals.setflags(write=False)
        with self._lock:
            self._psi_cache.setdefault(J, vals)
        return self._psi_cache[J]

    def psi_midpoints(self, J: int) -> np.ndarray:
        """psi at (m + 1/2) 2^-J, m = 0 .. (2N-1) 2^J - 1."""
        if J + 1 > MAX_LEVEL:
            raise ResolutionError(f"midpoint samples at level {J} need cache level {J + 1} > {MAX_LEVEL}")
        if self.is_haar:
            n = 2**J
            return np.where(np.arange(n) < n / 2, 1.0, -1.0)
        return self.psi_samples(J + 1)[1::2]

    def grid(self, J: int) -> np.ndarray:
        return np.arange(self.length * 2**J + 1) / 2**J

    def _check_level(self, J):
        if int(J) != J or not 0 <= J <= MAX_LEVEL:
            raise ResolutionError(f"dyadic level must be an integer in [0, {MAX_LEVEL}], got {J}")

    # -- pointwise evaluation ----------------------------------------------

    def psi(self, x, level: int = MAX_LEVEL) -> np.ndarray:
        """psi at arbitrary points; linear interpolation on the level grid (exact at dyadic points)."""
        x = np.asarray(x, dtype=float)
        if self.is_haar:
            return np.where((x >= 0) & (x < 0.5), 1.0, np.where((x >= 0.5) & (x < 1), -1.0, 0.0))
        vals = self.psi_samples(level)
        return np.interp(x * 2**level, np.arange(vals.size), vals, left=0.0, right=0.0)

    def psi_jk(self, j: int, k: int) -> Callable:
        """The function t -> 2^{j/2} psi(2^j t - k)."""

        def f(t):
            return 2 ** (j / 2) * self.psi(2.0**j * np.asarray(t, dtype=float) - k)

        return f

    # -- invariants ----------------------------------------------------------

    def filter_residuals(self) -> tuple[float, float]:
        """(|sum h - sqrt 2|, max_m |sum_k h_k h_{k+2m} - delta_m0|)."""
        h = self.scaling_filter
        L = h.size
        orth = 0.0
        for m in range(-(L // 2), L // 2 + 1):
            s = sum(h[k] * h[k + 2 * m] for k in range(L) if 0 <= k + 2 * m < L)
            orth = max(orth, abs(s - (1.0 if m == 0 else 0.0)))
        return float(abs(h.sum() - math.sqrt(2))), float(orth)

    def psi_moments(self, count: int | None = None, J: int = MAX_LEVEL - 1) -> np.ndarray:
        """Midpoint-quadrature moments int psi(x) x^q dx, q = 0 .. count-1."""
        count = self.vanishing_moments if count is None else count
        J = min(J, MAX_LEVEL - 1)
        vals = self.psi_midpoints(J)
        x = (np.arange(vals.size) + 0.5) / 2**J
        # centred, scaled monomials keep the sums well conditioned
        c = self.length / 2
        u = (x - c) / c
        return np.array([np.sum(vals * u**q) / 2**J for q in range(count)])

    def psi_l2_norm_sq(self, J: int = MAX_LEVEL - 1) -> float:
        vals = self.psi_midpoints(min(J, MAX_LEVEL - 1))
        return float(np.sum(vals**2) / 2 ** min(J, MAX_LEVEL - 1))

    def psi_lp_norm(self, p: float, J: int = MAX_LEVEL - 1) -> float:
        vals = np.abs(self.psi_midpoints(min(J, MAX_LEVEL - 1)))
        if math.isinf(p):
            return float(np.max(np.abs(self.psi_samples(min(J, MAX_LEVEL)))))
        return float((np.sum(vals**p) / 2 ** min(J, MAX_LEVEL - 1)) ** (1 / p))


_SYSTEMS: dict[int, WaveletSystem] = {}
_SYSTEMS_LOCK = threading.Lock()


def daubechies_system(N: int) -> WaveletSystem:
    """Shared WaveletSystem for N vanishing moments (N = 1 is Haar)."""
    if int(N) != N or not 1 <= N <= MAX_VANISHING_MOMENTS:
        raise InvalidInputError(f"vanishing moments must be an integer in [1, {MAX_VANISHING_MOMENTS}], got {N}")
    with _SYSTEMS_LOCK:
        if N not in _SYSTEMS:
            _SYSTEMS[int(N)] = WaveletSystem(int(N))
        return _SYSTEMS[int(N)]


def default_vanishing_moments(p: float) -> int:
    """max(10, ceil(4/p)): enough regularity for the C^beta, beta > 2/p requirement."""
    return max(10, math.ceil(4 / p))


def evaluate_wavelet(sys: WaveletSystem, J: int) -> tuple[np.ndarray, np.ndarray]:
    """(grid, psi samples) at step 2^-J over the support."""
    return sys.grid(J), sys.psi_samples(J)


# -- coefficients ------------------------------------------------------------


@dataclass
class WaveletCoefficients:
    """<f, psi_jk> for j in [j_min, j_max] and k meeting the truncation box.

    `levels[j]` is (k0, values) with values[i] the coefficient at k = k0 + i.
    `errors[j]` is the change under one halving of the quadrature step.
    """

    system: WaveletSystem
    j_min: int
    j_max: int
    box: tuple[float, float]
    levels: dict[int, tuple[int, np.ndarray]] = field(default_factory=dict)
    errors: dict[int, float] = field(default_factory=dict)

    @property
    def j_range(self) -> tuple[int, int]:
        return self.j_min, self.j_max

    def level(self, j: int) -> dict[int, complex]:
        if j not in self.levels:
            return {}
        k0, vals = self.levels[j]
        return {k0 + i: complex(v) for i, v in enumerate(vals)}

    def level_array(self, j: int) -> np.ndarray:
        if j not in self.levels:
            return np.zeros(0, dtype=complex)
        return self.levels[j][1]

    def get(self, j: int, k: int) -> complex:
        if j not in self.levels:
            return 0j
        k0, vals = self.levels[j]
        i = k - k0
        return complex(vals[i]) if 0 <= i < vals.size else 0j

    def items(self):
        for j in sorted(self.levels):
            k0, vals = self.levels[j]
            for i, v in enumerate(vals):
                yield j, k0 + i, complex(v)

    def scaled(self, factor: complex) -> "WaveletCoefficients":
        levels = {j: (k0, vals * factor) for j, (k0, vals) in self.levels.items()}
        return WaveletCoefficients(self.system, self.j_min, self.j_max, self.box, levels, dict(self.errors))

    @classmethod
    def from_mapping(cls, system, entries, j_range=None, box=(-math.inf, math.inf)) -> "WaveletCoefficients":
        """Exact coefficient set from {(j, k): value}."""
        by_level: dict[int, dict[int, complex]] = {}
        for (j, k), c in entries.items():
            by_level.setdefault(int(j), {})[int(k)] = complex(c)
        if j_range is None:
            if not by_level:
                raise InvalidInputError("empty coefficient map needs an explicit j_range")
            j_range = (min(by_level), max(by_level))
        levels = {}
        for j in range(j_range[0], j_range[1] + 1):
            kv = by_level.get(j)
            if not kv:
                levels[j] = (0, np.zeros(0, dtype=complex))
                continue
            k0, k1 = min(kv), max(kv)
            vals = np.zeros(k1 - k0 + 1, dtype=complex)
            for k, c in kv.items():
                vals[k - k0] = c
            levels[j] = (k0, vals)
        return cls(system, int(j_range[0]), int(j_range[1]), tuple(box), levels)

    def to_text(self, threshold: float = 0.0) -> str:
        lines = [
            f"# wavelet N={self.system.vanishing_moments} j_range={self.j_min},{self.j_max} "
            f"box={self.box[0]!r},{self.box[1]!r}"
        ]
        for j, k, c in self.items():
            if abs(c) > threshold:
                lines.append(f"{j} {k} {c.real!r} {c.imag!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, system: WaveletSystem | None = None) -> "WaveletCoefficients":
        header = None
        entries: dict[int, dict[int, complex]] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                if "j_range=" in line and header is None:
                    header = dict(tok.split("=", 1) for tok in line[1:].split() if "=" in tok)
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ParseError("expected 'j k re im'", lineno)
            try:
                j, k = int(parts[0]), int(parts[1])
                c = complex(float(parts[2]), float(parts[3]))
            except ValueError:
                raise ParseError(f"bad coefficient line {line!r}", lineno) from None
            entries.setdefault(j, {})[k] = c
        if header is not None:
            N = int(header["N"])
            j_min, j_max = (int(v) for v in header["j_range"].split(","))
            box = tuple(float(v) for v in header["box"].split(","))
        else:
            if not entries:
                raise ParseError("no coefficients and no header")
            N = system.vanishing_moments if system else 1
            j_min, j_max = min(entries), max(entries)
            box = (-math.inf, math.inf)
        system = system or daubechies_system(N)
        levels = {}
        for j, kv in entries.items():
            k0, k1 = min(kv), max(kv)
            vals = np.zeros(k1 - k0 + 1, dtype=complex)
            for k, c in kv.items():
                vals[k - k0] = c
            levels[j] = (k0, vals)
        return cls(system, j_min, j_max, box, levels)


def k_window(sys: WaveletSystem, j: int, box: tuple[float, float]) -> tuple[int, int]:
    """Inclusive k range whose support 2^-j [k, k + 2N - 1] meets the open box."""
    a, b = box
    lo = math.floor(2.0**j * a - sys.length) + 1
    hi = math.ceil(2.0**j * b) - 1
    return lo, hi


def _level_coefficients(f, sys, j, box, r):
    """Midpoint rule with x-step 2^-r against psi: c_k = 2^{-j/2} int f(2^-j (x + k)) psi(x) dx."""
    k_lo, k_hi = k_window(sys, j, box)
    if k_hi < k_lo:
        return k_lo, np.zeros(0, dtype=complex)
    psi_m = sys.psi_midpoints(r)
    step = 2**r
    count = (k_hi - k_lo) * step + psi_m.size
    t = (k_lo * step + np.arange(count) + 0.5) / 2.0 ** (r + j)
    F = np.asarray(f(t))
    if F.shape != t.shape:
        F = np.array([f(float(x)) for x in t])
    if not np.all(np.isfinite(F)):
        raise InvalidInputError(f"function is not finite on the quadrature grid at level {j}")
    method = "fft" if psi_m.size > 64 else "direct"
    corr = signal.correlate(F.astype(complex), psi_m.astype(complex), mode="valid", method=method)
    vals = corr[::step][: k_hi - k_lo + 1] * (2.0 ** (-j / 2) / step)
    return k_lo, vals


def default_resolution(sys: WaveletSystem) -> int:
    """Quadrature refinement reaching ~1e-6 on unit-size coefficients."""
    if sys.is_haar:
        return 8
    return int(min(MAX_LEVEL - 1, max(8, math.ceil(20 / (1 + sys.regularity_hint)))))


def wavelet_coefficients(
    f: Callable,
    sys: WaveletSystem,
    j_range: tuple[int, int],
    box: tuple[float, float],
    resolution: int | None = None,
    min_step_exponent: int = 6,
    error_estimate: bool = True,
) -> WaveletCoefficients:
    """<f, psi_jk> for j in j_range and every k whose support meets `box`.

    Composite midpoint rule against cached psi samples. The step in t is
    2^-max(j + resolution, min_step_exponent), so coarse levels still
    resolve f itself. The default resolution grows as the wavelet gets
    rougher, since the midpoint error decays like 2^-(regularity + 1)
    per refinement. With `error_estimate` each level is recomputed at
    half the resolution and the largest change is recorded.
    """
    j_min, j_max = int(j_range[0]), int(j_range[1])
    if j_max < j_min:
        raise InvalidInputError(f"empty level range {j_range}")
    if resolution is None:
        resolution = default_resolution(sys)
    if not 1 <= resolution <= MAX_LEVEL - 1:
        raise ResolutionError(f"resolution must lie in [1, {MAX_LEVEL - 1}], got {resolution}")
    a, b = float(box[0]), float(box[1])
    if not b > a:
        raise InvalidInputError(f"bad box {box}")
    out = WaveletCoefficients(sys, j_min, j_max, (a, b))
    for j in range(j_min, j_max + 1):
        # coarse levels ask for a fine t-step relative to their width; the
        # psi cache caps that, which only coarsens t at very negative j
        r = min(max(j + resolution, min_step_exponent) - j, MAX_LEVEL - 1)
        r = max(r, 1)
        k0, vals = _level_coefficients(f, sys, j, (a, b), r)
        out.levels[j] = (k0, vals)
        if error_estimate and vals.size:
            _, coarse = _level_coefficients(f, sys, j, (a, b), max(r - 1, 1))
            out.errors[j] = float(np.max(np.abs(vals - coarse)))
        else:
            out.errors[j] = 0.0
    return out


# -- level projections --------------------------------------------------------


def level_projection(coeffs: WaveletCoefficients, j: int, eval_level: int = MAX_LEVEL) -> Callable:
    """f_j(t) = sum_k 2^{j/2} psi(2^j t - k) <f, psi_jk>, restricted to the box."""
    if not coeffs.j_min <= j <= coeffs.j_max:
        raise InvalidInputError(f"level {j} outside {coeffs.j_range}")
    sys = coeffs.system
    a, b = coeffs.box
    k0, vals = coeffs.levels.get(j, (0, np.zeros(0, dtype=complex)))
    L = sys.length

    def f_j(t):
        t = np.asarray(t, dtype=float)
        if np.any((t < a) | (t > b)):
            raise OutOfDomainError(f"level projection evaluated outside box [{a}, {b}]")
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        if vals.size == 0:
            out = np.zeros(t.shape, dtype=complex)
        else:
            x = 2.0**j * t
            out = np.zeros(t.shape, dtype=complex)
            base = np.floor(x).astype(int)
            for shift in range(L + 1):
                k = base - shift
                idx = k - k0
                ok = (idx >= 0) & (idx < vals.size)
                if np.any(ok):
                    out[ok] += sys.psi(x[ok] - k[ok], eval_level) * vals[idx[ok]]
            out *= 2 ** (j / 2)
        if np.all(out.imag == 0):
            out = out.real
        return out[0] if scalar else out

    return f_j


@dataclass(frozen=True)
class LevelNorm:
    norm: float
    coefficient_norm: float  # 2^{j(1/2 - 1/p)} ||coefficients||_p

    @property
    def ratio(self) -> float:
        return self.norm / self.coefficient_norm if self.coefficient_norm > 0 else math.nan


def level_lp_norm(coeffs: WaveletCoefficients, j: int, p: float, J: int = 10) -> LevelNorm:
    """||f_j||_p by midpoint quadrature at step 2^-(j+J), and its coefficient-side equivalent."""
    from .spectral import lp_sequence_norm

    if not p > 0:
        raise InvalidInputError(f"p must be positive, got {p}")
    sys = coeffs.system
    k0, vals = coeffs.levels.get(j, (0, np.zeros(0, dtype=complex)))
    if vals.size == 0:
        return LevelNorm(0.0, 0.0)
    nz = np.nonzero(np.abs(vals) > 0)[0]
    k_lo, k_hi = k0 + nz[0], k0 + nz[-1]
    # f_j lives on 2^-j [k_lo, k_hi + 2N - 1]; sample it on the dyadic midpoint grid
    count = (k_hi - k_lo + sys.length) * 2**J
    x = k_lo + (np.arange(count) + 0.5) / 2**J
    psi_m = sys.psi_midpoints(J)
    acc = np.zeros(count, dtype=complex)
    step = 2**J
    for i in nz:
        off = (k0 + i - k_lo) * step
        acc[off : off + psi_m.size] += psi_m * vals[i]
    acc *= 2 ** (j / 2)
    dt = 2.0 ** (-(j + J))
    if math.isinf(p):
        norm = float(np.max(np.abs(acc)))
    else:
        norm = float((np.sum(np.abs(acc) ** p) * dt) ** (1 / p))
    del x
    cnorm = 2 ** (j * (0.5 - (0 if math.isinf(p) else 1 / p))) * lp_sequence_norm(vals, p)
    return LevelNorm(norm, float(cnorm))
