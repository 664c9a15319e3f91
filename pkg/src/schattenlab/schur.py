"""Schur multipliers of Schatten classes for 0 < p <= 1.

The m_p norm of a matrix A is the supremum of ||A o (xi (x) eta)||_p over
unit vectors xi, eta (rank-one test matrices suffice when p <= 1). Nothing
here computes that supremum exactly; `mp_lower_bound` returns the value at
an explicit feasible witness, so every number it reports is a certified
lower bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import (
    InvalidIndexError,
    InvalidInputError,
    ParseError,
    SeparationError,
    ShapeMismatchError,
    UnsupportedIndexError,
)
from .spectral import (
    SchattenIndex,
    as_matrix,
    divided_differences,
    lp_sequence_norm,
    roundoff_rcond,
    schatten_norm,
)


def _check_p(p: float) -> float:
    p = SchattenIndex.coerce(p).p
    if p > 1:
        raise UnsupportedIndexError(f"Schur multiplier norms are only defined here for p <= 1, got {p}")
    return p


def schur_product(A, B) -> np.ndarray:
    A, B = as_matrix(A, "A"), as_matrix(B, "B")
    if A.shape != B.shape:
        raise ShapeMismatchError(f"shape mismatch {A.shape} vs {B.shape}")
    return A * B


# -- divided differences ---------------------------------------------------


@dataclass(frozen=True)
class FunctionTag:
    name: str
    lipschitz: float | None = None
    period: float | None = None


@dataclass(frozen=True)
class DividedDifferenceMatrix:
    lam: np.ndarray
    mu: np.ndarray
    entries: np.ndarray
    tag: FunctionTag
    delta: float

    @property
    def shape(self):
        return self.entries.shape

    def __array__(self, dtype=None, copy=None):
        return np.array(self.entries, dtype=dtype)


def default_separation(lam, mu) -> float:
    nodes = np.concatenate([np.ravel(lam), np.ravel(mu)])
    span = float(nodes.max() - nodes.min()) if nodes.size else 0.0
    return 1e-6 * span if span > 0 else 1e-12


def divided_difference_matrix(
    f: Callable,
    lam,
    mu,
    delta: float | None = None,
    tag: FunctionTag | str | None = None,
) -> DividedDifferenceMatrix:
    """{(f(l_j) - f(m_k)) / (l_j - m_k)} on disjoint node sets.

    Raises SeparationError when some |l_j - m_k| < delta; the diagonal of a
    divided difference is deliberately not filled in.
    """
    lam = np.asarray(lam, dtype=float).ravel()
    mu = np.asarray(mu, dtype=float).ravel()
    if lam.size == 0 or mu.size == 0:
        raise InvalidInputError("node lists must be nonempty")
    if not (np.all(np.isfinite(lam)) and np.all(np.isfinite(mu))):
        raise InvalidInputError("nodes must be finite")
    if delta is None:
        delta = default_separation(lam, mu)
    if not delta > 0:
        raise InvalidInputError(f"separation must be positive, got {delta}")
    gap = np.abs(lam[:, None] - mu[None, :])
    if gap.min() < delta:
        j, k = np.unravel_index(np.argmin(gap), gap.shape)
        raise SeparationError(
            f"nodes lambda[{j}]={lam[j]} and mu[{k}]={mu[k]} are closer than delta={delta}"
        )
    if tag is None:
        tag = FunctionTag(getattr(f, "__name__", "f"))
    elif isinstance(tag, str):
        tag = FunctionTag(tag)
    entries = divided_differences(f, lam, mu).astype(complex)
    entries.setflags(write=False)
    return DividedDifferenceMatrix(lam, mu, entries, tag, float(delta))


# -- m_p lower bounds ------------------------------------------------------


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 32
    tol: float = 1e-9
    max_iters: int = 5000
    seed: int = 0
    max_backtracks: int = 30


@dataclass
class MultiplierEstimate:
    """Certified lower bound ||A o (xi (x) eta)||_p <= ||A||_{m_p}."""

    value: float
    xi: np.ndarray
    eta: np.ndarray
    p: float
    restarts: int
    converged: bool
    trace: list[float] = field(default_factory=list)
    iterations: list[int] = field(default_factory=list)
    seed: int = 0
    best_restart: int = 0

    def recompute(self, A) -> float:
        return rank_one_value(A, self.xi, self.eta, self.p)

    def to_text(self) -> str:
        def vec(v):
            return " ".join(f"{repr(float(z.real))},{repr(float(z.imag))}" for z in np.asarray(v, complex))

        lines = [
            f"value = {self.value!r}",
            f"p = {self.p!r}",
            f"restarts = {self.restarts}",
            f"converged = {str(self.converged).lower()}",
            f"seed = {self.seed}",
            f"best_restart = {self.best_restart}",
            "iterations = " + " ".join(str(i) for i in self.iterations),
            "trace = " + " ".join(repr(float(t)) for t in self.trace),
            "xi = " + vec(self.xi),
            "eta = " + vec(self.eta),
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "MultiplierEstimate":
        fields = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError("expected 'key = value'", lineno)
            key, _, val = line.partition("=")
            fields[key.strip()] = val.strip()

        def vec(s):
            out = []
            for tok in s.split():
                re_s, im_s = tok.split(",")
                out.append(complex(float(re_s), float(im_s)))
            return np.array(out, dtype=complex)

        try:
            return cls(
                value=float(fields["value"]),
                xi=vec(fields["xi"]),
                eta=vec(fields["eta"]),
                p=float(fields["p"]),
                restarts=int(fields["restarts"]),
                converged=fields["converged"] == "true",
                trace=[float(t) for t in fields.get("trace", "").split()],
                iterations=[int(t) for t in fields.get("iterations", "").split()],
                seed=int(fields.get("seed", 0)),
                best_restart=int(fields.get("best_restart", 0)),
            )
        except (KeyError, ValueError) as exc:
            raise ParseError(f"malformed multiplier estimate record: {exc}") from None


def rank_one_value(A, xi, eta, p: float) -> float:
    """||A o (xi (x) eta)||_p with (xi (x) eta)_{jk} = xi_j eta_k.

    Round-off singular values are dropped, which can only lower the value,
    so the result stays a valid lower bound on ||A||_{m_p}.
    """
    A = as_matrix(A)
    return schatten_norm(A * np.outer(xi, eta), p, rcond=roundoff_rcond(A.shape))


def _weights(A, a, b, p):
    """Row and column weights of X = D_sqrt(a) A D_sqrt(b).

    wa_j = (|X*|^p)_{jj}, wb_k = (|X|^p)_{kk}; both sum to ||X||_p^p. The
    fixed-point map a -> wa / sum(wa) is the Euler-homogeneity form of the
    gradient of a concave function of a, hence an ascent direction.
    """
    X = np.sqrt(a)[:, None] * A * np.sqrt(b)[None, :]
    U, s, Vh = np.linalg.svd(X, full_matrices=False)
    if s.size and s[0] > 0:
        s = np.where(s < roundoff_rcond(X.shape) * s[0], 0.0, s)
    sp = s**p
    wa = (np.abs(U) ** 2) @ sp
    wb = (np.abs(Vh.T) ** 2) @ sp
    return float(sp.sum()), wa, wb


def _ascend(A, a, b, p, g, w, cfg, side):
    """One backtracked step of the multiplicative update on one block."""
    total = w.sum()
    if total <= 0:
        return a if side == 0 else b, g, None
    target = w / total
    cur = a if side == 0 else b
    t = 1.0
    for _ in range(cfg.max_backtracks):
        cand = (1 - t) * cur + t * target
        cand /= cand.sum()
        if side == 0:
            g_new, wa, wb = _weights(A, cand, b, p)
        else:
            g_new, wa, wb = _weights(A, a, cand, p)
        if g_new >= g:
            return cand, g_new, (wa, wb)
        t *= 0.5
    return cur, g, None


def _run_restart(A, p, a, b, cfg):
    g, wa, wb = _weights(A, a, b, p)
    iters = 0
    converged = False
    for iters in range(1, cfg.max_iters + 1):
        g_start = g
        a, g, w = _ascend(A, a, b, p, g, wa, cfg, 0)
        if w is not None:
            wa, wb = w
        b, g, w = _ascend(A, a, b, p, g, wb, cfg, 1)
        if w is not None:
            wa, wb = w
        if g - g_start <= cfg.tol * max(g, 1e-300):
            converged = True
            break
    return a, b, iters, converged


def _random_simplex_point(n, rng):
    # |z|^2 of a uniform point on the complex unit sphere
    z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    w = np.abs(z) ** 2
    return w / w.sum()


def restart_rng(seed: int, restart: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(restart)]))


def mp_lower_bound(
    A,
    p: float,
    cfg: OptimizerConfig | None = None,
    warm_starts=(),
) -> MultiplierEstimate:
    """Multi-restart alternating ascent for sup ||A o (xi (x) eta)||_p.

    Only the moduli of xi and eta matter (their phases are diagonal unitaries
    that leave Schatten norms unchanged), so the search runs over the
    squared moduli a = |xi|^2, b = |eta|^2 on two simplices, where
    ||X||_p^p is concave in each block separately.

    `warm_starts` is an iterable of (xi, eta) pairs tried in addition to the
    random restarts.
    """
    p = _check_p(p)
    cfg = cfg or OptimizerConfig()
    A = as_matrix(A, "A")
    if A.size == 0:
        raise InvalidInputError("empty matrix")
    n, m = A.shape

    starts = []
    for r in range(cfg.restarts):
        rng = restart_rng(cfg.seed, r)
        starts.append((_random_simplex_point(n, rng), _random_simplex_point(m, rng)))
    for xi0, eta0 in warm_starts:
        a0 = np.abs(np.asarray(xi0)) ** 2
        b0 = np.abs(np.asarray(eta0)) ** 2
        if a0.shape != (n,) or b0.shape != (m,) or a0.sum() == 0 or b0.sum() == 0:
            raise InvalidInputError("warm start vectors have the wrong shape or vanish")
        starts.append((a0 / a0.sum(), b0 / b0.sum()))

    best = None
    trace, iterations = [], []
    for r, (a, b) in enumerate(starts):
        a, b, iters, conv = _run_restart(A, p, a, b, cfg)
        xi, eta = np.sqrt(a), np.sqrt(b)
        xi /= np.linalg.norm(xi)
        eta /= np.linalg.norm(eta)
        val = rank_one_value(A, xi, eta, p)
        trace.append(val)
        iterations.append(iters)
        if best is None or val > best[0]:
            best = (val, xi, eta, conv, r)

    val, xi, eta, conv, r = best
    return MultiplierEstimate(
        value=val,
        xi=xi.astype(complex),
        eta=eta.astype(complex),
        p=p,
        restarts=len(starts),
        converged=conv,
        trace=trace,
        iterations=iterations,
        seed=cfg.seed,
        best_restart=r,
    )


def psharp_upper_bound(A, p: float) -> float:
    """||A||_{p#} >= ||A||_{m_p}; for p = 1 this is the operator norm."""
    p = _check_p(p)
    return schatten_norm(A, SchattenIndex(p).p_sharp)


# -- Toeplitz and block bounds ---------------------------------------------


@dataclass(frozen=True)
class ToeplitzBound:
    value: float
    coarse: float
    grid: int
    converged: bool

    def __float__(self):
        return self.value


def _symbol_l1_mean(coeffs: Mapping[int, complex], M: int) -> float:
    c = np.zeros(M, dtype=complex)
    for n, t in coeffs.items():
        c[int(n) % M] += t
    symbol = M * np.fft.ifft(c)  # sum_n t_n exp(i n theta_m)
    return float(np.mean(np.abs(symbol)))


def toeplitz_m1_upper(coeffs: Mapping[int, complex], grid_exponent: int = 16, tol: float = 1e-6) -> ToeplitzBound:
    """(2 pi)^-1 ||sum_n t_n e^{i n theta}||_{L_1}, an upper bound on ||{t_{j-k}}||_{m_1}.

    The mean of |symbol| is taken on a uniform grid of 2^grid_exponent
    points and compared with the half grid; a mismatch above `tol` (relative
    to max(1, value)) marks the result as not converged.
    """
    if not coeffs:
        raise InvalidInputError("empty coefficient map")
    degree = max(abs(int(n)) for n in coeffs)
    M = 2**grid_exponent
    while M < 4 * degree + 2:
        M *= 2
    fine = _symbol_l1_mean(coeffs, M)
    coarse = _symbol_l1_mean(coeffs, M // 2)
    converged = abs(fine - coarse) <= tol * max(1.0, fine)
    return ToeplitzBound(fine, coarse, M, bool(converged))


def block_diagonal_bound(blocks, p: float) -> float:
    """Combine m_p bounds of generalised diagonal blocks: l_{p#} norm, max at p = 1."""
    p = _check_p(p)
    b = np.asarray(blocks, dtype=float).ravel()
    if b.size == 0:
        return 0.0
    if np.any(b < 0) or not np.all(np.isfinite(b)):
        raise InvalidInputError("block bounds must be finite and nonnegative")
    return lp_sequence_norm(b, SchattenIndex(p).p_sharp)


# -- automatic complete boundedness ----------------------------------------


def inflate(A, N: int) -> np.ndarray:
    """A (x) id_{M_N}, id being the all-ones N x N matrix.

    Entry [(j, l1), (k, l2)] (row index j*N + l1) equals A[j, k].
    """
    if int(N) != N or N < 1:
        raise InvalidInputError(f"inflation factor must be a positive integer, got {N}")
    A = as_matrix(A, "A")
    return np.kron(A, np.ones((int(N), int(N))))


@dataclass(frozen=True)
class InflationWitness:
    N: int
    u: np.ndarray
    v: np.ndarray
    Qu: np.ndarray
    Qv: np.ndarray
    u_compressed: np.ndarray
    v_compressed: np.ndarray
    residual: float
    isometry_defect: float


def _compression(u, n, N):
    rows = u.reshape(n, N)
    norms = np.sqrt(np.sum(np.abs(rows) ** 2, axis=1))
    Q = np.zeros((n * N, n), dtype=complex)
    for j in range(n):
        if norms[j] != 0:
            Q[j * N : (j + 1) * N, j] = rows[j] / norms[j]
    return Q, norms


def verify_inflation_identity(A, u, v, unit_tol: float = 1e-10) -> InflationWitness:
    """Check (A (x) id_N) o (u v*) = Q_u (A o (u~ v~*)) Q_v* entrywise.

    Q_u sends e_j to the normalized j-th row group of u (zero if that group
    vanishes) and u~_j is the l2 norm of the group.
    """
    A = as_matrix(A, "A")
    n = A.shape[0]
    if A.shape[1] != n:
        raise ShapeMismatchError("A must be square")
    u = np.asarray(u, dtype=complex).ravel()
    v = np.asarray(v, dtype=complex).ravel()
    if u.size % n or u.size != v.size or u.size == 0:
        raise ShapeMismatchError(f"u, v must have equal length divisible by {n}")
    for name, w in (("u", u), ("v", v)):
        if abs(np.linalg.norm(w) - 1) > unit_tol:
            raise InvalidInputError(f"{name} is not a unit vector (norm {np.linalg.norm(w)})")
    N = u.size // n
    Qu, ut = _compression(u, n, N)
    Qv, vt = _compression(v, n, N)
    lhs = inflate(A, N) * np.outer(u, v.conj())
    rhs = Qu @ (A * np.outer(ut, vt)) @ Qv.conj().T
    residual = float(np.linalg.norm(lhs - rhs, 2))
    defect = 0.0
    for Q, w in ((Qu, ut), (Qv, vt)):
        G = Q.conj().T @ Q
        target = np.diag((w != 0).astype(float))
        defect = max(defect, float(np.max(np.abs(G - target))))
    return InflationWitness(N, u, v, Qu, Qv, ut, vt, residual, defect)


# -- homogeneity -----------------------------------------------------------


@dataclass(frozen=True)
class HomogeneityResult:
    scale: float
    proportionality_error: float
    estimate: float
    scaled_estimate: float
    discrepancy: float


def homogeneity_check(f: Callable, lam, mu, scale: float, p: float, cfg: OptimizerConfig | None = None) -> HomogeneityResult:
    """Compare f^[1] on (lam, mu) with f_(s)^[1] on (lam/s, mu/s), f_(s)(t) = f(s t).

    The second matrix equals s times the first entrywise; the estimates are
    run with identical seeds and compared after dividing by s.
    """
    if not scale > 0:
        raise InvalidInputError(f"scale must be positive, got {scale}")
    p = _check_p(p)
    lam = np.asarray(lam, dtype=float)
    mu = np.asarray(mu, dtype=float)

    def f_scaled(t):
        return f(scale * np.asarray(t))

    D = divided_difference_matrix(f, lam, mu).entries
    Ds = divided_difference_matrix(f_scaled, lam / scale, mu / scale).entries
    ref = np.max(np.abs(scale * D))
    prop = float(np.max(np.abs(Ds - scale * D)) / ref) if ref > 0 else float(np.max(np.abs(Ds)))
    cfg = cfg or OptimizerConfig()
    est = mp_lower_bound(D, p, cfg).value
    est_s = mp_lower_bound(Ds, p, cfg).value
    disc = abs(est_s / scale - est) / est if est > 0 else abs(est_s)
    return HomogeneityResult(float(scale), prop, est, est_s, float(disc))


__all__ = [
    "DividedDifferenceMatrix",
    "FunctionTag",
    "HomogeneityResult",
    "InflationWitness",
    "MultiplierEstimate",
    "OptimizerConfig",
    "ToeplitzBound",
    "block_diagonal_bound",
    "divided_difference_matrix",
    "homogeneity_check",
    "inflate",
    "mp_lower_bound",
    "psharp_upper_bound",
    "rank_one_value",
    "schur_product",
    "toeplitz_m1_upper",
    "verify_inflation_identity",
]
