"""Dense matrix backbone: singular values, Schatten and weak quasi-norms,
functional calculus, partial-sum submajorization and the cut projection.

All routines work on finite complex matrices, which stand in for bounded
operators on a Hilbert space. Inputs are never modified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import InvalidIndexError, InvalidInputError, ShapeMismatchError

HERMITICITY_TOL = 1e-12


def as_matrix(M, name="matrix"):
    """Return `M` as a finite 2-d complex array."""
    if isinstance(M, HermitianOperator):
        return M.entries
    arr = np.asarray(M)
    if arr.ndim == 1 and arr.size == 1:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    arr = arr.astype(complex, copy=False)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return arr


@dataclass(frozen=True)
class SchattenIndex:
    """Exponent p in (0, inf] together with its conjugate p# = p / (1 - p).

    p# is only defined for p <= 1; `1/p = 1/p# + 1`.
    """

    p: float

    def __post_init__(self):
        p = float(self.p)
        if not (p > 0) or math.isnan(p):
            raise InvalidIndexError(f"Schatten exponent must lie in (0, inf], got {self.p}")
        object.__setattr__(self, "p", p)

    @property
    def p_sharp(self) -> float:
        if self.p > 1:
            raise InvalidIndexError(f"p# is undefined for p = {self.p} > 1")
        if self.p == 1:
            return math.inf
        return self.p / (1.0 - self.p)

    @classmethod
    def coerce(cls, idx) -> "SchattenIndex":
        return idx if isinstance(idx, cls) else cls(idx)


def conjugate_index(p: float) -> float:
    """p# for 0 < p <= 1."""
    return SchattenIndex(p).p_sharp


def lp_sequence_norm(values, p: float) -> float:
    """(sum |v|^p)^(1/p), with the sup convention for p = inf."""
    v = np.abs(np.asarray(values).ravel()).astype(float)
    if not p > 0:
        raise InvalidIndexError(f"exponent must be positive, got {p}")
    if v.size == 0:
        return 0.0
    if math.isinf(p):
        return float(v.max())
    top = v.max()
    if top == 0:
        return 0.0
    # scale first so large p or tiny values do not under/overflow
    return float(top * np.sum((v / top) ** p) ** (1.0 / p))


@dataclass(frozen=True)
class SingularSpectrum:
    """Nonincreasing singular values mu(0) >= mu(1) >= ... >= 0."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size and (np.any(v < 0) or np.any(np.diff(v) > 0)):
            raise InvalidInputError("singular values must be nonnegative and nonincreasing")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    def __getitem__(self, k):
        # conceptually padded by zeros
        if isinstance(k, (int, np.integer)) and k >= self.values.size:
            return 0.0
        return self.values[k]

    def floored(self, rcond: float | None = None, atol: float = 0.0) -> np.ndarray:
        """Singular values with those below max(rcond * mu(0), atol) set to zero."""
        v = self.values
        if v.size and (rcond or atol):
            v = np.where(v <= max((rcond or 0.0) * v[0], atol), 0.0, v)
        return v

    def schatten(self, p, rcond: float | None = None, atol: float = 0.0) -> float:
        """Schatten p quasi-norm; singular values below max(rcond * mu(0), atol) count as zero."""
        p = SchattenIndex.coerce(p).p
        return lp_sequence_norm(self.floored(rcond, atol), p)

    def weak(self, p: float) -> float:
        if not 0 < p < math.inf:
            raise InvalidIndexError(f"weak norm needs p in (0, inf), got {p}")
        if self.values.size == 0:
            return 0.0
        ranks = np.arange(1, self.values.size + 1, dtype=float)
        return float(np.max(ranks ** (1.0 / p) * self.values))

    def power_partial_sums(self, p: float, atol: float = 0.0) -> np.ndarray:
        """Cumulative sums sum_{k<=n} mu(k)^p for n = 0, 1, ..., values <= atol dropped."""
        return np.cumsum(self.floored(atol=atol) ** p)


def singular_values(M) -> SingularSpectrum:
    arr = as_matrix(M)
    if arr.size == 0:
        return SingularSpectrum(np.zeros(0))
    s = np.linalg.svd(arr, compute_uv=False)
    # LAPACK returns descending order; clip tiny negative round-off
    return SingularSpectrum(np.maximum(s, 0.0))


def schatten_norm(M, idx, rcond: float | None = None, atol: float = 0.0) -> float:
    """Schatten p quasi-norm; p = inf gives the operator norm.

    For p < 1 a round-off singular value of size eps would contribute about
    eps^p, so values below rcond * mu(0) count as exact zeros. The default
    rcond is max(shape) * eps; pass rcond=0 to keep every computed value.
    When M was computed from larger operands its round-off scales with
    them instead, which `atol` (see `operand_floor`) accounts for.
    """
    p = SchattenIndex.coerce(idx).p
    arr = as_matrix(M)
    if rcond is None:
        rcond = roundoff_rcond(arr.shape) if arr.size else 0.0
    return singular_values(arr).schatten(p, rcond, atol)


def roundoff_rcond(shape) -> float:
    """Relative singular value floor max(shape) * machine epsilon."""
    return max(shape) * np.finfo(float).eps


def operand_floor(shape, scale: float) -> float:
    """Absolute round-off floor max(shape) * eps * scale for a matrix computed from operands of norm `scale`."""
    return roundoff_rcond(shape) * float(scale)


def weak_norm(M, p: float) -> float:
    """sup_n (n+1)^(1/p) mu(n, M)."""
    SchattenIndex(p)
    return singular_values(M).weak(p)


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed n x n unitary (QR of a complex Ginibre matrix)."""
    Z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


class HermitianOperator:
    """Finite Hermitian matrix with a deterministic eigendecomposition.

    The constructor symmetrizes its input, A <- (A + A*) / 2, and keeps the
    size of that correction in `correction`. Eigenvalues are ordered by
    descending magnitude, ties broken by ascending signed value.
    """

    __slots__ = ("_entries", "correction", "__dict__")

    def __init__(self, entries):
        arr = as_matrix(entries, "HermitianOperator entries")
        if arr.shape[0] != arr.shape[1]:
            raise ShapeMismatchError(f"Hermitian operator must be square, got {arr.shape}")
        if arr.shape[0] == 0:
            raise InvalidInputError("empty operator")
        sym = (arr + arr.conj().T) / 2
        self.correction = float(np.max(np.abs(arr - sym)))
        sym.setflags(write=False)
        self._entries = sym

    @classmethod
    def from_spectrum(cls, eigenvalues, basis=None) -> "HermitianOperator":
        lam = np.asarray(eigenvalues, dtype=float)
        if basis is None:
            return cls(np.diag(lam))
        V = np.asarray(basis)
        return cls((V * lam) @ V.conj().T)

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    @property
    def dim(self) -> int:
        return self._entries.shape[0]

    @cached_property
    def _eig(self):
        lam, V = np.linalg.eigh(self._entries)
        order = np.lexsort((lam, -np.abs(lam)))
        lam, V = lam[order], V[:, order]
        lam.setflags(write=False)
        V.setflags(write=False)
        return lam, V

    @property
    def eigenvalues(self) -> np.ndarray:
        return self._eig[0]

    @property
    def eigenvectors(self) -> np.ndarray:
        return self._eig[1]

    def decomposition_residuals(self):
        """(||A - V diag(l) V*||_inf, ||V*V - I||_inf) as max-entry norms."""
        lam, V = self._eig
        rec = (V * lam) @ V.conj().T
        return (
            float(np.max(np.abs(self._entries - rec))),
            float(np.max(np.abs(V.conj().T @ V - np.eye(self.dim)))),
        )

    def __add__(self, other):
        return HermitianOperator(self._entries + as_matrix(other))

    def __sub__(self, other):
        return HermitianOperator(self._entries - as_matrix(other))

    def __array__(self, dtype=None, copy=None):
        return np.array(self._entries, dtype=dtype)

    def __repr__(self):
        return f"HermitianOperator(dim={self.dim}, correction={self.correction:.3g})"


def _evaluate(f: Callable, x: np.ndarray) -> np.ndarray:
    try:
        vals = np.asarray(f(x))
        if vals.shape != x.shape:
            raise ValueError
    except (TypeError, ValueError):
        vals = np.array([f(float(t)) for t in x])
    if not np.all(np.isfinite(vals)):
        bad = x[~np.isfinite(vals)]
        raise InvalidInputError(f"function is undefined or non-finite at {bad[:5]}")
    return vals


def apply_function(f: Callable, A):
    """f(A) = V diag(f(lambda)) V*.

    Returns a HermitianOperator when f is real on the spectrum, otherwise a
    complex ndarray.
    """
    if not isinstance(A, HermitianOperator):
        A = HermitianOperator(A)
    lam, V = A.eigenvalues, A.eigenvectors
    vals = _evaluate(f, lam)
    if np.iscomplexobj(vals) and np.any(vals.imag != 0):
        return (V * vals) @ V.conj().T
    return HermitianOperator((V * vals.real) @ V.conj().T)


def divided_differences(f: Callable, t, s, derivative: Callable | None = None) -> np.ndarray:
    """Matrix {(f(t_j) - f(s_k)) / (t_j - s_k)}.

    Near-coincident nodes fall back to `derivative` (or a central difference).
    """
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    ft, fs = _evaluate(f, t), _evaluate(f, s)
    diff = t[:, None] - s[None, :]
    scale = max(1.0, float(np.max(np.abs(t), initial=0)), float(np.max(np.abs(s), initial=0)))
    close = np.abs(diff) < 1e-7 * scale
    safe = np.where(close, 1.0, diff)
    out = (ft[:, None] - fs[None, :]) / safe
    if np.any(close):
        mid = ((t[:, None] + s[None, :]) / 2)[close]
        if derivative is not None:
            out[close] = _evaluate(derivative, mid)
        else:
            h = 1e-5 * scale
            out[close] = (_evaluate(f, mid + h) - _evaluate(f, mid - h)) / (2 * h)
    return out


def function_difference(f: Callable, A, B, derivative: Callable | None = None) -> np.ndarray:
    """f(A) - f(B) via the double operator integral identity

        f(A) - f(B) = V_A [f^[1](a, b) o (V_A* (A - B) V_B)] V_B*,

    which avoids the cancellation of subtracting two functional calculi when
    A - B is small.
    """
    A = A if isinstance(A, HermitianOperator) else HermitianOperator(A)
    B = B if isinstance(B, HermitianOperator) else HermitianOperator(B)
    if A.dim != B.dim:
        raise ShapeMismatchError(f"dimension mismatch {A.dim} vs {B.dim}")
    VA, VB = A.eigenvectors, B.eigenvectors
    core = VA.conj().T @ (A.entries - B.entries) @ VB
    D = divided_differences(f, A.eigenvalues, B.eigenvalues, derivative)
    return VA @ (D * core) @ VB.conj().T


@dataclass(frozen=True)
class SubmajorizationResult:
    holds: bool
    slack: float  # min over n of rhs_n + tol - lhs_n, without the tol
    lhs: np.ndarray = field(repr=False)
    rhs: np.ndarray = field(repr=False)

    def __bool__(self):
        return self.holds


def submajorization_holds(X, Y, p: float, tol: float = 1e-9) -> SubmajorizationResult:
    """Check sum_{k<=n} mu(k,X+Y)^p <= sum_{k<=n} mu(k,X)^p + mu(k,Y)^p for all n."""
    X, Y = as_matrix(X, "X"), as_matrix(Y, "Y")
    if X.shape != Y.shape:
        raise ShapeMismatchError(f"shape mismatch {X.shape} vs {Y.shape}")
    if not 0 < p <= 1:
        raise InvalidIndexError(f"submajorization check needs p in (0, 1], got {p}")
    lhs = singular_values(X + Y).power_partial_sums(p)
    rhs = singular_values(X).power_partial_sums(p) + singular_values(Y).power_partial_sums(p)
    margin = rhs - lhs
    slack = float(margin.min()) if margin.size else 0.0
    return SubmajorizationResult(bool(slack >= -tol), slack, lhs, rhs)


@dataclass(frozen=True)
class CutCertificate:
    """Certificate ||X(1-P)||_p^p + (n+1)||XP||_inf^p <= 2 sum_{k<=n} mu(k,X)^p.

    `projection` is the 0/1 diagonal of P in the basis `basis` of right
    singular vectors (the eigenbasis of |X|), ordered by decreasing
    singular value.
    """

    n: int
    p: float
    projection: np.ndarray
    basis: np.ndarray = field(repr=False)
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs

    @property
    def complement_rank(self) -> int:
        return int(np.sum(self.projection == 0))

    def projection_matrix(self) -> np.ndarray:
        V = self.basis
        return (V * self.projection) @ V.conj().T

    def recompute(self, X) -> tuple[float, float]:
        """lhs evaluated from the explicit matrices X(1-P), XP (round-off applies)."""
        X = as_matrix(X)
        P = self.projection_matrix()
        keep = X @ (np.eye(P.shape[0]) - P)
        cut = X @ P
        lhs = schatten_norm(keep, self.p) ** self.p + (self.n + 1) * schatten_norm(cut, math.inf) ** self.p
        return lhs, self.rhs


def cut_projection(X, n: int, p: float) -> CutCertificate:
    """Projection P whose complement carries the top n+1 singular directions.

    The cut is by index in the sorted singular basis, so with ties at
    mu(n, X) the complement still has rank exactly n+1. Both sides of the
    certificate come from the same sorted spectrum, which makes lhs <= rhs
    hold in floating point and not just up to a tolerance.
    """
    X = as_matrix(X, "X")
    if not 0 < p <= 1:
        raise InvalidIndexError(f"cut projection needs p in (0, 1], got {p}")
    dim = X.shape[1]
    if not 0 <= n < dim:
        raise InvalidInputError(f"n must satisfy 0 <= n < {dim}, got {n}")
    _, s, Vh = np.linalg.svd(X)
    V = Vh.conj().T
    mu = np.zeros(dim)
    mu[: s.size] = np.maximum(s, 0.0)
    head = [float(x) ** p for x in mu[: n + 1]]
    top = math.fsum(head)
    # fsum is correctly rounded and every head term is >= mu(n+1)^p, so the
    # product below never exceeds `top` after rounding
    tail = (n + 1) * (float(mu[n + 1]) ** p if n + 1 < dim else 0.0)
    lhs = top + tail
    rhs = 2.0 * top
    diag = np.ones(dim)
    diag[: n + 1] = 0.0
    return CutCertificate(n=n, p=p, projection=diag, basis=V, lhs=lhs, rhs=rhs)
