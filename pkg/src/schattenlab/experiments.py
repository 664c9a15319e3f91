"""Experiment drivers: counterexample growth curves, Lipschitz and Hoelder ratio
ensembles, submajorization sweeps and the quasi-commutator embedding.

Every driver returns an ExperimentReport whose per-trial records are plain
JSON values. Trials draw from np.random.SeedSequence([master_seed, index]),
so a report can be replayed from its parameters alone and compared byte for
byte.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import platform
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
import scipy
from scipy import stats

from .besov import besov_seminorm_wavelet, finite_difference_besov
from .errors import DegenerateOffsetError, InvalidIndexError, InvalidInputError, ShapeMismatchError
from .matio import dumps_binary, loads_binary
from .schur import (
    FunctionTag,
    OptimizerConfig,
    divided_difference_matrix,
    mp_lower_bound,
    psharp_upper_bound,
    rank_one_value,
)
from .spectral import (
    HermitianOperator,
    SchattenIndex,
    apply_function,
    as_matrix,
    function_difference,
    operand_floor,
    random_unitary,
    schatten_norm,
    singular_values,
    weak_norm,
)
from .wavelets import daubechies_system, default_vanishing_moments, wavelet_coefficients

log = logging.getLogger(__name__)

DISCARD_BELOW = 1e-12


# -- functions -------------------------------------------------------------------


@dataclass(frozen=True)
class FunctionSpec:
    """A scalar function with what is known about it in closed form."""

    name: str
    f: Callable
    derivative: Callable | None = None
    period: float | None = None
    holder: float | None = None  # Hoelder exponent if not Lipschitz
    polynomial_degree: int | None = None

    @property
    def tag(self) -> FunctionTag:
        lip = None
        if self.name == "identity":
            lip = 1.0
        return FunctionTag(self.name, lip, self.period)

    def __call__(self, t):
        return self.f(t)


def _bump(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1
    out[inside] = np.exp(1 - 1 / (1 - t[inside] ** 2))
    return out


def _bump_prime(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1
    u = t[inside]
    out[inside] = np.exp(1 - 1 / (1 - u**2)) * (-2 * u / (1 - u**2) ** 2)
    return out


FUNCTIONS: dict[str, FunctionSpec] = {
    "identity": FunctionSpec("identity", lambda t: np.asarray(t, dtype=float) * 1.0, lambda t: np.ones_like(np.asarray(t, dtype=float)), polynomial_degree=1),
    "square": FunctionSpec("square", lambda t: np.asarray(t, dtype=float) ** 2, lambda t: 2 * np.asarray(t, dtype=float), polynomial_degree=2),
    "sin": FunctionSpec("sin", np.sin, np.cos, period=2 * math.pi),
    "exp2pi": FunctionSpec("exp2pi", lambda t: np.exp(2j * math.pi * np.asarray(t, dtype=float)), lambda t: 2j * math.pi * np.exp(2j * math.pi * np.asarray(t, dtype=float)), period=1.0),
    "sqrtabs": FunctionSpec("sqrtabs", lambda t: np.sqrt(np.abs(np.asarray(t, dtype=float))), holder=0.5),
    "bump": FunctionSpec("bump", _bump, _bump_prime),
    "constant": FunctionSpec("constant", lambda t: np.ones_like(np.asarray(t, dtype=float)), lambda t: np.zeros_like(np.asarray(t, dtype=float)), period=1.0, polynomial_degree=0),
}


def get_function(name_or_spec) -> FunctionSpec:
    if isinstance(name_or_spec, FunctionSpec):
        return name_or_spec
    try:
        return FUNCTIONS[name_or_spec]
    except KeyError:
        raise InvalidInputError(f"unknown function {name_or_spec!r}; known: {', '.join(sorted(FUNCTIONS))}") from None


# -- ensembles -------------------------------------------------------------------

SPECTRUM_LAWS = ("uniform", "gaussian", "dyadic")
PERTURBATION_LAWS = ("rank-r", "gaussian-scaled", "diagonal")


@dataclass(frozen=True)
class Ensemble:
    """Random pairs (A, B = A + P) with A = U diag(lambda) U*.

    The spectrum of A follows `spectrum_law` on `spectrum_range`; P is a
    rank-`rank` Hermitian matrix with eigenvalues in [-scale, scale]
    ("rank-r"), a GUE matrix normalised to operator norm `scale`
    ("gaussian-scaled"), or a real diagonal with entries in [-scale, scale]
    ("diagonal").
    """

    dim: int
    count: int
    spectrum_law: str = "uniform"
    perturbation_law: str = "rank-r"
    master_seed: int = 0
    spectrum_range: tuple[float, float] = (-1.0, 1.0)
    rank: int = 1
    scale: float = 0.1

    def __post_init__(self):
        if self.dim < 1 or self.count < 0:
            raise InvalidInputError(f"bad ensemble size dim={self.dim}, count={self.count}")
        if self.spectrum_law not in SPECTRUM_LAWS:
            raise InvalidInputError(f"spectrum law must be one of {SPECTRUM_LAWS}")
        if self.perturbation_law not in PERTURBATION_LAWS:
            raise InvalidInputError(f"perturbation law must be one of {PERTURBATION_LAWS}")
        if not 1 <= self.rank <= self.dim:
            raise InvalidInputError(f"rank must lie in [1, dim], got {self.rank}")
        object.__setattr__(self, "spectrum_range", tuple(float(x) for x in self.spectrum_range))

    def rng(self, index: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence([int(self.master_seed), int(index)]))

    def _spectrum(self, rng):
        a, b = self.spectrum_range
        n = self.dim
        if self.spectrum_law == "uniform":
            return rng.uniform(a, b, n)
        if self.spectrum_law == "gaussian":
            mid, half = (a + b) / 2, (b - a) / 2
            return np.clip(mid + half / 3 * rng.standard_normal(n), a, b)
        # dyadic: +-2^-k scaled into the range, k in 0..10
        k = rng.integers(0, 11, n)
        sign = rng.choice([-1.0, 1.0], n)
        top = max(abs(a), abs(b))
        return np.clip(sign * top * 2.0 ** (-k.astype(float)), a, b)

    def _perturbation(self, rng):
        n = self.dim
        if self.perturbation_law == "rank-r":
            W = random_unitary(n, rng)[:, : self.rank]
            s = self.scale * rng.uniform(-1, 1, self.rank)
            return (W * s) @ W.conj().T
        if self.perturbation_law == "gaussian-scaled":
            G = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            H = (G + G.conj().T) / 2
            return H * (self.scale / np.linalg.norm(H, 2))
        return np.diag(self.scale * rng.uniform(-1, 1, n)).astype(complex)

    def draw(self, index: int) -> tuple[HermitianOperator, HermitianOperator]:
        rng = self.rng(index)
        lam = self._spectrum(rng)
        U = random_unitary(self.dim, rng)
        A = HermitianOperator((U * lam) @ U.conj().T)
        P = self._perturbation(rng)
        return A, HermitianOperator(A.entries + P)


# -- reports -----------------------------------------------------------------------


def environment_fingerprint() -> dict:
    return {
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "platform": platform.platform(),
        "machine": platform.machine(),
    }


def _clean(value):
    """JSON-safe copy: numpy scalars to Python, tuples to lists, non-finite floats to strings."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_clean(v) for v in value]
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else repr(v)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value


def canonical_records(records) -> bytes:
    """One sorted-key JSON object per line; floats keep their repr, so the bytes are exact."""
    return "".join(json.dumps(_clean(r), sort_keys=True) + "\n" for r in records).encode("utf-8")


@dataclass
class ExperimentReport:
    experiment: str
    parameters: dict
    records: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    environment: dict = field(default_factory=environment_fingerprint)
    discarded: int = 0
    spot_checks: list = field(default_factory=list)

    @property
    def master_seed(self):
        return self.parameters.get("seed")

    def records_bytes(self) -> bytes:
        return canonical_records(self.records)

    def to_json(self) -> str:
        return json.dumps(_clean(asdict(self)), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentReport":
        data = json.loads(text)
        return cls(**data)

    def to_csv(self) -> str:
        buf = io.StringIO()
        keys = []
        for r in self.records:
            for k in r:
                if k not in keys:
                    keys.append(k)
        writer = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        writer.writeheader()
        for r in self.records:
            writer.writerow({k: json.dumps(_clean(v)) if isinstance(v, (list, dict)) else _clean(v) for k, v in r.items()})
        return buf.getvalue()

    def to_table(self) -> str:
        lines = [f"experiment {self.experiment}  seed {self.master_seed}"]
        for k, v in sorted(self.parameters.items()):
            lines.append(f"  {k} = {v}")
        lines.append("summary:")
        for k, v in sorted(self.summary.items()):
            lines.append(f"  {k} = {v}")
        if self.discarded:
            lines.append(f"  discarded trials = {self.discarded}")
        return "\n".join(lines) + "\n"


def _run_trials(fn, count, threads):
    if threads and threads > 1 and count > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, range(count)))
    return [fn(i) for i in range(count)]


def _slope(n_list, values) -> dict:
    x, y = np.log(np.asarray(n_list, dtype=float)), np.log(np.asarray(values, dtype=float))
    if x.size < 2:
        return {"slope": math.nan, "intercept": math.nan, "slope_low": math.nan, "slope_high": math.nan}
    fit = stats.linregress(x, y)
    if x.size > 2:
        half = stats.t.ppf(0.975, x.size - 2) * fit.stderr
    else:
        half = 0.0
    return {
        "slope": float(fit.slope),
        "intercept": float(fit.intercept),
        "slope_low": float(fit.slope - half),
        "slope_high": float(fit.slope + half),
    }


def _spot_check_indices(count: int, seed: int) -> list[int]:
    """Deterministic 5% sample (at least one trial when any exist)."""
    if count == 0:
        return []
    k = max(1, math.ceil(0.05 * count))
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 2**31 - 1]))
    return sorted(int(i) for i in rng.choice(count, size=min(k, count), replace=False))


def _check_p(p, upper=1.0):
    p = SchattenIndex.coerce(p).p
    if p > upper:
        raise InvalidIndexError(f"p must lie in (0, {upper}], got {p}")
    return p


# -- Toeplitz growth -----------------------------------------------------------------


def toeplitz_matrix(epsilon: float, n: int, m: int) -> np.ndarray:
    """The compression of T o X_{n,m}: {1 / (eps + m (j - k))}_{j,k < n}."""
    d = np.subtract.outer(np.arange(n), np.arange(n)).astype(float)
    return 1.0 / (epsilon + m * d)


def toeplitz_growth(p: float, epsilon: float, n_list, m: int = 1024, check_doubling: bool = True) -> ExperimentReport:
    """r(n) = ||T o X_{n,m}||_p / n with a log-log slope fit.

    X_{n,m} = sum_{j,k<n} e_{mj} (x) e_{mk} is n times a rank-one projection,
    and T o X_{n,m} is supported on the same n x n grid, so its Schatten norm
    is that of the compressed n x n matrix.
    """
    p = _check_p(p)
    if not 0 < epsilon < 1:
        raise InvalidInputError(f"epsilon must lie in (0, 1), got {epsilon}")
    n_list = [int(n) for n in n_list]
    if not n_list or min(n_list) < 1:
        raise InvalidInputError("n_list must contain positive sizes")
    if m < max(n_list):
        raise InvalidInputError(f"m = {m} must be at least max(n_list) = {max(n_list)}")
    if epsilon + m * max(n_list) > 1e300:
        raise InvalidInputError("m too large: entries underflow")
    records = []
    for n in n_list:
        r = schatten_norm(toeplitz_matrix(epsilon, n, m), p) / n
        rec = {"n": n, "m": m, "r": r, "diagonal_limit": n ** (1 / p) / (epsilon * n)}
        if check_doubling:
            r2 = schatten_norm(toeplitz_matrix(epsilon, n, 2 * m), p) / n
            rec["r_doubled_m"] = r2
            rec["doubling_change"] = abs(r2 - r) / r
        records.append(rec)
    summary = _slope(n_list, [r["r"] for r in records])
    summary["ratio_last_first"] = records[-1]["r"] / records[0]["r"]
    summary["expected_slope"] = 1 / p - 1
    if check_doubling:
        summary["max_doubling_change"] = max(r["doubling_change"] for r in records)
        summary["m_accepted"] = summary["max_doubling_change"] <= 0.01
    summary["max_diagonal_deviation"] = max(abs(r["r"] / r["diagonal_limit"] - 1) for r in records)
    params = {"p": p, "epsilon": epsilon, "n_list": n_list, "m": m, "seed": None}
    return ExperimentReport("toeplitz-growth", params, records, summary)


# -- periodic counterexample -----------------------------------------------------------


def periodic_nodes(epsilon: float, n: int, spacing: int = 1):
    """lambda_j = spacing * j + eps, mu_k = spacing * k."""
    j = np.arange(n, dtype=float)
    return spacing * j + epsilon, spacing * j


def periodic_counterexample(
    f,
    epsilon: float,
    n_list,
    p: float,
    spacing: int = 1,
    cfg: OptimizerConfig | None = None,
) -> ExperimentReport:
    """m_p lower bounds for divided differences of a 1-periodic f on shifted integer nodes.

    With lambda_j = s j + eps, mu_k = s k, periodicity gives
    f^[1](lambda_j, mu_k) = (f(eps) - f(0)) / (eps + s (j - k)), a scalar
    multiple of the Toeplitz family T o X_{n,s}. The optimizer is warm
    started from the uniform probe (the compression of X_{n,s}, normalised)
    and from the previous size's witness padded with zeros, so the reported
    bounds are nondecreasing in n.
    """
    spec = get_function(f)
    p = _check_p(p)
    f0 = complex(np.asarray(spec.f(np.array([0.0])))[0])
    fe = complex(np.asarray(spec.f(np.array([float(epsilon)])))[0])
    if abs(fe - f0) <= 1e-14 * max(1.0, abs(f0)):
        raise DegenerateOffsetError(f"f({epsilon}) = f(0); the construction is degenerate, choose another epsilon")
    cfg = cfg or OptimizerConfig(restarts=8)
    n_list = sorted(int(n) for n in n_list)
    scale = fe - f0
    records = []
    prev = None
    for n in n_list:
        lam, mu = periodic_nodes(epsilon, n, spacing)
        D = divided_difference_matrix(spec.f, lam, mu, tag=spec.tag)
        T = toeplitz_matrix(epsilon, n, spacing)
        proportional = float(np.max(np.abs(D.entries - scale * T)) / np.max(np.abs(scale * T)))
        uniform = np.full(n, 1 / math.sqrt(n))
        warm = [(uniform, uniform)]
        if prev is not None:
            xi = np.zeros(n)
            eta = np.zeros(n)
            xi[: prev[0].size] = np.abs(prev[0])
            eta[: prev[1].size] = np.abs(prev[1])
            warm.append((xi, eta))
        est = mp_lower_bound(D.entries, p, cfg, warm_starts=warm)
        prev = (est.xi, est.eta)
        records.append(
            {
                "n": n,
                "estimate": est.value,
                "uniform_probe": rank_one_value(D.entries, uniform, uniform, p),
                "upper_bound": psharp_upper_bound(D.entries, p),
                "proportionality_error": proportional,
                "best_restart": est.best_restart,
                "converged": est.converged,
            }
        )
    ests = [r["estimate"] for r in records]
    summary = _slope(n_list, ests)
    summary["expected_slope"] = 1 / p - 1
    summary["growth_factors"] = [b / a for a, b in zip(ests, ests[1:])]
    summary["min_growth_factor"] = min(summary["growth_factors"]) if len(ests) > 1 else math.nan
    summary["max_proportionality_error"] = max(r["proportionality_error"] for r in records)
    summary["offset_factor"] = [scale.real, scale.imag]
    params = {
        "function": spec.name,
        "epsilon": epsilon,
        "n_list": n_list,
        "p": p,
        "spacing": spacing,
        "restarts": cfg.restarts,
        "seed": cfg.seed,
    }
    return ExperimentReport("periodic", params, records, summary)


def periodic_commutator_ratio(f, epsilon: float, n_list, p: float, cfg: OptimizerConfig | None = None) -> ExperimentReport:
    """Lipschitz ratios ||f(A) X - X f(B)||_p / ||A X - X B||_p for A = diag(lambda), B = diag(mu).

    X is the coupling with A X - X B = xi (x) eta for the m_p witness of the
    divided-difference matrix, so f(A) X - X f(B) = f^[1] o (xi (x) eta) and
    the ratio grows with n exactly as the periodic counterexample does.
    """
    spec = get_function(f)
    base = periodic_counterexample(spec, epsilon, n_list, p, cfg=cfg)
    records = []
    cfg = cfg or OptimizerConfig(restarts=8)
    for n in base.parameters["n_list"]:
        lam, mu = periodic_nodes(epsilon, n)
        D = divided_difference_matrix(spec.f, lam, mu).entries
        est = mp_lower_bound(D, p, cfg, warm_starts=[(np.ones(n), np.ones(n))])
        Y = np.outer(est.xi, est.eta.conj())
        X = Y / np.subtract.outer(lam, mu)
        fA = spec.f(lam)
        fB = spec.f(mu)
        num = fA[:, None] * X - X * fB[None, :]
        den = lam[:, None] * X - X * mu[None, :]
        records.append({"n": n, "rho": schatten_norm(num, p) / schatten_norm(den, p)})
    rho = [r["rho"] for r in records]
    summary = _slope(base.parameters["n_list"], rho)
    summary["monotone"] = all(b > a for a, b in zip(rho, rho[1:]))
    params = dict(base.parameters)
    return ExperimentReport("periodic-commutator", params, records, summary)


# -- envelopes ---------------------------------------------------------------------------


def derivative_sup(spec: FunctionSpec, interval, samples: int = 4097) -> float:
    """sup |f'| on the interval (closed form when known, else central differences)."""
    a, b = interval
    t = np.linspace(a, b, samples)
    if spec.derivative is not None:
        return float(np.max(np.abs(spec.derivative(t))))
    vals = spec.f(t)
    return float(np.max(np.abs(np.gradient(vals, t))))


def besov_envelope(spec: FunctionSpec, p: float, interval, j_window=(-4, 8), N: int | None = None) -> dict:
    """Wavelet seminorm of f in B^{1/p}_{p#, p}, with coefficients over the interval.

    Polynomials of degree below the vanishing-moment count have identically
    zero coefficients, so the seminorm is reported as exactly 0 for them.
    """
    N = N or default_vanishing_moments(p)
    p_sharp = SchattenIndex(p).p_sharp
    if spec.polynomial_degree is not None and spec.polynomial_degree < N:
        return {"seminorm": 0.0, "tail_share": 0.0, "known_zero": True, "N": N}
    sys_ = daubechies_system(N)
    coeffs = wavelet_coefficients(spec.f, sys_, j_window, interval, resolution=6)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        rep = besov_seminorm_wavelet(coeffs, 1 / p, p_sharp, p)
    return {"seminorm": rep.value, "tail_share": rep.tail_share, "known_zero": False, "N": N}


# -- Lipschitz ratio ---------------------------------------------------------------------


def _difference(spec: FunctionSpec, A, B):
    return function_difference(spec.f, A, B, spec.derivative)


def _floors(spec: FunctionSpec, A, B) -> tuple[float, float]:
    """Absolute round-off floors for A - B and for f(A) - f(B).

    Both are computed from operands far larger than the difference, so
    their round-off singular values scale with ||A||, ||f(A)|| and, on the
    divided-difference route, ||f'|| ||A||.
    """
    lam = np.concatenate([A.eigenvalues, B.eigenvalues])
    size = float(np.max(np.abs(lam)))
    scale = float(np.max(np.abs(spec.f(lam))))
    if spec.derivative is not None:
        scale = max(scale, float(np.max(np.abs(spec.derivative(lam)))) * size)
    return operand_floor(A.entries.shape, size), operand_floor(A.entries.shape, scale)


def _ensemble_params(ens: Ensemble) -> dict:
    return {
        "dim": ens.dim,
        "trials": ens.count,
        "spectrum_law": ens.spectrum_law,
        "perturbation_law": ens.perturbation_law,
        "spectrum_range": list(ens.spectrum_range),
        "rank": ens.rank,
        "scale": ens.scale,
        "seed": ens.master_seed,
    }


def _spot_check(report, ens, compute, key):
    """Round-trip 5% of the trials through the binary matrix format and recompute `key`."""
    for i in _spot_check_indices(ens.count, ens.master_seed):
        rec = report.records[i]
        if rec.get("discarded"):
            continue
        A, B = ens.draw(i)
        A2 = HermitianOperator(loads_binary(dumps_binary(A.entries)))
        B2 = HermitianOperator(loads_binary(dumps_binary(B.entries)))
        value = compute(A2, B2)[key]
        ok = value == rec[key] or abs(value - rec[key]) <= 1e-12 * max(1.0, abs(rec[key]))
        report.spot_checks.append({"trial": i, "key": key, "recomputed": value, "ok": bool(ok)})


def lipschitz_ratio(f, ens: Ensemble, p: float, threads: int = 1, envelope: bool = True) -> ExperimentReport:
    """rho = ||f(A) - f(B)||_p / ||A - B||_p over the ensemble, with the envelope ||f'||_inf + seminorm."""
    spec = get_function(f)
    p = _check_p(p)

    def compute(A, B):
        floor_d, floor_f = _floors(spec, A, B)
        den = schatten_norm(A.entries - B.entries, p, atol=floor_d)
        if den < DISCARD_BELOW:
            return {"discarded": True, "denominator": den}
        num = schatten_norm(_difference(spec, A, B), p, atol=floor_f)
        return {"rho": num / den, "numerator": num, "denominator": den}

    def trial(i):
        A, B = ens.draw(i)
        rec = {"trial": i}
        rec.update(compute(A, B))
        return rec

    records = _run_trials(trial, ens.count, threads)
    kept = [r for r in records if not r.get("discarded")]
    for r in records:
        if r.get("discarded"):
            log.info("trial %d discarded: ||A - B||_p = %.3g", r["trial"], r["denominator"])
    report = ExperimentReport("lipschitz-ratio", {"function": spec.name, "p": p, **_ensemble_params(ens)}, records)
    report.discarded = len(records) - len(kept)
    summary = {"max_rho": max((r["rho"] for r in kept), default=math.nan), "kept": len(kept)}
    if envelope:
        lo, hi = ens.spectrum_range
        interval = (lo - ens.scale, hi + ens.scale)
        env = besov_envelope(spec, p, interval)
        lip = derivative_sup(spec, interval)
        summary.update(
            derivative_sup=lip,
            seminorm=env["seminorm"],
            seminorm_tail_share=env["tail_share"],
            envelope=lip + env["seminorm"],
        )
        summary["empirical_constant"] = summary["max_rho"] / summary["envelope"] if summary["envelope"] > 0 else math.nan
    report.summary = summary
    _spot_check(report, ens, compute, "rho")
    return report


def holder_weak_ratio(f, alpha: float, ens: Ensemble, p: float, threads: int = 1, seminorm: bool = True) -> ExperimentReport:
    """w = ||f(A) - f(B)||_{p/alpha, inf} / ||A - B||_p^alpha over the ensemble."""
    spec = get_function(f)
    p = _check_p(p)
    if not 0 < alpha < 1:
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha}")
    q = p / alpha

    def compute(A, B):
        den = schatten_norm(A.entries - B.entries, p, atol=_floors(spec, A, B)[0])
        if den < DISCARD_BELOW:
            return {"discarded": True, "denominator": den}
        # the Hoelder function need not be differentiable, so subtract the calculi directly
        diff = np.asarray(apply_function(spec.f, A)) - np.asarray(apply_function(spec.f, B))
        num = weak_norm(diff, q)
        return {"w": num / den**alpha, "numerator": num, "denominator": den}

    def trial(i):
        A, B = ens.draw(i)
        rec = {"trial": i}
        rec.update(compute(A, B))
        return rec

    records = _run_trials(trial, ens.count, threads)
    kept = [r for r in records if not r.get("discarded")]
    report = ExperimentReport("holder-weak", {"function": spec.name, "alpha": alpha, "p": p, **_ensemble_params(ens)}, records)
    report.discarded = len(records) - len(kept)
    summary = {"max_w": max((r["w"] for r in kept), default=math.nan), "kept": len(kept)}
    if seminorm:
        p_sharp = SchattenIndex(p).p_sharp
        s = alpha + (0.0 if math.isinf(p_sharp) else 1 / p_sharp)
        lo, hi = ens.spectrum_range
        width = max(8.0, 4 * (hi - lo))
        step = 2.0**-10
        t = np.arange(-width, width, step)
        fd = finite_difference_besov(spec.f(t), step, s, p_sharp, 2)
        summary["difference_seminorm"] = fd.value
        summary["ratio_to_seminorm"] = summary["max_w"] / fd.value if fd.value > 0 else math.nan
    report.summary = summary
    _spot_check(report, ens, compute, "w")
    return report


# -- submajorization ------------------------------------------------------------------------


def submajorization_sweep(f, ens: Ensemble, p: float, threads: int = 1, envelope: bool = True) -> ExperimentReport:
    """Smallest C with sum_{k<=n} mu_k(f(A)-f(B))^p <= C^p E^p sum_{k<=n} mu_k(A-B)^p for all n, trials."""
    spec = get_function(f)
    p = _check_p(p)
    lo, hi = ens.spectrum_range
    interval = (lo - ens.scale, hi + ens.scale)
    if envelope:
        env = besov_envelope(spec, p, interval)
        E = derivative_sup(spec, interval) + env["seminorm"]
    else:
        env, E = None, 1.0

    def compute(A, B):
        floor_d, floor_f = _floors(spec, A, B)
        d = singular_values(A.entries - B.entries).power_partial_sums(p, floor_d)
        if d[-1] ** (1 / p) < DISCARD_BELOW:
            return {"discarded": True, "denominator": float(d[-1])}
        num = singular_values(_difference(spec, A, B)).power_partial_sums(p, floor_f)
        ok = d > 0
        worst = float(np.max(num[ok] / d[ok]))
        return {"worst_ratio": worst, "constant": worst ** (1 / p) / E, "argmax_n": int(np.argmax(np.where(ok, num / np.where(ok, d, 1), -np.inf)))}

    def trial(i):
        A, B = ens.draw(i)
        rec = {"trial": i}
        rec.update(compute(A, B))
        return rec

    records = _run_trials(trial, ens.count, threads)
    kept = [r for r in records if not r.get("discarded")]
    report = ExperimentReport("submajorization", {"function": spec.name, "p": p, **_ensemble_params(ens)}, records)
    report.discarded = len(records) - len(kept)
    report.summary = {
        "empirical_constant": max((r["constant"] for r in kept), default=math.nan),
        "envelope": E,
        "seminorm": env["seminorm"] if env else None,
        "kept": len(kept),
    }
    _spot_check(report, ens, compute, "constant")
    return report


# -- quasi-commutator embedding -----------------------------------------------------------


@dataclass(frozen=True)
class EmbeddingResult:
    A_tilde: np.ndarray
    X_tilde: np.ndarray
    commutator: np.ndarray
    residual: float
    norm_gap: float | None  # relative gap in ||[A~, X~]||_p = 2^{1/p} ||AX - XB||_p


def quasicommutator_embedding(A, B, X, p: float | None = None) -> EmbeddingResult:
    """A~ = [[A, 0], [0, B]], X~ = [[0, X], [X*, 0]], checked against [[0, Y], [-Y*, 0]], Y = AX - XB.

    X~ is Hermitian, so [A~, X~] is anti-Hermitian with singular values those
    of Y, each twice; hence ||[A~, X~]||_p = 2^{1/p} ||Y||_p.
    """
    A = A.entries if isinstance(A, HermitianOperator) else HermitianOperator(A).entries
    B = B.entries if isinstance(B, HermitianOperator) else HermitianOperator(B).entries
    X = as_matrix(X, "X")
    n, m = A.shape[0], B.shape[0]
    if X.shape != (n, m):
        raise ShapeMismatchError(f"X must be {n} x {m}, got {X.shape}")
    At = np.block([[A, np.zeros((n, m))], [np.zeros((m, n)), B]])
    Xt = np.block([[np.zeros((n, n)), X], [X.conj().T, np.zeros((m, m))]])
    C = At @ Xt - Xt @ At
    Y = A @ X - X @ B
    expected = np.block([[np.zeros((n, n)), Y], [-Y.conj().T, np.zeros((m, m))]])
    scale = max(1.0, float(np.max(np.abs(A), initial=0)), float(np.max(np.abs(B), initial=0))) * max(1.0, float(np.max(np.abs(X), initial=0)))
    residual = float(np.max(np.abs(C - expected))) / scale
    gap = None
    if p is not None:
        lhs = schatten_norm(C, p)
        rhs = 2 ** (1 / p) * schatten_norm(Y, p)
        gap = abs(lhs - rhs) / rhs if rhs > 0 else abs(lhs)
    return EmbeddingResult(At, Xt, C, residual, gap)


# -- registry and replay ----------------------------------------------------------------------

EXPERIMENTS = ("toeplitz-growth", "periodic", "lipschitz-ratio", "holder-weak", "submajorization", "periodic-commutator")


def run_experiment(name: str, params: dict, threads: int = 1) -> ExperimentReport:
    """Dispatch by experiment name; `params` uses the keys reports record."""
    P = dict(params)
    if name == "toeplitz-growth":
        return toeplitz_growth(P["p"], P["epsilon"], P["n_list"], int(P.get("m", 1024)))
    if name in ("periodic", "periodic-commutator"):
        cfg = OptimizerConfig(restarts=int(P.get("restarts", 8)), seed=int(P.get("seed") or 0))
        fn = periodic_counterexample if name == "periodic" else periodic_commutator_ratio
        kw = {"spacing": int(P.get("spacing", 1))} if name == "periodic" else {}
        return fn(P.get("function", "exp2pi"), P["epsilon"], P["n_list"], P["p"], cfg=cfg, **kw)
    if name in ("lipschitz-ratio", "holder-weak", "submajorization"):
        ens = Ensemble(
            dim=int(P["dim"]),
            count=int(P["trials"]),
            spectrum_law=P.get("spectrum_law", "uniform"),
            perturbation_law=P.get("perturbation_law", "rank-r"),
            master_seed=int(P.get("seed") or 0),
            spectrum_range=tuple(P.get("spectrum_range", (-1.0, 1.0))),
            rank=int(P.get("rank", 1)),
            scale=float(P.get("scale", 0.1)),
        )
        if name == "lipschitz-ratio":
            return lipschitz_ratio(P["function"], ens, P["p"], threads=threads)
        if name == "holder-weak":
            return holder_weak_ratio(P["function"], P["alpha"], ens, P["p"], threads=threads)
        return submajorization_sweep(P["function"], ens, P["p"], threads=threads)
    raise InvalidInputError(f"unknown experiment {name!r}; available: {', '.join(EXPERIMENTS)}")


def replay(bundle: str | dict, threads: int = 1) -> tuple[ExperimentReport, bool]:
    """Re-run a report from its recorded parameters; True when the per-trial records match byte for byte."""
    data = json.loads(bundle) if isinstance(bundle, str) else bundle
    original = canonical_records(data["records"])
    report = run_experiment(data["experiment"], data["parameters"], threads=threads)
    return report, report.records_bytes() == original
