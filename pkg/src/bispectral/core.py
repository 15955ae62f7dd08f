"""Calogero-Moser pairs, their rank-one factorisation and spectral data."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import linalg as la
from .errors import (
    DegenerateSpectrum,
    ExactBackendUnsupported,
    MixedBackendError,
    NoConvergence,
    NonSemisimpleQ,
    NotRankOne,
    SingularMatrix,
)
from .scalar import Backend, GaussianRational, exact_random, to_exact

FACTOR_RTOL = 1e-9
DISTINCT_TOL = 1e-8
INVERSE_ITERATION_STEPS = 3
# defective blocks split by ~eps**(1/k) and leave nearly parallel eigenvectors
EIGVEC_COND_MAX = 1e6


@dataclass(frozen=True, eq=False)
class CMPair:
    """Two square matrices ``(P, Q)``, nominally with ``rank([P,Q] - I) == 1``.

    The rank condition is not enforced here so that corrupted inputs can be
    loaded and reported on; call :meth:`factor` to check it.
    """

    P: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        P, Q = np.asarray(self.P), np.asarray(self.Q)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape != Q.shape:
            raise ValueError(f"P and Q must be square of equal size, got {P.shape} and {Q.shape}")
        la.same_backend(P, Q)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "Q", Q)

    @property
    def n(self) -> int:
        return self.P.shape[0]

    @property
    def backend(self) -> Backend:
        return la.backend_of(self.P)

    def factor(self) -> "RankOneFactor":
        return validate_and_factor(self.P, self.Q)

    def conjugate(self, G) -> "CMPair":
        Gi = la.inverse(G)
        return CMPair(G @ self.P @ Gi, G @ self.Q @ Gi)

    def to_float(self) -> "CMPair":
        return CMPair(la.to_float_matrix(self.P), la.to_float_matrix(self.Q))

    def transpose(self) -> "CMPair":
        return CMPair(self.P.T.copy(), self.Q.T.copy())

    def __iter__(self):
        return iter((self.P, self.Q))


class RankOneFactor(NamedTuple):
    """Column vectors with ``[P, Q] = I - w1 w2^T``."""

    w1: np.ndarray
    w2: np.ndarray


@dataclass(frozen=True)
class SpectralData:
    """Generic first-order conditions ``delta_{lambda_i} o (d/dz - alpha_i)``."""

    lambdas: tuple
    alphas: tuple

    def __post_init__(self):
        lam, alp = tuple(self.lambdas), tuple(self.alphas)
        if len(lam) != len(alp) or not lam:
            raise ValueError("lambdas and alphas must be non-empty and of equal length")
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "alphas", alp)

    @property
    def n(self) -> int:
        return len(self.lambdas)

    @property
    def backend(self) -> Backend:
        exact = [isinstance(v, GaussianRational) for v in self.lambdas + self.alphas]
        if any(exact) and not all(exact):
            raise MixedBackendError("spectral data mixes exact and float values")
        return Backend.EXACT if all(exact) else Backend.FLOAT

    @classmethod
    def from_gammas(cls, lambdas, gammas) -> "SpectralData":
        """Spectral data whose canonical pair has diagonal ``P_ii = gammas[i]``."""
        lam = list(lambdas)
        alphas = [
            g + sum(1 / (lam[i] - lam[j]) for j in range(len(lam)) if j != i)
            for i, g in enumerate(gammas)
        ]
        return cls(tuple(lam), tuple(alphas))

    def gammas(self) -> tuple:
        lam = self.lambdas
        return tuple(
            a - sum(1 / (lam[i] - lam[j]) for j in range(len(lam)) if j != i)
            for i, a in enumerate(self.alphas)
        )


def _check_distinct(lambdas, exact):
    for i in range(len(lambdas)):
        for j in range(i):
            d = lambdas[i] - lambdas[j]
            if (d == 0) if exact else abs(d) <= DISTINCT_TOL:
                raise DegenerateSpectrum(f"lambda_{j} and lambda_{i} coincide ({lambdas[i]})")


def validate_and_factor(P, Q) -> RankOneFactor:
    """Check ``rank([P,Q] - I) == 1`` and return ``(w1, w2)`` with ``[P,Q] = I - w1 w2^T``.

    The pivot is the entry of ``[P,Q] - I`` of largest modulus; ``w1`` is the
    pivot column scaled so that its pivot entry is 1.
    """
    P, Q = np.asarray(P), np.asarray(Q)
    if P.shape != Q.shape or P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValueError("P and Q must be square matrices of equal size")
    backend = la.same_backend(P, Q)
    n = P.shape[0]
    M = la.commutator(P, Q) - la.identity(n, backend)
    exact = backend is Backend.EXACT
    if exact:
        a, b = max(np.ndindex(n, n), key=lambda ij: M[ij].norm2())
    else:
        a, b = np.unravel_index(int(np.argmax(np.abs(M))), M.shape)
    pivot = M[a, b]
    if pivot == 0:
        raise NotRankOne("[P,Q] - I vanishes (rank 0)")
    w1 = M[:, b] / pivot
    w2 = -M[a, :]
    residual = M + np.outer(w1, w2)
    if exact:
        if not la.is_zero(residual):
            raise NotRankOne("[P,Q] - I is not of rank one (exact residual nonzero)")
    else:
        scale = max(la.max_abs(M), la.max_abs(P) * la.max_abs(Q), 1.0)
        rel = la.max_abs(residual) / scale
        if not np.isfinite(rel) or rel > FACTOR_RTOL:
            raise NotRankOne(f"[P,Q] - I is not of rank one (relative residual {rel:.3e})")
    return RankOneFactor(w1, w2)


def from_spectral_data(data: SpectralData) -> CMPair:
    """Canonical pair: ``Q = diag(lambda)``, ``P_ij = 1/(lambda_i - lambda_j)`` off the diagonal."""
    backend = data.backend
    exact = backend is Backend.EXACT
    lam = [to_exact(v) for v in data.lambdas] if exact else [complex(v) for v in data.lambdas]
    alp = [to_exact(v) for v in data.alphas] if exact else [complex(v) for v in data.alphas]
    _check_distinct(lam, exact)
    n = len(lam)
    P = la.zeros(n, n, backend)
    Q = la.zeros(n, n, backend)
    for i in range(n):
        Q[i, i] = lam[i]
        P[i, i] = alp[i] - sum((1 / (lam[i] - lam[j]) for j in range(n) if j != i), la.like(0, P))
        for j in range(n):
            if i != j:
                P[i, j] = 1 / (lam[i] - lam[j])
    return CMPair(P, Q)


def _inverse_iteration(Q, mu, rng):
    n = Q.shape[0]
    shift = mu + 1e-10 * max(1.0, abs(mu))
    A = Q - shift * np.eye(n)
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    for _ in range(INVERSE_ITERATION_STEPS):
        v = np.linalg.solve(A, v)
        v /= np.linalg.norm(v)
    return v


def diagonal_gauge(pair: CMPair):
    """Return ``(lambdas, alphas, G)`` with ``G^-1 P G``, ``G^-1 Q G`` canonical.

    Float backend only.  Raises NonSemisimpleQ on (near) eigenvalue collision.
    """
    if pair.backend is Backend.EXACT:
        raise ExactBackendUnsupported("canonicalize requires the float backend")
    P, Q = pair.P, pair.Q
    n = pair.n
    w1, _ = validate_and_factor(P, Q)
    try:
        mu = la.eigenvalues(Q)
    except NoConvergence as exc:
        raise NonSemisimpleQ(f"eigenvalues of Q did not separate: {exc}") from exc
    gaps = [abs(mu[i] - mu[j]) for i in range(n) for j in range(i)]
    if gaps and min(gaps) <= DISTINCT_TOL:
        raise NonSemisimpleQ(f"Q has colliding eigenvalues (gap {min(gaps):.3e})")
    rng = np.random.default_rng(0)
    V = np.column_stack([_inverse_iteration(Q, m, rng) for m in mu])
    try:
        Vi = la.inverse(V)
    except SingularMatrix as exc:
        raise NonSemisimpleQ("Q is not diagonalisable") from exc
    if np.linalg.cond(V) > EIGVEC_COND_MAX:
        raise NonSemisimpleQ("eigenvectors of Q are numerically dependent")
    Pd = Vi @ P @ V
    # diagonal rescaling normalises the factor vectors to all-ones
    u = Vi @ w1
    G = V * u[None, :]
    alphas = [
        Pd[i, i] + sum(1 / (mu[i] - mu[j]) for j in range(n) if j != i) for i in range(n)
    ]
    return tuple(complex(m) for m in mu), tuple(complex(a) for a in alphas), G


def canonicalize(pair: CMPair) -> SpectralData:
    """Spectral data ``(lambda, alpha)`` of a pair with semisimple ``Q``."""
    lam, alp, _ = diagonal_gauge(pair)
    return SpectralData(lam, alp)


def random_spectral_data(n: int, seed: int, backend=Backend.FLOAT, bound=5.0, min_gap=0.1) -> SpectralData:
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    exact = Backend(backend) is Backend.EXACT
    lam = []
    while len(lam) < n:
        if exact:
            cand = exact_random(rng, int(bound))
            ok = all(cand != v for v in lam)
        else:
            cand = complex(*rng.uniform(-bound, bound, size=2))
            ok = all(abs(cand - v) >= min_gap for v in lam)
        if ok:
            lam.append(cand)
    if exact:
        alp = [exact_random(rng, int(bound)) for _ in range(n)]
    else:
        alp = [complex(*rng.uniform(-bound, bound, size=2)) for _ in range(n)]
    return SpectralData(tuple(lam), tuple(alp))


def random_pair(n: int, seed: int, backend=Backend.FLOAT) -> CMPair:
    """Deterministic random pair built from seeded spectral data."""
    return from_spectral_data(random_spectral_data(n, seed, backend))


# --- JSON ------------------------------------------------------------------


def pair_to_json(pair: CMPair) -> dict:
    return {"P": la.matrix_to_json(pair.P), "Q": la.matrix_to_json(pair.Q)}


def pair_from_json(obj) -> CMPair:
    return CMPair(la.matrix_from_json(obj["P"]), la.matrix_from_json(obj["Q"]))


def spectral_to_json(data: SpectralData) -> dict:
    return {
        "lambdas": [la.scalar_to_json(v) for v in data.lambdas],
        "alphas": [la.scalar_to_json(v) for v in data.alphas],
    }


def spectral_from_json(obj) -> SpectralData:
    return SpectralData(
        tuple(la.scalar_from_json(v) for v in obj["lambdas"]),
        tuple(la.scalar_from_json(v) for v in obj["alphas"]),
    )
