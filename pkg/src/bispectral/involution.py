"""Bispectral involutions of Calogero-Moser pairs and their symplectic behaviour."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg as la
from .baker import Kind, RhoPoly
from .core import CMPair, diagonal_gauge
from .errors import ExactBackendUnsupported, InvalidRho, SingularMatrix, SingularQ, SingularRho
from .scalar import Backend

FD_STEP = 1e-5
NAMES = ("kp", "airy", "bessel")


def beta_kp(pair: CMPair) -> CMPair:
    return CMPair(pair.Q.T.copy(), pair.P.T.copy())


def _need_kind(rho, kind):
    if rho is None or rho.kind is not kind:
        raise InvalidRho(f"this involution needs a {kind.value}-normalised rho")


def beta_airy(pair: CMPair, rho: RhoPoly) -> CMPair:
    """``(P^T, rho(P^T) - Q^T)``."""
    _need_kind(rho, Kind.AIRY)
    if pair.backend is Backend.EXACT:
        rho = rho.exact()
    Pt = pair.P.T.copy()
    return CMPair(Pt, rho.on(Pt) - pair.Q.T)


def _check_not_cancelled(S, M, rho):
    """Reject ``S = rho(M)`` whose smallest singular value is lost to cancellation."""
    norm = np.linalg.norm(M, 2)
    scale = sum(abs(complex(c)) * norm**k for k, c in enumerate(rho.coefficients()))
    s_min = np.linalg.svd(S, compute_uv=False)[-1]
    if s_min < la.SINGULAR_RTOL * scale:
        raise SingularMatrix(f"rho(M) is singular relative to its terms (sigma_min = {s_min:.3e})")


def beta_bessel(pair: CMPair, rho: RhoPoly) -> CMPair:
    """``(Qhat^-1 P^T Q^T, (Q^-1 rho(r Q P))^T)``; only densely defined."""
    _need_kind(rho, Kind.BESSEL)
    if pair.backend is Backend.EXACT:
        rho = rho.exact()
    P, Q = pair.P, pair.Q
    try:
        Qi = la.inverse(Q)
    except SingularMatrix as exc:
        raise SingularQ("Q is singular") from exc
    M = Q @ P * la.like(rho.r, P)
    S = rho.on(M)
    try:
        if pair.backend is Backend.FLOAT:
            _check_not_cancelled(S, M, rho)
        Si = la.inverse(S)
    except SingularMatrix as exc:
        raise SingularRho("rho(r Q P) is singular") from exc
    Q_hat = (Qi @ S).T.copy()
    P_hat = (Q @ P @ Si @ Q).T.copy()
    return CMPair(P_hat, Q_hat)


def involution(name, rho: RhoPoly | None = None):
    """Return the map ``pair -> beta(pair)`` for ``name`` in ``("kp", "airy", "bessel")``."""
    if callable(name):
        return name
    if name == "kp":
        return beta_kp
    if name == "airy":
        _need_kind(rho, Kind.AIRY)
        return lambda pair: beta_airy(pair, rho)
    if name == "bessel":
        _need_kind(rho, Kind.BESSEL)
        return lambda pair: beta_bessel(pair, rho)
    raise ValueError(f"unknown involution {name!r}; expected one of {NAMES}")


@dataclass(frozen=True, eq=False)
class TangentVector:
    dP: np.ndarray
    dQ: np.ndarray

    def __post_init__(self):
        dP, dQ = np.asarray(self.dP), np.asarray(self.dQ)
        if dP.shape != dQ.shape or dP.ndim != 2:
            raise ValueError("dP and dQ must be matrices of equal shape")
        object.__setattr__(self, "dP", dP)
        object.__setattr__(self, "dQ", dQ)

    def __add__(self, other):
        return TangentVector(self.dP + other.dP, self.dQ + other.dQ)

    def scaled(self, c):
        return TangentVector(self.dP * c, self.dQ * c)


def symplectic_form(t1: TangentVector, t2: TangentVector):
    """``tr(dP ^ dQ)`` evaluated on ``(t1, t2)``."""
    if t1.dP.shape != t2.dP.shape:
        raise ValueError(f"tangent vectors of size {t1.dP.shape} and {t2.dP.shape}")
    return la.trace(t1.dP @ t2.dQ) - la.trace(t2.dP @ t1.dQ)


def pushforward(map_, pair: CMPair, t: TangentVector, h=FD_STEP, rho=None) -> TangentVector:
    """Central-difference differential of ``map_`` at ``pair`` applied to ``t``."""
    if pair.backend is Backend.EXACT:
        raise ExactBackendUnsupported("finite differences need the float backend")
    if h <= 0:
        raise ValueError("h must be positive")
    beta = involution(map_, rho)
    plus = beta(CMPair(pair.P + h * t.dP, pair.Q + h * t.dQ))
    minus = beta(CMPair(pair.P - h * t.dP, pair.Q - h * t.dQ))
    return TangentVector((plus.P - minus.P) / (2 * h), (plus.Q - minus.Q) / (2 * h))


def spectral_direction(lambdas, alphas, d_lambda, d_alpha) -> TangentVector:
    """Derivative of the canonical pair along a change of spectral data."""
    lam = np.asarray(lambdas, dtype=complex)
    dl = np.asarray(d_lambda, dtype=complex)
    n = lam.size
    diff = lam[:, None] - lam[None, :]
    ddiff = dl[:, None] - dl[None, :]
    off = ~np.eye(n, dtype=bool)
    ratio = np.zeros((n, n), dtype=complex)
    ratio[off] = ddiff[off] / diff[off] ** 2
    dP = -ratio
    dP[np.diag_indices(n)] = np.asarray(d_alpha, dtype=complex) + ratio.sum(axis=1)
    return TangentVector(dP, np.diag(dl))


def conjugation_direction(pair: CMPair, X) -> TangentVector:
    return TangentVector(la.commutator(X, pair.P), la.commutator(X, pair.Q))


def random_tangent(pair: CMPair, rng, gauge=None) -> TangentVector:
    """Random direction tangent to the rank-one locus at ``pair``.

    A spectral-data direction transported by the diagonalising gauge plus
    a conjugation direction, scaled to unit max-entry.
    """
    lam, alp, G = gauge if gauge is not None else diagonal_gauge(pair)
    n = pair.n
    cn = lambda *shape: rng.normal(size=shape) + 1j * rng.normal(size=shape)
    s = spectral_direction(lam, alp, cn(n), cn(n))
    Gi = np.linalg.inv(G)
    t = TangentVector(G @ s.dP @ Gi, G @ s.dQ @ Gi) + conjugation_direction(pair, cn(n, n))
    scale = max(la.max_abs(t.dP), la.max_abs(t.dQ))
    return t.scaled(1 / scale)


def antisymplectic_residual(map_, pair: CMPair, trials: int, seed: int, rho=None, h=FD_STEP) -> float:
    """Max over random tangent pairs of ``|w(b*t1, b*t2) + w(t1, t2)| / max(1, |w(t1, t2)|)``."""
    if pair.backend is Backend.EXACT:
        raise ExactBackendUnsupported("antisymplectic_residual needs the float backend")
    beta = involution(map_, rho)
    rng = np.random.default_rng(seed)
    gauge = diagonal_gauge(pair)
    worst = 0.0
    for _ in range(trials):
        t1, t2 = random_tangent(pair, rng, gauge), random_tangent(pair, rng, gauge)
        w = symplectic_form(t1, t2)
        w_hat = symplectic_form(pushforward(beta, pair, t1, h), pushforward(beta, pair, t2, h))
        worst = max(worst, abs(w_hat + w) / max(1.0, abs(w)))
    return worst
