"""Baker functions and the rank-r Baker functional coefficient vectors.

Conventions
-----------
``rho(t) = t^r - a_{r-1} t^{r-1} - ... - a_1 t - a_0``.  Airy polynomials have
``a_{r-1} = 0``; Bessel polynomials have ``a_{r-1} = r(r-1)/2``.

The k-vector is evaluated as::

    k_j(x, z) = delta_{0j} - c * w2^T (xI - Qhat^T)^{-1} rho_j(R) (zI - Q)^{-1} w1

with ``[P, Q] = I - w1 w2^T`` and

* Airy:   ``c = 1``, ``R = P``,     ``Qhat^T = rho(P) - Q``
* Bessel: ``c = r``, ``R = r P Q``, ``Qhat^T = Q^{-1} rho(r Q P)``

The x-resolvent sits to the left of the z-resolvent.  With the opposite
order the vector no longer satisfies the defining conditions of the pair
built by :func:`~bispectral.core.from_spectral_data` once ``n >= 2``;
``tests/test_baker.py::test_resolvent_order_is_not_interchangeable`` pins
this down.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from . import linalg as la
from .core import CMPair, SpectralData, from_spectral_data
from .errors import (
    InvalidRho,
    PoleInX,
    PoleInZ,
    SingularMatrix,
    SingularQ,
    SingularSystem,
)
from .scalar import Backend, GaussianRational, to_exact


class Kind(str, enum.Enum):
    AIRY = "airy"
    BESSEL = "bessel"


@dataclass(frozen=True)
class RhoPoly:
    """Monic polynomial ``t^r - sum_i a_i t^i`` tagged with its operator kind."""

    a: tuple
    kind: Kind
    validate: bool = field(default=True, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(self.a))
        object.__setattr__(self, "kind", Kind(self.kind))
        if not self.a:
            raise InvalidRho("rho must have order r >= 1")
        if self.validate:
            self.check()

    def check(self):
        r, top = self.r, self.a[-1]
        expected = 0 if self.kind is Kind.AIRY else Fraction(r * (r - 1), 2)
        if isinstance(top, (float, complex)):
            ok = abs(complex(top) - float(expected)) <= 1e-12
        else:
            ok = top == expected
        if not ok:
            raise InvalidRho(
                f"{self.kind.value} normalisation needs a_(r-1) = {expected}, got {top}"
            )

    @property
    def r(self) -> int:
        return len(self.a)

    @classmethod
    def from_coefficients(cls, coeffs, kind, validate=True) -> "RhoPoly":
        """From monic constant-first coefficients ``[c_0, ..., c_{r-1}, 1]``."""
        coeffs = list(coeffs)
        if len(coeffs) < 2 or coeffs[-1] != 1:
            raise InvalidRho("coefficients must be constant-first and monic")
        return cls(tuple(-c for c in coeffs[:-1]), kind, validate)

    def coefficients(self) -> list:
        """Constant-first coefficients of rho."""
        return [-ai for ai in self.a] + [1]

    def __call__(self, t):
        return la.polyval(self.coefficients(), t)

    def on(self, M):
        return la.matrix_polynomial(self.coefficients(), M)

    def exact(self) -> "RhoPoly":
        return RhoPoly(tuple(to_exact(v) for v in self.a), self.kind, self.validate)


PRESETS = {
    "airy2": RhoPoly((0, 0), Kind.AIRY),
    "bessel2": RhoPoly((1, 1), Kind.BESSEL),
}


def rho_reduced(rho: RhoPoly, j: int) -> list:
    """Constant-first coefficients of ``rho_j(t) = t^(r-1-j) - sum_{i=j+1}^{top} a_i t^(i-1-j)``.

    ``top`` is ``r - 2`` for Airy and ``r - 1`` for Bessel polynomials.
    """
    r = rho.r
    if not 0 <= j <= r - 1:
        raise ValueError(f"j must lie in [0, {r - 1}], got {j}")
    top = r - 2 if rho.kind is Kind.AIRY else r - 1
    c = [0] * (r - j)
    c[r - 1 - j] = 1
    for i in range(j + 1, top + 1):
        c[i - 1 - j] = c[i - 1 - j] - rho.a[i]
    return c


def _backend_of_scalars(*vals) -> Backend:
    return Backend.EXACT if any(isinstance(v, (GaussianRational, Fraction)) for v in vals) else Backend.FLOAT


def _scalar(v, backend):
    return to_exact(v) if backend is Backend.EXACT else complex(v)


def _companion(rho, top, backend):
    r = rho.r
    B = la.zeros(r, r, backend)
    for k in range(1, r):
        B[k, k - 1] = _scalar(1, backend)
    for i in range(r):
        B[i, r - 1] = _scalar(rho.a[i], backend)
    B[0, r - 1] = B[0, r - 1] + top
    return B


def b_matrix_airy(rho: RhoPoly, x, z, backend=None):
    """Connection matrix with ``d/dz f = f B`` on ``ker(rho(d) - x)``.

    Subdiagonal ones and last column ``(x + z + a_0, a_1, ..., a_{r-1})``.
    """
    backend = Backend(backend) if backend else _backend_of_scalars(x, z, *rho.a)
    return _companion(rho, _scalar(x, backend) + _scalar(z, backend), backend)


def b_matrix_bessel(rho: RhoPoly, x, u, backend=None):
    """Subdiagonal ones and last column ``(a_0 + x u, a_1, ..., a_{r-1})``."""
    backend = Backend(backend) if backend else _backend_of_scalars(x, u, *rho.a)
    return _companion(rho, _scalar(x, backend) * _scalar(u, backend), backend)


def _require_invertible_q(Q):
    try:
        return la.inverse(Q)
    except SingularMatrix as exc:
        raise SingularQ("Q is singular; the Bessel construction needs Q invertible") from exc


def hat_q_transpose(pair: CMPair, rho: RhoPoly, kind=None):
    """``Qhat^T``: ``rho(P) - Q`` (Airy) or ``Q^-1 rho(r Q P)`` (Bessel)."""
    kind = Kind(kind or rho.kind)
    P, Q = pair.P, pair.Q
    if kind is Kind.AIRY:
        return rho.on(P) - Q
    Qi = _require_invertible_q(Q)
    return Qi @ rho.on(Q @ P * la.like(rho.r, P))


def _reduced_argument(pair, rho, kind):
    if kind is Kind.AIRY:
        return pair.P, 1
    r = rho.r
    return pair.P @ pair.Q * la.like(r, pair.P), r


def _left_row(pair, rho, kind, x, w2):
    """``w2^T (xI - Qhat^T)^{-1}`` as a vector."""
    n = pair.n
    Mx = la.identity(n, pair.backend) * la.like(x, pair.P) - hat_q_transpose(pair, rho, kind)
    try:
        return la.solve(Mx.T.copy(), w2)
    except SingularMatrix as exc:
        raise PoleInX(f"x = {x} is a zero of tau (eigenvalue of Qhat^T)") from exc


def _k_vector(pair: CMPair, rho: RhoPoly, kind: Kind, x, z):
    if kind is Kind.BESSEL:
        _require_invertible_q(pair.Q)
    w1, w2 = pair.factor()
    n, backend = pair.n, pair.backend
    if backend is Backend.EXACT:
        rho = rho.exact()
    z = la.like(z, pair.P)
    x = la.like(x, pair.P)
    try:
        y = la.solve(la.identity(n, backend) * z - pair.Q, w1)
    except SingularMatrix as exc:
        raise PoleInZ(f"z = {z} is an eigenvalue of Q") from exc
    u = _left_row(pair, rho, kind, x, w2)
    R, c = _reduced_argument(pair, rho, kind)
    out = []
    for j in range(rho.r):
        val = la.like(c, pair.P) * (u @ (la.matrix_polynomial(rho_reduced(rho, j), R) @ y))
        out.append((la.like(1, pair.P) if j == 0 else la.like(0, pair.P)) - val)
    return np.array(out, dtype=object if backend is Backend.EXACT else complex)


def airy_k(pair: CMPair, rho: RhoPoly, x, z) -> np.ndarray:
    """Airy k-vector ``(k_0, ..., k_{r-1})`` at ``(x, z)``."""
    if rho.kind is not Kind.AIRY:
        raise InvalidRho("airy_k needs an Airy-normalised rho")
    return _k_vector(pair, rho, Kind.AIRY, x, z)


def bessel_k(pair: CMPair, rho: RhoPoly, x, z) -> np.ndarray:
    """Bessel k-vector in the transformed variables (``x^r``, ``z^r`` are the caller's job)."""
    if rho.kind is not Kind.BESSEL:
        raise InvalidRho("bessel_k needs a Bessel-normalised rho")
    return _k_vector(pair, rho, Kind.BESSEL, x, z)


def k_vector(pair, rho, x, z):
    return airy_k(pair, rho, x, z) if rho.kind is Kind.AIRY else bessel_k(pair, rho, x, z)


def bessel_k_raw(pair: CMPair, rho: RhoPoly, x, z) -> np.ndarray:
    """Bessel k-vector at untransformed ``(x, z)``, i.e. ``k(x^r, z^r)``."""
    r = rho.r
    return bessel_k(pair, rho, x**r, z**r)


class PsiValue(NamedTuple):
    """Baker function ``exp(exponent) * rational``.

    ``value`` is ``None`` in the exact backend, where the exponential is kept
    symbolic.
    """

    value: complex | None
    rational: object
    exponent: object


def wilson_rational(pair: CMPair, x, z):
    """``Det(I - (zI - Q)^{-1} (xI - P)^{-1})``."""
    n, backend = pair.n, pair.backend
    I = la.identity(n, backend)
    x, z = la.like(x, pair.P), la.like(z, pair.P)
    try:
        Rz = la.inverse(I * z - pair.Q)
    except SingularMatrix as exc:
        raise PoleInZ(f"z = {z} is an eigenvalue of Q") from exc
    try:
        Rx = la.inverse(I * x - pair.P)
    except SingularMatrix as exc:
        raise PoleInX(f"x = {x} is an eigenvalue of P") from exc
    return la.determinant(I - Rz @ Rx)


def wilson_psi(pair: CMPair, x, z) -> PsiValue:
    rat = wilson_rational(pair, x, z)
    exponent = la.like(x, pair.P) * la.like(z, pair.P)
    if pair.backend is Backend.EXACT:
        return PsiValue(None, rat, exponent)
    return PsiValue(complex(np.exp(exponent) * rat), rat, exponent)


# --- independent checks ------------------------------------------------------


def _condition_scale(kind, rho, lam):
    if kind is Kind.AIRY:
        return 1
    if lam == 0:
        raise SingularQ("Bessel conditions need nonzero lambda_i")
    return rho.r * lam


def _b_matrix(kind, rho, x, u, backend):
    if kind is Kind.AIRY:
        return b_matrix_airy(rho, x, u, backend)
    return b_matrix_bessel(rho, x, u, backend)


def k_solver_oracle(data: SpectralData, rho: RhoPoly, kind, x, z) -> np.ndarray:
    """k-vector from a direct solve of the residue equations.

    Writes ``k = e_1 + sum_i v_i(x) / (z - lambda_i)`` and solves, for every
    condition ``i``::

        e_1 = -B(x, lambda_i) v_i / s_i + gamma_i v_i - sum_{l != i} v_l / (lambda_i - lambda_l)

    with ``s_i = 1`` (Airy) or ``r lambda_i`` (Bessel).  No matrix pair is
    involved, which makes this an independent check of :func:`airy_k` and
    :func:`bessel_k`.
    """
    kind = Kind(kind)
    backend = data.backend
    if backend is Backend.EXACT:
        rho = rho.exact()
    lam = [_scalar(v, backend) for v in data.lambdas]
    gam = [_scalar(v, backend) for v in data.gammas()]
    x, z = _scalar(x, backend), _scalar(z, backend)
    n, r = len(lam), rho.r
    A = la.zeros(n * r, n * r, backend)
    rhs = la.zeros(n * r, 1, backend)
    I_r = la.identity(r, backend)
    for i in range(n):
        s = _condition_scale(kind, rho, lam[i])
        block = -_b_matrix(kind, rho, x, lam[i], backend) / s + I_r * gam[i]
        A[i * r:(i + 1) * r, i * r:(i + 1) * r] = block
        for l in range(n):
            if l != i:
                A[i * r:(i + 1) * r, l * r:(l + 1) * r] = I_r * (-1 / (lam[i] - lam[l]))
        rhs[i * r, 0] = _scalar(1, backend)
    try:
        v = la.solve(A, rhs)[:, 0].reshape(n, r)
    except SingularMatrix as exc:
        raise SingularSystem(f"residue system is singular at x = {x}") from exc
    k = [_scalar(1 if j == 0 else 0, backend) for j in range(r)]
    for i in range(n):
        if z == lam[i]:
            raise PoleInZ(f"z = {z} coincides with lambda_{i}")
        for j in range(r):
            k[j] = k[j] + v[i, j] / (z - lam[i])
    return np.array(k, dtype=object if backend is Backend.EXACT else complex)


def _poly_derivative(coeffs):
    return [k * coeffs[k] for k in range(1, len(coeffs))] or [0]


def numerator_polynomials(pair: CMPair, rho: RhoPoly, kind, x):
    """Coefficients (constant-first, one row per component) of ``q(z) k_j(x, z)``.

    ``q(z) = det(zI - Q)`` and ``q(z)(zI - Q)^{-1} = adj(zI - Q)`` come from
    the Faddeev-LeVerrier recursion, so the rows are exact polynomials in z.
    """
    kind = Kind(kind)
    if kind is Kind.BESSEL:
        _require_invertible_q(pair.Q)
    if pair.backend is Backend.EXACT:
        rho = rho.exact()
    w1, w2 = pair.factor()
    q, adj = la.charpoly_adjugate(pair.Q)
    u = _left_row(pair, rho, kind, la.like(x, pair.P), w2)
    R, c = _reduced_argument(pair, rho, kind)
    n = pair.n
    rows = []
    for j in range(rho.r):
        left = (u @ la.matrix_polynomial(rho_reduced(rho, j), R)) * la.like(c, pair.P)
        row = [(q[k] if j == 0 else la.like(0, pair.P)) for k in range(n + 1)]
        for k in range(n):
            row[k] = row[k] - left @ (adj[k] @ w1)
        rows.append(row)
    return rows


def condition_residual(data: SpectralData, rho: RhoPoly, kind, xs, pair: CMPair | None = None) -> np.ndarray:
    """Residual of every condition at every sample ``x``.

    Applies ``(d/dz + B(x, lambda_i)/s_i - alpha_i)`` to ``g = q(z) k(x, z)``
    at ``z = lambda_i`` and returns the max-norm divided by
    ``|prod_{l != i} (lambda_i - lambda_l)|``, shape ``(n, len(xs))``.

    ``pair`` defaults to ``from_spectral_data(data)``; pass another pair to
    test the k-vector of one pair against the conditions of ``data``.
    """
    kind = Kind(kind)
    if pair is None:
        pair = from_spectral_data(data)
    backend = pair.backend
    lam = [_scalar(v, backend) for v in data.lambdas]
    alp = [_scalar(v, backend) for v in data.alphas]
    n = len(lam)
    out = np.zeros((n, len(xs)))
    for col, x in enumerate(xs):
        rows = numerator_polynomials(pair, rho, kind, x)
        drows = [_poly_derivative(row) for row in rows]
        for i in range(n):
            g = np.array([la.polyval(row, lam[i]) for row in rows], dtype=object)
            dg = np.array([la.polyval(row, lam[i]) for row in drows], dtype=object)
            s = _condition_scale(kind, rho, lam[i])
            B = _b_matrix(kind, rho, _scalar(x, backend), lam[i], backend)
            res = dg + (B @ g) / s - g * alp[i]
            denom = 1
            for l in range(n):
                if l != i:
                    denom = denom * (lam[i] - lam[l])
            out[i, col] = max(abs(complex(v)) for v in res) / abs(complex(denom))
    return out


def _exact_max_abs(M):
    return max((max(abs(v.re), abs(v.im)) for v in np.asarray(M).flat), default=Fraction(0))


def a_matrix(pair: CMPair, rho: RhoPoly, kind, x, include_a0=True):
    """Block matrix acting on ``C^r (x) C^n`` in blocks of length n."""
    kind = Kind(kind)
    n, r, backend = pair.n, rho.r, pair.backend
    if backend is Backend.EXACT:
        rho = rho.exact()
    P, Q = pair.P, pair.Q
    I = la.identity(n, backend)
    x = la.like(x, P)
    A = la.zeros(n * r, n * r, backend)
    if kind is Kind.AIRY:
        coupling = la.zeros(r, r, backend)
        coupling[0, r - 1] = la.like(1, P)
        B0 = b_matrix_airy(rho, x, 0, backend)
        if not include_a0:
            B0[0, r - 1] = B0[0, r - 1] - la.like(rho.a[0], P)
        blocks = lambda j, k: I * B0[j, k] - (P if j == k else 0) + Q * coupling[j, k]
    else:
        Qi = _require_invertible_q(Q)
        D1 = b_matrix_bessel(rho, 0, 0, backend)
        rr = la.like(r, P)
        blocks = lambda j, k: (
            I * (x / rr if (j, k) == (0, r - 1) else 0) - (P if j == k else 0) + Qi * (D1[j, k] / rr)
        )
    for j in range(r):
        for k in range(r):
            A[j * n:(j + 1) * n, k * n:(k + 1) * n] = blocks(j, k)
    return A


def verify_a_identity(pair: CMPair, rho: RhoPoly, kind, x, include_a0=True):
    """Deviation of ``A [rho_j(.)]_j`` from ``[xI - Qhat^T; 0; ...; 0]``.

    Returns a float for the float backend and an exact Fraction (max of
    ``|re|``, ``|im|`` over entries) for the exact backend.
    """
    kind = Kind(kind)
    n, r, backend = pair.n, rho.r, pair.backend
    if backend is Backend.EXACT:
        rho = rho.exact()
    A = a_matrix(pair, rho, kind, x, include_a0)
    R, c = (pair.P, 1) if kind is Kind.AIRY else (pair.Q @ pair.P * la.like(r, pair.P), r)
    X = la.zeros(n * r, n, backend)
    for j in range(r):
        X[j * n:(j + 1) * n, :] = la.matrix_polynomial(rho_reduced(rho, j), R) * la.like(c, pair.P)
    rhs = la.zeros(n * r, n, backend)
    rhs[:n, :] = la.identity(n, backend) * la.like(x, pair.P) - hat_q_transpose(pair, rho, kind)
    residual = A @ X - rhs
    if backend is Backend.EXACT:
        return _exact_max_abs(residual)
    return la.max_abs(residual)
