"""Dense linear algebra over the float and exact backends.

Matrices are plain 2-D numpy arrays: ``complex128`` for the float backend,
``object`` arrays of :class:`~bispectral.scalar.GaussianRational` for the
exact backend.  Build them with :func:`matrix` so mixed inputs are rejected.
"""
from __future__ import annotations

import numbers
from fractions import Fraction

import numpy as np

from .errors import (
    ExactBackendUnsupported,
    MixedBackendError,
    NoConvergence,
    SingularMatrix,
)
from .scalar import Backend, GaussianRational, to_exact

SINGULAR_RTOL = 1e-12
DK_MAX_ITER = 500
DK_TOL = 1e-12
MAX_EIG_N = 32


def _is_float_scalar(v):
    return isinstance(v, (float, complex, np.floating, np.complexfloating))


def _is_exact_scalar(v):
    return isinstance(v, (GaussianRational, Fraction))


def matrix(entries, backend=None) -> np.ndarray:
    """Build a matrix for one backend.

    ``backend`` defaults to exact when any entry is a Fraction or
    GaussianRational, float otherwise.  Integers are valid in both.
    """
    if isinstance(entries, np.ndarray) and entries.dtype != object:
        if backend is not None and Backend(backend) is Backend.EXACT:
            if not np.issubdtype(entries.dtype, np.integer):
                raise MixedBackendError("float array cannot become an exact matrix")
        else:
            out = np.array(entries, dtype=complex)
            if out.ndim != 2:
                raise ValueError("matrix must be 2-D")
            return out
    rows = [list(r) for r in entries]
    if not rows or any(len(r) != len(rows[0]) for r in rows) or not rows[0]:
        raise ValueError("matrix must be a non-empty rectangular array")
    flat = [v for r in rows for v in r]
    has_float = any(_is_float_scalar(v) for v in flat)
    has_exact = any(_is_exact_scalar(v) for v in flat)
    if has_float and has_exact:
        raise MixedBackendError("matrix mixes exact and floating-point entries")
    if backend is None:
        backend = Backend.EXACT if has_exact else Backend.FLOAT
    backend = Backend(backend)
    if backend is Backend.FLOAT:
        return np.array(rows, dtype=complex)
    if has_float:
        raise MixedBackendError("floating-point entries in an exact matrix")
    out = np.empty((len(rows), len(rows[0])), dtype=object)
    for i, r in enumerate(rows):
        for j, v in enumerate(r):
            out[i, j] = to_exact(v)
    return out


def backend_of(M) -> Backend:
    return Backend.EXACT if np.asarray(M).dtype == object else Backend.FLOAT


def same_backend(*mats) -> Backend:
    kinds = {backend_of(m) for m in mats}
    if len(kinds) != 1:
        raise MixedBackendError("operands use different backends")
    return kinds.pop()


def identity(n, backend=Backend.FLOAT) -> np.ndarray:
    if Backend(backend) is Backend.FLOAT:
        return np.eye(n, dtype=complex)
    out = zeros(n, n, backend)
    for i in range(n):
        out[i, i] = GaussianRational(1)
    return out


def zeros(n, m=None, backend=Backend.FLOAT) -> np.ndarray:
    m = n if m is None else m
    if Backend(backend) is Backend.FLOAT:
        return np.zeros((n, m), dtype=complex)
    out = np.empty((n, m), dtype=object)
    out.fill(GaussianRational(0))
    return out


def like(value, M):
    """Coerce a scalar to the backend of ``M``."""
    if backend_of(M) is Backend.EXACT:
        return to_exact(value)
    return complex(value)


def to_float_matrix(M) -> np.ndarray:
    if backend_of(M) is Backend.FLOAT:
        return M
    return np.array([[complex(v) for v in row] for row in M], dtype=complex)


def to_exact_matrix(M, max_denominator=None) -> np.ndarray:
    """Exact copy of ``M``; float entries are converted via ``Fraction``."""
    if backend_of(M) is Backend.EXACT:
        return M
    out = np.empty(M.shape, dtype=object)
    for idx, v in np.ndenumerate(M):
        re, im = Fraction(float(v.real)), Fraction(float(v.imag))
        if max_denominator:
            re, im = re.limit_denominator(max_denominator), im.limit_denominator(max_denominator)
        out[idx] = GaussianRational(re, im)
    return out


def _require_square(M, what="matrix"):
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{what} must be square, got shape {M.shape}")


def max_abs(M) -> float:
    """Largest entry modulus (as a float, for either backend)."""
    M = np.asarray(M)
    if M.size == 0:
        return 0.0
    if backend_of(M) is Backend.EXACT:
        return max(abs(complex(v)) for v in M.flat)
    return float(np.max(np.abs(M)))


def is_zero(M) -> bool:
    return all(v == 0 for v in np.asarray(M).flat)


def _bareiss_det(M):
    A = [list(r) for r in M]
    n = len(A)
    sign = 1
    prev = GaussianRational(1)
    for k in range(n - 1):
        if A[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if A[i][k] != 0), None)
            if swap is None:
                return GaussianRational(0)
            A[k], A[swap] = A[swap], A[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) / prev
        prev = A[k][k]
    return A[n - 1][n - 1] if sign > 0 else -A[n - 1][n - 1]


def determinant(M):
    """Determinant: LAPACK LU for floats, fraction-free Bareiss when exact."""
    M = np.asarray(M)
    _require_square(M)
    if backend_of(M) is Backend.EXACT:
        return _bareiss_det(M)
    return complex(np.linalg.det(M))


def reciprocal_condition(M) -> float:
    """``sigma_min / sigma_max`` (0 for the zero matrix)."""
    s = np.linalg.svd(np.asarray(M, dtype=complex), compute_uv=False)
    return float(s[-1] / s[0]) if s[0] > 0 else 0.0


def check_invertible(M):
    """Raise SingularMatrix if ``M`` is (numerically) singular."""
    M = np.asarray(M)
    _require_square(M)
    if backend_of(M) is Backend.EXACT:
        d = _bareiss_det(M)
        if d == 0:
            raise SingularMatrix("matrix is exactly singular", det_abs=0)
        return d
    d = complex(np.linalg.det(M))
    if not np.isfinite(d) or d == 0 or not reciprocal_condition(M) >= SINGULAR_RTOL:
        raise SingularMatrix(f"matrix is singular to working precision (|det| = {abs(d):.3e})", det_abs=abs(d))
    return d


def _exact_solve(M, B):
    n = M.shape[0]
    A = [list(M[i]) + list(B[i]) for i in range(n)]
    width = len(A[0])
    for k in range(n):
        piv = next((i for i in range(k, n) if A[i][k] != 0), None)
        if piv is None:
            raise SingularMatrix("matrix is exactly singular", det_abs=0)
        A[k], A[piv] = A[piv], A[k]
        inv = GaussianRational(1) / A[k][k]
        A[k] = [v * inv for v in A[k]]
        for i in range(n):
            if i != k and A[i][k] != 0:
                f = A[i][k]
                A[i] = [a - f * b for a, b in zip(A[i], A[k])]
    out = np.empty((n, width - n), dtype=object)
    for i in range(n):
        out[i, :] = A[i][n:]
    return out


def solve(M, b):
    """Solve ``M y = b`` for a vector or matrix right-hand side."""
    M = np.asarray(M)
    b = np.asarray(b)
    _require_square(M)
    vector = b.ndim == 1
    B = b.reshape(-1, 1) if vector else b
    if backend_of(M) is Backend.EXACT:
        if backend_of(B) is not Backend.EXACT:
            raise MixedBackendError("exact matrix with float right-hand side")
        out = _exact_solve(M, B)
    else:
        check_invertible(M)
        out = np.linalg.solve(M, B.astype(complex))
    return out[:, 0] if vector else out


def inverse(M):
    M = np.asarray(M)
    _require_square(M)
    return solve(M, identity(M.shape[0], backend_of(M)))


def matrix_polynomial(coeffs, M):
    """Evaluate ``sum(c_k M^k)`` by Horner's rule (coefficients constant-first)."""
    coeffs = list(coeffs)
    if not coeffs:
        raise ValueError("empty coefficient list")
    M = np.asarray(M)
    _require_square(M)
    I = identity(M.shape[0], backend_of(M))
    R = I * like(coeffs[-1], M)
    for c in reversed(coeffs[:-1]):
        R = R @ M + I * like(c, M)
    return R


def charpoly_adjugate(M):
    """Faddeev-LeVerrier recursion.

    Returns ``(c, N)`` where ``c`` holds the coefficients of
    ``det(zI - M)`` constant-first (monic, length n+1) and ``N`` the
    matrices with ``adj(zI - M) = sum_k N[k] z^k`` (k = 0..n-1).
    """
    M = np.asarray(M)
    _require_square(M)
    n = M.shape[0]
    I = identity(n, backend_of(M))
    exact = backend_of(M) is Backend.EXACT
    c = [None] * (n + 1)
    c[n] = like(1, M)
    N = [None] * n
    Mk = I
    for k in range(1, n + 1):
        N[n - k] = Mk
        AM = M @ Mk
        tr = sum(AM[i, i] for i in range(n))
        c[n - k] = -tr / k if exact else complex(-tr / k)
        Mk = AM + I * c[n - k]
    return c, N


def charpoly(M):
    return charpoly_adjugate(M)[0]


def polyval(coeffs, z):
    """Horner evaluation of a constant-first coefficient list."""
    acc = 0
    for c in reversed(list(coeffs)):
        acc = acc * z + c
    return acc


def durand_kerner(coeffs, tol=DK_TOL, max_iter=DK_MAX_ITER) -> np.ndarray:
    """All roots of a polynomial by Weierstrass/Durand-Kerner iteration.

    ``coeffs`` is constant-first; the leading coefficient must be nonzero.
    """
    c = np.asarray(coeffs, dtype=complex)
    if c[-1] == 0:
        raise ValueError("leading coefficient is zero")
    c = c / c[-1]
    n = len(c) - 1
    if n == 0:
        return np.zeros(0, dtype=complex)
    if n == 1:
        return np.array([-c[0]])
    radius = 1.0 + float(np.max(np.abs(c[:-1])))
    z = radius * np.exp(1j * (2 * np.pi * np.arange(n) / n + 0.4))
    highest_first = c[::-1]
    for _ in range(max_iter):
        p = np.polyval(highest_first, z)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        denom = np.prod(diff, axis=1)
        step = p / denom
        z = z - step
        if np.all(np.abs(step) <= tol * np.maximum(1.0, np.abs(z))):
            return z
    raise NoConvergence(f"Durand-Kerner did not converge in {max_iter} iterations")


def sort_spectrum(values) -> np.ndarray:
    values = np.asarray(values, dtype=complex)
    order = np.lexsort((values.imag, values.real))
    return values[order]


def eigenvalues(M) -> np.ndarray:
    """Eigenvalues via Faddeev-LeVerrier + Durand-Kerner, sorted by (re, im)."""
    M = np.asarray(M)
    _require_square(M)
    if backend_of(M) is Backend.EXACT:
        raise ExactBackendUnsupported("eigenvalues require the float backend")
    if M.shape[0] > MAX_EIG_N:
        raise ValueError(f"eigenvalues supports n <= {MAX_EIG_N}")
    return sort_spectrum(durand_kerner(charpoly(M)))


def commutator(A, B):
    return A @ B - B @ A


def trace(M):
    M = np.asarray(M)
    return sum(M[i, i] for i in range(M.shape[0]))


# --- JSON ------------------------------------------------------------------


def scalar_to_json(v):
    if isinstance(v, GaussianRational):
        return [str(v.re), str(v.im)]
    v = complex(v)
    return [v.real, v.imag]


def scalar_from_json(obj, backend=None):
    re, im = obj
    exact = isinstance(re, str) or isinstance(im, str)
    if backend is not None and Backend(backend) is Backend.FLOAT:
        exact = False
    if exact:
        return GaussianRational(Fraction(str(re)), Fraction(str(im)))
    return complex(float(re), float(im))


def matrix_to_json(M) -> dict:
    M = np.asarray(M)
    _require_square(M)
    return {"n": int(M.shape[0]), "entries": [scalar_to_json(v) for v in M.flat]}


def matrix_from_json(obj) -> np.ndarray:
    n = int(obj["n"])
    entries = obj["entries"]
    if len(entries) != n * n:
        raise ValueError(f"expected {n * n} entries, got {len(entries)}")
    vals = [scalar_from_json(e) for e in entries]
    kinds = {isinstance(v, GaussianRational) for v in vals}
    if len(kinds) > 1:
        raise MixedBackendError("matrix JSON mixes exact and float entries")
    return matrix([vals[i * n:(i + 1) * n] for i in range(n)])


def is_scalar(v) -> bool:
    return isinstance(v, (numbers.Number, GaussianRational))
