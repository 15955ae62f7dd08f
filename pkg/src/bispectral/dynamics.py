"""Calogero-Moser flows, tau functions and pole trajectories."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from .baker import PRESETS, Kind, RhoPoly, hat_q_transpose
from .core import CMPair
from .errors import BispectralError
from .involution import beta_bessel
from .scalar import Backend

COLLISION_FACTOR = 10.0


def flow(pair: CMPair, m: int, t) -> CMPair:
    """``(P - t m Q^(m-1), Q)``."""
    if m < 1:
        raise ValueError("flow index m must be >= 1")
    t = la.like(t, pair.P)
    Qm = la.matrix_polynomial([0] * (m - 1) + [1], pair.Q)
    return CMPair(pair.P - Qm * (t * m), pair.Q)


def q_hat_t(pair: CMPair, rho: RhoPoly, kind, m: int, t):
    """``Qhat`` of the flowed pair under the involution of ``kind``."""
    return hat_q_transpose(flow(pair, m, t), rho, kind).T.copy()


def tau(pair: CMPair, rho: RhoPoly, kind, m: int, t, x):
    """``det(xI - Qhat_t)``; for Bessel, ``x`` is the transformed variable."""
    Qh = q_hat_t(pair, rho, kind, m, t)
    return la.determinant(la.identity(pair.n, pair.backend) * la.like(x, Qh) - Qh)


def hamiltonian(pair: CMPair, rho: RhoPoly, kind, m: int):
    """``tr(Qhat^m)``."""
    Qh = q_hat_t(pair, rho, kind, 1, 0)
    return la.trace(la.matrix_polynomial([0] * m + [1], Qh))


@dataclass(frozen=True)
class FlowSpec:
    m: int
    t_grid: tuple

    def __post_init__(self):
        grid = tuple(float(t) for t in self.t_grid)
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if not grid:
            raise ValueError("t_grid is empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("t_grid must be strictly increasing")
        object.__setattr__(self, "t_grid", grid)

    @classmethod
    def linspace(cls, m, t0, t1, steps):
        if steps < 1:
            raise ValueError("steps must be >= 1")
        return cls(m, tuple(np.linspace(t0, t1, steps)) if steps > 1 else (float(t0),))


@dataclass
class Trajectory:
    """Pole positions per time; ``poles[k, i]`` follows particle ``i``.

    Rows where the computation failed hold NaN and carry an ``error:...`` flag.
    """

    times: np.ndarray
    poles: np.ndarray
    flags: list = field(default_factory=list)

    def row_flags(self, k) -> str:
        return ";".join(f for i, f in self.flags if i == k)

    def to_csv(self, path):
        n = self.poles.shape[1]
        header = ["t"] + [f"pole{i + 1}_{part}" for i in range(n) for part in ("re", "im")] + ["collision_flag"]
        fmt = lambda v: format(v, ".17g")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for k, t in enumerate(self.times):
                row = [fmt(t)]
                for p in self.poles[k]:
                    row += [fmt(p.real), fmt(p.imag)]
                w.writerow(row + [self.row_flags(k)])


def _min_gap(values):
    n = len(values)
    if n < 2:
        return np.inf
    d = np.abs(values[:, None] - values[None, :])
    return d[~np.eye(n, dtype=bool)].min()


def match_poles(previous, current):
    """Greedy nearest-neighbour reordering of ``current`` to follow ``previous``."""
    n = len(previous)
    dist = np.abs(previous[:, None] - current[None, :])
    out = np.empty(n, dtype=complex)
    free_prev, free_cur = set(range(n)), set(range(n))
    for flat in np.argsort(dist, axis=None, kind="stable"):
        i, j = divmod(int(flat), n)
        if i in free_prev and j in free_cur:
            out[i] = current[j]
            free_prev.discard(i)
            free_cur.discard(j)
    return out


def pole_trajectories(pair: CMPair, rho: RhoPoly, kind, spec: FlowSpec) -> Trajectory:
    """Eigenvalues of ``Qhat_t`` along the grid, matched across time steps.

    Flags per row: ``ambiguous`` when some pole moved further than half the
    previous minimum gap, ``collision`` when the minimum gap falls below that
    threshold divided by ``COLLISION_FACTOR``, ``error:<Name>`` on a
    per-point domain failure.
    """
    if pair.backend is Backend.EXACT:
        pair = pair.to_float()
    times = np.asarray(spec.t_grid)
    poles = np.full((len(times), pair.n), np.nan + 0j)
    flags = []
    prev = None
    for k, t in enumerate(times):
        try:
            cur = la.eigenvalues(q_hat_t(pair, rho, kind, spec.m, t))
        except BispectralError as exc:
            flags.append((k, f"error:{type(exc).__name__}"))
            continue
        if prev is not None:
            cur = match_poles(prev, cur)
            threshold = _min_gap(prev) / 2
            if np.abs(cur - prev).max() > threshold:
                flags.append((k, "ambiguous"))
            if _min_gap(cur) < threshold / COLLISION_FACTOR:
                flags.append((k, "collision"))
        poles[k] = cur
        prev = cur
    return Trajectory(times, poles, flags)


# --- reduced coordinates ----------------------------------------------------


def reduced_reference_h1(kind, coords, rho: RhoPoly | None = None):
    """Closed-form first Hamiltonians in particle coordinates.

    * Bessel, one particle, ``coords = (lam, gam)``: ``rho(r lam gam) / lam``
      (``rho`` defaults to ``t^2 - t - 1``).
    * Airy, two particles, ``(l1, l2, g1, g2)``, ``rho = t^2``.
    * Bessel, two particles, ``(l1, l2, g1, g2)``, ``rho = t^2 - t - 1``.
    """
    kind = Kind(kind)
    coords = tuple(coords)
    if kind is Kind.BESSEL and len(coords) == 2:
        rho = rho or PRESETS["bessel2"]
        lam, gam = coords
        return rho(rho.r * lam * gam) / lam
    if len(coords) == 4:
        l1, l2, g1, g2 = coords
        if kind is Kind.AIRY:
            return g1**2 + g2**2 - l1 - l2 - 2 / (l2 - l1) ** 2
        return (
            -(l1 + l2) / (l1 * l2) - g1 + l1 * g1**2 - g2 + l2 * g2**2
            + 2 * (l1 * g1 - l2 * g2) / (l2 - l1)
        )
    raise ValueError(f"no reduced formula for {kind.value} with coordinates {coords}")


def bessel_one_particle_position(c1, c2, t):
    """Closed-form position for one Bessel particle with ``hat lambda = c1``, ``hat gamma = c2 + t``."""
    return 4 * c1 * t**2 + (8 * c1 * c2 - 2) * t - 1 / c1 - 2 * c2 + 4 * c1 * c2**2


def bessel_one_particle_state(lam0, gam0, t, rho: RhoPoly | None = None):
    """``(lam, gam)`` at time ``t`` by moving linearly on the involuted side."""
    rho = rho or PRESETS["bessel2"]
    hat = beta_bessel(CMPair(np.array([[gam0]], complex), np.array([[lam0]], complex)), rho)
    state = beta_bessel(flow(hat, 1, -t), rho)
    return complex(state.Q[0, 0]), complex(state.P[0, 0])


def eom_check(kind, coords, h=1e-4, rho: RhoPoly | None = None) -> float:
    """Max deviation of central-difference velocities from the one-particle Bessel equations.

    Only meaningful for ``rho = t^2 - t - 1``.
    """
    if Kind(kind) is not Kind.BESSEL or len(coords) != 2:
        raise ValueError("eom_check supports the one-particle Bessel system only")
    lam, gam = (complex(c) for c in coords)
    if lam == 0:
        raise ValueError("lambda must be nonzero")
    plus = bessel_one_particle_state(lam, gam, h, rho)
    minus = bessel_one_particle_state(lam, gam, -h, rho)
    lam_dot = (plus[0] - minus[0]) / (2 * h)
    gam_dot = (plus[1] - minus[1]) / (2 * h)
    return max(abs(lam_dot - (8 * gam * lam - 2)), abs(gam_dot - (-4 * gam**2 - lam**-2)))
