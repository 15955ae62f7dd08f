"""Acceptance criteria, one test each.

Every test prints a ``[ACn] PASS|FAIL`` line (also collected into the pytest
terminal summary) and then asserts the criterion at its stated tolerance.
Run on its own with ``pytest tests/test_acceptance.py -v``.
"""
from fractions import Fraction

import numpy as np

from bispectral import linalg as la
from bispectral.baker import (
    PRESETS,
    Kind,
    RhoPoly,
    condition_residual,
    k_solver_oracle,
    k_vector,
    verify_a_identity,
    wilson_rational,
)
from bispectral.core import SpectralData, from_spectral_data, random_pair, random_spectral_data
from bispectral.dynamics import (
    FlowSpec,
    bessel_one_particle_position,
    eom_check,
    hamiltonian,
    pole_trajectories,
    q_hat_t,
    reduced_reference_h1,
    tau,
)
from bispectral.errors import PoleInX, PoleInZ
from bispectral.involution import antisymplectic_residual, beta_airy, beta_bessel, beta_kp, involution
from bispectral.scalar import Backend, exact_random

from conftest import ACCEPTANCE_LINES, crandn


def report(tag, ok, detail):
    line = f"[{tag}] {'PASS' if ok else 'FAIL'}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def rel(a, b):
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    return float(np.abs(a - b).max() / max(1.0, np.abs(b).max()))


def random_rho(kind, r, rng):
    a = [complex(*rng.uniform(-1, 1, 2)) for _ in range(r - 1)]
    top = 0 if kind is Kind.AIRY else r * (r - 1) // 2
    return RhoPoly(tuple(a) + (top,), kind)


def conjugated(pair, rng, eps=0.3):
    n = pair.n
    return pair.conjugate(np.eye(n) + eps * crandn(rng, n, n))


def finite_samples(f, rng, count, scale=2.0):
    """Yields values of ``f(x, z)`` at ``count`` random points, skipping poles."""
    got = 0
    while got < count:
        x, z = crandn(rng, 2) * scale
        try:
            yield f(x, z)
        except (PoleInX, PoleInZ):
            continue
        got += 1


def test_ac01_wilson_symmetry():
    rng = np.random.default_rng(101)
    worst_float, exact_ok, checked = 0.0, True, 0
    for i in range(20):
        n = 1 + i % 6
        pair = conjugated(random_pair(n, 1000 + i), rng)
        kp = beta_kp(pair)
        for x, z in (crandn(rng, 2) * 2 for _ in range(50)):
            worst_float = max(worst_float, rel(wilson_rational(pair, x, z), wilson_rational(kp, z, x)))
        epair = random_pair(n, 2000 + i, Backend.EXACT)
        ekp = beta_kp(epair)
        for _ in range(50):
            x, z = exact_random(rng), exact_random(rng)
            try:
                lhs = wilson_rational(epair, x, z)
            except (PoleInX, PoleInZ):
                continue
            exact_ok &= lhs == wilson_rational(ekp, z, x)
            checked += 1
    ok = worst_float <= 1e-10 and exact_ok
    report("AC1", ok, f"Wilson symmetry: float max rel err {worst_float:.2e} (<= 1e-10); exact equal on {checked} points: {exact_ok}")


def _bispectral_symmetry(kind, beta, tag, seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in (1, 2, 3):
        for r in (2, 3, 4):
            rho = random_rho(kind, r, rng)
            pair = conjugated(random_pair(n, seed + 10 * n + r), rng)
            hat = beta(pair, rho)
            for err in finite_samples(lambda x, z: rel(k_vector(pair, rho, z, x), k_vector(hat, rho, x, z)), rng, 20):
                worst = max(worst, err)
    report(tag, worst <= 1e-9, f"{kind.value} bispectral symmetry k_W(z,x) = k_beta(W)(x,z): max err {worst:.2e} (<= 1e-9)")


def test_ac02_airy_symmetry():
    _bispectral_symmetry(Kind.AIRY, beta_airy, "AC2", 200)


def test_ac03_bessel_symmetry():
    _bispectral_symmetry(Kind.BESSEL, beta_bessel, "AC3", 300)


def test_ac04_oracle_equivalence():
    rng = np.random.default_rng(401)
    worst = 0.0
    for kind in Kind:
        for n in (1, 2, 3, 4, 5):
            for r in (2, 3, 4):
                rho = random_rho(kind, r, rng)
                data = random_spectral_data(n, 400 + 10 * n + r)
                pair = from_spectral_data(data)
                f = lambda x, z: rel(k_vector(pair, rho, x, z), k_solver_oracle(data, rho, kind, x, z))
                for err in finite_samples(f, rng, 10):
                    worst = max(worst, err)
    report("AC4", worst <= 1e-9, f"closed form vs residue-system oracle, n<=5, r<=4, both kinds: max rel err {worst:.2e} (<= 1e-9)")


def test_ac05_exact_a_identities():
    rng = np.random.default_rng(501)
    residuals = []
    for i in range(10):
        pair = random_pair(2 + i % 3, 500 + i, Backend.EXACT)
        for r in (2, 3):
            x = exact_random(rng)
            airy = RhoPoly(tuple(exact_random(rng) for _ in range(r - 1)) + (0,), Kind.AIRY)
            bessel = RhoPoly(tuple(exact_random(rng) for _ in range(r - 1)) + (Fraction(r * (r - 1), 2),), Kind.BESSEL)
            residuals += [verify_a_identity(pair, airy, Kind.AIRY, x), verify_a_identity(pair, bessel, Kind.BESSEL, x)]
    ok = all(v == 0 for v in residuals)
    report("AC5", ok, f"exact A-matrix identities, 10 pairs, r in (2,3), both kinds: {sum(v == 0 for v in residuals)}/{len(residuals)} exactly zero")


def test_ac06_exact_involutivity():
    rng = np.random.default_rng(601)
    bad = []
    for name in ("kp", "airy", "bessel"):
        for i in range(10):
            kind = Kind.BESSEL if name == "bessel" else Kind.AIRY
            r = 2 + i % 2
            a = tuple(exact_random(rng) for _ in range(r - 1))
            rho = RhoPoly(a + ((0,) if kind is Kind.AIRY else (Fraction(r * (r - 1), 2),)), kind)
            pair = random_pair(1 + i % 3, 600 + i, Backend.EXACT)
            beta = involution(name, rho)
            once = beta(pair)
            twice = beta(once)
            if not (la.is_zero(twice.P - pair.P) and la.is_zero(twice.Q - pair.Q)):
                bad.append((name, i, "involutive"))
            if not la.is_zero(la.commutator(once.P, once.Q) - la.commutator(pair.P, pair.Q).T):
                bad.append((name, i, "commutator"))
    report("AC6", not bad, f"exact beta^2 = id and [P^,Q^] = [P,Q]^T for kp/airy/bessel x 10 pairs: failures {bad}")


def test_ac07_antisymplectic():
    rng = np.random.default_rng(701)
    worst = {}
    maps = (("kp", None), ("airy", random_rho(Kind.AIRY, 3, rng)), ("bessel", PRESETS["bessel2"]))
    for name, rho in maps:
        for n in (1, 2, 3, 4):
            pair = conjugated(random_pair(n, 700 + n), rng)
            worst[name] = max(worst.get(name, 0.0), antisymplectic_residual(name, pair, 20, 7000 + n, rho, h=1e-5))
    ok = max(worst.values()) <= 1e-6
    detail = ", ".join(f"{k} {v:.2e}" for k, v in worst.items())
    report("AC7", ok, f"antisymplectic residual, n=1..4, 20 trials, h=1e-5: {detail} (<= 1e-6)")


def test_ac08_condition_annihilation():
    rng = np.random.default_rng(801)
    worst = {}
    for kind in Kind:
        for n, r in ((1, 2), (2, 3), (3, 2), (4, 4)):
            rho = random_rho(kind, r, rng)
            data = random_spectral_data(n, 800 + n)
            xs = list(crandn(rng, 20) * 2)
            worst[kind.value] = max(worst.get(kind.value, 0.0), float(condition_residual(data, rho, kind, xs).max()))
    ok = max(worst.values()) <= 1e-8
    report("AC8", ok, f"condition residuals at 20 random x: airy {worst['airy']:.2e}, bessel {worst['bessel']:.2e} (<= 1e-8)")


def test_ac09_one_particle_bessel():
    rng = np.random.default_rng(901)
    rho = PRESETS["bessel2"]
    spec = FlowSpec.linspace(1, -1.0, 1.0, 101)
    worst_traj, worst_eom = 0.0, 0.0
    for _ in range(5):
        lam0 = complex(*rng.uniform(0.5, 2.0, 2)) * rng.choice([1, -1])
        gam0 = complex(*rng.uniform(-1, 1, 2))
        hat = beta_bessel(from_spectral_data(SpectralData((lam0,), (gam0,))), rho)
        c2, c1 = hat.P[0, 0], hat.Q[0, 0]
        traj = pole_trajectories(hat, rho, Kind.BESSEL, spec)
        expected = bessel_one_particle_position(c1, c2, -traj.times)
        worst_traj = max(worst_traj, float(np.abs(traj.poles[:, 0] - expected).max()))
        worst_eom = max(worst_eom, eom_check(Kind.BESSEL, (lam0, gam0), h=1e-4))
    ok = worst_traj <= 1e-9 and worst_eom <= 1e-5
    report("AC9", ok, f"1-particle Bessel: trajectory err {worst_traj:.2e} (<= 1e-9), equations of motion err {worst_eom:.2e} (<= 1e-5)")


def test_ac10_two_particle_airy_hamiltonian():
    rng = np.random.default_rng(1001)
    worst, count = 0.0, 0
    while count < 20:
        lam, gam = crandn(rng, 2), crandn(rng, 2)
        if abs(lam[0] - lam[1]) < 0.5:
            continue
        pair = from_spectral_data(SpectralData.from_gammas(lam, gam))
        h = hamiltonian(pair, PRESETS["airy2"], Kind.AIRY, 1)
        worst = max(worst, abs(h - reduced_reference_h1(Kind.AIRY, (*lam, *gam))))
        count += 1
    report("AC10", worst <= 1e-10, f"2-particle Airy tr(Q^) vs reduced formula, 20 points: max err {worst:.2e} (<= 1e-10)")


def test_ac11_asymptotic_normalization():
    rng = np.random.default_rng(1101)
    failures = []
    for kind in Kind:
        for i in range(10):
            rho = random_rho(kind, 2 + i % 3, rng)
            pair = conjugated(random_pair(1 + i % 4, 1100 + i), rng)
            radius = np.abs(np.linalg.eigvals(pair.Q)).max()
            x = crandn(rng, 1)[0]
            direction = np.exp(1j * rng.uniform(0, 2 * np.pi))
            e1 = np.eye(rho.r)[0]
            norms = [np.linalg.norm(k_vector(pair, rho, x, s * radius * direction) - e1) for s in (10, 20, 40, 80)]
            if not all(b < a for a, b in zip(norms, norms[1:])):
                failures.append((kind.value, i, norms))
    report("AC11", not failures, f"|k - e1| decreasing over |z| = 10,20,40,80 x radius, 10 cases x 2 kinds: failures {failures}")


def test_ac12_tau_consistency():
    rng = np.random.default_rng(1201)
    worst = 0.0
    for kind, rho in ((Kind.AIRY, random_rho(Kind.AIRY, 3, rng)), (Kind.BESSEL, PRESETS["bessel2"])):
        for n in (2, 4):
            pair = conjugated(random_pair(n, 1200 + n), rng)
            spec = FlowSpec.linspace(2, -1.0, 1.0, 21)
            traj = pole_trajectories(pair, rho, kind, spec)
            for _ in range(10):
                t, x = rng.choice(traj.times), crandn(rng, 1)[0] * 3
                mu = la.eigenvalues(q_hat_t(pair, rho, kind, 2, t))
                value = tau(pair, rho, kind, 2, t, x)
                worst = max(worst, abs(np.prod(x - mu) - value) / abs(value))
    report("AC12", worst <= 1e-8, f"tau_t(x) vs eigenvalue product at 10 (t,x) per run: max rel err {worst:.2e} (<= 1e-8)")
