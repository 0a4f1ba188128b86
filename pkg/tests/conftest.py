import time

import numpy as np
import pytest
from hypothesis import settings, strategies as st

from kquant.toric import SymplecticPotential

settings.register_profile("kq", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("kq")

SUITE_BUDGET = 15 * 60


def pytest_sessionstart(session):
    session.config._kq_start = time.perf_counter()


def pytest_terminal_summary(terminalreporter, config):
    elapsed = time.perf_counter() - config._kq_start
    status = "within" if elapsed < SUITE_BUDGET else "OVER"
    terminalreporter.write_line(f"suite runtime {elapsed:.1f}s, {status} the {SUITE_BUDGET}s budget")

U_BENT = SymplecticPotential((0.0, 0.5, -0.5))
U_CURVED = SymplecticPotential((0.0, 0.0, 0.2, -0.4, 0.2))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_spd(rng, n, spread=1.0, complex_=False):
    A = rng.normal(size=(n, n))
    if complex_:
        A = A + 1j * rng.normal(size=(n, n))
    Q, _ = np.linalg.qr(A)
    vals = np.exp(spread * rng.normal(size=n))
    return (Q * vals) @ Q.conj().T


def random_hermitian(rng, n, complex_=False):
    A = rng.normal(size=(n, n))
    if complex_:
        A = A + 1j * rng.normal(size=(n, n))
    return 0.5 * (A + A.conj().T)


@st.composite
def admissible_potentials(draw, max_degree=4, scale=0.4):
    n = draw(st.integers(1, max_degree))
    coeffs = draw(st.lists(st.floats(-scale, scale, allow_nan=False), min_size=n, max_size=n))
    u = SymplecticPotential(tuple([0.0, *coeffs]))
    from hypothesis import assume

    assume(u.convexity_margin()[0] > 0.05)
    return u


def near_geodesic(rng, n, samples=65, eps_max=0.1, complex_=False):
    """geodesic(H0, H1, t) + delta sin(pi t) P with exact derivatives, delta
    halved until the measured covariant acceleration is at most ``eps_max``."""
    from kquant import symspace as ss
    from kquant.numerics import SampledPath, mat_fn

    H0, H1 = random_spd(rng, n, 0.5, complex_), random_spd(rng, n, 0.5, complex_)
    s = mat_fn(H0, "sqrt")
    si = mat_fn(H0, "inv_sqrt")
    A = mat_fn(si @ H1 @ si, "log")
    P = random_hermitian(rng, n, complex_)
    P /= np.linalg.norm(P, 2)
    ts = np.linspace(0.0, 1.0, samples)
    E = [mat_fn(t * A, "exp") for t in ts]
    base = np.array([s @ e @ s for e in E])
    v = np.array([s @ A @ e @ s for e in E])
    a = np.array([s @ A @ A @ e @ s for e in E])
    lam = min(np.linalg.eigvalsh(b)[0] for b in base)
    delta = 0.5 * lam * rng.uniform(0.05, 1.0)
    while True:
        sn, cs = np.sin(np.pi * ts)[:, None, None], np.cos(np.pi * ts)[:, None, None]
        path = SampledPath(ts, base + delta * sn * P,
                           {1: v + delta * np.pi * cs * P, 2: a - delta * np.pi**2 * sn * P})
        eps = max(ss.norm(path.values[i], ss.covariant_accel(path, i)) for i in range(samples))
        if eps <= eps_max:
            return path, eps
        delta *= 0.5
