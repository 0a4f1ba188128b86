"""S^1-invariant Kahler potentials on CP^1 polarised by O(1).

An invariant potential is described either in log-affine coordinates,
``psi(x)`` with ``x = log|z|^2`` and moment map ``p = psi'(x) in (0, 1)``,
or through its Legendre dual, the symplectic potential

    u(p) = p log p + (1 - p) log(1 - p) + f(p)

on the moment polytope ``[0, 1]``.  ``phi = psi - log(1 + e^x)`` is the
Kahler potential relative to Fubini-Study.  With ``dmu = psi''(x) dx = dp``
the total volume is 1 and Fubini-Study has scalar curvature 2.

Functions of ``x`` (tangent vectors, test functions) are represented by
:class:`Fx`: a callable ``g(x, nu)`` returning the ``nu``-th derivative.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy.special import expit, log_expit, logsumexp

from .errors import DomainError
from .numerics import DEFAULT_SPEC, QuadratureSpec, integrate

__all__ = [
    "Fx",
    "SymplecticPotential",
    "InvariantPotential",
    "ToricPotential",
    "AffinePotential",
    "FS",
    "U_FS",
    "legendre",
    "legendre_inverse",
    "volume_measure",
    "scalar_curvature",
    "laplacian",
    "grad_norm_sq",
    "h_geodesic",
    "h_distance",
    "PotentialPath",
    "ToricPath",
    "LinearPath",
    "PerturbedPath",
    "PathInH",
    "geodesic_residual",
    "i_functional",
    "i_functional_toric",
    "k_energy",
    "k_energy_toric",
    "calabi_energy",
    "dE",
    "moment_coordinate",
]

MAX_DEGREE = 12
CONVEXITY_GRID = 2049
C4_BOUND = 1e3
GAUSS_S = 17


def softplus(x):
    return np.logaddexp(0.0, x)


# -- functions of x ----------------------------------------------------------


class Fx:
    """A function of ``x`` with derivatives: ``g(x, nu)`` for ``nu = 0, 1, 2``."""

    def __init__(self, fn: Callable, max_nu: int = 2, label: str = ""):
        self._fn = fn
        self.max_nu = max_nu
        self.label = label

    def __call__(self, x, nu: int = 0):
        if nu > self.max_nu:
            raise ValueError(f"{self.label or 'function'} provides derivatives up to order {self.max_nu}")
        return self._fn(np.asarray(x, dtype=float), nu)

    def __add__(self, other):
        if isinstance(other, Fx):
            return Fx(lambda x, nu: self(x, nu) + other(x, nu), min(self.max_nu, other.max_nu))
        return Fx(lambda x, nu: self(x, nu) + (other if nu == 0 else 0.0), self.max_nu)

    __radd__ = __add__

    def __mul__(self, c: float):
        return Fx(lambda x, nu: c * self(x, nu), self.max_nu)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other if isinstance(other, Fx) else -other)

    @staticmethod
    def constant(c: float) -> "Fx":
        return Fx(lambda x, nu: np.full_like(x, c) if nu == 0 else np.zeros_like(x), 99, f"const {c}")

    @staticmethod
    def zero() -> "Fx":
        return Fx.constant(0.0)


def moment_coordinate() -> Fx:
    """``x -> e^x / (1 + e^x)``, the Fubini-Study moment map."""

    def fn(x, nu):
        p = expit(x)
        return [p, p * (1 - p), p * (1 - p) * (1 - 2 * p)][nu]

    return Fx(fn, 2, "p_FS(x)")


# -- symplectic potentials ---------------------------------------------------


@dataclass(frozen=True)
class SymplecticPotential:
    """``u(p) = p log p + (1-p) log(1-p) + f(p)`` with polynomial correction
    ``f(p) = sum_m coeffs[m] p^m`` (degree at most 12)."""

    coeffs: tuple = (0.0,)

    def __post_init__(self):
        c = tuple(float(v) for v in np.atleast_1d(self.coeffs))
        if len(c) == 0:
            c = (0.0,)
        if len(c) > MAX_DEGREE + 1:
            raise DomainError(f"correction polynomial degree {len(c) - 1} exceeds {MAX_DEGREE}")
        if not all(math.isfinite(v) for v in c):
            raise DomainError(f"non-finite coefficients {list(c)}")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_correction(cls, fn: Polynomial | Sequence[float]):
        if isinstance(fn, Polynomial):
            return cls(tuple(fn.coef))
        return cls(tuple(fn))

    @property
    def f(self) -> Polynomial:
        return Polynomial(self.coeffs)

    def __add__(self, other):
        if isinstance(other, SymplecticPotential):
            return SymplecticPotential.from_correction(self.f + other.f)
        return SymplecticPotential.from_correction(self.f + other)

    def __sub__(self, other):
        if isinstance(other, SymplecticPotential):
            return SymplecticPotential.from_correction(self.f - other.f)
        return SymplecticPotential.from_correction(self.f - other)

    def scaled_correction(self, c: float) -> "SymplecticPotential":
        return SymplecticPotential.from_correction(c * self.f)

    @staticmethod
    def interpolate(u0: "SymplecticPotential", u1: "SymplecticPotential", t: float):
        t = float(t)
        return SymplecticPotential.from_correction((1 - t) * u0.f + t * u1.f)

    def u(self, p):
        p = np.asarray(p, dtype=float)
        return _xlogx(p) + _xlogx(1 - p) + self.f(p)

    def du(self, p):
        p = np.asarray(p, dtype=float)
        return np.log(p) - np.log1p(-p) + self.f.deriv(1)(p)

    def d2u(self, p):
        return 1.0 / self.w(p)

    def w(self, p, nu: int = 0, q=None):
        """``1/u''`` and its first two p-derivatives, from polynomial pieces.

        ``q = 1 - p`` may be passed when ``p`` is within rounding of 1.
        """
        p = np.asarray(p, dtype=float)
        q = 1 - p if q is None else np.asarray(q, dtype=float)
        f2, f3, f4 = (self.f.deriv(m)(p) if len(self.coeffs) > m else np.zeros_like(p) for m in (2, 3, 4))
        P, P1, P2 = p * q, q - p, -2.0
        D = 1 + P * f2
        if nu == 0:
            return P / D
        D1 = P1 * f2 + P * f3
        N1 = P1 * D - P * D1
        if nu == 1:
            return N1 / D**2
        D2 = P2 * f2 + 2 * P1 * f3 + P * f4
        return (P2 * D - P * D2) / D**2 - 2 * D1 * N1 / D**3

    def convexity_margin(self, n: int = CONVEXITY_GRID):
        """Minimum of ``1 + p(1-p) f''(p)`` on the open grid, with its location."""
        p = np.arange(1, n + 1) / (n + 1)
        D = 1 + p * (1 - p) * self.f.deriv(2)(p) if len(self.coeffs) > 2 else np.ones_like(p)
        i = int(np.argmin(D))
        return float(D[i]), float(p[i])

    def c4_norm(self) -> float:
        p = np.linspace(0, 1, 257)
        return max(float(np.max(np.abs(self.f.deriv(m)(p)))) if m < len(self.coeffs) else 0.0 for m in range(5))

    def validate(self) -> "SymplecticPotential":
        margin, at = self.convexity_margin()
        if margin <= 0:
            raise DomainError(
                f"u is not strictly convex: u'' <= 0 near p={at:.4f} (correction coefficients {list(self.coeffs)})"
            )
        if self.c4_norm() > C4_BOUND:
            raise DomainError(f"correction C^4 norm exceeds {C4_BOUND:g} (coefficients {list(self.coeffs)})")
        return self

    def moment_logit(self, x, maxiter: int = 100):
        """Solve ``u'(p) = x``; returns ``logit(p)`` (safeguarded Newton, vectorised)."""
        x = np.asarray(x, dtype=float)
        if len(self.coeffs) < 2:
            return x
        fp, fpp = self.f.deriv(1), self.f.deriv(2)
        bound = float(np.max(np.abs(fp(np.linspace(0, 1, 513))))) + 1.0
        lo, hi = x - bound, x + bound
        y = x - fp(expit(x))
        for _ in range(maxiter):
            q = expit(y)
            F = y + fp(q) - x
            lo = np.where(F < 0, y, lo)
            hi = np.where(F > 0, y, hi)
            y_new = y - F / (1 + fpp(q) * q * (1 - q))
            bad = (y_new <= lo) | (y_new >= hi) | ~np.isfinite(y_new)
            y_new = np.where(bad, 0.5 * (lo + hi), y_new)
            done = np.abs(y_new - y) <= 1e-15 * (1 + np.abs(y))
            y = y_new
            if np.all(done):
                break
        return y

    def moment(self, x):
        return expit(self.moment_logit(x))


def _xlogx(p):
    p = np.asarray(p, dtype=float)
    return np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)


U_FS = SymplecticPotential()


# -- invariant potentials ----------------------------------------------------


class InvariantPotential:
    """Strictly convex ``psi(x)`` with moment image ``(0, 1)``.

    Subclasses implement :meth:`psi`.  Integrals against ``dmu = psi'' dx``
    run over a chart ``s in (0, 1)``: by default the Fubini-Study
    coordinate ``x = log(s/(1-s))``; toric potentials use their own
    moment map, where ``dmu = ds``.
    """

    def psi(self, x, nu: int = 0):
        raise NotImplementedError

    def phi(self, x, nu: int = 0):
        x = np.asarray(x, dtype=float)
        if nu == 0:
            return self.psi(x) - softplus(x)
        return self.psi(x, nu) - _softplus_deriv(x, nu)

    def phi_fx(self) -> Fx:
        return Fx(lambda x, nu: self.phi(x, nu), 4, "phi")

    def moment(self, x):
        return self.psi(x, 1)

    # chart ------------------------------------------------------------------
    def chart_x(self, s):
        s = np.asarray(s, dtype=float)
        return np.log(s) - np.log1p(-s)

    def chart_log_density(self, s):
        """log of ``dmu/ds`` on the chart."""
        x = self.chart_x(s)
        return np.log(self.psi(x, 2)) - np.log(s) - np.log1p(-s)

    def log_section_density(self, s, j, k: int):
        """``log(|z^j|^2_{h^k} dmu/ds)`` at chart points ``s`` for exponents ``j``."""
        x = self.chart_x(s)
        j = np.asarray(j, dtype=float)[..., None]
        return j * x - k * self.psi(x) + self.chart_log_density(s)

    def integrate(self, F: Callable, spec: QuadratureSpec = DEFAULT_SPEC):
        """``int F(x) dmu`` where ``F`` maps x-arrays to arrays of shape ``(..., n)``."""

        def integrand(s):
            return np.asarray(F(self.chart_x(s))) * np.exp(self.chart_log_density(s))

        return integrate(integrand, 0.0, 1.0, spec)[0]

    def scalar_curvature_x(self, x):
        """``S = -(log psi'')'' / psi''`` in log-affine coordinates."""
        d2, d3, d4 = (self.psi(x, m) for m in (2, 3, 4))
        return -(d4 / d2 - (d3 / d2) ** 2) / d2

    def shift(self, c: float) -> "InvariantPotential":
        return AffinePotential(((1.0, self),), c)


def _softplus_deriv(x, nu):
    p = expit(x)
    return [None, p, p * (1 - p), p * (1 - p) * (1 - 2 * p), p * (1 - p) * (1 - 6 * p + 6 * p * p)][nu]


class ToricPotential(InvariantPotential):
    """The invariant potential Legendre dual to a symplectic potential."""

    def __init__(self, u: SymplecticPotential):
        self.u = u.validate()
        self._fp = u.f.deriv(1)

    def __repr__(self):
        return f"ToricPotential({list(self.u.coeffs)})"

    def psi_at_moment(self, p):
        # psi(u'(p)) = p f'(p) - f(p) - log(1 - p)
        p = np.asarray(p, dtype=float)
        return p * self._fp(p) - self.u.f(p) - np.log1p(-p)

    def psi(self, x, nu: int = 0):
        y = self.u.moment_logit(x)
        p = expit(y)
        if nu == 0:
            return p * self._fp(p) - self.u.f(p) + softplus(y)
        if nu == 1:
            return p
        q = expit(-y)
        w = self.u.w(p, 0, q)
        if nu == 2:
            return w
        w1 = self.u.w(p, 1, q)
        if nu == 3:
            return w1 * w
        return (w1 * w1 + w * self.u.w(p, 2, q)) * w

    def chart_x(self, s):
        return self.u.du(s)

    def chart_log_density(self, s):
        return np.zeros_like(np.asarray(s, dtype=float))

    def log_section_density(self, s, j, k: int):
        s = np.asarray(s, dtype=float)
        j = np.asarray(j, dtype=float)[..., None]
        f, fp = self.u.f(s), self._fp(s)
        return j * np.log(s) + (k - j) * np.log1p(-s) + (j - k * s) * fp + k * f

    def scalar_curvature_p(self, p):
        return -self.u.w(p, 2)

    def scalar_curvature_x(self, x):
        return self.scalar_curvature_p(self.u.moment(x))

    def shift(self, c: float) -> "ToricPotential":
        return ToricPotential(self.u - c)


class AffinePotential(InvariantPotential):
    """``psi = sum_i a_i psi_i + c`` with ``sum a_i = 1`` and ``a_i >= 0``."""

    def __init__(self, terms, const: float = 0.0):
        self.terms = tuple((float(a), pot) for a, pot in terms)
        weights = [a for a, _ in self.terms]
        if min(weights) < 0 or abs(sum(weights) - 1.0) > 1e-12:
            raise DomainError(f"affine weights must be a convex combination, got {weights}")
        self.const = float(const)

    def psi(self, x, nu: int = 0):
        out = sum(a * pot.psi(x, nu) for a, pot in self.terms if a != 0.0)
        return out + self.const if nu == 0 else out

    def shift(self, c: float) -> "AffinePotential":
        return AffinePotential(self.terms, self.const + c)


FS = ToricPotential(U_FS)


# -- operations --------------------------------------------------------------


def legendre(u: SymplecticPotential) -> ToricPotential:
    """Invariant potential ``psi(x) = sup_p (x p - u(p))`` of a symplectic potential."""
    return ToricPotential(u)


def legendre_inverse(pot: InvariantPotential, p, maxiter: int = 200):
    """``u(p) = sup_x (x p - psi(x))``; returns ``u(p)``.

    Solves ``logit(psi'(x)) = logit(p)``, which is nearly linear in ``x``,
    by Newton's method safeguarded with a bracket (bisection, or doubling
    while one side is still open).
    """
    p = np.asarray(p, dtype=float)
    target = np.log(p) - np.log1p(-p)
    x = target.copy()
    lo = np.full_like(x, -np.inf)
    hi = np.full_like(x, np.inf)
    for _ in range(maxiter):
        q = pot.psi(x, 1)
        F = np.log(q) - np.log1p(-q) - target
        lo = np.where(F < 0, x, lo)
        hi = np.where(F > 0, x, hi)
        width = np.maximum(1.0, np.abs(x))
        # the unselected branches may hold inf - inf
        with np.errstate(divide="ignore", invalid="ignore"):
            x_new = x - F * q * (1 - q) / pot.psi(x, 2)
            fallback = np.where(
                np.isfinite(lo) & np.isfinite(hi), 0.5 * (lo + hi), np.where(np.isfinite(lo), lo + width, hi - width)
            )
        bad = ~np.isfinite(x_new) | (x_new <= lo) | (x_new >= hi)
        x_new = np.where(bad, fallback, x_new)
        done = (np.abs(x_new - x) <= 1e-15 * (1 + np.abs(x))) | (F == 0)
        x = x_new
        if np.all(done):
            break
    return x * p - pot.psi(x)


def volume_measure(pot: InvariantPotential) -> Callable:
    """Density ``psi''(x)`` of the normalised volume form in x."""
    return lambda x: pot.psi(x, 2)


def scalar_curvature(u: SymplecticPotential) -> Callable:
    """Abreu's formula ``S(p) = -(1/u'')''``."""
    return lambda p: -u.w(p, 2)


def laplacian(pot: InvariantPotential, g: Fx) -> Callable:
    return lambda x: g(x, 2) / pot.psi(x, 2)


def grad_norm_sq(pot: InvariantPotential, g: Fx) -> Callable:
    return lambda x: g(x, 1) ** 2 / pot.psi(x, 2)


def _compose_p(u: SymplecticPotential, h: Polynomial | Callable, h_derivs=None) -> Fx:
    """The function ``x -> h(p_u(x))`` for a polynomial (or p-function with derivatives) ``h``."""
    if h_derivs is None:
        hp = (h, h.deriv(1), h.deriv(2))
    else:
        hp = h_derivs

    def fn(x, nu):
        y = u.moment_logit(x)
        p = expit(y)
        if nu == 0:
            return hp[0](p)
        q = expit(-y)
        w = u.w(p, 0, q)
        if nu == 1:
            return hp[1](p) * w
        return hp[2](p) * w * w + hp[1](p) * u.w(p, 1, q) * w

    return Fx(fn, 2)


def h_geodesic(u0: SymplecticPotential, u1: SymplecticPotential, t: float):
    """Point and velocity at time ``t`` of the geodesic joining two potentials.

    The geodesic interpolates symplectic potentials linearly; its velocity
    is ``phi_dot(x) = (u0 - u1)(p_t(x))``.
    """
    ut = SymplecticPotential.interpolate(u0, u1, t)
    return ToricPotential(ut), _compose_p(ut, u0.f - u1.f)


def h_distance(u0: SymplecticPotential, u1: SymplecticPotential, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``sqrt(int_0^1 (u1 - u0)^2 dp)``."""
    d = u1.f - u0.f
    return math.sqrt(integrate(lambda p: d(p) ** 2, 0.0, 1.0, spec)[0])


# -- paths -------------------------------------------------------------------


class PotentialPath:
    """A smooth one-parameter family of potentials with exact time derivatives."""

    def at(self, t: float) -> InvariantPotential:
        raise NotImplementedError

    def phi_dot(self, t: float) -> Fx:
        raise NotImplementedError

    def phi_ddot(self, t: float) -> Fx:
        raise NotImplementedError

    def sample(self, n: int = 33) -> "PathInH":
        times = np.linspace(0.0, 1.0, n)
        return PathInH(
            times,
            [self.at(t) for t in times],
            [self.phi_dot(t) for t in times],
            [self.phi_ddot(t) for t in times],
        )


class ToricPath(PotentialPath):
    """``u_t = (1-t) u0 + t u1 + eps t(1-t) b``; a geodesic when ``eps = 0``."""

    def __init__(self, u0, u1, bump: Polynomial | None = None, eps: float = 0.0):
        self.u0, self.u1 = u0, u1
        if bump is None:
            bump = [0.0]
        self.bump = bump if isinstance(bump, Polynomial) else Polynomial(bump)
        self.eps = float(eps)

    def u_at(self, t: float) -> SymplecticPotential:
        t = float(t)
        f = (1 - t) * self.u0.f + t * self.u1.f + self.eps * t * (1 - t) * self.bump
        return SymplecticPotential.from_correction(f)

    def u_dot(self, t: float) -> Polynomial:
        t = float(t)
        return self.u1.f - self.u0.f + self.eps * (1 - 2 * t) * self.bump

    def u_ddot(self, t: float) -> Polynomial:
        return -2 * self.eps * self.bump

    def at(self, t):
        return ToricPotential(self.u_at(t))

    def phi_dot(self, t):
        return _compose_p(self.u_at(t), -self.u_dot(t))

    def phi_ddot(self, t):
        # phi_ddot = -u_ddot(p) + u_dot'(p)^2 w(p)
        u = self.u_at(t)
        U1, U2 = self.u_dot(t), self.u_ddot(t)
        a, a1, a2, a3 = U1.deriv(1), U1.deriv(2), U1.deriv(3), U1.deriv(4)
        del a3

        def h0(p):
            return -U2(p) + a(p) ** 2 * u.w(p)

        def h1(p):
            return -U2.deriv(1)(p) + 2 * a(p) * a1(p) * u.w(p) + a(p) ** 2 * u.w(p, 1)

        def h2(p):
            w, w1, w2 = u.w(p), u.w(p, 1), u.w(p, 2)
            return (
                -U2.deriv(2)(p)
                + 2 * a1(p) ** 2 * w
                + 2 * a(p) * a2(p) * w
                + 4 * a(p) * a1(p) * w1
                + a(p) ** 2 * w2
            )

        return _compose_p(u, None, (h0, h1, h2))


class LinearPath(PotentialPath):
    """``phi_t = (1-t) phi_0 + t phi_1`` (straight line in the affine space of potentials)."""

    def __init__(self, pot0: InvariantPotential, pot1: InvariantPotential):
        self.pot0, self.pot1 = pot0, pot1
        self._diff = Fx(lambda x, nu: pot1.psi(x, nu) - pot0.psi(x, nu), 2, "phi1 - phi0")

    def at(self, t):
        if t == 0.0:
            return self.pot0
        if t == 1.0:
            return self.pot1
        return AffinePotential(((1 - t, self.pot0), (t, self.pot1)))

    def phi_dot(self, t):
        return self._diff

    def phi_ddot(self, t):
        return Fx.zero()


class PerturbedPath(PotentialPath):
    """``base(t) + eps * t (1 - t)``: a constant-shift perturbation."""

    def __init__(self, base: PotentialPath, eps: float):
        self.base, self.eps = base, float(eps)

    def at(self, t):
        return self.base.at(t).shift(self.eps * t * (1 - t))

    def phi_dot(self, t):
        return self.base.phi_dot(t) + self.eps * (1 - 2 * t)

    def phi_ddot(self, t):
        return self.base.phi_ddot(t) + (-2 * self.eps)


@dataclass
class PathInH:
    times: np.ndarray
    potentials: list
    phi_dot: list
    phi_ddot: list = field(default_factory=list)


def _residual_grid(n: int = CONVEXITY_GRID):
    q = np.arange(1, n + 1) / (n + 1)
    return np.log(q) - np.log1p(-q)


def geodesic_residual(path: PathInH, x=None) -> float:
    """``sup |(phi_ddot - |grad phi_dot|^2) psi'' / psi_FS''|`` over the time and x grids."""
    x = _residual_grid() if x is None else np.asarray(x, dtype=float)
    base = FS.psi(x, 2)
    worst = 0.0
    for pot, g1, g2 in zip(path.potentials, path.phi_dot, path.phi_ddot):
        d2 = pot.psi(x, 2)
        res = (g2(x) - g1(x, 1) ** 2 / d2) * d2 / base
        worst = max(worst, float(np.max(np.abs(res))))
    return worst


# -- functionals -------------------------------------------------------------


def _gauss_s(n: int = GAUSS_S):
    t, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (t + 1), 0.5 * w


def i_functional(pot: InvariantPotential, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``I(phi) = int_0^1 int phi dmu_{s phi} ds`` along ``s -> s phi``; ``I(FS) = 0``.

    The inner integrals are taken in the Fubini-Study chart, where
    ``dmu_{s phi} = (1 + s phi''/psi_FS'') dq``.
    """
    s, ws = _gauss_s()

    def integrand(q):
        x = np.log(q) - np.log1p(-q)
        ph, ph2 = pot.phi(x), pot.phi(x, 2)
        ratio = ph2 / (q * (1 - q))
        return ph[None, :] * (1 + s[:, None] * ratio[None, :])

    inner = integrate(integrand, 0.0, 1.0, spec)[0]
    return float(inner @ ws)


def i_functional_toric(u: SymplecticPotential) -> float:
    """Closed form ``I = -int_0^1 f dp`` for toric potentials."""
    F = u.f.integ()
    return -float(F(1.0) - F(0.0))


def k_energy(pot: InvariantPotential, spec: QuadratureSpec = DEFAULT_SPEC, n_s: int = GAUSS_S) -> float:
    """K-energy by integrating ``dE = -int (S - 2) dphi dmu`` along ``s -> s phi``."""
    s, ws = _gauss_s(n_s)

    def integrand(q):
        x = np.log(q) - np.log1p(-q)
        jac = q * (1 - q)
        ph = pot.phi(x)
        d = [FS.psi(x, m)[None, :] + s[:, None] * pot.phi(x, m)[None, :] for m in (2, 3, 4)]
        S = -(d[2] / d[0] - (d[1] / d[0]) ** 2) / d[0]
        return (S - 2.0) * ph[None, :] * d[0] / jac

    inner = integrate(integrand, 0.0, 1.0, spec)[0]
    return -float(inner @ ws)


def k_energy_toric(u: SymplecticPotential, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Closed toric form ``-int log(u''/u_FS'') dp + f(0) + f(1) - 2 int f dp``."""
    f2 = u.f.deriv(2) if len(u.coeffs) > 2 else Polynomial([0.0])
    val = integrate(lambda p: -np.log1p(p * (1 - p) * f2(p)), 0.0, 1.0, spec)[0]
    F = u.f.integ()
    return val + float(u.f(0.0) + u.f(1.0)) - 2.0 * float(F(1.0) - F(0.0))


def calabi_energy(pot: InvariantPotential, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``int (S - 2)^2 dmu``."""
    if isinstance(pot, ToricPotential):
        return integrate(lambda p: (pot.scalar_curvature_p(p) - 2.0) ** 2, 0.0, 1.0, spec)[0]
    return pot.integrate(lambda x: (pot.scalar_curvature_x(x) - 2.0) ** 2, spec)


def dE(pot: InvariantPotential, dphi: Fx | Callable, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Differential of the K-energy, ``-int (S - 2) dphi dmu``."""
    if isinstance(pot, ToricPotential):
        return -integrate(
            lambda p: (pot.scalar_curvature_p(p) - 2.0) * dphi(pot.u.du(p)), 0.0, 1.0, spec
        )[0]
    return -pot.integrate(lambda x: (pot.scalar_curvature_x(x) - 2.0) * dphi(x), spec)
