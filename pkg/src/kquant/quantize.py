"""Quantization maps between invariant potentials and Hermitian forms.

Sections of O(k) are the monomials ``z^j``, ``j = 0..k``; for an invariant
metric ``|z^j|^2_{h^k} = exp(j x - k psi(x))``.  ``Hilb_k`` of an invariant
potential is therefore diagonal in the monomial frame and most work here
is done on the logarithms of its diagonal entries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import ContractViolation, DomainError
from .numerics import DEFAULT_SPEC, QuadratureSpec, integrate, integrate_log
from .symspace import as_form
from .toric import FS, Fx, InvariantPotential, i_functional

__all__ = [
    "QuantLevel",
    "FSkPotential",
    "BergmanDensity",
    "hilb",
    "hilb_logdiag",
    "fs",
    "bergman_density",
    "d_hilb",
    "d2_hilb",
    "toric_hilb_derivs",
    "d_fs",
    "i_k",
    "l_func_raw",
    "l_func",
    "z_func_raw",
    "z_func",
    "grad_z",
    "grad_z_printed",
    "grad_z_eigen",
    "kernel_moment",
    "iquant_sign",
]

OFFDIAG_TOL = 1e-14
K_MAX = 256


@dataclass(frozen=True)
class QuantLevel:
    """Level ``k`` of the quantization: ``N_k = d_k = k + 1`` monomial sections."""

    k: int

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ContractViolation(f"quantization level must be a positive integer, got {self.k}")

    @property
    def N(self) -> int:
        return self.k + 1

    d = N

    @property
    def exponents(self) -> np.ndarray:
        return np.arange(self.k + 1)


def _level(k) -> QuantLevel:
    return k if isinstance(k, QuantLevel) else QuantLevel(int(k))


def _diag_of(H) -> np.ndarray:
    H = np.asarray(H)
    d = np.real(np.diag(H)).astype(float)
    off = H - np.diag(np.diag(H))
    if off.size and np.max(np.abs(off)) > OFFDIAG_TOL * max(np.max(np.abs(d)), 1e-300):
        raise DomainError("form is not diagonal in the monomial frame; it leaves the invariant model")
    if np.any(d <= 0):
        raise DomainError(f"form is not positive definite (diagonal entry {d.min():.3e})")
    return d


# -- Hilb_k ------------------------------------------------------------------


def hilb_logdiag(pot: InvariantPotential, k, spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
    """``log H_jj = log int |z^j|^2 e^{-k psi} dmu`` for ``j = 0..k``."""
    lv = _level(k)
    cache = pot.__dict__.setdefault("_hilb_cache", {})
    key = (lv.k, spec)
    if key not in cache:
        j = lv.exponents
        cache[key] = integrate_log(lambda s: pot.log_section_density(s, j, lv.k), 0.0, 1.0, spec)[0]
    return cache[key]


def hilb(pot: InvariantPotential, k, spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
    """The L^2 Hermitian form of ``pot`` on sections of O(k) (diagonal)."""
    return np.diag(np.exp(hilb_logdiag(pot, k, spec)))


# -- FS_k --------------------------------------------------------------------


class FSkPotential(InvariantPotential):
    """``psi(x) = (1/k) log sum_j e^{j x} / H_jj`` for a diagonal form ``H``."""

    def __init__(self, logdiag, k: int):
        self.logdiag = np.asarray(logdiag, dtype=float)
        self.k = int(k)
        self._j = np.arange(self.k + 1, dtype=float)
        if self.logdiag.shape != self._j.shape:
            raise ContractViolation(f"expected {self.k + 1} diagonal entries, got {self.logdiag.size}")

    def _logw(self, x):
        return self._j[:, None] * np.ravel(x)[None, :] - self.logdiag[:, None]

    def psi(self, x, nu: int = 0):
        x = np.asarray(x, dtype=float)
        lw = self._logw(x)
        lse = logsumexp(lw, axis=0)
        if nu == 0:
            return (lse / self.k).reshape(x.shape)
        prob = np.exp(lw - lse)
        m = self._j @ prob
        if nu == 1:
            return (m / self.k).reshape(x.shape)
        c = self._j[:, None] - m[None, :]
        if nu == 2:
            out = np.sum(prob * c**2, axis=0)
        elif nu == 3:
            out = np.sum(prob * c**3, axis=0)
        else:
            var = np.sum(prob * c**2, axis=0)
            out = np.sum(prob * c**4, axis=0) - 3 * var**2
        return (out / self.k).reshape(x.shape)


def fs(H, k, check: bool = True) -> FSkPotential:
    """The Fubini-Study potential of a diagonal positive-definite form."""
    lv = _level(k)
    if check:
        as_form(H)
    d = _diag_of(H)
    if d.size != lv.N:
        raise ContractViolation(f"form has dimension {d.size}, level k={lv.k} needs {lv.N}")
    return FSkPotential(np.log(d), lv.k)


def fs_from_logdiag(logdiag, k) -> FSkPotential:
    return FSkPotential(logdiag, _level(k).k)


# -- density of states -------------------------------------------------------


class BergmanDensity:
    """``rho_k(x) = sum_j |z^j|^2_{h^k} / H_jj`` for ``H = Hilb_k(pot)``."""

    def __init__(self, pot: InvariantPotential, k, spec: QuadratureSpec = DEFAULT_SPEC):
        self.pot = pot
        self.level = _level(k)
        self.logdiag = hilb_logdiag(pot, self.level, spec)
        self._spec = spec

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        j = self.level.exponents[:, None]
        lw = j * np.ravel(x)[None, :] - self.level.k * self.pot.psi(np.ravel(x))[None, :] - self.logdiag[:, None]
        return np.exp(logsumexp(lw, axis=0)).reshape(x.shape)

    def on_chart(self, s):
        """Density at chart points; on a toric potential the chart is the moment map."""
        s = np.asarray(s, dtype=float)
        lw = (
            self.pot.log_section_density(np.ravel(s), self.level.exponents, self.level.k)
            - self.pot.chart_log_density(np.ravel(s))[None, :]
            - self.logdiag[:, None]
        )
        return np.exp(logsumexp(lw, axis=0)).reshape(s.shape)

    def mass(self) -> float:
        def integrand(s):
            return np.exp(logsumexp(self.pot.log_section_density(s, self.level.exponents, self.level.k)
                                    - self.logdiag[:, None], axis=0))

        return integrate(integrand, 0.0, 1.0, self._spec)[0]


def bergman_density(pot: InvariantPotential, k, spec: QuadratureSpec = DEFAULT_SPEC) -> BergmanDensity:
    return BergmanDensity(pot, k, spec)


# -- tangent maps ------------------------------------------------------------


def _section_average(pot, lv, logdiag, F, spec):
    """``int |s_j|^2 F dmu`` for H-orthonormal ``s_j``; ``F(x)`` broadcast over j."""
    j = lv.exponents

    def integrand(s):
        weight = np.exp(pot.log_section_density(s, j, lv.k) - logdiag[:, None])
        return weight * F(pot.chart_x(s), s)

    return integrate(integrand, 0.0, 1.0, spec)[0]


def d_hilb(pot: InvariantPotential, k, dphi: Fx, spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
    """Derivative of ``Hilb_k`` at ``pot`` in the direction ``dphi``:
    ``int (s_i, s_j) (-k dphi + Laplacian dphi) dmu``."""
    lv = _level(k)
    logdiag = hilb_logdiag(pot, lv, spec)

    def F(x, s):
        return -lv.k * dphi(x) + dphi(x, 2) / pot.psi(x, 2)

    rel = _section_average(pot, lv, logdiag, F, spec)
    return np.diag(rel * np.exp(logdiag))


def d2_hilb(pot: InvariantPotential, k, dphi: Fx, ddphi: Fx, spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
    """Second time derivative of ``Hilb_k(phi_t)`` given ``phi_dot`` and ``phi_ddot``.

    Differentiating ``e^{-k psi} psi''`` twice under the integral gives
    ``|s|^2 (k^2 g^2 - 2 k g Lap g - k gg + Lap gg) dmu`` with ``g = phi_dot``,
    ``gg = phi_ddot``.
    """
    lv = _level(k)
    logdiag = hilb_logdiag(pot, lv, spec)
    kk = lv.k

    def F(x, s):
        d2 = pot.psi(x, 2)
        g, gg = dphi(x), ddphi(x)
        return kk * kk * g * g - 2 * kk * g * dphi(x, 2) / d2 - kk * gg + ddphi(x, 2) / d2

    rel = _section_average(pot, lv, logdiag, F, spec)
    return np.diag(rel * np.exp(logdiag))


def toric_hilb_derivs(path, t: float, k, spec: QuadratureSpec = DEFAULT_SPEC):
    """``(H, H', H'')`` at time ``t`` of ``Hilb_k`` along a :class:`~kquant.toric.ToricPath`.

    In the moment chart ``H_jj = int_0^1 exp(G_j(p, t)) dp`` with
    ``G_j = j log p + (k-j) log(1-p) + (j - k p) f_t'(p) + k f_t(p)``, so the
    time derivatives only involve ``f_t``.
    """
    lv = _level(k)
    kk = lv.k
    pot = path.at(t)
    logdiag = hilb_logdiag(pot, lv, spec)
    U1, U2 = path.u_dot(t), path.u_ddot(t)
    dU1, dU2 = U1.deriv(1), U2.deriv(1)
    j = lv.exponents[:, None].astype(float)

    def integrand(p):
        weight = np.exp(pot.log_section_density(p, lv.exponents, kk) - logdiag[:, None])
        g1 = (j - kk * p) * dU1(p) + kk * U1(p)
        g2 = (j - kk * p) * dU2(p) + kk * U2(p)
        return np.stack([weight * g1, weight * (g1 * g1 + g2)])

    r = integrate(integrand, 0.0, 1.0, spec)[0]
    Hd = np.exp(logdiag)
    return np.diag(Hd), np.diag(r[0] * Hd), np.diag(r[1] * Hd)


def d_fs(H, k, dH) -> Fx:
    """Derivative of ``FS_k`` at a diagonal form ``H`` along a diagonal ``dH``:
    ``-(1/k) sum_ij dH(s_i, s_j) (s_j, s_i)_{FS_k(H)}``."""
    lv = _level(k)
    d = _diag_of(H)
    dd = np.real(np.diag(np.asarray(dH)))
    off = np.asarray(dH) - np.diag(np.diag(dH))
    if off.size and np.max(np.abs(off)) > OFFDIAG_TOL * max(np.max(np.abs(dd)), 1e-300):
        raise DomainError("tangent form is not diagonal; its FS variation is not S^1-invariant")
    pot = fs(H, lv, check=False)
    rel = dd / d

    def fn(x, nu):
        if nu:
            raise ValueError("d_fs provides values only")
        xs = np.ravel(x)
        lw = pot._logw(xs)
        prob = np.exp(lw - logsumexp(lw, axis=0))
        return (-(rel @ prob) / lv.k).reshape(np.shape(x))

    return Fx(fn, 0, "d FS_k")


# -- functionals -------------------------------------------------------------


def i_k(H) -> float:
    """``log det H``."""
    sign, val = np.linalg.slogdet(np.asarray(H))
    if np.real(sign) <= 0:
        raise DomainError("log det of a form that is not positive definite")
    return float(val)


def l_func_raw(pot: InvariantPotential, k, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``I_k(Hilb_k phi) + k d_k I(phi)`` (volume 1)."""
    lv = _level(k)
    return float(np.sum(hilb_logdiag(pot, lv, spec))) + lv.k * lv.d * i_functional(pot, spec)


def _fs_level(lv):
    return float(np.sum(hilb_logdiag(FS, lv)))


def l_func(pot: InvariantPotential, k, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Normalised ``(2/k)(L_k(phi) - L_k(FS))``; converges to the K-energy."""
    lv = _level(k)
    return 2.0 / lv.k * (l_func_raw(pot, lv, spec) - l_func_raw(FS, lv, spec))


def _z_raw_logdiag(logdiag, lv, spec):
    pot = FSkPotential(logdiag, lv.k)
    return lv.k * lv.d * i_functional(pot, spec) + float(np.sum(logdiag)) - lv.d * math.log(lv.d)


def z_func_raw(H, k, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``k d_k I(FS_k H) + log det H + d_k (log V - log d_k)`` with ``V = 1``."""
    lv = _level(k)
    return _z_raw_logdiag(np.log(_diag_of(H)), lv, spec)


def z_func(H, k, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Normalised ``(2/k)(Z_k(H) - Z_k(Hilb_k FS))``."""
    lv = _level(k)
    base = _z_raw_logdiag(hilb_logdiag(FS, lv, spec), lv, spec)
    return 2.0 / lv.k * (z_func_raw(H, lv, spec) - base)


def z_func_logdiag(logdiag, k, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    lv = _level(k)
    base = _z_raw_logdiag(hilb_logdiag(FS, lv, spec), lv, spec)
    return 2.0 / lv.k * (_z_raw_logdiag(np.asarray(logdiag, float), lv, spec) - base)


def _orthonormal_gram(H, lv, spec):
    # A_ii = int |s_i|^2_{FS_k H} dmu_{FS_k H} for the H-orthonormal monomials
    d = _diag_of(H)
    pot = FSkPotential(np.log(d), lv.k)
    return np.exp(hilb_logdiag(pot, lv, spec) - np.log(d)), d


def grad_z_printed(H, k, spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
    """``-(d_k/k) [A]_0`` in the H-orthonormal frame, mapped to the ambient frame."""
    lv = _level(k)
    A, d = _orthonormal_gram(H, lv, spec)
    G = -(lv.d / lv.k) * (A - 1.0 / lv.d)
    return np.diag(d * G)


def grad_z(H, k, spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
    """Riemannian gradient of the normalised ``Z_k`` (see :func:`z_func`) at a diagonal form."""
    return 2.0 * grad_z_printed(H, k, spec)


def grad_z_eigen(H, k, spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
    """Eigenvalues ``(d_k/k) int (|s_i|^2 - 1/d_k) dmu`` of the printed gradient,
    integrated directly against ``FS_k(H)``."""
    lv = _level(k)
    d = _diag_of(H)
    pot = FSkPotential(np.log(d), lv.k)
    j = lv.exponents

    def integrand(s):
        lw = pot.log_section_density(s, j, lv.k) - np.log(d)[:, None]
        return np.exp(lw) - np.exp(pot.chart_log_density(s))[None, :] / lv.d

    vals = integrate(integrand, 0.0, 1.0, spec)[0]
    return (lv.d / lv.k) * vals


def kernel_moment(pot: InvariantPotential, k, g, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``k^-1 sum_ij |int (s_i, s_j) g dmu|^2`` for an invariant test function ``g``.

    Off-diagonal pairings vanish for invariant ``g``.
    """
    lv = _level(k)
    logdiag = hilb_logdiag(pot, lv, spec)
    vals = _section_average(pot, lv, logdiag, lambda x, s: g(x), spec)
    return float(np.sum(vals**2) / lv.k)


def iquant_sign(pot: InvariantPotential, k, c: float = 1.0, spec: QuadratureSpec = DEFAULT_SPEC) -> int:
    """Sign relating ``k^-2 d(I_k o Hilb_k)`` to ``dI`` on the flat direction ``phi -> phi + c``."""
    lv = _level(k)
    dIk = float(np.sum(hilb_logdiag(pot.shift(c), lv, spec)) - np.sum(hilb_logdiag(pot, lv, spec)))
    return 1 if dIk / lv.k**2 * c > 0 else -1
