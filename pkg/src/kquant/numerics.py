"""Shared numerical kernels: quadrature, Hermitian eigen-decomposition,
matrix functions and finite-difference stencils.

Every integral in the package is taken over a bounded interval (usually
the moment polytope ``(0, 1)``); integrals over the real line are pulled
back through the logistic map first (see :func:`integrate_line`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import expit, logsumexp

from .errors import ContractViolation, DomainError, ToleranceFailure

__all__ = [
    "QuadratureSpec",
    "SampledPath",
    "integrate",
    "integrate_log",
    "integrate_line",
    "pd_eig",
    "reconstruct",
    "mat_fn",
    "fd_weights",
    "fd_derivative",
    "fit_order",
]

RULES = ("gauss-legendre-composite", "tanh-sinh")
ABS_FLOOR = 1e-14
ROUNDOFF = 256 * np.finfo(float).eps
HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class QuadratureSpec:
    """Settings for the adaptive quadrature driver.

    ``max_panels`` bounds the number of Gauss-Legendre panels; for the
    tanh-sinh rule it bounds the number of abscissae divided by ``order``.
    """

    rule: str = "gauss-legendre-composite"
    rel_tol: float = 1e-11
    max_panels: int = 4096
    order: int = 20
    min_panels: int = 8

    def __post_init__(self):
        if self.rule not in RULES:
            raise ContractViolation(f"unknown quadrature rule {self.rule!r}; expected one of {RULES}")
        if not self.rel_tol > 0:
            raise ContractViolation(f"rel_tol must be positive, got {self.rel_tol}")
        if self.max_panels < 1:
            raise ContractViolation(f"max_panels must be >= 1, got {self.max_panels}")


DEFAULT_SPEC = QuadratureSpec()


@lru_cache(maxsize=None)
def _leggauss(order: int):
    return np.polynomial.legendre.leggauss(order)


def _gl_nodes(a: float, b: float, panels: int, order: int):
    t, w = _leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    wx = (half[:, None] * w[None, :]).ravel()
    return x, wx


def _ts_nodes(a: float, b: float, level: int):
    # tanh-sinh on (a, b); step 2^-level, truncated where weights underflow
    h = 2.0 ** (-level)
    n = int(math.ceil(3.2 / h))
    t = h * np.arange(-n, n + 1)
    s = 0.5 * math.pi * np.sinh(t)
    # 1 - tanh(s) computed without cancellation
    one_minus = 2.0 * expit(-2.0 * s)
    y = 0.5 * (b - a)
    x = a + y * (2.0 - one_minus)
    w = h * y * 0.5 * math.pi * np.cosh(t) / np.cosh(s) ** 2
    keep = (x > a) & (x < b) & (w > 0)
    return x[keep], w[keep]


def _node_sequence(a: float, b: float, spec: QuadratureSpec):
    if spec.rule == "gauss-legendre-composite":
        panels = min(spec.min_panels, spec.max_panels)
        while panels <= spec.max_panels:
            yield _gl_nodes(a, b, panels, spec.order)
            panels *= 2
    else:
        level = 2
        while True:
            x, w = _ts_nodes(a, b, level)
            if x.size > spec.max_panels * spec.order:
                return
            yield x, w
            level += 1


def integrate(f: Callable, a: float = 0.0, b: float = 1.0, spec: QuadratureSpec = DEFAULT_SPEC):
    """Adaptive quadrature of ``f`` over ``(a, b)``.

    ``f`` is vectorised over its last axis: given nodes of shape ``(n,)`` it
    returns an array of shape ``(..., n)``, so several integrands can share
    one set of nodes.  Refinement doubles the panel count (or halves the
    tanh-sinh step) until successive estimates agree to
    ``max(rel_tol * |value|, 1e-14)``, or to the rounding floor
    ``256 eps * int |f|`` when the integrand cancels.

    Returns
    -------
    value, err_est : float or ndarray
        The finest estimate and ``|I_fine - I_coarse|``.

    Raises
    ------
    ToleranceFailure
        If the refinement budget is exhausted; carries the best estimate.
    """
    prev = None
    value = err = None
    for x, w in _node_sequence(a, b, spec):
        fx = np.asarray(f(x))
        cur = fx @ w
        # cancelling integrands cannot beat the rounding floor of the sum
        floor = np.maximum(ABS_FLOOR, ROUNDOFF * (np.abs(fx) @ w))
        if prev is not None:
            err = np.abs(cur - prev)
            value = cur
            if np.all(err <= np.maximum(spec.rel_tol * np.abs(cur), floor)):
                return _unwrap(value), _unwrap(err)
        prev = cur
    raise ToleranceFailure(
        f"quadrature did not converge to rel_tol={spec.rel_tol} within budget",
        value=_unwrap(prev if value is None else value),
        err_est=None if err is None else _unwrap(err),
    )


def integrate_log(logf: Callable, a: float = 0.0, b: float = 1.0, spec: QuadratureSpec = DEFAULT_SPEC):
    """Like :func:`integrate` for a positive integrand given by its logarithm.

    Returns ``(log I, relative error estimate)``.  Needed when the
    integrand spans hundreds of orders of magnitude (``e^{-k psi}``).
    """
    prev = None
    cur = rel = None
    for x, w in _node_sequence(a, b, spec):
        cur = logsumexp(np.asarray(logf(x)) + np.log(w), axis=-1)
        if prev is not None:
            rel = np.abs(np.expm1(cur - prev))
            if np.all(rel <= spec.rel_tol):
                return _unwrap(cur), _unwrap(rel)
        prev = cur
    raise ToleranceFailure(
        f"log-space quadrature did not converge to rel_tol={spec.rel_tol}",
        value=None if cur is None else _unwrap(cur),
        err_est=None if rel is None else _unwrap(rel),
    )


def integrate_line(f: Callable, spec: QuadratureSpec = DEFAULT_SPEC):
    """Integrate ``f`` over the real line via ``x = log(q / (1 - q))``."""

    def pulled_back(q):
        x = np.log(q) - np.log1p(-q)
        return np.asarray(f(x)) / (q * (1.0 - q))

    return integrate(pulled_back, 0.0, 1.0, spec)


def _unwrap(v):
    v = np.asarray(v)
    return float(v) if v.ndim == 0 else v


# -- Hermitian linear algebra ------------------------------------------------


def _check_hermitian(M) -> np.ndarray:
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ContractViolation(f"expected a square matrix, got shape {M.shape}")
    asym = np.max(np.abs(M - M.conj().T)) if M.size else 0.0
    if asym > HERMITIAN_TOL * max(1.0, np.max(np.abs(M))):
        raise ContractViolation(f"matrix is not Hermitian (max asymmetry {asym:.3e})")
    return M


def pd_eig(M):
    """Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.

    Thin wrapper over LAPACK ``heevd`` (``numpy.linalg.eigh``) that first
    enforces Hermitian symmetry.
    """
    M = _check_hermitian(M)
    vals, vecs = np.linalg.eigh(0.5 * (M + M.conj().T))
    return vals, vecs


def reconstruct(vals, vecs):
    return (vecs * vals) @ vecs.conj().T


_MAT_FNS = {
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "inv_sqrt": lambda v: 1.0 / np.sqrt(v),
}


def mat_fn(M, fn: str):
    """Apply ``fn`` in {exp, log, sqrt, inv_sqrt} to a Hermitian matrix
    through its eigenvalues."""
    try:
        scalar = _MAT_FNS[fn]
    except KeyError:
        raise ContractViolation(f"unknown matrix function {fn!r}") from None
    vals, vecs = pd_eig(M)
    if fn != "exp" and vals.size and vals[0] <= 0:
        raise DomainError(f"mat_fn({fn}) needs a positive-definite matrix; smallest eigenvalue {vals[0]:.6e}")
    out = reconstruct(scalar(vals), vecs)
    return out.real if np.isrealobj(M) else out


# -- finite differences ------------------------------------------------------


@dataclass(frozen=True)
class SampledPath:
    """Values sampled on a uniform time grid.

    ``values[i]`` is the point at ``times[i]`` (a scalar, a function grid or
    a matrix).  ``derivs`` optionally maps a derivative order to exact
    derivative samples; consumers use those in place of finite differences.
    """

    times: np.ndarray
    values: np.ndarray
    derivs: dict | None = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", np.asarray(self.values))
        if t.ndim != 1 or t.size < 5:
            raise ContractViolation(f"a sampled path needs at least 5 samples, got {t.size}")
        if len(self.values) != t.size:
            raise ContractViolation("times and values have different lengths")
        h = np.diff(t)
        if np.any(h <= 0):
            raise ContractViolation("times must be strictly increasing")
        if np.max(np.abs(h - h[0])) > 1e-12:
            raise ContractViolation("times must be uniformly spaced (within 1e-12)")

    @property
    def h(self) -> float:
        return float(self.times[1] - self.times[0])

    def __len__(self):
        return self.times.size

    @classmethod
    def sample(cls, fn: Callable, n: int = 33, t0: float = 0.0, t1: float = 1.0):
        times = np.linspace(t0, t1, n)
        return cls(times, np.array([fn(t) for t in times]))


@lru_cache(maxsize=None)
def fd_weights(offsets: tuple, order: int) -> np.ndarray:
    """Stencil weights for the ``order``-th derivative at offset 0 (unit spacing).

    Solved from the moment conditions ``sum_j w_j o_j^m = m! [m == order]``.
    """
    o = np.asarray(offsets, dtype=float)
    n = o.size
    V = np.vander(o, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(V, rhs)


def _stencil(i: int, n: int, order: int):
    r = (order + 3) // 2
    if r <= i < n - r:
        return tuple(range(-r, r + 1))
    width = order + 4
    if n < width:
        raise ContractViolation(f"order-{order} derivative needs at least {width} samples, got {n}")
    start = 0 if i < r else n - width
    return tuple(j - i for j in range(start, start + width))


def fd_derivative(path: SampledPath, order: int, t):
    """Fourth-order finite-difference derivative of a sampled path.

    ``t`` may be a grid index (int) or a time that lies on the grid.
    Central stencils in the interior, shifted one-sided stencils near the
    ends.
    """
    if order not in (1, 2, 3):
        raise ContractViolation(f"derivative order must be 1, 2 or 3, got {order}")
    i = _grid_index(path, t)
    offs = _stencil(i, len(path), order)
    w = fd_weights(offs, order)
    vals = path.values[[i + o for o in offs]]
    return np.tensordot(w, vals, axes=(0, 0)) / path.h**order


def _grid_index(path: SampledPath, t) -> int:
    if isinstance(t, (int, np.integer)):
        if not 0 <= t < len(path):
            raise ContractViolation(f"grid index {t} out of range")
        return int(t)
    i = int(np.argmin(np.abs(path.times - t)))
    if abs(path.times[i] - t) > 1e-12:
        raise ContractViolation(f"t={t} is not a grid point")
    return i


def fit_order(ks: Sequence[float], errs: Sequence[float]) -> float:
    """Least-squares slope of log(err) against log(k)."""
    ks = np.asarray(ks, dtype=float)
    errs = np.asarray(errs, dtype=float)
    slope, _ = np.polyfit(np.log(ks), np.log(errs), 1)
    return float(slope)
