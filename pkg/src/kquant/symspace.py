"""Geometry of the space of positive-definite Hermitian forms.

The metric at ``H`` is ``<A, B>_H = Tr(A H^-1 B H^-1)``; geodesics are
``H0^{1/2} exp(t A) H0^{1/2}``.  Matrices are plain numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .errors import ContractViolation, DegenerateTriangle, DomainError
from .numerics import SampledPath, fd_derivative, mat_fn, pd_eig

__all__ = [
    "as_form",
    "inner",
    "norm",
    "geodesic",
    "geodesic_velocity",
    "distance",
    "covariant_accel",
    "comparison_angle",
    "angle_from_sides",
    "comparison_median",
    "NearGeodesicReport",
    "near_geodesic_check",
]

PD_RTOL = 1e-12
NEAR_GEODESIC_TOL = 1e-7


def as_form(H) -> np.ndarray:
    """Validate a positive-definite Hermitian form and return it as an array.

    The eigenvalue threshold ``1e-12 * ||H||`` is applied after Jacobi
    scaling ``D^-1/2 H D^-1/2`` (``D = diag H``), so diagonal forms whose
    entries span many decades are accepted.
    """
    H = np.asarray(H)
    pd_eig(H)  # Hermitian check
    d = np.real(np.diagonal(H))
    if d.size == 0 or np.any(d <= 0):
        raise DomainError("form is not positive definite (non-positive diagonal entry)")
    r = 1.0 / np.sqrt(d)
    vals, _ = pd_eig(H * r[:, None] * r[None, :])
    if vals[0] <= PD_RTOL * vals[-1]:
        raise DomainError(f"form is not positive definite (smallest scaled eigenvalue {vals[0]:.3e})")
    return H


def _same_dim(*Ms):
    dims = {np.shape(M) for M in Ms}
    if len(dims) != 1:
        raise ContractViolation(f"dimension mismatch: {sorted(dims)}")


def inner(H, A, B) -> float:
    """Riemannian inner product ``Tr(A H^-1 B H^-1)`` of tangent vectors at ``H``."""
    _same_dim(H, A, B)
    Hinv = np.linalg.inv(H)
    return float(np.real(np.trace(A @ Hinv @ B @ Hinv)))


def norm(H, A) -> float:
    return math.sqrt(max(inner(H, A, A), 0.0))


def _diagonals(H0, H1):
    # both real and exactly diagonal: every operation below is elementwise
    if np.iscomplexobj(H0) or np.iscomplexobj(H1):
        return None
    if np.count_nonzero(H0 - np.diag(np.diagonal(H0))) or np.count_nonzero(H1 - np.diag(np.diagonal(H1))):
        return None
    return np.diagonal(H0), np.diagonal(H1)


def _log_direction(H0, H1):
    # A with H1 = H0^{1/2} exp(A) H0^{1/2}
    s = mat_fn(H0, "sqrt")
    si = mat_fn(H0, "inv_sqrt")
    M = si @ H1 @ si
    return s, mat_fn(0.5 * (M + M.conj().T), "log")


def geodesic(H0, H1, t: float) -> np.ndarray:
    """Point at time ``t`` on the geodesic with ``H(0) = H0`` and ``H(1) = H1``."""
    H0, H1 = as_form(H0), as_form(H1)
    _same_dim(H0, H1)
    diag = _diagonals(H0, H1)
    if diag is not None:
        d0, d1 = diag
        return np.diag(d0 * np.exp(t * np.log(d1 / d0)))
    s, A = _log_direction(H0, H1)
    return s @ mat_fn(t * A, "exp") @ s


def geodesic_velocity(H0, H1, t: float = 0.0) -> np.ndarray:
    """Velocity of :func:`geodesic` at time ``t``."""
    H0, H1 = as_form(H0), as_form(H1)
    _same_dim(H0, H1)
    diag = _diagonals(H0, H1)
    if diag is not None:
        d0, d1 = diag
        a = np.log(d1 / d0)
        return np.diag(d0 * a * np.exp(t * a))
    s, A = _log_direction(H0, H1)
    return s @ A @ mat_fn(t * A, "exp") @ s


def distance(H0, H1) -> float:
    """Geodesic distance ``sqrt(sum log^2 lambda_i)``, ``lambda`` the spectrum of ``H0^-1 H1``."""
    H0, H1 = as_form(H0), as_form(H1)
    _same_dim(H0, H1)
    diag = _diagonals(H0, H1)
    if diag is not None:
        return float(np.sqrt(np.sum(np.log(diag[1] / diag[0]) ** 2)))
    si = mat_fn(H0, "inv_sqrt")
    vals, _ = pd_eig(si @ H1 @ si)
    return float(np.sqrt(np.sum(np.log(vals) ** 2)))


def _path_derivs(path: SampledPath, i: int):
    if path.derivs is not None and 1 in path.derivs and 2 in path.derivs:
        return path.derivs[1][i], path.derivs[2][i]
    return fd_derivative(path, 1, i), fd_derivative(path, 2, i)


def covariant_accel(path: SampledPath, t) -> np.ndarray:
    """``H'' - H' H^-1 H'`` at a grid point of a sampled path of forms.

    Derivatives come from ``path.derivs`` when supplied, otherwise from
    fourth-order finite differences.
    """
    i = t if isinstance(t, (int, np.integer)) else int(np.argmin(np.abs(path.times - t)))
    H = path.values[i]
    d1, d2 = _path_derivs(path, i)
    return d2 - d1 @ np.linalg.solve(H, d1)


def comparison_angle(Ha, Hb, Hc) -> float:
    """Euclidean comparison angle at ``Hb`` of the geodesic triangle ``Ha Hb Hc``."""
    dab, dbc, dac = distance(Ha, Hb), distance(Hb, Hc), distance(Ha, Hc)
    if dab == 0.0 or dbc == 0.0:
        raise DegenerateTriangle("comparison angle undefined: a side at the vertex has zero length")
    return angle_from_sides(dab, dbc, dac)


def angle_from_sides(dab: float, dbc: float, dac: float) -> float:
    c = (dab**2 + dbc**2 - dac**2) / (2.0 * dab * dbc)
    return math.acos(min(1.0, max(-1.0, c)))


def comparison_median(a: float, b: float, c: float) -> float:
    """Median to the side of length ``c`` in the Euclidean triangle with sides a, b, c."""
    return 0.5 * math.sqrt(max(2 * a * a + 2 * b * b - c * c, 0.0))


@dataclass
class NearGeodesicReport:
    eps: float
    length: float
    dist: float
    tangent_gaps: tuple
    length_ok: bool
    tangent_ok: tuple
    length_slack: float
    tangent_slacks: tuple

    @property
    def ok(self) -> bool:
        return self.length_ok and all(self.tangent_ok)


def near_geodesic_check(path: SampledPath, tol: float = NEAR_GEODESIC_TOL) -> NearGeodesicReport:
    """Measure how far a path of forms is from a geodesic and test the
    length bound ``dist >= length - eps`` together with the endpoint
    tangent bounds ``|v(i) - w(i)|^2 <= 9/4 eps^2 + 4 eps |v(1-i)|``,
    where ``w`` is the velocity of the true geodesic between the endpoints.

    ``eps`` is the largest covariant acceleration norm over the grid.
    Inequalities failing by more than ``tol`` are flagged, not raised.
    """
    n = len(path)
    speeds = np.empty(n)
    eps = 0.0
    for i in range(n):
        H = path.values[i]
        d1, _ = _path_derivs(path, i)
        speeds[i] = norm(H, d1)
        eps = max(eps, norm(H, covariant_accel(path, i)))
    length = float(simpson(speeds, x=path.times))
    H0, H1 = path.values[0], path.values[-1]
    dist = distance(H0, H1)
    v0, _ = _path_derivs(path, 0)
    v1, _ = _path_derivs(path, n - 1)
    w0 = geodesic_velocity(H0, H1, 0.0)
    w1 = geodesic_velocity(H0, H1, 1.0)
    # the bounds assume paths parametrised on [0, 1]
    T = path.times[-1] - path.times[0]
    gap0 = norm(H0, (v0 - w0 / T))
    gap1 = norm(H1, (v1 - w1 / T))
    length_slack = dist - (length - eps)
    slack0 = 2.25 * eps**2 + 4 * eps * norm(H1, v1) - gap0**2
    slack1 = 2.25 * eps**2 + 4 * eps * norm(H0, v0) - gap1**2
    return NearGeodesicReport(
        eps=eps,
        length=length,
        dist=dist,
        tangent_gaps=(gap0, gap1),
        length_ok=bool(length_slack >= -tol),
        tangent_ok=(bool(slack0 >= -tol), bool(slack1 >= -tol)),
        length_slack=length_slack,
        tangent_slacks=(slack0, slack1),
    )
