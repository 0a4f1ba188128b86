"""Convergence studies comparing quantized quantities with their limits.

Each study evaluates a quantity on ``B_k`` for every ``k`` of a grid and
compares it with a limit computed independently on the potential side
(toric closed forms and quadrature), never extrapolated from the
``k``-sequence.  Inequality studies report the ``B_k`` slack of the
finite-dimensional inequality as ``value`` and the slack of the smooth
inequality as ``limit``, and pass when every slack is non-negative up to
the tolerance.
"""
from __future__ import annotations

import enum
import math
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import simpson

from .. import symspace as ss
from ..errors import ContractViolation, DegenerateTriangle, DomainError, ToleranceFailure
from ..numerics import SampledPath, fit_order, integrate
from ..quantize import (
    bergman_density,
    d2_hilb,
    d_hilb,
    fs,
    grad_z,
    hilb,
    i_k,
    iquant_sign,
    l_func,
    toric_hilb_derivs,
    z_func,
)
from ..toric import (
    FS,
    LinearPath,
    SymplecticPotential,
    ToricPath,
    U_FS,
    calabi_energy,
    dE,
    h_distance,
    h_geodesic,
    i_functional_toric,
    k_energy_toric,
    legendre,
    scalar_curvature,
)

__all__ = [
    "StudyKind",
    "StudyInputs",
    "Row",
    "ConvergenceReport",
    "StudyFailure",
    "DEFAULT_KGRID",
    "default_inputs",
    "random_potential",
    "run_study",
]

DEFAULT_KGRID = (8, 16, 32, 64, 128)
TYZ_KGRID = (16, 32, 64, 128, 256)
TYZ_POINTS = 65
MIN_ROWS_FOR_ORDER = 4
BUMP = Polynomial([0.0, 0.0, 1.0, -2.0, 1.0])  # p^2 (1-p)^2

U_BENT = SymplecticPotential((0.0, 0.5, -0.5))  # u_FS + 0.5 p(1-p)
U_CURVED = SymplecticPotential((0.0, 0.0, 0.2, -0.4, 0.2))  # u_FS + 0.2 p^2 (1-p)^2


class StudyKind(str, enum.Enum):
    DISTANCE = "distance"
    SPEED = "speed"
    ACCEL = "accel"
    GRADIENT = "gradient"
    DZDT = "dzdt"
    ANGLE = "angle"
    INEQ1 = "ineq1"
    INEQ2 = "ineq2"
    TYZ = "tyz"
    SANDWICH = "sandwich"
    IQUANT = "iquant"
    ZCONVEX = "zconvex"
    LEMMAS = "lemmas"


class StudyFailure(RuntimeError):
    """A numerical failure inside a study; the message names the study and ``k``."""


@dataclass(frozen=True)
class StudyInputs:
    """Everything a study depends on.  Unused fields are ``None``."""

    kind: StudyKind
    u0: SymplecticPotential = U_FS
    u1: SymplecticPotential | None = None
    u2: SymplecticPotential | None = None
    kgrid: tuple = DEFAULT_KGRID
    tol: float = 0.05
    t: float | None = None
    eps: float | None = None
    samples: int | None = None
    n_times: int | None = None
    seed: int = 0

    def describe(self) -> dict:
        out = {"kind": self.kind.value}
        for name in ("u0", "u1", "u2"):
            u = getattr(self, name)
            if u is not None:
                out[name] = {"const": u.coeffs[0], "coeffs": list(u.coeffs[1:])}
        out["kgrid"] = list(self.kgrid)
        out["tol"] = self.tol
        for name in ("t", "eps", "samples", "n_times"):
            v = getattr(self, name)
            if v is not None:
                out[name] = v
        out["seed"] = self.seed
        return out


_DEFAULTS = {
    StudyKind.DISTANCE: dict(u0=U_FS, u1=U_BENT, tol=0.05),
    StudyKind.SPEED: dict(u0=U_FS, u1=U_BENT, t=0.5, tol=0.1),
    StudyKind.ACCEL: dict(u0=U_FS, u1=U_BENT, t=0.5, tol=0.1),
    StudyKind.GRADIENT: dict(u0=U_CURVED, tol=0.15),
    StudyKind.DZDT: dict(u0=U_BENT, u1=U_CURVED, t=0.5, tol=0.1),
    StudyKind.ANGLE: dict(u0=U_FS, u1=U_CURVED, u2=U_BENT, tol=0.05),
    StudyKind.INEQ1: dict(u0=U_BENT, u1=U_CURVED, tol=1e-7, samples=0),
    StudyKind.INEQ2: dict(u0=U_BENT, u1=U_CURVED, tol=1e-7, samples=0),
    StudyKind.TYZ: dict(u0=U_CURVED, kgrid=TYZ_KGRID, tol=0.3),
    StudyKind.SANDWICH: dict(u0=U_CURVED, tol=1e-7),
    StudyKind.IQUANT: dict(u0=U_CURVED, tol=0.05),
    StudyKind.ZCONVEX: dict(u0=U_BENT, u1=U_CURVED, tol=1e-7, n_times=33),
    StudyKind.LEMMAS: dict(u0=U_BENT, u1=U_CURVED, eps=0.05, tol=1e-7, n_times=33),
}


def default_inputs(kind, seed: int = 0, **overrides) -> StudyInputs:
    """Inputs for ``kind`` with the documented defaults, then ``overrides``."""
    kind = StudyKind(kind)
    values = dict(_DEFAULTS[kind])
    values.update({k: v for k, v in overrides.items() if v is not None})
    return StudyInputs(kind=kind, seed=seed, **values)


@dataclass
class Row:
    k: int
    value: float
    limit: float
    abs_err: float
    rel_err: float

    @classmethod
    def of(cls, k, value, limit) -> "Row":
        value, limit = float(value), float(limit)
        abs_err = abs(value - limit)
        # with a zero limit the relative error falls back to the absolute one
        rel_err = abs_err / abs(limit) if limit != 0.0 else abs_err
        return cls(int(k), value, limit, abs_err, rel_err)


@dataclass
class ConvergenceReport:
    study: StudyKind
    inputs: dict
    rows: list
    fitted_order: float | None
    passed: bool
    criterion: str
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "study": self.study.value,
            "inputs": self.inputs,
            "rows": [asdict(r) for r in self.rows],
            "fitted_order": self.fitted_order,
            "pass": self.passed,
            "criterion": self.criterion,
            "details": self.details,
        }


@contextmanager
def _at_level(kind: StudyKind, k):
    try:
        yield
    except (ToleranceFailure, DomainError, DegenerateTriangle, ContractViolation) as exc:
        where = f"k={k}" if k is not None else "limit"
        raise StudyFailure(f"{kind.value} study failed at {where}: {exc}") from exc


def _fitted_order(rows) -> float | None:
    if len(rows) < MIN_ROWS_FOR_ORDER:
        return None
    errs = [r.abs_err for r in rows]
    if min(errs) <= 0.0:
        return None
    return fit_order([r.k for r in rows], errs)


def random_potential(rng: np.random.Generator, degree: int = 4, scale: float = 0.4) -> SymplecticPotential:
    """An admissible potential with correction coefficients ``c_1..c_degree``
    drawn uniformly from ``[-scale, scale]`` (rejection on convexity)."""
    for _ in range(1000):
        c = rng.uniform(-scale, scale, size=degree)
        u = SymplecticPotential(tuple([0.0, *c]))
        if u.convexity_margin()[0] > 0.05:
            return u
    raise DomainError("could not draw an admissible potential; reduce the coefficient scale")


# -- individual studies ----------------------------------------------------------
# Each returns (rows, details, passed, criterion).


def _final_err_pass(rows, tol):
    last = rows[-1]
    err = last.rel_err if last.limit != 0.0 else last.abs_err
    return err <= tol, f"error at k={last.k} <= {tol:g} (relative, absolute when the limit is 0)"


def _distance(inp: StudyInputs):
    with _at_level(inp.kind, None):
        limit = h_distance(inp.u0, inp.u1)
        P0, P1 = legendre(inp.u0), legendre(inp.u1)
    rows = []
    for k in inp.kgrid:
        with _at_level(inp.kind, k):
            rows.append(Row.of(k, k**-1.5 * ss.distance(hilb(P0, k), hilb(P1, k)), limit))
    return rows, {}, *_final_err_pass(rows, inp.tol)


def _linear_path_data(inp: StudyInputs):
    path = LinearPath(legendre(inp.u0), legendre(inp.u1))
    pot, g, gg = path.at(inp.t), path.phi_dot(inp.t), path.phi_ddot(inp.t)
    return pot, g, gg


def _speed(inp: StudyInputs):
    with _at_level(inp.kind, None):
        pot, g, _ = _linear_path_data(inp)
        limit = pot.integrate(lambda x: g(x) ** 2)
    rows = []
    for k in inp.kgrid:
        with _at_level(inp.kind, k):
            H, Hd = hilb(pot, k), d_hilb(pot, k, g)
            rows.append(Row.of(k, ss.inner(H, Hd, Hd) / k**3, limit))
    return rows, {"path": "linear in phi"}, *_final_err_pass(rows, inp.tol)


def _accel(inp: StudyInputs):
    with _at_level(inp.kind, None):
        pot, g, gg = _linear_path_data(inp)
        limit = pot.integrate(lambda x: (gg(x) - g(x, 1) ** 2 / pot.psi(x, 2)) ** 2)
    rows = []
    for k in inp.kgrid:
        with _at_level(inp.kind, k):
            H, Hd, Hdd = hilb(pot, k), d_hilb(pot, k, g), d2_hilb(pot, k, g, gg)
            acc = Hdd - Hd @ np.linalg.solve(H, Hd)
            rows.append(Row.of(k, ss.inner(H, acc, acc) / k**3, limit))
    return rows, {"path": "linear in phi"}, *_final_err_pass(rows, inp.tol)


def _gradient(inp: StudyInputs):
    with _at_level(inp.kind, None):
        pot = legendre(inp.u0)
        limit = calabi_energy(pot)
    rows = []
    for k in inp.kgrid:
        with _at_level(inp.kind, k):
            H = hilb(pot, k)
            G = grad_z(H, k)
            rows.append(Row.of(k, k**3 * ss.inner(H, G, G), limit))
    return rows, {}, *_final_err_pass(rows, inp.tol)


def _dzdt(inp: StudyInputs):
    path = ToricPath(inp.u0, inp.u1)
    with _at_level(inp.kind, None):
        limit = dE(path.at(inp.t), path.phi_dot(inp.t))
    rows = []
    for k in inp.kgrid:
        with _at_level(inp.kind, k):
            H, Hd, _ = toric_hilb_derivs(path, inp.t, k)
            rows.append(Row.of(k, ss.inner(H, grad_z(H, k), Hd), limit))
    return rows, {"path": "toric geodesic"}, *_final_err_pass(rows, inp.tol)


def _angle(inp: StudyInputs):
    us = (inp.u0, inp.u1, inp.u2)
    with _at_level(inp.kind, None):
        d01, d12, d02 = h_distance(us[0], us[1]), h_distance(us[1], us[2]), h_distance(us[0], us[2])
        if d01 == 0.0 or d12 == 0.0:
            raise DegenerateTriangle("potential-side triangle has a zero side at the vertex u1")
        limit = ss.angle_from_sides(d01, d12, d02)
        pots = [legendre(u) for u in us]
    rows = []
    for k in inp.kgrid:
        with _at_level(inp.kind, k):
            rows.append(Row.of(k, ss.comparison_angle(*(hilb(p, k) for p in pots)), limit))
    return rows, {"vertex": "u1"}, *_final_err_pass(rows, inp.tol)


def _ineq1_h(u0, u1) -> float:
    # d(phi0, phi1) sqrt(Ca(phi1)) - (E(phi1) - E(phi0))
    return h_distance(u0, u1) * math.sqrt(calabi_energy(legendre(u1))) - (k_energy_toric(u1) - k_energy_toric(u0))


def _ineq2_h(u0, u1) -> float:
    # dE_{phi1}(phi_dot(1)) - dE_{phi0}(phi_dot(0)) along the geodesic
    p0, g0 = h_geodesic(u0, u1, 0.0)
    p1, g1 = h_geodesic(u0, u1, 1.0)
    return dE(p1, g1) - dE(p0, g0)


def _ineq1_b(H0, H1, k) -> float:
    return ss.distance(H0, H1) * ss.norm(H1, grad_z(H1, k)) - (z_func(H1, k) - z_func(H0, k))


def _ineq2_b(H0, H1, k) -> float:
    v0, v1 = ss.geodesic_velocity(H0, H1, 0.0), ss.geodesic_velocity(H0, H1, 1.0)
    return ss.inner(H1, grad_z(H1, k), v1) - ss.inner(H0, grad_z(H0, k), v0)


def _inequality(inp: StudyInputs, h_side, b_side, label):
    with _at_level(inp.kind, None):
        limit = h_side(inp.u0, inp.u1)
        P0, P1 = legendre(inp.u0), legendre(inp.u1)
    rows = []
    for k in inp.kgrid:
        with _at_level(inp.kind, k):
            rows.append(Row.of(k, b_side(hilb(P0, k), hilb(P1, k), k), limit))
    samples = []
    rng = np.random.default_rng(inp.seed)
    for i in range(inp.samples or 0):
        a, b = random_potential(rng), random_potential(rng)
        with _at_level(inp.kind, None):
            slack = h_side(a, b)
        samples.append({"sample": i, "u0": list(a.coeffs[1:]), "u1": list(b.coeffs[1:]), "slack": slack})
    worst = min([limit] + [r.value for r in rows] + [s["slack"] for s in samples])
    details = {"inequality": label, "min_slack": worst, "samples": samples}
    return rows, details, worst >= -inp.tol, f"every slack >= -{inp.tol:g}"


def _ineq1(inp):
    return _inequality(inp, _ineq1_h, _ineq1_b, "E(phi1) - E(phi0) <= d(phi0, phi1) sqrt(Ca(phi1))")


def _ineq2(inp):
    return _inequality(inp, _ineq2_h, _ineq2_b, "dE_phi0(phi_dot(0)) <= dE_phi1(phi_dot(1))")


def _tyz(inp: StudyInputs):
    p = np.arange(1, TYZ_POINTS + 1) / (TYZ_POINTS + 1)
    with _at_level(inp.kind, None):
        pot = legendre(inp.u0)
        half_S = 0.5 * scalar_curvature(inp.u0)(p)
    rows = []
    for k in inp.kgrid:
        with _at_level(inp.kind, k):
            rho = bergman_density(pot, k).on_chart(p)
            rows.append(Row.of(k, np.max(np.abs(rho - k - half_S)), 0.0))
    values = [r.value for r in rows]
    details = {"points": TYZ_POINTS, "grid": "p = i/66, i = 1..65"}
    criterion = f"remainder order within [{-1 - inp.tol:g}, {-1 + inp.tol:g}], or remainder <= 1e-9 everywhere"
    if max(values) <= 1e-9:
        return rows, {**details, "exact": True}, True, criterion
    if len(rows) < 2:
        return rows, details, False, criterion
    order = fit_order([r.k for r in rows], values)
    details["remainder_order"] = order
    return rows, details, abs(order + 1.0) <= inp.tol, criterion


def _sandwich(inp: StudyInputs):
    with _at_level(inp.kind, None):
        pot = legendre(inp.u0)
        limit = k_energy_toric(inp.u0)
    rows, levels = [], []
    worst = math.inf
    for k in inp.kgrid:
        with _at_level(inp.kind, k):
            H = hilb(pot, k)
            z = z_func(H, k)
            lower, upper = l_func(fs(H, k), k), l_func(pot, k)
        rows.append(Row.of(k, z, limit))
        levels.append({"k": k, "lower": lower, "z": z, "upper": upper, "lower_slack": z - lower, "upper_slack": upper - z})
        worst = min(worst, z - lower, upper - z)
    details = {"levels": levels, "min_slack": worst}
    return rows, details, worst >= -inp.tol, f"L_k(FS_k Hilb_k phi) <= Z_k(Hilb_k phi) <= L_k(phi) within {inp.tol:g}"


def _iquant(inp: StudyInputs):
    with _at_level(inp.kind, None):
        pot = legendre(inp.u0)
        limit = i_functional_toric(inp.u0)
    with _at_level(inp.kind, inp.kgrid[0]):
        sigma = iquant_sign(FS, inp.kgrid[0])
    rows = []
    for k in inp.kgrid:
        with _at_level(inp.kind, k):
            val = sigma * (i_k(hilb(pot, k)) - i_k(hilb(FS, k))) / k**2
        rows.append(Row.of(k, val, limit))
    passed, crit = _final_err_pass(rows, inp.tol)
    return rows, {"sigma": sigma, "base_point": "FS"}, passed, crit


def _zconvex(inp: StudyInputs):
    ts = np.linspace(0.0, 1.0, inp.n_times)
    with _at_level(inp.kind, None):
        E = [k_energy_toric(SymplecticPotential.interpolate(inp.u0, inp.u1, t)) for t in ts]
        limit = float(np.min(np.diff(E, 2)))
        P0, P1 = legendre(inp.u0), legendre(inp.u1)
    rows = []
    for k in inp.kgrid:
        with _at_level(inp.kind, k):
            H0, H1 = hilb(P0, k), hilb(P1, k)
            z = [z_func(ss.geodesic(H0, H1, t), k) for t in ts]
        rows.append(Row.of(k, float(np.min(np.diff(z, 2))), limit))
    worst = min([limit] + [r.value for r in rows])
    details = {"statistic": "minimum second difference on the time grid", "min_second_difference": worst}
    return rows, details, worst >= -inp.tol, f"second differences >= -{inp.tol:g}"


def _h_length(path: ToricPath, ts) -> float:
    speeds = [math.sqrt(integrate(lambda p, U=path.u_dot(t): U(p) ** 2)[0]) for t in ts]
    return float(simpson(speeds, x=ts))


def _lemmas(inp: StudyInputs):
    ts = np.linspace(0.0, 1.0, inp.n_times)
    path = ToricPath(inp.u0, inp.u1, BUMP, inp.eps)
    with _at_level(inp.kind, None):
        for t in ts:
            path.u_at(t).validate()
        limit = _h_length(path, ts)
    rows, levels = [], []
    ok = True
    for k in inp.kgrid:
        with _at_level(inp.kind, k):
            trip = [toric_hilb_derivs(path, t, k) for t in ts]
            sp = SampledPath(ts, np.array([a for a, _, _ in trip]),
                             {1: np.array([b for _, b, _ in trip]), 2: np.array([c for _, _, c in trip])})
            rep = ss.near_geodesic_check(sp, inp.tol)
        ok = ok and rep.ok
        rows.append(Row.of(k, rep.length / k**1.5, limit))
        levels.append({
            "k": k, "eps": rep.eps, "length": rep.length, "dist": rep.dist,
            "tangent_gaps": list(rep.tangent_gaps), "length_slack": rep.length_slack,
            "tangent_slacks": list(rep.tangent_slacks), "ok": rep.ok,
        })
    details = {"path": "toric geodesic + eps t(1-t) p^2(1-p)^2", "levels": levels}
    return rows, details, ok, f"length and tangent bounds hold within {inp.tol:g} at every k"


_RUNNERS = {
    StudyKind.DISTANCE: _distance,
    StudyKind.SPEED: _speed,
    StudyKind.ACCEL: _accel,
    StudyKind.GRADIENT: _gradient,
    StudyKind.DZDT: _dzdt,
    StudyKind.ANGLE: _angle,
    StudyKind.INEQ1: _ineq1,
    StudyKind.INEQ2: _ineq2,
    StudyKind.TYZ: _tyz,
    StudyKind.SANDWICH: _sandwich,
    StudyKind.IQUANT: _iquant,
    StudyKind.ZCONVEX: _zconvex,
    StudyKind.LEMMAS: _lemmas,
}

_NEEDS = {
    StudyKind.DISTANCE: ("u1",),
    StudyKind.SPEED: ("u1", "t"),
    StudyKind.ACCEL: ("u1", "t"),
    StudyKind.DZDT: ("u1", "t"),
    StudyKind.ANGLE: ("u1", "u2"),
    StudyKind.INEQ1: ("u1",),
    StudyKind.INEQ2: ("u1",),
    StudyKind.ZCONVEX: ("u1", "n_times"),
    StudyKind.LEMMAS: ("u1", "eps", "n_times"),
}


def run_study(inputs: StudyInputs) -> ConvergenceReport:
    """Run one study.

    Raises
    ------
    ContractViolation
        If a required input is missing.
    StudyFailure
        On a quadrature or positivity failure; the message names ``k``.
    """
    kind = StudyKind(inputs.kind)
    for name in _NEEDS.get(kind, ()):
        if getattr(inputs, name) is None:
            raise ContractViolation(f"{kind.value} study needs '{name}'")
    if inputs.t is not None and not 0.0 <= inputs.t <= 1.0:
        raise ContractViolation(f"t must lie in [0, 1], got {inputs.t}")
    inputs = StudyInputs(**{**inputs.__dict__, "kind": kind, "kgrid": tuple(sorted(inputs.kgrid))})
    rows, details, passed, criterion = _RUNNERS[kind](inputs)
    rows.sort(key=lambda r: r.k)
    return ConvergenceReport(
        study=kind,
        inputs=inputs.describe(),
        rows=rows,
        fitted_order=_fitted_order(rows),
        passed=bool(passed),
        criterion=criterion,
        details=details,
    )
