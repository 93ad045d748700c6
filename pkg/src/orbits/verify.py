"""Checks that tie a blown-up solution back to the original equation of motion

    q'' + B(q) i q' + q/|q|^3 + grad E_t(q) = 0.

Derivatives of ``q`` can come from two places.  For a collision-free orbit the
blown-down samples are smooth and spectral differentiation is fine.  Orbits
through the origin are only Hoelder there, so spectral derivatives of ``q``
ring everywhere; passing ``source=z`` switches to chain-rule derivatives built
from the (smooth) regularized loop instead.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.integrate import solve_ivp

from .errors import InvalidInputError, NearCollisionError, SingularLoopError
from .fields import FieldModel
from .loops import ANTIPERIODIC, PERIODIC, Loop, differentiate, evaluate, make_loop
from .reparam import Collision, find_collisions, orbit_jets, sigma_map, time_map

log = logging.getLogger(__name__)

WINDOW_HALFWIDTH = 0.02
R_MIN = 1e-3
SINGULAR_TOL = 1e-9


def _jets(q: Loop, source: Loop | None):
    """``(t, q, qdot, qddot)`` at the nodes of ``q``."""
    if q.parity != PERIODIC:
        raise InvalidInputError("orbits q(t) are periodic loops")
    if source is None:
        s = q.samples
        d1 = differentiate(s, PERIODIC)
        return q.nodes, s, d1, differentiate(d1, PERIODIC)
    jets = orbit_jets(source, q.n)
    return jets.t, jets.q, jets.qdot, jets.qddot


def _window_mask(t: np.ndarray, centers, halfwidth: float) -> np.ndarray:
    keep = np.ones(t.shape, dtype=bool)
    for c in centers:
        d = np.abs((t - c + 0.5) % 1.0 - 0.5)
        keep &= d > halfwidth
    return keep


def collision_times(z: Loop) -> list[float]:
    """Images ``t_z(tau_0)`` of the zeros of ``z``."""
    table = time_map(z)
    return [float(table.t_at(tau)) for tau in table.collisions]


def ode_residual(q: Loop, model: FieldModel, exclusion=(), halfwidth: float = WINDOW_HALFWIDTH,
                 source: Loop | None = None) -> float:
    """Sup-norm of the equation-of-motion defect outside the exclusion windows.

    Parameters
    ----------
    q : Loop
        Periodic samples of ``q(t)`` at ``t_j = j/M``.
    exclusion : sequence of float
        Centres of windows (in ``t``) that are skipped; usually collision times.
    source : Loop, optional
        Regularized loop with ``q = sigma_map(source)``.  Its collisions are
        added to ``exclusion`` automatically.
    """
    centers = list(exclusion)
    if source is not None:
        centers += collision_times(source)
    t, s, d1, d2 = _jets(q, source)
    keep = _window_mask(t, centers, halfwidth)
    mod = np.abs(s)
    if np.any(mod[keep] < SINGULAR_TOL * mod.max()):
        raise SingularLoopError("q vanishes outside the exclusion windows")
    t, s, d1, d2, mod = t[keep], s[keep], d1[keep], d2[keep], mod[keep]
    model.check_domain(s, t)
    res = d2 + model.B(s) * 1j * d1 + s / mod ** 3 + model.gradE(s, t)
    return float(np.abs(res).max()) if res.size else 0.0


class BetaFit(NamedTuple):
    beta: Loop
    mu_fit: float
    imag_defect: float  # max |Im(beta)| |q|^3
    fit_defect: float  # max |Re(beta)|q|^3 - mu_fit|


def beta_mu(q: Loop, model: FieldModel, source: Loop | None = None) -> BetaFit:
    """``beta = (q'' + B i q' + grad E)/q`` and the constant ``mu`` with ``beta = mu/|q|^3``.

    ``mu_fit`` is the least-squares constant fit of ``Re(beta) |q|^3``, i.e.
    its node mean.  Raises :class:`SingularLoopError` if ``q`` touches 0;
    use :func:`mu_from_collisions` for collision orbits.
    """
    t, s, d1, d2 = _jets(q, source)
    mod = np.abs(s)
    if not np.all(mod > SINGULAR_TOL * mod.max()):
        raise SingularLoopError("q passes through the origin; use mu_from_collisions")
    beta = (d2 + model.B(s) * 1j * d1 + model.gradE(s, t)) / s
    prod = beta * mod ** 3
    mu = float(prod.real.mean())
    return BetaFit(make_loop(beta, PERIODIC), mu, float(np.abs(prod.imag).max()),
                   float(np.abs(prod.real - mu).max()))


def mu_from_collisions(z: Loop, collisions: list[Collision] | None = None) -> list[float]:
    """``mu_j = -2 ||z||^4 |z'(tau_j)|^2`` at each zero of ``z``."""
    if collisions is None:
        collisions = find_collisions(z, strict=False)
    n2 = float(np.mean(np.abs(z.samples) ** 2))
    return [float(-2 * n2 ** 2 * abs(evaluate(z, c.tau, 1)) ** 2) for c in collisions]


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    q: np.ndarray
    v: np.ndarray

    @property
    def end(self):
        return self.q[-1], self.v[-1]


def integrate_ode(q0: complex, v0: complex, model: FieldModel, T: float, h: float | None = None,
                  r_min: float = R_MIN, rtol: float = 1e-12, atol: float = 1e-12) -> Trajectory:
    """Adaptive Runge-Kutta 4(5) integration of the unregularized equation.

    ``h`` caps the step size.  Raises :class:`NearCollisionError` (carrying the
    abort time) once ``|q| < r_min``.
    """
    q0, v0 = complex(q0), complex(v0)
    if abs(q0) < r_min:
        raise NearCollisionError("initial point inside r_min", 0.0)
    if T < 0:
        raise InvalidInputError("T must be non-negative")
    if T == 0:
        return Trajectory(np.zeros(1), np.array([q0]), np.array([v0]))

    def rhs(t, y):
        q = y[0] + 1j * y[1]
        v = y[2] + 1j * y[3]
        a = -model.B(q) * 1j * v - q / abs(q) ** 3 - model.gradE(q, t)
        return [v.real, v.imag, complex(a).real, complex(a).imag]

    def near(t, y):
        return np.hypot(y[0], y[1]) - r_min

    near.terminal = True
    near.direction = -1
    kw = {} if h is None else {"max_step": h}
    sol = solve_ivp(rhs, (0.0, T), [q0.real, q0.imag, v0.real, v0.imag], method="RK45",
                    rtol=rtol, atol=atol, events=near, **kw)
    if sol.status == 1:
        tc = float(sol.t_events[0][0])
        raise NearCollisionError(f"|q| dropped below r_min={r_min:g} at t={tc:.6g}", tc)
    if sol.status != 0:
        raise RuntimeError(sol.message)
    y = sol.y
    return Trajectory(sol.t, y[0] + 1j * y[1], y[2] + 1j * y[3])


def shooting_gap(q: Loop, model: FieldModel, source: Loop | None = None, T: float = 1.0) -> float:
    """``|q(T) - q(0)| + |q'(T) - q'(0)|`` after direct integration from ``q``'s initial data."""
    _, s, d1, _ = _jets(q, source)
    traj = integrate_ode(s[0], d1[0], model, T)
    qe, ve = traj.end
    return float(abs(qe - s[0]) + abs(ve - d1[0]))


def energy_along(q: Loop, model: FieldModel, source: Loop | None = None) -> tuple[Loop, float]:
    """``H = |q'|^2/2 + E_t(q) - 1/|q|`` at the nodes, and its spread ``max - min``."""
    t, s, d1, _ = _jets(q, source)
    mod = np.abs(s)
    if not np.all(mod > SINGULAR_TOL * max(mod.max(), 1e-300)):
        raise SingularLoopError("energy is undefined at a collision")
    h = 0.5 * np.abs(d1) ** 2 + model.E(s, t) - 1.0 / mod
    return make_loop(h, PERIODIC), float(h.max() - h.min())


def winding_mod2(z: Loop) -> str:
    """Parity class of the orbit: periodic ``z`` -> even, twisted ``z`` -> odd."""
    return "odd" if z.parity == ANTIPERIODIC else "even"


@dataclass(frozen=True)
class Thresholds:
    ode_residual: float = 1e-5
    mu: float = 1e-5
    imag_defect: float = 1e-7
    mu_spread: float = 1e-7
    shooting_gap: float = 1e-5
    energy_drift: float = 1e-6


@dataclass
class VerificationReport:
    ode_residual_sup: float
    mu_fit: float | None
    mu_j: list
    energy_drift: float | None
    shooting_gap: float | None
    winding_mod2: str
    imag_defect: float | None = None
    passed: bool = False
    failures: list = field(default_factory=list)
    thresholds: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "VerificationReport":
        return cls(**data)


def verify_solution(z: Loop, model: FieldModel, thresholds: Thresholds | None = None,
                    halfwidth: float = WINDOW_HALFWIDTH, m: int | None = None) -> VerificationReport:
    """Run every applicable check on a regularized loop and collect a verdict.

    Collision-free orbits get the ODE residual, the beta/mu fit, a shooting
    cross-check and (for autonomous models) the energy drift.  Collision
    orbits get the windowed ODE residual and the z-side ``mu_j``.
    """
    th = thresholds or Thresholds()
    q = sigma_map(z, m)
    collisions = find_collisions(z, strict=False)
    failures = []
    ode = ode_residual(q, model, halfwidth=halfwidth, source=z)
    if not ode < th.ode_residual:
        failures.append("ode_residual")
    mu_fit = imag = gap = drift = None
    mu_j: list = []
    if collisions:
        mu_j = mu_from_collisions(z, collisions)
        if any(abs(m_ + 1.0) > th.mu for m_ in mu_j):
            failures.append("mu_j")
        if max(mu_j) - min(mu_j) > th.mu_spread:
            failures.append("mu_spread")
    else:
        fit = beta_mu(q, model, source=z)
        mu_fit, imag = fit.mu_fit, fit.imag_defect
        if abs(mu_fit + 1.0) > th.mu:
            failures.append("mu_fit")
        if imag > th.imag_defect:
            failures.append("imag_defect")
        try:
            gap = shooting_gap(q, model, source=z)
        except NearCollisionError:
            gap = float("inf")
        if not gap < th.shooting_gap:
            failures.append("shooting_gap")
        if model.autonomous:
            drift = energy_along(q, model, source=z)[1]
            if not drift < th.energy_drift:
                failures.append("energy_drift")
    report = VerificationReport(ode, mu_fit, mu_j, drift, gap, winding_mod2(z), imag,
                                not failures, failures, asdict(th))
    log.info("verify: passed=%s failures=%s", report.passed, failures)
    return report
