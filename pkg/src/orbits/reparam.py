"""Loop-dependent time change and the blow-up map ``z -> q_z``.

For a loop ``z`` with ``||z|| > 0`` the time map is

    t_z(tau) = int_0^tau |z|^2 ds / ||z||^2,

which is a homeomorphism of the circle even when ``z`` has zeros (they are
inflection points of ``t_z``).  ``q_z(t) = z(tau_z(t))^2`` with
``tau_z = t_z^{-1}`` is the unregularized orbit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DegenerateCollisionError, DegenerateLoopError
from .loops import PERIODIC, Loop, antiderivative, evaluate, make_loop

DEFAULT_CTOL = 1e-7


@dataclass(frozen=True)
class Collision:
    tau: float
    speed: float  # |z'(tau)|
    t2: float  # t_z''(tau), vanishes at a collision
    t3: float  # t_z'''(tau) = 2 |z'|^2 / ||z||^2 there

    def to_dict(self) -> dict:
        return {"tau": self.tau, "speed": self.speed, "t2": self.t2, "t3": self.t3}


@dataclass(frozen=True, eq=False)
class ReparamTable:
    """Node values of ``t_z`` plus what is needed to evaluate it anywhere."""

    source: Loop
    cumulative: np.ndarray
    norm_sq: float
    collisions: tuple

    def _series(self):
        x = np.abs(self.source.samples) ** 2
        n = x.size
        xh = np.fft.fft(x) / n
        k = np.fft.fftfreq(n, 1.0 / n)
        keep = (k != 0) & (np.arange(n) != n // 2)
        return k[keep], xh[keep]

    def t_at(self, tau) -> np.ndarray:
        """``t_z`` at arbitrary parameters (spectral antiderivative of ``|z|^2``)."""
        tau = np.asarray(tau, dtype=float)
        k, xh = self._series()
        coef = xh / (2j * np.pi * k)
        periodic = (np.exp(2j * np.pi * np.multiply.outer(tau, k)) - 1.0) @ coef
        return tau + periodic.real / self.norm_sq

    def t_prime_at(self, tau) -> np.ndarray:
        tau = np.asarray(tau, dtype=float)
        k, xh = self._series()
        return 1.0 + (np.exp(2j * np.pi * np.multiply.outer(tau, k)) @ xh).real / self.norm_sq


def _norm_sq(z: Loop) -> float:
    n2 = float(np.mean(np.abs(z.samples) ** 2))
    if not n2 > 0.0:
        raise DegenerateLoopError("loop has zero L2 norm")
    return n2


def node_times(z: Loop) -> np.ndarray:
    """``t_z`` at the nodes; ``t_z(0) = 0`` exactly."""
    x = np.abs(z.samples) ** 2
    n2 = _norm_sq(z)
    jx = antiderivative(x)
    return z.nodes + (jx - jx[0]) / n2


def time_map(z: Loop, ctol: float = DEFAULT_CTOL) -> ReparamTable:
    n2 = _norm_sq(z)
    cumulative = node_times(z)
    cumulative.setflags(write=False)
    found = find_collisions(z, ctol, strict=False)
    return ReparamTable(z, cumulative, n2, tuple(c.tau for c in found))


def invert_time(table: ReparamTable, t, tol: float = 1e-13, max_iter: int = 200):
    """Solve ``t_z(tau) = t`` by bracketing plus safeguarded Newton."""
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    n = table.source.n
    nodes = np.append(table.cumulative, 1.0)
    j = np.clip(np.searchsorted(nodes, t, side="right") - 1, 0, n - 1)
    lo = j / n
    hi = (j + 1) / n
    span = nodes[j + 1] - nodes[j]
    frac = np.where(span > 0, (t - nodes[j]) / np.where(span > 0, span, 1.0), 0.0)
    tau = lo + np.clip(frac, 0.0, 1.0) / n
    active = np.ones(t.shape, dtype=bool)
    floor = DEFAULT_CTOL ** 2
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        ta = tau[idx]
        f = table.t_at(ta) - t[idx]
        fp = table.t_prime_at(ta)
        done = (np.abs(f) < tol) | (hi[idx] - lo[idx] < 1e-16)
        lo[idx] = np.where(f < 0, ta, lo[idx])
        hi[idx] = np.where(f > 0, ta, hi[idx])
        step = ta - f / np.where(fp > floor, fp, 1.0)
        ok = (fp > floor) & (step > lo[idx]) & (step < hi[idx])
        tau[idx] = np.where(done, ta, np.where(ok, step, 0.5 * (lo[idx] + hi[idx])))
        active[idx[done]] = False
    return float(tau[0]) if scalar else tau


def sigma_map(z: Loop, m: int | None = None) -> Loop:
    """Blow-down ``z -> q_z`` sampled at ``m`` uniform times (default ``4 N``)."""
    m = 4 * z.n if m is None else m
    table = time_map(z)
    tau = invert_time(table, np.arange(m) / m)
    return make_loop(evaluate(z, tau) ** 2, PERIODIC)


@dataclass(frozen=True)
class OrbitJets:
    """``q`` and its time derivatives at uniform times, via the chain rule."""

    t: np.ndarray
    tau: np.ndarray
    z: np.ndarray
    q: np.ndarray
    qdot: np.ndarray
    qddot: np.ndarray


def orbit_jets(z: Loop, m: int | None = None) -> OrbitJets:
    """Derivatives of ``q_z`` computed from ``z`` instead of from ``q``.

    Finite wherever ``z(tau_z(t)) != 0``; at collision instants the entries
    are ``inf``/``nan``.
    """
    m = 4 * z.n if m is None else m
    table = time_map(z)
    t = np.arange(m) / m
    tau = invert_time(table, t)
    z0 = evaluate(z, tau)
    z1 = evaluate(z, tau, 1)
    z2 = evaluate(z, tau, 2)
    n2 = table.norm_sq
    with np.errstate(divide="ignore", invalid="ignore"):
        zb = np.conj(z0)
        qdot = 2 * n2 * z1 / zb
        qddot = 2 * n2 ** 2 / (np.abs(z0) ** 2 * zb) * (z2 - np.abs(z1) ** 2 / zb)
    return OrbitJets(t, tau, z0, z0 ** 2, qdot, qddot)


def _refine_minimum(z: Loop, tau0: float, width: float) -> float:
    """Local minimizer of ``|z(tau)|^2`` near ``tau0``."""
    tau = tau0
    for _ in range(30):
        v, d1, d2 = (evaluate(z, tau, k) for k in range(3))
        g = (np.conj(v) * d1).real
        gp = abs(d1) ** 2 + (np.conj(v) * d2).real
        if gp <= 0:
            break
        step = g / gp
        tau = tau - step
        if abs(tau - tau0) > width:
            break
        if abs(step) < 1e-15:
            return float(tau)
    res = minimize_scalar(lambda s: abs(evaluate(z, s)) ** 2, bounds=(tau0 - width, tau0 + width),
                          method="bounded", options={"xatol": 1e-15})
    return float(res.x)


def find_collisions(z: Loop, ctol: float = DEFAULT_CTOL, strict: bool = True) -> list[Collision]:
    mod = np.abs(z.samples)
    zmax = mod.max()
    n2 = _norm_sq(z)
    n = z.n
    local_min = (mod <= np.roll(mod, 1)) & (mod <= np.roll(mod, -1)) & (mod < 0.5 * zmax)
    dmax = np.abs(evaluate(z, z.nodes, 1)).max()
    found: list[Collision] = []
    for j in np.flatnonzero(local_min):
        tau = _refine_minimum(z, j / n, 1.5 / n) % 1.0
        v = evaluate(z, tau)
        if abs(v) >= ctol * zmax:
            continue
        if any(min(abs(tau - c.tau), 1 - abs(tau - c.tau)) < 1e-6 for c in found):
            continue
        d1 = evaluate(z, tau, 1)
        d2 = evaluate(z, tau, 2)
        speed = float(abs(d1))
        if strict and speed < ctol * dmax:
            raise DegenerateCollisionError(f"z and z' both vanish at tau={tau:.6g}")
        t2 = 2 * float((np.conj(v) * d1).real) / n2
        t3 = 2 * float(abs(d1) ** 2 + (np.conj(v) * d2).real) / n2
        found.append(Collision(float(tau), speed, t2, t3))
    found.sort(key=lambda c: c.tau)
    return found


def collision_report(z: Loop, ctol: float = DEFAULT_CTOL) -> list[Collision]:
    """Isolated zeros of ``z`` with speed and ``t_z`` derivatives there."""
    return find_collisions(z, ctol, strict=True)
