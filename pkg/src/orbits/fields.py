"""Electric and magnetic field bundles for planar Stark-Zeeman systems.

A :class:`FieldModel` supplies the smooth part ``E(q, t)`` of the potential
(the Coulomb term ``-1/|q|`` of the regularized primary is never part of
``E``), its time derivative and complex gradient ``dE/dx + i dE/dy``, the
magnetic field ``B`` and a gauge ``A = (A1, A2)`` with ``rot A = B``.

Units: the Coulomb coefficient and the period are both 1, so ``t`` lives in
``[0, 1)`` and every ``E`` is 1-periodic in ``t``.

All evaluators broadcast over numpy arrays of positions and times.
"""

from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

from .errors import DomainError, InvalidParameterError, UnknownPresetError

TWO_PI = 2 * np.pi


class FieldSample(NamedTuple):
    E: np.ndarray
    dE_dt: np.ndarray
    gradE: np.ndarray
    B: np.ndarray
    A: tuple


class FieldModel:
    """Base class; the default is the pure Kepler problem (all fields zero)."""

    id = "kepler"
    autonomous = True

    def __init__(self, params: dict | None = None, exclusion_radius: float | None = None):
        self.params = dict(params or {})
        self.exclusion_radius = exclusion_radius

    def __repr__(self):
        return f"{type(self).__name__}({self.params!r})"

    def to_dict(self) -> dict:
        out = {"preset": self.id, "params": _jsonable(self.params)}
        if self.exclusion_radius is not None:
            out["exclusion_radius"] = self.exclusion_radius
        return out

    # evaluators -- override in subclasses
    def E(self, q, t):
        return np.zeros(np.broadcast(np.asarray(q), np.asarray(t)).shape)

    def dE_dt(self, q, t):
        return np.zeros(np.broadcast(np.asarray(q), np.asarray(t)).shape)

    def gradE(self, q, t):
        return np.zeros(np.broadcast(np.asarray(q), np.asarray(t)).shape, dtype=complex)

    def B(self, q):
        return np.zeros(np.shape(q))

    def A(self, q):
        z = np.zeros(np.shape(q))
        return z, z.copy()

    def A_complex(self, q):
        a1, a2 = self.A(q)
        return a1 + 1j * a2

    def A_jacobian(self, q):
        """Partial derivatives ``(dA1/dq1, dA1/dq2, dA2/dq1, dA2/dq2)``."""
        z = np.zeros(np.shape(q))
        return z, z, z, z

    def check_domain(self, q, t=0.0) -> None:
        """Raise :class:`DomainError` if ``q`` enters an excluded disc."""


class Kepler(FieldModel):
    pass


class RotatingKepler(FieldModel):
    """Kepler problem seen from a frame rotating with angular velocity ``omega``.

    Centrifugal potential ``-omega^2 |q|^2 / 2``; Coriolis force as a constant
    magnetic field ``B = 2 omega`` in the symmetric gauge.
    """

    id = "rotating_kepler"

    def __init__(self, params=None, exclusion_radius=None):
        super().__init__({"omega": 1.0, **(params or {})}, exclusion_radius)
        self.omega = float(self.params["omega"])

    def E(self, q, t):
        q, t = np.broadcast_arrays(np.asarray(q), np.asarray(t, dtype=float))
        return -0.5 * self.omega ** 2 * np.abs(q) ** 2

    def gradE(self, q, t):
        q, t = np.broadcast_arrays(np.asarray(q, dtype=complex), np.asarray(t, dtype=float))
        return -self.omega ** 2 * q

    def B(self, q):
        return np.full(np.shape(q), 2 * self.omega)

    def A(self, q):
        q = np.asarray(q, dtype=complex)
        return -self.omega * q.imag, self.omega * q.real

    def A_jacobian(self, q):
        shape = np.shape(q)
        zero = np.zeros(shape)
        w = np.full(shape, self.omega)
        return zero, -w, w, zero.copy()


class ForcedStark(FieldModel):
    """Uniform force ``f`` modulated by ``cos(2 pi m t)``; no magnetic field."""

    id = "forced_stark"
    autonomous = False

    def __init__(self, params=None, exclusion_radius=None):
        params = {"f": 1.0, "m": 1, **(params or {})}
        super().__init__(params, exclusion_radius)
        self.f = complex(params["f"]) + 1j * float(params.get("f_im", 0.0))
        self.m = _integer(params["m"], "m")

    def _phase(self, t):
        return TWO_PI * self.m * np.asarray(t, dtype=float)

    def E(self, q, t):
        return (np.conj(self.f) * np.asarray(q)).real * np.cos(self._phase(t))

    def dE_dt(self, q, t):
        return -TWO_PI * self.m * (np.conj(self.f) * np.asarray(q)).real * np.sin(self._phase(t))

    def gradE(self, q, t):
        q, c = np.broadcast_arrays(np.asarray(q, dtype=complex), np.cos(self._phase(t)))
        return self.f * c


class Bicircular(FieldModel):
    """Moon-centred rotating frame with the earth at rest and the sun circling.

    ``E(q, t) = -|q - b|^2/2 - mE/|q - qE| - mS/|q - qS(t)| + mS/aS^3 Re(conj(qS) q)``
    with the earth at ``qE = aE`` on the positive real axis, ``b`` the
    earth-moon barycentre and ``qS(t) = aS exp(-2 pi i omega_s t)``.  The frame
    rotates with unit angular velocity (``B = 2``).  By default ``aE`` is
    chosen from Kepler's third law ``aE^3 = 1 + mE`` so the moon is an
    equilibrium of the tidal field.
    """

    id = "bicircular"
    autonomous = False
    defaults = {"mE": 81.3, "mS": 1000.0, "aS": 40.0, "omega_s": 1}

    def __init__(self, params=None, exclusion_radius=None):
        params = {**self.defaults, **(params or {})}
        params.setdefault("aE", (1.0 + float(params["mE"])) ** (1.0 / 3.0))
        super().__init__(params, exclusion_radius)
        self.mE = float(params["mE"])
        self.mS = float(params["mS"])
        self.aE = float(params["aE"])
        self.aS = float(params["aS"])
        self.omega_s = _integer(params["omega_s"], "omega_s")
        if self.mE < 0 or self.mS < 0:
            raise InvalidParameterError("masses must be non-negative")
        if self.aE <= 0 or self.aS <= 0:
            raise InvalidParameterError("radii must be positive")
        if self.exclusion_radius is None:
            self.exclusion_radius = 0.1 * self.aE
        self.qE = complex(self.aE)
        self.bary = self.mE * self.qE / (1.0 + self.mE)
        self.tidal = self.mS / self.aS ** 3

    def sun(self, t):
        return self.aS * np.exp(-1j * TWO_PI * self.omega_s * np.asarray(t, dtype=float))

    def sun_velocity(self, t):
        return -1j * TWO_PI * self.omega_s * self.sun(t)

    def check_domain(self, q, t=0.0):
        q = np.asarray(q)
        r = self.exclusion_radius
        if np.any(np.abs(q - self.qE) < r):
            raise DomainError("position inside the exclusion disc of the earth")
        if self.mS > 0 and np.any(np.abs(q - self.sun(t)) < r):
            raise DomainError("position inside the exclusion disc of the sun")

    def E(self, q, t):
        q = np.asarray(q, dtype=complex)
        qs = self.sun(t)
        out = -0.5 * np.abs(q - self.bary) ** 2 - self.mE / np.abs(q - self.qE)
        if self.mS:
            out = out - self.mS / np.abs(q - qs) + self.tidal * (np.conj(qs) * q).real
        return np.broadcast_to(out, np.broadcast(q, np.asarray(t)).shape).copy()

    def dE_dt(self, q, t):
        q = np.asarray(q, dtype=complex)
        shape = np.broadcast(q, np.asarray(t)).shape
        if not self.mS:
            return np.zeros(shape)
        qs = self.sun(t)
        vs = self.sun_velocity(t)
        d = q - qs
        out = -self.mS * (np.conj(d) * vs).real / np.abs(d) ** 3 + self.tidal * (np.conj(vs) * q).real
        return np.broadcast_to(out, shape).copy()

    def gradE(self, q, t):
        q = np.asarray(q, dtype=complex)
        de = q - self.qE
        out = -(q - self.bary) + self.mE * de / np.abs(de) ** 3
        if self.mS:
            qs = self.sun(t)
            ds = q - qs
            out = out + self.mS * ds / np.abs(ds) ** 3 + self.tidal * qs
        return np.broadcast_to(out, np.broadcast(q, np.asarray(t)).shape).copy()

    def B(self, q):
        return np.full(np.shape(q), 2.0)

    def A(self, q):
        q = np.asarray(q, dtype=complex)
        return -q.imag, q.real

    def A_jacobian(self, q):
        shape = np.shape(q)
        zero = np.zeros(shape)
        one = np.ones(shape)
        return zero, -one, one, zero.copy()


PRESETS: dict[str, type[FieldModel]] = {
    "kepler": Kepler,
    "rotating_kepler": RotatingKepler,
    "forced_stark": ForcedStark,
    "bicircular": Bicircular,
}


def make_preset(preset: str, params: dict | None = None, exclusion_radius: float | None = None) -> FieldModel:
    """Instantiate a preset by name.

    >>> make_preset("rotating_kepler", {"omega": 0.5}).B(1j)
    1.0
    """
    try:
        cls = PRESETS[preset]
    except KeyError:
        raise UnknownPresetError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}") from None
    params = dict(params or {})
    if exclusion_radius is not None and exclusion_radius < 0:
        raise InvalidParameterError("exclusion radius must be non-negative")
    return cls(params, exclusion_radius)


def eval_field(model: FieldModel, q, t) -> FieldSample:
    """Evaluate the whole bundle once; raises :class:`DomainError` in excluded discs."""
    model.check_domain(q, t)
    return FieldSample(model.E(q, t), model.dE_dt(q, t), model.gradE(q, t), model.B(q), model.A(q))


def gauge_consistency(model: FieldModel, q: complex, h: float = 1e-5) -> float:
    """``|rot A - B|`` at ``q`` with ``rot A`` from central differences."""
    _, a2p = model.A(q + h)
    _, a2m = model.A(q - h)
    a1p, _ = model.A(q + 1j * h)
    a1m, _ = model.A(q - 1j * h)
    rot = (a2p - a2m) / (2 * h) - (a1p - a1m) / (2 * h)
    return float(abs(rot - model.B(q)))


def parameter_family(preset: str, base: dict, param: str, start: float, stop: float,
                     exclusion_radius: float | None = None) -> Callable[[float], FieldModel]:
    """Homotopy ``s -> preset(base with param = start + s (stop - start))``."""

    def family(s: float) -> FieldModel:
        return make_preset(preset, {**base, param: start + s * (stop - start)}, exclusion_radius)

    family(0.0)  # validate eagerly
    return family


def _integer(value, name):
    if float(value) != int(round(float(value))):
        raise InvalidParameterError(f"{name} must be an integer so that E is 1-periodic in t")
    return int(round(float(value)))


def _jsonable(params):
    out = {}
    for key, value in params.items():
        if isinstance(value, complex):
            out[key] = value.real
            out[key + "_im"] = value.imag
        elif isinstance(value, np.generic):
            out[key] = value.item()
        else:
            out[key] = value
    return out
