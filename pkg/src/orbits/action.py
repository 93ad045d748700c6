"""Action functionals on the original and on the blown-up loop space.

Sign convention: the original action is

    F(q) = 1/2 ||q'||^2 + int q*A - int_0^1 V_t(q) dt,   V_t = E_t - 1/|q|,

which is the Lagrangian whose Euler-Lagrange equation is
``q'' = -B i q' - q/|q|^3 - grad E``.  On the blown-up side

    F(z) = K(z) - A(z) + C(z) - E(z),

with ``K = 2 ||z||^2 ||z'||^2``, ``A = -int (z^2)*A`` (so that its L2 gradient
is ``4 |z|^2 B(z^2) i z'``), ``C = 1/||z||^2`` and
``E = ||z||^{-2} int E_{t_z(tau)}(z^2) |z|^2 dtau``.

The gradients are exact for the discretized functional: every integral is a
node average, derivatives are spectral and the time map uses the spectral
antiderivative.  The only place where this differs from naive pointwise
discretization is the tail integral inside ``epsilon_1``, which is the exact
adjoint of the cumulative integral used in ``t_z``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import DegenerateLoopError, SingularLoopError
from .fields import FieldModel
from .loops import PERIODIC, Loop, antiderivative, differentiate, make_loop

SINGULAR_TOL = 1e-7


@dataclass(frozen=True)
class ActionBreakdown:
    kinetic: float
    magnetic: float
    coulomb: float
    electric: float
    electric_aux: float
    total: float

    def to_dict(self) -> dict:
        return asdict(self)


def tail_integral(w: np.ndarray) -> np.ndarray:
    """Discrete ``int_tau^1 w(s) ds`` on the nodes.

    Defined as the adjoint (for the node-average pairing) of the cumulative
    integral ``y -> mean(y) tau + J y - (J y)(0)``, with the linear part
    integrated against ``w`` exactly, so that

        mean(tail(w) * y) = mean(y) int_0^1 s w(s) ds + mean(w * P y)

    holds to rounding for every ``y``.
    """
    n = w.size
    w0 = w.mean()
    jw = antiderivative(w)
    delta = np.zeros(n)
    delta[0] = n
    kernel = -antiderivative(delta)  # (J y)(0) = mean(kernel * y)
    first_moment = 0.5 * w0 + jw[0]  # int_0^1 s w(s) ds
    return first_moment - jw - w0 * kernel


class LoopState:
    """Everything the functionals and gradients need for one loop.

    Builds the node data once (one field evaluation per node).
    """

    def __init__(self, z: Loop, model: FieldModel):
        s = z.samples
        self.loop = z
        self.model = model
        self.z = s
        self.x = np.abs(s) ** 2
        self.n2 = float(self.x.mean())
        if not self.n2 > 0.0:
            raise DegenerateLoopError("loop has zero L2 norm")
        self.dz = differentiate(s, z.parity)
        self.ddz = differentiate(self.dz, z.parity)
        self.dn2 = float(np.mean(np.abs(self.dz) ** 2))
        jx = antiderivative(self.x)
        self.px = jx - jx[0]
        self.t = z.nodes + self.px / self.n2
        self.q = s * s
        model.check_domain(self.q, self.t)
        self.E = model.E(self.q, self.t)
        self.Edot = model.dE_dt(self.q, self.t)
        self.gradE = model.gradE(self.q, self.t)
        self.B = model.B(self.q)
        self.Acx = model.A_complex(self.q)
        self.v = 2 * s * self.dz  # d(z^2)/dtau
        self.W = self.Edot * self.x
        self._tail = None

    # -- scalar parts --------------------------------------------------
    @property
    def kinetic(self) -> float:
        return 2.0 * self.n2 * self.dn2

    @property
    def magnetic(self) -> float:
        return -float(np.mean((np.conj(self.Acx) * self.v).real))

    @property
    def coulomb(self) -> float:
        return 1.0 / self.n2

    @property
    def electric(self) -> float:
        return float(np.mean(self.E * self.x)) / self.n2

    @property
    def electric_aux(self) -> float:
        if not np.any(self.W):
            return 0.0
        w0 = self.W.mean()
        moment = 0.5 * w0 + antiderivative(self.W)[0]
        return (self.n2 * moment + float(np.mean(self.W * self.px))) / self.n2 ** 2

    @property
    def tail(self) -> np.ndarray:
        if self._tail is None:
            self._tail = tail_integral(self.W) if np.any(self.W) else np.zeros_like(self.x)
        return self._tail

    def breakdown(self) -> ActionBreakdown:
        k, a, c, e = self.kinetic, self.magnetic, self.coulomb, self.electric
        return ActionBreakdown(k, a, c, e, self.electric_aux, k - a + c - e)

    @property
    def total(self) -> float:
        return self.kinetic - self.magnetic + self.coulomb - self.electric

    # -- vector fields -------------------------------------------------
    def epsilons(self):
        e1 = self.tail * self.z / self.n2
        e2 = self.x * self.gradE * np.conj(self.z)
        e3 = self.E * self.z
        return e1, e2, e3

    def grad_parts(self) -> dict:
        s, n2, par = self.z, self.n2, self.loop.parity
        g_k = 4 * self.dn2 * s - 4 * n2 * self.ddz
        # exact discrete gradient of mean(A(q) . v); equals -4|z|^2 B i z'
        # up to aliasing of the products
        a11, a12, a21, a22 = self.model.A_jacobian(self.q)
        v1, v2 = self.v.real, self.v.imag
        G = (v1 * a11 + v2 * a21) + 1j * (v1 * a12 + v2 * a22)
        u = 2 * np.conj(self.Acx) * s
        g_line = 2 * G * np.conj(s) + 2 * self.Acx * np.conj(self.dz) - np.conj(differentiate(u, par))
        g_a = -g_line
        g_c = -2 * s / n2 ** 2
        eps = sum(self.epsilons())
        g_e = -2 * (self.electric + self.electric_aux) * s / n2 + 2 * eps / n2
        return {"kinetic": g_k, "magnetic": g_a, "coulomb": g_c, "electric": g_e}

    def gradient(self) -> np.ndarray:
        p = self.grad_parts()
        return p["kinetic"] - p["magnetic"] + p["coulomb"] - p["electric"]

    def residual(self) -> np.ndarray:
        n2 = self.n2
        eps = sum(self.epsilons())
        coef = self.dn2 / n2 + (self.electric + self.electric_aux) / (2 * n2 ** 2) - 1.0 / (2 * n2 ** 3)
        return (self.ddz + eps / (2 * n2 ** 2) + (self.x * self.B / n2) * 1j * self.dz
                - coef * self.z)


# -- public API ----------------------------------------------------------------

def action_original(q: Loop, model: FieldModel, ctol: float = SINGULAR_TOL) -> float:
    """Lagrangian action of a collision-free periodic loop ``q(t)``."""
    s = q.samples
    mod = np.abs(s)
    if mod.min() < ctol * mod.max() or mod.max() == 0:
        raise SingularLoopError("loop passes through the origin")
    t = q.nodes
    model.check_domain(s, t)
    qd = differentiate(s, q.parity)
    kinetic = 0.5 * np.mean(np.abs(qd) ** 2)
    a1, a2 = model.A(s)
    line = np.mean(a1 * qd.real + a2 * qd.imag)
    potential = np.mean(model.E(s, t) - 1.0 / mod)
    return float(kinetic + line - potential)


def action_parts(z: Loop, model: FieldModel) -> ActionBreakdown:
    return LoopState(z, model).breakdown()


def action_value(z: Loop, model: FieldModel) -> float:
    return LoopState(z, model).total


def epsilon_fields(z: Loop, model: FieldModel) -> tuple[Loop, Loop, Loop]:
    st = LoopState(z, model)
    return tuple(make_loop(e, z.parity) for e in st.epsilons())


def grad_parts(z: Loop, model: FieldModel) -> dict:
    """L2 gradients of K, A, C and E separately (as Loops)."""
    return {k: make_loop(v, z.parity) for k, v in LoopState(z, model).grad_parts().items()}


def grad_regularized(z: Loop, model: FieldModel) -> Loop:
    """L2 gradient of the discretized blown-up functional.

    ``l2_inner(grad, zeta)`` equals the directional derivative of
    :func:`action_value` along ``zeta`` up to rounding.
    """
    return make_loop(LoopState(z, model).gradient(), z.parity)


def delay_residual(z: Loop, model: FieldModel) -> Loop:
    """Pointwise defect of the second order delay equation.

    Algebraically ``-grad / (4 ||z||^2)``; assembled independently here.
    """
    return make_loop(LoopState(z, model).residual(), z.parity)


def linear_coefficients(z: Loop, model: FieldModel) -> tuple[Loop, Loop, Loop]:
    """Coefficients of the linear ODE ``z'' = a z + b conj(z) + c z'`` solved by critical loops."""
    st = LoopState(z, model)
    n2 = st.n2
    a = ((2 * n2 * st.dn2 + st.electric + st.electric_aux - st.E) / (2 * n2 ** 2)
         - (st.tail + 1.0) / (2 * n2 ** 3))
    b = -st.x * st.gradE / (2 * n2 ** 2)
    c = -1j * st.x * st.B / n2
    return (make_loop(a.astype(complex), z.parity), make_loop(b, z.parity), make_loop(c, z.parity))


def electric_original(q: Loop, model: FieldModel) -> tuple[float, float]:
    """``(int E_t(q) dt, int t dE/dt(q) dt)`` on a uniformly sampled ``q``."""
    s, t = q.samples, q.nodes
    f = model.dE_dt(s, t)
    moment = 0.5 * f.mean() + antiderivative(f)[0]
    return float(np.mean(model.E(s, t))), float(moment)


def kinetic_original(q: Loop) -> float:
    """``||q'||^2``."""
    return float(np.mean(np.abs(differentiate(q.samples, PERIODIC)) ** 2))


def coulomb_original(q: Loop) -> float:
    """``int dt / |q|``."""
    return float(np.mean(1.0 / np.abs(q.samples)))
