"""Critical points of the blown-up action and natural-parameter continuation.

Two phases:

1. preconditioned gradient flow ``z <- z - h (1 - d^2)^{-1} grad F(z)`` with an
   Armijo backtracking line search on ``F``;
2. inexact Newton-Krylov on ``grad F = 0`` once the gradient is small, with
   Jacobian-vector products from central directional differences and GMRES
   (right-preconditioned by the same smoothing operator).

Loops are allowed to pass through the origin freely; only the collapse
``||z|| -> 0`` is guarded against.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .action import ActionBreakdown, LoopState
from .errors import (DegenerateFlowError, DegenerateLoopError, DomainError, InvalidInputError,
                     OrbitsError, SeedInvalidError)
from .fields import FieldModel
from .loops import ANTIPERIODIC, PARITIES, Loop, make_loop, resample, smooth, winding_number
from .reparam import Collision, find_collisions, sigma_map
from .verify import beta_mu, mu_from_collisions

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolveOptions:
    max_iters: int = 5000
    grad_tol: float = 1e-9
    flow_step: float = 0.1
    newton_switch_tol: float = 1e-3
    N: int = 128
    parity: str = ANTIPERIODIC
    newton_max_iters: int = 60
    forcing: float = 0.1
    min_norm_ratio: float = 0.1

    def __post_init__(self):
        if self.parity not in PARITIES:
            raise InvalidInputError(f"unknown parity {self.parity!r}")
        if min(self.grad_tol, self.flow_step, self.newton_switch_tol, self.forcing) <= 0:
            raise InvalidInputError("tolerances and steps must be positive")
        if self.grad_tol >= self.newton_switch_tol:
            raise InvalidInputError("grad_tol must be smaller than newton_switch_tol")
        if self.N < 8 or self.N % 2:
            raise InvalidInputError("N must be even and >= 8")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    final_grad_norm: float
    action: ActionBreakdown
    residual_sup: float
    collisions: list = field(default_factory=list)
    winding: float | str | None = None
    mu_estimates: list = field(default_factory=list)
    flow_iterations: int = 0
    newton_iterations: int = 0

    def to_dict(self) -> dict:
        out = asdict(self)
        out["action"] = self.action.to_dict()
        out["collisions"] = [c.to_dict() if isinstance(c, Collision) else c for c in self.collisions]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SolveReport":
        data = dict(data)
        data["action"] = ActionBreakdown(**data["action"])
        data["collisions"] = [Collision(**c) for c in data.get("collisions", [])]
        return cls(**data)


class _Problem:
    """Real-vector view of the loop space of a fixed parity."""

    def __init__(self, model: FieldModel, n: int, parity: str):
        self.model = model
        self.n = n
        self.parity = parity

    def loop(self, s: np.ndarray) -> Loop:
        return make_loop(s, self.parity)

    def state(self, s: np.ndarray) -> LoopState:
        return LoopState(self.loop(s), self.model)

    def grad(self, s: np.ndarray) -> np.ndarray:
        return self.state(s).gradient()

    def pack(self, s):
        return np.concatenate([s.real, s.imag])

    def unpack(self, u):
        return u[: self.n] + 1j * u[self.n:]


def _rms(a: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.abs(a) ** 2)))


def _flow(prob: _Problem, s, opts: SolveOptions, seed_norm: float, callback=None):
    """Phase 1.  Returns (samples, state, gradient, iterations)."""
    st = prob.state(s)
    f, g = st.total, st.gradient()
    h = opts.flow_step
    floor = opts.min_norm_ratio * seed_norm
    it = 0
    while it < opts.max_iters:
        gsup = np.abs(g).max()
        if gsup < opts.newton_switch_tol:
            break
        d = -smooth(g, prob.parity)
        slope = float(np.mean((g * np.conj(d)).real))
        guarded = False
        while True:
            trial = s + h * d
            if _rms(trial) < floor:
                guarded = True
                h *= 0.5
            else:
                try:
                    tst = prob.state(trial)
                    ft = tst.total
                except DomainError:
                    ft = np.inf
                if ft <= f + 1e-4 * h * slope:
                    break
                h *= 0.5
            if h < 1e-14:
                if guarded:
                    raise DegenerateFlowError("gradient flow drives the loop into ||z|| = 0")
                log.debug("flow line search stalled at iteration %d", it)
                return s, st, g, it
        s, st, f = trial, tst, ft
        g = st.gradient()
        h = min(2.0 * h, 1e3 * opts.flow_step)
        it += 1
        if callback is not None:
            callback("flow", it, f, float(np.abs(g).max()))
    return s, st, g, it


def _newton(prob: _Problem, s, g, opts: SolveOptions, budget: int, seed_norm: float, callback=None):
    """Phase 2.  Returns (samples, state, gradient, iterations)."""
    st = None
    floor = opts.min_norm_ratio * seed_norm
    it = 0
    while it < min(budget, opts.newton_max_iters):
        gsup = np.abs(g).max()
        if gsup <= opts.grad_tol:
            break
        z_scale = max(_rms(s), 1e-12)

        def jvp(u, s=s):
            v = smooth(prob.unpack(u), prob.parity)
            vn = _rms(v)
            if vn == 0:
                return np.zeros_like(u)
            eps = 1e-6 * z_scale / vn
            dg = (prob.grad(s + eps * v) - prob.grad(s - eps * v)) / (2 * eps)
            return prob.pack(dg)

        op = LinearOperator((2 * prob.n, 2 * prob.n), matvec=jvp, dtype=float)
        rhs = -prob.pack(g)
        y, _ = gmres(op, rhs, rtol=opts.forcing, atol=0.0, restart=min(2 * prob.n, 80), maxiter=20)
        d = smooth(prob.unpack(y), prob.parity)
        g_norm = _rms(g)
        lam = 1.0
        accepted = False
        for _ in range(12):
            trial = s + lam * d
            if _rms(trial) >= floor:
                try:
                    tst = prob.state(trial)
                    tg = tst.gradient()
                    if _rms(tg) < g_norm:
                        accepted = True
                        break
                except DomainError:
                    pass
            lam *= 0.5
        it += 1
        if not accepted:
            log.debug("Newton step rejected at iteration %d (|g|=%.3g)", it, gsup)
            break
        s, st, g = trial, tst, tg
        if callback is not None:
            callback("newton", it, st.total, float(np.abs(g).max()))
    return s, st, g, it


def summarize(z: Loop, model: FieldModel, *, converged: bool, iterations: int, grad_norm: float,
              flow_iterations: int = 0, newton_iterations: int = 0) -> SolveReport:
    """Assemble the report of a (candidate) critical loop."""
    st = LoopState(z, model)
    residual = float(np.abs(st.residual()).max())
    collisions = find_collisions(z, strict=False)
    if collisions:
        winding = "odd" if z.parity == ANTIPERIODIC else "even"
        mu = mu_from_collisions(z, collisions)
    else:
        winding = winding_number(z)
        try:
            mu = [beta_mu(sigma_map(z), model, source=z).mu_fit]
        except OrbitsError:
            mu = []
    return SolveReport(bool(converged), int(iterations), float(grad_norm), st.breakdown(), residual,
                       list(collisions), winding, [float(m) for m in mu], int(flow_iterations),
                       int(newton_iterations))


def solve_critical(seed: Loop, model: FieldModel, opts: SolveOptions | None = None,
                   callback=None) -> tuple[Loop, SolveReport]:
    """Find a critical loop of the blown-up functional near ``seed``.

    Parameters
    ----------
    seed : Loop
        Starting loop; its parity must match ``opts.parity``.  Resampled to
        ``opts.N`` nodes if necessary.
    model : FieldModel
    opts : SolveOptions, optional
    callback : callable, optional
        Called as ``callback(phase, iteration, action, grad_sup)`` after every
        accepted step, ``phase`` being ``"flow"`` or ``"newton"``.

    Returns
    -------
    (Loop, SolveReport)
        Non-convergence is reported with ``converged=False``, not raised.
    """
    opts = opts or SolveOptions(parity=seed.parity)
    if seed.parity != opts.parity:
        raise InvalidInputError(f"seed parity {seed.parity!r} differs from options {opts.parity!r}")
    if seed.n != opts.N:
        seed = resample(seed, opts.N)
    seed_norm = _rms(seed.samples)
    if seed_norm == 0.0:
        raise DegenerateLoopError("seed has zero L2 norm")
    prob = _Problem(model, opts.N, opts.parity)
    s = np.array(seed.samples)
    s, _, g, n_flow = _flow(prob, s, opts, seed_norm, callback)
    n_newton = 0
    if np.abs(g).max() > opts.grad_tol:
        s2, st2, g2, n_newton = _newton(prob, s, g, opts, opts.max_iters - n_flow, seed_norm, callback)
        if st2 is not None:
            s, g = s2, g2
    gsup = float(np.abs(g).max())
    z = make_loop(s, opts.parity)
    report = summarize(z, model, converged=gsup <= opts.grad_tol, iterations=n_flow + n_newton,
                       grad_norm=gsup, flow_iterations=n_flow, newton_iterations=n_newton)
    log.info("solve: converged=%s |grad|=%.3g flow=%d newton=%d", report.converged, gsup, n_flow, n_newton)
    return z, report


@dataclass
class Family:
    members: list  # (s, Loop, SolveReport)
    truncated: bool = False

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)


def continue_family(seed: Loop, model_family: Callable[[float], FieldModel], steps: int,
                    opts: SolveOptions | None = None, s_min_step: float = 1e-3) -> Family:
    """Natural-parameter continuation along ``s`` in ``[0, 1]``.

    Members are reported at ``steps`` equally spaced values of ``s`` (both
    ends included).  A failed step is retried with halved increments down to
    ``s_min_step``; past that the partial family is returned with
    ``truncated=True``.
    """
    if steps < 2:
        raise InvalidInputError("need at least two continuation steps")
    opts = opts or SolveOptions(parity=seed.parity)
    z, rep = solve_critical(seed, model_family(0.0), opts)
    if not rep.converged:
        raise SeedInvalidError("seed does not converge at s = 0")
    members = [(0.0, z, rep)]
    grid = np.linspace(0.0, 1.0, steps)
    s_cur = 0.0
    for target in grid[1:]:
        h = target - s_cur
        while s_cur < target - 1e-15:
            s_try = min(s_cur + h, target)
            try:
                z_try, rep_try = solve_critical(z, model_family(s_try), replace(opts, N=z.n))
                ok = rep_try.converged
            except OrbitsError as exc:
                log.debug("continuation step to s=%.4g failed: %s", s_try, exc)
                ok = False
            if ok:
                s_cur, z, rep = s_try, z_try, rep_try
            else:
                h *= 0.5
                if h < s_min_step:
                    log.warning("continuation truncated at s=%.4g", s_cur)
                    return Family(members, truncated=True)
        members.append((float(target), z, rep))
    return Family(members)
