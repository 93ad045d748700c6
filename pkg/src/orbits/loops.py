"""Uniformly sampled loops in the complex plane.

A :class:`Loop` stores ``N`` samples at the nodes ``tau_j = j / N`` together
with a parity flag.  Periodic loops satisfy ``z(tau + 1) = z(tau)`` and are
expanded in integer frequencies; antiperiodic ("twisted") loops satisfy
``z(tau + 1) = -z(tau)`` and are expanded in half-integer frequencies, so the
antiperiodicity holds exactly by construction.

All spectral operations are done on demand with FFTs; nothing but the node
samples is stored.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidInputError, ParityError, ShapeError, WindingUndefinedError

PERIODIC = "periodic"
ANTIPERIODIC = "antiperiodic"
PARITIES = (PERIODIC, ANTIPERIODIC)

MIN_NODES = 8
WINDING_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Loop:
    """Immutable node samples of a loop ``S^1 -> C`` (or a twisted path).

    Use :func:`make_loop` to build one; it validates the node count.
    """

    samples: np.ndarray
    parity: str = PERIODIC

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n) / self.n

    def __neg__(self) -> "Loop":
        return apply_involution(self)

    def __repr__(self):
        return f"Loop(n={self.n}, parity={self.parity!r})"

    def to_dict(self) -> dict:
        return {
            "parity": self.parity,
            "n": self.n,
            "re": self.samples.real.tolist(),
            "im": self.samples.imag.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Loop":
        try:
            re = np.asarray(data["re"], dtype=float)
            im = np.asarray(data["im"], dtype=float)
            parity = data["parity"]
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"malformed loop record: {exc}") from exc
        if re.shape != im.shape:
            raise InvalidInputError("re/im length mismatch")
        if "n" in data and int(data["n"]) != re.size:
            raise InvalidInputError("declared n does not match sample count")
        return make_loop(re + 1j * im, parity)


def make_loop(samples, parity: str = PERIODIC) -> Loop:
    """Wrap node samples into a :class:`Loop` (no smoothing is applied)."""
    if parity not in PARITIES:
        raise InvalidInputError(f"unknown parity {parity!r}")
    arr = np.array(samples, dtype=complex).reshape(-1)
    n = arr.size
    if n < MIN_NODES or n % 2:
        raise InvalidInputError(f"need an even number >= {MIN_NODES} of samples, got {n}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("samples must be finite")
    arr.setflags(write=False)
    return Loop(arr, parity)


def from_function(func: Callable[[np.ndarray], np.ndarray], n: int, parity: str = PERIODIC) -> Loop:
    """Sample ``func`` at the ``n`` uniform nodes."""
    tau = np.arange(n) / n
    return make_loop(func(tau), parity)


def _check_pair(a: Loop, b: Loop) -> None:
    if a.n != b.n or a.parity != b.parity:
        raise ShapeError(f"incompatible loops: {a!r} vs {b!r}")


# -- spectral machinery ------------------------------------------------------

def frequencies(n: int, parity: str) -> np.ndarray:
    """Frequencies (cycles per unit parameter) in FFT order."""
    k = np.fft.fftfreq(n, 1.0 / n)
    return k + 0.5 if parity == ANTIPERIODIC else k


def _twist(n: int) -> np.ndarray:
    return np.exp(1j * np.pi * np.arange(n) / n)


def to_spectrum(samples: np.ndarray, parity: str) -> np.ndarray:
    """Coefficients ``c`` with ``z(tau_j) = sum_k c_k exp(2 pi i f_k tau_j)``."""
    n = samples.shape[0]
    if parity == ANTIPERIODIC:
        samples = samples * np.conj(_twist(n))
    return np.fft.fft(samples) / n


def from_spectrum(coef: np.ndarray, parity: str) -> np.ndarray:
    n = coef.shape[0]
    out = np.fft.ifft(coef) * n
    if parity == ANTIPERIODIC:
        out = out * _twist(n)
    return out


def _apply_multiplier(samples: np.ndarray, parity: str, mult: np.ndarray) -> np.ndarray:
    return from_spectrum(to_spectrum(samples, parity) * mult, parity)


def _derivative_multiplier(n: int, parity: str, order: int = 1) -> np.ndarray:
    f = frequencies(n, parity)
    mult = (2j * np.pi * f) ** order
    if parity == PERIODIC:
        # Nyquist mode has no well-defined derivative; dropping it keeps
        # the discrete derivative skew-adjoint.
        mult[n // 2] = 0.0
    return mult


def differentiate(samples: np.ndarray, parity: str, order: int = 1) -> np.ndarray:
    """Spectral derivative of node samples (array in, array out)."""
    n = samples.shape[0]
    return _apply_multiplier(samples, parity, _derivative_multiplier(n, parity, order))


def smooth(samples: np.ndarray, parity: str) -> np.ndarray:
    """Apply ``(1 - d^2/dtau^2)^{-1}`` spectrally."""
    n = samples.shape[0]
    f = frequencies(n, parity)
    return _apply_multiplier(samples, parity, 1.0 / (1.0 + (2 * np.pi * f) ** 2))


def antiderivative(x: np.ndarray) -> np.ndarray:
    """Mean-free periodic antiderivative of a periodic real sequence.

    The mean and the Nyquist mode are dropped, which makes the operator
    skew-adjoint for the node-average pairing.
    """
    n = x.shape[0]
    xh = np.fft.fft(x)
    k = np.fft.fftfreq(n, 1.0 / n)
    mult = np.zeros(n, dtype=complex)
    nz = k != 0
    mult[nz] = 1.0 / (2j * np.pi * k[nz])
    mult[n // 2] = 0.0
    return np.fft.ifft(xh * mult).real


def _spectrum_for_eval(loop_samples: np.ndarray, parity: str):
    n = loop_samples.shape[0]
    c = to_spectrum(loop_samples, parity)
    f = frequencies(n, parity)
    if parity == PERIODIC:
        # split the Nyquist coefficient symmetrically between +-N/2
        c = np.append(c, c[n // 2] / 2)
        c[n // 2] /= 2
        f = np.append(f, n / 2)
    return f, c


def evaluate(loop: Loop, tau, order: int = 0) -> np.ndarray:
    """Band-limited interpolant (or its ``order``-th derivative) at ``tau``."""
    return evaluate_samples(loop.samples, loop.parity, tau, order)


def evaluate_samples(samples: np.ndarray, parity: str, tau, order: int = 0) -> np.ndarray:
    f, c = _spectrum_for_eval(samples, parity)
    tau = np.asarray(tau, dtype=float)
    if order:
        c = c * (2j * np.pi * f) ** order
    phase = np.exp(2j * np.pi * np.multiply.outer(tau, f))
    return phase @ c


# -- public operations -------------------------------------------------------

def l2_inner(a: Loop, b: Loop) -> float:
    """Node quadrature of ``int_0^1 Re(a conj(b)) dtau``."""
    _check_pair(a, b)
    return float(np.mean((a.samples * np.conj(b.samples)).real))


def l2_norm(a: Loop) -> float:
    return float(np.sqrt(np.mean(np.abs(a.samples) ** 2)))


def spectral_derivative(a: Loop, order: int = 1) -> Loop:
    return make_loop(differentiate(a.samples, a.parity, order), a.parity)


def winding_number(a: Loop, tol: float = WINDING_TOL) -> float:
    """Total argument increment over one period divided by ``2 pi``.

    Integer for periodic loops and half-integer for antiperiodic ones.
    """
    z = a.samples
    mod = np.abs(z)
    if np.any(mod < tol * mod.max()) or mod.max() == 0.0:
        raise WindingUndefinedError("loop passes within tolerance of the origin")
    closing = z[0] if a.parity == PERIODIC else -z[0]
    nxt = np.append(z[1:], closing)
    total = np.angle(nxt / z).sum() / (2 * np.pi)
    return round(2 * total) / 2


def apply_involution(a: Loop) -> Loop:
    return make_loop(-a.samples, a.parity)


def double_twisted(a: Loop) -> Loop:
    """Doubling map ``t -> z(2t)`` from twisted paths to periodic loops.

    Uses the even nodes of ``a`` directly; the second half of the output
    comes from the antiperiodic extension.
    """
    if a.parity != ANTIPERIODIC:
        raise ParityError("doubling map needs an antiperiodic loop")
    z = a.samples
    even = z[::2]
    return make_loop(np.concatenate([even, -even]), PERIODIC)


def resample(a: Loop, m: int) -> Loop:
    """Band-limited (zero padding / truncation) interpolation onto ``m`` nodes."""
    if m < MIN_NODES or m % 2:
        raise InvalidInputError(f"target resolution must be even and >= {MIN_NODES}")
    n = a.n
    if m == n:
        return a
    c = to_spectrum(a.samples, a.parity)
    out = np.zeros(m, dtype=complex)
    if a.parity == ANTIPERIODIC:
        # half-integer frequencies: indices 0..n/2-1 and the negative tail
        h = min(n, m) // 2
        out[:h] = c[:h]
        out[m - h:] = c[n - h:]
    elif m > n:
        h = n // 2
        out[:h] = c[:h]
        out[m - h + 1:] = c[n - h + 1:]
        out[h] = c[h] / 2
        out[m - h] = c[h] / 2
    else:
        h = m // 2
        out[:h] = c[:h]
        out[m - h + 1:] = c[n - h + 1:]
        out[h] = c[h] + c[n - h]
    return make_loop(from_spectrum(out, a.parity), a.parity)


def random_loop(rng: np.random.Generator, n: int, parity: str = PERIODIC, *,
                base: complex = 0.0, winding: float | None = None,
                bandwidth: int = 4, amplitude: float = 0.1) -> Loop:
    """Random band-limited loop, handy for property tests and seed noise.

    ``base * exp(2 pi i winding tau)`` plus noise supported on the lowest
    ``bandwidth`` frequencies on either side.
    """
    if winding is None:
        winding = 0.5 if parity == ANTIPERIODIC else 0.0
    tau = np.arange(n) / n
    f = frequencies(n, parity)
    coef = np.zeros(n, dtype=complex)
    band = np.abs(f) <= bandwidth
    coef[band] = amplitude * (rng.standard_normal(band.sum()) + 1j * rng.standard_normal(band.sum()))
    z = base * np.exp(2j * np.pi * winding * tau) + from_spectrum(coef, parity)
    return make_loop(z, parity)


def perturb(a: Loop, rng: np.random.Generator, amplitude: float, bandwidth: int = 4) -> Loop:
    """Multiply by ``1 + amplitude * p`` with ``p`` a random real periodic
    trigonometric polynomial of degree ``bandwidth`` and ``max |p| = 1``.

    Real loops stay real and the parity is preserved.
    """
    if amplitude == 0:
        return a
    p = np.array(random_loop(rng, a.n, PERIODIC, bandwidth=bandwidth, amplitude=1.0).samples.real)
    p /= np.abs(p).max()
    return make_loop(a.samples * (1.0 + amplitude * p), a.parity)
