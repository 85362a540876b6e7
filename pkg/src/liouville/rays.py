"""Ray integration of two solutions of w'' + P(z) w = 0 with a Wronskian monitor."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import taylor
from .errors import IntegrationFailure, StepUnderflow, WronskianDrift
from .polynomial import PolynomialP

DRIFT_LIMIT = 1e-8


@dataclass(frozen=True)
class IntegratorSettings:
    order: int = 30
    tol: float = 1e-12
    max_steps: int = 200_000

    def __post_init__(self):
        if not 8 <= self.order <= 60:
            raise ValueError("Taylor order must lie in [8, 60]")
        if not 1e-12 <= self.tol < 1e-3:
            raise ValueError("tolerance must lie in [1e-12, 1e-3)")


@dataclass(frozen=True)
class RaySolution:
    """Samples of the solution pair along ``s -> s * exp(i theta)``.

    ``states[i]`` holds the scaled vector ``(w1, w1', w2, w2')``; the true
    values are ``exp(log_scale[i]) * states[i]``.
    """

    theta: float
    s: np.ndarray
    states: np.ndarray
    log_scale: np.ndarray
    wronskian: complex
    drift: np.ndarray
    max_drift: float
    steps: int
    settings: IntegratorSettings = field(default_factory=IntegratorSettings)

    @property
    def z(self) -> np.ndarray:
        return self.s * np.exp(1j * self.theta)

    @property
    def w(self) -> np.ndarray:
        """True values of (w1, w2); may overflow to inf far out."""
        with np.errstate(over="ignore"):
            return self.states[:, [0, 2]] * np.exp(self.log_scale)[:, None]

    @property
    def dw(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return self.states[:, [1, 3]] * np.exp(self.log_scale)[:, None]

    def log_spherical_derivative(self) -> np.ndarray:
        """log of 2|W| / (|w1|^2 + |w2|^2) at each sample, computed in log space."""
        y = self.states
        return (np.log(2.0 * abs(self.wronskian)) - 2.0 * self.log_scale
                - np.log(abs(y[:, 0]) ** 2 + abs(y[:, 2]) ** 2))


def _wronskian(y0) -> complex:
    return complex(y0[0] * y0[3] - y0[2] * y0[1])


def check_status(status: int, where=None):
    if status == taylor.STATUS_OK:
        return
    loc = "" if where is None else f" near {where}"
    if status == taylor.STATUS_UNDERFLOW:
        raise StepUnderflow("step size underflow" + loc)
    if status == taylor.STATUS_MAXSTEPS:
        raise IntegrationFailure("step budget exhausted" + loc)
    raise IntegrationFailure("non-finite state" + loc)


def integrate_pair_ray(P: PolynomialP, theta: float, s: np.ndarray, y0,
                       settings: IntegratorSettings = IntegratorSettings(),
                       base: complex = 0j) -> RaySolution:
    s = np.asarray(s, dtype=float)
    if s.ndim != 1 or s.size == 0 or np.any(np.diff(s) <= 0) or s[0] < 0:
        raise ValueError("ray samples must be nonnegative and strictly increasing")
    y0 = np.asarray(y0, dtype=np.complex128)
    w0 = _wronskian(y0)
    if w0 == 0:
        raise ValueError("initial conditions are linearly dependent (zero Wronskian)")
    s_max = float(s[-1])
    direction = np.exp(1j * theta)
    fracs = s / s_max if s_max > 0 else np.zeros_like(s)
    out, outL, _, _, nsteps, max_drift, status = taylor.advance(
        P.as_array(), complex(base), y0, 0.0, w0, complex(base) + s_max * direction,
        fracs, settings.order, settings.tol, settings.max_steps)
    check_status(int(status), f"theta={theta:.6g}")
    drift = np.array([taylor._drift(out[i], w0, outL[i]) for i in range(s.size)])
    max_drift = max(float(max_drift), float(drift.max()))
    if max_drift > DRIFT_LIMIT:
        raise WronskianDrift(max_drift)
    return RaySolution(float(theta), s, out, outL, w0, drift, max_drift, int(nsteps), settings)
