"""Unicycle kinematics plant, fixed-step integrators and angle helpers.

The plant is q_dot = T(theta) u + d with q = (x, y, theta), u = (v, omega)
and d an additive fixed-frame velocity disturbance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

TWO_PI = 2.0 * math.pi


class DomainError(ValueError):
    """Raised when an operation receives non-finite or out-of-range input."""


class SimulationDiverged(RuntimeError):
    """Raised when the integrated state stops being finite."""

    def __init__(self, t: float, message: str = "simulation diverged"):
        super().__init__(f"{message} at t={t:.6g}")
        self.t = t


def _check_finite(*values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise DomainError(f"non-finite input: {v!r}")


def wrap_angle(a: float) -> float:
    """Wrap ``a`` into (-pi, pi]."""
    _check_finite(a)
    w = math.fmod(a, TWO_PI)
    if w <= -math.pi:
        w += TWO_PI
    elif w > math.pi:
        w -= TWO_PI
    return w


@dataclass(frozen=True)
class RobotPose:
    x: float
    y: float
    theta: float

    def __post_init__(self):
        _check_finite(self.x, self.y, self.theta)
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.theta)


@dataclass(frozen=True)
class ControlInput:
    v: float
    omega: float

    def __post_init__(self):
        _check_finite(self.v, self.omega)

    def saturated(self, v_max: float | None = None, omega_max: float | None = None) -> "ControlInput":
        v, w = self.v, self.omega
        if v_max is not None:
            v = min(max(v, -v_max), v_max)
        if omega_max is not None:
            w = min(max(w, -omega_max), omega_max)
        return ControlInput(v, w)


@dataclass(frozen=True)
class DisturbanceVec:
    d1: float
    d2: float
    d3: float

    def __post_init__(self):
        _check_finite(self.d1, self.d2, self.d3)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.d1, self.d2, self.d3)

    def norm_inf(self) -> float:
        return max(abs(self.d1), abs(self.d2), abs(self.d3))


INTEGRATORS = ("euler", "rk4")


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    t_final: float = 30.0
    initial_pose: RobotPose | None = None  # None: taken from the scenario
    integrator: str = "rk4"
    v_max: float | None = None
    omega_max: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise DomainError("dt must be positive")
        if not (math.isfinite(self.t_final) and self.t_final >= self.dt):
            raise DomainError("t_final must be at least dt")
        if self.integrator not in INTEGRATORS:
            raise DomainError(f"unknown integrator {self.integrator!r}; expected one of {INTEGRATORS}")

    @property
    def n_steps(self) -> int:
        # guard against 30/1e-3 = 29999.999...
        return int(round(self.t_final / self.dt))


def nominal_increment(theta: float, v: float, w: float, dt: float) -> tuple[float, float, float]:
    """Exact pose change of the undisturbed unicycle over dt with (v, w) held.

    Uses the sinc form so the straight-line limit w -> 0 needs no branch.
    """
    h = 0.5 * w * dt
    sinc = math.sin(h) / h if h != 0.0 else 1.0
    c = v * dt * sinc
    return (c * math.cos(theta + h), c * math.sin(theta + h), w * dt)


def _rate(x: float, y: float, th: float, v: float, w: float, d: Sequence[float]):
    return (v * math.cos(th) + d[0], v * math.sin(th) + d[1], w + d[2])


def plant_derivative(q: RobotPose, u: ControlInput, d: DisturbanceVec) -> tuple[float, float, float]:
    """Pose rate (x_dot, y_dot, theta_dot) of the disturbed unicycle."""
    return _rate(q.x, q.y, q.theta, u.v, u.omega, d.as_tuple())


def step_tuple(
    q: tuple[float, float, float],
    v: float,
    w: float,
    d_fn: Callable[[float], Sequence[float]],
    t: float,
    dt: float,
    method: str = "rk4",
) -> tuple[float, float, float]:
    """Tuple-level integration step used by the run loop.

    ``d_fn`` returns a 3-sequence of disturbance components. The returned
    heading is wrapped to (-pi, pi].
    """
    x, y, th = q
    if method == "rk4":
        d0 = d_fn(t)
        dm = d_fn(t + 0.5 * dt)
        d1 = d_fn(t + dt)
        k1 = _rate(x, y, th, v, w, d0)
        h = 0.5 * dt
        k2 = _rate(x + h * k1[0], y + h * k1[1], th + h * k1[2], v, w, dm)
        k3 = _rate(x + h * k2[0], y + h * k2[1], th + h * k2[2], v, w, dm)
        k4 = _rate(x + dt * k3[0], y + dt * k3[1], th + dt * k3[2], v, w, d1)
        s = dt / 6.0
        x += s * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        y += s * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        th += s * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
    elif method == "euler":
        k1 = _rate(x, y, th, v, w, d_fn(t))
        x += dt * k1[0]
        y += dt * k1[1]
        th += dt * k1[2]
    else:
        raise DomainError(f"unknown integrator {method!r}")
    if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(th)):
        raise SimulationDiverged(t + dt)
    return (x, y, wrap_angle(th))


def integrate_step(
    q: RobotPose,
    u: ControlInput,
    d_fn: Callable[[float], DisturbanceVec | Sequence[float]],
    t: float,
    dt: float,
    method: str = "rk4",
) -> RobotPose:
    """Advance ``q`` by one step with ``u`` held constant over [t, t+dt]."""
    if not dt > 0:
        raise DomainError("dt must be positive")

    def d_seq(tt):
        d = d_fn(tt)
        return d.as_tuple() if isinstance(d, DisturbanceVec) else d

    return RobotPose(*step_tuple(q.as_tuple(), u.v, u.omega, d_seq, t, dt, method))
