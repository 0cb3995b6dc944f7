"""Prescribed-performance backstepping controller and SMC/PID baselines.

The PPC pipeline per sample:

    rho, rho_dot = envelope(t)
    e = (x - xd, y - yd, wrap(theta - varphi))
    eta = transform_error(e), (Phi, Lambda) = phi_lambda(e, ...)
    (m1, m2, v, varphi) = ppc_position_law(...)
    omega = ppc_heading_law(...)

Errors that reach the envelope are clamped to (1 - 1e-9) * eps * rho before
the transform; the caller is told through the violation flags.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .observers import switch
from .scenarios import ReferenceSample
from .simcore import ControlInput, DomainError, RobotPose, wrap_angle

Vec3 = tuple[float, float, float]

CLAMP_MARGIN = 1.0 - 1e-9


def _vec3(v, name: str) -> Vec3:
    if isinstance(v, (int, float)):
        return (float(v),) * 3
    v = tuple(float(c) for c in v)
    if len(v) != 3:
        raise DomainError(f"{name} needs three components")
    return v


@dataclass(frozen=True)
class EnvelopeParams:
    eps: Vec3 = (1.0, 1.0, 1.0)
    rho0: Vec3 = (2.0, 2.0, 2.0)
    rho_inf: Vec3 = (0.05, 0.05, 0.1)
    k_rho: float = 1.0

    def __post_init__(self):
        for name in ("eps", "rho0", "rho_inf"):
            object.__setattr__(self, name, _vec3(getattr(self, name), name))
        for i in range(3):
            if not 0.0 < self.eps[i] <= 1.0:
                raise DomainError("eps must lie in (0, 1]")
            if not self.rho0[i] > self.rho_inf[i] > 0.0:
                raise DomainError("envelope needs rho0 > rho_inf > 0 on every axis")
        if not self.k_rho > 0.0:
            raise DomainError("k_rho must be positive")

    def check_initial_error(self, e0: Sequence[float], axes: Sequence[int] = (0, 1, 2)) -> None:
        for i in axes:
            if not abs(e0[i]) < self.eps[i] * self.rho0[i]:
                raise DomainError(
                    f"initial error on axis {i + 1} ({abs(e0[i]):.6g}) is outside the "
                    f"envelope eps*rho0 = {self.eps[i] * self.rho0[i]:.6g}"
                )


@dataclass(frozen=True)
class PpcGains:
    """Backstepping gains.

    Tuning rule (not checkable online): k3 should exceed the expected
    residual |d - d_hat| on x/y and k3_prime the residual on heading.
    """

    k1: float = 40.0
    k2: float = 1.0
    k3: float = 0.2
    k3_prime: float = 2.0
    p: float = 0.6
    boundary_layer: float = 0.01  # 0 selects the pure sign
    tau_f: float = 0.02  # varphi derivative filter

    def __post_init__(self):
        for name in ("k1", "k2", "k3", "k3_prime"):
            if not getattr(self, name) > 0.0:
                raise DomainError(f"{name} must be positive")
        if not 0.0 < self.p < 1.0:
            raise DomainError("p must lie in (0, 1)")
        if self.boundary_layer < 0.0 or self.tau_f < 0.0:
            raise DomainError("boundary_layer and tau_f must be non-negative")


@dataclass(frozen=True)
class TransformedError:
    eta: Vec3
    phi_vec: Vec3
    lambda_diag: Vec3


def envelope(t: float, params: EnvelopeParams) -> tuple[Vec3, Vec3]:
    """Performance bound rho(t) and its derivative per axis."""
    if t < 0:
        raise DomainError("t must be non-negative")
    decay = math.exp(-params.k_rho * t)
    rho = tuple((params.rho0[i] - params.rho_inf[i]) * decay + params.rho_inf[i] for i in range(3))
    rho_dot = tuple(-params.k_rho * (params.rho0[i] - params.rho_inf[i]) * decay for i in range(3))
    return rho, rho_dot


def violates(e: float, rho: float, eps: float) -> bool:
    return abs(e) >= eps * rho


def clamp_error(e: float, rho: float, eps: float) -> float:
    bound = CLAMP_MARGIN * eps * rho
    return min(max(e, -bound), bound)


def transform_error(e: float, rho: float, eps: float) -> float:
    """eta = 0.5 ln((eps rho + e) / (eps rho - e)), after clamping e."""
    e = clamp_error(e, rho, eps)
    b = eps * rho
    # evaluate on |e| so that eta(-e) == -eta(e) holds bit for bit
    a = abs(e)
    return math.copysign(0.5 * math.log((b + a) / (b - a)), e)


def inverse_transform(eta: float, rho: float, eps: float) -> float:
    return eps * rho * math.tanh(eta)


def phi_lambda(e: Sequence[float], rho: Sequence[float], rho_dot: Sequence[float], eps: Sequence[float]) -> tuple[Vec3, Vec3]:
    phi, lam = [], []
    for i in range(3):
        ei = clamp_error(e[i], rho[i], eps[i])
        den = eps[i] * eps[i] * rho[i] * rho[i] - ei * ei
        phi.append(-eps[i] * rho_dot[i] * ei / den)
        lam.append(eps[i] / den)
    return tuple(phi), tuple(lam)


def _unwrap_near(angle: float, near: float | None) -> float:
    if near is None:
        return angle
    return near + wrap_angle(angle - near)


def _corrective(eta: float, phi: float, lam: float, k1: float, k2: float, k3: float, p: float, bl: float) -> float:
    """Lambda^{-1} [-phi - k1 eta - k2 sgn^p(eta) - k3 sgn(eta)]."""
    sp = math.copysign(abs(eta) ** p, eta) if eta != 0.0 else 0.0
    return (-phi - k1 * eta - k2 * sp - k3 * switch(eta, bl)) / lam


def ppc_position_law(
    e: Sequence[float],
    eta: Sequence[float],
    Phi: Sequence[float],
    Lambda: Sequence[float],
    qd_dot: Sequence[float],
    d_hat: Sequence[float],
    gains: PpcGains,
    varphi_prev: float | None = None,
) -> tuple[float, float, float, float]:
    """Virtual velocity (m1, m2) and its polar form (v, varphi).

    varphi is the two-argument arctangent unwrapped to lie within pi of
    ``varphi_prev``. If m1 = m2 = 0 the heading is held at ``varphi_prev``.
    """
    if not (Lambda[0] > 0 and Lambda[1] > 0):
        raise DomainError("Lambda must be positive")
    g = gains
    m1 = qd_dot[0] + _corrective(eta[0], Phi[0], Lambda[0], g.k1, g.k2, g.k3, g.p, g.boundary_layer) - d_hat[0]
    m2 = qd_dot[1] + _corrective(eta[1], Phi[1], Lambda[1], g.k1, g.k2, g.k3, g.p, g.boundary_layer) - d_hat[1]
    if m1 == 0.0 and m2 == 0.0:
        return m1, m2, 0.0, 0.0 if varphi_prev is None else varphi_prev
    v = math.hypot(m1, m2)
    varphi = _unwrap_near(math.atan2(m2, m1), varphi_prev)
    return m1, m2, v, varphi


def ppc_heading_law(eta3: float, Phi3: float, Lambda3: float, varphi_dot: float, d_hat3: float, gains: PpcGains) -> float:
    if not Lambda3 > 0:
        raise DomainError("Lambda3 must be positive")
    g = gains
    return varphi_dot - d_hat3 + _corrective(eta3, Phi3, Lambda3, g.k1, g.k2, g.k3_prime, g.p, g.boundary_layer)


@dataclass(frozen=True)
class PpcState:
    varphi_prev: float = 0.0
    varphi_dot_filt: float = 0.0
    initialized: bool = False


def varphi_derivative(state: PpcState, varphi: float, dt: float, tau_f: float) -> tuple[PpcState, float]:
    """Filtered backward difference of the (unwrapped) virtual heading."""
    if not dt > 0 or tau_f < 0:
        raise DomainError("need dt > 0 and tau_f >= 0")
    if not state.initialized:
        return PpcState(varphi, 0.0, True), 0.0
    raw = wrap_angle(varphi - state.varphi_prev) / dt
    a = dt / (tau_f + dt)
    filt = state.varphi_dot_filt + a * (raw - state.varphi_dot_filt)
    return PpcState(varphi, filt, True), filt


@dataclass(frozen=True)
class ControlStep:
    """Controller output plus the diagnostics logged per sample."""

    u: ControlInput
    e: Vec3
    eta: Vec3 = (0.0, 0.0, 0.0)
    rho: Vec3 = (math.nan, math.nan, math.nan)
    violation: tuple[bool, bool, bool] = (False, False, False)
    varphi: float = 0.0


class PpcController:
    """Stateful wrapper running the prescribed-performance law once per sample."""

    def __init__(self, gains: PpcGains, envelope_params: EnvelopeParams):
        self.gains = gains
        self.params = envelope_params
        self.state = PpcState()

    def reset(self) -> None:
        self.state = PpcState()

    def step(self, t: float, q: RobotPose, ref: ReferenceSample, d_hat: Sequence[float], dt: float) -> ControlStep:
        p = self.params
        rho, rho_dot = envelope(t, p)
        e1, e2 = q.x - ref.xd, q.y - ref.yd
        eta1 = transform_error(e1, rho[0], p.eps[0])
        eta2 = transform_error(e2, rho[1], p.eps[1])
        (ph1, ph2, _), (la1, la2, _) = phi_lambda((e1, e2, 0.0), rho, rho_dot, p.eps)
        prev = self.state.varphi_prev if self.state.initialized else q.theta
        _, _, v, varphi = ppc_position_law(
            (e1, e2), (eta1, eta2), (ph1, ph2), (la1, la2),
            (ref.xd_dot, ref.yd_dot), d_hat, self.gains, prev,
        )
        self.state, varphi_dot = varphi_derivative(self.state, varphi, dt, self.gains.tau_f)
        e3 = wrap_angle(q.theta - varphi)
        eta3 = transform_error(e3, rho[2], p.eps[2])
        (_, _, ph3), (_, _, la3) = phi_lambda((0.0, 0.0, e3), rho, rho_dot, p.eps)
        omega = ppc_heading_law(eta3, ph3, la3, varphi_dot, d_hat[2], self.gains)
        e = (e1, e2, e3)
        return ControlStep(
            u=ControlInput(v, omega),
            e=e,
            eta=(eta1, eta2, eta3),
            rho=rho,
            violation=tuple(violates(e[i], rho[i], p.eps[i]) for i in range(3)),
            varphi=varphi,
        )


@dataclass(frozen=True)
class SmcGains:
    k_a: float = 5.0
    k_b: float = 1.0
    k_theta: float = 10.0
    k_theta_s: float = 0.5
    boundary_layer: float = 0.01

    def __post_init__(self):
        if min(self.k_a, self.k_b, self.k_theta, self.k_theta_s) < 0.0 or self.boundary_layer < 0.0:
            raise DomainError("SMC gains must be non-negative")


def smc_control(
    q: RobotPose,
    qd: Sequence[float],
    qd_dot: Sequence[float],
    t: float,
    gains: SmcGains,
    varphi_prev: float | None = None,
) -> tuple[ControlInput, float]:
    """Kinematic sliding-mode law with surfaces s_i = e_i; returns (u, varphi).

    ``t`` is accepted for signature symmetry with the other laws; the law is
    time-invariant.
    """
    g = gains
    e1, e2 = q.x - qd[0], q.y - qd[1]
    m1 = qd_dot[0] - g.k_a * e1 - g.k_b * switch(e1, g.boundary_layer)
    m2 = qd_dot[1] - g.k_a * e2 - g.k_b * switch(e2, g.boundary_layer)
    near = q.theta if varphi_prev is None else varphi_prev
    if m1 == 0.0 and m2 == 0.0:
        return ControlInput(0.0, 0.0), near
    v = math.hypot(m1, m2)
    varphi = _unwrap_near(math.atan2(m2, m1), near)
    eh = wrap_angle(varphi - q.theta)
    omega = g.k_theta * eh + g.k_theta_s * switch(eh, g.boundary_layer)
    return ControlInput(v, omega), varphi


class SmcController:
    def __init__(self, gains: SmcGains):
        self.gains = gains
        self.varphi: float | None = None

    def reset(self) -> None:
        self.varphi = None

    def step(self, t: float, q: RobotPose, ref: ReferenceSample, d_hat: Sequence[float], dt: float) -> ControlStep:
        u, self.varphi = smc_control(q, (ref.xd, ref.yd), (ref.xd_dot, ref.yd_dot), t, self.gains, self.varphi)
        e = (q.x - ref.xd, q.y - ref.yd, wrap_angle(q.theta - self.varphi))
        return ControlStep(u=u, e=e, varphi=self.varphi)


@dataclass(frozen=True)
class PidGains:
    kp: float = 10.0
    ki: float = 10.0
    kd: float = 0.0
    i_max: float = 1.0
    kp_theta: float = 10.0
    ki_theta: float = 5.0
    kd_theta: float = 0.0
    i_max_theta: float = 1.0

    def __post_init__(self):
        if min(self.kp, self.ki, self.kd, self.kp_theta, self.ki_theta, self.kd_theta) < 0.0:
            raise DomainError("PID gains must be non-negative")
        if not (self.i_max > 0 and self.i_max_theta > 0):
            raise DomainError("integral clamps must be positive")


@dataclass(frozen=True)
class PidState:
    integral: Vec3 = (0.0, 0.0, 0.0)
    prev_error: Vec3 = (0.0, 0.0, 0.0)
    varphi: float = 0.0
    initialized: bool = False


def _clamp(x: float, lim: float) -> float:
    return min(max(x, -lim), lim)


def pid_control(
    q: RobotPose,
    qd: Sequence[float],
    qd_dot: Sequence[float],
    t: float,
    gains: PidGains,
    state: PidState,
    dt: float = 1e-3,
) -> tuple[PidState, ControlInput]:
    """PID on x/y giving a world-frame velocity, PID on the heading error giving omega.

    Integrals are clamped to +/- i_max (anti-windup); derivative terms are
    backward differences and contribute nothing on the first call.
    """
    g = gains
    e1, e2 = q.x - qd[0], q.y - qd[1]
    first = not state.initialized
    i1 = _clamp(state.integral[0] + e1 * dt, g.i_max)
    i2 = _clamp(state.integral[1] + e2 * dt, g.i_max)
    de1 = 0.0 if first else (e1 - state.prev_error[0]) / dt
    de2 = 0.0 if first else (e2 - state.prev_error[1]) / dt
    m1 = qd_dot[0] - (g.kp * e1 + g.ki * i1 + g.kd * de1)
    m2 = qd_dot[1] - (g.kp * e2 + g.ki * i2 + g.kd * de2)
    near = q.theta if first else state.varphi
    if m1 == 0.0 and m2 == 0.0:
        v, varphi = 0.0, near
    else:
        v, varphi = math.hypot(m1, m2), _unwrap_near(math.atan2(m2, m1), near)
    eh = wrap_angle(varphi - q.theta)
    i3 = _clamp(state.integral[2] + eh * dt, g.i_max_theta)
    de3 = 0.0 if first else wrap_angle(eh - state.prev_error[2]) / dt
    omega = g.kp_theta * eh + g.ki_theta * i3 + g.kd_theta * de3
    new = PidState(integral=(i1, i2, i3), prev_error=(e1, e2, eh), varphi=varphi, initialized=True)
    return new, ControlInput(v, omega)


class PidController:
    def __init__(self, gains: PidGains):
        self.gains = gains
        self.state = PidState()

    def reset(self) -> None:
        self.state = PidState()

    def step(self, t: float, q: RobotPose, ref: ReferenceSample, d_hat: Sequence[float], dt: float) -> ControlStep:
        self.state, u = pid_control(q, (ref.xd, ref.yd), (ref.xd_dot, ref.yd_dot), t, self.gains, self.state, dt)
        e = (q.x - ref.xd, q.y - ref.yd, wrap_angle(q.theta - self.state.varphi))
        return ControlStep(u=u, e=e, varphi=self.state.varphi)
