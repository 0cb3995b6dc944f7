"""Disturbance observers: adaptive sliding-mode DOB and a linear ESO baseline.

Both observers are pure state-transition functions. Each update takes the
current pose measurement ``q`` and the input ``u`` applied over the next
interval, advances the internal ODEs by one explicit Euler step and returns
the new state together with the estimate at ``t + dt``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .simcore import ControlInput, DisturbanceVec, DomainError, RobotPose, nominal_increment, wrap_angle

Vec3 = tuple[float, float, float]
ZERO3: Vec3 = (0.0, 0.0, 0.0)


class ObserverDiverged(RuntimeError):
    pass


def sign(x: float) -> float:
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0


def sgn_alpha(x: Sequence[float], a: float) -> tuple[float, ...]:
    """Elementwise ``|x_i|**a * sign(x_i)`` with ``sign(0) = 0``."""
    if not 0.0 < a < 1.0:
        raise DomainError("exponent must lie in (0, 1)")
    return tuple(math.copysign(abs(xi) ** a, xi) if xi != 0.0 else 0.0 for xi in x)


def sgn_alpha_smooth(x: float, a: float, boundary: float) -> float:
    """|x|**a sign(x) outside +/- boundary, linear inside (continuous at the edge).

    The linear zone caps the slope at boundary**(a - 1) so that an explicit
    discretization does not amplify round-off near x = 0.
    """
    if boundary > 0.0 and abs(x) < boundary:
        return x * boundary ** (a - 1.0)
    return math.copysign(abs(x) ** a, x) if x != 0.0 else 0.0


def switch(x: float, boundary: float) -> float:
    """sign(x), or tanh(x / boundary) when a boundary layer is configured."""
    if boundary > 0.0:
        return math.tanh(x / boundary)
    return sign(x)


@dataclass(frozen=True)
class AsmdobGains:
    c1: float = 5.0
    c2: float = 5.0
    alpha1: float = 0.5
    k_d: float = 1.0
    lambda0: float = 0.002
    lambda1: float = 5.0
    lambda2: float = 500.0
    lambda3: float = 1.0
    k_s: float = 2.0
    boundary_layer: float = 0.01  # 0 restores the pure sign on s
    sigma_boundary_layer: float = 1e-3  # 0 restores the pure sign on sigma

    def __post_init__(self):
        for name in ("c1", "c2", "k_d", "lambda0", "lambda1", "lambda2", "lambda3"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise DomainError(f"{name} must be positive")
        if not 0.0 < self.alpha1 < 1.0:
            raise DomainError("alpha1 must lie in (0, 1)")
        if not self.k_s >= 0.0:
            raise DomainError("k_s must be non-negative")
        if not (self.boundary_layer >= 0.0 and self.sigma_boundary_layer >= 0.0):
            raise DomainError("boundary layers must be non-negative")

    @staticmethod
    def suggested_k_s(lambda2: float, d_max: float) -> float:
        """Starting point for the switching gain: lambda2 * d_max."""
        return lambda2 * d_max


@dataclass(frozen=True)
class AsmdobState:
    z: Vec3
    sigma: Vec3 = ZERO3
    zeta: Vec3 = ZERO3
    d_hat: Vec3 = ZERO3
    beta_hat: float = 0.0
    s: Vec3 = ZERO3

    @classmethod
    def initial(cls, q: RobotPose) -> "AsmdobState":
        """z(0) = q(0) so that sigma(0) = 0; all other internals start at zero."""
        return cls(z=q.as_tuple())


def _sigma(z: Sequence[float], q: Sequence[float]) -> Vec3:
    return (z[0] - q[0], z[1] - q[1], wrap_angle(z[2] - q[2]))


def asmdob_step(
    state: AsmdobState,
    q: RobotPose,
    u: ControlInput,
    gains: AsmdobGains,
    dt: float,
    use_estimate: bool = True,
) -> tuple[AsmdobState, DisturbanceVec]:
    """One update of the surrogate state, filter, estimate and adaptive gain.

    ``sigma_dot`` in the sliding variable ``s`` is the surrogate
    ``z_dot - (T u + d_hat)``, which reduces to ``mu - d_hat``. With
    ``use_estimate=False`` the estimate and adaptive gain are frozen, leaving
    only the surrogate/filter loop (used for finite-time checks on sigma).
    """
    if not dt > 0:
        raise DomainError("dt must be positive")
    g = gains
    qt = q.as_tuple()
    sig = _sigma(state.z, qt)
    bl = g.sigma_boundary_layer
    mu = tuple(
        -g.c1 * sig[i] - g.c2 * sgn_alpha_smooth(sig[i], g.alpha1, bl) - g.k_d * switch(sig[i], bl)
        for i in range(3)
    )
    s = tuple(mu[i] - state.d_hat[i] + g.lambda1 * sig[i] for i in range(3))
    # the known input term is integrated exactly (zero-order hold) so that
    # discretization mismatch is not mistaken for a disturbance
    inc = nominal_increment(qt[2], u.v, u.omega, dt)

    z = tuple(state.z[i] + inc[i] + dt * mu[i] for i in range(3))
    z = (z[0], z[1], wrap_angle(z[2]))
    zeta = tuple(state.zeta[i] + dt * (mu[i] - state.zeta[i]) / g.lambda0 for i in range(3))
    if use_estimate:
        k = g.k_s + state.beta_hat
        d_hat = tuple(
            state.d_hat[i]
            + dt * (g.lambda2 * (state.zeta[i] + g.lambda1 * sig[i] - state.d_hat[i]) + k * switch(s[i], g.boundary_layer))
            for i in range(3)
        )
        s_norm = math.sqrt(s[0] * s[0] + s[1] * s[1] + s[2] * s[2])
        beta_hat = max(0.0, state.beta_hat + dt * (-g.lambda3 * state.beta_hat + s_norm))
    else:
        d_hat = state.d_hat
        beta_hat = state.beta_hat

    new = AsmdobState(z=z, sigma=_sigma(z, qt), zeta=zeta, d_hat=d_hat, beta_hat=beta_hat, s=s)
    if not all(math.isfinite(v) for v in (*z, *zeta, *d_hat, beta_hat)):
        raise ObserverDiverged("ASMDOB state is no longer finite")
    return new, DisturbanceVec(*d_hat)


@dataclass(frozen=True)
class EsoGains:
    omega_o: Vec3 = (30.0, 30.0, 30.0)

    def __post_init__(self):
        om = self.omega_o
        if isinstance(om, (int, float)):
            om = (float(om),) * 3
            object.__setattr__(self, "omega_o", om)
        if len(om) != 3 or not all(math.isfinite(w) and w > 0 for w in om):
            raise DomainError("omega_o must be positive on every axis")

    @property
    def l1(self) -> Vec3:
        return tuple(2.0 * w for w in self.omega_o)

    @property
    def l2(self) -> Vec3:
        return tuple(w * w for w in self.omega_o)


@dataclass(frozen=True)
class EsoState:
    q_hat: Vec3
    d_hat: Vec3 = ZERO3

    @classmethod
    def initial(cls, q: RobotPose) -> "EsoState":
        return cls(q_hat=q.as_tuple())


def eso_step(
    state: EsoState,
    q: RobotPose,
    u: ControlInput,
    gains: EsoGains,
    dt: float,
) -> tuple[EsoState, DisturbanceVec]:
    """Per-axis second-order linear ESO with both poles at ``-omega_o``.

    Each axis models q_i' = (T u)_i + d_i with d_i an extra integrator state.
    """
    if not dt > 0:
        raise DomainError("dt must be positive")
    qt = q.as_tuple()
    inc = nominal_increment(qt[2], u.v, u.omega, dt)
    innov = (qt[0] - state.q_hat[0], qt[1] - state.q_hat[1], wrap_angle(qt[2] - state.q_hat[2]))
    l1, l2 = gains.l1, gains.l2
    q_hat = tuple(state.q_hat[i] + inc[i] + dt * (state.d_hat[i] + l1[i] * innov[i]) for i in range(3))
    q_hat = (q_hat[0], q_hat[1], wrap_angle(q_hat[2]))
    d_hat = tuple(state.d_hat[i] + dt * l2[i] * innov[i] for i in range(3))
    if not all(math.isfinite(v) for v in (*q_hat, *d_hat)):
        raise ObserverDiverged("ESO state is no longer finite")
    return EsoState(q_hat=q_hat, d_hat=d_hat), DisturbanceVec(*d_hat)
