"""Reference trajectories and disturbance profiles."""

from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass
from pathlib import Path

from .simcore import DisturbanceVec, DomainError, RobotPose

REFERENCES = ("circle", "line", "lemniscate")
DISTURBANCES = ("sinusoidal", "none", "constant", "table")


@dataclass(frozen=True)
class ReferenceSample:
    xd: float
    yd: float
    xd_dot: float
    yd_dot: float
    xd_ddot: float
    yd_ddot: float


@dataclass(frozen=True)
class DisturbanceTable:
    """Piecewise-linear disturbance profile, held constant outside its range."""

    t: tuple[float, ...]
    d: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        if len(self.t) == 0 or len(self.t) != len(self.d):
            raise DomainError("disturbance table needs matching, non-empty t and d columns")
        if any(b <= a for a, b in zip(self.t, self.t[1:])):
            raise DomainError("disturbance table times must be strictly increasing")

    @classmethod
    def from_csv(cls, path: str | Path) -> "DisturbanceTable":
        ts, ds = [], []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            missing = {"t", "d1", "d2", "d3"} - set(reader.fieldnames or ())
            if missing:
                raise DomainError(f"{path}: missing columns {sorted(missing)}")
            for row in reader:
                ts.append(float(row["t"]))
                ds.append((float(row["d1"]), float(row["d2"]), float(row["d3"])))
        return cls(tuple(ts), tuple(ds))

    def __call__(self, t: float) -> tuple[float, float, float]:
        ts = self.t
        if t <= ts[0]:
            return self.d[0]
        if t >= ts[-1]:
            return self.d[-1]
        j = bisect.bisect_right(ts, t)
        t0, t1 = ts[j - 1], ts[j]
        w = (t - t0) / (t1 - t0)
        a, b = self.d[j - 1], self.d[j]
        return (a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1]), a[2] + w * (b[2] - a[2]))


@dataclass(frozen=True)
class ScenarioSpec:
    """Reference + disturbance + start pose.

    ``radius``/``rate``/``center`` parameterise the circle and lemniscate;
    ``line_velocity`` and ``line_start`` the straight line.
    """

    reference: str = "circle"
    radius: float = 1.0
    rate: float = 1.0
    center: tuple[float, float] = (0.0, 0.0)
    line_start: tuple[float, float] = (0.0, 0.0)
    line_velocity: tuple[float, float] = (1.0, 0.0)
    disturbance: str = "sinusoidal"
    constant: tuple[float, float, float] = (0.0, 0.0, 0.0)
    table: DisturbanceTable | None = None
    initial_pose: RobotPose | None = None
    duration: float = 30.0

    def __post_init__(self):
        if self.reference not in REFERENCES:
            raise DomainError(f"unknown reference {self.reference!r}")
        if self.disturbance not in DISTURBANCES:
            raise DomainError(f"unknown disturbance {self.disturbance!r}")
        if self.disturbance == "table" and self.table is None:
            raise DomainError("table disturbance needs a table")
        if not self.duration > 0:
            raise DomainError("duration must be positive")

    def start_pose(self) -> RobotPose:
        """Configured start pose, defaulting to (1.3, 1.2) facing the reference start."""
        if self.initial_pose is not None:
            return self.initial_pose
        r = reference(0.0, self)
        x0, y0 = 1.3, 1.2
        return RobotPose(x0, y0, math.atan2(r.yd - y0, r.xd - x0))


DEFAULT_SCENARIO = ScenarioSpec()


def reference(t: float, spec: ScenarioSpec = DEFAULT_SCENARIO) -> ReferenceSample:
    if spec.reference == "circle":
        r, w = spec.radius, spec.rate
        cx, cy = spec.center
        c, s = math.cos(w * t), math.sin(w * t)
        return ReferenceSample(
            cx + r * c, cy + r * s,
            -r * w * s, r * w * c,
            -r * w * w * c, -r * w * w * s,
        )
    if spec.reference == "line":
        (x0, y0), (vx, vy) = spec.line_start, spec.line_velocity
        return ReferenceSample(x0 + vx * t, y0 + vy * t, vx, vy, 0.0, 0.0)
    # Gerono lemniscate: (r sin wt, r sin wt cos wt)
    r, w = spec.radius, spec.rate
    cx, cy = spec.center
    s, c = math.sin(w * t), math.cos(w * t)
    s2, c2 = math.sin(2 * w * t), math.cos(2 * w * t)
    return ReferenceSample(
        cx + r * s, cy + 0.5 * r * s2,
        r * w * c, r * w * c2,
        -r * w * w * s, -2.0 * r * w * w * s2,
    )


def disturbance_tuple(t: float, spec: ScenarioSpec = DEFAULT_SCENARIO) -> tuple[float, float, float]:
    kind = spec.disturbance
    if kind == "sinusoidal":
        return (0.5 * math.sin(t), 0.5 * math.cos(t) + 0.1 * math.cos(t + math.pi / 2), 0.1)
    if kind == "none":
        return (0.0, 0.0, 0.0)
    if kind == "constant":
        return spec.constant
    return spec.table(t)


def disturbance(t: float, spec: ScenarioSpec = DEFAULT_SCENARIO) -> DisturbanceVec:
    return DisturbanceVec(*disturbance_tuple(t, spec))


def disturbance_bound(spec: ScenarioSpec, t_final: float, samples: int = 20001) -> float:
    """Sampled sup-norm of the disturbance over [0, t_final]."""
    return max(
        max(abs(c) for c in disturbance_tuple(t_final * k / (samples - 1), spec))
        for k in range(samples)
    )
