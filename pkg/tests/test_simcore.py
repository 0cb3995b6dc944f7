import math

import pytest
from hypothesis import given, strategies as st

from ppcdob.simcore import (
    ControlInput, DisturbanceVec, DomainError, RobotPose, SimConfig, SimulationDiverged,
    integrate_step, plant_derivative, step_tuple, wrap_angle,
)

finite = st.floats(-1e6, 1e6, allow_nan=False)
ZERO = lambda t: (0.0, 0.0, 0.0)


def circle_pose(v, w, t):
    # closed-form unicycle from the origin facing +x
    return (v / w * math.sin(w * t), v / w * (1.0 - math.cos(w * t)), w * t)


def test_plant_derivative_examples():
    assert plant_derivative(RobotPose(0, 0, 0), ControlInput(1, 0.5), DisturbanceVec(0, 0, 0)) == (1, 0, 0.5)
    r = plant_derivative(RobotPose(0, 0, math.pi / 2), ControlInput(1, 0), DisturbanceVec(0, 0, 0))
    assert r[0] == pytest.approx(0, abs=1e-16) and r[1] == 1 and r[2] == 0
    assert plant_derivative(RobotPose(0, 0, 0), ControlInput(0, 0), DisturbanceVec(0, 0.5, 0.1)) == (0, 0.5, 0.1)


def test_non_finite_rejected():
    with pytest.raises(DomainError):
        RobotPose(float("nan"), 0, 0)
    with pytest.raises(DomainError):
        ControlInput(float("inf"), 0)
    with pytest.raises(DomainError):
        SimConfig(dt=0)


@given(finite, finite, st.floats(-10, 10), st.floats(-5, 5), st.floats(-5, 5),
       st.tuples(finite, finite, finite), st.tuples(finite, finite, finite))
def test_plant_linear_in_disturbance(x, y, th, v, w, d1, d2):
    q, u = RobotPose(x, y, th), ControlInput(v, w)
    ds = DisturbanceVec(*(a + b for a, b in zip(d1, d2)))
    f12 = plant_derivative(q, u, ds)
    f1 = plant_derivative(q, u, DisturbanceVec(*d1))
    f2 = plant_derivative(q, u, DisturbanceVec(*d2))
    f0 = plant_derivative(q, u, DisturbanceVec(0, 0, 0))
    for i in range(3):
        assert f12[i] == pytest.approx(f1[i] + f2[i] - f0[i], rel=1e-12, abs=1e-6)


def test_wrap_examples():
    assert wrap_angle(3 * math.pi) == pytest.approx(math.pi)
    assert wrap_angle(-math.pi) == math.pi
    assert wrap_angle(0.1) == 0.1


@given(st.floats(-1e4, 1e4, allow_nan=False))
def test_wrap_range_congruence_idempotent(a):
    w = wrap_angle(a)
    assert -math.pi < w <= math.pi
    k = (a - w) / (2 * math.pi)
    assert abs(k - round(k)) < 1e-9
    assert wrap_angle(w) == w


def test_straight_line_step():
    q = integrate_step(RobotPose(0, 0, 0), ControlInput(1, 0), lambda t: DisturbanceVec(0, 0, 0), 0.0, 1e-3)
    assert q.x == pytest.approx(1e-3, abs=1e-15) and q.y == 0 and q.theta == 0


def _integrate(dt, t_end, v=1.0, w=1.0, method="rk4"):
    q = (0.0, 0.0, 0.0)
    for k in range(int(round(t_end / dt))):
        q = step_tuple(q, v, w, ZERO, k * dt, dt, method)
    return q


def test_unit_circle_full_revolution():
    # dt near 1e-3 that divides one revolution exactly
    x, y, th = _integrate(2 * math.pi / 6283, 2 * math.pi)
    assert math.hypot(x, y) < 1e-6 and abs(wrap_angle(th)) < 1e-6


def test_trajectory_on_circle():
    v, w, dt = 0.8, -1.6, 1e-3
    r = abs(v / w)
    q = (0.0, 0.0, 0.0)
    for k in range(int(round(2 * math.pi / abs(w) / dt))):
        q = step_tuple(q, v, w, ZERO, k * dt, dt)
        assert abs(math.hypot(q[0], q[1] - v / w) - r) < 1e-6


def test_rk4_fourth_order():
    errs = []
    for dt in (4e-3, 2e-3, 1e-3):
        q = _integrate(dt, 1.0, w=10.0)
        x, y, _ = circle_pose(1.0, 10.0, 1.0)
        errs.append(math.hypot(q[0] - x, q[1] - y))
    assert 12 <= errs[0] / errs[1] <= 20
    assert 12 <= errs[1] / errs[2] <= 20


def test_euler_first_order():
    errs = []
    for dt in (4e-3, 2e-3, 1e-3):
        q = _integrate(dt, 1.0, w=10.0, method="euler")
        x, y, _ = circle_pose(1.0, 10.0, 1.0)
        errs.append(math.hypot(q[0] - x, q[1] - y))
    assert 1.8 < errs[0] / errs[1] < 2.2


def test_divergence_carries_time():
    with pytest.raises(SimulationDiverged) as exc:
        step_tuple((0.0, 0.0, 0.0), 1e308, 0.0, lambda t: (1e308, 0.0, 0.0), 1.5, 1.0)
    assert exc.value.t == 2.5


def test_deterministic():
    assert _integrate(1e-3, 0.5, w=3.0) == _integrate(1e-3, 0.5, w=3.0)


def test_n_steps_rounding():
    assert SimConfig(dt=1e-3, t_final=30.0).n_steps == 30000
