"""Closed-loop scenario execution, trace emission and multi-variant comparison."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .config import RunConfig
from .controllers import PidController, PpcController, SmcController, transform_error
from .metrics import ErrorSummary, box_stats, settling_time, summarize
from .observers import AsmdobState, EsoGains, EsoState, asmdob_step, eso_step
from .scenarios import disturbance_tuple, reference
from .simcore import ControlInput, RobotPose, step_tuple

TRACE_VERSION = 1
TRACE_COLUMNS = (
    "t", "x", "y", "theta", "xd", "yd", "v", "omega",
    "e1", "e2", "e3", "d1", "d2", "d3", "dhat1", "dhat2", "dhat3",
    "eta1", "eta2", "eta3", "rho1", "rho2", "rho3",
    "beta_hat", "sigma1", "sigma2", "sigma3", "violation_flag",
)
NAN = float("nan")


@dataclass(frozen=True)
class ViolationEvent:
    t: float
    axis: int  # 1-based
    error: float
    bound: float


@dataclass
class RunResult:
    config: RunConfig
    rows: list[tuple] = field(default_factory=list)
    events: list[ViolationEvent] = field(default_factory=list)
    summary: dict[str, ErrorSummary] = field(default_factory=dict)

    def column(self, name: str) -> list[float]:
        j = TRACE_COLUMNS.index(name)
        return [r[j] for r in self.rows]

    def csv_text(self) -> str:
        buf = io.StringIO()
        write_trace(buf, self.rows)
        return buf.getvalue()


def _make_controller(cfg: RunConfig):
    if cfg.controller == "ppc":
        return PpcController(cfg.ppc, cfg.envelope)
    if cfg.controller == "smc":
        return SmcController(cfg.smc)
    return PidController(cfg.pid)


def run_scenario(cfg: RunConfig, skip: float = 0.0) -> RunResult:
    """Run one closed-loop simulation.

    Per step: sample reference and disturbance, read the observer estimate,
    compute the control, advance the observer with that control, integrate the
    plant. Summaries cover e1/e2 over the logged samples with t >= ``skip``.
    """
    cfg.check_envelope()
    sim, scen = cfg.sim, cfg.scenario
    dt, n, method = sim.dt, sim.n_steps, sim.integrator
    controller = _make_controller(cfg)

    def d_fn(tt):
        return disturbance_tuple(tt, scen)

    pose = cfg.start_pose()
    q = pose.as_tuple()
    asm = AsmdobState.initial(pose) if cfg.observer == "asmdob" else None
    eso = EsoState.initial(pose) if cfg.observer == "eso" else None
    result = RunResult(cfg)
    is_ppc = cfg.controller == "ppc"
    eps = cfg.envelope.eps

    for k in range(n + 1):
        t = k * dt
        ref = reference(t, scen)
        d = d_fn(t)
        if asm is not None:
            d_hat = asm.d_hat
        elif eso is not None:
            d_hat = eso.d_hat
        elif cfg.observer == "oracle":
            d_hat = d
        else:
            d_hat = (0.0, 0.0, 0.0)

        pose = RobotPose(*q)
        cs = controller.step(t, pose, ref, d_hat, dt)
        u = cs.u
        if sim.v_max is not None or sim.omega_max is not None:
            u = u.saturated(sim.v_max, sim.omega_max)

        flagged = False
        if is_ppc:
            for i in range(3):
                if cs.violation[i]:
                    flagged = True
                    result.events.append(ViolationEvent(t, i + 1, cs.e[i], eps[i] * cs.rho[i]))

        if k % cfg.decimation == 0 or k == n:
            result.rows.append((
                t, q[0], q[1], q[2], ref.xd, ref.yd, u.v, u.omega,
                *cs.e, *d, *d_hat,
                *(cs.eta if is_ppc else (NAN,) * 3),
                *(cs.rho if is_ppc else (NAN,) * 3),
                asm.beta_hat if asm is not None else NAN,
                *(asm.sigma if asm is not None else (NAN,) * 3),
                int(flagged),
            ))
        if k == n:
            break
        if asm is not None:
            asm, _ = asmdob_step(asm, pose, u, cfg.asmdob, dt)
        elif eso is not None:
            eso, _ = eso_step(eso, pose, u, cfg.eso, dt)
        q = step_tuple(q, u.v, u.omega, d_fn, t, dt, method)

    result.summary = summarize_rows(result.rows, skip)
    return result


def summarize_rows(rows: Sequence[Sequence[float]], skip: float = 0.0) -> dict[str, ErrorSummary]:
    j1, j2 = TRACE_COLUMNS.index("e1"), TRACE_COLUMNS.index("e2")
    kept = [r for r in rows if r[0] >= skip]
    return {"x": summarize([r[j1] for r in kept]), "y": summarize([r[j2] for r in kept])}


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_trace(fh, rows: Sequence[Sequence]) -> None:
    fh.write(",".join(TRACE_COLUMNS) + "\n")
    for r in rows:
        fh.write(",".join(_fmt(v) for v in r) + "\n")


def read_trace(path: str | Path) -> list[tuple]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != TRACE_COLUMNS:
            raise ValueError(f"{path}: unexpected trace header")
        return [tuple(float(c) for c in row) for row in reader]


def observer_errors(result: RunResult) -> tuple[list[float], list[list[float]]]:
    """Per-channel |d - d_hat| from a trace."""
    t = result.column("t")
    chans = []
    for i in (1, 2, 3):
        d, dh = result.column(f"d{i}"), result.column(f"dhat{i}")
        chans.append([abs(a - b) for a, b in zip(d, dh)])
    return t, chans


def observer_settling(result: RunResult, band_frac: float = 0.05) -> list[float | None]:
    """5%-band settling time per channel; the band is a fraction of the channel's peak |d|."""
    t, chans = observer_errors(result)
    out = []
    for i, err in enumerate(chans, start=1):
        peak = max(abs(v) for v in result.column(f"d{i}"))
        out.append(settling_time(t, err, band_frac * peak) if peak > 0 else 0.0)
    return out


def steady_state_error(result: RunResult, t_from: float) -> list[float]:
    """Per-channel RMS of |d - d_hat| over samples with t >= t_from."""
    t, chans = observer_errors(result)
    out = []
    for err in chans:
        tail = [e for tt, e in zip(t, err) if tt >= t_from]
        out.append(math.sqrt(sum(e * e for e in tail) / len(tail)))
    return out


@dataclass
class Comparison:
    results: list[RunResult]

    def table(self) -> str:
        """Aligned text table: one row per run, RMS/MAX/MEAN for each axis."""
        head = f"{'Method':<14}| {'x RMS':>8} {'x MAX':>8} {'x MEAN':>8} | {'y RMS':>8} {'y MAX':>8} {'y MEAN':>8}"
        lines = [head, "-" * len(head)]
        for r in self.results:
            sx, sy = r.summary["x"], r.summary["y"]
            lines.append(
                f"{r.config.label:<14}| {sx.rms:8.4f} {sx.max_abs:8.4f} {sx.mean_abs:8.4f} "
                f"| {sy.rms:8.4f} {sy.max_abs:8.4f} {sy.mean_abs:8.4f}"
            )
        return "\n".join(lines)

    def summary_rows(self) -> list[dict]:
        rows = []
        for r in self.results:
            sx, sy = r.summary["x"], r.summary["y"]
            rows.append({
                "method": r.config.label,
                "x_rms": sx.rms, "x_max": sx.max_abs, "x_mean": sx.mean_abs,
                "y_rms": sy.rms, "y_max": sy.max_abs, "y_mean": sy.mean_abs,
            })
        return rows

    def observer_rows(self) -> list[dict]:
        rows = []
        for r in self.results:
            if r.config.observer not in ("asmdob", "eso"):
                continue
            st = observer_settling(r)
            ss = steady_state_error(r, t_from=min(10.0, r.config.sim.t_final / 2))
            rows.append({
                "observer": r.config.label,
                **{f"settle{i + 1}": st[i] for i in range(3)},
                **{f"steady_rms{i + 1}": ss[i] for i in range(3)},
            })
        return rows


def compare(cfgs: Sequence[RunConfig], workers: int = 1) -> Comparison:
    """Run every variant (optionally in parallel threads) and collect the results in input order."""
    if workers > 1 and len(cfgs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_scenario, cfgs))
    else:
        results = [run_scenario(c) for c in cfgs]
    return Comparison(results)


def box_summary(result: RunResult) -> dict:
    return {"x": box_stats(result.column("e1")), "y": box_stats(result.column("e2"))}


def eta_consistent(result: RunResult, tol: float = 1e-12) -> bool:
    """Logged eta equals the transform of the logged (e, rho) on every PPC row."""
    eps = result.config.envelope.eps
    for r in result.rows:
        row = dict(zip(TRACE_COLUMNS, r))
        for i in (1, 2, 3):
            eta = transform_error(row[f"e{i}"], row[f"rho{i}"], eps[i - 1])
            if abs(eta - row[f"eta{i}"]) > tol:
                return False
    return True


def observer_probe(cfg: RunConfig, t_final: float | None = None) -> RunResult:
    """Drive the disturbed plant with zero input and log only the observer.

    Both observers' estimation-error dynamics are independent of the applied
    input, so this isolates estimation from closed-loop effects and is cheap
    enough for gain matching.
    """
    if cfg.observer not in ("asmdob", "eso"):
        raise ValueError("observer_probe needs observer 'asmdob' or 'eso'")
    scen = cfg.scenario
    dt = cfg.sim.dt
    n = int(round((t_final if t_final is not None else cfg.sim.t_final) / dt))

    def d_fn(tt):
        return disturbance_tuple(tt, scen)

    pose = cfg.start_pose()
    q = pose.as_tuple()
    asm = AsmdobState.initial(pose) if cfg.observer == "asmdob" else None
    eso = EsoState.initial(pose) if cfg.observer == "eso" else None
    u = ControlInput(0.0, 0.0)
    result = RunResult(cfg)
    for k in range(n + 1):
        t = k * dt
        d = d_fn(t)
        d_hat = asm.d_hat if asm is not None else eso.d_hat
        if k % cfg.decimation == 0 or k == n:
            ref = reference(t, scen)
            result.rows.append((
                t, q[0], q[1], q[2], ref.xd, ref.yd, 0.0, 0.0,
                q[0] - ref.xd, q[1] - ref.yd, NAN, *d, *d_hat,
                NAN, NAN, NAN, NAN, NAN, NAN,
                asm.beta_hat if asm is not None else NAN,
                *(asm.sigma if asm is not None else (NAN,) * 3),
                0,
            ))
        if k == n:
            break
        pose = RobotPose(*q)
        if asm is not None:
            asm, _ = asmdob_step(asm, pose, u, cfg.asmdob, dt)
        else:
            eso, _ = eso_step(eso, pose, u, cfg.eso, dt)
        q = step_tuple(q, 0.0, 0.0, d_fn, t, dt, cfg.sim.integrator)
    return result


def match_eso(target_rms: float, axis: int, cfg: RunConfig, t_from: float = 10.0,
              lo: float = 0.5, hi: float = 500.0, iters: int = 30) -> float:
    """Smallest ESO bandwidth on ``axis`` (0-based) whose steady-state RMS
    estimation error does not exceed ``target_rms`` (geometric bisection)."""
    def rms(w):
        om = list(cfg.eso.omega_o)
        om[axis] = w
        r = observer_probe(cfg.with_(observer="eso", eso=EsoGains(tuple(om))))
        return steady_state_error(r, t_from)[axis]

    if rms(hi) > target_rms:
        return hi
    for _ in range(iters):
        mid = math.sqrt(lo * hi)
        if rms(mid) > target_rms:
            lo = mid
        else:
            hi = mid
    return hi
