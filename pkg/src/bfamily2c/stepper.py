"""Classical RK4 time stepping with CFL control and blow-up detection.

A run declares blow-up only when two independent signals agree: the
scenario-relevant gradient quantity exceeds the configured threshold
AND the CFL step selector has collapsed to its floor.  Either signal
alone is routinely a false positive (a steep but resolved front, or a
transiently large velocity); overflow anywhere is always terminal.
The numerically detected time is intrinsically a lower estimate of the
true breakdown time, which is what makes comparison against the
closed-form upper bounds meaningful.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .characteristics import (CharField, advance_characteristics,
                              init_characteristics, transport_residual)
from .diagnostics import (DiagRecord, SymmetryMode, fill_identity_residuals,
                          make_record)
from .dynamics import State, eval_rhs
from .model import Branch, Framework, ModelParams, classify_scenario
from .spectral import Grid

logger = logging.getLogger(__name__)


class RunStatus(Enum):
    REACHED_T_END = "reached_t_end"
    BLOW_UP_DETECTED = "blow_up_detected"
    OVERFLOW = "overflow"


class BlowupQuantity(Enum):
    MIN_UX = "min_ux"
    MAX_UX = "max_ux"
    SUP_RHOX = "sup_rhox"


class OverflowSignal(FloatingPointError):
    """Raised when an RK4 stage (or the combine) produced non-finite values."""

    def __init__(self, stage_index: int, t: float):
        super().__init__(f"overflow in RK4 stage {stage_index} at t={t:.6g}")
        self.stage_index = stage_index
        self.t = t


@dataclass(frozen=True)
class StepControl:
    """Step-size and termination policy of a run."""

    t_end: float
    cfl: float = 0.3
    dt_min: float = 1e-9
    dt_max: float = 0.1
    blowup_grad_threshold: float = 1e4
    dealias: bool = True
    framework: Framework = Framework.HS

    def __post_init__(self) -> None:
        if not (0.0 < self.cfl <= 1.0):
            raise ValueError(f"cfl must be in (0, 1], got {self.cfl}")
        if not (0.0 < self.dt_min <= self.dt_max):
            raise ValueError("need 0 < dt_min <= dt_max")
        if not self.blowup_grad_threshold > 0.0:
            raise ValueError("blowup_grad_threshold must be positive")
        if not self.t_end > 0.0:
            raise ValueError("t_end must be positive")


@dataclass(frozen=True)
class DtChoice:
    dt: float
    collapsed: bool  # the unclamped value fell below dt_min
    raw: float


def choose_dt(s: State, p: ModelParams, ctl: StepControl, g: Grid,
              ux: np.ndarray | None = None) -> DtChoice:
    """CFL-limited step:  dt = cfl dx / max(1, (1+|k3|) ||u||_inf),
    additionally capped by cfl / max(1, ||u_x||_inf) so per-step
    gradient growth stays bounded, then clamped to [dt_min, dt_max].
    """
    if ux is None:
        ux = g.derivative(s.u, 1)
    umax = float(np.max(np.abs(s.u)))
    uxmax = float(np.max(np.abs(ux)))
    raw = ctl.cfl * g.dx / max(1.0, (1.0 + abs(p.k3)) * umax)
    raw = min(raw, ctl.cfl / max(1.0, uxmax))
    dt = min(max(raw, ctl.dt_min), ctl.dt_max)
    return DtChoice(dt=dt, collapsed=raw < ctl.dt_min, raw=raw)


def step_rk4(
    s: State,
    dt: float,
    p: ModelParams,
    g: Grid,
    dealias: bool = True,
    collect_stages: bool = False,
):
    """One classical RK4 step; optionally returns the four stage fields.

    Stage fields (t, u) at offsets (0, dt/2, dt/2, dt) are what the
    characteristic ODE needs to advance through the same interval.
    Overflow in any stage raises OverflowSignal with the stage index.
    """
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    t, u, rho = s.t, s.u, s.rho

    def rhs(ui, rhoi, stage):
        try:
            return eval_rhs(State(t=t, u=ui, rho=rhoi), p, g, dealias=dealias)
        except FloatingPointError as exc:
            raise OverflowSignal(stage, t) from exc

    k1 = rhs(u, rho, 0)
    u2 = u + 0.5 * dt * k1.du
    r2 = rho + 0.5 * dt * k1.drho
    k2 = rhs(u2, r2, 1)
    u3 = u + 0.5 * dt * k2.du
    r3 = rho + 0.5 * dt * k2.drho
    k3 = rhs(u3, r3, 2)
    u4 = u + dt * k3.du
    r4 = rho + dt * k3.drho
    k4 = rhs(u4, r4, 3)

    u_new = u + (dt / 6.0) * (k1.du + 2.0 * k2.du + 2.0 * k3.du + k4.du)
    rho_new = rho + (dt / 6.0) * (k1.drho + 2.0 * k2.drho + 2.0 * k3.drho + k4.drho)
    if not (np.all(np.isfinite(u_new)) and np.all(np.isfinite(rho_new))):
        raise OverflowSignal(4, t)
    out = State(t=t + dt, u=u_new, rho=rho_new)
    if collect_stages:
        stages = [(t, u), (t + 0.5 * dt, u2), (t + 0.5 * dt, u3), (t + dt, u4)]
        return out, stages
    return out


@dataclass(frozen=True)
class BlowupDiagnostic:
    quantity: BlowupQuantity
    value: float
    location_index: int
    t_detected: float


@dataclass(frozen=True)
class RunReport:
    status: RunStatus
    t_final: float
    n_steps: int
    blowup: BlowupDiagnostic | None = None
    overflow_stage: int | None = None


@dataclass
class DiagSettings:
    """What the run loop records, and how often."""

    every: int = 1                  # diagnostic record cadence in steps
    hs_order: float = 2.0           # s of the monitored H^s norm of u
    symmetry_mode: SymmetryMode | None = None
    char_stride: int = 4            # 0 disables characteristics
    snapshot_every: int = 0         # 0 disables field snapshots


@dataclass
class Trajectory:
    records: list[DiagRecord] = field(default_factory=list)
    snapshots: list[tuple[int, State]] = field(default_factory=list)
    char: CharField | None = None


def _detection_candidates(
    branch: Branch,
    rho_x_relevant: bool,
    ux: np.ndarray,
    rhox: np.ndarray | None,
    threshold: float,
):
    """(quantity, signed value, node index) for each watched gradient over threshold."""
    hits = []
    if branch in (Branch.NEG_INF_UX, Branch.TWO_SIDED_UX):
        j = int(np.argmin(ux))
        if -ux[j] > threshold:
            hits.append((BlowupQuantity.MIN_UX, float(ux[j]), j))
    if branch in (Branch.POS_INF_UX, Branch.TWO_SIDED_UX):
        j = int(np.argmax(ux))
        if ux[j] > threshold:
            hits.append((BlowupQuantity.MAX_UX, float(ux[j]), j))
    if rho_x_relevant and rhox is not None:
        j = int(np.argmax(np.abs(rhox)))
        if abs(rhox[j]) > threshold:
            hits.append((BlowupQuantity.SUP_RHOX, float(abs(rhox[j])), j))
    return hits


def run(
    s0: State,
    p: ModelParams,
    ctl: StepControl,
    g: Grid,
    diag: DiagSettings | None = None,
    hooks: Sequence[Callable[[int, State], None]] = (),
) -> tuple[Trajectory, RunReport]:
    """Integrate until t_end, blow-up detection, or overflow.

    Detection: the branch-relevant gradient quantity (per
    classify_scenario under ctl.framework) exceeds
    ctl.blowup_grad_threshold while choose_dt is pinned at dt_min.
    The final time of a detected run is a lower estimate of the true
    breakdown time.  Identical inputs produce bit-identical
    trajectories on one platform.
    """
    diag = diag or DiagSettings()
    scenario = classify_scenario(p, ctl.framework)
    watch_rhox = scenario.rho_x_relevant

    char = init_characteristics(g, diag.char_stride) if diag.char_stride > 0 else None
    rho0 = s0.rho.copy()
    warned_boundary = False

    traj = Trajectory()
    s = s0
    n_steps = 0
    status = RunStatus.REACHED_T_END
    blowup: BlowupDiagnostic | None = None
    overflow_stage: int | None = None
    last_recorded = -1

    def record(state: State, dt_used: float) -> None:
        nonlocal last_recorded
        tres = math.nan
        qxmin = math.nan
        if char is not None:
            tres = transport_residual(state, char, rho0, p, g)
            qxmin = float(np.min(char.qx))
        traj.records.append(make_record(
            state, dt_used, p, g,
            step=n_steps,
            hs_order=diag.hs_order,
            symmetry_mode=diag.symmetry_mode,
            transport_res=tres,
            qx_min=qxmin,
        ))
        last_recorded = n_steps

    def snapshot(state: State) -> None:
        traj.snapshots.append((n_steps, State(t=state.t, u=state.u.copy(),
                                              rho=state.rho.copy())))

    record(s, 0.0)
    if diag.snapshot_every > 0:
        snapshot(s)

    t_eps = 1e-12 * max(1.0, ctl.t_end)
    while ctl.t_end - s.t > t_eps:
        ux = g.derivative(s.u, 1)
        choice = choose_dt(s, p, ctl, g, ux=ux)
        dt = min(choice.dt, ctl.t_end - s.t)
        try:
            if char is not None:
                s_new, stages = step_rk4(s, dt, p, g, dealias=ctl.dealias,
                                         collect_stages=True)
                char = advance_characteristics(char, stages, p, g, dt)
                if char.near_boundary and not warned_boundary:
                    logger.warning(
                        "characteristic evaluation points within %.0f%% of the "
                        "domain half-width at t=%.6g; transport residuals may "
                        "degrade", 100 * (1 - 0.95), s.t)
                    warned_boundary = True
            else:
                s_new = step_rk4(s, dt, p, g, dealias=ctl.dealias)
        except OverflowSignal as exc:
            status = RunStatus.OVERFLOW
            overflow_stage = exc.stage_index
            logger.warning("overflow at t=%.6g (stage %d); terminating run",
                           s.t, exc.stage_index)
            break
        s = s_new
        n_steps += 1
        for hook in hooks:
            hook(n_steps, s)

        if n_steps % diag.every == 0:
            record(s, dt)
        if diag.snapshot_every > 0 and n_steps % diag.snapshot_every == 0:
            snapshot(s)

        ux_new = g.derivative(s.u, 1)
        rhox_new = g.derivative(s.rho, 1) if watch_rhox else None
        hits = _detection_candidates(scenario.branch, watch_rhox, ux_new,
                                     rhox_new, ctl.blowup_grad_threshold)
        # a run that lands on t_end never reports blow-up
        if hits and choice.collapsed and ctl.t_end - s.t > t_eps:
            quantity, value, j = max(hits, key=lambda h: abs(h[1]))
            blowup = BlowupDiagnostic(quantity=quantity, value=value,
                                      location_index=j, t_detected=s.t)
            status = RunStatus.BLOW_UP_DETECTED
            logger.info("blow-up detected at t=%.6g: %s=%.6g at x=%.6g",
                        s.t, quantity.value, value, g.x[j])
            break

    if last_recorded != n_steps:
        # final row: dt column holds the time elapsed since the previous record
        record(s, s.t - traj.records[-1].t)
    if diag.snapshot_every > 0 and (not traj.snapshots
                                    or traj.snapshots[-1][0] != n_steps):
        snapshot(s)

    fill_identity_residuals(traj.records)
    traj.char = char
    report = RunReport(status=status, t_final=s.t, n_steps=n_steps,
                       blowup=blowup, overflow_stage=overflow_stage)
    return traj, report
