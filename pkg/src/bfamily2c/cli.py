"""Command line front end: run, sweep, and offline re-verification.

Configs are JSON documents; every run directory receives

    diagnostics.csv   one row per diagnostic record (stable schema)
    extras.csv        origin values, identity integrals, Jacobian floor
    snap_<k>.csv      field snapshots (x, u, rho, m), when enabled
    manifest.json     full effective config, run report, check verdicts,
                      and content hashes of the CSVs

`check <manifest>` re-derives every enabled verdict from the stored
CSVs offline and fails on any mismatch or hash difference, so a
finished run directory is self-verifying.  Exit codes: 0 success,
1 check failure, 2 usage/config error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .characteristics import rho_sup_bound_check
from .diagnostics import (DIAG_COLUMNS, EXTRA_COLUMNS, DiagRecord,
                          SymmetryMode, conservation_check, gronwall_check_h2,
                          h3_energy_check, riccati_check)
from .dynamics import State
from .initdata import InitKind, InitSpec, blowup_bound, build_initial
from .model import CaseTag, Framework, ModelParams, custom_params, make_params
from .spectral import Grid
from .stepper import (DiagSettings, RunReport, RunStatus, StepControl,
                      Trajectory, run)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_IO = 3

WORKERS_ENV = "BFAMILY2C_WORKERS"

DIAG_HEADER = ",".join(DIAG_COLUMNS)
EXTRA_HEADER = ",".join(EXTRA_COLUMNS)
SNAP_HEADER = "x,u,rho,m"
SWEEP_COLUMNS = ("case", "b", "k1", "k2", "k3", "amplitude", "status",
                 "t_final", "blowup_quantity", "slope_blowup_bound",
                 "bound_respected")


class ConfigError(Exception):
    """Invalid or malformed configuration; maps to exit code 2."""


# ----------------------------------------------------------------------
# config parsing

def _section(cfg: dict, key: str, required: bool = True) -> dict:
    val = cfg.get(key)
    if val is None:
        if required:
            raise ConfigError(f"missing section '{key}'")
        return {}
    if not isinstance(val, dict):
        raise ConfigError(f"section '{key}' must be an object")
    return val


def _take(sec: dict, path: str, key: str, kind, default=...):
    """Pop sec[key] coerced to `kind`; errors name the dotted field."""
    if key not in sec:
        if default is ...:
            raise ConfigError(f"missing required field '{path}.{key}'")
        return default
    val = sec.pop(key)
    where = f"{path}.{key}"
    if val is None and default is not ...:
        return default  # explicit null falls back to the default
    if kind is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError(f"field '{where}' must be a number, got {val!r}")
        return float(val)
    if kind is int:
        if isinstance(val, bool) or not isinstance(val, int):
            raise ConfigError(f"field '{where}' must be an integer, got {val!r}")
        return int(val)
    if kind is bool:
        if not isinstance(val, bool):
            raise ConfigError(f"field '{where}' must be a boolean, got {val!r}")
        return val
    if kind is str:
        if not isinstance(val, str):
            raise ConfigError(f"field '{where}' must be a string, got {val!r}")
        return val
    if kind is dict:
        if not isinstance(val, dict):
            raise ConfigError(f"field '{where}' must be an object, got {val!r}")
        return val
    raise AssertionError(kind)


def _no_leftovers(sec: dict, path: str) -> None:
    if sec:
        raise ConfigError(f"unknown field '{path}.{next(iter(sec))}'")


def _parse_model(cfg: dict) -> ModelParams:
    sec = dict(_section(cfg, "model"))
    case = _take(sec, "model", "case", str)
    try:
        if case == CaseTag.CUSTOM.value:
            p = custom_params(_take(sec, "model", "k1", float),
                              _take(sec, "model", "k2", float),
                              _take(sec, "model", "k3", float))
        elif case in (CaseTag.CASE_I.value, CaseTag.CASE_II.value):
            p = make_params(CaseTag(case), _take(sec, "model", "b", float))
        else:
            raise ConfigError(f"field 'model.case' must be one of "
                              f"case_i/case_ii/custom, got {case!r}")
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from exc
    _no_leftovers(sec, "model")
    return p


def _parse_grid(cfg: dict) -> Grid:
    sec = dict(_section(cfg, "grid"))
    L = _take(sec, "grid", "L", float)
    N = _take(sec, "grid", "N", int)
    _no_leftovers(sec, "grid")
    try:
        g = Grid(L, N)
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from exc
    if N & (N - 1) != 0:
        logger.warning("grid.N=%d is not a power of two; FFTs will be slower", N)
    return g


def _parse_control(cfg: dict) -> StepControl:
    sec = dict(_section(cfg, "control"))
    fw = _take(sec, "control", "framework", str, Framework.HS.value)
    try:
        framework = Framework(fw)
    except ValueError:
        raise ConfigError(f"field 'control.framework' must be 'hs' or 'h2', got {fw!r}")
    kwargs = dict(
        t_end=_take(sec, "control", "t_end", float),
        cfl=_take(sec, "control", "cfl", float, 0.3),
        dt_min=_take(sec, "control", "dt_min", float, 1e-9),
        dt_max=_take(sec, "control", "dt_max", float, 0.1),
        blowup_grad_threshold=_take(sec, "control", "blowup_grad_threshold",
                                    float, 1e4),
        dealias=_take(sec, "control", "dealias", bool, True),
        framework=framework,
    )
    _no_leftovers(sec, "control")
    try:
        return StepControl(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"control: {exc}") from exc


def _parse_init_spec(sec: dict, path: str) -> InitSpec:
    sec = dict(sec)
    kind_s = _take(sec, path, "kind", str)
    try:
        kind = InitKind(kind_s)
    except ValueError:
        raise ConfigError(
            f"field '{path}.kind' must be one of "
            f"{'/'.join(k.value for k in InitKind)}, got {kind_s!r}")
    kwargs = dict(
        kind=kind,
        amplitude=_take(sec, path, "amplitude", float, 1.0),
        width=_take(sec, path, "width", float, 1.0),
        center=_take(sec, path, "center", float, 0.0),
    )
    if kind is InitKind.FROM_M0:
        kwargs["m0_spec"] = _parse_init_spec(_take(sec, path, "m0", dict),
                                             f"{path}.m0")
    if kind is InitKind.TABLE:
        kwargs["table_path"] = _take(sec, path, "path", str)
    _no_leftovers(sec, path)
    try:
        return InitSpec(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_initial(cfg: dict) -> tuple[InitSpec, InitSpec]:
    sec = dict(_section(cfg, "initial"))
    spec_u = _parse_init_spec(_take(sec, "initial", "u", dict), "initial.u")
    spec_rho = _parse_init_spec(_take(sec, "initial", "rho", dict), "initial.rho")
    _no_leftovers(sec, "initial")
    return spec_u, spec_rho


@dataclass
class OutputSettings:
    directory: str = "out"
    diag_every: int = 1
    snapshot_every: int = 0
    char_label_stride: int = 4
    hs_order: float = 2.0


def _parse_outputs(cfg: dict) -> OutputSettings:
    sec = dict(_section(cfg, "outputs", required=False))
    out = OutputSettings(
        directory=_take(sec, "outputs", "directory", str, "out"),
        diag_every=_take(sec, "outputs", "diag_every", int, 1),
        snapshot_every=_take(sec, "outputs", "snapshot_every", int, 0),
        char_label_stride=_take(sec, "outputs", "char_label_stride", int, 4),
        hs_order=_take(sec, "outputs", "hs_order", float, 2.0),
    )
    _no_leftovers(sec, "outputs")
    if out.diag_every < 1:
        raise ConfigError("field 'outputs.diag_every' must be >= 1")
    if out.snapshot_every < 0 or out.char_label_stride < 0:
        raise ConfigError("fields 'outputs.snapshot_every' and "
                          "'outputs.char_label_stride' must be >= 0")
    return out


@dataclass
class CheckSettings:
    conservation: bool = True
    gronwall: bool = True
    rho_bound: bool = True
    transport: bool | None = None   # None: on iff characteristics are on
    identities: bool = True
    symmetry: bool | None = None    # None: on iff symmetry_mode is set
    origin: bool | None = None      # None: on iff symmetry_mode is set
    riccati: bool = False
    h3_energy: bool = False
    symmetry_mode: SymmetryMode | None = None
    transport_tol: float = 1e-6
    symmetry_tol: float = 1e-10
    origin_tol: float = 1e-9
    identity_rel_tol: float = 1e-2
    gronwall_slack: float = 1e-8
    rho_bound_slack: float = 1e-8
    conservation_tol: float = 1e-12
    riccati_tol_coeff: float = 1e-4


def _parse_checks(cfg: dict) -> CheckSettings:
    sec = dict(_section(cfg, "checks", required=False))
    mode_s = _take(sec, "checks", "symmetry_mode", str, None)
    mode = None
    if mode_s is not None:
        try:
            mode = SymmetryMode(mode_s)
        except ValueError:
            raise ConfigError(
                f"field 'checks.symmetry_mode' must be one of "
                f"{'/'.join(m.value for m in SymmetryMode)}, got {mode_s!r}")
    cs = CheckSettings(
        conservation=_take(sec, "checks", "conservation", bool, True),
        gronwall=_take(sec, "checks", "gronwall", bool, True),
        rho_bound=_take(sec, "checks", "rho_bound", bool, True),
        transport=_take(sec, "checks", "transport", bool, None),
        identities=_take(sec, "checks", "identities", bool, True),
        symmetry=_take(sec, "checks", "symmetry", bool, None),
        origin=_take(sec, "checks", "origin", bool, None),
        riccati=_take(sec, "checks", "riccati", bool, False),
        h3_energy=_take(sec, "checks", "h3_energy", bool, False),
        symmetry_mode=mode,
        transport_tol=_take(sec, "checks", "transport_tol", float, 1e-6),
        symmetry_tol=_take(sec, "checks", "symmetry_tol", float, 1e-10),
        origin_tol=_take(sec, "checks", "origin_tol", float, 1e-9),
        identity_rel_tol=_take(sec, "checks", "identity_rel_tol", float, 1e-2),
        gronwall_slack=_take(sec, "checks", "gronwall_slack", float, 1e-8),
        rho_bound_slack=_take(sec, "checks", "rho_bound_slack", float, 1e-8),
        conservation_tol=_take(sec, "checks", "conservation_tol", float, 1e-12),
        riccati_tol_coeff=_take(sec, "checks", "riccati_tol_coeff", float, 1e-4),
    )
    _no_leftovers(sec, "checks")
    return cs


@dataclass
class RunSetup:
    params: ModelParams
    grid: Grid
    control: StepControl
    spec_u: InitSpec
    spec_rho: InitSpec
    outputs: OutputSettings
    checks: CheckSettings


def parse_config(cfg: dict) -> RunSetup:
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    known = {"model", "grid", "control", "initial", "outputs", "checks", "sweep"}
    for key in cfg:
        if key not in known:
            raise ConfigError(f"unknown section '{key}'")
    setup = RunSetup(
        params=_parse_model(cfg),
        grid=_parse_grid(cfg),
        control=_parse_control(cfg),
        spec_u=None, spec_rho=None,  # type: ignore[arg-type]
        outputs=_parse_outputs(cfg),
        checks=_parse_checks(cfg),
    )
    setup.spec_u, setup.spec_rho = _parse_initial(cfg)
    cs = setup.checks
    if cs.transport is None:
        cs.transport = setup.outputs.char_label_stride > 0
    if cs.transport and setup.outputs.char_label_stride == 0:
        raise ConfigError("checks.transport requires outputs.char_label_stride > 0")
    if cs.symmetry is None:
        cs.symmetry = cs.symmetry_mode is not None
    if cs.origin is None:
        cs.origin = cs.symmetry_mode is not None
    if cs.symmetry and cs.symmetry_mode is None:
        raise ConfigError("checks.symmetry requires checks.symmetry_mode")
    if cs.riccati and not (1.0 < setup.params.k1 <= 3.0 and setup.params.k2 >= 0.0):
        raise ConfigError("checks.riccati needs 1 < k1 <= 3 and k2 >= 0")
    return setup


def config_echo(setup: RunSetup) -> dict:
    """The fully-defaulted config; re-running it reproduces the run."""
    p, g, ctl = setup.params, setup.grid, setup.control
    if p.case_tag is CaseTag.CUSTOM:
        model = {"case": "custom", "k1": p.k1, "k2": p.k2, "k3": p.k3}
    else:
        model = {"case": p.case_tag.value, "b": p.b}

    def init_dict(spec: InitSpec) -> dict:
        d = {"kind": spec.kind.value, "amplitude": spec.amplitude,
             "width": spec.width, "center": spec.center}
        if spec.m0_spec is not None:
            d["m0"] = init_dict(spec.m0_spec)
        if spec.table_path is not None:
            d["path"] = spec.table_path
        return d

    cs = setup.checks
    return {
        "model": model,
        "grid": {"L": g.L, "N": g.N},
        "control": {
            "t_end": ctl.t_end, "cfl": ctl.cfl, "dt_min": ctl.dt_min,
            "dt_max": ctl.dt_max,
            "blowup_grad_threshold": ctl.blowup_grad_threshold,
            "dealias": ctl.dealias, "framework": ctl.framework.value,
        },
        "initial": {"u": init_dict(setup.spec_u), "rho": init_dict(setup.spec_rho)},
        "outputs": {
            "directory": setup.outputs.directory,
            "diag_every": setup.outputs.diag_every,
            "snapshot_every": setup.outputs.snapshot_every,
            "char_label_stride": setup.outputs.char_label_stride,
            "hs_order": setup.outputs.hs_order,
        },
        "checks": {
            "conservation": cs.conservation, "gronwall": cs.gronwall,
            "rho_bound": cs.rho_bound, "transport": cs.transport,
            "identities": cs.identities, "symmetry": cs.symmetry,
            "origin": cs.origin, "riccati": cs.riccati,
            "h3_energy": cs.h3_energy,
            "symmetry_mode": None if cs.symmetry_mode is None
            else cs.symmetry_mode.value,
            "transport_tol": cs.transport_tol,
            "symmetry_tol": cs.symmetry_tol, "origin_tol": cs.origin_tol,
            "identity_rel_tol": cs.identity_rel_tol,
            "gronwall_slack": cs.gronwall_slack,
            "rho_bound_slack": cs.rho_bound_slack,
            "conservation_tol": cs.conservation_tol,
            "riccati_tol_coeff": cs.riccati_tol_coeff,
        },
    }


# ----------------------------------------------------------------------
# check evaluation (shared by `run` and offline `check`)

def _finite_max(vals) -> float:
    arr = np.asarray(vals, dtype=float)
    arr = arr[np.isfinite(arr)]
    return float(np.max(arr)) if arr.size else math.nan


def evaluate_checks(records: list[DiagRecord], p: ModelParams,
                    cs: CheckSettings) -> dict:
    """Run every enabled a-posteriori check over the records."""
    out: dict = {}

    res = conservation_check(records, cs.conservation_tol)
    out["conservation"] = {
        "enabled": cs.conservation, "passed": res.ok if cs.conservation else None,
        "baseline": res.baseline, "max_abs_drift": res.max_abs_drift,
        "rel_drift": res.rel_drift,
    }

    if cs.gronwall:
        gr = gronwall_check_h2(records, p, cs.gronwall_slack)
        out["gronwall"] = {
            "enabled": True, "passed": gr.ok, "branch": gr.branch.value,
            "boundary_overlap": gr.boundary_overlap, "m1": gr.m1, "c": gr.c,
            "first_violation_t": gr.first_violation_t,
            "worst_ratio": gr.worst_ratio,
        }
    else:
        out["gronwall"] = {"enabled": False, "passed": None}

    if cs.rho_bound:
        variants = rho_sup_bound_check(records, p, cs.rho_bound_slack)
        out["rho_bound"] = {
            "enabled": True,
            "passed": all(v.ok for v in variants if v.applicable),
            "variants": [
                {"variant": v.variant, "applicable": v.applicable, "ok": v.ok,
                 "first_violation_t": v.first_violation_t,
                 "worst_margin": v.worst_margin if math.isfinite(v.worst_margin)
                 else None}
                for v in variants
            ],
        }
    else:
        out["rho_bound"] = {"enabled": False, "passed": None}

    if cs.transport:
        worst = _finite_max([r.transport_res for r in records])
        qx_min = min((r.qx_min for r in records if math.isfinite(r.qx_min)),
                     default=math.nan)
        ok = (math.isfinite(worst) and worst <= cs.transport_tol
              and math.isfinite(qx_min) and qx_min > 0.0)
        out["transport"] = {"enabled": True, "passed": ok,
                            "max_residual": worst, "qx_min": qx_min,
                            "tol": cs.transport_tol}
    else:
        out["transport"] = {"enabled": False, "passed": None}

    if cs.identities:
        details = {}
        ok = True
        for name, r_attr, s_attr in (("m2", "r_m2", "s_m2"),
                                     ("rho2", "r_rho2", "s_rho2"),
                                     ("rhox2", "r_rhox2", "s_rhox2"),
                                     ("rhoxx2", "r_rhoxx2", "s_rhoxx2")):
            res_max = max(getattr(r, r_attr) for r in records)
            scale = max(abs(getattr(r, s_attr)) for r in records)
            rel = res_max / scale if scale > 0.0 else (0.0 if res_max == 0.0
                                                       else math.inf)
            details[name] = {"max_residual": res_max, "scale": scale,
                             "rel_residual": rel}
            ok = ok and rel <= cs.identity_rel_tol
        out["identities"] = {"enabled": True, "passed": ok,
                             "rel_tol": cs.identity_rel_tol, **details}
    else:
        out["identities"] = {"enabled": False, "passed": None}

    if cs.symmetry:
        worst = _finite_max([r.symmetry_res for r in records])
        ok = math.isfinite(worst) and worst <= cs.symmetry_tol
        out["symmetry"] = {"enabled": True, "passed": ok,
                           "max_residual": worst, "tol": cs.symmetry_tol,
                           "mode": cs.symmetry_mode.value}
    else:
        out["symmetry"] = {"enabled": False, "passed": None}

    if cs.origin:
        worst = max(max(abs(r.u0), abs(r.uxx0), abs(r.rho0)) for r in records)
        out["origin"] = {"enabled": True, "passed": worst <= cs.origin_tol,
                         "max_value": worst, "tol": cs.origin_tol}
    else:
        out["origin"] = {"enabled": False, "passed": None}

    if cs.riccati:
        rc = riccati_check(records, p, cs.riccati_tol_coeff)
        out["riccati"] = {
            "enabled": True, "passed": rc.ok_derivative and rc.ok_reciprocal,
            "ok_derivative": rc.ok_derivative,
            "derivative_first_violation_t": rc.derivative_first_violation_t,
            "ok_reciprocal": rc.ok_reciprocal,
            "reciprocal_first_violation_t": rc.reciprocal_first_violation_t,
            "t0": rc.t0, "h0": rc.h0,
            "increasing_until_t": rc.increasing_until_t,
        }
    else:
        out["riccati"] = {"enabled": False, "passed": None}

    if cs.h3_energy:
        h3 = h3_energy_check(records, p, cs.gronwall_slack)
        out["h3_energy"] = {
            "enabled": True, "passed": h3.ok, "applicable": h3.applicable,
            "branch": h3.branch.value, "m1": h3.m1, "m2": h3.m2, "c": h3.c,
            "first_violation_t": h3.first_violation_t,
            "worst_ratio": h3.worst_ratio,
        }
    else:
        out["h3_energy"] = {"enabled": False, "passed": None}

    return out


def checks_all_passed(checks: dict) -> bool:
    return all(v["passed"] for v in checks.values() if v["enabled"])


def slope_bound_payload(records: list[DiagRecord], p: ModelParams,
                        report: RunReport) -> dict:
    """Wave-breaking upper bound vs. the detected time, when applicable."""
    h0 = records[0].ux0
    applicable = (1.0 < p.k1 <= 3.0) and p.k2 >= 0.0 and h0 > 0.0
    payload: dict = {"applicable": applicable, "u0_prime_at_zero": h0}
    if not applicable:
        payload.update({"bound": None, "t_detected": None, "respected": None})
        return payload
    bound = blowup_bound(p, h0)
    t_det = (report.blowup.t_detected
             if report.status is RunStatus.BLOW_UP_DETECTED else None)
    payload.update({
        "bound": bound,
        "t_detected": t_det,
        "respected": (t_det <= bound) if t_det is not None else None,
    })
    return payload


# ----------------------------------------------------------------------
# serialization

def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_diagnostics_csv(path: Path, records: list[DiagRecord]) -> None:
    attr = {"E1": "e1", "E2": "e2", "R_m2": "r_m2", "R_rho2": "r_rho2",
            "R_rhox2": "r_rhox2", "R_rhoxx2": "r_rhoxx2"}
    with open(path, "w", newline="") as fh:
        fh.write(DIAG_HEADER + "\n")
        for r in records:
            vals = (getattr(r, attr.get(c, c)) for c in DIAG_COLUMNS)
            fh.write(",".join(_fmt(v) for v in vals) + "\n")


def write_extras_csv(path: Path, records: list[DiagRecord]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(EXTRA_HEADER + "\n")
        for r in records:
            vals = [str(r.step)] + [_fmt(getattr(r, c)) for c in EXTRA_COLUMNS[1:]]
            fh.write(",".join(vals) + "\n")


def write_snapshot_csv(path: Path, state: State, g: Grid) -> None:
    m = g.helmholtz(state.u)
    with open(path, "w", newline="") as fh:
        fh.write(SNAP_HEADER + "\n")
        for j in range(g.N):
            fh.write(",".join((_fmt(g.x[j]), _fmt(state.u[j]),
                               _fmt(state.rho[j]), _fmt(m[j]))) + "\n")


def read_records(diag_path: Path, extras_path: Path) -> list[DiagRecord]:
    """Rebuild DiagRecords from the two CSVs (losslessly round-tripped)."""
    def read_rows(path: Path, header: str) -> list[list[str]]:
        with open(path, "r", newline="") as fh:
            lines = fh.read().splitlines()
        if not lines or lines[0] != header:
            raise ValueError(f"{path} header mismatch")
        return [ln.split(",") for ln in lines[1:] if ln]

    attr = {"E1": "e1", "E2": "e2", "R_m2": "r_m2", "R_rho2": "r_rho2",
            "R_rhox2": "r_rhox2", "R_rhoxx2": "r_rhoxx2"}
    diag_rows = read_rows(diag_path, DIAG_HEADER)
    extra_rows = read_rows(extras_path, EXTRA_HEADER)
    if len(diag_rows) != len(extra_rows):
        raise ValueError("diagnostics and extras row counts differ")
    records = []
    for drow, erow in zip(diag_rows, extra_rows):
        kw = {attr.get(c, c): float(v) for c, v in zip(DIAG_COLUMNS, drow)}
        kw.update({c: float(v) for c, v in zip(EXTRA_COLUMNS[1:], erow[1:])})
        kw["step"] = int(erow[0])
        records.append(DiagRecord(**kw))
    return records


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _jsonable(obj):
    """Recursively replace non-finite floats (JSON has no nan/inf)."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


# ----------------------------------------------------------------------
# commands

def execute_run(setup: RunSetup, out_dir: Path) -> tuple[Trajectory, RunReport, dict]:
    """Build, integrate, write artifacts; returns (trajectory, report, checks)."""
    g = setup.grid
    try:
        s0 = build_initial(setup.spec_u, setup.spec_rho, g)
    except ValueError as exc:
        raise ConfigError(f"initial: {exc}") from exc
    diag = DiagSettings(
        every=setup.outputs.diag_every,
        hs_order=setup.outputs.hs_order,
        symmetry_mode=setup.checks.symmetry_mode,
        char_stride=setup.outputs.char_label_stride,
        snapshot_every=setup.outputs.snapshot_every,
    )
    traj, report = run(s0, setup.params, setup.control, g, diag=diag)
    checks = evaluate_checks(traj.records, setup.params, setup.checks)

    out_dir.mkdir(parents=True, exist_ok=True)
    diag_path = out_dir / "diagnostics.csv"
    extras_path = out_dir / "extras.csv"
    write_diagnostics_csv(diag_path, traj.records)
    write_extras_csv(extras_path, traj.records)
    files = {"diagnostics.csv": _sha256(diag_path),
             "extras.csv": _sha256(extras_path)}
    for idx, (step, state) in enumerate(traj.snapshots):
        name = f"snap_{idx}.csv"
        write_snapshot_csv(out_dir / name, state, g)
        files[name] = _sha256(out_dir / name)

    manifest = {
        "package": "bfamily2c",
        "version": __version__,
        "config": config_echo(setup),
        "report": {
            "status": report.status.value,
            "t_final": report.t_final,
            "n_steps": report.n_steps,
            "blowup": None if report.blowup is None else {
                "quantity": report.blowup.quantity.value,
                "value": report.blowup.value,
                "location_index": report.blowup.location_index,
                "t_detected": report.blowup.t_detected,
            },
            "overflow_stage": report.overflow_stage,
        },
        "slope_bound": slope_bound_payload(traj.records, setup.params, report),
        "checks": checks,
        "files": files,
        "n_records": len(traj.records),
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(_jsonable(manifest), fh, indent=2, allow_nan=False)
        fh.write("\n")
    return traj, report, checks


def cmd_run(config_path: str, directory: str | None = None) -> int:
    try:
        with open(config_path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        logger.error("cannot read config: %s", exc)
        return EXIT_IO
    except json.JSONDecodeError as exc:
        logger.error("config parse error in %s: line %d column %d: %s",
                     config_path, exc.lineno, exc.colno, exc.msg)
        return EXIT_CONFIG
    try:
        setup = parse_config(cfg)
        if directory is not None:
            setup.outputs.directory = directory
        traj, report, checks = execute_run(setup, Path(setup.outputs.directory))
    except ConfigError as exc:
        logger.error("config error: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        logger.error("I/O error: %s", exc)
        return EXIT_IO
    ok = checks_all_passed(checks)
    print(f"status={report.status.value} t_final={report.t_final:.6g} "
          f"steps={report.n_steps} records={len(traj.records)} "
          f"checks={'ok' if ok else 'FAILED'}")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _verify_manifest(manifest_dir: Path, manifest: dict) -> tuple[bool, list[str]]:
    """Re-derive all enabled verdicts from the stored CSVs; list mismatches."""
    problems: list[str] = []
    files = manifest.get("files", {})
    for name, digest in files.items():
        path = manifest_dir / name
        actual = _sha256(path)
        if actual != digest:
            problems.append(f"hash mismatch for {name}")
    records = read_records(manifest_dir / "diagnostics.csv",
                           manifest_dir / "extras.csv")
    if len(records) != manifest.get("n_records"):
        problems.append("record count differs from manifest")

    cfg = manifest["config"]
    model = cfg["model"]
    if model["case"] == "custom":
        p = custom_params(model["k1"], model["k2"], model["k3"])
    else:
        p = make_params(CaseTag(model["case"]), model["b"])
    cs_cfg = dict(cfg["checks"])
    mode = cs_cfg.pop("symmetry_mode")
    cs = CheckSettings(**cs_cfg,
                       symmetry_mode=None if mode is None else SymmetryMode(mode))
    rederived = evaluate_checks(records, p, cs)
    stored = manifest["checks"]
    for name, val in rederived.items():
        if name not in stored:
            problems.append(f"check '{name}' missing from manifest")
            continue
        if bool(stored[name]["enabled"]) != bool(val["enabled"]):
            problems.append(f"check '{name}' enabled flag differs")
        elif val["enabled"] and bool(stored[name]["passed"]) != bool(val["passed"]):
            problems.append(f"check '{name}' verdict differs "
                            f"(stored={stored[name]['passed']}, "
                            f"recomputed={val['passed']})")
        elif val["enabled"] and not val["passed"]:
            problems.append(f"check '{name}' fails")
    return not problems, problems


def cmd_check(manifest_path: str) -> int:
    path = Path(manifest_path)
    try:
        with open(path) as fh:
            manifest = json.load(fh)
    except OSError as exc:
        logger.error("cannot read manifest: %s", exc)
        return EXIT_IO
    except json.JSONDecodeError as exc:
        logger.error("manifest parse error: %s", exc)
        return EXIT_CONFIG
    try:
        ok, problems = _verify_manifest(path.parent, manifest)
    except OSError as exc:
        logger.error("I/O error: %s", exc)
        return EXIT_IO
    except (KeyError, ValueError, TypeError) as exc:
        logger.error("malformed manifest: %s", exc)
        return EXIT_CONFIG
    if ok:
        print(f"check ok: {manifest_path} ({manifest.get('n_records')} records)")
        return EXIT_OK
    for prob in problems:
        print(f"check FAILED: {prob}")
    return EXIT_CHECK_FAILED


# ----------------------------------------------------------------------
# sweep

def _num_token(v: float) -> str:
    return format(v, "g").replace(".", "p").replace("-", "m")


def _sweep_one(cfg: dict, out_dir: str) -> tuple[dict, bool]:
    """Worker: one sweep combination; returns (summary row, checks ok)."""
    setup = parse_config(cfg)
    traj, report, checks = execute_run(setup, Path(out_dir))
    p = setup.params
    payload = slope_bound_payload(traj.records, p, report)
    row = {
        "case": cfg["model"]["case"],
        "b": _fmt(cfg["model"]["b"]) if "b" in cfg["model"] else "",
        "k1": _fmt(p.k1), "k2": _fmt(p.k2), "k3": _fmt(p.k3),
        "amplitude": _fmt(cfg["initial"]["u"]["amplitude"]),
        "status": report.status.value,
        "t_final": _fmt(report.t_final),
        "blowup_quantity": report.blowup.quantity.value if report.blowup else "",
        "slope_blowup_bound": _fmt(payload["bound"]) if payload["bound"] else "",
        "bound_respected": ("" if payload["respected"] is None
                            else str(payload["respected"]).lower()),
    }
    return row, checks_all_passed(checks)


def cmd_sweep(config_path: str) -> int:
    try:
        with open(config_path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        logger.error("cannot read config: %s", exc)
        return EXIT_IO
    except json.JSONDecodeError as exc:
        logger.error("config parse error: %s", exc)
        return EXIT_CONFIG

    try:
        sweep = _section(cfg, "sweep")
        cases = sweep.get("case", ["case_i"])
        bs = sweep.get("b", [])
        amps = sweep.get("amplitude", [1.0])
        if not isinstance(cases, list) or not isinstance(bs, list) \
                or not isinstance(amps, list):
            raise ConfigError("sweep.case, sweep.b, sweep.amplitude must be lists")
        for c in cases:
            if c not in (CaseTag.CASE_I.value, CaseTag.CASE_II.value):
                raise ConfigError(f"sweep.case entries must be case_i/case_ii, "
                                  f"got {c!r}")
        base_dir = Path(_section(cfg, "outputs", required=False)
                        .get("directory", "sweep_out"))
        combos = [(c, float(b), float(a)) for c in cases for b in bs for a in amps]
        jobs = []
        for case, b, amp in combos:
            sub = dict(cfg)
            sub.pop("sweep", None)
            sub["model"] = {"case": case, "b": b}
            sub["initial"] = json.loads(json.dumps(cfg["initial"]))
            sub["initial"]["u"]["amplitude"] = amp
            name = f"{case}_b{_num_token(b)}_a{_num_token(amp)}"
            sub["outputs"] = dict(cfg.get("outputs", {}))
            sub["outputs"]["directory"] = str(base_dir / name)
            parse_config(json.loads(json.dumps(sub)))  # validate before submitting
            jobs.append((case, b, amp, sub, str(base_dir / name)))
    except ConfigError as exc:
        logger.error("config error: %s", exc)
        return EXIT_CONFIG
    except (KeyError, TypeError) as exc:
        logger.error("config error: %s", exc)
        return EXIT_CONFIG

    default_workers = min(4, os.cpu_count() or 1)
    try:
        workers = max(1, int(os.environ.get(WORKERS_ENV, default_workers)))
    except ValueError:
        logger.error("environment variable %s must be an integer", WORKERS_ENV)
        return EXIT_CONFIG

    results: dict[tuple, tuple[dict, bool]] = {}
    failed_runs: list[tuple] = []
    try:
        base_dir.mkdir(parents=True, exist_ok=True)
        if jobs:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = {
                    pool.submit(_sweep_one, sub, out): (case, b, amp)
                    for case, b, amp, sub, out in jobs
                }
                for fut, key in futures.items():
                    try:
                        results[key] = fut.result()
                    except Exception as exc:  # isolate per-run failures
                        logger.error("run %s failed: %s", key, exc)
                        failed_runs.append(key)
                        results[key] = ({
                            "case": key[0], "b": _fmt(key[1]), "k1": "",
                            "k2": "", "k3": "", "amplitude": _fmt(key[2]),
                            "status": "error", "t_final": "",
                            "blowup_quantity": "", "slope_blowup_bound": "",
                            "bound_respected": "",
                        }, False)
        summary = base_dir / "summary.csv"
        with open(summary, "w", newline="") as fh:
            fh.write(",".join(SWEEP_COLUMNS) + "\n")
            for case, b, amp in combos:
                row, _ = results[(case, b, amp)]
                fh.write(",".join(row[c] for c in SWEEP_COLUMNS) + "\n")
    except OSError as exc:
        logger.error("I/O error: %s", exc)
        return EXIT_IO

    all_ok = all(ok for _, ok in results.values()) and not failed_runs
    print(f"sweep: {len(combos)} runs, "
          f"{sum(1 for _, ok in results.values() if ok)} passed checks, "
          f"summary at {summary if jobs else base_dir / 'summary.csv'}")
    return EXIT_OK if all_ok else EXIT_CHECK_FAILED


# ----------------------------------------------------------------------

def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="bfamily2c",
        description="Pseudospectral solver and diagnostics for a "
                    "two-component b-family shallow water system.")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="log at INFO level")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute one run from a JSON config")
    p_run.add_argument("config")
    p_run.add_argument("--directory", default=None,
                       help="override outputs.directory")
    p_sweep = sub.add_parser("sweep", help="run a Cartesian parameter sweep")
    p_sweep.add_argument("config")
    p_check = sub.add_parser("check", help="re-verify a run directory offline")
    p_check.add_argument("manifest")

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "run":
        return cmd_run(args.config, args.directory)
    if args.command == "sweep":
        return cmd_sweep(args.config)
    if args.command == "check":
        return cmd_check(args.manifest)
    parser.error(f"unknown command {args.command!r}")
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
