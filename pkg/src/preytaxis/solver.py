"""Method-of-lines integrator for the taxis system on a 1D cell-centered grid.

Space: conservative second-order fluxes with arithmetic interface means and
exact zero-flux Neumann boundaries (boundary interfaces simply carry no
flux).  Time: classical RK4 under a diffusive CFL rule that also budgets
the taxis advection speed.  Positivity, the w-range and the L1 bounds from
the global-existence theory are monitored at every step and abort the run
with diagnostics; they are never enforced by clipping.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as _k
from .errors import (
    AmplitudeTooLarge,
    BlowupGuard,
    NonFiniteState,
    StepSizeUnderflow,
)
from .model import Parameters, Sensitivity, equilibrium

__all__ = [
    "Grid",
    "StateField",
    "SolverConfig",
    "MonitorLog",
    "RunRecord",
    "rhs",
    "step",
    "initial_cosine",
    "integrate",
    "snapshot_csv",
    "probe_csv",
]


@dataclass(frozen=True)
class Grid:
    """Cell-centered grid: n cells of width h = L/n, centers x_i = (i+1/2)h."""

    L: float
    n: int

    def __post_init__(self):
        if self.n < 16:
            raise ValueError(f"grid needs n >= 16 cells, got {self.n}")
        if not self.L > 0:
            raise ValueError(f"grid length must be positive, got {self.L}")

    @property
    def h(self) -> float:
        return self.L / self.n

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) * self.h


@dataclass
class StateField:
    """Discretized (u, v, w) triple at time t."""

    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    t: float = 0.0

    def copy(self) -> "StateField":
        return StateField(self.u.copy(), self.v.copy(), self.w.copy(), self.t)

    @property
    def finite(self) -> bool:
        return bool(
            np.isfinite(self.u).all()
            and np.isfinite(self.v).all()
            and np.isfinite(self.w).all()
        )


@dataclass(frozen=True)
class SolverConfig:
    """Integration controls.

    The step size is recomputed every step as

        dt = cfl_factor * h^2 / (2 max(d1,d2,d3) + h (|chi|+|xi|) Phimax)

    where Phimax is the running maximum of the interface taxis speed
    |phi(w) w_x|, then capped by dt_max.  Steady state is declared when the
    max-norm of the right-hand side stays below steady_tol on three
    consecutive checks.
    """

    t_end: float
    cfl_factor: float = 0.25
    dt_max: float = 0.05
    snapshot_dt: float | None = None  # default: t_end / 100
    probe_dt: float | None = None     # default: min(0.05, snapshot_dt)
    check_dt: float = 1.0
    steady_tol: float = 1e-7
    probe_x: tuple = (0.0,)

    def resolved(self) -> tuple[float, float]:
        snap = self.snapshot_dt if self.snapshot_dt is not None else max(self.t_end / 100.0, 1e-12)
        probe = self.probe_dt if self.probe_dt is not None else min(0.05, snap)
        return snap, probe


@dataclass
class MonitorLog:
    """Event log of the runtime invariant monitors."""

    events: list = field(default_factory=list)
    violated: bool = False
    first_violation: tuple | None = None  # (monitor, species, cell, t, value)

    def record(self, monitor: str, species: int, cell: int, t: float, value: float):
        name = "uvw"[species] if 0 <= species <= 2 else "?"
        self.events.append(
            f"t={t:.9g} monitor={monitor} species={name} cell={cell} value={value:.9g}"
        )
        if not self.violated:
            self.violated = True
            self.first_violation = (monitor, species, cell, t, value)

    def text(self) -> str:
        if not self.events:
            return "no monitor events\n"
        return "\n".join(self.events) + "\n"


@dataclass
class RunRecord:
    """Everything a run produced: snapshots, probes, monitors, termination."""

    grid: Grid
    snapshot_times: np.ndarray
    snapshots: np.ndarray        # (ns, 3, n)
    probe_times: np.ndarray
    probes: np.ndarray           # (nt, 3, nprobes)
    probe_cells: tuple
    monitor: MonitorLog
    termination: str             # steady | t_end | blowup-guard | violation
    final: StateField
    n_steps: int
    phimax: float


def _params_vector(p: Parameters) -> np.ndarray:
    pr = np.empty(_k.NPAR)
    pr[_k.PAR_D1], pr[_k.PAR_D2], pr[_k.PAR_D3] = p.d1, p.d2, p.d3
    pr[_k.PAR_A1], pr[_k.PAR_A2], pr[_k.PAR_A3] = p.alpha1, p.alpha2, p.alpha3
    pr[_k.PAR_B1], pr[_k.PAR_B2] = p.beta1, p.beta2
    pr[_k.PAR_B31], pr[_k.PAR_B32] = p.beta31, p.beta32
    pr[_k.PAR_CHI], pr[_k.PAR_XI] = p.chi, p.xi
    return pr


def _phi_vector(s: Sensitivity) -> np.ndarray:
    c = np.zeros(5)
    c[: len(s.coeffs)] = s.coeffs
    return c


def _buffers(n: int):
    return tuple(np.empty(n) for _ in range(15))


def rhs(p: Parameters, s: Sensitivity, grid: Grid, state: StateField):
    """Time derivative (du, dv, dw) of the semi-discrete system."""
    if not state.finite:
        raise NonFiniteState("state contains NaN or infinity")
    du = np.empty(grid.n)
    dv = np.empty(grid.n)
    dw = np.empty(grid.n)
    _k.rhs(state.u, state.v, state.w, du, dv, dw, grid.h,
           _params_vector(p), _phi_vector(s))
    return du, dv, dw


def _cfl_dt(p: Parameters, grid: Grid, phimax: float, cfg: SolverConfig) -> float:
    dmax = max(p.d1, p.d2, p.d3)
    dt = cfg.cfl_factor * grid.h**2 / (2.0 * dmax + grid.h * (abs(p.chi) + abs(p.xi)) * phimax)
    return min(dt, cfg.dt_max)


def step(p: Parameters, s: Sensitivity, grid: Grid, state: StateField,
         cfg: SolverConfig, phimax: float | None = None) -> StateField:
    """One RK4 step with the CFL step size; returns the new state."""
    if not state.finite:
        raise NonFiniteState("state contains NaN or infinity")
    c = _phi_vector(s)
    pm = _k.interface_phimax(state.w, grid.h, c)
    if phimax is not None:
        pm = max(pm, phimax)
    dt = _cfl_dt(p, grid, pm, cfg)
    if dt < _k.DT_FLOOR:
        raise StepSizeUnderflow(f"dt = {dt:.3e}")
    out = state.copy()
    bufs = _buffers(grid.n)
    _k.rk4_step(out.u, out.v, out.w, dt, grid.h, _params_vector(p), c, *bufs)
    out.t = state.t + dt
    if not out.finite:
        raise NonFiniteState(f"state lost finiteness at t = {out.t:.9g}")
    if max(np.abs(out.u).max(), np.abs(out.v).max(), np.abs(out.w).max()) > _k.BLOWUP_LIMIT:
        raise BlowupGuard(f"field magnitude exceeded {_k.BLOWUP_LIMIT:g} at t = {out.t:.9g}")
    return out


def initial_cosine(p: Parameters, s: Sensitivity, grid: Grid, amplitude: float,
                   mode: int = 1, scale_by_length: bool = False,
                   check_w_range: bool = True) -> StateField:
    """Equilibrium plus amplitude * cos(mode pi x) on every species.

    The default perturbation is cos(mode pi x) with the wavelength fixed in
    x (the convention of the reference scenarios); scale_by_length=True uses
    the Neumann eigenfunction cos(mode pi x / L) instead.
    """
    eq = equilibrium(p)
    arg = mode * math.pi * grid.x / (grid.L if scale_by_length else 1.0)
    bump = amplitude * np.cos(arg)
    st = StateField(eq.u + bump, eq.v + bump, eq.w + bump, 0.0)
    if st.u.min() <= 0 or st.v.min() <= 0 or st.w.min() <= 0:
        raise AmplitudeTooLarge(f"amplitude {amplitude} drives a species to <= 0")
    if check_w_range and (st.w.min() < 0 or st.w.max() > 1):
        raise AmplitudeTooLarge(f"amplitude {amplitude} pushes w outside [0, 1]")
    return st


_STATUS_TERMINATION = {
    _k.BLOWUP: "blowup-guard",
    _k.NONFINITE: "blowup-guard",
    _k.VIOL_POSITIVITY: "violation",
    _k.VIOL_W_RANGE: "violation",
    _k.VIOL_L1: "violation",
}
_STATUS_MONITOR = {
    _k.VIOL_POSITIVITY: "positivity",
    _k.VIOL_W_RANGE: "w-range",
    _k.VIOL_L1: "L1-bound",
}


def integrate(p: Parameters, s: Sensitivity, grid: Grid, state0: StateField,
              cfg: SolverConfig) -> RunRecord:
    """Run until steady state, t_end, or a guard/monitor stop.

    Recording times never alter the step sequence, so the trajectory is
    identical under snapshot/probe refinement and bit-identical across
    repeated runs.
    """
    if not state0.finite:
        raise NonFiniteState("initial state contains NaN or infinity")
    snap_dt, probe_dt = cfg.resolved()
    n = grid.n
    h = grid.h
    pr = _params_vector(p)
    c = _phi_vector(s)
    u = state0.u.astype(float).copy()
    v = state0.v.astype(float).copy()
    w = state0.w.astype(float).copy()
    t = float(state0.t)
    t_end = float(state0.t) + cfg.t_end

    probe_cells = tuple(
        min(n - 1, max(0, int(x / h))) for x in cfg.probe_x
    )
    w_armed = bool(w.min() >= 0.0 and w.max() <= 1.0)
    state = np.array([
        _k.interface_phimax(w, h, c),   # running phimax
        w.max(),                        # running sup w
        u.sum() * h,                    # initial L1 of u
        v.sum() * h,                    # initial L1 of v
        0.0,                            # step counter
    ])
    viol = np.zeros(3)
    bufs = _buffers(n)
    du, dv, dw = np.empty(n), np.empty(n), np.empty(n)

    snap_times = [t]
    snaps = [np.stack([u.copy(), v.copy(), w.copy()])]
    probe_times = [t]
    probes = [np.stack([u[list(probe_cells)], v[list(probe_cells)], w[list(probe_cells)]])]
    monitor = MonitorLog()

    next_snap = t + snap_dt
    next_probe = t + probe_dt
    next_check = t + cfg.check_dt
    steady_hits = 0
    termination = "t_end"

    while t < t_end:
        t_target = min(next_snap, next_probe, next_check, t_end)
        status, t = _k.advance(
            u, v, w, t, t_target, h, grid.L, pr, c,
            cfg.cfl_factor, cfg.dt_max, state, w_armed, *bufs, viol,
        )
        if status == _k.DT_UNDERFLOW:
            raise StepSizeUnderflow(f"dt underflow at t = {t:.9g}")
        if status != _k.OK:
            termination = _STATUS_TERMINATION[status]
            if status in _STATUS_MONITOR:
                monitor.record(_STATUS_MONITOR[status], int(viol[0]), int(viol[1]), t, viol[2])
            else:
                monitor.events.append(f"t={t:.9g} guard=blowup")
            break
        if t >= next_probe:
            probe_times.append(t)
            probes.append(np.stack([u[list(probe_cells)], v[list(probe_cells)], w[list(probe_cells)]]))
            while next_probe <= t:
                next_probe += probe_dt
        if t >= next_snap:
            snap_times.append(t)
            snaps.append(np.stack([u.copy(), v.copy(), w.copy()]))
            while next_snap <= t:
                next_snap += snap_dt
        if t >= next_check:
            resid = _k.rhs_maxnorm(u, v, w, du, dv, dw, h, pr, c)
            steady_hits = steady_hits + 1 if resid < cfg.steady_tol else 0
            while next_check <= t:
                next_check += cfg.check_dt
            if steady_hits >= 3:
                termination = "steady"
                break

    if snap_times[-1] < t:
        snap_times.append(t)
        snaps.append(np.stack([u.copy(), v.copy(), w.copy()]))
    final = StateField(u, v, w, t)
    return RunRecord(
        grid=grid,
        snapshot_times=np.array(snap_times),
        snapshots=np.stack(snaps),
        probe_times=np.array(probe_times),
        probes=np.stack(probes),
        probe_cells=probe_cells,
        monitor=monitor,
        termination=termination,
        final=final,
        n_steps=int(state[4]),
        phimax=float(state[0]),
    )


def snapshot_csv(record: RunRecord) -> str:
    """CSV of all snapshots: t,x,u,v,w with 9 significant digits."""
    x = record.grid.x
    lines = ["t,x,u,v,w"]
    for ts, fields in zip(record.snapshot_times, record.snapshots):
        for i in range(record.grid.n):
            lines.append(
                f"{ts:.9g},{x[i]:.9g},{fields[0, i]:.9g},{fields[1, i]:.9g},{fields[2, i]:.9g}"
            )
    return "\n".join(lines) + "\n"


def probe_csv(record: RunRecord, probe: int = 0) -> str:
    """CSV of one probe's time series: t,u,v,w."""
    lines = ["t,u,v,w"]
    for ts, vals in zip(record.probe_times, record.probes):
        lines.append(
            f"{ts:.9g},{vals[0, probe]:.9g},{vals[1, probe]:.9g},{vals[2, probe]:.9g}"
        )
    return "\n".join(lines) + "\n"
