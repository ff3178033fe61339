"""Time evolution: dealiased pseudo-spectral advection and trajectory tracing.

The vorticity equation w_t + u . grad w = 0 is advanced as a Galerkin system
on the odd-odd sine band |k|_inf <= K with K chosen by the 2/3 rule for the
collocation grid, so the quadratic advection products are alias-free.  The
truncated system then conserves energy and enstrophy exactly in continuous
time; the observed drift measures the RK4 stepper alone.

Particle trajectories X' = u(t, X) integrate against the per-step velocity
snapshots with quadratic-in-time interpolation, and exit times from a corner
box are located by bisection inside the crossing step.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .biot_savart import VelocityField, velocity_spectral
from .errors import DomainError, ParameterError, ResolutionError, StepSizeError
from .fields import SpectralField, sine_analyze

__all__ = [
    "EvolutionParams",
    "EvolutionState",
    "Monitors",
    "MonitorThresholds",
    "Trajectory",
    "dealias_cutoff",
    "initial_state",
    "advection_rhs",
    "step",
    "run",
    "RunResult",
    "VelocityHistory",
    "trace",
    "vorticity_along",
    "save_checkpoint",
    "load_checkpoint",
]


def dealias_cutoff(N: int) -> int:
    """Largest sine band advanced on an N-point grid under the 2/3 rule."""
    return (2 * N) // 3 - 1


@dataclass(frozen=True)
class EvolutionParams:
    N: int                         # collocation grid (quadrant nodes per axis)
    cfl: float = 0.5
    dt_max: float = 0.01

    def __post_init__(self):
        if self.N < 8:
            raise ParameterError("grid too small to dealias")
        if not (0 < self.cfl <= 1):
            raise ParameterError("cfl must lie in (0, 1]")
        if self.dt_max <= 0:
            raise ParameterError("dt_max must be positive")


@dataclass(frozen=True)
class EvolutionState:
    t: float
    omega: SpectralField
    u: VelocityField
    params: EvolutionParams
    dt_used: float = 0.0
    cfl_number: float = 0.0

    @property
    def dealias_fraction(self) -> float:
        return self.omega.coeffs.shape[0] / self.params.N


def initial_state(omega: SpectralField, params: EvolutionParams) -> EvolutionState:
    K = dealias_cutoff(params.N)
    c = omega.coeffs
    if c.shape[0] > K or c.shape[1] > K:
        raise ResolutionError(
            f"datum band {c.shape} exceeds dealias cutoff {K} at N={params.N}")
    cc = np.zeros((K, K))
    cc[:c.shape[0], :c.shape[1]] = c
    f = SpectralField(cc)
    return EvolutionState(0.0, f, velocity_spectral(f), params)


def _advection_grid(c: np.ndarray, N: int) -> np.ndarray:
    """u . grad w on the closed (N+1)^2 quadrant grid, from sine coeffs c."""
    f = SpectralField(c)
    u = velocity_spectral(f)
    u1 = u.u1.sample_closed(N)
    u2 = u.u2.sample_closed(N)
    from .fields import derivative
    d1 = derivative(f, axis=1).sample_closed(N)
    d2 = derivative(f, axis=2).sample_closed(N)
    return u1 * d1 + u2 * d2


def advection_rhs(c: np.ndarray, N: int) -> np.ndarray:
    """dc/dt = -P_K [u . grad w], the dealiased Galerkin right-hand side."""
    K = c.shape[0]
    adv = _advection_grid(c, N)
    return -sine_analyze(sine_analyze(adv, axis=0), axis=1)[:K, :K]


def _max_speed_grid(u: VelocityField, N: int) -> float:
    return float(max(np.abs(u.u1.sample_closed(N)).max(),
                     np.abs(u.u2.sample_closed(N)).max()))


def cfl_limit(state: EvolutionState) -> float:
    """Largest |dt| the CFL condition allows at this instant."""
    speed = _max_speed_grid(state.u, state.params.N)
    if speed == 0.0:
        return state.params.dt_max
    return state.params.cfl / (state.params.N * speed)


def step(state: EvolutionState, dt: float) -> EvolutionState:
    """One RK4 step (dt may be negative: the equation is time-reversible)."""
    limit = cfl_limit(state)
    if abs(dt) > limit * (1 + 1e-12):
        raise StepSizeError(f"|dt|={abs(dt):.3e} exceeds CFL limit {limit:.3e}")
    N = state.params.N
    c = state.omega.coeffs
    k1 = advection_rhs(c, N)
    k2 = advection_rhs(c + 0.5 * dt * k1, N)
    k3 = advection_rhs(c + 0.5 * dt * k2, N)
    k4 = advection_rhs(c + dt * k3, N)
    cn = c + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    f = SpectralField(cn)
    speed = _max_speed_grid(state.u, N)
    return EvolutionState(state.t + dt, f, velocity_spectral(f), state.params,
                          dt_used=dt, cfl_number=abs(dt) * speed * N)


# ---------------------------------------------------------------------------
# Monitors and run loop
# ---------------------------------------------------------------------------

def energy(omega: SpectralField) -> float:
    """(1/2) integral of |u|^2 over the full torus, from the sine band."""
    c = omega.coeffs
    k1 = np.arange(1, c.shape[0] + 1)[:, None]
    k2 = np.arange(1, c.shape[1] + 1)[None, :]
    return float(0.5 * np.sum(c * c / (np.pi ** 2 * (k1 * k1 + k2 * k2))))


def enstrophy(omega: SpectralField) -> float:
    """Integral of w^2 over the full torus (basis functions have unit norm)."""
    return float(np.sum(omega.coeffs ** 2))


def area_above_half(omega: SpectralField, N: int = 256) -> float:
    """Fraction of the quadrant where w > 1/2 — a distribution-function proxy."""
    g = omega.sample_closed(N)[:N, :N]
    return float(np.mean(g > 0.5))


@dataclass(frozen=True)
class MonitorThresholds:
    energy_drift: float = 1e-6     # relative
    enstrophy_drift: float = 1e-6  # relative
    sup_drift: float = 1e-3        # relative
    area_drift: float = 0.01       # absolute


@dataclass
class Monitors:
    """Running drift monitors; breach flags a resolution-insufficient verdict."""

    thresholds: MonitorThresholds = field(default_factory=MonitorThresholds)
    rows: list = field(default_factory=list)
    breach: str | None = None
    _ref: dict | None = None

    def observe(self, state: EvolutionState):
        N = state.params.N
        row = {
            "t": state.t,
            "energy": energy(state.omega),
            "enstrophy": enstrophy(state.omega),
            "sup_omega": float(np.abs(state.omega.sample_closed(N)).max()),
            "area_above_half": area_above_half(state.omega, N),
            "dt": state.dt_used,
            "cfl": state.cfl_number,
        }
        if self._ref is None:
            self._ref = row
        r = self._ref
        th = self.thresholds
        checks = [
            ("energy", abs(row["energy"] - r["energy"]) /
             max(abs(r["energy"]), 1e-300), th.energy_drift),
            ("enstrophy", abs(row["enstrophy"] - r["enstrophy"]) /
             max(abs(r["enstrophy"]), 1e-300), th.enstrophy_drift),
            ("sup_omega", abs(row["sup_omega"] - r["sup_omega"]) /
             max(abs(r["sup_omega"]), 1e-300), th.sup_drift),
            ("area_above_half",
             abs(row["area_above_half"] - r["area_above_half"]), th.area_drift),
        ]
        for name, drift, tol in checks:
            row[f"{name}_drift"] = drift
            if drift > tol and self.breach is None:
                self.breach = f"{name} drift {drift:.3e} > {tol:.1e} at t={state.t:.4f}"
        self.rows.append(row)


@dataclass
class RunResult:
    state: EvolutionState
    monitors: Monitors
    history: "VelocityHistory"
    completed: bool


def run(state: EvolutionState, horizon: float, monitors: Monitors | None = None,
        cadence: int = 1, keep_history: bool = True,
        stop_on_breach: bool = True) -> RunResult:
    """Advance to t = state.t + horizon with adaptive CFL-limited steps.

    Monitors observe every ``cadence`` steps (and always at both endpoints).
    On a monitor breach the run stops cleanly with partial results unless
    ``stop_on_breach`` is false.
    """
    if horizon < 0:
        raise ParameterError("horizon must be nonnegative (use negative dt "
                             "steps directly for reversal experiments)")
    monitors = monitors if monitors is not None else Monitors()
    history = VelocityHistory()
    monitors.observe(state)
    if keep_history:
        history.append(state.t, state.u)
    t_end = state.t + horizon
    nstep = 0
    while state.t < t_end - 1e-14:
        dt = min(cfl_limit(state), state.params.dt_max, t_end - state.t)
        state = step(state, dt)
        nstep += 1
        if nstep % cadence == 0 or state.t >= t_end - 1e-14:
            monitors.observe(state)
        if keep_history:
            history.append(state.t, state.u)
        if monitors.breach and stop_on_breach:
            return RunResult(state, monitors, history, completed=False)
    return RunResult(state, monitors, history, completed=True)


# ---------------------------------------------------------------------------
# Trajectories
# ---------------------------------------------------------------------------

class VelocityHistory:
    """Velocity snapshots at step times, interpolated quadratically in time."""

    def __init__(self):
        self.times: list = []
        self.fields: list = []

    def append(self, t: float, u: VelocityField):
        if self.times and t <= self.times[-1]:
            raise ValueError("snapshot times must increase")
        self.times.append(t)
        self.fields.append(u)

    def __call__(self, t: float, x: np.ndarray) -> np.ndarray:
        ts = self.times
        if not ts:
            raise ValueError("empty velocity history")
        if len(ts) == 1:
            return np.asarray(self.fields[0].at(x))[0]
        i = int(np.searchsorted(ts, t))
        lo = min(max(i - 1, 0), len(ts) - 3) if len(ts) >= 3 else 0
        idx = range(lo, lo + 3) if len(ts) >= 3 else range(len(ts))
        vals = np.array([np.asarray(self.fields[k].at(x))[0] for k in idx])
        tk = np.array([ts[k] for k in idx])
        # Lagrange interpolation through the (up to) three nearest snapshots
        out = np.zeros(2)
        for a in range(len(tk)):
            w = 1.0
            for b in range(len(tk)):
                if b != a:
                    w *= (t - tk[b]) / (tk[a] - tk[b])
            out += w * vals[a]
        return out


@dataclass(frozen=True)
class Trajectory:
    samples: np.ndarray            # (n, 3): t, X1, X2
    exit_time: float | None
    horizon: float
    hit_axis: bool = False

    @property
    def effective_horizon(self) -> float:
        return self.horizon if self.exit_time is None else min(self.horizon,
                                                               self.exit_time)

    def position(self, i: int) -> np.ndarray:
        return self.samples[i, 1:]

    def at(self, t: float) -> np.ndarray:
        """Position at time t, linearly interpolated between step samples."""
        ts = self.samples[:, 0]
        if not ts[0] - 1e-12 <= t <= ts[-1] + 1e-12:
            raise DomainError(f"t={t} outside traced interval "
                              f"[{ts[0]}, {ts[-1]}]")
        return np.array([np.interp(t, ts, self.samples[:, 1]),
                         np.interp(t, ts, self.samples[:, 2])])


def _rk4_point(source, t, x, dt):
    k1 = source(t, x)
    k2 = source(t + 0.5 * dt, x + 0.5 * dt * k1)
    k3 = source(t + 0.5 * dt, x + 0.5 * dt * k2)
    k4 = source(t + dt, x + dt * k3)
    return x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def trace(source, X0, horizon: float, exit_box: float | None = None,
          dt: float = 1e-3, t0: float = 0.0,
          bisect_tol: float = 1e-10) -> Trajectory:
    """Integrate X' = u(t, X) from X0, detecting exit from [0, exit_box]^2.

    ``source`` is any callable (t, x) -> (2,) velocity — a VelocityHistory,
    a frozen analytic field, or a live sampler.  The first exit through the
    box boundary is located by bisection inside the crossing step.
    """
    x = np.asarray(X0, dtype=float).reshape(2)
    if not (0 < x[0] < 1 and 0 < x[1] < 1):
        raise DomainError(f"start point {x} not interior to the quadrant")

    def outside(p):
        return exit_box is not None and (p[0] > exit_box or p[1] > exit_box)

    if outside(x):
        raise DomainError(f"start point {x} already outside [0, {exit_box}]^2")

    samples = [(t0, x[0], x[1])]
    t, exit_time, hit_axis = t0, None, False
    t_end = t0 + horizon
    while t < t_end - 1e-14:
        h = min(dt, t_end - t)
        xn = _rk4_point(source, t, x, h)
        if xn[0] <= 0.0 or xn[1] <= 0.0:
            hit_axis = True
            samples.append((t + h, xn[0], xn[1]))
            break
        if exit_time is None and outside(xn):
            lo, hi = 0.0, h
            while hi - lo > bisect_tol * max(h, 1.0):
                mid = 0.5 * (lo + hi)
                if outside(_rk4_point(source, t, x, mid)):
                    hi = mid
                else:
                    lo = mid
            exit_time = t + 0.5 * (lo + hi)
        t, x = t + h, xn
        samples.append((t, x[0], x[1]))
    return Trajectory(np.array(samples), exit_time, horizon, hit_axis)


def vorticity_along(trajectory: Trajectory, times, omegas) -> np.ndarray:
    """w(t_i, X(t_i)) for field snapshots matched to trajectory samples."""
    times = np.asarray(times, dtype=float)
    out = np.empty(times.size)
    for i, (t, om) in enumerate(zip(times, omegas)):
        j = int(np.argmin(np.abs(trajectory.samples[:, 0] - t)))
        if abs(trajectory.samples[j, 0] - t) > 1e-9:
            raise ValueError(f"no trajectory sample near t={t}")
        out[i] = om.eval_points(trajectory.samples[j, 1:][None, :])
    return out


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

def config_hash(payload: dict) -> str:
    return hashlib.sha256(
        json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def save_checkpoint(path, state: EvolutionState, trajectory=None,
                    config: dict | None = None):
    cfg = config or {}
    extra = {}
    if trajectory is not None:
        extra["traj_samples"] = trajectory.samples
        extra["traj_meta"] = np.array([
            np.nan if trajectory.exit_time is None else trajectory.exit_time,
            trajectory.horizon, float(trajectory.hit_axis)])
    np.savez_compressed(path, coeffs=state.omega.coeffs, t=state.t,
                        N=state.params.N, cfl=state.params.cfl,
                        dt_max=state.params.dt_max,
                        config_hash=config_hash(cfg), **extra)


def load_checkpoint(path):
    with np.load(path, allow_pickle=False) as z:
        params = EvolutionParams(int(z["N"]), float(z["cfl"]), float(z["dt_max"]))
        f = SpectralField(z["coeffs"])
        state = EvolutionState(float(z["t"]), f, velocity_spectral(f), params)
        traj = None
        if "traj_samples" in z:
            et, hz, ha = z["traj_meta"]
            traj = Trajectory(z["traj_samples"],
                              None if np.isnan(et) else float(et),
                              float(hz), bool(ha))
        return state, traj, str(z["config_hash"])
