"""Trajectory integration, flow sampling and management-parameter sweeps."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from . import ays
from .geometry import DEFAULT_EPSILON, homogenize
from .grid import Grid
from .system import ControlledSystem, DomainError, ParameterError
from .tsm import Region, TsmResult, relative_volumes, tsm_partition
from .viability import DEFAULT_DT_FACTOR, DEFAULT_LIPSCHITZ, GUARANTEED, SuccessorConfig

log = logging.getLogger(__name__)

Policy = Union[str, Sequence[tuple[float, str]]]


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    controls: list[str]
    exited: bool = False
    attractor: str | None = None

    def __len__(self):
        return len(self.times)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def arc_length(self) -> np.ndarray:
        """Cumulative path length at each sample."""
        seg = np.linalg.norm(np.diff(self.states, axis=0), axis=1)
        return np.concatenate([[0.0], np.cumsum(seg)])


def _schedule(policy: Policy) -> Callable[[float], str]:
    if isinstance(policy, str):
        return lambda t: policy
    switches = sorted((float(t), u) for t, u in policy)
    if not switches:
        raise ParameterError("empty control schedule")
    starts = np.array([t for t, _ in switches])

    def pick(t):
        i = int(np.searchsorted(starts, t, side="right")) - 1
        return switches[max(i, 0)][1]

    return pick


def _in_bounds(x: np.ndarray, bounds) -> np.ndarray:
    ok = np.all(np.isfinite(x), axis=-1)
    if bounds is not None:
        lo, hi = bounds
        ok &= np.all((x >= lo) & (x <= hi), axis=-1)
    return ok


def _rk4_stage(sys, x, u, bounds):
    """RHS at ``x`` for rows that are in the domain; other rows flagged."""
    ok = _in_bounds(x, bounds)
    out = np.zeros_like(x)
    if np.any(ok):
        try:
            out[ok] = sys(x[ok], u)
        except DomainError:
            for i in np.flatnonzero(ok):
                try:
                    out[i] = sys(x[i], u)
                except DomainError:
                    ok[i] = False
    return out, ok & np.all(np.isfinite(out), axis=-1)


def _rk4_batch(sys, x0, control_at, t_end, step, bounds, record=True):
    x = np.array(x0, dtype=float, copy=True)
    alive = _in_bounds(x, bounds)
    nsteps = int(np.ceil(t_end / step - 1e-12))
    states = [x.copy()] if record else None
    times = [0.0]
    controls = []
    last = np.zeros(len(x), dtype=np.int64)
    for k in range(nsteps):
        if not alive.any():
            break
        t = k * step
        h = min(step, t_end - t)
        u = control_at(t)
        xa = x[alive]
        k1, ok1 = _rk4_stage(sys, xa, u, bounds)
        k2, ok2 = _rk4_stage(sys, xa + 0.5 * h * k1, u, bounds)
        k3, ok3 = _rk4_stage(sys, xa + 0.5 * h * k2, u, bounds)
        k4, ok4 = _rk4_stage(sys, xa + h * k3, u, bounds)
        nxt = xa + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        ok = ok1 & ok2 & ok3 & ok4 & _in_bounds(nxt, bounds)
        rows = np.flatnonzero(alive)
        x[rows[ok]] = nxt[ok]
        last[rows[ok]] = k + 1
        alive[rows[~ok]] = False
        times.append(t + h)
        controls.append(u)
        if record:
            states.append(x.copy())
    return np.array(times), (np.stack(states, axis=1) if record else x), controls, last


def integrate(sys: ControlledSystem, x0, policy: Policy, t_end: float, step: float,
              bounds=None) -> Trajectory:
    """Classical fourth-order Runge-Kutta with a fixed step.

    ``policy`` is a control id or a list of ``(switch_time, control)`` pairs.
    If a state (or a stage point) leaves ``bounds`` or the RHS domain, the
    trajectory stops at the last valid state and ``exited`` is set.
    """
    if not step > 0:
        raise ParameterError("step must be positive")
    x0 = np.asarray(x0, dtype=float)
    if not _in_bounds(x0[None, :], bounds)[0]:
        raise DomainError("initial state outside the domain")
    times, states, controls, last = _rk4_batch(sys, x0[None, :], _schedule(policy),
                                               t_end, step, bounds)
    n = int(last[0]) + 1
    exited = n < len(times)
    return Trajectory(times[:n], states[0, :n], controls[:n - 1], exited)


def tag_attractor(y) -> np.ndarray:
    """``green`` near the green corner of the AYS cube (s > 0.9, a < 0.1), else ``black``."""
    y = np.asarray(y)
    return np.where((y[..., 2] > 0.9) & (y[..., 0] < 0.1), "green", "black")


def flow_sample(sys: ControlledSystem, count: int, seed: int, control: str | None = None,
                t_end: float = 20.0, step: float = 0.01) -> list[Trajectory]:
    """Trajectories from uniform random initial conditions in the unit cube.

    Meant for the homogenized, compactified AYS flow; every trajectory is
    tagged with the attractor its final state is closest to.
    """
    if count <= 0:
        raise ParameterError("count must be positive")
    rng = np.random.default_rng(seed)
    x0 = rng.random((count, sys.dimension))
    u = control or sys.default
    bounds = (np.zeros(sys.dimension), np.ones(sys.dimension))
    times, states, controls, last = _rk4_batch(sys, x0, _schedule(u), t_end, step, bounds)
    out = []
    for i in range(count):
        n = int(last[i]) + 1
        tr = Trajectory(times[:n], states[i, :n], controls[:n - 1], exited=n < len(times))
        tr.attractor = str(tag_attractor(tr.final))
        out.append(tr)
    return out


def green_fraction(trajectories: Sequence[Trajectory]) -> float:
    return sum(t.attractor == "green" for t in trajectories) / len(trajectories)


def hausdorff_polyline(p: np.ndarray, q: np.ndarray, chunk: int = 2048) -> float:
    """Symmetric Hausdorff distance between two polylines given by their vertices."""

    def directed(a, b):
        if len(b) == 1:
            return float(np.max(np.linalg.norm(a - b[0], axis=1)))
        s0, s1 = b[:-1], b[1:]
        d = s1 - s0
        dd = np.maximum(np.einsum("ij,ij->i", d, d), 1e-300)
        worst = 0.0
        for i in range(0, len(a), chunk):
            pts = a[i:i + chunk, None, :]
            t = np.clip(np.einsum("kij,ij->ki", pts - s0, d) / dd, 0.0, 1.0)
            dist = np.linalg.norm(pts - (s0 + t[..., None] * d), axis=2)
            worst = max(worst, float(dist.min(axis=1).max()))
        return worst

    return max(directed(p, q), directed(q, p))


def arc_prefix(states: np.ndarray, length: float) -> np.ndarray:
    """Leading part of a polyline with the given arc length; the end point is interpolated."""
    arc = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(states, axis=0), axis=1))])
    k = int(np.searchsorted(arc, length, side="right"))
    if k >= len(arc):
        return states
    t = (length - arc[k - 1]) / (arc[k] - arc[k - 1])
    return np.vstack([states[:k], states[k - 1] + t * (states[k] - states[k - 1])])


def orbit_distance(a: Trajectory, b: Trajectory) -> float:
    """Hausdorff distance between the two paths, cut to their common arc length.

    Time reparameterization leaves the path unchanged, so this compares orbits
    of a system and its homogenized version.
    """
    length = min(a.arc_length()[-1], b.arc_length()[-1])
    return hausdorff_polyline(arc_prefix(a.states, length), arc_prefix(b.states, length))


# --- AYS partitions and sweeps -------------------------------------------------

def ays_problem(params: ays.AYSParams = ays.AYSParams(), resolution: int = 80,
                epsilon: float = DEFAULT_EPSILON, controls: Sequence[str] = ays.CONTROLS,
                mode: str = GUARANTEED, lipschitz: float = DEFAULT_LIPSCHITZ,
                dt: float | None = None, dt_factor: float = DEFAULT_DT_FACTOR):
    """Homogenized compactified AYS system, its grid and successor configuration."""
    sys = homogenize(ays.ays_transformed_system(params, controls), epsilon)
    grid = Grid.cube(3, resolution)
    cfg = SuccessorConfig.for_grid(grid, mode=mode, dt=dt, lipschitz=lipschitz,
                                   dt_factor=dt_factor)
    return sys, grid, cfg


def ays_partition(params: ays.AYSParams = ays.AYSParams(), resolution: int = 80,
                  workers: int = 1, metadata: dict | None = None, **options) -> TsmResult:
    sys, grid, cfg = ays_problem(params, resolution, **options)
    meta = {"model": "ays", "parameters": params.as_dict()}
    meta.update(metadata or {})
    return tsm_partition(sys, lambda y: ays.desirable_transformed(y, params), grid, cfg,
                         workers=workers, metadata=meta)


SWEEP_PARAMS = ("beta_lg", "sigma_et")


@dataclass
class SweepSpec:
    param: str
    values: Sequence[float]
    base: ays.AYSParams = field(default_factory=ays.AYSParams)
    resolution: int = 40
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.param not in SWEEP_PARAMS:
            raise ParameterError(f"sweep parameter must be one of {SWEEP_PARAMS}")
        self.values = [float(v) for v in self.values]
        if not self.values:
            raise ParameterError("sweep needs at least one value")
        if any(b < a for a, b in zip(self.values, self.values[1:])):
            raise ParameterError("sweep values must be sorted")

    @classmethod
    def default(cls, param: str, **kw) -> "SweepSpec":
        """0.1 %-point steps over [1.5, 3.5] %/a for beta_lg; 8 log-spaced sigma_et in [sigma/4, sigma]."""
        base = kw.pop("base", ays.AYSParams())
        if param == "beta_lg":
            values = np.round(np.linspace(0.015, 0.035, 21), 6)
        elif param == "sigma_et":
            values = np.geomspace(base.sigma / 4, base.sigma, 8)
        else:
            raise ParameterError(f"sweep parameter must be one of {SWEEP_PARAMS}")
        return cls(param, values, base, **kw)


@dataclass
class SweepRow:
    value: float
    fractions: dict[str, float] | None
    error: str | None = None


def _sweep_job(args) -> SweepRow:
    param, value, base, resolution, options = args
    try:
        params = base.replace(**{param: value})
        r = ays_partition(params, resolution, **options)
        return SweepRow(value, relative_volumes(r))
    except Exception as exc:  # noqa: BLE001 - recorded per row, sweep continues
        log.warning("sweep value %s=%g failed: %s", param, value, exc)
        return SweepRow(value, None, f"{type(exc).__name__}: {exc}")


def bifurcation_sweep(spec: SweepSpec, workers: int = 1) -> list[SweepRow]:
    """One full partition per parameter value; rows come back in input order."""
    jobs = [(spec.param, v, spec.base, spec.resolution, spec.options) for v in spec.values]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(_sweep_job, jobs))
    return [_sweep_job(j) for j in jobs]


def transition_points(rows: Sequence[SweepRow]) -> tuple[float | None, float | None]:
    """Largest value with a backwater and smallest value with eddies."""
    ok = [r for r in rows if r.fractions is not None]
    back = [r.value for r in ok if r.fractions[Region.Backwater.name] > 0]
    eddy = [r.value for r in ok
            if r.fractions[Region.SunnyEddy.name] + r.fractions[Region.DarkEddy.name] > 0]
    return (max(back) if back else None), (min(eddy) if eddy else None)
