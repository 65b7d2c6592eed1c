"""Monte Carlo estimates of ``E_x[exp(-q T_l); T_l < zeta]``.

The underlying process ``xi`` (drift, Brownian part, finite-activity positive
jumps) is stepped in its own time ``u``; the observed clock is
``F(u) = int_0^u ds / A(xi_s)`` with ``1/A = laplace(gamma)``.

Between events the continuous part moves by an exact Gaussian increment and
a downward crossing inside a step is detected with the exact law of the
Brownian-bridge minimum, so passage is not missed between grid points.  Step
length is ``dt`` near the target level and grows like
``dt * (distance/adapt_scale)**2`` away from it.  Jump and killing epochs are
hit exactly.  ``F`` is integrated with the trapezoid rule.

Each path ``i`` draws from its own ``PCG64`` stream keyed by
``SeedSequence(seed, spawn_key=(i,))``; paths are shared across ``q`` values
and levels (common random numbers).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numba
import numpy as np
from scipy import integrate

from .levy import LevyExponent
from .model import ModelSpec

PASSED, KILLED, CENSORED = 0, 1, 2

# skip the bridge-minimum draw when the crossing probability is below exp(-20)
_BRIDGE_CUTOFF = 20.0
_NORMAL_BLOCK = 1024


@dataclass(frozen=True)
class PathState:
    """Terminal state of one simulated path."""

    position: float
    elapsed_internal: float
    elapsed_external: float
    killed: bool
    passed: bool
    steps: int = 0


@dataclass(frozen=True)
class FptdEstimate:
    """Estimate of ``E_x[exp(-q T_l); T_l < zeta]`` with its path accounting.

    ``censor_bias`` bounds the downward bias from censored paths: each would
    have contributed at most ``exp(-q t)``, ``t`` its external time when
    censored.
    """

    q: float
    x: float
    level: float
    mean: float
    std_error: float
    n_paths: int
    n_passed: int
    n_killed: int
    n_censored: int
    dt: float
    seed: int
    censor_bias: float = 0.0

    def __post_init__(self):
        if self.n_passed + self.n_killed + self.n_censored != self.n_paths:
            raise ValueError("path counts do not add up")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class _Sim:
    """Arrays the kernel needs, derived once from a model."""

    drift: float
    sigma: float
    kill_rate: float
    atom_total: float
    atom_cum: np.ndarray
    atom_sizes: np.ndarray
    dens_total: float
    dens_cum: np.ndarray
    dens_r: np.ndarray
    g_atom_z: np.ndarray
    g_atom_m: np.ndarray
    leb_rate: float
    leb_start: float
    g_ptr: np.ndarray
    g_spacing: np.ndarray
    g_order: np.ndarray
    g_lattice: np.ndarray
    g_mass: np.ndarray
    g_const: float


def _jump_table(psi: LevyExponent, eps: float, points: int = 2000):
    """Cumulative Levy mass of the density part on ``[eps, r_max]``."""
    dens = psi.jump_density.density
    r_max = 2.0
    while integrate.quad(dens, r_max, np.inf, limit=200)[0] > 1e-12 * max(
        integrate.quad(dens, eps, r_max, limit=200)[0], 1e-300
    ):
        r_max *= 2.0
        if r_max > 1e8:
            raise ValueError("jump density tail too heavy to tabulate")
    r = np.geomspace(eps, r_max, points)
    seg = np.array([integrate.quad(dens, a, b)[0] for a, b in zip(r[:-1], r[1:])])
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    small_mean = integrate.quad(lambda x: x * dens(x), eps, 1.0, limit=200)[0] if eps < 1 else 0.0
    return r, cum, small_mean


def simulation_arrays(model: ModelSpec, eps_jump: float = 1e-3) -> _Sim:
    """Path-space parameters: drift ``-c - int_[eps,1] r Lambda(dr)``, jump tables, speed data."""
    psi = model.psi
    sizes = np.asarray(psi.jump_sizes, dtype=float)
    rates = np.asarray(psi.jump_rates, dtype=float)
    drift = -psi.drift - float(np.sum(sizes * rates * (sizes <= 1)))
    if psi.jump_density is not None:
        dens_r, dens_cum, small = _jump_table(psi, eps_jump)
        drift -= small
    else:
        dens_r, dens_cum = np.zeros(1), np.zeros(1)
    g = model.gamma
    comps = [c for c in g.grids if np.any(c.masses > 0)]
    ptr = np.zeros(len(comps) + 1, dtype=np.int64)
    for k, c in enumerate(comps):
        ptr[k + 1] = ptr[k] + c.masses.size
    leb = g.lebesgue if g.lebesgue is not None else (0.0, 0.0)
    return _Sim(
        drift=drift,
        sigma=math.sqrt(psi.gaussian),
        kill_rate=float(model.killing),
        atom_total=float(rates.sum()),
        atom_cum=np.cumsum(rates) if rates.size else np.zeros(1),
        atom_sizes=sizes if sizes.size else np.zeros(1),
        dens_total=float(dens_cum[-1]),
        dens_cum=dens_cum,
        dens_r=dens_r,
        g_atom_z=np.asarray(g.atom_locs, dtype=float),
        g_atom_m=np.asarray(g.atom_masses, dtype=float),
        leb_rate=float(leb[0]),
        leb_start=float(leb[1]),
        g_ptr=ptr,
        g_spacing=np.array([c.spacing for c in comps], dtype=float),
        g_order=np.array([c.order for c in comps], dtype=np.int64),
        g_lattice=np.concatenate([c.lattice for c in comps]) if comps else np.zeros(0),
        g_mass=np.concatenate([c.masses for c in comps]) if comps else np.zeros(0),
        # A constant (gamma = m delta_0) skips the speed evaluation
        g_const=float(g.atom_masses[0]) if g.is_atomic and g.atom_locs.size == 1 and g.atom_locs[0] == 0.0 else 0.0,
    )


@numba.njit(cache=True)
def _inv_speed(y, s_az, s_am, leb_rate, leb_start, ptr, spacing, order, lattice, mass):
    """``laplace(gamma, y)`` (``inf`` where it diverges)."""
    tot = 0.0
    for i in range(s_az.size):
        tot += s_am[i] * math.exp(-y * s_az[i])
    if leb_rate > 0.0:
        if y <= 0.0:
            return math.inf
        tot += leb_rate * math.exp(-y * leb_start) / y
    for k in range(spacing.size):
        x = y * spacing[k]
        u = 1.0 if abs(x) < 1e-12 else -math.expm1(-x) / x
        part = 0.0
        for i in range(ptr[k], ptr[k + 1]):
            part += mass[i] * math.exp(-y * lattice[i])
        tot += part * u ** order[k]
    return tot


@numba.njit(cache=True)
def _path_kernel(
    gen, x0, levels, dt, adapt_scale, h_max, u_budget, t_budget,
    drift, sigma, kill_rate, atom_total, atom_cum, atom_sizes, dens_total, dens_cum, dens_r,
    s_az, s_am, leb_rate, leb_start, ptr, spacing, order, lattice, mass, g_const, out_t,
):  # fmt: skip
    nlev = levels.size
    for k in range(nlev):
        out_t[k] = -1.0
    jump_rate = atom_total + dens_total
    buf = gen.standard_normal(_NORMAL_BLOCK)
    nb = 0
    y = x0
    u = 0.0
    t = 0.0
    steps = 0
    j = 0
    next_jump = u + gen.standard_exponential() / jump_rate if jump_rate > 0.0 else math.inf
    kill = gen.standard_exponential() / kill_rate if kill_rate > 0.0 else math.inf
    const = g_const > 0.0
    ga = g_const if const else _inv_speed(y, s_az, s_am, leb_rate, leb_start, ptr, spacing, order, lattice, mass)
    s2 = sigma * sigma
    while True:
        if u >= u_budget or t >= t_budget:
            return CENSORED, y, u, t, steps
        h = dt
        if adapt_scale > 0.0 and sigma > 0.0 and j < nlev:
            d = (y - levels[j]) / adapt_scale
            if d > 1.0:
                h = min(dt * d * d, h_max)
        tend = u + h
        ev = 0
        if next_jump < tend:
            tend = next_jump
            ev = 1
        if kill < tend:
            tend = kill
            ev = 2
        if u_budget < tend:
            tend = u_budget
            ev = 3
        h = tend - u
        if nb == _NORMAL_BLOCK:
            buf = gen.standard_normal(_NORMAL_BLOCK)
            nb = 0
        b = y + drift * h + sigma * math.sqrt(h) * buf[nb]
        nb += 1
        steps += 1
        if j < nlev:
            lev = levels[j]
            low = math.inf
            if sigma > 0.0:
                if b <= lev or 2.0 * (y - lev) * (b - lev) < _BRIDGE_CUTOFF * s2 * h:
                    w = gen.random()
                    diff = y - b
                    low = 0.5 * (y + b - math.sqrt(diff * diff - 2.0 * s2 * h * math.log(1.0 - w)))
            elif b <= lev:
                low = b
            while j < nlev and levels[j] >= low:
                lev = levels[j]
                if sigma > 0.0:
                    f = 0.5 * (y - lev) / (y - low) if y > low else 0.0
                else:
                    f = (y - lev) / (y - b)
                gl = g_const if const else _inv_speed(lev, s_az, s_am, leb_rate, leb_start, ptr, spacing, order, lattice, mass)
                out_t[j] = t + f * h * 0.5 * (ga + gl)
                j += 1
            if j == nlev:
                return PASSED, levels[nlev - 1], u + f * h, out_t[nlev - 1], steps
        gb = g_const if const else _inv_speed(b, s_az, s_am, leb_rate, leb_start, ptr, spacing, order, lattice, mass)
        t += 0.5 * h * (ga + gb)
        u = tend
        y = b
        ga = gb
        if ev == 1:
            v = gen.random() * jump_rate
            if v < atom_total:
                idx = np.searchsorted(atom_cum, v, side="right")
                y += atom_sizes[min(idx, atom_sizes.size - 1)]
            else:
                v -= atom_total
                idx = np.searchsorted(dens_cum, v, side="right")
                idx = min(max(idx, 1), dens_cum.size - 1)
                lo, hi = dens_cum[idx - 1], dens_cum[idx]
                frac = (v - lo) / (hi - lo) if hi > lo else 0.0
                y += dens_r[idx - 1] + frac * (dens_r[idx] - dens_r[idx - 1])
            next_jump = u + gen.standard_exponential() / jump_rate
            ga = g_const if const else _inv_speed(y, s_az, s_am, leb_rate, leb_start, ptr, spacing, order, lattice, mass)
        elif ev == 2:
            return KILLED, y, u, t, steps
        elif ev == 3:
            return CENSORED, y, u, t, steps


def path_generator(seed: int, index: int) -> np.random.Generator:
    """Independent stream for path ``index`` under master ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def _run(sim: _Sim, gen, x0, levels, dt, adapt_scale, h_max, u_budget, t_budget, out_t):
    return _path_kernel(
        gen, float(x0), levels, float(dt), float(adapt_scale), float(h_max), float(u_budget), float(t_budget),
        sim.drift, sim.sigma, sim.kill_rate, sim.atom_total, sim.atom_cum, sim.atom_sizes,
        sim.dens_total, sim.dens_cum, sim.dens_r, sim.g_atom_z, sim.g_atom_m, sim.leb_rate, sim.leb_start,
        sim.g_ptr, sim.g_spacing, sim.g_order, sim.g_lattice, sim.g_mass, sim.g_const, out_t,
    )  # fmt: skip


def _check_levels(model: ModelSpec, x0: float, levels: np.ndarray):
    if not model.contains(x0):
        raise ValueError(f"starting point {x0} is outside the state interval")
    if np.any(levels >= x0):
        raise ValueError("levels must lie strictly below the starting point")
    if not np.all(model.in_interior(levels)):
        raise ValueError("levels must lie in the interior of the state interval")


def simulate_path(
    model: ModelSpec,
    x0: float,
    l: float,
    dt: float,
    u_budget: float,
    rng: np.random.Generator,
    adapt_scale: float = 1.0,
    t_budget: float = math.inf,
    eps_jump: float = 1e-3,
) -> PathState:
    """Run one path from ``x0`` until it passes below ``l``, is killed or is censored."""
    levels = np.array([l], dtype=float)
    _check_levels(model, x0, levels)
    sim = simulation_arrays(model, eps_jump)
    out = np.empty(1)
    status, y, u, t, steps = _run(sim, rng, x0, levels, dt, adapt_scale, dt * 1e6, u_budget, t_budget, out)
    return PathState(y, u, t, status == KILLED, status == PASSED, steps)


def sample_positions(
    model: ModelSpec, x0: float, horizon: float, n: int, dt: float, seed: int, eps_jump: float = 1e-3
) -> np.ndarray:
    """Positions of ``xi`` at internal time ``horizon`` (killing ignored): the calibration sample."""
    sim = simulation_arrays(ModelSpec(model.psi, 0.0, model.gamma, model.interval_lower, model.lower_included), eps_jump)
    levels = np.zeros(0)
    out = np.empty(0)
    pos = np.empty(n)
    for i in range(n):
        _, pos[i], _, _, _ = _run(sim, path_generator(seed, i), x0, levels, dt, 0.0, dt, horizon, math.inf, out)
    return pos


def estimate_fptd_grid(
    model: ModelSpec,
    qs,
    x: float,
    levels,
    n: int,
    dt: float,
    seed: int,
    u_budget: float = 1e4,
    discount_floor: float = 1e-6,
    adapt_scale: float = 1.0,
    h_max_factor: float = 1e6,
    eps_jump: float = 1e-3,
) -> list[FptdEstimate]:
    """Estimates for every ``(q, level)`` pair from one set of ``n`` paths started at ``x``.

    Paths are censored at internal time ``u_budget`` or, when every ``q > 0``,
    at external time ``-log(discount_floor)/min(q)``; the latter can only
    move an estimate by ``discount_floor`` per censored path.
    """
    qs = np.atleast_1d(np.asarray(qs, dtype=float))
    lev_in = np.atleast_1d(np.asarray(levels, dtype=float))
    if np.any(qs < 0):
        raise ValueError("q must be nonnegative")
    if n < 100:
        raise ValueError("need n >= 100 paths")
    if not dt > 0:
        raise ValueError("dt must be positive")
    _check_levels(model, x, lev_in)
    order = np.argsort(-lev_in, kind="stable")
    lev = np.ascontiguousarray(lev_in[order])
    q_min = qs.min()
    t_budget = -math.log(discount_floor) / q_min if q_min > 0 else math.inf
    sim = simulation_arrays(model, eps_jump)
    times = np.empty((n, lev.size))
    status = np.empty(n, dtype=np.int64)
    t_end = np.empty(n)
    out = np.empty(lev.size)
    for i in range(n):
        st, _, _, t, _ = _run(sim, path_generator(seed, i), x, lev, dt, adapt_scale, dt * h_max_factor, u_budget, t_budget, out)
        times[i] = out
        status[i] = st
        t_end[i] = t
    results = []
    for jj, li in enumerate(order):
        passed = times[:, jj] >= 0
        killed = ~passed & (status == KILLED)
        censored = ~passed & ~killed
        for q in qs:
            vals = np.where(passed, np.exp(-q * np.where(passed, times[:, jj], 0.0)), 0.0)
            bias = float(np.sum(np.exp(-q * t_end[censored]))) / n
            results.append(
                FptdEstimate(
                    q=float(q),
                    x=float(x),
                    level=float(lev_in[li]),
                    mean=float(vals.mean()),
                    std_error=float(vals.std(ddof=1) / math.sqrt(n)),
                    n_paths=n,
                    n_passed=int(passed.sum()),
                    n_killed=int(killed.sum()),
                    n_censored=int(censored.sum()),
                    dt=float(dt),
                    seed=int(seed),
                    censor_bias=bias,
                )
            )
    results.sort(key=lambda e: (e.q, -e.level))
    return results


def estimate_fptd(model: ModelSpec, q: float, x: float, l: float, n: int, dt: float, seed: int, **kw) -> FptdEstimate:
    """``E_x[exp(-q T_l); T_l < zeta]`` from ``n`` seeded paths."""
    return estimate_fptd_grid(model, [q], x, [l], n, dt, seed, **kw)[0]
