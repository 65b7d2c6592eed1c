"""Scale measures and Laplace transforms of first-passage times downwards.

For a model ``(psi - p, A = 1/laplace(gamma))`` and ``q > 0`` the scale
function is ``Phi_q ~ laplace(nu_q)`` and

    E_x[exp(-q T_l); T_l < zeta] = laplace(nu_q, x) / laplace(nu_q, l).

``nu_q`` is carried by ``[r, inf)`` with ``r = psi^{-1}(p)`` and solves
``(psi - p) . nu_q = q gamma * nu_q``.  When ``m_q`` (the iterated series
below) has a finite Laplace transform on ``I`` it is ``nu_q``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate

from .levy import QuadratureError, esscher, eval_psi, explosion_safe, psi_inverse
from .measures import GridComponent, MeasureRepr, convolve, scale_by_function, shift
from .model import ModelSpec

CONVERGED = "converged"
DIVERGED = "diverged"
HEURISTIC = "heuristic"

# consecutive growing terms that declare the series divergent
GROWTH_RUN = 5


@dataclass(frozen=True, eq=False)
class ScaleMeasure:
    """A (truncated) scale measure ``nu_q`` with its truncation metadata.

    ``tail_bound`` bounds the Laplace mass neglected by truncation at
    ``theta_ref`` (certified for series with ``inf supp gamma > 0``, an
    estimate otherwise).  ``error_estimate`` carries discretization error
    estimates where a solver has one.  ``gamma`` is the (possibly
    discretized) measure the solver actually convolved with.
    """

    q: float
    measure: MeasureRepr
    base: float
    k_truncation: int = 0
    tail_bound: float = 0.0
    theta_ref: float = math.nan
    status: str = CONVERGED
    method: str = ""
    error_estimate: float = 0.0
    gamma: MeasureRepr | None = None
    notes: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.status not in (CONVERGED, DIVERGED, HEURISTIC):
            raise ValueError(f"unknown status {self.status!r}")
        if self.status != DIVERGED and self.measure.support_min() < self.base - 1e-12:
            raise ValueError("scale measure must be carried by [psi^{-1}(p), inf)")

    def log_laplace(self, theta):
        return self.measure.log_laplace(theta)


def _check_points(model: ModelSpec, points) -> np.ndarray:
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    if pts.size == 0:
        raise ValueError("need at least one evaluation point")
    if not np.all(model.contains(pts)):
        raise ValueError(f"evaluation points {pts[~model.contains(pts)]} lie outside the state interval")
    return pts


def _weight(model: ModelSpec, q: float):
    """``z -> q / (psi(z) - p)`` with ``q/0 = inf``."""
    p = model.killing

    def f(z):
        z = np.asarray(z, dtype=float)
        d = eval_psi(model.psi, np.clip(z, 0.0, None)) - p
        with np.errstate(divide="ignore"):
            return np.where(d > 0, q / np.where(d > 0, d, 1.0), np.inf)

    return f


def _a_priori_tail(model: ModelSpec, q: float, gamma: MeasureRepr, theta: float, k: int, alpha: float) -> float:
    """``exp(-theta r) sum_{j>k} (q gamma^(theta))^j / prod_{l<=j} psi#(alpha l)``."""
    r = model.base
    p = model.killing
    g = q * float(gamma.laplace(theta))
    log_term = 0.0
    for l in range(1, k + 1):
        log_term += math.log(g) - math.log(eval_psi(model.psi, r + alpha * l) - p)
    total = 0.0
    j = k
    while True:
        j += 1
        log_term += math.log(g) - math.log(eval_psi(model.psi, r + alpha * j) - p)
        term = math.exp(log_term)
        total += term
        if term <= 1e-17 * total or log_term < -745:
            break
        if j > k + 100000:
            return math.inf
    return math.exp(-theta * r) * total


def build_mq(
    model: ModelSpec,
    q: float,
    eval_points,
    tol: float = 1e-14,
    k_max: int = 200,
    spacing: float | None = None,
    z_max: float | None = None,
) -> ScaleMeasure:
    """Iterate ``term_{k+1} = q/(psi - p) . (term_k * gamma)`` from ``delta_r``.

    Stops once the newest term's Laplace transform at ``min(eval_points)``
    is below ``tol`` times the accumulated one and, when
    ``alpha = inf supp gamma > 0``, the a-priori tail bound is as well
    (status ``converged``; ``heuristic`` when ``alpha = 0``).  An atom of
    ``gamma`` at 0, ``GROWTH_RUN`` consecutive growing terms, or hitting
    ``k_max`` give status ``diverged``.

    A Lebesgue part of ``gamma`` is discretized with ``spacing`` up to ``z_max``.
    """
    if not q > 0:
        raise ValueError("q must be positive")
    pts = _check_points(model, eval_points)
    theta = float(pts.min())
    gamma = model.gamma
    if gamma.lebesgue is not None:
        if spacing is None or z_max is None:
            raise ValueError("gamma has a Lebesgue part: pass spacing and z_max to discretize it")
        gamma = gamma.discretized(spacing, z_max)
    r = model.base
    alpha = gamma.support_min()
    weight = _weight(model, q)

    term = MeasureRepr.dirac(r)
    acc = term
    acc_lap = float(term.laplace(theta))
    prev_lap = acc_lap
    growth = 0
    notes = []
    for k in range(1, k_max + 1):
        term = scale_by_function(convolve(term, gamma), weight)
        if term.divergent:
            notes.append(f"term {k} carries q/0 mass (gamma has an atom at 0)")
            return ScaleMeasure(q, acc, r, k, math.inf, theta, DIVERGED, "series", gamma=gamma, notes=tuple(notes))
        lap = float(term.laplace(theta))
        acc = acc + term
        acc_lap += lap
        growth = growth + 1 if lap > prev_lap else 0
        prev_lap = lap
        if growth >= GROWTH_RUN or not np.isfinite(acc_lap):
            notes.append(f"term Laplace transforms grew for {GROWTH_RUN} consecutive k")
            return ScaleMeasure(q, acc, r, k, math.inf, theta, DIVERGED, "series", gamma=gamma, notes=tuple(notes))
        if lap < tol * acc_lap:
            if alpha > 0:
                bound = _a_priori_tail(model, q, gamma, theta, k, alpha)
                if bound < tol * acc_lap:
                    return ScaleMeasure(q, acc, r, k, bound, theta, CONVERGED, "series", gamma=gamma)
            else:
                notes.append("inf supp gamma = 0: stopping rule is empirical")
                return ScaleMeasure(q, acc, r, k, lap, theta, HEURISTIC, "series", gamma=gamma, notes=tuple(notes))
    notes.append(f"k_max={k_max} reached before tolerance {tol:g}")
    return ScaleMeasure(q, acc, r, k_max, math.inf, theta, DIVERGED, "series", gamma=gamma, notes=tuple(notes))


def lattice_parameters(gamma: MeasureRepr, rtol: float = 1e-9):
    """Return ``(alpha, g)`` with ``gamma = sum_n g[n-1] delta_{alpha n}``."""
    if not gamma.is_atomic:
        raise ValueError("lattice recursion needs a purely atomic gamma")
    locs, masses = gamma.atom_locs, gamma.atom_masses
    if locs[0] <= 0:
        raise ValueError("lattice recursion needs gamma carried by alpha*N with alpha > 0")
    alpha = float(locs[0])
    n = np.rint(locs / alpha).astype(int)
    if np.any(np.abs(locs - n * alpha) > rtol * locs):
        raise ValueError("gamma is not carried by the lattice generated by its smallest atom")
    g = np.zeros(n.max())
    g[n - 1] = masses
    return alpha, g


def lattice_mq(model: ModelSpec, q: float, K: int, theta_ref: float | None = None) -> ScaleMeasure:
    """Exact weights of ``m_q`` for ``gamma`` carried by ``alpha N``.

    ``m_q = sum_k w_k delta_{r + alpha k}`` with ``w_0 = 1`` and
    ``w_k = q / (psi(r + alpha k) - p) * sum_{n=1}^k g_n w_{k-n}``.
    """
    if not q > 0:
        raise ValueError("q must be positive")
    alpha, g = lattice_parameters(model.gamma)
    r = model.base
    p = model.killing
    ks = np.arange(K + 1)
    locs = r + alpha * ks
    denom = eval_psi(model.psi, locs[1:]) - p
    w = np.zeros(K + 1)
    w[0] = 1.0
    for k in range(1, K + 1):
        n = min(k, g.size)
        w[k] = q / denom[k - 1] * np.dot(g[:n], w[k - 1 :: -1][:n])
    if theta_ref is None:
        theta_ref = max(model.interval_lower, 0.0) if model.lower_included else 0.0
        if not model.contains(theta_ref):
            theta_ref = model.interval_lower + 1.0
    bound = _a_priori_tail(model, q, model.gamma, theta_ref, K, alpha)
    meas = MeasureRepr(locs, w)
    return ScaleMeasure(q, meas, r, K, bound, theta_ref, CONVERGED, "lattice", gamma=model.gamma)


def closed_form_levy(model: ModelSpec, q: float) -> ScaleMeasure:
    """``nu_q = delta_{psi^{-1}(p + q m)}`` for ``gamma = m delta_0`` (``A`` constant)."""
    if not q > 0:
        raise ValueError("q must be positive")
    g = model.gamma
    if not (g.is_atomic and g.atom_locs.size == 1 and g.atom_locs[0] == 0.0):
        raise ValueError("closed_form_levy needs gamma = m * delta_0")
    m = float(g.atom_masses[0])
    loc = psi_inverse(model.psi, model.killing + q * m)
    return ScaleMeasure(q, MeasureRepr.dirac(loc), model.base, 0, 0.0, math.nan, CONVERGED, "levy", gamma=g)


def nu_zero(model: ModelSpec) -> ScaleMeasure:
    """``nu_0 = delta_{psi^{-1}(p)}``."""
    r = model.base
    return ScaleMeasure(0.0, MeasureRepr.dirac(r), r, 0, 0.0, math.nan, CONVERGED, "q=0")


def _lebesgue_rate(model: ModelSpec) -> float:
    g = model.gamma
    if g.lebesgue is None or g.atom_masses.size or g.has_grid or g.lebesgue[1] != 0.0:
        raise ValueError("closed_form_csbp needs gamma = rate * Lebesgue on [0, inf)")
    return g.lebesgue[0]


_GL_HI = leggauss(20)
_GL_LO = leggauss(10)


def _segment_integrals(fun, a: np.ndarray, b: np.ndarray):
    """Gauss-Legendre integrals of ``fun`` over ``[a_i, b_i]`` with an error estimate."""
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    out = []
    for nodes, weights in (_GL_HI, _GL_LO):
        x = mid[:, None] + half[:, None] * nodes[None, :]
        out.append(half * (fun(x) @ weights))
    return out[0], np.abs(out[0] - out[1])


def csbp_log_density(model: ModelSpec, q: float, z, theta: float | None = None, rate: float | None = None):
    """Log of ``(1/(psi - p)) exp(int_theta^z q rate/(psi - p))`` at points ``z > r``.

    The integral is accumulated over consecutive points with 20-point
    Gauss-Legendre in the variable ``log(z - r)``, checked against 10-point;
    a mismatch above 1e-9 raises :class:`QuadratureError`.
    """
    if rate is None:
        rate = _lebesgue_rate(model)
    r = model.base
    p = model.killing
    z = np.asarray(z, dtype=float)
    if np.any(z <= r):
        raise ValueError("density is evaluated strictly right of psi^{-1}(p)")
    if theta is None:
        theta = r + 1.0
    if not theta > r:
        raise ValueError("theta must exceed psi^{-1}(p)")
    order = np.argsort(z, kind="stable")
    pts = np.concatenate([[theta], z[order]])
    pts_sorted = np.sort(pts)
    # z = r + exp(t), dz = exp(t) dt tames the pole at r
    def fun(t):
        d = np.exp(t)
        return q * rate * d / (eval_psi(model.psi, r + d) - p)

    logs = np.log(pts_sorted - r)
    seg, err = _segment_integrals(fun, logs[:-1], logs[1:])
    worst = float(np.max(err / np.maximum(1.0, np.abs(seg)))) if err.size else 0.0
    if worst > 1e-9:
        bad = int(np.argmax(err))
        raise QuadratureError(
            f"integral of q/(psi-p) on [{pts_sorted[bad]:.6g}, {pts_sorted[bad + 1]:.6g}] "
            f"has error estimate {worst:.3g} (too close to psi^-1(p)={r:.6g}?)"
        )
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    anchor = cum[np.searchsorted(pts_sorted, theta)]
    integral_sorted = np.interp(z[order], pts_sorted, cum - anchor)
    # interp is exact at the nodes themselves
    out = np.empty_like(z)
    out[order] = integral_sorted - np.log(eval_psi(model.psi, z[order]) - p)
    return out


def closed_form_csbp(
    model: ModelSpec,
    q: float,
    z_max: float,
    spacing: float,
    theta: float | None = None,
    theta_ref: float | None = None,
) -> ScaleMeasure:
    """Gridded ``nu_q`` for ``gamma = rate * Lebesgue`` (continuous-state branching).

    Each bin ``[r + j h, r + (j+1) h)`` gets the two-point Gauss integral of the
    closed-form density; masses are normalized by the largest bin.  The Laplace
    mass beyond the grid at ``theta_ref`` (default ``max(inf I, 0)``) is
    integrated numerically and reported as ``tail_bound``.
    """
    if not q > 0:
        raise ValueError("q must be positive")
    rate = _lebesgue_rate(model)
    r = model.base
    n = int(math.ceil(z_max / spacing))
    centres = r + spacing * (np.arange(n) + 0.5)
    off = spacing / (2.0 * math.sqrt(3.0))
    pts = np.concatenate([centres - off, centres + off])
    logd = csbp_log_density(model, q, pts, theta, rate)
    lo, hi = logd[:n], logd[n:]
    logm = np.logaddexp(lo, hi) + math.log(0.5 * spacing)
    top = logm.max()
    masses = np.exp(logm - top)
    meas = MeasureRepr(grids=(GridComponent(r, spacing, masses),))
    if theta_ref is None:
        theta_ref = max(model.interval_lower, 0.0)
    end = r + n * spacing

    def tail_density(z):
        return math.exp(float(csbp_log_density(model, q, np.array([z]), theta, rate)[0]) - top - theta_ref * z)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        tail, tail_err = integrate.quad(tail_density, end, np.inf, limit=200)
    tail += tail_err
    return ScaleMeasure(q, meas, r, n, tail, theta_ref, CONVERGED, "csbp", gamma=model.gamma)


def _volterra_solve(psi_vals: np.ndarray, lags: np.ndarray | None, const_rate: float | None, q: float, h: float):
    """Forward stepping of ``(psi_j - p) w_j = q h sum_{i<j} zeta((j-i) h) w_i``, ``w_0 = 1``.

    Returns ``log w`` (the solution is rescaled as it grows to stay finite).
    """
    n = psi_vals.size
    w = np.zeros(n)
    w[0] = 1.0
    log_scale = np.zeros(n)
    offset = 0.0
    if const_rate is not None:
        s = 0.0
        for j in range(1, n):
            s += w[j - 1]
            w[j] = q * h * const_rate * s / psi_vals[j]
            if w[j] > 1e150:
                c = w[j]
                w[: j + 1] /= c
                s /= c
                offset += math.log(c)
                log_scale[: j + 1] -= math.log(c)
            log_scale[j] = offset
    else:
        rev = np.ascontiguousarray(lags[::-1])
        m = lags.size
        for j in range(1, n):
            w[j] = q * h * np.dot(rev[m - j : m], w[:j]) / psi_vals[j]
            if w[j] > 1e150:
                c = w[j]
                w[: j + 1] /= c
                offset += math.log(c)
                log_scale[: j + 1] -= math.log(c)
            log_scale[j] = offset
    with np.errstate(divide="ignore"):
        return np.log(w) + log_scale


def volterra_density(
    model: ModelSpec,
    q: float,
    z_max: float,
    spacing: float,
    density=None,
    richardson: bool = True,
    ref_offset: float = 1.0,
) -> ScaleMeasure:
    """Solve ``(psi - p) w = q zeta * w`` for the density ``w`` of ``nu_q``.

    Left-rectangle forward stepping on ``z_j = r + j h`` seeded with ``w_0 = 1``.
    With ``richardson`` the solve is repeated at ``h/2`` and the log-densities,
    both normalized at ``r + ref_offset``, are extrapolated as
    ``2 log w_{h/2} - log w_h``; the largest log-change is the error estimate.
    """
    if not q > 0:
        raise ValueError("q must be positive")
    g = model.gamma
    if g.atom_masses.size:
        raise ValueError("volterra_density needs an absolutely continuous gamma")
    r = model.base
    p = model.killing
    const_rate = None
    if density is None:
        if g.lebesgue is not None and not g.has_grid and g.lebesgue[1] == 0.0:
            const_rate = g.lebesgue[0]
        density = g.density
    near = np.asarray(density(spacing * np.arange(1, 6)), dtype=float)
    if np.any(near <= 0):
        raise ValueError("gamma's density vanishes near 0; use build_mq for this gamma")

    def solve(h):
        n = int(math.ceil(z_max / h)) + 1
        z = r + h * np.arange(n)
        pv = eval_psi(model.psi, z) - p
        if np.any(pv[1:] <= 0):
            raise ValueError("psi - p must be positive right of the grid origin")
        lags = None if const_rate is not None else np.asarray(density(h * np.arange(1, n)), dtype=float)
        return z, _volterra_solve(pv, lags, const_rate, q, h)

    z, logw = solve(spacing)
    n = z.size
    j_ref = min(n - 1, max(1, int(round(ref_offset / spacing))))
    err = 0.0
    notes = ()
    if richardson:
        _, logw2 = solve(spacing / 2.0)
        coarse = logw - logw[j_ref]
        fine = logw2[::2][:n] - logw2[2 * j_ref]
        extrap = 2.0 * fine - coarse
        finite = np.isfinite(extrap)
        # estimate where the density is not negligible (relative 1e-9)
        live = finite & (fine >= np.max(fine[finite]) - 20.0)
        live[0] = False
        err = float(np.max(np.abs(extrap[live] - fine[live]))) if live.any() else 0.0
        logw = np.where(finite, extrap, fine)
        notes = ("Richardson-extrapolated from h and h/2",)
    if not explosion_safe(model.psi, p):
        # the grid starts at r, so the admissible carrier [r, inf) is enforced
        notes = notes + ("explosion possible: solution restricted to [psi^{-1}(p), inf)",)
    logw = logw - logw[j_ref]
    # bin j carries the trapezoid mass of [z_j, z_{j+1})
    logm = np.logaddexp(logw[:-1], logw[1:]) + math.log(0.5 * spacing)
    top = np.max(logm)
    masses = np.exp(logm - top)
    meas = MeasureRepr(grids=(GridComponent(r, spacing, masses),))
    return ScaleMeasure(
        q, meas, r, n - 1, 0.0, math.nan, HEURISTIC, "volterra", error_estimate=err, gamma=g, notes=notes
    )


def fptd_laplace(scale: ScaleMeasure, x: float, l: float) -> float:
    """``E_x[exp(-q T_l); T_l < zeta] = laplace(nu_q, x) / laplace(nu_q, l)``."""
    if l > x:
        raise ValueError("need l <= x")
    if scale.status == DIVERGED:
        raise ValueError("scale measure is divergent; no transform available")
    if x == l:
        return 1.0
    return float(math.exp(scale.log_laplace(x) - scale.log_laplace(l)))


def fptd_curve(scale: ScaleMeasure, l: float, xs) -> np.ndarray:
    """Vectorized :func:`fptd_laplace` over starting points ``xs >= l``."""
    xs = np.asarray(xs, dtype=float)
    if np.any(xs < l):
        raise ValueError("need l <= x")
    if scale.status == DIVERGED:
        raise ValueError("scale measure is divergent; no transform available")
    return np.exp(scale.log_laplace(xs) - scale.log_laplace(l))


def residual_nu_q(model: ModelSpec, q: float, scale: ScaleMeasure, thetas) -> float:
    """Largest relative residual of ``(psi - p) . nu = q gamma * nu`` in Laplace form.

    ``max_theta |L[(psi - p) . nu](theta) - q nu^(theta) gamma^(theta)| / (q nu^(theta) gamma^(theta))``.
    For ``q = 0`` with ``nu_0 = delta_r`` both sides vanish and 0 is returned.
    """
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    gamma = scale.gamma if scale.gamma is not None else model.gamma
    p = model.killing
    lhs_meas = scale_by_function(
        scale.measure, lambda z: np.clip(eval_psi(model.psi, np.clip(z, 0.0, None)) - p, 0.0, None)
    )
    if q == 0:
        return 0.0 if lhs_meas.is_zero else math.inf
    lhs = lhs_meas.laplace(thetas)
    rhs = q * scale.measure.laplace(thetas) * gamma.laplace(thetas)
    return float(np.max(np.abs(lhs - rhs) / rhs))


def residual_allowance(scale: ScaleMeasure, thetas) -> float:
    """``max(1e-8, 10 tail_bound / min_theta laplace(nu))``."""
    lap = np.min(scale.measure.laplace(np.atleast_1d(thetas)))
    return max(1e-8, 10.0 * scale.tail_bound / lap)


@dataclass(frozen=True)
class ClassifyReport:
    alpha: float
    gamma_atom_at_zero: bool
    mq_in_MI: str
    nu_atom_at_base: str
    basis: str

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "gamma_atom_at_zero": self.gamma_atom_at_zero,
            "mq_in_MI": self.mq_in_MI,
            "nu_atom_at_base": self.nu_atom_at_base,
            "basis": self.basis,
        }


def _density_bounded_below_near_zero(gamma: MeasureRepr, cells: int = 5) -> bool:
    if gamma.lebesgue is not None and gamma.lebesgue[1] == 0.0:
        return True
    for g in gamma.grids:
        g1 = g.to_order_one()
        if g1.origin == 0.0 and g1.masses.size >= cells and np.all(g1.masses[:cells] > 0):
            return True
    return False


def classify(model: ModelSpec, q: float, probe: bool = False, eval_points=None, **kw) -> ClassifyReport:
    """Place the model in the chain ``alpha > 0 => nu_q has an atom at r <=> m_q in M_I => gamma({0}) = 0``.

    With ``probe`` an undecided case is settled heuristically by running
    :func:`build_mq` at ``eval_points``.
    """
    g = model.gamma
    alpha = g.support_min()
    atom0 = g.atom_mass_at(0.0) > 0
    if alpha > 0:
        return ClassifyReport(alpha, False, "yes", "yes", "inf supp gamma > 0")
    if atom0:
        return ClassifyReport(alpha, True, "no", "no", "gamma has an atom at 0")
    if _density_bounded_below_near_zero(g):
        return ClassifyReport(
            alpha, False, "no", "no", "density bounded below at 0+ against at most linear decay of psi - p"
        )
    if probe:
        if eval_points is None:
            raise ValueError("probing needs eval_points")
        sm = build_mq(model, q, eval_points, **kw)
        ans = "yes" if sm.status != DIVERGED else "no"
        return ClassifyReport(alpha, False, ans, ans, f"heuristic: build_mq status {sm.status}")
    return ClassifyReport(alpha, False, "unknown", "unknown", "alpha = 0 without an atom or density at 0")


def tilted_model(model: ModelSpec) -> ModelSpec:
    """Same ``gamma`` and interval, exponent ``psi#`` and no killing."""
    return replace(model, psi=esscher(model.psi, model.killing), killing=0.0)


def esscher_reduce(model: ModelSpec, q: float, eval_points, method: str = "series", **kw) -> ScaleMeasure:
    """Build ``nu_q`` on the tilted model and translate it by ``psi^{-1}(p)``."""
    r = model.base
    tilted = tilted_model(model)
    if method == "series":
        inner = build_mq(tilted, q, eval_points, **kw)
    elif method == "lattice":
        inner = lattice_mq(tilted, q, **kw)
    else:
        raise ValueError(f"unknown method {method!r}")
    theta = inner.theta_ref
    factor = math.exp(-theta * r) if np.isfinite(theta) else 1.0
    return replace(
        inner,
        measure=shift(inner.measure, r),
        base=r,
        tail_bound=inner.tail_bound * factor,
        method=f"esscher+{inner.method}",
    )
