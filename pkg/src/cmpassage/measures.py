"""Finite measures on [0, inf) and the operations needed by the scale solvers.

A measure is held as

* sorted atoms ``(z_i, m_i)``;
* zero or more grid components.  A grid component of order ``s`` is a lattice
  of point masses ``origin + i*h`` each convolved with ``s`` copies of the
  uniform law on ``[0, h)``.  Order 1 is the plain histogram (bin ``i``
  carries its mass uniformly on ``[origin + i*h, origin + (i+1)*h)``);
  convolving two components adds their orders, which keeps Laplace
  transforms exactly multiplicative under convolution;
* optionally ``rate * Lebesgue`` restricted to ``[start, inf)``.  This part
  has infinite mass and is only used as an input (e.g. ``A = id``); call
  :meth:`MeasureRepr.discretized` before convolving.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import logsumexp

# atoms closer than this (relative) are merged
_MERGE_RTOL = 1e-12
# grid origins this close (in units of h) to the common lattice are merged without snapping
_ALIGN_TOL = 1e-9


def _readonly(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


def log_uniform_laplace(x):
    """``log((1 - exp(-x)) / x)``: log-Laplace transform of U[0,1) at ``x``."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    neg = x < 0
    xp = x[pos]
    out[pos] = np.log(-np.expm1(-xp)) - np.log(xp)
    xn = x[neg]
    out[neg] = -xn + np.log1p(-np.exp(xn)) - np.log(-xn)
    return out


def eulerian_weights(order: int) -> np.ndarray:
    """Mass of the order-fold uniform convolution on each unit cell.

    The Irwin-Hall law of ``order`` uniforms puts ``A(order, j) / order!`` on
    ``[j, j+1)``, with ``A`` the Eulerian numbers.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    row = [1]
    for n in range(2, order + 1):
        new = []
        for k in range(n):
            left = row[k] if k < len(row) else 0
            right = row[k - 1] if k >= 1 else 0
            new.append((k + 1) * left + (n - k) * right)
        row = new
    fact = math.factorial(order)
    return np.array([a / fact for a in row])


@dataclass(frozen=True, eq=False)
class GridComponent:
    """Lattice masses smoothed by ``order`` uniform kernels of width ``spacing``."""

    origin: float
    spacing: float
    masses: np.ndarray
    order: int = 1

    def __post_init__(self):
        object.__setattr__(self, "masses", _readonly(self.masses))
        if self.spacing <= 0:
            raise ValueError("grid spacing must be positive")
        if self.origin < 0:
            raise ValueError("grid origin must be >= 0")
        if self.order < 1:
            raise ValueError("grid order must be >= 1")
        if np.any(self.masses < 0):
            raise ValueError("bin masses must be nonnegative")

    @property
    def lattice(self) -> np.ndarray:
        return self.origin + self.spacing * np.arange(self.masses.size)

    @property
    def centres(self) -> np.ndarray:
        """Centre of mass of each smoothed lattice point."""
        return self.lattice + 0.5 * self.order * self.spacing

    def log_laplace(self, theta: float) -> float:
        nz = self.masses > 0
        if not np.any(nz):
            return -np.inf
        terms = np.log(self.masses[nz]) - theta * self.lattice[nz]
        return float(logsumexp(terms) + self.order * log_uniform_laplace(theta * self.spacing))

    def to_order_one(self) -> "GridComponent":
        """Exact projection onto order-1 bins of the same spacing."""
        if self.order == 1:
            return self
        m = np.convolve(self.masses, eulerian_weights(self.order))
        return GridComponent(self.origin, self.spacing, m, 1)

    def support_min(self) -> float:
        idx = np.flatnonzero(self.masses > 0)
        return float(self.origin + idx[0] * self.spacing) if idx.size else np.inf


@dataclass(frozen=True, eq=False)
class MeasureRepr:
    """A measure on [0, inf) made of atoms, grid components and a Lebesgue tail.

    ``divergent`` marks an object detected to carry infinite mass where the
    algebra would have needed a finite one (e.g. ``q/0`` times an atom).
    ``snap_error`` is the largest location error introduced by aligning grid
    components to a common lattice.
    """

    atom_locs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    atom_masses: np.ndarray = field(default_factory=lambda: np.zeros(0))
    grids: tuple = ()
    lebesgue: tuple | None = None
    divergent: bool = False
    snap_error: float = 0.0

    def __post_init__(self):
        locs = np.asarray(self.atom_locs, dtype=float)
        masses = np.asarray(self.atom_masses, dtype=float)
        if locs.shape != masses.shape or locs.ndim != 1:
            raise ValueError("atom locations and masses must be 1-d arrays of equal length")
        if np.any(locs < 0):
            raise ValueError("atom locations must be >= 0")
        if np.any(masses < 0) or np.any(np.isnan(masses)):
            raise ValueError("atom masses must be nonnegative")
        locs, masses = _merge_atoms(locs, masses)
        object.__setattr__(self, "atom_locs", _readonly(locs))
        object.__setattr__(self, "atom_masses", _readonly(masses))
        object.__setattr__(self, "grids", tuple(self.grids))
        if self.lebesgue is not None:
            rate, start = map(float, self.lebesgue)
            if rate <= 0 or start < 0:
                raise ValueError("Lebesgue part needs rate > 0 and start >= 0")
            object.__setattr__(self, "lebesgue", (rate, start))

    # -- constructors -------------------------------------------------------
    @classmethod
    def zero(cls) -> "MeasureRepr":
        return cls()

    @classmethod
    def dirac(cls, z: float, mass: float = 1.0) -> "MeasureRepr":
        return cls(np.array([z]), np.array([mass]))

    @classmethod
    def from_atoms(cls, locs: Sequence[float], masses: Sequence[float]) -> "MeasureRepr":
        return cls(np.asarray(locs, dtype=float), np.asarray(masses, dtype=float))

    @classmethod
    def uniform(cls, start: float, stop: float, spacing: float, density: float = 1.0) -> "MeasureRepr":
        """``density * Lebesgue`` on ``[start, stop)`` as order-1 bins."""
        n = int(round((stop - start) / spacing))
        if n < 1 or abs(start + n * spacing - stop) > 1e-9 * max(1.0, stop):
            raise ValueError("interval length must be a positive multiple of the spacing")
        return cls(grids=(GridComponent(start, spacing, np.full(n, density * spacing)),))

    @classmethod
    def from_bins(cls, origin: float, spacing: float, masses: Sequence[float]) -> "MeasureRepr":
        return cls(grids=(GridComponent(origin, spacing, np.asarray(masses, dtype=float)),))

    @classmethod
    def lebesgue_measure(cls, rate: float = 1.0, start: float = 0.0) -> "MeasureRepr":
        return cls(lebesgue=(rate, start))

    # -- queries ------------------------------------------------------------
    @property
    def has_grid(self) -> bool:
        return any(np.any(g.masses > 0) for g in self.grids)

    @property
    def is_atomic(self) -> bool:
        return not self.has_grid and self.lebesgue is None

    @property
    def is_zero(self) -> bool:
        return self.atom_masses.size == 0 and not self.has_grid and self.lebesgue is None

    def total_mass(self) -> float:
        if self.lebesgue is not None or self.divergent:
            return np.inf
        return float(self.atom_masses.sum() + sum(g.masses.sum() for g in self.grids))

    def support_min(self) -> float:
        """``inf supp`` of the measure (``inf`` for the zero measure)."""
        cands = [np.inf]
        pos = self.atom_masses > 0
        if np.any(pos):
            cands.append(float(self.atom_locs[pos][0]))
        cands.extend(g.support_min() for g in self.grids)
        if self.lebesgue is not None:
            cands.append(self.lebesgue[1])
        return min(cands)

    def atom_mass_at(self, z: float, atol: float = 1e-12) -> float:
        hit = np.abs(self.atom_locs - z) <= atol * max(1.0, abs(z))
        return float(self.atom_masses[hit].sum())

    def density(self, z) -> np.ndarray:
        """Density of the absolutely continuous part (order-1 view of the grids)."""
        z = np.asarray(z, dtype=float)
        out = np.zeros_like(z)
        for g in self.grids:
            g1 = g.to_order_one()
            idx = np.floor((z - g1.origin) / g1.spacing).astype(int)
            ok = (idx >= 0) & (idx < g1.masses.size)
            out[ok] += g1.masses[idx[ok]] / g1.spacing
        if self.lebesgue is not None:
            rate, start = self.lebesgue
            out += np.where(z >= start, rate, 0.0)
        return out

    def log_laplace(self, theta) -> np.ndarray | float:
        """Natural log of the Laplace transform (``-inf`` for the zero measure)."""
        scalar = np.ndim(theta) == 0
        thetas = np.atleast_1d(np.asarray(theta, dtype=float))
        out = np.empty(thetas.shape)
        pos = self.atom_masses > 0
        logm = np.log(self.atom_masses[pos])
        locs = self.atom_locs[pos]
        for i, th in enumerate(thetas):
            if self.divergent:
                out[i] = np.inf
                continue
            parts = []
            if locs.size:
                parts.append(logsumexp(logm - th * locs))
            parts.extend(g.log_laplace(th) for g in self.grids)
            if self.lebesgue is not None:
                rate, start = self.lebesgue
                parts.append(np.log(rate) - th * start - np.log(th) if th > 0 else np.inf)
            out[i] = logsumexp(parts) if parts else -np.inf
        return float(out[0]) if scalar else out

    def laplace(self, theta):
        return np.exp(self.log_laplace(theta))

    # -- algebra ------------------------------------------------------------
    def __add__(self, other: "MeasureRepr") -> "MeasureRepr":
        if self.lebesgue is not None and other.lebesgue is not None:
            if self.lebesgue[1] != other.lebesgue[1]:
                raise ValueError("cannot add Lebesgue parts with different starts")
            leb = (self.lebesgue[0] + other.lebesgue[0], self.lebesgue[1])
        else:
            leb = self.lebesgue if self.lebesgue is not None else other.lebesgue
        grids, snap = _merge_grids(list(self.grids) + list(other.grids))
        return MeasureRepr(
            np.concatenate([self.atom_locs, other.atom_locs]),
            np.concatenate([self.atom_masses, other.atom_masses]),
            grids,
            leb,
            self.divergent or other.divergent,
            max(self.snap_error, other.snap_error, snap),
        )

    def scaled(self, c: float) -> "MeasureRepr":
        if c < 0:
            raise ValueError("scale factor must be nonnegative")
        grids = tuple(replace(g, masses=g.masses * c) for g in self.grids)
        leb = None if self.lebesgue is None else (self.lebesgue[0] * c, self.lebesgue[1])
        return replace(self, atom_masses=self.atom_masses * c, grids=grids, lebesgue=leb)

    def discretized(self, spacing: float, z_max: float) -> "MeasureRepr":
        """Replace the Lebesgue part by order-1 bins on ``[start, z_max)``."""
        if self.lebesgue is None:
            return self
        rate, start = self.lebesgue
        n = int(math.ceil((z_max - start) / spacing - 1e-9))
        if n < 1:
            raise ValueError("z_max must exceed the start of the Lebesgue part")
        comp = GridComponent(start, spacing, np.full(n, rate * spacing))
        return replace(self, lebesgue=None) + MeasureRepr(grids=(comp,))

    def order_one(self) -> "MeasureRepr":
        """Same measure seen through order-1 bins (exact bin masses)."""
        grids, snap = _merge_grids([g.to_order_one() for g in self.grids])
        return replace(self, grids=grids, snap_error=max(self.snap_error, snap))

    # -- serialization --------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "atoms": [[float(z), float(m)] for z, m in zip(self.atom_locs, self.atom_masses)],
            "grids": [
                {"origin": g.origin, "spacing": g.spacing, "order": g.order, "masses": g.masses.tolist()}
                for g in self.grids
            ],
            "lebesgue": None if self.lebesgue is None else {"rate": self.lebesgue[0], "start": self.lebesgue[1]},
            "divergent": self.divergent,
            "snap_error": self.snap_error,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MeasureRepr":
        atoms = d.get("atoms", [])
        locs = np.array([a[0] for a in atoms], dtype=float)
        masses = np.array([a[1] for a in atoms], dtype=float)
        grids = tuple(
            GridComponent(g["origin"], g["spacing"], np.array(g["masses"], dtype=float), int(g.get("order", 1)))
            for g in d.get("grids", [])
        )
        leb = d.get("lebesgue")
        return cls(
            locs,
            masses,
            grids,
            None if leb is None else (leb["rate"], leb["start"]),
            bool(d.get("divergent", False)),
            float(d.get("snap_error", 0.0)),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def loads(cls, text: str) -> "MeasureRepr":
        return cls.from_dict(json.loads(text))


def _merge_atoms(locs: np.ndarray, masses: np.ndarray):
    keep = masses > 0
    locs, masses = locs[keep], masses[keep]
    if locs.size < 2:
        return locs, masses
    order = np.argsort(locs, kind="stable")
    locs, masses = locs[order], masses[order]
    gap = np.diff(locs) > _MERGE_RTOL * np.maximum(1.0, np.abs(locs[1:]))
    starts = np.concatenate([[0], np.flatnonzero(gap) + 1])
    return locs[starts], np.add.reduceat(masses, starts)


def _merge_grids(comps: Iterable[GridComponent]):
    """Sum components sharing order and spacing, aligning lattices."""
    merged: list[GridComponent] = []
    snap = 0.0
    for c in comps:
        for k, m in enumerate(merged):
            if m.order == c.order and abs(m.spacing - c.spacing) <= 1e-12 * m.spacing:
                h = m.spacing
                offset = (c.origin - m.origin) / h
                n = int(round(offset))
                err = abs(offset - n) * h
                if abs(offset - n) > _ALIGN_TOL:
                    snap = max(snap, err)
                lo = min(0, n)
                hi = max(m.masses.size, n + c.masses.size)
                masses = np.zeros(hi - lo)
                masses[-lo : -lo + m.masses.size] += m.masses
                masses[n - lo : n - lo + c.masses.size] += c.masses
                origin = m.origin + lo * h if lo < 0 else m.origin
                merged[k] = GridComponent(max(origin, 0.0), h, masses, m.order)
                break
        else:
            merged.append(c)
    return tuple(merged), snap


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def laplace(mu: MeasureRepr, theta):
    """Laplace transform ``int exp(-theta z) mu(dz)``; may be ``inf``."""
    return mu.laplace(theta)


def _conv_masses(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if min(a.size, b.size) <= 512:
        return np.convolve(a, b)
    out = fftconvolve(a, b)
    # FFT round-off can leave tiny negatives
    return np.clip(out, 0.0, None)


def convolve(mu: MeasureRepr, nu: MeasureRepr) -> MeasureRepr:
    """Convolution ``mu * nu``.

    Atoms convolve exactly, an atom shifts a grid component, and two grid
    components with a common spacing give a component of summed order.  The
    Laplace transform of the result is the product of the inputs' transforms
    (up to round-off); only the alignment of lattices when summing components
    can move mass, by at most ``h/2``, and that is recorded in ``snap_error``.
    """
    if mu.lebesgue is not None or nu.lebesgue is not None:
        raise ValueError("discretize Lebesgue parts before convolving")
    divergent = mu.divergent or nu.divergent
    for g in mu.grids:
        for k in nu.grids:
            if abs(g.spacing - k.spacing) > 1e-12 * g.spacing:
                raise ValueError(f"incompatible grid spacings {g.spacing} and {k.spacing}")
    locs = (mu.atom_locs[:, None] + nu.atom_locs[None, :]).ravel()
    masses = (mu.atom_masses[:, None] * nu.atom_masses[None, :]).ravel()
    comps = []
    for a_locs, a_masses, grids in ((mu.atom_locs, mu.atom_masses, nu.grids), (nu.atom_locs, nu.atom_masses, mu.grids)):
        for z, m in zip(a_locs, a_masses):
            comps.extend(GridComponent(g.origin + z, g.spacing, g.masses * m, g.order) for g in grids)
    for g in mu.grids:
        for k in nu.grids:
            comps.append(GridComponent(g.origin + k.origin, g.spacing, _conv_masses(g.masses, k.masses), g.order + k.order))
    grids, snap = _merge_grids(comps)
    return MeasureRepr(locs, masses, grids, None, divergent, max(mu.snap_error, nu.snap_error, snap))


def scale_by_function(mu: MeasureRepr, f: Callable[[np.ndarray], np.ndarray]) -> MeasureRepr:
    """The measure ``f . mu``.

    ``f`` is evaluated at atoms and at the centre of every grid cell.  A
    value ``+inf`` against positive mass flags the result as divergent, which
    is how ``q/0`` on an atom is detected.
    """
    if mu.lebesgue is not None:
        raise ValueError("discretize Lebesgue parts before weighting")
    divergent = mu.divergent

    def weigh(points, masses):
        nonlocal divergent
        vals = np.asarray(f(points), dtype=float) if points.size else np.zeros(0)
        if np.any(vals < -1e-12 * np.maximum(1.0, np.abs(vals))):
            raise ValueError("weighting function must be nonnegative")
        vals = np.clip(vals, 0.0, None)
        hot = masses > 0
        if np.any(np.isinf(vals[hot])):
            divergent = True
        out = np.zeros_like(masses)
        out[hot] = masses[hot] * vals[hot]
        out[hot & np.isinf(vals)] = np.inf
        return out

    atom_masses = weigh(mu.atom_locs, mu.atom_masses)
    grids = []
    for g in mu.grids:
        m = weigh(g.centres, g.masses)
        if np.any(np.isinf(m)):
            m = np.where(np.isinf(m), 0.0, m)
        grids.append(GridComponent(g.origin, g.spacing, m, g.order))
    keep = np.isfinite(atom_masses)
    return MeasureRepr(mu.atom_locs[keep], atom_masses[keep], tuple(grids), None, divergent, mu.snap_error)


def shift(mu: MeasureRepr, s: float) -> MeasureRepr:
    """Translate every location by ``s >= 0``."""
    if s < 0:
        raise ValueError("shift must be nonnegative")
    grids = tuple(replace(g, origin=g.origin + s) for g in mu.grids)
    leb = None if mu.lebesgue is None else (mu.lebesgue[0], mu.lebesgue[1] + s)
    return replace(mu, atom_locs=mu.atom_locs + s, grids=grids, lebesgue=leb)


@dataclass(frozen=True)
class CMReport:
    passed: bool
    max_order: int
    order: int | None = None
    index: int | None = None
    worst: float = 0.0  # most negative normalized signed difference seen

    def __bool__(self):
        return self.passed


def cm_finite_difference_test(values: Sequence[float], max_order: int, tol: float = 1e-7) -> CMReport:
    """Alternating-difference check for complete monotonicity of sampled data.

    For equally spaced samples ``f(x_i)`` checks ``(-1)^k Delta^k f(x_i) >= -tol * s_k``
    for ``k = 1..max_order``, where ``s_k`` is the largest ``|Delta^k f|`` in the row.
    Passing is evidence of complete monotonicity, not a proof.
    """
    f = np.asarray(values, dtype=float)
    if f.ndim != 1 or f.size < max_order + 1:
        raise ValueError(f"need at least {max_order + 1} samples for order {max_order}")
    if np.any(~np.isfinite(f)):
        raise ValueError("samples must be finite")
    worst = 0.0
    d = f.copy()
    for k in range(1, max_order + 1):
        d = np.diff(d)
        signed = (-1) ** k * d
        scale = np.max(np.abs(d))
        if scale == 0:
            continue
        ratio = signed / scale
        i = int(np.argmin(ratio))
        worst = min(worst, float(ratio[i]))
        if ratio[i] < -tol:
            return CMReport(False, max_order, k, i, worst)
    return CMReport(True, max_order, worst=worst)
