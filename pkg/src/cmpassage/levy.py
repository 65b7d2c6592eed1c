"""Laplace exponents of spectrally positive Levy processes.

Convention (compensated at jump size 1)::

    psi(lam) = c*lam + (sigma2/2)*lam**2
               + int_(0,inf) (exp(-lam*r) - 1 + lam*r*1{r <= 1}) Lambda(dr)

so that ``E[exp(-lam*(xi_u - xi_0))] = exp(u*psi(lam))``.  Any other cutoff
is a reparametrization of ``c``.  Killing is kept outside the exponent.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


class BracketError(RuntimeError):
    """A root could not be bracketed within the search budget."""


QUAD_RTOL = 1e-10


def _compensated(x):
    """``exp(-x) - 1 + x`` without cancellation for small ``x``."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-3
    series = x * x * (0.5 - x / 6.0 + x * x / 24.0 - x**3 / 120.0)
    return np.where(small, series, np.expm1(-x) + x)


def _quad(fun, a, b, what: str) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(fun, a, b, epsrel=QUAD_RTOL, epsabs=1e-300, limit=500)
    if not np.isfinite(val) or err > max(QUAD_RTOL * abs(val), 1e-14):
        raise QuadratureError(f"{what}: achieved abs error {err:.3g} on value {val:.6g} (rtol {QUAD_RTOL:g})")
    return val


@dataclass(frozen=True)
class JumpDensity:
    """Levy density on (0, inf), ``density(r) = O(r**(-1-exponent))`` at 0+.

    ``exponent < 2`` is required for a Levy measure; ``exponent < 1`` means
    bounded variation of the small jumps.
    """

    density: Callable[[float], float]
    exponent: float = 0.0

    def __post_init__(self):
        if not self.exponent < 2:
            raise ValueError("jump density must be integrable against min(1, r^2): need exponent < 2")


@dataclass(frozen=True, eq=False)
class LevyExponent:
    """Laplace exponent ``psi`` of a spectrally positive Levy process (no killing).

    Parameters
    ----------
    drift : float
        Linear coefficient ``c``.
    gaussian : float
        Gaussian coefficient ``sigma^2 >= 0``.
    jump_sizes, jump_rates : tuple of float
        Atoms of the Levy measure.
    jump_density : JumpDensity, optional
        Absolutely continuous part of the Levy measure.
    """

    drift: float = 0.0
    gaussian: float = 0.0
    jump_sizes: tuple = ()
    jump_rates: tuple = ()
    jump_density: JumpDensity | None = None
    _sizes: np.ndarray = field(init=False, repr=False)
    _rates: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        sizes = np.asarray(self.jump_sizes, dtype=float).ravel()
        rates = np.asarray(self.jump_rates, dtype=float).ravel()
        if sizes.shape != rates.shape:
            raise ValueError("jump_sizes and jump_rates must have equal length")
        if np.any(sizes <= 0) or np.any(rates <= 0):
            raise ValueError("jump sizes and rates must be positive")
        if self.gaussian < 0:
            raise ValueError("gaussian coefficient must be nonnegative")
        object.__setattr__(self, "jump_sizes", tuple(sizes.tolist()))
        object.__setattr__(self, "jump_rates", tuple(rates.tolist()))
        object.__setattr__(self, "_sizes", sizes)
        object.__setattr__(self, "_rates", rates)
        if self.is_subordinator():
            raise ValueError("psi is the exponent of a subordinator (nondecreasing paths); excluded")

    # -- evaluation ---------------------------------------------------------
    def __call__(self, lam):
        return eval_psi(self, lam)

    def small_jump_mean(self) -> float:
        """``int_(0,1] r Lambda(dr)``; ``inf`` for unbounded variation."""
        total = float(np.sum(self._sizes * self._rates * (self._sizes <= 1)))
        if self.jump_density is not None:
            if self.jump_density.exponent >= 1:
                return np.inf
            dens = self.jump_density.density
            total += _quad(lambda r: r * dens(r), 0.0, 1.0, "small-jump mean")
        return total

    def is_subordinator(self) -> bool:
        if self.gaussian > 0:
            return False
        lin = self.drift + self.small_jump_mean()
        # bounded variation: psi(lam) = lin*lam - int (1 - e^{-lam r}) Lambda(dr), -> +inf iff lin > 0
        return not lin > 0

    def is_drift_only(self) -> bool:
        return self.gaussian == 0 and self._sizes.size == 0 and self.jump_density is None


def eval_psi(psi: LevyExponent, lam):
    """Evaluate ``psi`` at ``lam >= 0`` (scalar or array).

    Atoms are summed exactly; a jump density is integrated with adaptive
    quadrature split at ``r = 1``.
    """
    lam_arr = np.asarray(lam, dtype=float)
    if np.any(lam_arr < 0):
        raise ValueError("psi is evaluated on [0, inf)")
    out = psi.drift * lam_arr + 0.5 * psi.gaussian * lam_arr**2
    if psi._sizes.size:
        x = lam_arr[..., None] * psi._sizes
        small = psi._sizes <= 1
        jumps = np.where(small, _compensated(x), np.expm1(-x))
        out = out + np.sum(psi._rates * jumps, axis=-1)
    if psi.jump_density is not None:
        dens = psi.jump_density.density
        flat = np.atleast_1d(lam_arr).ravel()
        vals = np.empty(flat.shape)
        for i, l in enumerate(flat):
            if l == 0:
                vals[i] = 0.0
                continue
            inner = _quad(lambda r: dens(r) * float(_compensated(l * r)), 0.0, 1.0, f"psi({l:g}) small jumps")
            outer = _quad(lambda r: dens(r) * math.expm1(-l * r), 1.0, np.inf, f"psi({l:g}) large jumps")
            vals[i] = inner + outer
        out = out + vals.reshape(lam_arr.shape)
    return float(out) if np.ndim(out) == 0 else out


def psi_inverse(psi: LevyExponent, u: float, p: float = 0.0, lam_max: float = 1e12) -> float:
    """Right-continuous inverse ``inf{s >= 0 : psi(s) - p > u}``.

    ``{s : psi(s) <= p + u}`` is an interval ``[0, r]`` by convexity; ``r`` is
    found by doubling then bisection down to floating-point resolution.
    """
    level = u + p
    if level < 0:
        raise ValueError("psi_inverse needs u + p >= 0")
    lo, hi = 0.0, 1.0
    while eval_psi(psi, hi) <= level:
        lo, hi = hi, 2.0 * hi
        if hi > lam_max:
            raise BracketError(f"psi(lam) <= {level:g} up to lam_max={lam_max:g}")
    while True:
        if hi < 1e-14:
            return lo
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return lo
        if eval_psi(psi, mid) <= level:
            lo = mid
        else:
            hi = mid


def esscher(psi: LevyExponent, p: float) -> LevyExponent:
    """Tilted exponent ``lam -> psi(r + lam) - p`` with ``r = psi_inverse(p)``.

    Returned as a Levy triplet: ``Lambda'(dx) = exp(-r x) Lambda(dx)``,
    ``sigma2' = sigma2`` and ``c' = c + sigma2 r + int_(0,1] x (1 - exp(-r x)) Lambda(dx)``.
    """
    if p < 0:
        raise ValueError("killing rate must be nonnegative")
    r = psi_inverse(psi, p)
    if r == 0.0:
        return psi
    sizes, rates = psi._sizes, psi._rates
    drift = psi.drift + psi.gaussian * r
    drift += float(np.sum(rates * sizes * (sizes <= 1) * -np.expm1(-r * sizes)))
    density = None
    if psi.jump_density is not None:
        dens = psi.jump_density.density
        drift += _quad(lambda x: dens(x) * x * -math.expm1(-r * x), 0.0, 1.0, "Esscher drift")
        density = JumpDensity(lambda x: dens(x) * math.exp(-r * x), psi.jump_density.exponent)
    return LevyExponent(drift, psi.gaussian, tuple(sizes), tuple(rates * np.exp(-r * sizes)), density)


def explosion_safe(psi: LevyExponent, p: float, tol: float = 1e-10) -> bool:
    """Explosion is a.s. precluded: ``p > 0`` or ``p == 0 == psi^{-1}(0)``."""
    if p > 0:
        return True
    return psi_inverse(psi, 0.0) <= tol


def argmin_psi(psi: LevyExponent) -> float:
    """Minimizer of the convex ``psi`` on ``[0, psi^{-1}(0)]``."""
    r = psi_inverse(psi, 0.0)
    if r == 0.0:
        return 0.0
    res = optimize.minimize_scalar(
        lambda s: eval_psi(psi, s), bounds=(0.0, r), method="bounded", options={"xatol": 1e-12}
    )
    return float(res.x)
