"""The input pair ``(psi - p, A)`` with ``A = 1 / laplace(gamma)`` on the state interval."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .levy import LevyExponent, eval_psi, psi_inverse
from .measures import MeasureRepr


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Time-changed, possibly killed, spectrally positive Levy process.

    Parameters
    ----------
    psi : LevyExponent
        Laplace exponent of the underlying process (no killing).
    killing : float
        Killing rate ``p >= 0``.
    gamma : MeasureRepr
        Representing measure of ``1/A``: ``A(y) = 1 / laplace(gamma, y)``.
    interval_lower : float
        ``inf I``; ``-inf`` for the whole line.
    lower_included : bool
        Whether ``inf I`` belongs to ``I``.
    """

    psi: LevyExponent
    killing: float = 0.0
    gamma: MeasureRepr = None
    interval_lower: float = -math.inf
    lower_included: bool = False

    def __post_init__(self):
        if self.gamma is None:
            object.__setattr__(self, "gamma", MeasureRepr.dirac(0.0))
        if self.killing < 0:
            raise ValueError("killing rate must be nonnegative")
        if self.gamma.is_zero or self.gamma.divergent:
            raise ValueError("gamma must be a non-zero, non-divergent measure")
        if self.interval_lower == -math.inf and self.lower_included:
            raise ValueError("-inf cannot belong to the interval")
        # membership of gamma in M_{I interior}, checked at sample points
        for y in self.sample_points():
            if not np.isfinite(self.gamma.laplace(y)):
                raise ValueError(f"laplace(gamma) is infinite at {y:g}: gamma is not in M_I")

    def sample_points(self) -> np.ndarray:
        lo = self.interval_lower
        if lo == -math.inf:
            return np.array([-10.0, -1.0, 0.0, 1.0, 10.0])
        return lo + np.array([1e-3, 1e-2, 0.1, 1.0, 10.0])

    @property
    def base(self) -> float:
        """``psi^{-1}(p)``."""
        return psi_inverse(self.psi, self.killing)

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.lower_included:
            return x >= self.interval_lower
        return x > self.interval_lower

    def in_interior(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) > self.interval_lower

    def inverse_speed(self, y):
        """``1/A(y) = laplace(gamma, y)``."""
        return self.gamma.laplace(y)

    def speed(self, y):
        """``A(y)``."""
        return 1.0 / self.gamma.laplace(y)


def boundary_membership(model: ModelSpec, decades: int = 14, cauchy_tol: float = 1e-8) -> str:
    """Heuristic test of whether ``inf I`` should belong to ``I``.

    Probes ``int_{psi^{-1}(0)+1}^{Lmax} dlam / (lam A(inf I + 1/lam) psi(lam))``
    decade by decade.  Returns ``"included"`` when the last decade increments
    fall below ``cauchy_tol``, ``"excluded"`` when they stop shrinking (partial
    integrals growing at least log-linearly), ``"inconclusive"`` otherwise.
    """
    low = model.interval_lower
    if low == -math.inf:
        raise ValueError("boundary test needs a finite lower end")
    lam0 = psi_inverse(model.psi, 0.0) + 1.0

    def integrand(s):
        # lam = exp(s), dlam/lam = ds
        lam = math.exp(s)
        return model.gamma.laplace(low + 1.0 / lam) / eval_psi(model.psi, lam)

    incs = []
    for k in range(decades):
        a = math.log(lam0) + k * math.log(10.0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, _ = integrate.quad(integrand, a, a + math.log(10.0), epsrel=1e-10, limit=200)
        incs.append(val)
    tail = incs[-3:]
    if all(v < cauchy_tol for v in tail[-2:]):
        return "included"
    if all(tail[i + 1] >= 0.5 * tail[i] for i in range(len(tail) - 1)):
        return "excluded"
    return "inconclusive"
