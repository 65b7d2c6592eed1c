import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmpassage.levy import JumpDensity, LevyExponent
from cmpassage.measures import MeasureRepr, convolve
from cmpassage.model import ModelSpec
from cmpassage.montecarlo import (
    FptdEstimate,
    _inv_speed,
    estimate_fptd,
    estimate_fptd_grid,
    path_generator,
    sample_positions,
    simulate_path,
    simulation_arrays,
)


def moments(psi):
    """Mean and variance of xi_1 - xi_0 from the exponent: -psi'(0+) and psi''(0+)."""
    sizes, rates = np.asarray(psi.jump_sizes), np.asarray(psi.jump_rates)
    mean = -psi.drift + float(np.sum(sizes * rates * (sizes > 1)))
    var = psi.gaussian + float(np.sum(sizes**2 * rates))
    return mean, var


@pytest.mark.parametrize(
    "psi",
    [
        LevyExponent(gaussian=1.0),
        LevyExponent(drift=0.5, gaussian=1.0),
        LevyExponent(drift=2.0, jump_sizes=(1.0,), jump_rates=(1.0,)),
        LevyExponent(drift=1.0, gaussian=0.5, jump_sizes=(0.3, 2.0), jump_rates=(2.0, 0.25)),
    ],
)
def test_calibration_moments(psi):
    n, horizon = 20000, 1.0
    pos = sample_positions(ModelSpec(psi), 0.0, horizon, n, 1e-3, seed=3)
    mean, var = moments(psi)
    assert abs(pos.mean() - mean * horizon) < 4 * math.sqrt(var * horizon / n)
    # variance of the sample variance, Gaussian approximation plus slack
    assert pos.var(ddof=1) == pytest.approx(var * horizon, rel=0.05)


def test_calibration_brownian_is_standard():
    pos = sample_positions(ModelSpec(LevyExponent(gaussian=1.0)), 0.0, 2.0, 20000, 1e-2, seed=11)
    z = pos / math.sqrt(2.0)
    assert abs(np.mean(z**3)) < 0.1
    assert abs(np.mean(z**4) - 3.0) < 0.2


def test_density_jumps_positive_and_compensated():
    # Lambda(dr) = e^{-r} dr: mean of xi_1 is -c + int_1^inf r e^{-r} dr
    psi = LevyExponent(drift=1.0, gaussian=0.25, jump_density=JumpDensity(lambda r: math.exp(-r), 0.0))
    sim = simulation_arrays(ModelSpec(psi), 1e-3)
    assert np.all(np.diff(sim.dens_r) > 0) and sim.dens_r[0] > 0
    assert np.all(np.diff(sim.dens_cum) >= 0)
    pos = sample_positions(ModelSpec(psi), 0.0, 1.0, 20000, 1e-3, seed=5)
    expected = -1.0 + 2.0 * math.exp(-1.0)
    var = 0.25 + 2.0
    assert abs(pos.mean() - expected) < 4 * math.sqrt(var / 20000)


def test_inverse_speed_matches_laplace():
    g = MeasureRepr.from_atoms([0.5, 1.0], [1.0, 2.0]) + convolve(
        MeasureRepr.uniform(0.0, 1.0, 0.1), MeasureRepr.uniform(1.0, 2.0, 0.1)
    )
    g = g + MeasureRepr.lebesgue_measure(0.5, 3.0)
    sim = simulation_arrays(ModelSpec(LevyExponent(gaussian=1.0), gamma=g, interval_lower=0.0))
    for y in (0.1, 0.7, 2.0, 9.0):
        got = _inv_speed(
            y, sim.g_atom_z, sim.g_atom_m, sim.leb_rate, sim.leb_start, sim.g_ptr,
            sim.g_spacing, sim.g_order, sim.g_lattice, sim.g_mass,
        )  # fmt: skip
        assert got == pytest.approx(float(g.laplace(y)), rel=1e-12)


def test_drift_only_external_time():
    # psi = lam (xi_u = x0 - u), A(y) = e^y: F = int_0^{x0-l} exp(-(x0-u)) du
    m = ModelSpec(LevyExponent(drift=1.0), gamma=MeasureRepr.dirac(1.0))
    x0, l = 1.0, 0.0
    st = simulate_path(m, x0, l, 1e-5, 10.0, path_generator(0, 0))
    assert st.passed and not st.killed
    assert st.elapsed_internal == pytest.approx(x0 - l, abs=1e-9)
    assert st.elapsed_external == pytest.approx(math.exp(-l) - math.exp(-x0), abs=1e-6)
    assert st.position == pytest.approx(l, abs=1e-9)


def test_brownian_recurrent():
    m = ModelSpec(LevyExponent(gaussian=1.0))
    est = estimate_fptd(m, 0.0, 1.0, 0.0, 2000, 1e-3, seed=1, u_budget=1e6)
    # P(T > 1e6) = P(|N| < 1e-3) < 1e-3
    assert est.n_passed >= 0.99 * est.n_paths
    assert est.mean == est.n_passed / est.n_paths
    assert est.n_killed == 0


def test_killing_dominates():
    m = ModelSpec(LevyExponent(gaussian=1.0), killing=1e3)
    est = estimate_fptd(m, 1.0, 1.0, 0.0, 500, 1e-3, seed=2)
    assert est.n_killed / est.n_paths > 0.99


def test_levy_closed_form_small_n():
    m = ModelSpec(LevyExponent(gaussian=1.0))
    est = estimate_fptd(m, 0.5, 1.0, 0.0, 5000, 1e-3, seed=4)
    assert abs(est.mean - math.exp(-1.0)) <= 3 * est.std_error


def test_determinism_and_seed_dependence():
    m = ModelSpec(LevyExponent(drift=0.5, gaussian=1.0, jump_sizes=(0.4,), jump_rates=(1.0,)))
    a = estimate_fptd(m, 1.0, 1.0, 0.0, 300, 1e-3, seed=9)
    b = estimate_fptd(m, 1.0, 1.0, 0.0, 300, 1e-3, seed=9)
    c = estimate_fptd(m, 1.0, 1.0, 0.0, 300, 1e-3, seed=10)
    assert a == b
    assert a.to_dict() == b.to_dict()
    assert a.mean != c.mean


def test_path_streams_independent_of_batch():
    # path i uses the same stream whatever n is
    m = ModelSpec(LevyExponent(gaussian=1.0))
    a = estimate_fptd_grid(m, [1.0], 1.0, [0.0], 100, 1e-3, seed=5)[0]
    b = estimate_fptd_grid(m, [1.0], 1.0, [0.0], 200, 1e-3, seed=5)[0]
    st = [simulate_path(m, 1.0, 0.0, 1e-3, 1e4, path_generator(5, i), t_budget=-math.log(1e-6)) for i in range(100)]
    vals = [math.exp(-s.elapsed_external) if s.passed else 0.0 for s in st]
    assert a.mean == pytest.approx(np.mean(vals), rel=1e-12)
    assert a.mean != b.mean


def test_grid_counts_and_ordering():
    m = ModelSpec(LevyExponent(drift=-0.5, gaussian=1.0), killing=0.1)
    res = estimate_fptd_grid(m, [0.5, 1.0, 2.0], 2.0, [0.0, 1.0, 1.5], 400, 1e-3, seed=6)
    assert [(e.q, e.level) for e in res[:3]] == [(0.5, 1.5), (0.5, 1.0), (0.5, 0.0)]
    for e in res:
        assert e.n_passed + e.n_killed + e.n_censored == e.n_paths
        assert 0.0 <= e.mean <= 1.0
    by = {(e.q, e.level): e.mean for e in res}
    for l in (0.0, 1.0, 1.5):
        assert by[(0.5, l)] >= by[(1.0, l)] >= by[(2.0, l)]
    for q in (0.5, 1.0, 2.0):
        assert by[(q, 1.5)] >= by[(q, 1.0)] >= by[(q, 0.0)]


def test_censoring_reported():
    m = ModelSpec(LevyExponent(drift=-1.0, gaussian=1.0))
    est = estimate_fptd(m, 0.1, 1.0, 0.0, 200, 1e-3, seed=8, u_budget=0.5)
    assert est.n_censored > 0
    assert 0.0 < est.censor_bias <= est.n_censored / est.n_paths


def test_counts_validated():
    with pytest.raises(ValueError, match="add up"):
        FptdEstimate(1.0, 1.0, 0.0, 0.5, 0.1, 10, 5, 1, 1, 1e-3, 0)


@pytest.mark.parametrize(
    "kwargs,match",
    [
        ({"l": 1.0}, "below"),
        ({"l": 2.0}, "below"),
        ({"n": 50}, "n >= 100"),
    ],
)
def test_invalid_requests(kwargs, match):
    m = ModelSpec(LevyExponent(gaussian=1.0))
    args = {"q": 1.0, "x": 1.0, "l": 0.0, "n": 100, "dt": 1e-3, "seed": 0} | kwargs
    with pytest.raises(ValueError, match=match):
        estimate_fptd(m, **args)


def test_level_on_closed_boundary_rejected(csbp_model):
    with pytest.raises(ValueError, match="interior"):
        estimate_fptd(csbp_model, 1.0, 1.0, 0.0, 100, 1e-3, seed=0)


@settings(max_examples=15)
@given(st.floats(0.1, 3.0), st.floats(1.1, 4.0), st.integers(0, 2**31))
def test_property_q_monotone_pathwise(q, factor, seed):
    m = ModelSpec(LevyExponent(drift=0.2, gaussian=1.0, jump_sizes=(0.5,), jump_rates=(0.5,)), killing=0.2)
    lo, hi = estimate_fptd_grid(m, [q, q * factor], 1.0, [0.0], 100, 1e-2, seed)
    assert hi.mean <= lo.mean
    assert 0.0 <= hi.mean <= 1.0
