"""Acceptance criteria, each at its stated tolerance.

Run with ``pytest tests/test_acceptance.py``; one PASS/FAIL line per
criterion is printed in the terminal summary.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.special import i0, k1

from cmpassage.cli import main, solve_one
from cmpassage.config import RunConfig, speed_from_expression
from cmpassage.levy import LevyExponent, psi_inverse
from cmpassage.measures import MeasureRepr, cm_finite_difference_test
from cmpassage.model import ModelSpec
from cmpassage.montecarlo import estimate_fptd_grid
from cmpassage.scale import (
    CONVERGED,
    DIVERGED,
    build_mq,
    closed_form_csbp,
    closed_form_levy,
    esscher_reduce,
    fptd_curve,
    fptd_laplace,
    lattice_mq,
    residual_allowance,
    residual_nu_q,
    tilted_model,
    volterra_density,
)

CONFIGS = Path(__file__).parent.parent / "configs"
N_MC = 100_000
Z = 3.0

BROWNIAN = ModelSpec(LevyExponent(gaussian=1.0))
LATTICE = ModelSpec(LevyExponent(gaussian=1.0), gamma=MeasureRepr.dirac(1.0))
CSBP = ModelSpec(LevyExponent(gaussian=2.0), gamma=MeasureRepr.lebesgue_measure(), interval_lower=0.0, lower_included=True)

C1_QS = (0.5, 1.0, 2.0)
C1_X = 2.0
C1_LEVELS = (1.5, 1.0, 0.0)


def zscore(value, est):
    return (est.mean - value) / est.std_error


@pytest.fixture(scope="module")
def brownian_mc():
    """Criterion 1 Monte Carlo at dt and dt/2 (shared with criterion 8)."""
    out = {}
    for dt in (1e-3, 5e-4):
        t = time.time()
        out[dt] = (estimate_fptd_grid(BROWNIAN, C1_QS, C1_X, C1_LEVELS, N_MC, dt, seed=42), time.time() - t)
    return out


@pytest.mark.slow
def test_criterion_1_levy_closed_form(brownian_mc, criterion):
    worst_err, worst_z = 0.0, 0.0
    ests, secs = brownian_mc[1e-3]
    for q in C1_QS:
        sm = closed_form_levy(BROWNIAN, q)
        for l in C1_LEVELS:
            exact = math.exp(-math.sqrt(2 * q) * (C1_X - l))
            worst_err = max(worst_err, abs(fptd_laplace(sm, C1_X, l) - exact))
    for e in ests:
        exact = math.exp(-math.sqrt(2 * e.q) * (C1_X - e.level))
        worst_z = max(worst_z, abs(zscore(exact, e)))
    ok = worst_err <= 1e-12 and worst_z <= Z and len(ests) == 9
    criterion(1, ok, f"max |solver - exact| = {worst_err:.2e} (<= 1e-12), max |z| = {worst_z:.2f} over 9 cells, MC {secs:.0f}s")
    assert worst_err <= 1e-12
    assert worst_z <= Z


@pytest.mark.slow
def test_criterion_2_lattice(criterion):
    lat = lattice_mq(LATTICE, 1.0, 60)
    w = lat.measure.atom_masses
    # product formula q^k / prod_{l<=k} psi(l alpha) with psi(l) = l^2 / 2
    formula = np.array([math.exp(-sum(math.log(l * l / 2.0) for l in range(1, k + 1))) for k in range(41)])
    rel_formula = float(np.max(np.abs(w[:41] / formula - 1.0)))
    series = build_mq(LATTICE, 1.0, [0.0])
    n = series.measure.atom_masses.size
    rel_series = float(np.max(np.abs(series.measure.atom_masses / w[:n] - 1.0)))
    t = time.time()
    ests = estimate_fptd_grid(LATTICE, [1.0], 1.0, [0.5, 0.0], N_MC, 1e-3, seed=7, u_budget=1e8)
    secs = time.time() - t
    zs = [zscore(fptd_laplace(lat, 1.0, e.level), e) for e in ests]
    bessel = lambda x: i0(2.0 * math.sqrt(2.0 * math.exp(-x)))
    oracle = max(abs(fptd_laplace(lat, 1.0, l) / (bessel(1.0) / bessel(l)) - 1.0) for l in (0.5, 0.0))
    ok = rel_formula <= 1e-12 and rel_series <= 1e-10 and series.status == CONVERGED and max(map(abs, zs)) <= Z
    criterion(
        2,
        ok,
        f"weights rel err {rel_formula:.1e} (<= 1e-12, k <= 40), build_mq vs lattice {rel_series:.1e} (<= 1e-10, k <= {n - 1}), "
        f"z at x-l=0.5,1: {zs[0]:+.2f}, {zs[1]:+.2f}, Bessel check {oracle:.1e}, MC {secs:.0f}s",
    )
    assert rel_formula <= 1e-12
    assert series.status == CONVERGED and rel_series <= 1e-10
    assert all(abs(z) <= Z for z in zs)


def _ratio_spread(vol, cf):
    z = vol.measure.grids[0].centres
    keep = (z >= 0.2) & (z <= 5.0)
    r = vol.measure.grids[0].masses[keep] / cf.measure.grids[0].masses[: z.size][keep]
    return float(r.max() / r.min() - 1.0)


@pytest.mark.slow
def test_criterion_3_csbp(criterion):
    h = 1e-3
    cf = closed_form_csbp(CSBP, 1.0, 6.0, h)
    spread = _ratio_spread(volterra_density(CSBP, 1.0, 6.0, h), cf)
    # Richardson confirmation: plain solutions converge at first order, so
    # the extrapolation is justified
    plain_h = _ratio_spread(volterra_density(CSBP, 1.0, 6.0, h, richardson=False), cf)
    cf2 = closed_form_csbp(CSBP, 1.0, 6.0, h / 2)
    plain_h2 = _ratio_spread(volterra_density(CSBP, 1.0, 6.0, h / 2, richardson=False), cf2)
    order = math.log2(plain_h / plain_h2)
    full = closed_form_csbp(CSBP, 1.0, 40.0, h, theta_ref=0.5)
    value = fptd_laplace(full, 1.0, 0.5)
    t = time.time()
    (est,) = estimate_fptd_grid(CSBP, [1.0], 1.0, [0.5], N_MC, 1e-3, seed=7, u_budget=1e8)
    secs = time.time() - t
    z = zscore(value, est)
    bessel = math.sqrt(1.0) * k1(2.0) / (math.sqrt(0.5) * k1(2.0 * math.sqrt(0.5)))
    ok = spread <= 1e-3 and 0.8 <= order <= 1.2 and abs(z) <= Z
    criterion(
        3,
        ok,
        f"density-ratio spread {spread:.1e} (<= 1e-3; plain h {plain_h:.1e}, h/2 {plain_h2:.1e}, order {order:.2f}), "
        f"fptd(1,0.5) = {value:.7f} (Bessel {bessel:.7f}), z = {z:+.2f}, MC {secs:.0f}s",
    )
    assert spread <= 1e-3
    assert 0.8 <= order <= 1.2
    assert abs(z) <= Z


def test_criterion_4_residual(criterion):
    gamma = MeasureRepr.dirac(1.0) + MeasureRepr.uniform(1.0, 2.0, 1e-2)
    model = ModelSpec(LevyExponent(gaussian=1.0), gamma=gamma)
    sm = build_mq(model, 1.0, [0.0])
    thetas = np.linspace(0.0, 5.0, 8)
    res = residual_nu_q(model, 1.0, sm, thetas)
    allow = residual_allowance(sm, thetas)
    ok = sm.status == CONVERGED and res <= allow
    criterion(4, ok, f"status {sm.status}, k = {sm.k_truncation}, residual {res:.1e} <= allowance {allow:.1e}")
    assert sm.status == CONVERGED
    assert res <= allow


def test_criterion_5_cm(criterion):
    lines, ok = [], True
    for name in ("brownian", "lattice", "csbp", "mixed"):
        cfg = RunConfig.load(CONFIGS / f"{name}.yaml")
        model = cfg.model.build()
        l = min(cfg.task.level)
        ys = l + 5.0 / 64 * np.arange(1, 65)
        inv = cm_finite_difference_test(model.inverse_speed(ys), 6)
        curves = []
        for q in cfg.task.q:
            sm = solve_one(model, q, cfg.task, l)
            assert sm.status != DIVERGED
            curves.append(cm_finite_difference_test(fptd_curve(sm, l, ys), 6).passed)
        ok &= inv.passed and all(curves)
        lines.append(f"{name}: 1/A {'pass' if inv.passed else 'fail'}, fptd {sum(curves)}/{len(curves)}")
    sin = speed_from_expression("1 + sin(y)**2")
    neg = cm_finite_difference_test(1.0 / sin(5.0 / 64 * np.arange(1, 65)), 6)
    ok &= not neg.passed
    lines.append(f"1+sin^2 control: 1/A {'pass' if neg.passed else 'fail'} at order {neg.order}")
    criterion(5, ok, "; ".join(lines))
    assert ok


def test_criterion_6_esscher(criterion):
    worst, exact_locs = 0.0, True
    for psi, p in ((LevyExponent(drift=-1.0, gaussian=2.0), 0.0), (LevyExponent(gaussian=1.0), 2.0)):
        model = ModelSpec(psi, killing=p, gamma=MeasureRepr.dirac(1.0))
        r = psi_inverse(psi, p)
        direct = build_mq(model, 1.0, [0.0])
        inner = build_mq(tilted_model(model), 1.0, [0.0])
        reduced = esscher_reduce(model, 1.0, [0.0])
        for x, l in ((1.0, 0.0), (2.0, 0.5), (3.0, 0.0)):
            worst = max(worst, abs(fptd_laplace(reduced, x, l) / fptd_laplace(direct, x, l) - 1.0))
        n = min(direct.measure.atom_locs.size, inner.measure.atom_locs.size)
        exact_locs &= bool(np.array_equal(direct.measure.atom_locs[:n], inner.measure.atom_locs[:n] + r))
    ok = worst <= 1e-10 and exact_locs
    criterion(6, ok, f"max fptd ratio mismatch {worst:.1e} (<= 1e-10), locations shifted exactly: {exact_locs}")
    assert worst <= 1e-10
    assert exact_locs


def test_criterion_7_divergence(criterion):
    levy = build_mq(BROWNIAN, 1.0, [0.0])
    csbp = build_mq(CSBP, 1.0, [0.1], spacing=1e-2, z_max=20.0)
    cf_levy = fptd_laplace(closed_form_levy(BROWNIAN, 1.0), 1.0, 0.0)
    cf_csbp = fptd_laplace(closed_form_csbp(CSBP, 1.0, 40.0, 1e-3, theta_ref=0.5), 1.0, 0.5)
    bessel = k1(2.0) / (math.sqrt(0.5) * k1(2.0 * math.sqrt(0.5)))
    valid = abs(cf_levy - math.exp(-math.sqrt(2.0))) <= 1e-12 and abs(cf_csbp / bessel - 1.0) <= 1e-6
    ok = levy.status != CONVERGED and csbp.status != CONVERGED and valid
    criterion(
        7,
        ok,
        f"gamma=delta_0: {levy.status}; Lebesgue: {csbp.status} (k = {csbp.k_truncation}); "
        f"closed forms {cf_levy:.7f}, {cf_csbp:.7f}",
    )
    assert levy.status != CONVERGED and csbp.status != CONVERGED
    assert valid


@pytest.mark.slow
def test_criterion_8_determinism(brownian_mc, criterion, tmp_path):
    cfg = tmp_path / "det.yaml"
    cfg.write_text((CONFIGS / "brownian.yaml").read_text().replace("n: 100000", "n: 10000"))
    outs = []
    for k in range(2):
        assert main(["mc", "--config", str(cfg), "--out", str(tmp_path / f"r{k}"), "--quiet"]) == 0
        outs.append((tmp_path / f"r{k}" / "mc.csv").read_bytes())
    identical = outs[0] == outs[1]
    coarse, fine = brownian_mc[1e-3][0], brownian_mc[5e-4][0]
    worst = max(abs(a.mean - b.mean) / math.hypot(a.std_error, b.std_error) for a, b in zip(coarse, fine))
    ok = identical and worst < Z
    criterion(8, ok, f"byte-identical CSV: {identical}; max dt-halving shift {worst:.2f} combined std errors (< 3)")
    assert identical
    assert worst < Z
