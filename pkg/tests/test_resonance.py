"""Resonance residuals, parameter roots, sweeps, and the dichotomy harness."""
import dataclasses
import math

import mpmath as mp
import numpy as np
import pytest

from alrlab import (
    BelowAsymptoticRegimeError,
    NoCoreError,
    PlasmonConfig,
    ResidualCurve,
    RootSearchError,
    SourceCoefficients,
    UnphysicalRootError,
    condition_lhs_coreshell,
    condition_lhs_nocore,
    critical_radius,
    denominator_residual,
    dichotomy_experiment,
    find_resonant_pair,
    loglog_slope,
    phi1,
    phi2,
    refine_condition_root,
    shell_wavenumbers,
    sweep,
)
from alrlab.resonance import sweep_point
from alrlab.specfun import asymptotic_parts, hat_log_abs

from .oracles import (
    cyl_h_ref,
    cyl_hp_ref,
    cyl_j_ref,
    cyl_jp_ref,
    sph_h_ref,
    sph_hp_ref,
    sph_j_ref,
    sph_jp_ref,
)


def to_mp(v):
    if v.is_zero:
        return mp.mpc(0)
    return mp.e ** mp.mpf(v.log_magnitude) * mp.mpc(v.phase_factor)


# tabulated lossy resonance parameters at k = 1, r_e = 1
TABLE_3D = [(1, -1.303728, 0.498620), (2, -1.237160, 0.038434),
            (3, -1.224395, 0.001203), (4, -1.190550, 0.000019)]
TABLE_2D = [(1, -0.422878, 0.782261), (2, -0.674330, 0.115866),
            (3, -0.864384, 0.006257), (4, -0.931486, 0.000143)]


# ---------------------------------------------------------------------------
# denominator residual
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("dim,rows", [(3, TABLE_3D), (2, TABLE_2D)])
def test_denominator_small_at_tabulated_pairs(dim, rows):
    for n, eps_s, delta in rows:
        res = denominator_residual(dim, n, eps_s, delta, 1.0, 1.0)
        assert abs(res) < 1e-3


def test_denominator_transparent_is_wronskian():
    # eps = 1 collapses both radial families to the same argument, leaving
    # minus the Wronskian: -i/y^2 (3D) and -2i/(pi y) (2D)
    y = 1.3
    got3 = denominator_residual(3, 3, 1.0, 0.0, y, 1.0)
    assert abs(got3 - (-1j / y ** 2)) <= 1e-12 * abs(got3)
    got2 = denominator_residual(2, 3, 1.0, 0.0, y, 1.0)
    assert abs(got2 - (-2j / (math.pi * y))) <= 1e-12 * abs(got2)


def test_denominator_argument_validation():
    with pytest.raises(ValueError):
        denominator_residual(4, 1, -1.2, 0.1, 1.0, 1.0)
    with pytest.raises(ValueError):
        denominator_residual(3, 1, -1.2, 0.1, 1.0, -1.0)
    with pytest.raises(ValueError):
        denominator_residual(3, 1, -1.2, 0.1, 0.0, 1.0)


# ---------------------------------------------------------------------------
# resonant-pair search
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("dim,rows", [(3, TABLE_3D), (2, TABLE_2D)])
def test_find_resonant_pair_reproduces_tables(dim, rows):
    for n0, eps_ref, delta_ref in rows:
        pair = find_resonant_pair(dim, n0, 1.0, 1.0)
        assert pair.mode == n0
        assert pair.iterations >= 1
        assert pair.residual_norm < 1e-10
        assert abs(pair.eps_s - eps_ref) < 1e-3
        if delta_ref < 1e-3:
            assert abs(pair.delta - delta_ref) < 0.1 * delta_ref
        else:
            assert abs(pair.delta - delta_ref) < 1e-3
        # root certification: resubstitution into the residual
        back = denominator_residual(dim, n0, pair.eps_s, pair.delta, 1.0, 1.0)
        assert abs(back) < 1e-10


def test_find_resonant_pair_with_explicit_seed():
    pair = find_resonant_pair(3, 1, 1.0, 1.0, initial=(-1.3, 0.5))
    assert abs(pair.eps_s - (-1.303728)) < 1e-3
    assert abs(pair.delta - 0.498620) < 1e-3


def test_find_resonant_pair_rejects_negative_loss():
    # deep modes have losses below double resolution; the converged root's
    # imaginary part lands at negative roundoff and must be refused
    with pytest.raises(UnphysicalRootError) as info:
        find_resonant_pair(3, 14, 1.0, 1.0)
    assert "unphysical" in str(info.value)


def test_find_resonant_pair_failure_and_validation():
    with pytest.raises(RootSearchError):
        find_resonant_pair(3, 1, 1.0, 1.0, initial=(5.0, 3.0), max_iter=1)
    with pytest.raises(ValueError):
        find_resonant_pair(4, 1, 1.0, 1.0)
    with pytest.raises(ValueError):
        find_resonant_pair(3, 0, 1.0, 1.0)


# ---------------------------------------------------------------------------
# envelope-split phi functions
# ---------------------------------------------------------------------------

def test_phi_requires_asymptotic_orders():
    for bad in (5, 19):
        with pytest.raises(BelowAsymptoticRegimeError):
            phi1(3, bad, 1.0, 1.0, 0.5 + 0.0j, 1.0 + 0.0j)
        with pytest.raises(BelowAsymptoticRegimeError):
            phi2(2, bad, 1.0, 1.0, 0.5 + 0.0j, 1.0 + 0.0j)


def test_phi_zero_weights_vanish():
    assert phi1(3, 25, 0.0, 0.0, 0.5 + 0.0j, 1.0 + 0.0j).is_zero
    assert phi2(2, 25, 0.0, 0.0, 0.5 + 0.0j, 1.0 + 0.0j).is_zero


@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("n", [20, 25, 40])
def test_phi2_matches_direct_cross_product(dim, n):
    wn = shell_wavenumbers(0.9, -1.05, 1e-6)
    b1, b2 = 0.8 - 0.3j, 1.2 + 0.5j
    r1, r2 = wn.k_shell * 1.0, 0.9
    got = to_mp(phi2(dim, n, b1, b2, r1, r2))
    if dim == 3:
        ref = (mp.mpc(b1) * sph_jp_ref(n, r1, 60) * sph_h_ref(n, r2, 60)
               - mp.mpc(b2) * sph_hp_ref(n, r2, 60) * sph_j_ref(n, r1, 60))
    else:
        ref = (mp.mpc(b1) * cyl_jp_ref(n, r1, 60) * cyl_h_ref(n, r2, 60)
               - mp.mpc(b2) * cyl_hp_ref(n, r2, 60) * cyl_j_ref(n, r1, 60))
    assert abs(got - ref) / abs(ref) < 1e-12


@pytest.mark.parametrize("dim", [2, 3])
def test_phi1_magnitude_is_correction_sized(dim):
    # the bracket carries only correction content: envelope ratio ~ 1/n
    n = 100
    r1, r2 = 0.8 + 0.0j, 1.1 + 0.0j
    v = phi1(dim, n, 1.3, 0.7, r1, r2)
    lj, _ = hat_log_abs(dim, n, r1)
    _, lh = hat_log_abs(dim, n, r2)
    ratio = math.exp(v.log_magnitude - lj - lh)
    assert 0.01 < ratio * n < 100.0


def test_phi1_engineered_bracket_cancellation():
    # weights chosen so the two bracket terms coincide algebraically
    r1, r2 = 0.5 + 0.0j, 1.2 + 0.0j
    p1 = asymptotic_parts(3, 30, r1)
    p2 = asymptotic_parts(3, 30, r2)
    b1 = p2.check_h_prime * (1.0 + p1.check_j)
    b2 = p1.check_j_prime * (1.0 + p2.check_h)
    v = phi1(3, 30, b1, b2, r1, r2)
    lj, _ = hat_log_abs(3, 30, r1)
    _, lh = hat_log_abs(3, 30, r2)
    residual = 0.0 if v.is_zero else math.exp(v.log_magnitude - lj - lh)
    assert residual < 1e-14


# ---------------------------------------------------------------------------
# admissible-wavenumber conditions
# ---------------------------------------------------------------------------

def test_nocore_condition_crosses_zero_3d():
    tpl = PlasmonConfig(dim=3, k=1.0, r_e=1.0, eps_s=-1.0 - 1.0 / 500,
                        delta=0.5 ** 500)
    curve = sweep("condition_nocore", "k", np.linspace(7.0, 9.0, 61), tpl, n0=500)
    assert len(curve.re_brackets) > 0
    assert not curve.point_errors


def test_nocore_condition_crosses_zero_2d():
    tpl = PlasmonConfig(dim=2, k=1.0, r_e=1.0, eps_s=-1.0, delta=0.5 ** 300)
    curve = sweep("condition_nocore", "k", np.linspace(7.0, 9.0, 61), tpl, n0=300)
    assert len(curve.re_brackets) > 0


def test_coreshell_condition_crosses_zero_3d():
    tpl = PlasmonConfig(dim=3, k=1.0, r_e=1.0, eps_s=-1.0 - 1.0 / 300,
                        delta=0.5 ** 300, r_i=0.5, eps_c=(1.0 + 1.0 / 300) ** 2)
    curve = sweep("condition_coreshell", "k", np.linspace(7.0, 9.0, 61),
                  tpl, n0=300)
    assert len(curve.re_brackets) > 0
    assert len(curve.near_zeros) > 0


def test_coreshell_condition_crosses_zero_2d():
    tpl = PlasmonConfig(dim=2, k=1.0, r_e=1.0, eps_s=-1.0, delta=0.5 ** 300,
                        r_i=0.5, eps_c=1.0)
    curve = sweep("condition_coreshell", "k", np.linspace(7.0, 9.0, 61),
                  tpl, n0=300)
    assert len(curve.im_brackets) > 0
    assert len(curve.near_zeros) > 0


def test_condition_validation():
    with pytest.raises(ValueError):
        condition_lhs_nocore(3, 500, 1.0, -1.0, -1.002, 1e-30)
    coreless = PlasmonConfig(dim=3, k=1.0, r_e=1.0, eps_s=-1.002, delta=1e-30)
    with pytest.raises(NoCoreError):
        condition_lhs_coreshell(3, 300, coreless)
    cored = PlasmonConfig(dim=3, k=1.0, r_e=1.0, eps_s=-1.002, delta=1e-30,
                          r_i=0.5, eps_c=1.1)
    with pytest.raises(ValueError):
        condition_lhs_coreshell(2, 300, cored)


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

def test_energy_sweep_argmax_near_tabulated_loss():
    tpl = PlasmonConfig(dim=3, k=1.0, r_e=1.0, eps_s=-1.237160, delta=1e-4)
    src = SourceCoefficients(dim=3, coeffs={2: 1.0}, support_radius=4.0)
    curve = sweep("energy", "delta", np.geomspace(1e-4, 1.0, 33), tpl, source=src)
    assert curve.argmax_at is not None
    assert 0.038434 / 2 < curve.argmax_at < 0.038434 * 2


def test_single_point_condition_sweep_has_no_brackets():
    tpl = PlasmonConfig(dim=2, k=1.0, r_e=1.0, eps_s=-1.0, delta=0.5 ** 300)
    curve = sweep("condition_nocore", "k", [8.0], tpl, n0=300)
    assert len(curve.values) == 1
    assert curve.re_brackets == ()
    assert curve.im_brackets == ()


def test_sweep_brackets_contain_refined_roots():
    tpl = PlasmonConfig(dim=2, k=1.0, r_e=1.0, eps_s=-1.0, delta=0.5 ** 300)
    grid = np.linspace(7.0, 7.5, 31)
    curve = sweep("condition_nocore", "k", grid, tpl, n0=300)
    assert curve.re_brackets
    for lo, hi in curve.re_brackets[:3]:
        root = refine_condition_root("condition_nocore", lo, hi, tpl, 300)
        assert lo <= root <= hi
        edge = max(abs(condition_lhs_nocore(2, 300, x, 1.0, -1.0, 0.5 ** 300).real)
                   for x in (lo, hi))
        at_root = abs(condition_lhs_nocore(2, 300, root, 1.0, -1.0, 0.5 ** 300).real)
        assert at_root <= 1e-6 * edge


def test_refine_condition_root_needs_sign_change():
    tpl = PlasmonConfig(dim=2, k=1.0, r_e=1.0, eps_s=-1.0, delta=0.5 ** 300)
    grid = np.linspace(7.0, 7.5, 31)
    curve = sweep("condition_nocore", "k", grid, tpl, n0=300)
    brackets = set(curve.re_brackets)
    flat = next((grid[i], grid[i + 1]) for i in range(len(grid) - 1)
                if (grid[i], grid[i + 1]) not in brackets)
    with pytest.raises(RootSearchError):
        refine_condition_root("condition_nocore", flat[0], flat[1], tpl, 300)
    with pytest.raises(ValueError):
        refine_condition_root("energy", 7.0, 7.5, tpl, 300)
    with pytest.raises(ValueError):
        refine_condition_root("condition_nocore", 7.5, 7.0, tpl, 300)


def test_sweep_determinism_and_point_equivalence():
    tpl = PlasmonConfig(dim=3, k=1.0, r_e=1.0, eps_s=-1.237160, delta=0.038434)
    grid = np.linspace(0.5, 1.5, 11)
    a = sweep("denominator", "k", grid, tpl, n0=2)
    b = sweep("denominator", "k", grid, tpl, n0=2)
    assert a == b
    for x, v in zip(a.grid, a.values):
        pv, err = sweep_point("denominator", "k", x, tpl, n0=2)
        assert err is None
        assert pv == v


def test_sweep_records_point_errors():
    tpl = PlasmonConfig(dim=3, k=1.0, r_e=1.0, eps_s=-1.237160, delta=0.038434)
    curve = sweep("denominator", "delta", [-0.5, 0.5], tpl, n0=2)
    assert len(curve.point_errors) == 1
    assert curve.point_errors[0][0] == 0
    assert math.isnan(curve.values[0].real)
    assert not math.isnan(curve.values[1].real)


def test_sweep_argument_validation():
    tpl = PlasmonConfig(dim=3, k=1.0, r_e=1.0, eps_s=-1.2, delta=0.1)
    src = SourceCoefficients(dim=3, coeffs={1: 1.0}, support_radius=4.0)
    with pytest.raises(ValueError):
        sweep("resonance", "k", [1.0], tpl, n0=1)
    with pytest.raises(ValueError):
        sweep("denominator", "r_e", [1.0], tpl, n0=1)
    with pytest.raises(ValueError):
        sweep("denominator", "k", [], tpl, n0=1)
    with pytest.raises(ValueError):
        sweep("denominator", "k", [1.0], tpl)
    with pytest.raises(ValueError):
        sweep("energy", "k", [1.0], tpl)
    with pytest.raises(ValueError):
        ResidualCurve(parameter_name="k", grid=(1.0, 2.0), values=(1 + 0j,),
                      metadata={})
    with pytest.raises(ValueError):
        ResidualCurve(parameter_name="k", grid=(2.0, 1.0),
                      values=(1 + 0j, 2 + 0j), metadata={})


# ---------------------------------------------------------------------------
# critical radius and the dichotomy harness
# ---------------------------------------------------------------------------

def test_critical_radius_values():
    assert abs(critical_radius(0.5, 1.0) - math.sqrt(2.0)) < 1e-12
    assert critical_radius(0.25, 1.0) == pytest.approx(2.0, abs=1e-12)
    assert critical_radius(1.0, 1.0) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(NoCoreError):
        critical_radius(0.0, 1.0)
    with pytest.raises(ValueError):
        critical_radius(1.5, 1.0)
    with pytest.raises(ValueError):
        critical_radius(-0.5, 1.0)


def test_dichotomy_validation():
    tpl = PlasmonConfig(dim=2, k=1.0, r_e=1.0, eps_s=-1.0, delta=0.5 ** 20,
                        r_i=0.5, eps_c=1.0)
    r_star = critical_radius(0.5, 1.0)
    with pytest.raises(NoCoreError):
        dichotomy_experiment(dataclasses.replace(tpl, r_i=0.0, eps_c=1.0),
                             [20], 1.2, 1.6)
    with pytest.raises(ValueError):
        dichotomy_experiment(tpl, [], 1.2, 1.6)
    with pytest.raises(ValueError):
        dichotomy_experiment(tpl, [40, 20], 1.2, 1.6)
    with pytest.raises(ValueError):
        dichotomy_experiment(tpl, [10], 1.2, 1.6)
    # the dichotomy is open on both sides of the critical radius
    with pytest.raises(ValueError):
        dichotomy_experiment(tpl, [20], r_star, 1.6)
    with pytest.raises(ValueError):
        dichotomy_experiment(tpl, [20], 1.2, r_star)
    with pytest.raises(ValueError):
        dichotomy_experiment(tpl, [20], 1.6, 1.2)


def test_dichotomy_report_shape_single_mode():
    tpl = PlasmonConfig(dim=2, k=1.0, r_e=1.0, eps_s=-1.0, delta=0.5 ** 20,
                        r_i=0.5, eps_c=1.0)
    report = dichotomy_experiment(tpl, [20], 1.2, 1.6)
    assert report.dim == 2
    assert report.n0_values == (20,)
    assert report.critical == pytest.approx(math.sqrt(2.0), abs=1e-12)
    assert report.bound_radius == pytest.approx(2.0, abs=1e-12)
    assert len(report.k_values) == 1 and report.k_values[0] > 0.0
    assert len(report.inside_energies) == 1
    assert len(report.outside_energies) == 1
    assert report.inside_energies[0] > 0.0
    assert report.outside_energies[0] > 0.0
    # localization: the inside-source drive dissipates far more energy
    assert report.inside_energies[0] > 1e3 * report.outside_energies[0]
    assert len(report.inside_probes) == len(report.outside_probes) == 1


# ---------------------------------------------------------------------------
# slope fitting
# ---------------------------------------------------------------------------

def test_loglog_slope_recovers_power_law():
    xs = [1.0, 2.0, 4.0, 8.0, 16.0]
    ys = [3.0 * x ** -1.7 for x in xs]
    assert loglog_slope(xs, ys) == pytest.approx(-1.7, abs=1e-12)


def test_loglog_slope_validation():
    with pytest.raises(ValueError):
        loglog_slope([1.0], [2.0])
    with pytest.raises(ValueError):
        loglog_slope([1.0, 2.0], [2.0])
    with pytest.raises(ValueError):
        loglog_slope([1.0, -2.0], [2.0, 3.0])
    with pytest.raises(ValueError):
        loglog_slope([1.0, 2.0], [0.0, 3.0])
    with pytest.raises(ValueError):
        loglog_slope([2.0, 2.0], [3.0, 4.0])
