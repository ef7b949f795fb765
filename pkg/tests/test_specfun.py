"""Scaled radial function tables against independent mpmath references."""
import cmath
import math

import mpmath as mp
import pytest

from alrlab.errors import HankelOriginError, NonFiniteArgumentError
from alrlab.specfun import (
    asymptotic_parts,
    cyl_h1,
    cyl_h_table,
    cyl_j,
    cyl_j_table,
    hat_log_abs,
    log_odd_double_factorial,
    shell_wavenumbers,
    sph_h_table,
    sph_j_table,
    spherical_h1,
    spherical_j,
)

from .oracles import (
    cyl_h_ref,
    cyl_hp_ref,
    cyl_j_ref,
    cyl_jp_ref,
    log_abs,
    sph_h_ref,
    sph_hp_ref,
    sph_j_ref,
    sph_jp_ref,
)

ORDERS = (0, 1, 2, 5, 10, 25, 50, 100, 200, 500)
POINTS = (0.05, 0.5, 1.0, 8.0, 20.0,
          0.3 - 0.2j, 8.0 - 1.0j, 2e-3 - 1e-3j)


def _scaled_close(value, ref, rtol: float) -> bool:
    """Compare a ScaledComplex against an mpmath value in log scale."""
    if ref == 0:
        return value.is_zero
    lr = log_abs(ref)
    if abs(value.log_magnitude - lr) > rtol * max(1.0, abs(lr)):
        return False
    pr = mp.exp(mp.mpc(0, 1) * mp.arg(ref))
    return abs(value.phase_factor - complex(pr)) < 10.0 * rtol


@pytest.mark.parametrize("z", POINTS)
def test_spherical_values_match_series_reference(z):
    n_max = max(ORDERS)
    jt = sph_j_table(n_max, [z])
    ht = sph_h_table(n_max, [z])
    for n in ORDERS:
        assert _scaled_close(jt.value(n), sph_j_ref(n, z, 50), 1e-11)
        assert _scaled_close(jt.deriv(n), sph_jp_ref(n, z, 50), 1e-10)
        assert _scaled_close(ht.value(n), sph_h_ref(n, z, 50), 1e-11)
        assert _scaled_close(ht.deriv(n), sph_hp_ref(n, z, 50), 1e-10)


@pytest.mark.parametrize("z", POINTS)
def test_cylindrical_values_match_series_reference(z):
    n_max = max(ORDERS)
    jt = cyl_j_table(n_max, [z])
    ht = cyl_h_table(n_max, [z])
    for n in ORDERS:
        assert _scaled_close(jt.value(n), cyl_j_ref(n, z, 50), 1e-11)
        assert _scaled_close(jt.deriv(n), cyl_jp_ref(n, z, 50), 1e-10)
        assert _scaled_close(ht.value(n), cyl_h_ref(n, z, 50), 1e-11)
        assert _scaled_close(ht.deriv(n), cyl_hp_ref(n, z, 50), 1e-10)


@pytest.mark.parametrize("z", POINTS)
def test_spherical_wronskian(z):
    # j h' - j' h = i / z^2
    n_max = max(ORDERS)
    jt = sph_j_table(n_max, [z])
    ht = sph_h_table(n_max, [z])
    target = 1j / (complex(z) * complex(z))
    for n in ORDERS:
        w = jt.value(n) * ht.deriv(n) - jt.deriv(n) * ht.value(n)
        assert abs(w.to_complex() - target) <= 1e-11 * abs(target)


@pytest.mark.parametrize("z", POINTS)
def test_cylindrical_wronskian(z):
    # J H' - J' H = 2i / (pi z)
    n_max = max(ORDERS)
    jt = cyl_j_table(n_max, [z])
    ht = cyl_h_table(n_max, [z])
    target = 2j / (math.pi * complex(z))
    for n in ORDERS:
        w = jt.value(n) * ht.deriv(n) - jt.deriv(n) * ht.value(n)
        assert abs(w.to_complex() - target) <= 1e-11 * abs(target)


@pytest.mark.parametrize("z", (0.7, 3.0, 1.0 - 0.5j))
def test_order_zero_outgoing_derivative_from_minimal_table(z):
    # a table built only up to order 0 must still return h0' = -h1 (and the
    # cylindrical analogue), not a silent zero
    ht = sph_h_table(0, [z])
    assert _scaled_close(ht.deriv(0), sph_hp_ref(0, z, 40), 1e-11)
    ct = cyl_h_table(0, [z])
    assert _scaled_close(ct.deriv(0), cyl_hp_ref(0, z, 40), 1e-11)


def test_scalar_wrappers_agree_with_tables():
    z = 1.3 - 0.4j
    v, d = spherical_j(7, z)
    assert _scaled_close(v, sph_j_ref(7, z, 40), 1e-11)
    assert _scaled_close(d, sph_jp_ref(7, z, 40), 1e-11)
    v, d = spherical_h1(7, z)
    assert _scaled_close(v, sph_h_ref(7, z, 40), 1e-11)
    v, d = cyl_j(-7, z)  # negative order folds to |n|
    assert _scaled_close(v, cyl_j_ref(7, z, 40), 1e-11)
    v, d = cyl_h1(7, z)
    assert _scaled_close(v, cyl_h_ref(7, z, 40), 1e-11)


def test_origin_behavior():
    v, d = spherical_j(0, 0.0)
    assert v.to_complex() == 1.0 and d.to_complex() == 0.0
    v, d = spherical_j(3, 0.0)
    assert v.is_zero
    v, d = cyl_j(0, 0.0)
    assert v.to_complex() == 1.0 and d.to_complex() == 0.0
    v, d = cyl_j(1, 0.0)
    assert v.is_zero and abs(d.to_complex() - 0.5) < 1e-15
    with pytest.raises(HankelOriginError):
        spherical_h1(2, 0.0)
    with pytest.raises(HankelOriginError):
        cyl_h1(2, 0.0)


def test_argument_validation():
    with pytest.raises(NonFiniteArgumentError):
        spherical_j(1, complex(float("nan"), 0.0))
    with pytest.raises(NonFiniteArgumentError):
        cyl_h_table(3, [1.0, complex(0.0, float("inf"))])
    with pytest.raises(ValueError):
        spherical_j(-1, 1.0)


def test_log_odd_double_factorial():
    # 1!! = 1, 3!! = 3, 5!! = 15, 7!! = 105, 9!! = 945
    for m, v in ((1, 1.0), (3, 3.0), (5, 15.0), (7, 105.0), (9, 945.0)):
        assert abs(log_odd_double_factorial(m) - math.log(v)) < 1e-13
    # large argument against lgamma: (2m+1)!! = (2m+1)! / (2^m m!)
    m = 400
    ref = (math.lgamma(2 * m + 2) - m * math.log(2.0) - math.lgamma(m + 1))
    assert abs(log_odd_double_factorial(2 * m + 1) - ref) < 1e-9 * ref


@pytest.mark.parametrize("dim", (3, 2))
def test_envelope_correction_reconstructs_values(dim):
    t = 0.8 - 0.1j
    for n in (2, 5, 20, 100):
        parts = asymptotic_parts(dim, n, t)
        if dim == 3:
            jt, ht = sph_j_table(n, [t]), sph_h_table(n, [t])
            dlog_j, dlog_h = n / t, -(n + 1) / t
        else:
            jt, ht = cyl_j_table(n, [t]), cyl_h_table(n, [t])
            dlog_j, dlog_h = n / t, -n / t
        j_rec = parts.hat_j * (1.0 + parts.check_j)
        h_rec = parts.hat_h * (1.0 + parts.check_h)
        assert abs((j_rec / jt.value(n)).to_complex() - 1.0) < 1e-10
        assert abs((h_rec / ht.value(n)).to_complex() - 1.0) < 1e-10
        jp_rec = (parts.hat_j * dlog_j * (1.0 + parts.check_j)
                  + parts.hat_j * parts.check_j_prime)
        hp_rec = (parts.hat_h * dlog_h * (1.0 + parts.check_h)
                  + parts.hat_h * parts.check_h_prime)
        assert abs((jp_rec / jt.deriv(n)).to_complex() - 1.0) < 1e-9
        assert abs((hp_rec / ht.deriv(n)).to_complex() - 1e0) < 1e-9


@pytest.mark.parametrize("dim", (3, 2))
def test_corrections_shrink_with_order(dim):
    t = 0.5
    small = asymptotic_parts(dim, 20, t)
    large = asymptotic_parts(dim, 200, t)
    assert abs(large.check_j) < abs(small.check_j)
    assert abs(large.check_h) < abs(small.check_h)
    assert abs(large.check_j) < 1e-3
    assert abs(large.check_h) < 1e-3


def test_hat_log_abs_matches_pair():
    for dim in (3, 2):
        lj, lh = hat_log_abs(dim, 12, 0.3)
        parts = asymptotic_parts(dim, 12, 0.3)
        assert lj == parts.hat_j.log_magnitude
        assert lh == parts.hat_h.log_magnitude


def test_shell_wavenumbers_branch():
    wn = shell_wavenumbers(2.0, -1.5, 1e-3)
    assert wn.k_shell.real > 0.0 and wn.k_shell.imag < 0.0
    sq = wn.sqrt_shell
    assert abs(sq * sq - complex(-1.5, 1e-3)) < 1e-15
    # lossless negative permittivity sits on the boundary of the quadrant
    wn0 = shell_wavenumbers(2.0, 2.25, 0.0)
    assert abs(wn0.k_shell - 2.0 / 1.5) < 1e-15
    with pytest.raises(ValueError):
        shell_wavenumbers(0.0, -1.0, 0.1)
    with pytest.raises(ValueError):
        shell_wavenumbers(1.0, -1.0, -0.1)
    with pytest.raises(ValueError):
        shell_wavenumbers(1.0, 0.0, 0.0)
    with pytest.raises(NonFiniteArgumentError):
        shell_wavenumbers(1.0, float("nan"), 0.1)
