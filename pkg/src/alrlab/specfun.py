"""Scaled radial special functions and asymptotic normalizations.

Spherical and cylindrical Bessel/Hankel families at complex argument, for
orders up to several hundred, with results carried as log-magnitude plus unit
phase (:class:`~alrlab.scaled.ScaledComplex`).  Regular families use Miller's
downward recurrence anchored at closed-form (or order-0/1 library) values;
outgoing families use upward recurrence from closed-form anchors, which is the
stable direction there.

Derivatives come from the order-mixing recurrences

    j_n'(z) = j_{n-1}(z) - ((n+1)/z) j_n(z),     J_n'(z) = J_{n-1}(z) - (n/z) J_n(z),

and identically for the outgoing families.

The module also provides the large-order reference factors ("hats") and the
multiplicative corrections relative to them ("checks"), plus the lossy-shell
wavenumber with its branch bookkeeping.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.special as _sp

from .errors import BranchViolationError, HankelOriginError, NonFiniteArgumentError
from .scaled import SC_ZERO, ScaledComplex

__all__ = [
    "WaveNumbers",
    "AsymptoticParts",
    "BesselTable",
    "spherical_j",
    "spherical_h1",
    "cyl_j",
    "cyl_h1",
    "sph_j_table",
    "sph_h_table",
    "cyl_j_table",
    "cyl_h_table",
    "asymptotic_parts",
    "hat_log_abs",
    "shell_wavenumbers",
    "log_odd_double_factorial",
]

_NEG_INF = float("-inf")
# beyond this |Im z| the order-0 anchors overflow double range
_IM_LIMIT = 690.0
_RENORM_HI = 1e150
_RENORM_LO = 1e-150


def log_odd_double_factorial(m: int) -> float:
    """log((m)!!) for odd m >= -1, via the factorial split (2n±1)!! = (2n±1)!/(2^n n!)."""
    if m == -1:
        return 0.0
    if m < -1 or m % 2 == 0:
        raise ValueError(f"need odd m >= -1, got {m}")
    n = (m - 1) // 2
    return math.lgamma(m + 1) - n * math.log(2.0) - math.lgamma(n + 1)


def _check_argument(z: complex) -> complex:
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise NonFiniteArgumentError(z)
    if abs(z.imag) > _IM_LIMIT:
        raise NonFiniteArgumentError(z)
    return z


def _as_points(z) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
    if not np.all(np.isfinite(arr)):
        raise NonFiniteArgumentError(arr[~np.isfinite(arr)][0])
    if np.any(np.abs(arr.imag) > _IM_LIMIT):
        raise NonFiniteArgumentError(arr[np.abs(arr.imag) > _IM_LIMIT][0])
    return arr


def _log_phase(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split complex array into (log magnitude, unit phase), zeros -> (-inf, 0)."""
    a = np.abs(values)
    with np.errstate(divide="ignore"):
        logs = np.log(a)
    phases = np.where(a > 0.0, values / np.where(a > 0.0, a, 1.0), 0.0)
    return logs, phases


def _renorm_phases(phases: np.ndarray) -> np.ndarray:
    a = np.abs(phases)
    return np.where(a > 0.0, phases / np.where(a > 0.0, a, 1.0), 0.0)


def _scaled_sub(la, pa, lb, pb):
    """Elementwise a - b on (log, phase) arrays."""
    base = np.maximum(la, lb)
    dead = ~np.isfinite(base)
    safe = np.where(dead, 0.0, base)
    with np.errstate(invalid="ignore"):
        m = pa * np.exp(np.where(dead, _NEG_INF, la - safe)) \
            - pb * np.exp(np.where(dead, _NEG_INF, lb - safe))
    a = np.abs(m)
    with np.errstate(divide="ignore"):
        logs = np.where(a > 0.0, safe + np.log(np.where(a > 0.0, a, 1.0)), _NEG_INF)
    phases = np.where(a > 0.0, m / np.where(a > 0.0, a, 1.0), 0.0)
    return logs, phases


class BesselTable(NamedTuple):
    """Values and derivatives for orders 0..n_max at a batch of arguments.

    Arrays have shape (n_max + 1, npts); zeros are (-inf, 0) pairs.
    """

    log: np.ndarray
    phase: np.ndarray
    dlog: np.ndarray
    dphase: np.ndarray

    def value(self, n: int, j: int = 0) -> ScaledComplex:
        if self.phase[n, j] == 0.0:
            return SC_ZERO
        return ScaledComplex.from_log_polar(self.log[n, j], self.phase[n, j])

    def deriv(self, n: int, j: int = 0) -> ScaledComplex:
        if self.dphase[n, j] == 0.0:
            return SC_ZERO
        return ScaledComplex.from_log_polar(self.dlog[n, j], self.dphase[n, j])


def _miller_margin(n_eff: int) -> int:
    # enough decaying-regime steps to wash out the arbitrary seed to < 1 ulp
    return 20 + int(3.0 * math.sqrt(max(n_eff, 1)))


def _downward_regular(n_max: int, z: np.ndarray, half_step: bool) -> tuple[np.ndarray, np.ndarray]:
    """Raw (unanchored) downward recurrence table for j_n (half_step) or J_n."""
    npts = z.size
    zmax = float(np.max(np.abs(z)))
    n_eff = max(n_max, int(math.ceil(zmax)))
    n_start = n_eff + _miller_margin(n_eff)

    scale = np.zeros(npts)
    m_hi = np.zeros(npts, dtype=complex)  # order q + 1
    m_lo = np.ones(npts, dtype=complex)   # order q
    logs = np.full((n_max + 1, npts), _NEG_INF)
    phases = np.zeros((n_max + 1, npts), dtype=complex)

    inv_z = 1.0 / z
    for q in range(n_start, 0, -1):
        if q <= n_max:
            lq, pq = _log_phase(m_lo)
            logs[q] = scale + lq
            phases[q] = pq
        coef = (2 * q + 1) if half_step else (2 * q)
        m_new = coef * inv_z * m_lo - m_hi
        m_hi = m_lo
        m_lo = m_new
        a = np.abs(m_lo)
        mask = (a > _RENORM_HI) | ((a > 0.0) & (a < _RENORM_LO))
        if mask.any():
            f = a[mask]
            m_lo[mask] /= f
            m_hi[mask] /= f
            scale[mask] += np.log(f)
    l0, p0 = _log_phase(m_lo)
    logs[0] = scale + l0
    phases[0] = p0
    return logs, phases


def _anchor(logs, phases, closed0: np.ndarray, closed1: np.ndarray) -> None:
    """Rescale a raw downward table so orders 0 and 1 match closed values."""
    if not (np.all(np.isfinite(closed0)) and np.all(np.isfinite(closed1))):
        raise NonFiniteArgumentError("anchor overflow")
    l0, p0 = _log_phase(closed0)
    l1, p1 = _log_phase(closed1)
    use1 = np.abs(closed1) > np.abs(closed0)
    # the raw value at the chosen order must be nonzero; orders interlace, so
    # at least one of the two anchors is well away from a zero
    raw_dead = np.where(use1, phases[1] == 0.0, phases[0] == 0.0)
    use1 = np.where(raw_dead, ~use1, use1)
    lc = np.where(use1, l1, l0)
    pc = np.where(use1, p1, p0)
    lr = np.where(use1, logs[1], logs[0])
    pr = np.where(use1, phases[1], phases[0])
    if np.any(pr == 0.0):
        raise NonFiniteArgumentError("downward recurrence lost the anchor orders")
    corr_log = lc - lr
    corr_phase = pc / pr
    logs += corr_log[None, :]
    np.multiply(phases, corr_phase[None, :], out=phases)
    phases[:] = _renorm_phases(phases)
    # an exactly-zero closed anchor (argument at a zero of that order) leaves
    # the other anchor in charge; nothing else to do


def _derivative_rows(logs, phases, z, shift: int) -> tuple[np.ndarray, np.ndarray]:
    """d_n = f_{n-1} - ((n + shift)/z) f_n for n >= 1, d_0 = -f_1."""
    n_max = logs.shape[0] - 1
    dlog = np.empty_like(logs)
    dphase = np.empty_like(phases)
    dlog[0] = logs[1] if n_max >= 1 else _NEG_INF
    dphase[0] = -phases[1] if n_max >= 1 else 0.0
    if n_max >= 1:
        orders = np.arange(1, n_max + 1, dtype=float)[:, None]
        coef = (orders + shift) / z[None, :]
        cl = np.log(np.abs(coef))
        cp = coef / np.abs(coef)
        dlog[1:], dphase[1:] = _scaled_sub(
            logs[:-1], phases[:-1], logs[1:] + cl, phases[1:] * cp
        )
    return dlog, dphase


def _upward_outgoing(n_max, z, log0, ph0, log1, ph1, half_step: bool):
    """Upward recurrence table for h_n (half_step) or H_n from order-0/1 seeds."""
    npts = z.size
    logs = np.full((n_max + 1, npts), _NEG_INF)
    phases = np.zeros((n_max + 1, npts), dtype=complex)
    logs[0], phases[0] = log0, ph0
    if n_max == 0:
        return logs, phases
    logs[1], phases[1] = log1, ph1
    if n_max == 1:
        return logs, phases

    base = np.maximum(log0, log1)
    m_prev = ph0 * np.exp(log0 - base)
    m_cur = ph1 * np.exp(np.where(np.isfinite(log1), log1 - base, _NEG_INF))
    scale = base.copy()
    inv_z = 1.0 / z
    for q in range(1, n_max):
        coef = (2 * q + 1) if half_step else (2 * q)
        m_new = coef * inv_z * m_cur - m_prev
        m_prev = m_cur
        m_cur = m_new
        a = np.abs(m_cur)
        mask = (a > _RENORM_HI) | ((a > 0.0) & (a < _RENORM_LO))
        if mask.any():
            f = a[mask]
            m_cur[mask] /= f
            m_prev[mask] /= f
            scale[mask] += np.log(f)
        lq, pq = _log_phase(m_cur)
        logs[q + 1] = scale + lq
        phases[q + 1] = pq
    return logs, phases


# ---------------------------------------------------------------------------
# table builders
# ---------------------------------------------------------------------------

def sph_j_table(n_max: int, z) -> BesselTable:
    """Regular spherical family j_0..j_{n_max} with derivatives at points z."""
    pts = _as_points(z)
    zero = pts == 0.0
    if zero.any():
        logs = np.full((n_max + 1, pts.size), _NEG_INF)
        phases = np.zeros((n_max + 1, pts.size), dtype=complex)
        dlog = logs.copy()
        dphase = phases.copy()
        logs[0, zero] = 0.0
        phases[0, zero] = 1.0
        if n_max >= 1:
            dlog[1, zero] = math.log(1.0 / 3.0)
            dphase[1, zero] = 1.0
        if (~zero).any():
            sub = sph_j_table(n_max, pts[~zero])
            logs[:, ~zero] = sub.log
            phases[:, ~zero] = sub.phase
            dlog[:, ~zero] = sub.dlog
            dphase[:, ~zero] = sub.dphase
        return BesselTable(logs, phases, dlog, dphase)

    if n_max == 0:
        # the downward engine needs two orders; extend and trim
        full = sph_j_table(1, pts)
        dlog = full.log[1:2].copy()
        dphase = -full.phase[1:2]
        return BesselTable(full.log[:1], full.phase[:1], dlog, dphase)

    logs, phases = _downward_regular(n_max, pts, half_step=True)
    sin_z = np.sin(pts)
    cos_z = np.cos(pts)
    closed0 = sin_z / pts
    closed1 = sin_z / pts**2 - cos_z / pts
    _anchor(logs, phases, closed0, closed1)
    dlog, dphase = _derivative_rows(logs, phases, pts, shift=1)
    return BesselTable(logs, phases, dlog, dphase)


def sph_h_table(n_max: int, z) -> BesselTable:
    """Outgoing spherical family h_0..h_{n_max} with derivatives at points z."""
    pts = _as_points(z)
    if np.any(pts == 0.0):
        raise HankelOriginError()
    # h_0 = -i e^{iz}/z and h_1 = -e^{iz}(z + i)/z^2, split analytically so the
    # e^{iz} exponent never overflows
    log_e = -pts.imag
    ph_e = np.exp(1j * pts.real)
    abs_z = np.abs(pts)
    log0 = log_e - np.log(abs_z)
    ph0 = _renorm_phases(-1j * ph_e * np.conj(pts) / abs_z)
    zpi = pts + 1j
    abs_zpi = np.abs(zpi)
    with np.errstate(divide="ignore"):
        log1 = np.where(
            abs_zpi > 0.0, log_e + np.log(np.where(abs_zpi > 0.0, abs_zpi, 1.0)), _NEG_INF
        ) - 2.0 * np.log(abs_z)
    ph1 = np.where(
        abs_zpi > 0.0,
        -ph_e * (zpi / np.where(abs_zpi > 0.0, abs_zpi, 1.0)) * (np.conj(pts) / abs_z) ** 2,
        0.0,
    )
    ph1 = _renorm_phases(ph1)
    # order 1 is always built: the order-0 derivative row needs it
    logs, phases = _upward_outgoing(max(n_max, 1), pts, log0, ph0, log1, ph1,
                                    half_step=True)
    dlog, dphase = _derivative_rows(logs, phases, pts, shift=1)
    top = n_max + 1
    return BesselTable(logs[:top], phases[:top], dlog[:top], dphase[:top])


def cyl_j_table(n_max: int, z) -> BesselTable:
    """Regular cylindrical family J_0..J_{n_max} with derivatives at points z."""
    pts = _as_points(z)
    zero = pts == 0.0
    if zero.any():
        logs = np.full((n_max + 1, pts.size), _NEG_INF)
        phases = np.zeros((n_max + 1, pts.size), dtype=complex)
        dlog = logs.copy()
        dphase = phases.copy()
        logs[0, zero] = 0.0
        phases[0, zero] = 1.0
        if n_max >= 1:
            # J_1'(0) = 1/2; all other derivatives vanish at the origin
            dlog[1, zero] = math.log(0.5)
            dphase[1, zero] = 1.0
        if (~zero).any():
            sub = cyl_j_table(n_max, pts[~zero])
            logs[:, ~zero] = sub.log
            phases[:, ~zero] = sub.phase
            dlog[:, ~zero] = sub.dlog
            dphase[:, ~zero] = sub.dphase
        return BesselTable(logs, phases, dlog, dphase)

    if n_max == 0:
        full = cyl_j_table(1, pts)
        dlog = full.log[1:2].copy()
        dphase = -full.phase[1:2]
        return BesselTable(full.log[:1], full.phase[:1], dlog, dphase)

    logs, phases = _downward_regular(n_max, pts, half_step=False)
    closed0 = np.asarray(_sp.jv(0, pts), dtype=complex)
    closed1 = np.asarray(_sp.jv(1, pts), dtype=complex)
    _anchor(logs, phases, closed0, closed1)
    dlog, dphase = _derivative_rows(logs, phases, pts, shift=0)
    return BesselTable(logs, phases, dlog, dphase)


def cyl_h_table(n_max: int, z) -> BesselTable:
    """Outgoing cylindrical family H_0..H_{n_max} with derivatives at points z."""
    pts = _as_points(z)
    if np.any(pts == 0.0):
        raise HankelOriginError()
    seed0 = np.asarray(_sp.hankel1(0, pts), dtype=complex)
    seed1 = np.asarray(_sp.hankel1(1, pts), dtype=complex)
    if not (np.all(np.isfinite(seed0)) and np.all(np.isfinite(seed1))):
        raise NonFiniteArgumentError("outgoing anchor overflow")
    log0, ph0 = _log_phase(seed0)
    log1, ph1 = _log_phase(seed1)
    # order 1 is always built: the order-0 derivative row needs it
    logs, phases = _upward_outgoing(max(n_max, 1), pts, log0, ph0, log1, ph1,
                                    half_step=False)
    dlog, dphase = _derivative_rows(logs, phases, pts, shift=0)
    top = n_max + 1
    return BesselTable(logs[:top], phases[:top], dlog[:top], dphase[:top])


# ---------------------------------------------------------------------------
# scalar API
# ---------------------------------------------------------------------------

def spherical_j(n: int, z: complex) -> tuple[ScaledComplex, ScaledComplex]:
    """(j_n(z), j_n'(z)) as scaled values; valid for any finite z."""
    if n < 0:
        raise ValueError(f"spherical order must be >= 0, got {n}")
    z = _check_argument(z)
    t = sph_j_table(n, [z])
    return t.value(n), t.deriv(n)


def spherical_h1(n: int, z: complex) -> tuple[ScaledComplex, ScaledComplex]:
    """(h_n(z), h_n'(z)) as scaled values; z = 0 is rejected."""
    if n < 0:
        raise ValueError(f"spherical order must be >= 0, got {n}")
    z = _check_argument(z)
    if z == 0:
        raise HankelOriginError()
    t = sph_h_table(n, [z])
    return t.value(n), t.deriv(n)


def cyl_j(n: int, z: complex) -> tuple[ScaledComplex, ScaledComplex]:
    """(J_n(z), J_n'(z)); negative orders fold to |n| per the modal convention."""
    n = abs(int(n))
    z = _check_argument(z)
    t = cyl_j_table(n, [z])
    return t.value(n), t.deriv(n)


def cyl_h1(n: int, z: complex) -> tuple[ScaledComplex, ScaledComplex]:
    """(H_n(z), H_n'(z)); negative orders fold to |n|, z = 0 is rejected."""
    n = abs(int(n))
    z = _check_argument(z)
    if z == 0:
        raise HankelOriginError()
    t = cyl_h_table(n, [z])
    return t.value(n), t.deriv(n)


# ---------------------------------------------------------------------------
# large-order reference factors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AsymptoticParts:
    """Large-order reference factors and multiplicative corrections at one t.

    hat_j, hat_h are the leading small-argument/large-order envelopes; the
    checks are value/hat - 1.  The primed checks follow the quotient rule
    (value' * hat - value * hat') / hat**2, so

        value' = hat' * (1 + check) + hat * check'.
    """

    dim: int
    n: int
    t: complex
    hat_j: ScaledComplex
    hat_h: ScaledComplex
    check_j: complex
    check_h: complex
    check_j_prime: complex
    check_h_prime: complex


def _hat_pair(dim: int, n: int, t: complex) -> tuple[ScaledComplex, ScaledComplex]:
    lt = math.log(abs(t))
    at = cmath.phase(t)
    if dim == 3:
        lj = n * lt - log_odd_double_factorial(2 * n + 1)
        pj = cmath.exp(1j * n * at)
        lh = log_odd_double_factorial(2 * n - 1) - (n + 1) * lt
        ph = cmath.exp(-1j * ((n + 1) * at + 0.5 * math.pi))
    else:
        lj = n * lt - n * math.log(2.0) - math.lgamma(n + 1)
        pj = cmath.exp(1j * n * at)
        if n < 1:
            raise ValueError("2D outgoing envelope needs n >= 1")
        lh = n * math.log(2.0) + math.lgamma(n) - math.log(math.pi) - n * lt
        ph = cmath.exp(-1j * (n * at + 0.5 * math.pi))
    return (
        ScaledComplex.from_log_polar(lj, pj),
        ScaledComplex.from_log_polar(lh, ph),
    )


def hat_log_abs(dim: int, n: int, t: complex) -> tuple[float, float]:
    """(log|hat_j|, log|hat_h|) without building scaled objects."""
    hj, hh = _hat_pair(dim, n, t)
    return hj.log_magnitude, hh.log_magnitude


def asymptotic_parts(dim: int, n: int, t: complex) -> AsymptoticParts:
    """Reference envelopes and corrections for order n at argument t.

    Requires t != 0 and, in 2D, n >= 1 (the outgoing envelope has a factorial
    pole at n = 0).
    """
    if dim not in (2, 3):
        raise ValueError(f"dim must be 2 or 3, got {dim}")
    t = _check_argument(t)
    if t == 0:
        raise ValueError("reference envelope vanishes at t = 0")
    if dim == 2 and n < 1:
        raise ValueError("2D envelopes need n >= 1")
    if n < 0:
        raise ValueError(f"order must be >= 0, got {n}")

    hat_j, hat_h = _hat_pair(dim, n, t)
    if dim == 3:
        jt = sph_j_table(n, [t])
        ht = sph_h_table(n, [t])
        dlog_j = n / t          # hat_j'/hat_j
        dlog_h = -(n + 1) / t   # hat_h'/hat_h
    else:
        jt = cyl_j_table(n, [t])
        ht = cyl_h_table(n, [t])
        dlog_j = n / t
        dlog_h = -n / t

    rj = (jt.value(n) / hat_j).to_complex()
    rh = (ht.value(n) / hat_h).to_complex()
    rjp = (jt.deriv(n) / hat_j).to_complex()
    rhp = (ht.deriv(n) / hat_h).to_complex()
    return AsymptoticParts(
        dim=dim,
        n=n,
        t=t,
        hat_j=hat_j,
        hat_h=hat_h,
        check_j=rj - 1.0,
        check_h=rh - 1.0,
        check_j_prime=rjp - rj * dlog_j,
        check_h_prime=rhp - rh * dlog_h,
    )


# ---------------------------------------------------------------------------
# shell wavenumber
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WaveNumbers:
    """Background and shell wavenumbers for permittivity eps_s + i delta."""

    k: float
    sqrt_shell: complex
    k_shell: complex


def shell_wavenumbers(k: float, eps_s: float, delta: float) -> WaveNumbers:
    """Principal-branch shell wavenumber k / sqrt(eps_s + i delta).

    For delta > 0 the result must lie strictly in the fourth quadrant
    (Re > 0, Im < 0); the lossless limit delta = 0 relaxes both constraints to
    non-strict.  Violations raise rather than propagate a wrong branch.
    """
    if not (math.isfinite(k) and k > 0.0):
        raise ValueError(f"wavenumber must be positive and finite, got {k}")
    if not math.isfinite(eps_s):
        raise NonFiniteArgumentError(eps_s)
    if not (math.isfinite(delta) and delta >= 0.0):
        raise ValueError(f"loss parameter must be >= 0 and finite, got {delta}")
    if eps_s == 0.0 and delta == 0.0:
        raise ValueError("shell permittivity must be nonzero")
    root = cmath.sqrt(complex(eps_s, delta))
    k1 = k / root
    if delta > 0.0:
        if not (k1.real > 0.0 and k1.imag < 0.0):
            raise BranchViolationError(k1)
    else:
        if not (k1.real >= 0.0 and k1.imag <= 0.0):
            raise BranchViolationError(k1)
    return WaveNumbers(k=k, sqrt_shell=root, k_shell=k1)
