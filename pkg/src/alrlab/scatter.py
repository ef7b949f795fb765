"""Closed-form modal solutions of the radial Helmholtz transmission problems.

A radial scatterer (optional core, lossy shell, unit background) driven by a
source whose incident potential is a regular radial series is solved mode by
mode: the transmission conditions at the material interfaces reduce to a 2x2
(no core) or 4x4 (core-shell) linear system per mode whose solution is known
in closed form.  Coefficients are carried as :class:`ScaledComplex` since the
individual radial factors at order several hundred leave double range long
before the physically meaningful ratios do.

The closed forms subtract nearly equal products near resonance.  Every
assembled sum here tracks the magnitude of its largest term; when the computed
sum has lost more than eight digits to cancellation, the mode is recomputed
with mpmath at a precision adapted to the observed cancellation depth.  This
keeps resonant-mode coefficients meaningful at loss levels like
delta = rho**n0 with n0 = 60, where the modal determinant is smaller than the
double-precision noise of its own terms by many orders of magnitude.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Mapping

import mpmath as mp

from .errors import ExactModalResonanceError, NoCoreError
from .scaled import SC_ZERO, ScaledComplex
from .specfun import (
    WaveNumbers,
    cyl_h_table,
    cyl_j_table,
    shell_wavenumbers,
    sph_h_table,
    sph_j_table,
)

__all__ = [
    "PlasmonConfig",
    "SourceCoefficients",
    "ModeCoefficients",
    "ModalSolution",
    "solve",
    "solve_nocore",
    "solve_coreshell",
    "point_source_coefficients",
    "truncation_order",
]

_NEG_INF = float("-inf")
# relative size below which a sum is considered cancellation-dominated and the
# mode is redone in extended precision; 4 tolerated digits keeps double-path
# forward error near 1e-11, comfortably inside every crosscheck tolerance
_CANCEL_FLOOR = 1e-4
_MP_DPS_START = 50
_MP_DPS_CAP = 250
_MP_MARGIN = 25  # digits kept beyond the observed cancellation depth


# ---------------------------------------------------------------------------
# configuration and source types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlasmonConfig:
    """Radial configuration: core B_{r_i}, shell annulus up to r_e, background.

    The core has permittivity eps_c (ignored when r_i = 0), the shell
    eps_s + i delta, the background 1.  k is the background wavenumber.
    """

    dim: int
    k: float
    r_e: float
    eps_s: float
    delta: float = 0.0
    r_i: float = 0.0
    eps_c: float = 1.0

    def __post_init__(self) -> None:
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if not (math.isfinite(self.k) and self.k > 0.0):
            raise ValueError(f"wavenumber must be positive, got {self.k}")
        if not (math.isfinite(self.r_i) and self.r_i >= 0.0):
            raise ValueError(f"core radius must be >= 0, got {self.r_i}")
        if not (math.isfinite(self.r_e) and self.r_e > self.r_i):
            raise ValueError(
                f"shell radius must exceed core radius, got r_e = {self.r_e}, "
                f"r_i = {self.r_i}"
            )
        if self.r_i > 0.0 and not (math.isfinite(self.eps_c) and self.eps_c > 0.0):
            raise ValueError(f"core permittivity must be positive, got {self.eps_c}")
        if not math.isfinite(self.eps_s):
            raise ValueError(f"shell permittivity must be finite, got {self.eps_s}")
        if not (math.isfinite(self.delta) and self.delta >= 0.0):
            raise ValueError(f"loss must be >= 0, got {self.delta}")

    @property
    def has_core(self) -> bool:
        return self.r_i > 0.0

    @property
    def shell_eps(self) -> complex:
        return complex(self.eps_s, self.delta)

    def wavenumbers(self) -> WaveNumbers:
        return shell_wavenumbers(self.k, self.eps_s, self.delta)


def _as_scaled(value) -> ScaledComplex:
    if isinstance(value, ScaledComplex):
        return value
    return ScaledComplex.from_complex(value)


@dataclass(frozen=True)
class SourceCoefficients:
    """Modal coefficients beta_n of the incident regular series.

    The incident potential is sum_n beta_n f_n(kr) Y_n with f the regular
    radial family; it represents the source field inside
    |x| < support_radius.  3D indices are degrees n >= 0; 2D indices run over
    a symmetric integer window.
    """

    dim: int
    coeffs: Mapping[int, ScaledComplex]
    support_radius: float

    def __post_init__(self) -> None:
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if not (math.isfinite(self.support_radius) and self.support_radius > 0.0):
            raise ValueError(
                f"support radius must be positive, got {self.support_radius}"
            )
        clean: dict[int, ScaledComplex] = {}
        for n, v in self.coeffs.items():
            n = int(n)
            if self.dim == 3 and n < 0:
                raise ValueError(f"3D mode indices must be >= 0, got {n}")
            clean[n] = _as_scaled(v)
        object.__setattr__(self, "coeffs", clean)

    @property
    def orders(self) -> tuple[int, ...]:
        return tuple(sorted(self.coeffs))

    @property
    def n_min(self) -> int:
        return min(self.coeffs) if self.coeffs else 0

    @property
    def n_max(self) -> int:
        return max(self.coeffs) if self.coeffs else 0

    @property
    def max_abs_order(self) -> int:
        return max((abs(n) for n in self.coeffs), default=0)

    def beta(self, n: int) -> ScaledComplex:
        return self.coeffs.get(n, SC_ZERO)

    def scaled_by(self, factor: complex) -> "SourceCoefficients":
        f = _as_scaled(factor)
        return SourceCoefficients(
            self.dim,
            {n: v * f for n, v in self.coeffs.items()},
            self.support_radius,
        )

    def restricted(self, min_abs_order: int) -> "SourceCoefficients":
        """Drop every mode with |n| below the cutoff (low-mode-free source)."""
        kept = {n: v for n, v in self.coeffs.items() if abs(n) >= min_abs_order}
        return SourceCoefficients(self.dim, kept, self.support_radius)


@dataclass(frozen=True)
class ModeCoefficients:
    """Per-mode coefficients; unused slots are exact scaled zeros.

    No core: a = interior regular, (b, c) = exterior (regular, outgoing),
    d = 0, e = b, g = modal determinant.  Core-shell: a = core regular,
    (b, c) = shell (regular, outgoing), d = exterior outgoing, e = exterior
    regular, g = modal determinant.
    """

    n: int
    a: ScaledComplex
    b: ScaledComplex
    c: ScaledComplex
    d: ScaledComplex
    e: ScaledComplex
    g: ScaledComplex


@dataclass(frozen=True)
class ModalSolution:
    """Solved transmission problem: config, driving source, per-mode records."""

    config: PlasmonConfig
    source: SourceCoefficients
    modes: tuple[ModeCoefficients, ...]

    def mode(self, n: int) -> ModeCoefficients:
        for rec in self.modes:
            if rec.n == n:
                return rec
        raise KeyError(f"mode {n} not present in solution")

    @property
    def orders(self) -> tuple[int, ...]:
        return tuple(rec.n for rec in self.modes)

    @property
    def max_abs_order(self) -> int:
        return max((abs(rec.n) for rec in self.modes), default=0)


_ZERO_MODE_SLOTS = (SC_ZERO, SC_ZERO, SC_ZERO, SC_ZERO, SC_ZERO, SC_ZERO)


def _sum_tracked(terms) -> tuple[ScaledComplex, float]:
    """Sum of scaled terms plus the log magnitude of the largest term."""
    total = SC_ZERO
    top = _NEG_INF
    for t in terms:
        if not t.is_zero:
            top = max(top, t.log_magnitude)
        total = total + t
    return total, top


def _cancel_diag(total: ScaledComplex, top: float) -> float:
    """|sum| / max|term|; 1.0 for empty or exactly-zero sums (nothing lost)."""
    if total.is_zero or top == _NEG_INF:
        return 1.0
    return math.exp(min(total.log_magnitude - top, 0.0))


def _exact_wronskian(dim: int, z: complex) -> ScaledComplex:
    """W(z) = f g' - f' g for the (regular, outgoing) pair at argument z."""
    sz = ScaledComplex.from_complex(z)
    if dim == 3:
        return ScaledComplex.from_complex(1j) / (sz * sz)
    return ScaledComplex.from_complex(2j / math.pi) / sz


# ---------------------------------------------------------------------------
# extended-precision per-mode fallback
# ---------------------------------------------------------------------------

def _mp_regular(dim: int, m: int, z) -> tuple[mp.mpc, mp.mpc]:
    """(f_m(z), f_m'(z)) for the regular family at current mp precision."""
    if dim == 3:
        fac = mp.sqrt(mp.pi / (2 * z))
        fm = fac * mp.besselj(m + mp.mpf("0.5"), z)
        if m == 0:
            f1 = fac * mp.besselj(mp.mpf("1.5"), z)
            return fm, -f1
        fm1 = fac * mp.besselj(m - mp.mpf("0.5"), z)
        return fm, fm1 - (m + 1) / z * fm
    fm = mp.besselj(m, z)
    if m == 0:
        return fm, -mp.besselj(1, z)
    return fm, mp.besselj(m - 1, z) - m / z * fm


def _mp_outgoing(dim: int, m: int, z) -> tuple[mp.mpc, mp.mpc]:
    """(g_m(z), g_m'(z)) for the outgoing family at current mp precision."""
    if dim == 3:
        fac = mp.sqrt(mp.pi / (2 * z))
        gm = fac * mp.hankel1(m + mp.mpf("0.5"), z)
        if m == 0:
            g1 = fac * mp.hankel1(mp.mpf("1.5"), z)
            return gm, -g1
        gm1 = fac * mp.hankel1(m - mp.mpf("0.5"), z)
        return gm, gm1 - (m + 1) / z * gm
    gm = mp.hankel1(m, z)
    if m == 0:
        return gm, -mp.hankel1(1, z)
    return gm, mp.hankel1(m - 1, z) - m / z * gm


def _mp_wron(dim: int, z) -> mp.mpc:
    if dim == 3:
        return mp.mpc(0, 1) / (z * z)
    return mp.mpc(0, 2) / (mp.pi * z)


def _scaled_from_mp(v) -> ScaledComplex:
    if v == 0:
        return SC_ZERO
    a = abs(v)
    return ScaledComplex.from_log_polar(float(mp.log(a)), complex(v / a))


def _mp_depth(total, top) -> float:
    """Cancellation depth in digits; +inf when the sum vanished outright."""
    if top == 0:
        return 0.0
    if total == 0:
        return mp.inf
    return float(mp.log10(top / abs(total)))


def _nocore_mode_mp(dim: int, m: int, k: float, r_e: float,
                    eps_s: float, delta: float):
    """(a/beta, c/beta, determinant) at adaptive extended precision."""
    dps = _MP_DPS_START
    while True:
        with mp.workdps(dps):
            root = mp.sqrt(mp.mpc(eps_s, delta))
            k1 = k / root
            ze = k1 * r_e
            ye = mp.mpf(k) * r_e
            jze, jpze = _mp_regular(dim, m, ze)
            jye, jpye = _mp_regular(dim, m, ye)
            hye, hpye = _mp_outgoing(dim, m, ye)
            t1 = root * jpze * hye
            t2 = hpye * jze
            den = t1 - t2
            if den == 0:
                return None
            depth = _mp_depth(den, max(abs(t1), abs(t2)))
            if depth + _MP_MARGIN <= dps or dps >= _MP_DPS_CAP:
                a_ratio = -_mp_wron(dim, ye) / den
                c_ratio = (jpye * jze - root * jpze * jye) / den
                return (
                    _scaled_from_mp(a_ratio),
                    _scaled_from_mp(c_ratio),
                    _scaled_from_mp(den),
                )
        dps = min(_MP_DPS_CAP, max(int(depth) + 2 * _MP_MARGIN, 2 * dps))


def _coreshell_mode_mp(dim: int, m: int, k: float, r_i: float, r_e: float,
                       eps_c: float, eps_s: float, delta: float):
    """(a, b, c, d)/beta and the determinant at adaptive extended precision."""
    dps = _MP_DPS_START
    while True:
        with mp.workdps(dps):
            eps_t = mp.mpc(eps_s, delta)
            s = mp.sqrt(eps_t)
            sc = mp.sqrt(mp.mpf(eps_c))
            k1 = k / s
            zic = mp.mpf(k) * r_i / sc
            zi = k1 * r_i
            ze = k1 * r_e
            ye = mp.mpf(k) * r_e
            jic, jpic = _mp_regular(dim, m, zic)
            ji, jpi = _mp_regular(dim, m, zi)
            je, jpe = _mp_regular(dim, m, ze)
            jy, jpy = _mp_regular(dim, m, ye)
            hi, hpi = _mp_outgoing(dim, m, zi)
            he, hpe = _mp_outgoing(dim, m, ze)
            hy, hpy = _mp_outgoing(dim, m, ye)
            wye = _mp_wron(dim, ye)
            wzi = _mp_wron(dim, zi)
            zeta = -wye

            b_terms = (sc * jpic * hi, -(s * hpi * jic))
            c_terms = (s * jpi * jic, -(sc * jpic * ji))
            d_terms = (
                sc * hi * je * jpic * jpy,
                -(sc * he * ji * jpic * jpy),
                eps_t * hpi * jpe * jic * jy,
                -(eps_t * hpe * jpi * jic * jy),
                s * jpi * he * jic * jpy,
                -(s * hpi * je * jic * jpy),
                s * sc * hpe * ji * jpic * jy,
                -(s * sc * jpe * hi * jpic * jy),
            )
            g_terms = (
                eps_t * hpe * jpi * hy * jic,
                -(eps_t * hpi * jpe * hy * jic),
                s * hpi * je * hpy * jic,
                -(s * jpi * he * hpy * jic),
                sc * he * ji * jpic * hpy,
                -(sc * hi * je * jpic * hpy),
                sc * s * jpe * hi * jpic * hy,
                -(sc * s * hpe * ji * jpic * hy),
            )
            sums = []
            depth = 0.0
            for terms in (b_terms, c_terms, d_terms, g_terms):
                total = mp.fsum(terms)
                top = max(abs(t) for t in terms)
                sums.append(total)
                d = _mp_depth(total, top)
                if d != mp.inf:
                    depth = max(depth, d)
                elif total == 0 and terms is g_terms:
                    return None
            b_br, c_br, d_sum, g = sums
            if g == 0:
                return None
            settled = depth + _MP_MARGIN <= dps
            # exactly-vanishing numerators keep reporting depth ~ dps; stop
            # chasing them once the precision cap is reached
            if settled or dps >= _MP_DPS_CAP:
                a_ratio = s * wye * wzi / g
                return (
                    _scaled_from_mp(a_ratio),
                    _scaled_from_mp(zeta * b_br / g),
                    _scaled_from_mp(zeta * c_br / g),
                    _scaled_from_mp(d_sum / g),
                    _scaled_from_mp(g),
                )
        dps = min(_MP_DPS_CAP, max(int(depth) + 2 * _MP_MARGIN, 2 * dps))


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------

def _check_pair(config: PlasmonConfig, source: SourceCoefficients) -> None:
    if source.dim != config.dim:
        raise ValueError(
            f"source dimension {source.dim} does not match config {config.dim}"
        )
    if source.support_radius <= config.r_e:
        raise ValueError(
            f"source support radius {source.support_radius} must exceed "
            f"r_e = {config.r_e}"
        )


def solve_nocore(config: PlasmonConfig, source: SourceCoefficients) -> ModalSolution:
    """Modal solve for a solid shell ball (r_i = 0).

    Interior field a_n f_n(k1 r), exterior beta_n f_n(kr) + c_n g_n(kr); the
    interior coefficient uses the Wronskian-simplified closed form.
    """
    if config.has_core:
        raise ValueError(f"config has a core (r_i = {config.r_i}); use solve_coreshell")
    _check_pair(config, source)
    orders = source.orders
    if not orders:
        return ModalSolution(config, source, ())

    wn = config.wavenumbers()
    n_top = source.max_abs_order
    ze = wn.k_shell * config.r_e
    ye = complex(config.k * config.r_e)
    if config.dim == 3:
        jt_s = sph_j_table(n_top, [ze])
        jt_b = sph_j_table(n_top, [ye])
        ht_b = sph_h_table(n_top, [ye])
    else:
        jt_s = cyl_j_table(n_top, [ze])
        jt_b = cyl_j_table(n_top, [ye])
        ht_b = cyl_h_table(n_top, [ye])
    w_ye = _exact_wronskian(config.dim, ye)
    root = ScaledComplex.from_complex(wn.sqrt_shell)

    records = []
    mp_cache: dict[int, tuple] = {}
    for n in orders:
        beta = source.beta(n)
        if beta.is_zero:
            records.append(ModeCoefficients(n, *_ZERO_MODE_SLOTS))
            continue
        m = abs(n)
        den, den_top = _sum_tracked(
            (root * jt_s.deriv(m) * ht_b.value(m),
             -(ht_b.deriv(m) * jt_s.value(m)))
        )
        c_num, c_top = _sum_tracked(
            (jt_b.deriv(m) * jt_s.value(m),
             -(root * jt_s.deriv(m) * jt_b.value(m)))
        )
        if den.is_zero:
            raise ExactModalResonanceError(n)
        if min(_cancel_diag(den, den_top), _cancel_diag(c_num, c_top)) < _CANCEL_FLOOR:
            if m not in mp_cache:
                refined = _nocore_mode_mp(
                    config.dim, m, config.k, config.r_e, config.eps_s, config.delta
                )
                if refined is None:
                    raise ExactModalResonanceError(n)
                mp_cache[m] = refined
            a_ratio, c_ratio, den = mp_cache[m]
            a = beta * a_ratio
            c = beta * c_ratio
        else:
            a = beta * (-w_ye) / den
            c = beta * c_num / den
        records.append(ModeCoefficients(n, a=a, b=beta, c=c, d=SC_ZERO, e=beta, g=den))
    return ModalSolution(config, source, tuple(records))


def solve_coreshell(config: PlasmonConfig, source: SourceCoefficients) -> ModalSolution:
    """Modal solve with a core: four closed-form coefficient families over the
    common modal determinant, with extended-precision rescue near resonance."""
    if not config.has_core:
        raise NoCoreError()
    _check_pair(config, source)
    orders = source.orders
    if not orders:
        return ModalSolution(config, source, ())

    wn = config.wavenumbers()
    n_top = source.max_abs_order
    root_c = math.sqrt(config.eps_c)
    zic = complex(config.k * config.r_i / root_c)
    zi = wn.k_shell * config.r_i
    ze = wn.k_shell * config.r_e
    ye = complex(config.k * config.r_e)

    if config.dim == 3:
        jt = sph_j_table(n_top, [zic, zi, ze, ye])
        ht = sph_h_table(n_top, [zi, ze, ye])
    else:
        jt = cyl_j_table(n_top, [zic, zi, ze, ye])
        ht = cyl_h_table(n_top, [zi, ze, ye])

    w_ye = _exact_wronskian(config.dim, ye)
    w_zi = _exact_wronskian(config.dim, zi)
    zeta = -w_ye
    s = ScaledComplex.from_complex(wn.sqrt_shell)
    sc = ScaledComplex.from_complex(root_c)
    eps_t = ScaledComplex.from_complex(config.shell_eps)

    records = []
    mp_cache: dict[int, tuple] = {}
    for n in orders:
        beta = source.beta(n)
        if beta.is_zero:
            records.append(ModeCoefficients(n, *_ZERO_MODE_SLOTS))
            continue
        m = abs(n)
        jic, jpic = jt.value(m, 0), jt.deriv(m, 0)
        ji, jpi = jt.value(m, 1), jt.deriv(m, 1)
        je, jpe = jt.value(m, 2), jt.deriv(m, 2)
        jy, jpy = jt.value(m, 3), jt.deriv(m, 3)
        hi, hpi = ht.value(m, 0), ht.deriv(m, 0)
        he, hpe = ht.value(m, 1), ht.deriv(m, 1)
        hy, hpy = ht.value(m, 2), ht.deriv(m, 2)

        b_br, b_top = _sum_tracked((sc * jpic * hi, -(s * hpi * jic)))
        c_br, c_top = _sum_tracked((s * jpi * jic, -(sc * jpic * ji)))
        d_sum, d_top = _sum_tracked((
            sc * hi * je * jpic * jpy,
            -(sc * he * ji * jpic * jpy),
            eps_t * hpi * jpe * jic * jy,
            -(eps_t * hpe * jpi * jic * jy),
            s * jpi * he * jic * jpy,
            -(s * hpi * je * jic * jpy),
            s * sc * hpe * ji * jpic * jy,
            -(s * sc * jpe * hi * jpic * jy),
        ))
        g, g_top = _sum_tracked((
            eps_t * hpe * jpi * hy * jic,
            -(eps_t * hpi * jpe * hy * jic),
            s * hpi * je * hpy * jic,
            -(s * jpi * he * hpy * jic),
            sc * he * ji * jpic * hpy,
            -(sc * hi * je * jpic * hpy),
            sc * s * jpe * hi * jpic * hy,
            -(sc * s * hpe * ji * jpic * hy),
        ))
        if g.is_zero:
            raise ExactModalResonanceError(n)
        diag = min(
            _cancel_diag(b_br, b_top),
            _cancel_diag(c_br, c_top),
            _cancel_diag(d_sum, d_top),
            _cancel_diag(g, g_top),
        )
        if diag < _CANCEL_FLOOR:
            if m not in mp_cache:
                refined = _coreshell_mode_mp(
                    config.dim, m, config.k, config.r_i, config.r_e,
                    config.eps_c, config.eps_s, config.delta,
                )
                if refined is None:
                    raise ExactModalResonanceError(n)
                mp_cache[m] = refined
            a_r, b_r, c_r, d_r, g = mp_cache[m]
            a, b, c, d = beta * a_r, beta * b_r, beta * c_r, beta * d_r
        else:
            a = beta * s * zeta * (-w_zi) / g
            b = beta * zeta * b_br / g
            c = beta * zeta * c_br / g
            d = beta * d_sum / g
        records.append(ModeCoefficients(n, a=a, b=b, c=c, d=d, e=beta, g=g))
    return ModalSolution(config, source, tuple(records))


def solve(config: PlasmonConfig, source: SourceCoefficients) -> ModalSolution:
    """Dispatch on the presence of a core."""
    if config.has_core:
        return solve_coreshell(config, source)
    return solve_nocore(config, source)


# ---------------------------------------------------------------------------
# sources and truncation
# ---------------------------------------------------------------------------

def point_source_coefficients(dim: int, k: float, source_radius: float,
                              strength: complex = 1.0, n_max: int = 40,
                              min_order: int = 0) -> SourceCoefficients:
    """Modal coefficients of a point source at distance source_radius.

    The source sits on the polar axis (3D) or at polar angle zero (2D), so in
    3D only the axisymmetric member of each degree is driven.  The expansion
    of the outgoing fundamental solution about the origin gives, for
    |x| < source_radius,

        3D: beta_n = -i k g_n(k R0) sqrt((2n+1)/(4 pi)) * strength,
        2D: beta_n = -(i/4) g_|n|(k R0) * strength  for integer n,

    with g the outgoing radial family and R0 the source distance.  Modes with
    |n| < min_order are omitted (low-mode-free drivers).
    """
    if dim not in (2, 3):
        raise ValueError(f"dim must be 2 or 3, got {dim}")
    if not (math.isfinite(source_radius) and source_radius > 0.0):
        raise ValueError(f"source radius must be positive, got {source_radius}")
    if not (math.isfinite(k) and k > 0.0):
        raise ValueError(f"wavenumber must be positive, got {k}")
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    t = complex(k * source_radius)
    coeffs: dict[int, ScaledComplex] = {}
    if dim == 3:
        ht = sph_h_table(n_max, [t])
        for n in range(min_order, n_max + 1):
            w = ScaledComplex.from_complex(
                -1j * k * strength * math.sqrt((2 * n + 1) / (4.0 * math.pi))
            )
            coeffs[n] = w * ht.value(n)
    else:
        ht = cyl_h_table(n_max, [t])
        w = ScaledComplex.from_complex(-0.25j * strength)
        for n in range(-n_max, n_max + 1):
            if abs(n) < min_order:
                continue
            coeffs[n] = w * ht.value(abs(n))
    return SourceCoefficients(dim, coeffs, support_radius=source_radius)


def _field_scale_log(dim: int, m: int, t: float) -> float:
    """log of the regular-family envelope t^m / (2m+1)!! resp. t^m / (2^m m!)."""
    if t <= 0.0:
        return _NEG_INF if m else 0.0
    lt = math.log(t)
    if dim == 3:
        return m * lt - (math.lgamma(2 * m + 2) - m * math.log(2.0)
                         - math.lgamma(m + 1))
    return m * lt - m * math.log(2.0) - math.lgamma(m + 1)


def _out_scale_log(dim: int, m: int, t: float) -> float:
    """log of the outgoing-family envelope at order m (O(1) at m = 0)."""
    if m == 0:
        return 0.0
    lt = math.log(t)
    if dim == 3:
        return (math.lgamma(2 * m + 1) - m * math.log(2.0)
                - math.lgamma(m + 1)) - (m + 1) * lt
    return m * math.log(2.0) + math.lgamma(m) - math.log(math.pi) - m * lt


def truncation_order(config: PlasmonConfig, source: SourceCoefficients,
                     tail_tol: float) -> int:
    """Smallest order N whose discarded tail |n| > N is negligible in energy.

    Per-mode weights are the squared envelope magnitudes of the solved shell
    field at the annulus edges; the returned N satisfies
    tail(N) <= tail_tol * total in that estimate.
    """
    if not (math.isfinite(tail_tol) and tail_tol > 0.0):
        raise ValueError(f"tail tolerance must be positive, got {tail_tol}")
    sol = solve(config, source)
    wn = config.wavenumbers()
    t_e = abs(wn.k_shell) * config.r_e
    t_i = abs(wn.k_shell) * config.r_i

    weights: dict[int, float] = {}
    for rec in sol.modes:
        m = abs(rec.n)
        cands = []
        if config.has_core:
            if not rec.b.is_zero:
                cands.append(rec.b.log_magnitude + _field_scale_log(config.dim, m, t_e))
            if not rec.c.is_zero:
                cands.append(rec.c.log_magnitude + _out_scale_log(config.dim, m, t_i))
        else:
            if not rec.a.is_zero:
                cands.append(rec.a.log_magnitude + _field_scale_log(config.dim, m, t_e))
        if cands:
            # the energy is a gradient functional: the angular part contributes
            # an extra m^2-type factor on top of the field envelope
            lw = 2.0 * max(cands) + 2.0 * math.log1p(m)
        else:
            lw = _NEG_INF
        weights[m] = max(weights.get(m, _NEG_INF), lw)

    if not weights or all(w == _NEG_INF for w in weights.values()):
        return 0
    levels = sorted(weights)
    base = max(weights.values())
    total = sum(math.exp(w - base) for w in weights.values() if w != _NEG_INF)
    tail = 0.0
    # walk down from the top order, accreting the tail until it matters
    for m in reversed(levels):
        w = weights[m]
        contrib = math.exp(w - base) if w != _NEG_INF else 0.0
        if tail + contrib > tail_tol * total:
            return m
        tail += contrib
    return levels[0]
