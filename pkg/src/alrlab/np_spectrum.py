"""Spectral system of the wave layer operators on the sphere.

On |x| = R the single-layer operator S^k and the adjoint double-layer
(Neumann-Poincare) operator K*^k act diagonally on orthonormal axisymmetric
spherical harmonics, with eigenvalues in closed form built from j_m and
h^(1)_m at kR.  The closed forms rest on a kernel identity that trades the
normal derivative of the outgoing fundamental solution for the single layer
plus a smooth remainder, on the Funk-Hecke integral E_m, and on the
nondegeneracy j_n(kR) != j_{n+2}(kR); each has a direct-quadrature check
here.  The same eigenvalues at the complex shell wavenumber (taken as
analytic continuation) rebuild the solid-ball transmission solve from a
surface density pair, and that route is cross-checked against the series
solve every time it runs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import mpmath as mp
import numpy as np

from .errors import (
    AssumptionViolatedError,
    ExactModalResonanceError,
    FormulationMismatchError,
    QuadratureFailureError,
)
from .fields import (
    EnergyReport,
    _gauss_panels,
    _integral_close,
    _legendre_table,
    _sph_norm,
    dissipation_energy,
)
from .scaled import SC_ZERO, ScaledComplex
from .scatter import (
    _CANCEL_FLOOR,
    _MP_DPS_CAP,
    _MP_DPS_START,
    _MP_MARGIN,
    _mp_depth,
    _mp_outgoing,
    _mp_regular,
    _scaled_from_mp,
    PlasmonConfig,
    SourceCoefficients,
    solve_nocore,
)
from .specfun import sph_h_table, sph_j_table

__all__ = [
    "NpEigenpair",
    "check_assumption",
    "funk_hecke_quadrature",
    "np_alpha",
    "np_eigenpair",
    "np_field_values",
    "np_identity_residual",
    "solve_nocore_via_np",
]

_NEG_INF = float("-inf")
_LOG_ASSUMPTION_RTOL = math.log(1e-12)
_LOG_TINY = math.log(5e-324)  # smallest positive double
_FH_RTOL = 1e-10
_FH_ATOL = 1e-12
_SURFACE_STABLE_TOL = 1e-8
_ROUTE_MISMATCH_TOL = 1e-6
_MAX_DOUBLINGS = 12
_TEST_POLAR_ANGLES = (0.0, 0.7, 1.3, 2.1, 2.9)


# ---------------------------------------------------------------------------
# closed-form spectral quantities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NpEigenpair:
    """Closed-form spectral data of degree m on the sphere of radius R.

    lam is the Neumann-Poincare eigenvalue, chi the single-layer eigenvalue,
    gamma the interior single-layer expansion coefficient, funk_hecke the
    plane-section integral E_m; all at real wavenumber k.
    """

    m: int
    lam: complex
    chi: complex
    gamma: complex
    funk_hecke: complex
    k: float
    R: float


@dataclass(frozen=True)
class _Spectral:
    """Scaled working set at one degree and one (possibly complex) kR."""

    j: ScaledComplex
    jp: ScaledComplex
    h: ScaledComplex
    hp: ScaledComplex
    lam: ScaledComplex
    lam_alt: ScaledComplex
    # Wronskian-reduced shifts: products only, no 1/2 additions, so the
    # density denominator cancels no deeper than its analytic content
    half_plus: ScaledComplex   # 1/2 + lam = -i (kR)^2 j h'
    half_minus: ScaledComplex  # lam - 1/2 = -i (kR)^2 j' h
    chi: ScaledComplex
    gamma: ScaledComplex
    alpha: ScaledComplex
    funk_hecke: ScaledComplex


def _spectral(m: int, kc: complex, R: float) -> _Spectral:
    """All closed forms at degree m, wavenumber kc (complex allowed).

    lam = 1/2 - i (kR)^2 j' h  (and the Wronskian-equivalent alternate form
    -1/2 - i (kR)^2 j h'), chi = -i kR R h j, E = 2kR(h j' + j h') + 2 j h,
    gamma = -(2 + i kR E) R / (2 (2 kR j' + j)), alpha likewise from the
    outgoing family.  The gamma/alpha denominators vanish exactly where the
    nondegeneracy assumption fails; that is reported, not ignored.
    """
    z = kc * R
    jt = sph_j_table(m, [z])
    ht = sph_h_table(m, [z])
    j, jp = jt.value(m, 0), jt.deriv(m, 0)
    h, hp = ht.value(m, 0), ht.deriv(m, 0)
    kr = ScaledComplex.from_complex(z)
    kr2 = kr * kr
    i_sc = ScaledComplex.from_complex(1j)
    half_minus = -(i_sc * kr2 * jp * h)
    half_plus = -(i_sc * kr2 * j * hp)
    lam = 0.5 + half_minus
    lam_alt = -0.5 + half_plus
    chi = -(i_sc * kr * R * h * j)
    fh = 2.0 * kr * (h * jp + j * hp) + 2.0 * j * h
    den_g = 2.0 * (2.0 * kr * jp + j)
    den_a = 2.0 * (2.0 * kr * hp + h)
    if den_g.is_zero:
        raise AssumptionViolatedError(m, "interior expansion denominator vanished")
    if den_a.is_zero:
        raise AssumptionViolatedError(m, "exterior expansion denominator vanished")
    gamma = -((2.0 + i_sc * kr * fh) * R) / den_g
    alpha = ((2.0 - i_sc * kr * fh) * R) / den_a
    return _Spectral(j=j, jp=jp, h=h, hp=hp, lam=lam, lam_alt=lam_alt,
                     half_plus=half_plus, half_minus=half_minus,
                     chi=chi, gamma=gamma, alpha=alpha, funk_hecke=fh)


def _validate_kr(k: float, R: float) -> None:
    if not (math.isfinite(k) and k > 0.0):
        raise ValueError(f"wavenumber must be positive, got {k}")
    if not (math.isfinite(R) and R > 0.0):
        raise ValueError(f"sphere radius must be positive, got {R}")


def check_assumption(k: float, R: float, n_max: int) -> tuple[bool, ...]:
    """Entry n is True iff j_n(kR) and j_{n+2}(kR) differ beyond 1e-12.

    The comparison runs in log scale so deep-underflow degrees still compare
    meaningfully; the threshold is relative to the larger of the two values
    with the smallest positive double as an absolute floor.
    """
    _validate_kr(k, R)
    if n_max < 0:
        raise ValueError(f"n_max must be >= 0, got {n_max}")
    jt = sph_j_table(n_max + 2, [complex(k * R)])
    flags: list[bool] = []
    for n in range(n_max + 1):
        a = jt.value(n, 0)
        b = jt.value(n + 2, 0)
        diff = a - b
        floor = max(a.log_magnitude, b.log_magnitude, _LOG_TINY)
        flags.append((not diff.is_zero)
                     and diff.log_magnitude > floor + _LOG_ASSUMPTION_RTOL)
    return tuple(flags)


def _require_assumption(k: float, R: float, n_max: int) -> None:
    for n, ok in enumerate(check_assumption(k, R, n_max)):
        if not ok:
            raise AssumptionViolatedError(n)


def np_eigenpair(m: int, k: float, R: float) -> NpEigenpair:
    """Spectral data (lam, chi, gamma, E_m) of degree m at real k, radius R."""
    if m < 0:
        raise ValueError(f"harmonic degree must be >= 0, got {m}")
    _validate_kr(k, R)
    _require_assumption(k, R, m)
    sp = _spectral(m, complex(k), R)
    return NpEigenpair(m=int(m), lam=sp.lam.to_complex(),
                       chi=sp.chi.to_complex(), gamma=sp.gamma.to_complex(),
                       funk_hecke=sp.funk_hecke.to_complex(),
                       k=float(k), R=float(R))


def np_alpha(m: int, k: float, R: float) -> complex:
    """Exterior single-layer expansion coefficient of degree m.

    Satisfies alpha_m h_m(kR) = gamma_m j_m(kR) (both equal chi_m).
    """
    if m < 0:
        raise ValueError(f"harmonic degree must be >= 0, got {m}")
    _validate_kr(k, R)
    _require_assumption(k, R, m)
    return _spectral(m, complex(k), R).alpha.to_complex()


# ---------------------------------------------------------------------------
# direct-quadrature checks
# ---------------------------------------------------------------------------

def funk_hecke_quadrature(m: int, k: float, R: float) -> complex:
    """int_{-1}^{1} exp(i sqrt(2) k R sqrt(1 - t)) P_m(t) dt by Gauss panels.

    The substitution s = sqrt(1 - t) removes the square-root kink at t = 1,
    leaving a smooth oscillatory integrand; panels double until two levels
    agree to 1e-10 relative (1e-12 absolute near zeros of the integral).
    """
    if m < 0:
        raise ValueError(f"harmonic degree must be >= 0, got {m}")
    if not (math.isfinite(k) and math.isfinite(R) and R > 0.0):
        raise ValueError(f"need finite k and positive R, got k = {k}, R = {R}")
    top = math.sqrt(2.0)
    panels = max(4, int(math.ceil(abs(k) * R)), (m + 4) // 4)
    prev: complex | None = None
    for _ in range(_MAX_DOUBLINGS):
        s, w = _gauss_panels(0.0, top, panels)
        p_tab, _ = _legendre_table(m, 1.0 - s * s)
        vals = np.exp(1j * top * k * R * s) * p_tab[m] * (2.0 * s)
        acc = complex(np.sum(w * vals))
        if prev is not None and abs(acc - prev) <= max(_FH_RTOL * abs(acc),
                                                       _FH_ATOL):
            return acc
        prev = acc
        panels *= 2
    raise QuadratureFailureError("plane-section integral did not converge",
                                 mode=m)


def _density_coeffs(density) -> dict[int, complex]:
    if isinstance(density, SourceCoefficients):
        if density.dim != 3:
            raise ValueError("surface density must be a 3D harmonic expansion")
        items = {n: density.coeffs[n].to_complex() for n in density.orders}
    else:
        items = {int(n): complex(c) for n, c in dict(density).items()}
    for n in items:
        if n < 0:
            raise ValueError(f"harmonic degrees must be >= 0, got {n}")
    return items


def np_identity_residual(k: float, R: float, density,
                         surface_grid: int = 48) -> float:
    """Max relative gap between the two quadrature sides of the kernel identity

        K*^k[phi](x) = -(1/(2R)) S^k[phi](x)
                       - (i k/(8 pi R)) int e^{ik|x-y|} phi(y) ds(y)

    at fixed boundary test points.  Both sides share one product-Gauss node
    set; the weakly singular 1/|x-y| content uses the exact on-sphere value
    <x-y, nu_x>/|x-y|^2 = 1/(2R) and is common to both kernels, so the
    difference integrates the smooth remainder and the discrepancy measures
    the geometric identity, not the principal value.  The polar order starts
    at surface_grid and doubles until two successive residuals agree to 1e-8.
    """
    _validate_kr(k, R)
    if surface_grid < 4:
        raise ValueError(f"surface grid order must be >= 4, got {surface_grid}")
    coeffs = _density_coeffs(density)
    if not coeffs or all(c == 0.0 for c in coeffs.values()):
        return 0.0
    m_top = max(coeffs)

    def sides(n_theta: int) -> tuple[np.ndarray, np.ndarray]:
        mu, wmu = np.polynomial.legendre.leggauss(n_theta)
        n_phi = 2 * n_theta
        phis = 2.0 * math.pi * np.arange(n_phi) / n_phi
        p_tab, _ = _legendre_table(m_top, mu)
        dens_c = np.zeros(n_theta, dtype=complex)
        for m, c in coeffs.items():
            dens_c = dens_c + (c * _sph_norm(m)) * p_tab[m]
        sin_t = np.sqrt(np.maximum(0.0, 1.0 - mu ** 2))
        y = np.empty((n_theta, n_phi, 3))
        y[:, :, 0] = R * np.outer(sin_t, np.cos(phis))
        y[:, :, 1] = R * np.outer(sin_t, np.sin(phis))
        y[:, :, 2] = R * mu[:, None]
        w = (R * R) * wmu[:, None] * (2.0 * math.pi / n_phi)
        wphi = w * dens_c[:, None]
        lhs = np.empty(len(_TEST_POLAR_ANGLES), dtype=complex)
        rhs = np.empty_like(lhs)
        for i, th in enumerate(_TEST_POLAR_ANGLES):
            x = R * np.array([math.sin(th), 0.0, math.cos(th)])
            dvec = x[None, None, :] - y
            d = np.sqrt(np.sum(dvec * dvec, axis=2))
            geom = (dvec @ (x / R)) / (d * d)
            e_kd = np.exp(1j * k * d)
            shared = e_kd / ((8.0 * math.pi * R) * d)
            kern_l = shared - (1j * k / (4.0 * math.pi)) * e_kd * geom
            kern_r = shared - (1j * k / (8.0 * math.pi * R)) * e_kd
            lhs[i] = np.sum(wphi * kern_l)
            rhs[i] = np.sum(wphi * kern_r)
        return lhs, rhs

    def residual(n_theta: int) -> float:
        lhs, rhs = sides(n_theta)
        scale = float(np.max(np.abs(rhs)))
        gap = float(np.max(np.abs(lhs - rhs)))
        return gap if scale == 0.0 else gap / scale

    order = int(surface_grid)
    prev = residual(order)
    for _ in range(6):
        order *= 2
        cur = residual(order)
        if abs(cur - prev) <= _SURFACE_STABLE_TOL:
            return cur
        prev = cur
    raise QuadratureFailureError("surface identity quadrature did not converge")


# ---------------------------------------------------------------------------
# layer-potential route to the solid-ball solve
# ---------------------------------------------------------------------------

def _phi_ratio_mp(m: int, k: float, R: float,
                  eps_s: float, delta: float) -> ScaledComplex | None:
    """num/den of the density formula at adaptive extended precision.

    Used when the double-precision denominator cancels below the usual
    floor (near a modal resonance).  The algebra stays in the two-layer
    closed forms, so the route remains independent of the transmission
    solve it is checked against.  Returns None on an exact zero.
    """
    dps = _MP_DPS_START
    while True:
        with mp.workdps(dps):
            eps = mp.mpc(eps_s, delta)
            k1 = k / mp.sqrt(eps)
            z = mp.mpf(k) * R
            z1 = k1 * R
            j, jp = _mp_regular(3, m, z)
            h, hp = _mp_outgoing(3, m, z)
            j1, jp1 = _mp_regular(3, m, z1)
            h1, _ = _mp_outgoing(3, m, z1)
            chi_k = -mp.mpc(0, 1) * z * R * h * j
            chi_1 = -mp.mpc(0, 1) * z1 * R * h1 * j1
            half_plus_k = -mp.mpc(0, 1) * z * z * j * hp
            half_minus_1 = -mp.mpc(0, 1) * z1 * z1 * jp1 * h1
            num = k * chi_k * jp - half_plus_k * j
            t1 = eps * half_minus_1 * chi_k
            t2 = half_plus_k * chi_1
            den = t1 - t2
            if den == 0:
                return None
            depth = _mp_depth(abs(den), max(abs(t1), abs(t2)))
            if depth + _MP_MARGIN <= dps or dps >= _MP_DPS_CAP:
                return _scaled_from_mp(num / den)
        dps = min(_MP_DPS_CAP, max(int(depth) + 2 * _MP_MARGIN, 2 * dps))


def _phi_hats(config: PlasmonConfig,
              source: SourceCoefficients) -> dict[int, ScaledComplex]:
    """Interior density coefficients of the two-layer ansatz, per order.

    phi_hat_n = (k chi_k j' - (1/2 + lam_k) j) /
                ((eps_s + i delta)(-1/2 + lam_k1) chi_k - (1/2 + lam_k) chi_k1)
                * beta_n,
    with the k1 quantities the analytic continuation of the closed forms.
    """
    if config.dim != 3:
        raise ValueError("layer-potential route is 3D only")
    if config.has_core:
        raise ValueError(
            f"config has a core (r_i = {config.r_i}); route applies to solid balls")
    if source.dim != config.dim:
        raise ValueError(
            f"source dim {source.dim} does not match config dim {config.dim}")
    if source.support_radius <= config.r_e:
        raise ValueError(
            f"source support radius {source.support_radius} must exceed "
            f"r_e = {config.r_e}")
    k, R = config.k, config.r_e
    k1 = config.wavenumbers().k_shell
    eps = config.shell_eps
    if source.orders:
        _require_assumption(k, R, source.n_max)
    out: dict[int, ScaledComplex] = {}
    log_floor = math.log(_CANCEL_FLOOR)
    for n in source.orders:
        sp_k = _spectral(n, complex(k), R)
        sp_1 = _spectral(n, k1, R)
        num = k * sp_k.chi * sp_k.jp - sp_k.half_plus * sp_k.j
        t1 = eps * sp_1.half_minus * sp_k.chi
        t2 = sp_k.half_plus * sp_1.chi
        den = t1 - t2
        top = max(t1.log_magnitude, t2.log_magnitude)
        if den.is_zero or den.log_magnitude < top + log_floor:
            ratio = _phi_ratio_mp(n, k, R, config.eps_s, config.delta)
            if ratio is None:
                raise ExactModalResonanceError(n)
            out[n] = ratio * source.beta(n)
        else:
            out[n] = num / den * source.beta(n)
    return out


def _radial_moment_logs(orders: Sequence[int], k1: complex,
                        R: float) -> dict[int, float]:
    """log of int_0^R |j_n(k1 r)|^2 r^2 dr per order, panel-doubled to 1e-10."""
    if not orders:
        return {}
    n_top = max(orders)
    panels = max(4, int(math.ceil(abs(k1) * R)))
    prev: dict[int, float] | None = None
    for _ in range(_MAX_DOUBLINGS):
        r, w = _gauss_panels(0.0, R, panels)
        jt = sph_j_table(n_top, [k1 * ri for ri in r])
        logs: dict[int, float] = {}
        for n in orders:
            base = float(np.max(jt.log[n]))
            if base == _NEG_INF:
                logs[n] = _NEG_INF
                continue
            mant = np.exp(jt.log[n] - base) * jt.phase[n]
            s = float(np.sum(w * r * r * (mant.real ** 2 + mant.imag ** 2)))
            logs[n] = 2.0 * base + math.log(s) if s > 0.0 else _NEG_INF
        if prev is not None and all(_integral_close(logs[n], prev[n])
                                    for n in orders):
            return logs
        prev = logs
        panels *= 2
    raise QuadratureFailureError("radial moment integral did not converge")


def solve_nocore_via_np(config: PlasmonConfig, source: SourceCoefficients
                        ) -> tuple[tuple[complex, ...], EnergyReport]:
    """Solid-ball solve through the surface-density route, with energy.

    Returns the density coefficients phi_hat (aligned with source.orders) and
    an energy report whose total is the modal sum

        sum_n delta |phi_hat_n|^2 (k1^2 |gamma_{n,k1}|^2 int_0^R |j_n(k1 r) r|^2 dr
                                   + (-1/2 + lam_{n,k1}) conj(chi_{n,k1}) R^2).

    The report's crosscheck_residual is the relative gap to the series-route
    energy on the same inputs; a gap above 1e-6 raises, because the two
    formulations are algebraically identical and disagreement means a defect.
    """
    mie_sol = solve_nocore(config, source)
    phis = _phi_hats(config, source)
    orders = source.orders
    k1 = config.wavenumbers().k_shell
    R = config.r_e
    vlogs = _radial_moment_logs(orders, k1, R)
    k1sq = ScaledComplex.from_complex(k1 * k1)
    per_mode: list[float] = []
    phi_hat: list[complex] = []
    for n in orders:
        ph = phis[n]
        phi_hat.append(ph.to_complex())
        sp_1 = _spectral(n, k1, R)
        vol_sc = (ScaledComplex.from_log_polar(vlogs[n], 1.0)
                  if vlogs[n] > _NEG_INF else SC_ZERO)
        bracket = (k1sq * sp_1.gamma * sp_1.gamma.conjugate() * vol_sc
                   + sp_1.half_minus * sp_1.chi.conjugate() * (R * R))
        term = ph * ph.conjugate() * bracket
        per_mode.append(config.delta * term.to_complex().real)
    total = math.fsum(per_mode)
    mie = dissipation_energy(mie_sol)
    scale = max(abs(total), abs(mie.total))
    rel = 0.0 if scale == 0.0 else abs(total - mie.total) / scale
    if not (rel <= _ROUTE_MISMATCH_TOL):
        raise FormulationMismatchError(
            f"layer-route energy {total:.12g} vs series energy "
            f"{mie.total:.12g}, relative gap {rel:.3e}")
    report = EnergyReport(total=total, per_mode=tuple(per_mode),
                          crosscheck_residual=rel,
                          truncation_order=source.max_abs_order,
                          orders=tuple(orders))
    return tuple(phi_hat), report


def np_field_values(config: PlasmonConfig, source: SourceCoefficients,
                    points: Sequence[Sequence[float]]) -> tuple[complex, ...]:
    """Total field of the layer-potential route at 3D Cartesian points.

    Interior |x| < R: sum phi_hat_n gamma_{n,k1} j_n(k1 r) Y_n.  Exterior
    R <= |x| < source support: the incident series plus
    sum psi_hat_n alpha_{n,k} h_n(kr) Y_n, where psi_hat follows from the
    value jump chi_{k1} phi_hat = chi_k psi_hat + beta j(kR).
    """
    phis = _phi_hats(config, source)
    orders = source.orders
    k, R = config.k, config.r_e
    k1 = config.wavenumbers().k_shell
    psis: dict[int, ScaledComplex] = {}
    gammas: dict[int, ScaledComplex] = {}
    alphas: dict[int, ScaledComplex] = {}
    for n in orders:
        sp_k = _spectral(n, complex(k), R)
        sp_1 = _spectral(n, k1, R)
        gammas[n] = sp_1.gamma
        alphas[n] = sp_k.alpha
        psis[n] = (sp_1.chi * phis[n] - source.beta(n) * sp_k.j) / sp_k.chi
    n_top = source.max_abs_order if orders else 0
    values: list[complex] = []
    for point in points:
        pt = np.asarray(point, dtype=float).ravel()
        if pt.size != 3 or not np.all(np.isfinite(pt)):
            raise ValueError(f"need a finite 3D point, got {point!r}")
        r = float(np.linalg.norm(pt))
        if r >= source.support_radius:
            raise ValueError(
                f"point radius {r:.6g} outside the source representation "
                f"region (< {source.support_radius:.6g})")
        mu = 1.0 if r == 0.0 else float(pt[2] / r)
        p_tab, _ = _legendre_table(n_top, np.array([mu]))
        acc = SC_ZERO
        if r < R:
            jt = sph_j_table(n_top, [k1 * r])
            for n in orders:
                term = phis[n] * gammas[n] * jt.value(n, 0)
                acc = acc + term * (_sph_norm(n) * float(p_tab[n, 0]))
        else:
            jt = sph_j_table(n_top, [complex(k * r)])
            ht = sph_h_table(n_top, [complex(k * r)])
            for n in orders:
                term = (source.beta(n) * jt.value(n, 0)
                        + psis[n] * alphas[n] * ht.value(n, 0))
                acc = acc + term * (_sph_norm(n) * float(p_tab[n, 0]))
        values.append(acc.to_complex())
    return tuple(values)
