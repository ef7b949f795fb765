"""Field evaluation and dissipation diagnostics for solved configurations.

The lossy region (the shell annulus, or the whole inclusion when there is no
core) absorbs energy at the rate E = delta * int |grad u|^2.  Per mode the
Green identity turns that volume integral into
Re[k1^2 int |w|^2 r^{d-1} dr + boundary flux], a one-dimensional radial
integral plus endpoint terms; the module computes the modal form and
cross-checks it against a direct product-grid quadrature of the defining
volume integral with analytically differentiated series.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import OutsideRepresentationError, QuadratureFailureError
from .scaled import SC_ZERO, ScaledComplex
from .scatter import ModalSolution, ModeCoefficients, PlasmonConfig
from .specfun import BesselTable, cyl_h_table, cyl_j_table, sph_h_table, sph_j_table

__all__ = [
    "EnergyReport",
    "ExteriorBoundReport",
    "dissipation_energy",
    "eval_field",
    "exterior_bound_probe",
    "weak_resonance_check",
]

_NEG_INF = float("-inf")
_RADIAL_RTOL = 1e-10
_NODES_PER_PANEL = 16
_MAX_LEVELS = 8
_TRUST_TOL = 1e-6


def _sph_norm(n: int) -> float:
    # orthonormal axisymmetric spherical harmonic: Y_n(theta) = N_n P_n(cos theta)
    return math.sqrt((2 * n + 1) / (4.0 * math.pi))


def _legendre_table(n_max: int, mu: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """P_n(mu) and dP_n/dmu for n = 0..n_max on a grid, by upward recurrence."""
    mu = np.asarray(mu, dtype=float)
    p = np.zeros((n_max + 1, mu.size))
    dp = np.zeros_like(p)
    p[0] = 1.0
    if n_max >= 1:
        p[1] = mu
        dp[1] = 1.0
    for n in range(2, n_max + 1):
        p[n] = ((2 * n - 1) * mu * p[n - 1] - (n - 1) * p[n - 2]) / n
        dp[n] = dp[n - 2] + (2 * n - 1) * p[n - 1]
    return p, dp


def _gauss_panels(a: float, b: float, panels: int,
                  nodes: int = _NODES_PER_PANEL) -> tuple[np.ndarray, np.ndarray]:
    x0, w0 = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * x0[None, :]).ravel()
    w = (half[:, None] * w0[None, :]).ravel()
    return x, w


def _j_table(dim: int, n_max: int, z) -> BesselTable:
    return sph_j_table(n_max, z) if dim == 3 else cyl_j_table(n_max, z)


def _h_table(dim: int, n_max: int, z) -> BesselTable:
    return sph_h_table(n_max, z) if dim == 3 else cyl_h_table(n_max, z)


def _lossy_profile(config: PlasmonConfig,
                   rec: ModeCoefficients) -> tuple[ScaledComplex, ScaledComplex]:
    """(regular, outgoing) coefficients of the field inside the lossy region."""
    if config.has_core:
        return rec.b, rec.c
    return rec.a, SC_ZERO


def _profile_mantissas(reg: ScaledComplex, out: ScaledComplex, m: int,
                       jt: BesselTable, ht: BesselTable | None,
                       base: float | None = None,
                       ) -> tuple[np.ndarray, np.ndarray, float]:
    """Node values of w = reg*j_m + out*h_m and dw/dz, scaled by exp(-base).

    The shared base keeps the mantissas representable for modes whose
    coefficients and radial functions separately overflow a double.
    """
    cands = []
    if not reg.is_zero:
        top = float(np.max(jt.log[m]))
        if top > _NEG_INF:
            cands.append(reg.log_magnitude + top)
    if not out.is_zero and ht is not None:
        top = float(np.max(ht.log[m]))
        if top > _NEG_INF:
            cands.append(out.log_magnitude + top)
    if base is None:
        if not cands:
            zeros = np.zeros(jt.log.shape[1], dtype=complex)
            return zeros, zeros.copy(), _NEG_INF
        base = max(cands)
    vals = np.zeros(jt.log.shape[1], dtype=complex)
    derivs = np.zeros_like(vals)
    if not reg.is_zero:
        amp = reg.phase_factor * np.exp(reg.log_magnitude + jt.log[m] - base)
        vals += amp * jt.phase[m]
        damp = reg.phase_factor * np.exp(reg.log_magnitude + jt.dlog[m] - base)
        derivs += damp * jt.dphase[m]
    if not out.is_zero and ht is not None:
        amp = out.phase_factor * np.exp(out.log_magnitude + ht.log[m] - base)
        vals += amp * ht.phase[m]
        damp = out.phase_factor * np.exp(out.log_magnitude + ht.dlog[m] - base)
        derivs += damp * ht.dphase[m]
    return vals, derivs, base


def _mode_integral_log(config: PlasmonConfig, rec: ModeCoefficients,
                       jt: BesselTable, ht: BesselTable | None,
                       r: np.ndarray, wq: np.ndarray) -> float:
    """log of int |w_n|^2 r^{dim-1} dr over the node set, -inf for a zero mode."""
    reg, out = _lossy_profile(config, rec)
    vals, _, base = _profile_mantissas(reg, out, abs(rec.n), jt, ht)
    if base == _NEG_INF:
        return _NEG_INF
    s = float(np.sum(wq * r ** (config.dim - 1) * (vals.real ** 2 + vals.imag ** 2)))
    if s <= 0.0:
        return _NEG_INF
    return 2.0 * base + math.log(s)


def _integral_close(a: float, b: float) -> bool:
    if a == b:
        return True
    if not (math.isfinite(a) and math.isfinite(b)):
        return False
    return abs(a - b) <= _RADIAL_RTOL


@dataclass(frozen=True)
class EnergyReport:
    """Dissipated energy of a solved configuration, mode by mode.

    total is the Green's-formula value (the sum of per_mode);
    crosscheck_residual is the relative gap to the independent volume
    quadrature of delta*int |grad u|^2 over the lossy region.
    """

    total: float
    per_mode: tuple[float, ...]
    crosscheck_residual: float
    truncation_order: int
    orders: tuple[int, ...]

    @property
    def trusted(self) -> bool:
        return (math.isfinite(self.crosscheck_residual)
                and self.crosscheck_residual < _TRUST_TOL)


@dataclass(frozen=True)
class ExteriorBoundReport:
    """Sampled supremum of the scattered field |u - F| at a probe radius."""

    probe_radius: float
    sup_estimate: float
    sample_count: int
    sampled_max: float
    tail_bound: float


def dissipation_energy(sol: ModalSolution) -> EnergyReport:
    """Energy delta*int |grad u|^2 over the lossy region, by the modal form.

    Radial integrals use composite Gauss panels doubled until every mode's
    integral is stable to 1e-10; the report carries the relative gap to a
    direct product-grid volume quadrature as crosscheck_residual.
    """
    config = sol.config
    wn = config.wavenumbers()
    k1 = wn.k_shell
    m_max = sol.max_abs_order
    r_lo, r_hi = config.r_i, config.r_e

    panels = max(4, int(math.ceil(abs(k1) * (r_hi - r_lo))))
    prev: dict[int, float] | None = None
    r = wq = None
    jt: BesselTable | None = None
    ht: BesselTable | None = None
    logs: dict[int, float] = {}
    bad: list[int] = []
    for _ in range(_MAX_LEVELS):
        r, wq = _gauss_panels(r_lo, r_hi, panels)
        z = [k1 * ri for ri in r]
        jt = _j_table(config.dim, m_max, z)
        ht = _h_table(config.dim, m_max, z) if config.has_core else None
        logs = {rec.n: _mode_integral_log(config, rec, jt, ht, r, wq)
                for rec in sol.modes}
        if prev is not None:
            bad = [n for n in logs if not _integral_close(logs[n], prev[n])]
            if not bad:
                break
        prev = logs
        panels *= 2
    else:
        raise QuadratureFailureError(
            "radial energy integral did not converge", mode=bad[0] if bad else None)

    # endpoint flux terms from a dedicated two-point (or one-point) table
    bpts = [k1 * r_lo, k1 * r_hi] if config.has_core else [k1 * r_hi]
    jb = _j_table(config.dim, m_max, bpts)
    hb = _h_table(config.dim, m_max, bpts) if config.has_core else None
    idx_hi = len(bpts) - 1

    k1_sc = ScaledComplex.from_complex(k1)
    k1sq_sc = ScaledComplex.from_complex(k1 * k1)
    ang = 2.0 * math.pi if config.dim == 2 else 1.0
    delta = config.delta

    per_mode: list[float] = []
    orders: list[int] = []
    for rec in sol.modes:
        reg, out = _lossy_profile(config, rec)
        m = abs(rec.n)
        ilog = logs[rec.n]
        if reg.is_zero and out.is_zero:
            per_mode.append(0.0)
            orders.append(rec.n)
            continue
        green = (k1sq_sc * ScaledComplex.from_log_polar(ilog, 1.0)
                 if ilog > _NEG_INF else SC_ZERO)

        def _wpair(j: int) -> tuple[ScaledComplex, ScaledComplex]:
            w = reg * jb.value(m, j)
            dw = reg * jb.deriv(m, j)
            if hb is not None:
                w = w + out * hb.value(m, j)
                dw = dw + out * hb.deriv(m, j)
            return w, dw

        w_hi, dw_hi = _wpair(idx_hi)
        green = green + k1_sc * dw_hi * w_hi.conjugate() * (r_hi ** (config.dim - 1))
        if config.has_core:
            w_lo, dw_lo = _wpair(0)
            green = green - k1_sc * dw_lo * w_lo.conjugate() * (r_lo ** (config.dim - 1))
        per_mode.append(delta * ang * green.to_complex().real)
        orders.append(rec.n)

    total = math.fsum(per_mode)
    volume = _volume_quadrature(sol, k1, jt, ht, r, wq)
    scale = max(abs(total), abs(volume))
    residual = 0.0 if scale == 0.0 else abs(total - volume) / scale
    return EnergyReport(total=total, per_mode=tuple(per_mode),
                        crosscheck_residual=residual,
                        truncation_order=m_max, orders=tuple(orders))


def _volume_quadrature(sol: ModalSolution, k1: complex,
                       jt: BesselTable, ht: BesselTable | None,
                       r: np.ndarray, wq: np.ndarray) -> float:
    """delta*int |grad u|^2 on a product grid, gradients summed across modes.

    Angular resolution is chosen to integrate the trigonometric/Legendre
    content exactly, so the only discretization error is radial.
    """
    config = sol.config
    m_max = sol.max_abs_order
    n_r = r.size
    if config.dim == 3:
        n_mu = m_max + 5
        mu, wmu = np.polynomial.legendre.leggauss(n_mu)
        p_tab, dp_tab = _legendre_table(m_max, mu)
        sin_t = np.sqrt(np.maximum(0.0, 1.0 - mu ** 2))
        u_r = np.zeros((n_r, n_mu), dtype=complex)
        u_t = np.zeros_like(u_r)
        for rec in sol.modes:
            reg, out = _lossy_profile(config, rec)
            vals, derivs, base = _profile_mantissas(reg, out, rec.n, jt, ht)
            if base == _NEG_INF:
                continue
            amp = math.exp(base) if base < 700.0 else math.inf
            w_raw = vals * amp
            dw_raw = derivs * (k1 * amp)
            nn = _sph_norm(rec.n)
            u_r += np.outer(dw_raw, nn * p_tab[rec.n])
            u_t += np.outer(w_raw / r, nn * (-sin_t) * dp_tab[rec.n])
        dens = np.abs(u_r) ** 2 + np.abs(u_t) ** 2
        integral = 2.0 * math.pi * float((wq * r ** 2) @ dens @ wmu)
    else:
        n_th = 2 * m_max + 5
        theta = 2.0 * math.pi * np.arange(n_th) / n_th
        w_th = 2.0 * math.pi / n_th
        u_r = np.zeros((n_r, n_th), dtype=complex)
        u_t = np.zeros_like(u_r)
        for rec in sol.modes:
            reg, out = _lossy_profile(config, rec)
            vals, derivs, base = _profile_mantissas(reg, out, abs(rec.n), jt, ht)
            if base == _NEG_INF:
                continue
            amp = math.exp(base) if base < 700.0 else math.inf
            w_raw = vals * amp
            dw_raw = derivs * (k1 * amp)
            phase = np.exp(1j * rec.n * theta)
            u_r += np.outer(dw_raw, phase)
            u_t += np.outer((1j * rec.n) * w_raw / r, phase)
        dens = np.abs(u_r) ** 2 + np.abs(u_t) ** 2
        integral = w_th * float((wq * r) @ dens.sum(axis=1))
    return config.delta * integral


def weak_resonance_check(report: EnergyReport, threshold: float) -> bool:
    """True iff the dissipated energy exceeds the given positive threshold."""
    if not (math.isfinite(threshold) and threshold > 0.0):
        raise ValueError(f"threshold must be positive, got {threshold}")
    return report.total > threshold


def eval_field(sol: ModalSolution, point) -> complex:
    """Total potential u at a Cartesian point of length dim.

    Uses the region-appropriate series branch (core, shell, or exterior
    annulus up to the source support radius); the exterior branch carries the
    incident potential through the regular-family coefficients, so the
    returned value is the full field.  2D radial orders are |n|.
    """
    config = sol.config
    pt = np.asarray(point, dtype=float).ravel()
    if pt.size != config.dim:
        raise ValueError(
            f"point must have {config.dim} coordinates, got {pt.size}")
    if not np.all(np.isfinite(pt)):
        raise ValueError(f"point must be finite, got {point!r}")
    radius = float(np.linalg.norm(pt))
    limit = sol.source.support_radius
    if radius >= limit:
        raise OutsideRepresentationError(radius, limit)

    wn = config.wavenumbers()
    if config.has_core and radius < config.r_i:
        z = complex(config.k * radius / math.sqrt(config.eps_c))
        pick = "core"
    elif radius <= config.r_e:
        z = wn.k_shell * radius
        pick = "shell"
    else:
        z = complex(config.k * radius)
        pick = "exterior"

    m_max = sol.max_abs_order
    jt = _j_table(config.dim, m_max, [z])
    needs_h = (pick == "shell" and config.has_core) or pick == "exterior"
    ht = _h_table(config.dim, m_max, [z]) if needs_h else None

    if config.dim == 3:
        mu = 1.0 if radius == 0.0 else float(pt[2] / radius)
        p_tab, _ = _legendre_table(m_max, np.array([mu]))
    else:
        theta = math.atan2(pt[1], pt[0])

    acc = SC_ZERO
    for rec in sol.modes:
        if pick == "core":
            reg, out = rec.a, SC_ZERO
        elif pick == "shell":
            reg, out = _lossy_profile(config, rec)
        elif config.has_core:
            reg, out = rec.e, rec.d
        else:
            reg, out = rec.b, rec.c
        m = abs(rec.n)
        term = reg * jt.value(m, 0)
        if not out.is_zero and ht is not None:
            term = term + out * ht.value(m, 0)
        if term.is_zero:
            continue
        if config.dim == 3:
            y = _sph_norm(rec.n) * float(p_tab[rec.n, 0])
            if y == 0.0:
                continue
            acc = acc + term * y
        else:
            acc = acc + term * cmath.exp(1j * rec.n * theta)
    return acc.to_complex()


def exterior_bound_probe(sol: ModalSolution, probe_radius: float,
                         sample_count: int = 64) -> ExteriorBoundReport:
    """Sampled sup of |u - F| on the probe sphere plus a geometric tail bound.

    The scattered part is the outgoing series alone, valid at every radius
    beyond the shell, so the probe may sit past the source support radius.
    The tail bound continues the per-order sup contributions geometrically
    past the last computed order (infinite if they are not decaying).
    """
    config = sol.config
    if not (math.isfinite(probe_radius) and probe_radius > config.r_e):
        raise ValueError(
            f"probe radius must exceed r_e = {config.r_e}, got {probe_radius}")
    if sample_count < 1:
        raise ValueError(f"sample count must be >= 1, got {sample_count}")

    m_max = sol.max_abs_order
    z = complex(config.k * probe_radius)
    ht = _h_table(config.dim, m_max, [z])

    # per-order sup contributions and sampled values of the scattered sum
    sup_terms = [0.0] * (m_max + 1)
    if config.dim == 3:
        mu = -1.0 + (2.0 * np.arange(sample_count) + 1.0) / sample_count
        p_tab, _ = _legendre_table(m_max, mu)
        samples = np.zeros(sample_count, dtype=complex)
        for rec in sol.modes:
            coeff = rec.d if config.has_core else rec.c
            amp_sc = coeff * ht.value(rec.n, 0)
            if amp_sc.is_zero:
                continue
            amp = amp_sc.to_complex()
            nn = _sph_norm(rec.n)
            samples += amp * nn * p_tab[rec.n]
            sup_terms[rec.n] += abs(amp) * nn
    else:
        theta = 2.0 * math.pi * np.arange(sample_count) / sample_count
        samples = np.zeros(sample_count, dtype=complex)
        for rec in sol.modes:
            coeff = rec.d if config.has_core else rec.c
            amp_sc = coeff * ht.value(abs(rec.n), 0)
            if amp_sc.is_zero:
                continue
            amp = amp_sc.to_complex()
            samples += amp * np.exp(1j * rec.n * theta)
            sup_terms[abs(rec.n)] += abs(amp)

    sampled_max = float(np.max(np.abs(samples))) if sample_count else 0.0
    tail = _geometric_tail(sup_terms)
    return ExteriorBoundReport(probe_radius=float(probe_radius),
                               sup_estimate=sampled_max + tail,
                               sample_count=int(sample_count),
                               sampled_max=sampled_max, tail_bound=tail)


def _geometric_tail(sup_terms: list[float]) -> float:
    last = max((i for i, t in enumerate(sup_terms) if t > 0.0), default=-1)
    if last <= 0:
        return 0.0
    ratios = [sup_terms[i + 1] / sup_terms[i]
              for i in range(max(0, last - 3), last)
              if sup_terms[i] > 0.0 and sup_terms[i + 1] > 0.0]
    if not ratios:
        return 0.0
    q = max(ratios)
    if q >= 1.0:
        return math.inf
    return sup_terms[last] * q / (1.0 - q)
