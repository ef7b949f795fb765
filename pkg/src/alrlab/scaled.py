"""Logarithmically scaled complex scalars.

Modal coefficients in this package routinely have magnitudes like 1e-320 or
1e+360 (high-order radial functions at moderate argument), far outside double
range.  A :class:`ScaledComplex` stores log|z| separately from the unit-modulus
phase factor z/|z| so products and quotients of extreme quantities stay exact
in the exponent while the phase stays conditioned.

Zero is the sentinel (log_magnitude = -inf, phase_factor = 0).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

__all__ = ["ScaledComplex", "SC_ZERO", "SC_ONE"]

_NEG_INF = float("-inf")


@dataclass(frozen=True, slots=True)
class ScaledComplex:
    """A complex number stored as (log magnitude, unit phase factor)."""

    log_magnitude: float
    phase_factor: complex

    # -- constructors -------------------------------------------------------

    @staticmethod
    def from_complex(z: complex) -> "ScaledComplex":
        z = complex(z)
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            raise ValueError(f"cannot scale non-finite value {z!r}")
        a = abs(z)
        if a == 0.0:
            return SC_ZERO
        return ScaledComplex(math.log(a), z / a)

    @staticmethod
    def from_log_polar(log_magnitude: float, phase_factor: complex) -> "ScaledComplex":
        if log_magnitude == _NEG_INF or phase_factor == 0:
            return SC_ZERO
        a = abs(phase_factor)
        if not (math.isfinite(log_magnitude) and math.isfinite(a) and a > 0.0):
            raise ValueError(
                f"invalid scaled parts ({log_magnitude!r}, {phase_factor!r})"
            )
        return ScaledComplex(log_magnitude + math.log(a), phase_factor / a)

    # -- predicates and conversions ----------------------------------------

    @property
    def is_zero(self) -> bool:
        return self.log_magnitude == _NEG_INF

    def to_complex(self) -> complex:
        """Ordinary complex value; overflows to inf if the exponent is too big."""
        if self.is_zero:
            return 0.0 + 0.0j
        return math.exp(self.log_magnitude) * self.phase_factor \
            if self.log_magnitude < 709.0 else \
            complex(math.inf, 0) * self.phase_factor

    def __abs__(self) -> float:
        if self.is_zero:
            return 0.0
        if self.log_magnitude >= 709.0:
            return math.inf
        return math.exp(self.log_magnitude)

    def __complex__(self) -> complex:
        return self.to_complex()

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> "ScaledComplex":
        if isinstance(other, ScaledComplex):
            return other
        if isinstance(other, (int, float, complex)):
            return ScaledComplex.from_complex(other)
        raise TypeError(f"cannot combine ScaledComplex with {type(other)!r}")

    def __mul__(self, other) -> "ScaledComplex":
        o = self._coerce(other)
        if self.is_zero or o.is_zero:
            return SC_ZERO
        p = self.phase_factor * o.phase_factor
        return ScaledComplex(
            self.log_magnitude + o.log_magnitude + math.log(abs(p)), p / abs(p)
        )

    __rmul__ = __mul__

    def __truediv__(self, other) -> "ScaledComplex":
        o = self._coerce(other)
        if o.is_zero:
            raise ZeroDivisionError("division by scaled zero")
        if self.is_zero:
            return SC_ZERO
        p = self.phase_factor / o.phase_factor
        return ScaledComplex(
            self.log_magnitude - o.log_magnitude + math.log(abs(p)), p / abs(p)
        )

    def __rtruediv__(self, other) -> "ScaledComplex":
        return self._coerce(other) / self

    def __neg__(self) -> "ScaledComplex":
        if self.is_zero:
            return SC_ZERO
        return ScaledComplex(self.log_magnitude, -self.phase_factor)

    def __add__(self, other) -> "ScaledComplex":
        o = self._coerce(other)
        if self.is_zero:
            return o
        if o.is_zero:
            return self
        base = max(self.log_magnitude, o.log_magnitude)
        m = self.phase_factor * math.exp(self.log_magnitude - base) \
            + o.phase_factor * math.exp(o.log_magnitude - base)
        a = abs(m)
        if a == 0.0:
            return SC_ZERO
        return ScaledComplex(base + math.log(a), m / a)

    __radd__ = __add__

    def __sub__(self, other) -> "ScaledComplex":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "ScaledComplex":
        return self._coerce(other) + (-self)

    def conjugate(self) -> "ScaledComplex":
        if self.is_zero:
            return SC_ZERO
        return ScaledComplex(self.log_magnitude, self.phase_factor.conjugate())

    def scale_exp(self, dlog: float) -> "ScaledComplex":
        """Multiply by exp(dlog) without touching the phase."""
        if self.is_zero:
            return SC_ZERO
        return ScaledComplex(self.log_magnitude + dlog, self.phase_factor)

    # -- misc ---------------------------------------------------------------

    def arg(self) -> float:
        if self.is_zero:
            return 0.0
        return cmath.phase(self.phase_factor)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        if self.is_zero:
            return "ScaledComplex(0)"
        return (
            f"ScaledComplex(log={self.log_magnitude:.6f}, "
            f"phase={self.phase_factor:.6f})"
        )


SC_ZERO = ScaledComplex(_NEG_INF, 0.0 + 0.0j)
SC_ONE = ScaledComplex(0.0, 1.0 + 0.0j)
