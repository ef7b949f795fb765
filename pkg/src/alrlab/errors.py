"""Exception hierarchy shared across the package.

Every computational failure mode raises a subclass of :class:`AlrError` with a
short, stable message prefix so callers (and the CLI) can classify failures
without string matching on full sentences.
"""
from __future__ import annotations


class AlrError(Exception):
    """Base class for all package errors."""


class NonFiniteArgumentError(AlrError):
    """Raised when a special-function argument is NaN or infinite."""

    def __init__(self, value) -> None:
        super().__init__(f"non-finite argument: {value!r}")
        self.value = value


class HankelOriginError(AlrError):
    """Raised when an outgoing radial function is requested at z = 0."""

    def __init__(self) -> None:
        super().__init__("Hankel singular at origin")


class BranchViolationError(AlrError):
    """Raised when the shell wavenumber leaves the expected quadrant."""

    def __init__(self, k1: complex) -> None:
        super().__init__(f"branch violation: shell wavenumber {k1!r}")
        self.k1 = k1


class ExactModalResonanceError(AlrError):
    """Raised when a modal determinant is exactly zero."""

    def __init__(self, mode: int) -> None:
        super().__init__(f"exact modal resonance at mode {mode}")
        self.mode = mode


class QuadratureFailureError(AlrError):
    """Raised when a radial or surface quadrature fails to converge."""

    def __init__(self, detail: str, mode: int | None = None) -> None:
        msg = f"quadrature failure: {detail}"
        if mode is not None:
            msg += f" (mode {mode})"
        super().__init__(msg)
        self.mode = mode


class OutsideRepresentationError(AlrError):
    """Raised when a field is evaluated outside its region of validity."""

    def __init__(self, radius: float, limit: float) -> None:
        super().__init__(
            f"outside representation region: r = {radius:.6g} >= {limit:.6g}"
        )
        self.radius = radius
        self.limit = limit


class RootSearchError(AlrError):
    """Raised when an iterative root search does not converge."""

    def __init__(self, detail: str) -> None:
        super().__init__(f"no root found: {detail}")


class UnphysicalRootError(AlrError):
    """Raised when a converged root has negative loss."""

    def __init__(self, eps_s: float, delta: float) -> None:
        super().__init__(
            f"unphysical root: eps_s = {eps_s:.9g}, delta = {delta:.6g} < 0"
        )
        self.eps_s = eps_s
        self.delta = delta


class BelowAsymptoticRegimeError(AlrError):
    """Raised when an asymptotic-only quantity is requested at small order."""

    def __init__(self, n: int, n_min: int) -> None:
        super().__init__(f"below asymptotic regime: n = {n} < {n_min}")
        self.n = n
        self.n_min = n_min


class AssumptionViolatedError(AlrError):
    """Raised when a spectral nondegeneracy assumption fails."""

    def __init__(self, degree: int, detail: str = "") -> None:
        msg = f"assumption_kR violated at degree {degree}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.degree = degree


class FormulationMismatchError(AlrError):
    """Raised when two independent formulations disagree beyond tolerance."""

    def __init__(self, detail: str) -> None:
        super().__init__(f"formulation mismatch: {detail}")


class NoCoreError(AlrError):
    """Raised when a core-only quantity is requested for a solid inclusion."""

    def __init__(self) -> None:
        super().__init__("no core: r_i = 0")


class SpecValidationError(AlrError):
    """Raised when an experiment description fails validation."""

    def __init__(self, field: str, detail: str) -> None:
        super().__init__(f"invalid experiment spec at '{field}': {detail}")
        self.field = field
        self.detail = detail
