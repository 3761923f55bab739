"""Exception types raised by the solver stack."""


class SylKrylovError(Exception):
    """Base class for all library errors."""


class RankDeficiencyError(SylKrylovError):
    """A QR factor has a (near-)zero diagonal entry.

    Raised so the caller can decide between deflation and abort; the Krylov
    builders catch it and turn it into a breakdown flag.
    """


class FactorizationError(SylKrylovError):
    """An iterative factorization (SVD or Schur) failed to converge."""


class SpectralClashError(SylKrylovError):
    """Spectra of a Sylvester pair (almost) overlap: some eigenvalue of the
    left matrix equals the negative of an eigenvalue of the right matrix,
    so the equation is singular or severely ill conditioned."""


class SingularOperatorError(SylKrylovError):
    """A sparse factorization hit a zero pivot, or a dense linear system
    turned out singular."""


class SizeGuardError(SylKrylovError):
    """A desk-scale oracle or dense reconstruction was requested at a size
    beyond its memory guard."""


class UnsupportedInputError(SylKrylovError):
    """The requested combination of inputs is outside the method's domain
    (e.g. a nonzero initial value for the exponential-quadrature path)."""
