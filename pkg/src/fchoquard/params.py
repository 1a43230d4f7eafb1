"""Problem parameters ``(N, s, mu, alpha, p, c)``."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from .errors import ConfigurationError, InvalidExponentError, UnsupportedDimensionError

# slack used when comparing p against the L2-critical exponent
_P_SLACK = 1e-12


@dataclass(frozen=True)
class ProblemParams:
    """Parameters of the mass-constrained fractional Choquard problem.

    Construction only checks structural sanity (dimension, ranges of ``s``
    and ``mu``, signs). The full admissibility window for ``p`` is checked by
    :meth:`check_admissible`, which the solver and the campaigns call; the
    pure functionals accept any ``p > 1`` so that reductions such as
    ``p = 2`` can be exercised directly.

    ``alpha = 0`` is accepted as a control configuration.
    """

    dim: int
    s: float
    mu: float
    alpha: float
    p: float
    c: float

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise UnsupportedDimensionError(f"dimension {self.dim} not supported (1-3)")
        if not 0.0 < self.s <= 1.0:
            raise ConfigurationError(f"fractional order s={self.s} must lie in (0, 1)")
        if not 0.0 < self.mu < self.dim:
            raise InvalidExponentError(f"Riesz exponent mu={self.mu} must lie in (0, N={self.dim})")
        if self.alpha < 0.0:
            raise ConfigurationError("alpha must be nonnegative")
        if self.c <= 0.0:
            raise ConfigurationError("mass parameter c must be positive")
        if self.p <= 1.0:
            raise InvalidExponentError("Hartree exponent p must exceed 1")

    @property
    def two_mu_star(self) -> float:
        """HLS lower-critical exponent ``(2N - mu)/N``."""
        return (2 * self.dim - self.mu) / self.dim

    @property
    def two_mu_s_star(self) -> float:
        """HLS upper-critical exponent ``(2N - mu)/(N - 2s)``."""
        return (2 * self.dim - self.mu) / (self.dim - 2 * self.s)

    @property
    def l2_critical_p(self) -> float:
        return 2.0 + (2 * self.s - self.mu) / self.dim

    @property
    def gamma(self) -> float:
        return (self.dim * (self.p - 2.0) + self.mu) / (2.0 * self.s * self.p)

    @property
    def lower_coeff(self) -> float:
        """Prefactor ``alpha N / (2(2N - mu))`` of the lower-critical term in the energy."""
        return self.alpha * self.dim / (2.0 * (2 * self.dim - self.mu))

    def check_admissible(self) -> "ProblemParams":
        if not self.s < 1.0:
            raise ConfigurationError("s must be strictly below 1")
        if not self.dim > 2 * self.s:
            raise ConfigurationError(f"need N > 2s (N={self.dim}, s={self.s})")
        lo, hi = self.l2_critical_p, self.two_mu_s_star
        if self.p < lo - _P_SLACK or self.p >= hi:
            raise InvalidExponentError(f"p={self.p} outside admissible window [{lo}, {hi})")
        return self

    def replace(self, **changes) -> "ProblemParams":
        d = asdict(self)
        d.update(changes)
        return ProblemParams(**d)

    def as_dict(self) -> dict:
        return asdict(self)
