"""Spectral quantities of the noise law and the spiked-model predictions built on them.

Everything here is a pure function of real scalars. The generic spike
machinery (g, zeta, the isolated-eigenvalue equation, variance) is written
against :class:`SpectralModel`, so only the Stieltjes transform, its
derivative and the bulk edge are law specific. The Marchenko-Pastur law is
the one concrete instance.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

from scipy.optimize import brentq

__all__ = [
    "DomainError",
    "SpectralModel",
    "MarchenkoPasturModel",
    "SpikePrediction",
    "companion_stieltjes",
    "companion_stieltjes_derivative",
    "spike_function_g",
    "spike_function_g_derivative",
    "solve_rho",
    "mp_rho_closed_form",
    "zeta",
    "subspace_bias",
    "asymptotic_variance",
    "mp_variance_closed",
    "crlb_high_snr",
    "predict_spike",
    "snr_db_to_power",
    "power_to_snr_db",
]

# Evaluations closer than this to the bulk edge are refused.
EDGE_MARGIN = 1e-11


class DomainError(ValueError):
    """Raised when a spectral function is evaluated outside (lambda_plus, inf)."""


class SpectralModel(ABC):
    """Limiting spectral law of ``X X^*`` seen through its Stieltjes transform.

    Subclasses provide the transform ``m`` on the real half-line right of the
    support, its derivative, the edge ``lambda_plus``, the aspect ratio ``c``
    and the edge value ``g(lambda_plus^+)``.
    """

    c: float
    lambda_plus: float

    @abstractmethod
    def _m(self, x: float) -> float: ...

    @abstractmethod
    def _dm(self, x: float) -> float: ...

    @property
    @abstractmethod
    def g_edge(self) -> float:
        """Limit of ``g(x)`` as ``x`` decreases to ``lambda_plus``."""

    @property
    def detection_threshold(self) -> float:
        """Smallest squared singular value producing an isolated eigenvalue."""
        return 1.0 / self.g_edge

    def check_domain(self, x: float) -> float:
        x = float(x)
        if not x > self.lambda_plus + EDGE_MARGIN:
            raise DomainError(
                f"x={x!r} must exceed the bulk edge lambda_plus={self.lambda_plus!r}"
                f" by more than {EDGE_MARGIN:g}"
            )
        return x

    def stieltjes(self, x: float) -> float:
        """Stieltjes transform ``m(x) = int (t - x)^-1 pi(dt)`` for real ``x > lambda_plus``."""
        return self._m(self.check_domain(x))

    def stieltjes_derivative(self, x: float) -> float:
        return self._dm(self.check_domain(x))


@dataclass(frozen=True)
class MarchenkoPasturModel(SpectralModel):
    """Marchenko-Pastur law with aspect ratio ``c = N / n`` in ``(0, 1]``.

    The edges are derived from ``c``; passing them explicitly is allowed only
    if they agree with ``(1 -+ sqrt(c))^2`` to 1e-12.
    """

    c: float
    lambda_minus: float = field(default=math.nan)
    lambda_plus: float = field(default=math.nan)

    def __post_init__(self) -> None:
        c = float(self.c)
        if not 0.0 < c <= 1.0:
            raise ValueError(f"aspect ratio c must lie in (0, 1], got {c!r}")
        lo = (1.0 - math.sqrt(c)) ** 2
        hi = (1.0 + math.sqrt(c)) ** 2
        for name, expected in (("lambda_minus", lo), ("lambda_plus", hi)):
            given = getattr(self, name)
            if math.isnan(given):
                object.__setattr__(self, name, expected)
            elif abs(given - expected) > 1e-12:
                raise ValueError(f"{name}={given!r} inconsistent with c={c!r}")
        object.__setattr__(self, "c", c)

    @classmethod
    def from_dims(cls, N: int, n: int) -> MarchenkoPasturModel:
        """Model at the finite aspect ratio ``N / n``."""
        return cls(N / n)

    @property
    def g_edge(self) -> float:
        return 1.0 / math.sqrt(self.c)

    def _sqrt_disc(self, x: float) -> float:
        # (1-c-x)^2 - 4cx factored to avoid cancellation near the edge
        return math.sqrt((x - self.lambda_minus) * (x - self.lambda_plus))

    def _m(self, x: float) -> float:
        # rationalised (1-c-x+s)/(2cx); no cancellation for large x
        return -2.0 / (x - 1.0 + self.c + self._sqrt_disc(x))

    def _dm(self, x: float) -> float:
        s = self._sqrt_disc(x)
        m = -2.0 / (x - 1.0 + self.c + s)
        return 0.5 * m * m * (1.0 + (x - 1.0 - self.c) / s)


@dataclass(frozen=True)
class SpikePrediction:
    """Large-dimension predictions for one source of squared amplitude ``omega_sq``.

    ``rho``, ``bias`` and ``sigma_sq`` are ``None`` when the source does not
    separate from the bulk.
    """

    omega_sq: float
    detectable: bool
    rho: float | None
    bias: float | None
    sigma_sq: float | None
    crlb_hs: float


def companion_stieltjes(model: SpectralModel, x: float) -> float:
    """Transform of the ``n x n`` Gram law: ``c m(x) - (1 - c) / x``."""
    x = model.check_domain(x)
    return model.c * model._m(x) - (1.0 - model.c) / x


def companion_stieltjes_derivative(model: SpectralModel, x: float) -> float:
    x = model.check_domain(x)
    return model.c * model._dm(x) + (1.0 - model.c) / (x * x)


def _g(model: SpectralModel, x: float) -> float:
    m = model._m(x)
    mt = model.c * m - (1.0 - model.c) / x
    return x * m * mt


def _dg(model: SpectralModel, x: float) -> float:
    c = model.c
    m, dm = model._m(x), model._dm(x)
    mt = c * m - (1.0 - c) / x
    dmt = c * dm + (1.0 - c) / (x * x)
    return m * mt + x * dm * mt + x * m * dmt


def spike_function_g(model: SpectralModel, x: float) -> float:
    """``g(x) = x m(x) m~(x)``; positive and decreasing to 0 right of the bulk."""
    return _g(model, model.check_domain(x))


def spike_function_g_derivative(model: SpectralModel, x: float) -> float:
    return _dg(model, model.check_domain(x))


def solve_rho(model: SpectralModel, omega_sq: float) -> float | None:
    """Root ``rho > lambda_plus`` of ``omega_sq * g(rho) = 1``, or ``None`` if undetectable.

    ``g`` is monotone on the half-line, so a bracketed Brent search starting
    at ``lambda_plus (1 + 1e-9)`` is safe; up to five Newton steps with the
    closed-form ``g'`` then polish the residual.
    """
    omega_sq = float(omega_sq)
    if omega_sq <= 0.0:
        raise ValueError("omega_sq must be positive")
    if omega_sq <= model.detection_threshold:
        return None

    def f(x: float) -> float:
        return omega_sq * _g(model, x) - 1.0

    lo = model.lambda_plus * (1.0 + 1e-9)
    if f(lo) <= 0.0:
        # root sits within roundoff of the edge
        return lo
    # g(x) ~ 1/x at infinity, so a root exists below ~ omega_sq + lambda_plus
    hi = 2.0 * (omega_sq + model.lambda_plus)
    while f(hi) > 0.0:
        hi *= 2.0
    rho = brentq(f, lo, hi, xtol=1e-8, rtol=1e-15)
    for _ in range(5):
        r = f(rho)
        if abs(r) < 1e-14:
            break
        step = r / (omega_sq * _dg(model, rho))
        if not lo < rho - step:
            break
        rho -= step
    return rho


def mp_rho_closed_form(model: MarchenkoPasturModel, omega_sq: float) -> float:
    """Isolated-eigenvalue limit ``(w^2 + 1)(w^2 + c) / w^2`` for the MP law."""
    if omega_sq <= math.sqrt(model.c):
        raise DomainError(f"omega_sq={omega_sq!r} below detection threshold sqrt(c)")
    return (omega_sq + 1.0) * (omega_sq + model.c) / omega_sq


def zeta(model: SpectralModel, lam: float) -> float:
    """Spike MUSIC correction weight ``g'(lam) / (lam m(lam)^2 m~(lam))``."""
    lam = model.check_domain(lam)
    m = model._m(lam)
    mt = model.c * m - (1.0 - model.c) / lam
    return _dg(model, lam) / (lam * m * m * mt)


def subspace_bias(model: SpectralModel, omega_sq: float) -> float:
    """Limit of ``b^* Pi_hat b / b^* Pi b`` for a source of power ``omega_sq``."""
    rho = solve_rho(model, omega_sq)
    if rho is None:
        raise DomainError(f"omega_sq={omega_sq!r} is undetectable")
    return 1.0 / zeta(model, rho)


def asymptotic_variance(model: SpectralModel, omega_sq: float, D: float) -> float:
    """Limiting variance of ``n^{3/2} (phi_hat - phi)`` from the general formula."""
    if D <= 0:
        raise ValueError("D must be positive")
    rho = solve_rho(model, omega_sq)
    if rho is None:
        raise DomainError(f"omega_sq={omega_sq!r} is undetectable")
    c = model.c
    m, dm = model.stieltjes(rho), model.stieltjes_derivative(rho)
    inner = (dm - m * m) / (c * m * m) + omega_sq * (m + rho * dm)
    return 6.0 / (c * c * D * D) * inner


def mp_variance_closed(model: MarchenkoPasturModel, omega_sq: float, D: float) -> float:
    """MP specialisation ``6 / (c^2 D^2) (w^2 + 1) / (w^4 - c)``."""
    if D <= 0:
        raise ValueError("D must be positive")
    c = model.c
    if omega_sq <= math.sqrt(c):
        raise DomainError(f"omega_sq={omega_sq!r} below detection threshold sqrt(c)")
    return 6.0 / (c * c * D * D) * (omega_sq + 1.0) / (omega_sq * omega_sq - c)


def crlb_high_snr(model: SpectralModel, omega_sq: float, D: float) -> float:
    if omega_sq <= 0 or D <= 0:
        raise ValueError("omega_sq and D must be positive")
    return 6.0 / (model.c**2 * D * D * omega_sq)


def predict_spike(model: SpectralModel, omega_sq: float, D: float = 1.0) -> SpikePrediction:
    rho = solve_rho(model, omega_sq)
    crlb = crlb_high_snr(model, omega_sq, D)
    if rho is None:
        return SpikePrediction(omega_sq, False, None, None, None, crlb)
    return SpikePrediction(
        omega_sq=omega_sq,
        detectable=True,
        rho=rho,
        bias=1.0 / zeta(model, rho),
        sigma_sq=asymptotic_variance(model, omega_sq, D),
        crlb_hs=crlb,
    )


def snr_db_to_power(snr_db: float) -> float:
    return 10.0 ** (snr_db / 10.0)


def power_to_snr_db(omega_sq: float) -> float:
    return 10.0 * math.log10(omega_sq)
