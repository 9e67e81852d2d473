"""Energy-detection performance over Rayleigh fading under PU traffic.

Every conditional probability here is the same Rayleigh-averaged detection
kernel evaluated at a different SNR scale. If ``k`` of the ``N`` sensing
samples carry primary signal, the scale is ``(k/2) * gamma_bar_p``:
k = N for H11, N - a for H12, d for H02 and 0 for H01.
"""
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

from scipy.optimize import brentq

from .errors import DegenerateTrafficError, DomainError, ThresholdSolveError
from .specfun import log_regularized_lower_gamma, poisson_tail_sum, regularized_upper_gamma
from .traffic import SystemGeometry, TrafficModel, hypothesis_probabilities

_MIN_CLASS_MASS = 1e-300


@dataclass(frozen=True)
class ChannelModel:
    """Rayleigh link parameters.

    ``lambda_*`` are the exponential parameters of the channel power gains
    (mean 1/lambda): ``h`` is PT->ST, ``chi`` is PT->SR, ``g`` is ST->SR.
    """

    lambda_h: float = 1.0
    lambda_chi: float = 1.0
    lambda_g: float = 1.0
    sigma_st_sq: float = 10 ** -0.5
    sigma_sr_sq: float = 0.01
    p_primary: float = 1.0
    p_secondary: float = 1.0

    def __post_init__(self):
        for name in ("lambda_h", "lambda_chi", "lambda_g", "sigma_st_sq", "sigma_sr_sq", "p_primary", "p_secondary"):
            value = getattr(self, name)
            if not value > 0 or math.isinf(value):
                raise DomainError(f"{name} must be positive and finite, got {value!r}")

    @classmethod
    def from_snr_db(
        cls,
        primary_snr_db: float = 5.0,
        secondary_snr_db: float = 20.0,
        lambda_h: float = 1.0,
        lambda_chi: float = 1.0,
        lambda_g: float = 1.0,
        p_primary: float = 1.0,
        p_secondary: float = 1.0,
    ) -> "ChannelModel":
        """Derive the noise powers from reference SNRs.

        ``primary_snr_db`` is 10 log10(P_p / (lambda_h sigma_ST^2)) taken at
        P_p = 1, so the actual average primary SNR scales with ``p_primary``.
        ``secondary_snr_db`` is 10 log10(P_s / (lambda_g sigma_SR^2)).
        """
        return cls(
            lambda_h=lambda_h,
            lambda_chi=lambda_chi,
            lambda_g=lambda_g,
            sigma_st_sq=1.0 / (lambda_h * 10 ** (primary_snr_db / 10)),
            sigma_sr_sq=p_secondary / (lambda_g * 10 ** (secondary_snr_db / 10)),
            p_primary=p_primary,
            p_secondary=p_secondary,
        )

    @property
    def gamma_bar_p(self) -> float:
        """Average received primary SNR at the sensing node."""
        return self.p_primary / (self.lambda_h * self.sigma_st_sq)


@dataclass(frozen=True)
class SensingConfig:
    """Either a fixed threshold or a target average detection probability."""

    threshold_eta: Optional[float] = None
    target_pd: Optional[float] = None

    def __post_init__(self):
        if (self.threshold_eta is None) == (self.target_pd is None):
            raise DomainError("exactly one of threshold_eta and target_pd must be given")
        if self.threshold_eta is not None and not self.threshold_eta >= 0:
            raise DomainError(f"threshold must be nonnegative, got {self.threshold_eta}")
        if self.target_pd is not None and not 0 < self.target_pd < 1:
            raise DomainError(f"target_pd must lie in (0, 1), got {self.target_pd}")

    def resolve(self, traffic: TrafficModel, geom: SystemGeometry, channel: ChannelModel) -> float:
        if self.threshold_eta is not None:
            return self.threshold_eta
        return solve_threshold(traffic, geom, channel, self.target_pd)


@dataclass(frozen=True)
class SensingResult:
    avg_pd: float
    avg_pf: float
    pd_h11: float
    pf_h01: float
    # a -> P_D(H12 | a), d -> P_F(H02 | d), both for 1..N
    pd_h12: dict = field(repr=False)
    pf_h02: dict = field(repr=False)


def _check_common(u, eta, snr):
    if isinstance(u, bool) or int(u) != u or u < 1:
        raise DomainError(f"time-bandwidth product must be an integer >= 1, got {u!r}")
    if not eta >= 0:
        raise DomainError(f"threshold must be nonnegative, got {eta!r}")
    if not snr >= 0:
        raise DomainError(f"SNR scale must be nonnegative, got {snr!r}")


def _kernel(u, half_eta, snr_scale, head, central):
    """Kernel body.

    ``head`` is poisson_tail_sum(u, eta/2) and ``central`` is Q(u, eta/2),
    the zero-signal value and a lower bound that rounding must not cross.
    """
    if half_eta == 0:
        return 1.0
    if snr_scale == 0 or math.isinf(half_eta):
        return central
    # ((1+m)/m)^(u-1) [exp(-y/(1+m)) - e^-y sum_{i<=u-2} (y m/(1+m))^i / i!]
    # = exp(-y/(1+m)) b^(1-u) P(u-1, y b),  b = m/(1+m), y = eta/2
    log_b = math.log(snr_scale) - math.log1p(snr_scale)
    yb = half_eta * math.exp(log_b)
    if yb == 0:
        return central
    log_tail = -half_eta / (1.0 + snr_scale) + (1 - u) * log_b + log_regularized_lower_gamma(u - 1, yb)
    return min(1.0, max(central, head + math.exp(log_tail)))


def rayleigh_pd_kernel(u: int, eta: float, snr_scale: float) -> float:
    """Rayleigh-averaged detection probability with SNR scale ``m``.

    This is E[Q_u(sqrt(2 m g), sqrt(eta))] for g ~ Exp(1), i.e. the
    energy-detector closed form

        e^{-eta/2} sum_{i=0}^{u-2} (eta/2)^i / i!
        + ((1+m)/m)^{u-1} [e^{-eta/(2(1+m))}
                           - e^{-eta/2} sum_{i=0}^{u-2} (eta m / (2(1+m)))^i / i!].

    The bracket is rewritten as e^{-eta/(2(1+m))} b^{u-1} P(u-1, eta b / 2)
    with b = m/(1+m), an identity that avoids the cancellation between the
    two bracket terms when ((1+m)/m)^{u-1} is huge. ``m = 0`` is the
    continuous limit Q(u, eta/2).
    """
    _check_common(u, eta, snr_scale)
    u = int(u)
    half_eta = 0.5 * eta
    head = poisson_tail_sum(u, half_eta) if 0 < half_eta < math.inf else 0.0
    return _kernel(u, half_eta, snr_scale, head, regularized_upper_gamma(u, half_eta))


@lru_cache(maxsize=8192)
def _conditionals(u: int, eta: float, gamma_bar_p: float) -> tuple:
    """Kernel values for k = 0..2u signal-bearing sensing samples."""
    half_eta = 0.5 * eta
    head = poisson_tail_sum(u, half_eta) if 0 < half_eta < math.inf else 0.0
    central = regularized_upper_gamma(u, half_eta)
    return tuple(_kernel(u, half_eta, (k / 2) * gamma_bar_p, head, central) for k in range(2 * u + 1))


def _signal_samples_check(value, n, name):
    if isinstance(value, bool) or int(value) != value or not 0 <= value <= n:
        raise DomainError(f"{name} must be an integer in 0..{n}, got {value!r}")


def pd_h11(u: int, eta: float, gamma_bar_p: float) -> float:
    """Detection probability when the PU is present for the whole sensing window."""
    return rayleigh_pd_kernel(u, eta, u * gamma_bar_p)


def pd_h12(u: int, a: int, eta: float, gamma_bar_p: float) -> float:
    """Detection probability when the PU arrives after ``a`` noise-only samples."""
    _signal_samples_check(a, 2 * u, "arrival sample")
    return rayleigh_pd_kernel(u, eta, ((2 * u - a) / 2) * gamma_bar_p)


def pf_h01(u: int, eta: float) -> float:
    """False-alarm probability with no primary signal: Q(u, eta/2)."""
    _check_common(u, eta, 0.0)
    return regularized_upper_gamma(int(u), 0.5 * eta)


def pf_h02(u: int, d: int, eta: float, gamma_bar_p: float) -> float:
    """False-alarm probability when the PU departs after ``d`` signal samples."""
    _signal_samples_check(d, 2 * u, "departure sample")
    return rayleigh_pd_kernel(u, eta, (d / 2) * gamma_bar_p)


def _validate_eta(eta):
    if not eta >= 0:
        raise DomainError(f"threshold must be nonnegative, got {eta!r}")


def sensing_result(traffic: TrafficModel, geom: SystemGeometry, channel: ChannelModel, eta: float) -> SensingResult:
    """Traffic-averaged detection and false-alarm probabilities at threshold ``eta``."""
    _validate_eta(eta)
    hp = hypothesis_probabilities(traffic, geom)
    n, u = geom.n_sense, geom.u
    cond = _conditionals(u, float(eta), channel.gamma_bar_p)

    busy = hp.p_h11 + hp.p_h12
    idle = hp.p_h01 + hp.p_h02
    if busy < _MIN_CLASS_MASS or idle < _MIN_CLASS_MASS:
        raise DegenerateTrafficError(f"hypothesis class mass vanished (busy={busy}, idle={idle})")

    arr = hp.arrival_terms
    dep = hp.departure_terms
    avg_pd = math.fsum([hp.p_h11 * cond[n]] + [arr[a - 1] * cond[n - a] for a in range(1, n + 1)]) / busy
    avg_pf = math.fsum([hp.p_h01 * cond[0]] + [dep[d - 1] * cond[d] for d in range(1, n + 1)]) / idle
    return SensingResult(
        avg_pd=min(1.0, avg_pd),
        avg_pf=min(1.0, avg_pf),
        pd_h11=cond[n],
        pf_h01=cond[0],
        pd_h12={a: cond[n - a] for a in range(1, n + 1)},
        pf_h02={d: cond[d] for d in range(1, n + 1)},
    )


def average_pd(traffic: TrafficModel, geom: SystemGeometry, channel: ChannelModel, eta: float) -> float:
    return sensing_result(traffic, geom, channel, eta).avg_pd


def average_pf(traffic: TrafficModel, geom: SystemGeometry, channel: ChannelModel, eta: float) -> float:
    return sensing_result(traffic, geom, channel, eta).avg_pf


def solve_threshold(
    traffic: TrafficModel,
    geom: SystemGeometry,
    channel: ChannelModel,
    target_pd: float,
    tol: float = 1e-9,
) -> float:
    """Threshold at which the average detection probability equals ``target_pd``.

    The map eta -> P_D is strictly decreasing from 1 at eta = 0. The upper
    bracket starts at 2u and doubles until P_D drops below the target; Brent's
    method then refines it.

    Raises:
        ThresholdSolveError: if no bracket is found or the residual exceeds ``tol``.
    """
    if not 0 < target_pd < 1:
        raise DomainError(f"target_pd must lie in (0, 1), got {target_pd}")

    def excess(eta):
        return average_pd(traffic, geom, channel, eta) - target_pd

    lo, hi = 0.0, float(2 * geom.u)
    for _ in range(200):
        if excess(hi) < 0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise ThresholdSolveError(f"could not bracket target P_D={target_pd} (reached eta={hi:g})")

    eta = brentq(excess, lo, hi, xtol=1e-14, rtol=4 * 2.220446049250313e-16, maxiter=500)
    residual = excess(eta)
    if abs(residual) > tol:
        raise ThresholdSolveError(f"threshold residual {residual:.3e} exceeds {tol:.1e} at eta={eta}")
    return eta


def conventional_pd(u: int, eta: float, gamma_bar_p: float) -> float:
    """Detection probability without PU traffic (PU present all frame)."""
    return pd_h11(u, eta, gamma_bar_p)


def conventional_pf(u: int, eta: float) -> float:
    """False-alarm probability without PU traffic."""
    return pf_h01(u, eta)
