"""Secondary throughput and outage under an SNR constraint."""
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvariantViolation
from .sensing import ChannelModel, sensing_result, solve_threshold
from .traffic import SystemGeometry, TrafficModel, hypothesis_probabilities

_INVARIANT_SLACK = 1e-12


@dataclass(frozen=True)
class SnrConstraint:
    """Minimum SNR (linear) a secondary transmission must reach."""

    gamma_s: float

    def __post_init__(self):
        if not self.gamma_s > 0 or math.isinf(self.gamma_s):
            raise DomainError(f"gamma_s must be positive and finite, got {self.gamma_s}")

    @classmethod
    def from_db(cls, gamma_s_db: float) -> "SnrConstraint":
        return cls(10 ** (gamma_s_db / 10))

    @property
    def rate_floor(self) -> float:
        """log2(1 + gamma_s), bits/s/Hz."""
        return math.log2(1.0 + self.gamma_s)


@dataclass(frozen=True)
class ThroughputReport:
    r_h11: float
    r_h12: float
    r_h01: float
    r_h02: float
    r_total: float
    p_success: float
    outage: float
    avg_pd: float
    avg_pf: float
    eta: float
    rate_floor: float


def local_idle(channel: ChannelModel, constraint: SnrConstraint) -> float:
    """Throughput of a transmission with the PU absent: P(SNR > gamma_s) * log2(1 + gamma_s)."""
    success = math.exp(-channel.sigma_sr_sq * channel.lambda_g * constraint.gamma_s / channel.p_secondary)
    return success * constraint.rate_floor


def local_busy(channel: ChannelModel, constraint: SnrConstraint) -> float:
    """Same as :func:`local_idle` but with Rayleigh interference from the PU transmitter."""
    attenuation = channel.lambda_chi / (
        channel.lambda_chi + channel.lambda_g * constraint.gamma_s * channel.p_primary / channel.p_secondary
    )
    return attenuation * local_idle(channel, constraint)


def _mix_check(k, geom, name):
    n, m = geom.n_sense, geom.m_frame
    if isinstance(k, bool) or int(k) != k or not n <= k <= m:
        raise DomainError(f"{name} must be an integer in {n}..{m}, got {k!r}")


def local_h11(d: int, geom: SystemGeometry, channel: ChannelModel, constraint: SnrConstraint) -> float:
    """PU busy through sensing, departs after sample ``d`` of the frame."""
    _mix_check(d, geom, "departure sample")
    n, m = geom.n_sense, geom.m_frame
    return ((d - n) / (m - n)) * local_busy(channel, constraint) + ((m - d) / (m - n)) * local_idle(channel, constraint)


def local_h01(a: int, geom: SystemGeometry, channel: ChannelModel, constraint: SnrConstraint) -> float:
    """PU idle through sensing, arrives after sample ``a`` of the frame."""
    _mix_check(a, geom, "arrival sample")
    n, m = geom.n_sense, geom.m_frame
    return ((m - a) / (m - n)) * local_busy(channel, constraint) + ((a - n) / (m - n)) * local_idle(channel, constraint)


def throughput_components(
    traffic: TrafficModel,
    geom: SystemGeometry,
    channel: ChannelModel,
    constraint: SnrConstraint,
    eta: float,
) -> ThroughputReport:
    """Minimum average throughput split by sensing hypothesis.

    The H01 bracket is the no-arrival term plus the arrivals during the
    transmission period, mirroring the H11 bracket.
    """
    sr = sensing_result(traffic, geom, channel, eta)
    hp = hypothesis_probabilities(traffic, geom)
    n, m = geom.n_sense, geom.m_frame
    frac = geom.transmit_fraction
    l_idle = local_idle(channel, constraint)
    l_busy = local_busy(channel, constraint)

    # change samples k = N+1..M-1 inside the transmission period
    k = np.arange(n + 1, m)
    w_busy = (k - n) / (m - n)
    l11 = w_busy * l_busy + (1.0 - w_busy) * l_idle
    l01 = (1.0 - w_busy) * l_busy + w_busy * l_idle
    dep_tx = hp.departure_terms[n:]
    arr_tx = hp.arrival_terms[n:]

    miss = 1.0 - sr.avg_pd
    clear = 1.0 - sr.avg_pf
    r_h11 = frac * miss * math.fsum([hp.busy_stay * l_busy] + list(dep_tx * l11))
    r_h12 = frac * miss * math.fsum(hp.arrival_terms[:n] * l_busy)
    r_h01 = frac * clear * math.fsum([hp.idle_stay * l_idle] + list(arr_tx * l01))
    r_h02 = frac * clear * math.fsum(hp.departure_terms[:n] * l_idle)

    r_total = math.fsum((r_h11, r_h12, r_h01, r_h02))
    rate_floor = constraint.rate_floor
    if r_total > frac * rate_floor * (1 + _INVARIANT_SLACK):
        raise InvariantViolation(f"r_total={r_total} exceeds transmit-fraction bound {frac * rate_floor}")
    p_success = r_total / rate_floor
    return ThroughputReport(
        r_h11=r_h11,
        r_h12=r_h12,
        r_h01=r_h01,
        r_h02=r_h02,
        r_total=r_total,
        p_success=p_success,
        outage=1.0 - p_success,
        avg_pd=sr.avg_pd,
        avg_pf=sr.avg_pf,
        eta=float(eta),
        rate_floor=rate_floor,
    )


def outage(report: ThroughputReport, constraint: SnrConstraint) -> float:
    """1 - R / log2(1 + gamma_s).

    Raises:
        InvariantViolation: if the report's throughput exceeds the rate floor.
    """
    value = 1.0 - report.r_total / constraint.rate_floor
    if not -_INVARIANT_SLACK <= value <= 1.0 + _INVARIANT_SLACK:
        raise InvariantViolation(f"outage {value} outside [0, 1] (r_total={report.r_total})")
    return value


def evaluate(
    traffic: TrafficModel,
    geom: SystemGeometry,
    channel: ChannelModel,
    constraint: SnrConstraint,
    target_pd: float,
) -> ThroughputReport:
    """Throughput report with the threshold solved for ``target_pd``."""
    eta = solve_threshold(traffic, geom, channel, target_pd)
    return throughput_components(traffic, geom, channel, constraint, eta)


def admissible_sensing_samples(m_frame: int) -> list:
    """Even sensing sample counts N with 2 <= N <= M - 2."""
    return list(range(2, m_frame - 1, 2))


def optimize_sensing_duration(
    traffic: TrafficModel,
    channel: ChannelModel,
    constraint: SnrConstraint,
    t_frame: float,
    t_samp: float,
    target_pd: float,
    candidates=None,
):
    """Exhaustive scan for the sensing duration maximizing ``r_total``.

    ``candidates`` optionally restricts the scan to given sensing sample
    counts. Ties go to the smaller N.

    Returns:
        (t_sense, ThroughputReport) at the optimum.
    """
    m = round(t_frame / t_samp)
    grid = admissible_sensing_samples(m) if candidates is None else sorted(set(candidates))
    if not grid:
        raise DomainError(f"no admissible sensing duration for M={m}")
    best = None
    for n in grid:
        geom = SystemGeometry(t_samp=t_samp, t_sense=n * t_samp, t_frame=t_frame)
        report = evaluate(traffic, geom, channel, constraint, target_pd)
        if best is None or report.r_total > best[1].r_total:
            best = (geom.t_sense, report)
    return best
