"""Busy/idle primary-user traffic and the per-frame hypothesis probabilities."""
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class TrafficModel:
    """Two-state continuous-time Markov traffic.

    ``alpha`` is the idle->busy (arrival) rate and ``beta`` the busy->idle
    (departure) rate, both in 1/s, so the PU is busy a fraction
    alpha / (alpha + beta) of the time.
    """

    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0) or math.isinf(self.alpha) or math.isinf(self.beta):
            raise DomainError(f"traffic rates must be positive and finite, got alpha={self.alpha}, beta={self.beta}")

    @property
    def stationary_busy(self) -> float:
        return self.alpha / (self.alpha + self.beta)

    @property
    def stationary_idle(self) -> float:
        return self.beta / (self.alpha + self.beta)


@dataclass(frozen=True)
class TransitionMatrix:
    p_ii: float
    p_ib: float
    p_bi: float
    p_bb: float

    def as_array(self) -> np.ndarray:
        """Rows/columns ordered (idle, busy)."""
        return np.array([[self.p_ii, self.p_ib], [self.p_bi, self.p_bb]])


@dataclass(frozen=True)
class SystemGeometry:
    """Frame timing in seconds; sample counts are derived by rounding."""

    t_samp: float
    t_sense: float
    t_frame: float

    def __post_init__(self):
        if not self.t_samp > 0:
            raise DomainError(f"sample interval must be positive, got {self.t_samp}")
        if not 0 < self.t_sense < self.t_frame:
            raise DomainError(f"need 0 < t_sense < t_frame, got {self.t_sense}, {self.t_frame}")
        n, m = self.n_sense, self.m_frame
        if n < 2 or n % 2:
            raise DomainError(f"sensing sample count must be even and >= 2, got N={n}")
        if not n < m:
            raise DomainError(f"need N < M, got N={n}, M={m}")

    @classmethod
    def from_samples(cls, n_sense: int, m_frame: int, t_samp: float = 1e-4) -> "SystemGeometry":
        return cls(t_samp=t_samp, t_sense=n_sense * t_samp, t_frame=m_frame * t_samp)

    @property
    def n_sense(self) -> int:
        return round(self.t_sense / self.t_samp)

    @property
    def m_frame(self) -> int:
        return round(self.t_frame / self.t_samp)

    @property
    def u(self) -> int:
        return self.n_sense // 2

    @property
    def transmit_fraction(self) -> float:
        return (self.m_frame - self.n_sense) / self.m_frame

    def validity_ratio(self, traffic: TrafficModel) -> float:
        """M*T_samp / min(1/alpha, 1/beta); the single-transition model needs this << 1."""
        return self.m_frame * self.t_samp * max(traffic.alpha, traffic.beta)


@dataclass(frozen=True)
class HypothesisProbabilities:
    """Probabilities of the four sensing hypotheses over one frame.

    ``arrival_terms[a - 1]`` is P_I P_II^a P_IB P_BB^(M-a-1) and
    ``departure_terms[d - 1]`` is P_B P_BB^d P_BI P_II^(M-d-1), for
    a, d = 1..M-1. ``busy_stay`` and ``idle_stay`` are the no-transition
    masses P_B P_BB^M and P_I P_II^M.
    """

    p_h11: float
    p_h12: float
    p_h01: float
    p_h02: float
    n_sense: int
    m_frame: int
    busy_stay: float
    idle_stay: float
    arrival_terms: np.ndarray = field(repr=False)
    departure_terms: np.ndarray = field(repr=False)

    @property
    def p_busy_class(self) -> float:
        return self.p_h11 + self.p_h12

    @property
    def p_idle_class(self) -> float:
        return self.p_h01 + self.p_h02


def transition_matrix(traffic: TrafficModel, t: float) -> TransitionMatrix:
    """Transition probabilities of the busy/idle chain over ``t`` seconds.

    Each row relaxes to the stationary law (P_I, P_B) at rate alpha + beta.
    """
    if not t >= 0:
        raise DomainError(f"elapsed time must be nonnegative, got {t}")
    p_b, p_i = traffic.stationary_busy, traffic.stationary_idle
    # 1 - exp(-(alpha+beta) t), accurate for small t
    mix = -math.expm1(-(traffic.alpha + traffic.beta) * t)
    p_ib = p_b * mix
    p_bi = p_i * mix
    return TransitionMatrix(p_ii=1.0 - p_ib, p_ib=p_ib, p_bi=p_bi, p_bb=1.0 - p_bi)


def hypothesis_probabilities(traffic: TrafficModel, geom: SystemGeometry) -> HypothesisProbabilities:
    tm = transition_matrix(traffic, geom.t_samp)
    n, m = geom.n_sense, geom.m_frame
    p_b, p_i = traffic.stationary_busy, traffic.stationary_idle
    log_ii = math.log1p(-tm.p_ib)
    log_bb = math.log1p(-tm.p_bi)

    k = np.arange(1, m, dtype=float)
    arrival = p_i * tm.p_ib * np.exp(k * log_ii + (m - k - 1) * log_bb)
    departure = p_b * tm.p_bi * np.exp(k * log_bb + (m - k - 1) * log_ii)
    busy_stay = p_b * math.exp(m * log_bb)
    idle_stay = p_i * math.exp(m * log_ii)

    return HypothesisProbabilities(
        p_h11=busy_stay + math.fsum(departure[n:]),
        p_h12=math.fsum(arrival[:n]),
        p_h01=idle_stay + math.fsum(arrival[n:]),
        p_h02=math.fsum(departure[:n]),
        n_sense=n,
        m_frame=m,
        busy_stay=busy_stay,
        idle_stay=idle_stay,
        arrival_terms=arrival,
        departure_terms=departure,
    )


def residual_mass(hp: HypothesisProbabilities) -> float:
    """Probability mass not assigned to any of the four hypotheses."""
    return 1.0 - math.fsum((hp.p_h11, hp.p_h12, hp.p_h01, hp.p_h02))
