"""Spectrum sensing, secondary throughput and outage under primary-user traffic and Rayleigh fading."""
from .errors import ConfigError, DegenerateTrafficError, DomainError, InvariantViolation, ThresholdSolveError
from .sensing import ChannelModel, SensingConfig, average_pd, average_pf, sensing_result, solve_threshold
from .throughput import SnrConstraint, ThroughputReport, evaluate, optimize_sensing_duration, outage, throughput_components
from .traffic import SystemGeometry, TrafficModel, hypothesis_probabilities, residual_mass, transition_matrix

__version__ = "0.1.0"
