"""Frame-level Monte Carlo oracle for detection, throughput and outage.

Two trajectory modes are supported:

* ``exact``: the PU trajectory is drawn from the single-transition term
  list used by the analytic model, renormalized to a distribution.
* ``chain``: the unrestricted per-sample two-state Markov chain, started
  from its stationary law, so frames with several transitions occur too.

A frame is in the busy class when the PU occupies the first transmission
sample (sample N+1); this reproduces the H11/H12 vs H01/H02 split exactly.
Given the number k of signal-bearing sensing samples, the normalized energy
statistic is noncentral chi-square with 2u degrees of freedom and
noncentrality k * gamma, gamma ~ Exp(mean gamma_bar_p) per frame.

Frames are processed in fixed-size blocks, each with its own RNG stream
keyed by (seed, block index). Results therefore do not depend on how many
workers run the blocks.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Optional

import numpy as np

from .errors import DomainError
from .sensing import ChannelModel
from .throughput import SnrConstraint
from .traffic import SystemGeometry, TrafficModel, hypothesis_probabilities, transition_matrix

BLOCK_SIZE = 8192
MODES = ("exact", "chain")


class Hypothesis(IntEnum):
    H11 = 0
    H12 = 1
    H01 = 2
    H02 = 3
    MULTI = 4


@dataclass(frozen=True)
class FrameOutcome:
    hypothesis: Hypothesis
    change_sample: int
    detector_statistic: float
    decision_busy: bool
    transmitted: bool
    throughput_contribution: float


@dataclass(frozen=True)
class TrajectoryBatch:
    hypothesis: np.ndarray
    change_sample: np.ndarray
    busy_sensing: np.ndarray  # signal-bearing sensing samples
    busy_transmit: np.ndarray  # PU-occupied transmission samples
    busy_class: np.ndarray


@dataclass(frozen=True)
class McEstimate:
    n_frames: int
    avg_pd_hat: Optional[float]
    avg_pf_hat: Optional[float]
    r_hat: float
    outage_hat: float
    std_errors: dict
    mode: str
    seed: int
    hypothesis_counts: dict = field(default_factory=dict)


def _exact_batch(traffic, geom, rng, size):
    hp = hypothesis_probabilities(traffic, geom)
    n, m = geom.n_sense, geom.m_frame
    weights = np.concatenate(([hp.busy_stay, hp.idle_stay], hp.departure_terms, hp.arrival_terms))
    cdf = np.cumsum(weights)
    idx = np.searchsorted(cdf, rng.random(size) * cdf[-1], side="right")
    idx = np.minimum(idx, len(weights) - 1)

    hyp = np.empty(size, dtype=np.int8)
    change = np.zeros(size, dtype=np.int64)
    bs = np.zeros(size, dtype=np.int64)
    bt = np.zeros(size, dtype=np.int64)

    stay_busy = idx == 0
    hyp[stay_busy] = Hypothesis.H11
    bs[stay_busy] = n
    bt[stay_busy] = m - n
    hyp[idx == 1] = Hypothesis.H01

    dep = (idx >= 2) & (idx <= m)
    d = idx[dep] - 1
    change[dep] = d
    bs[dep] = np.minimum(d, n)
    bt[dep] = np.maximum(d - n, 0)
    hyp[dep] = np.where(d <= n, Hypothesis.H02, Hypothesis.H11)

    arr = idx > m
    a = idx[arr] - m
    change[arr] = a
    bs[arr] = n - np.minimum(a, n)
    bt[arr] = m - np.maximum(a, n)
    hyp[arr] = np.where(a <= n, Hypothesis.H12, Hypothesis.H01)

    busy_class = (hyp == Hypothesis.H11) | (hyp == Hypothesis.H12)
    return TrajectoryBatch(hyp, change, bs, bt, busy_class)


def _chain_states(traffic, geom, rng, size):
    tm = transition_matrix(traffic, geom.t_samp)
    m = geom.m_frame
    states = np.empty((size, m + 1), dtype=bool)
    states[:, 0] = rng.random(size) < traffic.stationary_busy
    steps = rng.random((size, m))
    for k in range(1, m + 1):
        prev = states[:, k - 1]
        states[:, k] = np.where(prev, steps[:, k - 1] < tm.p_bb, steps[:, k - 1] < tm.p_ib)
    return states


def _label_states(states, n):
    size, m1 = states.shape
    m = m1 - 1
    flips = states[:, 1:] != states[:, :-1]
    n_flips = flips.sum(axis=1)
    first = np.argmax(flips, axis=1)  # step index k-1 of the first flip
    start_busy = states[:, 0]

    hyp = np.full(size, Hypothesis.MULTI, dtype=np.int8)
    change = np.zeros(size, dtype=np.int64)
    none = n_flips == 0
    hyp[none & start_busy] = Hypothesis.H11
    hyp[none & ~start_busy] = Hypothesis.H01

    one = n_flips == 1
    # a flip at step k means samples 1..k-1 keep the initial state
    k_minus_1 = first
    dep = one & start_busy
    arr = one & ~start_busy
    change[dep] = k_minus_1[dep]
    change[arr] = k_minus_1[arr]
    hyp[dep] = np.where(k_minus_1[dep] > n, Hypothesis.H11, np.where(k_minus_1[dep] == 0, Hypothesis.H01, Hypothesis.H02))
    hyp[arr] = np.where(k_minus_1[arr] > n, Hypothesis.H01, np.where(k_minus_1[arr] == 0, Hypothesis.H11, Hypothesis.H12))

    bs = states[:, 1 : n + 1].sum(axis=1).astype(np.int64)
    bt = states[:, n + 1 :].sum(axis=1).astype(np.int64)
    return TrajectoryBatch(hyp, change, bs, bt, states[:, n + 1].copy())


def sample_trajectories(traffic: TrafficModel, geom: SystemGeometry, rng, size: int, mode: str = "exact") -> TrajectoryBatch:
    """Draw ``size`` frame trajectories and summarize them."""
    if mode == "exact":
        return _exact_batch(traffic, geom, rng, size)
    if mode == "chain":
        return _label_states(_chain_states(traffic, geom, rng, size), geom.n_sense)
    raise DomainError(f"unknown mode {mode!r}; expected one of {MODES}")


def _states_from_change(hyp, change, n, m):
    states = np.empty(m + 1, dtype=bool)
    if hyp == Hypothesis.H11 and change == 0:
        states[:] = True
    elif hyp == Hypothesis.H01 and change == 0:
        states[:] = False
    elif hyp in (Hypothesis.H11, Hypothesis.H02):
        states[: change + 1] = True
        states[change + 1 :] = False
    else:
        states[: change + 1] = False
        states[change + 1 :] = True
    return states


def sample_trajectory(traffic: TrafficModel, geom: SystemGeometry, rng, mode: str = "exact"):
    """One frame: (busy-state array of length M+1, hypothesis, change sample).

    Entry 0 is the state just before the frame; entries 1..M are the samples.
    ``change_sample`` is the number of samples that keep the initial state
    (a or d), 0 if the PU never changes state.
    """
    n, m = geom.n_sense, geom.m_frame
    if mode == "chain":
        states = _chain_states(traffic, geom, rng, 1)
        batch = _label_states(states, n)
        return states[0], Hypothesis(int(batch.hypothesis[0])), int(batch.change_sample[0])
    batch = sample_trajectories(traffic, geom, rng, 1, mode)
    hyp, change = Hypothesis(int(batch.hypothesis[0])), int(batch.change_sample[0])
    return _states_from_change(hyp, change, n, m), hyp, change


def signal_samples(hypothesis: Hypothesis, change_sample: int, n_sense: int) -> int:
    """Number of sensing samples that carry primary signal."""
    if hypothesis == Hypothesis.H11:
        return n_sense
    if hypothesis == Hypothesis.H12:
        return n_sense - change_sample
    if hypothesis == Hypothesis.H02:
        return change_sample
    if hypothesis == Hypothesis.H01:
        return 0
    raise DomainError("multi-transition frames need the full state sequence")


def sample_detector_statistics(busy_sensing, channel: ChannelModel, geom: SystemGeometry, rng) -> np.ndarray:
    """Energy statistics for frames with ``busy_sensing`` signal samples each."""
    busy_sensing = np.asarray(busy_sensing)
    gamma = rng.exponential(channel.gamma_bar_p, size=busy_sensing.shape)
    return rng.noncentral_chisquare(2 * geom.u, busy_sensing * gamma)


def sample_detector_statistic(hypothesis, change_sample, channel: ChannelModel, geom: SystemGeometry, rng) -> float:
    k = signal_samples(Hypothesis(hypothesis), change_sample, geom.n_sense)
    return float(sample_detector_statistics(np.array([k]), channel, geom, rng)[0])


def simulate_transmission(busy_transmit, channel: ChannelModel, constraint: SnrConstraint, geom: SystemGeometry, rng) -> np.ndarray:
    """Throughput contribution of transmitting frames.

    One ST->SR gain and one PT->SR gain are drawn per frame; the PU-free and
    PU-occupied parts of the transmission period succeed or fail according
    to the SNR and SINR against ``gamma_s`` respectively.
    """
    busy_transmit = np.asarray(busy_transmit)
    g = rng.exponential(1.0 / channel.lambda_g, size=busy_transmit.shape)
    chi = rng.exponential(1.0 / channel.lambda_chi, size=busy_transmit.shape)
    ok_idle = channel.p_secondary * g / channel.sigma_sr_sq > constraint.gamma_s
    ok_busy = channel.p_secondary * g / (channel.sigma_sr_sq + channel.p_primary * chi) > constraint.gamma_s
    w_busy = busy_transmit / (geom.m_frame - geom.n_sense)
    return geom.transmit_fraction * constraint.rate_floor * ((1.0 - w_busy) * ok_idle + w_busy * ok_busy)


def _run_block(args):
    traffic, geom, channel, constraint, eta, mode, seed, block, size = args
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))
    traj = sample_trajectories(traffic, geom, rng, size, mode)
    stat = sample_detector_statistics(traj.busy_sensing, channel, geom, rng)
    decide_busy = stat > eta
    contribution = simulate_transmission(traj.busy_transmit, channel, constraint, geom, rng)
    contribution[decide_busy] = 0.0
    return traj.hypothesis, traj.busy_class, decide_busy, contribution


def _mean_and_se(x):
    if x.size == 0:
        return None, None
    mean = float(np.mean(x))
    if x.size < 2:
        return mean, None
    return mean, float(np.std(x, ddof=1) / math.sqrt(x.size))


def simulate_frames(traffic, geom, channel, constraint, eta, n_frames, seed, mode="exact", workers=1, block_size=BLOCK_SIZE):
    """Per-frame arrays (hypothesis, busy_class, decision_busy, contribution) in frame order."""
    if mode not in MODES:
        raise DomainError(f"unknown mode {mode!r}; expected one of {MODES}")
    if n_frames < 1:
        raise DomainError(f"n_frames must be >= 1, got {n_frames}")
    n_blocks = -(-n_frames // block_size)
    jobs = [
        (traffic, geom, channel, constraint, float(eta), mode, int(seed), b, min(block_size, n_frames - b * block_size))
        for b in range(n_blocks)
    ]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_block, jobs))
    else:
        parts = [_run_block(job) for job in jobs]
    return tuple(np.concatenate(col) for col in zip(*parts))


def frame_outcomes(traffic, geom, channel, constraint, eta, n_frames, seed, mode="exact"):
    """The simulated frames as :class:`FrameOutcome` records (for inspection, not speed)."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    traj = sample_trajectories(traffic, geom, rng, n_frames, mode)
    stat = sample_detector_statistics(traj.busy_sensing, channel, geom, rng)
    contribution = simulate_transmission(traj.busy_transmit, channel, constraint, geom, rng)
    out = []
    for i in range(n_frames):
        busy = bool(stat[i] > eta)
        out.append(
            FrameOutcome(
                hypothesis=Hypothesis(int(traj.hypothesis[i])),
                change_sample=int(traj.change_sample[i]),
                detector_statistic=float(stat[i]),
                decision_busy=busy,
                transmitted=not busy,
                throughput_contribution=0.0 if busy else float(contribution[i]),
            )
        )
    return out


def estimate(
    traffic: TrafficModel,
    geom: SystemGeometry,
    channel: ChannelModel,
    constraint: SnrConstraint,
    eta: float,
    n_frames: int,
    seed: int,
    mode: str = "exact",
    workers: int = 1,
) -> McEstimate:
    """Empirical P_D, P_F, throughput and outage with standard errors.

    P_D is estimated over busy-class frames only and P_F over idle-class
    frames. A standard error is ``None`` when fewer than two frames feed it.
    """
    hyp, busy_class, decide_busy, contribution = simulate_frames(
        traffic, geom, channel, constraint, eta, n_frames, seed, mode, workers
    )
    pd_hat, pd_se = _mean_and_se(decide_busy[busy_class].astype(float))
    pf_hat, pf_se = _mean_and_se(decide_busy[~busy_class].astype(float))
    r_hat, r_se = _mean_and_se(contribution)
    rate_floor = constraint.rate_floor
    counts = {h.name: int(np.count_nonzero(hyp == h)) for h in Hypothesis}
    return McEstimate(
        n_frames=int(n_frames),
        avg_pd_hat=pd_hat,
        avg_pf_hat=pf_hat,
        r_hat=r_hat,
        outage_hat=1.0 - r_hat / rate_floor,
        std_errors={
            "avg_pd": pd_se,
            "avg_pf": pf_se,
            "r_total": r_se,
            "outage": None if r_se is None else r_se / rate_floor,
        },
        mode=mode,
        seed=int(seed),
        hypothesis_counts=counts,
    )
