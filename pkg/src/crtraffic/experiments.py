"""Sweep drivers behind the CLI subcommands.

Each ``run_*`` returns ``(columns, rows)`` with rows as tuples in sweep
order; :func:`write_csv` renders them.
"""
import csv
import io
import math

from . import montecarlo
from .config import ExperimentConfig
from .errors import ConfigError
from .sensing import conventional_pd, conventional_pf, sensing_result, solve_threshold
from .throughput import admissible_sensing_samples, evaluate, optimize_sensing_duration, throughput_components

DEFAULT_ROC_POINTS = 101
MIN_VALIDATION_FRAMES = 10_000
Z_LIMIT = 3.0


def _require_sweep(config, allowed, command):
    if config.sweep_param is not None and config.sweep_param not in allowed:
        raise ConfigError(f"sweep_param: {command} sweeps one of {', '.join(allowed)}, got {config.sweep_param!r}")


def _sensing_grid(config: ExperimentConfig) -> list:
    """Even sensing sample counts, from the t_sense_ms sweep or the full admissible range."""
    m = config.geometry().m_frame
    admissible = admissible_sensing_samples(m)
    if config.sweep_param != "t_sense_ms":
        return admissible
    grid = []
    for t_ms in config.sweep_values():
        n = 2 * round(t_ms / config.t_samp_ms / 2)
        if not 2 <= n <= m - 2:
            raise ConfigError(f"sweep_from/sweep_to: t_sense_ms={t_ms} gives N={n}, outside 2..{m - 2}")
        if n not in grid:
            grid.append(n)
    return grid


def _sensing_ms(config, n):
    return round(n * config.t_samp_ms, 12)


def _at_sensing_samples(config, n):
    return config.with_value("t_sense_ms", _sensing_ms(config, n))


def run_roc(config: ExperimentConfig, conventional: bool = False):
    """Rows (eta, avg_pf, avg_pd) over a threshold sweep."""
    _require_sweep(config, ("eta",), "roc")
    geom, traffic, channel = config.geometry(), config.traffic(), config.channel()
    if config.sweep_param == "eta":
        etas = config.sweep_values()
    else:
        top = 4.0 * geom.n_sense
        etas = [top * i / (DEFAULT_ROC_POINTS - 1) for i in range(DEFAULT_ROC_POINTS)]
    rows = []
    for eta in etas:
        if eta < 0:
            raise ConfigError(f"sweep_from: threshold must be nonnegative, got {eta}")
        if conventional:
            rows.append((eta, conventional_pf(geom.u, eta), conventional_pd(geom.u, eta, channel.gamma_bar_p)))
        else:
            sr = sensing_result(traffic, geom, channel, eta)
            rows.append((eta, sr.avg_pf, sr.avg_pd))
    return ("eta", "avg_pf", "avg_pd"), rows


def run_tradeoff(config: ExperimentConfig):
    """Rows (t_sense_ms, avg_pd, avg_pf, r_total, outage) per admissible N.

    Returns ``(columns, rows, optimum_row)``; the optimum is the first row
    with maximal ``r_total``.
    """
    _require_sweep(config, ("t_sense_ms",), "tradeoff")
    rows = []
    for n in _sensing_grid(config):
        point = _at_sensing_samples(config, n)
        report = evaluate(point.traffic(), point.geometry(), point.channel(), point.constraint(), point.target_pd)
        rows.append((_sensing_ms(config, n), report.avg_pd, report.avg_pf, report.r_total, report.outage))
    best = max(rows, key=lambda r: r[3])  # max() keeps the first of equal maxima
    return ("t_sense_ms", "avg_pd", "avg_pf", "r_total", "outage"), rows, best


def run_traffic_sweep(config: ExperimentConfig):
    """Rows (rate, r_total) while one traffic rate varies."""
    if config.sweep_param not in ("alpha", "beta"):
        raise ConfigError(f"sweep_param: traffic needs alpha or beta, got {config.sweep_param!r}")
    rows = []
    for value in config.sweep_values():
        point = config.with_value(config.sweep_param, value)
        report = evaluate(point.traffic(), point.geometry(), point.channel(), point.constraint(), point.target_pd)
        rows.append((value, report.r_total))
    return (config.sweep_param, "r_total"), rows


def run_outage(config: ExperimentConfig):
    """Rows (sweep value, outage) over t_sense_ms, p_p or gamma_s_db."""
    allowed = ("t_sense_ms", "p_p", "gamma_s_db")
    _require_sweep(config, allowed, "outage")
    rows = []
    if config.sweep_param in (None, "t_sense_ms"):
        for n in _sensing_grid(config):
            point = _at_sensing_samples(config, n)
            report = evaluate(point.traffic(), point.geometry(), point.channel(), point.constraint(), point.target_pd)
            rows.append((_sensing_ms(config, n), report.outage))
        return ("t_sense_ms", "outage"), rows
    for value in config.sweep_values():
        point = config.with_value(config.sweep_param, value)
        report = evaluate(point.traffic(), point.geometry(), point.channel(), point.constraint(), point.target_pd)
        rows.append((value, report.outage))
    return (config.sweep_param, "outage"), rows


def run_optimize(config: ExperimentConfig):
    """Single row at the throughput-maximizing sensing duration."""
    _require_sweep(config, ("t_sense_ms",), "optimize")
    t_samp = config.t_samp_ms * 1e-3
    t_sense, report = optimize_sensing_duration(
        config.traffic(),
        config.channel(),
        config.constraint(),
        t_frame=config.t_frame_ms * 1e-3,
        t_samp=t_samp,
        target_pd=config.target_pd,
        candidates=_sensing_grid(config),
    )
    n = round(t_sense / t_samp)
    return (
        ("t_sense_ms", "n_sense", "eta", "avg_pd", "avg_pf", "r_total", "outage"),
        [(_sensing_ms(config, n), n, report.eta, report.avg_pd, report.avg_pf, report.r_total, report.outage)],
    )


def run_validate(config: ExperimentConfig, mode: str = "exact", workers: int = 1, perturb_eta: float = 0.0):
    """Analytic vs Monte Carlo comparison of P_D, P_F, R and outage.

    ``perturb_eta`` scales the threshold handed to the simulator by
    (1 + perturb_eta), which should make the harness report failures.
    """
    if config.mc_frames < MIN_VALIDATION_FRAMES:
        raise ConfigError(f"mc_frames: validation needs at least {MIN_VALIDATION_FRAMES}, got {config.mc_frames}")
    if config.sweep_param is not None:
        raise ConfigError("sweep_param: validate runs a single operating point")
    traffic, geom, channel, constraint = config.traffic(), config.geometry(), config.channel(), config.constraint()
    eta = solve_threshold(traffic, geom, channel, config.target_pd)
    report = throughput_components(traffic, geom, channel, constraint, eta)
    est = montecarlo.estimate(
        traffic, geom, channel, constraint, eta * (1.0 + perturb_eta), config.mc_frames, config.seed, mode, workers
    )
    rows = []
    for name, analytic, mc in (
        ("avg_pd", report.avg_pd, est.avg_pd_hat),
        ("avg_pf", report.avg_pf, est.avg_pf_hat),
        ("r_total", report.r_total, est.r_hat),
        ("outage", report.outage, est.outage_hat),
    ):
        se = est.std_errors[name]
        if mc is None or se is None:
            z = math.nan
        elif se == 0:
            z = 0.0 if mc == analytic else math.inf
        else:
            z = (mc - analytic) / se
        rows.append((name, analytic, mc, se, z, bool(abs(z) <= Z_LIMIT)))
    return ("quantity", "analytic", "mc_estimate", "std_error", "z_score", "pass"), rows


def _cell(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def write_csv(columns, rows, footer=None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    if footer:
        buf.write(f"# {footer}\n")
    return buf.getvalue()
