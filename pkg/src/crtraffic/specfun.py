"""
Special functions behind the energy-detection closed forms.

Incomplete gamma evaluation follows the usual series / continued-fraction
split at x = a + 1 (Numerical Recipes, ch. 6). The x^a e^-x / Gamma(a)
prefactor is computed with Loader's saddle-point decomposition
(``_bd0`` + ``_stirlerr``) so that the relative error stays near machine
precision even when a and x are in the tens of thousands.
"""
import math

from .errors import DomainError

_EPS = 2.220446049250313e-16
_TINY = 1e-300
_MAX_ITER = 100_000
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

# below this the Stirling correction is taken straight from lgamma
_STIRLING_SERIES_CUTOFF = 15.0


def _stirlerr(n):
    """log(n!) - [(n + 1/2) log n - n + log sqrt(2 pi)], n > 0."""
    if n < _STIRLING_SERIES_CUTOFF:
        return math.lgamma(n + 1.0) - (n + 0.5) * math.log(n) + n - _LOG_SQRT_2PI
    nn = n * n
    return (1.0 / 12 - (1.0 / 360 - (1.0 / 1260 - (1.0 / 1680 - 1.0 / (1188 * nn)) / nn) / nn) / nn) / n


def _bd0(x, m):
    """x log(x/m) + m - x without cancellation (x > 0, m > 0)."""
    if abs(x - m) < 0.1 * (x + m):
        v = (x - m) / (x + m)
        s = (x - m) * v
        ej = 2.0 * x * v
        v2 = v * v
        for j in range(1, 1000):
            ej *= v2
            s1 = s + ej / (2 * j + 1)
            if s1 == s:
                return s1
            s = s1
        return s
    return x * math.log(x / m) + m - x


def _log_gamma_prefactor(a, x):
    """log(x^a e^-x / Gamma(a)) for a > 0, x > 0."""
    if a < 1.0:
        return a * math.log(x) - x - math.lgamma(a)
    # x^a e^-x / Gamma(a) = a * Pois(a; x)
    return math.log(a) + _log_poisson_pmf(a, x)


def _log_poisson_pmf(k, lam):
    """log(lam^k e^-lam / k!) for real k >= 0, lam > 0."""
    if k == 0:
        return -lam
    if lam == 0:
        return -math.inf
    return -_stirlerr(k) - _bd0(k, lam) - _LOG_SQRT_2PI - 0.5 * math.log(k)


def _lower_series(a, x):
    """Sum of x^n / ((a+1)...(a+n)) for n >= 0; converges for all x, fast for x < a+1."""
    ap = a
    term = 1.0
    total = 1.0
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if term < total * _EPS:
            return total
    raise ArithmeticError(f"incomplete gamma series did not converge (a={a}, x={x})")


def _upper_cf(a, x):
    """Modified Lentz evaluation of the continued fraction for Q(a, x) / prefactor."""
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete gamma continued fraction did not converge (a={a}, x={x})")


def _check_gamma_args(a, x):
    if not a > 0 or math.isinf(a):
        raise DomainError(f"gamma order must be positive and finite, got {a!r}")
    if not x >= 0:
        raise DomainError(f"gamma argument must be nonnegative, got {x!r}")


def _log_upper_lower(a, x):
    """(log Q(a, x), log P(a, x)) with one of them taken as log1p(-other)."""
    if x == 0:
        return 0.0, -math.inf
    if math.isinf(x):
        return -math.inf, 0.0
    log_pref = _log_gamma_prefactor(a, x)
    if x < a + 1.0:
        log_p = log_pref - math.log(a) + math.log(_lower_series(a, x))
        p = math.exp(log_p)
        return (math.log1p(-p) if p < 1.0 else -math.inf), log_p
    log_q = log_pref + math.log(_upper_cf(a, x))
    q = math.exp(log_q)
    return log_q, (math.log1p(-q) if q < 1.0 else -math.inf)


def regularized_upper_gamma(u, x):
    """Q(u, x) = Gamma(u, x) / Gamma(u).

    Equals the false-alarm probability of an energy detector with
    time-bandwidth product ``u`` at threshold ``2 x``.

    Raises:
        DomainError: if ``u <= 0`` or ``x < 0``.
    """
    _check_gamma_args(u, x)
    return math.exp(_log_upper_lower(u, x)[0])


def regularized_lower_gamma(u, x):
    """P(u, x) = 1 - Q(u, x)."""
    _check_gamma_args(u, x)
    return math.exp(_log_upper_lower(u, x)[1])


def log_regularized_lower_gamma(u, x):
    """log P(u, x); finite even where P(u, x) underflows. P(0, x) is taken as 1."""
    if u == 0:
        if not x >= 0:
            raise DomainError(f"gamma argument must be nonnegative, got {x!r}")
        return 0.0
    _check_gamma_args(u, x)
    return _log_upper_lower(u, x)[1]


def poisson_tail_sum(u, x):
    """e^-x * sum_{i=0}^{u-2} x^i / i!, i.e. P(Poisson(x) <= u - 2).

    Returns 0 for ``u == 1`` (empty sum). The terms are accumulated outward
    from the largest one, whose logarithm is evaluated directly, so nothing
    overflows or underflows prematurely for large ``x``.
    """
    if isinstance(u, bool) or int(u) != u or u < 1:
        raise DomainError(f"order must be an integer >= 1, got {u!r}")
    if not x >= 0:
        raise DomainError(f"argument must be nonnegative, got {x!r}")
    u = int(u)
    top = u - 2
    if top < 0:
        return 0.0
    if x == 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    peak = min(top, int(x))
    log_peak = _log_poisson_pmf(float(peak), x)
    total = 1.0
    term = 1.0
    for i in range(peak, 0, -1):
        term *= i / x
        total += term
        if term < total * _EPS:
            break
    term = 1.0
    for i in range(peak + 1, top + 1):
        term *= x / i
        total += term
        if term < total * _EPS:
            break
    return min(1.0, math.exp(log_peak + math.log(total)))


def _check_marcum_args(u, a, b):
    if isinstance(u, bool) or int(u) != u or u < 1:
        raise DomainError(f"Marcum order must be an integer >= 1, got {u!r}")
    if not (a >= 0 and b >= 0) or math.isinf(a):
        raise DomainError(f"Marcum arguments must be finite and nonnegative, got a={a!r}, b={b!r}")


def marcum_q(u, a, b):
    """Generalized Marcum Q-function Q_u(a, b).

    Evaluated as the Poisson(a^2/2) mixture of central chi-square tails,
    ``sum_k Pois(k; a^2/2) * Q(u + k, b^2/2)``, with the upper gamma values
    advanced by the exact recurrence Q(n+1, y) = Q(n, y) + y^n e^-y / n!.
    Poisson weights outside mean +/- 12 sd (and at least 40) are dropped;
    their total mass is far below 1e-15.
    """
    _check_marcum_args(u, a, b)
    u = int(u)
    y = 0.5 * b * b
    if y == 0:
        return 1.0
    if a == 0:
        return regularized_upper_gamma(u, y)
    if math.isinf(b):
        return 0.0
    lam = 0.5 * a * a
    spread = 12.0 * math.sqrt(lam) + 40.0
    k_lo = max(0, int(lam - spread))
    k_hi = int(lam + spread) + 1

    q = regularized_upper_gamma(u + k_lo, y)
    total = 0.0
    for k in range(k_lo, k_hi + 1):
        w = math.exp(_log_poisson_pmf(float(k), lam))
        total += w * q
        n = u + k
        # y^n e^-y / n! = Poisson(n; y)
        q += math.exp(_log_poisson_pmf(float(n), y))
        if q > 1.0:
            q = 1.0
    return min(1.0, max(0.0, total))
