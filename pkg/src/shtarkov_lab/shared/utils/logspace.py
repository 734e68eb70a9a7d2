"""Log-domain arithmetic for nonnegative quantities.

A LogValue is a float holding log(q) for some q >= 0, with q = 0 represented
by NEG_INF. Addition of quantities is log-sum-exp, multiplication is float
addition.
"""

import math
from collections.abc import Iterable, Sequence

LogValue = float

NEG_INF: LogValue = float("-inf")
LOG_ONE: LogValue = 0.0


def log(x: float) -> LogValue:
    """Logarithm taking zero to NEG_INF."""
    if x < 0:
        raise ValueError(f"log of a negative quantity: {x}")
    if x == 0:
        return NEG_INF
    return math.log(x)


def exp(v: LogValue) -> float:
    """Back to the linear domain; NEG_INF maps to exactly 0."""
    if v == NEG_INF:
        return 0.0
    return math.exp(v)


def log_mul(*values: LogValue) -> LogValue:
    """Product of quantities; NEG_INF absorbs."""
    total = 0.0
    for v in values:
        if v == NEG_INF:
            return NEG_INF
        total += v
    return total


def logsumexp(values: Sequence[LogValue] | Iterable[LogValue]) -> LogValue:
    """Log of the sum of the quantities, max-shifted.

    Sums of NEG_INF terms (and the empty sum) are NEG_INF.
    """
    xs = values if isinstance(values, Sequence) else list(values)
    if not xs:
        return NEG_INF

    maximum = max(xs)
    if math.isinf(maximum):
        return maximum

    total = math.fsum(math.expm1(x - maximum) for x in xs)
    return maximum + math.log1p(total + float(len(xs) - 1))


def log_add(a: LogValue, b: LogValue) -> LogValue:
    return logsumexp((a, b))


def softmax(values: Sequence[LogValue]) -> list[float]:
    """Normalize exp(values); returns [] if every entry is NEG_INF."""
    total = logsumexp(values)
    if total == NEG_INF:
        return []
    return [exp(v - total) if v != NEG_INF else 0.0 for v in values]


def is_close(a: LogValue, b: LogValue, tol: float) -> bool:
    """Compare log values; two NEG_INF are equal."""
    if a == NEG_INF or b == NEG_INF:
        return a == b
    return abs(a - b) <= tol
