"""Exact binomial lower-tail probabilities, used as p-values.

For a binary loss observed ``k`` times in ``n`` i.i.d. draws, the probability
``P(Binomial(n, alpha) <= k)`` is a valid p-value for the null "true risk
exceeds alpha".

Two evaluation routes share one contract (relative error near machine
precision). Up to ``DIRECT_MAX_N`` trials, each term is the exact integer
binomial coefficient times floating powers, summed with ``math.fsum``; this
keeps dyadic cases such as ``binom_cdf(0, 1, 0.5) == 0.5`` exact, which matters
when a p-value is compared to ``delta`` with ``<=``. Beyond that, terms are
formed in log space and accumulated smallest first.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

DIRECT_MAX_N = 1000
_TINY = 1e-280


def _direct_terms(k: int, n: int, a: float) -> list[float]:
    log_a, log_b = math.log(a), math.log1p(-a)
    terms = []
    c = 1
    for j in range(k + 1):
        pw = a**j * (1.0 - a) ** (n - j)
        if pw > _TINY:
            terms.append(float(c) * pw)
        else:
            terms.append(math.exp(math.log(c) + j * log_a + (n - j) * log_b))
        c = c * (n - j) // (j + 1)
    return terms


def _log_terms(k: int, n: int, a: float) -> np.ndarray:
    j = np.arange(k + 1, dtype=float)
    log_choose = gammaln(n + 1.0) - gammaln(j + 1.0) - gammaln(n - j + 1.0)
    return log_choose + j * math.log(a) + (n - j) * math.log1p(-a)


def _lower_tail(k: int, n: int, a: float) -> float:
    if n <= DIRECT_MAX_N:
        return math.fsum(sorted(_direct_terms(k, n, a)))
    logs = np.sort(_log_terms(k, n, a))
    top = logs[-1]
    return math.exp(top) * math.fsum(np.exp(logs - top))


def binom_cdf(k: int, n: int, alpha: float) -> float:
    """``sum_{j=0}^{k} C(n, j) alpha^j (1 - alpha)^(n - j)``.

    Parameters
    ----------
    k : int
        Observed loss count, ``0 <= k <= n``.
    n : int
        Number of trials, ``n >= 1``.
    alpha : float
        Per-trial success probability. ``0`` and ``1`` are accepted and give
        the degenerate point-mass answers.

    Returns
    -------
    float
        The tail probability in ``[0, 1]``.

    Examples
    --------
    >>> round(binom_cdf(0, 10, 0.1), 10)
    0.3486784401
    >>> binom_cdf(1, 2, 0.5)
    0.75
    """
    k, n = int(k), int(n)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0 <= k <= n:
        raise ValueError(f"k must lie in [0, n={n}], got {k}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if k == n or alpha == 0.0:
        return 1.0
    if alpha == 1.0:
        return 0.0
    # past the mode the upper tail is the shorter, better-conditioned sum
    if k > (n + 1) * alpha and n - k < k + 1:
        upper = _lower_tail(n - k - 1, n, 1.0 - alpha)
        return min(max(1.0 - upper, 0.0), 1.0)
    return min(_lower_tail(k, n, alpha), 1.0)
