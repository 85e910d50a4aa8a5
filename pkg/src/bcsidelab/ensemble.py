"""Random-coding ensemble sampler for nearest-codeword decisions.

With a fresh i.i.d. N(0, s2) codebook per trial, the wrong candidates of a
search are independent of the channel output. Given the search target ``t``
(the received signal minus any layers already known), each wrong candidate
lies at squared distance ``s2 * X`` with X noncentral chi-square
(``n`` degrees of freedom, noncentrality ``|t|^2 / s2``). Whether the true
codeword wins against ``M - 1`` such draws therefore has probability

    1 - (1 - F(d_true / s2)) ** (M - 1)

which is evaluated in log space so that candidate counts far beyond what
can be enumerated (2**38 and more) stay exact.

The joint search over (u, v) pairs is only approximated: pairs that share
a wrong u or a wrong v are treated as independent.
"""

from __future__ import annotations

import numpy as np
from scipy.special import chndtr, chndtrix


def _cdf(x, n, target_sq, variance):
    return chndtr(np.asarray(x) / variance, n, np.asarray(target_sq) / variance)


def _none_below(cdf, count):
    # log P(all `count` i.i.d. draws exceed the threshold)
    cdf = np.asarray(cdf, dtype=float)
    count = np.asarray(count, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = count * np.log1p(-cdf)
    return np.where(count == 0, 0.0, out)


def search_error_probability(d_true, target_sq, variance: float, n: int, wrong: float):
    """Probability that one of ``wrong`` fresh codewords beats the true one.

    ``d_true`` is the squared distance from the target to the true codeword
    and ``target_sq`` the target's squared norm (arrays over trials).
    A zero-variance book makes every candidate tie; the lowest index then
    wins, so the true one survives with probability 1 / (wrong + 1).
    """
    d_true = np.asarray(d_true, dtype=float)
    if wrong <= 0:
        return np.zeros_like(d_true)
    if variance == 0:
        return np.full_like(d_true, wrong / (wrong + 1.0))
    return -np.expm1(_none_below(_cdf(d_true, n, target_sq, variance), wrong))


def sample_min_distance(uniform, target_sq, variance: float, n: int, count: float):
    """Minimum squared distance among ``count`` fresh codewords, by inverse transform."""
    uniform = np.asarray(uniform, dtype=float)
    target_sq = np.asarray(target_sq, dtype=float)
    if count <= 0:
        return np.full_like(uniform, np.inf)
    if variance == 0:
        return target_sq.copy()
    p = -np.expm1(np.log1p(-uniform) / count)
    return variance * chndtrix(p, n, target_sq / variance)


def simultaneous_error_probability(
    d_true,
    min_wrong_v,
    own_u_target_sq,
    joint_target_sq,
    alpha_power: float,
    power: float,
    n: int,
    wrong_u: float,
    wrong_v: float,
):
    """Probability that the best (u, v) pair carries a wrong u (approximate).

    The correct-u side is the true pair (``d_true``) and the sampled best
    wrong-v pair (``min_wrong_v``). Wrong-u pairs are those with the true v,
    target ``y - v`` with squared norm ``own_u_target_sq`` and book variance
    ``alpha_power``, plus wrong-u/wrong-v sums of variance ``power`` around
    ``y`` (``joint_target_sq``), taken as independent.
    """
    best_right = np.minimum(np.asarray(d_true, dtype=float), np.asarray(min_wrong_v, dtype=float))
    if alpha_power == 0:
        # every u codeword is zero, so the lowest u index wins the tie
        return np.full_like(best_right, wrong_u / (wrong_u + 1.0))
    log_ok = _none_below(_cdf(best_right, n, own_u_target_sq, alpha_power), wrong_u)
    if power > 0 and wrong_v > 0:
        log_ok = log_ok + _none_below(_cdf(best_right, n, joint_target_sq, power), wrong_u * wrong_v)
    return -np.expm1(log_ok)
