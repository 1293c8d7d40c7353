"""Closed-form step counts and query complexities for model distributions.

Indices follow the measurement order: ``p_0`` is the most probable
bitstring. Calculators use the infinite-register approximations (geometric
series, Riemann zeta) unless ``exact=True`` is requested, which sums over
the finite ``2^n`` register instead.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import zeta as _hurwitz

from .amplification import ideal_steps, theta_from_R
from .statevector import Distribution, model_probabilities


def zeta(gamma: float) -> float:
    if not gamma > 1:
        raise ValueError("zeta needs gamma > 1")
    return float(_hurwitz(gamma, 1))


def harmonic(k: int, gamma: float) -> float:
    """Generalized harmonic number ``H_k(gamma) = sum_{l=1}^{k} l^-gamma``."""
    if k < 0:
        raise ValueError("k must be >= 0")
    return float(np.sum(np.arange(1, k + 1, dtype=float) ** (-gamma)))


def zeta_tail(k: int, gamma: float) -> float:
    """``zeta(gamma) - H_k(gamma)`` evaluated without cancellation."""
    if k < 0:
        raise ValueError("k must be >= 0")
    return float(_hurwitz(gamma, k + 1))


@dataclass(frozen=True)
class DistributionSpec:
    """A model distribution, optionally tied to a finite register of ``n`` qubits."""

    dist: Distribution
    n: int | None = None

    def __post_init__(self):
        self.dist.validate(self.n)

    @classmethod
    def exponential(cls, alpha: float, n: int | None = None) -> "DistributionSpec":
        return cls(Distribution.exponential(alpha), n)

    @classmethod
    def algebraic(cls, gamma: float, n: int | None = None) -> "DistributionSpec":
        return cls(Distribution.algebraic(gamma), n)

    @classmethod
    def step(cls, m: int, n: int | None = None) -> "DistributionSpec":
        return cls(Distribution.step(m), n)

    @property
    def kind(self) -> str:
        return self.dist.kind

    @property
    def param(self) -> float:
        return self.dist.param

    def probability(self, l: int) -> float:
        """Infinite-register ``p_l`` (the step kind is always exact)."""
        a = self.param
        if self.kind == "exponential":
            return math.exp(-a * l) * (1.0 - math.exp(-a))
        if self.kind == "algebraic":
            return (l + 1.0) ** (-a) / zeta(a)
        return 1.0 / a if l < a else 0.0

    def exact_probabilities(self) -> np.ndarray:
        if self.n is None:
            raise ValueError("exact mode needs a finite qubit count n")
        return model_probabilities(self.dist, self.n)


def analytic_steps(spec: DistributionSpec, k: int) -> int:
    """Small-angle step count ``s_{k+1}`` after the first ``k+1`` bitstrings are reduced."""
    if k < 0:
        raise ValueError("k must be >= 0")
    a = spec.param
    if spec.kind == "exponential":
        return math.floor(math.pi * math.exp(a * (k + 1) / 2.0) / 4.0)
    if spec.kind == "algebraic":
        return math.floor(math.pi * math.sqrt(zeta(a)) / (4.0 * math.sqrt(zeta_tail(k + 1, a))))
    m = int(a)
    if k >= m - 1:
        raise ValueError(f"step distribution has nothing left to amplify after k={k} (m={m})")
    return math.floor(math.pi / (4.0 * math.asin(math.sqrt((m - k - 1) / m))))


def exact_steps(probs: np.ndarray, k: int, F_T: float = 1.0) -> int:
    """``ideal_steps`` for reducing the first ``k+1`` entries of ``probs`` exactly."""
    complement = float(np.sum(probs[k + 1:]))
    return ideal_steps(theta_from_R(1.0 - complement, complement), F_T)


def _check(m: int, p_fail: float):
    if m < 1:
        raise ValueError("m must be >= 1")
    if not 0.0 < p_fail < 1.0:
        raise ValueError("p_fail must lie in (0, 1)")


def qtot_sqd(spec: DistributionSpec, m: int, p_fail: float = 0.1, exact: bool = False) -> float:
    """Shots for plain sampling to see the first ``m`` bitstrings with failure odds ``p_fail``."""
    _check(m, p_fail)
    if spec.kind == "step" and m > spec.param:
        raise ValueError("m exceeds the step width")
    p = spec.exact_probabilities()[m - 1] if exact else spec.probability(m - 1)
    return math.log(m / p_fail) / p


class SqdaaCost(NamedTuple):
    Q_tot: float
    m_star: int
    Q_aa: float
    Q_dir: float
    bound: float | None = None


def _exponential_cost(spec, m, N_it):
    a = spec.param
    Q_aa = N_it * (m + (math.pi / 2.0) * (math.exp(a * m / 2.0) - 1.0) / (math.exp(a / 2.0) - 1.0))
    return SqdaaCost(Q_aa, m, Q_aa, 0.0)


def _step_cost(spec, m, N_it):
    width = int(spec.param)
    if m != width:
        raise ValueError(f"step cost is defined for m equal to the step width ({width})")
    # Floor-based sum with s_0 = 0; the (1 + pi) form is an upper bound on it.
    Q = 1 + sum(2 * analytic_steps(spec, k - 1) + 1 for k in range(1, m))
    return SqdaaCost(float(N_it * Q), m, float(N_it * Q), 0.0, bound=N_it * m * (1.0 + math.pi))


def algebraic_cost_table(spec: DistributionSpec, m: int, N_it: int, p_fail: float,
                         intermediate: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """``(Q_aa, Q_dir)`` for every ``m* = 1..m``.

    ``Q_dir`` uses the final closed form by default; ``intermediate`` keeps
    the explicit shot count times the last circuit's queries instead.
    """
    g = spec.param
    z = zeta(g)
    tails = np.array([zeta_tail(k, g) for k in range(m)])
    per_iter = 1.0 + (math.pi / 2.0) * math.sqrt(z) / np.sqrt(tails)
    Q_aa = N_it * np.cumsum(per_iter)
    m_star = np.arange(1, m + 1)
    remaining = m - m_star
    logs = np.log(np.maximum(remaining, 1) / p_fail)
    last_tail = tails[m_star - 1]
    if intermediate:
        Q_dir = m ** g * last_tail * logs * per_iter[m_star - 1]
    else:
        Q_dir = m ** g * (math.pi / 2.0) * math.sqrt(z) * np.sqrt(last_tail) * logs
    Q_dir = np.where(remaining > 0, Q_dir, 0.0)
    return Q_aa, Q_dir


def _exact_cost(spec, m, N_it, p_fail):
    """Finite-register sums with floor-based steps and the exact rotated weight."""
    probs = spec.exact_probabilities()
    s = [0] + [exact_steps(probs, k) for k in range(m - 1)]
    per_iter = np.array([2 * x + 1 for x in s], dtype=float)
    Q_aa = N_it * np.cumsum(per_iter)
    if spec.kind == "exponential":
        return SqdaaCost(float(Q_aa[-1]), m, float(Q_aa[-1]), 0.0)
    Q_dir = np.zeros(m)
    for ms in range(1, m):
        reduced = float(np.sum(probs[:ms - 1]))
        if ms == 1:
            weight = probs[m - 1]
        else:
            theta = theta_from_R(reduced, 1.0 - reduced)
            gain = math.sin((2 * s[ms - 1] + 1) * theta) ** 2 / (1.0 - reduced)
            weight = probs[m - 1] * gain
        Q_dir[ms - 1] = math.log((m - ms) / p_fail) / weight * per_iter[ms - 1]
    total = Q_aa + Q_dir
    best = int(np.argmin(total))
    return SqdaaCost(float(total[best]), best + 1, float(Q_aa[best]), float(Q_dir[best]))


def qtot_sqdaa(spec: DistributionSpec, m: int, N_it: int, p_fail: float = 0.1,
               exact: bool = False, intermediate: bool = False) -> SqdaaCost:
    """Total queries of the amplified protocol to see the first ``m`` bitstrings.

    Exponential: every bitstring is reduced (``m* = m``). Algebraic: ``m*``
    minimizes AA cost plus the direct-sampling tail over ``1..m``. Step: the
    floor-based sum, with the ``N_it m (1 + pi)`` bound in ``bound``.
    """
    _check(m, p_fail)
    if N_it < 1:
        raise ValueError("N_it must be >= 1")
    if exact and spec.kind != "step":
        return _exact_cost(spec, m, N_it, p_fail)
    if spec.kind == "exponential":
        return _exponential_cost(spec, m, N_it)
    if spec.kind == "step":
        return _step_cost(spec, m, N_it)
    Q_aa, Q_dir = algebraic_cost_table(spec, m, N_it, p_fail, intermediate)
    total = Q_aa + Q_dir
    best = int(np.argmin(total))
    return SqdaaCost(float(total[best]), best + 1, float(Q_aa[best]), float(Q_dir[best]))


CSV_COLUMNS = ("m", "Qtot_sqd", "Qtot_sqdaa", "Qtot_aa", "Qtot_dir", "m_star", "ratio")


@dataclass(frozen=True)
class ComplexityCurve:
    spec: DistributionSpec
    N_it: int
    p_fail: float
    m: np.ndarray
    Q_sqd: np.ndarray
    Q_sqdaa: np.ndarray
    Q_aa: np.ndarray
    Q_dir: np.ndarray
    m_star: np.ndarray

    @property
    def ratio(self) -> np.ndarray:
        return self.Q_sqd / self.Q_sqdaa

    def crossing(self, threshold: float = 1.0) -> int | None:
        """Smallest ``m`` from which the ratio stays at or above ``threshold``."""
        above = self.ratio >= threshold
        if not above[-1]:
            return None
        below = np.flatnonzero(~above)
        return int(self.m[0] if below.size == 0 else self.m[below[-1] + 1])

    def log_slopes(self) -> tuple[float, float]:
        """Least-squares slopes of ``ln Q_sqd`` and ``ln Q_sqdaa`` against ``m``."""
        a = np.polyfit(self.m, np.log(self.Q_sqd), 1)[0]
        b = np.polyfit(self.m, np.log(self.Q_sqdaa), 1)[0]
        return float(a), float(b)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in zip(self.m, self.Q_sqd, self.Q_sqdaa, self.Q_aa, self.Q_dir, self.m_star, self.ratio):
            writer.writerow([int(row[0])] + [repr(float(v)) for v in row[1:5]] + [int(row[5]), repr(float(row[6]))])
        return buf.getvalue()


def ratio_curve(spec: DistributionSpec, m_values: Sequence[int], N_it: int,
                p_fail: float = 0.1, exact: bool = False) -> ComplexityCurve:
    m_values = np.asarray(list(m_values), dtype=int)
    if m_values.size == 0:
        raise ValueError("empty m range")
    sqd, tot, aa, dr, ms = [], [], [], [], []
    for m in m_values:
        # A step distribution is only meaningful when its width equals m.
        sp = DistributionSpec.step(int(m), spec.n) if spec.kind == "step" else spec
        cost = qtot_sqdaa(sp, int(m), N_it, p_fail, exact=exact)
        sqd.append(qtot_sqd(sp, int(m), p_fail, exact=exact))
        tot.append(cost.Q_tot)
        aa.append(cost.Q_aa)
        dr.append(cost.Q_dir)
        ms.append(cost.m_star)
    return ComplexityCurve(spec, N_it, p_fail, m_values, np.array(sqd), np.array(tot),
                           np.array(aa), np.array(dr), np.array(ms))
