"""Equity functions over K workloads, exact comparison keys, and randomized axiom checks."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np

from .errors import DegenerateInputError, DimensionError
from .model import Resource, SumClass, WorkloadVector


class EquityFunction(Enum):
    MAX = "max"
    LEX = "lex"
    RANGE = "range"
    MAD = "mad"
    STDEV = "stdev"
    GINI = "gini"

    @property
    def tag(self) -> str:
        return self.value

    @property
    def monotone(self) -> bool:
        return self in (EquityFunction.MAX, EquityFunction.LEX)

    @property
    def pd_compliant(self) -> bool:
        # weak transfer principle; all six satisfy it
        return True

    @property
    def ordinal(self) -> bool:
        return self is EquityFunction.LEX

    @classmethod
    def parse(cls, text: str) -> "EquityFunction":
        try:
            return cls(text.strip().lower())
        except ValueError:
            names = ", ".join(f.value for f in cls)
            raise ValueError(f"unknown equity function {text!r}; expected one of {names}") from None


FUNCTIONS = tuple(EquityFunction)


def _values(w):
    vals = w.values if isinstance(w, WorkloadVector) else tuple(w)
    if not vals:
        raise DimensionError("empty workload vector")
    return vals


def balance_key(f: EquityFunction, w):
    """Exact, totally ordered key: smaller means better balanced.

    Integer workloads give integer keys (Fraction for Gini, tuples for Lex); the keys are
    positive multiples of the reported values, so comparisons agree with the real-valued forms.
    """
    x = _values(w)
    K = len(x)
    if f is EquityFunction.MAX:
        return max(x)
    if f is EquityFunction.LEX:
        return tuple(sorted(x, reverse=True))
    if f is EquityFunction.RANGE:
        return max(x) - min(x)
    S = sum(x)
    if f is EquityFunction.MAD:
        return sum(abs(K * v - S) for v in x)          # K^2 * MAD
    if f is EquityFunction.STDEV:
        return sum((K * v - S) ** 2 for v in x)        # K^3 * variance
    if S == 0:
        raise DegenerateInputError("Gini is undefined for all-zero workloads")
    pairs = sum(abs(a - b) for a in x for b in x)
    if all(isinstance(v, (int, np.integer)) for v in x):
        return Fraction(int(pairs), 2 * K * int(S))
    return pairs / (2 * K * S)


def key_value(f: EquityFunction, key, K: int):
    """Reported value for an exact key."""
    if f is EquityFunction.LEX:
        return tuple(key)
    if f is EquityFunction.MAD:
        return key / K ** 2
    if f is EquityFunction.STDEV:
        return math.sqrt(key / K ** 3)
    return float(key)


def evaluate(f: EquityFunction, w):
    """Max, Range, population MAD and StDev, Gini over ordered pairs; Lex gives the sorted vector."""
    x = _values(w)
    return key_value(f, balance_key(f, x), len(x))


def gini_mean_difference(w) -> float:
    # alternative form over unordered pairs, used as a cross-check
    x = _values(w)
    K, S = len(x), sum(x)
    if S == 0:
        raise DegenerateInputError("Gini is undefined for all-zero workloads")
    half = sum(abs(x[i] - x[j]) for i in range(K) for j in range(i + 1, K))
    return half * 2 / (2 * K * K * (S / K))


def lex_compare(a, b) -> int:
    """-1 if a is lexicographically better balanced than b, 1 if worse, 0 if tied."""
    va, vb = _values(a), _values(b)
    if len(va) != len(vb):
        raise DimensionError(f"cannot compare {len(va)} workloads with {len(vb)}")
    sa, sb = sorted(va, reverse=True), sorted(vb, reverse=True)
    return (sa > sb) - (sa < sb)


@dataclass(frozen=True)
class AxiomVerdict:
    function: EquityFunction
    axiom: str
    holds: bool
    trials: int
    counterexample: tuple | None = None  # (w, w') plus transfer details where relevant

    def __str__(self):
        if self.holds:
            return f"{self.function.tag} {self.axiom}: holds over {self.trials} trials"
        return f"{self.function.tag} {self.axiom}: counterexample {self.counterexample}"


def _worse(f, before, after, strong):
    # True when `after` violates the axiom relative to `before`
    kb, ka = balance_key(f, before), balance_key(f, after)
    if f is EquityFunction.LEX:
        c = lex_compare(after, before)
        return c < 0 or (strong and c == 0)
    return ka < kb or (strong and ka == kb)


def _sample(rng, kmin=2, kmax=6, hi=100):
    K = int(rng.integers(kmin, kmax + 1))
    return [int(v) for v in rng.integers(1, hi + 1, size=K)]


def check_monotonicity(f: EquityFunction, trials: int = 10_000, seed: int = 0,
                       strong: bool = False) -> AxiomVerdict:
    """Search for w' >= w (componentwise, one strict) with I(w') < I(w).

    With strong=True equality also counts as a violation; that form is informational.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    for t in range(1, trials + 1):
        w = _sample(rng)
        K = len(w)
        delta = [int(v) for v in rng.integers(0, 51, size=K)]
        if rng.random() < 0.5:
            keep = rng.random(K) < 0.5
            delta = [v if k else 0 for v, k in zip(delta, keep)]
        if not any(delta):
            delta[int(rng.integers(K))] = int(rng.integers(1, 51))
        w2 = [a + b for a, b in zip(w, delta)]
        if _worse(f, w, w2, strong):
            return AxiomVerdict(f, "monotonicity", False, t, (tuple(w), tuple(w2)))
    return AxiomVerdict(f, "monotonicity", True, trials)


def check_pd_transfer(f: EquityFunction, trials: int = 10_000, seed: int = 0,
                      strong: bool = False) -> AxiomVerdict:
    """Search for a regressive transfer (poorer i to richer j) that lowers I."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    for t in range(1, trials + 1):
        w = _sample(rng)
        K = len(w)
        i, j = (int(v) for v in rng.choice(K, size=2, replace=False))
        if w[i] > w[j]:
            i, j = j, i
        if w[i] == 0:
            continue
        delta = int(rng.integers(1, w[i] + 1))
        w2 = list(w)
        w2[i] -= delta
        w2[j] += delta
        if sum(w2) == 0 and f is EquityFunction.GINI:
            continue
        if _worse(f, w, w2, strong):
            return AxiomVerdict(f, "transfer", False, t, (tuple(w), i, j, delta, tuple(w2)))
    return AxiomVerdict(f, "transfer", True, trials)


@dataclass(frozen=True)
class SumClassVerdict:
    resource: Resource
    verdict: str  # "constant-sum", "variable-sum" or "inconclusive"
    solutions: int
    min_total: int | None = None
    max_total: int | None = None

    @property
    def sum_class(self):
        return None if self.verdict == "inconclusive" else SumClass(self.verdict)


def classify_resource(instance, r: Resource, solutions) -> SumClassVerdict:
    """Empirical sum class from the workload totals of an enumeration of solutions."""
    count, lo, hi = 0, None, None
    for sol in solutions:
        w = sol if isinstance(sol, WorkloadVector) else sol.workloads(r)
        t = w.total
        count += 1
        lo = t if lo is None else min(lo, t)
        hi = t if hi is None else max(hi, t)
    return verdict_from_totals(r, count, lo, hi)


def verdict_from_totals(r: Resource, count, lo, hi) -> SumClassVerdict:
    if count < 2:
        return SumClassVerdict(r, "inconclusive", count, lo, hi)
    v = SumClass.CONSTANT if lo == hi else SumClass.VARIABLE
    return SumClassVerdict(r, v.value, count, lo, hi)
