"""Binary information-theoretic primitives.

Every channel in the package is binary-input/binary-output.  A channel is
stored by its two "output is 0" probabilities, so the full transition matrix
is ``[[e00, 1 - e00], [e01, 1 - e01]]`` with rows indexed by the input.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_PROB_TOL = 1e-12
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _check_probability(name: str, value: float) -> float:
    if not (-_PROB_TOL <= value <= 1.0 + _PROB_TOL) or math.isnan(value):
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    return min(1.0, max(0.0, float(value)))


@dataclass(frozen=True)
class BinaryChannel:
    """Binary channel given by P(out=0 | in=0) and P(out=0 | in=1)."""

    e00: float
    e01: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "e00", _check_probability("e00", self.e00))
        object.__setattr__(self, "e01", _check_probability("e01", self.e01))

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.e00, 1.0 - self.e00], [self.e01, 1.0 - self.e01]])

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "BinaryChannel":
        m = np.asarray(m, dtype=float)
        if m.shape != (2, 2) or not np.allclose(m.sum(axis=1), 1.0, atol=1e-9):
            raise ValueError("expected a 2x2 row-stochastic matrix")
        return cls(float(m[0, 0]), float(m[1, 0]))

    @classmethod
    def bsc(cls, crossover: float) -> "BinaryChannel":
        return cls(1.0 - crossover, crossover)

    def relabel_outputs(self) -> "BinaryChannel":
        return BinaryChannel(1.0 - self.e00, 1.0 - self.e01)


IDENTITY = BinaryChannel(1.0, 0.0)
BIT_FLIP = BinaryChannel(0.0, 1.0)


@dataclass(frozen=True)
class Prior:
    """Binary input distribution; ``q0`` is P(symbol = 0)."""

    q0: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "q0", _check_probability("q0", self.q0))

    @property
    def q1(self) -> float:
        return 1.0 - self.q0


UNIFORM = Prior(0.5)


def binary_entropy(p):
    """Binary entropy in bits, with 0 log 0 = 0.

    Accepts scalars or numpy arrays.  Values outside [0, 1] beyond a 1e-12
    rounding slack raise ``ValueError``.
    """
    arr = np.asarray(p, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < -_PROB_TOL) or np.any(arr > 1.0 + _PROB_TOL):
        raise ValueError("binary_entropy is defined on [0, 1] only")
    h = _entropy(np.clip(arr, 0.0, 1.0))
    if np.ndim(h) == 0:
        return float(h)
    return h


def _entropy(p):
    # unchecked; callers guarantee p in [0, 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -(p * np.log2(p) + (1.0 - p) * np.log2(1.0 - p))
    return np.where((p <= 0.0) | (p >= 1.0), 0.0, h)


def mutual_information_entries(e00, e01, q0):
    """Vectorised I(X;Y) = h(q0 e00 + q1 e01) - q0 h(e00) - q1 h(e01)."""
    e00 = np.asarray(e00, dtype=float)
    e01 = np.asarray(e01, dtype=float)
    q0 = np.asarray(q0, dtype=float)
    if np.any((e00 < -_PROB_TOL) | (e00 > 1 + _PROB_TOL) | (e01 < -_PROB_TOL) | (e01 > 1 + _PROB_TOL)
              | (q0 < -_PROB_TOL) | (q0 > 1 + _PROB_TOL)):
        raise ValueError("channel entries and prior must lie in [0, 1]")
    e00, e01, q0 = np.clip(e00, 0.0, 1.0), np.clip(e01, 0.0, 1.0), np.clip(q0, 0.0, 1.0)
    q1 = 1.0 - q0
    mi = _entropy(q0 * e00 + q1 * e01) - q0 * _entropy(e00) - q1 * _entropy(e01)
    # cancellation can leave -1e-16 on useless channels
    mi = np.maximum(mi, 0.0)
    if np.ndim(mi) == 0:
        return float(mi)
    return mi


def mutual_information(ch: BinaryChannel, prior: Prior) -> float:
    return mutual_information_entries(ch.e00, ch.e01, prior.q0)


def compose(first: BinaryChannel, second: BinaryChannel) -> BinaryChannel:
    """Cascade ``first`` then ``second`` (row-stochastic matrix product)."""
    e00 = first.e00 * second.e00 + (1.0 - first.e00) * second.e01
    e01 = first.e01 * second.e00 + (1.0 - first.e01) * second.e01
    return BinaryChannel(e00, e01)


def push_prior(prior: Prior, ch: BinaryChannel) -> Prior:
    """Output distribution of ``ch`` driven by ``prior``."""
    return Prior(prior.q0 * ch.e00 + prior.q1 * ch.e01)


def golden_section_max(f, lo: float = 0.0, hi: float = 1.0, tol: float = 1e-9):
    """Maximise a unimodal scalar function on [lo, hi]; returns (x, f(x))."""
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    best = max(((x, f(x)), (lo, f(lo)), (hi, f(hi))), key=lambda t: t[1])
    return best


def channel_capacity(ch: BinaryChannel) -> tuple[float, float]:
    """Capacity in bits and the capacity-achieving P(input=0).

    Mutual information is concave in the prior, so golden-section search
    is exact up to its 1e-9 interval tolerance.  A useless channel reports
    the uniform prior.
    """
    if abs(ch.e00 - ch.e01) < 1e-15:
        return 0.0, 0.5
    q, c = golden_section_max(lambda q: mutual_information_entries(ch.e00, ch.e01, q))
    # flat maxima (perfect channel tails) and symmetric channels: snap to 0.5
    if abs(mutual_information_entries(ch.e00, ch.e01, 0.5) - c) <= 1e-15:
        q = 0.5
    return float(c), float(q)


def _oriented(ch: BinaryChannel) -> BinaryChannel:
    return ch if ch.e00 >= ch.e01 else ch.relabel_outputs()


def degrading_map(bob: BinaryChannel, eve: BinaryChannel, tol: float = 1e-12):
    """Return Q with eve = compose(bob, Q), or None when no stochastic Q exists.

    Eve's point (e00', e01') must be q0*(e00, e01) + q1*(1-e00, 1-e01) with
    q0 = Q(0|0), q1 = Q(0|1) in [0, 1]; i.e. it lies in the parallelogram
    with vertices (0,0), (e00,e01), (1,1), (1-e00,1-e01).
    """
    det = bob.e00 - bob.e01
    if abs(det) <= tol:
        # constant bob channel: only constant eve channels are reachable
        if abs(eve.e00 - eve.e01) > 1e-9:
            return None
        return BinaryChannel(eve.e00, eve.e00)
    q0 = (eve.e00 * (1.0 - bob.e01) - eve.e01 * (1.0 - bob.e00)) / det
    q1 = (bob.e00 * eve.e01 - bob.e01 * eve.e00) / det
    slack = 1e-9
    if min(q0, q1) < -slack or max(q0, q1) > 1.0 + slack:
        return None
    return BinaryChannel(min(1.0, max(0.0, q0)), min(1.0, max(0.0, q1)))


def is_stochastically_degraded(bob: BinaryChannel, eve: BinaryChannel) -> bool:
    """True iff eve's channel is bob's channel followed by some stochastic map."""
    return degrading_map(bob, eve) is not None


def degradation_diagnostics(bob: BinaryChannel, eve: BinaryChannel) -> dict:
    """Compare the membership test with the two ratio inequalities.

    The ratio form assumes e00 >= e01 for both channels, so outputs are
    relabelled first.  ``ratio`` uses the direction of the second inequality
    that matches the parallelogram geometry (<=); ``ratio_reversed`` flips
    it to >= for comparison.  ``None`` means a ratio is undefined.
    """
    b, e = _oriented(bob), _oriented(eve)
    member = is_stochastically_degraded(b, e)

    def ratio_test(flip_second: bool) -> bool | None:
        if e.e00 <= b.e00:
            if b.e00 == 0.0 or e.e00 == 0.0:
                return None
            return e.e01 / e.e00 >= b.e01 / b.e00 - 1e-12
        if b.e00 == 1.0 or e.e00 == 1.0:
            return None
        lhs = (1.0 - e.e01) / (1.0 - e.e00)
        rhs = (1.0 - b.e01) / (1.0 - b.e00)
        return lhs <= rhs + 1e-12 if flip_second else lhs >= rhs - 1e-12

    ratio = ratio_test(True)
    reversed_ = ratio_test(False)
    return {
        "degraded": member,
        "ratio": ratio,
        "ratio_reversed": reversed_,
        "consistent": ratio is None or ratio == member,
    }
