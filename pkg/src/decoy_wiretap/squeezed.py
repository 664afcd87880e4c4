"""Displaced squeezed states in a truncated Fock basis.

States are D(alpha) S(zeta) |0> with zeta = r e^{i theta} and
S(zeta) = exp((zeta* a^2 - zeta a^dag^2) / 2).  Amplitudes come from the
annihilation relation (cosh r a + e^{i theta} sinh r a^dag) |psi> = beta |psi>,
beta = alpha cosh r + alpha* e^{i theta} sinh r, which gives

    cosh r sqrt(n+1) c_{n+1} = beta c_n - e^{i theta} sinh r sqrt(n) c_{n-1}

seeded with the exact vacuum amplitude, so the truncated norm measures how
much of the state the basis captures.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .channels import Modulation, PhotonBudget, helstrom_error, DecoyPolicy
from .infotheory import UNIFORM, Prior, binary_entropy, BinaryChannel, is_stochastically_degraded
from .secrecy import RateResult, secrecy_capacity_qq

NORM_TOL = 1e-8
MAX_N = 8192
DEFAULT_XI = 0.5


class TruncationError(ValueError):
    def __init__(self, n_max: int, captured: float, suggested: int):
        self.n_max, self.captured, self.suggested = n_max, captured, suggested
        super().__init__(f"n_max={n_max} keeps only {captured:.10f} of the norm; "
                         f"use n_max >= {suggested}")


@dataclass(frozen=True, eq=False)
class SqueezedState:
    alpha: complex
    r: float
    theta: float
    n_max: int
    amps: np.ndarray
    captured: float

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    @property
    def mean_photon_number(self) -> float:
        return float(np.dot(np.arange(self.n_max + 1), self.probabilities))

    @property
    def norm(self) -> float:
        return float(np.sum(self.probabilities))


def default_n_max(alpha: complex, r: float) -> int:
    nbar = abs(alpha) ** 2 + math.sinh(r) ** 2
    return max(32, math.ceil(nbar + 10.0 * math.sqrt(nbar + 1.0)))


def amplitude_squeeze_phase(alpha: complex) -> float:
    """Squeeze phase that narrows the quadrature along alpha's direction."""
    return 2.0 * cmath.phase(alpha) if alpha != 0 else 0.0


def fock_amplitudes(alpha: complex, r: float, theta: float, n_max: int) -> np.ndarray:
    """Unnormalised <n|alpha, zeta> for n = 0..n_max."""
    alpha = complex(alpha)
    t = cmath.exp(1j * theta)
    ch, sh = math.cosh(r), math.sinh(r)
    beta = alpha * ch + alpha.conjugate() * t * sh
    nu = t * sh
    c = np.zeros(n_max + 1, dtype=complex)
    c[0] = cmath.exp(-0.5 * abs(alpha) ** 2 - 0.5 * alpha.conjugate() ** 2 * t * math.tanh(r)) / math.sqrt(ch)
    if n_max >= 1:
        c[1] = beta * c[0] / ch
    for n in range(1, n_max):
        c[n + 1] = (beta * c[n] - nu * math.sqrt(n) * c[n - 1]) / (ch * math.sqrt(n + 1))
    return c


def _suggest(alpha: complex, r: float, theta: float, start: int) -> int:
    n = start
    while n <= MAX_N:
        cum = np.cumsum(np.abs(fock_amplitudes(alpha, r, theta, n)) ** 2)
        hit = np.nonzero(cum >= 1.0 - NORM_TOL)[0]
        if hit.size:
            return int(hit[0])
        n *= 2
    return MAX_N


def build_squeezed_state(alpha: complex, r: float = 0.0, theta: float | None = None,
                         n_max: int | None = None) -> SqueezedState:
    """Truncated, renormalised |alpha, r e^{i theta}>.

    ``theta=None`` squeezes along the displacement (amplitude squeezing).
    With ``n_max=None`` the basis starts at ``default_n_max`` and doubles until
    it holds 1 - 1e-8 of the norm; an explicit ``n_max`` that is too small
    raises ``TruncationError`` carrying a suggested size.
    """
    if r < 0:
        raise ValueError("r must be >= 0")
    if n_max is not None and n_max < 1:
        raise ValueError("n_max must be >= 1")
    theta = amplitude_squeeze_phase(alpha) if theta is None else float(theta)
    auto = n_max is None
    n = default_n_max(alpha, r) if auto else int(n_max)
    while True:
        c = fock_amplitudes(alpha, r, theta, n)
        captured = float(np.sum(np.abs(c) ** 2))
        if 1.0 - captured <= NORM_TOL:
            break
        if not auto or n >= MAX_N:
            raise TruncationError(n, captured, _suggest(alpha, r, theta, 2 * n))
        n = min(2 * n, MAX_N)
    c = c / math.sqrt(captured)
    c.setflags(write=False)
    return SqueezedState(complex(alpha), float(r), theta, n, c, captured)


def overlap(s1: SqueezedState, s2: SqueezedState) -> complex:
    """<s1|s2>, zero-padding the shorter amplitude vector."""
    n = max(s1.n_max, s2.n_max) + 1
    a = np.zeros(n, dtype=complex)
    b = np.zeros(n, dtype=complex)
    a[: s1.n_max + 1] = s1.amps
    b[: s2.n_max + 1] = s2.amps
    return complex(np.vdot(a, b))


@dataclass(frozen=True)
class SqueezeBudget:
    """Mean photons ``n_t`` with a fraction ``xi`` = sinh^2(r) / n_t spent on squeezing."""

    n_t: float
    xi: float = DEFAULT_XI

    def __post_init__(self) -> None:
        if not self.n_t >= 0:
            raise ValueError("n_t must be >= 0")
        if not 0.0 <= self.xi < 1.0:
            raise ValueError(f"xi must lie in [0, 1), got {self.xi!r}")

    @property
    def r(self) -> float:
        return math.asinh(math.sqrt(self.xi * self.n_t))


def constellation(modulation: Modulation, alpha_mag_sq: float, r: float) -> tuple[SqueezedState, SqueezedState]:
    """(psi_0, psi_1): {|-alpha,r>, |alpha,r>} for BPSK, {|0,r>, |alpha,r>} for OOK."""
    alpha = math.sqrt(max(alpha_mag_sq, 0.0))
    psi1 = build_squeezed_state(alpha, r, 0.0)
    if Modulation(modulation) is Modulation.BPSK:
        psi0 = build_squeezed_state(-alpha, r, 0.0)
    else:
        psi0 = build_squeezed_state(0.0, r, 0.0)
    return psi0, psi1


def ensemble_mean_photons(modulation: Modulation, alpha_mag_sq: float, r: float, prior: Prior = UNIFORM) -> float:
    psi0, psi1 = constellation(modulation, alpha_mag_sq, r)
    return prior.q0 * psi0.mean_photon_number + prior.q1 * psi1.mean_photon_number


def energy_normalize(budget: SqueezeBudget, modulation: Modulation, prior: Prior = UNIFORM) -> tuple[float, float]:
    """(|alpha|^2, r) with r = asinh(sqrt(xi n_t)) and ensemble mean photons = n_t.

    The displacement is taken from n_t = sinh^2 r + q1 |alpha|^2 (OOK) or
    sinh^2 r + |alpha|^2 (BPSK), then checked against the Fock-basis mean and
    re-solved numerically if they disagree by more than 1e-6.
    """
    modulation = Modulation(modulation)
    r = budget.r
    s2 = math.sinh(r) ** 2
    if s2 > budget.n_t * (1.0 + 1e-12):
        raise ValueError("squeezing energy exceeds the photon budget")
    weight = 1.0 if modulation is Modulation.BPSK else prior.q1
    if weight == 0.0:
        raise ValueError("OOK with P(symbol 1) = 0 carries no displacement")
    a2 = max(budget.n_t - s2, 0.0) / weight

    def gap(x: float) -> float:
        return ensemble_mean_photons(modulation, x, r, prior) - budget.n_t

    if abs(gap(a2)) > 1e-6:
        a2 = brentq(gap, 0.0, 2.0 * a2 + 1.0, xtol=1e-12)
    return a2, r


def _helstrom_bsc_from_states(modulation: Modulation, budget: SqueezeBudget) -> BinaryChannel:
    if budget.n_t == 0.0:
        return BinaryChannel.bsc(0.5)
    a2, r = energy_normalize(budget, modulation)
    psi0, psi1 = constellation(modulation, a2, r)
    ov2 = min(1.0, abs(overlap(psi0, psi1)) ** 2)
    return BinaryChannel.bsc(helstrom_error(ov2))


def squeezed_qq_rate(modulation: Modulation, budget: SqueezeBudget, gamma: float) -> RateResult:
    """QQ secrecy rate with squeezed constellations for Bob (n_t) and Eve (gamma n_t).

    Eve's states are assumed to keep the same squeezing fraction xi at her
    energy; loss-induced degradation of squeezing is not modelled.
    """
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    bob = _helstrom_bsc_from_states(modulation, budget)
    eve = _helstrom_bsc_from_states(modulation, SqueezeBudget(gamma * budget.n_t, budget.xi))
    h_b, h_e = binary_entropy(bob.e01), binary_entropy(eve.e01)
    return RateResult(h_e - h_b, DecoyPolicy.no_decoy(0.5), 1.0 - h_b, 1.0 - h_e,
                      is_stochastically_degraded(bob, eve), True, budget.n_t, gamma)


def squeezing_gain(modulation: Modulation, n_bob: float, gamma: float, xi: float = DEFAULT_XI):
    """(coherent rate, squeezed rate, relative gain) at one operating point.

    The relative gain is (squeezed - coherent) / coherent, 0 when both rates
    vanish and nan when only the coherent rate does.  ``xi=0`` compares the
    coherent constellation with itself and reports a gain of exactly 0.
    """
    coh = secrecy_capacity_qq(modulation, PhotonBudget(n_bob, gamma)).rate
    if xi == 0.0:
        return coh, coh, 0.0
    sq = squeezed_qq_rate(modulation, SqueezeBudget(n_bob, xi), gamma).rate
    if coh > 0.0:
        rel = (sq - coh) / coh
    elif abs(sq - coh) <= 1e-15:
        rel = 0.0
    else:
        rel = math.nan
    return coh, sq, rel
