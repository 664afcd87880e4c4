"""Detection models producing binary channels, plus the decoy cascade.

Output label 0 is always the "symbol 0 decision": "no click" for photon
counting, the ``|-alpha>`` half-line for homodyne BPSK, and the Helstrom
decision for symbol 0.

Energies are mean photon numbers at Bob's aperture (``n_bob``); Eve gathers
``gamma * n_bob``.  For OOK the "on" pulse carries ``2 * n_bob`` photons, so
the squared state overlap is ``exp(-2 m)``; for BPSK it is ``exp(-4 m)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import erfc

from .infotheory import BinaryChannel, Prior, UNIFORM, binary_entropy

DEFAULT_P_DARK = 1e-6
DEFAULT_DELTA = 1e-4


class Modulation(str, Enum):
    OOK = "ook"
    BPSK = "bpsk"


# |<psi_0|psi_1>|^2 = exp(-k * mean photons) for the coherent constellations
OVERLAP_EXPONENT = {Modulation.OOK: 2.0, Modulation.BPSK: 4.0}


@dataclass(frozen=True)
class PhotonBudget:
    """Mean photons per pulse at Bob (``n_bob``) and Eve's fraction ``gamma``.

    ``gamma >= 1`` is accepted; such budgets usually give no secrecy.
    """

    n_bob: float
    gamma: float = 0.0

    def __post_init__(self) -> None:
        if not self.n_bob >= 0.0:
            raise ValueError(f"n_bob must be >= 0, got {self.n_bob!r}")
        if not self.gamma >= 0.0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma!r}")

    @property
    def n_eve(self) -> float:
        return self.gamma * self.n_bob


@dataclass(frozen=True)
class DetectorNoise:
    p_dark: float = DEFAULT_P_DARK
    delta: float = DEFAULT_DELTA

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_dark <= 1.0:
            raise ValueError(f"p_dark must lie in [0, 1], got {self.p_dark!r}")
        if not self.delta >= 0.0:
            raise ValueError(f"delta must be >= 0, got {self.delta!r}")


@dataclass(frozen=True)
class DecoyPolicy:
    """Preprocessing map V -> X: P(X=0|V=0) = 1-a, P(X=0|V=1) = 1-b."""

    a: float
    b: float
    q_v0: float = 0.5

    def __post_init__(self) -> None:
        for name in ("a", "b", "q_v0"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")

    @classmethod
    def no_decoy(cls, q_v0: float = 0.5) -> "DecoyPolicy":
        return cls(0.0, 1.0, q_v0)

    @property
    def is_identity(self) -> bool:
        return self.a == 0.0 and self.b == 1.0

    @property
    def prior(self) -> Prior:
        return Prior(self.q_v0)


def _helstrom(overlap_sq, q0):
    q0 = np.asarray(q0, dtype=float)
    radicand = np.maximum(0.0, 1.0 - 4.0 * q0 * (1.0 - q0) * np.asarray(overlap_sq, dtype=float))
    return 0.5 * (1.0 - np.sqrt(radicand))


def helstrom_error(overlap_sq: float, prior: Prior = UNIFORM) -> float:
    """Minimum error probability for two pure states with |<psi0|psi1>|^2 = overlap_sq."""
    if not 0.0 <= overlap_sq <= 1.0:
        raise ValueError(f"overlap_sq must lie in [0, 1], got {overlap_sq!r}")
    return float(_helstrom(overlap_sq, prior.q0))


def _helstrom_bsc(exponent: float, energy: float, prior: Prior) -> BinaryChannel:
    return BinaryChannel.bsc(helstrom_error(math.exp(-exponent * energy), prior))


def ook_helstrom_channel(budget: PhotonBudget, at_eve: bool = False, prior: Prior = UNIFORM) -> BinaryChannel:
    m = budget.n_eve if at_eve else budget.n_bob
    return _helstrom_bsc(OVERLAP_EXPONENT[Modulation.OOK], m, prior)


def bpsk_helstrom_channel(budget: PhotonBudget, at_eve: bool = False, prior: Prior = UNIFORM) -> BinaryChannel:
    m = budget.n_eve if at_eve else budget.n_bob
    return _helstrom_bsc(OVERLAP_EXPONENT[Modulation.BPSK], m, prior)


def helstrom_channel(modulation: Modulation, budget: PhotonBudget, at_eve: bool = False,
                     prior: Prior = UNIFORM) -> BinaryChannel:
    if Modulation(modulation) is Modulation.OOK:
        return ook_helstrom_channel(budget, at_eve, prior)
    return bpsk_helstrom_channel(budget, at_eve, prior)


def ook_photon_counting_channel(budget: PhotonBudget, noise: DetectorNoise = DetectorNoise()) -> BinaryChannel:
    """Threshold detector: output 0 = no click, output 1 = click."""
    keep = 1.0 - noise.p_dark
    return BinaryChannel(keep * math.exp(-noise.delta),
                         keep * math.exp(-(2.0 * budget.n_bob + noise.delta)))


def homodyne_error(n_bob):
    return 0.5 * erfc(np.sqrt(2.0 * np.asarray(n_bob, dtype=float)))


def bpsk_homodyne_hard_channel(budget: PhotonBudget) -> BinaryChannel:
    return BinaryChannel.bsc(float(homodyne_error(budget.n_bob)))


def cascade_entries(a, b, e00, e01):
    """Closed form of compose(W(1-a, 1-b), W(e00, e01)); vectorised over a, b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return (1.0 - a) * e00 + a * e01, (1.0 - b) * e00 + b * e01


def effective_prior(a, b, q_v0):
    """P(X=0) after preprocessing: q (1-a) + (1-q)(1-b)."""
    return q_v0 * (1.0 - a) + (1.0 - q_v0) * (1.0 - b)


def apply_decoy(policy: DecoyPolicy) -> tuple[BinaryChannel, Prior]:
    ch = BinaryChannel(1.0 - policy.a, 1.0 - policy.b)
    return ch, Prior(effective_prior(policy.a, policy.b, policy.q_v0))


def decoy_bob_channel(policy: DecoyPolicy, raw_bob: BinaryChannel) -> BinaryChannel:
    e00, e01 = cascade_entries(policy.a, policy.b, raw_bob.e00, raw_bob.e01)
    return BinaryChannel(float(e00), float(e01))


def eve_crossover(modulation: Modulation, n_eve, q_x0, exponent: float | None = None):
    """Eve's Helstrom error when her decision is tuned to P(X=0) = q_x0."""
    k = OVERLAP_EXPONENT[Modulation(modulation)] if exponent is None else exponent
    return _helstrom(np.exp(-k * np.asarray(n_eve, dtype=float)), q_x0)


def decoy_eve_channel(policy: DecoyPolicy, budget: PhotonBudget, modulation: Modulation,
                      exponent: float | None = None) -> BinaryChannel:
    """Eve's V -> Z channel: decoy map followed by her prior-aware Helstrom BSC.

    ``exponent`` overrides the squared-overlap exponent (see
    ``secrecy.ScenarioSpec.bpsk_eve_exponent``).
    """
    _, qx = apply_decoy(policy)
    eps = float(eve_crossover(modulation, budget.n_eve, qx.q0, exponent))
    e00, e01 = cascade_entries(policy.a, policy.b, 1.0 - eps, eps)
    return BinaryChannel(float(e00), float(e01))


def _pure_pair_entropy(w, overlap_sq):
    """Von Neumann entropy of w|psi0><psi0| + (1-w)|psi1><psi1|."""
    w = np.asarray(w, dtype=float)
    disc = np.sqrt(np.maximum(0.0, 1.0 - 4.0 * w * (1.0 - w) * (1.0 - overlap_sq)))
    return binary_entropy(np.clip(0.5 * (1.0 + disc), 0.0, 1.0))


def holevo_bound(modulation: Modulation, budget: PhotonBudget, *, exponent: float | None = None,
                 prior: Prior | None = None, raw: bool = False) -> float:
    """Holevo quantity of Eve's two-state ensemble, in bits.

    Default is the prior-free form h((1 + s)/2) with s = |<psi0|psi1>|, i.e.
    s = exp(-gamma n) for OOK and exp(-2 gamma n) for BPSK.  ``raw=True``
    returns the bare (1 + s)/2 (not an information measure; diagnostics
    only).  Passing ``prior`` gives the prior-dependent pure-state entropy
    h((1 + sqrt(1 - 4 q0 q1 (1 - s^2)))/2) instead.
    """
    k = OVERLAP_EXPONENT[Modulation(modulation)] if exponent is None else exponent
    overlap_sq = math.exp(-k * budget.n_eve)
    if raw:
        return 0.5 * (1.0 + math.sqrt(overlap_sq))
    if prior is None:
        return binary_entropy(0.5 * (1.0 + math.sqrt(overlap_sq)))
    return float(_pure_pair_entropy(prior.q0, overlap_sq))


def holevo_decoy_ensemble(a, b, q_v0, overlap_sq):
    """chi(V;E) for V -> X -> {psi_0, psi_1}: S(rho) - sum_v q_v S(rho_v); vectorised."""
    q_x0 = effective_prior(a, b, q_v0)
    return (_pure_pair_entropy(q_x0, overlap_sq)
            - q_v0 * _pure_pair_entropy(1.0 - np.asarray(a, dtype=float), overlap_sq)
            - (1.0 - q_v0) * _pure_pair_entropy(1.0 - np.asarray(b, dtype=float), overlap_sq))


__all__ = [
    "Modulation", "PhotonBudget", "DetectorNoise", "DecoyPolicy",
    "helstrom_error", "ook_helstrom_channel", "bpsk_helstrom_channel", "helstrom_channel",
    "ook_photon_counting_channel", "bpsk_homodyne_hard_channel", "homodyne_error",
    "apply_decoy", "decoy_bob_channel", "decoy_eve_channel", "eve_crossover",
    "holevo_bound", "holevo_decoy_ensemble", "cascade_entries", "effective_prior",
]
