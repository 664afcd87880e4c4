"""Pulse-by-pulse sampling of the decoy -> modulation -> detection chain.

Random numbers come from numpy's Philox4x64-10 counter-based generator,
seeded per shard with ``SeedSequence([seed, shard])``.  Each shard draws, in
this order: the message bits V, the decoy map V -> X, Bob's detector and Eve's
decision.  Shards are merged in index order, so a report depends only on
(config, seed, shards).

Photon counting is sampled physically (Poisson photon number plus a
dark-count coin); homodyne BPSK as a Gaussian quadrature with standard
deviation 1/2 around +-sqrt(n); Helstrom decisions only as their induced
binary symmetric channel.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .channels import DecoyPolicy, Modulation, decoy_bob_channel, decoy_eve_channel, effective_prior
from .infotheory import BinaryChannel, mutual_information_entries
from .secrecy import Scenario, ScenarioSpec, bob_raw_channel, eve_raw_channel

GENERATOR = "numpy Philox4x64-10, SeedSequence([seed, shard])"


class UnsupportedScenario(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    spec: ScenarioSpec
    policy: DecoyPolicy
    n_samples: int
    seed: int
    shards: int = 1

    def __post_init__(self) -> None:
        if int(self.n_samples) != self.n_samples or self.n_samples < 1:
            raise ValueError("n_samples must be a positive integer")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not 1 <= self.shards <= self.n_samples:
            raise ValueError("shards must lie in [1, n_samples]")
        if self.spec.scenario is Scenario.DW:
            raise UnsupportedScenario("the Holevo-limited eavesdropper has no sampling model")


@dataclass(frozen=True)
class EmpiricalChannel:
    channel: BinaryChannel
    counts: tuple[int, int]       # pulses with V = 0, V = 1
    zeros: tuple[int, int]        # of those, outputs equal to 0
    stderr: tuple[float | None, float | None]


@dataclass(frozen=True)
class SimReport:
    config: SimConfig
    bob: EmpiricalChannel
    eve: EmpiricalChannel
    mi_bob: float
    mi_eve: float
    analytic_bob: BinaryChannel
    analytic_eve: BinaryChannel
    analytic_mi_bob: float
    analytic_mi_eve: float

    @property
    def empirical_bob(self) -> BinaryChannel:
        return self.bob.channel

    @property
    def empirical_eve(self) -> BinaryChannel:
        return self.eve.channel

    def within_band(self, k: float = 4.0) -> bool:
        """Every analytic entry within k binomial standard errors of its estimate."""
        for emp, ana in ((self.bob, self.analytic_bob), (self.eve, self.analytic_eve)):
            for p_hat, p, n in zip((emp.channel.e00, emp.channel.e01), (ana.e00, ana.e01), emp.counts):
                if n == 0:
                    continue
                if abs(p_hat - p) > k * math.sqrt(p * (1.0 - p) / n) + 1e-15:
                    return False
        return True

    def to_dict(self) -> dict:
        spec = self.config.spec

        def chan(emp: EmpiricalChannel, ana: BinaryChannel) -> dict:
            e = emp.channel
            return {
                "empirical": [[e.e00, 1.0 - e.e00], [e.e01, 1.0 - e.e01]],
                "analytic": [[ana.e00, 1.0 - ana.e00], [ana.e01, 1.0 - ana.e01]],
                "delta": [emp_e - ana_e if n else None
                          for emp_e, ana_e, n in zip((e.e00, e.e01), (ana.e00, ana.e01), emp.counts)],
                "stderr": list(emp.stderr),
                "counts": list(emp.counts),
            }

        return {
            "config": {
                "modulation": spec.modulation.value,
                "scenario": spec.scenario.value,
                "n_bob": spec.budget.n_bob,
                "gamma": spec.budget.gamma,
                "p_dark": spec.noise.p_dark,
                "delta": spec.noise.delta,
                "bpsk_eve_exponent": spec.bpsk_eve_exponent,
                "policy": asdict(self.config.policy),
                "n_samples": self.config.n_samples,
                "seed": self.config.seed,
                "shards": self.config.shards,
                "generator": GENERATOR,
            },
            "bob": chan(self.bob, self.analytic_bob),
            "eve": chan(self.eve, self.analytic_eve),
            "mutual_information": {
                "bob": {"empirical": self.mi_bob, "analytic": self.analytic_mi_bob},
                "eve": {"empirical": self.mi_eve, "analytic": self.analytic_mi_eve},
            },
            "within_4sigma": self.within_band(4.0),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _shard_sizes(n: int, shards: int) -> list[int]:
    base, extra = divmod(n, shards)
    return [base + (i < extra) for i in range(shards)]


def _sample_shard(cfg: SimConfig, shard: int, n: int, eve_crossover: float) -> np.ndarray:
    """Counts indexed [receiver (Bob, Eve), V, (pulses, zero outputs)]."""
    spec, pol = cfg.spec, cfg.policy
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([cfg.seed, shard])))
    v0 = rng.random(n) < pol.q_v0
    x0 = rng.random(n) < np.where(v0, 1.0 - pol.a, 1.0 - pol.b)

    n_bob = spec.budget.n_bob
    if spec.scenario is Scenario.QQ:
        flip = rng.random(n) < bob_raw_channel(spec).e01
        y0 = x0 ^ flip
    elif spec.modulation is Modulation.OOK:
        mean = np.where(x0, 0.0, 2.0 * n_bob) + spec.noise.delta
        photons = rng.poisson(mean)
        dark = rng.random(n) < spec.noise.p_dark
        y0 = (photons == 0) & ~dark
    else:
        quad = rng.normal(np.where(x0, -math.sqrt(n_bob), math.sqrt(n_bob)), 0.5)
        y0 = quad < 0.0

    z0 = x0 ^ (rng.random(n) < eve_crossover)

    out = np.zeros((2, 2, 2), dtype=np.int64)
    for i, obs in enumerate((y0, z0)):
        for v, mask in enumerate((v0, ~v0)):
            out[i, v, 0] = np.count_nonzero(mask)
            out[i, v, 1] = np.count_nonzero(mask & obs)
    return out


def _empirical(counts: np.ndarray) -> EmpiricalChannel:
    totals = (int(counts[0, 0]), int(counts[1, 0]))
    zeros = (int(counts[0, 1]), int(counts[1, 1]))
    # a V value never drawn (tiny runs) reports entry 0 with no standard error
    p = [z / t if t else 0.0 for z, t in zip(zeros, totals)]
    se = [math.sqrt(pi * (1.0 - pi) / t) if t else None for pi, t in zip(p, totals)]
    return EmpiricalChannel(BinaryChannel(p[0], p[1]), totals, zeros, (se[0], se[1]))


def simulate(cfg: SimConfig) -> SimReport:
    spec, pol = cfg.spec, cfg.policy
    q_x0 = float(effective_prior(pol.a, pol.b, pol.q_v0))
    eve_x = eve_raw_channel(spec, q_x0)

    total = np.zeros((2, 2, 2), dtype=np.int64)
    for shard, n in enumerate(_shard_sizes(int(cfg.n_samples), cfg.shards)):
        total += _sample_shard(cfg, shard, n, eve_x.e01)

    bob, eve = _empirical(total[0]), _empirical(total[1])
    q_hat = bob.counts[0] / cfg.n_samples
    analytic_bob = decoy_bob_channel(pol, bob_raw_channel(spec))
    if spec.scenario is Scenario.QQ:
        analytic_eve = decoy_bob_channel(pol, eve_x)
    else:
        analytic_eve = decoy_eve_channel(pol, spec.budget, spec.modulation, spec.eve_exponent)
    return SimReport(
        cfg, bob, eve,
        mutual_information_entries(bob.channel.e00, bob.channel.e01, q_hat),
        mutual_information_entries(eve.channel.e00, eve.channel.e01, q_hat),
        analytic_bob, analytic_eve,
        mutual_information_entries(analytic_bob.e00, analytic_bob.e01, pol.q_v0),
        mutual_information_entries(analytic_eve.e00, analytic_eve.e01, pol.q_v0),
    )
