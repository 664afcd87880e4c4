"""Inter-satellite optical link budget.

Losses are kept as positive dB magnitudes and subtracted; gains are added.
Telescope gains are linear unless a name ends in ``_db``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable

from scipy.constants import c as SPEED_OF_LIGHT, h as PLANCK
from scipy.optimize import minimize_scalar

log = logging.getLogger(__name__)


def to_db(x: float) -> float:
    return 10.0 * math.log10(x)


def from_db(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


@dataclass(frozen=True)
class LinkParams:
    """Optical link parameters in SI units; defaults describe a 1550 nm inter-satellite link.

    ``g_t``/``g_r`` set to ``None`` mean "use the optimal gain".
    """

    wavelength: float = 1550e-9
    pulse_rate: float = 5e9
    eta_d: float = 0.7
    eta_t: float = 0.8
    eta_r: float = 0.8
    g_t: float | None = None
    g_r: float | None = None
    range_m: float = 1000e3
    theta_max: float = 1e-6
    sigma_theta: float | None = None
    l_other_db: float = 1.0
    gamma: float = 1.0

    def __post_init__(self) -> None:
        for name in ("eta_d", "eta_t", "eta_r"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {v!r}")
        for name in ("wavelength", "pulse_rate", "range_m"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be > 0")
        for name in ("g_t", "g_r", "sigma_theta"):
            v = getattr(self, name)
            if v is not None and not v > 0.0:
                raise ValueError(f"{name} must be > 0")
        if not self.theta_max >= 0.0:
            raise ValueError("theta_max must be >= 0")
        if not self.l_other_db >= 0.0:
            raise ValueError("l_other_db is a loss magnitude and must be >= 0")
        if not self.gamma >= 0.0:
            raise ValueError("gamma must be >= 0")

    @property
    def eta_eff(self) -> float:
        return self.eta_t * self.eta_r

    @property
    def photon_energy(self) -> float:
        return photon_energy(self.wavelength)


ISL_STUDY_CASE = LinkParams()


def photon_energy(wavelength: float) -> float:
    """Single-photon energy h c / lambda in joules."""
    return PLANCK * SPEED_OF_LIGHT / wavelength


def transmit_power(n_t: float, p: LinkParams) -> float:
    """Optical power in watts for ``n_t`` mean photons per pulse."""
    return n_t * p.pulse_rate * p.photon_energy


def pointing_loss(g: float, theta: float) -> float:
    """Gaussian-beam pointing loss exp(-g theta^2) as a linear factor."""
    if not g > 0.0:
        raise ValueError("g must be > 0")
    if not theta >= 0.0:
        raise ValueError("theta must be >= 0")
    return math.exp(-g * theta * theta)


def free_space_factor(wavelength: float, range_m: float) -> float:
    return (wavelength / (4.0 * math.pi * range_m)) ** 2


def end_to_end_efficiency(p: LinkParams, g: float | None = None) -> float:
    """Photon transfer efficiency from transmitter to detector.

    ``g`` sets both telescope gains; otherwise ``p.g_t``/``p.g_r`` are used and
    any missing one falls back to the optimal gain.
    """
    if g is None:
        g_opt = None if (p.g_t and p.g_r) else optimize_effective_gain(p)[0]
        g_t, g_r = p.g_t or g_opt, p.g_r or g_opt
    else:
        g_t = g_r = g
    eta = (p.eta_d * g_t * p.eta_t * g_r * p.eta_r
           * free_space_factor(p.wavelength, p.range_m)
           * pointing_loss(g_t, p.theta_max) * pointing_loss(g_r, p.theta_max)
           * from_db(-p.l_other_db))
    if eta > 1.0:
        log.warning("end-to-end efficiency %.6g exceeds 1 (non-physical parameters); clamped", eta)
        eta = 1.0
    return eta


def effective_gain_db(g: float, eta_eff: float, theta_max: float) -> float:
    """2 dB(g eta_eff) + 2 dB(pointing loss), for identical telescopes at both ends."""
    return 2.0 * to_db(g * eta_eff) - 2.0 * g * theta_max ** 2 * 10.0 * math.log10(math.e)


def optimize_effective_gain(p: LinkParams) -> tuple[float, float]:
    """(g_star, effective gain at g_star in dB), searched in log-gain around 1/theta_max^2."""
    if not p.theta_max > 0.0:
        raise ValueError("theta_max must be > 0 for a finite optimal gain")
    seed = math.log(1.0 / p.theta_max ** 2)
    res = minimize_scalar(lambda lg: -effective_gain_db(math.exp(lg), p.eta_eff, p.theta_max),
                          bounds=(seed - 5.0, seed + 5.0), method="bounded",
                          options={"xatol": 1e-8})
    g_star = math.exp(res.x)
    return g_star, effective_gain_db(g_star, p.eta_eff, p.theta_max)


@dataclass(frozen=True)
class OutageResult:
    probability: float
    raw: float
    in_domain: bool


def outage_probability(sigma_theta: float, g: float, eta_eff: float, l_p_db: float) -> OutageResult:
    """Pointing outage probability for an allowed pointing loss ``l_p_db``.

    Evaluates (1 + K / (2 s^2 eta_eff g)) exp(-K / (2 s^2 eta_eff)) with
    K = ln(10)/10 * l_p_db, without correcting the exponent (which lacks the
    gain factor one would expect).  A value outside [0, 1] is clamped for
    reporting and flagged with ``in_domain=False``.
    """
    if min(sigma_theta, g, eta_eff) <= 0.0 or l_p_db < 0.0:
        raise ValueError("outage_probability needs positive arguments")
    k = math.log(10.0) / 10.0 * l_p_db
    s2 = 2.0 * sigma_theta ** 2
    raw = (1.0 + k / (s2 * eta_eff * g)) * math.exp(-k / (s2 * eta_eff))
    ok = 0.0 <= raw <= 1.0
    if not ok:
        log.warning("outage formula left [0, 1] (%.6g); clamped", raw)
    return OutageResult(min(1.0, max(0.0, raw)), raw, ok)


def security_link_margin(p: LinkParams, n_t: float) -> float:
    """Photons per pulse Eve may collect: gamma * eta * n_t at the optimal gain."""
    return p.gamma * end_to_end_efficiency(p, optimize_effective_gain(p)[0]) * n_t


def should_abort(n_b_observed: float, calibrated_n_b: float) -> bool:
    """Abort rule: Bob sees fewer photons than the calibrated margin allows."""
    return n_b_observed < calibrated_n_b


@dataclass(frozen=True)
class TransmitRow:
    range_m: float
    n_t: float
    power_w: float
    eta: float
    slm: float


CSV_COLUMNS = ("R_m", "n_t", "power_W", "eta", "slm")


def required_transmit(p: LinkParams, n_b_star: float, range_grid: Iterable[float]) -> list[TransmitRow]:
    """Transmit photons and power that put ``n_b_star`` photons at Bob plus the margin.

    n_b_star = eta n_t (1 + gamma), so n_t = n_b_star / (eta (1 + gamma)).
    """
    if not n_b_star > 0.0:
        raise ValueError("n_b_star must be > 0")
    g_star = None if (p.g_t and p.g_r) else optimize_effective_gain(p)[0]
    rows = []
    for r in range_grid:
        eta = end_to_end_efficiency(replace(p, range_m=float(r)), g_star)
        if eta <= 0.0:
            raise ValueError(f"range {r} m is unreachable (efficiency underflows to 0)")
        n_t = n_b_star / (eta * (1.0 + p.gamma))
        rows.append(TransmitRow(float(r), n_t, transmit_power(n_t, p), eta, p.gamma * eta * n_t))
    return rows


@dataclass(frozen=True)
class LinkDesign:
    eta: float
    g_star: float
    g_eff_star_db: float
    slm_photons: float
    n_b: float
    n_t_required: float
    power_w: float


def design_link(p: LinkParams, n_b_star: float = 1.0) -> LinkDesign:
    g_star, g_eff_db = optimize_effective_gain(p)
    row = required_transmit(replace(p, g_t=g_star, g_r=g_star), n_b_star, [p.range_m])[0]
    return LinkDesign(row.eta, g_star, g_eff_db, row.slm, row.eta * row.n_t, row.n_t, row.power_w)


# config key -> (LinkParams field, decimal exponent taking the config unit to SI)
CONFIG_KEYS = {
    "wavelength_nm": ("wavelength", -9),
    "pulse_rate_ghz": ("pulse_rate", 9),
    "eta_d": ("eta_d", 0),
    "eta_t": ("eta_t", 0),
    "eta_r": ("eta_r", 0),
    "theta_max_urad": ("theta_max", -6),
    "l_other_db": ("l_other_db", 0),
}
OPTIONAL_CONFIG_KEYS = {
    "sigma_theta_urad": ("sigma_theta", -6),
    "range_km": ("range_m", 3),
    "gamma": ("gamma", 0),
    "g_t": ("g_t", 0),
    "g_r": ("g_r", 0),
}


def _scale(v: float, exp10: int) -> float:
    # integer powers of ten keep e.g. 1550 nm -> 1.55e-06 correctly rounded
    return v * 10 ** exp10 if exp10 >= 0 else v / 10 ** -exp10


class ConfigError(ValueError):
    def __init__(self, message: str, missing: tuple[str, ...] = ()):
        super().__init__(message)
        self.missing = missing


def parse_link_config(text: str) -> LinkParams:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    values: dict[str, float] = {}
    known = CONFIG_KEYS | OPTIONAL_CONFIG_KEYS
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip().lower()
        if not sep:
            raise ConfigError(f"line {lineno}: expected key = value")
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = float(val)
        except ValueError:
            raise ConfigError(f"line {lineno}: {key} is not a number: {val.strip()!r}") from None
    missing = tuple(k for k in CONFIG_KEYS if k not in values)
    if missing:
        raise ConfigError("missing config keys: " + ", ".join(missing), missing)
    kwargs = {known[k][0]: _scale(v, known[k][1]) for k, v in values.items()}
    return LinkParams(**kwargs)


def load_link_config(path: str | Path) -> LinkParams:
    return parse_link_config(Path(path).read_text())


def format_link_config(p: LinkParams) -> str:
    """Inverse of ``parse_link_config`` (units in comments)."""
    units = {"wavelength_nm": "nm", "pulse_rate_ghz": "GHz", "theta_max_urad": "urad",
             "l_other_db": "dB", "sigma_theta_urad": "urad", "range_km": "km"}
    lines = []
    for key, (name, exp10) in (CONFIG_KEYS | OPTIONAL_CONFIG_KEYS).items():
        v = getattr(p, name)
        if v is None:
            continue
        unit = f"  # {units[key]}" if key in units else ""
        lines.append(f"{key} = {_scale(v, -exp10):.12g}{unit}")
    return "\n".join(lines) + "\n"


__all__ = [
    "LinkParams", "ISL_STUDY_CASE", "LinkDesign", "TransmitRow", "OutageResult", "ConfigError",
    "to_db", "from_db", "photon_energy", "transmit_power", "pointing_loss", "free_space_factor",
    "end_to_end_efficiency", "effective_gain_db", "optimize_effective_gain", "outage_probability",
    "security_link_margin", "should_abort", "required_transmit", "design_link",
    "parse_link_config", "load_link_config", "format_link_config", "CSV_COLUMNS",
]
