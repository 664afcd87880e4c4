import logging
import math
from dataclasses import replace

import numpy as np
import pytest

from decoy_wiretap.linkbudget import (
    CSV_COLUMNS, ISL_STUDY_CASE, ConfigError, LinkParams, design_link, effective_gain_db,
    end_to_end_efficiency, format_link_config, free_space_factor, from_db, load_link_config,
    optimize_effective_gain, outage_probability, parse_link_config, photon_energy, pointing_loss,
    required_transmit, security_link_margin, should_abort, to_db, transmit_power,
)

# exact SI values
H = 6.62607015e-34
C = 299792458.0

TABLE_CONFIG = """\
wavelength_nm = 1550    # nm
pulse_rate_ghz = 5      # GHz
eta_d = 0.7
eta_t = 0.8
eta_r = 0.8
theta_max_urad = 1      # urad
l_other_db = 1          # dB
"""


def efficiency_oracle(p, g):
    free = (p.wavelength / (4 * math.pi * p.range_m)) ** 2
    point = math.exp(-2 * g * p.theta_max ** 2)
    return p.eta_d * p.eta_t * p.eta_r * g * g * free * point * 10 ** (-p.l_other_db / 10)


class TestPrimitives:
    def test_db_round_trip(self):
        rng = np.random.default_rng(0)
        for x in 10 ** rng.uniform(-30, 30, 200):
            assert from_db(to_db(x)) == pytest.approx(x, rel=1e-12)
        for x_db in rng.uniform(-300, 300, 200):
            assert to_db(from_db(x_db)) == pytest.approx(x_db, abs=1e-12)

    def test_photon_energy(self):
        assert photon_energy(1550e-9) == pytest.approx(H * C / 1550e-9, rel=1e-15)

    def test_power_is_linear(self):
        p = ISL_STUDY_CASE
        assert transmit_power(10.0, p) == pytest.approx(10 * transmit_power(1.0, p), rel=1e-15)
        fast = replace(p, pulse_rate=2 * p.pulse_rate)
        assert transmit_power(3.0, fast) == pytest.approx(2 * transmit_power(3.0, p), rel=1e-15)

    def test_ten_photons_at_five_ghz(self):
        watts = transmit_power(10.0, ISL_STUDY_CASE)
        assert watts == pytest.approx(10 * 5e9 * H * C / 1550e-9, rel=1e-12)
        assert watts == pytest.approx(6.41e-9, rel=0.02)

    def test_pointing_loss(self):
        assert pointing_loss(1e12, 0.0) == 1.0
        assert pointing_loss(1e12, 1e-6) == pytest.approx(0.36788, abs=5e-6)
        assert pointing_loss(1e20, 1e-6) == 0.0
        with pytest.raises(ValueError):
            pointing_loss(0.0, 1e-6)
        with pytest.raises(ValueError):
            pointing_loss(1.0, -1e-6)

    def test_free_space_factor(self):
        assert math.sqrt(free_space_factor(1550e-9, 1e6)) == pytest.approx(1.2334e-13, rel=1e-4)
        assert free_space_factor(1550e-9, 1e6) == pytest.approx(1.5213e-26, rel=1e-4)


class TestParams:
    @pytest.mark.parametrize("field,value", [("eta_d", 0.0), ("eta_t", 1.2), ("range_m", 0.0),
                                             ("theta_max", -1.0), ("l_other_db", -1.0),
                                             ("g_t", -5.0), ("gamma", -0.1)])
    def test_validation(self, field, value):
        with pytest.raises(ValueError):
            replace(ISL_STUDY_CASE, **{field: value})

    def test_eta_eff(self):
        assert ISL_STUDY_CASE.eta_eff == pytest.approx(0.64)


class TestEfficiency:
    def test_bare_free_space(self):
        p = LinkParams(eta_d=1.0, eta_t=1.0, eta_r=1.0, theta_max=0.0, l_other_db=0.0, g_t=1.0, g_r=1.0)
        assert end_to_end_efficiency(p) == pytest.approx(free_space_factor(1550e-9, 1e6), rel=1e-14)

    def test_table_values(self):
        eta = end_to_end_efficiency(ISL_STUDY_CASE, 1e12)
        assert eta == pytest.approx(efficiency_oracle(ISL_STUDY_CASE, 1e12), rel=1e-12)
        assert eta == pytest.approx(7.3271e-4, rel=1e-4)
        assert 0 < eta <= 1

    def test_explicit_gains(self):
        p = replace(ISL_STUDY_CASE, g_t=4e11, g_r=4e11)
        assert end_to_end_efficiency(p) == pytest.approx(efficiency_oracle(p, 4e11), rel=1e-12)

    def test_clamped_with_warning(self, caplog):
        p = replace(ISL_STUDY_CASE, range_m=1.0, theta_max=0.0, l_other_db=0.0)
        with caplog.at_level(logging.WARNING, logger="decoy_wiretap.linkbudget"):
            assert end_to_end_efficiency(p, 1e9) == 1.0
        assert "clamped" in caplog.text

    def test_monotone_in_range_and_pointing(self):
        ranges = np.geomspace(1e5, 1e8, 30)
        etas = [end_to_end_efficiency(replace(ISL_STUDY_CASE, range_m=r), 1e12) for r in ranges]
        assert np.all(np.diff(etas) < 0)
        thetas = np.linspace(0, 3e-6, 30)
        etas = [end_to_end_efficiency(replace(ISL_STUDY_CASE, theta_max=t), 1e12) for t in thetas]
        assert np.all(np.diff(etas) < 0)


class TestEffectiveGain:
    def test_stationary_point(self):
        g_star, g_db = optimize_effective_gain(ISL_STUDY_CASE)
        assert g_star == pytest.approx(1e12, rel=1e-3)
        assert to_db(g_star) == pytest.approx(120.0, abs=0.01)
        want = 2 * 10 * math.log10(0.64e12) - 2 * 10 * math.log10(math.e)
        assert g_db == pytest.approx(want, abs=1e-6)

    def test_near_225_db(self):
        assert optimize_effective_gain(ISL_STUDY_CASE)[1] == pytest.approx(225.0, abs=3.0)

    @pytest.mark.parametrize("theta", [0.3e-6, 1e-6, 2e-6, 7e-6])
    def test_matches_inverse_square(self, theta):
        g_star, _ = optimize_effective_gain(replace(ISL_STUDY_CASE, theta_max=theta))
        assert g_star == pytest.approx(1 / theta ** 2, rel=1e-3)

    def test_doubling_theta_quarters_gain(self):
        g1, _ = optimize_effective_gain(ISL_STUDY_CASE)
        g2, _ = optimize_effective_gain(replace(ISL_STUDY_CASE, theta_max=2e-6))
        assert g2 == pytest.approx(g1 / 4, rel=1e-3)

    def test_objective_peaks_at_search_result(self):
        g_star, g_db = optimize_effective_gain(ISL_STUDY_CASE)
        for g in g_star * np.array([0.5, 0.9, 1.1, 2.0]):
            assert effective_gain_db(g, 0.64, 1e-6) < g_db

    def test_needs_pointing_error(self):
        with pytest.raises(ValueError):
            optimize_effective_gain(replace(ISL_STUDY_CASE, theta_max=0.0))


class TestOutage:
    def test_zero_margin_is_certain_outage(self):
        assert outage_probability(0.5e-6, 1e12, 0.64, 0.0).probability == 1.0

    def test_large_margin_limit(self):
        assert outage_probability(1.0, 1.0, 1.0, 1e4).probability == pytest.approx(0.0, abs=1e-12)

    def test_formula_direct(self):
        sigma, g, eta_eff, lp = 0.3, 2.0, 0.5, 0.5
        k = math.log(10) / 10 * lp
        want = (1 + k / (2 * sigma ** 2 * eta_eff * g)) * math.exp(-k / (2 * sigma ** 2 * eta_eff))
        res = outage_probability(sigma, g, eta_eff, lp)
        assert res.raw == pytest.approx(want, rel=1e-14)
        assert res.in_domain

    def test_study_case_point(self):
        # the exponent is ~2e12 in magnitude, so the value underflows
        res = outage_probability(0.5e-6, 1e12, 0.64, 3.0)
        assert res.probability == 0.0
        assert res.in_domain

    def test_out_of_domain_flagged(self):
        res = outage_probability(1.0, 1e-3, 1.0, 1.0)
        assert res.raw > 1.0
        assert res.probability == 1.0
        assert not res.in_domain

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            outage_probability(0.0, 1.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            outage_probability(1.0, 1.0, 1.0, -1.0)


class TestMargin:
    def test_gamma_zero(self):
        assert security_link_margin(replace(ISL_STUDY_CASE, gamma=0.0), 100.0) == 0.0

    def test_split_of_unit_budget(self):
        d = design_link(ISL_STUDY_CASE, 1.0)
        assert d.slm_photons == pytest.approx(0.5, abs=1e-12)
        assert d.n_b == pytest.approx(0.5, abs=1e-12)
        assert security_link_margin(ISL_STUDY_CASE, d.n_t_required) == pytest.approx(0.5, rel=1e-9)

    def test_abort_rule(self):
        assert should_abort(0.4, 0.5)
        assert not should_abort(0.5, 0.5)


class TestRequiredTransmit:
    def test_columns(self):
        assert CSV_COLUMNS == ("R_m", "n_t", "power_W", "eta", "slm")

    def test_budget_identity(self):
        for row in required_transmit(ISL_STUDY_CASE, 1.0, [5e5, 1e6, 4e6]):
            eta = efficiency_oracle(replace(ISL_STUDY_CASE, range_m=row.range_m), 1e12)
            assert row.eta == pytest.approx(eta, rel=1e-6)
            assert row.n_t * row.eta * 2 == pytest.approx(1.0, rel=1e-12)
            assert row.power_w == pytest.approx(row.n_t * 5e9 * H * C / 1550e-9, rel=1e-12)

    def test_classical_budget_without_eve(self):
        p = replace(ISL_STUDY_CASE, gamma=0.0)
        for row in required_transmit(p, 2.0, [1e6, 3e6]):
            assert row.n_t == pytest.approx(2.0 / row.eta, rel=1e-12)
            assert row.slm == 0.0

    def test_doubling_range_quadruples_photons(self):
        a, b = required_transmit(ISL_STUDY_CASE, 1.0, [1e6, 2e6])
        assert b.n_t == pytest.approx(4 * a.n_t, rel=1e-12)

    def test_monotone_in_range(self):
        rows = required_transmit(ISL_STUDY_CASE, 1.0, np.geomspace(1e5, 1e8, 40))
        assert np.all(np.diff([r.n_t for r in rows]) > 0)

    def test_unreachable(self):
        with pytest.raises(ValueError, match="unreachable"):
            required_transmit(ISL_STUDY_CASE, 1.0, [1e300])

    def test_needs_positive_target(self):
        with pytest.raises(ValueError):
            required_transmit(ISL_STUDY_CASE, 0.0, [1e6])

    def test_design_summary(self):
        d = design_link(ISL_STUDY_CASE)
        assert d.g_star == pytest.approx(1e12, rel=1e-3)
        assert d.eta == pytest.approx(7.3271e-4, rel=1e-3)
        assert d.power_w == pytest.approx(transmit_power(d.n_t_required, ISL_STUDY_CASE), rel=1e-12)


class TestConfig:
    def test_parse_table(self):
        p = parse_link_config(TABLE_CONFIG)
        assert p.wavelength == 1550e-9
        assert p.pulse_rate == 5e9
        assert p.theta_max == 1e-6
        assert p == ISL_STUDY_CASE

    def test_optional_keys(self):
        p = parse_link_config(TABLE_CONFIG + "range_km = 2000\ngamma = 0.5\nsigma_theta_urad = 0.5\n")
        assert (p.range_m, p.gamma, p.sigma_theta) == (2e6, 0.5, 5e-7)

    def test_round_trip(self):
        p = replace(ISL_STUDY_CASE, sigma_theta=0.5e-6, gamma=0.25, g_t=3e11, g_r=4e11)
        assert parse_link_config(format_link_config(p)) == p

    def test_missing_keys_listed(self):
        text = "\n".join(l for l in TABLE_CONFIG.splitlines() if not l.startswith(("eta_t", "l_other")))
        with pytest.raises(ConfigError) as err:
            parse_link_config(text)
        assert err.value.missing == ("eta_t", "l_other_db")
        assert "eta_t" in str(err.value)

    @pytest.mark.parametrize("line", ["bogus = 1", "eta_d 0.7", "eta_d = high"])
    def test_bad_lines(self, line):
        with pytest.raises(ConfigError):
            parse_link_config(TABLE_CONFIG + line + "\n")

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "link.cfg"
        path.write_text(TABLE_CONFIG)
        assert load_link_config(path) == ISL_STUDY_CASE
