import pytest

from roamsim.config import (Band, ConfigError, ScanAccounting, ScenarioConfig,
                            load_scenario, with_overrides)


def test_empty_document_gives_defaults():
    cfg = load_scenario("")
    assert cfg.num_channels == 5
    assert cfg.num_aps == 3
    assert cfg.channel_bandwidth_hz == 20e6
    assert cfg.scan_interval_s == 0.2
    assert cfg.ap_spacing_m == 25.0
    assert cfg.max_range_m == 30.0


def test_zero_stas_rejected():
    with pytest.raises(ConfigError, match="num_stas"):
        load_scenario("num_stas = 0")


def test_overrides_keep_remaining_defaults():
    cfg = load_scenario("num_channels = 2\nnum_aps = 2\nseed = 42\n")
    assert cfg.num_channels == 2
    assert cfg.num_aps == 2
    assert cfg.seed == 42
    assert cfg.channel_bandwidth_hz == 20e6
    assert cfg.t_min_ms == 10.0


def test_comments_and_blank_lines():
    cfg = load_scenario("# a comment\n\nnum_stas = 7  # trailing\n")
    assert cfg.num_stas == 7


def test_unknown_key_is_hard_error_with_line():
    with pytest.raises(ConfigError, match="line 2.*no_such_key"):
        load_scenario("num_aps = 3\nno_such_key = 1\n")


def test_duplicate_key_rejected():
    with pytest.raises(ConfigError, match="duplicate"):
        load_scenario("seed = 1\nseed = 2\n")


def test_bad_value_names_key_and_line():
    with pytest.raises(ConfigError, match="line 1.*num_aps"):
        load_scenario("num_aps = banana")


def test_missing_equals_sign():
    with pytest.raises(ConfigError, match="line 1"):
        load_scenario("just some text")


def test_serialization_round_trips_exactly():
    cfg = ScenarioConfig(num_channels=4, num_aps=2, num_stas=9, seed=123,
                         tau=0.3, scan_accounting=ScanAccounting.EQ3_LITERAL,
                         ap_channels=(1, 3), channel_bands=(Band.GHZ_2_4,) * 4,
                         share_params=True)
    assert load_scenario(cfg.to_text()) == cfg


def test_default_band_split_low_then_high():
    cfg = ScenarioConfig()
    assert cfg.band_of == (Band.GHZ_2_4,) * 3 + (Band.GHZ_5,) * 2


def test_default_ap_channels_spread_and_distinct():
    cfg = ScenarioConfig()
    assert cfg.ap_channel_map == (1, 2, 4)
    assert len(set(cfg.ap_channel_map)) == cfg.num_aps


def test_ap_channels_validated_against_num_channels():
    with pytest.raises(ConfigError, match="ap_channels"):
        ScenarioConfig(ap_channels=(1, 2, 9))
    with pytest.raises(ConfigError, match="ap_channels"):
        ScenarioConfig(ap_channels=(1, 2))


def test_timer_ordering_enforced():
    with pytest.raises(ConfigError, match="t_min_ms"):
        load_scenario("t_min_ms = 200\n")


def test_with_overrides_parses_raw_strings():
    cfg = with_overrides(ScenarioConfig(), {"num_stas": "10", "tau": "0.5",
                                            "share_params": "true"})
    assert cfg.num_stas == 10 and cfg.tau == 0.5 and cfg.share_params is True
    with pytest.raises(ConfigError, match="unknown key"):
        with_overrides(ScenarioConfig(), {"nope": "1"})
