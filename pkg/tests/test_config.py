"""Config loading: packaged defaults, deep merge, env overrides, builders."""

import math

import pytest

from toolsmith.config import (
    ConfigError,
    build_accuracy_weights,
    build_backend,
    build_band,
    build_bundle,
    build_curation_config,
    build_decode_params,
    build_distribution,
    build_solver_format_weights,
    build_validity_weights,
    load_config,
)
from toolsmith.gateway import RemoteBackend, ScriptedBackend


def test_defaults_load_without_a_user_file():
    cfg = load_config()
    assert cfg["rewards"]["generator"]["sigma"] == 0.12
    assert cfg["service"]["port"] == 8731
    weights = cfg["taskspec"]["domain_weights"]
    assert len(weights) == 32
    assert math.isclose(sum(weights.values()), 1.0, abs_tol=1e-9)


def test_user_file_merges_leaf_by_leaf(tmp_path):
    user = tmp_path / "user.yaml"
    user.write_text("rewards:\n  generator:\n    sigma: 0.2\n", encoding="utf-8")
    cfg = load_config(user)
    assert cfg["rewards"]["generator"]["sigma"] == 0.2
    # siblings keep their defaults
    assert cfg["rewards"]["generator"]["p_low"] == 0.25
    assert cfg["curation"]["pool_size"] == 10000


def test_unknown_top_level_key_is_rejected(tmp_path):
    user = tmp_path / "user.yaml"
    user.write_text("rewardz:\n  x: 1\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="rewardz"):
        load_config(user)


def test_unknown_nested_key_names_its_full_path(tmp_path):
    user = tmp_path / "user.yaml"
    user.write_text("rewards:\n  generator:\n    sgima: 0.2\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="rewards.generator.sgima"):
        load_config(user)


def test_domain_weights_are_replaced_wholesale(tmp_path):
    user = tmp_path / "user.yaml"
    user.write_text(
        "taskspec:\n  domain_weights:\n    mining: 0.5\n    forestry: 0.5\n",
        encoding="utf-8",
    )
    cfg = load_config(user)
    assert set(cfg["taskspec"]["domain_weights"]) == {"mining", "forestry"}


def test_empty_user_file_is_a_noop(tmp_path):
    user = tmp_path / "user.yaml"
    user.write_text("", encoding="utf-8")
    assert load_config(user) == load_config()


def test_build_distribution_round_trips_the_config():
    cfg = load_config()
    dist = build_distribution(cfg)
    dist.validate()
    assert dist.p_multi_turn == cfg["taskspec"]["p_multi_turn"]
    assert dist.domain_weights == cfg["taskspec"]["domain_weights"]


def test_reward_builders_map_every_field():
    cfg = load_config()
    vw = build_validity_weights(cfg)
    assert (vw.lambda_menu, vw.lambda_gold, vw.lambda_value) == (0.4, 0.4, 0.2)
    band = build_band(cfg)
    assert (band.p_low, band.p_high, band.sigma) == (0.25, 0.75, 0.12)
    assert band.k_samples == 8
    sf = build_solver_format_weights(cfg)
    assert (sf.lambda_tag, sf.lambda_parse, sf.lambda_norm) == (0.3, 0.3, 0.4)
    aw = build_accuracy_weights(cfg)
    assert (aw.lambda_name, aw.lambda_key, aw.lambda_val, aw.alpha) == (0.2, 0.3, 0.5, 0.25)


def test_build_curation_config_decodes_thirds_keyword():
    cfg = load_config()
    cur = build_curation_config(cfg)
    cur.validate()
    assert cur.bucket_mix == (1 / 3, 1 / 3, 1 / 3)
    assert cur.domain_cap_fraction is None
    assert cur.share_probe is True


def test_build_curation_config_accepts_explicit_mix(tmp_path):
    user = tmp_path / "user.yaml"
    user.write_text("curation:\n  bucket_mix: [0.5, 0.3, 0.2]\n", encoding="utf-8")
    cur = build_curation_config(load_config(user))
    assert cur.bucket_mix == (0.5, 0.3, 0.2)


def test_build_decode_params_for_each_stage():
    cfg = load_config()
    probe = build_decode_params(cfg, "probe")
    assert (probe.temperature, probe.max_tokens) == (0.7, 2048)
    rollout = build_decode_params(cfg, "rollout")
    assert (rollout.temperature, rollout.max_tokens) == (1.0, 4096)
    judge = build_decode_params(cfg, "judge_decode")
    assert (judge.temperature, judge.max_tokens) == (0.0, 16)


def test_scripted_backend_loads_fixtures_from_dir(tmp_path):
    fixture_dir = tmp_path / "transcripts"
    fixture_dir.mkdir()
    (fixture_dir / "a.json").write_text('{"deadbeef": ["hello"]}', encoding="utf-8")
    user = tmp_path / "user.yaml"
    user.write_text(
        f"gateway:\n  solver:\n    transcripts_dir: {fixture_dir}\n",
        encoding="utf-8",
    )
    backend = build_backend(load_config(user), "solver")
    assert isinstance(backend, ScriptedBackend)
    assert backend._table == {"deadbeef": ["hello"]}


def test_scripted_backend_without_dir_starts_empty():
    backend = build_backend(load_config(), "judge")
    assert isinstance(backend, ScriptedBackend)
    assert backend._table == {}


def test_remote_backend_reads_endpoint_from_config(tmp_path, monkeypatch):
    monkeypatch.delenv("GATEWAY_ENDPOINT", raising=False)
    monkeypatch.delenv("GATEWAY_TOKEN", raising=False)
    user = tmp_path / "user.yaml"
    user.write_text(
        "gateway:\n"
        "  generator:\n"
        "    kind: remote\n"
        "  remote:\n"
        "    endpoint: http://example.test/v1\n"
        "    token: abc\n",
        encoding="utf-8",
    )
    backend = build_backend(load_config(user), "generator")
    assert isinstance(backend, RemoteBackend)
    assert backend.endpoint == "http://example.test/v1"
    assert backend.token == "abc"
    assert backend.max_attempts == 4


def test_env_endpoint_and_token_win_over_config(tmp_path, monkeypatch):
    monkeypatch.setenv("GATEWAY_ENDPOINT", "http://env.test/v1")
    monkeypatch.setenv("GATEWAY_TOKEN", "tok-env")
    user = tmp_path / "user.yaml"
    user.write_text(
        "gateway:\n"
        "  solver:\n"
        "    kind: remote\n"
        "  remote:\n"
        "    endpoint: http://file.test/v1\n"
        "    token: tok-file\n",
        encoding="utf-8",
    )
    backend = build_backend(load_config(user), "solver")
    assert backend.endpoint == "http://env.test/v1"
    assert backend.token == "tok-env"


def test_env_vars_do_not_flip_a_scripted_backend(monkeypatch):
    monkeypatch.setenv("GATEWAY_ENDPOINT", "http://env.test/v1")
    backend = build_backend(load_config(), "solver")
    assert isinstance(backend, ScriptedBackend)


def test_remote_backend_without_any_endpoint_fails(tmp_path, monkeypatch):
    monkeypatch.delenv("GATEWAY_ENDPOINT", raising=False)
    user = tmp_path / "user.yaml"
    user.write_text("gateway:\n  judge:\n    kind: remote\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="endpoint"):
        build_backend(load_config(user), "judge")


def test_unknown_backend_kind_fails(tmp_path):
    user = tmp_path / "user.yaml"
    user.write_text("gateway:\n  judge:\n    kind: psychic\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="psychic"):
        build_backend(load_config(user), "judge")


def test_build_bundle_defaults_then_overrides(tmp_path):
    bundle = build_bundle(load_config())
    bundle.validate()
    custom = tmp_path / "judge.txt"
    default_judge = bundle.judge_template
    custom.write_text(default_judge + "\nbe strict\n", encoding="utf-8")
    user = tmp_path / "user.yaml"
    user.write_text(f"taskspec:\n  judge_template: {custom}\n", encoding="utf-8")
    override = build_bundle(load_config(user))
    assert override.judge_template.endswith("be strict\n")
    assert override.generator_template == bundle.generator_template
