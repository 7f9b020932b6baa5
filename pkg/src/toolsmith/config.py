"""Layered configuration: packaged defaults, optional user YAML, environment.

User files may only override keys that exist in the packaged defaults; a typo
fails loudly at load time instead of silently falling back. The one exception
is ``taskspec.domain_weights``, whose keys are data rather than schema, so an
override replaces the whole map.
"""

from __future__ import annotations

import os
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from .curation import CurationConfig
from .gateway import DecodeParams, RemoteBackend, ScriptedBackend
from .genrewards import DifficultyBand, ValidityWeights
from .solrewards import AccuracyWeights, SolverFormatWeights
from .specs import PromptBundle, SpecDistribution

__all__ = [
    "ConfigError",
    "build_accuracy_weights",
    "build_backend",
    "build_band",
    "build_bundle",
    "build_curation_config",
    "build_decode_params",
    "build_distribution",
    "build_solver_format_weights",
    "build_validity_weights",
    "default_config",
    "load_config",
]


class ConfigError(ValueError):
    """A config file used keys the schema does not have, or left gaps."""


_OPEN_PATHS = frozenset({"taskspec.domain_weights"})


def default_config() -> dict[str, Any]:
    text = resources.files("toolsmith").joinpath("configs/default.yaml").read_text("utf-8")
    return yaml.safe_load(text)


def _merge(base: dict[str, Any], override: dict[str, Any], trail: str = "") -> dict[str, Any]:
    merged = dict(base)
    for key, value in override.items():
        path = f"{trail}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key: {path}")
        if isinstance(base[key], dict) and path not in _OPEN_PATHS:
            if not isinstance(value, dict):
                raise ConfigError(f"{path} must be a mapping")
            merged[key] = _merge(base[key], value, f"{path}.")
        else:
            merged[key] = value
    return merged


def load_config(path: str | Path | None = None) -> dict[str, Any]:
    """Packaged defaults, with an optional user file merged leaf by leaf."""
    cfg = default_config()
    if path is None:
        return cfg
    user = yaml.safe_load(Path(path).read_text("utf-8"))
    if user is None:
        return cfg
    if not isinstance(user, dict):
        raise ConfigError(f"{path} must hold a YAML mapping at the top level")
    return _merge(cfg, user)


# --- typed builders -----------------------------------------------------------


def build_distribution(cfg: dict[str, Any]) -> SpecDistribution:
    section = cfg["taskspec"]
    dist = SpecDistribution(
        domain_weights=dict(section["domain_weights"]),
        p_multi_turn=section["p_multi_turn"],
        p_two_calls=section["p_two_calls"],
        menu_bucket_split=section["menu_bucket_split"],
    )
    dist.validate()
    return dist


def build_validity_weights(cfg: dict[str, Any]) -> ValidityWeights:
    gen = cfg["rewards"]["generator"]
    return ValidityWeights(
        lambda_menu=gen["lambda_menu"],
        lambda_gold=gen["lambda_gold"],
        lambda_value=gen["lambda_value"],
    )


def build_band(cfg: dict[str, Any]) -> DifficultyBand:
    gen = cfg["rewards"]["generator"]
    band = DifficultyBand(
        p_low=gen["p_low"],
        p_high=gen["p_high"],
        sigma=gen["sigma"],
        k_samples=gen["k_samples"],
    )
    band.validate()
    return band


def build_solver_format_weights(cfg: dict[str, Any]) -> SolverFormatWeights:
    sol = cfg["rewards"]["solver"]
    return SolverFormatWeights(
        lambda_tag=sol["lambda_tag"],
        lambda_parse=sol["lambda_parse"],
        lambda_norm=sol["lambda_norm"],
    )


def build_accuracy_weights(cfg: dict[str, Any]) -> AccuracyWeights:
    sol = cfg["rewards"]["solver"]
    return AccuracyWeights(
        lambda_name=sol["lambda_name"],
        lambda_key=sol["lambda_key"],
        lambda_val=sol["lambda_val"],
        alpha=sol["alpha"],
    )


def build_curation_config(cfg: dict[str, Any]) -> CurationConfig:
    cur = cfg["curation"]
    mix = cur["bucket_mix"]
    if mix == "thirds":
        bucket_mix = (1 / 3, 1 / 3, 1 / 3)
    elif isinstance(mix, (list, tuple)) and len(mix) == 3:
        bucket_mix = tuple(float(m) for m in mix)
    else:
        raise ConfigError("curation.bucket_mix must be 'thirds' or three proportions")
    config = CurationConfig(
        pool_size=cur["pool_size"],
        output_size=cur["output_size"],
        agreement_threshold=cur["agreement_threshold"],
        bucket_low=cur["bucket_low"],
        bucket_high=cur["bucket_high"],
        domain_cap_fraction=cur["domain_cap_fraction"],
        bucket_mix=bucket_mix,
        dominant_fraction=cur["dominant_fraction"],
        segments=cur["segments"],
        share_probe=bool(cur["share_probe"]),
    )
    config.validate()
    return config


def build_decode_params(cfg: dict[str, Any], stage: str) -> DecodeParams:
    if stage not in ("probe", "rollout", "judge_decode"):
        raise ConfigError(f"unknown decode stage: {stage}")
    section = cfg["gateway"][stage]
    return DecodeParams(temperature=section["temperature"], max_tokens=section["max_tokens"])


def build_backend(cfg: dict[str, Any], role: str):
    """Backend for one of the generator/solver/judge roles.

    GATEWAY_ENDPOINT and GATEWAY_TOKEN override the file values, but only
    when the role is actually remote; a scripted role ignores them.
    """
    if role not in ("generator", "solver", "judge"):
        raise ConfigError(f"unknown backend role: {role}")
    gateway = cfg["gateway"]
    section = gateway[role]
    kind = section["kind"]
    if kind == "scripted":
        transcripts_dir = section["transcripts_dir"]
        if transcripts_dir:
            return ScriptedBackend.from_dir(transcripts_dir)
        return ScriptedBackend()
    if kind == "remote":
        remote = gateway["remote"]
        endpoint = os.environ.get("GATEWAY_ENDPOINT") or remote["endpoint"]
        if not endpoint:
            raise ConfigError(
                "remote backend needs an endpoint: set gateway.remote.endpoint "
                "or the GATEWAY_ENDPOINT variable"
            )
        token = os.environ.get("GATEWAY_TOKEN") or remote["token"]
        return RemoteBackend(
            endpoint=endpoint,
            token=token,
            model=remote["model"],
            max_attempts=remote["max_attempts"],
            backoff_base=remote["backoff_base"],
            backoff_cap=remote["backoff_cap"],
            max_in_flight=gateway["max_in_flight"],
        )
    raise ConfigError(f"unknown backend kind {kind!r} for gateway.{role}")


def build_bundle(cfg: dict[str, Any]) -> PromptBundle:
    section = cfg["taskspec"]
    bundle = PromptBundle.default()
    texts = {}
    for slot in ("generator_template", "solver_template", "judge_template"):
        override = section[slot]
        if override:
            texts[slot] = Path(override).read_text("utf-8")
        else:
            texts[slot] = getattr(bundle, slot)
    bundle = PromptBundle(**texts)
    bundle.validate()
    return bundle
