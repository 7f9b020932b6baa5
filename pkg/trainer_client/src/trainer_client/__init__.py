"""Trainer-side client for the toolsmith reward service.

The service scores generator and solver completions over HTTP. This package
wraps it for RL training loops: chunked, order-preserving batch submission
with bounded concurrency and retries, plus an adapter that presents the
whole thing as a plain reward function.
"""

from .adapter import reward_fn_adapter
from .client import ClientConfig, ClientError, ClientStats, RewardClient, is_fault

__all__ = [
    "ClientConfig",
    "ClientError",
    "ClientStats",
    "RewardClient",
    "is_fault",
    "reward_fn_adapter",
]

__version__ = "0.1.0"
