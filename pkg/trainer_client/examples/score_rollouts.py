"""Score a handful of canned solver rollouts against a live reward service.

Run with no arguments to spawn a local `toolsmith serve --port 0` (the
toolsmith package must be installed) and tear it down afterwards, or point
--url at a service that is already running:

    python3 examples/score_rollouts.py
    python3 examples/score_rollouts.py --url http://127.0.0.1:8731
"""

import argparse
import shutil
import subprocess
import sys

from trainer_client import ClientConfig, RewardClient, reward_fn_adapter

GOLD_CALLS = [
    {"name": "weather_lookup", "arguments": {"city": "Kyoto", "units": "metric"}},
]

ROLLOUTS = [
    # exact match
    '<tool_call_answer>[{"name": "weather_lookup", "arguments": '
    '{"city": "Kyoto", "units": "metric"}}]</tool_call_answer>',
    # relaxed syntax, same content
    "<tool_call_answer>[{'name': 'weather_lookup', 'arguments': "
    "{'units': 'metric', 'city': 'Kyoto'}}]</tool_call_answer>",
    # one surplus call
    '<tool_call_answer>[{"name": "weather_lookup", "arguments": '
    '{"city": "Kyoto", "units": "metric"}}, {"name": "weather_lookup", "arguments": '
    '{"city": "Osaka", "units": "metric"}}]</tool_call_answer>',
    # not even JSON
    "<tool_call_answer>sunny, probably</tool_call_answer>",
]


def spawn_service():
    exe = shutil.which("toolsmith")
    if exe is None:
        sys.exit("toolsmith is not on PATH; pass --url instead")
    proc = subprocess.Popen([exe, "serve", "--port", "0"], stdout=subprocess.PIPE, text=True)
    listening = proc.stdout.readline().strip()  # "listening on HOST:PORT"
    ready = proc.stdout.readline().strip()
    if not listening.startswith("listening on ") or ready != "ready":
        proc.terminate()
        sys.exit(f"service did not come up: {listening!r} {ready!r}")
    return proc, "http://" + listening.split()[-1]


def main() -> int:
    ap = argparse.ArgumentParser(description="score example rollouts via the reward service")
    ap.add_argument("--url", default=None, help="base URL of a running reward service")
    args = ap.parse_args()

    proc = None
    base_url = args.url
    if base_url is None:
        proc, base_url = spawn_service()
    try:
        client = RewardClient(ClientConfig(base_url=base_url, chunk_size=2))
        print(f"health: {client.health()}")
        items = [{"completion": c, "context": {"gold_calls": GOLD_CALLS}} for c in ROLLOUTS]
        for i, result in enumerate(client.score_solver(items)):
            print(
                f"rollout {i}: fmt={result['fmt']:.2f} acc={result['acc']:.4f} "
                f"total_normalized={result['total_normalized']:.4f}"
            )
        reward_fn = reward_fn_adapter(client, "solver", log_breakdowns=False)
        rewards = reward_fn(None, ROLLOUTS, [{"gold_calls": GOLD_CALLS}] * len(ROLLOUTS))
        print(f"adapter rewards: {[round(r, 4) for r in rewards]}")
        print(f"stats: {client.stats}")
    finally:
        if proc is not None:
            proc.terminate()
            proc.wait(timeout=5)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
