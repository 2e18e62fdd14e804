"""Compare the compiled kernels with the pure-Python fallback.

Each mode runs in its own interpreter because the switch is read at import:

    python benchmarks/bench_kernels.py [--events 2000] [--games 3]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from figgie import JIT_ENABLED
from figgie.agents import AgentSpec
from figgie.analytics import acf, bootstrap_diff_ci
from figgie.game import run_game

events, games = int(sys.argv[1]), int(sys.argv[2])
agents = [AgentSpec("f"), AgentSpec("n"), AgentSpec("n"), AgentSpec("n")]

def timed(fn, reps):
    fn()  # warm-up; compiles on first call when jitted
    t = time.perf_counter()
    for _ in range(reps):
        out = fn()
    return (time.perf_counter() - t) / reps, out

out = {"jit": JIT_ENABLED}
out["game_s"], res = timed(lambda: run_game(agents, 1, events=events), games)
out["events_per_s"] = events / out["game_s"]
out["checksum"] = res.wealth
x = np.random.default_rng(0).normal(size=(2, 200))
out["bootstrap_s"], _ = timed(lambda: bootstrap_diff_ci(x[0], x[1], n_resamples=2000), 2)
y = np.random.default_rng(1).normal(size=5000)
out["acf_s"], _ = timed(lambda: acf(y, 20), 2)
print(json.dumps(out))
"""


def run_mode(disable, events, games):
    env = dict(os.environ)
    env.pop("FIGGIE_DISABLE_JIT", None)
    if disable:
        env["FIGGIE_DISABLE_JIT"] = "1"
    proc = subprocess.run([sys.executable, "-c", WORKER, str(events), str(games)],
                          env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--events", type=int, default=2000)
    p.add_argument("--games", type=int, default=3)
    args = p.parse_args()
    jit = run_mode(False, args.events, args.games)
    py = run_mode(True, args.events, args.games)
    print(f"{'kernel':<22}{'compiled':>12}{'python':>12}{'speedup':>10}")
    for key, label in (("game_s", f"game ({args.events} ev)"), ("bootstrap_s", "bootstrap (2000)"),
                       ("acf_s", "acf (n=5000, 20 lags)")):
        print(f"{label:<22}{jit[key]:>11.4f}s{py[key]:>11.4f}s{py[key] / jit[key]:>9.0f}x")
    print(f"events/s: compiled {jit['events_per_s']:.0f}, python {py['events_per_s']:.0f}")
    print("same result in both modes:", jit["checksum"] == py["checksum"])


if __name__ == "__main__":
    main()
