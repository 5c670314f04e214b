"""Time the Monte-Carlo rollout kernel under numba and under the numpy fallback.

Usage::

    python3 benchmarks/bench_kernels.py            # runs both backends in subprocesses
    python3 benchmarks/bench_kernels.py --worker   # one backend, chosen by ARNPG_DISABLE_NUMBA

Uniforms are generated once up front so the timing covers the kernel only.
Both backends must produce identical estimates; the script checks that too.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import subprocess
import sys
import time

import numpy as np


def worker(states, actions, batch, horizon, repeats):
    from arnpg import kernels
    from arnpg.mdp import random_mdp
    from arnpg.policy import uniform_policy

    mdp = random_mdp(0, states, actions, 2, 0.8)
    p_cdf = np.cumsum(mdp.transitions, axis=-1)
    p_cdf[..., -1] = 1.0
    pi_cdf = np.cumsum(uniform_policy(states, actions).probs(), axis=-1)
    pi_cdf[:, -1] = 1.0
    rho_cdf = np.cumsum(mdp.rho)
    rho_cdf[-1] = 1.0
    starts = np.arange(states * actions)
    u = np.random.default_rng(0).random((states * actions, batch, horizon, 2))
    args = (p_cdf, pi_cdf, rho_cdf, mdp.rewards, mdp.rewards, mdp.gamma,
            starts // actions, starts % actions, u, False)
    out = kernels.rollout_returns(*args)  # warm-up (jit compile)
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        kernels.rollout_returns(*args)
        times.append(time.perf_counter() - t0)
    return {"backend": kernels.BACKEND, "median_ms": 1e3 * float(np.median(times)),
            "min_ms": 1e3 * float(np.min(times)),
            "digest": hashlib.sha256(np.ascontiguousarray(out).tobytes()).hexdigest()}


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--states", type=int, default=20)
    ap.add_argument("--actions", type=int, default=10)
    ap.add_argument("--batch", type=int, default=10)
    ap.add_argument("--horizon", type=int, default=28)
    ap.add_argument("--repeats", type=int, default=20)
    ap.add_argument("--worker", action="store_true")
    a = ap.parse_args(argv)
    sizes = (a.states, a.actions, a.batch, a.horizon, a.repeats)
    if a.worker:
        print(json.dumps(worker(*sizes)))
        return 0
    rows = []
    for flag in ("0", "1"):
        env = dict(os.environ, ARNPG_DISABLE_NUMBA=flag)
        cmd = [sys.executable, __file__, "--worker", "--states", str(a.states), "--actions",
               str(a.actions), "--batch", str(a.batch), "--horizon", str(a.horizon),
               "--repeats", str(a.repeats)]
        rows.append(json.loads(subprocess.run(cmd, env=env, check=True, capture_output=True,
                                              text=True).stdout))
    print(f"rollout kernel, {a.states}x{a.actions} pairs, batch {a.batch}, horizon {a.horizon}")
    for r in rows:
        print(f"  {r['backend']:6s} median {r['median_ms']:8.2f} ms   min {r['min_ms']:8.2f} ms")
    same = rows[0]["digest"] == rows[1]["digest"]
    print(f"  speedup {rows[1]['median_ms'] / rows[0]['median_ms']:.1f}x, identical output: {same}")
    return 0 if same else 1


if __name__ == "__main__":
    sys.exit(main())
