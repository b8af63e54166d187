"""Time the hot kernels with numba on and off.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each backend runs in its own interpreter because the switch
(QEPF_DISABLE_NUMBA) is read at import time. Compilation is excluded:
every kernel is called once before timing.
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from qepf import backend, make_model, run_test, TestConfig
from qepf.kernels import bootstrap_sup, gamma_quantile_array, qepf_at_ranks

repeat = int(sys.argv[1])
rng = np.random.default_rng(0)
u = rng.uniform(1e-6, 1 - 1e-6, 100_000)
rows = np.sort(rng.lognormal(size=(1000, 1000)), axis=1)
ks = np.arange(500, 951, 10)
pool = rng.gamma(2.0, size=600)
idx = rng.integers(0, 600, size=(1000, 600))
ks_b = np.arange(180, 271, 3)
x, y = make_model("gamma", k=2.0).sample(300, 1), make_model("lmrqd", alpha=0.5, mu=5.0).sample(300, 2)
cfg = TestConfig(B=1000)

cases = {
    "gamma_quantile_array (1e5)": lambda: gamma_quantile_array(u, 1 - u, 2.5),
    "qepf_at_ranks (1000 x 1000, 46 ranks)": lambda: qepf_at_ranks(rows, ks),
    "bootstrap_sup (B=1000, n=300+300)": lambda: bootstrap_sup(pool, idx, 300, ks_b, ks_b, 12.0),
    "run_test (B=1000, n=300+300)": lambda: run_test(x, y, cfg),
}
out = {"backend": backend(), "timings": {}}
for name, fn in cases.items():
    fn()
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    out["timings"][name] = best
print(json.dumps(out))
"""


def run(disable, repeat):
    env = dict(os.environ, QEPF_DISABLE_NUMBA="1" if disable else "0")
    res = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    fast, slow = run(False, args.repeat), run(True, args.repeat)
    width = max(map(len, fast["timings"]))
    print(f"{'kernel':<{width}}  {fast['backend']:>10}  {slow['backend']:>10}  speedup")
    for name, t_fast in fast["timings"].items():
        t_slow = slow["timings"][name]
        print(f"{name:<{width}}  {t_fast * 1e3:8.2f}ms  {t_slow * 1e3:8.2f}ms  {t_slow / t_fast:6.1f}x")


if __name__ == "__main__":
    main()
