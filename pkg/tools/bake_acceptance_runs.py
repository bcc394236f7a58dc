"""Pre-bake the nine desk acceptance runs with progress output."""
import sys
import time
sys.path.insert(0, "tests")
from test_acceptance import ensure_run, SEEDS

t0 = time.time()
for seed in SEEDS:
    for regime in ("rl", "hybrid", "baseline"):
        t1 = time.time()
        run_dir = ensure_run(regime, seed)
        import json
        summary = json.loads((run_dir / "summary.json").read_text())
        print(f"[{time.time()-t0:7.0f}s] {regime} seed{seed}: "
              f"final win_rate={summary['final']['win_rate']:.3f} "
              f"({time.time()-t1:.0f}s)", flush=True)
print(f"total {time.time()-t0:.0f}s")
