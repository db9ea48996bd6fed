#!/usr/bin/env python3
"""Regenerate the frozen Monte-Carlo oracle values under tests/data/.

Runs the 10^7-sample envelope oracle on the 200 seeded random line systems
used by the acceptance suite. Takes a few minutes; the committed JSON is
the output of exactly this script.
"""

import json
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from oracles import mc_envelope_expectation, random_line_system  # noqa: E402

N_SYSTEMS = 200
N_SAMPLES = 10_000_000


def main():
    out_path = Path(__file__).resolve().parent.parent / "tests" / "data" / "envelope_mc_oracle.json"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    entries = []
    t0 = time.time()
    for seed in range(N_SYSTEMS):
        mu, sigma = random_line_system(seed)
        value = mc_envelope_expectation(mu, sigma, n_samples=N_SAMPLES, seed=seed + 10_000)
        entries.append({"seed": seed, "n_lines": int(mu.size), "mc_value": value})
        if (seed + 1) % 20 == 0:
            print(f"{seed + 1}/{N_SYSTEMS} ({time.time() - t0:.0f}s)", flush=True)
    payload = {
        "description": "10^7-sample Monte-Carlo estimates of "
                       "E_Z[max(mu_i + sigma_i Z)] - max mu for the seeded "
                       "random line systems in tests/oracles.py",
        "n_samples": N_SAMPLES,
        "systems": entries,
    }
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")
    print(f"wrote {out_path}")


if __name__ == "__main__":
    main()
