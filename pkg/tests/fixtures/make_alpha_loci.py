"""Regenerate alpha_loci.json: optimal E[P] versus alpha for k=1 and k=10.

Run from the repository root: python3 tests/fixtures/make_alpha_loci.py
"""

import json
import pathlib

import numpy as np

from tandem_aoi.optimizer import DEFAULT_COUPLING, DEFAULT_LAMBDA, Weights, sweep_alpha

ALPHAS = np.geomspace(1e-3, 10.0, 25).tolist()


def build() -> dict:
    loci = {}
    for k in (1.0, 10.0):
        rows = sweep_alpha(DEFAULT_COUPLING, ALPHAS, k, DEFAULT_LAMBDA, Weights(1.0, 0.0))
        loci[repr(k)] = [{"alpha": a, "best_mean_p": m, "best_value": v} for a, m, v in rows]
    order = []
    for lo, hi in zip(loci["1.0"], loci["10.0"]):
        d = hi["best_mean_p"] - lo["best_mean_p"]
        order.append(0 if abs(d) <= 1e-6 else (1 if d > 0 else -1))
    return {"lambda": DEFAULT_LAMBDA, "b0": DEFAULT_COUPLING.b0, "p_min": DEFAULT_COUPLING.p_min,
            "p_max": DEFAULT_COUPLING.p_max, "alphas": ALPHAS, "loci": loci, "sign_k10_minus_k1": order}


if __name__ == "__main__":
    out = pathlib.Path(__file__).with_name("alpha_loci.json")
    out.write_text(json.dumps(build(), indent=1) + "\n")
    print(f"wrote {out}")
