"""Regenerate the pinned test fixtures.

Every pinned value is computed twice by independent runs (different
seeds, or bit-identical determinism plus a resolution-doubling check)
and stored together with that evidence; the tests re-verify the stored
agreement before trusting a fixture.

Usage: python3 scripts/pin_fixtures.py
"""

import json
import math
import pathlib

from rwpf import models, oracles
from rwpf.config import parse_config
from rwpf.rngs import stream
from rwpf.simulate import simulate

OUT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def pin_psi(name: str, x_a: float, x_b: float, a: float, b: float) -> None:
    sine = models.builtin("sine")
    runs = []
    for seed in (101, 202):
        mean, se = oracles.psi_bruteforce(sine, x_a, x_b, a, b, 2000, 100_000,
                                          stream(seed, 0))
        runs.append({"seed": seed, "n_steps": 2000, "n_paths": 100_000,
                     "value": mean, "se": se})
    fine_mean, fine_se = oracles.psi_bruteforce(sine, x_a, x_b, a, b, 4000,
                                                100_000, stream(303, 0))
    agree = abs(runs[0]["value"] - runs[1]["value"])
    comb = math.hypot(runs[0]["se"], runs[1]["se"])
    bias = abs(runs[0]["value"] - fine_mean)
    bias_comb = math.hypot(runs[0]["se"], fine_se)
    assert agree <= 3 * comb, f"{name}: pin runs disagree ({agree} > 3*{comb})"
    assert bias <= 3 * bias_comb, f"{name}: discretization bias visible"
    fixture = {
        "model": "sine", "x_a": x_a, "x_b": x_b, "a": a, "b": b,
        "value": runs[0]["value"], "se": runs[0]["se"],
        "runs": runs,
        "step_doubling_check": {"seed": 303, "n_steps": 4000,
                                "value": fine_mean, "se": fine_se},
    }
    path = OUT / f"{name}.json"
    path.write_text(json.dumps(fixture, indent=2, sort_keys=True) + "\n")
    print(path, "->", runs[0]["value"], "+-", runs[0]["se"])


def pin_grid_tanh() -> None:
    cfg = parse_config({
        "model": {"name": "tanh"},
        "x0": 0.0,
        "observation_times": [1.0, 2.0, 3.0, 4.0, 5.0],
        "noise_sd": 0.5,
        "seed": 424242,
    })
    ds = simulate(cfg)
    tanh = models.builtin("tanh")
    obs = list(zip(ds.times, ds.observations))
    res1 = oracles.grid_filter(tanh, obs, oracles.GridSpec(-10, 10, 4096),
                               ds.x0, ds.noise_sd)
    res2 = oracles.grid_filter(tanh, obs, oracles.GridSpec(-10, 10, 4096),
                               ds.x0, ds.noise_sd)
    assert res1.log_likelihood == res2.log_likelihood, "grid filter not deterministic"
    fine = oracles.grid_filter(tanh, obs, oracles.GridSpec(-10, 10, 8192),
                               ds.x0, ds.noise_sd)
    quad_err = abs(res1.log_likelihood - fine.log_likelihood)
    assert quad_err < 1e-6, f"quadrature not converged: {quad_err}"
    fixture = {
        "dataset_config": {
            "model": {"name": "tanh"}, "x0": 0.0,
            "observation_times": [1.0, 2.0, 3.0, 4.0, 5.0],
            "noise_sd": 0.5, "seed": 424242,
        },
        "observations": list(ds.observations),
        "latent": list(ds.latent),
        "grid": {"lo": -10.0, "hi": 10.0, "n_cells": 4096},
        "log_likelihood": res1.log_likelihood,
        "posterior_means": res1.posterior_means.tolist(),
        "posterior_vars": res1.posterior_vars.tolist(),
        "node_doubling_check": {"n_cells": 8192,
                                "log_likelihood": fine.log_likelihood},
    }
    path = OUT / "grid_tanh_filter.json"
    path.write_text(json.dumps(fixture, indent=2, sort_keys=True) + "\n")
    print(path, "->", res1.log_likelihood)


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    pin_psi("psi_sine_0_0_1", 0.0, 0.0, 0.0, 1.0)
    pin_psi("psi_sine_0_pi_0_1", 0.0, math.pi, 0.0, 1.0)
    pin_grid_tanh()
