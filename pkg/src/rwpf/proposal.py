"""Particle propagation between observation times.

The transition density factorizes into a Gaussian kernel, the drift tilt
exp{A(x_b) - A(x_a)}, and the bridge functional expectation. Two
proposal modes cover the two ways of placing the tilt:

* ``gaussian``: sample x_b ~ N(x_a, b - a) and put the tilt in the
  weight. Always available.
* ``tilted``: sample x_b from the tilted kernel itself (exactly, or by
  rejection under a model-declared envelope); the weight then needs the
  kernel's normalizing constant in closed form, so this mode requires
  the ``tilted_normalizer`` capability.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericError, UnsupportedOperationError
from .models import DriftModel

MODE_GAUSSIAN = "gaussian"
MODE_TILTED_EXACT = "tilted-exact"
MODE_TILTED_REJECTION = "tilted-rejection"

MAX_REJECTION_TRIALS = 10**6


@dataclass
class ProposalOutcome:
    x_b: float
    log_weight_factor: float  # log of the weight term multiplying the psi estimate
    n_rejections: int
    mode: str


def propose_gaussian(model: DriftModel, x_a: float, a: float, b: float,
                     rng) -> ProposalOutcome:
    """Gaussian random-walk proposal with the tilt absorbed into the weight."""
    t = b - a
    if t <= 0:
        raise ValueError(f"need b > a, got ({a}, {b})")
    x_b = x_a + math.sqrt(t) * rng.normal()
    lwf = float(model.big_a(x_b) - model.big_a(x_a))
    return ProposalOutcome(x_b, lwf, 0, MODE_GAUSSIAN)


def sample_tilted(model: DriftModel, x_a: float, a: float, b: float,
                  rng) -> tuple[float, int, str]:
    """Draw x_b proportional to N(x_b; x_a, b-a) exp{A(x_b) - A(x_a)}.

    Uses the model's exact sampler when present, otherwise rejection
    from N(x_a, b-a) under the declared envelope. Returns
    (x_b, n_rejections, mode).
    """
    t = b - a
    if t <= 0:
        raise ValueError(f"need b > a, got ({a}, {b})")
    if model.tilted_sampler is not None:
        return model.tilted_sampler(x_a, t, rng), 0, MODE_TILTED_EXACT
    if model.rejection_log_envelope is None:
        raise UnsupportedOperationError(
            f"model {model.name!r} has neither a tilted sampler nor a rejection envelope"
        )
    log_env = model.rejection_log_envelope(x_a)
    a_at_xa = float(model.big_a(x_a))
    sqrt_t = math.sqrt(t)
    for trial in range(MAX_REJECTION_TRIALS):
        z = x_a + sqrt_t * rng.normal()
        log_acc = float(model.big_a(z)) - a_at_xa - log_env
        if rng.random() < math.exp(log_acc):
            return z, trial, MODE_TILTED_REJECTION
    raise NumericError(
        f"tilted rejection sampler exceeded {MAX_REJECTION_TRIALS} trials "
        f"(model {model.name!r}, x_a={x_a}, t={t}); envelope looks pathological"
    )


def propose_tilted(model: DriftModel, x_a: float, a: float, b: float,
                   rng) -> ProposalOutcome:
    """Tilted-kernel proposal; weight factor is the kernel's normalizer."""
    if model.tilted_log_normalizer is None:
        raise UnsupportedOperationError(
            f"model {model.name!r} lacks the tilted_normalizer capability; "
            "its tilted kernel cannot be used for weighting (use gaussian mode)"
        )
    x_b, n_rej, mode = sample_tilted(model, x_a, a, b, rng)
    return ProposalOutcome(x_b, float(model.tilted_log_normalizer(x_a, b - a)),
                           n_rej, mode)


def propose(model: DriftModel, x_a: float, a: float, b: float, rng,
            mode: str) -> ProposalOutcome:
    if mode == "gaussian":
        return propose_gaussian(model, x_a, a, b, rng)
    if mode == "tilted":
        return propose_tilted(model, x_a, a, b, rng)
    raise ValueError(f"unknown proposal mode {mode!r}")


def acceptance_rate_probe(model: DriftModel, x_a: float, t: float, n: int,
                          rng) -> float:
    """Empirical acceptance fraction of the rejection envelope over n trials."""
    if n < 1:
        raise ValueError("acceptance_rate_probe needs n >= 1 trials")
    if model.rejection_log_envelope is None:
        raise UnsupportedOperationError(
            f"model {model.name!r} declares no rejection envelope"
        )
    log_env = model.rejection_log_envelope(x_a)
    z = x_a + math.sqrt(t) * rng.standard_normal(n)
    log_acc = np.asarray(model.big_a(z)) - float(model.big_a(x_a)) - log_env
    if np.any(log_acc > 1e-12):
        raise NumericError(f"envelope of model {model.name!r} is not dominating")
    return float(np.mean(rng.random(n) < np.exp(log_acc)))
