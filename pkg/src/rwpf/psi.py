"""Unbiased estimators of the bridge weight functional.

The target is the expectation, over a Brownian bridge W pinned at the
proposal's endpoints, of exp{-integral of phi(W_t) dt}. With phi bounded
in [L, U] it admits the unbiased product representation: draw
kappa ~ Poisson((U-L)(b-a)) and kappa uniform times on [a, b], then

    e^{-L(b-a)} * prod_i (U - phi(W_{xi_i})) / (U - L)

has the right mean. Three modes are provided:

* ``mc``: kappa drawn once, M independent inner replicates of the
  product (fresh uniform times each, one shared lazy bridge), averaged.
* ``rqmc-times``: kappa drawn pseudo-randomly, then a randomized
  low-discrepancy point set of dimension kappa supplies the M time
  vectors; bridge values stay pseudo-random and are memoized across
  points on the shared skeleton.
* ``rqmc-times-values``: dimension 2*kappa; each point carries both its
  times and the uniforms that drive the bridge values through the
  inverse CDF. The skeleton is rolled back between points, so points are
  conditionally independent given the endpoints and each randomized
  point being uniform makes the average unbiased.

kappa is always pseudo-random, never taken from the point set. Above the
configured kappa cap the point-set modes fall back to plain MC (tagged
``mc-fallback``), reflecting that the point-set route only pays off when
kappa is small.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import lowdisc
from .bridge import LazyBridge
from .errors import NumericError, UnsupportedDimensionError
from .models import DriftModel
from .rngs import fresh_seed

MODE_MC = "mc"
MODE_RQMC_TIMES = "rqmc-times"
MODE_RQMC_TIMES_VALUES = "rqmc-times-values"
MODE_MC_FALLBACK = "mc-fallback"

_MODES = (MODE_MC, MODE_RQMC_TIMES, MODE_RQMC_TIMES_VALUES)
_TINY = 5e-324


@dataclass(frozen=True)
class PsiConfig:
    mode: str = MODE_MC
    inner_points: int = 1          # M
    rqmc_kappa_cap: int = 64
    randomization: str = lowdisc.SCHEME_DIGITAL_SHIFT

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"unknown psi mode {self.mode!r}; known: {_MODES}")
        if self.inner_points < 1:
            raise ValueError("inner_points must be >= 1")
        if self.rqmc_kappa_cap < 1:
            raise ValueError("rqmc_kappa_cap must be >= 1")
        if self.mode != MODE_MC and self.rqmc_kappa_cap > lowdisc.MAX_DIMENSION:
            raise ValueError(
                f"rqmc_kappa_cap > {lowdisc.MAX_DIMENSION} unsupported in mode {self.mode}"
            )
        if self.mode != MODE_MC and self.randomization not in (
            lowdisc.SCHEME_DIGITAL_SHIFT, lowdisc.SCHEME_OWEN
        ):
            raise ValueError(f"invalid randomization {self.randomization!r}")


@dataclass
class PsiEstimate:
    value: float
    kappa: int
    mode: str
    n_bridge_queries: int
    n_time_collisions: int = 0


@dataclass
class PsiSummary:
    n: int
    mean: float
    variance: float
    se: float
    kappa_hist: dict[int, int]
    mean_bridge_queries: float
    degenerate: bool


def sample_kappa(rate_interval: tuple[float, float], a: float, b: float, rng) -> int:
    """Poisson((U - L) * (b - a)) draw; zero surely when U == L."""
    lo, hi = rate_interval
    if hi < lo:
        raise ValueError(f"need U >= L, got ({lo}, {hi})")
    if b <= a:
        raise ValueError(f"need b > a, got ({a}, {b})")
    rate = (hi - lo) * (b - a)
    if rate == 0.0:
        return 0
    return int(rng.poisson(rate))


def _check_value(value: float) -> float:
    if not math.isfinite(value):
        raise NumericError(f"psi estimate is not finite: {value!r}")
    return value


def _inner_mc(model: DriftModel, bridge: LazyBridge, m_points: int,
              kappa: int, rng) -> float:
    """Mean over m_points replicates of the kappa-term product, fresh
    uniform times per replicate, values from the shared bridge."""
    lo, hi = model.phi_bounds
    inv = 1.0 / (hi - lo)
    phi_s = model.phi_scalar
    value_at = bridge.value_at
    a, b = bridge.a, bridge.b
    acc = 0.0
    for _ in range(m_points):
        times = rng.uniform(a, b, kappa)
        prod = 1.0
        for t in times:
            prod *= (hi - phi_s(value_at(float(t), rng))) * inv
        acc += prod
    return acc / m_points


def estimate_mc(model: DriftModel, bridge: LazyBridge, cfg: PsiConfig,
                rng) -> PsiEstimate:
    """Plain Monte Carlo estimate; cfg.inner_points = 1 is the basic
    single-product estimator."""
    if cfg.mode != MODE_MC:
        raise ValueError(f"estimate_mc requires mode 'mc', got {cfg.mode!r}")
    return _mc_with_kappa(model, bridge, cfg, rng, None, MODE_MC)


def _mc_with_kappa(model, bridge, cfg, rng, kappa, mode_tag) -> PsiEstimate:
    lo, _hi = model.phi_bounds
    span = bridge.b - bridge.a
    if kappa is None:
        kappa = sample_kappa(model.phi_bounds, bridge.a, bridge.b, rng)
    base = math.exp(-lo * span)
    if kappa == 0:
        return PsiEstimate(base, 0, mode_tag, 0)
    before = bridge.total_inserted
    mean = _inner_mc(model, bridge, cfg.inner_points, kappa, rng)
    return PsiEstimate(_check_value(base * mean), kappa, mode_tag,
                       bridge.total_inserted - before)


def estimate_rqmc(model: DriftModel, bridge: LazyBridge, cfg: PsiConfig,
                  rng) -> PsiEstimate:
    """Point-set estimate conditional on a pseudo-random kappa."""
    if cfg.mode not in (MODE_RQMC_TIMES, MODE_RQMC_TIMES_VALUES):
        raise ValueError(f"estimate_rqmc requires an rqmc mode, got {cfg.mode!r}")
    return _rqmc_with_kappa(model, bridge, cfg, rng, None)


def _rqmc_with_kappa(model, bridge, cfg, rng, kappa) -> PsiEstimate:
    lo, hi = model.phi_bounds
    a, b = bridge.a, bridge.b
    span = b - a
    if kappa is None:
        kappa = sample_kappa(model.phi_bounds, a, b, rng)
    if kappa == 0:
        return PsiEstimate(math.exp(-lo * span), 0, cfg.mode, 0)
    if kappa > cfg.rqmc_kappa_cap:
        return _mc_with_kappa(model, bridge, cfg, rng, kappa, MODE_MC_FALLBACK)

    dim = kappa if cfg.mode == MODE_RQMC_TIMES else 2 * kappa
    if dim > lowdisc.MAX_DIMENSION:
        raise UnsupportedDimensionError(
            f"mode {cfg.mode} needs dimension {dim} for kappa={kappa}, "
            f"above the supported {lowdisc.MAX_DIMENSION}; lower rqmc_kappa_cap"
        )
    points = lowdisc.randomize(
        lowdisc.generate_base(dim, cfg.inner_points),
        cfg.randomization, fresh_seed(rng),
    ).points

    inv = 1.0 / (hi - lo)
    phi_s = model.phi_scalar
    base = math.exp(-lo * span)
    before = bridge.total_inserted
    collisions = 0
    acc = 0.0
    if cfg.mode == MODE_RQMC_TIMES:
        value_at = bridge.value_at
        for m in range(cfg.inner_points):
            row = points[m]
            prod = 1.0
            for i in range(kappa):
                w = value_at(a + span * float(row[i]), rng)
                prod *= (hi - phi_s(w)) * inv
            acc += prod
    else:
        snap = bridge.snapshot()
        for m in range(cfg.inner_points):
            row = points[m]
            pairs = sorted(
                (float(row[i]), float(row[kappa + i])) for i in range(kappa)
            )
            prod = 1.0
            for u_time, u_val in pairs:
                t = a + span * u_time
                while bridge.contains(t):
                    # fresh-time contract: nudge the uniform up by one ulp
                    u_time = np.nextafter(u_time, 2.0)
                    t = a + span * u_time
                    collisions += 1
                if t > b:
                    raise NumericError("time collision walked past the interval end")
                w = bridge.value_at_with_uniform(t, u_val if u_val > 0.0 else _TINY)
                prod *= (hi - phi_s(w)) * inv
            acc += prod
            bridge.restore(snap)
    value = base * (acc / cfg.inner_points)
    return PsiEstimate(_check_value(value), kappa, cfg.mode,
                       bridge.total_inserted - before, collisions)


def estimate(model: DriftModel, bridge: LazyBridge, cfg: PsiConfig,
             rng) -> PsiEstimate:
    """Dispatch on cfg.mode."""
    if cfg.mode == MODE_MC:
        return estimate_mc(model, bridge, cfg, rng)
    return estimate_rqmc(model, bridge, cfg, rng)


def estimate_with_kappa(model: DriftModel, bridge: LazyBridge, cfg: PsiConfig,
                        rng, kappa: int) -> PsiEstimate:
    """Estimate conditional on an externally drawn kappa.

    This is what paired benchmarking uses to offer the same kappa to
    every mode; kappa must come from sample_kappa for the estimates to
    stay unbiased.
    """
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    if cfg.mode == MODE_MC:
        return _mc_with_kappa(model, bridge, cfg, rng, kappa, MODE_MC)
    return _rqmc_with_kappa(model, bridge, cfg, rng, kappa)


def psi_diagnostics(estimates) -> PsiSummary:
    """Summary statistics over a collection of estimates."""
    ests = list(estimates)
    if not ests:
        raise ValueError("psi_diagnostics needs at least one estimate")
    values = np.array([e.value for e in ests])
    n = len(values)
    if np.all(values == values[0]):
        # a deterministic estimator must report exactly zero spread
        mean, variance = float(values[0]), 0.0
    else:
        mean = float(values.mean())
        variance = float(values.var(ddof=1)) if n > 1 else 0.0
    hist: dict[int, int] = {}
    for e in ests:
        hist[e.kappa] = hist.get(e.kappa, 0) + 1
    return PsiSummary(
        n=n,
        mean=mean,
        variance=variance,
        se=math.sqrt(variance / n) if n > 1 else 0.0,
        kappa_hist=dict(sorted(hist.items())),
        mean_bridge_queries=float(np.mean([e.n_bridge_queries for e in ests])),
        degenerate=(n == 1 or variance == 0.0),
    )
