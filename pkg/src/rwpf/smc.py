"""Random-weight particle filter.

Between consecutive observation times each particle is propagated by a
proposal kernel, its weight is multiplied by an unbiased estimate of the
bridge functional expectation (replacing the intractable transition
density) and by the Gaussian observation density. Because the weight
estimates are unbiased and positive, the filter is a standard
pseudo-marginal SMC scheme: the likelihood estimate stays unbiased and
the targeted distributions are unchanged.

Weights live in log space throughout. Each particle owns an independent
random stream derived from the master seed, and resampling uses a
dedicated stream, so results depend only on (config, master seed).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import proposal, psi
from .bridge import LazyBridge
from .errors import DegeneracyError, NumericError
from .models import DriftModel
from .rngs import NS_FILTER, particle_streams
from .stats import norm_logpdf

RESAMPLING_SCHEMES = ("multinomial", "systematic", "stratified")


@dataclass
class ParticleCloud:
    positions: np.ndarray          # (N,) float64
    log_weights: np.ndarray        # (N,) unnormalized
    rng_streams: list              # one Generator per particle slot
    resample_rng: np.random.Generator
    step_index: int = 0

    @property
    def n(self) -> int:
        return len(self.positions)


@dataclass
class FilterStepReport:
    time: float
    ess: float
    log_likelihood_increment: float
    resampled: bool
    mean_kappa: float
    posterior_mean: float
    posterior_var: float


@dataclass(frozen=True)
class FilterConfig:
    n_particles: int
    x0: float
    noise_sd: float
    psi: psi.PsiConfig
    proposal: str = "gaussian"
    resampling: str = "systematic"
    ess_threshold: float = 0.5
    master_seed: int = 0

    def __post_init__(self):
        if self.n_particles < 1:
            raise ValueError("n_particles must be >= 1")
        if self.noise_sd <= 0:
            raise ValueError("filtering needs noise_sd > 0")
        if self.resampling not in RESAMPLING_SCHEMES:
            raise ValueError(f"unknown resampling scheme {self.resampling!r}")
        if not 0.0 <= self.ess_threshold <= 1.0:
            raise ValueError("ess_threshold must be in [0, 1]")


def init_cloud(n: int, x0: float, master_seed: int) -> ParticleCloud:
    """All particles at x0 with uniform weights and split random streams."""
    if n < 1:
        raise ValueError("need at least one particle")
    streams = particle_streams(master_seed, n + 1, NS_FILTER)
    return ParticleCloud(
        positions=np.full(n, float(x0)),
        log_weights=np.zeros(n),
        rng_streams=streams[:n],
        resample_rng=streams[n],
    )


def ess(log_weights: np.ndarray) -> float:
    """(sum w)^2 / sum w^2 of the normalized weights, computed stably."""
    lw = np.asarray(log_weights, dtype=float)
    m = np.max(lw)
    if m == -np.inf:
        raise ValueError("all log-weights are -inf")
    w = np.exp(lw - m)
    s = w.sum()
    return float(s * s / np.sum(w * w))


def _normalized(log_weights: np.ndarray) -> np.ndarray:
    m = np.max(log_weights)
    w = np.exp(log_weights - m)
    return w / w.sum()


def systematic_indices(weights: np.ndarray, u: float) -> np.ndarray:
    """Offspring ancestor indices from one pivot u in [0, 1)."""
    n = len(weights)
    pivots = (u + np.arange(n)) / n
    return np.searchsorted(np.cumsum(weights), pivots, side="right").clip(0, n - 1)


def stratified_indices(weights: np.ndarray, us: np.ndarray) -> np.ndarray:
    n = len(weights)
    pivots = (np.arange(n) + us) / n
    return np.searchsorted(np.cumsum(weights), pivots, side="right").clip(0, n - 1)


def multinomial_indices(weights: np.ndarray, rng) -> np.ndarray:
    counts = rng.multinomial(len(weights), weights)
    return np.repeat(np.arange(len(weights)), counts)


def resample(cloud: ParticleCloud, scheme: str, rng) -> ParticleCloud:
    """Draw N offspring and reset weights to uniform.

    Random streams stay attached to particle slots, not ancestors, so
    duplicated offspring evolve independently afterwards.
    """
    w = _normalized(cloud.log_weights)
    if scheme == "multinomial":
        idx = multinomial_indices(w, rng)
    elif scheme == "systematic":
        idx = systematic_indices(w, float(rng.random()))
    elif scheme == "stratified":
        idx = stratified_indices(w, rng.random(len(w)))
    else:
        raise ValueError(f"unknown resampling scheme {scheme!r}")
    return ParticleCloud(
        positions=cloud.positions[idx],
        log_weights=np.zeros(cloud.n),
        rng_streams=cloud.rng_streams,
        resample_rng=cloud.resample_rng,
        step_index=cloud.step_index,
    )


def step(cloud: ParticleCloud, model: DriftModel, obs: tuple[float, float, float],
         interval: tuple[float, float], psi_cfg: psi.PsiConfig,
         proposal_mode: str = "gaussian", ess_threshold: float = 0.5,
         resample_scheme: str = "systematic") -> tuple[ParticleCloud, FilterStepReport]:
    """One propagate / weight / (maybe) resample transition to obs.time."""
    a, b = interval
    t_obs, y, sigma = obs
    if not (b == t_obs and b > a):
        raise ValueError(f"interval ({a}, {b}) inconsistent with obs time {t_obs}")
    var_obs = sigma * sigma

    n = cloud.n
    positions = cloud.positions
    new_pos = np.empty(n)
    incr = np.empty(n)
    kappas = np.empty(n)
    for i in range(n):
        rng = cloud.rng_streams[i]
        out = proposal.propose(model, float(positions[i]), a, b, rng, proposal_mode)
        est = psi.estimate(model, LazyBridge(a, float(positions[i]), b, out.x_b),
                           psi_cfg, rng)
        if est.value < 0:
            raise NumericError(
                f"negative psi estimate {est.value} for model {model.name!r}; "
                "declared phi bounds are violated"
            )
        log_psi = math.log(est.value) if est.value > 0 else -math.inf
        incr[i] = out.log_weight_factor + log_psi + norm_logpdf(y, out.x_b, var_obs)
        new_pos[i] = out.x_b
        kappas[i] = est.kappa

    old_norm = cloud.log_weights - logsumexp(cloud.log_weights)
    with np.errstate(invalid="ignore"):
        loglik_inc = float(logsumexp(old_norm + incr))
    if loglik_inc == -math.inf or math.isnan(loglik_inc):
        raise DegeneracyError(
            f"all particles have zero weight at step {cloud.step_index} (t={b})",
            step_index=cloud.step_index,
        )

    new_lw = cloud.log_weights + incr
    w = _normalized(new_lw)
    post_mean = float(np.dot(w, new_pos))
    post_var = float(np.dot(w, (new_pos - post_mean) ** 2))
    ess_val = ess(new_lw)

    new_cloud = ParticleCloud(new_pos, new_lw, cloud.rng_streams,
                              cloud.resample_rng, cloud.step_index + 1)
    resampled = ess_val < ess_threshold * n and n > 1
    if resampled:
        new_cloud = resample(new_cloud, resample_scheme, new_cloud.resample_rng)

    report = FilterStepReport(
        time=b, ess=ess_val, log_likelihood_increment=loglik_inc,
        resampled=resampled, mean_kappa=float(kappas.mean()),
        posterior_mean=post_mean, posterior_var=post_var,
    )
    return new_cloud, report


def run_filter(model: DriftModel, observations, cfg: FilterConfig
               ) -> tuple[list[FilterStepReport], float]:
    """Fold `step` over (time, value) observations; returns per-step reports
    and the total log-likelihood estimate."""
    times = [t for t, _ in observations]
    if any(t <= 0 for t in times[:1]) or any(v <= u for u, v in zip(times, times[1:])):
        raise ValueError("observation times must be strictly increasing and > 0")

    cloud = init_cloud(cfg.n_particles, cfg.x0, cfg.master_seed)
    reports: list[FilterStepReport] = []
    a = 0.0
    total = 0.0
    for t, y in observations:
        cloud, report = step(
            cloud, model, (t, y, cfg.noise_sd), (a, t), cfg.psi,
            proposal_mode=cfg.proposal, ess_threshold=cfg.ess_threshold,
            resample_scheme=cfg.resampling,
        )
        reports.append(report)
        total += report.log_likelihood_increment
        a = t
    return reports, total
