"""Run configuration: JSON schema, validation, canonical hashing.

Configs are plain JSON objects. Parsing is strict: unknown keys and
missing required fields raise ConfigError with the offending field name,
and the resolved config (defaults filled in, observation times expanded)
is what gets echoed into every output file together with its hash.
"""

import hashlib
import json
from dataclasses import dataclass, field

from . import models, psi
from .errors import ConfigError

_PROPOSALS = ("gaussian", "tilted")
_RESAMPLERS = ("multinomial", "systematic", "stratified")


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def content_hash(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


@dataclass(frozen=True)
class BenchConfig:
    x_a: float
    x_b: float
    a: float
    b: float
    inner_points_grid: tuple[int, ...]
    replications: int
    modes: tuple[str, ...]
    kappa_cap: int = 64
    randomization: str = "digital-shift"


@dataclass(frozen=True)
class RunConfig:
    model_name: str
    model_params: dict
    x0: float
    observation_times: tuple[float, ...]
    noise_sd: float
    seed: int
    n_particles: int = 256
    psi_cfg: psi.PsiConfig = field(default_factory=psi.PsiConfig)
    proposal: str = "gaussian"
    resampling: str = "systematic"
    ess_threshold: float = 0.5
    euler_steps_per_unit: int = 2000
    store_fine_path: bool = False
    bench: BenchConfig | None = None
    oracle: dict | None = None

    def build_model(self) -> models.DriftModel:
        try:
            return models.builtin(self.model_name, **self.model_params)
        except ValueError as exc:
            raise ConfigError(f"model: {exc}") from None

    def resolved(self) -> dict:
        """Normalized config dict embedded in outputs and hashed."""
        out = {
            "model": {"name": self.model_name, **self.model_params},
            "x0": self.x0,
            "observation_times": list(self.observation_times),
            "noise_sd": self.noise_sd,
            "seed": self.seed,
            "particles": self.n_particles,
            "psi": {
                "mode": self.psi_cfg.mode,
                "inner_points": self.psi_cfg.inner_points,
                "kappa_cap": self.psi_cfg.rqmc_kappa_cap,
                "randomization": self.psi_cfg.randomization,
            },
            "proposal": self.proposal,
            "resampling": {"scheme": self.resampling,
                           "ess_threshold": self.ess_threshold},
            "euler_steps_per_unit": self.euler_steps_per_unit,
            "store_fine_path": self.store_fine_path,
        }
        if self.bench is not None:
            out["bench"] = {
                "x_a": self.bench.x_a, "x_b": self.bench.x_b,
                "a": self.bench.a, "b": self.bench.b,
                "inner_points_grid": list(self.bench.inner_points_grid),
                "replications": self.bench.replications,
                "modes": list(self.bench.modes),
                "kappa_cap": self.bench.kappa_cap,
                "randomization": self.bench.randomization,
            }
        if self.oracle is not None:
            out["oracle"] = self.oracle
        return out

    def config_hash(self) -> str:
        return content_hash(self.resolved())

    def dataset_hash(self) -> str:
        """Hash of the generation-relevant fields; binds datasets to configs."""
        return content_hash({
            "model": {"name": self.model_name, **self.model_params},
            "x0": self.x0,
            "observation_times": list(self.observation_times),
            "noise_sd": self.noise_sd,
            "seed": self.seed,
            "euler_steps_per_unit": self.euler_steps_per_unit,
        })


def _take(raw: dict, key: str, kind, required=False, default=None):
    if key not in raw:
        if required:
            raise ConfigError(f"{key}: required field is missing")
        return default
    val = raw.pop(key)
    if kind is float and isinstance(val, (int, float)) and not isinstance(val, bool):
        return float(val)
    if kind is int and isinstance(val, int) and not isinstance(val, bool):
        return val
    if not isinstance(val, kind):
        raise ConfigError(f"{key}: expected {kind.__name__}, got {type(val).__name__}")
    return val


def _obs_times(raw: dict) -> tuple[float, ...]:
    given = raw.pop("observation_times", None)
    if given is None:
        raise ConfigError("observation_times: required field is missing")
    if isinstance(given, list):
        times = []
        for i, t in enumerate(given):
            if not isinstance(t, (int, float)) or isinstance(t, bool):
                raise ConfigError(f"observation_times[{i}]: expected a number")
            times.append(float(t))
    elif isinstance(given, dict):
        count = given.get("count")
        spacing = given.get("spacing")
        if not isinstance(count, int) or count < 1:
            raise ConfigError("observation_times.count: expected positive integer")
        if not isinstance(spacing, (int, float)) or spacing <= 0:
            raise ConfigError("observation_times.spacing: expected positive number")
        times = [spacing * (k + 1) for k in range(count)]
    else:
        raise ConfigError("observation_times: expected a list or {count, spacing}")
    if any(t <= 0 for t in times[:1]) or any(v <= u for u, v in zip(times, times[1:])):
        raise ConfigError("observation_times: must be strictly increasing and > 0")
    return tuple(times)


def _canon_mode(mode: str) -> str:
    # bare "rqmc" selects the default point-set layout
    return psi.MODE_RQMC_TIMES_VALUES if mode == "rqmc" else mode


def _psi_config(raw: dict) -> psi.PsiConfig:
    sub = raw.pop("psi", {})
    if not isinstance(sub, dict):
        raise ConfigError("psi: expected an object")
    sub = dict(sub)
    kwargs = {
        "mode": _canon_mode(_take(sub, "mode", str, default="mc")),
        "inner_points": _take(sub, "inner_points", int, default=1),
        "rqmc_kappa_cap": _take(sub, "kappa_cap", int, default=64),
        "randomization": _take(sub, "randomization", str, default="digital-shift"),
    }
    if sub:
        raise ConfigError(f"psi: unknown fields {sorted(sub)}")
    try:
        return psi.PsiConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"psi: {exc}") from None


def _bench_config(raw: dict) -> BenchConfig | None:
    sub = raw.pop("bench", None)
    if sub is None:
        return None
    if not isinstance(sub, dict):
        raise ConfigError("bench: expected an object")
    sub = dict(sub)
    grid = _take(sub, "inner_points_grid", list, required=True)
    if not grid or any(not isinstance(m, int) or m < 1 for m in grid):
        raise ConfigError("bench.inner_points_grid: expected positive integers")
    modes = [_canon_mode(m) for m in
             _take(sub, "modes", list, default=["mc", "rqmc-times-values"])]
    known = (psi.MODE_MC, psi.MODE_RQMC_TIMES, psi.MODE_RQMC_TIMES_VALUES)
    if any(m not in known for m in modes):
        raise ConfigError(f"bench.modes: entries must be among {known}")
    cfg = BenchConfig(
        x_a=_take(sub, "x_a", float, required=True),
        x_b=_take(sub, "x_b", float, required=True),
        a=_take(sub, "a", float, required=True),
        b=_take(sub, "b", float, required=True),
        inner_points_grid=tuple(grid),
        replications=_take(sub, "replications", int, required=True),
        modes=tuple(modes),
        kappa_cap=_take(sub, "kappa_cap", int, default=64),
        randomization=_take(sub, "randomization", str, default="digital-shift"),
    )
    if sub:
        raise ConfigError(f"bench: unknown fields {sorted(sub)}")
    if cfg.b <= cfg.a:
        raise ConfigError("bench: need b > a")
    if cfg.replications < 2:
        raise ConfigError("bench.replications: need at least 2")
    return cfg


def parse_config(raw: dict) -> RunConfig:
    """Validate a JSON config object; raises ConfigError with field names."""
    if not isinstance(raw, dict):
        raise ConfigError("config: expected a JSON object")
    raw = dict(raw)

    model_spec = _take(raw, "model", dict, required=True)
    model_spec = dict(model_spec)
    name = model_spec.pop("name", None)
    if not isinstance(name, str):
        raise ConfigError("model.name: required string")

    seed = _take(raw, "seed", int, required=True)

    resampling = raw.pop("resampling", {})
    if not isinstance(resampling, dict):
        raise ConfigError("resampling: expected an object")
    resampling = dict(resampling)
    scheme = _take(resampling, "scheme", str, default="systematic")
    ess_threshold = _take(resampling, "ess_threshold", float, default=0.5)
    if resampling:
        raise ConfigError(f"resampling: unknown fields {sorted(resampling)}")
    if scheme not in _RESAMPLERS:
        raise ConfigError(f"resampling.scheme: must be one of {_RESAMPLERS}")
    if not 0.0 <= ess_threshold <= 1.0:
        raise ConfigError("resampling.ess_threshold: must be in [0, 1]")

    proposal = _take(raw, "proposal", str, default="gaussian")
    if proposal not in _PROPOSALS:
        raise ConfigError(f"proposal: must be one of {_PROPOSALS}")

    n_particles = _take(raw, "particles", int, default=256)
    if n_particles < 1:
        raise ConfigError("particles: must be >= 1")

    noise_sd = _take(raw, "noise_sd", float, required=True)
    if noise_sd < 0:
        raise ConfigError("noise_sd: must be >= 0")

    euler = _take(raw, "euler_steps_per_unit", int, default=2000)
    if euler < 100:
        raise ConfigError("euler_steps_per_unit: must be >= 100")

    cfg = RunConfig(
        model_name=name,
        model_params=model_spec,
        x0=_take(raw, "x0", float, required=True),
        observation_times=_obs_times(raw),
        noise_sd=noise_sd,
        seed=seed,
        n_particles=n_particles,
        psi_cfg=_psi_config(raw),
        proposal=proposal,
        resampling=scheme,
        ess_threshold=ess_threshold,
        euler_steps_per_unit=euler,
        store_fine_path=_take(raw, "store_fine_path", bool, default=False),
        bench=_bench_config(raw),
        oracle=_take(raw, "oracle", dict, default=None),
    )
    if raw:
        raise ConfigError(f"config: unknown fields {sorted(raw)}")

    model = cfg.build_model()  # validates name + params
    if cfg.proposal == "tilted" and model.tilted_log_normalizer is None:
        raise ConfigError(
            f"proposal: model {name!r} lacks tilted_normalizer; use \"gaussian\""
        )
    return cfg


def load_config(path: str, seed_override: int | None = None) -> RunConfig:
    try:
        with open(path) as f:
            raw = json.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if seed_override is not None:
        if not isinstance(raw, dict):
            raise ConfigError("config: expected a JSON object")
        raw = {**raw, "seed": int(seed_override)}
    return parse_config(raw)
