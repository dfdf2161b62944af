"""Scalar diffusion models dX = alpha(X) dt + dB with everything the
weight estimators need: the drift, its derivative and antiderivative,
the path functional phi = (alpha^2 + alpha')/2 with global bounds, and
optional closed-form extras (exact transition density, exact tilted
sampler, tilted normalizing constant, rejection envelope).

Models are immutable and validated at registration: the (A, alpha,
alpha') triple must pass finite-difference consistency checks and the
declared bounds must dominate phi on a dense grid, which is what rejects
drifts with unbounded phi such as alpha(x) = -theta*x.

Conventions: unit diffusion coefficient, A(0) = 0.
"""

import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from .errors import UnsupportedOperationError

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class DriftModel:
    """A drift specification plus whatever closed forms it admits.

    ``alpha``, ``alpha_prime`` and ``big_a`` accept scalars or arrays;
    ``phi_scalar`` is a pure-scalar fast path for the samplers' inner
    loops and must agree with (alpha^2 + alpha')/2 pointwise.
    """

    name: str
    alpha: Callable
    alpha_prime: Callable
    big_a: Callable
    phi_bounds: tuple[float, float]
    phi_scalar: Callable
    params: dict = field(default_factory=dict)
    # log p_t(x_b | x_a); broadcasting over x_a/x_b
    exact_log_density: Callable | None = None
    # (x_a, t, rng) -> x_b distributed prop. to N(x_b; x_a, t) exp{A(x_b)-A(x_a)}
    tilted_sampler: Callable | None = None
    # (x_a, t) -> log of the tilted kernel's normalizing constant
    tilted_log_normalizer: Callable | None = None
    # (x_a,) -> log B with B >= sup_x exp{A(x) - A(x_a)}
    rejection_log_envelope: Callable | None = None
    # the tilted kernel *is* the transition law (phi constant)
    tilted_is_exact_transition: bool = False

    @property
    def capabilities(self) -> frozenset[str]:
        caps = set()
        if self.exact_log_density is not None:
            caps.add("exact_transition_density")
        if self.tilted_sampler is not None:
            caps.add("tilted_sampler")
        if self.tilted_log_normalizer is not None:
            caps.add("tilted_normalizer")
        if self.rejection_log_envelope is not None:
            caps.add("rejection_envelope")
        if self.tilted_is_exact_transition:
            caps.add("exact_transition_sampler")
        return frozenset(caps)


@dataclass(frozen=True)
class ObservationModel:
    """Additive Gaussian observation noise at strictly increasing times."""

    noise_sd: float
    times: tuple[float, ...]

    def __post_init__(self):
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")
        ts = self.times
        if any(t <= 0 for t in ts[:1]) or any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("observation times must be strictly increasing and > 0")


def phi(model: DriftModel, u):
    """(alpha(u)^2 + alpha'(u)) / 2, scalar or array."""
    a = model.alpha(u)
    return (a * a + model.alpha_prime(u)) / 2.0


def phi_bounds(model: DriftModel) -> tuple[float, float]:
    return model.phi_bounds


def exact_transition_density(model: DriftModel, x_a, x_b, t):
    """Transition density p_t(x_b | x_a) for models that carry it."""
    if model.exact_log_density is None:
        raise UnsupportedOperationError(
            f"model {model.name!r} has no closed-form transition density"
        )
    if t <= 0:
        raise ValueError("t must be > 0")
    return np.exp(model.exact_log_density(x_a, x_b, t))


def validate_model(model: DriftModel, state_range=(-20.0, 20.0)) -> DriftModel:
    """Registration gate: derivative/antiderivative consistency and bound
    domination, checked on grids; raises ValueError on any failure."""
    h, tol = 1e-5, 1e-6
    x = np.arange(-5.0, 5.0 + 1e-12, 0.1)
    fd_alpha_prime = (model.alpha(x + h) - model.alpha(x - h)) / (2 * h)
    if not np.all(np.abs(model.alpha_prime(x) - fd_alpha_prime) <= tol):
        raise ValueError(f"model {model.name!r}: alpha_prime inconsistent with alpha")
    fd_alpha = (model.big_a(x + h) - model.big_a(x - h)) / (2 * h)
    if not np.all(np.abs(model.alpha(x) - fd_alpha) <= tol):
        raise ValueError(f"model {model.name!r}: alpha inconsistent with big_a")

    lo, hi = state_range
    grid = np.linspace(lo, hi, 100_000)
    vals = phi(model, grid)
    l_bound, u_bound = model.phi_bounds
    if l_bound > u_bound:
        raise ValueError(f"model {model.name!r}: phi_bounds out of order")
    if vals.min() < l_bound - 1e-9 or vals.max() > u_bound + 1e-9:
        raise ValueError(
            f"model {model.name!r}: phi escapes [{l_bound}, {u_bound}] "
            f"on [{lo}, {hi}] (observed range [{vals.min()}, {vals.max()}])"
        )
    scal = np.array([model.phi_scalar(float(u)) for u in x])
    if not np.allclose(scal, phi(model, x), rtol=0, atol=1e-12):
        raise ValueError(f"model {model.name!r}: phi_scalar disagrees with phi")
    return model


def _gauss_log_density(x_a, x_b, t):
    d = np.asarray(x_b) - np.asarray(x_a)
    return -0.5 * (_LOG_2PI + np.log(t) + d * d / t)


def _log_cosh(x):
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax)) - math.log(2.0)


def _make_zero() -> DriftModel:
    zero_of = lambda u: np.zeros_like(np.asarray(u, dtype=float)) + 0.0

    def sampler(x_a, t, rng):
        return x_a + math.sqrt(t) * rng.normal()

    return DriftModel(
        name="zero",
        alpha=zero_of,
        alpha_prime=zero_of,
        big_a=zero_of,
        phi_bounds=(0.0, 0.0),
        phi_scalar=lambda u: 0.0,
        exact_log_density=_gauss_log_density,
        tilted_sampler=sampler,
        tilted_log_normalizer=lambda x_a, t: 0.0,
        rejection_log_envelope=lambda x_a: 0.0,
        tilted_is_exact_transition=True,
    )


def _make_tanh() -> DriftModel:
    def log_density(x_a, x_b, t):
        return (_gauss_log_density(x_a, x_b, t)
                + _log_cosh(x_b) - _log_cosh(x_a) - t / 2.0)

    def sampler(x_a, t, rng):
        # p-tilde is the two-component Gaussian mixture
        #   e^{x_a}/(2 cosh x_a) N(x_a + t, t) + e^{-x_a}/(2 cosh x_a) N(x_a - t, t)
        w_plus = 1.0 / (1.0 + math.exp(-2.0 * x_a))
        mean = x_a + t if rng.random() < w_plus else x_a - t
        return mean + math.sqrt(t) * rng.normal()

    return DriftModel(
        name="tanh",
        alpha=np.tanh,
        alpha_prime=lambda u: 1.0 / np.cosh(u) ** 2,
        big_a=_log_cosh,
        phi_bounds=(0.5, 0.5),
        phi_scalar=lambda u: 0.5,
        exact_log_density=log_density,
        tilted_sampler=sampler,
        tilted_log_normalizer=lambda x_a, t: t / 2.0,
        tilted_is_exact_transition=True,
    )


def _scaled_sine_bounds(theta: float) -> tuple[float, float]:
    # phi as a function of c = cos(x): (theta^2 (1 - c^2) + theta c) / 2 on [-1, 1].
    # Downward parabola with vertex c* = 1/(2 theta); interior max when |c*| <= 1.
    at = abs(theta)
    upper = theta * theta / 2.0 + 0.125 if at >= 0.5 else at / 2.0
    return (-at / 2.0, upper)


def _make_scaled_sine(theta: float) -> DriftModel:
    th = float(theta)

    def a_prime(u):
        return th * np.cos(u)

    def big_a(u):
        return th * (1.0 - np.cos(u))

    def phi_scalar(u):
        s = math.sin(u)
        return (th * th * s * s + th * math.cos(u)) / 2.0

    name = "sine" if th == 1.0 else "scaled-sine"
    return DriftModel(
        name=name,
        alpha=lambda u: th * np.sin(u),
        alpha_prime=a_prime,
        big_a=big_a,
        phi_bounds=_scaled_sine_bounds(th),
        phi_scalar=phi_scalar,
        params={} if th == 1.0 else {"theta": th},
        rejection_log_envelope=lambda x_a: 2.0 * abs(th),
    )


_BUILTINS: dict[str, Callable[..., DriftModel]] = {
    "zero": _make_zero,
    "tanh": _make_tanh,
    "sine": lambda: _make_scaled_sine(1.0),
    "scaled-sine": _make_scaled_sine,
}


_CACHE: dict[tuple, DriftModel] = {}


def builtin(name: str, **params) -> DriftModel:
    """Construct and validate a built-in model by name.

    ``scaled-sine`` takes ``theta``; the other names take no parameters.
    Models are immutable, so repeated requests share one instance.
    """
    key = (name, tuple(sorted(params.items())))
    try:
        return _CACHE[key]
    except (KeyError, TypeError):
        pass
    factory = _BUILTINS.get(name)
    if factory is None:
        raise ValueError(f"unknown model {name!r}; known: {sorted(_BUILTINS)}")
    try:
        model = factory(**params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for model {name!r}: {exc}") from None
    validate_model(model)
    _CACHE[key] = model
    return model
