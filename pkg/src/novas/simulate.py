"""Synthetic return generators: eight conditional-heteroskedasticity data
models (two time-varying GARCH, two standard GARCH, a Student-t GARCH, an
EGARCH, and two GJR specifications), plus a CUSTOM escape hatch.

Each generator is a pure function of its innovation sequence; ``generate``
draws the innovations from the seeded stream, runs the recursion through a
burn-in, and returns exactly ``n`` observations. Time-varying coefficients
are driven by ``g = t/n`` over the delivered index, frozen at ``g = 1/n``
during burn-in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import DataError
from .innovations import Seed, substream
from .returns import ReturnSeries

MODELS = ("M1", "M2", "M3", "M4", "M5", "M6", "M7", "M8")

# E|eps| for a standard normal innovation, used by the EGARCH recursion
_MEAN_ABS_NORMAL = math.sqrt(2.0 / math.pi)


@dataclass(frozen=True)
class ModelSpec:
    """Which data model to simulate, at what length, from which seed."""

    model: str = "M3"
    n: int = 500
    burn_in: int = 500
    seed: Seed = field(default_factory=Seed)
    scale_t_errors: bool = False
    params: dict | None = None

    def __post_init__(self):
        object.__setattr__(self, "seed", Seed.of(self.seed))
        if self.model not in MODELS and self.model != "CUSTOM":
            raise DataError(f"unknown model {self.model!r} (expected M1..M8 or CUSTOM)")
        if self.model == "CUSTOM" and not self.params:
            raise DataError("CUSTOM model needs a params mapping")
        if self.n < 1 or self.burn_in < 0:
            raise DataError("n must be >= 1 and burn_in >= 0")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["seed"] = self.seed.value
        return out


def garch_recursion(
    eps: np.ndarray, omega: float, alpha1: float, beta1: float, sigma2_init: float
) -> np.ndarray:
    """``X_t = sigma_t * eps_t`` with ``sigma2_t = omega + beta1*sigma2_{t-1}
    + alpha1*X_{t-1}^2``."""
    x = np.empty(eps.size)
    sig2 = sigma2_init
    for t in range(eps.size):
        if t > 0:
            sig2 = omega + beta1 * sig2 + alpha1 * x[t - 1] ** 2
        x[t] = math.sqrt(sig2) * eps[t]
    return x


def tv_garch_recursion(
    eps: np.ndarray,
    omega_fn,
    alpha_fn,
    beta_fn,
    n_delivered: int,
    burn_in: int,
    sigma2_init: float,
) -> np.ndarray:
    """Time-varying GARCH; coefficient functions take ``g = t/n`` of the
    delivered index and are held at ``g = 1/n`` through the burn-in."""
    x = np.empty(eps.size)
    sig2 = sigma2_init
    g0 = 1.0 / n_delivered
    for t in range(eps.size):
        g = g0 if t < burn_in else (t - burn_in + 1) / n_delivered
        if t > 0:
            sig2 = omega_fn(g) + beta_fn(g) * sig2 + alpha_fn(g) * x[t - 1] ** 2
        x[t] = math.sqrt(sig2) * eps[t]
    return x


def egarch_recursion(
    eps: np.ndarray,
    omega: float,
    beta1: float,
    theta: float,
    gamma: float,
    log_sigma2_init: float,
) -> np.ndarray:
    """``log(sigma2_t) = omega + beta1*log(sigma2_{t-1}) + theta*eps_{t-1}
    + gamma*(|eps_{t-1}| - E|eps|)``."""
    x = np.empty(eps.size)
    log_sig2 = log_sigma2_init
    for t in range(eps.size):
        if t > 0:
            log_sig2 = (
                omega
                + beta1 * log_sig2
                + theta * eps[t - 1]
                + gamma * (abs(eps[t - 1]) - _MEAN_ABS_NORMAL)
            )
        x[t] = math.exp(0.5 * log_sig2) * eps[t]
    return x


def gjr_recursion(
    eps: np.ndarray,
    omega: float,
    alpha1: float,
    beta1: float,
    gamma1: float,
    sigma2_init: float,
) -> np.ndarray:
    """GJR leverage recursion with indicator ``I_t = 1`` iff ``X_t <= 0``."""
    x = np.empty(eps.size)
    sig2 = sigma2_init
    for t in range(eps.size):
        if t > 0:
            leverage = gamma1 if x[t - 1] <= 0.0 else 0.0
            sig2 = omega + beta1 * sig2 + (alpha1 + leverage) * x[t - 1] ** 2
        x[t] = math.sqrt(sig2) * eps[t]
    return x


# coefficient functions of the two time-varying models, exposed for tests
def m1_omega(g: float) -> float:
    return -4.0 * math.sin(0.5 * math.pi * g) + 5.0


def m1_alpha(g: float) -> float:
    return -1.0 * (g - 0.3) ** 2 + 0.5


def m1_beta(g: float) -> float:
    return 0.2 * math.sin(0.5 * math.pi * g) + 0.2


def m2_alpha(g: float) -> float:
    return 0.1 - 0.05 * g


def m2_beta(g: float) -> float:
    return 0.73 + 0.2 * g


def _draw_errors(spec: ModelSpec, count: int) -> np.ndarray:
    gen = substream(spec.seed)
    error = "student_t" if spec.model == "M5" else "gaussian"
    df = 5.0
    if spec.model == "CUSTOM":
        error = spec.params.get("error", "gaussian")
        df = float(spec.params.get("df", 5.0))
    if error == "student_t":
        eps = gen.standard_t(df, size=count)
        if spec.scale_t_errors:
            eps = eps * math.sqrt((df - 2.0) / df)
        return eps
    return gen.standard_normal(count)


def generate(spec: ModelSpec) -> ReturnSeries:
    """Simulate the spec's model, discard burn-in, return ``n`` observations."""
    total = spec.burn_in + spec.n
    eps = _draw_errors(spec, total)

    if spec.model == "M1":
        x = tv_garch_recursion(
            eps, m1_omega, m1_alpha, m1_beta, spec.n, spec.burn_in, 1e-4
        )
    elif spec.model == "M2":
        x = tv_garch_recursion(
            eps, lambda g: 1e-5, m2_alpha, m2_beta, spec.n, spec.burn_in, 1e-4
        )
    elif spec.model in ("M3", "M5"):
        x = garch_recursion(eps, 1e-5, 0.1, 0.73, 1e-5 / 0.17)
    elif spec.model == "M4":
        x = garch_recursion(eps, 1e-5, 0.1, 0.8895, 1e-5 / 0.0105)
    elif spec.model == "M6":
        x = egarch_recursion(eps, 1e-5, 0.8895, 0.1, 0.3, 1e-5 / 0.1105)
    elif spec.model == "M7":
        x = gjr_recursion(eps, 1e-5, 0.5, 0.5, -0.5, 1e-5 / 0.25)
    elif spec.model == "M8":
        x = gjr_recursion(eps, 1e-5, 0.1, 0.73, 0.3, 1e-5 / 0.02)
    else:
        x = _generate_custom(spec, eps)
    return ReturnSeries(x[spec.burn_in :])


def _generate_custom(spec: ModelSpec, eps: np.ndarray) -> np.ndarray:
    p = dict(spec.params)
    kind = p.get("kind", "garch")
    omega = float(p.get("omega", 1e-5))
    alpha1 = float(p.get("alpha1", 0.1))
    beta1 = float(p.get("beta1", 0.8))
    sigma2_init = float(p.get("sigma2_init", 1e-4))
    if kind == "garch":
        return garch_recursion(eps, omega, alpha1, beta1, sigma2_init)
    if kind == "egarch":
        return egarch_recursion(
            eps,
            omega,
            beta1,
            float(p.get("theta", 0.0)),
            float(p.get("gamma1", 0.0)),
            math.log(sigma2_init),
        )
    if kind == "gjr":
        return gjr_recursion(
            eps, omega, alpha1, beta1, float(p.get("gamma1", 0.0)), sigma2_init
        )
    raise DataError(f"unknown custom model kind {kind!r}")
