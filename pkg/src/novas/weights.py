"""Weight structures for the four studentizing-transform variants.

A weight set assigns mass 1 across the terms of the studentizing
denominator: ``alpha`` on the recursive variance estimate, ``a0`` on the
contemporaneous squared return (dropped by the ``*_NO_A0`` variants), and a
decaying lag profile on past squared returns. The exponential family (GE)
gets ``a_i ~ exp(-c*i)``; the GARCH-derived family (GA) gets the geometric
profile ``a1 * b1**(i-1)`` with the intercept weight solved exactly from the
mass constraint.

Admissibility: the effective weight on the contemporaneous squared return
(``a0`` for GE, ``a0/(1-b1)`` for GA) caps the attainable range of the
studentized residuals at ``1/sqrt(eff)``. Keeping that range at least 3
standard deviations requires ``eff <= 1/9``, which is enforced here for both
families (for GA this is stricter than the raw ``a0 <= 1/9`` and is what
guarantees a usable truncation range for normal innovations).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, asdict

import numpy as np

from .errors import InfeasibleWeightsError

A0_MAX = 1.0 / 9.0
SUM_TOL = 1e-12


class NovasVariant(str, enum.Enum):
    GE = "GE"
    GE_NO_A0 = "GE_NO_A0"
    GA = "GA"
    GA_NO_A0 = "GA_NO_A0"

    @property
    def exponential_family(self) -> bool:
        return self in (NovasVariant.GE, NovasVariant.GE_NO_A0)

    @property
    def garch_family(self) -> bool:
        return self in (NovasVariant.GA, NovasVariant.GA_NO_A0)

    @property
    def keeps_a0(self) -> bool:
        return self in (NovasVariant.GE, NovasVariant.GA)


@dataclass(frozen=True, eq=False)
class NovasWeights:
    """A fully constructed, validated weight set.

    ``a0`` is the raw intercept weight as it appears in the mass constraint
    (GE family: ``alpha + a0 + sum(lags) = 1``; GA family:
    ``a0/(1-b1) + alpha + sum(lags) = 1``). ``shape`` carries the free
    parameters that generated the profile: ``(c,)`` for GE, ``(a1, b1)``
    for GA.
    """

    variant: NovasVariant
    alpha: float
    a0: float
    lags: np.ndarray
    order: int
    shape: tuple[float, ...]

    def __eq__(self, other) -> bool:
        if not isinstance(other, NovasWeights):
            return NotImplemented
        return (
            self.variant is other.variant
            and self.alpha == other.alpha
            and self.a0 == other.a0
            and self.order == other.order
            and self.shape == other.shape
            and np.array_equal(self.lags, other.lags)
        )

    def __post_init__(self):
        lags = np.asarray(self.lags, dtype=float)
        object.__setattr__(self, "lags", lags)
        if not 0.0 < self.alpha < 1.0:
            raise InfeasibleWeightsError("alpha", f"alpha={self.alpha} not in (0,1)")
        if self.order != lags.size or self.order < 1:
            raise InfeasibleWeightsError("order", f"order={self.order} invalid")
        if self.a0 < 0.0 or np.any(lags < 0.0):
            raise InfeasibleWeightsError("negative", "negative weight")
        total = self.y2_self_coef + self.alpha + float(lags.sum())
        if abs(total - 1.0) > SUM_TOL:
            raise InfeasibleWeightsError(
                "sum", f"weight mass {total!r} differs from 1 beyond {SUM_TOL}"
            )

    def check_admissible(self) -> "NovasWeights":
        """Enforce the prediction-pipeline admissibility constraints.

        A weight set can be algebraically valid (mass 1, nonnegative) yet
        unusable for Monte-Carlo prediction: an intercept weight above 1/9
        trims the innovation range below 3 standard deviations, and a GA
        profile whose lag head exceeds the effective intercept weight breaks
        the dominance requirement. Raises naming the violated constraint.
        """
        if self.a0 > 0.0:
            if self.a0 > A0_MAX:
                raise InfeasibleWeightsError(
                    "a0_bound", f"a0={self.a0:.6f} exceeds {A0_MAX:.6f}"
                )
            if self.y2_self_coef > A0_MAX + SUM_TOL:
                raise InfeasibleWeightsError(
                    "a0_bound",
                    f"effective contemporaneous weight {self.y2_self_coef:.6f} "
                    f"exceeds {A0_MAX:.6f}",
                )
            if self.variant.garch_family and self.y2_self_coef < float(
                self.lags.max()
            ) - SUM_TOL:
                raise InfeasibleWeightsError(
                    "dominance",
                    f"a0/(1-b1)={self.y2_self_coef:.6f} below the largest lag "
                    f"coefficient {float(self.lags.max()):.6f}",
                )
        return self

    @property
    def y2_self_coef(self) -> float:
        """Effective weight on the contemporaneous squared return."""
        if self.a0 == 0.0:
            return 0.0
        if self.variant.garch_family:
            return self.a0 / (1.0 - self.shape[1])
        return self.a0

    @property
    def trim_bound(self) -> float:
        """Hard bound ``|W| <= 1/sqrt(eff)`` implied by the forward transform."""
        eff = self.y2_self_coef
        return math.inf if eff == 0.0 else 1.0 / math.sqrt(eff)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant.value,
            "alpha": self.alpha,
            "a0": self.a0,
            "lags": [float(v) for v in self.lags],
            "order": self.order,
            "shape": list(self.shape),
        }


def exponential_profile(c: float, order: int, include_zero: bool) -> np.ndarray:
    """Unnormalized weights ``exp(-c*i)`` for ``i = 0..order`` or ``1..order``."""
    start = 0 if include_zero else 1
    return np.exp(-c * np.arange(start, order + 1, dtype=float))


def geometric_profile(a1: float, b1: float, order: int) -> np.ndarray:
    """Truncated GARCH-implied lag weights ``a1 * b1**(i-1)``, ``i = 1..order``."""
    return a1 * b1 ** np.arange(0, order, dtype=float)


def build_weights(
    variant: NovasVariant,
    alpha: float,
    shape,
    order: int,
    enforce_admissible: bool = True,
) -> NovasWeights:
    """Construct the weight set for one grid point.

    GE family: ``shape`` is the decay rate ``c >= 0``; weights are the
    normalized exponential profile (over ``i = 0..p`` for GE, ``1..p``
    without the intercept term).

    GA family: ``shape = (a1, b1)`` with ``b1 in (0, 1)``. For GA the
    intercept weight is solved exactly from the mass constraint,
    ``a0 = (1 - alpha - sum(lags)) * (1 - b1)``; for GA_NO_A0 the profile
    scale ``a1`` is renormalized so ``alpha + sum(lags) = 1`` holds exactly.

    Raises :class:`InfeasibleWeightsError` naming the violated constraint
    (negative solved ``a0``, trimming bound, GA dominance). Pass
    ``enforce_admissible=False`` to inspect an inadmissible point (it still
    cannot feed Monte-Carlo prediction: its trim bound falls below 3).
    """
    if not 0.0 < alpha < 1.0:
        raise InfeasibleWeightsError("alpha", f"alpha={alpha} not in (0,1)")
    if order < 1:
        raise InfeasibleWeightsError("order", f"order={order} must be >= 1")

    if variant.exponential_family:
        c = float(shape[0]) if isinstance(shape, (tuple, list, np.ndarray)) else float(shape)
        if c < 0.0:
            raise InfeasibleWeightsError("shape", f"decay rate c={c} must be >= 0")
        if variant is NovasVariant.GE:
            profile = exponential_profile(c, order, include_zero=True)
            weights = (1.0 - alpha) / profile.sum() * profile
            a0, lags = float(weights[0]), weights[1:]
        else:
            profile = exponential_profile(c, order, include_zero=False)
            weights = (1.0 - alpha) / profile.sum() * profile
            a0, lags = 0.0, weights
        built = NovasWeights(variant, alpha, a0, lags, order, (c,))
        return built.check_admissible() if enforce_admissible else built

    a1, b1 = float(shape[0]), float(shape[1])
    if not 0.0 < b1 < 1.0:
        raise InfeasibleWeightsError("shape", f"b1={b1} must be in (0,1)")
    if a1 <= 0.0:
        raise InfeasibleWeightsError("shape", f"a1={a1} must be > 0")
    if variant is NovasVariant.GA_NO_A0:
        a1 = (1.0 - alpha) * (1.0 - b1) / (1.0 - b1**order)
        lags = geometric_profile(a1, b1, order)
        return NovasWeights(variant, alpha, 0.0, lags, order, (a1, b1))
    lags = geometric_profile(a1, b1, order)
    budget = 1.0 - alpha - float(lags.sum())
    if budget < 0.0:
        raise InfeasibleWeightsError(
            "negative_a0",
            f"lag mass {float(lags.sum()):.6f} exceeds 1 - alpha = {1.0 - alpha:.6f} "
            "(negative solved a0)",
        )
    a0 = budget * (1.0 - b1)
    built = NovasWeights(variant, alpha, a0, lags, order, (a1, b1))
    return built.check_admissible() if enforce_admissible else built


@dataclass(frozen=True)
class CalibrationGrid:
    """Search-grid configuration for kurtosis-targeted calibration.

    Every field is a plain scalar so the whole grid is expressible as a
    key-value config file.
    """

    ge_c_min: float = 0.005
    ge_c_max: float = 5.0
    ge_c_count: int = 40
    ga_step: float = 0.02
    order_cap: int = 30
    order_cap_divisor: int = 5
    order_max: int = 60
    tail_mass: float = 0.01
    eps_guard: float = 1e-12
    min_window: int = 50

    def ge_c_values(self) -> np.ndarray:
        return np.geomspace(self.ge_c_min, self.ge_c_max, self.ge_c_count)

    def ga_values(self) -> np.ndarray:
        count = int(round((1.0 - self.ga_step) / self.ga_step))
        return self.ga_step * np.arange(1, count + 1, dtype=float)

    def order_cap_for(self, window: int) -> int:
        return max(1, min(self.order_cap, window // self.order_cap_divisor))

    def adaptive_ge_order(self, c: float, window: int) -> int:
        """Smallest lag count whose dropped exponential tail mass is < ``tail_mass``."""
        cap = self.order_cap_for(window)
        if c <= 0.0:
            return cap
        # tail fraction of the infinite profile is exp(-c)**(p+1)
        p = math.ceil(-math.log(self.tail_mass) / c) - 1
        return max(1, min(p, cap))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "CalibrationGrid":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown calibration-grid keys: {sorted(unknown)}")
        return cls(**data)
