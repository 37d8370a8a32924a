"""Hyperelastic material parameters and Lame-coefficient conversions."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction


class MaterialModel(enum.Enum):
    """Strain-energy density families supported by the element kernels."""

    STABLE_NEO_HOOKEAN = "stable_neo_hookean"
    NEO_HOOKEAN_LOG = "neo_hookean_log"
    ARAP_VOLUME = "arap_volume"
    SYMMETRIC_DIRICHLET_VOLUME = "symmetric_dirichlet_volume"


# Integer codes shared with the compiled kernels.
MODEL_CODES = {model: i for i, model in enumerate(MaterialModel)}

# Models whose energy diverges (returns +inf) on inverted elements.
INVERSION_UNSAFE = frozenset(
    {MaterialModel.NEO_HOOKEAN_LOG, MaterialModel.SYMMETRIC_DIRICHLET_VOLUME}
)


@dataclass(frozen=True)
class MaterialParams:
    """First/second Lame parameters (Pa) plus the energy-model tag.

    ``alpha = 1 + mu/lam`` is the rest-stability offset of the stable
    Neo-Hookean volume term; it is derived on access so it can never drift
    out of sync with ``mu`` and ``lam``.
    """

    mu: float
    lam: float
    model: MaterialModel = MaterialModel.STABLE_NEO_HOOKEAN

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mu) and self.mu > 0.0):
            raise ValueError(f"mu must be finite and > 0, got {self.mu}")
        if not (math.isfinite(self.lam) and self.lam > 0.0):
            raise ValueError(f"lam must be finite and > 0, got {self.lam}")
        if not isinstance(self.model, MaterialModel):
            raise ValueError(f"unknown material model: {self.model!r}")

    @property
    def alpha(self) -> float:
        return 1.0 + self.mu / self.lam

    @property
    def model_code(self) -> int:
        return MODEL_CODES[self.model]


def lame_from_young_poisson(
    young: float, poisson: float, *, allow_zero_lambda: bool = False
) -> tuple[float, float]:
    """Convert Young's modulus / Poisson's ratio to Lame parameters.

    mu = E / (2 (1 + nu)) and lam = 2 nu / (1 - 2 nu) * mu.  The ratio
    2 nu / (1 - 2 nu) is evaluated in exact rational arithmetic on the
    decimal (shortest round-trip) reading of ``poisson``, so decimal inputs
    produce exact ratios: nu = 0.495 gives lam/mu = 99 exactly instead of
    98.99999999999991 from naive float evaluation of the ill-conditioned
    1 - 2 nu denominator.

    nu = 0 makes the volume term vanish (lam = 0) and is rejected unless
    ``allow_zero_lambda`` is set.
    """
    if not (math.isfinite(young) and young > 0.0):
        raise ValueError(f"Young's modulus must be finite and > 0, got {young}")
    if not (math.isfinite(poisson) and 0.0 <= poisson < 0.5):
        raise ValueError(
            f"Poisson's ratio must lie in [0, 0.5), got {poisson} "
            "(lam diverges as nu -> 0.5)"
        )
    mu = young / (2.0 * (1.0 + poisson))
    nu_exact = Fraction(repr(poisson))
    ratio = 2 * nu_exact / (1 - 2 * nu_exact)
    lam = float(ratio) * mu
    if lam == 0.0 and not allow_zero_lambda:
        raise ValueError(
            "nu = 0 gives lam = 0 (no volume term); pass allow_zero_lambda=True "
            "to accept it"
        )
    return mu, lam
