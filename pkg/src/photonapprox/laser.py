"""Laser power budgeting and the truncate-vs-reduced-power decision.

Total laser power for a WDM link obeys

    P_laser - S_detector >= loss + 10 log10(N_lambda)

so each wavelength must carry at least ``S_detector + loss`` dBm. Power
reductions for approximated wavelengths are linear fractions of mW.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

from .exceptions import ConfigError
from .fpapprox import MAX_APPROX_BITS
from .photonics import LossParameters, LossTable

if TYPE_CHECKING:
    from .signaling import SignalingScheme


def dbm_to_mw(p_dbm: float) -> float:
    return 10.0 ** (p_dbm / 10.0)


def mw_to_dbm(p_mw: float) -> float:
    if not p_mw > 0:
        raise ValueError(f"power must be positive to express in dBm, got {p_mw!r} mW")
    return 10.0 * math.log10(p_mw)


def db_ratio(linear: float) -> float:
    return 10.0 * math.log10(linear)


def required_total_power(worst_case_loss: float, params: LossParameters, n_lambda: int) -> float:
    """Total laser power (dBm) meeting the link budget with equality."""
    if n_lambda < 1:
        raise ValueError(f"n_lambda must be >= 1, got {n_lambda}")
    return params.detector_sensitivity_dbm + worst_case_loss + 10.0 * math.log10(n_lambda)


def _check_fraction(reduction_fraction: float) -> None:
    if not 0.0 <= reduction_fraction <= 1.0:
        raise ValueError(f"reduction_fraction must be in [0, 1], got {reduction_fraction!r}")


@dataclass(frozen=True)
class LaserBudget:
    n_lambda: int
    full_power_total_dbm: float
    reduction_fraction: float = 0.0

    def __post_init__(self):
        if self.n_lambda < 1:
            raise ValueError("n_lambda must be >= 1")
        _check_fraction(self.reduction_fraction)

    @property
    def full_power_per_lambda_dbm(self) -> float:
        return self.full_power_total_dbm - 10.0 * math.log10(self.n_lambda)

    @classmethod
    def sized_for(
        cls,
        table: LossTable,
        params: LossParameters,
        scheme: "SignalingScheme",
        reduction_fraction: float = 0.0,
    ) -> "LaserBudget":
        """Size full power for the lossiest destination on the source's waveguide."""
        worst = table.worst_case_loss() + scheme.extra_loss_db
        total = required_total_power(worst, params, scheme.n_lambda)
        return cls(scheme.n_lambda, total, reduction_fraction)

    def with_reduction(self, reduction_fraction: float) -> "LaserBudget":
        return LaserBudget(self.n_lambda, self.full_power_total_dbm, reduction_fraction)


def reduced_per_lambda_power(budget: LaserBudget) -> float:
    if budget.reduction_fraction >= 1.0:
        raise ValueError("a reduction of 1.0 switches the laser off; use truncation instead")
    return budget.full_power_per_lambda_dbm + db_ratio(1.0 - budget.reduction_fraction)


def msb_power_per_lambda(budget: LaserBudget, scheme: "SignalingScheme") -> float:
    p = budget.full_power_per_lambda_dbm
    if scheme.multiplier_applies_to_full:
        p += db_ratio(scheme.reduced_power_multiplier)
    return p


def lsb_power_per_lambda(budget: LaserBudget, scheme: "SignalingScheme") -> float:
    """Commanded per-wavelength power for reduced-power LSB wavelengths."""
    return reduced_per_lambda_power(budget) + db_ratio(scheme.reduced_power_multiplier)


def detection_margin(
    dest_loss: float, budget: LaserBudget, scheme: "SignalingScheme", params: LossParameters
) -> float:
    """Received LSB power minus detector sensitivity, in dB."""
    received = lsb_power_per_lambda(budget, scheme) - (dest_loss + scheme.extra_loss_db)
    return received - params.detector_sensitivity_dbm


class LsbMode(enum.Enum):
    FULL = "full"
    REDUCED = "reduced"
    TRUNCATED = "truncated"


def decide_mode(
    dest_loss: float, budget: LaserBudget, scheme: "SignalingScheme", params: LossParameters
) -> LsbMode:
    if budget.reduction_fraction >= 1.0:
        return LsbMode.TRUNCATED
    if detection_margin(dest_loss, budget, scheme, params) >= 0.0:
        return LsbMode.REDUCED
    return LsbMode.TRUNCATED


@dataclass(frozen=True)
class TransmitPlan:
    """Per-packet drive levels handed to the VCSEL drivers."""

    scheme: str
    msb_power_per_lambda_dbm: float
    lsb_mode: LsbMode = LsbMode.FULL
    num_approx_bits: int = 0
    lsb_power_per_lambda_dbm: Optional[float] = None

    def __post_init__(self):
        if not 0 <= self.num_approx_bits <= MAX_APPROX_BITS:
            raise ConfigError(f"num_approx_bits must be in [0, {MAX_APPROX_BITS}]")
        if self.lsb_mode is LsbMode.REDUCED and self.lsb_power_per_lambda_dbm is None:
            raise ConfigError("reduced-power plan needs an LSB power level")

    @classmethod
    def full(cls, budget: LaserBudget, scheme: "SignalingScheme") -> "TransmitPlan":
        return cls(scheme.name, msb_power_per_lambda(budget, scheme))

    @classmethod
    def truncated(cls, budget: LaserBudget, scheme: "SignalingScheme", num_approx_bits: int) -> "TransmitPlan":
        k = scheme.usable_approx_bits(num_approx_bits)
        if k == 0:
            return cls.full(budget, scheme)
        return cls(scheme.name, msb_power_per_lambda(budget, scheme), LsbMode.TRUNCATED, k)

    @classmethod
    def reduced(cls, budget: LaserBudget, scheme: "SignalingScheme", num_approx_bits: int) -> "TransmitPlan":
        """Reduced-power LSBs regardless of destination; falls back to truncation at 100 % reduction."""
        k = scheme.usable_approx_bits(num_approx_bits)
        if k == 0:
            return cls.full(budget, scheme)
        if budget.reduction_fraction >= 1.0:
            return cls.truncated(budget, scheme, k)
        return cls(
            scheme.name,
            msb_power_per_lambda(budget, scheme),
            LsbMode.REDUCED,
            k,
            lsb_power_per_lambda(budget, scheme),
        )

    @classmethod
    def loss_aware(
        cls,
        dest_loss: float,
        budget: LaserBudget,
        scheme: "SignalingScheme",
        params: LossParameters,
        num_approx_bits: int,
    ) -> "TransmitPlan":
        """Reduced power when the destination can still detect it, else truncate."""
        if decide_mode(dest_loss, budget, scheme, params) is LsbMode.REDUCED:
            return cls.reduced(budget, scheme, num_approx_bits)
        return cls.truncated(budget, scheme, num_approx_bits)
