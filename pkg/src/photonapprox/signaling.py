"""OOK and PAM4 link economics plus the threshold detection channel.

PAM4 is not modelled at the waveform level. A scheme is described by how
many bits a wavelength carries per symbol, how many wavelengths the 64-bit
link needs, the extra signalling loss and the laser power multiplier.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError
from .fpapprox import WORD_BITS, FloatWord, lsb_mask
from .laser import LsbMode, TransmitPlan, db_ratio
from .photonics import LossParameters

OOK_NAME = "ook"
PAM4_NAME = "pam4"


@dataclass(frozen=True)
class SignalingScheme:
    name: str
    bits_per_symbol: int
    n_lambda: int
    extra_loss_db: float = 0.0
    reduced_power_multiplier: float = 1.0
    multiplier_applies_to_full: bool = True

    def __post_init__(self):
        if self.bits_per_symbol * self.n_lambda != WORD_BITS:
            raise ConfigError(
                f"{self.name}: {self.bits_per_symbol} bits/symbol x {self.n_lambda} wavelengths != {WORD_BITS}"
            )
        if self.extra_loss_db < 0 or self.reduced_power_multiplier <= 0:
            raise ConfigError(f"{self.name}: invalid loss or power multiplier")

    def usable_approx_bits(self, k: int) -> int:
        """Approximated bits rounded down to whole symbols."""
        return k - k % self.bits_per_symbol

    def approx_lambdas(self, k: int) -> int:
        return self.usable_approx_bits(k) // self.bits_per_symbol


OOK = SignalingScheme(OOK_NAME, bits_per_symbol=1, n_lambda=64)
PAM4 = SignalingScheme(PAM4_NAME, bits_per_symbol=2, n_lambda=32, extra_loss_db=5.8, reduced_power_multiplier=1.5)

SCHEMES = {OOK_NAME: OOK, PAM4_NAME: PAM4}


def scheme_by_name(name: str, multiplier_applies_to_full: bool = True) -> SignalingScheme:
    try:
        scheme = SCHEMES[name.lower()]
    except KeyError:
        raise ConfigError(f"unknown signaling scheme {name!r}; expected one of {sorted(SCHEMES)}") from None
    if multiplier_applies_to_full != scheme.multiplier_applies_to_full:
        scheme = SignalingScheme(
            scheme.name,
            scheme.bits_per_symbol,
            scheme.n_lambda,
            scheme.extra_loss_db,
            scheme.reduced_power_multiplier,
            multiplier_applies_to_full,
        )
    return scheme


def effective_lambda_count(scheme: SignalingScheme) -> int:
    return scheme.n_lambda


def pam4_reduced_power(ook_reduced_dbm: float, scheme: SignalingScheme) -> float:
    if scheme.name != PAM4_NAME:
        raise ConfigError(f"PAM4 power rule applied to {scheme.name} link")
    return ook_reduced_dbm + db_ratio(scheme.reduced_power_multiplier)


class ThresholdChannel:
    """Deterministic detector: a bit is recovered iff received power >= sensitivity.

    Below sensitivity the detector reads logic 0. Subclass and override
    ``recovers`` to plug in a probabilistic error model.
    """

    def recovers(self, received_dbm: float, sensitivity_dbm: float) -> bool:
        return received_dbm >= sensitivity_dbm


DEFAULT_CHANNEL = ThresholdChannel()


@dataclass(frozen=True)
class ChannelOutcome:
    """Which of the 64 bit positions were delivered exactly."""

    forced_zero_lsbs: int = 0

    @property
    def statuses(self) -> tuple[str, ...]:
        # index 0 is the least significant bit
        return tuple("forced_zero" if i < self.forced_zero_lsbs else "exact" for i in range(WORD_BITS))

    @property
    def exact(self) -> bool:
        return self.forced_zero_lsbs == 0


def _check_plan(plan: TransmitPlan, scheme: SignalingScheme) -> None:
    if plan.scheme != scheme.name:
        raise ConfigError(f"{plan.scheme} plan used on a {scheme.name} link")
    if plan.num_approx_bits % scheme.bits_per_symbol:
        raise ConfigError(f"{plan.num_approx_bits} approximated bits do not fill whole {scheme.name} symbols")


def channel_outcome(
    plan: TransmitPlan,
    dest_loss: float,
    scheme: SignalingScheme,
    params: LossParameters,
    channel: ThresholdChannel = DEFAULT_CHANNEL,
) -> ChannelOutcome:
    _check_plan(plan, scheme)
    if plan.lsb_mode is LsbMode.FULL or plan.num_approx_bits == 0:
        return ChannelOutcome(0)
    if plan.lsb_mode is LsbMode.TRUNCATED:
        return ChannelOutcome(plan.num_approx_bits)
    received = plan.lsb_power_per_lambda_dbm - (dest_loss + scheme.extra_loss_db)
    if channel.recovers(received, params.detector_sensitivity_dbm):
        return ChannelOutcome(0)
    return ChannelOutcome(plan.num_approx_bits)


def transmit_word(
    word: FloatWord,
    plan: TransmitPlan,
    dest_loss: float,
    scheme: SignalingScheme,
    params: LossParameters,
    channel: ThresholdChannel = DEFAULT_CHANNEL,
) -> FloatWord:
    outcome = channel_outcome(plan, dest_loss, scheme, params, channel)
    if outcome.exact:
        return word
    return FloatWord(word.raw & lsb_mask(outcome.forced_zero_lsbs))


def transmit_words(
    words: np.ndarray,
    plan: TransmitPlan,
    dest_loss: float,
    scheme: SignalingScheme,
    params: LossParameters,
    channel: ThresholdChannel = DEFAULT_CHANNEL,
) -> np.ndarray:
    """Array form of ``transmit_word`` for uint64 words sharing one plan and destination."""
    outcome = channel_outcome(plan, dest_loss, scheme, params, channel)
    words = np.asarray(words, dtype=np.uint64)
    if outcome.exact:
        return words.copy()
    return words & np.uint64(lsb_mask(outcome.forced_zero_lsbs))
