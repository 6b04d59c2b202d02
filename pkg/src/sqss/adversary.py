"""Eavesdropping strategies and their closed-form building blocks.

Three attacks on the ring are modeled. Photon-number splitting taps one
fiber segment with a quantum non-demolition counter and skims a photon
from multiphoton pulses. Photon tagging marks the pulse so it can be
recognized after the sender's encoding; the sender's beam-splitter
countermeasure destroys the tag probabilistically. Impersonation sits
between the sender and the ring, feeds the receivers a substitute
pulse, and unambiguously discriminates the encoding on the real one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .optics import (
    CoherentPulse,
    DecisionAngle,
    MeasurementBasis,
    PhotonBatch,
    PolarizationAngle,
    pbs_measure,
)

Estimator = Callable[[PolarizationAngle | None, int, np.random.Generator], int]


@dataclass(frozen=True, slots=True)
class NoAttack:
    pass


@dataclass(frozen=True, slots=True)
class PnsSplit:
    """Tap the given channel (travel-order hop index) with a QND counter."""

    channel_index: int = 1
    estimator: Estimator | None = None


@dataclass(frozen=True, slots=True)
class TagPhoton:
    pass


@dataclass(frozen=True, slots=True)
class Impersonate:
    pass


EveStrategy = NoAttack | PnsSplit | TagPhoton | Impersonate


@dataclass(slots=True)
class EveState:
    """Everything Eve accumulates across a session."""

    stored_photons: dict[int, PolarizationAngle] = field(default_factory=dict)
    tag_results: list[DecisionAngle | None] = field(default_factory=list)
    usd_successes: list[bool] = field(default_factory=list)
    guesses: list[int] = field(default_factory=list)


@dataclass(frozen=True, slots=True)
class EveSummary:
    strategy: str
    rounds: int
    sifted_rounds: int
    recovered_bits: int
    recovery_rate: float | None = None
    guess_accuracy: float | None = None
    usd_success_rate: float | None = None
    stored_photons: int | None = None


def eve_mean_photons(mu: float, transmission: float, channel_index: int) -> float:
    """Mean photon number Eve can skim per pulse from one tapped channel.

    The pulse reaching channel c has been attenuated c-1 times, and the
    tap collects the fraction the fiber would have lost on that hop:
    mu * T**(c-1) * (1 - T).
    """
    if mu <= 0.0:
        raise ValueError(f"mean photon number must be positive, got {mu}")
    if not 0.0 < transmission <= 1.0:
        raise ValueError(f"transmission must be in (0, 1], got {transmission}")
    if channel_index not in (1, 3, 4):
        raise ValueError(f"tappable channels are 1, 3 and 4, got {channel_index}")
    return mu * transmission ** (channel_index - 1) * (1.0 - transmission)


def usd_success(n: int) -> float:
    """Probability that unambiguous discrimination of the four key angles
    succeeds on an n-photon pulse: zero below three photons, then
    1 - (1/2)**floor((n-1)/2).
    """
    if n < 0:
        raise ValueError(f"photon count must be >= 0, got {n}")
    if n < 3:
        return 0.0
    # discrimination always keeps a failure channel, so the probability
    # stays strictly below one even where the subtraction would round up
    return min(1.0 - 0.5 ** ((n - 1) // 2), math.nextafter(1.0, 0.0))


def pns_intercept(
    light: CoherentPulse | PhotonBatch,
    rng: np.random.Generator,
    state: EveState | None,
    round_index: int,
) -> CoherentPulse | PhotonBatch:
    """QND-count the pulse at the tapped hop and skim one photon when possible.

    A count of two or more lets Eve keep one photon in quantum memory
    and forward the remainder; otherwise the pulse passes untouched.
    """
    if isinstance(light, CoherentPulse):
        n = int(rng.poisson(light.mean_photons))
    else:
        n = light.count
    if n < 2:
        return light
    if state is not None:
        state.stored_photons[round_index] = light.polarization
    return PhotonBatch(n - 1, light.polarization)


def tag_attack_round(
    key_angle: DecisionAngle,
    rng: np.random.Generator,
    state: EveState | None,
    alice_uses_bs: bool,
    alice_bs_ratio: float,
) -> DecisionAngle | None:
    """One round of the idealized tagging attack.

    The tagged photon always reveals the key angle once the basis is
    public, unless the sender's countermeasure beam splitter deflects it
    first (survival probability equal to the transmitted ratio).
    """
    survived = True
    if alice_uses_bs:
        survived = bool(rng.random() < alice_bs_ratio)
    result = key_angle if survived else None
    if state is not None:
        state.tag_results.append(result)
    return result


def impersonate_guess(
    true_key_angle: DecisionAngle,
    usd_mean: float,
    rng: np.random.Generator,
    state: EveState | None,
) -> DecisionAngle:
    """Eve's re-encoded angle after attempting discrimination.

    She samples the photon number of the intercepted pulse, succeeds
    with the n-dependent discrimination probability, and falls back to a
    uniform guess among the four angles when discrimination fails.
    """
    n = int(rng.poisson(usd_mean))
    success = bool(rng.random() < usd_success(n))
    if state is not None:
        state.usd_successes.append(success)
    if success:
        return true_key_angle
    return DecisionAngle(int(rng.integers(4)))


def impersonate_error_given_count(
    n: int, rng: np.random.Generator, state: EveState | None = None
) -> bool:
    """Error event of one impersonation round with a known photon count.

    Eve's guess error relative to the true angle is what matters: offset
    zero is silent, the orthogonal offset always flips the bit, and the
    two diagonal offsets land in the wrong basis where the measured bit
    is a fair coin.
    """
    success = bool(rng.random() < usd_success(n))
    if state is not None:
        state.usd_successes.append(success)
    if success:
        return False
    offset = int(rng.integers(4))
    if offset == 0:
        return False
    if offset == 2:
        return True
    return bool(rng.random() < 0.5)


def impersonate_round(
    mu: float,
    transmission: float,
    rng: np.random.Generator,
    state: EveState | None = None,
) -> bool:
    """Simulate one impersonation round; True when the sifted bit is flipped.

    The intercepted pulse's photon number is Poisson with mean mu times
    the transmission of the single hop separating Eve from the sender.
    """
    if mu < 0.0:
        raise ValueError(f"mean photon number must be >= 0, got {mu}")
    if not 0.0 < transmission <= 1.0:
        raise ValueError(f"transmission must be in (0, 1], got {transmission}")
    n = int(rng.poisson(mu * transmission))
    return impersonate_error_given_count(n, rng, state)


def ml_single_photon_estimator(
    stored: PolarizationAngle | None, basis_choice: int, rng: np.random.Generator
) -> int:
    """Default PNS estimator: measure the stored photon in the announced basis.

    With no stored photon the guess is a fair coin. One photon always
    produces a definite click, whose angle maps to a bit the same way
    the receivers map theirs.
    """
    if stored is None:
        return int(rng.integers(2))
    basis = MeasurementBasis.RECTILINEAR if basis_choice == 1 else MeasurementBasis.DIAGONAL
    outcome = pbs_measure(PhotonBatch(1, stored), basis, rng)
    return outcome.angle.quarter_turns // 2
