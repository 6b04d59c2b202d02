"""Polarization optics for the classical-pulse simulator.

The physical model is deliberately minimal: a pulse is classically
polarized light with Poisson photon statistics. Polarization lives on
the half-circle [0, pi) because every protocol state and both
measurement bases are invariant under a pi shift. Photon counts are
resolved only when something actually looks at the pulse (a detector or
an adversary); propagation just scales the mean photon number.

Detection follows Malus' law photon by photon: a photon polarized at
theta meets a polarizing beam splitter aligned with basis angle beta and
clicks the aligned detector with probability cos^2(theta - beta),
otherwise the orthogonal one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

QUARTER_TURN = math.pi / 4

_ANGLE_LABELS = ("0", "pi/4", "pi/2", "-pi/4")


def _reduce_mod_pi(radians: float) -> float:
    """Reduce an angle into the canonical range [0, pi)."""
    r = math.fmod(radians, math.pi)
    if r < 0.0:
        r += math.pi
    if r >= math.pi:  # guards the r = -epsilon + pi rounding edge
        r = 0.0
    return r


@dataclass(frozen=True, slots=True)
class PolarizationAngle:
    """Continuous linear-polarization angle, stored reduced into [0, pi)."""

    radians: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "radians", _reduce_mod_pi(float(self.radians)))

    def __add__(self, other: "PolarizationAngle | float") -> "PolarizationAngle":
        delta = other.radians if isinstance(other, PolarizationAngle) else float(other)
        return PolarizationAngle(self.radians + delta)

    def __sub__(self, other: "PolarizationAngle | float") -> "PolarizationAngle":
        delta = other.radians if isinstance(other, PolarizationAngle) else float(other)
        return PolarizationAngle(self.radians - delta)

    def distance_to(self, other: "PolarizationAngle") -> float:
        """Circular distance on the half-circle (wraps at pi)."""
        d = abs(self.radians - other.radians)
        return min(d, math.pi - d)

    def is_close(self, other: "PolarizationAngle", tol: float = 1e-9) -> bool:
        return self.distance_to(other) <= tol


@dataclass(frozen=True, slots=True)
class DecisionAngle:
    """One of the four discrete protocol angles {0, pi/4, pi/2, -pi/4}.

    Encoded as quarter turns of pi/4 so that angle arithmetic is exact
    integer arithmetic in the cyclic group Z4.
    """

    quarter_turns: int

    def __post_init__(self) -> None:
        if self.quarter_turns not in (0, 1, 2, 3):
            raise ValueError(f"quarter_turns must be in 0..3, got {self.quarter_turns}")

    @classmethod
    def from_radians(cls, radians: float, tol: float = 1e-9) -> "DecisionAngle":
        """Recover the discrete angle from a continuous one; exact-four-values only."""
        reduced = _reduce_mod_pi(radians)
        q = int(round(reduced / QUARTER_TURN)) % 4
        candidate = cls(q)
        if PolarizationAngle(reduced).distance_to(candidate.to_polarization()) > tol:
            raise ValueError(f"{radians} rad is not one of the four protocol angles")
        return candidate

    def to_polarization(self) -> PolarizationAngle:
        return PolarizationAngle(self.quarter_turns * QUARTER_TURN)

    @property
    def radians(self) -> float:
        return self.quarter_turns * QUARTER_TURN

    @property
    def label(self) -> str:
        return _ANGLE_LABELS[self.quarter_turns]

    def __add__(self, other: "DecisionAngle") -> "DecisionAngle":
        return decision_add(self, other)

    def __sub__(self, other: "DecisionAngle") -> "DecisionAngle":
        return DecisionAngle((self.quarter_turns - other.quarter_turns) % 4)

    def __neg__(self) -> "DecisionAngle":
        return DecisionAngle((-self.quarter_turns) % 4)


@dataclass(frozen=True, slots=True)
class CoherentPulse:
    """Classically polarized pulse with mean photon number ``mean_photons``."""

    mean_photons: float
    polarization: PolarizationAngle

    def __post_init__(self) -> None:
        if self.mean_photons < 0:
            raise ValueError(f"mean_photons must be >= 0, got {self.mean_photons}")


@dataclass(frozen=True, slots=True)
class PhotonBatch:
    """A resolved photon count sharing one polarization."""

    count: int
    polarization: PolarizationAngle

    def __post_init__(self) -> None:
        if self.count < 0:
            raise ValueError(f"count must be >= 0, got {self.count}")


class MeasurementBasis(Enum):
    RECTILINEAR = "rectilinear"  # distinguishes {0, pi/2}
    DIAGONAL = "diagonal"        # distinguishes {pi/4, -pi/4}

    @property
    def aligned(self) -> DecisionAngle:
        return DecisionAngle(0) if self is MeasurementBasis.RECTILINEAR else DecisionAngle(1)

    @property
    def orthogonal(self) -> DecisionAngle:
        return DecisionAngle(2) if self is MeasurementBasis.RECTILINEAR else DecisionAngle(3)


def basis_of(angle: DecisionAngle) -> MeasurementBasis:
    """Basis that distinguishes the given discrete angle."""
    return MeasurementBasis.RECTILINEAR if angle.quarter_turns % 2 == 0 else MeasurementBasis.DIAGONAL


class OutcomeKind(Enum):
    ANGLE = "angle"
    VACUUM = "vacuum"
    AMBIGUOUS = "ambiguous"


@dataclass(frozen=True, slots=True)
class MeasurementOutcome:
    """Result of a polarizing-beam-splitter measurement on one batch."""

    kind: OutcomeKind
    angle: DecisionAngle | None = None

    @classmethod
    def vacuum(cls) -> "MeasurementOutcome":
        return cls(OutcomeKind.VACUUM)

    @classmethod
    def ambiguous(cls) -> "MeasurementOutcome":
        return cls(OutcomeKind.AMBIGUOUS)

    @classmethod
    def of_angle(cls, angle: DecisionAngle) -> "MeasurementOutcome":
        return cls(OutcomeKind.ANGLE, angle)

    @property
    def is_vacuum(self) -> bool:
        return self.kind is OutcomeKind.VACUUM

    @property
    def is_ambiguous(self) -> bool:
        return self.kind is OutcomeKind.AMBIGUOUS

    @property
    def is_angle(self) -> bool:
        return self.kind is OutcomeKind.ANGLE


def rotate(pulse: CoherentPulse, delta: PolarizationAngle | float) -> CoherentPulse:
    """Rotate the pulse polarization by ``delta``; intensity is untouched."""
    return CoherentPulse(pulse.mean_photons, pulse.polarization + delta)


def rotate_batch(batch: PhotonBatch, delta: PolarizationAngle | float) -> PhotonBatch:
    return PhotonBatch(batch.count, batch.polarization + delta)


def decision_add(a: DecisionAngle, b: DecisionAngle) -> DecisionAngle:
    """Add two discrete angles in Z4 (pi/4 steps, mod pi)."""
    return DecisionAngle((a.quarter_turns + b.quarter_turns) % 4)


def sample_photon_count(pulse: CoherentPulse, rng: np.random.Generator) -> PhotonBatch:
    """Resolve the pulse into a definite Poisson-distributed photon count."""
    return PhotonBatch(int(rng.poisson(pulse.mean_photons)), pulse.polarization)


def beam_split(pulse: CoherentPulse, ratio: float) -> tuple[CoherentPulse, CoherentPulse]:
    """Split a pulse on a beam splitter with the given transmitted ratio.

    Returns (transmitted, reflected) with mean photon numbers
    (mu * ratio, mu * (1 - ratio)), computed so that the two outputs
    sum to the input mean exactly. Polarization is shared.
    """
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"split ratio must be in [0, 1], got {ratio}")
    # Double complement: whichever output lies above mu/2 makes its
    # subtraction exact, so the pair always sums to mu bit-for-bit.
    first = pulse.mean_photons * ratio
    second = pulse.mean_photons - first
    first = pulse.mean_photons - second
    return (
        CoherentPulse(first, pulse.polarization),
        CoherentPulse(second, pulse.polarization),
    )


def split_batch(
    batch: PhotonBatch, ratio: float, rng: np.random.Generator
) -> tuple[PhotonBatch, PhotonBatch]:
    """Split a resolved batch: each photon independently takes the first port."""
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"split ratio must be in [0, 1], got {ratio}")
    first = int(rng.binomial(batch.count, ratio)) if batch.count else 0
    return (
        PhotonBatch(first, batch.polarization),
        PhotonBatch(batch.count - first, batch.polarization),
    )


def pbs_measure(
    batch: PhotonBatch, basis: MeasurementBasis, rng: np.random.Generator
) -> MeasurementOutcome:
    """Measure a batch on a polarizing beam splitter in the given basis.

    Every photon clicks the aligned detector with probability
    cos^2(theta - beta) and the orthogonal one otherwise. A batch whose
    clicks all land on one detector reads out that detector's angle;
    clicks on both detectors are an ambiguous event; an empty batch is
    vacuum.
    """
    if batch.count == 0:
        return MeasurementOutcome.vacuum()
    beta = basis.aligned.radians
    p_aligned = math.cos(batch.polarization.radians - beta) ** 2
    aligned_clicks = int(np.count_nonzero(rng.random(batch.count) < p_aligned))
    if aligned_clicks == batch.count:
        return MeasurementOutcome.of_angle(basis.aligned)
    if aligned_clicks == 0:
        return MeasurementOutcome.of_angle(basis.orthogonal)
    return MeasurementOutcome.ambiguous()
