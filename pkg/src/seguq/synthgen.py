"""Deterministic generator of calibrated and miscalibrated prediction stacks.

Serves as the statistical oracle for calibration and uncertainty tests:
ground truth is drawn per pixel from the same base probability the stack
reports (calibrated regime), or from the undistorted probability while the
stack reports a sharpened/flattened one (over-/underconfident regimes), so
the expected calibration error of the output is known by construction.

Randomness comes from numpy's PCG64 generator seeded with the spec's seed.
For a fixed seed the draw order is fixed and regime-independent:

1. base probabilities: one uniform per pixel, clipped to
   [1e-12, 1 - 1e-12] so logits stay finite;
2. ground truth: one uniform per pixel, compared against the base
   probability (truth = u < p);
3. jitter: K*T standard normals per pixel, drawn only when
   noise_scale > 0.

Because distortion consumes no randomness, runs that differ only in regime
or noise scale share identical base probabilities and ground truth.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logit

from .datamodel import BinaryMask, SampleStack
from .errors import InvalidSpecError

SYNTH_SCHEMA_VERSION = 1

_P_EPS = 1e-12


class Regime(enum.Enum):
    CALIBRATED = "calibrated"
    OVERCONFIDENT = "overconfident"
    UNDERCONFIDENT = "underconfident"


_DEFAULT_GAMMA = {
    Regime.CALIBRATED: 1.0,
    Regime.OVERCONFIDENT: 3.0,
    Regime.UNDERCONFIDENT: 1.0 / 3.0,
}


def near_square_shape(pixels: int) -> tuple[int, int]:
    """Factor a pixel count into the most square (height, width) pair."""
    if pixels < 1:
        raise InvalidSpecError(f"pixel count must be positive, got {pixels}")
    h = math.isqrt(pixels)
    while pixels % h:
        h -= 1
    return h, pixels // h


@dataclass(frozen=True)
class SynthSpec:
    """Complete recipe for one synthetic case; equal specs give equal bits.

    gamma is the distortion exponent: reported probability becomes
    p^g / (p^g + (1-p)^g), which sharpens toward 0/1 for g > 1 and
    flattens toward 0.5 for g < 1. Leave it None to take the regime's
    default (1, 3, or 1/3).
    """

    height: int
    width: int
    k: int = 1
    t: int = 1
    seed: int = 0
    regime: Regime = Regime.CALIBRATED
    noise_scale: float = 0.0
    gamma: float | None = None

    def __post_init__(self) -> None:
        if self.height < 1 or self.width < 1:
            raise InvalidSpecError(
                f"dimensions must be positive, got {self.height}x{self.width}"
            )
        if self.k < 1 or self.t < 1:
            raise InvalidSpecError(f"k and t must be >= 1, got k={self.k} t={self.t}")
        if not 0 <= self.seed < 2**64:
            raise InvalidSpecError(f"seed must fit in 64 unsigned bits, got {self.seed}")
        if not (math.isfinite(self.noise_scale) and self.noise_scale >= 0):
            raise InvalidSpecError(f"noise_scale must be >= 0, got {self.noise_scale}")
        if self.gamma is None:
            object.__setattr__(self, "gamma", _DEFAULT_GAMMA[self.regime])
        g = self.gamma
        if not (math.isfinite(g) and g > 0):
            raise InvalidSpecError(f"gamma must be a positive real, got {g}")
        if self.regime is Regime.CALIBRATED and g != 1.0:
            raise InvalidSpecError(f"calibrated regime requires gamma = 1, got {g}")
        if self.regime is Regime.OVERCONFIDENT and g <= 1.0:
            raise InvalidSpecError(f"overconfident regime requires gamma > 1, got {g}")
        if self.regime is Regime.UNDERCONFIDENT and g >= 1.0:
            raise InvalidSpecError(f"underconfident regime requires gamma < 1, got {g}")

    @classmethod
    def from_pixels(cls, pixels: int, **kwargs) -> "SynthSpec":
        h, w = near_square_shape(pixels)
        return cls(height=h, width=w, **kwargs)

    def to_json_dict(self) -> dict:
        return {
            "schema_version": SYNTH_SCHEMA_VERSION,
            "height": self.height,
            "width": self.width,
            "k": self.k,
            "t": self.t,
            "seed": self.seed,
            "regime": self.regime.value,
            "noise_scale": self.noise_scale,
            "gamma": self.gamma,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "SynthSpec":
        return cls(
            height=int(d["height"]),
            width=int(d["width"]),
            k=int(d["k"]),
            t=int(d["t"]),
            seed=int(d["seed"]),
            regime=Regime(d["regime"]),
            noise_scale=float(d["noise_scale"]),
            gamma=float(d["gamma"]),
        )


def _distort(p: np.ndarray, gamma: float) -> np.ndarray:
    if gamma == 1.0:
        return p
    pg = p**gamma
    qg = (1.0 - p) ** gamma
    return pg / (pg + qg)


def generate(spec: SynthSpec, case_id: str | None = None) -> tuple[SampleStack, BinaryMask]:
    """Produce the (stack, ground-truth mask) pair described by the spec.

    Each of the K*T samples is sigmoid(logit(q) + noise_scale * Z) with q
    the regime-distorted base probability and Z a per-sample standard
    normal. With zero noise all samples equal q bit for bit, so
    disagreement-based uncertainty is exactly zero.
    """
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    h, w = spec.height, spec.width
    n_samples = spec.k * spec.t

    p = rng.random((h, w))
    np.clip(p, _P_EPS, 1.0 - _P_EPS, out=p)
    truth = rng.random((h, w)) < p
    q = _distort(p, spec.gamma)

    if spec.noise_scale == 0.0:
        samples = np.empty((n_samples, h, w), dtype=np.float32)
        samples[:] = q.astype(np.float32)
    else:
        z = rng.standard_normal((n_samples, h, w))
        z *= spec.noise_scale
        z += logit(q)[None, :, :]
        samples = expit(z).astype(np.float32)

    if case_id is None:
        case_id = f"synth-{spec.regime.value}-seed{spec.seed}"
    stack = SampleStack(samples.reshape(spec.k, spec.t, h, w), case_id=case_id)
    return stack, BinaryMask(truth)
