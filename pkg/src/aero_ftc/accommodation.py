"""Fault accommodation: rescale the LQR command by the estimated effectiveness loss.

The textbook additive accommodation law adds ``gamma_est * u`` back onto the faulty
actuator output, which presumes access to the actuator itself.  Here the
compensation is applied to the command instead, ``u / (1 - gamma_est)``: once
the actuator removes its ``gamma`` share, the realised input is ``u`` whenever
the estimate is exact, which is the outcome the additive law describes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AccommodationConfig:
    enabled: bool = True
    gamma_max: float = 0.95
    activation_threshold: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.gamma_max < 1.0:
            raise ValueError("gamma_max must lie in (0, 1)")
        if not 0.0 <= self.activation_threshold < self.gamma_max:
            raise ValueError("activation_threshold must lie in [0, gamma_max)")

    def clamp(self, gamma_hat) -> np.ndarray:
        return np.clip(np.asarray(gamma_hat, dtype=float), 0.0, self.gamma_max)


def accommodate(u, gamma_hat, cfg: AccommodationConfig = AccommodationConfig()) -> np.ndarray:
    """Compensated command, before saturation.

    ``gamma_hat`` must already be clamped to ``[0, gamma_max]``; channels
    below the activation threshold pass through unchanged.
    """
    u = np.asarray(u, dtype=float)
    if not cfg.enabled:
        return u.copy()
    g = np.asarray(gamma_hat, dtype=float)
    if not ((g >= 0.0) & (g <= cfg.gamma_max)).all():
        raise ValueError(f"gamma_hat must be clamped to [0, {cfg.gamma_max}], got {g.tolist()}")
    gain = 1.0 / (1.0 - g)
    gain[g < cfg.activation_threshold] = 1.0
    return gain * u
