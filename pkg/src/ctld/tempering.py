"""Temperature scaling g(alpha), its derivative and the confining force well."""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class TemperingConfig:
    """Shape of the temperature scaling function and the confining well.

    ``delta`` is the half-width of the inner plateau where g = 1,
    ``delta_prime`` the outer boundary beyond which g = 1 - s, and ``c`` the
    magnitude of the confining force outside ``[-delta_prime, delta_prime]``.
    """

    delta: float = 0.4
    delta_prime: float = 1.5
    s: float = 0.85
    c: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.delta < self.delta_prime):
            raise ValueError(
                f"need 0 < delta < delta_prime, got delta={self.delta}, "
                f"delta_prime={self.delta_prime}"
            )
        if not (0.0 < self.s < 1.0):
            raise ValueError(f"s must lie in (0, 1), got {self.s}")
        if not (self.c > 0.0):
            raise ValueError(f"c must be positive, got {self.c}")

    @property
    def max_noise_magnitude(self) -> float:
        return 1.0 / (1.0 - self.s)


def g_alpha(alpha: float, cfg: TemperingConfig) -> float:
    a = abs(alpha)
    if a <= cfg.delta:
        return 1.0
    if a >= cfg.delta_prime:
        return 1.0 - cfg.s
    z = (a - cfg.delta) / (cfg.delta_prime - cfg.delta)
    return 1.0 - cfg.s * (3.0 * z * z - 2.0 * z * z * z)


def dg_dalpha(alpha: float, cfg: TemperingConfig) -> float:
    """Exact derivative of :func:`g_alpha`; zero on both plateaus."""
    a = abs(alpha)
    if a <= cfg.delta or a >= cfg.delta_prime:
        return 0.0
    width = cfg.delta_prime - cfg.delta
    z = (a - cfg.delta) / width
    return -math.copysign(1.0, alpha) * cfg.s * (6.0 * z - 6.0 * z * z) / width


def confining_force(alpha: float, cfg: TemperingConfig) -> float:
    """Gradient of the confining potential.

    Signed so that the restoring term ``-confining_force`` always points back
    toward the origin once ``|alpha| > delta_prime``.
    """
    if abs(alpha) <= cfg.delta_prime:
        return 0.0
    return math.copysign(cfg.c, alpha)


def noise_magnitude(alpha: float, cfg: TemperingConfig) -> float:
    """Inverse scaling ``1 / g(alpha)``, in ``[1, 1 / (1 - s)]``."""
    return 1.0 / g_alpha(alpha, cfg)
