"""Conversions between transfer efficiency, power gain and bistatic RCS."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import RisoptError
from .network import pte  # noqa: F401  (single PTE formula, re-exported)

FOUR_PI = 4.0 * math.pi


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


def linear_to_db(x):
    if x == 0.0:
        return -math.inf
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class LinkBudget:
    """Link-budget quantities shared by both hops (symmetric distances)."""

    gain_tx: float
    gain_rx: float
    distance: float
    wavelength: float

    def __post_init__(self):
        if min(self.gain_tx, self.gain_rx, self.distance, self.wavelength) <= 0:
            raise RisoptError("link-budget quantities must be positive")

    @property
    def l_fs(self):
        """Free-space loss (4 pi d / lambda)^2, linear."""
        return (FOUR_PI * self.distance / self.wavelength) ** 2

    @classmethod
    def from_geometry(cls, geometry):
        return cls(
            gain_tx=db_to_linear(geometry.gain_tx_dbi),
            gain_rx=db_to_linear(geometry.gain_rx_dbi),
            distance=geometry.distance,
            wavelength=geometry.wavelength,
        )


def brcs_from_pte(eta, budget: LinkBudget):
    """Bistatic RCS realizing the given efficiency; returns (m^2, dBsm).

    Inverts the power-gain identity g = G_tx G_rx sigma / (L_FS 4 pi d^2);
    zero efficiency maps to the -inf dBsm sentinel.
    """
    if not 0.0 <= eta <= 1.0:
        raise RisoptError(f"efficiency {eta} outside [0, 1]")
    sigma = eta * budget.l_fs * FOUR_PI * budget.distance**2 / (budget.gain_tx * budget.gain_rx)
    return sigma, linear_to_db(sigma)


def pte_from_brcs(sigma, budget: LinkBudget):
    """Inverse of :func:`brcs_from_pte` (exact on the m^2 value)."""
    if sigma < 0.0:
        raise RisoptError("radar cross section must be non-negative")
    return sigma * budget.gain_tx * budget.gain_rx / (budget.l_fs * FOUR_PI * budget.distance**2)


def flat_plate_rcs(side, wavelength):
    """Broadside physical-optics RCS of a square PEC plate, in dBsm."""
    if side <= 0 or wavelength <= 0:
        raise RisoptError("plate side and wavelength must be positive")
    area = side * side
    return linear_to_db(FOUR_PI * area**2 / wavelength**2)
