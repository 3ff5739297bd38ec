"""Capacity primitives and the validated three-node network configuration.

All rates are in bits per channel use (base-2 logarithm) and all powers are
linear, normalised to unit noise variance, so ``h**2 * P`` is an SNR.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """An argument lies outside the domain of a rate formula."""


class ConfigError(ValueError):
    """Base class for rejected network configurations."""


class NonFiniteError(ConfigError):
    pass


class PowerError(ConfigError):
    pass


class OrderingError(ConfigError):
    """Raised when h2**2 < h1**2; relabel the users so user 1 is the stronger one."""


def capacity(x):
    """Return ``0.5 * log2(1 + x)`` for an SNR ``x >= 0``.

    Works elementwise on arrays; scalar in, float out.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"capacity() needs a finite SNR, got {x!r}")
    if np.any(arr < 0):
        raise DomainError(f"capacity() needs a nonnegative SNR, got {x!r}")
    out = 0.5 * np.log2(1.0 + arr)
    return float(out) if out.ndim == 0 else out


def capacity_plus(x):
    """Return ``max(0, 0.5 * log2(1 + x))`` for ``x > -1``."""
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"capacity_plus() needs a finite argument, got {x!r}")
    if np.any(arr <= -1):
        raise DomainError(f"capacity_plus() needs x > -1, got {x!r}")
    out = np.maximum(0.0, 0.5 * np.log2(1.0 + arr))
    return float(out) if out.ndim == 0 else out


# Unchecked array versions for the optimizer hot loops; callers guarantee the domain.
def _c(x):
    return 0.5 * np.log2(1.0 + x)


def _c_plus(x):
    return np.maximum(0.0, 0.5 * np.log2(np.maximum(1.0 + x, 1.0)))


@dataclass(frozen=True)
class NetworkConfig:
    """Channel gains and power budgets of the two-user device-relaying cell.

    ``h2`` links user 1 and the BS, ``h1`` links user 2 and the BS and ``h3``
    is the D2D link between the users. User 1 is the stronger user.
    Build instances through :func:`validate_config`.
    """

    h1: float
    h2: float
    h3: float
    P1: float
    P2: float
    P3: float

    @property
    def gains_squared(self) -> tuple[float, float, float]:
        return self.h1 ** 2, self.h2 ** 2, self.h3 ** 2

    def replace(self, **changes) -> "NetworkConfig":
        fields = dict(h1=self.h1, h2=self.h2, h3=self.h3, P1=self.P1, P2=self.P2, P3=self.P3)
        fields.update(changes)
        return validate_config(**fields)


def validate_config(h1, h2, h3, P1, P2, P3) -> NetworkConfig:
    """Check a candidate configuration and return it as a :class:`NetworkConfig`.

    Raises
    ------
    NonFiniteError
        Any field is NaN or infinite.
    PowerError
        A power budget is negative.
    OrderingError
        ``h2**2 < h1**2``.
    """
    values = dict(h1=h1, h2=h2, h3=h3, P1=P1, P2=P2, P3=P3)
    for name, v in values.items():
        try:
            v = float(v)
        except (TypeError, ValueError):
            raise NonFiniteError(f"{name} must be a real number, got {v!r}") from None
        if not math.isfinite(v):
            raise NonFiniteError(f"{name} must be finite, got {v!r}")
        values[name] = v
    for name in ("P1", "P2", "P3"):
        if values[name] < 0:
            raise PowerError(f"{name} must be nonnegative, got {values[name]!r}")
    if values["h2"] ** 2 < values["h1"] ** 2:
        raise OrderingError(
            f"h2**2 >= h1**2 is required (user 1 is the stronger user); "
            f"got h1={values['h1']!r}, h2={values['h2']!r}; swap the user labels"
        )
    return NetworkConfig(**values)
