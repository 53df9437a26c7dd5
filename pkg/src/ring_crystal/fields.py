"""Uniform ring grids and complex fields sampled on them.

A field lives in one of two frames:

``lab``
    strictly periodic amplitudes; the flux sits in the kinetic operator
    ``(n - alpha)**2 / 2``.
``twisted``
    the flux is gauged out, ``psi = exp(i alpha phi) psi_twisted``, and the
    amplitudes obey ``psi_twisted(phi + 2 pi) = exp(-2 pi i alpha) psi_twisted(phi)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["LAB", "TWISTED", "RingGrid", "WaveField", "FrameError", "gauge_transform"]

LAB = "lab"
TWISTED = "twisted"
_FRAMES = (LAB, TWISTED)


class FrameError(ValueError):
    """An operation was handed a field in the wrong gauge frame."""


@dataclass(frozen=True)
class RingGrid:
    """``n_points`` equispaced nodes ``phi_j = 2 pi j / n_points`` on [0, 2 pi)."""

    n_points: int

    def __post_init__(self):
        n = self.n_points
        if not isinstance(n, (int, np.integer)) or n < 64 or n & (n - 1):
            raise ValueError(f"n_points must be a power of two >= 64, got {n!r}")

    @property
    def spacing(self) -> float:
        return 2.0 * np.pi / self.n_points

    @property
    def nodes(self) -> np.ndarray:
        return self.spacing * np.arange(self.n_points)

    @property
    def modes(self) -> np.ndarray:
        """Integer angular-momentum quantum numbers in FFT order, covering [-N/2, N/2)."""
        return np.fft.fftfreq(self.n_points, d=1.0 / self.n_points)

    def integrate(self, values) -> float:
        """Rectangle rule; spectrally accurate for smooth periodic integrands."""
        return float(np.sum(values).real * self.spacing)


@dataclass
class WaveField:
    """Complex amplitudes on a :class:`RingGrid`.

    ``alpha`` is the flux the field refers to.  In the twisted frame it fixes
    the boundary phase; in the lab frame it is informational only (the
    operator takes its flux from the problem).
    """

    grid: RingGrid
    amplitudes: np.ndarray
    frame: str = LAB
    alpha: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.frame not in _FRAMES:
            raise FrameError(f"unknown frame {self.frame!r}")
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.grid.n_points,):
            raise ValueError("amplitude array does not match the grid")

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        """``integral |psi|^2 dphi``."""
        return self.grid.integrate(self.density)

    def normalized(self) -> "WaveField":
        return WaveField(
            self.grid,
            self.amplitudes / np.sqrt(self.norm()),
            self.frame,
            self.alpha,
            dict(self.meta),
        )

    def copy(self) -> "WaveField":
        return WaveField(self.grid, self.amplitudes.copy(), self.frame, self.alpha, dict(self.meta))

    def require_frame(self, frame: str) -> None:
        if self.frame != frame:
            raise FrameError(f"expected a {frame}-frame field, got {self.frame}")


def gauge_transform(field: WaveField, alpha: float, target_frame: str) -> WaveField:
    """Move a field between the lab and twisted frames.

    ``psi_lab(phi) = exp(i alpha phi) psi_twisted(phi)``.  Pointwise phase
    multiplication, so the norm is untouched.
    """
    if target_frame not in _FRAMES:
        raise FrameError(f"unknown frame {target_frame!r}")
    if field.frame == target_frame:
        raise FrameError(f"field is already in the {target_frame} frame")
    if field.frame == TWISTED and not np.isclose(field.alpha, alpha, rtol=0, atol=1e-15):
        raise FrameError(f"twisted field carries alpha={field.alpha}, asked to untwist with {alpha}")
    sign = 1.0 if target_frame == LAB else -1.0
    phase = np.exp(sign * 1j * alpha * field.grid.nodes)
    return WaveField(field.grid, field.amplitudes * phase, target_frame, alpha, dict(field.meta))
