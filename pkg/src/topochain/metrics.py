"""Phase arithmetic and transfer-quality metrics.

All angles are radians reported in (-pi, pi].  Comparisons always use the
circular distance d(a, b) = |arg e^{i(a-b)}| so the branch cut at +/-pi
never matters.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError

# The four phases a bond-disordered chiral chain can accumulate, as exact
# multiples of pi/2.
Z4_PHASES = (0.0, 0.5 * np.pi, np.pi, -0.5 * np.pi)

Z4_LABELS = {0.0: "0", 0.5 * np.pi: "pi/2", np.pi: "pi", -0.5 * np.pi: "-pi/2"}

#: Tolerance ceiling for z4 classification; pi/4 is the half inter-class gap.
Z4_MAX_TOLERANCE = 0.25 * np.pi


def wrap_phase(phi):
    """Reduce an angle (or array of angles) to the interval (-pi, pi]."""
    w = np.remainder(np.asarray(phi, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    w = np.where(w == -np.pi, np.pi, w)
    if np.ndim(phi) == 0:
        return float(w)
    return w


def circular_distance(a, b):
    """|arg e^{i(a-b)}| -- metric on the circle, range [0, pi]."""
    d = wrap_phase(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
    return np.abs(d)


def z4_classify(gamma: float, tolerance: float = 0.15):
    """Snap a phase to the nearest element of {0, +pi/2, pi, -pi/2}.

    Returns the group element (an exact multiple of pi/2) when its circular
    distance to ``gamma`` is below ``tolerance``, otherwise None.
    ``tolerance`` must lie in (0, pi/4) so classes cannot overlap.
    """
    if not 0.0 < tolerance < Z4_MAX_TOLERANCE:
        raise ValueError(f"tolerance must be in (0, pi/4), got {tolerance}")
    dists = [circular_distance(gamma, el) for el in Z4_PHASES]
    best = int(np.argmin(dists))
    if dists[best] < tolerance:
        return Z4_PHASES[best]
    return None


def z4_label(element) -> str:
    """Human-readable label for a z4 element (None -> 'unclassified')."""
    if element is None:
        return "unclassified"
    return Z4_LABELS[element]


def average_fidelity(amplitude: complex) -> float:
    """Bloch-sphere-averaged transfer fidelity of a transition amplitude.

    F = 1/2 + |A|^2/6 + |A| cos(arg A)/3.  Perfect transfer (A = 1) gives 1;
    a dead channel (A = 0) gives the classical 1/2; full magnitude with a
    quadrature phase gives the classical threshold 2/3.
    """
    a = complex(amplitude)
    mag = abs(a)
    if mag > 1.0 + 1e-10:
        raise ConfigurationError(f"|A| = {mag} exceeds 1 beyond tolerance")
    return 0.5 + mag**2 / 6.0 + mag * np.cos(np.angle(a)) / 3.0
