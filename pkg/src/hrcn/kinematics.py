"""Constant-velocity motion model and the range/bearing measurement pair.

State convention throughout the package: ``[x, vx, y, vy]`` in SI units on a
flat 2-D plane.
"""

import numpy as np


def transition_matrix(dt: float) -> np.ndarray:
    """4x4 constant-velocity transition matrix for a time step dt.

    Negative dt gives the exact backward map (the CV group inverse).
    """
    if not np.isfinite(dt):
        raise ValueError("dt must be finite")
    F = np.eye(4)
    F[0, 1] = dt
    F[2, 3] = dt
    return F


def process_noise_cov(dt: float, intensity: float) -> np.ndarray:
    """Continuous white-noise-acceleration process covariance over dt seconds.

    Per axis the 2x2 block is intensity * [[dt^3/3, dt^2/2], [dt^2/2, dt]],
    lifted block-diagonally to the 4-state layout.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if intensity < 0:
        raise ValueError(f"intensity must be nonnegative, got {intensity}")
    block = intensity * np.array([[dt ** 3 / 3.0, dt ** 2 / 2.0],
                                  [dt ** 2 / 2.0, dt]])
    G = np.zeros((4, 4))
    G[:2, :2] = block
    G[2:, 2:] = block
    return G


def measure(state: np.ndarray, radar_position) -> tuple[float, float]:
    """Range and bearing of a state as seen from a radar position.

    Bearing uses the four-quadrant convention (atan2 of dy, dx), so the
    measurement is well defined everywhere except at the radar itself.
    """
    dx = state[0] - radar_position[0]
    dy = state[2] - radar_position[1]
    r = float(np.hypot(dx, dy))
    if r == 0.0:
        raise ValueError("target coincides with radar position; bearing undefined")
    return r, float(np.arctan2(dy, dx))


def measurement_jacobian(state: np.ndarray, radar_position) -> np.ndarray:
    """2x4 Jacobian of (range, bearing) with respect to the state.

    Velocity columns are exactly zero; the measurement depends on position
    only.
    """
    dx = state[0] - radar_position[0]
    dy = state[2] - radar_position[1]
    r2 = dx * dx + dy * dy
    if r2 == 0.0:
        raise ValueError("zero range; Jacobian undefined")
    r = np.sqrt(r2)
    H = np.zeros((2, 4))
    H[0, 0] = dx / r
    H[0, 2] = dy / r
    H[1, 0] = -dy / r2
    H[1, 2] = dx / r2
    return H
