"""Same initial state as the iteration example, alpha jumping between classes.

After the second breaking at t = 4 everything sits at x = 1/2. Normalizing
the Lagrangian state directly and passing through Eulerian coordinates give
different V.
"""

import numpy as np


def s4(xi):
    """(y, U, H, V) at t = 4."""
    xi = np.asarray(xi, dtype=float)
    y = np.select([xi <= -1, xi <= 3.5], [xi + 1.5, 0.5 + 0 * xi], xi - 3)
    H = np.select([xi <= -1, xi <= 1, xi <= 3.5], [0 * xi, (xi + 1) / 2, (xi + 4) / 5],
                  1.5 + 0 * xi)
    V = np.select([xi <= 1, xi <= 3.5], [0 * xi, (xi - 1) / 10], 0.25 + 0 * xi)
    return y, np.zeros_like(xi), H, V


def V_normalized(xi):
    """V of the state normalized to y + H = id."""
    xi = np.asarray(xi, dtype=float)
    return np.select([xi <= 1.5, xi <= 2], [0 * xi, xi / 2 - 0.75], 0.25 + 0 * xi)


def V_roundtrip(xi):
    """V after passing through Eulerian coordinates and back."""
    xi = np.asarray(xi, dtype=float)
    return np.select([xi <= 0.5, xi <= 2], [0 * xi, xi / 6 - 1 / 12], 0.25 + 0 * xi)


def y_normalized(xi):
    xi = np.asarray(xi, dtype=float)
    return np.select([xi <= 0.5, xi <= 2], [xi, 0.5 + 0 * xi], xi - 1.5)


SUP_DIFFERENCE = 1.0 / 6.0
