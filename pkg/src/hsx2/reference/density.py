"""Velocity ramp meeting a unit density block; smooth solution for t < 2."""

import numpy as np

ENERGY = 2.0


def u(x, t):
    x = np.asarray(x, dtype=float)
    a = -(1 - t / 2) ** 2
    b = t * t / 4 + 1
    return np.select([x <= a, x <= 0, x <= b],
                     [1 - t / 2 + 0 * x, -x / (1 - t / 2), t * x / (t * t / 2 + 2)],
                     t / 2 + 0 * x)


def rho(x, t):
    x = np.asarray(x, dtype=float)
    b = t * t / 4 + 1
    return np.where((x > 0) & (x <= b), 1 / b, 0.0)
