"""Hat-shaped velocity, alpha(x) = x^2/(x^2+1); single breaking at (x, t) = (2, 2)."""

import numpy as np

ALPHA_AT_BREAK = 4.0 / 5.0
BREAK_TIME = 2.0
BREAK_POSITION = 2.0
MU_ATOM = 1.0 / 5.0
NU_ATOM = 1.0


def _pick(xi, pieces):
    xi = np.asarray(xi, dtype=float)
    out = np.empty_like(xi)
    for lo, hi, fn in pieces:
        m = (xi >= lo) & (xi <= hi)
        out[m] = fn(xi[m])
    return out


def y(xi, t):
    if t < 2:
        return _pick(xi, [
            (-np.inf, -1, lambda s: s - t * t / 4),
            (-1, 1, lambda s: (s - 1) / 2 + (s + 1) * t / 2 + (s - 1) * t * t / 8),
            (1, 3, lambda s: (s - 1) / 2 - (s - 3) * t / 2 + (s - 1) * t * t / 8),
            (3, np.inf, lambda s: s - 2 + t * t / 4)])
    return _pick(xi, [
        (-np.inf, -1, lambda s: -3 * t * t / 20 - 2 * t / 5 + s + 2 / 5),
        (-1, 1, lambda s: (s - 0.2) / 2 + (s + 0.2) * t / 2 + (s - 0.2) * t * t / 8),
        (1, 3, lambda s: (s + 3) / 10 - (s - 7) * t / 10 + (s + 3) * t * t / 40),
        (3, np.inf, lambda s: 3 * t * t / 20 + 2 * t / 5 + s - 12 / 5)])


def U(xi, t):
    if t < 2:
        # the middle-right piece is -(xi-3)/2 + (xi-1)t/4, matching U(., 0) and U(., 2)
        return _pick(xi, [
            (-np.inf, -1, lambda s: -t / 2 + 0 * s),
            (-1, 1, lambda s: (s + 1) / 2 + (s - 1) * t / 4),
            (1, 3, lambda s: -(s - 3) / 2 + (s - 1) * t / 4),
            (3, np.inf, lambda s: t / 2 + 0 * s)])
    return _pick(xi, [
        (-np.inf, -1, lambda s: -3 * t / 10 - 2 / 5 + 0 * s),
        (-1, 1, lambda s: (s + 0.2) / 2 + (s - 0.2) * t / 4),
        (1, 3, lambda s: -(s - 7) / 10 + (s + 3) * t / 20),
        (3, np.inf, lambda s: 3 * t / 10 + 2 / 5 + 0 * s)])


def H(xi):
    return _pick(xi, [(-np.inf, -1, lambda s: 0 * s), (-1, 3, lambda s: (s + 1) / 2),
                      (3, np.inf, lambda s: 2 + 0 * s)])


def V(xi, t):
    if t < 2:
        return H(xi)
    return _pick(xi, [(-np.inf, -1, lambda s: 0 * s), (-1, 1, lambda s: (s + 1) / 2),
                      (1, 3, lambda s: (s + 9) / 10), (3, np.inf, lambda s: 1.2 + 0 * s)])


def v_inf(t):
    return 2.0 if t < 2 else 1.2


def u(x, t):
    x = np.asarray(x, dtype=float)
    if t < 2:
        a, b, c = -t * t / 4 - 1, t, t * t / 4 + 1
        return np.select([x <= a, x <= b, x <= c],
                         [-t / 2 + 0 * x, (x - t / 2 + 1) / (1 + t / 2),
                          (-x + t / 2 + 1) / (1 - t / 2)], t / 2 + 0 * x)
    a = -3 * t * t / 20 - 2 * t / 5 - 3 / 5
    b = t * t / 10 + 3 * t / 5 + 2 / 5
    c = 3 * t * t / 20 + 2 * t / 5 + 3 / 5
    with np.errstate(divide="ignore", invalid="ignore"):
        right = (x - t / 2 - 1) / (t / 2 - 1)
    return np.select([x <= a, x <= b, x < c],
                     [-3 * t / 10 - 2 / 5 + 0 * x, (x + (1 - t / 2) / 5) / (1 + t / 2), right],
                     3 * t / 10 + 2 / 5 + 0 * x)


def broken_interval(t):
    """x-interval filled by the labels that broke (t >= 2)."""
    return t * t / 10 + 3 * t / 5 + 2 / 5, 3 * t * t / 20 + 2 * t / 5 + 3 / 5
