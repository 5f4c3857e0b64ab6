"""Three-node multipeakon with alpha = clamp(x/4, 0, 3/4).

Printed iterates y_n, U_n, V_n of the fixed-point construction, for
n = 2, 3, 4, as functions of (xi, t). X_1 is the initial state and X_5 = X_4.
"""

import numpy as np

TAU = {(-1.0, 1.0): 2.0, (1.0, 3.5): 4.0}
ALPHA_AT_BREAK = {2: (1 / 16, 1 / 4), 3: (1 / 16, 31 / 128), 4: (1 / 16, 31 / 128)}
BREAK_POSITIONS = (1 / 4, 31 / 32)


def _pick(xi, fns):
    xi = np.asarray(xi, dtype=float)
    return np.select([xi <= -1, xi <= 1, xi <= 3.5], [f(xi) for f in fns[:3]], fns[3](xi))


def y0(xi):
    return _pick(xi, [lambda s: s, lambda s: (s - 1) / 2, lambda s: 4 * (s - 1) / 5,
                      lambda s: s - 1.5])


def U0(xi):
    return _pick(xi, [lambda s: 1 + 0 * s, lambda s: -(s - 1) / 2, lambda s: -2 * (s - 1) / 5,
                      lambda s: -1 + 0 * s])


def H0(xi):
    return _pick(xi, [lambda s: 0 * s, lambda s: (s + 1) / 2, lambda s: (s + 4) / 5,
                      lambda s: 1.5 + 0 * s])


def _early(t):
    """y_2 = y_3 = y_4 before the first breaking (all iterates agree there)."""
    return ([lambda s: s + t - 3 * t * t / 16,
             lambda s: (s - 1) / 2 - (s - 1) * t / 2 + (s - 0.5) * t * t / 8,
             lambda s: 4 * (s - 1) / 5 - 2 * (s - 1) * t / 5 + (s + 0.25) * t * t / 20,
             lambda s: s - 1.5 - t + 3 * t * t / 16],
            [lambda s: 1 - 3 * t / 8 + 0 * s,
             lambda s: -(s - 1) / 2 + (s - 0.5) * t / 4,
             lambda s: -2 * (s - 1) / 5 + (s + 0.25) * t / 10,
             lambda s: -1 + 3 * t / 8 + 0 * s])


def iterate(n, xi, t):
    """(y_n, U_n, V_n) at labels xi and time t for n in {2, 3, 4}."""
    xi = np.asarray(xi, dtype=float)
    if n == 2:
        if t < 4:
            ys, Us = _early(t)
            return _pick(xi, ys), _pick(xi, Us), H0(xi)
        d = t - 4
        ys = [lambda s: s + 1 - d / 2 - 11 * d * d / 64,
              lambda s: (s + 1) / 2 + s * d / 2 + (s - 3 / 8) * d * d / 8,
              lambda s: 1 + d / 2 + (37 / 8 + 12 * s - s * s) * d * d / 200,
              lambda s: s - 2.5 + d / 2 + 11 * d * d / 64]
        Us = [lambda s: -0.5 - 11 * d / 32 + 0 * s,
              lambda s: s / 2 + (s - 3 / 8) * d / 4,
              lambda s: 0.5 + (37 / 8 + 12 * s - s * s) * d / 100,
              lambda s: 0.5 + 11 * d / 32 + 0 * s]
        Vs = [lambda s: 0 * s, lambda s: (s + 1) / 2, lambda s: (39 + 12 * s - s * s) / 50,
              lambda s: 11 / 8 + 0 * s]
        return _pick(xi, ys), _pick(xi, Us), _pick(xi, Vs)
    if t < 2:
        ys, Us = _early(t)
        return _pick(xi, ys), _pick(xi, Us), H0(xi)
    if t < 4:
        d = t - 2
        ys = [lambda s: s + 5 / 4 + d / 4 - 23 * d * d / 128,
              lambda s: 1 / 4 + d / 4 + (15 * s - 8) * d * d / 128,
              lambda s: (s + 1 / 4) / 5 - (s - 9 / 4) * d / 5 + (s + 3 / 32) * d * d / 20,
              lambda s: s - 11 / 4 - d / 4 + 23 * d * d / 128]
        Us = [lambda s: 1 / 4 - 23 * d / 64 + 0 * s,
              lambda s: 1 / 4 + (15 * s / 8 - 1) * d / 8,
              lambda s: -(s - 9 / 4) / 5 + (s + 3 / 32) * d / 10,
              lambda s: -1 / 4 + 23 * d / 64 + 0 * s]
        Vs = [lambda s: 0 * s, lambda s: 15 * (s + 1) / 32, lambda s: s / 5 + 59 / 80,
              lambda s: 23 / 16 + 0 * s]
        return _pick(xi, ys), _pick(xi, Us), _pick(xi, Vs)
    d = t - 4
    if n == 3:
        ys = [lambda s: s + 33 / 32 - 15 * d / 32 - 21 * d * d / 128,
              lambda s: 15 * s / 32 + 1 / 2 + 15 * s * d / 32 + (15 * s - 6) * d * d / 128,
              lambda s: 31 / 32 + 15 * d / 32 + 3 * (s + 7 / 8) * d * d / 80,
              lambda s: s - 81 / 32 + 15 * d / 32 + 21 * d * d / 128]
        Us = [lambda s: -15 / 32 - 21 * d / 64 + 0 * s,
              lambda s: 15 * s / 32 + (15 * s - 6) * d / 64,
              lambda s: 15 / 32 + 3 * (s + 7 / 8) * d / 40,
              lambda s: 15 / 32 + 21 * d / 64 + 0 * s]
        Vs = [lambda s: 0 * s, lambda s: 15 * (s + 1) / 32, lambda s: 3 * (s + 21 / 4) / 20,
              lambda s: 21 / 16 + 0 * s]
    else:
        ys = [lambda s: s + 33 / 32 - 15 * d / 32 - 337 * d * d / 2048,
              lambda s: 15 * s / 32 + 1 / 2 + 15 * s * d / 32 + (240 * s - 97) * d * d / 2048,
              lambda s: 31 / 32 + 15 * d / 32 + (388 * s + 327) * d * d / 10240,
              lambda s: s - 81 / 32 + 15 * d / 32 + 337 * d * d / 2048]
        Us = [lambda s: -15 / 32 - 337 * d / 1024 + 0 * s,
              lambda s: 15 * s / 32 + (240 * s - 97) * d / 1024,
              lambda s: 15 / 32 + (388 * s + 327) * d / 5120,
              lambda s: 15 / 32 + 337 * d / 1024 + 0 * s]
        Vs = [lambda s: 0 * s, lambda s: 15 * (s + 1) / 32, lambda s: (97 * s + 503) / 640,
              lambda s: 337 / 256 + 0 * s]
    return _pick(xi, ys), _pick(xi, Us), _pick(xi, Vs)


def solution(xi, t):
    """The limit of the iteration, X_4."""
    return iterate(4, xi, t)
