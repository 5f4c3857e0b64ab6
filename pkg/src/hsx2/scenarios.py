"""Built-in initial data and a random generator of multipeakon data.

Multipeakon data here means piecewise-linear u with piecewise-constant rho,
nu = mu = (u_x^2 + rho^2) dx plus optional atoms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .functions import AlphaFunction, PiecewiseLinear, StepFunction, rational_square
from .lagrangian import LagrangianState
from .maps import EulerianState, L_map, admissible_data

RATIONAL_KNOTS = np.arange(-64, 65) / 8.0
"""Sampling grid for x^2/(x^2+1): dyadic, so x = 2 is a knot exactly."""


@dataclass
class Golden:
    name: str
    eulerian: EulerianState | None
    lagrangian: LagrangianState
    alpha: AlphaFunction
    times: tuple
    allow_invalid: bool = False


def hat(eps: float | None = None) -> PiecewiseLinear:
    if eps is None:
        return PiecewiseLinear([-1.0, 0.0, 1.0], [0.0, 1.0, 0.0])
    return PiecewiseLinear([-1.0, 0.0, eps], [0.0, 1.0, 1.0 - eps])


def alpha_rational() -> AlphaFunction:
    return AlphaFunction.sampled(rational_square, RATIONAL_KNOTS)


def alpha_ramp() -> AlphaFunction:
    """0 left of 0, x/4 on [0, 3], 3/4 beyond."""
    return AlphaFunction(PiecewiseLinear([0.0, 3.0], [0.0, 0.75]))


def alpha_mixed() -> AlphaFunction:
    """Out-of-class alpha: 1 up to 1/4, down to 1/2 at x = 1/2."""
    return AlphaFunction(PiecewiseLinear([0.25, 0.5], [1.0, 0.5]))


def a1() -> Golden:
    E0 = admissible_data(hat())
    return Golden("a1", E0, L_map(E0), alpha_rational(), (1.0, 2.0, 4.0))


def a2_pair(eps: float = 0.1, alpha: float = 0.5):
    """Two data sets with equal energy distribution, one breaking and one not."""
    u = hat(eps)
    ubar = PiecewiseLinear([-1.0, eps], [-2.0 * eps, 1.0 - eps])
    E0, Eb0 = admissible_data(u), admissible_data(ubar)
    a = AlphaFunction.constant(alpha)
    return (Golden("a2", E0, L_map(E0), a, (1.0, 3.0)),
            Golden("a2bar", Eb0, L_map(Eb0), a, (1.0, 3.0)))


def three_peak_u() -> PiecewiseLinear:
    return PiecewiseLinear([-1.0, 0.0, 2.0], [1.0, 0.0, -1.0])


def a3() -> Golden:
    E0 = admissible_data(three_peak_u())
    return Golden("a3", E0, L_map(E0), alpha_ramp(), (2.0, 4.0, 5.0))


def a4() -> Golden:
    E0 = admissible_data(three_peak_u())
    return Golden("a4", E0, L_map(E0, validate=False), alpha_mixed(), (4.0,), True)


def intro(alpha: float = 0.5) -> Golden:
    u = PiecewiseLinear([-1.0, 0.0], [1.0, 0.0])
    rho = StepFunction([0.0, 1.0], [1.0])
    E0 = admissible_data(u, rho)
    return Golden("intro", E0, L_map(E0), AlphaFunction.constant(alpha), (1.0, 1.9))


def zero() -> Golden:
    E0 = EulerianState.zero()
    return Golden("zero", E0, L_map(E0), AlphaFunction.constant(0.5), (0.0, 1.0, 3.0))


GOLDEN = {"a1": a1, "a3": a3, "a4": a4, "intro": intro, "zero": zero,
          "a2": lambda: a2_pair()[0], "a2bar": lambda: a2_pair()[1]}


def random_alpha(rng: np.random.Generator, kind: str = "below") -> AlphaFunction:
    """Random piecewise-linear alpha strictly below one, or identically one."""
    if kind == "one":
        return AlphaFunction.constant(1.0)
    if kind == "const":
        return AlphaFunction.constant(float(rng.uniform(0.0, 0.95)))
    xs = np.sort(rng.uniform(-4.0, 4.0, size=4))
    return AlphaFunction(PiecewiseLinear(xs, rng.uniform(0.0, 0.9, size=4)))


def random_multipeakon(rng: np.random.Generator, n_cells: int = 8, with_rho: bool = True,
                       with_atoms: bool = False, span: float = 3.0) -> EulerianState:
    """Random admissible data: nu = mu = (u_x^2 + rho^2) dx (+ atoms)."""
    xs = np.sort(rng.uniform(-span, span, size=n_cells + 1))
    while np.min(np.diff(xs)) < 0.05:
        xs = np.sort(rng.uniform(-span, span, size=n_cells + 1))
    u = PiecewiseLinear(xs, rng.uniform(-1.0, 1.0, size=n_cells + 1))
    rho = None
    if with_rho:
        vals = np.where(rng.uniform(size=n_cells) < 0.3, rng.uniform(-1.0, 1.0, size=n_cells), 0.0)
        rho = StepFunction(xs, vals)
    atoms = ()
    if with_atoms:
        k = rng.choice(n_cells + 1, size=2, replace=False)
        atoms = [(float(xs[i]), float(rng.uniform(0.05, 0.5))) for i in sorted(k)]
    return admissible_data(u, rho, atoms)


def random_pair(rng: np.random.Generator, a: AlphaFunction, near: bool = True,
                n_cells: int = 6):
    """Two Lagrangian initial states for the same alpha.

    ``near`` pairs share knots and perturb u and rho by at most 0.05;
    otherwise the two states are drawn independently.
    """
    E = random_multipeakon(rng, n_cells)
    if near:
        du = rng.uniform(-0.05, 0.05, size=E.u.xs.size)
        u = PiecewiseLinear(E.u.xs, E.u.vs + du)
        rho = StepFunction(E.rho.edges, E.rho.values + np.where(E.rho.values != 0.0, du[:-1], 0.0))
        Eb = admissible_data(u, rho)
    else:
        Eb = random_multipeakon(rng, n_cells)
    return L_map(E, a), L_map(Eb, a)
