"""Piecewise-linear functions, step densities and cumulative measures.

Everything in the solver is built on three small immutable value types:

* :class:`PiecewiseLinear` -- continuous, linear between knots, constant
  beyond the first and last knot.
* :class:`StepFunction` -- a piecewise-constant density with compact support.
* :class:`CumulativeMeasure` -- a finite positive measure stored as the
  cumulative function of its absolutely continuous part plus a list of atoms.

All integrals and norms are evaluated in closed form per cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

ATOM_TOL = 1e-12
"""Positions closer than this are merged into one atom."""


def _as_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite value")
    return arr


@dataclass(frozen=True, eq=False)
class PiecewiseLinear:
    """Continuous piecewise-linear function with constant extension.

    ``left``/``right`` are the values on ``(-inf, xs[0]]`` and
    ``[xs[-1], inf)``. A function without knots is the constant ``left``.
    """

    xs: np.ndarray
    vs: np.ndarray
    left: float
    right: float

    def __init__(self, xs, vs, left=None, right=None):
        xs = _as_array(xs)
        vs = _as_array(vs)
        if xs.shape != vs.shape:
            raise ValueError("knot positions and values differ in length")
        if xs.size > 1 and np.any(np.diff(xs) <= 0):
            raise ValueError("knot positions must be strictly increasing")
        if xs.size == 0:
            if left is None:
                left = 0.0
            if right is None:
                right = left
            if left != right:
                raise ValueError("a function without knots must be constant")
        else:
            if left is None:
                left = vs[0]
            if right is None:
                right = vs[-1]
            if left != vs[0] or right != vs[-1]:
                raise ValueError("extension values must match the end knots")
        if not (np.isfinite(left) and np.isfinite(right)):
            raise ValueError("non-finite extension value")
        xs.setflags(write=False)
        vs.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "vs", vs)
        object.__setattr__(self, "left", float(left))
        object.__setattr__(self, "right", float(right))

    @classmethod
    def constant(cls, c: float) -> "PiecewiseLinear":
        return cls([], [], c, c)

    @classmethod
    def sample(cls, fn: Callable, knots: Sequence[float]) -> "PiecewiseLinear":
        knots = _as_array(knots)
        return cls(knots, np.array([float(fn(x)) for x in knots]))

    def __call__(self, x):
        if self.xs.size == 0:
            return np.full_like(np.asarray(x, dtype=float), self.left) if np.ndim(x) else self.left
        out = np.interp(x, self.xs, self.vs)
        return float(out) if np.ndim(out) == 0 else out

    @property
    def slopes(self) -> np.ndarray:
        if self.xs.size < 2:
            return np.zeros(0)
        return np.diff(self.vs) / np.diff(self.xs)

    def with_knots(self, xs) -> "PiecewiseLinear":
        """Same function with extra knots inserted (exact)."""
        xs = np.union1d(self.xs, _as_array(xs))
        return PiecewiseLinear(xs, self(xs), self.left, self.right)

    def __sub__(self, other: "PiecewiseLinear") -> "PiecewiseLinear":
        xs = np.union1d(self.xs, other.xs)
        return PiecewiseLinear(xs, self(xs) - other(xs),
                               self.left - other.left, self.right - other.right)

    def __add__(self, other: "PiecewiseLinear") -> "PiecewiseLinear":
        xs = np.union1d(self.xs, other.xs)
        return PiecewiseLinear(xs, self(xs) + other(xs),
                               self.left + other.left, self.right + other.right)

    def to_json(self) -> dict:
        return {"knots": [[float(x), float(v)] for x, v in zip(self.xs, self.vs)],
                "left": self.left, "right": self.right}

    @classmethod
    def from_json(cls, obj: dict) -> "PiecewiseLinear":
        knots = np.array(obj.get("knots", []), dtype=float).reshape(-1, 2)
        return cls(knots[:, 0], knots[:, 1], obj.get("left"), obj.get("right"))


def pl_eval(f: PiecewiseLinear, x):
    return f(x)


def _cell_abs_integral(d0, d1, h):
    """Exact integral of |linear| over cells of width h."""
    d0 = np.asarray(d0, dtype=float)
    d1 = np.asarray(d1, dtype=float)
    same = d0 * d1 >= 0
    a0, a1 = np.abs(d0), np.abs(d1)
    denom = np.where(same, 1.0, a0 + a1)
    crossing = h * (d0 ** 2 + d1 ** 2) / (2 * denom)
    return np.where(same, 0.5 * h * (a0 + a1), crossing)


def _cell_sq_integral(d0, d1, h):
    return h * (d0 * d0 + d0 * d1 + d1 * d1) / 3.0


def linear_norms(xs, d, left: float = 0.0, right: float = 0.0):
    """(sup, L1, L2) of the piecewise-linear function with nodal values ``d``.

    ``left``/``right`` are the constant tails; nonzero tails make the
    integral norms infinite.
    """
    xs = np.asarray(xs, dtype=float)
    d = np.asarray(d, dtype=float)
    sup = float(max(np.max(np.abs(d), initial=0.0), abs(left), abs(right)))
    if xs.size < 2:
        l1 = l2sq = 0.0
    else:
        h = np.diff(xs)
        l1 = float(np.sum(_cell_abs_integral(d[:-1], d[1:], h)))
        l2sq = float(np.sum(_cell_sq_integral(d[:-1], d[1:], h)))
    if left != 0.0 or right != 0.0:
        return sup, np.inf, np.inf
    return sup, l1, float(np.sqrt(max(l2sq, 0.0)))


def pl_norms(f: PiecewiseLinear, g: PiecewiseLinear):
    """Exact (sup, L1, L2) norms of ``f - g``."""
    diff = f - g
    return linear_norms(diff.xs, diff.vs, diff.left, diff.right)


def step_norms(edges, values):
    """(sup, L1, L2) of a piecewise-constant function (zero outside)."""
    edges = np.asarray(edges, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return 0.0, 0.0, 0.0
    h = np.diff(edges)
    return (float(np.max(np.abs(values))), float(np.sum(np.abs(values) * h)),
            float(np.sqrt(np.sum(values ** 2 * h))))


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Piecewise-constant function, zero outside ``[edges[0], edges[-1]]``."""

    edges: np.ndarray
    values: np.ndarray

    def __init__(self, edges, values):
        edges = _as_array(edges)
        values = _as_array(values)
        if values.size and edges.size != values.size + 1:
            raise ValueError("need one more edge than values")
        if edges.size > 1 and np.any(np.diff(edges) <= 0):
            raise ValueError("edges must be strictly increasing")
        if values.size == 0:
            edges = np.zeros(0)
        edges.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "values", values)

    @classmethod
    def zero(cls) -> "StepFunction":
        return cls([], [])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.values.size == 0:
            out = np.zeros_like(x)
        else:
            idx = np.searchsorted(self.edges, x, side="right") - 1
            inside = (idx >= 0) & (idx < self.values.size)
            out = np.where(inside, self.values[np.clip(idx, 0, self.values.size - 1)], 0.0)
        return float(out) if out.ndim == 0 else out

    def cell_values(self, a, b):
        """Value on each interval ``(a[i], b[i])`` (must lie inside one step)."""
        return self(0.5 * (np.asarray(a) + np.asarray(b)))

    def to_json(self) -> dict:
        return {"edges": self.edges.tolist(), "values": self.values.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "StepFunction":
        return cls(obj.get("edges", []), obj.get("values", []))


@dataclass(frozen=True, eq=False)
class CumulativeMeasure:
    """Finite positive measure: continuous cumulative part plus atoms.

    ``ac`` is ``x -> mu_ac((-inf, x))``; ``atom_x``/``atom_w`` hold the
    singular part. ``cdf(x)`` returns ``mu((-inf, x))``.
    """

    ac: PiecewiseLinear
    atom_x: np.ndarray
    atom_w: np.ndarray

    def __init__(self, ac: PiecewiseLinear | None = None, atoms=()):
        if ac is None:
            ac = PiecewiseLinear.constant(0.0)
        if ac.left != 0.0:
            raise ValueError("cumulative function must vanish at -inf")
        if ac.xs.size > 1 and np.any(np.diff(ac.vs) < -1e-14):
            raise ValueError("cumulative function must be nondecreasing")
        atoms = np.array(atoms, dtype=float).reshape(-1, 2)
        order = np.argsort(atoms[:, 0], kind="stable")
        ax, aw = atoms[order, 0], atoms[order, 1]
        if np.any(aw <= 0):
            raise ValueError("atom weights must be positive")
        if ax.size > 1 and np.any(np.diff(ax) <= ATOM_TOL):
            raise ValueError("atoms must be separated")
        ax.setflags(write=False)
        aw.setflags(write=False)
        object.__setattr__(self, "ac", ac)
        object.__setattr__(self, "atom_x", ax)
        object.__setattr__(self, "atom_w", aw)

    @property
    def total(self) -> float:
        return float(self.ac.right + self.atom_w.sum())

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.atom_x.tolist(), self.atom_w.tolist()))

    def atom_at(self, x: float, tol: float = ATOM_TOL) -> float:
        hit = np.abs(self.atom_x - x) <= tol
        return float(self.atom_w[hit].sum())

    def cdf(self, x, inclusive: bool = False):
        """``mu((-inf, x))``, or ``mu((-inf, x])`` when ``inclusive``."""
        x = np.asarray(x, dtype=float)
        side = "right" if inclusive else "left"
        cum = np.concatenate([[0.0], np.cumsum(self.atom_w)])
        out = self.ac(x) + cum[np.searchsorted(self.atom_x, x, side=side)]
        return float(out) if np.ndim(out) == 0 else out

    def knots(self) -> np.ndarray:
        return np.union1d(self.ac.xs, self.atom_x)

    def to_json(self) -> dict:
        return {"cdf": self.ac.to_json(),
                "atoms": [[float(x), float(w)] for x, w in zip(self.atom_x, self.atom_w)]}

    @classmethod
    def from_json(cls, obj: dict) -> "CumulativeMeasure":
        return cls(PiecewiseLinear.from_json(obj["cdf"]), obj.get("atoms", []))

    @classmethod
    def from_density(cls, density: StepFunction, atoms=()) -> "CumulativeMeasure":
        if density.values.size == 0:
            return cls(None, atoms)
        if np.any(density.values < 0):
            raise ValueError("density must be nonnegative")
        cum = np.concatenate([[0.0], np.cumsum(density.values * np.diff(density.edges))])
        return cls(PiecewiseLinear(density.edges, cum), atoms)


def measure_total(m: CumulativeMeasure) -> float:
    return m.total


def measure_difference(a: CumulativeMeasure, b: CumulativeMeasure,
                       position_tol: float = 1e-10) -> float:
    """Largest deviation between two measures.

    The continuous parts are compared on the merged knot set; atoms are
    matched by position within ``position_tol`` so that rounding in an atom
    location does not count as a full atom weight.
    """
    xs = np.union1d(a.knots(), b.knots())
    dev = abs(a.ac.right - b.ac.right)
    if xs.size:
        dev = max(dev, float(np.max(np.abs(a.ac(xs) - b.ac(xs)))))
    for m, other in ((a, b), (b, a)):
        for x, w in zip(m.atom_x, m.atom_w):
            dev = max(dev, abs(other.atom_at(x, position_tol) - w))
    return float(dev)


def measures_equal(a: CumulativeMeasure, b: CumulativeMeasure, tol: float = 1e-12) -> bool:
    """Compare continuous parts on the merged knot set and atoms by position."""
    return measure_difference(a, b, ATOM_TOL) <= tol


def pushforward(masses, y_nodes, flat_tol: float = ATOM_TOL) -> CumulativeMeasure:
    """Push per-cell masses forward along a nondecreasing piecewise-linear map.

    ``masses[i]`` is the integrated density over cell ``i`` whose endpoints
    map to ``y_nodes[i]`` and ``y_nodes[i+1]``. Cells where the map is flat
    (within ``flat_tol``) produce atoms at the flat value.
    """
    masses = _as_array(masses)
    y = _as_array(y_nodes)
    if y.size != masses.size + 1:
        raise ValueError("need one more node than cells")
    if np.any(masses < 0):
        raise ValueError("masses must be nonnegative")
    dy = np.diff(y)
    if np.any(dy < -flat_tol):
        raise ValueError("map must be nondecreasing")
    flat = dy <= flat_tol

    atom_x: list[float] = []
    atom_w: list[float] = []
    kx: list[float] = []
    kv: list[float] = []
    acc = 0.0
    for i in range(masses.size):
        if flat[i]:
            if masses[i] > 0:
                if atom_x and abs(atom_x[-1] - y[i]) <= flat_tol:
                    atom_w[-1] += masses[i]
                else:
                    atom_x.append(float(y[i]))
                    atom_w.append(float(masses[i]))
            continue
        if not kx or y[i] - kx[-1] > flat_tol:
            kx.append(float(y[i]))
            kv.append(acc)
        acc += masses[i]
        kx.append(float(y[i + 1]))
        kv.append(acc)
    # atoms never feed acc, so kv starts at 0 and kx is strictly increasing
    ac = PiecewiseLinear(kx, kv) if kx else PiecewiseLinear.constant(0.0)
    return CumulativeMeasure(ac, list(zip(atom_x, atom_w)))


STRICTLY_BELOW_ONE = "strictly_below_one"
IDENTICALLY_ONE = "identically_one"
INVALID = "invalid"


@dataclass(frozen=True, eq=False)
class AlphaFunction:
    """Dissipation coefficient: piecewise linear, clamped outside its knots."""

    profile: PiecewiseLinear
    lipschitz: float = field(init=False)
    klass: str = field(init=False)

    def __post_init__(self):
        p = self.profile
        vals = np.concatenate([p.vs, [p.left, p.right]])
        if np.any(vals < 0) or np.any(vals > 1):
            raise ValueError("alpha must take values in [0, 1]")
        slopes = p.slopes
        object.__setattr__(self, "lipschitz", float(np.max(np.abs(slopes), initial=0.0)))
        if np.all(vals == 1.0):
            klass = IDENTICALLY_ONE
        elif np.all(vals < 1.0):
            klass = STRICTLY_BELOW_ONE
        else:
            klass = INVALID
        object.__setattr__(self, "klass", klass)

    @classmethod
    def constant(cls, c: float) -> "AlphaFunction":
        return cls(PiecewiseLinear.constant(c))

    @classmethod
    def sampled(cls, fn: Callable, knots: Sequence[float]) -> "AlphaFunction":
        return cls(PiecewiseLinear.sample(fn, knots))

    def __call__(self, x):
        return self.profile(x)

    def cell_average(self, a, b):
        """Mean of alpha over the segment between ``a`` and ``b`` (exact)."""
        a = np.atleast_1d(np.asarray(a, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float))
        out = np.empty(a.size)
        for i, (lo, hi) in enumerate(zip(np.minimum(a, b), np.maximum(a, b))):
            if hi - lo <= ATOM_TOL:
                out[i] = self.profile(0.5 * (lo + hi))
                continue
            inner = self.profile.xs[(self.profile.xs > lo) & (self.profile.xs < hi)]
            pts = np.concatenate([[lo], inner, [hi]])
            vals = self.profile(pts)
            out[i] = np.sum(0.5 * (vals[1:] + vals[:-1]) * np.diff(pts)) / (hi - lo)
        return out

    def to_json(self) -> dict:
        return {"profile": self.profile.to_json()}


def alpha_validate(a: AlphaFunction) -> str:
    """Classify alpha; values outside [0, 1] are rejected at construction."""
    return a.klass


def rational_square(x):
    """x^2 / (x^2 + 1)."""
    x = np.asarray(x, dtype=float)
    return x * x / (x * x + 1.0)


ALPHA_LIBRARY = {"x2_over_1px2": rational_square}
