"""Lagrangian states X = (y, U, H, r, V), membership checks and breaking times.

A state lives on a finite grid ``xi[0] < ... < xi[N]``. The profiles y, U,
H, V are continuous and piecewise linear (node arrays of length N+1) and r is
piecewise constant (one value per cell). Outside the grid, y - id and U are
constant, r = 0, H = V = 0 on the left and H = h_inf, V = v_inf on the right.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .functions import AlphaFunction, IDENTICALLY_ONE, STRICTLY_BELOW_ONE

C_LOWER_MIN = 1e-14
IDENTITY_TOL = 1e-10
TAU_GROUP_TOL = 1e-12
OMEGA_TOL = 1e-12
GRID_MERGE_TOL = 1e-12


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LagrangianState:
    """Piecewise-linear Lagrangian state.

    Parameters
    ----------
    xi : array (N+1,)
        Strictly increasing grid.
    y, U, H, V : array (N+1,)
        Node values.
    r : array (N,)
        Cell values of the density weight.
    diagnostic : bool
        Marks states produced under an out-of-class alpha; the positivity
        bound on ``y_xi + H_xi`` is not enforced for them.
    """

    xi: np.ndarray
    y: np.ndarray
    U: np.ndarray
    H: np.ndarray
    V: np.ndarray
    r: np.ndarray
    diagnostic: bool = False

    def __post_init__(self):
        for name in ("xi", "y", "U", "H", "V", "r"):
            arr = _frozen(getattr(self, name))
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite entries in {name}")
            object.__setattr__(self, name, arr)
        n = self.xi.size
        if n < 2:
            raise ValueError("grid needs at least two nodes")
        if np.any(np.diff(self.xi) <= 0):
            raise ValueError("grid must be strictly increasing")
        for name in ("y", "U", "H", "V"):
            if getattr(self, name).size != n:
                raise ValueError(f"{name} must have one value per node")
        if self.r.size != n - 1:
            raise ValueError("r must have one value per cell")
        if self.H[0] != 0.0 or self.V[0] != 0.0:
            raise ValueError("H and V must vanish at the left end of the grid")
        if not self.diagnostic and self.c_lower <= C_LOWER_MIN:
            raise ValueError(f"y_xi + H_xi bounded below by {self.c_lower:g}")

    # derived cell quantities
    @cached_property
    def dxi(self) -> np.ndarray:
        return np.diff(self.xi)

    @cached_property
    def y_xi(self) -> np.ndarray:
        return np.diff(self.y) / self.dxi

    @cached_property
    def U_xi(self) -> np.ndarray:
        return np.diff(self.U) / self.dxi

    @cached_property
    def H_xi(self) -> np.ndarray:
        return np.diff(self.H) / self.dxi

    @cached_property
    def V_xi(self) -> np.ndarray:
        return np.diff(self.V) / self.dxi

    @property
    def h_inf(self) -> float:
        return float(self.H[-1])

    @property
    def v_inf(self) -> float:
        return float(self.V[-1])

    @cached_property
    def c_lower(self) -> float:
        # tail cells have y_xi + H_xi = 1
        return float(min(1.0, np.min(self.y_xi + self.H_xi)))

    @property
    def n_cells(self) -> int:
        return self.xi.size - 1

    @property
    def left_shift(self) -> float:
        """Constant value of y - id left of the grid."""
        return float(self.y[0] - self.xi[0])

    @property
    def right_shift(self) -> float:
        return float(self.y[-1] - self.xi[-1])

    def Z(self):
        """Derivative data (y_xi, U_xi, H_xi, r) per cell."""
        return self.y_xi, self.U_xi, self.H_xi, self.r

    # evaluation off the grid
    def nodes_at(self, s) -> dict:
        """Values of y, U, H, V at arbitrary labels, using the tails."""
        s = np.asarray(s, dtype=float)
        y = np.interp(s, self.xi, self.y)
        y = np.where(s < self.xi[0], s + self.left_shift, y)
        y = np.where(s > self.xi[-1], s + self.right_shift, y)
        return {"y": y,
                "U": np.interp(s, self.xi, self.U),
                "H": np.interp(s, self.xi, self.H),
                "V": np.interp(s, self.xi, self.V)}

    def r_at(self, s) -> np.ndarray:
        """Cell value of r at labels strictly inside cells (0 in the tails)."""
        s = np.asarray(s, dtype=float)
        idx = np.searchsorted(self.xi, s, side="right") - 1
        inside = (idx >= 0) & (idx < self.n_cells)
        return np.where(inside, self.r[np.clip(idx, 0, self.n_cells - 1)], 0.0)

    def refine(self, grid) -> "LagrangianState":
        """The same state on a grid containing ``grid`` and the current one.

        Exact: profiles are piecewise linear on the old grid and the tails
        are linear too, so inserting nodes changes nothing.
        """
        xi = np.union1d(self.xi, np.asarray(grid, dtype=float))
        if xi.size == self.xi.size:
            return self
        return self.resample(xi)

    def resample(self, xi) -> "LagrangianState":
        """The state sampled on the grid ``xi``.

        Exact when ``xi`` contains the current nodes; otherwise each dropped
        node is replaced by interpolation between its neighbours.
        """
        xi = np.asarray(xi, dtype=float)
        vals = self.nodes_at(xi)
        mids = 0.5 * (xi[1:] + xi[:-1])
        return LagrangianState(xi, vals["y"], vals["U"], vals["H"], vals["V"],
                               self.r_at(mids), self.diagnostic)

    def replace(self, **kw) -> "LagrangianState":
        fields_ = {k: getattr(self, k) for k in ("xi", "y", "U", "H", "V", "r", "diagnostic")}
        fields_.update(kw)
        return LagrangianState(**fields_)

    def to_json(self) -> dict:
        return {"xi": self.xi.tolist(), "y": self.y.tolist(), "U": self.U.tolist(),
                "H": self.H.tolist(), "r": self.r.tolist(), "V": self.V.tolist(),
                "h_inf": self.h_inf, "v_inf": self.v_inf}

    @classmethod
    def from_json(cls, obj: dict, diagnostic: bool = False) -> "LagrangianState":
        return cls(obj["xi"], obj["y"], obj["U"], obj["H"], obj["V"], obj["r"], diagnostic)

    @classmethod
    def identity(cls, a: float = 0.0, b: float = 1.0) -> "LagrangianState":
        xi = np.array([a, b])
        z = np.zeros(2)
        return cls(xi, xi.copy(), z, z, z, np.zeros(1))


def merged_grid(*grids, tol: float = GRID_MERGE_TOL) -> np.ndarray:
    """Union of grids with nodes closer than ``tol`` (relative) merged."""
    grid = np.unique(np.concatenate([np.asarray(g, dtype=float) for g in grids]))
    keep = np.ones(grid.size, bool)
    last = grid[0]
    for i in range(1, grid.size):
        if grid[i] - last <= tol * (1.0 + abs(grid[i])):
            keep[i] = False
        else:
            last = grid[i]
    return grid[keep]


def common_grid(X: LagrangianState, Xb: LagrangianState):
    """Both states sampled on the merged union of their grids.

    Nodes that differ only by rounding are merged so that no sliver cells
    appear; the merged node moves by at most ``GRID_MERGE_TOL``.
    """
    grid = merged_grid(X.xi, Xb.xi)
    return X.resample(grid), Xb.resample(grid)


def max_node_difference(X: LagrangianState, Xb: LagrangianState) -> float:
    """Largest nodal deviation of y, U, H, V (merged grid) and of r per cell."""
    A, B = common_grid(X, Xb)
    diffs = [np.max(np.abs(getattr(A, k) - getattr(B, k))) for k in ("y", "U", "H", "V", "r")]
    tails = [abs(A.left_shift - B.left_shift), abs(A.right_shift - B.right_shift)]
    return float(max(diffs + tails))


@dataclass
class FAlphaReport:
    """Outcome of the membership check; ``violations`` maps label to first cell."""

    passed: bool
    violations: dict = field(default_factory=dict)

    def __bool__(self):
        return self.passed


def check_F_alpha(X: LagrangianState, a: AlphaFunction, tol: float = IDENTITY_TOL) -> FAlphaReport:
    """Check the defining conditions of the Lagrangian state set cell by cell.

    Labels: ``i`` regularity/asymptotics, ``ii`` signs and positivity,
    ``iii`` the identity y_xi V_xi = U_xi^2 + r^2, ``iv`` 0 <= V_xi <= H_xi,
    ``v``/``vi`` the alpha-class dependent ratio constraints.
    """
    yx, Ux, Hx, Vx, r = X.y_xi, X.U_xi, X.H_xi, X.V_xi, X.r
    bad: dict[str, np.ndarray] = {}

    scale = 1.0 + np.abs(yx * Vx) + Ux ** 2 + r ** 2
    bad["i"] = np.zeros(X.n_cells, bool)
    bad["ii"] = (yx < -tol) | (Hx < -tol) | (yx + Hx <= C_LOWER_MIN)
    bad["iii"] = np.abs(yx * Vx - Ux ** 2 - r ** 2) > tol * scale
    bad["iv"] = (Vx < -tol) | (Vx > Hx + tol * (1.0 + np.abs(Hx)))
    if a.klass == STRICTLY_BELOW_ONE:
        must_equal = (Ux < -tol) | (np.abs(r) > tol)
        bad["v"] = ((Hx > tol) & (Vx <= 0.0)) | (must_equal & (np.abs(Vx - Hx) > tol))
    elif a.klass == IDENTICALLY_ONE:
        flat = yx <= tol
        bad["vi"] = (flat & (np.abs(Vx) > tol)) | (~flat & (np.abs(Vx - Hx) > tol))

    violations = {k: int(np.flatnonzero(v)[0]) for k, v in bad.items() if np.any(v)}
    return FAlphaReport(not violations, violations)


def check_F_i(X: LagrangianState) -> bool:
    """True iff V = H at every node."""
    return bool(np.array_equal(X.V, X.H))


def check_F_0(X: LagrangianState, tol: float = 0.0) -> bool:
    """True iff y + H = id at every node (to ``tol``) and the tails agree."""
    return bool(np.max(np.abs(X.y + X.H - X.xi)) <= tol and abs(X.left_shift) <= tol)


@dataclass
class BreakingSchedule:
    """Per-cell breaking times and, once evolved, the positions of breaking."""

    tau: np.ndarray
    widths: np.ndarray
    batches: list = field(default_factory=list)
    break_position: np.ndarray | None = None

    @property
    def finite(self) -> np.ndarray:
        return np.isfinite(self.tau)


class CorruptStateError(ValueError):
    pass


def compute_tau(X0: LagrangianState, group_tol: float = TAU_GROUP_TOL) -> BreakingSchedule:
    """Breaking time per cell and the event batches of equal times."""
    yx, Ux, Hx, r = X0.y_xi, X0.U_xi, X0.H_xi, X0.r
    tau = np.full(X0.n_cells, np.inf)
    flat = yx == 0.0
    tau[flat] = 0.0
    compress = ~flat & (r == 0.0) & (Ux < 0.0)
    if np.any(compress & (Hx <= 0.0)):
        i = int(np.flatnonzero(compress & (Hx <= 0.0))[0])
        raise CorruptStateError(f"cell {i}: U_xi < 0 with r = 0 and H_xi = 0")
    tau[compress] = -2.0 * Ux[compress] / Hx[compress]

    batches = []
    idx = np.flatnonzero(np.isfinite(tau))
    order = idx[np.argsort(tau[idx], kind="stable")]
    for i in order:
        if batches and tau[i] - batches[-1][0] <= group_tol:
            batches[-1][1].append(int(i))
        else:
            batches.append((float(tau[i]), [int(i)]))
    batches = [(t, np.array(sorted(cells))) for t, cells in batches]
    return BreakingSchedule(tau, X0.dxi.copy(), batches)


def tau_alternative(X0: LagrangianState) -> np.ndarray:
    """The breaking time written as -2 y_xi / U_xi (finite cells only)."""
    out = np.full(X0.n_cells, np.inf)
    mask = (X0.r == 0.0) & (X0.U_xi < 0.0)
    out[mask] = -2.0 * X0.y_xi[mask] / X0.U_xi[mask]
    return out


def classify_omega(X: LagrangianState, tol: float = OMEGA_TOL) -> np.ndarray:
    """Per-cell label: 'd' where U_xi < 0 and r = 0, else 'c'.

    ``tol`` absorbs rounding in U_xi for cells that have just broken.
    """
    d = (X.U_xi < -tol) & (X.r == 0.0)
    return np.where(d, "d", "c")


def broken_measure(sched: BreakingSchedule, t: float) -> float:
    """Total width of cells with tau <= t."""
    return float(np.sum(sched.widths[sched.tau <= t]))
