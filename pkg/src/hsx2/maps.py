"""Eulerian states and the maps between Eulerian and Lagrangian coordinates.

``L_map`` sends (u, rho, nu, mu) to a Lagrangian state with y + H = id,
``M_map`` sends a Lagrangian state back by pushing its densities forward
along y. Relabelings are increasing piecewise-linear homeomorphisms stored
as identity plus a bounded piecewise-linear shift.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .functions import (ATOM_TOL, IDENTICALLY_ONE, STRICTLY_BELOW_ONE, AlphaFunction,
                        CumulativeMeasure, PiecewiseLinear, StepFunction, measure_difference,
                        measures_equal, pushforward)
from .lagrangian import GRID_MERGE_TOL, LagrangianState, merged_grid

U_FLAT_TOL = 1e-14
U_JUMP_TOL = 1e-9
DENSITY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class EulerianState:
    """Eulerian data: velocity u, density rho, energy measures nu >= mu.

    ``rho`` is a piecewise-constant (possibly signed) density.
    """

    u: PiecewiseLinear
    rho: StepFunction
    nu: CumulativeMeasure
    mu: CumulativeMeasure

    def knots(self) -> np.ndarray:
        pts = np.union1d(self.u.xs, self.rho.edges)
        return np.union1d(pts, np.union1d(self.nu.knots(), self.mu.knots()))

    def to_json(self) -> dict:
        return {"u": self.u.to_json(), "rho_density": self.rho.to_json(),
                "nu": self.nu.to_json(), "mu": self.mu.to_json()}

    @classmethod
    def from_json(cls, obj: dict) -> "EulerianState":
        return cls(PiecewiseLinear.from_json(obj["u"]),
                   StepFunction.from_json(obj.get("rho_density", {})),
                   CumulativeMeasure.from_json(obj["nu"]),
                   CumulativeMeasure.from_json(obj["mu"]))

    @classmethod
    def zero(cls) -> "EulerianState":
        return cls(PiecewiseLinear.constant(0.0), StepFunction.zero(),
                   CumulativeMeasure(), CumulativeMeasure())


def energy_density_cdf(u: PiecewiseLinear, rho: StepFunction) -> PiecewiseLinear:
    """Cumulative function of (u_x^2 + rho^2) dx, exact on merged knots."""
    xs = np.union1d(u.xs, rho.edges)
    if xs.size < 2:
        return PiecewiseLinear.constant(0.0)
    h = np.diff(xs)
    mids = 0.5 * (xs[1:] + xs[:-1])
    ux = (u(xs[1:]) - u(xs[:-1])) / h
    dens = ux ** 2 + rho(mids) ** 2
    return PiecewiseLinear(xs, np.concatenate([[0.0], np.cumsum(dens * h)]))


def admissible_data(u: PiecewiseLinear, rho: StepFunction | None = None,
                    atoms=()) -> EulerianState:
    """Eulerian data with nu = mu = (u_x^2 + rho^2) dx + atoms."""
    rho = StepFunction.zero() if rho is None else rho
    m = CumulativeMeasure(energy_density_cdf(u, rho), atoms)
    return EulerianState(u, rho, m, m)


@dataclass
class DAlphaReport:
    passed: bool
    violations: dict = field(default_factory=dict)

    def __bool__(self):
        return self.passed


def _cells(E: EulerianState):
    xs = E.knots()
    if xs.size < 2:
        return xs, np.zeros(0), np.zeros(0), np.zeros(0), np.zeros(0), np.zeros(0)
    h = np.diff(xs)
    mids = 0.5 * (xs[1:] + xs[:-1])
    ux = (E.u(xs[1:]) - E.u(xs[:-1])) / h
    rho = E.rho(mids)
    nu_m = np.diff(E.nu.ac(xs))
    mu_m = np.diff(E.mu.ac(xs))
    return xs, h, ux, rho, nu_m, mu_m


def check_D_alpha(E: EulerianState, a: AlphaFunction | None = None,
                  tol: float = DENSITY_TOL) -> DAlphaReport:
    """Check the Eulerian admissibility conditions on the merged knot cells.

    Labels: ``iii`` mu <= nu, ``iv`` mu_ac density = u_x^2 + rho^2, ``v`` and
    ``vi`` the alpha-class dependent constraints. The value is the first
    offending x position.
    """
    xs, h, ux, rho, nu_m, mu_m = _cells(E)
    viol: dict[str, float] = {}

    def flag(label, mask, where):
        if np.any(mask) and label not in viol:
            viol[label] = float(np.asarray(where)[np.flatnonzero(mask)[0]])

    mids = 0.5 * (xs[1:] + xs[:-1]) if xs.size > 1 else np.zeros(0)
    flag("iii", mu_m > nu_m + tol * (1 + nu_m), mids)
    mu_atoms_bad = [x for x, w in E.mu.atoms if w > E.nu.atom_at(x) + tol]
    flag("iii", np.array([True] * len(mu_atoms_bad)), mu_atoms_bad)
    if E.mu.ac.right > E.nu.ac.right + tol or E.mu.total > E.nu.total + tol:
        viol.setdefault("iii", float("nan"))

    target = ux ** 2 + rho ** 2
    # knots carry rounding of size eps |x|, which moves u_x^2 h by u_x^2 dh;
    # on very short cells this dominates the relative tolerance
    dh = 16 * np.finfo(float).eps * (1.0 + np.abs(xs[:-1]) + np.abs(xs[1:])) if xs.size > 1 else 0.0
    flag("iv", np.abs(mu_m - target * h) > tol * (1 + target) * h + target * dh, mids)

    if a is not None and a.klass == STRICTLY_BELOW_ONE:
        ratio_one = (ux < -tol) | (rho != 0.0)
        flag("v", (nu_m > tol * h) & (mu_m <= 0.0), mids)
        flag("v", ratio_one & (np.abs(mu_m - nu_m) > tol * (1 + nu_m)), mids)
        zero_atoms = [x for x, w in E.nu.atoms if E.mu.atom_at(x) <= 0.0]
        flag("v", np.array([True] * len(zero_atoms)), zero_atoms)
    elif a is not None and a.klass == IDENTICALLY_ONE:
        heavy = E.mu.atom_x[E.mu.atom_w > tol]
        if heavy.size:
            viol.setdefault("vi", float(heavy[0]))
        flag("vi", np.abs(mu_m - nu_m) > tol * (1 + nu_m), mids)
    return DAlphaReport(not viol, viol)


def check_D0(E: EulerianState, tol: float = 1e-12) -> bool:
    """Admissible initial data are exactly those with nu = mu."""
    return measures_equal(E.nu, E.mu, tol)


class InvalidStateError(ValueError):
    pass


def L_map(E: EulerianState, a: AlphaFunction | None = None, validate: bool = True,
          diagnostic: bool = False) -> LagrangianState:
    """Lagrangian representative with y + H = id.

    y is the generalized inverse of x -> x + nu((-inf, x)); it is linear
    between consecutive knots of the data and flat on atoms of nu.
    """
    if validate:
        rep = check_D_alpha(E, a)
        if not rep:
            raise InvalidStateError(f"Eulerian data violate {sorted(rep.violations)}")
    P = E.knots()
    if P.size == 0:
        return LagrangianState.identity()

    nu_ac = E.nu.ac(P)
    atom_w = np.array([E.nu.atom_at(p) for p in P])
    mu_atom_w = np.array([E.mu.atom_at(p) for p in P])
    atoms_before = np.concatenate([[0.0], np.cumsum(atom_w)[:-1]])
    xi_minus = P + nu_ac + atoms_before

    xi, y, vmass, rcell = [], [], [], []
    mu_ac = E.mu.ac(P)
    for k, p in enumerate(P):
        if k > 0:
            # linear cell between P[k-1] and P[k]
            vmass.append(mu_ac[k] - mu_ac[k - 1])
            rcell.append(E.rho(0.5 * (P[k - 1] + p)) * (p - P[k - 1]))
        xi.append(xi_minus[k])
        y.append(p)
        if atom_w[k] > 0:
            vmass.append(mu_atom_w[k])
            rcell.append(0.0)
            xi.append(xi_minus[k] + atom_w[k])
            y.append(p)
    xi = np.array(xi)
    y = np.array(y)
    if xi.size == 1:
        xi = np.array([xi[0], xi[0] + 1.0])
        y = np.array([y[0], y[0] + 1.0])
        vmass, rcell = [0.0], [0.0]
    dxi = np.diff(xi)
    r = np.array(rcell) / dxi
    H = xi - y
    H[0] = 0.0
    # nu = mu means V = H; copying avoids rounding differences between the two sums
    V = H.copy() if check_D0(E) else np.concatenate([[0.0], np.cumsum(vmass)])
    U = E.u(y)
    return LagrangianState(xi, y, U, H, V, r, diagnostic)


def M_map(X: LagrangianState) -> EulerianState:
    """Push the Lagrangian densities forward along y."""
    y, U = X.y, X.U
    dy = np.diff(y)
    if np.any(dy < -ATOM_TOL):
        raise InvalidStateError("y must be nondecreasing")

    ux, uv = [y[0]], [U[0]]
    for i in range(X.n_cells):
        if dy[i] <= U_FLAT_TOL:
            if abs(U[i + 1] - U[i]) > U_JUMP_TOL:
                raise InvalidStateError(f"u multivalued at x={y[i]:.17g} (cell {i})")
            continue
        ux.append(y[i + 1])
        uv.append(U[i + 1])
    u = PiecewiseLinear(ux, uv) if len(ux) > 1 else PiecewiseLinear([ux[0]], [uv[0]])

    rmass = X.r * X.dxi
    edges, vals = [], []
    for i in range(X.n_cells):
        if dy[i] <= ATOM_TOL:
            if abs(rmass[i]) > ATOM_TOL and not X.diagnostic:
                raise InvalidStateError(f"density atom at x={y[i]:.17g} (cell {i})")
            continue
        a, b = y[i], y[i + 1]
        if edges and a - edges[-1] > ATOM_TOL:
            vals.append(0.0)
            edges.append(a)
        if not edges:
            edges.append(a)
        edges.append(b)
        vals.append(rmass[i] / dy[i])
    rho = StepFunction(edges, vals) if vals else StepFunction.zero()

    Hm = np.diff(X.H)
    Vm = np.diff(X.V)
    if np.any(Hm < -ATOM_TOL) or np.any(Vm < -ATOM_TOL):
        raise InvalidStateError("H and V must be nondecreasing")
    nu = pushforward(np.clip(Hm, 0.0, None), y)
    mu = pushforward(np.clip(Vm, 0.0, None), y)
    return EulerianState(u, rho, nu, mu)


def eulerian_difference(A: EulerianState, B: EulerianState) -> dict:
    """Max deviation per field: u, rho, and the nu and mu measures.

    Knots closer than the grid merge tolerance count as one, so rounding in
    a breaking position does not show up as a jump of u or rho.
    """
    ka, kb = A.knots(), B.knots()
    xs = merged_grid(ka, kb) if ka.size + kb.size else np.zeros(0)
    out = {"u": max(abs(A.u.left - B.u.left), abs(A.u.right - B.u.right)), "rho": 0.0}
    if xs.size:
        out["u"] = max(out["u"], float(np.max(np.abs(A.u(xs) - B.u(xs)))))
    if xs.size > 1:
        mids = 0.5 * (xs[1:] + xs[:-1])
        out["rho"] = float(np.max(np.abs(A.rho(mids) - B.rho(mids))))
    out["nu"] = measure_difference(A.nu, B.nu)
    out["mu"] = measure_difference(A.mu, B.mu)
    return out


@dataclass(frozen=True, eq=False)
class Relabeling:
    """Increasing homeomorphism f(s) = s + shift(s) with piecewise-linear shift."""

    shift: PiecewiseLinear

    def __post_init__(self):
        if self.shift.xs.size > 1 and np.any(1.0 + self.shift.slopes <= 0.0):
            raise ValueError("relabeling must be strictly increasing")

    @classmethod
    def identity(cls) -> "Relabeling":
        return cls(PiecewiseLinear.constant(0.0))

    @classmethod
    def from_nodes(cls, xs, fx) -> "Relabeling":
        xs = np.asarray(xs, dtype=float)
        return cls(PiecewiseLinear(xs, np.asarray(fx, dtype=float) - xs))

    @property
    def knots(self) -> np.ndarray:
        return self.shift.xs

    def __call__(self, s):
        return np.asarray(s, dtype=float) + self.shift(s)

    @property
    def min_slope(self) -> float:
        return float(np.min(1.0 + self.shift.slopes, initial=1.0))

    def inverse(self) -> "Relabeling":
        k = self.shift.xs
        if k.size == 0:
            return Relabeling(PiecewiseLinear.constant(-self.shift.left))
        fk = k + self.shift.vs
        return Relabeling(PiecewiseLinear(fk, -self.shift.vs))

    def compose(self, g: "Relabeling") -> "Relabeling":
        """The map s -> self(g(s))."""
        pts = np.union1d(g.knots, g.inverse()(self.knots))
        if pts.size == 0:
            return Relabeling(PiecewiseLinear.constant(self.shift.left + g.shift.left))
        # knots that coincide up to rounding would give sliver cells
        pts = merged_grid(pts)
        return Relabeling.from_nodes(pts, self(g(pts)))


def group_action(X: LagrangianState, f: Relabeling) -> LagrangianState:
    """(y o f, U o f, H o f, (r o f) f_xi, V o f) on the pulled-back grid."""
    if f.min_slope <= 0.0:
        raise ValueError("relabeling must be strictly increasing")
    grid = merged_grid(f.inverse()(X.xi), f.knots)
    fg = f(grid)
    # f(f^-1(xi)) can miss xi by rounding, which would put a node of a flat
    # end cell onto the tail formula; snap such labels back onto the nodes
    j = np.clip(np.searchsorted(X.xi, fg), 1, X.xi.size - 1)
    near = np.where(fg - X.xi[j - 1] < X.xi[j] - fg, X.xi[j - 1], X.xi[j])
    fg = np.where(np.abs(fg - near) <= GRID_MERGE_TOL * (1.0 + np.abs(near)), near, fg)
    vals = X.nodes_at(fg)
    mids = 0.5 * (grid[1:] + grid[:-1])
    fslope = np.diff(fg) / np.diff(grid)
    r = X.r_at(f(mids)) * fslope
    # grid[0] maps left of the support, where H = V = 0 already
    H, V = vals["H"], vals["V"]
    H[0] = V[0] = 0.0
    return LagrangianState(grid, vals["y"], vals["U"], H, V, r, X.diagnostic)


def normalizer(X: LagrangianState) -> Relabeling:
    """The relabeling y + H as an element of the group."""
    return Relabeling.from_nodes(X.xi, X.y + X.H)


def pi_normalize(X: LagrangianState) -> LagrangianState:
    """Representative with y + H = id: X composed with (y + H)^{-1}.

    The new grid is eta = y + H at the old nodes, node values carry over,
    r is rescaled by the slope of the inverse and H is reset to eta - y.
    """
    eta = X.y + X.H
    snap = np.abs(eta - X.xi) <= 1e-14 * (1.0 + np.abs(X.xi))
    eta = np.where(snap, X.xi, eta)
    if np.any(np.diff(eta) <= 0):
        raise ValueError("y + H is not strictly increasing")
    r = X.r * X.dxi / np.diff(eta)
    H = eta - X.y
    H[0] = 0.0
    return LagrangianState(eta, X.y.copy(), X.U.copy(), H, X.V.copy(), r, X.diagnostic)
