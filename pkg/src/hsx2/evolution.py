"""Time evolution of Lagrangian states.

Between wave-breaking events every cell keeps a constant V_xi, so U is
affine and y quadratic in t at each node. Breaking times depend only on the
initial data, which turns the solver into a sequence of closed-form
segments separated by event batches. The Picard mode rebuilds the same
trajectory by fixed-point iteration on the dissipation weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .functions import INVALID, AlphaFunction, PiecewiseLinear
from .lagrangian import (BreakingSchedule, LagrangianState, check_F_alpha, check_F_i,
                         compute_tau)
from .maps import EulerianState, InvalidStateError, L_map, M_map, check_D0

FLAT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Segment:
    """Closed-form motion from ``t0`` until the next segment starts.

    ``static`` segments do not move (used for the first Picard iterate).
    """

    t0: float
    y: np.ndarray
    U: np.ndarray
    V: np.ndarray
    static: bool = False

    @property
    def v_inf(self) -> float:
        return float(self.V[-1])

    @property
    def acc(self) -> np.ndarray:
        if self.static:
            return np.zeros_like(self.V)
        return 0.5 * self.V - 0.25 * self.v_inf

    def evaluate(self, t: float):
        if self.static:
            return self.y.copy(), self.U.copy()
        dt = t - self.t0
        acc = self.acc
        return self.y + self.U * dt + 0.5 * acc * dt * dt, self.U + acc * dt


@dataclass
class Event:
    time: float
    cells: np.ndarray
    break_positions: np.ndarray
    alpha_values: np.ndarray
    energy_removed: float


@dataclass
class EventLog:
    """Wave-breaking events in time order and the resulting v_inf history."""

    events: list = field(default_factory=list)
    v_inf_history: list = field(default_factory=list)

    def v_inf_at(self, t: float) -> float:
        if t == 0.0 or len(self.v_inf_history) == 1:
            return self.v_inf_history[0][1]
        val = self.v_inf_history[0][1]
        for t0, v in self.v_inf_history:
            if t0 <= t:
                val = v
        return val

    def until(self, t: float) -> "EventLog":
        ev = [e for e in self.events if e.time <= t]
        hist = [self.v_inf_history[0]] + [h for h in self.v_inf_history[1:] if h[0] <= t]
        return EventLog(ev, hist)

    def to_json(self) -> dict:
        return {"events": [{"time": e.time, "cells": e.cells.tolist(),
                            "break_positions": e.break_positions.tolist(),
                            "alpha": e.alpha_values.tolist(),
                            "energy_removed": e.energy_removed} for e in self.events],
                "v_inf": [[t, v] for t, v in self.v_inf_history]}


@dataclass
class Trajectory:
    """Piecewise closed-form solution on ``[0, horizon]``.

    ``state_at`` is right-continuous at event times (the dissipated energy is
    already removed at the breaking time itself); ``left_limit`` gives the
    state just before. At t = 0 the initial data are returned even when
    cells break at time zero.
    """

    base: LagrangianState
    segments: list
    horizon: float
    schedule: BreakingSchedule
    log: EventLog

    @property
    def event_times(self) -> list[float]:
        return sorted({e.time for e in self.log.events})

    def _segment(self, t: float, left: bool = False) -> Segment:
        if t < 0:
            raise ValueError("negative time")
        if t > self.horizon * (1 + 1e-14) + 1e-14:
            raise ValueError(f"t={t} beyond the computed horizon {self.horizon}")
        if t == 0.0:
            return self.segments[0]
        seg = self.segments[0]
        for s in self.segments:
            if s.t0 < t or (not left and s.t0 == t):
                seg = s
        return seg

    def _state(self, seg: Segment, t: float) -> LagrangianState:
        y, U = seg.evaluate(t)
        b = self.base
        return LagrangianState(b.xi, y, U, b.H, seg.V, b.r, b.diagnostic)

    def state_at(self, t: float) -> LagrangianState:
        return self._state(self._segment(t), t)

    def left_limit(self, t: float) -> LagrangianState:
        return self._state(self._segment(t, left=True), t)

    def eulerian_at(self, t: float) -> EulerianState:
        return M_map(self.state_at(t))

    def nodes_at(self, t: float):
        """(y, U) node arrays at time t without building a state."""
        return self._segment(t).evaluate(t)


def _snap_flat(y, U, cells):
    for i in cells:
        y[i + 1] = y[i]
        U[i + 1] = U[i]


def _march(base: LagrangianState, start: Segment, batches, weight_rule, horizon: float):
    """Advance segment by segment through the event batches up to ``horizon``.

    ``weight_rule(time, cells, y_nodes)`` returns the dissipated fraction for
    each breaking cell.
    """
    H_mass = np.diff(base.H)
    segments = [start]
    events = []
    seg = start
    for tb, cells in batches:
        if tb > horizon:
            break
        y, U = seg.evaluate(tb)
        left, right = y[cells], y[cells + 1]
        gap = np.abs(right - left)
        if np.any(gap > FLAT_TOL * (1.0 + np.abs(left))):
            i = int(cells[np.argmax(gap)])
            raise InvalidStateError(f"cell {i} not flat at its breaking time {tb:.17g}")
        _snap_flat(y, U, cells)
        positions = y[cells].copy()
        w = np.asarray(weight_rule(tb, cells, y), dtype=float)
        # subtract only the removed mass so V left of the batch is untouched
        removed = np.zeros(base.n_cells)
        removed[cells] = np.diff(seg.V)[cells] - (1.0 - w) * H_mass[cells]
        V = seg.V - np.concatenate([[0.0], np.cumsum(removed)])
        seg = Segment(tb, y, U, V)
        segments.append(seg)
        events.append(Event(tb, cells.copy(), positions, w,
                            float(np.sum(w * H_mass[cells]))))
    return segments, events


def _check_entry(X0: LagrangianState, a: AlphaFunction, allow_invalid: bool) -> LagrangianState:
    if a.klass == INVALID:
        if not allow_invalid:
            raise InvalidStateError("alpha is neither strictly below one nor identically one")
        return X0 if X0.diagnostic else X0.replace(diagnostic=True)
    if not X0.diagnostic:
        rep = check_F_alpha(X0, a)
        if not rep:
            raise InvalidStateError(f"initial state violates {sorted(rep.violations)}")
        if not check_F_i(X0):
            raise InvalidStateError("initial state must satisfy V = H")
    return X0


def _log_from(segments, events) -> EventLog:
    hist = [(segments[0].t0, segments[0].v_inf)] + [(s.t0, s.v_inf) for s in segments[1:]]
    return EventLog(events, hist)


def solve_event_driven(X0: LagrangianState, a: AlphaFunction, horizon: float,
                       allow_invalid: bool = False) -> Trajectory:
    """Exact trajectory on ``[0, horizon]``."""
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    X0 = _check_entry(X0, a, allow_invalid)
    sched = compute_tau(X0)

    def rule(tb, cells, y):
        return a(y[cells])

    start = Segment(0.0, X0.y.copy(), X0.U.copy(), X0.V.copy())
    segments, events = _march(X0, start, sched.batches, rule, horizon)
    sched.break_position = np.full(X0.n_cells, np.nan)
    for e in events:
        sched.break_position[e.cells] = e.break_positions
    return Trajectory(X0, segments, horizon, sched, _log_from(segments, events))


def evolve_event_driven(X0: LagrangianState, a: AlphaFunction, t: float,
                        allow_invalid: bool = False):
    """State at time t and the event log up to t."""
    traj = solve_event_driven(X0, a, t, allow_invalid)
    return traj.state_at(t), traj.log.until(t)


# Picard iteration

@dataclass
class PicardConfig:
    tol: float = 1e-12
    max_iter: int = 50
    window_fraction: float = 0.99


@dataclass
class PicardIterate:
    """One iterate X_n on one contraction window.

    ``beta`` holds the weights used to build this iterate (NaN on cells not
    breaking in the window); ``alpha_at_break`` is alpha at this iterate's
    own y at the breaking time, averaged over each cell.
    """

    n: int
    trajectory: Trajectory
    beta: np.ndarray
    alpha_at_break: np.ndarray
    sup_delta: float


@dataclass
class PicardWindow:
    start: float
    end: float
    iterates: list
    converged: bool

    @property
    def distinct(self) -> int:
        """Number of iterates before the fixed point was reached."""
        return len(self.iterates) - 1 if self.converged else len(self.iterates)


@dataclass
class PicardTrace:
    windows: list
    window_length: float

    @property
    def converged(self) -> bool:
        return all(w.converged for w in self.windows)

    @property
    def last_sup_delta(self) -> float:
        return self.windows[-1].iterates[-1].sup_delta


class PicardNotConverged(RuntimeError):
    pass


def contraction_window(a: AlphaFunction, h_inf: float) -> float:
    """sqrt(8 / (|alpha'| |H_0|)), infinite when either factor vanishes."""
    prod = a.lipschitz * h_inf
    return np.inf if prod <= 0.0 else float(np.sqrt(8.0 / prod))


def _quadratic_sup(d, s, c, length):
    """max over [0, length] of |d + s t + c t^2 / 2| per node."""
    best = np.maximum(np.abs(d), np.abs(d + s * length + 0.5 * c * length ** 2))
    with np.errstate(divide="ignore", invalid="ignore"):
        tv = np.where(c != 0.0, -s / c, -1.0)
    inside = (tv > 0) & (tv < length)
    vert = np.abs(d + s * tv + 0.5 * c * tv ** 2)
    return np.max(np.where(inside, np.maximum(best, vert), best), initial=0.0)


def trajectory_sup_distance(A: Trajectory, B: Trajectory, t0: float, t1: float) -> float:
    """Exact sup over nodes and t in [t0, t1] of |y_A - y_B|."""
    cuts = sorted({t0, t1} | {s.t0 for s in A.segments + B.segments if t0 < s.t0 < t1})
    best = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (lo + hi)
        sa, sb = A._segment(mid), B._segment(mid)
        ya, Ua = sa.evaluate(lo)
        yb, Ub = sb.evaluate(lo)
        best = max(best, _quadratic_sup(ya - yb, Ua * (not sa.static) - Ub * (not sb.static),
                                        sa.acc - sb.acc, hi - lo))
    if t0 == t1:
        ya, _ = A.nodes_at(t0)
        yb, _ = B.nodes_at(t0)
        best = float(np.max(np.abs(ya - yb)))
    return float(best)


def _picard_window(base, a, sched, start: Segment, s, e, cfg):
    """Iterate on [s, e] from the state ``start`` at time s.

    Cells that broke before s keep their weights (already in ``start.V``).
    """
    pending = [(tb, c) for tb, c in sched.batches if s < tb <= e or (s == tb == 0.0)]

    def own_alpha(traj):
        out = np.full(base.n_cells, np.nan)
        for tb, c in pending:
            y, _ = traj.nodes_at(tb)
            out[c] = a.cell_average(y[c], y[c + 1])
        return out

    static = Segment(s, start.y.copy(), start.U.copy(), start.V.copy(), static=True)
    X1 = Trajectory(base, [static], e, sched, _log_from([static], []))
    iterates = [PicardIterate(1, X1, np.full(base.n_cells, np.nan), own_alpha(X1), np.inf)]
    converged = False
    for n in range(2, cfg.max_iter + 1):
        prev = iterates[-1]
        beta = prev.alpha_at_break

        def rule(tb, cells, y, beta=beta):
            return beta[cells]

        segments, events = _march(base, start, pending, rule, e)
        traj = Trajectory(base, segments, e, sched, _log_from(segments, events))
        delta = trajectory_sup_distance(traj, prev.trajectory, s, e)
        iterates.append(PicardIterate(n, traj, beta.copy(), own_alpha(traj), delta))
        if delta < cfg.tol:
            converged = True
            break
    return PicardWindow(s, e, iterates, converged)


def solve_picard(X0: LagrangianState, a: AlphaFunction, horizon: float,
                 cfg: PicardConfig | None = None, allow_invalid: bool = False,
                 window: float | None = None):
    """Trajectory from the fixed-point construction.

    Horizons longer than the contraction window T are covered by windows
    [0, T], [T/2, 3T/2], ...; each restart takes the state at the window
    start as its first iterate. The returned trajectory uses each window on
    its first half (the last window on all of it).
    """
    cfg = cfg or PicardConfig()
    X0 = _check_entry(X0, a, allow_invalid)
    sched = compute_tau(X0)
    T = window if window is not None else cfg.window_fraction * contraction_window(a, X0.h_inf)
    start = Segment(0.0, X0.y.copy(), X0.U.copy(), X0.V.copy())
    windows, segments, events = [], [], []
    s = 0.0
    while True:
        e = min(s + T, horizon)
        win = _picard_window(X0, a, sched, start, s, e, cfg)
        windows.append(win)
        final = win.iterates[-1].trajectory
        if e >= horizon:
            segments.extend(final.segments)
            events.extend(final.log.events)
            break
        s_next = s + 0.5 * T
        segments.extend(seg for seg in final.segments if seg.t0 < s_next)
        events.extend(ev for ev in final.log.events if ev.time <= s_next)
        y, U = final.nodes_at(s_next)
        start = Segment(s_next, y, U, final._segment(s_next).V.copy())
        s = s_next
    traj = Trajectory(X0, segments, horizon, sched, _log_from(segments, events))
    return traj, PicardTrace(windows, T)


def evolve_picard(X0: LagrangianState, a: AlphaFunction, t: float,
                  cfg: PicardConfig | None = None, allow_invalid: bool = False):
    traj, trace = solve_picard(X0, a, t, cfg, allow_invalid)
    if not trace.converged:
        raise PicardNotConverged(f"no fixed point within {(cfg or PicardConfig()).max_iter} "
                                 f"iterations, last sup_delta={trace.last_sup_delta:.3e}")
    return traj.state_at(t), trace


def evolve_eulerian(E0: EulerianState, a: AlphaFunction, t: float,
                    allow_invalid: bool = False) -> EulerianState:
    """M(S_t(L(E0))) for admissible initial data (nu = mu)."""
    if not check_D0(E0):
        raise InvalidStateError("initial Eulerian data need nu = mu")
    X0 = L_map(E0, None if a.klass == INVALID else a, diagnostic=a.klass == INVALID)
    state, _ = evolve_event_driven(X0, a, t, allow_invalid)
    return M_map(state)


def dafermos_formula(u0: PiecewiseLinear, alpha_const: float, x: float, t: float) -> float:
    """u(x, t) for constant alpha, zero density and absolutely continuous energy.

    Uses the labelling y(., 0) = id. Every integral is a finite sum over the
    cells of u0: with m_c the cell energy, tau_c = -2 / u0_x the breaking time
    and (.)_+ the positive part,

        u = u0(xi) + 1/2 sum_c w_c(xi) (t - alpha (t - tau_c)_+)
        x = xi + u0(xi) t + 1/4 sum_c w_c(xi) (t^2 - alpha (t - tau_c)_+^2)

    where w_c(xi) = m_c(xi) - m_c / 2 and m_c(xi) is the energy of the cell
    left of xi. The map xi -> x is piecewise linear, so xi is solved exactly.
    """
    if not 0.0 <= alpha_const <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if t < 0:
        raise ValueError("negative time")
    k = u0.xs
    if k.size < 2:
        return float(u0.left)
    h = np.diff(k)
    slope = u0.slopes
    mass = slope ** 2 * h
    with np.errstate(divide="ignore"):
        tau = np.where(slope < 0, -2.0 / np.where(slope < 0, slope, -1.0), np.inf)
    late = np.where(np.isfinite(tau), np.maximum(t - tau, 0.0), 0.0)
    a1 = t - alpha_const * late
    a2 = t * t - alpha_const * late ** 2

    def partial_mass(xi):
        frac = np.clip((xi - k[:-1]) / h, 0.0, 1.0)
        return mass * frac

    def x_of(xi):
        w = partial_mass(xi) - 0.5 * mass
        return xi + u0(xi) * t + 0.25 * np.sum(w * a2)

    def u_of(xi):
        w = partial_mass(xi) - 0.5 * mass
        return u0(xi) + 0.5 * np.sum(w * a1)

    xs = np.array([x_of(z) for z in k])
    if x <= xs[0]:
        xi = k[0] + (x - xs[0])
        return float(u_of(xi)) if xi >= k[0] else float(u_of(k[0]))
    if x >= xs[-1]:
        return float(u_of(k[-1]))
    j = int(np.searchsorted(xs, x, side="right") - 1)
    j = min(j, k.size - 2)
    if xs[j + 1] - xs[j] <= 0.0:
        return float(u_of(k[j]))
    xi = k[j] + (x - xs[j]) / (xs[j + 1] - xs[j]) * h[j]
    return float(u_of(xi))


# weak formulation residuals

def _bump(s):
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) < 1.0
    q = np.where(inside, 1.0 - s * s, 1.0)
    b = np.where(inside, np.exp(-1.0 / q), 0.0)
    db = np.where(inside, b * (-2.0 * s / q ** 2), 0.0)
    return b, db


@dataclass(frozen=True)
class BumpTestFunction:
    """phi(x, t) = b((x - xc) / rx) b((t - tc) / rt), b(s) = exp(-1 / (1 - s^2))."""

    xc: float
    tc: float
    rx: float
    rt: float

    def __call__(self, x, t):
        return self.parts(x, t)[0]

    def parts(self, x, t):
        """phi, phi_x, phi_t."""
        bx, dbx = _bump((np.asarray(x) - self.xc) / self.rx)
        bt, dbt = _bump((np.asarray(t) - self.tc) / self.rt)
        return bx * bt, dbx * bt / self.rx, bx * dbt / self.rt

    @property
    def x_range(self):
        return self.xc - self.rx, self.xc + self.rx

    @property
    def t_range(self):
        return max(0.0, self.tc - self.rt), self.tc + self.rt


@lru_cache(maxsize=None)
def _leggauss(m: int):
    return np.polynomial.legendre.leggauss(m)


def _gauss_panels(breaks, n_total):
    """Gauss-Legendre nodes/weights on consecutive panels, points ~ length."""
    breaks = np.asarray(breaks, dtype=float)
    span = breaks[-1] - breaks[0]
    xs, ws = [], []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        if hi <= lo:
            continue
        m = max(4, int(np.ceil(n_total * (hi - lo) / span)))
        g, w = _leggauss(m)
        xs.append(0.5 * (hi - lo) * g + 0.5 * (hi + lo))
        ws.append(0.5 * (hi - lo) * w)
    if not xs:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(xs), np.concatenate(ws)


def _x_integrals(E: EulerianState, phi: BumpTestFunction, t: float, n_x: int):
    """Spatial integrals of the three weak-form integrands at time t."""
    lo, hi = phi.x_range
    knots = E.knots()
    breaks = np.concatenate([[lo], knots[(knots > lo) & (knots < hi)], [hi]])
    x, w = _gauss_panels(breaks, n_x)
    p, px, pt = phi.parts(x, t)
    u = E.u(x)
    rho = E.rho(x)
    Fmu = E.mu.cdf(x)
    total = E.mu.total
    iu = np.sum(w * (u * pt + 0.5 * u * u * px + 0.25 * (2.0 * Fmu - total) * p))
    irho = np.sum(w * rho * (pt + u * px))
    dens = np.zeros_like(x)
    ac = E.mu.ac
    if ac.xs.size > 1:
        idx = np.clip(np.searchsorted(ac.xs, x, side="right") - 1, 0, ac.xs.size - 2)
        inside = (x > ac.xs[0]) & (x < ac.xs[-1])
        dens = np.where(inside, np.diff(ac.vs)[idx] / np.diff(ac.xs)[idx], 0.0)
    imu = np.sum(w * dens * (pt + u * px))
    ax = E.mu.atom_x
    if ax.size:
        pa, pxa, pta = phi.parts(ax, t)
        imu += float(np.sum(E.mu.atom_w * (pta + E.u(ax) * pxa)))
    return iu, irho, imu


def _x_initial(E: EulerianState, phi: BumpTestFunction, n_x: int):
    lo, hi = phi.x_range
    knots = E.knots()
    breaks = np.concatenate([[lo], knots[(knots > lo) & (knots < hi)], [hi]])
    x, w = _gauss_panels(breaks, n_x)
    p = phi(x, 0.0)
    iu = np.sum(w * E.u(x) * p)
    irho = np.sum(w * E.rho(x) * p)
    ac = E.mu.ac
    dens = np.zeros_like(x)
    if ac.xs.size > 1:
        idx = np.clip(np.searchsorted(ac.xs, x, side="right") - 1, 0, ac.xs.size - 2)
        inside = (x > ac.xs[0]) & (x < ac.xs[-1])
        dens = np.where(inside, np.diff(ac.vs)[idx] / np.diff(ac.xs)[idx], 0.0)
    imu = np.sum(w * dens * p) + float(np.sum(E.mu.atom_w * phi(E.mu.atom_x, 0.0)))
    return iu, irho, imu


def weak_residual(trajectory, phi: BumpTestFunction, n_t: int = 200, n_x: int = 200):
    """Residuals (r_u, r_rho, r_mu) of the weak formulation against phi.

    ``trajectory`` needs ``eulerian_at(t)``, ``event_times`` and ``horizon``.
    Time is split at event times, space at the knots of the solution, and
    each panel uses Gauss-Legendre quadrature. r_u and r_rho vanish for a
    solution; r_mu is nonnegative.
    """
    t0, t1 = phi.t_range
    if t1 > trajectory.horizon:
        raise ValueError("test function support exceeds the trajectory horizon")
    ev = [s for s in trajectory.event_times if t0 < s < t1]
    ts, wts = _gauss_panels([t0] + ev + [t1], n_t)
    ru = rr = rm = 0.0
    for t, wt in zip(ts, wts):
        iu, irho, imu = _x_integrals(trajectory.eulerian_at(t), phi, t, n_x)
        ru += wt * iu
        rr += wt * irho
        rm += wt * imu
    if t0 == 0.0:
        iu, irho, imu = _x_initial(trajectory.eulerian_at(0.0), phi, n_x)
        ru += iu
        rr += irho
        rm += imu
    return float(ru), float(rr), float(rm)


RESIDUAL_FLOOR = 1e-12
"""Residuals below this are rounding noise and need not halve further."""


@dataclass
class ResidualRefinement:
    coarse: tuple
    fine: tuple
    n: int

    @property
    def halving(self) -> bool:
        """r_u and r_rho at least halve from n to 2n points, or sit at the floor."""
        return all(abs(f) <= 0.5 * abs(c) or max(abs(c), abs(f)) <= RESIDUAL_FLOOR
                   for c, f in zip(self.coarse[:2], self.fine[:2]))


def residual_refinement(trajectory, phi: BumpTestFunction, n: int = 200) -> ResidualRefinement:
    """Weak residuals at n x n and 2n x 2n quadrature points."""
    return ResidualRefinement(weak_residual(trajectory, phi, n, n),
                              weak_residual(trajectory, phi, 2 * n, 2 * n), n)
