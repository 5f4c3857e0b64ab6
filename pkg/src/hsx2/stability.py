"""Stability profiles, the base distance d~ and computable metric bounds.

The relabeling-invariant quantities J and d_M are infima over the group of
relabelings. They are replaced here by minima over a finite candidate
family, which makes every reported value an upper bound on the true one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .evolution import solve_event_driven
from .functions import AlphaFunction, PiecewiseLinear
from .lagrangian import (LagrangianState, check_F_0, check_F_alpha, check_F_i,
                         classify_omega, common_grid)
from .maps import EulerianState, L_map, Relabeling, group_action, normalizer, pi_normalize

METRIC_TERMS = ("y_sup", "U_sup", "UH_l2", "H_xi_l1", "y_xi_l2", "U_xi_l2", "H_xi_l2",
                "r_l2", "g_l2", "g2_l2", "g3_l2")
"""Terms summed into d~. ``V_xi_l2`` is reported alongside but not summed."""

SHIFTS = (0.1, -0.1, 0.01, -0.01)
F0_TOL = 1e-12
BREAK_TOL = 1e-10


@dataclass
class StabilityProfile:
    """Per-cell g, g2, g3 of one state and its Omega labels."""

    xi: np.ndarray
    g: np.ndarray
    g2: np.ndarray
    g3: np.ndarray
    omega: np.ndarray


@dataclass
class MetricContext:
    """Energy bound M and the dissipation coefficient shared by both states."""

    M: float
    alpha: AlphaFunction

    @property
    def alpha_lip(self) -> float:
        return self.alpha.lipschitz

    @classmethod
    def for_states(cls, X: LagrangianState, Xb: LagrangianState, a: AlphaFunction,
                   M: float | None = None) -> "MetricContext":
        bound = max(X.h_inf, Xb.h_inf)
        if M is not None and M < bound:
            raise ValueError(f"M={M} is below the energy of the states ({bound})")
        return cls(bound if M is None else float(M), a)


def compute_g(X: LagrangianState, a: AlphaFunction, tol: float = BREAK_TOL) -> StabilityProfile:
    """g, g2, g3 per cell; alpha and U are taken at the cell midpoint.

    A cell caught exactly at its breaking time (flat, U_xi = 0, r = 0 and
    no energy removed yet) counts as Omega_d, which is its value as the
    breaking time is approached from below.
    """
    d = classify_omega(X) == "d"
    breaking = ((X.y_xi <= tol) & (np.abs(X.U_xi) <= tol) & (X.r == 0.0)
                & (X.H_xi > 0.0) & (X.V_xi >= X.H_xi - tol))
    d = d | breaking
    ymid = 0.5 * (X.y[:-1] + X.y[1:])
    Umid = 0.5 * (X.U[:-1] + X.U[1:])
    yx, Ux, Hx, Vx = X.y_xi, X.U_xi, X.H_xi, X.V_xi
    g = np.where(d, yx + Hx - a(ymid) * Hx, yx + Vx)
    g2 = np.where(d, a.lipschitz * X.h_inf * Ux, 0.0)
    g3 = np.where(d, a.lipschitz * Umid * Ux, 0.0)
    return StabilityProfile(X.xi.copy(), g, g2, g3, np.where(d, "d", "c"))


def _l2(h, v):
    return float(np.sqrt(np.sum(h * v * v)))


def _linear_cells_l2(h, d0, d1):
    """L2 norm of a function linear on each cell with end values d0, d1."""
    return float(np.sqrt(np.sum(h * (d0 * d0 + d0 * d1 + d1 * d1) / 3.0)))


def dtilde_terms(X: LagrangianState, Xb: LagrangianState, ctx: MetricContext) -> dict:
    """Every term of d~ on the merged grid, plus the V_xi difference.

    Outside the grids all derivative data agree (y_xi = 1, the rest 0) and
    y - y_bar, U - U_bar are constant, so the node values cover the tails.
    """
    A, B = common_grid(X, Xb)
    h = A.dxi
    gA, gB = compute_g(A, ctx.alpha), compute_g(B, ctx.alpha)
    left = A.U[:-1] * A.H_xi - B.U[:-1] * B.H_xi
    right = A.U[1:] * A.H_xi - B.U[1:] * B.H_xi
    return {
        "y_sup": float(np.max(np.abs(A.y - B.y))),
        "U_sup": float(np.max(np.abs(A.U - B.U))),
        "UH_l2": ctx.alpha_lip * _linear_cells_l2(h, left, right),
        "H_xi_l1": float(np.sum(h * np.abs(A.H_xi - B.H_xi))),
        "y_xi_l2": _l2(h, A.y_xi - B.y_xi),
        "U_xi_l2": _l2(h, A.U_xi - B.U_xi),
        "H_xi_l2": _l2(h, A.H_xi - B.H_xi),
        "r_l2": _l2(h, A.r - B.r),
        "g_l2": _l2(h, gA.g - gB.g),
        "g2_l2": _l2(h, gA.g2 - gB.g2),
        "g3_l2": _l2(h, gA.g3 - gB.g3),
        "V_xi_l2": _l2(h, A.V_xi - B.V_xi),
    }


def dtilde(X: LagrangianState, Xb: LagrangianState, ctx: MetricContext) -> float:
    terms = dtilde_terms(X, Xb, ctx)
    return float(sum(terms[k] for k in METRIC_TERMS))


def candidate_relabelings(X: LagrangianState, Xb: LagrangianState) -> dict:
    """Named finite family standing in for the relabeling group."""
    fX, fB = normalizer(X), normalizer(Xb)
    cands = {"id": Relabeling.identity(), "norm": fX, "norm_inv": fX.inverse(),
             "norm_bar": fB, "norm_bar_inv": fB.inverse(),
             "norm_inv*norm_bar": fX.inverse().compose(fB),
             "norm_bar_inv*norm": fB.inverse().compose(fX)}
    for c in SHIFTS:
        cands[f"shift{c:+g}"] = Relabeling(PiecewiseLinear.constant(c))
    return cands


@dataclass
class JBound:
    """Upper bound on J with the minimizing candidates."""

    value: float
    f: str
    g: str
    candidates: list = field(default_factory=list)


def _best(fn, cands):
    best, name = np.inf, None
    for key, f in cands.items():
        try:
            val = fn(f)
        except ValueError:
            # a candidate may push the state outside the admissible set
            continue
        if val < best:
            best, name = val, key
    return best, name


def J_bound(X: LagrangianState, Xb: LagrangianState, ctx: MetricContext,
            candidates: dict | None = None) -> JBound:
    """min over candidates of d~(X.f, Xb) + d~(X, Xb.g).

    The two relabelings enter separate terms, so the joint minimum is the
    sum of two independent minima.
    """
    cands = candidates if candidates is not None else candidate_relabelings(X, Xb)
    left, fname = _best(lambda f: dtilde(group_action(X, f), Xb, ctx), cands)
    right, gname = _best(lambda g: dtilde(X, group_action(Xb, g), ctx), cands)
    return JBound(float(left + right), fname, gname, sorted(cands))


def J_upper(X: LagrangianState, Xb: LagrangianState, ctx: MetricContext,
            candidates: dict | None = None) -> float:
    return J_bound(X, Xb, ctx, candidates).value


def _require_F_i0(X: LagrangianState, ctx: MetricContext, name: str):
    if not check_F_i(X):
        raise ValueError(f"{name}: V must equal H")
    if not check_F_0(X, F0_TOL):
        raise ValueError(f"{name}: y + H must equal the identity")
    if X.h_inf > ctx.M:
        raise ValueError(f"{name}: energy {X.h_inf} exceeds M={ctx.M}")


def dM_upper(t: float, X0: LagrangianState, Xb0: LagrangianState, ctx: MetricContext) -> float:
    """Single-link bound J(Pi S_t X0, Pi S_t Xb0) on the chained metric."""
    _require_F_i0(X0, ctx, "first state")
    _require_F_i0(Xb0, ctx, "second state")
    A = pi_normalize(solve_event_driven(X0, ctx.alpha, t).state_at(t))
    B = pi_normalize(solve_event_driven(Xb0, ctx.alpha, t).state_at(t))
    return J_upper(A, B, ctx)


@dataclass
class LipschitzConstants:
    Ctilde: float
    Cbar: float
    C: float
    Chat: float


def lipschitz_constants(M: float, alpha_lip: float, t: float) -> LipschitzConstants:
    """Growth constants of the Lagrangian and the chained metric."""
    sM = np.sqrt(M)
    Ct = (3 + 1.5 * t + 0.5 * t ** 2 + 3 / 16 * t ** 3
          + sM * (1 + t / 4 + t ** 2 / 4 + t ** 3 / 16)
          + alpha_lip * sM * (5 + 2 * t + t ** 2 + 3 / 8 * t ** 3)
          + alpha_lip * M * (3 + 1.25 * t + 0.5 * t ** 2 + t ** 3 / 8))
    Cb = (2 + alpha_lip * sM + sM * (0.5 + t / 8 + t ** 2 / 16)
          + alpha_lip * M * (1 + t / 4 + t ** 2 / 8))
    # large M t overflows to inf, which is still a valid bound
    with np.errstate(over="ignore"):
        C = Ct * np.exp(t * Cb)
    return LipschitzConstants(float(Ct), float(Cb), float(C), float(np.exp(t / 2) * C))


def lipschitz_verify(X0: LagrangianState, Xb0: LagrangianState, a: AlphaFunction,
                     ctx: MetricContext, times) -> dict:
    """Check d~(X(t), Xb(t)) <= C(t) d~(X0, Xb0) at each time.

    The first state must be admissible initial data (V = H); the second
    must in addition be normalized (y + H = id).
    """
    for name, X in (("first state", X0), ("second state", Xb0)):
        rep = check_F_alpha(X, a)
        if not rep:
            raise ValueError(f"{name} fails the membership check: {rep.violations}")
        if not check_F_i(X):
            raise ValueError(f"{name}: V must equal H")
        if X.h_inf > ctx.M:
            raise ValueError(f"{name}: energy {X.h_inf} exceeds M={ctx.M}")
    if not check_F_0(Xb0, F0_TOL):
        raise ValueError("second state: y + H must equal the identity")

    horizon = max([0.0] + [float(t) for t in times])
    A = solve_event_driven(X0, a, horizon)
    B = solve_event_driven(Xb0, a, horizon)
    d0 = dtilde(X0, Xb0, ctx)
    entries = []
    for t in times:
        terms = dtilde_terms(A.state_at(t), B.state_at(t), ctx)
        d = float(sum(terms[k] for k in METRIC_TERMS))
        C = lipschitz_constants(ctx.M, ctx.alpha_lip, t).C
        ratio = 0.0 if d == 0.0 else (d / d0 if d0 > 0 else np.inf)
        entries.append({"t": float(t), "dtilde": d, "bound": C * d0, "C": C,
                        "ratio": ratio, "ok": bool(d <= C * d0), "terms": terms})
    return {"dtilde0": d0, "M": ctx.M, "alpha_lip": ctx.alpha_lip, "entries": entries,
            "max_ratio": max((e["ratio"] for e in entries), default=0.0),
            "passed": all(e["ok"] for e in entries)}


def d_euler(t: float, E0: EulerianState, Eb0: EulerianState, a: AlphaFunction,
            ctx: MetricContext) -> float:
    """Eulerian distance bound: the Lagrangian bound between the L-images."""
    return dM_upper(t, L_map(E0, a), L_map(Eb0, a), ctx)


def d_euler_growth(E0: EulerianState, Eb0: EulerianState, a: AlphaFunction,
                   ctx: MetricContext, times) -> dict:
    """Compare d_euler(t) with Chat(t) d_euler(0).

    Both sides are upper bounds, so the comparison is heuristic and is
    reported rather than asserted.
    """
    d0 = d_euler(0.0, E0, Eb0, a, ctx)
    rows = []
    for t in times:
        d = d_euler(t, E0, Eb0, a, ctx)
        Ch = lipschitz_constants(ctx.M, ctx.alpha_lip, t).Chat
        rows.append({"t": float(t), "d_euler": d, "bound": Ch * d0, "ok": bool(d <= Ch * d0)})
    return {"heuristic": True, "d_euler0": d0, "entries": rows}
