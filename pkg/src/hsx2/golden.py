"""Comparisons of the built-in scenarios against their closed-form solutions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import scenarios
from .evolution import PicardConfig, solve_event_driven, solve_picard
from .lagrangian import max_node_difference
from .maps import L_map, M_map, pi_normalize
from .reference import density, hat, iteration, mixed, pair
from .stability import MetricContext, dtilde, dtilde_terms

NODE_TOL = 1e-10
ATOM_TOL = 1e-12


@dataclass
class Check:
    label: str
    value: float
    expected: float
    tol: float

    @property
    def deviation(self) -> float:
        return abs(self.value - self.expected)

    @property
    def ok(self) -> bool:
        return bool(self.deviation <= self.tol)


@dataclass
class GoldenReport:
    name: str
    checks: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def add(self, label, value, expected=0.0, tol=NODE_TOL):
        self.checks.append(Check(label, float(value), float(expected), tol))

    def lines(self) -> list[str]:
        out = []
        for c in self.checks:
            flag = "ok  " if c.ok else "FAIL"
            out.append(f"{flag} {c.label:<40s} value={c.value:.17g} "
                       f"expected={c.expected:.17g} dev={c.deviation:.3e}")
        return out

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.ok]


def _dev(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def hat_report() -> GoldenReport:
    g = scenarios.a1()
    rep = GoldenReport("a1")
    traj = solve_event_driven(g.lagrangian, g.alpha, 4.0)
    for t in (1.0, 2.0, 4.0):
        X = traj.state_at(t)
        rep.add(f"y nodes t={t:g}", _dev(X.y, hat.y(X.xi, t)))
        rep.add(f"U nodes t={t:g}", _dev(X.U, hat.U(X.xi, t)))
        rep.add(f"V nodes t={t:g}", _dev(X.V, hat.V(X.xi, t)))
    ev = traj.log.events[0]
    rep.add("breaking time", ev.time, hat.BREAK_TIME, 0.0)
    rep.add("alpha at break", ev.alpha_values[0], hat.ALPHA_AT_BREAK, 0.0)
    E2 = traj.eulerian_at(2.0)
    rep.add("mu atom at x=2, t=2", E2.mu.atom_at(2.0), hat.MU_ATOM, ATOM_TOL)
    rep.add("nu atom at x=2, t=2", E2.nu.atom_at(2.0), hat.NU_ATOM, ATOM_TOL)
    for t in (3.0, 4.0):
        E = traj.eulerian_at(t)
        a, b = hat.broken_interval(t)
        rep.add(f"mu mass on broken interval t={t:g}", E.mu.cdf(b, True) - E.mu.cdf(a),
                hat.MU_ATOM, ATOM_TOL)
        xs = np.linspace(-4.0, 6.0, 21)
        rep.add(f"u samples t={t:g}", _dev(E.u(xs), hat.u(xs, t)))
    rep.add("v_inf t=4", traj.state_at(4.0).v_inf, hat.v_inf(4.0))
    return rep


def density_report() -> GoldenReport:
    g = scenarios.intro()
    rep = GoldenReport("intro")
    t = 1.9
    traj = solve_event_driven(g.lagrangian, g.alpha, 1.999)
    E = traj.eulerian_at(t)
    # sample points avoid the jumps of rho
    xs = np.linspace(-1.5, 2.5, 10) + 1e-3
    rep.add("u samples t=1.9", _dev(E.u(xs), density.u(xs, t)))
    rep.add("rho samples t=1.9", _dev(E.rho(xs), density.rho(xs, t)))
    for s in (0.0, 1.0, 1.9, 1.999):
        rep.add(f"energy t={s:g}", traj.eulerian_at(s).mu.total, density.ENERGY, 1e-12)
    return rep


def pair_report(eps: float = 0.1, alpha: float = 0.5) -> GoldenReport:
    g, gb = scenarios.a2_pair(eps, alpha)
    rep = GoldenReport("a2")
    ctx = MetricContext.for_states(g.lagrangian, gb.lagrangian, g.alpha)
    A = solve_event_driven(g.lagrangian, g.alpha, 3.0)
    B = solve_event_driven(gb.lagrangian, gb.alpha, 3.0)
    for t in (1.0, 3.0):
        terms = dtilde_terms(A.state_at(t), B.state_at(t), ctx)
        ref = pair.norms(t, eps, alpha)
        rep.tables[f"t={t:g}"] = {k: (terms[k], ref[k]) for k in ref}
        for k in ref:
            rep.add(f"{k} t={t:g}", terms[k], ref[k])
    te = A.event_times[0]
    left = dtilde_terms(A.left_limit(te), B.state_at(te), ctx)
    right = dtilde_terms(A.state_at(te), B.state_at(te), ctx)
    rep.add("V_xi jump at breaking", right["V_xi_l2"] - left["V_xi_l2"],
            np.sqrt(2 * eps) * alpha / 2)
    rep.add("dtilde continuity at breaking",
            dtilde(A.left_limit(te), B.state_at(te), ctx), dtilde(A.state_at(te), B.state_at(te), ctx),
            1e-8)
    return rep


def iteration_report(cfg: PicardConfig | None = None) -> GoldenReport:
    g = scenarios.a3()
    rep = GoldenReport("a3")
    traj, trace = solve_picard(g.lagrangian, g.alpha, 5.0, cfg)
    win = trace.windows[0]
    its = win.iterates
    X1 = its[0].trajectory.state_at(win.end)
    rep.add("X_1 = X_0", max_node_difference(X1, g.lagrangian), 0.0, 0.0)
    rep.add("iterate 2 weight on (-1,1)", its[1].alpha_at_break[0], 1 / 16, 1e-14)
    rep.add("iterate 2 weight on (1,7/2)", its[1].alpha_at_break[1], 1 / 4, 1e-14)
    rep.add("iterate 3 weight on (1,7/2)", its[2].alpha_at_break[1], 31 / 128, 1e-14)
    rep.add("distinct iterates", win.distinct, 4, 0)
    rep.add("final sup_delta", its[-1].sup_delta, 0.0, 1e-12)
    for it in its[1:]:
        n = min(it.n, 4)
        for t in (1.0, 3.0, min(4.5, win.end)):
            X = it.trajectory.state_at(t)
            y, U, V = iteration.iterate(n, X.xi, t)
            rep.add(f"X_{it.n} nodes t={t:g}", max(_dev(X.y, y), _dev(X.U, U), _dev(X.V, V)))
    ev = solve_event_driven(g.lagrangian, g.alpha, 5.0)
    for t in g.times:
        rep.add(f"picard vs event t={t:g}", max_node_difference(traj.state_at(t), ev.state_at(t)))
    rep.tables["trace"] = [{"window": [w.start, w.end], "n": it.n,
                            "beta": it.beta.tolist(), "alpha_at_break": it.alpha_at_break.tolist(),
                            "sup_delta": it.sup_delta}
                           for w in trace.windows for it in w.iterates]
    return rep


def mixed_report() -> GoldenReport:
    g = scenarios.a4()
    rep = GoldenReport("a4")
    S4 = solve_event_driven(g.lagrangian, g.alpha, 4.0, allow_invalid=True).state_at(4.0)
    y, U, H, V = mixed.s4(S4.xi)
    rep.add("S_4 nodes", max(_dev(S4.y, y), _dev(S4.U, U), _dev(S4.H, H), _dev(S4.V, V)))
    P = pi_normalize(S4)
    LM = L_map(M_map(S4), validate=False, diagnostic=True)
    grid = np.union1d(P.xi, LM.xi)
    rep.add("normalized V vs closed form", _dev(P.nodes_at(grid)["V"], mixed.V_normalized(grid)))
    rep.add("round-trip V vs closed form", _dev(LM.nodes_at(grid)["V"], mixed.V_roundtrip(grid)))
    diff = _dev(P.nodes_at(grid)["V"], LM.nodes_at(grid)["V"])
    rep.add("sup |V_normalized - V_roundtrip|", diff, mixed.SUP_DIFFERENCE)
    # the same pipeline with an admissible alpha
    ok = scenarios.a3()
    S4v = solve_event_driven(ok.lagrangian, ok.alpha, 4.0).state_at(4.0)
    rep.add("valid alpha round trip", max_node_difference(pi_normalize(S4v),
                                                          L_map(M_map(S4v), ok.alpha)))
    return rep


REPORTS = {"a1": hat_report, "a2": pair_report, "a3": iteration_report, "a4": mixed_report,
           "intro": density_report}
