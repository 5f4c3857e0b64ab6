from fractions import Fraction

import numpy as np
import pytest

from conftest import random_relabeling
from hsx2 import scenarios
from hsx2.evolution import solve_event_driven
from hsx2.functions import AlphaFunction, PiecewiseLinear
from hsx2.lagrangian import common_grid
from hsx2.maps import L_map, Relabeling, admissible_data, group_action, normalizer, pi_normalize
from hsx2.reference import pair
from hsx2.stability import (METRIC_TERMS, MetricContext, J_bound, J_upper, candidate_relabelings,
                            compute_g, d_euler, d_euler_growth, dM_upper, dtilde, dtilde_terms,
                            lipschitz_constants, lipschitz_verify)

EPS, ALPHA = 0.1, 0.5
# sum of the closed-form difference norms of the pair at t = 1
DTILDE_PAIR_T1 = 1.8534441853748633


@pytest.fixture(scope="module")
def pair_setup():
    g, gb = scenarios.a2_pair(EPS, ALPHA)
    ctx = MetricContext.for_states(g.lagrangian, gb.lagrangian, g.alpha)
    A = solve_event_driven(g.lagrangian, g.alpha, 5.0)
    B = solve_event_driven(gb.lagrangian, gb.alpha, 5.0)
    return g, gb, ctx, A, B


def _random_pair(seed, near=True):
    rng = np.random.default_rng(seed)
    a = scenarios.random_alpha(rng, ("below", "const", "one")[seed % 3])
    X, Xb = scenarios.random_pair(rng, a, near=near)
    return X, Xb, a


# profiles

def test_g_without_dissipative_cells():
    a = AlphaFunction.constant(0.5)
    X = L_map(admissible_data(PiecewiseLinear([0.0, 1.0, 2.0], [0.0, 1.0, 1.5])), a)
    p = compute_g(X, a)
    assert np.all(p.omega == "c")
    assert np.array_equal(p.g, X.y_xi + X.H_xi)
    assert not np.any(p.g2) and not np.any(p.g3)


def test_g_on_dissipative_cells():
    g = scenarios.a3()
    X = g.lagrangian
    p = compute_g(X, g.alpha)
    d = p.omega == "d"
    assert np.all(d)
    mid = 0.5 * (X.y[:-1] + X.y[1:])
    assert np.allclose(p.g, X.y_xi + X.H_xi - g.alpha(mid) * X.H_xi, atol=0)
    assert np.allclose(p.g2, 0.25 * X.h_inf * X.U_xi, atol=0)


@pytest.mark.parametrize("t", [0.5, 1.0, 1.5])
def test_pair_g_difference_before_breaking(pair_setup, t):
    _, _, ctx, A, B = pair_setup
    terms = dtilde_terms(A.state_at(t), B.state_at(t), ctx)
    assert terms["g_l2"] == pytest.approx(np.sqrt(2 * EPS) * (t + ALPHA / 2), abs=1e-12)
    assert terms["g2_l2"] == 0.0 and terms["g3_l2"] == 0.0


def test_g_continuous_across_breaking(a1_traj):
    g, traj = a1_traj
    left = compute_g(traj.left_limit(2.0), g.alpha)
    right = compute_g(traj.state_at(2.0), g.alpha)
    for k in ("g", "g2", "g3"):
        assert np.max(np.abs(getattr(left, k) - getattr(right, k))) <= 1e-10


# base distance

def test_dtilde_of_identical_states():
    g = scenarios.a1()
    ctx = MetricContext.for_states(g.lagrangian, g.lagrangian, g.alpha)
    assert dtilde(g.lagrangian, g.lagrangian, ctx) == 0.0


def test_dtilde_pair_golden(pair_setup):
    _, _, ctx, A, B = pair_setup
    assert dtilde(A.state_at(1.0), B.state_at(1.0), ctx) == pytest.approx(DTILDE_PAIR_T1, abs=1e-10)
    assert pair.dtilde(1.0, EPS, ALPHA) == pytest.approx(DTILDE_PAIR_T1, abs=1e-15)


@pytest.mark.parametrize("t", [1.0, 3.0])
def test_pair_norm_table(pair_setup, t):
    _, _, ctx, A, B = pair_setup
    terms = dtilde_terms(A.state_at(t), B.state_at(t), ctx)
    for k, v in pair.norms(t, EPS, ALPHA).items():
        assert terms[k] == pytest.approx(v, abs=1e-10), k


def test_V_difference_jumps_while_dtilde_is_continuous(pair_setup):
    _, _, ctx, A, B = pair_setup
    te = A.event_times[0]
    left = dtilde_terms(A.left_limit(te), B.state_at(te), ctx)
    right = dtilde_terms(A.state_at(te), B.state_at(te), ctx)
    assert left["V_xi_l2"] == pytest.approx(0.0, abs=1e-12)
    assert right["V_xi_l2"] == pytest.approx(np.sqrt(2 * EPS) * ALPHA / 2, abs=1e-10)
    dl = sum(left[k] for k in METRIC_TERMS)
    dr = sum(right[k] for k in METRIC_TERMS)
    assert abs(dl - dr) <= 1e-8


@pytest.mark.parametrize("seed", range(6))
def test_dtilde_symmetric(seed):
    X, Xb, a = _random_pair(seed, near=seed % 2 == 0)
    ctx = MetricContext.for_states(X, Xb, a)
    assert dtilde(X, Xb, ctx) == pytest.approx(dtilde(Xb, X, ctx), rel=1e-12)


def test_context_rejects_small_energy_bound():
    g, gb = scenarios.a2_pair()
    with pytest.raises(ValueError):
        MetricContext.for_states(g.lagrangian, gb.lagrangian, g.alpha, M=0.5)


# relabeling-invariant bounds

def test_J_of_identical_states():
    X = scenarios.a3().lagrangian
    ctx = MetricContext.for_states(X, X, scenarios.alpha_ramp())
    assert J_upper(X, X, ctx) == 0.0


@pytest.mark.parametrize("seed", range(4))
def test_J_at_most_twice_dtilde(seed):
    X, Xb, a = _random_pair(seed)
    ctx = MetricContext.for_states(X, Xb, a)
    assert J_upper(X, Xb, ctx) <= 2 * dtilde(X, Xb, ctx) + 1e-12


def test_J_finds_known_relabeling():
    g = scenarios.a1()
    X = g.lagrangian
    f = random_relabeling(np.random.default_rng(9))
    Xb = group_action(X, f)
    ctx = MetricContext.for_states(X, Xb, g.alpha)
    cands = {"id": Relabeling.identity(), "f": f, "f_inv": f.inverse()}
    res = J_bound(X, Xb, ctx, cands)
    assert res.value <= 1e-10 and (res.f, res.g) == ("f", "f_inv")
    assert dtilde(X, Xb, ctx) > 0.1


def test_candidate_family_contents():
    g, gb = scenarios.a2_pair()
    names = candidate_relabelings(g.lagrangian, gb.lagrangian)
    for k in ("id", "norm", "norm_bar", "norm_inv", "norm_bar_inv", "shift+0.1", "shift-0.01"):
        assert k in names


def test_dM_of_identical_inputs():
    g = scenarios.a1()
    ctx = MetricContext.for_states(g.lagrangian, g.lagrangian, g.alpha)
    assert dM_upper(2.0, g.lagrangian, g.lagrangian, ctx) == 0.0


def test_dM_at_time_zero_is_initial_J(pair_setup):
    g, gb, ctx, _, _ = pair_setup
    assert dM_upper(0.0, g.lagrangian, gb.lagrangian, ctx) == J_upper(g.lagrangian, gb.lagrangian, ctx)


@pytest.mark.parametrize("t", [0.0, 1.0, 2.5, 4.0])
def test_dM_dominates_sup_differences(pair_setup, t):
    g, gb, ctx, A, B = pair_setup
    P, Pb = common_grid(pi_normalize(A.state_at(t)), pi_normalize(B.state_at(t)))
    lhs = sum(float(np.max(np.abs(getattr(P, k) - getattr(Pb, k)))) for k in ("y", "U", "H"))
    assert lhs <= 2 * dM_upper(t, g.lagrangian, gb.lagrangian, ctx) + 1e-12


def test_dM_rejects_non_initial_states(pair_setup):
    g, gb, ctx, A, _ = pair_setup
    with pytest.raises(ValueError):
        dM_upper(1.0, A.state_at(3.0), gb.lagrangian, ctx)
    shifted = g.lagrangian.replace(y=g.lagrangian.y + 0.1)
    with pytest.raises(ValueError):
        dM_upper(1.0, shifted, gb.lagrangian, ctx)


@pytest.mark.parametrize("t", [0.5, 2.0, 3.5])
def test_normalization_shrinks_matched_distances(pair_setup, t):
    _, _, ctx, A, B = pair_setup
    X, Xb = A.state_at(t), B.state_at(t)
    P, Pb = pi_normalize(X), pi_normalize(Xb)
    phi, phib = normalizer(X), normalizer(Xb)
    factor = np.exp(t / 2)
    for name, f in candidate_relabelings(X, Xb).items():
        try:
            before = dtilde(group_action(X, f), Xb, ctx)
        except ValueError:
            continue
        matched = phi.compose(f.compose(phib.inverse()))
        after = dtilde(group_action(P, matched), Pb, ctx)
        assert after <= factor * before + 1e-9, name


# growth constants

def test_constants_at_unit_energy_and_time_zero():
    c = lipschitz_constants(1.0, 0.0, 0.0)
    assert (c.Ctilde, c.Cbar, c.C, c.Chat) == (4.0, 2.5, 4.0, 4.0)


@pytest.mark.parametrize("M,lip", [(0.3, 0.0), (2.0, 0.7), (9.0, 1.0)])
def test_constants_collapse_at_time_zero(M, lip):
    c = lipschitz_constants(M, lip, 0.0)
    assert c.Chat == c.C == c.Ctilde


def test_constants_golden_value():
    # exact rational evaluation with sqrt(M) = 2, |alpha'| = 1/4, t = 2
    t, s, lip, M = Fraction(2), Fraction(2), Fraction(1, 4), Fraction(4)
    ct = (3 + Fraction(3, 2) * t + t ** 2 / 2 + Fraction(3, 16) * t ** 3
          + s * (1 + t / 4 + t ** 2 / 4 + t ** 3 / 16)
          + lip * s * (5 + 2 * t + t ** 2 + Fraction(3, 8) * t ** 3)
          + lip * M * (3 + Fraction(5, 4) * t + t ** 2 / 2 + t ** 3 / 8))
    cb = 2 + lip * s + s * (Fraction(1, 2) + t / 8 + t ** 2 / 16) + lip * M * (1 + t / 4 + t ** 2 / 8)
    assert (ct, cb) == (32, Fraction(13, 2))
    c = lipschitz_constants(4.0, 0.25, 2.0)
    assert c.Ctilde == 32.0 and c.Cbar == 6.5
    assert c.C == pytest.approx(32 * np.exp(13.0), rel=1e-14)
    assert c.Chat == pytest.approx(32 * np.exp(14.0), rel=1e-14)


# Lipschitz verification

def test_pair_within_envelope(pair_setup):
    g, gb, _, _, _ = pair_setup
    ctx = MetricContext.for_states(g.lagrangian, gb.lagrangian, g.alpha, M=pair.energy_bound(EPS))
    rep = lipschitz_verify(g.lagrangian, gb.lagrangian, g.alpha, ctx, [0.5, 1.0, 1.9, 2.1, 3.0])
    assert rep["passed"] and ctx.M == pytest.approx(1.1)
    for e in rep["entries"]:
        assert e["ratio"] <= e["C"]


def test_identical_states_have_zero_ratio():
    g = scenarios.a1()
    X = g.lagrangian
    rep = lipschitz_verify(X, X, g.alpha, MetricContext.for_states(X, X, g.alpha), [1.0, 3.0])
    assert rep["max_ratio"] == 0.0 and rep["passed"]


@pytest.mark.parametrize("seed", range(20))
def test_random_pairs_within_envelope(seed):
    X, Xb, a = _random_pair(seed, near=seed % 2 == 0)
    rep = lipschitz_verify(X, Xb, a, MetricContext.for_states(X, Xb, a), [0.5, 1.0, 2.0, 3.5, 5.0])
    assert rep["passed"], rep["entries"]


def test_verify_rejects_unnormalized_second_state(pair_setup):
    g, gb, ctx, _, _ = pair_setup
    f = random_relabeling(np.random.default_rng(2))
    moved = group_action(gb.lagrangian, f)
    with pytest.raises(ValueError):
        lipschitz_verify(g.lagrangian, moved, g.alpha, ctx, [1.0])
    # the first state only needs V = H
    assert lipschitz_verify(group_action(g.lagrangian, f), gb.lagrangian, g.alpha, ctx, [1.0])


def test_time_invariant_differences(pair_setup):
    X, Xb, a = _random_pair(4)
    ctx = MetricContext.for_states(X, Xb, a)
    A = solve_event_driven(X, a, 4.0)
    B = solve_event_driven(Xb, a, 4.0)
    d0 = dtilde_terms(X, Xb, ctx)
    for t in (1.0, 2.0, 4.0):
        d = dtilde_terms(A.state_at(t), B.state_at(t), ctx)
        assert abs(d["H_xi_l2"] - d0["H_xi_l2"]) <= 1e-12
        assert abs(d["r_l2"] - d0["r_l2"]) <= 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_velocity_bounds_for_energy_bounded_states(seed):
    X, _, a = _random_pair(seed)
    M = X.h_inf
    assert np.sqrt(np.sum(X.dxi * X.U_xi ** 2)) <= np.sqrt(M) + 1e-12
    traj = solve_event_driven(X, a, 3.0)
    for t in (0.0, 1.0, 3.0):
        seg = traj._segment(t)
        assert np.max(np.abs(seg.acc)) <= M / 4 + 1e-12


# Eulerian distance

def test_d_euler_identical_data():
    g = scenarios.a1()
    ctx = MetricContext(2.0, g.alpha)
    assert d_euler(1.0, g.eulerian, g.eulerian, g.alpha, ctx) == 0.0


def test_d_euler_at_time_zero_is_lagrangian(pair_setup):
    g, gb, ctx, _, _ = pair_setup
    assert d_euler(0.0, g.eulerian, gb.eulerian, g.alpha, ctx) == \
        dM_upper(0.0, L_map(g.eulerian), L_map(gb.eulerian), ctx)


def test_d_euler_growth_is_reported(pair_setup):
    g, gb, ctx, _, _ = pair_setup
    rep = d_euler_growth(g.eulerian, gb.eulerian, g.alpha, ctx, [1.0, 2.5, 4.0])
    assert rep["heuristic"] and len(rep["entries"]) == 3
    assert all(e["ok"] for e in rep["entries"])
