import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hsx2 import scenarios
from hsx2.evolution import solve_event_driven
from hsx2.functions import (IDENTICALLY_ONE, INVALID, STRICTLY_BELOW_ONE, AlphaFunction,
                            CumulativeMeasure, PiecewiseLinear, StepFunction, alpha_validate,
                            measure_total, pl_eval, pl_norms, pushforward, rational_square)
from hsx2.maps import M_map


def _riemann_norms(f, g, lo, hi, n=400_001):
    """Fine-grid quadrature of |f - g|, used as an independent oracle."""
    x = np.linspace(lo, hi, n)
    d = f(x) - g(x)
    w = np.full(n, (hi - lo) / (n - 1))
    w[[0, -1]] *= 0.5
    return np.max(np.abs(d)), np.sum(w * np.abs(d)), np.sqrt(np.sum(w * d * d))


# evaluation

def test_hat_peak_value():
    assert pl_eval(scenarios.hat(), 0.0) == 1.0


def test_constant_extension_left_and_right():
    f = PiecewiseLinear([0.0, 1.0, 3.0], [2.0, -1.0, 5.0])
    assert pl_eval(f, -10.0) == f.left == 2.0
    assert pl_eval(f, 10.0) == f.right == 5.0


def test_midpoint_of_linear_cell():
    assert pl_eval(PiecewiseLinear([0.0, 1.0], [0.0, 2.0]), 0.5) == 1.0


def test_inconsistent_tails_rejected():
    with pytest.raises(ValueError):
        PiecewiseLinear([0.0, 1.0], [0.0, 1.0], left=3.0)
    with pytest.raises(ValueError):
        PiecewiseLinear([1.0, 0.0], [0.0, 1.0])


def test_json_round_trip():
    f = PiecewiseLinear([-1.0, 0.5, 2.0], [0.25, -3.0, 1.0])
    g = PiecewiseLinear.from_json(json.loads(json.dumps(f.to_json())))
    assert np.array_equal(g.xs, f.xs) and np.array_equal(g.vs, f.vs)


# norms

def test_norms_of_identical_inputs_vanish():
    f = scenarios.hat()
    assert pl_norms(f, f) == (0.0, 0.0, 0.0)


def test_sup_of_initial_velocity_difference():
    eps = 0.1
    u = scenarios.hat(eps)
    ubar = PiecewiseLinear([-1.0, eps], [-2 * eps, 1 - eps])
    assert pl_norms(u, ubar)[0] == pytest.approx(2 * eps, abs=1e-15)


def test_tent_norms_and_quadrature_oracle():
    tent = PiecewiseLinear([0.0, 1.0, 2.0], [0.0, 1.0, 0.0])
    zero = PiecewiseLinear.constant(0.0)
    sup, l1, l2 = pl_norms(tent, zero)
    assert (sup, l1) == (1.0, 1.0)
    assert l2 == pytest.approx(np.sqrt(2 / 3), abs=1e-15)
    q = _riemann_norms(tent, zero, -1.0, 3.0)
    assert np.allclose((sup, l1, l2), q, atol=1e-9)


def test_nonzero_tails_give_infinite_integral_norms():
    sup, l1, l2 = pl_norms(PiecewiseLinear([0.0, 1.0], [0.0, 1.0]), PiecewiseLinear.constant(0.0))
    assert sup == 1.0 and l1 == np.inf and l2 == np.inf


def test_sign_change_inside_cell_against_quadrature():
    f = PiecewiseLinear([-0.25, 0.0, 1.0, 1.5], [0.0, -1.0, 3.0, 0.0])
    g = PiecewiseLinear.constant(0.0)
    assert np.allclose(pl_norms(f, g), _riemann_norms(f, g, -0.5, 2.0), atol=1e-9)


pl_strategy = st.lists(st.tuples(st.floats(-5, 5), st.floats(-3, 3)), min_size=2, max_size=6,
                       unique_by=lambda p: round(p[0], 3))


def _pl(points):
    pts = sorted(points)
    xs = np.array([p[0] for p in pts])
    vs = np.array([p[1] for p in pts])
    # zero tails keep the integral norms finite
    return PiecewiseLinear(np.concatenate([[-6.0], xs, [6.0]]), np.concatenate([[0.0], vs, [0.0]]))


@given(pl_strategy, pl_strategy, pl_strategy)
def test_norms_symmetric_and_triangle(p, q, s):
    f, g, h = _pl(p), _pl(q), _pl(s)
    fg, gf = pl_norms(f, g), pl_norms(g, f)
    assert np.allclose(fg, gf, rtol=1e-12, atol=1e-14)
    fh, gh = pl_norms(f, h), pl_norms(g, h)
    for k in range(3):
        assert fh[k] <= fg[k] + gh[k] + 1e-9


# measures

def test_intro_energy_total():
    assert measure_total(scenarios.intro().eulerian.mu) == pytest.approx(2.0, abs=1e-15)


def test_zero_measure_total():
    assert measure_total(CumulativeMeasure()) == 0.0


def test_hat_energy_after_breaking(a1_traj):
    _, traj = a1_traj
    for t in (2.0, 3.0, 4.0):
        assert measure_total(M_map(traj.state_at(t)).mu) == pytest.approx(6 / 5, abs=1e-12)


def test_measure_rejects_negative_atoms():
    with pytest.raises(ValueError):
        CumulativeMeasure(None, [(0.0, -1.0)])


def test_identity_pushforward_is_absolutely_continuous():
    m = pushforward([0.5, 0.5], [0.0, 0.5, 1.0])
    assert m.atoms == [] and m.total == 1.0
    assert m.cdf(0.25) == 0.25


def test_flat_cell_gives_hat_atom(a1_traj):
    g, traj = a1_traj
    X = traj.state_at(2.0)
    m = pushforward(np.diff(X.V), X.y)
    assert m.atom_at(2.0) == pytest.approx(1 / 5, abs=1e-12)


def test_adjacent_flat_cells_merge():
    m = pushforward([0.2, 0.3, 1.0], [0.0, 0.0, 0.0, 1.0])
    assert m.atoms == [(0.0, 0.5)]


def test_decreasing_map_rejected():
    with pytest.raises(ValueError):
        pushforward([1.0], [1.0, 0.0])


def _binned_cdf(masses, y, x):
    """Brute force: each cell spreads its mass uniformly over [y_i, y_i+1]."""
    total = 0.0
    for m, a, b in zip(masses, y[:-1], y[1:]):
        if b - a <= 1e-12:
            total += m if a < x else 0.0
        else:
            total += m * min(max((x - a) / (b - a), 0.0), 1.0)
    return total


@pytest.mark.parametrize("seed", range(8))
def test_pushforward_matches_binning_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(8, 33))
    dy = np.where(rng.uniform(size=n) < 0.25, 0.0, rng.uniform(0.01, 1.0, size=n))
    y = np.concatenate([[0.0], np.cumsum(dy)]) - 3.0
    masses = rng.uniform(0.0, 1.0, size=n)
    m = pushforward(masses, y)
    assert abs(m.total - masses.sum()) <= 1e-12
    for x in np.linspace(-4.0, y[-1] + 1.0, 57):
        assert abs(m.cdf(x) - _binned_cdf(masses, y, x)) <= 1e-12


# alpha

def test_rational_alpha_is_below_one():
    a = scenarios.alpha_rational()
    assert alpha_validate(a) == STRICTLY_BELOW_ONE
    assert a(2.0) == rational_square(2.0) == 4 / 5


def test_alpha_identically_one():
    assert alpha_validate(AlphaFunction.constant(1.0)) == IDENTICALLY_ONE


def test_mixed_alpha_is_invalid():
    a = scenarios.alpha_mixed()
    assert a(0.25) == 1.0 and a(0.5) == 0.5
    assert alpha_validate(a) == INVALID


def test_alpha_out_of_range_rejected():
    with pytest.raises(ValueError):
        AlphaFunction(PiecewiseLinear([0.0, 1.0], [0.0, 1.5]))


def test_alpha_lipschitz_is_max_slope():
    assert scenarios.alpha_ramp().lipschitz == 0.25


def test_cell_average_is_exact():
    a = scenarios.alpha_ramp()
    # mean of x/4 over [1, 3] is 1/2; over [2, 5] the clamp at 3/4 enters
    assert a.cell_average(1.0, 3.0)[0] == pytest.approx(0.5, abs=1e-15)
    assert a.cell_average(2.0, 5.0)[0] == pytest.approx((0.625 + 1.5) / 3, abs=1e-15)


def test_step_function_zero_outside():
    s = StepFunction([0.0, 1.0, 2.0], [3.0, -1.0])
    assert s(-0.5) == 0.0 and s(2.5) == 0.0 and s(1.5) == -1.0
