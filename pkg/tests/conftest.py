import numpy as np
import pytest
from hypothesis import settings

from hsx2 import scenarios
from hsx2.maps import Relabeling

settings.register_profile("repo", max_examples=100, deadline=None, derandomize=True,
                          print_blob=True)
settings.load_profile("repo")


def random_alpha_for(seed: int):
    kinds = ("below", "const", "one")
    return scenarios.random_alpha(np.random.default_rng(seed + 1), kinds[seed % 3])


def random_state(seed: int, n_cells: int | None = None):
    """Random admissible Eulerian data with a matching alpha.

    Atoms are only drawn for alpha strictly below one, where nu = mu with
    atoms is admissible.
    """
    rng = np.random.default_rng(seed)
    a = random_alpha_for(seed)
    n = int(rng.integers(2, 10)) if n_cells is None else n_cells
    atoms = a.klass != "identically_one" and rng.uniform() < 0.4
    E = scenarios.random_multipeakon(rng, n, with_rho=rng.uniform() < 0.6, with_atoms=atoms)
    return E, a


def random_relabeling(rng: np.random.Generator, n: int = 6) -> Relabeling:
    xs = np.sort(rng.uniform(-6.0, 6.0, size=n))
    while np.min(np.diff(xs)) < 0.1:
        xs = np.sort(rng.uniform(-6.0, 6.0, size=n))
    slopes = rng.uniform(0.5, 2.0, size=n - 1)
    fx = xs[0] + rng.uniform(-0.5, 0.5) + np.concatenate([[0.0], np.cumsum(slopes * np.diff(xs))])
    return Relabeling.from_nodes(xs, fx)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def a1_traj():
    from hsx2.evolution import solve_event_driven
    g = scenarios.a1()
    return g, solve_event_driven(g.lagrangian, g.alpha, 4.5)
