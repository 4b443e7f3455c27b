import numpy as np
import pytest
from hypothesis import strategies as st

from permsym import Activation, Network, NetworkPermutation, LayerPermutation

ACTIVATIONS = list(Activation)


def random_net(rng, architecture, *, bias=True, hidden="tanh", output="identity"):
    return Network.random(architecture, rng, bias=bias, hidden_activation=hidden,
                          output_activation=output)


def random_perm(rng, widths):
    return NetworkPermutation(tuple(LayerPermutation(tuple(rng.permutation(n))) for n in widths))


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


@st.composite
def layer_perms(draw, max_n=7):
    n = draw(st.integers(1, max_n))
    return LayerPermutation(tuple(draw(st.permutations(range(n)))))


@st.composite
def net_perms(draw, widths):
    return NetworkPermutation(tuple(
        LayerPermutation(tuple(draw(st.permutations(range(n))))) for n in widths))


@st.composite
def architectures(draw, max_hidden=3, max_width=5):
    n_hidden = draw(st.integers(1, max_hidden))
    return tuple(draw(st.lists(st.integers(1, max_width), min_size=n_hidden + 2,
                               max_size=n_hidden + 2)))


ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, seconds, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(
            f"{'PASS' if ok else 'FAIL'}  {name}  ({seconds:.3f} s)  {detail}")
