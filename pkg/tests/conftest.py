import numpy as np
import pytest
from hypothesis import strategies as st

from arnpg.mdp import TabularMDP, random_mdp


def chain_mdp():
    """s0 -> s1 deterministically, s1 absorbing, reward 1 only at s1, gamma 0.5, rho = s0."""
    P = np.zeros((2, 1, 2))
    P[0, 0, 1] = 1.0
    P[1, 0, 1] = 1.0
    R = np.array([[[0.0], [1.0]]])
    return TabularMDP(P, R, 0.5, np.array([1.0, 0.0]))


def bandit_mdp(gamma=0.5, m=1):
    """One state, two actions, self loop."""
    return TabularMDP(np.ones((1, 2, 1)), np.zeros((m, 1, 2)), gamma, np.ones(1))


@pytest.fixture
def chain():
    return chain_mdp()


@pytest.fixture(scope="session")
def paper_cmdp():
    return random_mdp(1, 20, 10, 2, 0.8)


# hypothesis strategies
sizes = st.tuples(st.integers(1, 6), st.integers(1, 5), st.integers(1, 3))
gammas = st.floats(0.3, 0.95)
seeds = st.integers(0, 2 ** 32 - 1)


@st.composite
def mdps(draw, max_states=6, max_actions=5, m=None):
    S = draw(st.integers(1, max_states))
    A = draw(st.integers(1, max_actions))
    mm = m if m is not None else draw(st.integers(1, 3))
    return random_mdp(draw(seeds), S, A, mm, draw(gammas))


# one line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
