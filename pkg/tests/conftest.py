"""Shared fixtures and generators for the test suite."""

import pytest
from hypothesis import strategies as st

from ipdlab import Action, FsmSpec, builtin_fsm, default_registry


@pytest.fixture(scope="session")
def registry():
    return default_registry()


@pytest.fixture(scope="session")
def e8():
    return builtin_fsm("EvolvedFSM8")


@pytest.fixture(scope="session")
def e6():
    return builtin_fsm("EvolvedFSM6")


@pytest.fixture(scope="session")
def secondprac():
    return builtin_fsm("SecondPrac")


@pytest.fixture(scope="session")
def fourthprac():
    return builtin_fsm("FourthPrac")


def build_fsm(name, start, initial, rows):
    """Compact FsmSpec builder for tests.

    rows maps state -> ((target on C, action on C), (target on D, action on D))
    with actions as 'C'/'D' strings.
    """
    transitions = {}
    for state, (on_c, on_d) in rows.items():
        transitions[(state, Action.C)] = (on_c[0], Action.from_token(on_c[1]))
        transitions[(state, Action.D)] = (on_d[0], Action.from_token(on_d[1]))
    return FsmSpec(
        name=name,
        states=tuple(sorted(rows)),
        start_state=start,
        initial_action=Action.from_token(initial),
        transitions=transitions,
    )


@st.composite
def fsm_specs(draw, max_states=4, name="machine"):
    """Uniformly random valid machines with small state counts."""
    n = draw(st.integers(min_value=1, max_value=max_states))
    states = tuple(range(1, n + 1))
    transitions = {}
    for s in states:
        for opp in (Action.C, Action.D):
            target = draw(st.sampled_from(states))
            own = draw(st.sampled_from((Action.C, Action.D)))
            transitions[(s, opp)] = (target, own)
    return FsmSpec(
        name=name,
        states=states,
        start_state=draw(st.sampled_from(states)),
        initial_action=draw(st.sampled_from((Action.C, Action.D))),
        transitions=transitions,
    )


action_sequences = st.lists(
    st.sampled_from((Action.C, Action.D)), min_size=0, max_size=12
)
