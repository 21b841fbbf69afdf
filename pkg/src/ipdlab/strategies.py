"""The built-in opponent roster.

Classic iterated-dilemma strategies are written here the obvious way,
as little stateful classes.  The hand-built and evolved machines ship
as text files under data/ and are parsed at import; each file's sha256
is pinned below, so a corrupted or edited copy stops the registry from
loading rather than silently changing tournament results.

Every deterministic built-in also knows an equivalent finite-state
machine.  That is what lets the compiled kernels play whole rosters:
the class is the definition, the machine is the kernel encoding, and a
test holds the two equal.
"""

import hashlib
from dataclasses import dataclass
from importlib import resources

from . import kernels
from .fsm import FsmSpec, parse_fsm
from .game import Action

_GOLDEN_SHA256 = {
    "FirstPrac": "23e24bc26f60cbaee1cd446f613b4ac56dcf493526a28beee5597bf46cf2acf3",
    "SecondPrac": "37f70116307369d98fb8d01da935e74d8440cdee586aaec7b446acc09d6c308c",
    "SecondPrac2": "6516310220306a5efbc5f26177f6d530d85f9ec1124ed6684344928bc5d86438",
    "SecondPrac3": "6e1c1600e83d56aafd1e87d4f252c01810ea574b9d035a774a03deefff3118fd",
    "FourthPrac": "e32b588174816d7e45114cc341b753e2f082e5ee86dc90024b40349efa10b4d7",
    "EvolvedFSM8": "3e5cf0a39f89ebf0d6886a15ed5ec4876307b2eb9b0b3db9546169113007bc21",
    "EvolvedFSM6": "8efe56ff7cb424f3b8048a466b305ea1d4a275639981909725baa200d7818afb",
}


class UnknownStrategyError(ValueError):
    """Asked the registry for a name it has never heard of."""


# ── strategy classes ─────────────────────────────────────────────────


class Strategy:
    """Base protocol: reset, play an opening move, respond to the last one.

    Instances serve exactly one match at a time.  reset receives the
    match's random stream; deterministic strategies just ignore it.
    """

    name = "?"
    stochastic = False
    program = None

    def reset(self, rng=None):
        pass

    def opening(self) -> Action:
        raise NotImplementedError

    def respond(self, opp_prev: Action) -> Action:
        raise NotImplementedError


class Cooperator(Strategy):
    """Cooperates no matter what."""

    name = "Cooperator"

    def opening(self):
        return Action.C

    def respond(self, opp_prev):
        return Action.C


class Defector(Strategy):
    """Defects no matter what."""

    name = "Defector"

    def opening(self):
        return Action.D

    def respond(self, opp_prev):
        return Action.D


class TitForTat(Strategy):
    """Opens with C, then mirrors whatever the opponent just did."""

    name = "TitForTat"

    def opening(self):
        return Action.C

    def respond(self, opp_prev):
        return opp_prev


class TitForTwoTats(Strategy):
    """Like TitForTat but more forgiving: defects only after two
    opponent defections in a row."""

    name = "TitForTwoTats"

    def reset(self, rng=None):
        self._streak = 0

    def opening(self):
        self._streak = 0
        return Action.C

    def respond(self, opp_prev):
        self._streak = self._streak + 1 if opp_prev is Action.D else 0
        return Action.D if self._streak >= 2 else Action.C


class Grudger(Strategy):
    """Cooperates until crossed once, then defects forever."""

    name = "Grudger"

    def reset(self, rng=None):
        self._betrayed = False

    def opening(self):
        self._betrayed = False
        return Action.C

    def respond(self, opp_prev):
        if opp_prev is Action.D:
            self._betrayed = True
        return Action.D if self._betrayed else Action.C


class Alternator(Strategy):
    """Plays C, D, C, D, ... regardless of the opponent."""

    name = "Alternator"

    def reset(self, rng=None):
        self._last = None

    def opening(self):
        self._last = Action.C
        return self._last

    def respond(self, opp_prev):
        self._last = self._last.flip()
        return self._last


class WinStayLoseShift(Strategy):
    """Repeats its move after a good payoff, switches after a bad one.

    Under any valid payoff matrix the good outcomes (temptation and
    reward) are exactly the ones where the opponent cooperated, so the
    rule reduces to: stay on opponent C, shift on opponent D.
    """

    name = "WinStayLoseShift"

    def reset(self, rng=None):
        self._last = None

    def opening(self):
        self._last = Action.C
        return self._last

    def respond(self, opp_prev):
        if opp_prev is Action.D:
            self._last = self._last.flip()
        return self._last


class Random(Strategy):
    """Cooperates with fixed probability p each turn, D otherwise."""

    name = "Random"
    stochastic = True

    def __init__(self, p: float = 0.5):
        if not (0.0 <= p <= 1.0):
            raise ValueError(f"cooperation probability must lie in [0, 1], got {p}")
        self.p = p
        self.program = kernels.random_program(p)
        self._rng = None

    def reset(self, rng=None):
        if rng is None:
            raise ValueError("Random needs a stream; pass the match rng to reset()")
        self._rng = rng

    def opening(self):
        return self._draw()

    def respond(self, opp_prev):
        return self._draw()

    def _draw(self):
        return Action.C if self._rng.next_double() < self.p else Action.D


class FsmStrategy(Strategy):
    """Interpreter for one FsmSpec; exposes the current state id for traces."""

    def __init__(self, spec: FsmSpec):
        self.spec = spec
        self.name = spec.name
        self.program = kernels.fsm_program(spec)
        self.state = spec.start_state

    def reset(self, rng=None):
        self.state = self.spec.start_state

    def opening(self):
        self.state = self.spec.start_state
        return self.spec.initial_action

    def respond(self, opp_prev):
        self.state, own = self.spec.transitions[(self.state, opp_prev)]
        return own


# ── FSM encodings of the deterministic classics ──────────────────────

_CLASSIC_FSM_TEXT = {
    "Cooperator": """
        fsm Cooperator
        start 1 C
        1 C -> 1 C
        1 D -> 1 C
    """,
    "Defector": """
        fsm Defector
        start 1 D
        1 C -> 1 D
        1 D -> 1 D
    """,
    "TitForTat": """
        fsm TitForTat
        start 1 C
        1 C -> 1 C
        1 D -> 1 D
    """,
    # state 1: clean slate, state 2: one defection on record
    "TitForTwoTats": """
        fsm TitForTwoTats
        start 1 C
        1 C -> 1 C
        1 D -> 2 C
        2 C -> 1 C
        2 D -> 2 D
    """,
    "Grudger": """
        fsm Grudger
        start 1 C
        1 C -> 1 C
        1 D -> 2 D
        2 C -> 2 D
        2 D -> 2 D
    """,
    # states track own last move; both edges flip it
    "Alternator": """
        fsm Alternator
        start 1 C
        1 C -> 2 D
        1 D -> 2 D
        2 C -> 1 C
        2 D -> 1 C
    """,
    "WinStayLoseShift": """
        fsm WinStayLoseShift
        start 1 C
        1 C -> 1 C
        1 D -> 2 D
        2 C -> 2 D
        2 D -> 1 C
    """,
}

CLASSIC_FSMS = {name: parse_fsm(text) for name, text in _CLASSIC_FSM_TEXT.items()}


# ── registry ─────────────────────────────────────────────────────────


@dataclass(frozen=True)
class StrategyId:
    """Stable identity of a roster entry: canonical name plus kind."""

    name: str
    kind: str  # "behavioral", "stochastic", or "fsm"


@dataclass(frozen=True)
class RegisteredStrategy:
    id: StrategyId
    factory: object  # zero-arg callable producing a fresh instance
    program: object  # kernel Program, or None if not encodable
    spec: object  # FsmSpec when one exists, else None

    def make(self) -> Strategy:
        return self.factory()


def _load_golden(name: str) -> FsmSpec:
    text = (resources.files("ipdlab") / "data" / f"{name}.fsm").read_text(encoding="utf-8")
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    expected = _GOLDEN_SHA256[name]
    if digest != expected:
        raise RuntimeError(
            f"built-in machine {name} failed its checksum "
            f"(expected {expected}, found {digest}); refusing to load a "
            "modified golden file"
        )
    spec = parse_fsm(text)
    if spec.name != name:
        raise RuntimeError(f"golden file for {name} declares name {spec.name!r}")
    return spec


class Registry:
    """Case-insensitive name -> strategy lookup.

    The built-in registry is immutable; `with_fsm` returns an extended
    copy for machines loaded from user files.
    """

    def __init__(self, entries):
        self._entries = {}
        for entry in entries:
            key = entry.id.name.lower()
            if key in self._entries:
                raise ValueError(f"duplicate strategy name {entry.id.name!r}")
            self._entries[key] = entry

    def get(self, name: str) -> RegisteredStrategy:
        entry = self._entries.get(name.lower())
        if entry is None:
            known = ", ".join(sorted(e.id.name for e in self._entries.values()))
            raise UnknownStrategyError(f"unknown strategy {name!r}; known: {known}")
        return entry

    def names(self):
        return sorted(entry.id.name for entry in self._entries.values())

    def with_fsm(self, spec: FsmSpec) -> "Registry":
        entry = _fsm_entry(spec)
        return Registry(list(self._entries.values()) + [entry])


def _behavioral_entry(cls) -> RegisteredStrategy:
    spec = CLASSIC_FSMS[cls.name]
    return RegisteredStrategy(
        id=StrategyId(cls.name, "behavioral"),
        factory=cls,
        program=kernels.fsm_program(spec),
        spec=spec,
    )


def _fsm_entry(spec: FsmSpec) -> RegisteredStrategy:
    return RegisteredStrategy(
        id=StrategyId(spec.name, "fsm"),
        factory=lambda spec=spec: FsmStrategy(spec),
        program=kernels.fsm_program(spec),
        spec=spec,
    )


def _build_default_registry() -> Registry:
    entries = [
        _behavioral_entry(Cooperator),
        _behavioral_entry(Defector),
        _behavioral_entry(TitForTat),
        _behavioral_entry(TitForTwoTats),
        _behavioral_entry(Grudger),
        _behavioral_entry(Alternator),
        _behavioral_entry(WinStayLoseShift),
        RegisteredStrategy(
            id=StrategyId("Random", "stochastic"),
            factory=lambda: Random(0.5),
            program=kernels.random_program(0.5),
            spec=None,
        ),
    ]
    for name in _GOLDEN_SHA256:
        entries.append(_fsm_entry(_load_golden(name)))
    return Registry(entries)


_DEFAULT_REGISTRY = _build_default_registry()


def default_registry() -> Registry:
    return _DEFAULT_REGISTRY


def builtin_strategy(name: str):
    """Factory for a built-in strategy; raises UnknownStrategyError."""
    return _DEFAULT_REGISTRY.get(name).factory


def builtin_fsm(name: str) -> FsmSpec:
    """The FsmSpec behind a built-in machine (golden files only)."""
    entry = _DEFAULT_REGISTRY.get(name)
    if entry.spec is None or entry.id.kind != "fsm":
        raise UnknownStrategyError(f"{name!r} is not one of the built-in machines")
    return entry.spec


_ROSTER_DEFAULT_NAMES = (
    "Cooperator",
    "Defector",
    "TitForTat",
    "TitForTwoTats",
    "Grudger",
    "Alternator",
    "WinStayLoseShift",
    "Random",
    "FirstPrac",
    "SecondPrac",
    "SecondPrac2",
    "SecondPrac3",
    "FourthPrac",
    "EvolvedFSM8",
    "EvolvedFSM6",
)


def roster_default():
    """The full built-in line-up, in its fixed canonical order."""
    return [_DEFAULT_REGISTRY.get(n).id for n in _ROSTER_DEFAULT_NAMES]
