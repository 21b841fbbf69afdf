"""Compiled match kernels with a vectorized numpy fallback.

Strategies that reduce to a lookup table (every built-in does) get
flattened into a `Program` and replayed here instead of through the
per-turn Python loop in `game._play_generic`.  Two implementations:

* numba: one @njit scalar loop, run serially over a batch of matches.
* numpy: the same loop vectorized across the batch, one turn at a time.

Both replicate the SplitMix64 streams from `rng.py` exactly (stream A,
stream B, noise stream, in that per-turn draw order), so the three ways
of playing a match agree bit for bit.  Pick the path with the
IPDLAB_BACKEND environment variable ("numba" or "numpy"); when it is
unset, numba is used if it imports, numpy otherwise.

The tricky parity detail: stochastic strategies draw exactly one double
per turn and deterministic ones draw nothing, so the numpy path computes
candidate draws for whole arrays but only commits advanced stream state
on the stochastic rows.
"""

import os

import numpy as np

from .rng import DOUBLE_UNIT, GOLDEN, MASK64, MIX1, MIX2

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap


KIND_FSM = 0
KIND_RANDOM = 1

# uint64 copies of the rng constants; inside @njit everything must stay
# unsigned or numba silently promotes mixed arithmetic to float64.
_UG = np.uint64(GOLDEN)
_M1 = np.uint64(MIX1)
_M2 = np.uint64(MIX2)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_TAG1 = np.uint64((1 * GOLDEN) & MASK64)
_TAG2 = np.uint64((2 * GOLDEN) & MASK64)
_TAG3 = np.uint64((3 * GOLDEN) & MASK64)


def _pick_backend() -> str:
    requested = os.environ.get("IPDLAB_BACKEND", "").strip().lower()
    if requested not in ("", "numba", "numpy"):
        raise RuntimeError(
            f"IPDLAB_BACKEND must be 'numba' or 'numpy', got {requested!r}"
        )
    if requested == "numpy":
        return "numpy"
    if requested == "numba":
        if not HAS_NUMBA:
            raise RuntimeError("IPDLAB_BACKEND=numba but numba is not importable")
        return "numba"
    return "numba" if HAS_NUMBA else "numpy"


_BACKEND = _pick_backend()


def active_backend() -> str:
    """Which kernel path play_batch uses when none is forced."""
    return _BACKEND


# ── program encoding ─────────────────────────────────────────────────


class Program:
    """Flat, kernel-ready form of one strategy.

    kind KIND_FSM uses next_state/emit/start/first; kind KIND_RANDOM
    ignores them and cooperates with probability p each turn.  States
    are re-indexed to 0..n-1 in ascending id order.
    """

    __slots__ = ("kind", "next_state", "emit", "start", "first", "p")

    def __init__(self, kind, next_state, emit, start, first, p):
        self.kind = kind
        self.next_state = next_state
        self.emit = emit
        self.start = start
        self.first = first
        self.p = p


def fsm_program(spec) -> Program:
    """Encode an FsmSpec.  The machine must be valid (total transitions)."""
    order = sorted(set(spec.states))
    index = {s: i for i, s in enumerate(order)}
    n = len(order)
    next_state = np.zeros((n, 2), dtype=np.int64)
    emit = np.zeros((n, 2), dtype=np.int8)
    for s in order:
        for opp in (0, 1):
            # Action is an IntEnum, so plain ints hit the same dict keys.
            target, own = spec.transitions[(s, opp)]
            next_state[index[s], opp] = index[target]
            emit[index[s], opp] = int(own)
    return Program(KIND_FSM, next_state, emit, index[spec.start_state],
                   int(spec.initial_action), 0.0)


def random_program(p: float) -> Program:
    """Encode a coin-flip strategy that cooperates with probability p."""
    return Program(KIND_RANDOM, np.zeros((1, 2), dtype=np.int64),
                   np.zeros((1, 2), dtype=np.int8), 0, 0, float(p))


def _pack(programs):
    count = len(programs)
    width = max(prog.next_state.shape[0] for prog in programs)
    kind = np.zeros(count, dtype=np.int8)
    next_state = np.zeros((count, width, 2), dtype=np.int64)
    emit = np.zeros((count, width, 2), dtype=np.int8)
    start = np.zeros(count, dtype=np.int64)
    first = np.zeros(count, dtype=np.int8)
    coop_p = np.zeros(count, dtype=np.float64)
    for i, prog in enumerate(programs):
        n = prog.next_state.shape[0]
        kind[i] = prog.kind
        next_state[i, :n] = prog.next_state
        emit[i, :n] = prog.emit
        start[i] = prog.start
        first[i] = prog.first
        coop_p[i] = prog.p
    return kind, next_state, emit, start, first, coop_p


# ── numba path ───────────────────────────────────────────────────────


@njit(cache=True)
def _mix_u64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def _batch_numba(kind_a, next_a, emit_a, start_a, first_a, p_a,
                 kind_b, next_b, emit_b, start_b, first_b, p_b,
                 turns, noise, seeds, out_a, out_b):
    for m in range(seeds.shape[0]):
        seed = seeds[m]
        sa = _mix_u64(seed + _TAG1)
        sb = _mix_u64(seed + _TAG2)
        sn = _mix_u64(seed + _TAG3)
        cur_a = start_a[m]
        cur_b = start_b[m]
        prev_a = np.int64(0)
        prev_b = np.int64(0)
        for t in range(turns):
            if kind_a[m] == KIND_RANDOM:
                sa = sa + _UG
                u = np.float64(_mix_u64(sa) >> _S11) * DOUBLE_UNIT
                act_a = np.int64(0) if u < p_a[m] else np.int64(1)
            elif t == 0:
                act_a = np.int64(first_a[m])
            else:
                act_a = np.int64(emit_a[m, cur_a, prev_b])
                cur_a = next_a[m, cur_a, prev_b]

            if kind_b[m] == KIND_RANDOM:
                sb = sb + _UG
                u = np.float64(_mix_u64(sb) >> _S11) * DOUBLE_UNIT
                act_b = np.int64(0) if u < p_b[m] else np.int64(1)
            elif t == 0:
                act_b = np.int64(first_b[m])
            else:
                act_b = np.int64(emit_b[m, cur_b, prev_a])
                cur_b = next_b[m, cur_b, prev_a]

            if noise > 0.0:
                sn = sn + _UG
                if np.float64(_mix_u64(sn) >> _S11) * DOUBLE_UNIT < noise:
                    act_a = act_a ^ 1
                sn = sn + _UG
                if np.float64(_mix_u64(sn) >> _S11) * DOUBLE_UNIT < noise:
                    act_b = act_b ^ 1

            out_a[m, t] = act_a
            out_b[m, t] = act_b
            prev_a = act_a
            prev_b = act_b


# ── numpy path ───────────────────────────────────────────────────────


def _mix_np(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def _doubles_np(z):
    return (z >> _S11).astype(np.float64) * DOUBLE_UNIT


def _batch_numpy(kind_a, next_a, emit_a, start_a, first_a, p_a,
                 kind_b, next_b, emit_b, start_b, first_b, p_b,
                 turns, noise, seeds, out_a, out_b):
    m = seeds.shape[0]
    rows = np.arange(m)
    sa = _mix_np(seeds + _TAG1)
    sb = _mix_np(seeds + _TAG2)
    sn = _mix_np(seeds + _TAG3)
    stoch_a = kind_a == KIND_RANDOM
    stoch_b = kind_b == KIND_RANDOM
    det_a = ~stoch_a
    det_b = ~stoch_b
    cur_a = start_a.copy()
    cur_b = start_b.copy()
    first_a64 = first_a.astype(np.int64)
    first_b64 = first_b.astype(np.int64)
    prev_a = np.zeros(m, dtype=np.int64)
    prev_b = np.zeros(m, dtype=np.int64)
    act_a = np.zeros(m, dtype=np.int64)
    act_b = np.zeros(m, dtype=np.int64)
    any_stoch_a = bool(stoch_a.any())
    any_stoch_b = bool(stoch_b.any())

    for t in range(turns):
        if any_stoch_a:
            advanced = sa + _UG
            u = _doubles_np(_mix_np(advanced))
            sa = np.where(stoch_a, advanced, sa)
            act_a = np.where(stoch_a, (u >= p_a).astype(np.int64), act_a)
        if t == 0:
            act_a = np.where(det_a, first_a64, act_a)
        else:
            stepped = emit_a[rows, cur_a, prev_b].astype(np.int64)
            landed = next_a[rows, cur_a, prev_b]
            act_a = np.where(det_a, stepped, act_a)
            cur_a = np.where(det_a, landed, cur_a)

        if any_stoch_b:
            advanced = sb + _UG
            u = _doubles_np(_mix_np(advanced))
            sb = np.where(stoch_b, advanced, sb)
            act_b = np.where(stoch_b, (u >= p_b).astype(np.int64), act_b)
        if t == 0:
            act_b = np.where(det_b, first_b64, act_b)
        else:
            stepped = emit_b[rows, cur_b, prev_a].astype(np.int64)
            landed = next_b[rows, cur_b, prev_a]
            act_b = np.where(det_b, stepped, act_b)
            cur_b = np.where(det_b, landed, cur_b)

        if noise > 0.0:
            sn = sn + _UG
            flip_a = _doubles_np(_mix_np(sn)) < noise
            sn = sn + _UG
            flip_b = _doubles_np(_mix_np(sn)) < noise
            act_a = act_a ^ flip_a.astype(np.int64)
            act_b = act_b ^ flip_b.astype(np.int64)

        out_a[:, t] = act_a
        out_b[:, t] = act_b
        prev_a = act_a
        prev_b = act_b


# ── dispatch ─────────────────────────────────────────────────────────


def play_batch(progs_a, progs_b, turns, noise, seeds, backend=None):
    """Play len(seeds) matches that share turns and noise level.

    progs_a[i] meets progs_b[i] under seeds[i].  Returns two int8
    arrays of shape (matches, turns) with the recorded actions.
    """
    if not (len(progs_a) == len(progs_b) == len(seeds)):
        raise ValueError("progs_a, progs_b and seeds must have equal length")
    name = backend if backend is not None else _BACKEND
    if name == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")

    seed_arr = np.asarray(list(seeds), dtype=np.uint64)
    count = seed_arr.shape[0]
    out_a = np.zeros((count, turns), dtype=np.int8)
    out_b = np.zeros((count, turns), dtype=np.int8)
    if count == 0:
        return out_a, out_b
    args = _pack(progs_a) + _pack(progs_b)
    impl = _batch_numba if name == "numba" else _batch_numpy
    impl(*args, turns, float(noise), seed_arr, out_a, out_b)
    return out_a, out_b


def play_one(prog_a, prog_b, turns, noise, seed, backend=None):
    """Single-match convenience wrapper around play_batch."""
    out_a, out_b = play_batch([prog_a], [prog_b], turns, noise, [seed], backend=backend)
    return out_a[0], out_b[0]
