"""Metropolis chain over length-2B operator strings.

Every step consumes exactly four uniforms from a ``numpy.random.Generator``
in the order (lazy coin, position, operator, accept coin), whether or not the
chain is lazy, so the single-step Python path and the compiled block path
produce identical trajectories from the same seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import _kernels
from .hamiltonian import AFM, FM, VERTEX, BipartiteModel, OperatorSlot, check
from .loopcfg import Configuration, SlotTable

BLOCK = 1 << 15


@dataclass(frozen=True)
class ChainParams:
    B: int
    steps: int
    burn_in: int = 0
    thinning: int = 1
    seed: int = 0
    alpha: float = 2.0
    lazy: bool = False

    def __post_init__(self):
        if self.B < 1:
            raise ValueError("B must be >= 1")
        if self.burn_in < 0 or self.steps < self.burn_in:
            raise ValueError("need steps >= burn_in >= 0")
        if self.thinning < 1:
            raise ValueError("thinning must be >= 1")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")

    @property
    def n_records(self) -> int:
        return (self.steps - self.burn_in) // self.thinning


@dataclass
class ChainState:
    table: SlotTable
    seq: np.ndarray  # alphabet indices, length 2B
    loop_count: int
    log_t: float
    proposals: int = 0
    accepted: int = 0

    @property
    def config(self) -> Configuration:
        return self.table.decode(self.seq)

    def copy(self) -> "ChainState":
        return ChainState(self.table, self.seq.copy(), self.loop_count, self.log_t, self.proposals, self.accepted)


@dataclass
class SampleRecord:
    step: int
    loop_count: int
    acceptance: float
    measurements: np.ndarray  # alpha^(L(x_O) - L(x)) per observable column
    config: np.ndarray | None = field(default=None, repr=False)


def observable_columns(model: BipartiteModel) -> list[OperatorSlot]:
    """Insertions measured on each record: every AFM edge, every FM edge, a vertex on every site."""
    cols = [OperatorSlot(AFM, (i, j)) for i, j, _ in model.afm_edges]
    cols += [OperatorSlot(FM, (k, l)) for k, l, _ in model.fm_edges]
    cols += [OperatorSlot(VERTEX, (m,)) for m in range(model.n_sites)]
    return cols


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def chain_seeds(seed: int, n_chains: int) -> list[int]:
    """Disjoint seed streams for independent chains."""
    children = np.random.SeedSequence(seed).spawn(n_chains)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def init(model: BipartiteModel, params: ChainParams, rng: np.random.Generator) -> ChainState:
    """Each of the 2B slots drawn independently and uniformly from the alphabet."""
    check(model)
    table = SlotTable.for_model(model)
    seq = rng.integers(0, len(table), size=2 * params.B, dtype=np.int64)
    return ChainState(table, seq, table.loop_count(seq, model.n_sites), float(table.log_t[seq].sum()))


def step(model: BipartiteModel, state: ChainState, params: ChainParams, rng: np.random.Generator) -> ChainState:
    """One Metropolis step; returns a new state and leaves ``state`` untouched."""
    u = rng.random(4)
    new = state.copy()
    if params.lazy and u[0] < 0.5:
        return new
    table = state.table
    m = len(state.seq)
    k = min(int(u[1] * m), m - 1)
    o = min(int(u[2] * len(table)), len(table) - 1)
    new.proposals += 1
    old = int(state.seq[k])
    if o == old:
        new.accepted += 1
        return new
    trial = state.seq.copy()
    trial[k] = o
    loops = table.loop_count(trial, model.n_sites)
    log_ratio = (loops - state.loop_count) * math.log(params.alpha) + table.log_t[o] - table.log_t[old]
    if log_ratio >= 0.0 or u[3] < math.exp(log_ratio):
        new.seq = trial
        new.loop_count = loops
        new.log_t = state.log_t + table.log_t[o] - table.log_t[old]
        new.accepted += 1
    return new


def advance(model: BipartiteModel, state: ChainState, params: ChainParams, rng: np.random.Generator,
            n_steps: int) -> ChainState:
    """``n_steps`` compiled steps, mutating ``state`` in place."""
    table = state.table
    cache = np.array([state.loop_count, state.log_t], dtype=np.float64)
    done = 0
    while done < n_steps:
        n = min(BLOCK, n_steps - done)
        p, a = _kernels.metropolis_block(table.kinds, table.sa, table.sb, table.log_t, model.n_sites,
                                         state.seq, cache, rng.random((n, 4)), math.log(params.alpha),
                                         params.lazy)
        state.proposals += p
        state.accepted += a
        done += n
    state.loop_count = int(cache[0])
    state.log_t = float(cache[1])
    return state


def run_chunks(model: BipartiteModel, params: ChainParams, keep_configs: bool = True,
               observables: Sequence[OperatorSlot] | None = None, chunk_records: int = 4096):
    """Yield dicts of arrays (step, loop_count, acceptance, measurements, configs) per chunk of records."""
    rng = make_rng(params.seed)
    state = init(model, params, rng)
    advance(model, state, params, rng, params.burn_in)
    obs = list(observables) if observables is not None else observable_columns(model)
    obs_kind = np.array([_kernels.KIND_CODE[o.kind] for o in obs], dtype=np.int64)
    obs_a = np.array([o.sites[0] for o in obs], dtype=np.int64)
    obs_b = np.array([o.sites[-1] for o in obs], dtype=np.int64)
    table = state.table
    cache = np.array([state.loop_count, state.log_t], dtype=np.float64)
    log_alpha = math.log(params.alpha)
    remaining = params.n_records
    step_no = params.burn_in
    while remaining > 0:
        n_rec = min(chunk_records, remaining, max(1, BLOCK // params.thinning))
        uniforms = rng.random((n_rec * params.thinning, 4))
        loops = np.empty(n_rec, dtype=np.int64)
        meas = np.empty((n_rec, len(obs)), dtype=np.float64)
        configs = np.empty((n_rec if keep_configs else 0, len(state.seq)), dtype=np.int64)
        proposals, accepted = _kernels.record_block(
            table.kinds, table.sa, table.sb, table.log_t, model.n_sites, state.seq, cache, uniforms,
            params.thinning, log_alpha, params.lazy, obs_kind, obs_a, obs_b, loops, meas, configs, keep_configs)
        state.proposals += proposals
        state.accepted += accepted
        steps = step_no + params.thinning * np.arange(1, n_rec + 1)
        step_no = int(steps[-1])
        remaining -= n_rec
        yield {
            "step": steps,
            "loop_count": loops,
            "acceptance": state.accepted / max(state.proposals, 1),
            "measurements": meas,
            "configs": configs if keep_configs else None,
        }
    state.loop_count = int(cache[0])
    state.log_t = float(cache[1])


def run(model: BipartiteModel, params: ChainParams, keep_configs: bool = True) -> Iterator[SampleRecord]:
    """Stream (steps - burn_in) // thinning records, deterministic in ``params.seed``."""
    for chunk in run_chunks(model, params, keep_configs=keep_configs):
        for r in range(len(chunk["step"])):
            yield SampleRecord(
                step=int(chunk["step"][r]),
                loop_count=int(chunk["loop_count"][r]),
                acceptance=chunk["acceptance"],
                measurements=chunk["measurements"][r],
                config=chunk["configs"][r] if keep_configs else None,
            )


def run_arrays(model: BipartiteModel, params: ChainParams, keep_configs: bool = False) -> dict:
    """Whole run collected into arrays; cheaper than :func:`run` for long chains."""
    chunks = list(run_chunks(model, params, keep_configs=keep_configs))
    n_obs = len(observable_columns(model))
    if not chunks:
        return {"step": np.zeros(0, dtype=np.int64), "loop_count": np.zeros(0, dtype=np.int64),
                "acceptance": float("nan"), "measurements": np.zeros((0, n_obs)),
                "configs": np.zeros((0, 2 * params.B), dtype=np.int64) if keep_configs else None}
    return {
        "step": np.concatenate([c["step"] for c in chunks]),
        "loop_count": np.concatenate([c["loop_count"] for c in chunks]),
        "acceptance": chunks[-1]["acceptance"],
        "measurements": np.concatenate([c["measurements"] for c in chunks]),
        "configs": np.concatenate([c["configs"] for c in chunks]) if keep_configs else None,
    }
