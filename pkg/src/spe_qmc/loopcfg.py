"""Loop representation of operator sequences.

A configuration is a tuple of :class:`OperatorSlot`; position 0 sits next to
the left boundary state and the last position next to the right boundary.
Each site's world line is cut into segments by the operators acting on it.
Segments are glued into loops by the local rules

* AFM bridge on (i, j): below-i with below-j, above-i with above-j (U-turn);
* FM bridge on (k, l): below-k with above-l, below-l with above-k;
* vertex on m: nothing, the world line of m just ends and restarts.

This module is the readable reference; ``_kernels`` holds the compiled
counterpart used by the sampler.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import _kernels
from .hamiltonian import AFM, FM, VERTEX, BipartiteModel, OperatorSlot, operator_alphabet

Configuration = tuple[OperatorSlot, ...]

CLOSED = "closed"
OPEN_BOUNDARY = "open-boundary"
OPEN_VERTEX = "open-vertex"


class Endpoint(NamedTuple):
    kind: str  # "left", "right" or "vertex"
    site: int
    position: int  # slot index of the vertex operator; -1 for boundaries


@dataclass(frozen=True)
class LoopDecomposition:
    n_sites: int
    length: int
    loop_count: int
    events: tuple[tuple[int, ...], ...]  # per site, slot positions touching it
    segment_loop: dict  # (site, k) -> canonical loop label
    loop_kind: dict  # label -> CLOSED / OPEN_BOUNDARY / OPEN_VERTEX
    endpoints: dict  # label -> tuple of Endpoint (empty for closed loops)

    def segment_at_cut(self, site: int, t: int) -> tuple[int, int]:
        """Segment of ``site`` spanning the cut after the first ``t`` slots."""
        k = sum(1 for p in self.events[site] if p < t)
        return site, k

    def loops_at_cut(self, t: int) -> set[int]:
        return {self.segment_loop[self.segment_at_cut(s, t)] for s in range(self.n_sites)}


class _DisjointSets:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x, y):
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            self.parent[max(rx, ry)] = min(rx, ry)


def decompose(model: BipartiteModel, config: Sequence[OperatorSlot]) -> LoopDecomposition:
    n = model.n_sites
    events: list[list[int]] = [[] for _ in range(n)]
    for p, slot in enumerate(config):
        for s in slot.sites:
            if not 0 <= s < n:
                raise ValueError(f"slot {slot} at position {p} acts outside the model")
            events[s].append(p)

    offset = [0] * n
    for s in range(1, n):
        offset[s] = offset[s - 1] + len(events[s - 1]) + 1
    n_seg = offset[-1] + len(events[-1]) + 1 if n else 0

    def seg_id(site, k):
        return offset[site] + k

    # how many events on each site have been passed while scanning left to right
    seen = [0] * n
    dsu = _DisjointSets(n_seg)
    for slot in config:
        if slot.kind == VERTEX:
            seen[slot.sites[0]] += 1
            continue
        i, j = slot.sites
        below_i, below_j = seg_id(i, seen[i]), seg_id(j, seen[j])
        above_i, above_j = below_i + 1, below_j + 1
        if slot.kind == AFM:
            dsu.union(below_i, below_j)
            dsu.union(above_i, above_j)
        else:
            dsu.union(below_i, above_j)
            dsu.union(below_j, above_i)
        seen[i] += 1
        seen[j] += 1

    segment_loop = {}
    ends: dict[int, list[Endpoint]] = {}
    for s in range(n):
        ev = events[s]
        for k in range(len(ev) + 1):
            label = dsu.find(seg_id(s, k))
            segment_loop[(s, k)] = label
            bucket = ends.setdefault(label, [])
            if k == 0:
                bucket.append(Endpoint("left", s, -1))
            elif config[ev[k - 1]].kind == VERTEX:
                bucket.append(Endpoint("vertex", s, ev[k - 1]))
            if k == len(ev):
                bucket.append(Endpoint("right", s, -1))
            elif config[ev[k]].kind == VERTEX:
                bucket.append(Endpoint("vertex", s, ev[k]))

    loop_kind = {}
    for label, eps in ends.items():
        if any(e.kind != "vertex" for e in eps):
            loop_kind[label] = OPEN_BOUNDARY
        elif eps:
            loop_kind[label] = OPEN_VERTEX
        else:
            loop_kind[label] = CLOSED
    return LoopDecomposition(
        n_sites=n,
        length=len(config),
        loop_count=len(ends),
        events=tuple(tuple(e) for e in events),
        segment_loop=segment_loop,
        loop_kind=loop_kind,
        endpoints={label: tuple(eps) for label, eps in ends.items()},
    )


def _weights(model: BipartiteModel) -> dict[OperatorSlot, float]:
    return {slot: slot.weight for slot in operator_alphabet(model)}


def log_weight(model: BipartiteModel, config: Sequence[OperatorSlot], alpha: float = 2.0) -> tuple[int, float]:
    """(L, L ln alpha + sum ln T) with T looked up in the model's alphabet."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    table = _weights(model)
    try:
        log_t = math.fsum(math.log(table[slot]) for slot in config)
    except KeyError as exc:
        raise ValueError(f"slot {exc.args[0]} is not in the model's alphabet") from None
    loops = decompose(model, config).loop_count
    return loops, loops * math.log(alpha) + log_t


def replace(config: Sequence[OperatorSlot], position: int, slot: OperatorSlot) -> Configuration:
    if not 0 <= position < len(config):
        raise IndexError(f"position {position} out of range for length {len(config)}")
    out = list(config)
    out[position] = slot
    return tuple(out)


def insert(config: Sequence[OperatorSlot], position: int, slot: OperatorSlot) -> Configuration:
    if not 0 <= position <= len(config):
        raise IndexError(f"insertion position {position} out of range for length {len(config)}")
    return tuple(config[:position]) + (slot,) + tuple(config[position:])


def weight_ratio(model: BipartiteModel, config: Sequence[OperatorSlot], position: int,
                 new_slot: OperatorSlot, alpha: float = 2.0) -> float:
    """pi(config with slot ``position`` replaced) / pi(config), by recounting both sides."""
    table = _weights(model)
    new = replace(config, position, new_slot)
    d_loops = decompose(model, new).loop_count - decompose(model, config).loop_count
    return alpha ** d_loops * table[new_slot] / table[config[position]]


def crossing_count(decomposition: LoopDecomposition, t: int) -> int:
    """Number of distinct loops crossing the cut between slots t-1 and t."""
    if not 0 <= t <= decomposition.length:
        raise IndexError(f"cut {t} outside [0, {decomposition.length}]")
    return len(decomposition.loops_at_cut(t))


# ---------------------------------------------------------------- text form


def format_config(config: Sequence[OperatorSlot]) -> str:
    return " ".join(slot.label for slot in config)


def parse_config(text: str, model: BipartiteModel) -> Configuration:
    """Parse ``A:i-j F:k-l V:m`` tokens into alphabet slots of ``model``."""
    lookup = {slot.label: slot for slot in operator_alphabet(model)}
    out = []
    for token in text.split():
        if token not in lookup:
            raise ValueError(f"unknown slot {token!r}")
        out.append(lookup[token])
    return tuple(out)


# ---------------------------------------------------------------- array form


class SlotTable:
    """Array encoding of an alphabet for the compiled kernels."""

    def __init__(self, slots: Sequence[OperatorSlot]):
        self.slots = list(slots)
        self.index = {slot: k for k, slot in enumerate(self.slots)}
        self.kinds = np.array([_kernels.KIND_CODE[s.kind] for s in self.slots], dtype=np.int64)
        self.sa = np.array([s.sites[0] for s in self.slots], dtype=np.int64)
        self.sb = np.array([s.sites[-1] if s.kind != VERTEX else -1 for s in self.slots], dtype=np.int64)
        self.log_t = np.array([math.log(s.weight) for s in self.slots], dtype=np.float64)

    @classmethod
    def for_model(cls, model: BipartiteModel) -> "SlotTable":
        return cls(operator_alphabet(model))

    def __len__(self):
        return len(self.slots)

    def encode(self, config: Sequence[OperatorSlot]) -> np.ndarray:
        return np.array([self.index[s] for s in config], dtype=np.int64)

    def decode(self, seq) -> Configuration:
        return tuple(self.slots[int(k)] for k in seq)

    def loop_count(self, seq: np.ndarray, n_sites: int) -> int:
        return int(_kernels.loop_count(self.kinds, self.sa, self.sb, np.asarray(seq, dtype=np.int64), n_sites))


def fast_loop_count(model: BipartiteModel, config: Sequence[OperatorSlot]) -> int:
    """Compiled L(x); must agree exactly with ``decompose(...).loop_count``."""
    slots = sorted(set(config))
    table = SlotTable(slots) if slots else SlotTable([OperatorSlot(AFM, (0, 0))])
    seq = table.encode(config) if config else np.zeros(0, dtype=np.int64)
    return table.loop_count(seq, model.n_sites)


__all__ = [
    "AFM", "FM", "VERTEX", "CLOSED", "OPEN_BOUNDARY", "OPEN_VERTEX", "Configuration", "Endpoint",
    "LoopDecomposition", "SlotTable", "crossing_count", "decompose", "fast_loop_count", "format_config",
    "insert", "log_weight", "parse_config", "replace", "weight_ratio",
]
