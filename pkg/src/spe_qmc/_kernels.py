"""Compiled inner loops: loop counting by union-find, Metropolis blocks, insertion measurements.

Slots are encoded by three parallel arrays (kind, a, b) with kind 0 = AFM bridge,
1 = FM bridge, 2 = vertex; b is unused for vertices.
"""
import numpy as np
from numba import njit

KIND_CODE = {"A": 0, "F": 1, "V": 2}


@njit(cache=True)
def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@njit(cache=True)
def _union(parent, x, y):
    rx = _find(parent, x)
    ry = _find(parent, y)
    if rx == ry:
        return 0
    if rx < ry:
        parent[ry] = rx
    else:
        parent[rx] = ry
    return 1


@njit(cache=True)
def count_loops(kinds, sa, sb, seq, n_sites, replace_pos, replace_idx, ins_pos, ins_kind, ins_a, ins_b):
    """L of ``seq`` with optional single-slot replacement and optional insertion.

    replace_pos < 0 disables replacement; ins_pos < 0 disables insertion. The
    inserted operator goes in front of seq[ins_pos] (ins_pos == len(seq) appends).
    """
    m = seq.shape[0]
    total = m + (1 if ins_pos >= 0 else 0)
    parent = np.arange(n_sites + 2 * total)
    last = np.arange(n_sites)
    nseg = n_sites
    merges = 0
    src = 0
    for p in range(total):
        if p == ins_pos:
            kind = ins_kind
            a = ins_a
            b = ins_b
        else:
            idx = seq[src]
            if src == replace_pos:
                idx = replace_idx
            src += 1
            kind = kinds[idx]
            a = sa[idx]
            b = sb[idx]
        if kind == 2:
            last[a] = nseg
            nseg += 1
            continue
        below_a = last[a]
        below_b = last[b]
        above_a = nseg
        above_b = nseg + 1
        nseg += 2
        if kind == 0:
            merges += _union(parent, below_a, below_b)
            merges += _union(parent, above_a, above_b)
        else:
            merges += _union(parent, below_a, above_b)
            merges += _union(parent, below_b, above_a)
        last[a] = above_a
        last[b] = above_b
    return nseg - merges


@njit(cache=True)
def loop_count(kinds, sa, sb, seq, n_sites):
    return count_loops(kinds, sa, sb, seq, n_sites, -1, 0, -1, 0, 0, 0)


@njit(cache=True)
def metropolis_block(kinds, sa, sb, log_t, n_sites, seq, state, uniforms, log_alpha, lazy):
    """Advance the chain by ``uniforms.shape[0]`` steps in place.

    Each step consumes one row (lazy coin, position, operator, accept coin).
    ``state`` holds [L, sum log T]. Returns (proposals, accepted).
    """
    m = seq.shape[0]
    n_alpha = kinds.shape[0]
    proposals = 0
    accepted = 0
    for s in range(uniforms.shape[0]):
        if lazy and uniforms[s, 0] < 0.5:
            continue
        proposals += 1
        k = min(int(uniforms[s, 1] * m), m - 1)
        o = min(int(uniforms[s, 2] * n_alpha), n_alpha - 1)
        old = seq[k]
        if o == old:
            accepted += 1
            continue
        l_new = count_loops(kinds, sa, sb, seq, n_sites, k, o, -1, 0, 0, 0)
        log_ratio = (l_new - state[0]) * log_alpha + log_t[o] - log_t[old]
        if log_ratio >= 0.0 or uniforms[s, 3] < np.exp(log_ratio):
            seq[k] = o
            state[0] = l_new
            state[1] += log_t[o] - log_t[old]
            accepted += 1
    return proposals, accepted


@njit(cache=True)
def measure_insertions(kinds, sa, sb, seq, n_sites, loops, pos, obs_kind, obs_a, obs_b, log_alpha, out):
    """out[q] = alpha ** (L(seq with observable q inserted at pos) - loops)."""
    for q in range(obs_kind.shape[0]):
        l_ins = count_loops(kinds, sa, sb, seq, n_sites, -1, 0, pos, obs_kind[q], obs_a[q], obs_b[q])
        out[q] = np.exp((l_ins - loops) * log_alpha)


@njit(cache=True)
def record_block(kinds, sa, sb, log_t, n_sites, seq, state, uniforms, thinning, log_alpha, lazy,
                 obs_kind, obs_a, obs_b, loops_out, meas_out, configs_out, keep_configs):
    """Run ``loops_out.shape[0]`` records of ``thinning`` steps each, measuring after every record."""
    n_rec = loops_out.shape[0]
    mid = seq.shape[0] // 2
    proposals = 0
    accepted = 0
    for r in range(n_rec):
        p, a = metropolis_block(kinds, sa, sb, log_t, n_sites, seq, state,
                                uniforms[r * thinning:(r + 1) * thinning], log_alpha, lazy)
        proposals += p
        accepted += a
        loops_out[r] = state[0]
        measure_insertions(kinds, sa, sb, seq, n_sites, state[0], mid, obs_kind, obs_a, obs_b,
                           log_alpha, meas_out[r])
        if keep_configs:
            configs_out[r, :] = seq
    return proposals, accepted


@njit(cache=True)
def loop_counts_all(kinds, sa, sb, configs, n_sites):
    out = np.empty(configs.shape[0], dtype=np.int64)
    for r in range(configs.shape[0]):
        out[r] = loop_count(kinds, sa, sb, configs[r], n_sites)
    return out
