"""Exact reference values for small systems.

All dense vectors live in the stoquastic frame: bit m of a basis index is the
Z value of site m (1 = up) and every matrix element of -H is non-negative.
"""
from __future__ import annotations

import itertools
import math
from math import comb

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _kernels
from .hamiltonian import AFM, VERTEX, BipartiteModel, OperatorSlot
from .loopcfg import SlotTable

DENSE_CAP = 24
FULL_ED_CAP = 12
LEAKAGE_CAP = 10
ENUMERATION_CAP = 10**7


def _check_size(n, cap, what="dense state"):
    if n > cap:
        raise ValueError(f"{what} limited to N <= {cap}, got N = {n}")


def _bits(n):
    idx = np.arange(1 << n, dtype=np.int64)
    return idx, [(idx >> m) & 1 for m in range(n)]


def apply_negH(model: BipartiteModel, state: np.ndarray, check_stoquastic: bool = False) -> np.ndarray:
    """Matrix-free -H |state>."""
    n = model.n_sites
    _check_size(n, DENSE_CAP)
    psi = np.asarray(state, dtype=np.float64)
    if psi.shape != (1 << n,):
        raise ValueError(f"state must have length 2^{n}")
    idx, bits = _bits(n)
    out = np.zeros_like(psi)
    for i, j, w in model.afm_edges:
        anti = bits[i] != bits[j]
        flipped = idx ^ ((1 << i) | (1 << j))
        out += np.where(anti, 0.5 * w * (psi + psi[flipped]), 0.0)
    for k, l, v in model.fm_edges:
        anti = bits[k] != bits[l]
        flipped = idx ^ ((1 << k) | (1 << l))
        out += 0.5 * v * np.where(anti, psi[flipped], psi)
    for m, g in enumerate(model.fields):
        if g > 0:
            out += g * (psi + psi[idx ^ (1 << m)])
    if check_stoquastic:
        assert dense_negH(model).min() >= 0.0
    return out


def dense_negH(model: BipartiteModel) -> np.ndarray:
    """-H as a dense matrix, assembled term by term (independent of ``apply_negH``)."""
    n = model.n_sites
    _check_size(n, FULL_ED_CAP, "dense matrix")
    dim = 1 << n
    mat = np.zeros((dim, dim))
    for x in range(dim):
        for i, j, w in model.afm_edges:
            if ((x >> i) & 1) != ((x >> j) & 1):
                y = x ^ (1 << i) ^ (1 << j)
                mat[x, x] += 0.5 * w
                mat[y, x] += 0.5 * w
        for k, l, v in model.fm_edges:
            if ((x >> k) & 1) == ((x >> l) & 1):
                mat[x, x] += 0.5 * v
            else:
                mat[x ^ (1 << k) ^ (1 << l), x] += 0.5 * v
        for m, g in enumerate(model.fields):
            if g > 0:
                mat[x, x] += g
                mat[x ^ (1 << m), x] += g
    return mat


def plus_state(n: int) -> np.ndarray:
    return np.full(1 << n, 2.0 ** (-n / 2))


def plus_moment(model: BipartiteModel, power: int) -> float:
    """<+^N| (-H)^power |+^N>."""
    left = plus_state(model.n_sites)
    right = left.copy()
    half = power // 2
    for _ in range(half):
        left = apply_negH(model, left)
    right = left.copy()
    if power % 2:
        right = apply_negH(model, right)
    return float(np.dot(left, right))


def mb_state(model: BipartiteModel, B: int) -> np.ndarray:
    """Normalised (-H)^B |+^N>."""
    psi = plus_state(model.n_sites)
    for _ in range(B):
        psi = apply_negH(model, psi)
        psi /= np.linalg.norm(psi)
    return psi


def mb_energy(model: BipartiteModel, B: int) -> float:
    psi = mb_state(model, B)
    return -float(psi @ apply_negH(model, psi))


def x_expectations(psi: np.ndarray, n: int) -> np.ndarray:
    """<psi|X_m|psi> for every site."""
    idx = np.arange(psi.shape[0])
    return np.array([float(psi @ psi[idx ^ (1 << m)]) for m in range(n)])


def mb_neel(model: BipartiteModel, B: int) -> float:
    """<M_B| N^-1 sum_m X_m |M_B> in the stoquastic frame."""
    return float(x_expectations(mb_state(model, B), model.n_sites).mean())


def exact_ground_energy(model: BipartiteModel) -> tuple[float, np.ndarray]:
    n = model.n_sites
    _check_size(n, DENSE_CAP)
    if n <= FULL_ED_CAP:
        vals, vecs = np.linalg.eigh(dense_negH(model))
        return -float(vals[-1]), vecs[:, -1]
    op = spla.LinearOperator((1 << n, 1 << n), matvec=lambda v: apply_negH(model, v), dtype=np.float64)
    vals, vecs = spla.eigsh(op, k=1, which="LA", tol=1e-12, v0=plus_state(n))
    return -float(vals[0]), vecs[:, 0]


def spectrum(model: BipartiteModel) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues of H (ascending) and eigenvectors as columns."""
    vals, vecs = np.linalg.eigh(dense_negH(model))
    return -vals[::-1], vecs[:, ::-1]


# ---------------------------------------------------------------- Lieb-Mattis sector


def sector_basis(n: int, weight: int) -> np.ndarray:
    """Basis states with ``weight`` up spins, in increasing integer order."""
    states = [sum(1 << b for b in combo) for combo in itertools.combinations(range(n), weight)]
    return np.array(sorted(states), dtype=np.int64)


def sector_negH(model: BipartiteModel, weight: int) -> sp.csr_matrix:
    basis = sector_basis(model.n_sites, weight)
    where = {int(s): k for k, s in enumerate(basis)}
    rows, cols, data = [], [], []
    for col, x in enumerate(basis):
        x = int(x)
        for i, j, w in model.afm_edges:
            if ((x >> i) & 1) != ((x >> j) & 1):
                rows += [col, where[x ^ (1 << i) ^ (1 << j)]]
                cols += [col, col]
                data += [0.5 * w, 0.5 * w]
        for k, l, v in model.fm_edges:
            y = x if ((x >> k) & 1) == ((x >> l) & 1) else x ^ (1 << k) ^ (1 << l)
            rows.append(where[y])
            cols.append(col)
            data.append(0.5 * v)
    dim = len(basis)
    return sp.csr_matrix((data, (rows, cols)), shape=(dim, dim))


def lieb_mattis_ground_energy(model: BipartiteModel) -> float:
    """Ground energy from the Hamming-weight |A| sector only (fields must vanish)."""
    if model.has_fields:
        raise ValueError("sector ED requires all fields g_m = 0")
    weight = len(model.sites_a)
    mat = sector_negH(model, weight)
    if mat.shape[0] <= 2000:
        return -float(np.linalg.eigvalsh(mat.toarray())[-1])
    vals = spla.eigsh(mat, k=1, which="LA", tol=1e-13, return_eigenvectors=False)
    return -float(vals[0])


def sector_dimension(model: BipartiteModel) -> int:
    return comb(model.n_sites, len(model.sites_a))


def star_ground_energy(n_sites: int, weight: float = 1.0) -> float:
    """Ground energy of the uniform star from total-spin algebra.

    -H = w (N-1)/4 - w S_c . S_L; the ground state has maximal leaf spin
    S_L = (N-1)/2 coupled with the centre to total spin S_L - 1/2.
    """
    s_leaves = (n_sites - 1) / 2
    s_tot = s_leaves - 0.5
    sc_dot_sl = 0.5 * (s_tot * (s_tot + 1) - s_leaves * (s_leaves + 1) - 0.75)
    return -weight * ((n_sites - 1) / 4 - sc_dot_sl)


# ---------------------------------------------------------------- counting


def _apply_typed(slot: OperatorSlot, flip: bool, states, valid):
    if slot.kind == VERTEX:
        return (states ^ (1 << slot.sites[0])) if flip else states, valid
    i, j = slot.sites
    anti = ((states >> i) & 1) != ((states >> j) & 1)
    mask = (1 << i) | (1 << j)
    if slot.kind == AFM:
        return (states ^ mask) if flip else states, valid & anti
    # FM: type 0 is the aligned identity, type 1 the antialigned swap
    if flip:
        return states ^ mask, valid & anti
    return states, valid & ~anti


def consistent_count(model: BipartiteModel, config) -> int:
    """Brute-force number of consistent (sigma_R, operator-type) choices.

    Each slot takes one of two types: AFM {I, S}, FM {I^F, S}, vertex {1, X}.
    The right boundary state is propagated leftwards through the typed string;
    an assignment counts when every operator has a non-zero matrix element.
    """
    n, length = model.n_sites, len(config)
    if n > 12 or length > 8:
        raise ValueError("consistent_count limited to N <= 12 and length <= 8")
    total = 0
    sigma_r = np.arange(1 << n, dtype=np.int64)
    for types in itertools.product((False, True), repeat=length):
        states = sigma_r.copy()
        valid = np.ones(1 << n, dtype=bool)
        for slot, flip in zip(reversed(config), reversed(types)):
            states, valid = _apply_typed(slot, flip, states, valid)
        total += int(valid.sum())
    return total


def enumerate_Z(model: BipartiteModel, B: int, alpha: float = 2.0) -> float:
    """sum over all length-2B strings of alpha^L prod T."""
    table = SlotTable.for_model(model)
    length = 2 * B
    if len(table) ** length > ENUMERATION_CAP:
        raise ValueError("enumeration exceeds 10^7 configurations")
    if length == 0:
        return alpha ** model.n_sites
    log_alpha = math.log(alpha)
    terms = []
    for chunk in _config_chunks(len(table), length):
        loops = _kernels.loop_counts_all(table.kinds, table.sa, table.sb, chunk, model.n_sites)
        terms.extend(np.exp(loops * log_alpha + table.log_t[chunk].sum(axis=1)).tolist())
    return math.fsum(terms)


def _config_chunks(n_alpha: int, length: int, chunk: int = 1 << 16):
    total = n_alpha ** length
    powers = n_alpha ** np.arange(length - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        yield (codes[:, None] // powers[None, :]) % n_alpha


def all_configs(n_alpha: int, length: int) -> np.ndarray:
    """Every index string in lexicographic order (first slot most significant)."""
    if length == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.concatenate(list(_config_chunks(n_alpha, length)))


# ---------------------------------------------------------------- projection leakage


def _low_window(energies, epsilon):
    return energies <= energies[0] + epsilon + 1e-12 * max(1.0, abs(energies[0]))


def low_energy_leakage(model: BipartiteModel, B: int, epsilon: float) -> float:
    """<M_B| Pi_other |M_B>, Pi_other projecting on energies above E_0 + epsilon."""
    _check_size(model.n_sites, LEAKAGE_CAP, "leakage oracle")
    energies, vecs = spectrum(model)
    c2 = (vecs.T @ plus_state(model.n_sites)) ** 2
    lam = -energies
    scaled = c2 * (lam / lam[0]) ** (2 * B)
    other = ~_low_window(energies, epsilon)
    total = math.fsum(scaled)
    return min(1.0, max(0.0, math.fsum(scaled[other]) / total))


def ground_overlap(model: BipartiteModel) -> float:
    """Weight of |+^N> on the ground eigenspace."""
    energies, vecs = spectrum(model)
    c2 = (vecs.T @ plus_state(model.n_sites)) ** 2
    ground = np.abs(energies - energies[0]) <= 1e-9 * max(1.0, abs(energies[0]))
    return float(c2[ground].sum())


def leakage_bound(model: BipartiteModel, B: int, epsilon: float) -> float:
    """exp(N - 2 B eps / lambda_0 - ln w), the exponential tail bound on the leakage."""
    energies, _ = spectrum(model)
    lam0 = -energies[0]
    return math.exp(model.n_sites - 2 * B * epsilon / lam0 - math.log(ground_overlap(model)))
