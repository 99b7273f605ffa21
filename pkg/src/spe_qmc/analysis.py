"""Exact Markov-chain analysis on enumerable state spaces.

States are length-2B index strings over the model alphabet, numbered by their
base-|alphabet| code with the first slot most significant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _kernels
from .hamiltonian import VERTEX, BipartiteModel, check, cycle_model, star_model
from .loopcfg import SlotTable, crossing_count, decompose, format_config
from .oracle import all_configs, enumerate_Z

STATE_CAP = 20_000
RATIONAL_CAP = 1_000
PAIR_CAP = 5 * 10**7


@dataclass
class ChainMatrix:
    model: BipartiteModel
    B: int
    alpha: float
    lazy: bool
    table: SlotTable
    configs: np.ndarray  # (n_states, 2B) alphabet indices
    loops: np.ndarray
    log_weight: np.ndarray  # L ln alpha + sum ln T, unnormalised
    pi: np.ndarray
    P: sp.csr_matrix
    edge_prob: np.ndarray  # (n_states, 2B, |alphabet|), P(x, x with slot k set to o); 0 where o == x_k

    @property
    def n_states(self) -> int:
        return len(self.configs)

    @property
    def place_values(self) -> np.ndarray:
        a = len(self.table)
        return a ** np.arange(2 * self.B - 1, -1, -1, dtype=np.int64)

    def index_of(self, seq) -> int:
        return int(np.dot(np.asarray(seq, dtype=np.int64), self.place_values))


def build_chain_matrix(model: BipartiteModel, B: int, alpha: float = 2.0, lazy: bool = False) -> ChainMatrix:
    """P(x, y) = min(1, pi(y)/pi(x)) / (2B |alphabet|) for single-slot neighbours; lazy halves it."""
    check(model)
    table = SlotTable.for_model(model)
    a, length = len(table), 2 * B
    if a ** length > STATE_CAP:
        raise ValueError(f"{a}^{length} states exceed the enumeration cap {STATE_CAP}")
    configs = all_configs(a, length)
    n = len(configs)
    loops = _kernels.loop_counts_all(table.kinds, table.sa, table.sb, configs, model.n_sites)
    log_w = loops * math.log(alpha) + table.log_t[configs].sum(axis=1)
    pi = np.exp(log_w - log_w.max())
    pi /= math.fsum(pi.tolist())

    codes = np.arange(n, dtype=np.int64)
    place = a ** np.arange(length - 1, -1, -1, dtype=np.int64)
    propose = 1.0 / (length * a) if length else 0.0
    scale = 0.5 if lazy else 1.0
    edge_prob = np.zeros((n, length, a))
    rows, cols, vals = [], [], []
    for k in range(length):
        for o in range(a):
            moved = configs[:, k] != o
            src = codes[moved]
            dst = src + (o - configs[moved, k]) * place[k]
            ratio = np.exp(np.minimum(log_w[dst] - log_w[src], 0.0))
            p = scale * propose * ratio
            edge_prob[src, k, o] = p
            rows.append(src)
            cols.append(dst)
            vals.append(p)
    diag = 1.0 - edge_prob.reshape(n, -1).sum(axis=1)
    rows.append(codes)
    cols.append(codes)
    vals.append(diag)
    P = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    return ChainMatrix(model, B, alpha, lazy, table, configs, loops, log_w, pi, P, edge_prob)


def chain_checks(cm: ChainMatrix) -> dict:
    """Floating-point stochasticity, reversibility and stationarity residuals."""
    P = cm.P
    row_err = float(np.max(np.abs(np.asarray(P.sum(axis=1)).ravel() - 1.0)))
    flow = sp.diags(cm.pi) @ P
    db_err = float(abs(flow - flow.T).max()) if cm.n_states > 1 else 0.0
    stat_err = float(np.max(np.abs(P.T @ cm.pi - cm.pi)))
    return {"row_sum_error": row_err, "detailed_balance_error": db_err, "stationarity_error": stat_err}


def rational_checks(cm: ChainMatrix) -> dict:
    """Rebuild P and pi in exact rational arithmetic and test the three identities exactly."""
    if cm.n_states > RATIONAL_CAP:
        raise ValueError(f"rational check limited to {RATIONAL_CAP} states")
    alpha = Fraction(cm.alpha)
    t = [Fraction(s.weight) for s in cm.table.slots]
    a, length = len(t), 2 * cm.B
    weight = []
    for seq, loops in zip(cm.configs, cm.loops):
        w = alpha ** int(loops)
        for k in seq:
            w *= t[int(k)]
        weight.append(w)
    z = sum(weight)
    pi = [w / z for w in weight]
    propose = Fraction(1, length * a) if length else Fraction(0)
    if cm.lazy:
        propose /= 2
    place = cm.place_values
    rows: list[dict[int, Fraction]] = []
    for x, seq in enumerate(cm.configs):
        row: dict[int, Fraction] = {}
        for k in range(length):
            for o in range(a):
                if o == seq[k]:
                    continue
                y = x + (o - int(seq[k])) * int(place[k])
                row[y] = propose * min(Fraction(1), weight[y] / weight[x])
        row[x] = 1 - sum(row.values())
        rows.append(row)
    rows_ok = all(sum(r.values()) == 1 and min(r.values()) >= 0 for r in rows)
    balance_ok = all(pi[x] * p == pi[y] * rows[y][x] for x, r in enumerate(rows) for y, p in r.items())
    inflow = [Fraction(0)] * len(rows)
    for x, r in enumerate(rows):
        for y, p in r.items():
            inflow[y] += pi[x] * p
    stationary_ok = inflow == pi
    agree = max(abs(float(p) - cm.P[x, y]) for x, r in enumerate(rows) for y, p in r.items())
    return {"rows_sum_to_one": rows_ok, "detailed_balance": balance_ok, "stationary": stationary_ok,
            "max_float_deviation": agree}


@dataclass
class SpectralReport:
    lambda_star: float
    lambda_2: float
    t_rel: float
    t_mix_upper: float
    pi_min: float
    degenerate: bool = False

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def symmetrized(cm: ChainMatrix):
    root = np.sqrt(cm.pi)
    return sp.diags(root) @ cm.P @ sp.diags(1.0 / root)


def spectral_report(cm: ChainMatrix) -> SpectralReport:
    """lambda* = second largest eigenvalue magnitude of P, from the symmetric similarity transform."""
    pi_min = float(cm.pi.min())
    if cm.n_states < 2:
        return SpectralReport(0.0, 0.0, 0.0, 0.0, pi_min, degenerate=True)
    R = symmetrized(cm)
    R = 0.5 * (R + R.T)
    if cm.n_states <= 4000:
        vals = np.linalg.eigvalsh(R.toarray())
    else:
        top = spla.eigsh(R, k=2, which="LA", return_eigenvectors=False)
        bottom = spla.eigsh(R, k=1, which="SA", return_eigenvectors=False)
        vals = np.sort(np.concatenate([top, bottom]))
    lambda_2 = float(vals[-2])
    lambda_star = max(abs(lambda_2), abs(float(vals[0])))
    t_rel = 1.0 / (1.0 - lambda_star)
    return SpectralReport(lambda_star, lambda_2, t_rel, t_rel * math.log(4.0 / pi_min), pi_min)


# ---------------------------------------------------------------- canonical paths


@dataclass
class CanonicalPath:
    x: tuple
    y: tuple
    states: list  # z(0) .. z(2B)

    @property
    def edges(self) -> list[tuple[int, tuple, tuple]]:
        """Proper chain edges (t, z(t-1), z(t)); self-loop steps are skipped."""
        return [(t, self.states[t - 1], self.states[t]) for t in range(1, len(self.states))
                if self.states[t - 1] != self.states[t]]

    def __len__(self):
        return len(self.edges)


def canonical_path(x, y) -> CanonicalPath:
    """Left-to-right fixing: z(t) = (y_1..y_t, x_{t+1}..x_2B)."""
    x, y = tuple(x), tuple(y)
    if len(x) != len(y):
        raise ValueError("endpoints must have equal length")
    return CanonicalPath(x, y, [y[:t] + x[t:] for t in range(len(x) + 1)])


def encode(t: int, x, y) -> tuple:
    """Witness for the path x -> y crossing its t-th step: (x_1..x_{t-1}, y_t..y_2B)."""
    x, y = tuple(x), tuple(y)
    if len(x) != len(y):
        raise ValueError("endpoints must have equal length")
    if not 1 <= t <= len(x):
        raise IndexError("step index out of range")
    return x[: t - 1] + y[t - 1:]


def decode(t: int, z_prev, z_next, eta) -> tuple[tuple, tuple]:
    """Recover (x, y) from the t-th edge (z(t-1), z(t)) of their path and its witness."""
    z_prev, z_next, eta = tuple(z_prev), tuple(z_next), tuple(eta)
    x = eta[: t - 1] + z_prev[t - 1:]
    y = z_next[:t] + eta[t:]
    return x, y


def encoding_injectivity(cm: ChainMatrix) -> dict:
    """Exhaustively check decode(encode) = id and that no two paths share (edge, witness)."""
    seen = {}
    collisions = 0
    roundtrip_failures = 0
    states = [tuple(int(v) for v in c) for c in cm.configs]
    for x in states:
        for y in states:
            path = canonical_path(x, y)
            for t in range(1, len(x) + 1):
                z_prev, z_next = path.states[t - 1], path.states[t]
                eta = encode(t, x, y)
                if decode(t, z_prev, z_next, eta) != (x, y):
                    roundtrip_failures += 1
                key = (t, z_prev, z_next, eta)
                if seen.setdefault(key, (x, y)) != (x, y):
                    collisions += 1
    return {"checked": len(seen), "collisions": collisions, "roundtrip_failures": roundtrip_failures}


def _prefix_swap(x_codes, y_codes, low):
    """Code of (y's slots above ``low``, x's low digits)."""
    return y_codes - y_codes % low + x_codes % low


def encoding_inequality_max(cm: ChainMatrix) -> dict:
    """max over (x, y, t) of pi(x) pi(y) / (pi(z(t-1)) pi(eta_t)), with the matching bound."""
    n, length = cm.n_states, 2 * cm.B
    if n * n * max(length, 1) > PAIR_CAP:
        raise ValueError("too many (x, y, t) triples for exhaustive search")
    codes = np.arange(n, dtype=np.int64)
    a = len(cm.table)
    best = 0.0
    where = None
    lw = cm.log_weight
    for x in range(n):
        xs = np.full(n, x, dtype=np.int64)
        for t in range(1, length + 1):
            low = a ** (length - (t - 1))
            z = _prefix_swap(xs, codes, low)
            eta = _prefix_swap(codes, xs, low)
            log_ratio = lw[x] + lw - lw[z] - lw[eta]
            k = int(np.argmax(log_ratio))
            if where is None or log_ratio[k] > best:
                best = float(log_ratio[k])
                where = (x, k, t)
    n_a = len(cm.model.sites_a)
    has_vertex = any(s.kind == VERTEX for s in cm.table.slots)
    bound = 2.0 ** (8 * n_a - 4) if has_vertex else 2.0 ** (4 * n_a - 2)
    x, y, t = where if where else (0, 0, 0)
    return {"max_ratio": math.exp(best), "bound": bound, "with_fields": has_vertex,
            "argmax": {"x": format_config(cm.table.decode(cm.configs[x])),
                       "y": format_config(cm.table.decode(cm.configs[y])), "t": t}}


def congestion(cm: ChainMatrix) -> dict:
    """Exact congestion of the left-to-right canonical paths, with t_rel and the closed-form bound.

    Paths use only proper edges; |gamma| counts slots where x and y differ.
    """
    n, length = cm.n_states, 2 * cm.B
    a = len(cm.table)
    if n * n * max(length, 1) > PAIR_CAP:
        raise ValueError("too many (x, y, t) triples for exhaustive routing")
    model = cm.model
    t_vals = [s.weight for s in cm.table.slots]
    bound = (12.0 * cm.B ** 2 * model.n_sites * (max(t_vals) / min(t_vals))
             * 2.0 ** (8 * len(model.sites_a) - 4))
    report = {"phi": None, "t_rel": None, "closed_form_bound": bound, "degenerate": False}
    gap = spectral_report(cm)
    report["t_rel"] = gap.t_rel
    report["t_mix_upper"] = gap.t_mix_upper
    t_min, t_max = min(t_vals), max(t_vals)
    report["t_mix_closed_form"] = (24.0 * cm.B ** 3 * model.n_sites * (t_max / t_min)
                                        * 2.0 ** (8 * len(model.sites_a) - 4) * math.log(8 * t_min))
    if a == 1 or length == 0:
        report["degenerate"] = True
        return report
    codes = np.arange(n, dtype=np.int64)
    load = np.zeros((n, length, a))
    pi = cm.pi
    for x in range(n):
        xs = np.full(n, x, dtype=np.int64)
        diff = (cm.configs[x][None, :] != cm.configs).sum(axis=1)
        demand = pi[x] * pi * diff
        for t in range(1, length + 1):
            k = t - 1
            z_prev = _prefix_swap(xs, codes, a ** (length - k))
            o = cm.configs[:, k]
            proper = o != cm.configs[x, k]
            np.add.at(load, (z_prev[proper], k, o[proper]), demand[proper])
    used = load > 0
    capacity = pi[:, None, None] * cm.edge_prob
    ratios = load[used] / capacity[used]
    report["phi"] = float(ratios.max())
    report["t_rel_le_phi"] = bool(gap.t_rel <= report["phi"] * (1 + 1e-12))
    report["phi_le_closed_form"] = bool(report["phi"] <= bound)
    return report


# ---------------------------------------------------------------- loop topology


def _side(sub, e):
    return ("L" if e.kind == "left" else "R", sub[e.site])


_ALLOWED = {
    frozenset({("L", "A"), ("L", "B")}),
    frozenset({("L", "A"), ("R", "A")}),
    frozenset({("L", "B"), ("R", "B")}),
    frozenset({("R", "A"), ("R", "B")}),
}


def topology_violations(model: BipartiteModel, config) -> list[str]:
    """Check the boundary-termination rule, the B-to-B pigeonhole count and the cut-spread bound."""
    if any(s.kind == VERTEX for s in config):
        raise ValueError("topology facts are stated for AFM(+FM) strings only")
    dec = decompose(model, config)
    sub = model.sublattice
    n_a, n_b = len(model.sites_a), len(model.sites_b)
    out = []
    through_b = 0
    for label, eps in dec.endpoints.items():
        if not eps:
            continue
        ends = frozenset(_side(sub, e) for e in eps)
        if len(eps) != 2 or len(ends) != 2 or ends not in _ALLOWED:
            out.append(f"boundary pairing: loop {label} ends at {sorted(_side(sub, e) for e in eps)}")
        if ends == frozenset({("L", "B"), ("R", "B")}):
            through_b += 1
    if through_b < n_b - n_a:
        out.append(f"B-B strands: only {through_b} left-B to right-B loops, need {n_b - n_a}")
    counts = [crossing_count(dec, t) for t in range(len(config) + 1)]
    if max(counts) - min(counts) > 2 * n_a - 1:
        out.append(f"cut spread: crossing counts span {min(counts)}..{max(counts)} > 2|A|-1")
    return out


def topology_sweep(model: BipartiteModel, n_random_configs: int, rng: np.random.Generator,
                   length: int = 8) -> dict:
    table = SlotTable.for_model(model)
    if any(s.kind == VERTEX for s in table.slots):
        raise ValueError("topology sweep needs a model without fields")
    findings = []
    for _ in range(n_random_configs):
        config = table.decode(rng.integers(0, len(table), size=length))
        for problem in topology_violations(model, config):
            findings.append({"violation": problem, "config": format_config(config)})
    return {"n_configs": n_random_configs, "length": length, "violations": findings}


# ---------------------------------------------------------------- Potts duality


def potts_transfer_Z(q: int, n_sites: int, coupling: float) -> float:
    """Open-chain q-state Potts partition function sum exp(coupling * #equal neighbours)."""
    if n_sites == 0:
        return 1.0
    T = np.ones((q, q)) + (math.exp(coupling) - 1.0) * np.eye(q)
    ones = np.ones(q)
    return float(ones @ np.linalg.matrix_power(T, n_sites - 1) @ ones)


def potts_cross_check(n_sites: int, B: int, alpha: float = 2.0) -> dict:
    """Uniform star: loop-sum Z against alpha^N times the (N-1)-colour Potts chain of 2B sites."""
    model = star_model(n_sites)
    z_loop = enumerate_Z(model, B, alpha)
    z_potts = alpha ** n_sites * potts_transfer_Z(n_sites - 1, 2 * B, math.log(alpha))
    return {"N": n_sites, "B": B, "alpha": alpha, "Z_loop": z_loop, "Z_potts_scaled": z_potts,
            "relative_error": abs(z_loop - z_potts) / abs(z_potts)}


def star_loop_distribution(n_sites: int, B: int, alpha: float = 2.0) -> dict[int, float]:
    """Exact pi(L) on the uniform star from L = N + #(equal adjacent slots)."""
    q, length = n_sites - 1, 2 * B
    logs = {}
    for s in range(length):
        if q == 1 and s != length - 1:
            continue
        logs[n_sites + s] = (math.log(q) + math.log(comb(length - 1, s))
                             + (length - 1 - s) * math.log(q - 1 if q > 1 else 1) + s * math.log(alpha))
    top = max(logs.values())
    w = {k: math.exp(v - top) for k, v in logs.items()}
    z = math.fsum(w.values())
    return {k: v / z for k, v in w.items()}


# ---------------------------------------------------------------- cycle counterexample


def dimer_configs(model: BipartiteModel, B: int) -> tuple[tuple, tuple]:
    """x cycles through the even-indexed AFM edges, y through the odd-indexed ones."""
    table = SlotTable.for_model(model)
    even = [s for k, s in enumerate(table.slots) if k % 2 == 0]
    odd = [s for k, s in enumerate(table.slots) if k % 2 == 1]
    x = tuple(even[p % len(even)] for p in range(2 * B))
    y = tuple(odd[p % len(odd)] for p in range(2 * B))
    return x, y


def middle_encoding_ratio(model: BipartiteModel, x, y, alpha: float = 2.0) -> dict:
    """pi(x) pi(y) / (pi(z) pi(eta)) on the path step that crosses the middle cut."""
    half = len(x) // 2
    t = half + 1
    z = canonical_path(x, y).states[t - 1]
    eta = encode(t, x, y)
    counts = {name: decompose(model, c).loop_count for name, c in (("x", x), ("y", y), ("z", z), ("eta", eta))}
    log_t = sum(math.log(s.weight) for c in (x, y) for s in c) - sum(
        math.log(s.weight) for c in (z, eta) for s in c)
    d_loops = counts["x"] + counts["y"] - counts["z"] - counts["eta"]
    return {"ratio": alpha ** d_loops * math.exp(log_t), "loop_deficit": d_loops, "loops": counts,
            "x": format_config(x), "y": format_config(y), "z": format_config(z), "eta": format_config(eta)}


def cycle_counterexample(n_sites: int, B: int | None = None, alpha: float = 2.0) -> dict:
    """Two dimer-covering strings on the even cycle whose middle-cut witnesses lose ~N loops."""
    if n_sites % 2 or n_sites < 4:
        raise ValueError("need an even cycle length N >= 4")
    B = n_sites // 2 if B is None else B
    if B < n_sites // 2:
        raise ValueError("B must be at least N/2 so each half holds every dimer")
    model = cycle_model(n_sites)
    out = middle_encoding_ratio(model, *dimer_configs(model, B), alpha=alpha)
    out.update({"N": n_sites, "B": B, "n_a": len(model.sites_a),
                "encoding_bound": 2.0 ** (4 * len(model.sites_a) - 2), "star_bound": 4.0})
    return out


def star_counterpart(n_sites: int, B: int, alpha: float = 2.0) -> dict:
    """The same even/odd-edge construction on the star graph."""
    model = star_model(n_sites)
    out = middle_encoding_ratio(model, *dimer_configs(model, B), alpha=alpha)
    out.update({"N": n_sites, "B": B, "bound": 4.0})
    return out
