"""Bipartite Heisenberg models and the operator alphabet of the loop representation.

Conventions (stoquastic frame, after conjugating sublattice A by Z):

    -H = sum_afm w_ij (I + S)_ij / 2 + sum_fm v_kl (I^F + S)_kl / 2 + sum_m g_m (1 + X_m)

Every operator slot in the loop representation stands for a dual pair whose
matrix elements are all 1/2 * T, so the configuration weight is
alpha^L * prod T with T(afm) = w, T(fm) = v and T(vertex) = 2 g.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import networkx as nx

AFM = "A"
FM = "F"
VERTEX = "V"

MODEL_KEYS = ("n_sites", "sublattice", "afm_edges", "fm_edges", "fields")


@dataclass(frozen=True, order=True)
class OperatorSlot:
    """One letter of the operator alphabet.

    ``sites`` is ``(i, j)`` for bridges and ``(m,)`` for vertex operators.
    """

    kind: str
    sites: tuple[int, ...]
    weight: float = field(default=1.0, compare=False)

    def __post_init__(self):
        if self.kind not in (AFM, FM, VERTEX):
            raise ValueError(f"unknown slot kind {self.kind!r}")
        n = 1 if self.kind == VERTEX else 2
        if len(self.sites) != n:
            raise ValueError(f"{self.kind} slot needs {n} sites, got {self.sites}")

    @property
    def label(self) -> str:
        return f"{self.kind}:" + "-".join(str(s) for s in self.sites)

    def __str__(self):
        return self.label


@dataclass(frozen=True)
class BipartiteModel:
    """Weighted bipartite Heisenberg model with intra-sublattice FM bonds and staggered X fields.

    Construction normalises the labels so that ``|A| <= |B|``; ``relabeled``
    records whether the user's A/B labels were swapped.
    """

    n_sites: int
    sublattice: tuple[str, ...]
    afm_edges: tuple[tuple[int, int, float], ...] = ()
    fm_edges: tuple[tuple[int, int, float], ...] = ()
    fields: tuple[float, ...] = ()
    relabeled: bool = False

    def __post_init__(self):
        sub = tuple(self.sublattice)
        fields = tuple(float(g) for g in self.fields) or (0.0,) * self.n_sites
        relabeled = self.relabeled
        if sub.count("A") > sub.count("B"):
            sub = tuple({"A": "B", "B": "A"}.get(s, s) for s in sub)
            relabeled = not relabeled
        object.__setattr__(self, "sublattice", sub)
        object.__setattr__(self, "fields", fields)
        object.__setattr__(self, "relabeled", relabeled)
        object.__setattr__(self, "afm_edges", _edge_tuple(self.afm_edges))
        object.__setattr__(self, "fm_edges", _edge_tuple(self.fm_edges))

    @property
    def sites_a(self) -> list[int]:
        return [i for i, s in enumerate(self.sublattice) if s == "A"]

    @property
    def sites_b(self) -> list[int]:
        return [i for i, s in enumerate(self.sublattice) if s == "B"]

    @property
    def has_fields(self) -> bool:
        return any(g > 0 for g in self.fields)

    def original_label(self, site: int) -> str:
        """Sublattice label as the user declared it."""
        s = self.sublattice[site]
        if self.relabeled:
            return {"A": "B", "B": "A"}[s]
        return s

    def to_dict(self) -> dict:
        sub = [self.original_label(i) for i in range(self.n_sites)]
        return {
            "n_sites": self.n_sites,
            "sublattice": sub,
            "afm_edges": [[i, j, w] for i, j, w in self.afm_edges],
            "fm_edges": [[k, l, v] for k, l, v in self.fm_edges],
            "fields": list(self.fields),
        }


def _edge_tuple(edges) -> tuple[tuple[int, int, float], ...]:
    return tuple((int(e[0]), int(e[1]), float(e[2])) for e in edges)


class ModelFileError(ValueError):
    """Raised for a malformed model document."""


def validate(model: BipartiteModel) -> list[str]:
    """Return every violation of the bipartite-model contract; empty means valid."""
    out = []
    n = model.n_sites
    if n < 1:
        out.append("n_sites must be >= 1")
    if len(model.sublattice) != n:
        out.append(f"sublattice has {len(model.sublattice)} labels for {n} sites")
    for i, s in enumerate(model.sublattice):
        if s not in ("A", "B"):
            out.append(f"site {i}: sublattice label {s!r} is not 'A' or 'B'")
    if len(model.fields) != n:
        out.append(f"fields has {len(model.fields)} entries for {n} sites")

    def side(i):
        return model.sublattice[i] if 0 <= i < len(model.sublattice) else None

    for idx, (i, j, w) in enumerate(model.afm_edges):
        if not (0 <= i < n and 0 <= j < n) or i == j:
            out.append(f"afm edge {idx} ({i},{j}): invalid site indices")
            continue
        if side(i) == side(j):
            out.append(f"afm edge {idx} ({i},{j}): both ends in sublattice {side(i)}")
        if not w > 0:
            out.append(f"afm edge {idx} ({i},{j}): weight {w} is not positive")
    for idx, (k, l, v) in enumerate(model.fm_edges):
        if not (0 <= k < n and 0 <= l < n) or k == l:
            out.append(f"fm edge {idx} ({k},{l}): invalid site indices")
            continue
        if side(k) != side(l):
            out.append(f"fm edge {idx} ({k},{l}): crosses the bipartition")
        if not v > 0:
            out.append(f"fm edge {idx} ({k},{l}): weight {v} is not positive")
    for m, g in enumerate(model.fields):
        if not g >= 0:
            out.append(f"field on site {m}: strength {g} is negative")

    graph = nx.Graph()
    graph.add_nodes_from(range(n))
    graph.add_edges_from((i, j) for i, j, _ in model.afm_edges if 0 <= i < n and 0 <= j < n and i != j)
    if not nx.is_bipartite(graph):
        out.append("afm interaction graph is not bipartite (odd cycle)")
    return out


def check(model: BipartiteModel) -> None:
    problems = validate(model)
    if problems:
        raise ValueError("invalid model: " + "; ".join(problems))


def operator_alphabet(model: BipartiteModel) -> list[OperatorSlot]:
    """AFM bridges in edge order, then FM bridges, then vertex operators of sites with g > 0."""
    check(model)
    slots = [OperatorSlot(AFM, (i, j), w) for i, j, w in model.afm_edges]
    slots += [OperatorSlot(FM, (k, l), v) for k, l, v in model.fm_edges]
    slots += [OperatorSlot(VERTEX, (m,), 2.0 * g) for m, g in enumerate(model.fields) if g > 0]
    if not slots:
        raise ValueError("model has no operators; the chain is undefined")
    return slots


def norm_bound(model: BipartiteModel) -> float:
    """Triangle-inequality bound on ||H||: sum w + sum v + 2 sum g."""
    return (
        math.fsum(w for _, _, w in model.afm_edges)
        + math.fsum(v for _, _, v in model.fm_edges)
        + 2.0 * math.fsum(model.fields)
    )


def required_B(model: BipartiteModel, epsilon: float, delta: float | None = None) -> int:
    """Smallest B with B >= ||H|| / (2 eps) * (N + ln 1/(delta w)), taking w = 2^-N.

    ``delta`` defaults to ``epsilon / norm_bound(model)``.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    norm = norm_bound(model)
    if delta is None:
        delta = min(epsilon / norm, 0.5)
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    n = model.n_sites
    bound = norm / (2.0 * epsilon) * (n - math.log(delta) + n * math.log(2.0))
    return max(1, math.ceil(bound - 1e-12))


# ---------------------------------------------------------------- builders


def star_model(n_sites: int, weights: Sequence[float] | None = None, fields: Sequence[float] | None = None,
               fm_edges: Iterable = ()) -> BipartiteModel:
    """Centre 0 in A, leaves 1..N-1 in B."""
    leaves = range(1, n_sites)
    weights = list(weights) if weights is not None else [1.0] * (n_sites - 1)
    return BipartiteModel(
        n_sites=n_sites,
        sublattice=("A",) + ("B",) * (n_sites - 1),
        afm_edges=tuple((0, j, w) for j, w in zip(leaves, weights)),
        fm_edges=tuple(fm_edges),
        fields=tuple(fields) if fields is not None else (0.0,) * n_sites,
    )


def path_model(n_sites: int, weight: float = 1.0) -> BipartiteModel:
    return BipartiteModel(
        n_sites=n_sites,
        sublattice=tuple("AB"[i % 2] for i in range(n_sites)),
        afm_edges=tuple((i, i + 1, weight) for i in range(n_sites - 1)),
    )


def cycle_model(n_sites: int, weight: float = 1.0) -> BipartiteModel:
    if n_sites % 2:
        raise ValueError("an odd cycle is not bipartite")
    return BipartiteModel(
        n_sites=n_sites,
        sublattice=tuple("AB"[i % 2] for i in range(n_sites)),
        afm_edges=tuple((i, (i + 1) % n_sites, weight) for i in range(n_sites)),
    )


def complete_bipartite_model(n_a: int, n_b: int, weight: float = 1.0) -> BipartiteModel:
    """Sites 0..n_a-1 in A, the rest in B, every A-B pair coupled."""
    n = n_a + n_b
    return BipartiteModel(
        n_sites=n,
        sublattice=("A",) * n_a + ("B",) * n_b,
        afm_edges=tuple((i, j, weight) for i in range(n_a) for j in range(n_a, n)),
    )


# ---------------------------------------------------------------- model files


def model_from_dict(doc: dict) -> BipartiteModel:
    if not isinstance(doc, dict):
        raise ModelFileError("model document must be a JSON object")
    unknown = sorted(set(doc) - set(MODEL_KEYS))
    if unknown:
        raise ModelFileError(f"unknown keys: {', '.join(unknown)}")
    for key in ("n_sites", "sublattice"):
        if key not in doc:
            raise ModelFileError(f"missing required key {key!r}")
    n = doc["n_sites"]
    if not isinstance(n, int) or isinstance(n, bool):
        raise ModelFileError("'n_sites' must be an integer")
    sub = doc["sublattice"]
    if not isinstance(sub, list) or not all(isinstance(s, str) for s in sub):
        raise ModelFileError("'sublattice' must be an array of \"A\"/\"B\" strings")

    def edges(key):
        raw = doc.get(key, [])
        if not isinstance(raw, list):
            raise ModelFileError(f"{key!r} must be an array")
        out = []
        for idx, e in enumerate(raw):
            if (not isinstance(e, list) or len(e) != 3
                    or not all(isinstance(x, int) and not isinstance(x, bool) for x in e[:2])
                    or not isinstance(e[2], (int, float)) or isinstance(e[2], bool)):
                raise ModelFileError(f"{key}[{idx}]: expected [i, j, weight], got {e!r}")
            out.append((e[0], e[1], float(e[2])))
        return tuple(out)

    fields = doc.get("fields", [0.0] * n)
    if not isinstance(fields, list) or not all(
            isinstance(g, (int, float)) and not isinstance(g, bool) for g in fields):
        raise ModelFileError("'fields' must be an array of numbers")
    return BipartiteModel(
        n_sites=n,
        sublattice=tuple(sub),
        afm_edges=edges("afm_edges"),
        fm_edges=edges("fm_edges"),
        fields=tuple(float(g) for g in fields) if fields else (0.0,) * n,
    )


def load_model(path) -> BipartiteModel:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFileError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return model_from_dict(doc)


def dump_model(model: BipartiteModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model.to_dict(), fh, indent=2)
