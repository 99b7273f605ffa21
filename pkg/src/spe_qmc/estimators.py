"""Observable estimation by inserting a bare operator pair in the middle of the string.

For an observable O = W_a + W_b representable as one loop-picture slot,
<M_B|O|M_B> = E_pi[alpha^(L(x_O) - L(x))] with x_O the string with O placed
after slot B (alpha = 2). The inserted operator carries unit coupling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .chain import SampleRecord, observable_columns
from .hamiltonian import BipartiteModel, OperatorSlot
from .loopcfg import SlotTable, decompose, insert
from .oracle import all_configs


@dataclass(frozen=True)
class LoopObservable:
    """Estimate of ``scale * <slot pair> + offset``; e.g. <h~> is (I+S) with scale 1/2."""

    slot: OperatorSlot
    scale: float = 1.0
    offset: float = 0.0


@dataclass
class EstimateResult:
    mean: float
    stderr: float
    n_batches: int
    tau_int: float
    terms: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"estimate": self.mean, "stderr": self.stderr, "n_batches": self.n_batches,
               "tau_int": self.tau_int}
        if self.terms:
            out["terms"] = {k: v.to_dict() for k, v in self.terms.items()}
        return out


def measure(model: BipartiteModel, config, observable: LoopObservable | OperatorSlot, alpha: float = 2.0) -> float:
    """alpha^(L(x_O) - L(x)) with O inserted after the first half of ``config``."""
    slot = observable.slot if isinstance(observable, LoopObservable) else observable
    if len(config) % 2:
        raise ValueError("measurement needs an even-length configuration")
    base = decompose(model, config).loop_count
    with_o = decompose(model, insert(config, len(config) // 2, slot)).loop_count
    return alpha ** (with_o - base)


def batch_means(series: Sequence[np.ndarray] | np.ndarray) -> EstimateResult:
    """Pooled batch means over one or more chains; about sqrt(n) batches per chain."""
    chains = [np.asarray(series, dtype=np.float64)] if np.ndim(series[0]) == 0 else \
        [np.asarray(s, dtype=np.float64) for s in series]
    if not chains or sum(len(c) for c in chains) == 0:
        raise ValueError("no samples")
    means, sizes = [], []
    for c in chains:
        n = len(c)
        n_batches = max(1, math.isqrt(n))
        size = n // n_batches
        trimmed = c[: n_batches * size].reshape(n_batches, size)
        means.extend(math.fsum(row) / size for row in trimmed)
        sizes.append(size)
    everything = np.concatenate(chains)
    mean = math.fsum(everything) / len(everything)
    nb = len(means)
    if nb < 2:
        return EstimateResult(mean, float("nan"), nb, float("nan"))
    bm = np.asarray(means)
    var_bm = float(np.var(bm, ddof=1))
    stderr = math.sqrt(var_bm / nb)
    var_x = float(np.var(everything, ddof=1)) if len(everything) > 1 else 0.0
    size = float(np.mean(sizes))
    tau = 0.5 * size * var_bm / var_x if var_x > 0 else 0.0
    return EstimateResult(mean, stderr, nb, tau)


def _weighted(values: np.ndarray, weights: np.ndarray) -> EstimateResult:
    mean = math.fsum((values * weights).tolist()) / math.fsum(weights.tolist())
    return EstimateResult(mean, 0.0, 0, 0.0)


def _as_chains(samples) -> list[np.ndarray]:
    if isinstance(samples, np.ndarray):
        return [samples]
    if isinstance(samples, dict):
        return [samples["measurements"]]
    items = list(samples)
    if not items:
        raise ValueError("empty sample set")
    if isinstance(items[0], SampleRecord):
        return [np.array([r.measurements for r in items])]
    if isinstance(items[0], dict):
        return [np.asarray(c["measurements"]) for c in items]
    return [np.asarray(c) for c in items]


def energy_coefficients(model: BipartiteModel) -> np.ndarray:
    """Per-column factors turning insertion weights into energy contributions."""
    coef = [-0.5 * w for _, _, w in model.afm_edges]
    coef += [-0.5 * v for _, _, v in model.fm_edges]
    coef += [-g for g in model.fields]
    return np.array(coef)


def _column_names(model: BipartiteModel) -> list[str]:
    return [slot.label for slot in observable_columns(model)]


def _linear_estimate(chains, coef, offset, weights, names=None) -> EstimateResult:
    if sum(len(c) for c in chains) == 0:
        raise ValueError("empty sample set")
    series = [c @ coef + offset for c in chains]
    if weights is not None:
        result = _weighted(series[0], np.asarray(weights))
    else:
        result = batch_means(series)
    if names is not None:
        for q, name in enumerate(names):
            if coef[q] == 0:
                continue
            part = [c[:, q] * coef[q] for c in chains]
            result.terms[name] = _weighted(part[0], np.asarray(weights)) if weights is not None \
                else batch_means(part)
    return result


def estimate_energy(model: BipartiteModel, samples, alpha: float = 2.0, weights=None) -> EstimateResult:
    """<H> = -sum w/2 <I+S> - sum v/2 <I^F+S> - sum g <1+X>.

    ``samples`` may be a list of :class:`SampleRecord`, a measurement matrix,
    a ``run_arrays`` dict or a list of matrices (one per chain). Passing
    ``weights`` (one per row, e.g. the exact pi) gives the exact weighted mean.
    """
    if alpha != 2.0:
        raise ValueError("the energy estimator is only physical for alpha = 2")
    chains = _as_chains(samples)
    return _linear_estimate(chains, energy_coefficients(model), 0.0, weights, _column_names(model))


def estimate_neel(model: BipartiteModel, samples, alpha: float = 2.0, weights=None) -> EstimateResult:
    """Staggered magnetisation N^-1 sum_m <X_m> in the stoquastic frame, via <1+X> - 1."""
    if alpha != 2.0:
        raise ValueError("the Neel estimator is only physical for alpha = 2")
    chains = _as_chains(samples)
    n = model.n_sites
    coef = np.zeros(len(observable_columns(model)))
    coef[-n:] = 1.0 / n
    return _linear_estimate(chains, coef, -1.0, weights)


def estimate_observable(model: BipartiteModel, samples, observable: LoopObservable, alpha: float = 2.0,
                        weights=None) -> EstimateResult:
    """scale * E[w_O] + offset for any column measured by the sampler."""
    names = _column_names(model)
    label = observable.slot.label
    if label not in names:
        raise ValueError(f"{label} is not a measured column")
    coef = np.zeros(len(names))
    coef[names.index(label)] = observable.scale
    return _linear_estimate(_as_chains(samples), coef, observable.offset, weights)


def enumerated_measurements(model: BipartiteModel, B: int, alpha: float = 2.0,
                            observables: Iterable[OperatorSlot] | None = None):
    """Every length-2B string with its exact pi weight and its insertion measurements."""
    table = SlotTable.for_model(model)
    configs = all_configs(len(table), 2 * B)
    obs = list(observables) if observables is not None else observable_columns(model)
    obs_kind = np.array([_kernels.KIND_CODE[o.kind] for o in obs], dtype=np.int64)
    obs_a = np.array([o.sites[0] for o in obs], dtype=np.int64)
    obs_b = np.array([o.sites[-1] for o in obs], dtype=np.int64)
    loops = _kernels.loop_counts_all(table.kinds, table.sa, table.sb, configs, model.n_sites)
    log_w = loops * math.log(alpha) + table.log_t[configs].sum(axis=1)
    weights = np.exp(log_w - log_w.max())
    weights /= math.fsum(weights.tolist())
    meas = np.empty((len(configs), len(obs)))
    for r in range(len(configs)):
        _kernels.measure_insertions(table.kinds, table.sa, table.sb, configs[r], model.n_sites, loops[r], B,
                                    obs_kind, obs_a, obs_b, math.log(alpha), meas[r])
    return configs, weights, meas


__all__ = ["EstimateResult", "LoopObservable", "batch_means", "energy_coefficients",
           "enumerated_measurements", "estimate_energy", "estimate_neel", "estimate_observable", "measure"]
