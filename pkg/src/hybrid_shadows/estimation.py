"""Observable decoding from shadow records.

Single-shot estimates follow the inverse-weight rule: for a snapshot sigma
and observable O = sum_P o_P P, the single-shot value is
``sum_P o_P Tr(P sigma) / w(P)``; expectation values are aggregated by the
median of means over contiguous batches.  Weight providers are pluggable so
the same estimators run against exact transfer-matrix weights, MPS weights,
or Monte-Carlo benchmark weights.
"""

from __future__ import annotations

import multiprocessing
from dataclasses import dataclass

import numpy as np

from .circuits import sample_shot
from .paulis import PauliString
from .tableau import StabilizerTableau
from .weights_exact import RegionWeightVector
from .weights_mps import WeightMPS

WEIGHT_FLOOR = 1e-12


class TomographicIncompletenessError(Exception):
    """A required Pauli weight is (numerically) zero: the scheme cannot see it."""


@dataclass(frozen=True)
class ObservableSpec:
    """Hermitian observable as a real combination of distinct Pauli strings."""

    terms: tuple[tuple[float, PauliString], ...]

    def __post_init__(self):
        seen = set()
        for coeff, pauli in self.terms:
            if not np.isfinite(coeff):
                raise ValueError("coefficients must be finite")
            key = (pauli.x_bits, pauli.z_bits)
            if key in seen:
                raise ValueError(f"duplicate Pauli term {pauli.to_label()}")
            seen.add(key)

    @classmethod
    def single(cls, pauli: PauliString, coeff: float = 1.0) -> "ObservableSpec":
        return cls(((coeff, pauli),))

    @classmethod
    def from_label(cls, label: str, coeff: float = 1.0) -> "ObservableSpec":
        return cls.single(PauliString.from_label(label), coeff)


@dataclass
class EstimateReport:
    value: float
    std_error: float
    n_samples: int
    n_batches: int
    method: str  # "mean" | "median-of-means"


def as_weight_fn(weights):
    """Adapt a weight provider to a callable support_mask -> w."""
    if callable(weights):
        return weights
    if isinstance(weights, RegionWeightVector):
        return weights.weight
    if isinstance(weights, WeightMPS):
        return weights.weight_for_support
    if isinstance(weights, dict):
        return weights.__getitem__
    raise TypeError(f"unsupported weight provider {type(weights)!r}")


def _checked_weight(weight_fn, pauli: PauliString) -> float:
    w = weight_fn(pauli.support)
    if w <= WEIGHT_FLOOR:
        raise TomographicIncompletenessError(
            f"weight of {pauli.to_label()} is {w:.3e} (scheme is tomographically "
            "incomplete for this observable)"
        )
    return w


def single_shot_estimate(snapshot: StabilizerTableau, obs: ObservableSpec, weights) -> float:
    """O_sigma = sum_P o_P Tr(P sigma) / w(P) for one snapshot."""
    weight_fn = as_weight_fn(weights)
    total = 0.0
    for coeff, pauli in obs.terms:
        w = _checked_weight(weight_fn, pauli)
        tr = snapshot.expectation(pauli)
        if tr:
            total += coeff * tr / w
    return total


def median_of_means(values: np.ndarray, n_batches: int) -> EstimateReport:
    """Median over contiguous batch means; spread of batch means gives the error."""
    values = np.asarray(values, dtype=float)
    n = len(values)
    if n == 0:
        raise ValueError("no samples")
    if not 1 <= n_batches <= n:
        raise ValueError(f"need 1 <= n_batches <= {n}, got {n_batches}")
    if n_batches == 1:
        err = float(np.std(values, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
        return EstimateReport(float(np.mean(values)), err, n, 1, "mean")
    means = np.array([np.mean(b) for b in np.array_split(values, n_batches)])
    err = float(np.std(means, ddof=1) / np.sqrt(n_batches))
    return EstimateReport(float(np.median(means)), err, n, n_batches, "median-of-means")


def estimate_observable(records, obs: ObservableSpec, weights, n_batches: int = 10) -> EstimateReport:
    """Reconstruct every record's snapshot and aggregate single-shot values."""
    from .circuits import reconstruct_snapshot

    weight_fn = as_weight_fn(weights)
    values = [
        single_shot_estimate(reconstruct_snapshot(rec), obs, weight_fn)
        for rec in records
    ]
    if not values:
        raise ValueError("no records")
    return median_of_means(np.array(values), min(n_batches, len(values)))


def empirical_shadow_norm(records, pauli: PauliString, weights) -> float:
    """Mean of (Tr(P sigma)/w(P))^2 over prior records: the empirical E P_sigma^2."""
    from .circuits import reconstruct_snapshot

    weight_fn = as_weight_fn(weights)
    w = _checked_weight(weight_fn, pauli)
    total = 0.0
    count = 0
    for rec in records:
        tr = reconstruct_snapshot(rec).expectation(pauli)
        total += (tr / w) ** 2
        count += 1
    if count == 0:
        raise ValueError("no records")
    return total / count


def benchmark_weight_from_known_state(records, pauli: PauliString, tr_p_rho: float) -> float:
    """Post-selection-free weight estimate: mean Tr(P sigma) / Tr(P rho).

    ``records`` must be posterior shadows of the known state rho.
    """
    from .circuits import reconstruct_snapshot

    if tr_p_rho == 0:
        raise ValueError("Tr(P rho) must be nonzero for the weight benchmark")
    total = 0.0
    count = 0
    for rec in records:
        total += reconstruct_snapshot(rec).expectation(pauli)
        count += 1
    if count == 0:
        raise ValueError("no records")
    return total / count / tr_p_rho


# -- streaming trace collection (shot-parallel) --------------------------------


def _trace_chunk(args) -> np.ndarray:
    (state_label, n_qubits, n_layers, p, master_seed, start, count, pauli_bits) = args
    from .circuits import reconstruct_snapshot

    paulis = [PauliString(n_qubits, x, z) for x, z in pauli_bits]
    out = np.zeros((len(paulis), count), dtype=np.int8)
    for j in range(count):
        record = sample_shot(state_label, n_qubits, n_layers, p, master_seed, start + j)
        snapshot = reconstruct_snapshot(record)
        for i, pauli in enumerate(paulis):
            out[i, j] = snapshot.expectation(pauli)
    return out


def collect_pauli_traces(
    state_label: str,
    n_qubits: int,
    n_unitary_layers: int,
    p: float,
    master_seed: int,
    shots: int,
    paulis: list[PauliString],
    workers: int = 1,
) -> np.ndarray:
    """Tr(P sigma) for every sampled snapshot; shape (n_paulis, shots), int8.

    Shots use per-shot derived seeds, so the result is identical for any
    worker count.
    """
    pauli_bits = [(pp.x_bits, pp.z_bits) for pp in paulis]
    if workers <= 1 or shots < 2 * workers:
        return _trace_chunk(
            (state_label, n_qubits, n_unitary_layers, p, master_seed, 0, shots, pauli_bits)
        )
    chunk = (shots + workers - 1) // workers
    jobs = [
        (state_label, n_qubits, n_unitary_layers, p, master_seed, start,
         min(chunk, shots - start), pauli_bits)
        for start in range(0, shots, chunk)
    ]
    with multiprocessing.Pool(workers) as pool:
        parts = pool.map(_trace_chunk, jobs)
    return np.concatenate(parts, axis=1)


def monte_carlo_pauli_weights(
    n_qubits: int,
    n_unitary_layers: int,
    p: float,
    shots: int,
    master_seed: int,
    paulis: list[PauliString],
    workers: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Prior-ensemble weights per Pauli, E (Tr P sigma)^2, with standard errors.

    Sampling the prior directly sidesteps the Markovian normalization
    approximation of the transfer-matrix engines (weight provider (c)).
    """
    traces = collect_pauli_traces(
        "maximally-mixed", n_qubits, n_unitary_layers, p, master_seed, shots,
        paulis, workers,
    )
    sq = traces.astype(float) ** 2
    weights = sq.mean(axis=1)
    errors = sq.std(axis=1, ddof=1) / np.sqrt(shots)
    return weights, errors


def mc_weight_provider(
    n_qubits: int,
    n_unitary_layers: int,
    p: float,
    shots: int,
    master_seed: int,
    supports: list[int],
    min_hits: int = 25,
    fallback=None,
    workers: int = 1,
) -> dict[int, float]:
    """Weight dictionary for the given supports from prior Monte Carlo.

    Supports whose Monte-Carlo estimate rests on fewer than ``min_hits``
    nonzero traces fall back to ``fallback`` (another weight provider) when
    given; there the statistical error bars of any estimate dominate the
    provider's bias anyway.
    """
    paulis = [PauliString(n_qubits, 0, mask) for mask in supports]
    traces = collect_pauli_traces(
        "maximally-mixed", n_qubits, n_unitary_layers, p, master_seed, shots,
        paulis, workers,
    )
    fallback_fn = as_weight_fn(fallback) if fallback is not None else None
    out: dict[int, float] = {}
    for mask, tr in zip(supports, traces):
        hits = int(np.count_nonzero(tr))
        if hits >= min_hits or fallback_fn is None:
            out[mask] = float(np.mean(tr.astype(float) ** 2))
        else:
            out[mask] = float(fallback_fn(mask))
    return out


def ghz_demo_estimates(
    n_qubits: int,
    n_unitary_layers: int,
    p: float,
    shots: int,
    master_seed: int,
    sizes: list[int],
    weights,
    n_batches: int = 10,
    workers: int = 1,
) -> dict[int, EstimateReport]:
    """Median-of-means estimates of <Z^k> on the GHZ state (first k qubits)."""
    weight_fn = as_weight_fn(weights)
    paulis = [PauliString(n_qubits, 0, (1 << k) - 1) for k in sizes]
    traces = collect_pauli_traces(
        "ghz", n_qubits, n_unitary_layers, p, master_seed, shots, paulis, workers
    )
    reports = {}
    for i, k in enumerate(sizes):
        w = _checked_weight(weight_fn, paulis[i])
        reports[k] = median_of_means(traces[i].astype(float) / w, n_batches)
    return reports
