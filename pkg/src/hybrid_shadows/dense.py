"""Brute-force density-matrix reference for small systems (N <= 6).

Everything here works on explicit 2^N x 2^N complex matrices: exact channel
probabilities, exact snapshots, Monte-Carlo Pauli weights, and
measurement-channel diagonality estimates.  Test support and the ``verify``
CLI path only; never in the sampling hot path.

Basis convention: qubit i is bit i of the computational index (qubit 0 is
the least significant bit).
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from .circuits import CircuitLayer, ShadowRecord
from .clifford import CliffordGate2
from .paulis import PauliString, SignedPauli

MAX_DENSE_QUBITS = 6

_SITE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli_matrix(p: PauliString | SignedPauli) -> np.ndarray:
    """Dense matrix of a (signed) Pauli operator."""
    sp = p if isinstance(p, SignedPauli) else SignedPauli(p)
    out = np.array([[1.0 + 0j]])
    for ch in sp.pauli.to_label():
        out = np.kron(_SITE[ch], out)  # qubit 0 = least significant bit
    return sp.phase * out


def gate_unitary(gate: CliffordGate2) -> np.ndarray:
    """Reconstruct the 4x4 unitary (up to global phase) from its images.

    vec(U) is the unique joint +1 eigenvector of the operators
    sign * (P otimes P'^T) built from each image U^dag P U = sign * P'.
    """
    gens = ["XI", "ZI", "IX", "IZ"]
    proj = np.eye(16, dtype=complex)
    for gen_label, img in zip(gens, gate.images):
        p = pauli_matrix(PauliString.from_label(gen_label))
        q = pauli_matrix(img)
        op = np.kron(p, q.T)
        proj = proj @ (np.eye(16, dtype=complex) + op) / 2.0
    col = np.argmax(np.linalg.norm(proj, axis=0))
    v = proj[:, col]
    norm = np.linalg.norm(v)
    if norm < 1e-9:
        raise ValueError("images do not define a unitary")
    u = (v * (2.0 / norm)).reshape(4, 4)
    if not np.allclose(u @ u.conj().T, np.eye(4), atol=1e-10):
        raise ValueError("reconstructed matrix is not unitary")
    return u


def _embed_two_qubit(u4: np.ndarray, a: int, n_qubits: int) -> np.ndarray:
    """Embed a gate on bond (a, a+1); qubit a is the low bit of the 4-dim index."""
    left = np.eye(2 ** (n_qubits - a - 2), dtype=complex)
    right = np.eye(2**a, dtype=complex)
    return np.kron(left, np.kron(u4, right))


def _event_projector(n_qubits: int, qubit: int, basis: str, outcome: int) -> np.ndarray:
    p = pauli_matrix(PauliString.single(n_qubits, qubit, basis))
    dim = 2**n_qubits
    return (np.eye(dim, dtype=complex) + (-1) ** outcome * p) / 2.0


def kraus_operator(record: ShadowRecord) -> np.ndarray:
    """K = prod over layers (later layers applied on the left)."""
    n = record.n_qubits
    if n > MAX_DENSE_QUBITS:
        raise ValueError(f"dense oracle capped at {MAX_DENSE_QUBITS} qubits")
    k = np.eye(2**n, dtype=complex)
    for layer in record.layers:
        if layer.kind == "measurement":
            for ev in layer.events:
                k = _event_projector(n, ev.qubit, ev.basis, ev.outcome) @ k
        else:
            for a, gate in layer.gates.items():
                k = _embed_two_qubit(gate_unitary(gate), a, n) @ k
    return k


def channel_apply(rho: np.ndarray, record: ShadowRecord) -> tuple[float, np.ndarray]:
    """(p(b | rho, C), snapshot K^dag K / Tr) for an executed record."""
    k = kraus_operator(record)
    prob = float(np.real(np.trace(k @ rho @ k.conj().T)))
    gram = k.conj().T @ k
    norm = float(np.real(np.trace(gram)))
    if norm <= 1e-14:
        raise ValueError("impossible outcome branch: Tr(K^dag K) = 0")
    return prob, gram / norm


def sample_outcomes_dense(
    rho: np.ndarray, circuit: ShadowRecord, rng: random.Random
) -> ShadowRecord:
    """Execute a circuit on a dense state, sampling outcomes by the Born rule."""
    n = circuit.n_qubits
    state = np.array(rho, dtype=complex)
    executed = ShadowRecord(
        n_qubits=n,
        p=circuit.p,
        master_seed=circuit.master_seed,
        shot_index=circuit.shot_index,
        initial_state_label="dense",
    )
    for layer in circuit.layers:
        if layer.kind == "measurement":
            from .circuits import MeasurementEvent

            new_layer = CircuitLayer(kind="measurement")
            for ev in layer.events:
                proj0 = _event_projector(n, ev.qubit, ev.basis, 0)
                p0 = float(np.real(np.trace(proj0 @ state)))
                outcome = 0 if rng.random() < p0 else 1
                proj = proj0 if outcome == 0 else _event_projector(n, ev.qubit, ev.basis, 1)
                state = proj @ state @ proj
                norm = float(np.real(np.trace(state)))
                state = state / norm
                new_layer.events.append(MeasurementEvent(ev.qubit, ev.basis, outcome))
            executed.layers.append(new_layer)
        else:
            u = np.eye(2**n, dtype=complex)
            for a, gate in layer.gates.items():
                u = _embed_two_qubit(gate_unitary(gate), a, n) @ u
            state = u @ state @ u.conj().T
            executed.layers.append(
                CircuitLayer(kind="unitary", parity=layer.parity, gates=layer.gates)
            )
    return executed


def enumerate_outcome_probs(rho: np.ndarray, circuit: ShadowRecord) -> dict[tuple, float]:
    """Exact p(b | rho, C) for every outcome string (exponential in event count)."""
    events = [
        (i, j)
        for i, layer in enumerate(circuit.layers)
        if layer.kind == "measurement"
        for j in range(len(layer.events))
    ]
    if len(events) > 16:
        raise ValueError("too many events to enumerate")
    probs: dict[tuple, float] = {}
    for bits in range(2 ** len(events)):
        outcome = tuple((bits >> i) & 1 for i in range(len(events)))
        for (li, ej), b in zip(events, outcome):
            circuit.layers[li].events[ej].outcome = b
        k = kraus_operator(circuit)
        probs[outcome] = float(np.real(np.trace(k @ rho @ k.conj().T)))
    for li, ej in events:
        circuit.layers[li].events[ej].outcome = None
    return probs


def maximally_mixed(n_qubits: int) -> np.ndarray:
    dim = 2**n_qubits
    return np.eye(dim, dtype=complex) / dim


def tableau_density_matrix(tableau) -> np.ndarray:
    """Dense density matrix of a stabilizer tableau: 2^-N sum over the group."""
    n = tableau.n_qubits
    dim = 2**n
    rho = np.eye(dim, dtype=complex)
    for g in tableau.generators:
        rho = rho @ (np.eye(dim, dtype=complex) + pauli_matrix(g)) / 2.0
    norm = float(np.real(np.trace(rho)))
    return rho / norm


def transfer_matched_circuit(
    n_qubits: int, n_periods: int, p: float, rng: random.Random
) -> ShadowRecord:
    """Forward circuit whose snapshot ensemble realizes ``n_periods``
    [measurement, unitary] transfer periods.

    The snapshot K^dag K consumes the forward layers in reverse and cancels a
    trailing unitary, so the layers here run [unitary, measurement] with the
    unitary parities descending; ``n_periods = 0`` is a lone measurement
    layer.  The resulting prior ensemble matches ``evolve_exact(n, L, p)``.
    """
    from .circuits import CircuitLayer, MeasurementEvent, bonds_for_parity
    from .clifford import random_two_qubit_clifford

    record = ShadowRecord(n_qubits=n_qubits, p=p)
    for l in range(n_periods - 1, -1, -1):
        uni = CircuitLayer(kind="unitary", parity=l % 2)
        for a in bonds_for_parity(n_qubits, l % 2):
            uni.gates[a] = random_two_qubit_clifford(rng)
        record.layers.append(uni)
        meas = CircuitLayer(kind="measurement")
        for q in range(n_qubits):
            if rng.random() < p:
                meas.events.append(MeasurementEvent(q, "XYZ"[rng.randrange(3)]))
        record.layers.append(meas)
    if n_periods == 0:
        meas = CircuitLayer(kind="measurement")
        for q in range(n_qubits):
            if rng.random() < p:
                meas.events.append(MeasurementEvent(q, "XYZ"[rng.randrange(3)]))
        record.layers.append(meas)
    return record


@dataclass
class WeightTable:
    """Monte-Carlo Pauli weights aggregated by support region."""

    n_qubits: int
    shots: int
    weights: np.ndarray  # mean (Tr P sigma)^2 per support mask
    std_errors: np.ndarray

    def weight(self, support: int) -> float:
        return float(self.weights[support])


def mc_pauli_weight(
    n_qubits: int,
    n_periods: int,
    p: float,
    shots: int,
    rng: random.Random,
) -> WeightTable:
    """Prior-ensemble weights from dense simulation, averaged by support.

    The sampled circuits realize ``n_periods`` transfer periods (see
    :func:`transfer_matched_circuit`), so the table is directly comparable
    to ``evolve_exact(n_qubits, n_periods, p)``.
    """
    if n_qubits > MAX_DENSE_QUBITS:
        raise ValueError(f"dense oracle capped at {MAX_DENSE_QUBITS} qubits")
    n_paulis = 4**n_qubits
    supports = np.array(
        [pauli_from_index(i, n_qubits).support for i in range(n_paulis)]
    )
    acc = np.zeros(n_paulis)
    acc2 = np.zeros(n_paulis)
    rho0 = maximally_mixed(n_qubits)
    for _ in range(shots):
        circuit = transfer_matched_circuit(n_qubits, n_periods, p, rng)
        record = sample_outcomes_dense(rho0, circuit, rng)
        _, snapshot = channel_apply(rho0, record)
        tr2 = all_pauli_traces(snapshot, n_qubits) ** 2
        acc += tr2
        acc2 += tr2**2
    mean = acc / shots
    var = np.maximum(acc2 / shots - mean**2, 0.0)
    err = np.sqrt(var / shots)
    n_regions = 2**n_qubits
    weights = np.zeros(n_regions)
    std_errors = np.zeros(n_regions)
    for mask in range(n_regions):
        sel = supports == mask
        count = int(np.sum(sel))
        weights[mask] = float(np.mean(mean[sel]))
        std_errors[mask] = float(np.sqrt(np.sum(err[sel] ** 2)) / count)
    return WeightTable(n_qubits, shots, weights, std_errors)


@dataclass
class DiagonalityReport:
    """Monte-Carlo estimate of the measurement channel in the Pauli basis."""

    n_qubits: int
    shots: int
    matrix: np.ndarray  # E[Tr(P sigma) Tr(P' sigma)] over the prior ensemble
    matrix_std_error: np.ndarray
    max_offdiagonal: float
    max_offdiagonal_sigma: float  # same entry in units of its MC std error


def verify_measurement_channel(
    n_qubits: int,
    n_periods: int,
    p: float,
    shots: int,
    rng: random.Random,
) -> DiagonalityReport:
    """Estimate E[Tr(P sigma) Tr(P' sigma)]; locally scrambled schemes are diagonal."""
    if n_qubits > 4:
        raise ValueError("channel verification capped at 4 qubits")
    n_paulis = 4**n_qubits
    acc = np.zeros((n_paulis, n_paulis))
    acc2 = np.zeros((n_paulis, n_paulis))
    rho0 = maximally_mixed(n_qubits)
    for _ in range(shots):
        circuit = transfer_matched_circuit(n_qubits, n_periods, p, rng)
        record = sample_outcomes_dense(rho0, circuit, rng)
        _, snapshot = channel_apply(rho0, record)
        tr = all_pauli_traces(snapshot, n_qubits)
        outer = np.outer(tr, tr)
        acc += outer
        acc2 += outer**2
    mean = acc / shots
    var = np.maximum(acc2 / shots - mean**2, 0.0)
    err = np.sqrt(var / shots)
    off = np.abs(mean.copy())
    np.fill_diagonal(off, 0.0)
    i, j = np.unravel_index(np.argmax(off), off.shape)
    max_off = float(off[i, j])
    sigma = float(err[i, j]) if err[i, j] > 0 else float("inf")
    return DiagonalityReport(
        n_qubits=n_qubits,
        shots=shots,
        matrix=mean,
        matrix_std_error=err,
        max_offdiagonal=max_off,
        max_offdiagonal_sigma=max_off / sigma if np.isfinite(sigma) else 0.0,
    )


def pauli_index(p: PauliString) -> int:
    """Index of a Pauli in the (I, X, Y, Z) per-site code ordering."""
    idx = 0
    for i in range(p.n_qubits):
        xb = (p.x_bits >> i) & 1
        zb = (p.z_bits >> i) & 1
        code = {(0, 0): 0, (1, 0): 1, (1, 1): 2, (0, 1): 3}[(xb, zb)]
        idx += code * 4**i
    return idx


def pauli_from_index(idx: int, n_qubits: int) -> PauliString:
    x = z = 0
    for i in range(n_qubits):
        code = (idx // 4**i) % 4
        xb, zb = [(0, 0), (1, 0), (1, 1), (0, 1)][code]
        x |= xb << i
        z |= zb << i
    return PauliString(n_qubits, x, z)


def all_pauli_traces(rho: np.ndarray, n_qubits: int) -> np.ndarray:
    """Tr(P rho) for all 4^N Paulis, indexed by :func:`pauli_index`.

    Peels one qubit per pass, mapping its (row bit, col bit) plane onto the
    four Pauli components; O(N 4^N) total.
    """
    t = rho.reshape(1, 2**n_qubits, 2**n_qubits).astype(complex)
    for _ in range(n_qubits - 1, -1, -1):
        m, d, _ = t.shape
        h = d // 2
        t4 = t.reshape(m, 2, h, 2, h)
        new = np.empty((m, 4, h, h), dtype=complex)
        new[:, 0] = t4[:, 0, :, 0, :] + t4[:, 1, :, 1, :]
        new[:, 1] = t4[:, 0, :, 1, :] + t4[:, 1, :, 0, :]
        new[:, 2] = 1j * (t4[:, 0, :, 1, :] - t4[:, 1, :, 0, :])
        new[:, 3] = t4[:, 0, :, 0, :] - t4[:, 1, :, 1, :]
        t = new.reshape(m * 4, h, h)
    return np.real(t.reshape(-1))
