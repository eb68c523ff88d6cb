import math
import random

import numpy as np
import pytest

from hybrid_shadows.circuits import (
    CircuitLayer,
    MeasurementEvent,
    ShadowRecord,
    bonds_for_parity,
    derive_shot_seed,
    ghz_state,
    reconstruct_snapshot,
    run_forward,
    sample_circuit,
    sample_prior_shot,
    sample_shot,
)
from hybrid_shadows.dense import (
    all_pauli_traces,
    channel_apply,
    enumerate_outcome_probs,
    maximally_mixed,
    pauli_from_index,
    tableau_density_matrix,
)
from hybrid_shadows.paulis import PauliString
from hybrid_shadows.shadow_io import record_to_json
from hybrid_shadows.tableau import StabilizerTableau


def test_bond_pattern():
    assert bonds_for_parity(6, 0) == [0, 2, 4]
    assert bonds_for_parity(6, 1) == [1, 3]
    assert bonds_for_parity(2, 1) == []


def test_sample_circuit_p_extremes():
    rng = random.Random(0)
    rec = sample_circuit(5, 3, 0.0, rng)
    assert all(not l.events for l in rec.layers if l.kind == "measurement")
    rec = sample_circuit(5, 3, 1.0, rng)
    for layer in rec.layers:
        if layer.kind == "measurement":
            assert [ev.qubit for ev in layer.events] == list(range(5))


def test_sample_circuit_layer_pattern():
    rng = random.Random(1)
    rec = sample_circuit(6, 3, 0.5, rng)
    kinds = [l.kind for l in rec.layers]
    assert kinds == ["measurement", "unitary"] * 3
    assert [l.parity for l in rec.layers if l.kind == "unitary"] == [0, 1, 0]
    rec = sample_circuit(6, 0, 0.5, rng)
    assert [l.kind for l in rec.layers] == ["measurement"]


def test_event_count_binomial():
    # total events over many circuits within 4 sigma of Binomial(12*3, 0.5)
    rng = random.Random(2)
    circuits = 10_000
    total = sum(
        len(l.events)
        for _ in range(circuits)
        for l in sample_circuit(12, 3, 0.5, rng).layers
        if l.kind == "measurement"
    )
    n_trials = circuits * 36
    mean = n_trials * 0.5
    sigma = math.sqrt(n_trials * 0.25)
    assert abs(total - mean) < 4 * sigma


def test_determinism_same_seed():
    a = sample_shot("ghz", 6, 3, 0.5, 99, 17)
    b = sample_shot("ghz", 6, 3, 0.5, 99, 17)
    assert record_to_json(a) == record_to_json(b)
    c = sample_shot("ghz", 6, 3, 0.5, 99, 18)
    assert record_to_json(a) != record_to_json(c)


def test_shot_seed_mixing():
    seeds = {derive_shot_seed(7, i) for i in range(1000)}
    assert len(seeds) == 1000
    assert derive_shot_seed(7, 0) != derive_shot_seed(8, 0)


def test_zero_state_z_layer_outcomes():
    circuit = ShadowRecord(n_qubits=4, p=1.0)
    circuit.layers.append(
        CircuitLayer(
            kind="measurement",
            events=[MeasurementEvent(q, "Z") for q in range(4)],
        )
    )
    executed = run_forward("zero", circuit, random.Random(3))
    assert [ev.outcome for ev in executed.layers[0].events] == [0, 0, 0, 0]
    # input record is untouched
    assert all(ev.outcome is None for ev in circuit.layers[0].events)


def test_ghz_first_layer_z_agreement():
    circuit = ShadowRecord(n_qubits=3, p=1.0)
    circuit.layers.append(
        CircuitLayer(
            kind="measurement",
            events=[MeasurementEvent(q, "Z") for q in range(3)],
        )
    )
    rng = random.Random(4)
    saw = set()
    for _ in range(50):
        executed = run_forward("ghz", circuit, rng)
        outs = [ev.outcome for ev in executed.layers[0].events]
        assert outs in ([0, 0, 0], [1, 1, 1])
        saw.add(outs[0])
    assert saw == {0, 1}


def test_forward_outcome_distribution_matches_dense():
    # fixed random circuit at N=3: empirical vs exact p(b | rho, C), 4 sigma
    rng = random.Random(5)
    circuit = sample_circuit(3, 2, 0.5, rng)
    events = [
        (i, j)
        for i, l in enumerate(circuit.layers)
        if l.kind == "measurement"
        for j in range(len(l.events))
    ]
    rho = tableau_density_matrix(ghz_state(3))
    probs = enumerate_outcome_probs(rho, circuit)
    shots = 100_000
    counts = {}
    for _ in range(shots):
        executed = run_forward("ghz", circuit, rng)
        key = tuple(
            executed.layers[i].events[j].outcome for i, j in events
        )
        counts[key] = counts.get(key, 0) + 1
    assert abs(sum(probs.values()) - 1.0) < 1e-10
    for key, prob in probs.items():
        observed = counts.get(key, 0)
        sigma = math.sqrt(shots * prob * (1 - prob)) if 0 < prob < 1 else 0.0
        assert abs(observed - shots * prob) <= max(4 * sigma, 1.0)


def test_ghz_state_small():
    assert [g.to_label() for g in ghz_state(1).generators] == ["+X"]
    t = ghz_state(2)
    assert t.expectation(PauliString.from_label("XX")) == 1
    assert t.expectation(PauliString.from_label("ZZ")) == 1
    rho = tableau_density_matrix(ghz_state(3))
    psi = np.zeros(8)
    psi[0] = psi[7] = 1 / math.sqrt(2)
    assert np.allclose(rho, np.outer(psi, psi), atol=1e-12)


def test_reconstruct_trivial_records():
    rec = ShadowRecord(n_qubits=3, p=0.0)
    rec.layers.append(CircuitLayer(kind="measurement"))
    snap = reconstruct_snapshot(rec)
    assert snap.rank == 0  # maximally mixed

    rng = random.Random(6)
    executed = sample_shot("zero", 4, 0, 1.0, 0, 0)
    snap = reconstruct_snapshot(executed)
    assert snap.rank == 4  # product of measured eigenstates
    for layer in executed.layers:
        for ev in layer.events:
            p = PauliString.single(4, ev.qubit, ev.basis)
            assert snap.expectation(p) == (-1) ** ev.outcome


def test_reconstruct_requires_executed():
    rec = sample_circuit(3, 1, 0.5, random.Random(7))
    if any(l.events for l in rec.layers if l.kind == "measurement"):
        with pytest.raises(ValueError):
            reconstruct_snapshot(rec)


def test_reconstruction_matches_dense_snapshot():
    # all 4^3 Pauli traces of the reconstructed snapshot equal the dense
    # K^dag K / Tr snapshot, for random executed records
    rng = random.Random(8)
    for shot in range(60):
        record = sample_shot("ghz", 3, 2, 0.6, 50, shot)
        snap = reconstruct_snapshot(record)
        _, sigma = channel_apply(maximally_mixed(3), record)
        assert np.allclose(
            all_pauli_traces(tableau_density_matrix(snap), 3),
            all_pauli_traces(sigma, 3),
            atol=1e-10,
        )


def test_reconstruction_never_contradicts():
    # forward-sampled outcomes always give a consistent backward projection
    for shot in range(20_000):
        record = sample_prior_shot(3, 2, 0.7, 77, shot)
        reconstruct_snapshot(record)


def test_bayes_ratio_identity():
    # Tr(sigma rho) = p(b|rho,C) / (2^N p(b|C)) exactly
    rng = random.Random(9)
    rho = tableau_density_matrix(ghz_state(3))
    for shot in range(200):
        record = sample_shot("ghz", 3, 2, 0.5, 31, shot)
        p_rho, sigma = channel_apply(rho, record)
        p_prior, _ = channel_apply(maximally_mixed(3), record)
        lhs = float(np.real(np.trace(sigma @ rho)))
        assert abs(lhs - p_rho / (p_prior * 8)) < 1e-12


def test_snapshot_rank_counts_projections():
    executed = sample_shot("zero", 5, 0, 1.0, 1, 2)
    assert reconstruct_snapshot(executed).rank == 5
    rec = ShadowRecord(n_qubits=5, p=0.0)
    rec.layers.append(CircuitLayer(kind="measurement"))
    assert reconstruct_snapshot(rec).rank == 0


def test_initial_state_errors():
    with pytest.raises(ValueError):
        run_forward("nope", ShadowRecord(n_qubits=2, p=0.0), random.Random(0))
    with pytest.raises(ValueError):
        sample_circuit(3, 1, 1.5, random.Random(0))
