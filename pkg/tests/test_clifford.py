import random
from collections import Counter

import numpy as np
import pytest
import scipy.stats

from hybrid_shadows.clifford import (
    CliffordGate2,
    TWO_QUBIT_CLIFFORD_COUNT,
    compose,
    enumerate_two_qubit_cliffords,
    gate_conjugate,
    gate_from_class_index,
    random_two_qubit_clifford,
)
from hybrid_shadows.dense import gate_unitary, pauli_matrix
from hybrid_shadows.paulis import PauliString, SignedPauli, pauli_commutes

GENERATOR_PAULIS = [PauliString.from_label(s) for s in ("XI", "ZI", "IX", "IZ")]


def _gate(*labels) -> CliffordGate2:
    return CliffordGate2(tuple(SignedPauli.from_label(lab) for lab in labels))


# Conjugation images (U^dag P U) of the named generators.
HADAMARD_0 = _gate("+ZI", "+XI", "+IX", "+IZ")
PHASE_0 = _gate("-YI", "+ZI", "+IX", "+IZ")
HADAMARD_1 = _gate("+XI", "+ZI", "+IZ", "+IX")
PHASE_1 = _gate("+XI", "+ZI", "-IY", "+IZ")
CNOT_01 = _gate("+XX", "+ZI", "+IX", "+ZZ")
CNOT_10 = _gate("+XI", "+ZZ", "+XX", "+IZ")


def test_identity_gate_fixes_everything():
    gate = CliffordGate2.identity()
    rng = random.Random(0)
    for _ in range(20):
        p = SignedPauli(PauliString(2, rng.getrandbits(2), rng.getrandbits(2)))
        assert gate_conjugate(gate, p, (0, 1)) == p


def test_direct_image_lookup():
    # a gate whose stored image of X0 is Z0 maps X on the first bond qubit to Z
    out = gate_conjugate(HADAMARD_0, SignedPauli.from_label("+XI"), (0, 1))
    assert out.to_label() == "+ZI"


def test_named_gates_match_dense():
    for gate in (HADAMARD_0, PHASE_0, HADAMARD_1, PHASE_1, CNOT_01, CNOT_10):
        gate.validate()
        gate_unitary(gate)  # raises if images are inconsistent


def test_conjugation_matches_dense_oracle():
    rng = random.Random(5)
    for _ in range(50):
        gate = random_two_qubit_clifford(rng)
        u = gate_unitary(gate)
        p = SignedPauli(
            PauliString(2, rng.getrandbits(2), rng.getrandbits(2)), 2 * rng.getrandbits(1)
        )
        out = gate_conjugate(gate, p, (0, 1))
        assert np.allclose(
            u.conj().T @ pauli_matrix(p) @ u, pauli_matrix(out), atol=1e-10
        )


def test_conjugation_on_embedded_bond():
    # acts as identity outside the bond; phases follow the 2-qubit table
    rng = random.Random(6)
    for _ in range(50):
        gate = random_two_qubit_clifford(rng)
        n = 4
        a, b = 1, 2
        p = SignedPauli(PauliString(n, rng.getrandbits(n), rng.getrandbits(n)))
        out = gate_conjugate(gate, p, (a, b))
        keep = ~((1 << a) | (1 << b))
        assert out.pauli.x_bits & keep == p.pauli.x_bits & keep
        assert out.pauli.z_bits & keep == p.pauli.z_bits & keep
        sub_in = SignedPauli(
            PauliString(
                2,
                ((p.pauli.x_bits >> a) & 1) | ((p.pauli.x_bits >> b) & 1) << 1,
                ((p.pauli.z_bits >> a) & 1) | ((p.pauli.z_bits >> b) & 1) << 1,
            )
        )
        sub_out = gate_conjugate(gate, sub_in, (0, 1))
        assert (out.phase_exp - p.phase_exp) % 4 == sub_out.phase_exp
    with pytest.raises(ValueError):
        gate_conjugate(gate, p, (1, 1))


def test_random_gates_preserve_relations():
    # 1e4 draws: commutation relations and Hermiticity preserved exactly
    rng = random.Random(7)
    for _ in range(10_000):
        gate = random_two_qubit_clifford(rng)
        images = gate.images
        for img in images:
            assert img.is_hermitian
            assert not img.pauli.is_identity()
        for i in range(4):
            for j in range(i + 1, 4):
                assert pauli_commutes(images[i].pauli, images[j].pauli) == (
                    pauli_commutes(GENERATOR_PAULIS[i], GENERATOR_PAULIS[j])
                )


def test_inverse_gate():
    rng = random.Random(8)
    for _ in range(40):
        gate = random_two_qubit_clifford(rng)
        inv = gate.inverse()
        p = SignedPauli(
            PauliString(2, rng.getrandbits(2), rng.getrandbits(2)), 2 * rng.getrandbits(1)
        )
        assert gate_conjugate(inv, gate_conjugate(gate, p, (0, 1)), (0, 1)) == p


def test_compose_matches_dense():
    rng = random.Random(9)
    for _ in range(20):
        g1 = random_two_qubit_clifford(rng)
        g2 = random_two_qubit_clifford(rng)
        combined = compose(g1, g2)
        u = gate_unitary(g2) @ gate_unitary(g1)  # apply g1 then g2
        for gen, img in zip(GENERATOR_PAULIS, combined.images):
            assert np.allclose(
                u.conj().T @ pauli_matrix(gen) @ u, pauli_matrix(img), atol=1e-10
            )


def test_enumeration_size_and_uniqueness():
    gates = enumerate_two_qubit_cliffords()
    assert len(gates) == TWO_QUBIT_CLIFFORD_COUNT == 11520
    assert len({g.images for g in gates}) == 11520


def test_enumeration_matches_generator_closure():
    # breadth-first closure over {H, S, CNOT} on both qubits
    generators = [HADAMARD_0, HADAMARD_1, PHASE_0, PHASE_1, CNOT_01, CNOT_10]
    seen = {CliffordGate2.identity().images}
    frontier = [CliffordGate2.identity()]
    while frontier:
        nxt = []
        for gate in frontier:
            for gen in generators:
                new = compose(gate, gen)
                if new.images not in seen:
                    seen.add(new.images)
                    nxt.append(new)
        frontier = nxt
    assert len(seen) == 11520
    assert seen == {g.images for g in enumerate_two_qubit_cliffords()}


def test_uniformity_chi_square():
    # 1e6 draws over all 11520 classes, significance 1e-3
    rng = random.Random(123)
    counts = Counter()
    draws = 1_000_000
    for _ in range(draws):
        counts[random_two_qubit_clifford(rng).images] += 1
    assert len(counts) == 11520
    expected = draws / 11520
    chi2 = sum((c - expected) ** 2 / expected for c in counts.values())
    threshold = scipy.stats.chi2.ppf(1 - 1e-3, 11520 - 1)
    assert chi2 < threshold


def test_class_index_round_trip():
    with pytest.raises(ValueError):
        gate_from_class_index(11520)
    rng = random.Random(10)
    for _ in range(100):
        idx = rng.randrange(TWO_QUBIT_CLIFFORD_COUNT)
        gate = gate_from_class_index(idx)
        gate.validate()
        assert gate.class_index == idx


def test_validate_rejects_bad_gates():
    with pytest.raises(ValueError):
        _gate("+XI", "+XI", "+IX", "+IZ").validate()  # broken anticommutation
    with pytest.raises(ValueError):
        _gate("+II", "+ZI", "+IX", "+IZ").validate()  # identity image
