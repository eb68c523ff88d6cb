"""Hybrid-circuit sampling, forward execution, and snapshot reconstruction.

A circuit is a list of layers alternating measurement / unitary, starting
with a measurement layer.  Unitary layers tile disjoint bonds in a brick-wall
pattern with open boundary: parity 0 couples (0,1), (2,3), ...; parity 1
couples (1,2), (3,4), ....  The first unitary layer has parity 0.

Forward execution samples outcomes by the Born rule.  The classical snapshot
of an executed record is rebuilt backward: starting from the maximally mixed
state, layers are traversed in reverse, unitary gates are undone, and every
recorded measurement becomes a projection onto its outcome.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .clifford import CliffordGate2, random_two_qubit_clifford
from .paulis import PauliString, SignedPauli
from .tableau import StabilizerTableau

SHADOW_FORMAT_VERSION = 1

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def derive_shot_seed(master_seed: int, shot_index: int) -> int:
    """Splitmix-style avalanche mix of (master_seed, shot_index).

    Deterministic per shot, so shots can run on any worker in any order and
    still reproduce bit-identical records.
    """
    z = (master_seed + (shot_index + 1) * _GOLDEN) & _MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _MASK64
    z ^= z >> 31
    return z


def shot_rng(master_seed: int, shot_index: int) -> random.Random:
    return random.Random(derive_shot_seed(master_seed, shot_index))


@dataclass
class MeasurementEvent:
    qubit: int
    basis: str  # "X" | "Y" | "Z"
    outcome: int | None = None


@dataclass
class CircuitLayer:
    kind: str  # "measurement" | "unitary"
    events: list[MeasurementEvent] = field(default_factory=list)
    parity: int | None = None
    gates: dict[int, CliffordGate2] = field(default_factory=dict)  # left qubit -> gate


@dataclass
class ShadowRecord:
    """One experiment: the sampled circuit realization plus outcome bits."""

    n_qubits: int
    p: float
    master_seed: int = 0
    shot_index: int = 0
    initial_state_label: str = ""
    layers: list[CircuitLayer] = field(default_factory=list)

    @property
    def is_executed(self) -> bool:
        return all(
            ev.outcome is not None
            for layer in self.layers
            if layer.kind == "measurement"
            for ev in layer.events
        )

    @property
    def n_unitary_layers(self) -> int:
        return sum(1 for layer in self.layers if layer.kind == "unitary")


def bonds_for_parity(n_qubits: int, parity: int) -> list[int]:
    """Left qubit index of each bond in a brick-wall layer (open boundary)."""
    return list(range(parity, n_qubits - 1, 2))


def sample_circuit(
    n_qubits: int, n_unitary_layers: int, p: float, rng: random.Random
) -> ShadowRecord:
    """Sample a circuit realization; outcomes are left unset.

    The layer pattern is [measurement, unitary] repeated ``n_unitary_layers``
    times (measurements before each unitary layer).  ``n_unitary_layers = 0``
    yields a single measurement layer.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"measurement rate must be in [0, 1], got {p}")
    if n_qubits < 1:
        raise ValueError("n_qubits must be positive")
    record = ShadowRecord(n_qubits=n_qubits, p=p)
    n_meas_layers = max(n_unitary_layers, 1)
    for l in range(n_meas_layers):
        meas = CircuitLayer(kind="measurement")
        for q in range(n_qubits):
            if rng.random() < p:
                meas.events.append(
                    MeasurementEvent(qubit=q, basis="XYZ"[rng.randrange(3)])
                )
        record.layers.append(meas)
        if l < n_unitary_layers:
            parity = l % 2
            uni = CircuitLayer(kind="unitary", parity=parity)
            for a in bonds_for_parity(n_qubits, parity):
                uni.gates[a] = random_two_qubit_clifford(rng)
            record.layers.append(uni)
    return record


def ghz_state(n_qubits: int) -> StabilizerTableau:
    """GHZ state (|0...0> + |1...1>)/sqrt(2); |+> for a single qubit."""
    if n_qubits < 1:
        raise ValueError("n_qubits must be positive")
    gens = [SignedPauli(PauliString(n_qubits, (1 << n_qubits) - 1, 0))]
    for i in range(n_qubits - 1):
        gens.append(SignedPauli(PauliString(n_qubits, 0, 0b11 << i)))
    return StabilizerTableau.from_generators(n_qubits, gens, validate=False)


MAXIMALLY_MIXED_LABEL = "maximally-mixed"

_NAMED_STATES = {
    "ghz": ghz_state,
    "zero": StabilizerTableau.zero_state,
    "plus": StabilizerTableau.plus_state,
    MAXIMALLY_MIXED_LABEL: StabilizerTableau.empty,
}


def initial_state(spec, n_qubits: int) -> tuple[StabilizerTableau, str]:
    """Resolve an initial-state spec to a fresh tableau and its label.

    ``spec`` may be a named state ("ghz", "zero", "plus", "maximally-mixed"),
    an explicit list of stabilizer generators (SignedPauli or labels like
    "+XX"), or a tableau (copied).
    """
    if isinstance(spec, str):
        try:
            return _NAMED_STATES[spec](n_qubits), spec
        except KeyError:
            raise ValueError(f"unknown initial state {spec!r}") from None
    if isinstance(spec, StabilizerTableau):
        if spec.n_qubits != n_qubits:
            raise ValueError("initial-state qubit count mismatch")
        return spec.copy(), "custom"
    gens = [
        SignedPauli.from_label(g) if isinstance(g, str) else g for g in spec
    ]
    return StabilizerTableau.from_generators(n_qubits, gens), "custom"


def run_forward(state_spec, record: ShadowRecord, rng: random.Random) -> ShadowRecord:
    """Execute the circuit on the initial state, sampling all outcomes.

    Returns a new executed record; the input record is left untouched.
    """
    tableau, label = initial_state(state_spec, record.n_qubits)
    executed = ShadowRecord(
        n_qubits=record.n_qubits,
        p=record.p,
        master_seed=record.master_seed,
        shot_index=record.shot_index,
        initial_state_label=label,
    )
    for layer in record.layers:
        if layer.kind == "measurement":
            new_layer = CircuitLayer(kind="measurement")
            for ev in layer.events:
                outcome = tableau.measure(ev.qubit, ev.basis, rng)
                new_layer.events.append(MeasurementEvent(ev.qubit, ev.basis, outcome))
            executed.layers.append(new_layer)
        else:
            for a, gate in layer.gates.items():
                tableau.apply_gate(gate, a, a + 1)
            executed.layers.append(
                CircuitLayer(kind="unitary", parity=layer.parity, gates=layer.gates)
            )
    return executed


def reconstruct_snapshot(record: ShadowRecord) -> StabilizerTableau:
    """Rebuild the classical snapshot of an executed record.

    Starts from the maximally mixed state and traces the circuit backward:
    unitary layers are conjugated by the inverse gates, measurement events
    become projections onto the recorded outcomes.  Raises
    ContradictionError on inconsistent records.
    """
    if not record.is_executed:
        raise ValueError("record has unset measurement outcomes")
    tableau = StabilizerTableau.empty(record.n_qubits)
    for layer in reversed(record.layers):
        if layer.kind == "unitary":
            for a, gate in layer.gates.items():
                tableau.apply_gate(gate, a, a + 1, dagger=True)
        else:
            for ev in layer.events:
                tableau.project(ev.qubit, ev.basis, ev.outcome)
    return tableau


def sample_shot(
    state_spec,
    n_qubits: int,
    n_unitary_layers: int,
    p: float,
    master_seed: int,
    shot_index: int,
) -> ShadowRecord:
    """Sample and execute one shot with a per-shot derived seed."""
    rng = shot_rng(master_seed, shot_index)
    record = sample_circuit(n_qubits, n_unitary_layers, p, rng)
    record.master_seed = master_seed
    record.shot_index = shot_index
    return run_forward(state_spec, record, rng)


def sample_prior_shot(
    n_qubits: int, n_unitary_layers: int, p: float, master_seed: int, shot_index: int
) -> ShadowRecord:
    """One shot of the prior ensemble (maximally mixed effective input)."""
    return sample_shot(
        MAXIMALLY_MIXED_LABEL, n_qubits, n_unitary_layers, p, master_seed, shot_index
    )
