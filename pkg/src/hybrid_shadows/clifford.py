"""Two-qubit Clifford gates in Heisenberg (conjugation-image) form.

A gate stores the images of the four generators X0, Z0, X1, Z1 under
``P -> U^dag P U``.  Sampling is rejection-free and exactly uniform over the
11520 classes of the two-qubit Clifford group modulo global phase: the image
of X0 is drawn uniformly from the 30 signed non-identity Paulis, the image of
Z0 from the 16 signed Paulis anticommuting with it, and the images of X1 and
Z1 from the 6 and 4 signed choices remaining in the commutant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .paulis import (
    PauliString,
    SignedPauli,
    pauli_commutes,
    pauli_multiply,
    symplectic_anticommutes,
)

TWO_QUBIT_CLIFFORD_COUNT = 30 * 16 * 6 * 4  # = 11520

# Unsigned non-identity 2-qubit Paulis as (x, z) bit pairs, fixed order.
_NONID = [(x, z) for x in range(4) for z in range(4) if x or z]
_ANTI = {
    pq: [rs for rs in _NONID if symplectic_anticommutes(*pq, *rs)] for pq in _NONID
}


def _commutant(g1: tuple[int, int], g2: tuple[int, int]) -> list[tuple[int, int]]:
    return [
        rs
        for rs in _NONID
        if not symplectic_anticommutes(*g1, *rs)
        and not symplectic_anticommutes(*g2, *rs)
    ]


@dataclass(frozen=True)
class CliffordGate2:
    """Images of (X0, Z0, X1, Z1) under conjugation P -> U^dag P U."""

    images: tuple[SignedPauli, SignedPauli, SignedPauli, SignedPauli]
    # set for gates built by the class sampler; excluded from equality
    class_index: int | None = field(default=None, compare=False, repr=False)

    @classmethod
    def identity(cls) -> "CliffordGate2":
        return cls(
            tuple(
                SignedPauli(PauliString(2, x, z))
                for x, z in ((1, 0), (0, 1), (2, 0), (0, 2))
            )
        )

    def validate(self) -> None:
        """Raise ValueError unless the images define a valid Clifford gate."""
        gens = [PauliString(2, x, z) for x, z in ((1, 0), (0, 1), (2, 0), (0, 2))]
        if len(self.images) != 4:
            raise ValueError("expected exactly four images")
        for img in self.images:
            if img.n_qubits != 2:
                raise ValueError("images must act on 2 qubits")
            if not img.is_hermitian:
                raise ValueError("images must be Hermitian (phase +-1)")
            if img.pauli.is_identity():
                raise ValueError("images must be non-identity")
        for i in range(4):
            for j in range(i + 1, 4):
                want = pauli_commutes(gens[i], gens[j])
                got = pauli_commutes(self.images[i].pauli, self.images[j].pauli)
                if want != got:
                    raise ValueError("images break a commutation relation")
        # Symplectic rank 4 over GF(2) <=> images generate the full Pauli group.
        rows = [img.pauli.x_bits << 2 | img.pauli.z_bits for img in self.images]
        if _gf2_rank(rows) != 4:
            raise ValueError("images are GF(2)-dependent")

    def inverse(self) -> "CliffordGate2":
        """Gate whose conjugation images are those of U (i.e. the gate U^dag)."""
        _, inv = _tables(self)
        images = []
        for x, z in ((1, 0), (0, 1), (2, 0), (0, 2)):
            bits, delta = inv[x | z << 2]
            images.append(SignedPauli(PauliString(2, bits & 3, bits >> 2), delta))
        return CliffordGate2(tuple(images))

    def image_labels(self) -> list[str]:
        return [img.to_label() for img in self.images]

    @classmethod
    def from_image_labels(cls, labels: list[str]) -> "CliffordGate2":
        gate = cls(tuple(SignedPauli.from_label(lab) for lab in labels))
        gate.validate()
        return gate


def _gf2_rank(rows: list[int]) -> int:
    rank = 0
    pivots: list[int] = []
    for row in rows:
        for piv in pivots:
            row = min(row, row ^ piv)
        if row:
            pivots.append(row)
            rank += 1
    return rank


def _conjugate_sub(gate: CliffordGate2, sub: int) -> tuple[int, int]:
    """Image of the canonical 2-qubit Pauli with bits ``sub = x | z << 2``."""
    x, z = sub & 3, sub >> 2
    acc = SignedPauli(PauliString(2, 0, 0), (x & z).bit_count())
    for bit, img in zip((x & 1, z & 1, (x >> 1) & 1, (z >> 1) & 1), gate.images):
        if bit:
            acc = pauli_multiply(acc, img)
    if not acc.is_hermitian:
        raise ValueError("gate images are inconsistent (non-Hermitian image)")
    return acc.pauli.x_bits | acc.pauli.z_bits << 2, acc.phase_exp


_TABLE_CACHE: dict[CliffordGate2, tuple[list, list]] = {}
_TABLES_BY_CLASS: list[tuple[list, list] | None] = [None] * TWO_QUBIT_CLIFFORD_COUNT


def _build_tables(gate: CliffordGate2) -> tuple[list, list]:
    fwd: list[tuple[int, int]] = [(0, 0)] * 16
    inv: list[tuple[int, int]] = [(0, 0)] * 16
    for sub in range(1, 16):
        out, delta = _conjugate_sub(gate, sub)
        fwd[sub] = (out, delta)
        inv[out] = (sub, delta)
    return fwd, inv


def _tables(gate: CliffordGate2):
    """Forward/inverse conjugation lookup tables over the 16 sub-Paulis.

    Entry ``fwd[i] = (j, delta)`` means ``U^dag sigma_i U = i^delta sigma_j``.
    """
    idx = gate.class_index
    if idx is not None:
        cached = _TABLES_BY_CLASS[idx]
        if cached is None:
            cached = _build_tables(gate)
            _TABLES_BY_CLASS[idx] = cached
        return cached
    cached = _TABLE_CACHE.get(gate)
    if cached is None:
        cached = _build_tables(gate)
        _TABLE_CACHE[gate] = cached
    return cached


def gate_from_class_index(index: int) -> CliffordGate2:
    """Deterministically build the gate for a class index in [0, 11520)."""
    if not 0 <= index < TWO_QUBIT_CLIFFORD_COUNT:
        raise ValueError(f"class index out of range: {index}")
    rest, i4 = divmod(index, 4)
    rest, i3 = divmod(rest, 6)
    i1, i2 = divmod(rest, 16)
    g1 = _NONID[i1 >> 1]
    s1 = (i1 & 1) * 2
    anti = _ANTI[g1]
    g2 = anti[i2 >> 1]
    s2 = (i2 & 1) * 2
    comm = _commutant(g1, g2)
    g3 = comm[i3 >> 1]
    s3 = (i3 & 1) * 2
    last = [rs for rs in comm if symplectic_anticommutes(*g3, *rs)]
    g4 = last[i4 >> 1]
    s4 = (i4 & 1) * 2
    return CliffordGate2(
        tuple(
            SignedPauli(PauliString(2, x, z), s)
            for (x, z), s in ((g1, s1), (g2, s2), (g3, s3), (g4, s4))
        ),
        class_index=index,
    )


_CLASS_CACHE: dict[int, CliffordGate2] = {}


def random_two_qubit_clifford(rng) -> CliffordGate2:
    """Uniform draw over the 11520 two-qubit Clifford classes."""
    index = rng.randrange(TWO_QUBIT_CLIFFORD_COUNT)
    gate = _CLASS_CACHE.get(index)
    if gate is None:
        gate = gate_from_class_index(index)
        _CLASS_CACHE[index] = gate
    return gate


def enumerate_two_qubit_cliffords() -> list[CliffordGate2]:
    return [gate_from_class_index(i) for i in range(TWO_QUBIT_CLIFFORD_COUNT)]


def gate_conjugate(gate: CliffordGate2, p: SignedPauli, bond: tuple[int, int]) -> SignedPauli:
    """Heisenberg image U^dag P U; acts as the identity outside the bond."""
    a, b = bond
    n = p.n_qubits
    if a == b or not (0 <= a < n and 0 <= b < n):
        raise ValueError(f"invalid bond {bond} for {n} qubits")
    fwd, _ = _tables(gate)
    x, z = p.pauli.x_bits, p.pauli.z_bits
    sub = ((x >> a) & 1) | ((x >> b) & 1) << 1 | ((z >> a) & 1) << 2 | ((z >> b) & 1) << 3
    out, delta = fwd[sub]
    clear = ~((1 << a) | (1 << b))
    x = (x & clear) | (out & 1) << a | ((out >> 1) & 1) << b
    z = (z & clear) | ((out >> 2) & 1) << a | ((out >> 3) & 1) << b
    return SignedPauli(PauliString(n, x, z), p.phase_exp + delta)


def compose(first: CliffordGate2, second: CliffordGate2) -> CliffordGate2:
    """Gate of the circuit that applies ``first`` then ``second``."""
    images = []
    for x, z in ((1, 0), (0, 1), (2, 0), (0, 2)):
        img = gate_conjugate(second, SignedPauli(PauliString(2, x, z)), (0, 1))
        images.append(gate_conjugate(first, img, (0, 1)))
    return CliffordGate2(tuple(images))
