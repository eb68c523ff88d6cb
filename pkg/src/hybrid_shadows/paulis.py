"""Pauli operators on N qubits in symplectic (x, z) bit representation.

Bits are packed into Python integers: bit ``i`` of ``x_bits`` / ``z_bits``
refers to qubit ``i``.  The unsigned operator encoded by a bit pair is the
canonical Hermitian Pauli on each site::

    (x, z) = (0, 0) -> I    (1, 0) -> X    (1, 1) -> Y    (0, 1) -> Z

i.e. ``sigma(x, z) = i^(x & z) X^x Z^z`` per site, so every
:class:`PauliString` is Hermitian by construction and phases are tracked
separately as powers of ``i`` in :class:`SignedPauli`.
"""

from __future__ import annotations

from dataclasses import dataclass

_BITS_FROM_LETTER = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_LETTER_FROM_BITS = {v: k for k, v in _BITS_FROM_LETTER.items()}
_PHASE_LABEL = {0: "+", 1: "+i", 2: "-", 3: "-i"}
_PHASE_VALUE = {0: 1, 1: 1j, 2: -1, 3: -1j}


def _popcount(v: int) -> int:
    return v.bit_count()


@dataclass(frozen=True)
class PauliString:
    """Unsigned N-qubit Pauli operator (always the Hermitian representative)."""

    n_qubits: int
    x_bits: int
    z_bits: int

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError(f"n_qubits must be positive, got {self.n_qubits}")
        mask = (1 << self.n_qubits) - 1
        if self.x_bits & ~mask or self.z_bits & ~mask:
            raise ValueError("bit pattern exceeds n_qubits")
        if self.x_bits < 0 or self.z_bits < 0:
            raise ValueError("bit patterns must be non-negative")

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls(n_qubits, 0, 0)

    @classmethod
    def single(cls, n_qubits: int, qubit: int, basis: str) -> "PauliString":
        """Single-site Pauli, e.g. ``single(3, 1, "Y")`` is I Y I."""
        if not 0 <= qubit < n_qubits:
            raise ValueError(f"qubit {qubit} out of range for {n_qubits} qubits")
        x, z = _BITS_FROM_LETTER[basis]
        return cls(n_qubits, x << qubit, z << qubit)

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Parse a label like ``"XIZ"``; character ``i`` acts on qubit ``i``."""
        x = z = 0
        for i, ch in enumerate(label):
            xb, zb = _BITS_FROM_LETTER[ch]
            x |= xb << i
            z |= zb << i
        return cls(len(label), x, z)

    def to_label(self) -> str:
        return "".join(
            _LETTER_FROM_BITS[(self.x_bits >> i) & 1, (self.z_bits >> i) & 1]
            for i in range(self.n_qubits)
        )

    @property
    def support(self) -> int:
        """Bitmask of qubits where the operator is not identity."""
        return self.x_bits | self.z_bits

    @property
    def weight(self) -> int:
        return _popcount(self.support)

    def is_identity(self) -> bool:
        return self.x_bits == 0 and self.z_bits == 0

    def __str__(self) -> str:
        return self.to_label()


@dataclass(frozen=True)
class SignedPauli:
    """Pauli operator with exact phase tracking: ``i^phase_exp * pauli``."""

    pauli: PauliString
    phase_exp: int = 0  # power of i, mod 4

    def __post_init__(self):
        object.__setattr__(self, "phase_exp", self.phase_exp % 4)

    @classmethod
    def from_label(cls, label: str) -> "SignedPauli":
        """Parse ``"+XZ"`` / ``"-YI"`` (optional sign character first)."""
        exp = 0
        if label and label[0] in "+-":
            exp = 0 if label[0] == "+" else 2
            label = label[1:]
        return cls(PauliString.from_label(label), exp)

    @property
    def n_qubits(self) -> int:
        return self.pauli.n_qubits

    @property
    def phase(self) -> complex:
        return _PHASE_VALUE[self.phase_exp]

    @property
    def is_hermitian(self) -> bool:
        return self.phase_exp in (0, 2)

    @property
    def sign(self) -> int:
        """+1 or -1; only valid for Hermitian operators."""
        if not self.is_hermitian:
            raise ValueError("sign undefined for non-Hermitian phase")
        return 1 if self.phase_exp == 0 else -1

    def negate(self) -> "SignedPauli":
        return SignedPauli(self.pauli, self.phase_exp + 2)

    def to_label(self) -> str:
        return _PHASE_LABEL[self.phase_exp] + self.pauli.to_label()

    def __str__(self) -> str:
        return self.to_label()


def pauli_commutes(p: PauliString, q: PauliString) -> bool:
    """True iff PQ = QP (symplectic inner product vanishes mod 2)."""
    if p.n_qubits != q.n_qubits:
        raise ValueError(f"length mismatch: {p.n_qubits} vs {q.n_qubits}")
    return _popcount((p.x_bits & q.z_bits) ^ (p.z_bits & q.x_bits)) % 2 == 0


def phase_product_exp(ax: int, az: int, aexp: int, bx: int, bz: int, bexp: int) -> int:
    """Phase exponent (power of i) of the product of two signed Paulis.

    Works directly on bit masks so the tableau inner loops can avoid
    constructing dataclass instances.
    """
    cx = ax ^ bx
    cz = az ^ bz
    exp = (
        aexp
        + bexp
        + _popcount(ax & az)
        + _popcount(bx & bz)
        + 2 * _popcount(az & bx)
        - _popcount(cx & cz)
    )
    return exp % 4


def pauli_multiply(a: SignedPauli, b: SignedPauli) -> SignedPauli:
    """Group product a * b with exact phase tracking."""
    pa, pb = a.pauli, b.pauli
    if pa.n_qubits != pb.n_qubits:
        raise ValueError(f"length mismatch: {pa.n_qubits} vs {pb.n_qubits}")
    exp = phase_product_exp(
        pa.x_bits, pa.z_bits, a.phase_exp, pb.x_bits, pb.z_bits, b.phase_exp
    )
    return SignedPauli(
        PauliString(pa.n_qubits, pa.x_bits ^ pb.x_bits, pa.z_bits ^ pb.z_bits), exp
    )


def symplectic_anticommutes(ax: int, az: int, bx: int, bz: int) -> bool:
    """Bitmask-level anticommutation test (True iff the pair anticommutes)."""
    return _popcount((ax & bz) ^ (az & bx)) % 2 == 1
