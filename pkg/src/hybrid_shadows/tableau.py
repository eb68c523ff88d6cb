"""Mixed-state stabilizer tableau with rank 0..N.

The tableau stores only stabilizer generators (no destabilizers), so the
rank can grow and shrink freely under projections; membership questions are
answered by Gaussian elimination over GF(2) with exact sign accumulation.
Rank 0 is the maximally mixed state, rank N a pure stabilizer state.
"""

from __future__ import annotations

from fractions import Fraction

from . import gf2
from .clifford import CliffordGate2, _tables
from .paulis import PauliString, SignedPauli, phase_product_exp

_BASIS_BITS = {"X": (1, 0), "Y": (1, 1), "Z": (0, 1)}


class ContradictionError(Exception):
    """Projection onto a zero-probability outcome (corrupted shadow record)."""


class StabilizerTableau:
    """Stabilizer state sigma = 2^-N sum_{g in <generators>} g."""

    __slots__ = ("n_qubits", "_x", "_z", "_phase", "_echelon")

    def __init__(self, n_qubits: int):
        if n_qubits < 1:
            raise ValueError(f"n_qubits must be positive, got {n_qubits}")
        self.n_qubits = n_qubits
        self._x: list[int] = []
        self._z: list[int] = []
        self._phase: list[int] = []  # 0 -> +1, 2 -> -1
        self._echelon: dict[int, tuple[int, int, int]] | None = None

    # -- constructors ------------------------------------------------------

    @classmethod
    def empty(cls, n_qubits: int) -> "StabilizerTableau":
        """Maximally mixed state (no generators)."""
        return cls(n_qubits)

    @classmethod
    def zero_state(cls, n_qubits: int) -> "StabilizerTableau":
        t = cls(n_qubits)
        for i in range(n_qubits):
            t._x.append(0)
            t._z.append(1 << i)
            t._phase.append(0)
        return t

    @classmethod
    def plus_state(cls, n_qubits: int) -> "StabilizerTableau":
        t = cls(n_qubits)
        for i in range(n_qubits):
            t._x.append(1 << i)
            t._z.append(0)
            t._phase.append(0)
        return t

    @classmethod
    def from_generators(
        cls, n_qubits: int, generators, validate: bool = True
    ) -> "StabilizerTableau":
        t = cls(n_qubits)
        for g in generators:
            if g.n_qubits != n_qubits:
                raise ValueError("generator length mismatch")
            if not g.is_hermitian:
                raise ValueError("generators must have phase +-1")
            t._x.append(g.pauli.x_bits)
            t._z.append(g.pauli.z_bits)
            t._phase.append(g.phase_exp)
        if validate:
            t._validate()
        return t

    def _validate(self) -> None:
        n = self.n_qubits
        rows = [(x << n) | z for x, z in zip(self._x, self._z)]
        if gf2.rank(rows) != len(rows):
            raise ValueError("generators are GF(2)-dependent")
        for i in range(len(rows)):
            for j in range(i + 1, len(rows)):
                if ((self._x[i] & self._z[j]).bit_count()
                        + (self._z[i] & self._x[j]).bit_count()) % 2:
                    raise ValueError("generators do not commute")

    # -- basic accessors ---------------------------------------------------

    @property
    def rank(self) -> int:
        return len(self._x)

    @property
    def generators(self) -> list[SignedPauli]:
        return [
            SignedPauli(PauliString(self.n_qubits, x, z), ph)
            for x, z, ph in zip(self._x, self._z, self._phase)
        ]

    def copy(self) -> "StabilizerTableau":
        t = StabilizerTableau(self.n_qubits)
        t._x = self._x[:]
        t._z = self._z[:]
        t._phase = self._phase[:]
        t._echelon = self._echelon
        return t

    def __repr__(self) -> str:
        gens = ", ".join(g.to_label() for g in self.generators)
        return f"StabilizerTableau({self.n_qubits}, [{gens}])"

    # -- gates ---------------------------------------------------------------

    def apply_gate(self, gate: CliffordGate2, a: int, b: int, dagger: bool = False) -> None:
        """Apply the gate's unitary U (or U^dag) to the state on bond (a, b)."""
        n = self.n_qubits
        if a == b or not (0 <= a < n and 0 <= b < n):
            raise ValueError(f"invalid bond {(a, b)} for {n} qubits")
        fwd, inv = _tables(gate)
        # Stored images are U^dag P U, so stabilizers g -> U g U^dag use the
        # inverse table when applying U itself.
        table = fwd if dagger else inv
        clear = ~((1 << a) | (1 << b))
        for i in range(len(self._x)):
            x, z = self._x[i], self._z[i]
            sub = (
                ((x >> a) & 1)
                | ((x >> b) & 1) << 1
                | ((z >> a) & 1) << 2
                | ((z >> b) & 1) << 3
            )
            if sub == 0:
                continue
            out, delta = table[sub]
            self._x[i] = (x & clear) | (out & 1) << a | ((out >> 1) & 1) << b
            self._z[i] = (z & clear) | ((out >> 2) & 1) << a | ((out >> 3) & 1) << b
            self._phase[i] = (self._phase[i] + delta) % 4
        self._echelon = None

    # -- membership / expectation values ------------------------------------

    def _echelonize(self) -> dict[int, tuple[int, int, int]]:
        if self._echelon is not None:
            return self._echelon
        n = self.n_qubits
        ech: dict[int, tuple[int, int, int]] = {}
        for x, z, ph in zip(self._x, self._z, self._phase):
            v = (x << n) | z
            while v:
                piv = v.bit_length() - 1
                row = ech.get(piv)
                if row is None:
                    ech[piv] = (x, z, ph)
                    break
                rx, rz, rph = row
                ph = phase_product_exp(x, z, ph, rx, rz, rph)
                x ^= rx
                z ^= rz
                v = (x << n) | z
        self._echelon = ech
        return ech

    def _expectation_bits(self, px: int, pz: int) -> int:
        if px == 0 and pz == 0:
            return 1
        ech = self._echelonize()
        n = self.n_qubits
        gx = gz = gph = 0
        v = (px << n) | pz
        while v:
            row = ech.get(v.bit_length() - 1)
            if row is None:
                return 0
            rx, rz, rph = row
            gph = phase_product_exp(gx, gz, gph, rx, rz, rph)
            gx ^= rx
            gz ^= rz
            v = ((px ^ gx) << n) | (pz ^ gz)
        return 1 if gph % 4 == 0 else -1

    def expectation(self, p: PauliString) -> int:
        """Tr(P sigma) in {-1, 0, +1}."""
        if p.n_qubits != self.n_qubits:
            raise ValueError("Pauli length mismatch")
        return self._expectation_bits(p.x_bits, p.z_bits)

    def contains_unsigned(self, p: PauliString) -> bool:
        return self.expectation(p) != 0

    # -- measurement and projection ------------------------------------------

    def _anticommuting_rows(self, px: int, pz: int) -> list[int]:
        return [
            i
            for i in range(len(self._x))
            if ((self._x[i] & pz).bit_count() + (self._z[i] & px).bit_count()) % 2
        ]

    def _replace_anticommuting(self, rows: list[int], px: int, pz: int, target_exp: int) -> None:
        j = rows[0]
        for k in rows[1:]:
            # g_k <- g_k g_j restores commutation with the projected Pauli;
            # the two rows commute, so the product phase is order-free.
            exp = phase_product_exp(
                self._x[k], self._z[k], self._phase[k],
                self._x[j], self._z[j], self._phase[j],
            )
            self._x[k] ^= self._x[j]
            self._z[k] ^= self._z[j]
            self._phase[k] = exp
        self._x[j] = px
        self._z[j] = pz
        self._phase[j] = target_exp
        self._echelon = None

    def _project_bits(self, px: int, pz: int, target_exp: int) -> None:
        rows = self._anticommuting_rows(px, pz)
        if rows:
            self._replace_anticommuting(rows, px, pz, target_exp)
            return
        eps = self._expectation_bits(px, pz)
        if eps == 0:
            self._x.append(px)
            self._z.append(pz)
            self._phase.append(target_exp)
            self._echelon = None
        elif (eps == 1) != (target_exp == 0):
            label = SignedPauli(PauliString(self.n_qubits, px, pz), target_exp).to_label()
            raise ContradictionError(f"projection {label} has zero probability")

    def project_signed(self, sp: SignedPauli) -> None:
        """Apply (1 + sp)/2 symbolically; sp must be Hermitian non-identity."""
        if sp.n_qubits != self.n_qubits:
            raise ValueError("Pauli length mismatch")
        if not sp.is_hermitian:
            raise ValueError("can only project Hermitian Paulis")
        if sp.pauli.is_identity():
            raise ValueError("cannot project the identity")
        self._project_bits(sp.pauli.x_bits, sp.pauli.z_bits, sp.phase_exp)

    def project(self, qubit: int, basis: str, outcome: int) -> None:
        """Project qubit onto the (-1)^outcome eigenstate of the basis Pauli."""
        xb, zb = _BASIS_BITS[basis]
        self._project_bits(xb << qubit, zb << qubit, 2 * (outcome & 1))

    def measure(self, qubit: int, basis: str, rng) -> int:
        """Born-rule measurement of a single-qubit Pauli; returns the outcome bit."""
        xb, zb = _BASIS_BITS[basis]
        px, pz = xb << qubit, zb << qubit
        rows = self._anticommuting_rows(px, pz)
        if rows:
            outcome = rng.getrandbits(1)
            self._replace_anticommuting(rows, px, pz, 2 * outcome)
            return outcome
        eps = self._expectation_bits(px, pz)
        if eps != 0:
            return 0 if eps == 1 else 1
        outcome = rng.getrandbits(1)
        self._x.append(px)
        self._z.append(pz)
        self._phase.append(2 * outcome)
        self._echelon = None
        return outcome

    # -- subsystem purity ------------------------------------------------------

    def purity(self, region: int) -> Fraction:
        """Tr(sigma_A^2) for the qubit subset given as a bitmask."""
        full = (1 << self.n_qubits) - 1
        if region & ~full:
            raise ValueError("region mask exceeds qubit count")
        comp = full & ~region
        n = self.n_qubits
        restricted = [((x & comp) << n) | (z & comp) for x, z in zip(self._x, self._z)]
        r = gf2.rank(restricted)
        k = region.bit_count()
        # |{g in group : supp(g) subset A}| = 2^(rank - r)
        return Fraction(2 ** (self.rank - r), 2 ** k)
