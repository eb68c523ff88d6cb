"""MPS-compressed region-basis weight evolution for large chains.

The mass vector over support regions is stored as an open-boundary MPS with
physical dimension 2 per site (region bit: 0 = identity, 1 = in support).
Measurement layers act site-wise; unitary layers contract the constant 4x4
bond matrix into neighboring tensors and truncate by plain SVD in
mixed-canonical form.  The transfer matrices are non-normal, so the SVD
environment is only approximately optimal; the cumulative discarded squared
singular mass is tracked in ``discarded_mass`` as an error ledger.

Masses grow exponentially with depth, so every layer rescales the tensors by
the identity-region mass and accumulates the factor in ``log_scale``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .circuits import bonds_for_parity
from .weights_exact import RegionWeightVector, meas_transfer, unitary_transfer

DEFAULT_CHI_MAX = 128
DEFAULT_TRUNC_TOL = 1e-12

# 4x4 bond transfer reshaped to site pairs: _GATE[ta, tb, sa, sb]
_GATE = unitary_transfer().reshape(2, 2, 2, 2)


@dataclass
class WeightMPS:
    n_qubits: int
    tensors: list[np.ndarray]  # site tensors (left, physical 2, right)
    chi_max: int = DEFAULT_CHI_MAX
    trunc_tol: float = DEFAULT_TRUNC_TOL
    log_scale: float = 0.0  # log of the total mass factor divided out so far
    discarded_mass: float = 0.0  # cumulative relative squared singular mass dropped
    normalized: bool = False

    @property
    def bond_dims(self) -> list[int]:
        return [t.shape[2] for t in self.tensors[:-1]]

    def copy(self) -> "WeightMPS":
        return WeightMPS(
            self.n_qubits,
            [t.copy() for t in self.tensors],
            self.chi_max,
            self.trunc_tol,
            self.log_scale,
            self.discarded_mass,
            self.normalized,
        )

    # -- contractions --------------------------------------------------------

    def _selector_contraction(self, support: int) -> float:
        v = np.ones((1, 1))
        for i, t in enumerate(self.tensors):
            v = v @ (t[:, 1, :] if (support >> i) & 1 else t[:, 0, :])
        return float(v[0, 0])

    def mass_empty(self) -> float:
        """Identity-region mass at the current scaling."""
        return self._selector_contraction(0)

    def weight_for_support(self, support: int) -> float:
        """w(P) for any Pauli with the given support bitmask (normalized MPS)."""
        if not self.normalized:
            raise ValueError("MPS is not normalized")
        k = support.bit_count()
        return self._selector_contraction(support) / 3.0**k

    def query_consecutive_weight(self, start: int, k: int) -> float:
        """w(P) for a consecutive support of size k starting at ``start``."""
        if k == 0:
            return 1.0 if self.normalized else self.mass_empty()
        if start < 0 or start + k > self.n_qubits:
            raise ValueError("support range exceeds the chain")
        return self.weight_for_support(((1 << k) - 1) << start)

    def to_region_vector(self, max_qubits: int = 16) -> RegionWeightVector:
        """Dense conversion for small chains (oracle comparisons)."""
        if self.n_qubits > max_qubits:
            raise ValueError("dense conversion too large")
        masses = np.ones((1, 1))
        for t in self.tensors:
            masses = np.einsum("...a,asb->...sb", masses, t)
        masses = masses.reshape(-1)
        # einsum built indices in site order, so bit i of the flat C-order
        # index is site i counted from the most significant side; reorder to
        # the bitmask convention (bit i = qubit i).
        out = np.empty_like(masses)
        n = self.n_qubits
        for idx in range(2**n):
            mask = 0
            for i in range(n):
                if (idx >> (n - 1 - i)) & 1:
                    mask |= 1 << i
            out[mask] = masses[idx]
        vec = RegionWeightVector(self.n_qubits, out, normalized=False)
        if self.normalized:
            vec.normalized = True
        return vec

    # -- canonical form -------------------------------------------------------

    def _right_canonicalize(self) -> None:
        for i in range(self.n_qubits - 1, 0, -1):
            l, _, r = self.tensors[i].shape
            mat = self.tensors[i].reshape(l, 2 * r)
            q, rr = np.linalg.qr(mat.T)
            k = q.shape[1]
            self.tensors[i] = np.ascontiguousarray(q.T).reshape(k, 2, r)
            self.tensors[i - 1] = np.einsum("asb,bk->ask", self.tensors[i - 1], rr.T)

    def _left_orthogonalize_site(self, i: int) -> None:
        l, _, r = self.tensors[i].shape
        q, rr = np.linalg.qr(self.tensors[i].reshape(l * 2, r))
        k = q.shape[1]
        self.tensors[i] = q.reshape(l, 2, k)
        self.tensors[i + 1] = np.einsum("kb,bsc->ksc", rr, self.tensors[i + 1])

    # -- layer application -----------------------------------------------------

    def apply_measurement_layer(self, p: float) -> None:
        mat = meas_transfer(p)
        for i, t in enumerate(self.tensors):
            self.tensors[i] = np.einsum("ts,asb->atb", mat, t)
        self.normalized = False
        self._rescale()

    def apply_unitary_layer(self, parity: int) -> None:
        if self.chi_max < 1:
            raise ValueError("chi_max must be at least 1")
        self._right_canonicalize()
        front = 0
        for a in bonds_for_parity(self.n_qubits, parity):
            while front < a:
                self._left_orthogonalize_site(front)
                front += 1
            self._apply_bond(a)
            front = a + 1
        self.normalized = False
        self._rescale()

    def _apply_bond(self, a: int) -> None:
        ta, tb = self.tensors[a], self.tensors[a + 1]
        theta = np.einsum("xyst,asc,ctb->axyb", _GATE, ta, tb)
        l, r = theta.shape[0], theta.shape[3]
        u, s, vh = np.linalg.svd(theta.reshape(l * 2, 2 * r), full_matrices=False)
        total = float(np.sum(s**2))
        keep = len(s)
        if total > 0.0:
            tail = np.cumsum(s[::-1] ** 2)[::-1]  # tail[j] = sum_{i >= j} s_i^2
            while keep > 1 and tail[keep - 1] <= self.trunc_tol * total:
                keep -= 1
        if keep > self.chi_max:
            keep = self.chi_max
        if total > 0.0 and keep < len(s):
            self.discarded_mass += float(np.sum(s[keep:] ** 2)) / total
        self.tensors[a] = u[:, :keep].reshape(l, 2, keep)
        self.tensors[a + 1] = (s[:keep, None] * vh[:keep]).reshape(keep, 2, r)

    def _rescale(self) -> None:
        c = self.mass_empty()
        if not np.isfinite(c) or c <= 0.0:
            raise ValueError(f"identity-region mass degenerate: {c}")
        self.tensors[0] = self.tensors[0] / c
        self.log_scale += np.log(c)

    def apply_layers(self, n_periods: int, p: float) -> "WeightMPS":
        """Apply [measurement, unitary] periods; parities alternate from 0.

        ``n_periods = 0`` applies a single measurement layer.  Returns self.
        """
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"measurement rate must be in [0, 1], got {p}")
        if n_periods == 0:
            self.apply_measurement_layer(p)
            return self
        for l in range(n_periods):
            self.apply_measurement_layer(p)
            self.apply_unitary_layer(l % 2)
        return self

    def normalize(self) -> "WeightMPS":
        """Scale tensors so the identity-region contraction equals 1."""
        c = self.mass_empty()
        if c <= 0.0:
            raise ValueError("identity-region mass must be positive")
        scale = c ** (1.0 / self.n_qubits)
        for i in range(self.n_qubits):
            self.tensors[i] = self.tensors[i] / scale
        self.log_scale += np.log(c)
        self.normalized = True
        return self


def init_identity_weight(
    n_qubits: int,
    chi_max: int = DEFAULT_CHI_MAX,
    trunc_tol: float = DEFAULT_TRUNC_TOL,
) -> WeightMPS:
    """Bond-dimension-1 product MPS with all mass on the empty region."""
    if n_qubits < 2:
        raise ValueError("MPS engine needs at least 2 qubits")
    tensors = [np.array([1.0, 0.0]).reshape(1, 2, 1) for _ in range(n_qubits)]
    return WeightMPS(n_qubits, tensors, chi_max=chi_max, trunc_tol=trunc_tol)


def evolve_to_steady(
    mps: WeightMPS,
    p: float,
    probes: list[tuple[int, int]],
    tol: float = 1e-8,
    max_periods: int | None = None,
) -> tuple[WeightMPS, int]:
    """Evolve periods until log w at every probe (start, k) moves < ``tol``
    per period, or the depth cap is reached.  Probes are measured on a
    measurement-terminated copy, matching snapshot ensembles.

    Returns (measurement-terminated normalized MPS, periods run).
    """
    if max_periods is None:
        max_periods = 4 * mps.n_qubits
    prev = None
    periods = 0
    final = None
    for l in range(max_periods):
        mps.apply_measurement_layer(p)
        mps.apply_unitary_layer(l % 2)
        periods += 1
        probe_mps = mps.copy()
        probe_mps.apply_measurement_layer(p)
        probe_mps.normalize()
        vals = np.array(
            [probe_mps.query_consecutive_weight(s, k) for s, k in probes]
        )
        logs = np.log(np.maximum(vals, 1e-300))
        final = probe_mps
        if prev is not None and np.max(np.abs(logs - prev)) < tol:
            prev = logs
            break
        prev = logs
    return final, periods
