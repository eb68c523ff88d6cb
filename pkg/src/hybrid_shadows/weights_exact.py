"""Exact region-basis Markov evolution of prior-snapshot Pauli weights.

Weight mass is tracked per support region A as
``masses[A] = sum_{supp P = A} w(P) = 3^|A| w(P)`` (weights are uniform
within a region for locally scrambled ensembles).  A measurement layer acts
site-wise with a 2x2 matrix, a unitary layer acts bond-wise with a constant
4x4 matrix; the snapshot normalization is applied once at the end as the
ratio-of-averages rule, dividing by the identity-region mass.

The snapshot of a circuit is assembled backward, so the transfer sequence of
an L-unitary-layer hybrid circuit runs through the layers in reverse order
and the trailing unitary layer cancels; see :func:`prior_snapshot_weights`.

Masses evolve exactly when ``p`` is given as a ``fractions.Fraction`` (object
dtype); with a float everything runs in float64.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .circuits import bonds_for_parity

DEFAULT_MAX_QUBITS = 20


def _is_exact(p) -> bool:
    return isinstance(p, Fraction)


def meas_transfer(p) -> np.ndarray:
    """Single-site transfer matrix over (identity, non-identity) masses."""
    if not 0 <= p <= 1:
        raise ValueError(f"measurement rate must be in [0, 1], got {p}")
    if _is_exact(p):
        return np.array(
            [[Fraction(1), p / 3], [p, 1 - 2 * p / 3]], dtype=object
        )
    return np.array([[1.0, p / 3.0], [p, 1.0 - 2.0 * p / 3.0]])


def unitary_transfer(exact: bool = False) -> np.ndarray:
    """Two-site transfer matrix over region masses (empty, {a}, {b}, {a,b}).

    The identity column is preserved; every non-empty column redistributes
    mass by Pauli counting (3, 3, 9)/15 onto the non-empty regions.
    """
    fifth = Fraction(1, 5) if exact else 0.2
    zero, one = (Fraction(0), Fraction(1)) if exact else (0.0, 1.0)
    m = np.array(
        [
            [one, zero, zero, zero],
            [zero, fifth, fifth, fifth],
            [zero, fifth, fifth, fifth],
            [zero, 3 * fifth, 3 * fifth, 3 * fifth],
        ],
        dtype=object if exact else float,
    )
    return m


@dataclass
class RegionWeightVector:
    """Dense per-region weight masses for up to DEFAULT_MAX_QUBITS qubits."""

    n_qubits: int
    masses: np.ndarray  # shape (2**n,), indexed by region bitmask
    normalized: bool = False

    @classmethod
    def initial(cls, n_qubits: int, exact: bool = False) -> "RegionWeightVector":
        """Maximally mixed initial condition: all mass on the empty region."""
        if n_qubits > DEFAULT_MAX_QUBITS:
            raise ValueError(
                f"dense engine capped at {DEFAULT_MAX_QUBITS} qubits, got {n_qubits}"
            )
        masses = np.zeros(2**n_qubits, dtype=object if exact else float)
        masses[0] = Fraction(1) if exact else 1.0
        return cls(n_qubits, masses)

    def apply_measurement_layer(self, p) -> None:
        mat = meas_transfer(p)
        n = self.n_qubits
        for site in range(n):
            self._apply_site(mat, site)
        self.normalized = False

    def apply_unitary_layer(self, parity: int) -> None:
        mat = unitary_transfer(exact=self.masses.dtype == object)
        for a in bonds_for_parity(self.n_qubits, parity):
            self._apply_bond(mat, a)
        self.normalized = False

    def _apply_site(self, mat: np.ndarray, site: int) -> None:
        # C-order reshape of the mask index puts qubit i on axis n-1-i
        n = self.n_qubits
        axis = n - 1 - site
        t = np.moveaxis(self.masses.reshape((2,) * n), axis, 0).reshape(2, -1)
        t = mat.dot(t)
        self.masses = np.moveaxis(t.reshape((2,) + (2,) * (n - 1)), 0, axis).reshape(-1)

    def _apply_bond(self, mat: np.ndarray, a: int) -> None:
        n = self.n_qubits
        axes = (n - 1 - a, n - 2 - a)  # qubits a and a+1
        t = np.moveaxis(self.masses.reshape((2,) * n), axes, (0, 1))
        # combined pair index is C-order (2*s_a + s_{a+1}); the transfer
        # matrix is symmetric in the two single-site regions.
        t = mat.dot(t.reshape(4, -1))
        self.masses = np.moveaxis(
            t.reshape((2, 2) + (2,) * (n - 2)), (0, 1), axes
        ).reshape(-1)

    def rescale(self) -> None:
        """Divide by the identity-region mass (safe at any point: linear dynamics)."""
        m0 = self.masses[0]
        if m0 == 0:
            raise ValueError("identity-region mass vanished")
        self.masses = self.masses / m0

    def normalize(self) -> "RegionWeightVector":
        self.rescale()
        self.normalized = True
        return self

    def weight(self, support: int) -> float:
        """w(P) for any Pauli P with the given support bitmask."""
        if not self.normalized:
            raise ValueError("weight vector is not normalized")
        k = support.bit_count()
        w = self.masses[support] / 3**k
        return w if self.masses.dtype == object else float(w)

    def consecutive_weight(self, start: int, k: int) -> float:
        if start + k > self.n_qubits or start < 0:
            raise ValueError("support range exceeds the chain")
        return self.weight(((1 << k) - 1) << start)

    def weight_table(self) -> list[tuple[int, int, float]]:
        """Rows of (support_mask, support_size, weight)."""
        return [
            (mask, mask.bit_count(), self.weight(mask))
            for mask in range(2**self.n_qubits)
        ]


def evolve_exact(
    n_qubits: int,
    n_periods: int,
    p,
    final_measurement: bool = False,
) -> RegionWeightVector:
    """Evolve [measurement, unitary] transfer periods from the initial condition.

    Unitary-layer parities alternate starting at 0.  With
    ``final_measurement=True`` one extra measurement transfer is appended,
    which matches ensembles whose reconstruction ends on a measurement layer.
    The result is normalized by the ratio-of-averages rule.
    """
    v = RegionWeightVector.initial(n_qubits, exact=_is_exact(p))
    for l in range(n_periods):
        v.apply_measurement_layer(p)
        v.apply_unitary_layer(l % 2)
        v.rescale()
    if final_measurement or n_periods == 0:
        v.apply_measurement_layer(p)
    return v.normalize()


def prior_snapshot_weights(n_qubits: int, n_unitary_layers: int, p) -> RegionWeightVector:
    """Pauli weights of the prior snapshot ensemble of the hybrid circuit.

    The forward circuit is [measurement, unitary] x L with unitary parities
    0, 1, 0, ...  Backward reconstruction cancels the trailing unitary layer,
    so the transfer sequence is: measurement, then for l = L-1 .. 1 a unitary
    transfer at parity (l-1) % 2 followed by a measurement transfer.
    """
    v = RegionWeightVector.initial(n_qubits, exact=_is_exact(p))
    v.apply_measurement_layer(p)
    for l in range(n_unitary_layers - 1, 0, -1):
        v.apply_unitary_layer((l - 1) % 2)
        v.apply_measurement_layer(p)
        v.rescale()
    return v.normalize()


def evolve_exact_steady(
    n_qubits: int,
    p,
    tol: float = 1e-10,
    max_periods: int | None = None,
) -> tuple[RegionWeightVector, int]:
    """Iterate periods (with trailing measurement) until the normalized masses
    change by less than ``tol`` in max-norm per period, or the depth cap hits.

    Returns (weights, periods_run).
    """
    if max_periods is None:
        max_periods = 4 * n_qubits
    v = RegionWeightVector.initial(n_qubits, exact=_is_exact(p))
    prev = None
    periods = 0
    for l in range(max_periods):
        v.apply_measurement_layer(p)
        v.apply_unitary_layer(l % 2)
        v.rescale()
        periods += 1
        probe = v.masses.copy()
        probe_v = RegionWeightVector(n_qubits, probe)
        probe_v.apply_measurement_layer(p)
        probe_v.rescale()
        if prev is not None and np.max(np.abs(probe_v.masses - prev)) < tol:
            prev = probe_v.masses
            break
        prev = probe_v.masses
    out = RegionWeightVector(n_qubits, prev)
    out.normalized = True
    return out, periods
