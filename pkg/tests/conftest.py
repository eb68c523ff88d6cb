"""Shared test helpers: dense references and deterministic rng stubs."""

from __future__ import annotations

import numpy as np
import pytest


class FixedBitsRng:
    """random.Random stand-in yielding a scripted sequence of outcome bits."""

    def __init__(self, bits):
        self._bits = list(bits)

    def getrandbits(self, k):
        assert k == 1
        return self._bits.pop(0)

    def random(self):
        raise AssertionError("unexpected random() call")


def dense_partial_trace(rho: np.ndarray, n_qubits: int, keep: list[int]) -> np.ndarray:
    """Reduced density matrix on the kept qubits (qubit i = bit i)."""
    others = [q for q in range(n_qubits) if q not in keep]
    m = len(keep)
    out = np.zeros((2**m, 2**m), dtype=complex)
    for r in range(2**m):
        for c in range(2**m):
            total = 0.0j
            for e in range(2 ** len(others)):
                row = col = 0
                for bi, q in enumerate(keep):
                    row |= ((r >> bi) & 1) << q
                    col |= ((c >> bi) & 1) << q
                for bi, q in enumerate(others):
                    bit = ((e >> bi) & 1) << q
                    row |= bit
                    col |= bit
                total += rho[row, col]
            out[r, c] = total
    return out


@pytest.fixture
def workers() -> int:
    import os

    return min(2, os.cpu_count() or 1)
