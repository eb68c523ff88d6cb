"""Closed-form toy models for the two phases, their Monte-Carlo checks, and
the transverse-field Ising oracle for the variational weight ansatz.

Area-law toy: the snapshot is a product of independent n-qubit random
stabilizer states; a Pauli covering m whole blocks has weight
(2^n - 1)^m / (4^n - 1)^m = (2^n + 1)^-m.

Volume-law toy: each n-qubit block decodes into one logical + (n-1) measured
syndrome qubits, the N/n logicals are globally scrambled and then measured;
w = q^m + eps (r^m - q^m) with q, r, eps set by Pauli counting.

The Monte-Carlo realizations sample uniform stabilizer frames directly
(sequential sampling of symplectic generators with rejection), which matches
the uniform-Clifford circuit distributions exactly.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import gf2
from .paulis import PauliString, SignedPauli
from .tableau import StabilizerTableau

TFIM_MAX_SITES = 14
_TFIM_TILT = 1e-9


# -- closed forms ---------------------------------------------------------------


def toy_area(n: int, m: int) -> tuple[float, float]:
    """(weight, beta) for the area-phase block toy model."""
    if n < 1 or m < 1:
        raise ValueError("block size and block count must be >= 1")
    w = ((2.0**n - 1.0) / (4.0**n - 1.0)) ** m
    beta = math.exp(math.log(2.0**n + 1.0) / n)
    return w, beta


def beta_volume_of_f(f: float) -> float:
    """Scaling base as a function of the volume-law coefficient f = 1/n.

    log beta = f log((4^(1/f) - 1) / (2^(1/f - 1) - 1)), evaluated in log
    space so arbitrarily small f does not overflow.
    """
    if not 0 < f < 1:
        raise ValueError("volume-law coefficient must lie in (0, 1)")
    inv = 1.0 / f
    log_num = inv * math.log(4.0) + math.log1p(-(4.0**-inv))
    log_den = (inv - 1.0) * math.log(2.0) + math.log1p(-(2.0 ** (1.0 - inv)))
    return math.exp(f * (log_num - log_den))


def toy_volume(n: int, m: int, total_qubits: int) -> tuple[float, float]:
    """(weight, beta) for the volume-phase block toy model.

    n = 1 leaves no syndrome qubits (q = 0) and is rejected.
    """
    if n < 2:
        raise ValueError("volume toy needs block size >= 2 (q = 0 at n = 1)")
    if m < 1 or total_qubits % n:
        raise ValueError("total qubits must be a multiple of the block size")
    eps = 1.0 / (2.0 ** (total_qubits / n) + 1.0)
    q = (2.0 ** (n - 1) - 1.0) / (4.0**n - 1.0)
    r = (4.0 * 2.0 ** (n - 1) - 1.0) / (4.0**n - 1.0)
    w = q**m + eps * (r**m - q**m)
    return w, beta_volume_of_f(1.0 / n)


def perturbative_betas(c: float, c_prime: float, p: float) -> tuple[float, float]:
    """(beta_volume, beta_area) = (1 + 2 coth(c p), 3 exp(-c'(1-p)))."""
    if c <= 0 or c_prime <= 0:
        raise ValueError("coefficients must be positive")
    if not 0 < p <= 1:
        raise ValueError("measurement rate must lie in (0, 1]")
    return 1.0 + 2.0 / math.tanh(c * p), 3.0 * math.exp(-c_prime * (1.0 - p))


# -- uniform stabilizer sampling ---------------------------------------------------


def _anticommute(v: int, w: int, n: int) -> bool:
    mask = (1 << n) - 1
    return (((v & (w >> n)) & mask).bit_count() + ((w & (v >> n)) & mask).bit_count()) % 2 == 1


def random_stabilizer_rows(n: int, rng: random.Random) -> list[int]:
    """Uniform maximal isotropic subspace of GF(2)^2n as n combined (x | z<<n) rows.

    Sequential rejection sampling: every maximal isotropic subspace is hit
    with equal probability because the candidate counts at each step do not
    depend on the partial subspace.
    """
    rows: list[int] = []
    while len(rows) < n:
        v = rng.randrange(1, 4**n)
        if any(_anticommute(v, w, n) for w in rows):
            continue
        if gf2.in_rowspan(v, rows):
            continue
        rows.append(v)
    return rows


def random_stabilizer_tableau(n: int, rng: random.Random) -> StabilizerTableau:
    """Uniform random pure stabilizer state on n qubits."""
    mask = (1 << n) - 1
    gens = [
        SignedPauli(PauliString(n, v & mask, v >> n), 2 * rng.getrandbits(1))
        for v in random_stabilizer_rows(n, rng)
    ]
    return StabilizerTableau.from_generators(n, gens, validate=False)


def random_symplectic_frame(n: int, rng: random.Random) -> list[tuple[int, int]]:
    """Uniform hyperbolic basis: n pairs (a_i, b_i) with a_i, b_i anticommuting
    and everything else commuting; rows combined as x | z << n."""
    pairs: list[tuple[int, int]] = []
    chosen: list[int] = []
    for _ in range(n):
        while True:
            a = rng.randrange(1, 4**n)
            if any(_anticommute(a, w, n) for w in chosen):
                continue
            if gf2.in_rowspan(a, chosen):
                continue
            break
        while True:
            b = rng.randrange(1, 4**n)
            if not _anticommute(a, b, n):
                continue
            if any(_anticommute(b, w, n) for w in chosen):
                continue
            break
        pairs.append((a, b))
        chosen.extend((a, b))
    return pairs


# -- Monte-Carlo block toys ------------------------------------------------------


@dataclass(frozen=True)
class BlockToySpec:
    block_size: int
    blocks_covered: int
    phase: str  # "area" | "volume"
    total_qubits: int | None = None  # volume phase only

    def __post_init__(self):
        if self.block_size < 1 or self.blocks_covered < 1:
            raise ValueError("block size and covered count must be >= 1")
        if self.phase not in ("area", "volume"):
            raise ValueError(f"unknown phase {self.phase!r}")
        if self.phase == "volume":
            if self.total_qubits is None or self.total_qubits % self.block_size:
                raise ValueError("volume phase needs total_qubits divisible by n")
            if self.block_size < 2:
                raise ValueError("volume phase needs block size >= 2")
            if self.total_qubits < 4 * self.block_size:
                # small systems carry large eps corrections; still allowed
                pass


def _covered_support_ok(spec: BlockToySpec, support: int) -> bool:
    n = spec.block_size
    blocks = []
    total = spec.total_qubits or n * spec.blocks_covered
    for b in range(total // n):
        block_mask = ((1 << n) - 1) << (b * n)
        overlap = support & block_mask
        if overlap == block_mask:
            blocks.append(b)
        elif overlap:
            return False
    return len(blocks) == spec.blocks_covered


def toy_monte_carlo(
    spec: BlockToySpec, support: int, shots: int, rng: random.Random
) -> tuple[float, float]:
    """(estimate, std_error) of the Pauli weight E (Tr P sigma)^2.

    ``support`` must cover exactly ``blocks_covered`` whole blocks.  The
    probe Pauli is the Z-string on the support; any choice with that support
    gives the same ensemble average because blocks are locally scrambled.
    """
    if not _covered_support_ok(spec, support):
        raise ValueError("support must cover exactly the declared whole blocks")
    n = spec.block_size
    hits = 0
    if spec.phase == "area":
        # only covered blocks matter: product-state blocks factorize
        for _ in range(shots):
            ok = True
            for _b in range(spec.blocks_covered):
                rows = random_stabilizer_rows(n, rng)
                # probe restricted to one block: Z-string = (x=0, z=all)
                probe = ((1 << n) - 1) << n
                if not gf2.in_rowspan(probe, rows):
                    ok = False
                    break
            hits += ok
    else:
        total = spec.total_qubits
        n_blocks = total // n
        for _ in range(shots):
            rows: list[int] = []
            logical_pairs: list[tuple[int, int]] = []
            for b in range(n_blocks):
                frame = random_symplectic_frame(n, rng)
                lifted = [_lift_block(v, b, n, total) for pair in frame for v in pair]
                # pairs (a_i, b_i) = images of (X_i, Z_i); qubit 1 is logical,
                # Z images of qubits 2..n are the measured syndromes
                logical_pairs.append((lifted[0], lifted[1]))
                rows.extend(lifted[2 * j + 1] for j in range(1, n))
            logical_rows = random_stabilizer_rows(n_blocks, rng)
            for h in logical_rows:
                phys = 0
                for l in range(n_blocks):
                    if (h >> l) & 1:  # x bit of logical l
                        phys ^= logical_pairs[l][0]
                    if (h >> (n_blocks + l)) & 1:  # z bit
                        phys ^= logical_pairs[l][1]
                rows.append(phys)
            probe = (support & ((1 << total) - 1)) << total  # Z-string on support
            hits += gf2.in_rowspan(probe, rows)
    mean = hits / shots
    err = math.sqrt(max(mean * (1.0 - mean), 0.0) / shots)
    return mean, err


def _lift_block(v: int, block: int, n: int, total: int) -> int:
    """Embed a block-local combined row (x | z << n) at block position."""
    mask = (1 << n) - 1
    x = v & mask
    z = (v >> n) & mask
    shift = block * n
    return (x << shift) | (z << (shift + total))


# -- transverse-field Ising oracle ---------------------------------------------


def tfim_ground_state(n_sites: int, h_over_j: float) -> np.ndarray:
    """Ground state of H = -J sum Z_i Z_{i+1} - h sum X_i (J = 1, open chain).

    A tilt of -1e-9 sum Z_i selects the all-0 branch of the ferromagnet at
    small h; the tilt is far below every asserted tolerance.
    """
    if n_sites < 2:
        raise ValueError("need at least 2 sites")
    if n_sites > TFIM_MAX_SITES:
        raise ValueError(f"dense eigensolver capped at {TFIM_MAX_SITES} sites")
    if h_over_j < 0:
        raise ValueError("transverse field must be non-negative")
    dim = 2**n_sites
    states = np.arange(dim)
    z = 1.0 - 2.0 * ((states[:, None] >> np.arange(n_sites)[None, :]) & 1)
    diag = -np.sum(z[:, :-1] * z[:, 1:], axis=1) - _TFIM_TILT * np.sum(z, axis=1)
    h_mat = np.zeros((dim, dim))
    h_mat[states, states] = diag
    for i in range(n_sites):
        flipped = states ^ (1 << i)
        h_mat[states, flipped] -= h_over_j
    vals, vecs = scipy.linalg.eigh(h_mat, subset_by_index=(0, 0))
    psi = vecs[:, 0]
    if psi[0] < 0:
        psi = -psi
    return psi


def statmech_pauli_weight(ground_state: np.ndarray, support: int) -> float:
    """Variational-ansatz weight <0|prod_i (2 theta_{i not in P} I + X_i)|Psi>
    over the same with all theta = 1."""
    n = int(round(math.log2(len(ground_state))))
    if len(ground_state) != 2**n:
        raise ValueError("state length must be a power of two")
    if support >> n:
        raise ValueError("support exceeds the chain")

    def contract(coeffs: list[tuple[float, float]]) -> float:
        t = np.asarray(ground_state, dtype=float).reshape((2,) * n)
        for c0, c1 in coeffs:
            t = np.tensordot(np.array([c0, c1]), t, axes=([0], [0]))
        return float(t)

    # axis j of the reshaped tensor is qubit n-1-j; coeff lists in axis order
    num = [(0.0, 1.0) if (support >> (n - 1 - j)) & 1 else (2.0, 1.0) for j in range(n)]
    den = [(2.0, 1.0)] * n
    denominator = contract(den)
    if abs(denominator) < 1e-300:
        raise ZeroDivisionError("normalization contraction vanished")
    return contract(num) / denominator


# -- Pauli weight <-> entanglement feature transform ------------------------------


def _check_subset_closed(keys: set[int]) -> None:
    for mask in keys:
        sub = mask
        while True:
            if sub not in keys:
                raise ValueError(f"input map is missing subset {sub:#x} of {mask:#x}")
            if sub == 0:
                break
            sub = (sub - 1) & mask


def pauli_weights_from_features(features: dict[int, float]) -> dict[int, float]:
    """w_A = (-1/3)^|A| sum_{B subset A} (-2)^|B| W(B)."""
    _check_subset_closed(set(features))
    out: dict[int, float] = {}
    for mask in features:
        total = 0.0
        sub = mask
        while True:
            total += (-2.0) ** sub.bit_count() * features[sub]
            if sub == 0:
                break
            sub = (sub - 1) & mask
        out[mask] = (-1.0 / 3.0) ** mask.bit_count() * total
    return out


def features_from_pauli_weights(weights: dict[int, float]) -> dict[int, float]:
    """W_A = 2^-|A| sum_{B subset A} 3^|B| w_B (uniform weights within regions)."""
    _check_subset_closed(set(weights))
    out: dict[int, float] = {}
    for mask in weights:
        total = 0.0
        sub = mask
        while True:
            total += 3.0 ** sub.bit_count() * weights[sub]
            if sub == 0:
                break
            sub = (sub - 1) & mask
        out[mask] = total / 2.0 ** mask.bit_count()
    return out
