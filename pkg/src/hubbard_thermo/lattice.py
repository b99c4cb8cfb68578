"""Fermionic sector bases and the inhomogeneous Hubbard-chain Hamiltonian.

Conventions
-----------
* Orbitals are ordered up-spin first: ``c†_{1↑} ... c†_{L↑} c†_{1↓} ... c†_{L↓}``.
  A basis state is a pair of bitmasks ``(up, down)``; bit ``i`` of a mask is the
  occupation of site ``i`` (0-based internally, sites are 1-based in formulas).
* Energies are measured in units of the hopping ``J``; set ``J = 1`` unless a
  different scale is wanted.
* Open boundary conditions: no hopping between site ``L`` and site ``1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import DomainError

HERMITICITY_TOL = 1e-14


@dataclass(frozen=True)
class ChainSpec:
    """Chain geometry and couplings: L sites, (n_up, n_down) fermions, hopping J,
    on-site interaction U (both in units of J)."""

    L: int
    n_up: int
    n_down: int
    J: float = 1.0
    U: float = 0.0

    def __post_init__(self) -> None:
        if self.L < 2:
            raise DomainError(f"need at least 2 sites, got L={self.L}")
        if not (0 <= self.n_up <= self.L and 0 <= self.n_down <= self.L):
            raise DomainError(
                f"particle counts (n_up={self.n_up}, n_down={self.n_down}) "
                f"must lie in [0, L={self.L}]"
            )
        if not self.J > 0:
            raise DomainError(f"hopping must be positive, got J={self.J}")

    @classmethod
    def half_filling(cls, L: int, J: float = 1.0, U: float = 0.0) -> "ChainSpec":
        if L % 2:
            raise DomainError(f"half-filling preset needs even L, got {L}")
        return cls(L=L, n_up=L // 2, n_down=L // 2, J=J, U=U)


@dataclass(frozen=True)
class SectorBasis:
    """All (up, down) bitmask pairs of a fixed (n_up, n_down) sector, in
    lexicographic order by (up-mask, down-mask)."""

    L: int
    states: tuple[tuple[int, int], ...]
    index: dict[tuple[int, int], int] = field(repr=False, compare=False)

    @property
    def dim(self) -> int:
        return len(self.states)


def _masks_with_popcount(L: int, n: int) -> list[int]:
    return [m for m in range(1 << L) if bin(m).count("1") == n]


def build_sector_basis(spec: ChainSpec) -> SectorBasis:
    """Enumerate the (n_up, n_down) sector of an L-site chain.

    The state order is deterministic: ascending up-mask, then ascending
    down-mask, so ``dim = C(L, n_up) * C(L, n_down)``.
    """
    ups = _masks_with_popcount(spec.L, spec.n_up)
    downs = _masks_with_popcount(spec.L, spec.n_down)
    states = tuple((u, d) for u in ups for d in downs)
    assert len(states) == comb(spec.L, spec.n_up) * comb(spec.L, spec.n_down)
    index = {s: k for k, s in enumerate(states)}
    return SectorBasis(L=spec.L, states=states, index=index)


def double_occupancy_diagonal(basis: SectorBasis) -> np.ndarray:
    """Per-state count of sites occupied by both an up and a down fermion."""
    return np.array(
        [bin(u & d).count("1") for u, d in basis.states], dtype=np.int64
    )


def site_occupations(basis: SectorBasis) -> np.ndarray:
    """(dim, L) matrix of total site occupations n_i = n_{i↑} + n_{i↓}."""
    occ = np.zeros((basis.dim, basis.L), dtype=np.float64)
    for k, (u, d) in enumerate(basis.states):
        for i in range(basis.L):
            occ[k, i] = ((u >> i) & 1) + ((d >> i) & 1)
    return occ


def hop_sign(mask: int, a: int, b: int) -> int:
    """Fermionic sign of ``c†_a c_b`` acting on the combined-orbital ``mask``.

    The sign is (-1) to the number of occupied orbitals strictly between a
    and b.  Written generally so that longer-range hops would also be correct,
    even though nearest-neighbour hopping only ever produces +1 here.
    """
    lo, hi = (a, b) if a < b else (b, a)
    between = mask & (((1 << hi) - 1) ^ ((1 << (lo + 1)) - 1))
    return -1 if bin(between).count("1") % 2 else 1


@dataclass(frozen=True)
class HamiltonianMatrix:
    """Dense real-symmetric sector Hamiltonian with its assembly metadata.

    Real entries are sufficient: hopping amplitudes and on-site potentials are
    real, so the Hermitian matrix of the model is real symmetric.
    """

    matrix: np.ndarray
    spec: ChainSpec
    potential: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def assemble_hamiltonian(
    basis: SectorBasis, spec: ChainSpec, v: np.ndarray | list[float]
) -> HamiltonianMatrix:
    """Assemble H = -J (hopping) + U (double occupancy) + sum_i v_i n_i.

    ``v`` is the per-site potential (units of J), length L.  Hopping terms are
    nearest-neighbour with open boundaries and carry the general fermionic
    sign from :func:`hop_sign`.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (spec.L,):
        raise DomainError(f"potential must have length L={spec.L}, got shape {v.shape}")
    if basis.L != spec.L:
        raise DomainError(f"basis is for L={basis.L}, spec has L={spec.L}")

    dim = basis.dim
    H = np.zeros((dim, dim), dtype=np.float64)

    docc = double_occupancy_diagonal(basis)
    occ = site_occupations(basis)
    H[np.diag_indices(dim)] = spec.U * docc + occ @ v

    L = spec.L
    for k, (u, d) in enumerate(basis.states):
        for i in range(L - 1):
            # up-spin hop between sites i and i+1 (combined orbitals i, i+1)
            bits = (u >> i) & 0b11
            if bits in (0b01, 0b10):
                target = basis.index[(u ^ (0b11 << i), d)]
                m = u | (d << L)
                src, dst = (i, i + 1) if bits == 0b01 else (i + 1, i)
                H[target, k] += -spec.J * hop_sign(m, dst, src)
            # down-spin hop (combined orbitals L+i, L+i+1)
            bits = (d >> i) & 0b11
            if bits in (0b01, 0b10):
                target = basis.index[(u, d ^ (0b11 << i))]
                m = u | (d << L)
                src, dst = (L + i, L + i + 1) if bits == 0b01 else (L + i + 1, L + i)
                H[target, k] += -spec.J * hop_sign(m, dst, src)

    asym = np.max(np.abs(H - H.T)) if dim else 0.0
    if asym > HERMITICITY_TOL:
        raise DomainError(f"assembled Hamiltonian is not symmetric: max asymmetry {asym}")
    return HamiltonianMatrix(matrix=H, spec=spec, potential=v)
