"""Independent oracles used by the test suite.

Everything here is deliberately built from scratch on top of one-body
(L x L) quantities and combinatorics, sharing no code with the package
internals: free-fermion many-body energies are sums of one-body eigenvalues,
transition amplitudes between Slater determinants are determinants of
one-body overlap blocks, and the Jordan-Wigner sign oracle applies
annihilation/creation phases sequentially.
"""

from __future__ import annotations

import itertools
from math import comb

import numpy as np


def enumerate_sector_states(L: int, n_up: int, n_down: int) -> list[tuple[int, int]]:
    """Exhaustive sector enumeration via itertools (basis-order agnostic)."""
    ups = [sum(1 << i for i in occ) for occ in itertools.combinations(range(L), n_up)]
    downs = [sum(1 << i for i in occ) for occ in itertools.combinations(range(L), n_down)]
    return [(u, d) for u in ups for d in downs]


def sector_dimension(L: int, n_up: int, n_down: int) -> int:
    return comb(L, n_up) * comb(L, n_down)


def jw_sign_two_step(mask: int, a: int, b: int) -> int | None:
    """Sign of c†_a c_b |mask> by applying the two operators in sequence,
    counting occupied modes below the acted orbital each time.  Returns None
    when the term annihilates the state."""
    if not (mask >> b) & 1:
        return None
    sign = -1 if bin(mask & ((1 << b) - 1)).count("1") % 2 else 1
    mask ^= 1 << b
    if (mask >> a) & 1:
        return None
    if bin(mask & ((1 << a) - 1)).count("1") % 2:
        sign = -sign
    return sign


def one_body_matrix(L: int, J: float, v: np.ndarray) -> np.ndarray:
    """Single-particle chain Hamiltonian: open-boundary hopping plus diag(v)."""
    h = np.diag(np.asarray(v, dtype=np.float64))
    for i in range(L - 1):
        h[i, i + 1] = h[i + 1, i] = -J
    return h


def one_body_propagator(
    L: int, J: float, mu0: np.ndarray, mutau: np.ndarray, tau: float, steps: int
) -> np.ndarray:
    """Midpoint-rule single-particle propagator over [0, tau]."""
    u = np.eye(L, dtype=np.complex128)
    dt = tau / steps
    for k in range(steps):
        s = (k + 0.5) / steps
        h = one_body_matrix(L, J, np.asarray(mu0) + s * np.asarray(mutau))
        evals, vecs = np.linalg.eigh(h)
        u = (vecs * np.exp(-1j * evals * dt)) @ vecs.T @ u
    return u


def u0_many_body_spectrum(L: int, n_up: int, n_down: int, J: float, v: np.ndarray) -> np.ndarray:
    """U=0 sector spectrum: all sums of n_up + n_down one-body eigenvalues."""
    eps = np.linalg.eigvalsh(one_body_matrix(L, J, v))
    energies = [
        eps[list(su)].sum() + eps[list(sd)].sum()
        for su in itertools.combinations(range(L), n_up)
        for sd in itertools.combinations(range(L), n_down)
    ]
    return np.sort(np.array(energies))


def slater_sector_propagator(
    L: int, n_up: int, n_down: int, states: list[tuple[int, int]], u: np.ndarray
) -> np.ndarray:
    """Many-body propagator matrix elements between occupation states from the
    one-body propagator u: <(u', d')|U|(u, d)> = det(u[occ(u'), occ(u)]) *
    det(u[occ(d'), occ(d)]) for species-blocked ordering."""

    def occ_list(mask: int) -> list[int]:
        return [i for i in range(L) if (mask >> i) & 1]

    dim = len(states)
    U = np.zeros((dim, dim), dtype=np.complex128)
    for col, (up, dn) in enumerate(states):
        cu, cd = occ_list(up), occ_list(dn)
        for row, (up2, dn2) in enumerate(states):
            ru, rd = occ_list(up2), occ_list(dn2)
            det_u = np.linalg.det(u[np.ix_(ru, cu)]) if cu else 1.0
            det_d = np.linalg.det(u[np.ix_(rd, cd)]) if cd else 1.0
            U[row, col] = det_u * det_d
    return U


def free_fermion_average_work(
    L: int,
    n_up: int,
    n_down: int,
    J: float,
    mu0: np.ndarray,
    mutau: np.ndarray,
    tau: float,
    beta: float,
    steps: int,
) -> float:
    """<W> for a U=0 chain via two-point-measurement statistics assembled
    entirely from one-body data: canonical-ensemble level populations from
    sums of one-body eigenvalues, transition probabilities from determinants
    of one-body propagator blocks in the instantaneous orbital bases."""
    mu0 = np.asarray(mu0, dtype=np.float64)
    mutau = np.asarray(mutau, dtype=np.float64)
    eps0, phi0 = np.linalg.eigh(one_body_matrix(L, J, mu0))
    epsf, phif = np.linalg.eigh(one_body_matrix(L, J, mu0 + mutau))
    u = one_body_propagator(L, J, mu0, mutau, tau, steps)

    # per-species transition probabilities between orbital subsets
    def species_tables(n: int):
        subsets = list(itertools.combinations(range(L), n))
        e0 = np.array([eps0[list(s)].sum() for s in subsets])
        ef = np.array([epsf[list(s)].sum() for s in subsets])
        m = phif.T @ u @ phi0  # m[final orbital, initial orbital]
        probs = np.empty((len(subsets), len(subsets)))
        for i, si in enumerate(subsets):
            for f, sf in enumerate(subsets):
                block = m[np.ix_(list(sf), list(si))]
                amp = np.linalg.det(block) if n else 1.0
                probs[i, f] = abs(amp) ** 2
        return e0, ef, probs

    e0_up, ef_up, p_up = species_tables(n_up)
    e0_dn, ef_dn, p_dn = species_tables(n_down)

    E0 = e0_up[:, None] + e0_dn[None, :]
    w = np.exp(-beta * (E0 - E0.min()))
    pops = w / w.sum()

    # E[final] per initial level, factorized over species
    ef_given_up = p_up @ ef_up / p_up.sum(axis=1)
    ef_given_dn = p_dn @ ef_dn / p_dn.sum(axis=1)
    E_final = ef_given_up[:, None] + ef_given_dn[None, :]
    return float(np.sum(pops * (E_final - E0)))
