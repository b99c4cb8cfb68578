"""Eigendecomposition, Gibbs states, and log-domain free energies."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError, NumericalFailureError
from .lattice import HamiltonianMatrix

SPECTRUM_TOL = 1e-10


class DegenerateBetaWarning(UserWarning):
    """beta = 0 makes Z_f = Z_0 = dim; the free-energy difference is reported as 0."""


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues and the orthogonal matrix of eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]


def _as_matrix(H: HamiltonianMatrix | np.ndarray) -> np.ndarray:
    return H.matrix if isinstance(H, HamiltonianMatrix) else np.asarray(H)


def diagonalize(H: HamiltonianMatrix | np.ndarray) -> Spectrum:
    """Full eigendecomposition of a Hermitian (here real-symmetric) matrix.

    Validates the result: reconstruction residual and orthonormality must both
    be below ``1e-10`` relative to max|H|.  Output is deterministic for
    identical input (LAPACK dsyevd via numpy).
    """
    M = _as_matrix(H)
    scale = max(float(np.max(np.abs(M))), 1.0)
    if np.max(np.abs(M - M.conj().T)) > 1e-12 * scale:
        raise DomainError("matrix is not Hermitian")
    if np.iscomplexobj(M):
        if np.max(np.abs(M.imag)) > 1e-12 * scale:
            raise DomainError("complex Hermitian input is not supported; model matrices are real symmetric")
        M = M.real
    evals, evecs = np.linalg.eigh(M)

    resid = np.max(np.abs(M - (evecs * evals) @ evecs.T))
    ortho = np.max(np.abs(evecs.T @ evecs - np.eye(M.shape[0])))
    if resid > SPECTRUM_TOL * scale or ortho > SPECTRUM_TOL:
        raise NumericalFailureError(
            f"eigendecomposition failed validation: residual={resid}, orthogonality={ortho}"
        )
    return Spectrum(eigenvalues=evals, eigenvectors=evecs)


@dataclass(frozen=True)
class LogPartition:
    """Stabilized partition function: log Z together with the energy shift
    (ground-state energy) subtracted before exponentiation."""

    log_z: float
    shift: float

    @property
    def z(self) -> float:
        """Z itself; may overflow to inf for large beta*|E|, prefer log_z."""
        return float(np.exp(self.log_z))


def partition_function(spectrum: Spectrum, beta: float) -> LogPartition:
    """log Z = -beta*E_min + log sum_n exp(-beta (E_n - E_min))."""
    if beta < 0:
        raise DomainError(f"beta must be >= 0, got {beta}")
    shift = float(spectrum.eigenvalues[0])
    log_z = float(-beta * shift + logsumexp(-beta * (spectrum.eigenvalues - shift)))
    return LogPartition(log_z=log_z, shift=shift)


@dataclass(frozen=True)
class ThermalState:
    """Gibbs state exp(-beta H)/Z in the site basis, with the populations
    p_n ordered like the source Spectrum."""

    beta: float
    rho: np.ndarray
    populations: np.ndarray


def thermal_populations(spectrum: Spectrum, beta: float) -> np.ndarray:
    if beta < 0:
        raise DomainError(f"beta must be >= 0, got {beta}")
    if not np.isfinite(beta):
        raise DomainError("beta must be finite")
    w = np.exp(-beta * (spectrum.eigenvalues - spectrum.eigenvalues[0]))
    return w / w.sum()


def thermal_state(spectrum: Spectrum, beta: float) -> ThermalState:
    """Gibbs state for the given spectrum; Boltzmann weights are stabilized by
    subtracting the ground-state energy before exponentiation."""
    p = thermal_populations(spectrum, beta)
    V = spectrum.eigenvectors
    rho = (V * p) @ V.T
    state = ThermalState(beta=beta, rho=rho, populations=p)
    if abs(float(np.trace(rho)) - 1.0) > 1e-12 or abs(float(p.sum()) - 1.0) > 1e-12:
        raise NumericalFailureError("thermal state lost normalization")
    return state


def free_energy_delta(spec0: Spectrum, specf: Spectrum, beta: float) -> float:
    """ΔF = -(1/beta) ln(Z_f / Z_0), evaluated in the log domain.

    For beta = 0 both partition functions equal the sector dimension; the
    difference is reported as 0 with a :class:`DegenerateBetaWarning`.
    """
    if spec0.dim != specf.dim:
        raise DomainError(
            f"spectra come from different sector dimensions: {spec0.dim} vs {specf.dim}"
        )
    if beta < 0:
        raise DomainError(f"beta must be >= 0, got {beta}")
    if beta == 0:
        warnings.warn(
            "beta = 0: Z_f = Z_0 = dim, reporting ΔF = 0", DegenerateBetaWarning
        )
        return 0.0
    lz0 = partition_function(spec0, beta).log_z
    lzf = partition_function(specf, beta).log_z
    return -(lzf - lz0) / beta
