"""Exact thermodynamic quantities: average work, two-point-measurement work
statistics, entropy variation, and the adiabatic / sudden-quench limits."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .drives import Propagator
from .errors import DomainError, NumericalFailureError
from .lattice import HamiltonianMatrix
from .spectra import Spectrum, ThermalState

IMAG_RESIDUE_TOL = 1e-10
SECOND_LAW_TOL = -1e-10


@dataclass(frozen=True)
class WorkEntropyRecord:
    """One grid cell: average work, extracted work, free-energy and entropy
    variation, with the coordinates that produced it.

    Units: works and dF in J, dS dimensionless (k_B = 1), T in J/k_B,
    tau in 1/J, beta in 1/J.
    """

    drive: str
    T: float
    U: float
    tau: float
    method: str
    W_avg: float
    W_ext: float
    dF: float
    dS: float
    beta: float
    steps: int
    clamped: bool = False
    error_floored: bool = False

    def __post_init__(self) -> None:
        if self.W_ext != -self.W_avg:
            raise DomainError("W_ext must equal -W_avg exactly")
        if self.method == "exact":
            if self.dS != self.beta * (self.W_avg - self.dF):
                raise DomainError("exact records must satisfy dS = beta (W_avg - dF)")
            if self.dS < SECOND_LAW_TOL:
                raise NumericalFailureError(
                    f"exact entropy variation {self.dS} violates the second law "
                    f"beyond tolerance at {self.key()}"
                )

    def key(self) -> tuple[str, float, float, float, str]:
        return (self.drive, self.T, self.U, self.tau, self.method)


def make_record(
    drive: str,
    T: float,
    U: float,
    tau: float,
    method: str,
    W_avg: float,
    dF: float,
    dS: float,
    beta: float,
    steps: int,
    clamped: bool = False,
) -> WorkEntropyRecord:
    return WorkEntropyRecord(
        drive=drive, T=T, U=U, tau=tau, method=method,
        W_avg=W_avg, W_ext=-W_avg, dF=dF, dS=dS, beta=beta,
        steps=steps, clamped=clamped,
    )


@dataclass(frozen=True)
class WorkDistribution:
    """Two-point-measurement joint probabilities p[n, m] of starting in initial
    eigenstate n and landing in final eigenstate m, with both energy ladders."""

    joint: np.ndarray
    E0: np.ndarray
    Ef: np.ndarray
    populations: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if np.min(self.joint) < -1e-14:
            raise NumericalFailureError("negative joint probability beyond tolerance")
        if abs(float(self.joint.sum()) - 1.0) > 1e-10:
            raise NumericalFailureError("joint probabilities do not sum to 1")
        if np.max(np.abs(self.joint.sum(axis=1) - self.populations)) > 1e-10:
            raise NumericalFailureError("row sums do not reproduce the initial populations")

    def average_work(self) -> float:
        """First moment sum_{n,m} p[n,m] (Ef_m - E0_n)."""
        return float(np.sum(self.joint * (self.Ef[None, :] - self.E0[:, None])))

    def conditional_row_sums(self) -> np.ndarray:
        """sum_m p(m|n) for each n; equals 1 for a unitary process."""
        with np.errstate(invalid="ignore", divide="ignore"):
            cond = self.joint / self.populations[:, None]
        return cond.sum(axis=1)


def _as_matrix(H: HamiltonianMatrix | np.ndarray) -> np.ndarray:
    return H.matrix if isinstance(H, HamiltonianMatrix) else np.asarray(H)


def average_work(
    rho0: ThermalState,
    prop: Propagator,
    H0: HamiltonianMatrix | np.ndarray,
    Hf: HamiltonianMatrix | np.ndarray,
) -> float:
    """<W> = Tr[U rho0 U† H_f] - Tr[rho0 H_0]  (Hamiltonians in units of J).

    The trace is computed in complex arithmetic; an imaginary residue above
    1e-10 is treated as a numerical failure, otherwise it is discarded.
    """
    M0, Mf = _as_matrix(H0), _as_matrix(Hf)
    U = prop.matrix
    if not (rho0.rho.shape == M0.shape == Mf.shape == U.shape):
        raise DomainError("state, propagator, and Hamiltonians must share one sector dimension")
    rho_f = U @ rho0.rho @ U.conj().T
    w_final = complex(np.einsum("ij,ji->", rho_f, Mf))
    if abs(w_final.imag) > IMAG_RESIDUE_TOL:
        raise NumericalFailureError(f"average work has imaginary residue {w_final.imag}")
    w_initial = float(np.einsum("ij,ji->", rho0.rho, M0))
    return float(w_final.real - w_initial)


def work_distribution(
    spec0: Spectrum,
    populations: np.ndarray,
    prop: Propagator,
    specf: Spectrum,
) -> WorkDistribution:
    """Joint TPM probabilities p[n, m] = p_n |<Psi_m^f| U |Psi_n^0>|^2."""
    if not (spec0.dim == specf.dim == prop.dim == len(populations)):
        raise DomainError("inconsistent dimensions for the work distribution")
    amp = specf.eigenvectors.T @ (prop.matrix @ spec0.eigenvectors)  # amp[m, n]
    joint = populations[:, None] * np.abs(amp.T) ** 2
    return WorkDistribution(
        joint=joint, E0=spec0.eigenvalues, Ef=specf.eigenvalues,
        populations=np.asarray(populations),
    )


def entropy_variation(W_avg: float, dF: float, beta: float) -> float:
    """ΔS = beta (<W> - ΔF), dimensionless with k_B = 1."""
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    return beta * (W_avg - dF)


def adiabatic_work(spec0: Spectrum, populations: np.ndarray, specf: Spectrum) -> float:
    """Adiabatic-limit extracted work -sum_n p_n (E_n^f - E_n^0).

    Levels are paired by ascending index; returns the extracted-work sign,
    so the adiabatic average work is minus this value.
    """
    if spec0.dim != specf.dim:
        raise DomainError("spectra come from different sector dimensions")
    return float(-np.dot(populations, specf.eigenvalues - spec0.eigenvalues))


def sudden_quench_work(
    rho0: ThermalState,
    H0: HamiltonianMatrix | np.ndarray,
    Hf: HamiltonianMatrix | np.ndarray,
) -> float:
    """tau -> 0 limit of the average work, Tr[rho0 (H_f - H_0)]."""
    dH = _as_matrix(Hf) - _as_matrix(H0)
    if rho0.rho.shape != dH.shape:
        raise DomainError("state and Hamiltonians must share one sector dimension")
    return float(np.einsum("ij,ji->", rho0.rho, dH))


@dataclass(frozen=True)
class JarzynskiCheck:
    """Deviation of sum_{n,m} p_{n,m} exp(-beta (E_m^f - E_n^0)) from
    exp(-beta dF), evaluated in the log domain."""

    log_sum: float
    log_target: float
    relative_deviation: float
    passed: bool


def jarzynski_check(
    dist: WorkDistribution, beta: float, dF: float, tol: float = 1e-8
) -> JarzynskiCheck:
    """Fluctuation-theorem identity check for exact (unapproximated) TPM
    statistics; holds for any unitary propagator, so the deviation measures
    numerical error only."""
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    with np.errstate(divide="ignore"):
        log_terms = np.log(dist.joint) - beta * (dist.Ef[None, :] - dist.E0[:, None])
    log_sum = float(logsumexp(log_terms[np.isfinite(log_terms)]))
    log_target = -beta * dF
    rel = float(abs(np.expm1(log_sum - log_target)))
    return JarzynskiCheck(
        log_sum=log_sum, log_target=log_target,
        relative_deviation=rel, passed=rel <= tol,
    )
