"""Non-interacting (NI) and exact+NI approximation schemes.

A scheme is a pair of tags: ``is_tag`` selects the Hamiltonian used to prepare
the initial thermal state, ``evo_tag`` the Hamiltonian family used for the
evolution *and* for both energy measurements.  Measurement and evolution
Hamiltonians always share the evolution tag; mixing them produces spurious
oscillations in the work, so the API offers no such combination.

* (exact, exact) - the exact reference pipeline.
* (NI, NI)      - interaction term dropped everywhere; nothing depends on U.
* (exact, NI)   - exact thermal initial state, non-interacting evolution and
                  measurement Hamiltonians.  Its entropy estimate uses the
                  exact free energy and is clamped at zero.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .drives import DriveProtocol, Propagator, potential_at, propagate
from .errors import DomainError
from .lattice import ChainSpec, SectorBasis, assemble_hamiltonian, build_sector_basis
from .metrics import WorkEntropyRecord, average_work, entropy_variation, make_record
from .spectra import Spectrum, diagonalize, free_energy_delta, thermal_state

_SUPPORTED = (("exact", "exact"), ("NI", "NI"), ("exact", "NI"))


@dataclass(frozen=True)
class ApproximationScheme:
    is_tag: str
    evo_tag: str

    def __post_init__(self) -> None:
        if (self.is_tag, self.evo_tag) not in _SUPPORTED:
            raise DomainError(
                f"unsupported scheme ({self.is_tag}, {self.evo_tag}); "
                f"supported: {_SUPPORTED}"
            )

    @property
    def label(self) -> str:
        if (self.is_tag, self.evo_tag) == ("exact", "exact"):
            return "exact"
        if (self.is_tag, self.evo_tag) == ("NI", "NI"):
            return "ni"
        return "exact-ni"

    @classmethod
    def from_label(cls, label: str) -> "ApproximationScheme":
        table = {"exact": ("exact", "exact"), "ni": ("NI", "NI"), "exact-ni": ("exact", "NI")}
        if label not in table:
            raise DomainError(f"unknown method label {label!r}, expected one of {sorted(table)}")
        return cls(*table[label])


SCHEME_EXACT = ApproximationScheme("exact", "exact")
SCHEME_NI = ApproximationScheme("NI", "NI")
SCHEME_EXACT_NI = ApproximationScheme("exact", "NI")


def _tagged_spec(spec: ChainSpec, tag: str) -> ChainSpec:
    """The chain used under a tag: NI drops the interaction term (U = 0)."""
    return replace(spec, U=0.0) if tag == "NI" else spec


class EntropyEstimate(NamedTuple):
    value: float
    clamped: bool


def approx_entropy(
    scheme: ApproximationScheme,
    W_approx: float,
    beta: float,
    dF_exact: float,
    dF_ni: float,
) -> EntropyEstimate:
    """Scheme-consistent entropy estimate.

    NI uses the non-interacting free energy (constant in U); exact+NI uses the
    exact free energy and clamps the result at zero, since the approximated
    work can push beta (W - dF) negative.  The clamp is applied to the final
    value only, never to intermediate terms.
    """
    if scheme.label == "ni":
        return EntropyEstimate(entropy_variation(W_approx, dF_ni, beta), False)
    raw = entropy_variation(W_approx, dF_exact, beta)
    if scheme.label == "exact-ni" and raw < 0.0:
        return EntropyEstimate(0.0, True)
    return EntropyEstimate(raw, False)


@dataclass(frozen=True)
class CellOperators:
    """Everything a work evaluation needs at one (chain, drive) point, built
    consistently for one scheme."""

    scheme: ApproximationScheme
    spec0_evo: Spectrum
    specf_evo: Spectrum
    H0_evo: np.ndarray
    Hf_evo: np.ndarray
    spec0_is: Spectrum
    dF_exact: float | None
    dF_evo: float


def build_cell_operators(
    scheme: ApproximationScheme,
    spec: ChainSpec,
    basis: SectorBasis,
    drive: DriveProtocol,
    beta: float,
    dF_exact: float | None = None,
) -> CellOperators:
    """Assemble and diagonalize the t=0 / t=tau Hamiltonians for a scheme.

    ``dF_exact`` may be passed in to avoid re-diagonalizing the exact
    Hamiltonians when they are already known (sweep reuse); it is required
    only by the exact+NI entropy rule and computed on demand otherwise.
    """
    v0 = potential_at(drive, 0.0)
    vf = potential_at(drive, drive.tau)

    evo_spec = _tagged_spec(spec, scheme.evo_tag)
    H0_evo = assemble_hamiltonian(basis, evo_spec, v0)
    Hf_evo = assemble_hamiltonian(basis, evo_spec, vf)
    spec0_evo = diagonalize(H0_evo)
    specf_evo = diagonalize(Hf_evo)
    dF_evo = free_energy_delta(spec0_evo, specf_evo, beta)

    if scheme.is_tag == scheme.evo_tag:
        spec0_is = spec0_evo
    else:
        spec0_is = diagonalize(assemble_hamiltonian(basis, _tagged_spec(spec, scheme.is_tag), v0))

    if scheme.label == "exact":
        dF_exact = dF_evo
    elif scheme.label == "exact-ni" and dF_exact is None:
        specf_is = diagonalize(assemble_hamiltonian(basis, spec, vf))
        dF_exact = free_energy_delta(spec0_is, specf_is, beta)

    return CellOperators(
        scheme=scheme, spec0_evo=spec0_evo, specf_evo=specf_evo,
        H0_evo=H0_evo.matrix, Hf_evo=Hf_evo.matrix,
        spec0_is=spec0_is, dF_exact=dF_exact, dF_evo=dF_evo,
    )


def record_from_propagator(
    ops: CellOperators,
    prop: Propagator,
    spec: ChainSpec,
    drive: DriveProtocol,
    T: float,
    beta: float,
    t0_form: str = "trace",
) -> WorkEntropyRecord:
    """Work/entropy record for one cell given a prepared propagator of the
    scheme's evolution Hamiltonian.

    ``t0_form`` selects the t=0 energy term for the exact+NI scheme:
    ``"trace"`` (default) uses Tr[rho0 H_0^evo], ``"paired"`` the index-paired
    sum_n p_n E_n^{evo,0}.  The two coincide for the pure schemes.
    """
    if t0_form not in ("trace", "paired"):
        raise DomainError(f"t0_form must be 'trace' or 'paired', got {t0_form!r}")
    rho0 = thermal_state(ops.spec0_is, beta)
    W = average_work(rho0, prop, ops.H0_evo, ops.Hf_evo)
    if t0_form == "paired" and ops.scheme.label == "exact-ni":
        trace_t0 = float(np.einsum("ij,ji->", rho0.rho, ops.H0_evo))
        paired_t0 = float(np.dot(rho0.populations, ops.spec0_evo.eigenvalues))
        W = W + trace_t0 - paired_t0
    dS, clamped = approx_entropy(ops.scheme, W, beta, ops.dF_exact, ops.dF_evo)
    dF = ops.dF_evo if ops.scheme.label == "ni" else ops.dF_exact
    return make_record(
        drive=drive.kind, T=T, U=spec.U, tau=drive.tau, method=ops.scheme.label,
        W_avg=W, dF=dF, dS=dS, beta=beta, steps=prop.steps, clamped=clamped,
    )


def approx_work(
    scheme: ApproximationScheme,
    spec: ChainSpec,
    drive: DriveProtocol,
    beta: float,
    steps: int,
    T: float | None = None,
    t0_form: str = "trace",
) -> WorkEntropyRecord:
    """Average work in the trace form for one scheme at one grid point:
    <W> = Tr[U rho0^is U† H_f^evo] - Tr[rho0^is H_0^evo]."""
    basis = build_sector_basis(spec)
    ops = build_cell_operators(scheme, spec, basis, drive, beta)
    evo_spec = _tagged_spec(spec, scheme.evo_tag)
    prop = propagate(evo_spec, basis, drive, steps)
    return record_from_propagator(
        ops, prop, spec, drive, 1.0 / beta if T is None else T, beta, t0_form=t0_form
    )


def exact_ni_adiabatic_work(
    spec0_exact: Spectrum,
    populations_exact: np.ndarray,
    spec0_ni: Spectrum,
    specf_ni: Spectrum,
    t0_form: str = "trace",
) -> float:
    """Adiabatic limit of the exact+NI average work.

    With a[m, n] = <Psi_m^{NI}(0) | Psi_n^0> the t=tau term is
    sum_{n,m} E_m^{f,NI} p_n |a[m,n]|^2.  The t=0 term follows the trace form
    sum_{m,n} E_m^{0,NI} p_n |a[m,n]|^2 by default; ``t0_form="paired"``
    selects the index-paired alternative sum_n p_n E_n^{0,NI} instead.
    Returned with the average-work sign.
    """
    if t0_form not in ("trace", "paired"):
        raise DomainError(f"t0_form must be 'trace' or 'paired', got {t0_form!r}")
    a = spec0_ni.eigenvectors.T @ spec0_exact.eigenvectors  # a[m, n]
    weights = np.abs(a) ** 2 @ np.asarray(populations_exact)  # w[m] = sum_n |a_mn|^2 p_n
    t_tau = float(np.dot(specf_ni.eigenvalues, weights))
    if t0_form == "trace":
        t_zero = float(np.dot(spec0_ni.eigenvalues, weights))
    else:
        t_zero = float(np.dot(populations_exact, spec0_ni.eigenvalues))
    return t_tau - t_zero


@dataclass(frozen=True)
class RelativeErrorMap:
    """Per-cell |approx - exact| / max(|exact|, epsilon) with a flag marking
    cells where the denominator was floored."""

    values: np.ndarray
    floored: np.ndarray
    epsilon: float


def relative_error_map(
    approx_grid: np.ndarray, exact_grid: np.ndarray, epsilon: float = 1e-9
) -> RelativeErrorMap:
    approx_grid = np.asarray(approx_grid, dtype=np.float64)
    exact_grid = np.asarray(exact_grid, dtype=np.float64)
    if approx_grid.shape != exact_grid.shape:
        raise DomainError(
            f"grid shapes differ: {approx_grid.shape} vs {exact_grid.shape}"
        )
    floored = np.abs(exact_grid) < epsilon
    denom = np.maximum(np.abs(exact_grid), epsilon)
    return RelativeErrorMap(
        values=np.abs(approx_grid - exact_grid) / denom,
        floored=floored,
        epsilon=epsilon,
    )
