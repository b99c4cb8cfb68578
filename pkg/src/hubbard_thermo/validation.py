"""Built-in invariant suite behind the ``validate`` CLI subcommand.

Runs physics identities that hold for the exact pipeline on a small built-in
grid: propagator unitarity, TPM normalization, the trace-form vs
work-distribution first-moment identity, the Jarzynski equality, the second
law, and U-independence of the NI scheme.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .approximations import SCHEME_NI, approx_work
from .drives import Propagator, build_drive, converged_propagate, propagate
from .lattice import ChainSpec, assemble_hamiltonian, build_sector_basis
from .metrics import average_work, jarzynski_check, work_distribution
from .spectra import diagonalize, free_energy_delta, thermal_populations, thermal_state

UNITARITY_TOL = 1e-9
NORMALIZATION_TOL = 1e-10
MOMENT_TOL = 1e-9
JARZYNSKI_TOL = 1e-8
SECOND_LAW_TOL = -1e-10


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _damp(prop: Propagator) -> Propagator:
    # fault-injection hook: halve one step's factor, breaking unitarity
    return replace(prop, matrix=prop.matrix * 0.5)


def run_validation(quick: bool = False, inject_fault: str | None = None) -> list[CheckResult]:
    if quick:
        cells = [
            (4, "comb", 0.2, 0.0, 0.5), (4, "comb", 20.0, 5.0, 2.0),
            (4, "mi", 0.2, 5.0, 2.0), (4, "aef", 20.0, 0.0, 0.5),
            (4, "aef", 0.2, 5.0, 2.0),
        ]
        jarzynski_cells = [(2, "aef", 2.5, 2.0, 1.0), (2, "comb", 0.2, 1.0, 1.0)]
        steps = 300
    else:
        cells = [
            (4, d, T, U, tau)
            for d in ("comb", "mi", "aef")
            for T in (0.2, 2.5, 20.0)
            for U in (0.0, 5.0)
            for tau in (0.5, 2.0)
        ] + [(6, "comb", 2.5, 5.0, 1.0), (6, "aef", 0.2, 3.0, 0.5)]
        jarzynski_cells = [
            (2, "aef", 2.5, 2.0, 1.0), (2, "comb", 0.2, 1.0, 1.0),
            (4, "mi", 20.0, 7.0, 2.0), (4, "aef", 2.5, 2.0, 1.0),
        ]
        steps = 400

    damping = inject_fault == "damp-step"

    unit_worst = 0.0
    norm_worst = 0.0
    moment_worst = 0.0
    law_worst = np.inf
    results: list[CheckResult] = []

    try:
        for L, kind, T, U, tau in cells:
            spec = ChainSpec.half_filling(L, U=U)
            basis = build_sector_basis(spec)
            drive = build_drive(kind, L, tau=tau)
            H0 = assemble_hamiltonian(basis, spec, np.asarray(drive.mu0))
            Hf = assemble_hamiltonian(
                basis, spec, np.asarray(drive.mu0) + np.asarray(drive.mutau)
            )
            s0, sf = diagonalize(H0), diagonalize(Hf)
            prop = propagate(spec, basis, drive, steps)
            if damping:
                prop = _damp(prop)

            defect = np.max(np.abs(prop.matrix.conj().T @ prop.matrix - np.eye(prop.dim)))
            unit_worst = max(unit_worst, float(defect))

            beta = 1.0 / T
            pops = thermal_populations(s0, beta)
            amp = sf.eigenvectors.T @ (prop.matrix @ s0.eigenvectors)
            joint = pops[:, None] * np.abs(amp.T) ** 2
            norm_worst = max(
                norm_worst,
                abs(float(joint.sum()) - 1.0),
                float(np.max(np.abs(joint.sum(axis=1) - pops))),
            )

            rho0 = thermal_state(s0, beta)
            W_trace = average_work(rho0, prop, H0, Hf)
            W_moment = float(np.sum(joint * (sf.eigenvalues[None, :] - s0.eigenvalues[:, None])))
            moment_worst = max(moment_worst, abs(W_trace - W_moment))

            dF = free_energy_delta(s0, sf, beta)
            law_worst = min(law_worst, beta * (W_trace - dF))
    except Exception as exc:  # a hard failure fails every grid check
        results.append(CheckResult("grid-evaluation", False, f"{type(exc).__name__}: {exc}"))
        return results

    results.append(CheckResult(
        "unitarity", unit_worst <= UNITARITY_TOL, f"max defect {unit_worst:.3e}"))
    results.append(CheckResult(
        "tpm-normalization", norm_worst <= NORMALIZATION_TOL, f"max defect {norm_worst:.3e}"))
    results.append(CheckResult(
        "trace-vs-distribution-moment", moment_worst <= MOMENT_TOL,
        f"max |W_trace - W_moment| {moment_worst:.3e} J"))
    results.append(CheckResult(
        "second-law", law_worst >= SECOND_LAW_TOL, f"min dS {law_worst:.3e}"))

    jz_worst = 0.0
    jz_detail = ""
    jz_ok = True
    for L, kind, T, U, tau in jarzynski_cells:
        try:
            spec = ChainSpec.half_filling(L, U=U)
            basis = build_sector_basis(spec)
            drive = build_drive(kind, L, tau=tau)
            beta = 1.0 / T
            prop = converged_propagate(spec, basis, drive, beta, tol=1e-9, max_doublings=10)
            if damping:
                prop = _damp(prop)
            H0 = assemble_hamiltonian(basis, spec, np.asarray(drive.mu0))
            Hf = assemble_hamiltonian(
                basis, spec, np.asarray(drive.mu0) + np.asarray(drive.mutau)
            )
            s0, sf = diagonalize(H0), diagonalize(Hf)
            pops = thermal_populations(s0, beta)
            dist = work_distribution(s0, pops, prop, sf)
            dF = free_energy_delta(s0, sf, beta)
            check = jarzynski_check(dist, beta, dF, tol=JARZYNSKI_TOL)
        except Exception as exc:
            jz_ok = False
            jz_detail = f"{type(exc).__name__}: {exc}"
            break
        jz_worst = max(jz_worst, check.relative_deviation)
    if jz_ok:
        jz_ok = jz_worst <= JARZYNSKI_TOL
        jz_detail = f"max relative deviation {jz_worst:.3e}"
    results.append(CheckResult("jarzynski", jz_ok, jz_detail))

    ni_spread = 0.0
    for U in (1.0, 7.0):
        rec = approx_work(
            SCHEME_NI, ChainSpec.half_filling(4, U=U),
            build_drive("comb", 4, tau=1.0), beta=0.4, steps=200,
        )
        if U == 1.0:
            ref = rec.W_avg
        else:
            ni_spread = abs(rec.W_avg - ref)
    results.append(CheckResult(
        "ni-u-independence", ni_spread == 0.0, f"spread {ni_spread:.3e} J"))
    return results
