"""Out-of-equilibrium thermodynamics of driven 1D Hubbard chains.

Exact work extraction and entropy production over (tau, U, T, drive) grids,
together with the non-interacting (NI) and exact+NI approximation schemes.
"""

__version__ = "0.1.0"

from .approximations import (
    ApproximationScheme,
    CellOperators,
    EntropyEstimate,
    RelativeErrorMap,
    SCHEME_EXACT,
    SCHEME_EXACT_NI,
    SCHEME_NI,
    approx_entropy,
    approx_work,
    build_cell_operators,
    exact_ni_adiabatic_work,
    record_from_propagator,
    relative_error_map,
)
from .drives import (
    DriveProtocol,
    Propagator,
    build_drive,
    converged_propagate,
    potential_at,
    propagate,
)
from .errors import ConvergenceError, DomainError, NumericalFailureError, SweepFormatError
from .lattice import (
    ChainSpec,
    HamiltonianMatrix,
    SectorBasis,
    assemble_hamiltonian,
    build_sector_basis,
    double_occupancy_diagonal,
    hop_sign,
    site_occupations,
)
from .metrics import (
    JarzynskiCheck,
    WorkDistribution,
    WorkEntropyRecord,
    adiabatic_work,
    average_work,
    entropy_variation,
    jarzynski_check,
    make_record,
    sudden_quench_work,
    work_distribution,
)
from .spectra import (
    DegenerateBetaWarning,
    LogPartition,
    Spectrum,
    ThermalState,
    diagonalize,
    free_energy_delta,
    partition_function,
    thermal_populations,
    thermal_state,
)
from .sweep import (
    SummaryEntry,
    SweepConfig,
    SweepResult,
    load,
    persist,
    run_sweep,
    summarize,
)

__all__ = [name for name in dir() if not name.startswith("_")]
