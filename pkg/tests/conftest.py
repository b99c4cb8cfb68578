import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import hubbard_thermo as ht


@pytest.fixture(scope="session")
def chain2():
    spec = ht.ChainSpec.half_filling(2, U=0.0)
    return spec, ht.build_sector_basis(spec)


@pytest.fixture(scope="session")
def chain4():
    spec = ht.ChainSpec.half_filling(4, U=3.0)
    return spec, ht.build_sector_basis(spec)


def assemble_pair(spec, basis, drive):
    """(H0, Hf) at the drive's endpoints; Hf uses mu0 + mutau directly."""
    v0 = np.asarray(drive.mu0)
    return (
        ht.assemble_hamiltonian(basis, spec, v0),
        ht.assemble_hamiltonian(basis, spec, v0 + np.asarray(drive.mutau)),
    )
