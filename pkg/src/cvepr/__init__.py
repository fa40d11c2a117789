"""Regularised bipartite/tripartite EPR-type Gaussian states, their Wigner
functions as displaced-parity expectations, and CHSH violations."""

from .gaussian_core import (
    EigenRelation,
    GaussianKetSpec,
    Regime,
    Regulator,
    SqueezingParam,
    eigen_relations,
    epr_ket,
    jacobi_mode_map,
    nopa2_ket,
    nopa3_ket,
    nopa3_from_beamsplitters,
    squeezing_correspondence,
)
from .wigner_engine import (
    BlockMatrix,
    WignerValue,
    berezin_integral,
    eta_shift,
    wigner_displaced_parity,
    wigner_epr2,
    wigner_epr3_closed,
    wigner_epr3_polar,
    wigner_nopa3_closed,
)
from .chsh_lab import (
    b3_asymptotic_max,
    b3_imaginary,
    b3_real,
    bell_b2,
    bell_b3,
    maximize_bell,
    parity_provider,
    scan_surface,
)

__version__ = "0.1.0"
