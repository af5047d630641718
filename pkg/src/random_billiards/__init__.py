"""Random billiards: Markov chains of molecule-wall interactions.

The package simulates three mechanical wall models (a bound mass on a
segment, a spring-suspended mass, and a periodic wall contour), exposes
their one-step transition kernels and transition operators on a grid,
and computes spectra, spectral gaps, stationary laws, and the
second-order operator governing the small-mass-ratio limit.
"""

from .cells import (
    BilliardCell,
    ScatterState,
    dumbbell_cell,
    estimate_cell_operator,
    random_scatter,
    random_scatter_axis,
    read_cell_csv,
    scatter,
    trace,
    write_cell_csv,
)
from .errors import NumericError, SimulationError
from .gibbs import (
    GibbsSystemSpec,
    SpringMassParams,
    h_energy,
    point_molecule_spec,
    run_spring_chain,
    sample_energy,
    sample_spring_wall,
    sample_stationary_molecule,
    sample_wall_position,
    sample_wall_state,
    spring_mass_step,
    spring_wall_spec,
)
from .laplacian import (
    LaguerreEigenpair,
    MomentEstimate,
    apply_laplacian,
    laguerre_eigenpair,
    predicted_eigenvalue,
    scattering_moments,
)
from .spectra import (
    DiscretizedOperator,
    GridSpec,
    SpectrumResult,
    discretize_mc,
    discretize_nystrom,
    evolve_density,
    gap_scan,
    hs_norm,
    spectrum,
)
from .stats import (
    EmpiricalDistribution,
    RandomStream,
    ks_distance,
    make_stream,
    sample_cosine_direction,
    sample_gaussian,
    tv_distance,
)
from .two_masses import (
    TwoMassParams,
    WallLaw,
    branch_menu,
    classify_region,
    derive_params,
    event_driven_step,
    kernel_K,
    kernel_kappa,
    random_map_step,
    run_chain,
    sample_one_step,
    stationary_density,
)

__version__ = "0.1.0"

__all__ = [
    "BilliardCell",
    "DiscretizedOperator",
    "EmpiricalDistribution",
    "GibbsSystemSpec",
    "GridSpec",
    "LaguerreEigenpair",
    "MomentEstimate",
    "NumericError",
    "RandomStream",
    "ScatterState",
    "SimulationError",
    "SpectrumResult",
    "SpringMassParams",
    "TwoMassParams",
    "WallLaw",
    "apply_laplacian",
    "branch_menu",
    "classify_region",
    "derive_params",
    "discretize_mc",
    "discretize_nystrom",
    "dumbbell_cell",
    "estimate_cell_operator",
    "event_driven_step",
    "evolve_density",
    "gap_scan",
    "h_energy",
    "hs_norm",
    "kernel_K",
    "kernel_kappa",
    "ks_distance",
    "laguerre_eigenpair",
    "make_stream",
    "point_molecule_spec",
    "predicted_eigenvalue",
    "random_map_step",
    "random_scatter",
    "random_scatter_axis",
    "read_cell_csv",
    "run_chain",
    "run_spring_chain",
    "sample_cosine_direction",
    "sample_energy",
    "sample_gaussian",
    "sample_one_step",
    "sample_spring_wall",
    "sample_stationary_molecule",
    "sample_wall_position",
    "sample_wall_state",
    "scatter",
    "scattering_moments",
    "spectrum",
    "spring_mass_step",
    "spring_wall_spec",
    "stationary_density",
    "trace",
    "tv_distance",
    "write_cell_csv",
]
