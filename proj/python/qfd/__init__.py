"""Grid-based quantum hydrodynamics (Python bindings).

Fields are NumPy arrays shaped like their grid: (n,) in 1D, (nx, ny) in 2D.
"""

from ._core import (
    Axis,
    Grid,
    GridMismatch,
    InvalidArgument,
    IoError,
    NumericalError,
    ParseError,
    Potential,
    ValidationError,
    check,
    circle_loop,
    circulation,
    decompose,
    default_dt,
    gaussian,
    harmonic_eigenstate,
    norm,
    plane_wave,
    product_state,
    propagate,
    q_full,
    quantum_potential,
    read_field,
    reduced_density_matrix,
    run_config,
    single_vortex,
    stationary_orbitals,
    suite_names,
    trajectories,
    write_field,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
