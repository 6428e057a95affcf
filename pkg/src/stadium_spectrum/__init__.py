"""Billiards in stadium-like tables: periodic orbits, marked length spectrum and spectral invariants."""

from .dynamics import PhasePoint, billiard_map, free_path_jet, map_differential, trajectory
from .errors import BilliardError, FitError, ValidationError
from .geometry import (
    CircularArc,
    GraphArc,
    TableSpec,
    boundary_at,
    check_defocusing,
    double_cover,
    graph_squash,
    squash_from_curvatures,
    squash_stadium,
    std_stadium,
    weak_stadium,
)
from .invariants import (
    analyze_period_two,
    extract_spectral_invariants,
    fit_homoclinic_constants,
    recover_curvatures,
    recover_from_estimates,
)
from .orbits import (
    SymbolicCode,
    code_of,
    marked_length_max,
    palindromic_orbit,
    period_two,
    rotation_orbit,
    solve_code,
)
from .rigidity import (
    BumpProfile,
    DeformationFamily,
    cancellation_sums,
    deformation_G,
    isospectral_derivative_check,
    lagrange_coeffs,
    unfolded_period_four,
    unfolded_period_two,
)

__version__ = "0.1.0"
