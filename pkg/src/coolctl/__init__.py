"""Time-optimal cooling of Markovian quantum systems under fast unitary control."""
from .coolability import common_eigenvectors, is_common_left_eigenvector, is_coolable
from .majorization import (
    Polytope, contains, convex_hull, inf_majorizes, majorizes, optimal_vertices, schur_cost,
)
from .quantum import (
    ControlSchedule, LindbladSystem, dissipator, integrate_full, lindblad_rhs, spectrum_desc,
)
from .qubit import (
    QubitNormalForm, general_schedule, mu, normal_form, opt_path, q_boundary, q_point,
    u_y_control,
)
from .reduced import (
    UnitarySchedule, apply_generator, compensating_hamiltonian, derv_sample, haar_unitary,
    induced_generator, integrate_reduced, j_matrix, lift_control,
)
from .systems import (
    CoolingSchedule, ConjectureReport, derv_vertex_fstar, j_polytope_bound,
    lambda_counterexample, make_lambda_system, make_spin_spin, make_v_system,
    permutation_vertices, spin_spin_facets, spin_spin_j_check, spin_spin_optimal_generators,
    spin_spin_schedule, v_final_state, v_schedule, verify_conjecture,
)

__version__ = "0.1.0"
