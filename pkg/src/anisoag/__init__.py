"""anisoag: boundary geometry, entropies, jump costs and grid experiments
for Aviles-Giga type transition energies built on a strictly convex planar
norm."""

from .norms import (NormSpec, NormValidationError, NormDiagnostics,
                    validate_norm, norm_from_config, norm_from_string)
from .boundary import BoundaryParam, BoundaryTracingError, trace_boundary
from .entropy import (EntropyFn, ExtendedEntropy, NotAdmissibleError,
                      project_to_admissible, make_entropy, heaviside_entropy,
                      phi_psi, lambda_of_psi, eta_cutoff, eta_cutoff_prime,
                      entropy_to_csv)
from .costs import (JumpPair, CostReport, NumericalError, make_jump,
                    make_jump_theta, c1d, cent_explicit, cent_lp, cent,
                    pi_cost, pi_cost_report, pi_many, pi_tensor, delta_phi,
                    omega_modulus, omega_inverse_fn, check_eqbes21,
                    cost_report, verify_bounds, scan_pairs)
from .profiles import Profile, solve_profile, profile_energy
from .fields import (GridField, ProductionMeasure, build_constant, build_jump,
                     build_vortex, build_potential, build_pasted_jump, energy,
                     energy_gradient, minimize_field, entropy_production,
                     besov_functional, besov_sup, kinetic_residual,
                     vortex_decay_study, extension_identity_residual,
                     save_field, load_field)

__version__ = "0.1.0"
