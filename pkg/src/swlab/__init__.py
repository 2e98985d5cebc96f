"""Numerical laboratory for the dimensionally reduced equations on a flat
torus with target the quaternionic vector space H^n."""

from .quaternions import (Quaternion, ImQuaternion, I1, I2, I3,
                          apply_complex_structure, pair_dot, left_phase,
                          moment_real, moment_complex, moment_imquat,
                          dmoment_real, dmoment_complex, fundamental_field,
                          hyperkahler_potential, check_moment_axioms)
from .lattice import (TorusLattice, BundleSpec, ConnectionField,
                      GaugeTransform, covariant_derivative, curvature,
                      total_flux, chern_number, dbar_scalar, star_1form,
                      ip_0form, ip_1form, ip_2form, ip_spinor)
from .equations import (Configuration, ResidualTriple, residual_2d, energy,
                        residual_norm, gauge_transform_configuration,
                        lift_4d, residual_4d, reduction_consistency)
from .linearization import (TangentTriple, apply_Dq, apply_Dq_adjoint,
                            domain_inner, codomain_inner, d1, d1_adjoint,
                            compute_index, index_scalar_dbar,
                            index_block_dirac, index_block_star_d,
                            index_block_star_dbar, index_full,
                            check_regular_irreducible, surjectivity_margin,
                            AmbiguousSpectrumError)
from .symplectic import (config_metric, apply_config_structure, omega,
                         omega_c, config_moment_maps,
                         verify_hamiltonian_identity, pointwise_identities,
                         check_Cprime_invariance, gamma_form, gamma_form_fd,
                         tau_form, convention_constants,
                         curvature_bilinear_forms, rho0_integral)
from .solver import (SolveOptions, SolveReport, SolverDivergence, solve,
                     epsilon_continuation, coulomb_project, count_vortices,
                     vortex_ansatz, refine_vortex_ansatz,
                     prolong_configuration, gradient)
from .io import (save_fields, load_fields, write_csv_log, read_csv_log,
                 write_json_report, FieldIOError)
from .verify import run_suites, SUITES

__version__ = "0.1.0"
