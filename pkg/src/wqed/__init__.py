"""Driven-dissipative entanglement of emitters coupled to a waveguide.

Weakly driven Lambda-type emitters near a waveguide relax into a W-type
entangled ground state: collective guided decay splits the excited manifold
into superradiant and subradiant states, and the quantum Zeno effect funnels
population through the subradiant route into the target.  This package
builds the generators, solves the full Lindblad dynamics (dense, sparse,
and Monte Carlo unravelings), performs the adiabatic elimination to the
ground manifold, evaluates the closed-form error budget, and models the
experimental imperfections (extra levels, motion, broadening, dephasing)
plus the microwave-driven variant.
"""

from .effective import (EffectiveDynamics, EffectiveRates, ErrorBudget,
                        ManifoldPartition, analytic_infidelity,
                        effective_operators, effective_rates, optimal_detunings,
                        optimal_omega1, optimal_ratio, rate_steady_state,
                        reduce_generator, steady_state_ratio_terms,
                        tilde_population_ratio, two_emitter_rate_dynamics)
from .errors import (ConfigError, DimensionCapError, IntegrationFailureError,
                     NonUniqueSteadyStateError, PhononTruncationError,
                     SingularEliminationError, WeakDriveError, WqedError)
from .imperfections import (BroadeningSpec, DisorderSample, apply_disorder,
                            channel_scan, cs_scheme, ensemble_fidelity,
                            sample_disorder)
from .liouville import (DensityMatrix, GeneratorAction, Trajectory,
                        apply_generator, evolve, fidelity, ground_basis_sampler,
                        mixed_ground_initial, peak_fidelity, steady_state,
                        trajectories)
from .microwave import (MicrowaveSpec, build_mw_system, mw_effective,
                        mw_error_budget, optimal_omega_mw, singlet_state)
from .model import (DriveSpec, LevelScheme, Operator, SystemSpec,
                    basis_transform, build_hamiltonian, build_lindblads,
                    drive_phases, embed_ground_vector, lambda_scheme,
                    state_labels, target_state)
from .motion import (MotionSpec, MotionalSystem, ThermalState,
                     build_motional_system, disordered_peak_scan, displacement,
                     eta_from_trap_frequency, peak_scan, trap_frequency_from_eta)

__version__ = "0.1.0"
