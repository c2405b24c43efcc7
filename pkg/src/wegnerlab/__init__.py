"""Spectral statistics of one-dimensional alloy-type random operators.

Builds finite-volume finite-difference restrictions of a random operator
(periodic background plus i.i.d. couplings on a compactly supported bump per
lattice site), counts eigenvalues fast via Sturm inertia, estimates the
integrated density of states and small-window eigenvalue statistics over
reproducible disorder ensembles, and verifies the matrix-level inequalities
those estimates rest on.
"""

from .analysis import (DecayFit, IdsCurve, LocalizationReport, WegnerStatistic,
                       averaged_ids, decay_rate, finite_volume_ids, hitting_probability,
                       lipschitz_modulus, lyapunov_curve, lyapunov_exponent,
                       participation_ratio, wegner_statistic)
from .ensemble import (EnsembleConfig, EnsembleResult, StatisticError, draw_realization,
                       realization_stream, run_ensemble)
from .model import (CanonicalModel, CouplingDensity, ModelError, ModelSpec,
                    PeriodicPotential, Realization, SingleSitePotential, canonicalize,
                    coupling_sites, default_model, harmonic_periodic, indicator_site,
                    lattice_sites, sample_couplings, sample_total_potential,
                    table_density, transport_realization, uniform_density, zero_periodic)
from .operator import (DIRICHLET, NEUMANN, GridSpec, OperatorError, TridiagonalOperator,
                       assemble, export_text, split_at)
from .spectral import (ConvergenceError, EigenPair, SpectralError, SpectralWindow,
                       count_below, dense_spectrum, eigenpair, eigenvalue_by_index,
                       eigenvalues_in, trace_projection)
from .verify import (CheckCase, VerificationReport, bracketing_check, eder_lower_bound,
                     hellmann_feynman_check, unique_continuation_check)

__version__ = "0.1.0"
