"""Variational free energies and message passing for sparse linear estimation.

Reconstructs a Gauss-Bernoulli signal ``x`` from ``y = F x + noise`` with
mean-field iteration, iterative thresholding, AMP/GAMP, or direct
minimization of the mean-field and Bethe free energies.
"""
from .core import (Instance, NumericError, OutputChannel, ParameterError, PriorParams, Scaling,
                   channel_log_likelihood, generate_instance, mse)
from .denoiser import (GaussBernoulliDenoiser, ScalarPosterior, dlogz_dR, dlogz_dsigma2,
                       posterior_jacobian, scalar_posterior, threshold_eta)
from .free_energy import (EnergyReport, GampState, Moments, VarParams, bethe_energy,
                          gamp_generating_energy, gamp_variational_energy, gout, kl_to_prior,
                          learn_delta, mf_energy)
from .harness import PhaseCell, SweepSpec, exact_posterior_oracle, run_sweep
from .solvers import (Algo, SolveReport, SolverConfig, minimize_energy, solve, solve_amp,
                      solve_amp_damped, solve_gamp, solve_ist, solve_mf_learn,
                      solve_mf_sequential)

__version__ = "0.1.0"
