"""Desk-scale numerics for equilibration of closed quantum systems.

Spectral window statistics, eigenbasis dynamics, measurement
distinguishability, Lorentzian-averaged purity bounds, Haar-measurement
ensembles, and slow-equilibration snapshot constructions, with a CLI for
reproducible seeded experiments.
"""

from .spectra import (EnergySpectrum, GapSet, max_gaps_in_window,
                      max_window_probability, max_window_probability_window,
                      spectrum_from_hermitian)
from .states import (LevelDistribution, QuantumState, dephase,
                     effective_dimension, energy_moments, evolve,
                     level_distribution, overlap, purity)
from .measure import (Measurement, Projector, distinguishability,
                      distinguishability_series, success_probability, two_outcome)
from .averaging import (TimeGrid, TimeSeries, lorentzian_phase_average,
                        lorentzian_purity, lorentzian_state, time_average)
from .bounds import (BoundReport, fast_equilibration_bound,
                     fast_equilibration_constant, general_distinguishability_bound,
                     general_expectation_bound, population_term_bound)
from .haar import (HaarSampler, TwirlResult, exact_mean_sq_distinguishability,
                   sample_haar, typical_distinguishability_bound)
from .constructions import (Scenario, SnapshotSubspace, gaussian_scenario,
                            harmonic_oscillator_1d, harmonic_oscillator_3d_boltzmann,
                            random_scenario, snapshot_subspace)

__version__ = "0.1.0"
