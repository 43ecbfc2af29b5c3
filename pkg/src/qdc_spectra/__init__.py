"""Emission spectra of a pumped quantum-dot-cavity system.

Computes the power spectral density of the cavity and emitter output two
ways on the same reduced coherence sector: per-frequency shifted linear
solves (the fast path) and time propagation of the correlation generator
followed by a one-sided transform (the quantum-regression reference), with
tooling to compare their accuracy and speed.
"""

from .analysis import Peak, PeakSet, find_peaks, integrate
from .basis import BareState, Basis, Matter, build_basis, excitation_number, index_of
from .cli import BenchRecord, ConfigError, RunConfig, apply_overrides, bench, parse_config, run
from .green_spectrum import (GreenVector, SolveStrategy, Spectrum, SpectrumPipeline,
                             build_pipeline, cavity_green_init, cavity_spectrum,
                             correlation_weights, frequency_grid, precompute_spectral,
                             qd_green_init, qd_spectrum, resolve_green, SpectralCache)
from .liouvillian import (Liouvillian, ReducedLiouvillian, SectorMap, bloch_rhs,
                          build_liouvillian, reduce_to_sector, sector_map)
from .operators import (SystemParams, exciton_lowering, excitation_operator,
                        hamiltonian, photon_annihilation)
from .qrt_reference import (CorrelationSeries, ErrorReport, compare_spectra,
                            evolve_correlation, qrt_spectrum, spectrum_from_correlation)
from .steady_state import DensityMatrix, TruncationWarning, evolve, population, steady_state

__version__ = "0.1.0"

__all__ = [
    "BareState", "Basis", "BenchRecord", "ConfigError", "CorrelationSeries",
    "DensityMatrix", "ErrorReport", "GreenVector", "Liouvillian", "Matter",
    "Peak", "PeakSet", "ReducedLiouvillian", "RunConfig", "SectorMap",
    "SolveStrategy", "SpectralCache", "Spectrum", "SpectrumPipeline",
    "SystemParams", "TruncationWarning", "apply_overrides", "bench",
    "bloch_rhs", "build_basis", "build_liouvillian", "build_pipeline",
    "cavity_green_init", "cavity_spectrum", "compare_spectra",
    "correlation_weights", "evolve", "evolve_correlation",
    "excitation_number", "excitation_operator", "exciton_lowering",
    "find_peaks", "frequency_grid", "hamiltonian", "index_of", "integrate",
    "parse_config", "photon_annihilation", "population", "precompute_spectral",
    "qd_green_init", "qd_spectrum", "qrt_spectrum", "reduce_to_sector",
    "resolve_green", "run", "sector_map", "spectrum_from_correlation",
    "steady_state",
]
