"""Emission spectra from per-frequency solves on the coherence sector.

The two-time emission correlator is generated by an operator G(tau) that
obeys the same master equation as the density matrix, starting from
G(0) = a rho_ss (cavity emission) or sigma rho_ss (emitter emission).
Both initial conditions live entirely in the offset-(+1) coherence sector,
so the one-sided transform reduces to shifted linear solves of sector size:

    (i omega I - L_red) G~(omega) = G(0)

and the spectrum is S(omega) = Re[w . G~(omega)] / (pi n), where the
readout weights w encode the trace Tr[a^dag G] (photon-raising pairs,
weight sqrt(l+1)) or Tr[sigma^dag G] (the (G,l)->(X,l) pairs, weight 1),
and n is the corresponding stationary population.

Two solve strategies are provided: independent factorizations per grid
frequency (the default; always applicable) and a one-time spectral
decomposition of the reduced generator that turns every subsequent
frequency into an O(size) evaluation, admitted only while the eigenvector
matrix is well conditioned.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .basis import Basis, BareState, Matter
from .liouvillian import (Liouvillian, ReducedLiouvillian, SectorMap,
                          build_liouvillian, reduce_to_sector)
from .operators import SystemParams
from .steady_state import DensityMatrix, population, steady_state

_RESIDUAL_REL_TOL = 1e-10
_SHIFT_COND_LIMIT = 1e12
_POPULATION_FLOOR = 1e-10
_SOLVE_CHUNK = 256


class SolveStrategy(enum.Enum):
    """How the per-frequency shifted systems are solved."""

    PER_FREQUENCY_FACTORIZATION = "per_frequency_factorization"
    SPECTRAL_DECOMPOSITION = "spectral_decomposition"


@dataclass(frozen=True)
class GreenVector:
    """Sector components of the correlation generator, at tau = 0 or at a frequency."""

    values: np.ndarray
    sector: SectorMap
    omega: float | None = None

    def __post_init__(self) -> None:
        if len(self.values) != self.sector.size:
            raise ValueError(
                f"value count {len(self.values)} does not match sector size {self.sector.size}")

    @property
    def is_time_zero(self) -> bool:
        return self.omega is None


@dataclass(frozen=True)
class Spectrum:
    """Spectral density on a uniform ascending frequency grid (meV vs 1/meV)."""

    grid: np.ndarray
    values: np.ndarray
    normalization: float
    emitter: str

    def __post_init__(self) -> None:
        grid = np.asarray(self.grid, dtype=float)
        if grid.ndim != 1 or len(grid) < 2:
            raise ValueError("grid must hold at least two frequencies")
        steps = np.diff(grid)
        if steps.min() <= 0:
            raise ValueError("grid must be strictly ascending")
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise ValueError("grid must be uniformly spaced")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("spectrum values must be finite")

    @property
    def step(self) -> float:
        return float(self.grid[1] - self.grid[0])

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write("omega_mev,s_per_mev\n")
            for w, v in zip(self.grid, self.values):
                fh.write(f"{w:.17g},{v:.17g}\n")


def frequency_grid(center: float, span: float, step: float) -> np.ndarray:
    """Uniform grid of full width ``span`` around ``center`` with spacing ``step``."""
    if span <= 0 or step <= 0:
        raise ValueError("span and step must be positive")
    n = int(round(span / step)) + 1
    return center - span / 2.0 + step * np.arange(n)


def correlation_weights(sector: SectorMap, emitter: str) -> np.ndarray:
    """Readout weights w such that K(tau) = w . G(tau) on the sector.

    Cavity: Tr[a^dag G] = sum over photon-raising pairs (alpha,l)->(alpha,l+1)
    of sqrt(l+1) G.  Emitter: Tr[sigma^dag G] = sum over (G,l)->(X,l) of G.
    """
    w = np.zeros(sector.size)
    for k, (bra, ket) in enumerate(sector.pairs):
        if emitter == "cavity":
            if bra.matter is ket.matter and ket.photons == bra.photons + 1:
                w[k] = np.sqrt(bra.photons + 1)
        elif emitter == "qd":
            if bra.matter is Matter.G and ket.matter is Matter.X and ket.photons == bra.photons:
                w[k] = 1.0
        else:
            raise ValueError(f"unknown emitter {emitter!r}; expected 'cavity' or 'qd'")
    return w


def _require_same_basis(rho: DensityMatrix, sector: SectorMap) -> None:
    if rho.basis != sector.basis:
        raise ValueError("density matrix and sector were built on different bases")


def cavity_green_init(rho_ss: DensityMatrix, sector: SectorMap) -> GreenVector:
    """Sector components of G(0) = a rho_ss.

    Written out per family with l the bra photon number:
    (G,l)->(G,l+1): sqrt(l+1) rho[Gl+1, Gl+1];  (X,l)->(X,l+1): sqrt(l+1) rho[Xl+1, Xl+1];
    (G,l)->(X,l):   sqrt(l+1) rho[Gl+1, Xl];    (X,l)->(G,l+2): sqrt(l+1) rho[Xl+1, Gl+2].
    """
    _require_same_basis(rho_ss, sector)
    basis = sector.basis
    rho = rho_ss.entries
    values = np.zeros(sector.size, dtype=complex)
    for k, (bra, ket) in enumerate(sector.pairs):
        raised = BareState(bra.matter, bra.photons + 1)
        if raised in basis:
            values[k] = np.sqrt(bra.photons + 1) * rho[basis.index(raised), basis.index(ket)]
    return GreenVector(values=values, sector=sector)


def qd_green_init(rho_ss: DensityMatrix, sector: SectorMap) -> GreenVector:
    """Sector components of G(0) = sigma rho_ss.

    Only two families are nonzero: (G,l)->(X,l) takes rho[Xl, Xl] and
    (G,l)->(G,l+1) takes rho[Xl, Gl+1]; the photon-raising X family and the
    (X,l)->(G,l+2) family vanish identically.
    """
    _require_same_basis(rho_ss, sector)
    basis = sector.basis
    rho = rho_ss.entries
    values = np.zeros(sector.size, dtype=complex)
    for k, (bra, ket) in enumerate(sector.pairs):
        if bra.matter is Matter.G:
            source = BareState(Matter.X, bra.photons)
            if source in basis:
                values[k] = rho[basis.index(source), basis.index(ket)]
    return GreenVector(values=values, sector=sector)


def _shift_matrix(reduced: ReducedLiouvillian, omega: float) -> np.ndarray:
    return 1j * omega * np.eye(reduced.size) - reduced.matrix


def resolve_green(reduced: ReducedLiouvillian, g0: GreenVector, omega: float) -> GreenVector:
    """Solve (i omega I - L_red) G~ = G(0) for a single frequency."""
    if not g0.is_time_zero:
        raise ValueError("initial condition must be a time-zero Green's vector")
    if not np.isfinite(omega):
        raise ValueError("omega must be finite")
    shifted = _shift_matrix(reduced, omega)
    scale = np.linalg.norm(g0.values)
    try:
        sol = np.linalg.solve(shifted, g0.values)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"shifted system is singular at omega = {omega:g}") from exc
    residual = np.linalg.norm(shifted @ sol - g0.values)
    if residual > _RESIDUAL_REL_TOL * max(scale, np.finfo(float).tiny):
        cond = np.linalg.cond(shifted)
        if cond > _SHIFT_COND_LIMIT:
            raise RuntimeError(
                f"near-singular shift at omega = {omega:g} (condition ~ {cond:.3e})")
        raise RuntimeError(
            f"resolvent residual {residual:.3e} exceeds tolerance at omega = {omega:g} "
            f"(condition ~ {cond:.3e})")
    return GreenVector(values=sol, sector=g0.sector, omega=omega)


def _resolve_on_grid(reduced: ReducedLiouvillian, g0: GreenVector,
                     grid: np.ndarray) -> np.ndarray:
    """Batched shifted solves over the whole grid; rows are G~(omega_k).

    Grid points are independent, so they are solved in fixed-size batches
    (deterministic ordering) with a single residual sweep at the end.
    """
    size = reduced.size
    eye = np.eye(size)
    out = np.empty((len(grid), size), dtype=complex)
    scale = max(float(np.linalg.norm(g0.values)), np.finfo(float).tiny)
    for start in range(0, len(grid), _SOLVE_CHUNK):
        omegas = grid[start:start + _SOLVE_CHUNK]
        shifted = (1j * omegas)[:, None, None] * eye - reduced.matrix
        rhs = np.broadcast_to(g0.values[:, None], (len(omegas), size, 1))
        try:
            sols = np.linalg.solve(shifted, rhs)[..., 0]
        except np.linalg.LinAlgError:
            # fall back to per-frequency solves so the offending shift is named
            for i, om in enumerate(omegas):
                out[start + i] = resolve_green(reduced, g0, float(om)).values
            continue
        residual = np.abs(np.einsum("kij,kj->ki", shifted, sols) - g0.values).max(axis=1)
        bad = residual > _RESIDUAL_REL_TOL * scale
        if np.any(bad):
            worst = omegas[np.argmax(residual)]
            resolve_green(reduced, g0, float(worst))  # raises with diagnostics
        out[start:start + len(omegas)] = sols
    return out


class SpectralCache:
    """One-time eigendecomposition of the reduced generator for fast resolvents.

    With L_red = V diag(lambda) V^-1 the shifted solve becomes
    G~(omega) = V [ (V^-1 G(0)) / (i omega - lambda) ], an O(size) evaluation
    per frequency after the O(size^3) setup.
    """

    def __init__(self, reduced: ReducedLiouvillian, eigenvalues: np.ndarray,
                 vectors: np.ndarray, inverse: np.ndarray, condition: float):
        self.reduced = reduced
        self.eigenvalues = eigenvalues
        self.vectors = vectors
        self.inverse = inverse
        self.condition = condition

    def resolve(self, g0: GreenVector, omega: float) -> GreenVector:
        amps = self.inverse @ g0.values
        values = self.vectors @ (amps / (1j * omega - self.eigenvalues))
        return GreenVector(values=values, sector=g0.sector, omega=omega)

    def spectrum_values(self, weights: np.ndarray, g0: GreenVector,
                        grid: np.ndarray, normalization: float) -> np.ndarray:
        amps = (weights @ self.vectors) * (self.inverse @ g0.values)
        denom = 1j * grid[:, None] - self.eigenvalues[None, :]
        return (amps / denom).sum(axis=1).real / (np.pi * normalization)


def precompute_spectral(reduced: ReducedLiouvillian, *,
                        condition_bound: float = 1e8,
                        probe_points: int = 5) -> SpectralCache:
    """Diagonalize the reduced generator, validating against direct solves.

    Fails when the eigenvector matrix condition exceeds ``condition_bound``
    (e.g. for defective generators); the caller should then fall back to
    per-frequency factorization.
    """
    eigenvalues, vectors = np.linalg.eig(reduced.matrix)
    condition = float(np.linalg.cond(vectors))
    if not np.isfinite(condition) or condition > condition_bound:
        raise RuntimeError(
            f"eigenvector condition {condition:.3e} exceeds bound {condition_bound:.1e}; "
            "fall back to per-frequency factorization")
    cache = SpectralCache(reduced, eigenvalues, vectors, np.linalg.inv(vectors), condition)

    center = float(np.median(eigenvalues.imag))
    spread = max(1.0, float(np.ptp(eigenvalues.imag)), 2.0 * float(np.abs(eigenvalues.real).max()))
    offsets = np.linspace(-1.0, 1.0, probe_points)
    probe = GreenVector(values=np.ones(reduced.size, dtype=complex), sector=reduced.sector)
    for om in center + offsets * spread:
        direct = resolve_green(reduced, probe, float(om)).values
        fast = cache.resolve(probe, float(om)).values
        err = np.linalg.norm(fast - direct)
        if err > 1e-8 * max(np.linalg.norm(direct), np.finfo(float).tiny):
            raise RuntimeError(
                f"spectral cache validation failed at omega = {om:g} "
                f"(relative error {err / np.linalg.norm(direct):.3e}); "
                "fall back to per-frequency factorization")
    return cache


@dataclass(frozen=True)
class SpectrumPipeline:
    """Everything the frequency- and time-domain spectrum paths share."""

    params: SystemParams
    basis: Basis
    liouvillian: Liouvillian
    rho_ss: DensityMatrix
    reduced: ReducedLiouvillian
    n_cavity: float
    n_exciton: float

    def green_init(self, emitter: str) -> GreenVector:
        if emitter == "cavity":
            return cavity_green_init(self.rho_ss, self.reduced.sector)
        if emitter == "qd":
            return qd_green_init(self.rho_ss, self.reduced.sector)
        raise ValueError(f"unknown emitter {emitter!r}")

    def weights(self, emitter: str) -> np.ndarray:
        return correlation_weights(self.reduced.sector, emitter)

    def normalization(self, emitter: str) -> float:
        value = self.n_cavity if emitter == "cavity" else self.n_exciton
        if value < _POPULATION_FLOOR:
            what = "cavity" if emitter == "cavity" else "emitter"
            raise RuntimeError(f"{what} unpopulated; spectrum undefined "
                               f"(population {value:.3e} below {_POPULATION_FLOOR:.1e})")
        return value


def build_pipeline(params: SystemParams, n_exc: int) -> SpectrumPipeline:
    """Basis -> generator -> stationary state -> sector restriction, bundled."""
    from .basis import build_basis

    if n_exc < 1:
        raise ValueError("spectra need n_exc >= 1")
    basis = build_basis(n_exc)
    liouv = build_liouvillian(params, basis)
    rho_ss = steady_state(liouv)
    reduced = reduce_to_sector(liouv, basis)
    return SpectrumPipeline(
        params=params, basis=basis, liouvillian=liouv, rho_ss=rho_ss, reduced=reduced,
        n_cavity=population(rho_ss, "cavity"), n_exciton=population(rho_ss, "exciton"))


def _assemble_spectrum(pipeline: SpectrumPipeline, emitter: str, grid: np.ndarray,
                       strategy: SolveStrategy) -> Spectrum:
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("frequency grid is empty")
    norm = pipeline.normalization(emitter)
    g0 = pipeline.green_init(emitter)
    weights = pipeline.weights(emitter)
    if strategy is SolveStrategy.SPECTRAL_DECOMPOSITION:
        cache = precompute_spectral(pipeline.reduced)
        values = cache.spectrum_values(weights, g0, grid, norm)
    else:
        solutions = _resolve_on_grid(pipeline.reduced, g0, grid)
        values = (solutions @ weights).real / (np.pi * norm)
    return Spectrum(grid=grid, values=values, normalization=norm, emitter=emitter)


def cavity_spectrum(params: SystemParams, n_exc: int, grid: np.ndarray, *,
                    strategy: SolveStrategy = SolveStrategy.PER_FREQUENCY_FACTORIZATION,
                    pipeline: SpectrumPipeline | None = None) -> Spectrum:
    """Emission spectrum of the cavity field on ``grid`` (meV)."""
    if pipeline is None:
        pipeline = build_pipeline(params, n_exc)
    return _assemble_spectrum(pipeline, "cavity", grid, strategy)


def qd_spectrum(params: SystemParams, n_exc: int, grid: np.ndarray, *,
                strategy: SolveStrategy = SolveStrategy.PER_FREQUENCY_FACTORIZATION,
                pipeline: SpectrumPipeline | None = None) -> Spectrum:
    """Emission spectrum of the emitter on ``grid`` (meV)."""
    if pipeline is None:
        pipeline = build_pipeline(params, n_exc)
    return _assemble_spectrum(pipeline, "qd", grid, strategy)
