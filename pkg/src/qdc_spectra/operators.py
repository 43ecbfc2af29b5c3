"""System operators and the Jaynes-Cummings Hamiltonian on the truncated basis.

All operators are assembled entry by entry in the excitation-ordered basis.
Products of truncated matrices are *not* used for the exchange coupling:
the product sigma*a_dagger passes through an intermediate state that leaves
the basis at the top manifold, which would silently zero the coupling
between |G,n_exc> and |X,n_exc-1>.  Direct assembly keeps every coupling
whose initial and final states are inside the truncation.

Energies are in meV with hbar = 1, so times are in 1/meV.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import Basis, BareState, Matter


@dataclass(frozen=True)
class SystemParams:
    """Physical parameters of the pumped emitter-cavity system (all in meV).

    omega_x is the exciton energy, delta = omega_x - omega_a the detuning
    from the cavity mode, g the light-matter coupling, kappa the cavity
    loss rate, gamma the spontaneous-emission rate and pump the incoherent
    exciton pump rate.
    """

    omega_x: float
    delta: float
    g: float
    kappa: float
    gamma: float
    pump: float

    def __post_init__(self) -> None:
        for name in ("g", "kappa", "gamma", "pump"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")

    @property
    def omega_a(self) -> float:
        """Cavity mode energy."""
        return self.omega_x - self.delta


def photon_annihilation(basis: Basis) -> np.ndarray:
    """Cavity annihilation operator: <alpha,n-1|a|alpha,n> = sqrt(n)."""
    d = basis.dimension
    a = np.zeros((d, d), dtype=complex)
    for j, s in enumerate(basis.states):
        if s.photons >= 1:
            target = BareState(s.matter, s.photons - 1)
            a[basis.index(target), j] = np.sqrt(s.photons)
    return a


def exciton_lowering(basis: Basis) -> np.ndarray:
    """Emitter lowering operator: <G,n|sigma|X,n> = 1."""
    d = basis.dimension
    sm = np.zeros((d, d), dtype=complex)
    for j, s in enumerate(basis.states):
        if s.matter is Matter.X:
            sm[basis.index(BareState(Matter.G, s.photons)), j] = 1.0
    return sm


def excitation_operator(basis: Basis) -> np.ndarray:
    """Diagonal total-excitation operator, equal to a^dag a + sigma^dag sigma."""
    return np.diag([float(s.excitation) for s in basis.states]).astype(complex)


def hamiltonian(params: SystemParams, basis: Basis) -> np.ndarray:
    """Jaynes-Cummings Hamiltonian restricted to the truncated basis.

    H = omega_x sigma^dag sigma + omega_a a^dag a + g (sigma a^dag + a sigma^dag),
    Hermitian by construction, with the exchange coupling g*sqrt(n+1) between
    |X,n> and |G,n+1> retained in every manifold of the basis.
    """
    d = basis.dimension
    omega_a = params.omega_a
    h = np.zeros((d, d), dtype=complex)
    for i, s in enumerate(basis.states):
        h[i, i] = omega_a * s.photons + (params.omega_x if s.matter is Matter.X else 0.0)
        if s.matter is Matter.X:
            partner = BareState(Matter.G, s.photons + 1)
            if partner in basis:
                j = basis.index(partner)
                coupling = params.g * np.sqrt(s.photons + 1)
                h[i, j] = coupling
                h[j, i] = coupling
    return h
