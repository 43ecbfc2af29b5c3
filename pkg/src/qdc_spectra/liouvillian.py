"""Markovian generator of the dissipative dynamics and its coherence-sector restriction.

The master equation

    d rho / dt = i[rho, H] + (kappa/2) D[a] + (gamma/2) D[sigma] + (P/2) D[sigma^dag]

with D[L] = 2 L rho L^dag - L^dag L rho - rho L^dag L is assembled as a
sparse matrix acting on row-major vectorized density matrices,
vec(rho)[i*d + j] = rho[i, j].

Truncation-safe pumping: the pump dissipator is built from the *truncated*
raising matrix, whose action on |G,n_exc> vanishes because the target state
lies outside the basis.  That drops the sandwich term and the matching
anticommutator halves together, so the generator annihilates the trace
exactly and remains a valid Lindblad generator on the truncated space.
The loss channels (a, sigma) only lower the excitation and need no such
modification.

Every term of the generator commutes with the excitation-offset grading
(ket excitation minus bra excitation), so the offset-(+1) coherences evolve
among themselves.  ``SectorMap`` enumerates that invariant sector and
``reduce_to_sector`` extracts the dense generator block on it; the emission
spectra are computed entirely inside this block.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .basis import Basis, BareState, Matter
from .operators import SystemParams, exciton_lowering, hamiltonian, photon_annihilation

_CLOSURE_TOL = 1e-14


@dataclass(frozen=True)
class Liouvillian:
    """Sparse d^2 x d^2 generator together with its basis and parameter tags."""

    matrix: sp.csr_matrix
    basis: Basis
    params: SystemParams

    @property
    def dim2(self) -> int:
        return self.matrix.shape[0]

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Right-hand side d rho/dt for a d x d matrix, returned as a d x d matrix."""
        d = self.basis.dimension
        if rho.shape != (d, d):
            raise ValueError(f"density matrix shape {rho.shape} does not match basis dimension {d}")
        return (self.matrix @ rho.reshape(-1)).reshape(d, d)

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def dump_coordinates(self, path) -> None:
        """Debug dump: one `row col re im` line per stored entry."""
        coo = self.matrix.tocoo()
        with open(path, "w", encoding="ascii") as fh:
            for r, c, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{r} {c} {v.real:.17g} {v.imag:.17g}\n")


def _left(op: sp.spmatrix, eye: sp.spmatrix) -> sp.spmatrix:
    # vec(A rho) = (A (x) I) vec(rho) in row-major vectorization
    return sp.kron(op, eye, format="csr")


def _right(op: sp.spmatrix, eye: sp.spmatrix) -> sp.spmatrix:
    # vec(rho B) = (I (x) B^T) vec(rho)
    return sp.kron(eye, op.T, format="csr")


def _dissipator(jump: np.ndarray, rate: float, eye: sp.spmatrix) -> sp.spmatrix:
    lop = sp.csr_matrix(jump)
    sandwich = sp.kron(lop, lop.conjugate(), format="csr")
    norm = sp.csr_matrix(jump.conj().T @ jump)
    return (rate / 2.0) * (2.0 * sandwich - _left(norm, eye) - _right(norm, eye))


def build_liouvillian(params: SystemParams, basis: Basis) -> Liouvillian:
    """Assemble the full superoperator matrix for the given parameters and basis."""
    d = basis.dimension
    eye = sp.identity(d, dtype=complex, format="csr")
    h = sp.csr_matrix(hamiltonian(params, basis))
    a = photon_annihilation(basis)
    sm = exciton_lowering(basis)

    gen = 1j * (_right(h, eye) - _left(h, eye))
    gen = gen + _dissipator(a, params.kappa, eye)
    gen = gen + _dissipator(sm, params.gamma, eye)
    gen = gen + _dissipator(sm.conj().T, params.pump, eye)

    gen = gen.tocsr()
    gen.sum_duplicates()
    return Liouvillian(matrix=gen, basis=basis, params=params)


def bloch_rhs(params: SystemParams, basis: Basis, rho: np.ndarray) -> np.ndarray:
    """d rho/dt evaluated term by term from the component-form equations.

    This is the independent oracle for :func:`build_liouvillian`: every term
    is written with explicit Kronecker deltas and square-root factors, with
    matrix elements whose indices leave the basis treated as zero and the
    pump anticommutator halves dropped wherever the raised state does not
    exist (the same truncation-safe rule the assembled generator uses).
    """
    d = basis.dimension
    rho = np.asarray(rho)
    if rho.shape != (d, d):
        raise ValueError(f"density matrix shape {rho.shape} does not match basis dimension {d}")

    omega_x, g = params.omega_x, params.g
    omega_a = params.omega_a
    kappa, gamma, pump = params.kappa, params.gamma, params.pump
    idx = {(s.matter, s.photons): i for i, s in enumerate(basis.states)}

    def el(matter: Matter, n: int, matter2: Matter, m: int) -> complex:
        i = idx.get((matter, n))
        j = idx.get((matter2, m))
        if i is None or j is None:
            return 0.0
        return rho[i, j]

    out = np.zeros((d, d), dtype=complex)
    for (al, n), i in idx.items():
        for (be, m), j in idx.items():
            is_ax = al is Matter.X
            is_bx = be is Matter.X
            v = 1j * (omega_a * (m - n) * rho[i, j]
                      + omega_x * ((el(al, n, Matter.X, m) if is_bx else 0.0)
                                   - (el(Matter.X, n, be, m) if is_ax else 0.0)))
            v += 1j * g * (
                (np.sqrt(m + 1) * el(al, n, Matter.G, m + 1) if is_bx else 0.0)
                + (np.sqrt(m) * el(al, n, Matter.X, m - 1) if not is_bx else 0.0)
                - (np.sqrt(n) * el(Matter.X, n - 1, be, m) if not is_ax else 0.0)
                - (np.sqrt(n + 1) * el(Matter.G, n + 1, be, m) if is_ax else 0.0))
            v += (kappa / 2.0) * (2.0 * np.sqrt((m + 1) * (n + 1)) * el(al, n + 1, be, m + 1)
                                  - (n + m) * rho[i, j])
            v += -(gamma / 2.0) * ((el(Matter.X, n, be, m) if is_ax else 0.0)
                                   - (2.0 * el(Matter.X, n, Matter.X, m)
                                      if (not is_ax and not is_bx) else 0.0)
                                   + (el(al, n, Matter.X, m) if is_bx else 0.0))
            sandwich = 2.0 * el(Matter.G, n, Matter.G, m) if (is_ax and is_bx) else 0.0
            anti = 0.0
            if not is_ax and (Matter.X, n) in idx:
                anti += el(Matter.G, n, be, m)
            if not is_bx and (Matter.X, m) in idx:
                anti += el(al, n, Matter.G, m)
            v += (pump / 2.0) * (sandwich - anti)
            out[i, j] = v
    return out


@dataclass(frozen=True)
class SectorMap:
    """Ordered enumeration of the (bra, ket) pairs with excitation offset +1."""

    basis: Basis
    pairs: tuple[tuple[BareState, BareState], ...]
    flat_indices: np.ndarray = field(repr=False, compare=False)
    _lookup: dict[tuple[BareState, BareState], int] = field(repr=False, compare=False, hash=False)

    @property
    def size(self) -> int:
        return len(self.pairs)

    def index_of_pair(self, bra: BareState, ket: BareState) -> int | None:
        return self._lookup.get((bra, ket))

    def embed(self, values: np.ndarray) -> np.ndarray:
        """Scatter sector components into a full d x d matrix."""
        d = self.basis.dimension
        full = np.zeros(d * d, dtype=complex)
        full[self.flat_indices] = values
        return full.reshape(d, d)

    def extract(self, mat: np.ndarray) -> np.ndarray:
        """Gather the sector components of a full d x d matrix."""
        return mat.reshape(-1)[self.flat_indices].copy()


def sector_map(basis: Basis) -> SectorMap:
    """Enumerate all offset-(+1) pairs by brute force over the basis product.

    The count works out to 4*n_exc - 2 for n_exc >= 1: the photon-raising
    families (G,n)->(G,n+1) and (G,n)->(X,n) contribute n_exc pairs each,
    while (X,n)->(X,n+1) and (X,n)->(G,n+2) lose one pair each to the
    truncation boundary.
    """
    d = basis.dimension
    pairs = [(bra, ket)
             for bra in basis.states
             for ket in basis.states
             if ket.excitation - bra.excitation == 1]
    flat = np.array([basis.index(b) * d + basis.index(k) for b, k in pairs], dtype=np.intp)
    lookup = {p: i for i, p in enumerate(pairs)}
    return SectorMap(basis=basis, pairs=tuple(pairs), flat_indices=flat, _lookup=lookup)


@dataclass(frozen=True)
class ReducedLiouvillian:
    """Dense restriction of the generator to the offset-(+1) coherence sector."""

    matrix: np.ndarray
    sector: SectorMap

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def reduce_to_sector(liouv: Liouvillian, basis: Basis) -> ReducedLiouvillian:
    """Restrict the full generator to the offset-(+1) sector, verifying closure.

    Any coupling from a sector pair into a non-sector element above 1e-14
    signals an assembly bug (the grading must be exact) and raises.
    """
    if basis is not liouv.basis and basis != liouv.basis:
        raise ValueError("basis does not match the one the Liouvillian was built on")
    sector = sector_map(basis)
    cols = liouv.matrix.tocsc()[:, sector.flat_indices].toarray()
    reduced = cols[sector.flat_indices, :]

    outside = np.ones(liouv.dim2, dtype=bool)
    outside[sector.flat_indices] = False
    leak = np.abs(cols[outside, :]).max(initial=0.0)
    if leak > _CLOSURE_TOL:
        raise RuntimeError(
            f"sector closure violated: coupling of magnitude {leak:.3e} leaves the "
            "offset-(+1) sector; the generator assembly is inconsistent")
    return ReducedLiouvillian(matrix=np.ascontiguousarray(reduced), sector=sector)
