"""Stationary state of the dissipative dynamics and a time-evolution oracle.

The stationary density matrix solves L vec(rho) = 0 with unit trace.  One
row of the singular system is redundant (the diagonal rows sum to zero by
trace annihilation), so the solver replaces the first diagonal row with the
trace constraint and solves directly; a kernel-extraction path is kept
behind a flag for cross-validation.  ``evolve`` integrates the master
equation with a classical fixed-step fourth-order scheme and is used by the
test suite as an independent oracle for the steady state.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .basis import Basis, Matter
from .liouvillian import Liouvillian

_DENSE_LIMIT = 1024          # largest d^2 solved with dense LAPACK
_UNIQUENESS_LIMIT = 600      # largest d^2 given the automatic two-singular-value check
_RESIDUAL_TOL = 1e-10


class TruncationWarning(UserWarning):
    """Population has reached the top excitation manifold; n_exc may be too small."""


@dataclass(frozen=True)
class DensityMatrix:
    """Complex d x d state with its basis tag.

    Invariants (checked by :meth:`validate`, not enforced on construction so
    that diagnostic objects such as un-renormalized evolution output can be
    represented): Hermitian to 1e-12 entrywise, trace 1 +- 1e-12,
    eigenvalues >= -1e-10.
    """

    entries: np.ndarray
    basis: Basis

    @property
    def dim(self) -> int:
        return self.basis.dimension

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def validate(self, herm_tol: float = 1e-12, trace_tol: float = 1e-12,
                 eig_floor: float = -1e-10) -> None:
        herm = np.abs(self.entries - self.entries.conj().T).max()
        if herm > herm_tol:
            raise ValueError(f"not Hermitian: max |rho - rho^dag| = {herm:.3e}")
        tr = self.trace()
        if abs(tr - 1.0) > trace_tol:
            raise ValueError(f"trace {tr} differs from 1 by more than {trace_tol:.1e}")
        lowest = np.linalg.eigvalsh((self.entries + self.entries.conj().T) / 2.0).min()
        if lowest < eig_floor:
            raise ValueError(f"negative eigenvalue {lowest:.3e} below floor {eig_floor:.1e}")

    def dump_csv(self, path) -> None:
        """Write `row,col,re,im` lines for every entry."""
        with open(path, "w", encoding="ascii") as fh:
            fh.write("row,col,re,im\n")
            for i in range(self.dim):
                for j in range(self.dim):
                    v = self.entries[i, j]
                    fh.write(f"{i},{j},{v.real:.17g},{v.imag:.17g}\n")


def _trace_row(d: int) -> np.ndarray:
    row = np.zeros(d * d)
    row[np.arange(d) * d + np.arange(d)] = 1.0
    return row


def _condition_estimate(matrix: sp.spmatrix) -> float:
    try:
        lu = spla.splu(matrix.tocsc())
        inv_norm = spla.onenormest(spla.LinearOperator(matrix.shape, matvec=lu.solve))
        return float(spla.onenormest(matrix) * inv_norm)
    except (RuntimeError, ValueError):
        return float("inf")


def _check_unique_kernel(dense: np.ndarray) -> None:
    svals = np.linalg.svd(dense, compute_uv=False)
    if svals[-2] < 1e-12 * svals[0]:
        raise RuntimeError(
            "stationary state is not unique: two singular values of the generator "
            f"are near zero ({svals[-1]:.3e}, {svals[-2]:.3e} vs largest {svals[0]:.3e})")


def steady_state(liouv: Liouvillian, *, method: str = "direct",
                 top_population_threshold: float = 1e-6,
                 check_uniqueness: bool | None = None) -> DensityMatrix:
    """Solve for the trace-one stationary density matrix.

    ``method="direct"`` replaces the first diagonal row of the generator
    with the trace row and solves the resulting nonsingular system (dense
    LAPACK for small problems, sparse LU above ``d^2 = 1024``).
    ``method="kernel"`` extracts the null vector from a dense SVD instead;
    it exists to cross-validate the direct path.

    Emits :class:`TruncationWarning` when the top excitation manifold holds
    more than ``top_population_threshold`` population.
    """
    if liouv.params.kappa <= 0:
        raise ValueError("steady state requires kappa > 0 in the truncated space")
    basis = liouv.basis
    d = basis.dimension
    n2 = d * d

    if check_uniqueness is None:
        check_uniqueness = n2 <= _UNIQUENESS_LIMIT

    if method == "kernel":
        dense = liouv.to_dense()
        _, svals, vh = np.linalg.svd(dense)
        if svals[-2] < 1e-12 * svals[0]:
            raise RuntimeError(
                "stationary state is not unique: two singular values of the generator "
                f"are near zero ({svals[-1]:.3e}, {svals[-2]:.3e} vs largest {svals[0]:.3e})")
        vec = vh[-1].conj()
        tr = vec.reshape(d, d).trace()
        if abs(tr) < 1e-12:
            raise RuntimeError("kernel vector is traceless; no stationary density matrix")
        vec = vec / tr
    elif method == "direct":
        rhs = np.zeros(n2, dtype=complex)
        rhs[0] = 1.0
        if check_uniqueness:
            _check_unique_kernel(liouv.to_dense())
        if n2 <= _DENSE_LIMIT:
            a = liouv.to_dense()
            a[0, :] = _trace_row(d)
            try:
                vec = np.linalg.solve(a, rhs)
            except np.linalg.LinAlgError as exc:
                raise RuntimeError(
                    f"constrained stationary solve is singular (cond ~ {np.linalg.cond(a):.3e})"
                ) from exc
        else:
            coo = liouv.matrix.tocoo()
            keep = coo.row != 0
            tr_cols = np.arange(d) * d + np.arange(d)
            rows = np.concatenate([coo.row[keep], np.zeros(d, dtype=coo.row.dtype)])
            cols = np.concatenate([coo.col[keep], tr_cols.astype(coo.col.dtype)])
            data = np.concatenate([coo.data[keep], np.ones(d, dtype=complex)])
            a = sp.csc_matrix((data, (rows, cols)), shape=(n2, n2))
            try:
                vec = spla.splu(a).solve(rhs)
            except RuntimeError as exc:
                raise RuntimeError(
                    "constrained stationary solve failed "
                    f"(cond ~ {_condition_estimate(a):.3e})") from exc
    else:
        raise ValueError(f"unknown method {method!r}; expected 'direct' or 'kernel'")

    residual = np.linalg.norm(liouv.matrix @ vec)
    if residual > _RESIDUAL_TOL:
        raise RuntimeError(
            f"stationary residual ||L rho|| = {residual:.3e} exceeds {_RESIDUAL_TOL:.1e} "
            f"(generator condition ~ {_condition_estimate(liouv.matrix):.3e})")

    rho = DensityMatrix(entries=vec.reshape(d, d), basis=basis)
    rho.validate()

    top = sum(rho.entries[i, i].real
              for i, s in enumerate(basis.states) if s.excitation == basis.n_exc)
    if top > top_population_threshold:
        warnings.warn(
            f"top manifold holds population {top:.3e} (> {top_population_threshold:.1e}); "
            "increase n_exc", TruncationWarning, stacklevel=2)
    return rho


def population(rho: DensityMatrix, which: str) -> float:
    """Mean photon number (``which="cavity"``) or exciton occupation (``"exciton"``)."""
    diag = np.real(np.diagonal(rho.entries))
    if which == "cavity":
        return float(sum(s.photons * diag[i] for i, s in enumerate(rho.basis.states)))
    if which == "exciton":
        return float(sum(diag[i] for i, s in enumerate(rho.basis.states)
                         if s.matter is Matter.X))
    raise ValueError(f"unknown population {which!r}; expected 'cavity' or 'exciton'")


def evolve(liouv: Liouvillian, rho0: DensityMatrix, t_max: float, dt: float) -> DensityMatrix:
    """Integrate d rho/dt = L rho with classical RK4 at fixed step ``dt``.

    No renormalization is applied; trace drift is a diagnostic of integrator
    accuracy.  The step must satisfy the usual RK4 stability bound for the
    spectral radius of the generator restricted to the sectors the initial
    state populates.  Detected blow-up (norm growth beyond 1e3) raises.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if rho0.basis != liouv.basis:
        raise ValueError("initial state basis does not match the Liouvillian basis")
    gen = liouv.matrix
    y = rho0.entries.reshape(-1).astype(complex)
    limit = 1e3 * max(1.0, float(np.abs(y).max()))
    steps = int(round(t_max / dt))
    for k in range(steps):
        k1 = gen @ y
        k2 = gen @ (y + 0.5 * dt * k1)
        k3 = gen @ (y + 0.5 * dt * k2)
        k4 = gen @ (y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if k % 64 == 0 and np.abs(y).max() > limit:
            raise RuntimeError(
                f"evolution blew up at t = {k * dt:.3g} (norm > 1e3); reduce dt")
    d = liouv.basis.dimension
    return DensityMatrix(entries=y.reshape(d, d), basis=liouv.basis)
