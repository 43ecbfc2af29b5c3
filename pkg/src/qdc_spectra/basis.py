"""Truncated bare-state basis {|G>,|X>} (x) {|n>} ordered by excitation number.

The two-level emitter contributes 0 or 1 excitation, the cavity mode n, so
the total excitation N = n + (1 if excited) organizes the product states
into manifolds.  Truncating at a total excitation ``n_exc`` keeps exactly
``2*n_exc + 1`` states and, unlike a flat photon cutoff, makes the
excitation-offset block structure of the dissipative dynamics exact.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field


class Matter(enum.Enum):
    """Electronic state of the emitter: ground G or single exciton X."""

    G = "G"
    X = "X"


@dataclass(frozen=True, order=True)
class BareState:
    """One product state |matter> (x) |photons>."""

    matter: Matter
    photons: int

    def __post_init__(self) -> None:
        if self.photons < 0:
            raise ValueError(f"photon number must be >= 0, got {self.photons}")

    @property
    def excitation(self) -> int:
        return self.photons + (1 if self.matter is Matter.X else 0)

    def __repr__(self) -> str:
        return f"|{self.matter.value},{self.photons}>"


def excitation_number(state: BareState) -> int:
    """Total excitation carried by a bare state: photons plus matter occupancy."""
    return state.excitation


def _ordered_states(n_exc: int) -> tuple[BareState, ...]:
    # ascending excitation; within a manifold G before X (photons are then
    # fixed by the manifold, so no further tie-break is ever exercised)
    states: list[BareState] = []
    for k in range(n_exc + 1):
        states.append(BareState(Matter.G, k))
        if k >= 1:
            states.append(BareState(Matter.X, k - 1))
    return tuple(states)


@dataclass(frozen=True)
class Basis:
    """All bare states with excitation <= n_exc, in a fixed reproducible order."""

    n_exc: int
    states: tuple[BareState, ...]
    _index: dict[BareState, int] = field(repr=False, compare=False, hash=False, default_factory=dict)

    @property
    def dimension(self) -> int:
        return len(self.states)

    def __contains__(self, state: BareState) -> bool:
        return state in self._index

    def index(self, state: BareState) -> int:
        """Position of a state, raising KeyError when it lies outside the truncation."""
        return self._index[state]


def build_basis(n_exc: int) -> Basis:
    """Construct the excitation-ordered basis for truncation manifold ``n_exc``."""
    if n_exc < 0:
        raise ValueError(f"n_exc must be >= 0, got {n_exc}")
    states = _ordered_states(n_exc)
    index = {s: i for i, s in enumerate(states)}
    return Basis(n_exc=n_exc, states=states, _index=index)


def index_of(basis: Basis, state: BareState) -> int | None:
    """Index of ``state`` in ``basis``, or None when its excitation exceeds n_exc."""
    return basis._index.get(state)
