"""Mutually unbiased bases and the U (basis-changing) / V (veto) generators.

Index conventions: basis ``j`` runs over the quadratic-phase bases first and
the computational basis (when present) last.  For ``d = 4`` the family is the
fixed pair ``B1`` (index 0) and ``B2`` (index 1).  Vector indices are 0-based;
``state_label`` renders the 1-based ``S_i_j`` names used in reports.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np

from .errors import RejectedInput
from .qudit import (
    TOL,
    BasisSet,
    DiagonalUnitary,
    QuditState,
    equal_up_to_global_phase,
    power_of_diagonal,
    root_of_unity,
)

ODD_PRIMES = (3, 5, 7, 11, 13)
FAMILY_DIMS = (2, 4) + ODD_PRIMES
U_DIMS = (2, 4, 9) + ODD_PRIMES
V_DIMS = FAMILY_DIMS

_B1 = np.array(
    [[1, 1, 1, 1],
     [1, 1j, -1, -1j],
     [1, -1, 1, -1],
     [1, -1j, -1, 1j]]
) / 2
_B2 = np.array(
    [[1, 1, 1, -1],
     [1, 1j, -1, 1j],
     [1, -1, 1, 1],
     [-1, 1j, 1, 1j]]
) / 2


class StateId(NamedTuple):
    basis: int
    vector: int


@dataclass(frozen=True, eq=False)
class MubFamily:
    dim: int
    bases: tuple
    includes_computational: bool

    def __post_init__(self):
        for b in self.bases:
            if b.dim != self.dim:
                raise RejectedInput("basis dimension differs from family dimension")

    def __len__(self):
        return len(self.bases)

    def state(self, sid) -> QuditState:
        j, l = sid
        if not (0 <= j < len(self.bases) and 0 <= l < self.dim):
            raise RejectedInput(f"no state {tuple(sid)} in a {len(self.bases)}-basis family of dim {self.dim}")
        return self.bases[j].states[l]

    @property
    def protocol_bases(self) -> tuple:
        """Indices of the bases the flying-particle protocol draws from.

        The computational basis is fixed by both U and V, so it is useless for
        hiding or counting and is left out.
        """
        n = len(self.bases) - 1 if self.includes_computational else len(self.bases)
        return tuple(range(n))

    def max_cross_overlap_error(self) -> float:
        """Largest deviation of |<a|b>|^2 from 1/dim over states in distinct bases."""
        mats = [b.matrix() for b in self.bases]
        worst = 0.0
        for i in range(len(mats)):
            for k in range(i + 1, len(mats)):
                overlaps = np.abs(mats[i].conj().T @ mats[k]) ** 2
                worst = max(worst, float(np.max(np.abs(overlaps - 1.0 / self.dim))))
        return worst


def state_label(sid) -> str:
    """``StateId(0, 1)`` -> ``"S_1_2"`` (1-based, as in the experiment tables)."""
    return f"S_{sid[0] + 1}_{sid[1] + 1}"


def parse_state_label(label: str) -> StateId:
    try:
        _, i, j = label.replace(",", "_").split("_")
        return StateId(int(i) - 1, int(j) - 1)
    except ValueError:
        raise RejectedInput(f"bad state label {label!r}, expected e.g. 'S_1_2'") from None


def basis_label(j: int) -> str:
    return f"B{j + 1}"


def parse_basis_label(label: str) -> int:
    if not label.upper().startswith("B") or not label[1:].isdigit():
        raise RejectedInput(f"bad basis label {label!r}, expected e.g. 'B1'")
    return int(label[1:]) - 1


def _quadratic_basis(d: int, j: int) -> BasisSet:
    k = np.arange(d)
    cols = [
        np.array([root_of_unity(d, int(kk * l + j * kk * kk)) for kk in k]) / np.sqrt(d)
        for l in range(d)
    ]
    return BasisSet(tuple(QuditState(c) for c in cols))


def _computational(d: int) -> BasisSet:
    return BasisSet(tuple(QuditState.basis_state(d, k) for k in range(d)))


@lru_cache(maxsize=None)
def build_mub_family(d: int) -> MubFamily:
    if d not in FAMILY_DIMS:
        raise RejectedInput(f"unsupported dimension {d}; supported: {FAMILY_DIMS}")
    if d == 4:
        return MubFamily(4, (BasisSet.from_columns(_B1), BasisSet.from_columns(_B2)), False)
    if d == 2:
        s = 1 / np.sqrt(2)
        x = BasisSet.from_columns(np.array([[1, 1], [1, -1]]) * s)
        y = BasisSet.from_columns(np.array([[1, 1], [1j, -1j]]) * s)
        return MubFamily(2, (x, y, _computational(2)), True)
    bases = tuple(_quadratic_basis(d, j) for j in range(d)) + (_computational(d),)
    return MubFamily(d, bases, True)


@lru_cache(maxsize=None)
def u_generator(d: int) -> DiagonalUnitary:
    if d not in U_DIMS:
        raise RejectedInput(f"no U generator for dimension {d}; supported: {U_DIMS}")
    if d == 2:
        return DiagonalUnitary([1, 1j])
    if d == 4:
        return DiagonalUnitary([1, 1, 1, -1])
    if d == 9:
        return DiagonalUnitary([root_of_unity(9, k) for k in (0, 0, 0, 0, 3, 6, 0, 6, 3)])
    return DiagonalUnitary([root_of_unity(d, k * k) for k in range(d)])


@lru_cache(maxsize=None)
def v_generator(d: int) -> DiagonalUnitary:
    if d not in V_DIMS:
        raise RejectedInput(f"no V generator for dimension {d}; supported: {V_DIMS}")
    if d == 4:
        return DiagonalUnitary([1, 1j, -1, -1j])
    return DiagonalUnitary([root_of_unity(d, k) for k in range(d)])


def multiplicative_order(u: DiagonalUnitary, limit: int = 256) -> int:
    """Smallest ``n >= 1`` with ``u**n == 1``."""
    ident = DiagonalUnitary.identity(u.dim)
    for n in range(1, limit + 1):
        if power_of_diagonal(u, n).allclose(ident):
            return n
    raise RejectedInput(f"order of {u!r} exceeds {limit}")


@lru_cache(maxsize=None)
def generator_orders(d: int) -> tuple:
    """``(order of U, order of V)`` for a family dimension."""
    return multiplicative_order(u_generator(d)), multiplicative_order(v_generator(d))


def identify_state(s: QuditState, family: MubFamily, tol: float = 1e-6) -> Optional[StateId]:
    """Find the family member equal to ``s`` up to global phase, or ``None``."""
    if s.dim != family.dim:
        raise RejectedInput(f"dimension mismatch: {s.dim} != {family.dim}")
    hits = [
        StateId(j, l)
        for j, basis in enumerate(family.bases)
        for l, member in enumerate(basis.states)
        if equal_up_to_global_phase(s, member, tol)
    ]
    if len(hits) > 1:
        raise RejectedInput(f"tolerance {tol} too loose: {len(hits)} family members match")
    return hits[0] if hits else None
