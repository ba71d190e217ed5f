"""Small-dimension state-vector algebra for a single qudit.

Everything here is an immutable value except :class:`SeededRng`.  States and
diagonal unitaries are stored as ``complex128`` numpy vectors; comparisons use
``TOL`` unless a caller passes its own tolerance.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import RejectedInput

TOL = 1e-10
NORM_TOL = 1e-12


def _as_vector(values: Iterable[complex]) -> np.ndarray:
    arr = np.array(list(values) if not isinstance(values, np.ndarray) else values, dtype=np.complex128)
    if arr.ndim != 1 or arr.size == 0:
        raise RejectedInput(f"expected a non-empty 1-d vector, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def _check_dims(a: int, b: int) -> None:
    if a != b:
        raise RejectedInput(f"dimension mismatch: {a} != {b}")


def root_of_unity(d: int, k: int = 1) -> complex:
    """Return e^{2 pi i k / d}; quarter turns come out exact (1, i, -1, -i)."""
    k %= d
    if (4 * k) % d == 0:
        return (1, 1j, -1, -1j)[4 * k // d]
    return complex(np.exp(2j * np.pi * k / d))


@dataclass(frozen=True, eq=False)
class QuditState:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _as_vector(self.amplitudes)
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise RejectedInput(f"state is not unit norm (|psi|^2 = {norm!r})")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, values: Iterable[complex]) -> "QuditState":
        amps = np.array(list(values) if not isinstance(values, np.ndarray) else values, dtype=np.complex128)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise RejectedInput("cannot normalize the zero vector")
        return cls(amps / norm)

    @classmethod
    def basis_state(cls, d: int, k: int) -> "QuditState":
        amps = np.zeros(d, dtype=np.complex128)
        amps[k] = 1.0
        return cls(amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def allclose(self, other: "QuditState", tol: float = TOL) -> bool:
        return self.dim == other.dim and bool(np.allclose(self.amplitudes, other.amplitudes, rtol=0, atol=tol))

    def __repr__(self):
        return f"QuditState({np.round(self.amplitudes, 6).tolist()})"


@dataclass(frozen=True, eq=False)
class DiagonalUnitary:
    phases: np.ndarray

    def __post_init__(self):
        phases = _as_vector(self.phases)
        if np.any(np.abs(np.abs(phases) - 1.0) > NORM_TOL):
            raise RejectedInput("diagonal entries must have unit modulus")
        object.__setattr__(self, "phases", phases)

    @classmethod
    def identity(cls, d: int) -> "DiagonalUnitary":
        return cls(np.ones(d, dtype=np.complex128))

    @classmethod
    def from_angles(cls, angles: Sequence[float]) -> "DiagonalUnitary":
        return cls(np.exp(1j * np.asarray(angles, dtype=float)))

    @property
    def dim(self) -> int:
        return self.phases.size

    def matrix(self) -> np.ndarray:
        return np.diag(self.phases)

    def allclose(self, other: "DiagonalUnitary", tol: float = TOL) -> bool:
        return self.dim == other.dim and bool(np.allclose(self.phases, other.phases, rtol=0, atol=tol))

    def equal_up_to_phase(self, other: "DiagonalUnitary", tol: float = TOL) -> bool:
        if self.dim != other.dim:
            return False
        ratio = self.phases * np.conj(other.phases)
        return bool(np.allclose(ratio, ratio[0], rtol=0, atol=tol))

    def __repr__(self):
        return f"DiagonalUnitary({np.round(self.phases, 6).tolist()})"


@dataclass(frozen=True, eq=False)
class BasisSet:
    """An orthonormal basis; ``states[l]`` is vector ``l``."""

    states: tuple

    def __post_init__(self):
        states = tuple(self.states)
        if not states:
            raise RejectedInput("empty basis")
        d = states[0].dim
        if len(states) != d or any(s.dim != d for s in states):
            raise RejectedInput("a basis needs exactly dim states of equal dimension")
        gram = np.array([[np.vdot(a.amplitudes, b.amplitudes) for b in states] for a in states])
        if not np.allclose(gram, np.eye(d), rtol=0, atol=TOL):
            raise RejectedInput("basis states are not orthonormal")
        object.__setattr__(self, "states", states)

    @classmethod
    def from_columns(cls, matrix: np.ndarray) -> "BasisSet":
        matrix = np.asarray(matrix, dtype=np.complex128)
        return cls(tuple(QuditState(matrix[:, l]) for l in range(matrix.shape[1])))

    @property
    def dim(self) -> int:
        return len(self.states)

    def matrix(self) -> np.ndarray:
        """Columns are the basis vectors."""
        return np.column_stack([s.amplitudes for s in self.states])

    def __len__(self):
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    def __getitem__(self, l):
        return self.states[l]


@dataclass(frozen=True, eq=False)
class OutcomeDistribution:
    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size == 0:
            raise RejectedInput("distribution must be a non-empty vector")
        if np.any(probs < -TOL):
            raise RejectedInput("negative probability")
        if abs(probs.sum() - 1.0) > TOL:
            raise RejectedInput(f"probabilities sum to {probs.sum()!r}, not 1")
        probs = np.clip(probs, 0.0, None)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def uniform(cls, d: int) -> "OutcomeDistribution":
        return cls(np.full(d, 1.0 / d))

    def __len__(self):
        return self.probs.size

    def __getitem__(self, l):
        return float(self.probs[l])


class SeededRng:
    """Seeded PCG64 stream.

    The generator is numpy's ``PCG64`` initialised from
    ``numpy.random.SeedSequence(entropy=seed, spawn_key=key)``.  ``derive`` builds
    an independent child stream for a sub-task by appending to the spawn key,
    so the stream for e.g. trial block ``(row, block)`` depends only on the
    master seed and that key, never on scheduling order.
    """

    def __init__(self, seed: int, key: tuple = ()):
        if not 0 <= int(seed) < 2**64:
            raise RejectedInput("seed must be a 64-bit unsigned integer")
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        self._gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=self.key)))

    def derive(self, *key: int) -> "SeededRng":
        return SeededRng(self.seed, self.key + tuple(key))

    def random(self, size=None):
        return self._gen.random(size)

    def integers(self, high: int, size=None):
        """Uniform integers in ``[0, high)``."""
        if size is None:
            return int(self._gen.integers(0, high))
        return self._gen.integers(0, high, size=size)

    def choice(self, items: Sequence):
        return items[self.integers(len(items))]

    def __repr__(self):
        return f"SeededRng(seed={self.seed}, key={self.key})"


def apply_diagonal(state: QuditState, u: DiagonalUnitary) -> QuditState:
    _check_dims(state.dim, u.dim)
    return QuditState(u.phases * state.amplitudes)


def compose_diagonals(a: DiagonalUnitary, b: DiagonalUnitary) -> DiagonalUnitary:
    _check_dims(a.dim, b.dim)
    return DiagonalUnitary(a.phases * b.phases)


def power_of_diagonal(u: DiagonalUnitary, n: int) -> DiagonalUnitary:
    if n < 0:
        raise RejectedInput("power must be non-negative")
    # square-and-multiply keeps entries like i and -1 exact
    out, base = np.ones(u.dim, dtype=np.complex128), u.phases
    while n:
        if n & 1:
            out = out * base
        base, n = base * base, n >> 1
    return DiagonalUnitary(out)


def inner_product(a: QuditState, b: QuditState) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    _check_dims(a.dim, b.dim)
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def born_probabilities(state: QuditState, basis: BasisSet) -> OutcomeDistribution:
    _check_dims(state.dim, basis.dim)
    amps = basis.matrix().conj().T @ state.amplitudes
    probs = np.abs(amps) ** 2
    return OutcomeDistribution(probs / probs.sum())


def _inverse_cdf(probs: np.ndarray, u):
    cdf = np.cumsum(probs)
    idx = np.searchsorted(cdf, u, side="right")
    # rounding can leave cdf[-1] a hair below 1; fall back to the last non-zero entry
    last = int(np.flatnonzero(probs > 0)[-1])
    return np.minimum(idx, last)


def sample_outcome(dist: OutcomeDistribution, rng: SeededRng) -> int:
    """Draw one outcome by inverse CDF; consumes exactly one uniform double."""
    return int(_inverse_cdf(dist.probs, rng.random()))


def sample_outcomes(dist: OutcomeDistribution, rng: SeededRng, n: int) -> np.ndarray:
    """Vectorised ``sample_outcome``: identical to ``n`` sequential calls."""
    return _inverse_cdf(dist.probs, rng.random(n))


def equal_up_to_global_phase(a: QuditState, b: QuditState, tol: float = TOL) -> bool:
    return abs(inner_product(a, b)) >= 1.0 - tol
