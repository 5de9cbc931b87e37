"""Binary-antipodal beamformer search.

The core routine, :func:`build_candidates`, solves ``max |b^H q|`` over
``b in {+1,-1}^N`` exactly with only N candidates. Let phi_i be the phase of
q_i. Phases in [pi/2, 3*pi/2] are rotated by -pi with the sign recorded,
which puts all of them in [-pi/2, pi/2). For any reference angle phi the
best b is sign(cos(phi - phi_i)). As phi sweeps over a half-turn, that
pattern is always a "prefix of ones" in sorted-phase order, so the N
prefixes cover every pattern that can be optimal.

The exhaustive routines are oracles for small N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GuardError",
    "SignVector",
    "CandidateSet",
    "objective",
    "build_candidates",
    "maximize_rank1",
    "exhaustive_rank1",
    "joint_pair_select",
    "exhaustive_pair",
    "RANK1_GUARD",
    "PAIR_GUARD",
]

RANK1_GUARD = 20
PAIR_GUARD = 22


class GuardError(ValueError):
    """An exhaustive search was requested above its dimension guard."""


@dataclass(frozen=True, eq=False)
class SignVector:
    """A {+1, -1} pattern; the beamformer column is ``signs / sqrt(N)``."""

    signs: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.signs, dtype=np.int8).ravel()
        if s.size < 1 or not np.all(np.abs(s) == 1):
            raise ValueError("signs must be a nonempty vector over {+1, -1}")
        s.flags.writeable = False
        object.__setattr__(self, "signs", s)

    def __len__(self) -> int:
        return self.signs.size

    def __eq__(self, other) -> bool:
        return isinstance(other, SignVector) and np.array_equal(self.signs, other.signs)

    def __hash__(self) -> int:
        return hash(self.signs.tobytes())

    @property
    def scale(self) -> float:
        return 1.0 / math.sqrt(self.signs.size)

    @property
    def vector(self) -> np.ndarray:
        return self.signs * self.scale

    def __neg__(self) -> SignVector:
        return SignVector(-self.signs)


@dataclass(frozen=True)
class CandidateSet:
    candidates: tuple[SignVector, ...]

    def __len__(self) -> int:
        return len(self.candidates)

    def __iter__(self):
        return iter(self.candidates)

    def __getitem__(self, i) -> SignVector:
        return self.candidates[i]

    def matrix(self) -> np.ndarray:
        """Scaled candidates as columns (N x len)."""
        return np.column_stack([c.vector for c in self.candidates])


def objective(b: SignVector, q) -> float:
    """|b^H q| with the 1/sqrt(N) scale applied."""
    return float(abs(np.vdot(b.vector, np.asarray(q, dtype=np.complex128))))


def _as_vector(q) -> np.ndarray:
    q = np.asarray(q, dtype=np.complex128).ravel()
    if q.size < 1:
        raise ValueError("q must have at least one entry")
    if not np.all(np.isfinite(q)):
        raise ValueError("q contains NaN or Inf entries")
    if not np.any(q != 0):
        raise ValueError("q must be nonzero")
    return q


def _candidate_signs(q: np.ndarray) -> np.ndarray:
    """Candidate sign patterns as an N x N int8 matrix, one per column."""
    n = q.size
    # wrap into [-pi/2, 3*pi/2) so the fold split below is exhaustive
    phases = np.mod(np.angle(q) + 0.5 * np.pi, 2.0 * np.pi) - 0.5 * np.pi
    phases[phases >= 1.5 * np.pi] -= 2.0 * np.pi  # mod may round up to the divisor
    flipped = phases >= 0.5 * np.pi
    folded = np.where(flipped, phases - np.pi, phases)
    order = np.argsort(folded, kind="stable")
    # column k: ones on the first k+1 sorted coordinates, minus ones elsewhere
    sorted_patterns = np.where(np.arange(n)[:, None] <= np.arange(n)[None, :], 1, -1).astype(np.int8)
    patterns = np.empty_like(sorted_patterns)
    patterns[order, :] = sorted_patterns
    patterns[flipped, :] *= -1
    return patterns


def build_candidates(q) -> CandidateSet:
    """The N candidate sign vectors that contain the maximizer of ``|b^H q|``."""
    q = _as_vector(q)
    pats = _candidate_signs(q)
    return CandidateSet(tuple(SignVector(pats[:, k]) for k in range(q.size)))


def maximize_rank1(q) -> SignVector:
    """Exact maximizer of ``|b^H q|``; ties go to the lowest candidate index."""
    q = _as_vector(q)
    pats = _candidate_signs(q)
    vals = np.abs(pats.T.astype(float) @ q)
    return SignVector(pats[:, int(np.argmax(vals))])


def _quotient_patterns(n: int) -> np.ndarray:
    """All 2**(n-1) sign patterns with first entry +1, rows in lexicographic order (+1 < -1)."""
    idx = np.arange(2 ** (n - 1), dtype=np.int64)
    shifts = np.arange(n - 2, -1, -1, dtype=np.int64)
    bits = (idx[:, None] >> shifts[None, :]) & 1
    pats = np.ones((idx.size, n), dtype=np.int8)
    pats[:, 1:] = 1 - 2 * bits
    return pats


def exhaustive_rank1(q) -> SignVector:
    """Brute-force maximizer of ``|b^H q|`` with b[0] = +1.

    Raises:
        GuardError: ``len(q) > RANK1_GUARD``.
    """
    q = _as_vector(q)
    if q.size > RANK1_GUARD:
        raise GuardError(f"exhaustive guard exceeded: N={q.size} > {RANK1_GUARD}")
    pats = _quotient_patterns(q.size)
    vals = np.abs(pats.astype(float) @ q)
    return SignVector(pats[int(np.argmax(vals))])


def _check_pair_shapes(q: np.ndarray, nt: int, nr: int) -> None:
    if q.shape != (nr, nt):
        raise ValueError(f"Q has shape {q.shape}, candidates imply ({nr}, {nt})")


def joint_pair_select(q, fcands: CandidateSet, wcands: CandidateSet) -> tuple[SignVector, SignVector]:
    """Pick ``(f, w)`` maximizing ``|w^H Q f|`` over the candidate product set.

    Ties go to the lowest (w index, f index).
    """
    q = np.asarray(q, dtype=np.complex128)
    if q.ndim != 2:
        raise ValueError("Q must be a matrix")
    fmat = fcands.matrix()
    wmat = wcands.matrix()
    _check_pair_shapes(q, fmat.shape[0], wmat.shape[0])
    vals = np.abs(wmat.T @ (q @ fmat))  # rows: w index, cols: f index
    iw, jf = np.unravel_index(int(np.argmax(vals)), vals.shape)
    return fcands[jf], wcands[iw]


def exhaustive_pair(q) -> tuple[SignVector, SignVector]:
    """Brute-force ``(f, w)`` maximizing ``|w^H Q f|`` with f[0] = w[0] = +1.

    Raises:
        GuardError: ``N_t + N_r > PAIR_GUARD``.
    """
    q = np.asarray(q, dtype=np.complex128)
    if q.ndim != 2:
        raise ValueError("Q must be a matrix")
    nr, nt = q.shape
    if nt + nr > PAIR_GUARD:
        raise GuardError(f"exhaustive guard exceeded: N_t + N_r = {nt + nr} > {PAIR_GUARD}")
    fp = _quotient_patterns(nt).astype(float)
    wp = _quotient_patterns(nr).astype(float)
    vals = np.abs(wp @ q @ fp.T) / math.sqrt(nt * nr)
    iw, jf = np.unravel_index(int(np.argmax(vals)), vals.shape)
    return SignVector(fp[jf]), SignVector(wp[iw])
