"""Channel realizations and CSIT patterns.

A pattern is a K x n grid of CSIT states. Its text form lists one string
per slot, each string giving the state of users 1..K in that slot, e.g.
``"NDD,DND,DDN,PPN,PNP"``.
"""

from __future__ import annotations

import csv
import enum
import itertools
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import UnsupportedError

_MASK64 = (1 << 64) - 1
_CHANNEL_STREAM = 0


class CsitState(enum.Enum):
    PERFECT = "P"
    DELAYED = "D"
    NONE = "N"

    @property
    def order(self) -> int:
        return _STATE_ORDER[self]

    def __lt__(self, other):
        if not isinstance(other, CsitState):
            return NotImplemented
        return self.order < other.order

    def __str__(self):
        return self.value


_STATE_ORDER = {CsitState.PERFECT: 0, CsitState.DELAYED: 1, CsitState.NONE: 2}
P, D, N = CsitState.PERFECT, CsitState.DELAYED, CsitState.NONE


@dataclass(frozen=True)
class CsitPattern:
    """CSIT states of K users over n slots.

    ``slots[t][i]`` is the state of user ``i`` (0-based) in slot ``t``.
    """

    slots: tuple[tuple[CsitState, ...], ...]

    def __post_init__(self):
        if not self.slots:
            raise ValueError("pattern needs at least one slot")
        K = len(self.slots[0])
        if K == 0:
            raise ValueError("pattern needs at least one user")
        for t, slot in enumerate(self.slots):
            if len(slot) != K:
                raise ValueError(f"slot {t} has {len(slot)} users, expected {K}")
            for s in slot:
                if not isinstance(s, CsitState):
                    raise ValueError(f"invalid state {s!r} in slot {t}")

    @classmethod
    def parse(cls, text: str) -> "CsitPattern":
        parts = [p.strip() for p in text.strip().strip("()").split(",")]
        try:
            slots = tuple(tuple(CsitState(ch) for ch in part) for part in parts)
        except ValueError as exc:
            raise ValueError(f"cannot parse CSIT pattern {text!r}") from exc
        return cls(slots)

    @property
    def K(self) -> int:
        return len(self.slots[0])

    @property
    def n(self) -> int:
        return len(self.slots)

    def state(self, user: int, slot: int) -> CsitState:
        return self.slots[slot][user]

    def users_in(self, slot: int, state: CsitState) -> list[int]:
        return [i for i, s in enumerate(self.slots[slot]) if s is state]

    def counts(self) -> Counter:
        return Counter(s for slot in self.slots for s in slot)

    def __str__(self):
        return ",".join("".join(s.value for s in slot) for slot in self.slots)


def state_fractions(pattern: CsitPattern) -> tuple[Fraction, Fraction, Fraction]:
    """Exact fractions (lambda_P, lambda_D, lambda_N) of (user, slot) cells."""
    counts = pattern.counts()
    total = pattern.n * pattern.K
    return tuple(Fraction(counts[s], total) for s in (P, D, N))


def per_user_perfect_fraction(pattern: CsitPattern, i: int) -> Fraction:
    """Fraction of slots with perfect CSIT for user ``i`` (0-based)."""
    if not 0 <= i < pattern.K:
        raise ValueError(f"user index {i} outside 0..{pattern.K - 1}")
    hits = sum(1 for slot in pattern.slots if slot[i] is P)
    return Fraction(hits, pattern.n)


def icr_pattern(K: int) -> CsitPattern:
    """The (2K-1)-slot pattern driving the two-phase scheme.

    Phase-1 slot t (1..K) has user t without CSIT and all others delayed.
    Phase-2 slot K+m (m = 1..K-1) has user K+1-m without CSIT and all
    others perfect, so user 1 is perfect throughout phase 2.
    """
    if K < 2:
        raise ValueError("the two-phase pattern needs K >= 2")
    slots = []
    for t in range(K):
        slots.append(tuple(N if i == t else D for i in range(K)))
    for m in range(1, K):
        r = K - m
        slots.append(tuple(N if i == r else P for i in range(K)))
    return CsitPattern(tuple(slots))


@dataclass(frozen=True)
class ChannelRealization:
    """Channel rows ``H[t, i, :]`` from the K antennas to receiver i in slot t."""

    K: int
    n: int
    seed: int
    H: np.ndarray = field(repr=False)

    def row(self, i: int, t: int) -> np.ndarray:
        """Row of receiver ``i`` in slot ``t`` (both 0-based)."""
        return self.H[t, i]

    def to_csv(self, path) -> None:
        """Write columns slot, rx, tx, re, im (1-based indices)."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["slot", "rx", "tx", "re", "im"])
            for t in range(self.n):
                for i in range(self.K):
                    for k in range(self.K):
                        h = self.H[t, i, k]
                        writer.writerow([t + 1, i + 1, k + 1,
                                         f"{h.real:.12g}", f"{h.imag:.12g}"])


def complex_gaussian(seed: int, counter: tuple[int, ...], size: int) -> np.ndarray:
    """Unit-variance circularly symmetric samples keyed by ``(seed, counter)``.

    Uses a counter-based generator so any cell of a grid can be drawn
    independently of the order in which other cells are drawn.
    """
    ctr = list(counter) + [0] * (4 - len(counter))
    bitgen = np.random.Philox(counter=ctr, key=[seed & _MASK64, 0])
    z = np.random.Generator(bitgen).standard_normal(2 * size)
    return (z[:size] + 1j * z[size:]) / np.sqrt(2.0)


def sample_channel(K: int, n: int, seed: int) -> ChannelRealization:
    """I.i.d. CN(0, 1) channel rows for K receivers over n slots."""
    if K < 1 or n < 1:
        raise ValueError("K and n must be positive")
    H = np.empty((n, K, K), dtype=complex)
    for t in range(n):
        for i in range(K):
            H[t, i] = complex_gaussian(seed, (_CHANNEL_STREAM, t, i), K)
    H.setflags(write=False)
    return ChannelRealization(K=K, n=n, seed=seed, H=H)


def _is_synergistic(pattern: CsitPattern) -> bool:
    # Local import: scheme depends on this module.
    from .scheme import plan_transmission

    try:
        plan = plan_transmission(pattern)
    except ValueError:
        return False
    K = pattern.K
    return all(sorted(plan.row_sources(i)) == list(range(K)) for i in range(K))


def enumerate_synergistic_patterns(K: int = 3) -> list[CsitPattern]:
    """All 5-slot 3-user patterns on which the two-phase scheme decodes.

    Candidates are every phase-1 triple with one N and two D's per slot
    followed by every phase-2 pair with one N and two P's per slot. A
    candidate is kept when the transmission plan exists and gives every
    receiver combinations built from K distinct channel rows.
    """
    if K != 3:
        raise UnsupportedError("exhaustive pattern search is only defined for K = 3")
    phase1_slots = [tuple(N if i == u else D for i in range(K)) for u in range(K)]
    phase2_slots = [tuple(N if i == u else P for i in range(K)) for u in range(K)]
    found = []
    for first in itertools.product(phase1_slots, repeat=K):
        for second in itertools.product(phase2_slots, repeat=K - 1):
            pattern = CsitPattern(first + second)
            if _is_synergistic(pattern):
                found.append(pattern)
    return sorted(found, key=lambda p: [[s.order for s in slot] for slot in p.slots])


def group_patterns(patterns, K: int = 3) -> tuple[frozenset, frozenset]:
    """Split patterns into their distinct phase-1 and phase-2 parts.

    Returns the set of phase-1 K-slot strings and the set of phase-2
    (K-1)-slot strings; a complete product of the two is what the
    tabulated listing describes.
    """
    first, second = set(), set()
    for p in patterns:
        text = str(p).split(",")
        first.add(",".join(text[:K]))
        second.add(",".join(text[K:]))
    return frozenset(first), frozenset(second)


def relabel(pattern: CsitPattern, perm) -> CsitPattern:
    """Pattern in which user ``perm[u]`` plays the role user ``u`` had."""
    perm = list(perm)
    if sorted(perm) != list(range(pattern.K)):
        raise ValueError(f"{perm} is not a permutation of the users")
    slots = []
    for slot in pattern.slots:
        new = [None] * pattern.K
        for u, s in enumerate(slot):
            new[perm[u]] = s
        slots.append(tuple(new))
    return CsitPattern(tuple(slots))
