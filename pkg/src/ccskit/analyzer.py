"""Exact and approximate survivor analysis for the fragmented tree code.

An erroneous candidate path is a sequence of list indices; only the
collision structure of that sequence matters for its survival
probability, so index sequences are grouped into equivalence classes
represented by pattern sequences.  For each class the distribution of
the number of effective (statistically discriminating) parity bits is
carried as a sparse probability generating function with exact dyadic
coefficients.  Evaluating the class PGF at one half gives the class
survival probability, and the class-size weighted sum over all classes
yields the expected number of erroneous surviving paths per root.

A separate closed form covers the regime where all information
fragments are distinct, and both feed the column-reduction ratio of the
pruned slot solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, FrozenSet, Sequence, Tuple

import numpy as np

from .dyadic import ONE, ZERO, Dyadic
from .seeds import make_rng

ENUMERATION_GUARD = 12  # Bell numbers grow too fast past this pattern length


class GuardError(RuntimeError):
    """An enumeration or feasibility guard was exceeded."""


@dataclass(frozen=True)
class PatternSequence:
    """Canonical representative of an index-sequence equivalence class.

    entries[0] == 1, and every later entry either reuses an earlier
    entry's value or introduces position+1 as a fresh value.
    """

    entries: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(int(v) for v in self.entries))
        e = self.entries
        if not e or e[0] != 1:
            raise ValueError("pattern sequences start with 1")
        for ell in range(1, len(e)):
            if e[ell] != ell + 1 and e[ell] not in e[:ell]:
                raise ValueError(f"invalid entry {e[ell]} at position {ell}")

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, i: int) -> int:
        return self.entries[i]

    @property
    def distinct(self) -> int:
        """d(s): the number of distinct values in the sequence."""
        return len(set(self.entries))


@dataclass(frozen=True)
class BlockSets:
    """Classification of the other sub-block positions relative to
    position q, used by the conditional survival factors.

    under/over refer to positions before/after q; G collects positions
    at a different level than q, Q positions at the same level.  The
    plain sets live in the complement of S, the tilde sets inside S.
    """

    under_G: FrozenSet[int]
    under_Q: FrozenSet[int]
    over_G: FrozenSet[int]
    over_Q: FrozenSet[int]
    under_G_tilde: FrozenSet[int]
    under_Q_tilde: FrozenSet[int]


@lru_cache(maxsize=None)
def stirling2(n: int, j: int) -> int:
    """Stirling number of the second kind, S(n, j)."""
    if n < 0 or j < 0:
        raise ValueError("negative arguments")
    if j > n:
        return 0
    if n == 0:
        return 1  # j == 0 here
    if j == 0:
        return 0
    return stirling2(n - 1, j - 1) + j * stirling2(n - 1, j)


def bell(n: int) -> int:
    """The nth Bell number, sum of S(n, j) over j."""
    if n < 0:
        raise ValueError("negative argument")
    return sum(stirling2(n, j) for j in range(n + 1))


def enumerate_patterns(j: int) -> list:
    """All pattern sequences of length j, in the order produced by growing
    each shorter sequence with every existing value and then the fresh one."""
    if j < 1:
        raise ValueError("pattern length must be >= 1")
    seqs = [(1,)]
    for length in range(1, j):
        grown = []
        for s in seqs:
            for v in sorted(set(s)):
                grown.append(s + (v,))
            grown.append(s + (length + 1,))
        seqs = grown
    return [PatternSequence(s) for s in seqs]


def pattern_of(indices: Sequence[int]) -> PatternSequence:
    """Canonical representative of an index sequence: fresh values become
    position+1, repeats copy the entry of their first occurrence."""
    if not indices:
        raise ValueError("empty index sequence")
    entries = []
    first_seen: Dict[int, int] = {}
    for q, idx in enumerate(indices):
        if idx in first_seen:
            entries.append(entries[first_seen[idx]])
        else:
            first_seen[idx] = q
            entries.append(q + 1)
    return PatternSequence(tuple(entries))


def class_size(s: PatternSequence, K: int) -> int:
    """n(s): how many index sequences over [1:K] with a fixed root map to s.

    Falling factorial (K-1)(K-2)...(K-(d-1)); the empty product for
    d(s) = 1, and zero when s needs more distinct indices than exist.
    """
    if K < 1:
        raise ValueError("K must be positive")
    out = 1
    for t in range(1, s.distinct):
        out *= K - t
        if out <= 0:
            return 0
    return out


def _mismatch_weight(s: PatternSequence, q: int, m: Sequence[int]) -> int:
    """Sum of m_a over positions a < q whose level differs from s(q)."""
    sq = s[q]
    return sum(m[a] for a in range(q) if s[a] != sq)


def prob_A(q: int, s: PatternSequence, m: Sequence[int]) -> Dyadic:
    """Probability that the parity bits of sub-block q are non-discriminating
    for class s: every fragment position below q at a different level must
    collide, each an independent 2**(-m_a) event."""
    if not 1 <= q <= len(s) - 1:
        raise ValueError(f"q must be in [1, {len(s) - 1}]")
    return Dyadic.pow2(-_mismatch_weight(s, q, m))


def block_sets(q: int, S: FrozenSet[int], s: PatternSequence) -> BlockSets:
    """Split the positions other than q by side, level match, and S membership."""
    j = len(s)
    if not 1 <= q <= j - 1:
        raise ValueError(f"q must be in [1, {j - 1}]")
    S = frozenset(S)
    if not S <= set(range(1, j)):
        raise ValueError("S must be a subset of [1:j-1]")
    sq = s[q]
    under = range(1, q)
    over = range(q + 1, j)
    return BlockSets(
        under_G=frozenset(k for k in under if k not in S and s[k] != sq),
        under_Q=frozenset(k for k in under if k not in S and s[k] == sq),
        over_G=frozenset(k for k in over if k not in S and s[k] != sq),
        over_Q=frozenset(k for k in over if k not in S and s[k] == sq),
        under_G_tilde=frozenset(k for k in under if k in S and s[k] != sq),
        under_Q_tilde=frozenset(k for k in under if k in S and s[k] == sq),
    )


def _conditional_weight(s: PatternSequence, q: int, under_Q: FrozenSet[int],
                        m: Sequence[int]) -> int:
    """Exponent of the conditional non-discrimination factor for position q.

    Conditioning on the most recent same-level position p already forces
    the collisions counted there, so its weight is subtracted; with no
    same-level position below q the factor is unconditional.
    """
    t = _mismatch_weight(s, q, m)
    if under_Q:
        p = max(under_Q)
        t -= _mismatch_weight(s, p, m)
    return t


def prob_E(s: PatternSequence, S, m: Sequence[int]) -> Dyadic:
    """Probability that exactly the parity groups q in S are statistically
    discriminating for class s, and those outside S are not.

    Factors over positions: complement positions contribute the chained
    conditional collision probability; positions in S contribute the
    complementary factor, short-circuited by the two structural cases
    (a later same-level position outside S forces non-discrimination; an
    earlier same-level position inside S forces discrimination).
    """
    j = len(s)
    S = frozenset(S)
    if not S <= set(range(1, j)):
        raise ValueError("S must be a subset of [1:j-1]")
    result = ONE
    for q in range(1, j):
        sets = block_sets(q, S, s)
        if q not in S:
            result = result * Dyadic.pow2(-_conditional_weight(s, q, sets.under_Q, m))
        else:
            if sets.over_Q:
                return ZERO
            if sets.under_Q_tilde:
                continue  # factor is exactly 1
            g = Dyadic.pow2(-_conditional_weight(s, q, sets.under_Q, m))
            factor = ONE - g
            if not factor:
                return ZERO
            result = result * factor
    return result


@dataclass(frozen=True)
class SparsePgf:
    """A PGF stored as {exponent: coefficient} with exact coefficients.

    Exponents are the achievable totals of discriminating parity bits;
    coefficients are Dyadic probabilities summing to one.
    """

    terms: Dict[int, Dyadic]

    def coefficient(self, t: int) -> Dyadic:
        return self.terms.get(t, ZERO)

    def total(self) -> Dyadic:
        out = ZERO
        for c in self.terms.values():
            out = out + c
        return out

    def at_half(self) -> Dyadic:
        """Phi(1/2), the survival probability of the class, exactly."""
        out = ZERO
        for t, c in self.terms.items():
            out = out + c * Dyadic.pow2(-t)
        return out

    def evaluate(self, x: float) -> float:
        return float(sum(float(c) * x**t for t, c in self.terms.items()))


def pgf(s: PatternSequence, m: Sequence[int], l: Sequence[int]) -> SparsePgf:
    """PGF of the number of discriminating parity bits for class s:
    sweep all subsets S of [1:j-1], weight x**(sum of l_q over S) by
    prob_E, merging subsets that land on the same exponent."""
    j = len(s)
    if len(m) < j or len(l) < j:
        raise ValueError(f"profiles must cover {j} slots")
    positions = list(range(1, j))
    terms: Dict[int, Dyadic] = {}
    for mask in range(1 << len(positions)):
        S = frozenset(positions[i] for i in range(len(positions)) if (mask >> i) & 1)
        p = prob_E(s, S, m)
        if not p:
            continue
        t = sum(l[q] for q in S)
        terms[t] = terms.get(t, ZERO) + p
    return SparsePgf(terms)


def expected_survivors_exact(K: int, m: Sequence[int], l: Sequence[int],
                             stage: int) -> float:
    """E[L_stage]: expected erroneous paths per root surviving stages
    1..stage, by exact enumeration of all pattern classes of length
    stage+1.  The valid path contributes the subtracted one."""
    j = stage + 1
    if stage < 1:
        raise ValueError("stage must be >= 1")
    if j > ENUMERATION_GUARD:
        raise GuardError(
            f"pattern length {j} exceeds the enumeration guard "
            f"({ENUMERATION_GUARD}); Bell-number growth makes this infeasible"
        )
    if len(m) < j or len(l) < j:
        raise ValueError(f"profiles must cover {j} slots")
    total = ZERO
    for s in enumerate_patterns(j):
        total = total + class_size(s, K) * pgf(s, m, l).at_half()
    return float(total - 1)


def expected_survivors_approx(K: int, l: Sequence[int], stage: int) -> float:
    """Closed-form E[L_stage] in the distinct-fragments regime:
    sum over q of K**(stage-q) (K-1) prod_{i=q}^{stage} 2**(-l_i)."""
    if stage < 1:
        raise ValueError("stage must be >= 1")
    if len(l) < stage + 1:
        raise ValueError(f"l must cover slots 0..{stage}")
    total = 0.0
    tail = 1.0
    for q in range(stage, 0, -1):
        tail *= 2.0 ** (-l[q])
        total += K ** (stage - q) * (K - 1) * tail
    return total


def reduction_ratio(K: int, l: Sequence[int], slot: int,
                    survivors: str = "leading",
                    paths_stage: int = None) -> float:
    """Expected fraction of sensing-matrix columns kept at ``slot``:
    1 - (1 - 2**-l_slot)**P with P = K (1 + E[L]).

    survivors selects the E[L] plugged in: "leading" keeps only the
    (K-1) 2**(-l_j) term (this is what the published column-reduction
    curves use; it also makes equal-l slots coincide), "full" uses the
    complete closed form.  paths_stage overrides which stage's survivor
    count drives P; the measured ratio of an interleaved decoder at slot
    j is governed by the paths alive after stage j-1, not j.
    """
    if slot < 0:
        raise ValueError("slot must be >= 0")
    if slot == 0:
        return 1.0
    if len(l) < slot + 1:
        raise ValueError(f"l must cover slots 0..{slot}")
    stage = slot if paths_stage is None else paths_stage
    if stage < 1:
        ell = 0.0
    elif survivors == "leading":
        ell = (K - 1) * 2.0 ** (-l[stage])
    elif survivors == "full":
        ell = expected_survivors_approx(K, l, stage)
    else:
        raise ValueError(f"unknown survivors convention {survivors!r}")
    P = K * (1.0 + ell)
    return 1.0 - (1.0 - 2.0 ** (-l[slot])) ** P


# ---------------------------------------------------------------------------
# Brute-force Monte Carlo oracle
# ---------------------------------------------------------------------------

ORACLE_MAX_K = 6
ORACLE_MAX_STAGE = 5


def mc_survivor_oracle(K: int, m: Sequence[int], l: Sequence[int], stage: int,
                       trials: int, seed: int) -> tuple:
    """Monte Carlo estimate of E[L_stage] by exhaustive path enumeration.

    Per trial: draw K i.i.d. uniform messages and fresh Rademacher
    generator blocks, enumerate all K**stage candidate paths from one
    root, and count the erroneous ones whose parity fields pass every
    stage.  Independent of the stitcher implementation: the check is the
    raw linear consistency condition.  Returns (mean, standard error).
    """
    if K > ORACLE_MAX_K or stage > ORACLE_MAX_STAGE:
        raise GuardError(
            f"oracle guard exceeded (K <= {ORACLE_MAX_K}, stage <= {ORACLE_MAX_STAGE})"
        )
    if stage < 1:
        raise ValueError("stage must be >= 1")
    if len(m) < stage + 1 or len(l) < stage + 1:
        raise ValueError(f"profiles must cover slots 0..{stage}")
    rng = make_rng(seed, "survivor-oracle")
    n_paths = K**stage
    # Candidate index tuples (i_1..i_stage); the root index is fixed at 0.
    grids = np.meshgrid(*[np.arange(K)] * stage, indexing="ij")
    tuples = np.stack([g.reshape(-1) for g in grids], axis=1)  # (n_paths, stage)
    counts = np.empty(trials, dtype=np.int64)
    chunk = max(1, min(trials, 1 << 22) // max(1, n_paths))
    done = 0
    while done < trials:
        T = min(chunk, trials - done)
        counts[done:done + T] = _oracle_chunk(K, m, l, stage, T, tuples, rng)
        done += T
    counts = counts - 1  # the all-zero tuple (the valid path) always survives
    mean = float(counts.mean())
    stderr = float(counts.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    return mean, stderr


def _oracle_chunk(K, m, l, stage, T, tuples, rng):
    """Survivor totals for T independent trials, fully vectorised.

    frag[t, i, ell] is message i's fragment at slot ell; the per-block
    linear maps are tabulated over all 2**m_ell inputs so candidate
    parities become gather-and-XOR operations.
    """
    frag = np.empty((T, K, stage), dtype=np.int64)
    for ell in range(stage):
        frag[:, :, ell] = rng.integers(0, 1 << m[ell], size=(T, K), dtype=np.int64)
    # tables[ell][q]: (T, 2**m_ell) lookup of v -> v G_{ell,q-1} for slot q.
    tables = {}
    for q in range(1, stage + 1):
        for ell in range(q):
            rows = rng.integers(0, 1 << l[q], size=(T, m[ell]), dtype=np.int64)
            tbl = np.zeros((T, 1 << m[ell]), dtype=np.int64)
            for v in range(1, 1 << m[ell]):
                low = v & -v
                tbl[:, v] = tbl[:, v ^ low] ^ rows[:, low.bit_length() - 1]
            tables[(ell, q)] = tbl
    alive = np.ones((T, tuples.shape[0]), dtype=bool)
    for q in range(1, stage + 1):
        check = np.zeros((T, tuples.shape[0]), dtype=np.int64)
        iq = tuples[:, q - 1]  # i_q for every candidate tuple
        for ell in range(q):
            # Fragment of the path at slot ell: the root for ell = 0.
            src = np.zeros_like(iq) if ell == 0 else tuples[:, ell - 1]
            tbl = tables[(ell, q)]
            path_frag = frag[:, :, ell][:, src]   # (T, n_paths)
            cand_frag = frag[:, :, ell][:, iq]
            check ^= np.take_along_axis(tbl, path_frag ^ cand_frag, axis=1)
        alive &= check == 0
    return alive.sum(axis=1)
