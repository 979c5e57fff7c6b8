"""Slot-level sparse recovery: lazy Gaussian sensing matrices, the noisy
superposition channel, column pruning, and a greedy support solver.

Columns are never materialised wholesale: column ``i`` of slot ``j`` is
regenerated on demand from (seed, slot, i) through a counter-based
Philox stream, so a pruned matrix and the original produce bit-identical
columns and paired experiments stay exactly comparable.  Dense caches
are an explicit, optional speed carve for bulk correlation work.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

_BATCH = 4096  # columns generated per Philox key


def _batch_key(seed: int, slot: int, batch: int) -> int:
    msg = f"ccskit-col/{seed}/{slot}/{batch}".encode()
    return int.from_bytes(hashlib.blake2b(msg, digest_size=16).digest(), "little")


def _raw_gaussian_batch(seed: int, slot: int, batch: int, count: int, rows: int) -> np.ndarray:
    """(count, rows) standard normal block for columns [batch*_BATCH, ...).

    One Philox stream per (seed, slot, batch) key, so any column is
    regenerable by rebuilding its batch; single-precision draws keep
    generation cheap, normalisation happens downstream in double.
    """
    gen = np.random.Generator(np.random.Philox(key=_batch_key(seed, slot, batch)))
    z = gen.standard_normal(count * rows, dtype=np.float32)
    return z.astype(np.float64).reshape(count, rows)


@dataclass
class SensingMatrix:
    """Per-slot sensing matrix with lazily generated unit-norm Gaussian columns.

    ``active`` is the ordered set of currently retained sub-block indices
    out of the index space [0, width).
    """

    slot: int
    rows: int
    width: int
    seed: int
    active: np.ndarray = None
    _dense: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.active is None:
            self.active = np.arange(self.width, dtype=np.int64)
        else:
            self.active = np.unique(np.asarray(self.active, dtype=np.int64))
            if len(self.active) and (self.active[0] < 0 or self.active[-1] >= self.width):
                raise ValueError("active indices out of range")

    def columns(self, indices: Sequence[int]) -> np.ndarray:
        """(rows, len(indices)) float64 matrix of unit-norm columns."""
        idx = np.asarray(indices, dtype=np.int64)
        if len(idx) and (idx.min() < 0 or idx.max() >= self.width):
            raise ValueError("column index out of range")
        out = np.empty((len(idx), self.rows), dtype=np.float64)
        order = np.argsort(idx, kind="stable")
        pos = 0
        while pos < len(idx):
            b = int(idx[order[pos]]) // _BATCH
            end = pos
            while end < len(idx) and int(idx[order[end]]) // _BATCH == b:
                end += 1
            count = min(_BATCH, self.width - b * _BATCH)
            block = _raw_gaussian_batch(self.seed, self.slot, b, count, self.rows)
            block /= np.linalg.norm(block, axis=1, keepdims=True)
            sel = order[pos:end]
            out[sel] = block[idx[sel] - b * _BATCH]
            pos = end
        return out.T

    def dense_active(self, dtype=np.float32) -> np.ndarray:
        """(n_active, rows) cache of the active columns, columns as rows.

        float32 by default: this exists for bulk correlation passes where
        memory is the binding constraint.
        """
        if self._dense is None or self._dense.shape[0] != len(self.active):
            if len(self.active) == self.width:
                out = np.empty((self.width, self.rows), dtype=dtype)
                for b in range((self.width + _BATCH - 1) // _BATCH):
                    count = min(_BATCH, self.width - b * _BATCH)
                    block = _raw_gaussian_batch(self.seed, self.slot, b, count, self.rows)
                    block /= np.linalg.norm(block, axis=1, keepdims=True)
                    out[b * _BATCH:b * _BATCH + count] = block
                self._dense = out
            else:
                self._dense = self.columns(self.active).T.astype(dtype)
        return self._dense

    def release(self) -> None:
        self._dense = None

    def prune(self, keep) -> "SensingMatrix":
        """Restrict to ``keep``; the column generator is untouched, so
        retained columns are bit-identical to the originals."""
        keep = np.unique(np.asarray(list(keep), dtype=np.int64))
        if len(np.setdiff1d(keep, self.active, assume_unique=True)):
            raise ValueError("keep must be a subset of the active columns")
        return SensingMatrix(self.slot, self.rows, self.width, self.seed, active=keep)


@dataclass(frozen=True)
class ChannelParams:
    """AWGN channel: per-dimension noise variance and the common transmit
    amplitude (all users share one power class)."""

    noise_variance: float
    amplitude: float = 1.0

    def __post_init__(self):
        if self.noise_variance < 0:
            raise ValueError("noise variance must be >= 0")

    def ebn0_db(self, total_bits: int, n_slots: int) -> float:
        """Eb/N0 implied by the amplitude: each message spends amplitude**2
        per slot, N0 = 2 sigma**2 per real dimension."""
        eb = n_slots * self.amplitude**2 / total_bits
        return 10.0 * np.log10(eb / (2.0 * self.noise_variance))

    @classmethod
    def from_ebn0_db(cls, ebn0_db: float, total_bits: int, n_slots: int,
                     amplitude: float = 1.0) -> "ChannelParams":
        eb = n_slots * amplitude**2 / total_bits
        sigma2 = eb / (2.0 * 10.0 ** (ebn0_db / 10.0))
        return cls(noise_variance=sigma2, amplitude=amplitude)


@dataclass(frozen=True)
class SlotObservation:
    """One slot's received vector plus the transmitted indices (scoring only)."""

    y: np.ndarray
    true_support: tuple


def transmit_slot(subblocks: Sequence[int], X: SensingMatrix, ch: ChannelParams,
                  rng) -> SlotObservation:
    """y = amplitude * sum of the chosen columns + white Gaussian noise.

    ``subblocks`` is a multiset: repeated indices superpose, doubling the
    coefficient of a shared column.  ``rng`` is a Generator or an int seed.
    """
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))
    idx = list(subblocks)
    y = np.zeros(X.rows, dtype=np.float64)
    if idx:
        cols = X.columns(idx)
        y = ch.amplitude * cols.sum(axis=1)
    if ch.noise_variance > 0:
        y = y + rng.standard_normal(X.rows) * np.sqrt(ch.noise_variance)
    return SlotObservation(y=y, true_support=tuple(sorted(idx)))


def recover_support(y, X: SensingMatrix, K: int, pruned=None) -> list:
    """Greedy support estimate: K rounds of max positive correlation with
    least-squares re-projection (non-negative OMP).  Restricted to the
    ``pruned`` index set when given.  Returns indices in selection order;
    if fewer candidates than K exist, all of them are returned.
    """
    obs = y.y if isinstance(y, SlotObservation) else np.asarray(y, dtype=np.float64)
    if pruned is not None:
        cand = np.unique(np.asarray(list(pruned), dtype=np.int64))
        if len(np.setdiff1d(cand, X.active, assume_unique=True)):
            raise ValueError("pruned must be a subset of the active columns")
    else:
        cand = X.active
    if len(cand) == 0:
        return []
    if len(cand) <= K:
        return [int(i) for i in cand]
    if len(cand) == len(X.active):
        M = X.dense_active()
    elif X._dense is not None and X._dense.shape[0] == len(X.active):
        M = X._dense[np.searchsorted(X.active, cand)]
    else:
        M = X.columns(cand).T.astype(np.float32)
    sel = _omp_batch(np.ascontiguousarray(M), obs.reshape(-1, 1).astype(np.float32), K)[0]
    return [int(cand[i]) for i in sel]


def _omp_batch(M: np.ndarray, Y: np.ndarray, K: int) -> list:
    """Batched greedy pursuit over a shared dictionary.

    M is (n_candidates, rows) with unit-norm rows; Y is (rows, T).
    Returns, per column of Y, the list of selected row indices in
    selection order.  The correlation pass is one GEMM per iteration;
    the per-trial least-squares refits are tiny and stay in float64.
    """
    n_cand, rows = M.shape
    T = Y.shape[1]
    K = min(K, n_cand)
    R = Y.astype(np.float32, copy=True)
    Y64 = Y.astype(np.float64)
    selected = [[] for _ in range(T)]
    for _ in range(K):
        C = M @ R  # (n_cand, T)
        for t in range(T):
            if selected[t]:
                C[selected[t], t] = -np.inf
        picks = np.argmax(C, axis=0)
        for t in range(T):
            selected[t].append(int(picks[t]))
            A = M[selected[t]].T.astype(np.float64)  # (rows, k)
            coef, *_ = np.linalg.lstsq(A, Y64[:, t], rcond=None)
            R[:, t] = (Y64[:, t] - A @ coef).astype(np.float32)
    return selected
