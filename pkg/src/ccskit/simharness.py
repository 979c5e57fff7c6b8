"""End-to-end Monte Carlo experiments.

A trial draws K distinct messages and a fresh parity generator, encodes,
pushes every slot through the noisy superposition channel, recovers a
per-slot candidate list, and stitches.  Three modes:

  standard         recover each slot over the full sensing matrix
  enhanced         before solving slot j, prune its columns down to the
                   parity patterns reachable from live partial paths
  error_free_lists bypass the channel and hand the true slot lists to
                   the stitcher (survivor statistics and reduction-ratio
                   measurement)

Trials are processed slot-major so at most one slot's dense matrix is in
memory; every random object draws from its own (master_seed, labels)
stream, so reports are bit-reproducible and standard/enhanced runs with
the same seed see identical messages, generators, and noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from . import __version__
from .gf2 import BitBlock
from .seeds import derive_seed, make_rng, random_bits
from .slotcs import (
    ChannelParams,
    SensingMatrix,
    _omp_batch,
    recover_support,
    transmit_slot,
)
from .treecode import (
    DEFAULT_PATH_CAP,
    CodeProfile,
    ParityGenerator,
    SlotList,
    TreeStitcher,
    encode,
    index_to_subblock,
    prune_column_index_set,
    subblock_to_index,
)

MODES = ("standard", "enhanced", "error_free_lists")


@dataclass(frozen=True)
class ExperimentConfig:
    profile: CodeProfile
    channel: Optional[ChannelParams]
    rows_per_slot: Tuple[int, ...]
    mode: str
    trials: int
    master_seed: int
    path_cap: int = DEFAULT_PATH_CAP

    def __post_init__(self):
        object.__setattr__(self, "rows_per_slot", tuple(int(r) for r in self.rows_per_slot))
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if len(self.rows_per_slot) != self.profile.n:
            raise ValueError("rows_per_slot must cover every slot")
        if self.mode != "error_free_lists" and self.channel is None:
            raise ValueError(f"mode {self.mode!r} needs channel parameters")
        if self.profile.K > (1 << self.profile.B):
            raise ValueError("cannot draw K distinct messages from 2**B")

    @property
    def total_channel_uses(self) -> int:
        return sum(self.rows_per_slot)

    def to_dict(self) -> dict:
        ch = None
        if self.channel is not None:
            ch = {
                "noise_variance": self.channel.noise_variance,
                "amplitude": self.channel.amplitude,
            }
        return {
            "profile": {"m": list(self.profile.m), "l": list(self.profile.l),
                        "K": self.profile.K},
            "channel": ch,
            "rows_per_slot": list(self.rows_per_slot),
            "mode": self.mode,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "path_cap": self.path_cap,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        profile = CodeProfile(
            m=tuple(d["profile"]["m"]), l=tuple(d["profile"]["l"]), K=d["profile"]["K"]
        )
        ch = d.get("channel")
        channel = None
        if ch is not None:
            if "ebn0_db" in ch:
                channel = ChannelParams.from_ebn0_db(
                    ch["ebn0_db"], profile.B, profile.n,
                    amplitude=ch.get("amplitude", 1.0),
                )
            else:
                channel = ChannelParams(
                    noise_variance=ch["noise_variance"],
                    amplitude=ch.get("amplitude", 1.0),
                )
        return cls(
            profile=profile,
            channel=channel,
            rows_per_slot=tuple(d["rows_per_slot"]),
            mode=d["mode"],
            trials=int(d["trials"]),
            master_seed=int(d["master_seed"]),
            path_cap=int(d.get("path_cap", DEFAULT_PATH_CAP)),
        )


@dataclass(frozen=True)
class TrialReport:
    pupe: float
    pupe_stderr: float
    survivors_per_stage: Tuple[float, ...]
    measured_reduction_per_slot: Tuple[float, ...]
    reduction_sd_per_slot: Tuple[float, ...]
    reduction_max_per_slot: Tuple[float, ...]
    pruned_columns_per_slot: Tuple[float, ...]
    blowups: int
    trials: int
    mode: str
    master_seed: int
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "pupe": self.pupe,
            "pupe_stderr": self.pupe_stderr,
            "survivors_per_stage": list(self.survivors_per_stage),
            "measured_reduction_per_slot": list(self.measured_reduction_per_slot),
            "reduction_sd_per_slot": list(self.reduction_sd_per_slot),
            "reduction_max_per_slot": list(self.reduction_max_per_slot),
            "pruned_columns_per_slot": list(self.pruned_columns_per_slot),
            "blowups": self.blowups,
            "trials": self.trials,
            "mode": self.mode,
            "master_seed": self.master_seed,
            "metadata": self.metadata,
        }


def seed_derivation(master: int, labels) -> np.random.Generator:
    """Derived stream for a label path; see seeds.make_rng."""
    return make_rng(master, *labels)


def draw_distinct_messages(rng: np.random.Generator, K: int, B: int) -> list:
    """K distinct uniform B-bit messages by rejection sampling."""
    seen = set()
    out = []
    while len(out) < K:
        v = random_bits(rng, B)
        if v not in seen:
            seen.add(v)
            out.append(BitBlock(v, B))
    return out


class _Trial:
    """Per-trial mutable state carried across the slot-major sweep."""

    __slots__ = ("messages", "G", "codewords", "true_indices", "stitcher", "ratios")

    def __init__(self, cfg: ExperimentConfig, t: int):
        profile = cfg.profile
        rng = make_rng(cfg.master_seed, "trial", t, "messages")
        self.messages = draw_distinct_messages(rng, profile.K, profile.B)
        self.G = ParityGenerator.random(
            profile, derive_seed(cfg.master_seed, "trial", t, "parity")
        )
        self.codewords = [encode(msg, profile, self.G) for msg in self.messages]
        self.true_indices = [
            [subblock_to_index(cw.subblocks[j], profile.m[j], profile.l[j])
             for cw in self.codewords]
            for j in range(profile.n)
        ]
        self.stitcher = TreeStitcher(profile, self.G, path_cap=cfg.path_cap)
        self.ratios = np.ones(profile.n)


def _feed_indices(trial: _Trial, cfg: ExperimentConfig, j: int, indices) -> None:
    profile = cfg.profile
    entries = frozenset(
        index_to_subblock(i, profile.m[j], profile.l[j]) for i in indices
    )
    trial.stitcher.feed(SlotList(j, entries))


def run_experiment(cfg: ExperimentConfig) -> TrialReport:
    """Run the configured Monte Carlo experiment and aggregate a report."""
    profile = cfg.profile
    n, K, T = profile.n, profile.K, cfg.trials
    trials = [_Trial(cfg, t) for t in range(T)]

    if cfg.mode == "error_free_lists":
        for t, trial in enumerate(trials):
            for j in range(n):
                if j >= 1 and not trial.stitcher.blew_up:
                    adm = trial.stitcher.admissible_next()
                    trial.ratios[j] = len(adm) / float(1 << profile.l[j])
                _feed_indices(trial, cfg, j, set(trial.true_indices[j]))
    else:
        for j in range(n):
            width = 1 << profile.subblock_width(j)
            X = SensingMatrix(
                slot=j, rows=cfg.rows_per_slot[j], width=width,
                seed=derive_seed(cfg.master_seed, "codebook", j),
            )
            X.dense_active()
            observations = [
                transmit_slot(
                    trial.true_indices[j], X, cfg.channel,
                    make_rng(cfg.master_seed, "trial", t, "noise", j),
                )
                for t, trial in enumerate(trials)
            ]
            if cfg.mode == "standard" or j == 0:
                recovered = _recover_batch(X, observations, K)
                for trial, idx in zip(trials, recovered):
                    _feed_indices(trial, cfg, j, idx)
            else:
                for t, trial in enumerate(trials):
                    if trial.stitcher.blew_up:
                        continue
                    adm = trial.stitcher.admissible_next()
                    keep = prune_column_index_set(profile, j, adm)
                    trial.ratios[j] = len(keep) / float(width)
                    idx = recover_support(observations[t], X, K, pruned=keep)
                    _feed_indices(trial, cfg, j, idx)
            X.release()

    outcomes = [trial.stitcher.finalize() for trial in trials]
    blowups = sum(1 for o in outcomes if o.blew_up)
    missing = 0
    for trial, outcome in zip(trials, outcomes):
        missing += sum(1 for msg in trial.messages if msg not in outcome.recovered)
    pupe = missing / float(T * K)
    pupe_stderr = float(np.sqrt(pupe * (1.0 - pupe) / (T * K)))

    surv_sum = np.zeros(n)
    surv_cnt = np.zeros(n)
    for outcome in outcomes:
        for j, v in enumerate(outcome.survivors_per_stage):
            surv_sum[j] += v
            surv_cnt[j] += 1
    survivors = tuple(
        float(surv_sum[j] / surv_cnt[j]) if surv_cnt[j] else float("nan")
        for j in range(n)
    )

    ratio_mat = np.stack([trial.ratios for trial in trials])
    widths = np.array([1 << profile.subblock_width(j) for j in range(n)], dtype=float)
    report = TrialReport(
        pupe=pupe,
        pupe_stderr=pupe_stderr,
        survivors_per_stage=survivors,
        measured_reduction_per_slot=tuple(float(v) for v in ratio_mat.mean(axis=0)),
        reduction_sd_per_slot=tuple(
            float(v) for v in (ratio_mat.std(axis=0, ddof=1) if T > 1 else np.zeros(n))
        ),
        reduction_max_per_slot=tuple(float(v) for v in ratio_mat.max(axis=0)),
        pruned_columns_per_slot=tuple(float(v) for v in ratio_mat.mean(axis=0) * widths),
        blowups=blowups,
        trials=T,
        mode=cfg.mode,
        master_seed=cfg.master_seed,
        metadata={
            "version": __version__,
            "config": cfg.to_dict(),
            "channel_ignored": cfg.mode == "error_free_lists",
        },
    )
    return report


def _recover_batch(X: SensingMatrix, observations, K: int) -> list:
    """Vectorised recovery of many trials sharing one full sensing matrix."""
    M = X.dense_active()
    Y = np.stack([obs.y for obs in observations], axis=1).astype(np.float32)
    selections = _omp_batch(M, Y, K)
    active = X.active
    return [[int(active[i]) for i in sel] for sel in selections]


@dataclass(frozen=True)
class ReductionMeasurement:
    means: Tuple[float, ...]
    sample_sd: Tuple[float, ...]
    stderr: Tuple[float, ...]
    trials: int

    def to_dict(self) -> dict:
        return {
            "means": list(self.means),
            "sample_sd": list(self.sample_sd),
            "stderr": list(self.stderr),
            "trials": self.trials,
        }


def measure_reduction(cfg: ExperimentConfig) -> ReductionMeasurement:
    """Mean per-slot admissible-pattern fraction |P_j| / 2**l_j over trials
    with error-free lists; slot 0 is identically 1."""
    if cfg.mode != "error_free_lists":
        raise ValueError("reduction measurement assumes error-free lists")
    report = run_experiment(cfg)
    sd = np.asarray(report.reduction_sd_per_slot)
    return ReductionMeasurement(
        means=report.measured_reduction_per_slot,
        sample_sd=report.reduction_sd_per_slot,
        stderr=tuple(float(v) for v in sd / np.sqrt(cfg.trials)),
        trials=cfg.trials,
    )
