"""Fragmented tree code: encoder, list stitcher, and the pattern export
that drives sensing-matrix pruning.

A length-B message is split into n information fragments.  Every slot
j >= 1 carries the fragment w(j) followed by parity bits
p(j) = sum_{l<j} w(l) G[l, j-1], where the generator blocks sit above
the diagonal, so parity only constrains fragments from earlier slots.

Decoding stitches per-slot candidate lists: a partial path survives
stage j when the parity field of the appended sub-block equals the
parity predicted from the path prefix.  The enhanced variant exports,
before each slot is solved, the set of parity patterns reachable from
currently live paths; sub-block indices carrying any other pattern can
be discarded by the slot solver ahead of time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Sequence, Tuple

from .gf2 import BinaryMatrix, BitBlock, concat_blocks, mul_vec_mat, random_matrix
from .seeds import make_rng

DEFAULT_PATH_CAP = 100_000


@dataclass(frozen=True)
class CodeProfile:
    """Bit allocation: m[j] information and l[j] parity bits per slot, K active users."""

    m: Tuple[int, ...]
    l: Tuple[int, ...]
    K: int

    def __post_init__(self):
        object.__setattr__(self, "m", tuple(int(v) for v in self.m))
        object.__setattr__(self, "l", tuple(int(v) for v in self.l))
        if len(self.m) != len(self.l):
            raise ValueError("m and l must have the same length")
        if not self.m:
            raise ValueError("at least one slot required")
        if self.l[0] != 0:
            raise ValueError("the root slot carries no parity (l[0] must be 0)")
        if any(v < 0 for v in self.m) or any(v < 0 for v in self.l):
            raise ValueError("negative bit counts")
        if any(mj + lj == 0 for mj, lj in zip(self.m, self.l)):
            raise ValueError("every sub-block needs at least one bit")
        if self.K < 1:
            raise ValueError("K must be positive")

    @property
    def n(self) -> int:
        return len(self.m)

    @property
    def B(self) -> int:
        return sum(self.m)

    def subblock_width(self, j: int) -> int:
        return self.m[j] + self.l[j]


@dataclass(frozen=True)
class ParityGenerator:
    """Upper-triangular block generator: blocks[(l, j)] of shape m_l x l_{j+1}
    feeds parity group j+1, for 0 <= l <= j <= n-2."""

    blocks: Dict[Tuple[int, int], BinaryMatrix]

    @classmethod
    def random(cls, profile: CodeProfile, seed: int) -> "ParityGenerator":
        """Rademacher blocks, each from its own derived stream so any block
        is regenerable in isolation."""
        blocks = {}
        for j in range(profile.n - 1):
            for ell in range(j + 1):
                blocks[(ell, j)] = random_matrix(
                    profile.m[ell], profile.l[j + 1], make_rng(seed, "G", ell, j)
                )
        return cls(blocks)

    def block(self, ell: int, j: int) -> BinaryMatrix:
        return self.blocks[(ell, j)]

    def check_shapes(self, profile: CodeProfile) -> None:
        for j in range(profile.n - 1):
            for ell in range(j + 1):
                b = self.blocks.get((ell, j))
                if b is None:
                    raise ValueError(f"missing generator block ({ell}, {j})")
                if b.rows != profile.m[ell] or b.cols != profile.l[j + 1]:
                    raise ValueError(
                        f"block ({ell}, {j}) is {b.rows}x{b.cols}, "
                        f"expected {profile.m[ell]}x{profile.l[j + 1]}"
                    )


@dataclass(frozen=True)
class Codeword:
    """The n transmitted sub-blocks w(j) || p(j) of one message."""

    subblocks: Tuple[BitBlock, ...]


@dataclass(frozen=True)
class SlotList:
    """The set of sub-blocks recovered (or known) for one slot."""

    slot: int
    entries: frozenset

    def sorted_entries(self) -> list:
        return sorted(self.entries, key=lambda b: b.value)


@dataclass(frozen=True)
class DecodeOutcome:
    recovered: frozenset            # B-bit messages from roots with a unique full path
    survivors_per_stage: Tuple[int, ...]
    roots_failed: int               # roots with zero or multiple full paths
    blew_up: bool = False
    admissible_per_stage: Optional[Tuple] = None  # enhanced mode: frozenset per stage >= 1


def split_message(message: BitBlock, profile: CodeProfile) -> Tuple[BitBlock, ...]:
    if message.width != profile.B:
        raise ValueError(f"message has {message.width} bits, profile needs {profile.B}")
    return message.split(profile.m)


def compute_parity(fragments: Sequence[BitBlock], G: ParityGenerator, stage: int) -> BitBlock:
    """Parity bits for slot ``stage`` from the information fragments of
    slots 0..stage-1."""
    if stage < 1:
        raise ValueError("parity starts at stage 1")
    if len(fragments) < stage:
        raise ValueError(f"need {stage} fragments, got {len(fragments)}")
    first = G.blocks.get((0, stage - 1))
    if first is None:
        raise ValueError(f"stage {stage} out of range for this generator")
    acc = BitBlock.zeros(first.cols)
    for ell in range(stage):
        acc ^= mul_vec_mat(fragments[ell], G.block(ell, stage - 1))
    return acc


def encode(message: BitBlock, profile: CodeProfile, G: ParityGenerator) -> Codeword:
    """Systematic tree encoding of a B-bit message."""
    frags = split_message(message, profile)
    subblocks = [frags[0]]
    for j in range(1, profile.n):
        p = compute_parity(frags, G, j)
        if p.width != profile.l[j]:
            raise ValueError(
                f"generator emits {p.width} parity bits at stage {j}, profile has {profile.l[j]}"
            )
        subblocks.append(frags[j].concat(p))
    return Codeword(tuple(subblocks))


def codeword_message(cw: Codeword, profile: CodeProfile) -> BitBlock:
    frags = [sb.split((profile.m[j], profile.l[j]))[0] for j, sb in enumerate(cw.subblocks)]
    return concat_blocks(frags)


def parity_consistent(cw: Codeword, profile: CodeProfile, G: ParityGenerator) -> bool:
    """Self-consistency of a codeword: every embedded parity field matches
    the parity recomputed from the preceding fragments."""
    frags = []
    for j, sb in enumerate(cw.subblocks):
        w, p = sb.split((profile.m[j], profile.l[j]))
        frags.append(w)
        if j >= 1 and p != compute_parity(frags, G, j):
            return False
    return True


def slot_lists(codewords: Iterable[Codeword], profile: CodeProfile) -> list:
    """Error-free slot lists: the sets of transmitted sub-blocks per slot
    (duplicates collapse, matching support-recovery semantics)."""
    cws = list(codewords)
    return [
        SlotList(j, frozenset(cw.subblocks[j] for cw in cws)) for j in range(profile.n)
    ]


def subblock_index(w: BitBlock, p: BitBlock) -> int:
    """Column index of a sub-block: information bits in the high-order
    positions, parity field in the low-order l bits."""
    return (w.value << p.width) | p.value


def index_to_subblock(index: int, m: int, l: int) -> BitBlock:
    """Inverse of the index bijection, back to the w || p bit layout."""
    if not 0 <= index < (1 << (m + l)):
        raise ValueError(f"index {index} out of range for width {m + l}")
    w = BitBlock(index >> l, m)
    p = BitBlock(index & ((1 << l) - 1), l)
    return w.concat(p)


def subblock_to_index(sb: BitBlock, m: int, l: int) -> int:
    w, p = sb.split((m, l))
    return subblock_index(w, p)


class TreeStitcher:
    """Incremental tree decoder fed one slot list at a time.

    Keeping the stitcher incremental lets the simulation run it in tandem
    with slot-level recovery: after stage j-1 it can report the parity
    patterns admissible at slot j, which the solver uses to prune columns
    before the slot is even solved.
    """

    def __init__(self, profile: CodeProfile, G: ParityGenerator,
                 path_cap: int = DEFAULT_PATH_CAP):
        G.check_shapes(profile)
        self.profile = profile
        self.G = G
        self.path_cap = path_cap
        self.stage = -1                    # index of the last slot consumed
        self.blew_up = False
        self.survivors: list = []
        # Paths per root: lists of fragment tuples (w(0), ..., w(stage)).
        self._paths: list = []

    def feed(self, slot_list: SlotList) -> None:
        if self.blew_up:
            return
        j = self.stage + 1
        if slot_list.slot != j:
            raise ValueError(f"expected slot {j}, got {slot_list.slot}")
        if j >= self.profile.n:
            raise ValueError("all slots already consumed")
        entries = slot_list.sorted_entries()
        width = self.profile.subblock_width(j)
        if any(e.width != width for e in entries):
            raise ValueError(f"slot {j} entries must have width {width}")
        if j == 0:
            self._paths = [[(w,)] for w in entries]
        else:
            m_j, l_j = self.profile.m[j], self.profile.l[j]
            by_parity: Dict[int, list] = {}
            for e in entries:
                w, p = e.split((m_j, l_j))
                by_parity.setdefault(p.value, []).append(w)
            cache: Dict[tuple, int] = {}
            for root_paths in self._paths:
                grown = []
                for path in root_paths:
                    expected = self._parity_value(path, j, cache)
                    for w in by_parity.get(expected, ()):
                        grown.append(path + (w,))
                        if len(grown) > self.path_cap:
                            self.blew_up = True
                            return
                root_paths[:] = grown
        self.stage = j
        self.survivors.append(sum(len(rp) for rp in self._paths))

    def _parity_value(self, path: tuple, stage: int, cache: Dict[tuple, int]) -> int:
        acc = 0
        for ell in range(stage):
            key = (ell, path[ell].value)
            prod = cache.get(key)
            if prod is None:
                prod = mul_vec_mat(path[ell], self.G.block(ell, stage - 1)).value
                cache[key] = prod
            acc ^= prod
        return acc

    def live_paths(self) -> list:
        return [p for root_paths in self._paths for p in root_paths]

    def admissible_next(self) -> frozenset:
        """Parity patterns at slot stage+1 reachable from live paths."""
        return admissible_patterns(self.live_paths(), self.G, self.stage + 1)

    def finalize(self) -> DecodeOutcome:
        if self.blew_up:
            return DecodeOutcome(
                recovered=frozenset(),
                survivors_per_stage=tuple(self.survivors),
                roots_failed=len(self._paths),
                blew_up=True,
            )
        if self.stage != self.profile.n - 1:
            raise ValueError("not all slots consumed")
        recovered = []
        roots_failed = 0
        for root_paths in self._paths:
            if len(root_paths) == 1:
                recovered.append(concat_blocks(root_paths[0]))
            else:
                # Zero or multiple full paths: decoding failure for this root.
                roots_failed += 1
        return DecodeOutcome(
            recovered=frozenset(recovered),
            survivors_per_stage=tuple(self.survivors),
            roots_failed=roots_failed,
        )


def admissible_patterns(active_paths: Iterable[tuple], G: ParityGenerator,
                        stage: int) -> frozenset:
    """The set of parity patterns predicted at ``stage`` by the given
    partial paths (each a tuple of fragments through stage-1)."""
    patterns = set()
    cache: Dict[tuple, int] = {}
    width = None
    for path in active_paths:
        if width is None:
            head = G.blocks.get((0, stage - 1))
            if head is None:
                raise ValueError(f"stage {stage} out of range for this generator")
            width = head.cols
        acc = 0
        for ell in range(stage):
            key = (ell, path[ell].value)
            prod = cache.get(key)
            if prod is None:
                prod = mul_vec_mat(path[ell], G.block(ell, stage - 1)).value
                cache[key] = prod
            acc ^= prod
        patterns.add(acc)
    if width is None:
        return frozenset()
    return frozenset(BitBlock(v, width) for v in patterns)


def prune_column_index_set(profile: CodeProfile, stage: int,
                           admissible: Iterable[BitBlock]) -> frozenset:
    """Sub-block indices whose low-order parity field is admissible.

    The index bijection puts information bits in the high positions, so
    the retained set is a union of |admissible| residue classes modulo
    2**l_j, of total size 2**m_j * |admissible|.
    """
    m_j, l_j = profile.m[stage], profile.l[stage]
    pvals = sorted({p.value for p in admissible})
    if any(p.width != l_j for p in admissible):
        raise ValueError(f"admissible patterns must have width {l_j}")
    return frozenset(
        (w << l_j) | p for w in range(1 << m_j) for p in pvals
    )


def tree_decode(lists: Sequence[SlotList], profile: CodeProfile, G: ParityGenerator,
                mode: str = "standard", path_cap: int = DEFAULT_PATH_CAP) -> DecodeOutcome:
    """Stitch full slot lists into messages.

    ``enhanced`` keeps identical stitching semantics and additionally
    records the admissible parity-pattern set per stage, i.e. what the
    slot solver would have been allowed to keep.
    """
    if mode not in ("standard", "enhanced"):
        raise ValueError(f"unknown mode {mode!r}")
    if len(lists) != profile.n:
        raise ValueError(f"need {profile.n} slot lists, got {len(lists)}")
    if not lists or not lists[0].entries:
        return DecodeOutcome(frozenset(), (0,) * profile.n, 0,
                             admissible_per_stage=None)
    stitcher = TreeStitcher(profile, G, path_cap=path_cap)
    admissible: list = [None]  # admissible_per_stage[j] is the pattern set for slot j
    for j, slot_list in enumerate(lists):
        if mode == "enhanced" and j >= 1 and not stitcher.blew_up:
            admissible.append(stitcher.admissible_next())
        stitcher.feed(slot_list)
    outcome = stitcher.finalize()
    if mode == "enhanced":
        return DecodeOutcome(
            recovered=outcome.recovered,
            survivors_per_stage=outcome.survivors_per_stage,
            roots_failed=outcome.roots_failed,
            blew_up=outcome.blew_up,
            admissible_per_stage=tuple(admissible),
        )
    return outcome
