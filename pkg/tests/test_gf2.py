import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ccskit.dyadic import Dyadic
from ccskit.gf2 import (
    BinaryMatrix,
    BitBlock,
    collision_prob_fixed_G,
    concat_blocks,
    mul_vec_mat,
    nullity,
    rank,
    random_matrix,
)
from ccskit.seeds import make_rng


def naive_mul(w: BitBlock, G: BinaryMatrix) -> BitBlock:
    """Independent double-loop GF(2) multiply oracle."""
    out = [0] * G.cols
    for j in range(G.cols):
        acc = 0
        for i in range(G.rows):
            acc ^= w.bit(i) & G.entry(i, j)
        out[j] = acc
    return BitBlock.from_bits(out)


class TestBitBlock:
    def test_roundtrips(self):
        b = BitBlock.from_string("10110")
        assert b.bits() == (1, 0, 1, 1, 0)
        assert BitBlock.from_bits(b.bits()) == b
        assert len(b) == 5

    def test_xor_is_addition(self):
        a = BitBlock.from_string("1100")
        b = BitBlock.from_string("1010")
        assert (a + b) == BitBlock.from_string("0110")
        assert (a + a).is_zero()

    def test_width_mismatch(self):
        with pytest.raises(ValueError):
            BitBlock(1, 2) ^ BitBlock(1, 3)

    def test_value_range_checked(self):
        with pytest.raises(ValueError):
            BitBlock(4, 2)
        with pytest.raises(ValueError):
            BitBlock(1, 0)

    def test_concat_split(self):
        a = BitBlock.from_string("101")
        b = BitBlock.from_string("01")
        c = a.concat(b)
        assert c == BitBlock.from_string("10101")
        assert c.split((3, 2)) == (a, b)
        assert concat_blocks([a, b, a]) == BitBlock.from_string("10101101")

    @given(st.integers(0, 2**12 - 1), st.integers(0, 2**9 - 1))
    def test_concat_split_roundtrip(self, va, vb):
        a, b = BitBlock(va, 12), BitBlock(vb, 9)
        assert a.concat(b).split((12, 9)) == (a, b)


class TestRandomMatrix:
    def test_degenerate_dimension(self):
        G = random_matrix(0, 5, make_rng(0))
        assert G.rows == 0 and G.cols == 5

    def test_determinism(self):
        a = random_matrix(3, 4, make_rng(7, "G"))
        b = random_matrix(3, 4, make_rng(7, "G"))
        assert a == b

    def test_mean_entry_half(self):
        # >= 10^4 entries, tolerance 0.02
        total = ones = 0
        for s in range(30):
            G = random_matrix(20, 20, make_rng(123, s))
            ones += sum(w.bit_count() for w in G.row_words)
            total += 400
        assert abs(ones / total - 0.5) < 0.02


class TestMulVecMat:
    def test_zero_vector(self):
        G = random_matrix(6, 5, make_rng(1))
        assert mul_vec_mat(BitBlock.zeros(6), G).is_zero()

    def test_unit_vector_selects_row(self):
        G = random_matrix(6, 5, make_rng(2))
        for q in range(6):
            assert mul_vec_mat(BitBlock(1 << q, 6), G) == G.row(q)

    def test_against_naive_oracle(self):
        rng = make_rng(3)
        for _ in range(50):
            G = random_matrix(8, 6, rng)
            w = BitBlock.random(rng, 8)
            assert mul_vec_mat(w, G) == naive_mul(w, G)

    def test_dimension_mismatch(self):
        G = random_matrix(4, 3, make_rng(4))
        with pytest.raises(ValueError):
            mul_vec_mat(BitBlock.zeros(5), G)

    @given(st.integers(0, 255), st.integers(0, 255), st.integers(0, 2**20))
    def test_linearity(self, va, vb, seed):
        G = random_matrix(8, 7, make_rng(seed))
        a, b = BitBlock(va, 8), BitBlock(vb, 8)
        assert mul_vec_mat(a + b, G) == mul_vec_mat(a, G) + mul_vec_mat(b, G)


class TestRank:
    def test_identity(self):
        assert rank(BinaryMatrix.identity(4)) == 4

    def test_zero(self):
        assert rank(BinaryMatrix.zeros(3, 5)) == 0
        assert rank(BinaryMatrix.zeros(0, 4)) == 0

    def test_equal_rows(self):
        G = BinaryMatrix.from_rows([0b1011, 0b1011], 4)
        assert rank(G) == 1

    def test_against_elimination_oracle(self):
        rng = make_rng(9)
        for _ in range(40):
            G = random_matrix(7, 9, rng)
            assert rank(G) == _rank_oracle(G.to_array())
            assert nullity(G) == G.rows - rank(G)


def _rank_oracle(a: np.ndarray) -> int:
    """Row-reduce a dense uint8 array, independently of the packed code."""
    a = a.copy()
    r = 0
    for c in range(a.shape[1]):
        piv = None
        for i in range(r, a.shape[0]):
            if a[i, c]:
                piv = i
                break
        if piv is None:
            continue
        a[[r, piv]] = a[[piv, r]]
        for i in range(a.shape[0]):
            if i != r and a[i, c]:
                a[i] ^= a[r]
        r += 1
    return r


class TestCollisionProb:
    def test_full_rank(self):
        G = BinaryMatrix.identity(6)
        assert collision_prob_fixed_G(G) == Dyadic.pow2(-6)

    def test_all_zero(self):
        assert collision_prob_fixed_G(BinaryMatrix.zeros(5, 3)) == 1

    def test_rank_one_by_enumeration(self):
        # 8x6 matrix with every row equal: rank 1, collision prob 1/2,
        # cross-checked by enumerating all 2^8 inputs.
        row = 0b101101
        G = BinaryMatrix.from_rows([row] * 8, 6)
        w = BitBlock(0b10110101, 8)
        p = mul_vec_mat(w, G)
        hits = sum(
            1 for v in range(256) if mul_vec_mat(BitBlock(v, 8), G) == p
        )
        assert collision_prob_fixed_G(G) == Dyadic(1, 1)
        assert Dyadic(hits, 8) == Dyadic(1, 1)

    def test_exhaustive_collision_frequency(self):
        # For every G and fixed w, the collision count over all 2^m inputs
        # is exactly 2^(m - rank).
        rng = make_rng(11)
        for m, l in [(4, 3), (6, 2), (8, 5)]:
            G = random_matrix(m, l, rng)
            w = BitBlock.random(rng, m)
            p = mul_vec_mat(w, G)
            hits = sum(
                1 for v in range(1 << m) if mul_vec_mat(BitBlock(v, m), G) == p
            )
            assert hits == 1 << (m - rank(G))


def test_random_generator_collision_statistics():
    # For fixed w != w_e and random G, Pr(wG == w_eG) = 2^-l within 3
    # binomial standard errors.
    rng = make_rng(21)
    m, l, samples = 6, 4, 100_000
    w = BitBlock.random(rng, m)
    we = BitBlock(w.value ^ 0b101, m)
    diff = w + we
    rows = rng.integers(0, 1 << l, size=(samples, m), dtype=np.int64)
    parity = np.zeros(samples, dtype=np.int64)
    for i in range(m):
        if diff.bit(i):
            parity ^= rows[:, i]
    p_hat = float((parity == 0).mean())
    p = 2.0**-l
    sigma = np.sqrt(p * (1 - p) / samples)
    assert abs(p_hat - p) <= 3 * sigma
