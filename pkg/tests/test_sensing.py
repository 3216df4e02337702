"""Structured measurement operator checks: the orthonormal butterfly
transform against an explicit Hadamard matrix, operator algebra
(adjoint, Gram), measurement counts, and seeded reproducibility."""

import numpy as np
import pytest

from tensorbgs import CompressiveOperator, fwht, make_operator
from tensorbgs.sensing import is_power_of_two, next_power_of_two


def _hadamard(n):
    h = np.array([[1.0]])
    while h.shape[0] < n:
        h = np.block([[h, h], [h, -h]])
    return h / np.sqrt(n)


def test_fwht_matches_hadamard_matrix():
    rng = np.random.default_rng(40)
    for n in (1, 2, 4, 8, 16):
        h = _hadamard(n)
        for _ in range(3):
            x = rng.standard_normal(n)
            assert np.allclose(fwht(x), h @ x, atol=1e-12)


def test_fwht_hand_values():
    assert np.allclose(fwht(np.array([1.0, 0, 0, 0])), [0.5, 0.5, 0.5, 0.5])
    assert np.allclose(fwht(np.array([0, 1.0, 0, 0])), [0.5, -0.5, 0.5, -0.5])


def test_fwht_is_involution():
    rng = np.random.default_rng(41)
    x = rng.standard_normal(32)
    assert np.allclose(fwht(fwht(x)), x, atol=1e-12)


def test_fwht_rejects_non_power_of_two():
    with pytest.raises(ValueError):
        fwht(np.zeros(6))


def test_power_of_two_helpers():
    assert [is_power_of_two(n) for n in (1, 2, 3, 4, 12, 16)] == [
        True, True, False, True, False, True]
    assert [next_power_of_two(n) for n in (1, 3, 4, 5, 17)] == [1, 4, 4, 8, 32]


def test_measurement_count():
    # 64x64 frames at ratio 1/5: round(0.2*4096) = 819 rows per frame.
    op = CompressiveOperator((64, 64, 3), 0.2, seed=0)
    assert op.block_meas == 819
    assert op.n_measurements == 819 * 3
    assert op.signal_len == 64 * 64 * 3
    tiny = CompressiveOperator((2, 2, 1), 0.01, seed=0)
    assert tiny.block_meas == 1  # never zero rows


def test_adjoint_identity_everywhere():
    # <Ax, y> == <x, A'y> must hold for all shapes, ratios, and modes.
    rng = np.random.default_rng(42)
    cases = [
        ((8, 8, 3), 0.2, "frame"),
        ((6, 5, 3), 0.5, "frame"),      # non-power-of-two block, padded
        ((4, 4, 4), 1.0, "holistic"),
        ((5, 3, 2), 0.3, "holistic"),
    ]
    for dims, ratio, mode in cases:
        op = CompressiveOperator(dims, ratio, seed=3, mode=mode)
        for _ in range(5):
            x = rng.standard_normal(op.signal_len)
            y = rng.standard_normal(op.n_measurements)
            lhs = float(op.apply(x) @ y)
            rhs = float(x @ op.adjoint(y))
            assert abs(lhs - rhs) <= 1e-10 * np.linalg.norm(x) * np.linalg.norm(y)


def test_gram_identity_on_power_of_two_frames():
    rng = np.random.default_rng(43)
    for dims, mode in [((8, 8, 4), "frame"), ((16, 4, 2), "frame"), ((4, 4, 4), "holistic")]:
        op = CompressiveOperator(dims, 0.25, seed=1, mode=mode)
        assert op.gram_is_identity
        y = rng.standard_normal(op.n_measurements)
        assert np.linalg.norm(op.apply(op.adjoint(y)) - y) <= 1e-10 * np.linalg.norm(y)


def test_gram_not_certified_with_padding():
    op = CompressiveOperator((6, 5, 3), 0.5, seed=1)
    assert op.padded_len == 32 and op.block_len == 30
    assert not op.gram_is_identity
    # and the Gram genuinely is not the identity there
    rng = np.random.default_rng(44)
    y = rng.standard_normal(op.n_measurements)
    assert np.linalg.norm(op.apply(op.adjoint(y)) - y) > 1e-3 * np.linalg.norm(y)


def test_full_ratio_inverts():
    rng = np.random.default_rng(45)
    op = CompressiveOperator((8, 4, 3), 1.0, seed=9)
    x = rng.standard_normal(op.signal_len)
    assert np.allclose(op.adjoint(op.apply(x)), x, atol=1e-10)


def test_seeded_reproducibility():
    rng = np.random.default_rng(46)
    x = rng.standard_normal(8 * 8 * 2)
    a = CompressiveOperator((8, 8, 2), 0.3, seed=5).apply(x)
    b = CompressiveOperator((8, 8, 2), 0.3, seed=5).apply(x)
    c = CompressiveOperator((8, 8, 2), 0.3, seed=6).apply(x)
    assert np.array_equal(a, b)
    assert not np.allclose(a, c)


def test_blocks_are_keyed_by_index():
    # Frame blocks draw from per-(seed, block) streams, so a longer
    # volume reuses the same patterns for its common prefix of frames.
    rng = np.random.default_rng(47)
    short = CompressiveOperator((8, 8, 2), 0.4, seed=11)
    long = CompressiveOperator((8, 8, 5), 0.4, seed=11)
    x2 = rng.standard_normal(short.signal_len)
    x5 = np.concatenate([x2, rng.standard_normal(long.signal_len - x2.size)])
    m = short.block_meas
    assert np.array_equal(long.apply(x5)[: 2 * m], short.apply(x2))


def test_make_operator_and_validation():
    op = make_operator((8, 8, 2), 0.5, seed=0)
    assert isinstance(op, CompressiveOperator)
    with pytest.raises(ValueError):
        CompressiveOperator((8, 8, 2), 0.0, seed=0)
    with pytest.raises(ValueError):
        CompressiveOperator((8, 8, 2), 1.5, seed=0)
    with pytest.raises(ValueError):
        CompressiveOperator((8, 8, 2), 0.5, seed=0, mode="banana")
