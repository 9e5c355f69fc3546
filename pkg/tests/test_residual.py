import math

import numpy as np
import pytest

from scsim.bitstream import Bitstream, decode, encode
from scsim.errors import CanonicalError, ConfigError, ScaleError
from scsim.residual import (
    RescaleDirection,
    RescaleOp,
    align_and_accumulate,
    ceil_div_pow2,
    rescale_div,
    rescale_mul,
)


def iter_ceil_halve(q, n):
    for _ in range(n):
        q = math.ceil(q / 2)
    return q


def test_rescale_mul_examples():
    b = Bitstream.from_string("1110")
    assert rescale_mul(b, 0) is b
    doubled = rescale_mul(b, 1)
    assert doubled.to_string() == "11101110"
    assert decode(doubled).q == 2
    assert decode(rescale_mul(encode(-3, 16), 2)).q == -12


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_rescale_mul_exact_for_all_levels(n):
    for q in range(-8, 9):
        out = rescale_mul(encode(q, 16, alpha=0.25), n)
        assert decode(out).q == q * 2**n
        assert out.bsl == 16 * 2**n
        assert out.alpha == 0.25


def test_rescale_div_single_cycle_bits():
    out = rescale_div(encode(2, 16), 1)  # popcount 10
    assert out.bsl == 16
    assert out.to_string() == "1111100011110000"
    assert decode(out).q == 1


def test_rescale_div_pad_is_the_fixed_block():
    for q in range(-8, 9):
        out = rescale_div(encode(q, 16), 1)
        assert out.to_string()[8:] == "11110000"


def test_rescale_div_zero_fixed_point():
    out = rescale_div(encode(0, 16), 1)
    assert out.popcount == 8
    assert decode(out).q == 0


def test_rescale_div_is_ceil_halving():
    for q in range(-8, 9):
        assert decode(rescale_div(encode(q, 16), 1)).q == math.ceil(q / 2)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_rescale_div_multi_cycle(n):
    for q in range(-8, 9):
        out = rescale_div(encode(q, 16), n)
        assert out.bsl == 16  # constant stream length, every cycle
        got = decode(out).q
        assert got == iter_ceil_halve(q, n)
        assert abs(got - q / 2**n) < 1


def test_rescale_div_requires_canonical():
    with pytest.raises(CanonicalError):
        rescale_div(Bitstream.from_string("0110"), 1)


def test_rescale_div_rejects_unpaddable_length():
    with pytest.raises(ConfigError):
        rescale_div(Bitstream.from_string("110000"), 1)  # length 6


def test_align_and_accumulate_plain():
    res = encode(4, 16, alpha=1.0)
    conv = encode(1, 8, alpha=1.0)
    assert decode(align_and_accumulate(res, conv, 0)).q == 5


def test_align_and_accumulate_with_division():
    res = encode(5, 16, alpha=0.5)
    conv = encode(1, 8, alpha=1.0)
    out = align_and_accumulate(res, conv, -1)
    assert decode(out).q == 1 + math.ceil(5 / 2)
    assert out.alpha == 1.0


def test_align_and_accumulate_with_replication():
    res = encode(-3, 16, alpha=2.0)
    conv = encode(2, 8, alpha=1.0)
    out = align_and_accumulate(res, conv, 1)
    assert decode(out).q == 2 + (-3) * 2


def test_align_rejects_non_power_of_two_ratio():
    res = encode(1, 16, alpha=3.0)
    conv = encode(0, 8, alpha=1.0)
    with pytest.raises(ScaleError):
        align_and_accumulate(res, conv, 1)
    with pytest.raises(ScaleError):
        align_and_accumulate(encode(1, 16, alpha=2.0), conv, 0)


def test_representation_capacity():
    # a 16-bit residual carries 17 levels, the 2-bit path only 3
    levels16 = {decode(encode(q, 16)).q for q in range(-8, 9)}
    levels2 = {decode(encode(q, 2)).q for q in range(-1, 2)}
    assert len(levels16) == 17
    assert levels16 == set(range(-8, 9))
    assert len(levels2) == 3


def test_rescale_op_from_log2():
    assert RescaleOp.from_log2(3) == RescaleOp(RescaleDirection.MULTIPLY, 3)
    assert RescaleOp.from_log2(-2) == RescaleOp(RescaleDirection.DIVIDE, 2)
    with pytest.raises(ConfigError):
        RescaleOp(RescaleDirection.MULTIPLY, -1)


def test_ceil_div_pow2_matches_math():
    qs = np.arange(-40, 41)
    for n in (1, 2, 3):
        expect = np.array([math.ceil(q / 2**n) for q in qs])
        assert np.array_equal(ceil_div_pow2(qs, n), expect)
