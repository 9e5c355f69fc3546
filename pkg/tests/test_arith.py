import itertools

import numpy as np
import pytest

from scsim.arith import (
    FaultConfig,
    TernaryCode,
    binary_decode,
    binary_decode_array,
    binary_encode,
    binary_encode_array,
    comparator,
    inject_faults,
    sign_gated_multiply,
    ternary_multiply,
)
from scsim.bitstream import Bitstream, decode, encode
from scsim.errors import ConfigError, EncodingError


@pytest.mark.parametrize("a,b", list(itertools.product([0, 1], repeat=2)))
def test_comparator_sorts_descending(a, b):
    hi, lo = comparator(a, b)
    assert hi == (a | b)
    assert lo == (a & b)
    assert sorted([a, b], reverse=True) == [hi, lo]


def test_ternary_code_values():
    assert TernaryCode("00").value == -1
    assert TernaryCode("10").value == 0
    assert TernaryCode("11").value == 1


@pytest.mark.parametrize("bad", ["01", "1", "111", "ab"])
def test_ternary_rejects_non_codewords(bad):
    with pytest.raises(EncodingError):
        TernaryCode(bad)


def test_ternary_multiply_full_truth_table():
    # oracle: decode -> integer multiply -> encode, over all 3x3 inputs
    for vw, vx in itertools.product([-1, 0, 1], repeat=2):
        out = ternary_multiply(TernaryCode.from_value(vw), TernaryCode.from_value(vx))
        assert out.value == vw * vx
        assert out.bits in ("00", "10", "11")


def test_ternary_multiply_alpha():
    w = TernaryCode("11", alpha=0.5)
    x = TernaryCode("00", alpha=2.0)
    assert ternary_multiply(w, x).alpha == 1.0


def test_sign_gated_identity_and_complement():
    x = Bitstream.from_string("1110")
    assert sign_gated_multiply(TernaryCode("11"), x).to_string() == "1110"
    assert sign_gated_multiply(TernaryCode("00"), x).to_string() == "0001"


def test_sign_gated_zero_weight():
    rng = np.random.default_rng(3)
    w0 = TernaryCode("10")
    for bsl in (4, 8, 16):
        x = Bitstream((rng.random(bsl) < 0.6).astype(np.uint8))
        out = sign_gated_multiply(w0, x)
        assert decode(out).q == 0
        assert out.to_string() == "1" * (bsl // 2) + "0" * (bsl // 2)


def test_sign_gated_negation_value():
    for q in range(-4, 5):
        x = encode(q, 8, alpha=0.5)
        out = sign_gated_multiply(TernaryCode("00", alpha=2.0), x)
        assert decode(out).q == -q
        assert out.alpha == 1.0


def test_sign_gated_restricts_to_ternary_multiply_at_l2():
    for vw, vx in itertools.product([-1, 0, 1], repeat=2):
        w = TernaryCode.from_value(vw)
        x = TernaryCode.from_value(vx).to_bitstream()
        gated = sign_gated_multiply(w, x)
        exact = ternary_multiply(w, TernaryCode.from_value(vx))
        assert decode(gated).q == exact.value


def test_fault_config_validation():
    FaultConfig(0.0)
    FaultConfig(1.0)
    with pytest.raises(ConfigError):
        FaultConfig(-0.1)
    with pytest.raises(ConfigError):
        FaultConfig(1.5)


def test_inject_faults_extremes():
    rng = np.random.default_rng(0)
    b = encode(3, 16)
    same = inject_faults(b, FaultConfig(0.0), rng)
    assert same == b
    flipped = inject_faults(b, FaultConfig(1.0), rng)
    assert np.array_equal(flipped.bits, 1 - b.bits)


def test_inject_faults_rate():
    rng = np.random.default_rng(123)
    bsl = 10_000
    b = encode(0, bsl)
    out = inject_faults(b, FaultConfig(0.5), rng)
    frac = np.mean(out.bits != b.bits)
    assert abs(frac - 0.5) < 0.02


def test_inject_faults_deterministic_per_seed():
    b = encode(-2, 32)
    f = FaultConfig(0.3, seed=9)
    a1 = inject_faults(b, f, np.random.default_rng(f.seed))
    a2 = inject_faults(b, f, np.random.default_rng(f.seed))
    assert a1 == a2


def test_single_flip_moves_thermometer_level_by_one():
    for bsl in (2, 4, 8, 16):
        for q in range(-bsl // 2, bsl // 2 + 1):
            b = encode(q, bsl)
            for i in range(bsl):
                flipped = b.bits.copy()
                flipped[i] ^= 1
                dq = decode(Bitstream(flipped)).q - q
                assert abs(dq) == 1


def test_single_flip_moves_binary_value_by_power_of_two():
    for width in (2, 3, 4, 5):
        lo, hi = -(1 << (width - 1)), (1 << (width - 1)) - 1
        for v in range(lo, hi + 1):
            bits = binary_encode(v, width)
            assert binary_decode(bits) == v
            for i in range(width):
                flipped = bits.copy()
                flipped[i] ^= 1
                dv = binary_decode(flipped) - v
                assert abs(dv) == 1 << i
                assert abs(dv) <= 1 << (width - 1)


def test_flip_noise_mse_matches_analysis():
    # i.i.d. flips: thermometer MSE ~ L*ber, 4-bit binary MSE ~ 85*ber,
    # so at matched range the ratio is 16/85; check both within 10%
    rng = np.random.default_rng(2024)
    trials, ber = 400_000, 1e-3
    q = rng.integers(-8, 8, size=trials)

    therm = (np.arange(16) < (q + 8)[:, None]).astype(np.uint8)
    flips = rng.random(therm.shape) < ber
    q_t = (therm ^ flips).sum(axis=1, dtype=np.int64) - 8
    mse_t = np.mean((q_t - q) ** 2)

    binb = binary_encode_array(q, 4)
    flips = rng.random(binb.shape) < ber
    v_b = binary_decode_array(binb ^ flips)
    mse_b = np.mean((v_b - q) ** 2)

    assert abs(mse_t - 16 * ber) / (16 * ber) < 0.10
    assert abs(mse_b - 85 * ber) / (85 * ber) < 0.10
    assert abs(mse_t / mse_b - 16 / 85) / (16 / 85) < 0.15


def test_binary_array_codec_round_trip():
    vals = np.arange(-8, 8)
    assert np.array_equal(binary_decode_array(binary_encode_array(vals, 4)), vals)
    # out-of-range values saturate at the word boundary
    assert binary_decode_array(binary_encode_array(np.array([8]), 4))[0] == 7
