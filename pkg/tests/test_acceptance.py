"""Acceptance suite: one test per release criterion.

Each test prints a single PASS line (with its runtime) once every check
inside it has held at the stated tolerance; run with `pytest -v -s
tests/test_acceptance.py` to see the full scoreboard.
"""

import itertools
import json
import math
import time

import numpy as np
import pytest

from scsim.activation import apply_taps, compute_taps, fused_bn_relu
from scsim.approx import (
    ApproxConfig,
    EvalStats,
    TemporalSchedule,
    TernaryDist,
    eval_approx_bsn,
    eval_temporal,
    measure_mse,
    subsample,
    values_to_product_bits,
)
from scsim.arith import (
    TernaryCode,
    binary_decode,
    binary_decode_array,
    binary_encode,
    binary_encode_array,
    sign_gated_multiply,
    ternary_multiply,
)
from scsim.bitstream import Bitstream, bsl_to_binary_precision, decode, encode
from scsim.cost import cost_approx, cost_bsn, cost_temporal
from scsim.errors import RangeError
from scsim.fixtures import MODELS, fixture_path, load_fixture_dataset, load_fixture_model
from scsim.netsim import QTensor, evaluate_fault_tolerance, run_oracle, run_sc
from scsim.residual import rescale_div, rescale_mul
from scsim.sortnet import accumulate, build_bitonic, evaluate_batch


class Budget:
    def __init__(self, name, seconds):
        self.name = name
        self.seconds = seconds

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        if exc_type is None:
            assert elapsed < self.seconds, f"{self.name} exceeded {self.seconds}s budget"
            print(f"ACCEPTANCE {self.name}: PASS ({elapsed:.2f}s < {self.seconds}s)")
        else:
            print(f"ACCEPTANCE {self.name}: FAIL after {elapsed:.2f}s")


TABLE_CODES = {
    2: {-1: "00", 0: "10", 1: "11"},
    4: {-2: "0000", -1: "1000", 0: "1100", 1: "1110", 2: "1111"},
    8: {-4: "0" * 8, -3: "1" + "0" * 7, 3: "1" * 7 + "0", 4: "1" * 8},
    16: {-8: "0" * 16, -7: "1" + "0" * 15, 7: "1" * 15 + "0", 8: "1" * 16},
}


def test_criterion_01_codec_round_trip_and_codes():
    with Budget("1 codec", 1.0):
        for bsl in (2, 4, 8, 16):
            half = bsl // 2
            for q in range(-half, half + 1):
                b = encode(q, bsl, alpha=0.5)
                assert b.canonical
                v = decode(b)
                assert v.q == q and v.alpha == 0.5
                if q in TABLE_CODES[bsl]:
                    assert b.to_string() == TABLE_CODES[bsl][q]
            for bad in (half + 1, -half - 1):
                with pytest.raises(RangeError):
                    encode(bad, bsl)
        assert bsl_to_binary_precision(2) is None
        assert [bsl_to_binary_precision(b) for b in (4, 8, 16)] == [2, 3, 4]


def test_criterion_02_multiplier_truth_table():
    with Budget("2 multiplier", 1.0):
        for vw, vx in itertools.product((-1, 0, 1), repeat=2):
            w, x = TernaryCode.from_value(vw), TernaryCode.from_value(vx)
            assert ternary_multiply(w, x).value == vw * vx
            gated = sign_gated_multiply(w, x.to_bitstream())
            assert decode(gated).q == vw * vx


def test_criterion_03_bsn_sorts_and_conserves():
    with Budget("3 BSN", 60.0):
        for n in range(1, 13):
            net = build_bitonic(n)
            inputs = np.array(list(itertools.product([0, 1], repeat=n)), dtype=np.uint8)
            out = evaluate_batch(net, inputs)
            assert np.array_equal(out, np.sort(inputs, axis=1)[:, ::-1])
            assert np.array_equal(out.sum(axis=1), inputs.sum(axis=1))
        rng = np.random.default_rng(2718)
        for n in (64, 576, 4608):
            net = build_bitonic(n)
            x = (rng.random((1000, n)) < rng.random((1000, 1))).astype(np.uint8)
            out = evaluate_batch(net, x)
            sums = x.sum(axis=1, dtype=np.int64)
            assert np.array_equal(out.sum(axis=1, dtype=np.int64), sums)
            expect = np.arange(n)[None, :] < sums[:, None]
            assert np.array_equal(out, expect.astype(np.uint8))
        for k in range(1, 11):
            n = 1 << k
            assert build_bitonic(n).comparator_count == n * k * (k + 1) // 4


def test_criterion_04_si_bn_fusion_exact():
    with Budget("4 SI/BN", 10.0):
        m = 64
        mismatches = 0
        for gamma in (0.25, 0.5, 1.0, 2.0, 4.0):
            for beta in range(-4, 5):
                f = lambda x: fused_bn_relu(gamma, float(beta), x)
                for l_out in (8, 16):
                    for alpha_in, alpha_out in ((1.0, 1.0), (0.25, 0.5)):
                        taps = compute_taps(f, m, l_out, alpha_in, alpha_out)
                        for k in range(m + 1):
                            sc = decode(
                                apply_taps(taps, encode(k - m // 2, m, alpha_in))
                            ).q
                            x = alpha_in * (k - m / 2)
                            direct = int(
                                np.clip(
                                    math.floor(f(x) / alpha_out),
                                    -l_out // 2,
                                    l_out // 2,
                                )
                            )
                            mismatches += sc != direct
        assert mismatches == 0


def test_criterion_05_residual_rescaling():
    with Budget("5 residual", 1.0):
        for q in range(-8, 9):
            one = rescale_div(encode(q, 16), 1)
            assert decode(one).q == math.ceil(q / 2)
            assert one.to_string()[8:] == "11110000"
            assert one.bsl == 16
            doubled = rescale_mul(encode(q, 16), 1)
            assert decode(doubled).q == 2 * q
            for n in (1, 2, 3, 4):
                got = decode(rescale_div(encode(q, 16), n)).q
                assert abs(got - q / 2**n) < 1


def test_criterion_06_approx_bsn_subsampling():
    with Budget("6 approx BSN", 60.0):
        # closed-form popcount relation on the full grid, exact
        for l in (8, 16, 32, 64):
            for c in range(l // 2):
                kept = l - 2 * c
                for s in range(1, kept + 1):
                    if kept % s:
                        continue
                    for k in range(l + 1):
                        out = subsample(encode(k - l // 2, l), c, s)
                        assert out.popcount == math.ceil(min(max(k - c, 0), kept) / s)
        # identity-config restriction is bit-exact
        rng = np.random.default_rng(55)
        for m in (32, 128):
            cfg = ApproxConfig.exact(m)
            for _ in range(50):
                bits = (rng.random(m) < rng.random()).astype(np.uint8)
                assert eval_approx_bsn(cfg, bits) == accumulate([Bitstream(bits)])
        # MSE: zero when the window covers the support, non-decreasing in c
        assert measure_mse(
            ApproxConfig.exact(64), TernaryDist(0.25), 200, np.random.default_rng(1)
        ).mse == 0.0
        clipped = ApproxConfig(((1, 64, 16, 1),))
        for _ in range(50):
            values = np.zeros(32, dtype=np.int64)
            values[8:24] = rng.integers(-1, 2, size=16)  # support is +/-16
            out = eval_approx_bsn(clipped, values_to_product_bits(values))
            assert decode(out).q == values.sum()
        prev = -1.0
        for c in (0, 8, 16, 24):
            r = measure_mse(
                ApproxConfig(((1, 64, c, 1),)),
                TernaryDist(0.25),
                300,
                np.random.default_rng(9),
            )
            assert r.mse >= prev
            prev = r.mse


def _bounded_walk_values(rng, count, bound):
    values = np.zeros(count, dtype=np.int64)
    total = 0
    for i in range(count):
        v = int(rng.integers(-1, 2))
        if abs(total + v) > bound:
            v = -v
        values[i] = v
        total += v
    return values


def test_criterion_07_spatial_temporal_folding():
    with Budget("7 spatial-temporal", 120.0):
        inner = ApproxConfig(((3, 192, 64, 1), (1, 192, 64, 1)))
        sched = TemporalSchedule(bsn_width=576, partial_bsl=64, cycles=9, inner=inner)
        assert sched.total_width == 4608

        # constructed bounded inputs: running sums within +/-16, far inside
        # every 32-wide clip window, must be bit-exact
        rng = np.random.default_rng(41)
        for _ in range(20):
            values = _bounded_walk_values(rng, 2304, 16)
            stats = EvalStats()
            out = eval_temporal(sched, None, values_to_product_bits(values), stats=stats)
            assert stats.clip_events == 0
            assert out == encode(int(values.sum()), 64)

        # Gaussian-like products with a clip window of at least 4 sigma
        # (sum of 2304 i.i.d. ternary values, Var = 2304 * 2p)
        p = 0.005
        sigma = math.sqrt(2304 * 2 * p)
        assert sched.partial_bsl / 2 >= 4 * sigma
        dist = TernaryDist(p)
        exact_hits = 0
        errs = []
        for trial in range(200):
            values = dist.sample_values(rng, 2304)
            stats = EvalStats()
            out = eval_temporal(sched, None, values_to_product_bits(values), stats=stats)
            err = decode(out).q - values.sum()
            errs.append(err)
            if stats.clip_events == 0:
                assert err == 0  # trace-filtered trials are exact
                exact_hits += 1
        assert exact_hits > 150
        mse_norm = np.mean(np.asarray(errs, dtype=np.float64) ** 2) / 2304.0**2
        assert mse_norm < 1e-4


def test_criterion_08_cost_trends():
    with Budget("8 cost trends", 10.0):
        # (a) superlinear ADP growth of the monolithic sorter
        n = 64
        while n <= 2048:
            assert cost_bsn(2 * n).adp > 2 * cost_bsn(n).adp
            n *= 2
        # (b) multi-stage clipped designs beat the 4608-wide baseline
        base = cost_bsn(4608).adp
        for stages in [
            ((72, 64, 16, 1), (1, 2304, 0, 1)),
            ((72, 64, 24, 1), (18, 64, 24, 1), (4, 72, 20, 1), (1, 128, 32, 1)),
            ((72, 64, 16, 2), (18, 64, 16, 1), (1, 576, 96, 1)),
        ]:
            assert cost_approx(ApproxConfig(stages)).adp < base
        # (c) temporal area independent of the layer width; ADP shrinks
        # with the cycle count on smaller layers
        inner = ApproxConfig(((1, 576, 256, 1),))
        reports = [
            cost_temporal(TemporalSchedule(576, 64, w // 512, inner))
            for w in (512, 1024, 2048, 4608)
        ]
        assert len({r.area for r in reports}) == 1
        adps = [r.adp for r in reports]
        assert all(a < b for a, b in zip(adps, adps[1:]))


def test_criterion_09_fault_tolerance():
    with Budget("9 fault tolerance", 120.0):
        # analytic single-flip bounds, exhaustively
        for bsl in (2, 4, 8, 16):
            for q in range(-bsl // 2, bsl // 2 + 1):
                b = encode(q, bsl)
                for i in range(bsl):
                    flipped = b.bits.copy()
                    flipped[i] ^= 1
                    assert abs(decode(Bitstream(flipped)).q - q) == 1
        for width in (2, 3, 4):
            for v in range(-(1 << (width - 1)), 1 << (width - 1)):
                bits = binary_encode(v, width)
                for i in range(width):
                    flipped = bits.copy()
                    flipped[i] ^= 1
                    dv = abs(binary_decode(flipped) - v)
                    assert dv == 1 << i and dv <= 1 << (width - 1)

        # Monte Carlo at matched range: thermometer MSE at most a quarter
        # of the binary MSE (analytic ratio 16/85, tolerance x1.3)
        rng = np.random.default_rng(31337)
        trials = 400_000
        q = rng.integers(-8, 8, size=trials)
        therm = (np.arange(16) < (q + 8)[:, None]).astype(np.uint8)
        binb = binary_encode_array(q, 4)
        for ber in (1e-4, 1e-3, 1e-2):
            f1 = rng.random(therm.shape) < ber
            q_t = (therm ^ f1).sum(axis=1, dtype=np.int64) - 8
            mse_t = np.mean((q_t - q) ** 2)
            f2 = rng.random(binb.shape) < ber
            v_b = binary_decode_array(binb ^ f2)
            mse_b = np.mean((v_b - q) ** 2)
            assert mse_t / mse_b <= 0.25, f"ratio {mse_t / mse_b} at ber {ber}"
            assert mse_t / mse_b <= (16 / 85) * 1.3

        # end to end on the bundled fixture with paired seeds
        model = load_fixture_model("tiny_mlp")
        dataset = load_fixture_dataset("tiny_mlp")
        zero = evaluate_fault_tolerance(model, dataset, [0.0], seed=1, reps=1)[0]
        assert zero.sc_accuracy_loss == 0.0 and zero.binary_accuracy_loss == 0.0
        pt = evaluate_fault_tolerance(model, dataset, [1e-3], seed=123, reps=4)[0]
        assert pt.sc_accuracy_loss <= pt.binary_accuracy_loss


def test_criterion_10_end_to_end_bit_exactness():
    with Budget("10 end-to-end", 60.0):
        rng = np.random.default_rng(777)
        for name in MODELS:
            model = load_fixture_model(name)
            with open(fixture_path(f"{name}.dataset.json")) as fh:
                ds = json.load(fh)
            for flat, golden in zip(ds["inputs"], ds["golden_outputs"]):
                q = np.asarray(flat, np.int64).reshape(model.input_shape)
                t = QTensor(q, model.input_alpha, model.input_bsl)
                sc = run_sc(model, t).output
                assert sc.q.reshape(-1).tolist() == golden
                assert np.array_equal(sc.q, run_oracle(model, t).q)
            half = model.input_bsl // 2
            for _ in range(1000):
                q = rng.integers(-half, half + 1, size=model.input_shape)
                t = QTensor(q, model.input_alpha, model.input_bsl)
                assert np.array_equal(run_sc(model, t).output.q, run_oracle(model, t).q)
