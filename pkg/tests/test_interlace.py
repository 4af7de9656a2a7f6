import json

import numpy as np
import pytest

from interlaced_control import (CostReport, Explicit, FirstOrderBlock,
                                InterlacePlan, NyquistFraction, ParallelForm,
                                RelativeSeparation, SecondOrderBlock,
                                TransferFunction, UnsupportedBlockError,
                                block_frequency, classify_poles,
                                cost_interlaced, cost_model,
                                cost_single_rate_fast, cost_single_rate_slow,
                                make_plan, partial_fraction,
                                resample_slow_block, savings_ratio,
                                w_polynomial)


def simple_pf(poles, direct=0.0, dt=0.01):
    blocks = tuple(FirstOrderBlock(1.0, p) for p in poles)
    return ParallelForm(direct, blocks, (), dt)


class TestClassification:
    def test_explicit_partition(self, cd_parallel):
        part = classify_poles(cd_parallel, Explicit(["b1", "b2", "b3"]))
        assert part.slow == ("b1", "b2", "b3")
        assert part.fast == ("b45",)
        assert part.rule_used == "explicit"

    def test_explicit_unknown_id(self, cd_parallel):
        with pytest.raises(KeyError):
            classify_poles(cd_parallel, Explicit(["b1", "b9"]))

    def test_nyquist_fraction_includes_complex_pair(self, cd_parallel):
        # pi/(5*T) = 62.8 rad/s sits above every block frequency here, so a
        # pure frequency threshold also labels the resonant pair slow
        part = classify_poles(cd_parallel, NyquistFraction(5.0))
        assert "b45" in part.slow
        assert set(part.slow) >= {"b1", "b2", "b3"}

    def test_relative_separation(self, cd_parallel):
        part = classify_poles(cd_parallel, RelativeSeparation(0.5))
        assert "b45" in part.fast
        assert "b1" in part.slow

    def test_block_frequency_values(self, cd_parallel):
        # integrator block sits at (numerically) zero frequency; the others
        # are ordered
        assert block_frequency(cd_parallel, "b1") < 1e-6
        f2 = block_frequency(cd_parallel, "b2")
        f3 = block_frequency(cd_parallel, "b3")
        f45 = block_frequency(cd_parallel, "b45")
        assert 0.0 < f2 < f3 < f45

    def test_pole_at_origin_warns_and_is_fast(self):
        pf = simple_pf([0.9, 0.0])
        with pytest.warns(UserWarning):
            part = classify_poles(pf, NyquistFraction(5.0))
        assert "b2" in part.fast

    def test_continuous_rejected(self):
        pf = partial_fraction(TransferFunction([1.0], [1.0, 3.0, 2.0]))
        with pytest.raises(ValueError):
            classify_poles(pf, NyquistFraction(5.0))

    def test_unknown_rule_type(self, cd_parallel):
        with pytest.raises(TypeError):
            classify_poles(cd_parallel, "slowest-three")


class TestWPolynomial:
    def test_factorization_identity_random(self):
        rng = np.random.default_rng(21)
        for _ in range(1000):
            alpha = float(rng.uniform(-1.2, 1.2))
            N = int(rng.integers(1, 7))
            w = w_polynomial(alpha, N)
            lhs = np.polymul([1.0, -alpha], w)
            rhs = np.zeros(N + 1)
            rhs[0], rhs[-1] = 1.0, -alpha ** N
            assert np.max(np.abs(lhs - rhs)) <= 1e-12

    def test_n_one_is_trivial(self):
        assert w_polynomial(0.7, 1) == pytest.approx([1.0])

    def test_invalid_n(self):
        with pytest.raises(ValueError):
            w_polynomial(0.5, 0)


class TestResampling:
    def test_av_blocks(self, cd_parallel):
        vals = {"b1": (0.3580, 1.0), "b2": (-0.08324, 0.9553),
                "b3": (0.003016, 0.9114)}
        for bid, (gain, pole_n) in vals.items():
            rs = resample_slow_block(cd_parallel.block(bid), 3, 0.01)
            assert rs.tf_NT.dt == pytest.approx(0.03)
            assert rs.tf_NT.num[0] == pytest.approx(gain, rel=5e-3)
            assert -rs.tf_NT.den[1] == pytest.approx(pole_n, rel=5e-4)

    def test_dc_gain_invariant(self):
        rng = np.random.default_rng(22)
        for _ in range(50):
            b = FirstOrderBlock(float(rng.standard_normal()),
                                float(rng.uniform(-0.95, 0.95)))
            N = int(rng.integers(2, 7))
            rs = resample_slow_block(b, N, 0.01)
            assert rs.tf_NT(1.0) == pytest.approx(b.tf(0.01)(1.0), rel=1e-12)

    def test_keeps_source_and_w(self):
        b = FirstOrderBlock(0.5, 0.8)
        rs = resample_slow_block(b, 4, 0.02)
        assert rs.source is b
        assert rs.w_poly == pytest.approx([1.0, 0.8, 0.64, 0.512])


class TestPlan:
    def test_av_plan(self, av_plan):
        assert av_plan.N == 3
        assert av_plan.slots == ("b1", "b2", "b3")
        assert (av_plan.input_strategy, av_plan.output_strategy) == ("I1", "O1")

    def test_custom_order(self, cd_parallel):
        part = classify_poles(cd_parallel, Explicit(["b1", "b2", "b3"]))
        plan = make_plan(cd_parallel, part, order=["b3", "b1", "b2"])
        assert plan.slots == ("b3", "b1", "b2")

    def test_order_must_be_permutation(self, cd_parallel):
        part = classify_poles(cd_parallel, Explicit(["b1", "b2", "b3"]))
        with pytest.raises(ValueError):
            make_plan(cd_parallel, part, order=["b1", "b2", "b45"])

    def test_second_order_slow_rejected(self, cd_parallel):
        part = classify_poles(cd_parallel, Explicit(["b1", "b45"]))
        with pytest.raises(UnsupportedBlockError):
            make_plan(cd_parallel, part)

    def test_no_slow_blocks_rejected(self, cd_parallel):
        part = classify_poles(cd_parallel, Explicit([]))
        with pytest.raises(ValueError):
            make_plan(cd_parallel, part)

    def test_single_slow_warns(self, cd_parallel):
        part = classify_poles(cd_parallel, Explicit(["b2"]))
        with pytest.warns(UserWarning):
            plan = make_plan(cd_parallel, part)
        assert plan.N == 1

    def test_bad_strategies(self):
        with pytest.raises(ValueError):
            InterlacePlan(2, ("b1", "b2"), "I3", "O1")
        with pytest.raises(ValueError):
            InterlacePlan(2, ("b1", "b2"), "I1", "O3")
        with pytest.raises(ValueError):
            InterlacePlan(3, ("b1", "b2"), "I1", "O1")

    def test_json_round_trip(self, av_plan, tmp_path):
        p = tmp_path / "plan.json"
        av_plan.save(p)
        with open(p) as f:
            back = InterlacePlan.from_json(json.load(f))
        assert back == av_plan


class TestCost:
    def test_single_rate_fast_av(self, cd_parallel):
        rep = cost_single_rate_fast(cd_parallel)
        assert rep.per_instant == ((11, 10),)
        assert rep.worst == (11, 10)

    def test_single_rate_slow_av(self, cd_parallel):
        rep = cost_single_rate_slow(cd_parallel, 3)
        assert rep.per_instant == ((11, 10), (0, 0), (0, 0))
        assert rep.mean[0] == pytest.approx(11 / 3)

    def test_interlaced_av(self, cd_parallel, av_plan):
        rep = cost_interlaced(cd_parallel, av_plan)
        # each instant: direct gain + the resonant pair + one slow block
        assert all(c[0] == 9 for c in rep.per_instant)
        assert rep.worst[0] == 9
        assert len(rep.per_instant) == 3

    def test_savings_av(self, cd_parallel, av_plan):
        s = savings_ratio(cost_single_rate_fast(cd_parallel),
                          cost_interlaced(cd_parallel, av_plan))
        assert s == pytest.approx(1 - 9 / 11)

    def test_gain_only(self):
        pf = ParallelForm(2.0, (), (), 0.01)
        assert cost_single_rate_fast(pf).worst == (1, 0)

    def test_cost_model_dispatch(self, cd_parallel, av_plan):
        assert cost_model(cd_parallel, "single_rate_fast").variant \
            == "single_rate_fast"
        assert cost_model(cd_parallel, "single_rate_slow",
                          plan=av_plan).per_instant[1] == (0, 0)
        assert cost_model(cd_parallel, "interlaced",
                          plan=av_plan).worst[0] == 9
        with pytest.raises(ValueError):
            cost_model(cd_parallel, "turbo")

    def test_interlaced_beats_fast_when_enough_is_slow(self):
        # splitting into parallel blocks adds per-block overhead, so the
        # worst-case multiply count only drops once enough of the order moves
        # to the slow schedule: 3*n_slow > n_total + 3 for first-order blocks
        rng = np.random.default_rng(23)
        for _ in range(20):
            k = int(rng.integers(3, 8))
            poles = rng.uniform(-0.9, 0.99, k)
            while np.min(np.abs(poles[:, None] - poles[None, :])
                         + np.eye(k)) < 1e-3:
                poles = rng.uniform(-0.9, 0.99, k)
            pf = simple_pf(poles)
            nslow = int(rng.integers((k + 3) // 3 + 1, k + 1))
            slow_ids = [f"b{i + 1}" for i in range(nslow)]
            part = classify_poles(pf, Explicit(slow_ids))
            plan = make_plan(pf, part)
            fast = cost_single_rate_fast(pf)
            inter = cost_interlaced(pf, plan)
            assert inter.worst[0] < fast.worst[0]

    def test_report_json(self, cd_parallel, av_plan):
        d = cost_interlaced(cd_parallel, av_plan).to_json()
        assert d["variant"] == "interlaced"
        assert d["worst"] == [9, 10]
        assert "multiplies" in d["convention"]
