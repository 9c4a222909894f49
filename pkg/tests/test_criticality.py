import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import entropy_oracle
from scenforge.criticality import (
    DEFAULT_WEIGHTS,
    MetricConfig,
    MetricVector,
    MetricWeights,
    Thresholds,
    WeightError,
    classify_critical,
    combine_weights,
    compute_metrics,
    default_weights,
    entropy_weights,
    fitness,
    to_report_speed,
)
from scenforge.sim import SimulationTrace, Track


def mv(**kw):
    base = dict(r_red=False, n_collision=0, ttc_min=math.inf, d_min=10.0, v_d=5.0,
                l_offset=0.0, a_change=0.0, n_brake=0)
    base.update(kw)
    return MetricVector(**base)


def track(x, y, heading, speed, accel=None, active=None):
    n = len(x)
    return Track(
        s=np.asarray(x, float),
        x=np.asarray(x, float),
        y=np.asarray(y, float),
        heading=np.full(n, heading, float),
        speed=np.asarray(speed, float),
        accel=np.zeros(n) if accel is None else np.asarray(accel, float),
        active=np.ones(n, bool) if active is None else np.asarray(active, bool),
        lateral_offset=np.zeros(n),
    )


def trace(ego, bv, gap, events=()):
    n = len(ego.x)
    return SimulationTrace(
        t=np.arange(n) * 0.1, ego=ego, bv=bv, signal_phase=("none",) * n,
        events=tuple(events), gap=np.asarray(gap, float), vehicle_length=4.5, vehicle_width=2.0,
    )


class TestFitness:
    @pytest.mark.parametrize("d_min, v_d, expected", [
        (10.0, 1.5, -8.04155), (0.0, 10.8, 1.83924), (0.0, 0.0, 0.0),
    ])
    def test_examples(self, d_min, v_d, expected):
        assert fitness({"d_min": d_min, "v_d": v_d}) == pytest.approx(expected, abs=1e-5)

    def test_weights_sum_to_one(self):
        assert sum(DEFAULT_WEIGHTS.weights.values()) == pytest.approx(1.0)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(0, 100), st.floats(0, 100), st.floats(0, 10), st.floats(0, 15))
    def test_monotone(self, d_min, v_d, dd, dv):
        base = fitness({"d_min": d_min, "v_d": v_d})
        assert fitness({"d_min": d_min + dd, "v_d": v_d}) <= base + 1e-12
        assert fitness({"d_min": d_min, "v_d": v_d + dv}) >= base - 1e-12

    def test_unsigned_variant(self):
        assert fitness({"d_min": 1.0, "v_d": 1.0}, default_weights("unsigned")) == pytest.approx(1.0)
        with pytest.raises(ValueError):
            default_weights("sideways")

    def test_missing_metric(self):
        with pytest.raises(WeightError):
            fitness({"d_min": 1.0})

    def test_unavailable_perception_metric(self):
        w = MetricWeights({"iou": 1.0}, {"iou": "benefit"})
        with pytest.raises(WeightError):
            fitness(mv(), w)


class TestEntropyWeights:
    def test_example(self):
        w = entropy_weights([[0, 0], [1, 5], [2, 10]], ["benefit", "benefit"])
        assert w.vector() == pytest.approx([0.5, 0.5], abs=1e-12)

    def test_constant_column_weight_zero(self):
        w = entropy_weights([[1, 0], [1, 2], [1, 7]], ["benefit", "cost"], names=["a", "b"])
        assert w.weights["a"] == 0.0 and w.weights["b"] == pytest.approx(1.0)
        assert w.directions == {"a": "benefit", "b": "cost"}

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_oracle(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(5, 3)) * [1, 10, 0.1]
        dirs = ["benefit", "cost", "cost"]
        assert entropy_weights(x, dirs).vector() == pytest.approx(entropy_oracle(x.tolist(), dirs), abs=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 10_000), st.floats(0.01, 1000), st.floats(-50, 50))
    def test_permutation_and_affine_invariance(self, seed, scale, shift):
        rng = np.random.default_rng(seed)
        x = rng.uniform(0, 10, size=(6, 3))
        dirs = ["benefit", "cost", "benefit"]
        ref = entropy_weights(x, dirs).vector()
        w = ref.sum()
        assert w == pytest.approx(1.0)
        assert entropy_weights(x[rng.permutation(6)], dirs).vector() == pytest.approx(ref, abs=1e-9)
        assert entropy_weights(x * scale + shift, dirs).vector() == pytest.approx(ref, abs=1e-7)

    @pytest.mark.parametrize("samples, dirs", [
        ([[1, 2]], ["benefit", "benefit"]),
        ([[1, 2], [3, 4]], ["benefit"]),
        ([[1, 1], [1, 1]], ["benefit", "cost"]),
        ([[1, math.nan], [2, 3]], ["benefit", "cost"]),
        ([1, 2, 3], ["benefit"]),
    ])
    def test_bad_input(self, samples, dirs):
        with pytest.raises(WeightError):
            entropy_weights(samples, dirs)


class TestCombine:
    def test_example(self):
        subj = MetricWeights({"a": 0.6, "b": 0.4}, {"a": "cost", "b": "benefit"})
        obj = MetricWeights({"a": 0.2, "b": 0.8}, {"a": "cost", "b": "benefit"})
        out = combine_weights(subj, obj)
        assert out.weights["a"] == pytest.approx(0.36)
        assert out.weights["b"] == pytest.approx(0.64)
        assert combine_weights(subj, obj, (1.0, 0.0)).weights == pytest.approx(subj.weights)

    def test_mismatch(self):
        subj = MetricWeights({"a": 1.0}, {"a": "cost"})
        obj = MetricWeights({"b": 1.0}, {"b": "cost"})
        with pytest.raises(WeightError):
            combine_weights(subj, obj)
        with pytest.raises(WeightError):
            combine_weights(subj, subj, (0.5, 0.6))

    def test_weights_validated(self):
        with pytest.raises(WeightError):
            MetricWeights({"a": 0.7}, {"a": "cost"})
        with pytest.raises(WeightError):
            MetricWeights({"a": 1.0}, {"a": "up"})
        w = MetricWeights({"a": 0.25, "b": 0.75}, {"a": "cost", "b": "benefit"})
        assert MetricWeights.from_dict(w.to_dict()) == w


class TestClassify:
    @pytest.mark.parametrize("metrics, critical", [
        (mv(n_collision=1, d_min=0.0, v_d=0.2), True),
        (mv(d_min=1.5, v_d=3.0), True),
        (mv(d_min=1.5, v_d=0.5), False),
        (mv(d_min=2.0, v_d=3.0), False),
        (mv(d_min=1.999, v_d=1.0), True),
    ])
    def test_examples(self, metrics, critical):
        assert classify_critical(metrics) is critical

    def test_other_rules(self):
        near = mv(d_min=1.0, v_d=3.0)
        assert not classify_critical(near, Thresholds(rule="collision_only"))
        assert classify_critical(near, Thresholds(rule="near_miss_only"))
        assert classify_critical(mv(d_min=50, v_d=1.0), Thresholds(rule="any_threshold"))
        with pytest.raises(ValueError):
            Thresholds(rule="vibes")
        with pytest.raises(ValueError):
            Thresholds(d_min_max=math.nan)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(0, 10), st.floats(0, 15), st.floats(0, 5), st.floats(0, 5))
    def test_monotone(self, d, v, dd, dv):
        if classify_critical(mv(d_min=d, v_d=v)):
            assert classify_critical(mv(d_min=max(0.0, d - dd), v_d=v + dv))

    def test_from_dict_ignores_unknown(self):
        assert Thresholds.from_dict({"d_min_max": 3, "colour": "red"}).d_min_max == 3
        assert Thresholds.from_dict(None) == Thresholds()
        assert Thresholds.from_dict({"critical_rule": "collision_only"}).rule == "collision_only"


class TestTraceMetrics:
    def test_parallel_at_fixed_gap(self):
        n, g = 20, 1.25
        xs = np.linspace(0, 10, n)
        ego = track(xs, np.zeros(n), 0.0, np.full(n, 5.0), accel=np.r_[0, 1, 3, 2, np.zeros(n - 4)])
        bv = track(xs, np.full(n, 2.0 + g), 0.0, np.full(n, 5.0))
        m = compute_metrics(trace(ego, bv, np.full(n, g)))
        assert m.d_min == g
        assert m.v_d == 5.0
        assert m.ttc_min == math.inf
        assert m.a_change == 2.0
        assert m.n_collision == 0 and not m.r_red

    def test_receding_has_no_ttc(self):
        n = 10
        ego = track(np.linspace(0, 5, n), np.zeros(n), 0.0, np.full(n, 5.0))
        bv = track(np.linspace(10, 30, n), np.zeros(n), 0.0, np.full(n, 10.0))
        gap = bv.x - ego.x - 4.5
        m = compute_metrics(trace(ego, bv, gap))
        assert m.ttc_min == math.inf
        assert m.d_min == pytest.approx(gap[0])

    def test_head_on_ttc(self):
        n = 5
        ego = track(np.linspace(0, 2, n), np.zeros(n), 0.0, np.full(n, 5.0))
        bv = track(np.linspace(30, 28, n), np.zeros(n), math.pi, np.full(n, 5.0))
        gap = bv.x - ego.x - 4.5
        m = compute_metrics(trace(ego, bv, gap))
        assert m.ttc_min == pytest.approx(gap[-1] / 10.0)
        assert m.v_d == 5.0

    def test_bv_never_spawns(self):
        n = 5
        ego = track(np.zeros(n), np.zeros(n), 0.0, np.full(n, 5.0))
        bv = track(np.zeros(n), np.zeros(n), 0.0, np.zeros(n), active=np.zeros(n))
        m = compute_metrics(trace(ego, bv, np.full(n, math.inf)))
        assert m.d_min == math.inf and m.v_d == 0.0

    def test_center_mode(self):
        n = 3
        ego = track(np.zeros(n), np.zeros(n), 0.0, np.ones(n))
        bv = track(np.full(n, 3.0), np.full(n, 4.0), 0.0, np.ones(n))
        m = compute_metrics(trace(ego, bv, np.zeros(n)), MetricConfig("center"))
        assert m.d_min == 5.0
        with pytest.raises(ValueError):
            MetricConfig("psychic")

    def test_events_counted(self):
        n = 3
        ego = track(np.zeros(n), np.zeros(n), 0.0, np.ones(n))
        bv = track(np.zeros(n), np.full(n, 5.0), 0.0, np.ones(n))
        events = [(0.1, "collision"), (0.1, "red_light_crossing"), (0.2, "sudden_brake")]
        m = compute_metrics(trace(ego, bv, np.full(n, 3.0), events))
        assert (m.n_collision, m.r_red, m.n_brake) == (1, True, 1)

    def test_metric_lookup(self):
        m = mv()
        assert m["d_min"] == 10.0
        with pytest.raises(KeyError):
            m["iou"]
        with pytest.raises(KeyError):
            m["speed_of_light"]


def test_report_speed():
    assert to_report_speed(10.0, "km/h") == 36.0
    assert to_report_speed(10.0) == 10.0
    with pytest.raises(ValueError):
        to_report_speed(1.0, "knots")
