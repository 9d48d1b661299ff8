import csv
import math

import numpy as np
import pytest

from tandem_aoi import analytic as an
from tandem_aoi.analytic import SystemConfig
from tandem_aoi.distributions import ServiceDistribution as D
from tandem_aoi.simulator import (
    DeliveryRecord,
    SimConfig,
    compare_models,
    metrics_from_deliveries,
    simulate_actual,
    simulate_equivalent,
    summarize,
    write_trace,
)

from .conftest import default_point, simulated

SMALL = SimConfig(default_point(1, 4.0), 20_000, 11)


class TestConfig:
    def test_rejects_zero_packets(self):
        with pytest.raises(ValueError):
            SimConfig(default_point(1, 4.0), 0)

    def test_needs_ten_packets_per_batch(self):
        with pytest.raises(ValueError):
            SimConfig(default_point(1, 4.0), 100, batch_count=30)

    @pytest.mark.parametrize("w", [-0.1, 1.0])
    def test_warmup_range(self, w):
        with pytest.raises(ValueError):
            SimConfig(default_point(1, 4.0), 1000, warmup_fraction=w)


class TestSawtoothMetrics:
    def test_hand_computed(self):
        st = metrics_from_deliveries([DeliveryRecord(0.0, 1.0), DeliveryRecord(2.0, 3.0)], 1.0, 3.0)
        assert st.avg_aoi == pytest.approx(2.0, abs=1e-15)
        assert st.peaks.tolist() == [3.0]

    def test_tail_segment_past_last_delivery(self):
        # age runs 1 -> 2 over [1, 2]: average 1.5
        st = metrics_from_deliveries([(0.0, 1.0), (0.5, 1.5)], 1.0, 2.0)
        # [1, 1.5]: 1 -> 1.5 ; [1.5, 2]: 1 -> 1.5
        assert st.avg_aoi == pytest.approx(1.25, abs=1e-15)

    def test_horizon_start_mid_segment(self):
        st = metrics_from_deliveries([(0.0, 1.0), (2.0, 3.0), (3.0, 4.0)], 2.0, 4.0)
        # [2, 3]: age 2 -> 3 ; [3, 4]: age 1 -> 2
        assert st.avg_aoi == pytest.approx(2.0, abs=1e-15)
        assert st.peaks.tolist() == [3.0, 2.0]

    def test_ties_keep_freshest(self):
        st = metrics_from_deliveries([(0.0, 1.0), (1.5, 3.0), (2.0, 3.0)], 1.0, 3.0)
        base = metrics_from_deliveries([(0.0, 1.0), (2.0, 3.0)], 1.0, 3.0)
        assert st.avg_aoi == base.avg_aoi
        assert st.peaks.tolist() == base.peaks.tolist()

    def test_split_run_is_between_halves(self):
        run, _ = simulated(default_point(2, 5.0), 200_000, 5)
        d, g = run.breakpoints()
        rec = np.column_stack((g, d))
        mid = float(d[len(d) // 2])
        full = metrics_from_deliveries(rec, float(d[0]), float(d[-1])).avg_aoi
        first = metrics_from_deliveries(rec, float(d[0]), mid).avg_aoi
        second = metrics_from_deliveries(rec, mid, float(d[-1])).avg_aoi
        assert min(first, second) <= full <= max(first, second)

    def test_needs_two_deliveries(self):
        with pytest.raises(ValueError):
            metrics_from_deliveries([(0.0, 1.0)])

    def test_rejects_start_before_first_delivery(self):
        with pytest.raises(ValueError):
            metrics_from_deliveries([(0.0, 1.0), (2.0, 3.0)], 0.5, 3.0)


class TestActualModel:
    def test_deterministic_given_seed(self):
        a = simulate_actual(SMALL).records()
        b = simulate_actual(SMALL).records()
        assert a == b

    def test_different_seed_differs(self):
        other = SimConfig(SMALL.system, SMALL.n_packets, SMALL.master_seed + 1)
        assert simulate_actual(SMALL).records() != simulate_actual(other).records()

    def test_conservation(self):
        run = simulate_actual(SMALL)
        assert run.n_delivered + int(run.discarded.sum()) == run.n_packets
        assert not np.any(run.discarded & ~run.found_busy)
        assert np.all(np.isnan(run.delivery[run.discarded]))
        assert np.all(np.isfinite(run.delivery[~run.discarded]))

    def test_sawtooth_validity(self):
        run = simulate_actual(SMALL)
        d, g = run.breakpoints()
        assert np.all(np.diff(d) > 0)
        assert np.all(np.diff(g) > 0)
        served = ~run.discarded
        t = run.delivery[served] - run.gen[served]
        assert np.all(t > 0)
        # each served packet waited for at most one other period
        assert np.all(run.service_start[served] >= run.comp_end[served])

    def test_average_age_matches_closed_form(self):
        cfg = default_point(1, 4.0)
        _, m = simulated(cfg)
        assert m.avg_aoi == pytest.approx(an.avg_aoi(cfg), rel=0.01)
        assert m.ci_halfwidth_aoi < 0.01 * m.avg_aoi
        assert m.ci_halfwidth_peak < 0.01 * m.avg_peak_aoi

    def test_halfwidth_shrinks_with_run_length(self):
        cfg = default_point(2, 6.0)
        _, short = simulated(cfg, 250_000, 8)
        _, long = simulated(cfg, 1_000_000, 8)
        ratio = short.ci_halfwidth_aoi / long.ci_halfwidth_aoi
        assert 1.2 < ratio < 3.5


class TestEquivalentModel:
    def test_delivers_everything(self):
        run = simulate_equivalent(SMALL)
        assert run.n_delivered == run.n_packets
        assert np.all(np.isfinite(run.delivery))

    def test_same_admitted_stream(self):
        a = simulate_actual(SMALL)
        e = simulate_equivalent(SMALL)
        assert np.array_equal(a.gen, e.gen)
        assert np.array_equal(a.comp_end, e.comp_end)
        assert np.array_equal(a.found_busy, e.found_busy)
        assert a.n_periods == e.n_periods
        assert np.array_equal(a.release, e.release)

    def test_identical_sawtooth(self):
        a = simulate_actual(SMALL).breakpoints()
        e = simulate_equivalent(SMALL).breakpoints()
        assert np.max(np.abs(a[0] - e[0])) < 1e-9
        assert np.max(np.abs(a[1] - e[1])) < 1e-9

    def test_zero_computation_same_average(self):
        sc = SimConfig(SystemConfig(1.0, D.deterministic(0.0), 1.0), 50_000, 3)
        ma = summarize(simulate_actual(sc), sc)
        me = summarize(simulate_equivalent(sc), sc)
        assert abs(ma.avg_aoi - me.avg_aoi) < 1e-9
        assert abs(ma.avg_peak_aoi - me.avg_peak_aoi) < 1e-9

    def test_batches_and_peak_identity(self):
        run = simulate_equivalent(SMALL)
        x = run.interarrival()
        xt = x + run.system_time()
        # every packet in exactly one batch: batches are runs of equal delivery times
        d = run.delivery
        assert np.all(np.diff(d) >= 0)
        starts = np.flatnonzero(np.r_[True, d[1:] != d[:-1]])
        ends = np.r_[starts[1:], len(d)]
        assert ends[-1] - starts[0] == run.n_packets
        # from the second batch on, the batch opener carries the largest X + T
        for s, e in zip(starts[1:].tolist(), ends[1:].tolist()):
            block = xt[s:e]
            assert block[0] == block.max()
        # and that value is the receiver-visible peak
        stats = metrics_from_deliveries(np.column_stack((run.gen, run.delivery)))
        assert np.allclose(stats.peaks, xt[starts[1:]], rtol=0, atol=1e-9)


class TestCompareModels:
    def test_default_point(self):
        rep = compare_models(SimConfig(default_point(0.5, 7.0), 100_000, 1))
        assert rep.passed
        assert rep.max_breakpoint_discrepancy < 1e-9

    def test_zero_computation_exact(self):
        rep = compare_models(SimConfig(SystemConfig(1.0, D.deterministic(0.0), 1.0), 20_000, 9))
        assert rep.max_breakpoint_discrepancy == 0.0

    @pytest.mark.parametrize("seed", range(8))
    def test_random_configs(self, seed):
        rng = np.random.default_rng(seed)
        lam = rng.uniform(0.1, 2)
        k = float(rng.choice([0.5, 1, 2, 10]))
        mean_p = rng.uniform(1, 10)
        mu = rng.uniform(0.05, 2)
        rep = compare_models(SimConfig(SystemConfig(lam, D.gamma(k, mean_p), mu), 20_000, seed))
        assert rep.passed


def test_trace_dump(tmp_path):
    sc = SimConfig(default_point(1, 4.0), 2_000, 4)
    run = simulate_actual(sc)
    path = tmp_path / "trace.csv"
    write_trace(run, path)
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["index", "gen_time", "computation_end", "service_start", "delivery_time", "state_found", "discarded"]
    assert len(rows) == run.n_packets
    for r in rows:
        if r["discarded"] == "1":
            assert r["delivery_time"] == "" and r["state_found"] == "B"
        else:
            assert float(r["delivery_time"]) > float(r["gen_time"])
    assert float(rows[10]["gen_time"]) == run.gen[10]


def test_metrics_are_finite():
    _, m = simulated(default_point(10, 2.0), 100_000, 3)
    assert all(math.isfinite(v) for v in m.as_dict().values())
    assert 0 <= m.busy_found_fraction <= 1
