import numpy as np
import pytest

from jumps.harness import (
    ExperimentPlan,
    TrialRecord,
    aggregate,
    check_refinement,
    histogram,
    mix_seed,
    relative_benefit,
    run_cell,
    run_plan,
    run_trial,
    summarize_cell,
)
from jumps.topology import TopologyConfig

SMALL = dict(field_radius=250.0, landmark_counts=(3, 4), densities=(10, 20), trials=3,
             refinement_samples=1)


class TestAggregate:
    def test_constant(self):
        assert aggregate([2.5] * 7) == (2.5, 0.0)

    def test_zero_one(self):
        mean, hw = aggregate([0, 1])
        assert mean == 0.5
        # 3.2905 * sqrt(0.5) / sqrt(2) by hand
        assert hw == pytest.approx(1.645, abs=1e-3)

    def test_symmetric(self):
        assert aggregate([-3.0, 3.0])[0] == 0

    def test_needs_two(self):
        with pytest.raises(ValueError):
            aggregate([1.0])

    def test_ci_shrinks_with_root_n(self):
        rng = np.random.default_rng(0)
        x = rng.normal(1.0, 0.3, 3200)
        for n in (50, 200, 800):
            _, small = aggregate(x[:n])
            _, large = aggregate(x[n : 5 * n])
            assert large / small == pytest.approx(0.5, rel=0.20)


class TestBenefit:
    def test_equal(self):
        assert relative_benefit(2.0, 2.0) == 0

    def test_values(self):
        assert relative_benefit(0.35, 1.0) == pytest.approx(65.0)
        assert relative_benefit(1.2, 1.0) == pytest.approx(-20.0)

    def test_zero_baseline(self):
        assert relative_benefit(1.0, 0.0) is None
        assert relative_benefit(None, 1.0) is None


class TestHistogram:
    def test_empty(self):
        assert histogram([], 0.1) == {}

    def test_bins(self):
        assert histogram([0.05, 0.15, 0.15], 0.1) == {0: 1, 1: 2}

    def test_left_closed_edges(self):
        assert histogram([0.0, 0.1, 0.3, 0.2999], 0.1) == {0: 1, 1: 1, 2: 1, 3: 1}

    def test_integer_bins(self):
        assert histogram([2, 2, 3, 7], 1.0) == {2: 2, 3: 1, 7: 1}

    def test_mass(self):
        x = np.random.default_rng(1).random(1000) * 3
        assert sum(histogram(x, 0.1).values()) == 1000

    def test_bad_width(self):
        with pytest.raises(ValueError):
            histogram([1.0], 0)


class TestPlan:
    def test_defaults_are_desk_scale(self):
        p = ExperimentPlan()
        assert p.field_radius == 500 and p.trials == 100
        assert p.landmark_counts == tuple(range(3, 11))
        assert p.densities == (10, 20, 30, 40, 50)
        assert len(p.landmark_counts) * len(p.densities) == 40

    def test_paper_scale(self):
        p = ExperimentPlan.paper_scale()
        assert (p.field_radius, p.trials, p.radio_range) == (1000, 1000, 50)
        assert p.topology_config(3, 10, 0).population == 4400

    def test_validation(self):
        with pytest.raises(ValueError):
            ExperimentPlan(trials=1)
        with pytest.raises(ValueError):
            ExperimentPlan(densities=())
        with pytest.raises(ValueError):
            ExperimentPlan(metrics=("bogus",))
        with pytest.raises(ValueError):
            ExperimentPlan(radio_range=600)

    def test_roundtrip_and_hash(self):
        p = ExperimentPlan(**SMALL)
        assert ExperimentPlan.from_dict(p.to_dict()) == p
        assert p.plan_hash() == ExperimentPlan(**SMALL).plan_hash()
        assert p.plan_hash() != ExperimentPlan(**{**SMALL, "base_seed": 1}).plan_hash()


class TestSeeds:
    def test_stable(self):
        assert mix_seed(0, 3, 10, 0) == mix_seed(0, 3, 10, 0)
        assert 0 <= mix_seed(0, 3, 10, 0) < 2**64

    def test_distinct(self):
        seeds = {mix_seed(b, n, d, t) for b in (0, 1) for n in (3, 4) for d in (10, 20) for t in range(5)}
        assert len(seeds) == 2 * 2 * 2 * 5


class TestRunCell:
    def test_single_trial_deterministic(self):
        plan = ExperimentPlan(**SMALL)
        a = run_cell(3, 10, 1, base_seed=7, plan=plan)
        b = run_cell(3, 10, 1, base_seed=7, plan=plan)
        assert len(a) == 1
        assert a[0].values == b[0].values and a[0].zone_sizes == b[0].zone_sizes
        assert a[0].seed == mix_seed(7, 3, 10, 0)

    def test_record_contents(self):
        rec = run_trial(ExperimentPlan(**SMALL), 4, 20, 0)
        assert not rec.exhausted
        assert rec.values["zone_count"] == len(rec.zone_sizes) == len(rec.populations)
        assert rec.values["max_zone_size"] == pytest.approx(max(rec.zone_sizes))
        assert rec.values["nodes_per_zone"] == pytest.approx(np.mean(rec.populations))

    def test_parallel_matches_serial(self):
        plan = ExperimentPlan(**SMALL)
        serial = run_cell(4, 10, 4, 3, plan, jobs=1)
        parallel = run_cell(4, 10, 4, 3, plan, jobs=2)
        assert [r.values for r in serial] == [r.values for r in parallel]

    def test_unreliable_flag(self):
        plan = ExperimentPlan(**SMALL)
        recs = [TrialRecord(t, t, exhausted=t < 2) for t in range(10)]
        recs[5].values = {m: 1.0 for m in plan.metrics}
        cell = summarize_cell(3, 10, recs, plan)
        assert cell.exhausted == 2 and cell.unreliable
        assert cell.stats["zone_size"].mean == 1.0 and cell.stats["zone_size"].ci999 is None


class TestRunPlan:
    def test_one_cell(self):
        plan = ExperimentPlan(field_radius=250.0, landmark_counts=(3,), densities=(20,), trials=2,
                              refinement_samples=0)
        res = run_plan(plan)
        assert len(res.cells) == 1
        s = res.cells[0].stats["zone_size"]
        assert s.n == 2 and s.ci999 >= 0
        assert s.benefit_vs_3_pct == 0

    def test_outputs_and_determinism(self, tmp_path):
        plan = ExperimentPlan(**SMALL)
        a = run_plan(plan)
        b = run_plan(plan, jobs=2)
        assert a.results_csv() == b.results_csv()
        for m in plan.metrics:
            assert a.hist_csv(m) == b.hist_csv(m)
        files = a.write(tmp_path)
        names = sorted(p.name for p in files)
        assert "results.csv" in names and "energy.csv" in names
        assert "hist_zone_size.csv" in names
        text = (tmp_path / "results.csv").read_text().splitlines()
        assert text[0].startswith("# schema_version=1 plan_hash=")
        assert "base_seed=0" in text[0]
        assert text[1] == "N,d_neig,trials,metric,mean,ci999,benefit_vs_3_pct"
        assert len(text) == 2 + 4 * len(plan.metrics)
        assert not a.refinement_violations

    def test_histogram_mass(self):
        plan = ExperimentPlan(**SMALL)
        res = run_plan(plan)
        for c in res.cells:
            zones = c.stats["zone_count"].mean * c.trials_used
            assert sum(c.histograms["zone_size"].values()) == round(zones)
            assert sum(c.histograms["nodes_per_zone"].values()) == round(zones)
            assert sum(c.histograms["max_zone_size"].values()) == c.stats["max_zone_size"].n

    def test_benefit_columns(self):
        res = run_plan(ExperimentPlan(**SMALL))
        for d in (10, 20):
            base = res.cell(3, d).stats["zone_size"]
            four = res.cell(4, d).stats["zone_size"]
            assert base.benefit_vs_3_pct == 0
            assert four.benefit_vs_3_pct == pytest.approx(100 * (base.mean - four.mean) / base.mean)

    def test_no_baseline_column(self):
        plan = ExperimentPlan(**{**SMALL, "landmark_counts": (4,)})
        res = run_plan(plan)
        assert all(s.benefit_vs_3_pct is None for c in res.cells for s in c.stats.values())


@pytest.mark.parametrize("density,seed", [(10, 1), (30, 2), (50, 3)])
def test_nested_refinement_on_fixed_topology(density, seed):
    cfg = TopologyConfig(field_radius=500, neighbor_density=density, landmark_count=10, seed=seed)
    assert check_refinement(cfg) == []


def test_ci_shrinkage_on_resampled_real_metric():
    plan = ExperimentPlan(field_radius=250.0, landmark_counts=(3,), densities=(20,), trials=2)
    recs = run_cell(3, 20, 80, 0, plan)
    vals = np.array([r.values["zone_size"] for r in recs])
    rng = np.random.default_rng(0)

    def mean_halfwidth(n):
        return np.mean([aggregate(rng.choice(vals, n, replace=False))[1] for _ in range(300)])

    assert mean_halfwidth(40) / mean_halfwidth(10) == pytest.approx(0.5, rel=0.20)
