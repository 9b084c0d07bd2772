"""Tests for run configuration, the end-to-end pipeline, sweeps and benchmarks."""

import json
import os

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

from src.simfuse.cohort import PatientRecord, generate_synthetic_cohort, write_cohort
from src.simfuse.errors import InvalidParameter, PipelineStageError
from src.simfuse.pipeline import RunStore, bench_dtw, probe_kernel_memory, run_grid, run_pipeline, sweep, time_pairwise
from src.simfuse.settings import RunConfig, build_run_config, load_run_config


@pytest.fixture
def cohort():
    """Forty patients, two variates, planted signal."""
    return generate_synthetic_cohort(40, variates=2, series_len=10, signal_strength=2.0, seed=1)


@pytest.fixture
def config():
    """A small local configuration with explicit cluster count."""
    return build_run_config({"target": "cad", "k_clusters": 3, "test_fraction": 0.25, "block_size": 4})


class TestRunConfig:
    """Test cases for RunConfig validation and layering."""

    def test_packaged_defaults(self):
        """Test that the defaults pick aWOE, k-means and the per-target k."""
        cfg = load_run_config()
        assert cfg.dt_method.value == "awoe"
        assert cfg.clustering.value == "kmeans"
        assert (cfg.lam, cfg.q, cfg.epsilon) == (1, 20, 1e-4)
        assert cfg.cluster_count == 125
        assert cfg.updated(target="chf").cluster_count == 150

    def test_lambda_alias(self):
        """Test that lambda is accepted under its external name."""
        assert build_run_config({"lambda": 3}).lam == 3
        assert build_run_config({"lambda": 3}).to_json_dict()["lambda"] == 3

    @pytest.mark.parametrize("values", [
        {"target": "copd"},
        {"lambda": 0},
        {"k_clusters": 0},
        {"band": -1},
        {"workers": 0},
        {"test_fraction": 1.0},
        {"clustering": "dbscan"},
        {"clustering": "spectral", "k_clusters": 1},
        {"clustering": "optics", "min_samples": 1},
        {"endpoints": "localhost"},
        {"variates": []},
        {"colour": "blue"},
    ])
    def test_rejected_values(self, values):
        """Test that invalid configurations fail before any compute."""
        with pytest.raises(InvalidParameter):
            build_run_config(values)

    def test_endpoints_from_string(self):
        """Test that a comma-separated endpoint list is split."""
        cfg = build_run_config({"endpoints": "a:7000, b:7001"})
        assert cfg.endpoints == ["a:7000", "b:7001"]

    def test_file_and_overrides(self, temp_dir):
        """Test that the file beats defaults and set overrides beat the file."""
        path = os.path.join(temp_dir, "run.yaml")
        with open(path, "w") as f:
            f.write("target: chf\nk_clusters: 7\nlambda: 2\n")
        cfg = load_run_config(path, {"k_clusters": None, "seed": 3})
        assert (cfg.target, cfg.k_clusters, cfg.lam, cfg.seed) == ("chf", 7, 2, 3)

    def test_json_config_file(self, temp_dir):
        """Test that a JSON file is read by the same loader."""
        path = os.path.join(temp_dir, "run.json")
        with open(path, "w") as f:
            json.dump({"dt_method": "zscore", "band": 4}, f)
        cfg = load_run_config(path)
        assert cfg.dt_method.value == "zscore"
        assert cfg.dtw_config().band == 4

    def test_bad_config_file(self, temp_dir):
        """Test that unreadable or non-mapping files are rejected."""
        path = os.path.join(temp_dir, "list.yaml")
        with open(path, "w") as f:
            f.write("- 1\n- 2\n")
        with pytest.raises(InvalidParameter):
            load_run_config(path)
        with pytest.raises(InvalidParameter):
            load_run_config(os.path.join(temp_dir, "absent.yaml"))

    def test_run_hash(self):
        """Test what the run hash does and does not depend on."""
        cfg = RunConfig()
        assert cfg.run_hash("abc") == cfg.updated(workers=8, endpoints=["h:1"], retries=0).run_hash("abc")
        assert cfg.run_hash("abc") == cfg.updated(k_clusters=125).run_hash("abc")
        assert cfg.run_hash("abc") != cfg.updated(lam=2).run_hash("abc")
        assert cfg.run_hash("abc") != cfg.run_hash("abd")
        assert cfg.run_name("abc").startswith("cad-awoe-kmeans-")

    def test_frozen(self):
        """Test that a validated config cannot be mutated."""
        cfg = RunConfig()
        with pytest.raises(ValidationError):
            cfg.seed = 5


class TestRunPipeline:
    """Test cases for run_pipeline."""

    def test_artifacts(self, cohort, config, temp_dir):
        """Test that a run from a cohort directory leaves every artifact behind."""
        cohort_dir = os.path.join(temp_dir, "cohort")
        write_cohort(cohort, cohort_dir)
        store = RunStore(os.path.join(temp_dir, "runs"))

        report = run_pipeline(config, cohort_dir=cohort_dir, store=store)

        runs = [p for p in store.root.iterdir() if p.is_dir()]
        assert len(runs) == 1
        for name in ("config.json", "binning.json", "clusters.csv", "job.json",
                     "distances.csv", "predictions.csv", "report.json"):
            assert (runs[0] / name).exists(), name
        assert report.n_test == 10
        assert all(0.0 <= v <= 1.0 for v in report.metric_values().values())

        predictions = pd.read_csv(runs[0] / "predictions.csv")
        assert len(predictions) == 10
        assert set(predictions["target"]) == {"cad"}

        ledger = pd.read_csv(store.ledger_path)
        assert len(ledger) == 1
        assert ledger["k_clusters"].tolist() == [3]

    def test_completed_run_is_reused(self, cohort, config, temp_dir):
        """Test that a finished run is read back unless forced."""
        store = RunStore(temp_dir)
        first = run_pipeline(config, cohort=cohort, store=store)
        second = run_pipeline(config, cohort=cohort, store=store)
        assert second == first
        assert len(pd.read_csv(store.ledger_path)) == 1

        run_pipeline(config, cohort=cohort, store=store, force=True)
        assert len(pd.read_csv(store.ledger_path)) == 2

    def test_worker_count_does_not_change_results(self, cohort, config, temp_dir):
        """Test that local parallelism leaves predictions unchanged."""
        one = run_pipeline(config, cohort=cohort, store=RunStore(os.path.join(temp_dir, "a")))
        four = run_pipeline(config.updated(workers=4), cohort=cohort, store=RunStore(os.path.join(temp_dir, "b")))
        assert one.counts == four.counts
        assert one.auc == four.auc

    def test_every_method_runs(self, cohort, temp_dir):
        """Test each transform and clustering choice end to end."""
        store = RunStore(temp_dir)
        for dt_method in ("awoe", "zscore", "none"):
            for clustering, extra in (("kmeans", {}), ("agglomerative", {}), ("spectral", {}),
                                      ("optics", {"min_samples": 3}), ("none", {})):
                cfg = build_run_config({"k_clusters": 3, "dt_method": dt_method,
                                        "clustering": clustering, **extra})
                report = run_pipeline(cfg, cohort=cohort, store=store)
                assert report.descriptor.clustering == clustering

    def test_unknown_variate_names_stage(self, cohort, config, temp_dir):
        """Test that a hard error is attributed to the stage that raised it."""
        store = RunStore(temp_dir)
        with pytest.raises(PipelineStageError) as info:
            run_pipeline(config.updated(variates=["999999"]), cohort=cohort, store=store)
        assert info.value.stage == "validate"
        assert isinstance(info.value.cause, InvalidParameter)
        assert not [p for p in store.root.iterdir() if p.is_dir()]

    def test_too_many_clusters_rejected_before_compute(self, cohort, config, temp_dir):
        """Test that k above the patient count fails validation, not clustering."""
        store = RunStore(temp_dir)
        with pytest.raises(PipelineStageError) as info:
            run_pipeline(config.updated(k_clusters=41), cohort=cohort, store=store)
        assert info.value.stage == "validate"
        assert "k_clusters 41" in str(info.value.cause)
        assert not [p for p in store.root.iterdir() if p.is_dir()]

    def test_check_cohort(self, cohort):
        """Test the cohort-dependent checks directly."""
        build_run_config({"k_clusters": 40}).check_cohort(cohort)
        build_run_config({"clustering": "optics", "k_clusters": 1000}).check_cohort(cohort)
        with pytest.raises(InvalidParameter, match="k_clusters 41.*variates not present"):
            build_run_config({"k_clusters": 41, "variates": ["nope"]}).check_cohort(cohort)

    def test_missing_cohort_directory(self, config, temp_dir):
        """Test that an absent cohort fails in the load stage."""
        with pytest.raises(PipelineStageError) as info:
            run_pipeline(config, cohort_dir=os.path.join(temp_dir, "nope"), store=RunStore(temp_dir))
        assert info.value.stage == "load"

    def test_needs_a_cohort(self, config, temp_dir):
        """Test that a run without any cohort source is rejected."""
        with pytest.raises(InvalidParameter):
            run_pipeline(config, store=RunStore(temp_dir))

    def test_observation_window(self, cohort, config, temp_dir):
        """Test that a truncated window is a separate run with its own results."""
        store = RunStore(temp_dir)
        run_pipeline(config, cohort=cohort, store=store)
        run_pipeline(config.updated(observation_hours=3), cohort=cohort, store=store)
        assert len([p for p in store.root.iterdir() if p.is_dir()]) == 2


def signal_cohort(signal_strength: float = 2.0):
    """500 patients, four variates, 100 hourly samples, seed 1."""
    return generate_synthetic_cohort(500, variates=4, series_len=100, signal_strength=signal_strength, seed=1)


def without_series(cohort, fraction: float, seed: int):
    """Copy of cohort with a random share of its (patient, variate) series deleted."""
    pairs = [(r.patient_id, v) for r in cohort.records for v in sorted(r.series)]
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(pairs), size=int(round(fraction * len(pairs))), replace=False)
    dropped = {pairs[i] for i in chosen}
    records = [
        PatientRecord(
            r.patient_id,
            r.statics,
            r.labels,
            {v: ts for v, ts in r.series.items() if (r.patient_id, v) not in dropped},
        )
        for r in cohort.records
    ]
    return cohort.with_records(records)


@pytest.mark.slow
class TestSignalRecovery:
    """End-to-end behavior on planted-signal cohorts (aWOE, k-means, K=25, lambda=1)."""

    @pytest.fixture
    def signal_config(self):
        return build_run_config({"dt_method": "awoe", "clustering": "kmeans", "k_clusters": 25, "lambda": 1})

    def test_planted_signal_is_recovered(self, signal_config, temp_dir):
        """Test that signal strength 2 gives F-measure and AUC of at least 0.85."""
        report = run_pipeline(signal_config, cohort=signal_cohort(), store=RunStore(temp_dir))
        assert report.metrics.f_measure >= 0.85
        assert report.auc >= 0.85

    def test_no_signal_is_chance(self, signal_config, temp_dir):
        """Test that labels independent of the data give AUC in [0.4, 0.6]."""
        report = run_pipeline(signal_config, cohort=signal_cohort(0.0), store=RunStore(temp_dir))
        assert 0.4 <= report.auc <= 0.6

    def test_transform_ordering(self, signal_config, temp_dir):
        """Test F(awoe) >= F(zscore) >= F(none) averaged over five seeds."""
        cohort = signal_cohort()
        store = RunStore(temp_dir)
        mean_f = {}
        for dt_method in ("awoe", "zscore", "none"):
            scores = [
                run_pipeline(signal_config.updated(dt_method=dt_method, seed=seed), cohort=cohort, store=store)
                .metrics.f_measure
                for seed in range(5)
            ]
            mean_f[dt_method] = float(np.mean(scores))

        assert mean_f["awoe"] - mean_f["zscore"] >= -0.02
        assert mean_f["zscore"] - mean_f["none"] >= -0.02
        assert mean_f["awoe"] > mean_f["none"]

    def test_observation_window_trend(self, signal_config, temp_dir):
        """Test that F-measure rises with the window, allowing one dip of at most 0.02."""
        table = sweep(signal_config, "observation_hours", [3, 6, 9, 12], cohort=signal_cohort(),
                      store=RunStore(temp_dir))
        assert (table["failed"] == 0).all()
        f = table["f_measure"].tolist()
        dips = [earlier - later for earlier, later in zip(f, f[1:]) if later < earlier]
        assert len(dips) <= 1
        assert all(dip <= 0.02 for dip in dips)

    def test_missing_series_only_move_changed_votes(self, signal_config, temp_dir):
        """Test that deleting 30% of series changes only predictions whose votes changed."""
        full_store = RunStore(os.path.join(temp_dir, "full"))
        sparse_store = RunStore(os.path.join(temp_dir, "sparse"))
        cohort = signal_cohort()
        run_pipeline(signal_config, cohort=cohort, store=full_store)
        report = run_pipeline(signal_config, cohort=without_series(cohort, 0.3, seed=11), store=sparse_store)
        assert 0.0 <= report.auc <= 1.0

        full = pd.read_csv(next(full_store.root.glob("*/predictions.csv")))
        sparse = pd.read_csv(next(sparse_store.root.glob("*/predictions.csv")))
        both = full.merge(sparse, on="patient_id", suffixes=("_full", "_sparse"))
        assert len(both) == len(full) == len(sparse)

        same_votes = (both["votes_pos_full"] == both["votes_pos_sparse"]) & (
            both["votes_neg_full"] == both["votes_neg_sparse"]
        )
        unchanged = both[same_votes]
        assert (unchanged["score_full"] == unchanged["score_sparse"]).all()
        # an even split follows the nearest neighbor, which may move without the counts moving
        decided = unchanged[unchanged["votes_pos_full"] != unchanged["votes_neg_full"]]
        assert (decided["predicted_full"] == decided["predicted_sparse"]).all()


class TestExperiments:
    """Test cases for sweeps and the method grid."""

    def test_sweep_k(self, cohort, config, temp_dir):
        """Test a sweep over the cluster count, including a failing value."""
        store = RunStore(temp_dir)
        table = sweep(config, "k_clusters", [2, 3, 1000], cohort=cohort, store=store)

        assert table["k_clusters"].tolist() == [2, 3, 1000]
        assert table["runs"].tolist() == [1, 1, 0]
        assert table["failed"].tolist() == [0, 0, 1]
        assert table.loc[2, "error"] != ""
        assert (store.root / "sweep_k_clusters.csv").exists()

    def test_sweep_repeats_average(self, cohort, config, temp_dir):
        """Test that repeats run with successive seeds."""
        table = sweep(config, "observation_hours", [4, 8], cohort=cohort, store=RunStore(temp_dir), repeats=2)
        assert table["runs"].tolist() == [2, 2]

    def test_sweep_validation(self, cohort, config, temp_dir):
        """Test the sweep argument checks."""
        store = RunStore(temp_dir)
        with pytest.raises(InvalidParameter):
            sweep(config, "lambda", [1, 2], cohort=cohort, store=store)
        with pytest.raises(InvalidParameter):
            sweep(config, "k_clusters", [2], cohort=cohort, store=store)
        with pytest.raises(InvalidParameter):
            sweep(config, "k_clusters", [2, 3], cohort=cohort, store=store, repeats=0)

    def test_grid(self, cohort, config, temp_dir):
        """Test the grid table and its improvement over the none baseline."""
        store = RunStore(temp_dir)
        table = run_grid(config, ["cad"], ["none", "awoe"], ["kmeans"], cohort=cohort, store=store)

        assert len(table) == 2
        assert (table["error"] == "").all()
        baseline = table[table["dt_method"] == "none"].iloc[0]
        if baseline["accuracy"] > 0:
            assert baseline["accuracy_improvement_pct"] == pytest.approx(0.0)
        assert (store.root / "grid.csv").exists()


class TestBench:
    """Test cases for the DTW timing harness."""

    def test_bench_table(self, temp_dir):
        """Test one row per combination with all ordered pairs timed."""
        table = bench_dtw([4], [5], [1, 2], out_dir=temp_dir)
        assert table["workers"].tolist() == [1, 2]
        assert table["n_pairs"].tolist() == [12, 12]
        assert (table["seconds"] > 0).all()
        assert os.path.exists(os.path.join(temp_dir, "bench.csv"))

    def test_bench_validation(self):
        """Test that degenerate sizes are rejected."""
        with pytest.raises(InvalidParameter):
            bench_dtw([1], [5], [1])
        with pytest.raises(InvalidParameter):
            bench_dtw([4], [5], [])

    def test_memory_probe(self):
        """Test the single-pair probe output."""
        probe = probe_kernel_memory(200)
        assert probe["distance"] >= 0
        assert probe["full_matrix_kib"] == pytest.approx(312.5)
        with pytest.raises(InvalidParameter):
            probe_kernel_memory(0)

    @pytest.mark.benchmark
    @pytest.mark.skipif((os.cpu_count() or 1) < 4, reason="needs at least 4 CPUs")
    def test_parallel_speedup(self):
        """Test that four local workers beat one on a sizeable job."""
        from src.simfuse.dtw import warm_up

        warm_up()
        one = time_pairwise(200, 200, 1)
        four = time_pairwise(200, 200, 4)
        assert four.seconds <= 0.6 * one.seconds


if __name__ == "__main__":
    pytest.main([__file__])
