"""Tests for the simfuse command-line interface."""

import os
from pathlib import Path
from unittest.mock import patch

import pytest
from click.testing import CliRunner

from src.simfuse.cohort import load_cohort_dir
from src.simfuse.distengine import run_local
from src.simfuse.main import cli


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def cohort_dir(runner, temp_dir):
    """A small synthetic cohort written by the gen command."""
    out = os.path.join(temp_dir, "cohort")
    result = runner.invoke(cli, ["gen", "--out", out, "--n", "40", "--variates", "2",
                                 "--series-len", "10", "--signal", "2", "--seed", "1"])
    assert result.exit_code == 0, result.output
    return out


class TestCli:
    """Test cases for the CLI commands."""

    def test_gen_layout(self, cohort_dir):
        """Test that gen writes the static file and one file per variate."""
        assert os.path.exists(os.path.join(cohort_dir, "static.csv"))
        assert len(os.listdir(os.path.join(cohort_dir, "series"))) == 2

    def test_gen_rejects_bad_arguments(self, runner, temp_dir):
        """Test that a library validation error exits with status 1."""
        result = runner.invoke(cli, ["gen", "--out", temp_dir, "--n", "1"])
        assert result.exit_code == 1
        assert "Error:" in result.output

    def test_run_then_eval(self, runner, cohort_dir, temp_dir):
        """Test a full run and re-scoring its predictions file."""
        run_dir = os.path.join(temp_dir, "runs")
        result = runner.invoke(cli, ["--run-dir", run_dir, "run", "--cohort", cohort_dir, "-k", "3"])
        assert result.exit_code == 0, result.output
        assert "EVALUATION REPORT" in result.output

        predictions = next(Path(run_dir).glob("*/predictions.csv"))
        ledger = os.path.join(temp_dir, "ledger.csv")
        result = runner.invoke(cli, ["eval", "--predictions", str(predictions), "--target", "cad",
                                     "-k", "3", "--ledger", ledger])
        assert result.exit_code == 0, result.output
        assert "f_measure" in result.output
        assert os.path.exists(ledger)

    def test_run_dir_from_environment(self, runner, cohort_dir, temp_dir):
        """Test that SIMFUSE_RUN_DIR selects the artifact root."""
        run_dir = os.path.join(temp_dir, "env_runs")
        result = runner.invoke(cli, ["run", "--cohort", cohort_dir, "-k", "3"],
                               env={"SIMFUSE_RUN_DIR": run_dir})
        assert result.exit_code == 0, result.output
        assert os.path.exists(os.path.join(run_dir, "results.csv"))

    def test_stage_error_exit_code(self, runner, cohort_dir, temp_dir):
        """Test that a failing stage is named and exits with status 1."""
        result = runner.invoke(cli, ["--run-dir", temp_dir, "run", "--cohort", cohort_dir,
                                     "-k", "3", "--variates", "999999"])
        assert result.exit_code == 1
        assert "stage 'validate'" in result.output

    def test_invalid_config_exit_code(self, runner, cohort_dir, temp_dir):
        """Test that a rejected configuration exits with status 1 before any compute."""
        result = runner.invoke(cli, ["--run-dir", temp_dir, "run", "--cohort", cohort_dir, "--lambda", "0"])
        assert result.exit_code == 1
        assert "lambda" in result.output

    def test_config_file(self, runner, cohort_dir, temp_dir):
        """Test that flags override values from --config."""
        config = os.path.join(temp_dir, "run.yaml")
        with open(config, "w") as f:
            f.write("k_clusters: 2\ndt_method: zscore\n")
        result = runner.invoke(cli, ["--run-dir", temp_dir, "run", "--cohort", cohort_dir,
                                     "--config", config, "-k", "3"])
        assert result.exit_code == 0, result.output
        assert "zscore" in result.output
        assert "K=3" in result.output

    def test_sweep_needs_two_values(self, runner, cohort_dir, temp_dir):
        """Test that a one-value sweep is a usage error."""
        result = runner.invoke(cli, ["--run-dir", temp_dir, "sweep", "--cohort", cohort_dir,
                                     "--axis", "k_clusters", "--values", "3"])
        assert result.exit_code == 2
        assert "at least two values" in result.output

    def test_sweep(self, runner, cohort_dir, temp_dir):
        """Test a two-value sweep table."""
        result = runner.invoke(cli, ["--run-dir", temp_dir, "sweep", "--cohort", cohort_dir,
                                     "--axis", "k_clusters", "--values", "2,3"])
        assert result.exit_code == 0, result.output
        assert os.path.exists(os.path.join(temp_dir, "sweep_k_clusters.csv"))

    def test_worker_needs_one_mode(self, runner, cohort_dir):
        """Test that the worker takes exactly one of --listen and --connect."""
        result = runner.invoke(cli, ["worker", "--cohort", cohort_dir])
        assert result.exit_code == 2
        result = runner.invoke(cli, ["worker", "--cohort", cohort_dir,
                                     "--listen", "127.0.0.1:0", "--connect", "127.0.0.1:1"])
        assert result.exit_code == 2

    @patch("src.simfuse.main.worker_serve")
    def test_worker_listen_mode(self, mock_serve, runner, cohort_dir):
        """Test that --listen starts the listening worker."""
        result = runner.invoke(cli, ["worker", "--cohort", cohort_dir, "--listen", "127.0.0.1:7000"])
        assert result.exit_code == 0, result.output
        mock_serve.assert_called_once_with("127.0.0.1:7000", cohort_dir)

    @patch("src.simfuse.main.worker_connect")
    def test_worker_connect_mode(self, mock_connect, runner, cohort_dir):
        """Test that --connect dials the coordinator and Ctrl-C stops cleanly."""
        mock_connect.side_effect = KeyboardInterrupt
        result = runner.invoke(cli, ["worker", "--cohort", cohort_dir, "--connect", "10.0.0.1:7000",
                                     "--retry", "5"])
        assert result.exit_code == 0
        assert "Worker stopped" in result.output
        mock_connect.assert_called_once_with("10.0.0.1:7000", cohort_dir, retry_s=5.0)

    @patch("src.simfuse.main.coordinate")
    def test_coordinator_writes_distances(self, mock_coordinate, runner, cohort_dir, temp_dir):
        """Test that the coordinator command merges a planned job into a distances file."""
        run_dir = os.path.join(temp_dir, "runs")
        result = runner.invoke(cli, ["--run-dir", run_dir, "run", "--cohort", cohort_dir, "-k", "3"])
        assert result.exit_code == 0, result.output
        job = next(Path(run_dir).glob("*/job.json"))

        cohort = load_cohort_dir(cohort_dir)
        mock_coordinate.side_effect = lambda manifest, listen, **kwargs: run_local(manifest, cohort)
        out = os.path.join(temp_dir, "merged.csv")
        result = runner.invoke(cli, ["coordinator", "--job", str(job), "--listen", "127.0.0.1:0",
                                     "--out", out])
        assert result.exit_code == 0, result.output
        assert mock_coordinate.call_args.kwargs["retries"] == 3
        assert Path(out).read_text() == (job.parent / "distances.csv").read_text()

    def test_coordinator_rejects_malformed_job(self, runner, temp_dir):
        """Test that a broken job file is an error message with status 1, not a traceback."""
        job = os.path.join(temp_dir, "job.json")
        with open(job, "w") as f:
            f.write('{"job_id": "j1", "fingerprint": "f"}')
        result = runner.invoke(cli, ["coordinator", "--job", job, "--listen", "127.0.0.1:0"])
        assert result.exit_code == 1
        assert "Error:" in result.output
        assert "malformed job manifest" in result.output
        assert not isinstance(result.exception, KeyError)

    def test_bench(self, runner, temp_dir):
        """Test a tiny benchmark run."""
        result = runner.invoke(cli, ["bench", "--n-patients", "3", "--series-len", "4",
                                     "--workers", "1,2", "--out", temp_dir])
        assert result.exit_code == 0, result.output
        assert os.path.exists(os.path.join(temp_dir, "bench.csv"))


if __name__ == "__main__":
    pytest.main([__file__])
