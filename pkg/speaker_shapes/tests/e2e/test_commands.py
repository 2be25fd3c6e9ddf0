"""
E2E tests: command-line flows.

Each scenario runs a management command the way a user would and checks the
files it leaves behind, its summary line and its exit code.
"""

from io import StringIO

import pandas as pd
import pytest
from django.core.management import ManagementUtility, call_command
from django.core.management.base import CommandError


SYSTEMS = ["PC1", "PC2", "PC3", "PC1+2", "PC1+3", "PC2+3", "PC1+2+3"]


# -- helpers ----------------------------------------------------------------

def _call(*args):
    """Run a command and return its stdout."""
    out = StringIO()
    call_command(*args, stdout=out, stderr=StringIO())
    return out.getvalue()


def _synthetic_section(n_speakers=8):
    return "\n".join([
        "synthetic.landmark_count = 7",
        f"synthetic.n_speakers = {n_speakers}",
        "synthetic.n_trials = 8",
        "synthetic.between_cov = 9,0,0; 0,4,0; 0,0,1",
        "synthetic.within_cov = 1,0,0; 0,1,0; 0,0,0.5",
        "synthetic.landmark_noise_sd = 0.05",
        "synthetic.seed = 3",
    ])


def _write_config(tmp_path, *lines, n_speakers=8):
    path = tmp_path / "experiment.cfg"
    path.write_text("\n".join(lines) + "\n" + _synthetic_section(n_speakers) + "\n", encoding="utf-8")
    return path


class TestFilterCommand:
    """filter: MAD outlier removal."""

    def test_clean_table_keeps_every_trial(self, small_csv, tmp_path):
        """No trial of the small fixture is an outlier."""
        output = tmp_path / "clean.csv"

        out = _call("filter", "--input", str(small_csv), "--output", str(output))

        assert "removed 0/12 (0.0%)" in out
        assert len(pd.read_csv(output)) == 12
        assert (tmp_path / "clean.removals.json").exists()
        assert (tmp_path / "clean.manifest.json").exists()

    def test_displaced_landmark_removes_trial(self, outlier_csv, tmp_path):
        """A landmark 50 mm off drops exactly that trial."""
        output = tmp_path / "clean.csv"

        out = _call("filter", "--input", str(outlier_csv), "--output", str(output))

        assert "removed 1/12 (8.3%)" in out
        assert "A05" not in set(pd.read_csv(output)["trial_id"])

    def test_missing_input_is_an_input_error(self, tmp_path):
        with pytest.raises(CommandError) as excinfo:
            _call("filter", "--input", str(tmp_path / "missing.csv"), "--output", str(tmp_path / "out.csv"))
        assert excinfo.value.returncode == 2

    def test_non_positive_threshold_is_a_validation_error(self, small_csv, tmp_path):
        with pytest.raises(CommandError) as excinfo:
            _call("filter", "--input", str(small_csv), "--output", str(tmp_path / "out.csv"), "--threshold", "0")
        assert excinfo.value.returncode == 3
        assert not (tmp_path / "out.csv").exists()

    def test_exit_codes_from_command_line(self, tmp_path, capsys):
        """Unknown flags and input errors surface as process exit codes."""
        with pytest.raises(SystemExit) as excinfo:
            ManagementUtility(["manage.py", "filter", "--bogus"]).execute()
        assert excinfo.value.code == 2

        with pytest.raises(SystemExit) as excinfo:
            ManagementUtility([
                "manage.py", "filter",
                "--input", str(tmp_path / "missing.csv"),
                "--output", str(tmp_path / "out.csv"),
            ]).execute()
        assert excinfo.value.code == 2


class TestShapesCommand:
    """shapes: alignment, PCA and derived tables."""

    def test_writes_tables(self, small_csv, tmp_path):
        out = _call("shapes", "--input", str(small_csv), "--output", str(tmp_path / "shapes"), "--q", "2")

        assert out.startswith("size-and-shape: PC1 ")
        scores = pd.read_csv(tmp_path / "shapes" / "pc_scores.csv")
        assert len(scores) == 12
        explained = pd.read_csv(tmp_path / "shapes" / "explained_variance.csv")
        assert len(explained) == 2

    def test_same_input_same_bytes(self, small_csv, tmp_path):
        for name in ("first", "second"):
            _call("shapes", "--input", str(small_csv), "--output", str(tmp_path / name), "--q", "2", "--mode", "shape")

        for table in ("aligned_shapes.csv", "pc_loadings.csv", "pc_scores.csv", "effect_shapes.csv"):
            assert (tmp_path / "first" / table).read_bytes() == (tmp_path / "second" / table).read_bytes()

    def test_too_many_components(self, small_csv, tmp_path):
        """k=3 landmarks cannot support 6 components."""
        with pytest.raises(CommandError) as excinfo:
            _call("shapes", "--input", str(small_csv), "--output", str(tmp_path / "shapes"), "--q", "6")
        assert excinfo.value.returncode == 3


class TestRunCommand:
    """run: the full discrimination experiment."""

    def test_bundled_synthetic_config(self, fixtures_dir, tmp_path):
        out = _call("run", "--config", str(fixtures_dir / "synthetic_run.cfg"), "--output", str(tmp_path / "run"))

        metrics = pd.read_csv(tmp_path / "run" / "metrics.csv")
        assert list(metrics["system"]) == SYSTEMS
        assert list(metrics.columns) == ["system", "eer_percent", "cllr"]
        assert out.count("size-and-shape ") == 7
        for name in ("metrics.json", "scores.csv", "tippett.csv", "speaker_correlations.csv", "manifest.json"):
            assert (tmp_path / "run" / name).exists()

    def test_rerun_gives_identical_metrics(self, fixtures_dir, tmp_path):
        config = str(fixtures_dir / "synthetic_run.cfg")
        _call("run", "--config", config, "--output", str(tmp_path / "first"))
        _call("run", "--config", config, "--output", str(tmp_path / "second"))

        for table in ("metrics.csv", "scores.csv"):
            assert (tmp_path / "first" / table).read_bytes() == (tmp_path / "second" / table).read_bytes()

    def test_two_modes_get_prefixed_columns(self, tmp_path):
        config = _write_config(
            tmp_path,
            "experiment.output = run",
            "experiment.modes = size-and-shape, shape",
            "experiment.feature_sets = 1;1+2",
        )

        _call("run", "--config", str(config))

        metrics = pd.read_csv(tmp_path / "run" / "metrics.csv")
        assert list(metrics.columns) == [
            "system",
            "size_and_shape_eer_percent",
            "size_and_shape_cllr",
            "shape_only_eer_percent",
            "shape_only_cllr",
        ]

    def test_component_beyond_q(self, tmp_path):
        config = _write_config(tmp_path, "experiment.output = run", "experiment.feature_sets = 4")

        with pytest.raises(CommandError) as excinfo:
            _call("run", "--config", str(config))

        assert excinfo.value.returncode == 3
        assert "PC4" in str(excinfo.value)

    def test_four_speakers_are_not_enough(self, tmp_path):
        config = _write_config(tmp_path, "experiment.output = run", "experiment.feature_sets = 1", n_speakers=4)

        with pytest.raises(CommandError) as excinfo:
            _call("run", "--config", str(config))

        assert excinfo.value.returncode == 3
        assert not (tmp_path / "run" / "metrics.csv").exists()

    def test_unreadable_config(self, tmp_path):
        with pytest.raises(CommandError) as excinfo:
            _call("run", "--config", str(tmp_path / "missing.cfg"))
        assert excinfo.value.returncode == 2


class TestSynthCommand:
    """synth: synthetic dataset generation."""

    def test_reference_spec(self, fixtures_dir, tmp_path):
        output = tmp_path / "synthetic.csv"

        out = _call("synth", "--config", str(fixtures_dir / "synthetic_spec.cfg"), "--output", str(output))

        assert out.strip() == "wrote 400 trials (20 speakers, k=11)"
        table = pd.read_csv(output)
        assert len(table) == 400
        assert table["speaker"].nunique() == 20

    def test_seed_override_changes_data(self, fixtures_dir, tmp_path):
        config = str(fixtures_dir / "synthetic_spec.cfg")
        _call("synth", "--config", config, "--output", str(tmp_path / "a.csv"))
        _call("synth", "--config", config, "--output", str(tmp_path / "b.csv"))
        _call("synth", "--config", config, "--output", str(tmp_path / "c.csv"), "--seed", "12")

        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert (tmp_path / "a.csv").read_bytes() != (tmp_path / "c.csv").read_bytes()

    def test_non_symmetric_covariance(self, tmp_path):
        config = tmp_path / "bad.cfg"
        config.write_text(
            "synthetic.landmark_count = 7\n"
            "synthetic.n_speakers = 8\n"
            "synthetic.n_trials = 8\n"
            "synthetic.between_cov = 4,1; 0,1\n"
            "synthetic.within_cov = 1,0; 0,1\n",
            encoding="utf-8",
        )

        with pytest.raises(CommandError) as excinfo:
            _call("synth", "--config", str(config), "--output", str(tmp_path / "out.csv"))

        assert excinfo.value.returncode == 3
        assert not (tmp_path / "out.csv").exists()
