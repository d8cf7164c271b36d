import json
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from wishdiff.cli import main

SCHEMA_PATH = Path(__file__).resolve().parents[1] / "docs" / "output-schema.json"
SCHEMA = json.loads(SCHEMA_PATH.read_text())


def validate(payload: dict, definition: str):
    jsonschema.validate(
        payload, {"$defs": SCHEMA["$defs"], "$ref": f"#/$defs/{definition}"}
    )


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


class TestDensityCommand:
    def test_csv_shape(self, capsys):
        code, out = run(
            capsys, "density", "--n", "2", "--n1", "2", "--n2", "3",
            "--a1", "2/3", "--a2", "1/5", "--grid", "-2:2:9",
        )
        assert code == 0
        lines = out.strip().split("\n")
        assert lines[0] == "lambda,p"
        assert len(lines) == 10

    def test_json_with_exact_form(self, capsys):
        code, out = run(
            capsys, "density", "--n", "2", "--n1", "2", "--n2", "3",
            "--a1", "2/3", "--a2", "1/5", "--grid", "-2:2:5",
            "--format", "json", "--exact-form",
        )
        assert code == 0
        payload = json.loads(out)
        validate(payload, "density")
        from gmpy2 import mpq

        from wishdiff.diagonal_law import EnsembleParams
        from wishdiff.exact_spectral import density
        from wishdiff.specfun import format_rational

        d = density(EnsembleParams(2, 2, 3, mpq(2, 3), mpq(1, 5)))
        assert payload["exact_form"]["zero"] == format_rational(d.at_zero)

    def test_oracle_route_agrees(self, capsys):
        base = [
            "density", "--n", "2", "--n1", "3", "--n2", "4",
            "--a1", "1", "--a2", "1", "--grid", "-3:3:7", "--format", "json",
        ]
        _, exact_out = run(capsys, *base)
        _, oracle_out = run(capsys, *(base + ["--oracle"]))
        exact = json.loads(exact_out)["p"]
        oracle = json.loads(oracle_out)["p"]
        assert np.allclose(exact, oracle, rtol=1e-8, atol=1e-12)

    def test_decimal_weight_rejected(self, capsys):
        with pytest.raises(SystemExit) as err:
            main(["density", "--n", "2", "--n1", "2", "--n2", "3",
                  "--a1", "0.5", "--a2", "1", "--grid", "-1:1:3"])
        assert err.value.code == 2

    def test_invalid_params_exit_code(self, capsys):
        code, _ = run(
            capsys, "density", "--n", "4", "--n1", "2", "--n2", "5",
            "--a1", "1", "--a2", "1", "--grid", "-1:1:3",
        )
        assert code == 2


class TestWlawCommand:
    def test_csv(self, capsys):
        code, out = run(
            capsys, "wlaw", "--n1", "2", "--n2", "3", "--a1", "2/3",
            "--a2", "1/5", "--grid", "-1:1:5",
        )
        assert code == 0
        assert out.startswith("lambda,value\n")

    def test_json_schema(self, capsys):
        code, out = run(
            capsys, "wlaw", "--n1", "2", "--n2", "3", "--a1", "2/3",
            "--a2", "1/5", "--deriv", "3", "--grid", "-1:1:5",
            "--format", "json", "--exact-form",
        )
        assert code == 0
        validate(json.loads(out), "wlaw")

    def test_exact_form_value_at_zero(self, capsys):
        code, out = run(
            capsys, "wlaw", "--n1", "2", "--n2", "3", "--a1", "2/3",
            "--a2", "1/5", "--grid", "-1:1:3", "--format", "json",
            "--exact-form",
        )
        assert code == 0
        assert json.loads(out)["exact_form"]["zero"] == "13500/28561"

    def test_derivative_out_of_range(self, capsys):
        code, _ = run(
            capsys, "wlaw", "--n1", "2", "--n2", "3", "--a1", "1",
            "--a2", "1", "--deriv", "5", "--grid", "-1:1:3",
        )
        assert code == 2


class TestScalarCommands:
    def test_positivity_schema(self, capsys):
        code, out = run(
            capsys, "positivity", "--n", "2", "--n1", "3", "--n2", "4",
            "--a1", "1/2", "--a2", "2",
        )
        assert code == 0
        payload = json.loads(out)
        validate(payload, "positivity")
        assert payload["p_plus"]["exact"]          # nonempty rational

    def test_moments_schema(self, capsys):
        code, out = run(
            capsys, "moments", "--n", "2", "--n1", "3", "--n2", "4",
            "--a1", "1", "--a2", "1", "--gamma-max", "3",
        )
        assert code == 0
        payload = json.loads(out)
        validate(payload, "moments")
        assert payload["moments"]["1"]["exact"] == "-1"

    def test_correlate_schema(self, capsys):
        code, out = run(
            capsys, "correlate", "--n", "3", "--n1", "4", "--n2", "5",
            "--a1", "1", "--a2", "1", "--points", "0.5,-1.5",
        )
        assert code == 0
        validate(json.loads(out), "correlate")

    def test_correlate_too_many_points(self, capsys):
        code, _ = run(
            capsys, "correlate", "--n", "2", "--n1", "3", "--n2", "4",
            "--a1", "1", "--a2", "1", "--points", "0.1,0.2,0.3",
        )
        assert code == 2


class TestAsymptoticCommand:
    def test_ratio_form(self, capsys, tmp_path):
        summary = tmp_path / "sum.json"
        code, out = run(
            capsys, "asymptotic", "--c1", "1", "--c2", "1", "--alpha1", "1",
            "--alpha2", "1", "--grid", "-4:4:17", "--summary", str(summary),
        )
        assert code == 0
        assert out.startswith("lambda,p_hat\n")
        payload = json.loads(summary.read_text())
        validate(payload, "asymptotic_summary")
        assert abs(payload["support"][1] - 3.3301906767855614) < 1e-9

    def test_unscaled_form(self, capsys):
        code, out = run(
            capsys, "asymptotic", "--n", "8", "--n1", "11", "--n2", "11",
            "--a1", "1", "--a2", "1", "--grid", "-30:30:9",
        )
        assert code == 0

    def test_mixed_forms_rejected(self, capsys):
        with pytest.raises(SystemExit) as err:
            main(["asymptotic", "--c1", "1", "--n", "4", "--grid", "-1:1:3"])
        assert err.value.code == 2


class TestSimulateCommand:
    def test_summary_schema_and_histogram(self, capsys, tmp_path):
        hist = tmp_path / "hist.csv"
        summary = tmp_path / "sum.json"
        code, _ = run(
            capsys, "simulate", "--n", "2", "--n1", "2", "--n2", "3",
            "--a1", "1", "--a2", "1", "--samples", "2000", "--seed", "5",
            "--bins", "12", "--output", str(hist), "--summary", str(summary),
        )
        assert code == 0
        lines = hist.read_text().strip().split("\n")
        assert lines[0] == "bin_lo,bin_hi,count,density"
        assert len(lines) == 13
        payload = json.loads(summary.read_text())
        validate(payload, "simulate_summary")
        assert payload["ks_vs_exact"] is not None
        assert payload["ks_vs_exact"] < 0.05

    def test_zero_samples_rejected(self, capsys):
        code, _ = run(
            capsys, "simulate", "--n", "2", "--n1", "2", "--n2", "3",
            "--a1", "1", "--a2", "1", "--samples", "0",
        )
        assert code == 2

    def test_byte_identical_reruns(self, capsys, tmp_path):
        paths = []
        for tag in ("a", "b"):
            hist = tmp_path / f"hist-{tag}.csv"
            summary = tmp_path / f"sum-{tag}.json"
            code, _ = run(
                capsys, "simulate", "--n", "2", "--n1", "3", "--n2", "4",
                "--a1", "1/2", "--a2", "2", "--samples", "500", "--seed", "9",
                "--workers", "3", "--output", str(hist), "--summary", str(summary),
            )
            assert code == 0
            paths.append((hist.read_bytes(), summary.read_bytes()))
        assert paths[0] == paths[1]

    def test_density_matrix_mode(self, capsys, tmp_path):
        summary = tmp_path / "sum.json"
        code, _ = run(
            capsys, "simulate", "--n", "2", "--n1", "2", "--n2", "2",
            "--a1", "1", "--a2", "1", "--samples", "1000",
            "--density-matrices", "--summary", str(summary),
            "--output", str(tmp_path / "h.csv"),
        )
        assert code == 0
        payload = json.loads(summary.read_text())
        validate(payload, "simulate_summary")
        assert payload["ks_vs_exact"] is not None


class TestHelstromCommand:
    def test_fixture_backend(self, capsys, tmp_path):
        summary = tmp_path / "sum.json"
        code, out = run(
            capsys, "helstrom", "--n", "2", "--n1", "2", "--n2", "2",
            "--grid", "-1:1:9", "--summary", str(summary),
        )
        assert code == 0
        payload = json.loads(summary.read_text())
        validate(payload, "helstrom_summary")
        assert payload["backend"] == "fixture"
        assert payload["abs_mean"] == "18/35"

    def test_swapped_fixture(self, capsys, tmp_path):
        summary = tmp_path / "sum.json"
        code, out = run(
            capsys, "helstrom", "--n", "3", "--n1", "4", "--n2", "3",
            "--grid", "-1:1:5", "--summary", str(summary),
        )
        assert code == 0
        assert json.loads(summary.read_text())["backend"] == "fixture"

    def test_forced_asymptotic(self, capsys, tmp_path):
        summary = tmp_path / "sum.json"
        code, _ = run(
            capsys, "helstrom", "--n", "20", "--n1", "20", "--n2", "20",
            "--grid", "-1:1:9", "--asymptotic", "--summary", str(summary),
        )
        assert code == 0
        payload = json.loads(summary.read_text())
        assert payload["backend"] == "asymptotic"
        assert payload["abs_mean"] is None

    def test_forced_simulation(self, capsys, tmp_path):
        summary = tmp_path / "sum.json"
        code, _ = run(
            capsys, "helstrom", "--n", "2", "--n1", "5", "--n2", "5",
            "--grid", "-1:1:9", "--simulate", "500", "--seed", "3",
            "--summary", str(summary), "--output", str(tmp_path / "h.csv"),
        )
        assert code == 0
        assert json.loads(summary.read_text())["backend"] == "mc"

    def test_auto_backend_untabulated_small_n(self, capsys, tmp_path):
        summary = tmp_path / "sum.json"
        code, _ = run(
            capsys, "helstrom", "--n", "2", "--n1", "6", "--n2", "6",
            "--grid", "-1:1:5", "--simulate", "200",
            "--summary", str(summary), "--output", str(tmp_path / "h.csv"),
        )
        assert code == 0

    def test_trivial_dimension_unsupported(self, capsys):
        code, _ = run(capsys, "helstrom", "--n", "1", "--n1", "2", "--n2", "2")
        assert code == 3


class TestVerifyCommand:
    def test_passes_and_prints(self, capsys):
        code, out = run(
            capsys, "verify", "--n", "3", "--n1", "4", "--n2", "5",
            "--a1", "1", "--a2", "1",
        )
        assert code == 0
        lines = out.strip().split("\n")
        assert all(line.startswith("PASS") for line in lines)
        assert len(lines) >= 10


class TestDeterminism:
    def test_density_reruns_identical(self, capsys, tmp_path):
        outputs = []
        for tag in ("a", "b"):
            path = tmp_path / f"{tag}.csv"
            code, _ = run(
                capsys, "density", "--n", "4", "--n1", "5", "--n2", "7",
                "--a1", "2/3", "--a2", "8/7", "--grid", "-12:8:50",
                "--output", str(path),
            )
            assert code == 0
            outputs.append(path.read_bytes())
        assert outputs[0] == outputs[1]
