"""CLI behavior: flag handling, output formats, exit codes, sweeps,
validation runs and trace fitting, exercised in process through main()."""
import csv
import io
import json
import math

import numpy as np
import pytest

from kmusec import estimate as em
from kmusec.cli import main
from kmusec.estimate import EnvelopeTrace, sample_envelope, write_trace_binary
from kmusec.fading import KappaMuParams


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


class TestSpsc:
    def test_rayleigh_preset(self, capsys):
        rec = run_json(capsys, "spsc", "--preset", "rayleigh",
                       "--gbar-m-db", "4.771", "--gbar-e-db", "0")
        # 4.771 dB is a mean-SNR ratio of 2.9998
        assert rec["value"] == pytest.approx(0.75, abs=1e-4)
        assert rec["schema"] == 1
        assert rec["metric"] == "spsc"

    def test_scenario_alias_matches_figure_preset(self, capsys):
        a = run_json(capsys, "spsc", "--preset", "rayleigh", "--gbar-m-db", "3")
        b = run_json(capsys, "spsc", "--preset", "fig2-rayleigh",
                     "--gbar-m-db", "3")
        assert a["value"] == b["value"]

    def test_identical_channels(self, capsys):
        rec = run_json(capsys, "spsc", "--km", "2", "--um", "1.3",
                       "--ke", "2", "--ue", "1.3")
        assert rec["value"] == pytest.approx(0.5, abs=1e-6)

    def test_rice_flags_select_closed_form(self, capsys):
        from kmusec.secrecy import spsc_rice_reference
        rec = run_json(capsys, "spsc", "--km", "15", "--um", "1",
                       "--ke", "12", "--ue", "1",
                       "--gbar-m-db", "0", "--gbar-e-db", "0")
        assert rec["method"] == "closed_form"
        assert rec["value"] == pytest.approx(
            spsc_rice_reference(15.0, 12.0, 1.0, 1.0), abs=1e-10)

    def test_method_override(self, capsys):
        args = ["spsc", "--km", "15", "--um", "1", "--ke", "12", "--ue", "1"]
        series = run_json(capsys, *args, "--method", "series")
        closed = run_json(capsys, *args, "--method", "closed")
        quadr = run_json(capsys, *args, "--method", "quadrature")
        assert series["method"] == "series"
        assert closed["method"] == "closed_form"
        assert quadr["method"] == "quadrature"
        assert series["value"] == pytest.approx(closed["value"], abs=1e-8)
        assert series["value"] == pytest.approx(quadr["value"], abs=1e-6)

    def test_mc_method_deterministic(self, capsys):
        args = ["spsc", "--preset", "d2d", "--method", "mc",
                "--mc-n", "50000", "--seed", "9"]
        a = run_json(capsys, *args)
        b = run_json(capsys, *args)
        assert a == b
        assert a["method"] == "monte_carlo"

    def test_db_equals_linear(self, capsys):
        a = run_json(capsys, "spsc", "--preset", "d2d", "--gbar-m-db", "7")
        b = run_json(capsys, "spsc", "--preset", "d2d",
                     "--gbar-m-linear", repr(10.0 ** 0.7))
        assert abs(a["value"] - b["value"]) <= 1e-12

    def test_csv_format(self, capsys):
        code, out, _ = run(capsys, "spsc", "--preset", "d2d", "--format", "csv")
        assert code == 0
        rows = list(csv.reader(io.StringIO(out)))
        assert rows[0][:2] == ["metric", "value"]
        assert 0.0 <= float(rows[1][1]) <= 1.0

    def test_missing_parameters_exit_2(self, capsys):
        code, _, err = run(capsys, "spsc", "--km", "2")
        assert code == 2
        assert "error" in err

    def test_invalid_parameter_exit_2(self, capsys):
        code, _, _ = run(capsys, "spsc", "--km", "-1", "--um", "1",
                         "--ke", "1", "--ue", "1")
        assert code == 2

    def test_non_convergence_exit_3(self, capsys):
        code, _, err = run(capsys, "spsc", "--km", "50", "--um", "10",
                           "--ke", "45", "--ue", "9", "--method", "series",
                           "--max-terms", "20")
        assert code == 3
        assert "convergence" in err


class TestSop:
    def test_lower_is_spsc_complement(self, capsys):
        spsc = run_json(capsys, "spsc", "--preset", "d2d", "--method", "series")
        sop = run_json(capsys, "sop", "--preset", "d2d", "--rate-nats", "0",
                       "--bound", "lower")
        assert sop["value"] + spsc["value"] == pytest.approx(1.0, abs=1e-8)

    def test_exact_at_least_lower(self, capsys):
        exact = run_json(capsys, "sop", "--preset", "fig4", "--gbar-m-db", "7")
        lower = run_json(capsys, "sop", "--preset", "fig4", "--gbar-m-db", "7",
                         "--bound", "lower")
        assert exact["value"] >= lower["value"] - 1e-9
        assert exact["metric"] == "sop_exact"
        assert lower["metric"] == "sop_lower"

    def test_rate_bits_conversion(self, capsys):
        nats = run_json(capsys, "sop", "--preset", "d2d", "--rate-nats",
                        repr(math.log(2.0)), "--bound", "lower")
        bits = run_json(capsys, "sop", "--preset", "d2d", "--rate-bits", "1",
                        "--bound", "lower")
        assert nats["value"] == pytest.approx(bits["value"], abs=1e-14)

    def test_preset_rate_applies(self, capsys):
        rec = run_json(capsys, "sop", "--preset", "fig4")
        assert rec["params"]["rate_nats"] == pytest.approx(10 ** 0.1)


class TestSweep:
    def test_constant_for_identical_channels(self, capsys):
        code, out, _ = run(capsys, "sweep", "--km", "2", "--um", "1.1",
                           "--ke", "2", "--ue", "1.1",
                           "--variable", "rate", "--start", "0",
                           "--stop", "1", "--steps", "3")
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        assert len(rows) == 3
        for row in rows:
            assert float(row["spsc"]) == pytest.approx(0.5, abs=1e-6)

    def test_rayleigh_curve_matches_formula(self, capsys):
        code, out, _ = run(capsys, "sweep", "--preset", "fig2-rayleigh",
                           "--variable", "gamma_bar_m_db",
                           "--start", "-10", "--stop", "10", "--steps", "5")
        assert code == 0
        for row in csv.DictReader(io.StringIO(out)):
            g = 10.0 ** (float(row["value"]) / 10.0)
            assert float(row["spsc"]) == pytest.approx(g / (g + 1.0), abs=1e-6)

    @pytest.mark.parametrize("preset", ["fig2-rice", "fig2-nakagami",
                                        "fig2-rayleigh", "fig4"])
    def test_assert_monotone_passes_on_presets(self, capsys, preset):
        code, out, err = run(capsys, "sweep", "--preset", preset,
                             "--variable", "gamma_bar_m_db",
                             "--start", "-10", "--stop", "30", "--steps", "9",
                             "--assert-monotone")
        assert code == 0, err

    def test_csv_round_trip_lossless(self, capsys):
        code, out, _ = run(capsys, "sweep", "--preset", "d2d",
                           "--variable", "gamma_bar_m_db",
                           "--start", "-5", "--stop", "5", "--steps", "4")
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        values = [float(r["spsc"]) for r in rows]
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["spsc"])
        for v in values:
            w.writerow([repr(v)])
        again = [float(r["spsc"]) for r in csv.DictReader(io.StringIO(buf.getvalue()))]
        assert again == values

    def test_atomic_output_file(self, capsys, tmp_path):
        target = tmp_path / "curve.csv"
        code, out, _ = run(capsys, "sweep", "--preset", "d2d",
                           "--variable", "gamma_bar_m_db",
                           "--start", "0", "--stop", "6", "--steps", "3",
                           "--output", str(target))
        assert code == 0
        assert out == ""
        rows = list(csv.DictReader(target.open()))
        assert len(rows) == 3
        assert not list(tmp_path.glob(".kmusec-*"))

    def test_with_mc_reproducible(self, capsys):
        args = ["sweep", "--preset", "d2d", "--variable", "gamma_bar_m_db",
                "--start", "0", "--stop", "3", "--steps", "2",
                "--with-mc", "20000", "--seed", "5"]
        _, out1, _ = run(capsys, *args)
        _, out2, _ = run(capsys, *args)
        assert out1 == out2
        rows = list(csv.DictReader(io.StringIO(out1)))
        for row in rows:
            assert 0.0 <= float(row["mc_spsc"]) <= 1.0
            assert float(row["mc_sop_lower"]) <= float(row["mc_sop_exact"])

    def test_bad_grid_exit_2(self, capsys):
        code, _, _ = run(capsys, "sweep", "--preset", "d2d",
                         "--variable", "rate", "--start", "1",
                         "--stop", "0", "--steps", "3")
        assert code == 2

    def test_probabilities_in_range(self, capsys):
        code, out, _ = run(capsys, "sweep", "--preset", "ban",
                           "--variable", "kappa_e", "--start", "0.5",
                           "--stop", "8", "--steps", "4")
        assert code == 0
        for row in csv.DictReader(io.StringIO(out)):
            for col in ("spsc", "sop_exact", "sop_lower"):
                assert 0.0 <= float(row[col]) <= 1.0


class TestValidate:
    def test_small_grid_passes(self, capsys):
        code, out, err = run(capsys, "validate", "--grid", "small",
                             "--mc-n", "50000")
        assert code == 0, err
        report = json.loads(out)
        assert report["pass"] is True
        assert {c["name"] for c in report["checks"]} == {
            "series_vs_closed_form", "series_vs_quadrature",
            "series_vs_monte_carlo_3se", "complement_identity_rate0",
            "bound_ordering"}

    def test_self_test_break_fails(self, capsys):
        code, out, _ = run(capsys, "validate", "--grid", "small",
                           "--mc-n", "50000", "--self-test-break")
        assert code == 4
        report = json.loads(out)
        assert report["pass"] is False


class TestFit:
    def test_fit_synthetic(self, capsys, tmp_path):
        trace = sample_envelope(KappaMuParams(2.0, 1.5, 1.0), 100_000, seed=1)
        path = tmp_path / "trace.bin"
        write_trace_binary(path, trace)
        rec = run_json(capsys, "fit", "--trace", str(path))
        assert 1.7 <= rec["kappa_hat"] <= 2.3
        assert 1.35 <= rec["mu_hat"] <= 1.65

    def test_power_input_kind(self, capsys, tmp_path):
        trace = sample_envelope(KappaMuParams(2.0, 1.5, 1.0), 50_000, seed=2)
        path = tmp_path / "power.csv"
        path.write_text("power\n" + "\n".join(
            repr(float(v) ** 2) for v in trace.samples) + "\n")
        rec = run_json(capsys, "fit", "--trace", str(path),
                       "--input-kind", "power")
        assert abs(rec["kappa_hat"] - 2.0) / 2.0 <= 0.25
        assert abs(rec["mu_hat"] - 1.5) / 1.5 <= 0.15

    def test_constant_trace_exit_2(self, capsys, tmp_path):
        path = tmp_path / "const.csv"
        path.write_text("\n".join(["2.0"] * 5000))
        code, _, err = run(capsys, "fit", "--trace", str(path))
        assert code == 2
        assert "error" in err

    def test_missing_file_exit_2(self, capsys):
        code, _, _ = run(capsys, "fit", "--trace", "/nonexistent/trace.csv")
        assert code == 2

    def test_window_improves_shadowed_fit(self, capsys, tmp_path):
        params = KappaMuParams(2.0, 1.5, 1.0)
        n = 60_000
        clean = sample_envelope(params, n, seed=31).samples
        shadow = 1.0 + 0.4 * np.sin(2.0 * math.pi * np.arange(n) / 8000.0)
        path = tmp_path / "shadowed.bin"
        write_trace_binary(path, EnvelopeTrace(clean * shadow))
        raw = run_json(capsys, "fit", "--trace", str(path), "--window", "0")
        norm = run_json(capsys, "fit", "--trace", str(path), "--window", "501")
        assert norm["residual"] < raw["residual"]

    def test_emit_pdf_grid(self, capsys, tmp_path):
        trace = sample_envelope(KappaMuParams(1.5, 1.0, 1.0), 20_000, seed=8)
        path = tmp_path / "trace.bin"
        write_trace_binary(path, trace)
        grid_path = tmp_path / "pdf.csv"
        code, out, _ = run(capsys, "fit", "--trace", str(path),
                           "--emit-pdf-grid", str(grid_path))
        assert code == 0
        rows = list(csv.DictReader(grid_path.open()))
        assert len(rows) > 8
        assert {"envelope", "empirical_density", "fitted_density"} == set(rows[0])
