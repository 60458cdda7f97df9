import csv
import os
import subprocess
import sys
import textwrap

import numpy as np
import pytest

from rischannel import cli

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

PATTERN = """
experiment: pattern
geometry: {m_x: 8, m_y: 4, p_x_over_lambda: 0.5, p_y_over_lambda: 0.5}
steering: {theta_in_deg: 0, theta_target_deg: 20, phase_bits: continuous}
pattern: {pad_p: PP, pad_q: PQ}
"""

ENVELOPE = """
experiment: envelope-dist
seed: 3
scenario: {m: 50, k_0: 3, phase_bits: 1, n_paths: 64}
"""

KEFF = """
experiment: keff-sweep
seed: 5
scenario: {phase_bits: 1, n_paths: 64}
sweep: {m: [5, 10], k_0: [1, 10, 100]}
"""

OUTAGE = """
experiment: outage
seed: 9
scenario: {k_0: 1, n_paths: 64}
outage:
  snr_db: {start: 5, stop: 15, step: 5}
  curves:
    - {label: a, m: 10, phase_bits: 1}
    - {label: b, m: 5, phase_bits: random}
"""

SUMRATE = """
experiment: ma-sumrate
seed: 7
geometry: {m_x: 20, m_y: 1, p_x_over_lambda: 0.5}
multiaccess:
  snr_db: 10
  k_0: 1
  element_pattern: true
  users:
    - {theta_deg: 15, tau: 1.0, a: 0.6}
    - {theta_deg: 33, tau: 1.0, a: 0.4}
sweep:
  theta_target_deg: {start: 10, stop: 35, step: 5}
"""


def write(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(textwrap.dedent(text))
    return str(p)


def read_table(path):
    with open(path) as fh:
        rows = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(rows))


def run(kind, cfg, out, *extra):
    return cli.main([kind, "--config", cfg, "--out", str(out), *extra])


def pattern_cfg(tmp_path, pp, pq, name):
    return write(tmp_path, PATTERN.replace("PP", str(pp)).replace("PQ", str(pq)), name)


# ---------------------------------------------------------------- every subcommand

@pytest.mark.parametrize("kind,text,trials,tables", [
    ("envelope-dist", ENVELOPE, "2000", ["samples", "fit"]),
    ("keff-sweep", KEFF, "2000", ["points", "lines"]),
    ("outage", OUTAGE, "2000", ["outage", "required"]),
    ("ma-sumrate", SUMRATE, "500", ["sumrate"]),
])
def test_subcommands_write_tables(tmp_path, kind, text, trials, tables):
    cfg = write(tmp_path, text)
    assert run(kind, cfg, tmp_path / "r", "--trials", trials) == 0
    for t in tables:
        rows = read_table(tmp_path / f"r_{t}.csv")
        assert rows


def test_pattern_subcommand(tmp_path):
    assert run("pattern", pattern_cfg(tmp_path, 16, 8, "p.yaml"), tmp_path / "pat") == 0
    rows = read_table(tmp_path / "pat_pattern.csv")
    assert list(rows[0]) == ["p", "q", "theta_deg", "phi_deg", "re", "im", "magnitude_db"]


def test_envelope_samples_columns_and_count(tmp_path):
    assert run("envelope-dist", write(tmp_path, ENVELOPE), tmp_path / "e", "--trials", "300") == 0
    rows = read_table(tmp_path / "e_samples.csv")
    assert list(rows[0]) == ["trial", "t_c", "t_s", "magnitude", "magnitude_sq"]
    assert len(rows) == 300 and rows[-1]["trial"] == "299"
    r = rows[5]
    assert float(r["magnitude"]) == pytest.approx(np.hypot(float(r["t_c"]), float(r["t_s"])), rel=1e-12)


def test_sumrate_columns(tmp_path):
    assert run("ma-sumrate", write(tmp_path, SUMRATE), tmp_path / "s", "--trials", "200") == 0
    rows = read_table(tmp_path / "s_sumrate.csv")
    assert list(rows[0])[:3] == ["theta_target_deg", "scheme", "sum_rate_bps_hz"]
    assert {r["scheme"] for r in rows} == {"noma", "fdma", "tdma"}
    assert len(rows) == 6 * 3


def test_header_records_resolved_config(tmp_path):
    run("envelope-dist", write(tmp_path, ENVELOPE), tmp_path / "h", "--trials", "150", "--seed", "11")
    head = [line for line in open(tmp_path / "h_fit.csv") if line.startswith("#")]
    text = "".join(head)
    assert "# seed: 11" in text and "# trials: 150" in text
    assert "#   seed: 11" in text and "k_0: 3" in text


# ---------------------------------------------------------------- determinism

def test_byte_identical_reruns(tmp_path):
    cfg = write(tmp_path, OUTAGE)
    run("outage", cfg, tmp_path / "a", "--trials", "3000")
    run("outage", cfg, tmp_path / "b", "--trials", "3000")
    for t in ("outage", "required"):
        assert (tmp_path / f"a_{t}.csv").read_bytes() == (tmp_path / f"b_{t}.csv").read_bytes()


def test_seed_changes_output(tmp_path):
    cfg = write(tmp_path, ENVELOPE)
    run("envelope-dist", cfg, tmp_path / "a", "--trials", "200", "--seed", "1")
    run("envelope-dist", cfg, tmp_path / "b", "--trials", "200", "--seed", "2")
    a = read_table(tmp_path / "a_samples.csv")
    b = read_table(tmp_path / "b_samples.csv")
    assert a[0]["t_c"] != b[0]["t_c"]


def test_pure_python_backend_gives_identical_csv(tmp_path):
    cfg = write(tmp_path, ENVELOPE)
    run("envelope-dist", cfg, tmp_path / "a", "--trials", "500")
    env = dict(os.environ, RISCHANNEL_PURE_PYTHON="1")
    subprocess.run([sys.executable, "-m", "rischannel.cli", "envelope-dist", "--config", cfg, "--out",
                    str(tmp_path / "b"), "--trials", "500"], env=env, check=True, capture_output=True)
    a = read_table(tmp_path / "a_samples.csv")
    b = read_table(tmp_path / "b_samples.csv")
    for ra, rb in zip(a, b):
        for col in ("t_c", "t_s"):
            assert float(ra[col]) == pytest.approx(float(rb[col]), rel=1e-12, abs=1e-12)


# ---------------------------------------------------------------- exit codes

def test_bad_field_exits_2_without_output(tmp_path, capsys):
    cfg = write(tmp_path, ENVELOPE.replace("k_0: 3", "k_0: -3"))
    assert run("envelope-dist", cfg, tmp_path / "x") == 2
    assert "k_0" in capsys.readouterr().err
    assert not list(tmp_path.glob("x_*"))


def test_malformed_yaml_exits_2(tmp_path):
    cfg = write(tmp_path, "experiment: pattern\ngeometry: [1, 2\n")
    assert run("pattern", cfg, tmp_path / "x") == 2


def test_wrong_experiment_exits_2(tmp_path):
    assert run("outage", write(tmp_path, ENVELOPE), tmp_path / "x") == 2


def test_infeasible_noma_exits_3(tmp_path, capsys):
    cfg = write(tmp_path, SUMRATE.replace("tau: 1.0, a: 0.6", "tau: 1.5, a: 0.6"))
    assert run("ma-sumrate", cfg, tmp_path / "x", "--trials", "100") == 3
    assert "infeasible" in capsys.readouterr().err
    assert not list(tmp_path.glob("x_*"))


def test_unwritable_output_exits_4(tmp_path):
    cfg = write(tmp_path, ENVELOPE)
    assert run("envelope-dist", cfg, tmp_path / "missing" / "dir" / "x", "--trials", "150") == 4


def test_missing_config_exits_4(tmp_path):
    assert run("pattern", str(tmp_path / "nope.yaml"), tmp_path / "x") == 4


# ---------------------------------------------------------------- plot scripts

def test_plot_script_sidecars(tmp_path):
    cfg = write(tmp_path, OUTAGE)
    assert run("outage", cfg, tmp_path / "o", "--trials", "500", "--plot-script") == 0
    gp = (tmp_path / "o_outage.gp").read_text()
    assert "o_outage.csv" in gp and "set logscale y" in gp and gp.count("linespoints") == 4
    cfg = write(tmp_path, ENVELOPE, "e.yaml")
    assert run("envelope-dist", cfg, tmp_path / "e", "--trials", "500", "--plot-script") == 0
    assert "smooth frequency" in (tmp_path / "e_samples.gp").read_text()


# ---------------------------------------------------------------- pattern grids

def test_padded_grid_contains_exact_grid(tmp_path):
    run("pattern", pattern_cfg(tmp_path, 8, 4, "a.yaml"), tmp_path / "exact")
    run("pattern", pattern_cfg(tmp_path, 32, 16, "b.yaml"), tmp_path / "pad")
    exact = read_table(tmp_path / "exact_pattern.csv")
    pad = {(int(r["p"]), int(r["q"])): r for r in read_table(tmp_path / "pad_pattern.csv")}
    assert exact
    for r in exact:
        s = pad[(4 * int(r["p"]), 4 * int(r["q"]))]
        assert float(s["theta_deg"]) == pytest.approx(float(r["theta_deg"]), abs=1e-9)
        assert float(s["phi_deg"]) == pytest.approx(float(r["phi_deg"]), abs=1e-9)
        assert float(s["magnitude_db"]) == pytest.approx(float(r["magnitude_db"]), abs=1e-9)


def test_console_script_help():
    out = subprocess.run([sys.executable, "-m", "rischannel.cli", "--help"], capture_output=True, text=True, cwd=ROOT)
    assert out.returncode == 0
    for kind in ("pattern", "envelope-dist", "keff-sweep", "outage", "ma-sumrate"):
        assert kind in out.stdout


@pytest.mark.parametrize("name", sorted(os.listdir(os.path.join(ROOT, "configs"))))
def test_shipped_configs_validate(tmp_path, name):
    from rischannel import config as C
    cfg = C.load_config(os.path.join(ROOT, "configs", name))
    assert cfg["experiment"] in C.EXPERIMENTS
