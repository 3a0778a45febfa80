import subprocess
import sys

import pytest

MODEL = """\
mdp
states s0 s1
init s0
label s0 a b
label s1 b
action s0 alpha : s0 1/2 , s1 1/2
action s0 beta  : s1 1
action s1 gamma : s1 1
"""


@pytest.fixture()
def model_file(tmp_path):
    path = tmp_path / "m.mdp"
    path.write_text(MODEL)
    return str(path)


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "freqsynth.cli", *args],
        capture_output=True,
        text=True,
    )


def test_synth_exit_codes(model_file):
    met = run_cli("synth", "--model", model_file, "--formula", "F a",
                  "--threshold", "1/2")
    assert met.returncode == 0
    assert "threshold_met: yes" in met.stdout
    unmet = run_cli("synth", "--model", model_file, "--formula", "G a",
                    "--threshold", "1/2")
    assert unmet.returncode == 1
    assert "max_probability: 0" in unmet.stdout


def test_synth_errors(model_file):
    bad_formula = run_cli("synth", "--model", model_file, "--formula", "F (",
                          "--threshold", "1/2")
    assert bad_formula.returncode == 2
    assert "position" in bad_formula.stderr
    bad_threshold = run_cli("synth", "--model", model_file, "--formula", "F a",
                            "--threshold", "3/2")
    assert bad_threshold.returncode == 2
    fragment = run_cli("synth", "--model", model_file, "--formula", "G(a U b)",
                       "--threshold", "1/2")
    assert fragment.returncode == 2
    assert "fragment" in fragment.stderr


def test_automaton_command(tmp_path):
    out = run_cli("automaton", "--formula", "a & X(b U a)")
    assert out.returncode == 0
    assert "states: 4" in out.stdout
    assert "digraph" in out.stdout
    dot = tmp_path / "aut.dot"
    with_slaves = run_cli("automaton", "--formula", "G F a", "--dot", str(dot),
                          "--export-slaves")
    assert with_slaves.returncode == 0
    assert dot.exists()
    assert (tmp_path / "aut.dot.slave0").exists()


def test_automaton_state_cap():
    out = run_cli("automaton", "--formula", "G F a", "--max-states", "2")
    assert out.returncode == 2
    assert "cap" in out.stderr


def test_check_word(model_file):
    match = run_cli("check-word", "--formula", "F a", "--stem", "{}",
                    "--loop", "{a}")
    assert match.returncode == 0
    assert "oracle: accept" in match.stdout
    assert "automaton: accept" in match.stdout
    assert "MATCH" in match.stdout
    neg = run_cli("check-word", "--formula", "F a", "--loop", "{}")
    assert "oracle: reject" in neg.stdout and "automaton: reject" in neg.stdout
    freq = run_cli("check-word", "--formula", "G{>=1/2,inf} a",
                   "--loop", "{a};{}")
    assert freq.stdout.count("accept") == 2
    bad = run_cli("check-word", "--formula", "F a", "--loop", "a")
    assert bad.returncode == 2


def test_mec_command(model_file):
    out = run_cli("mec", "--model", model_file)
    assert out.returncode == 0
    assert "mecs: 1" in out.stdout
    assert "states={s1}" in out.stdout


def test_simulate_command(model_file):
    out = run_cli("simulate", "--model", model_file, "--formula", "G b",
                  "--steps", "2000", "--seed", "11")
    assert out.returncode == 0
    assert "entered_winning_union: 1" in out.stdout
    zero = run_cli("simulate", "--model", model_file, "--formula", "G a",
                   "--steps", "100", "--seed", "11")
    assert zero.returncode == 2
    assert "no strategy" in zero.stderr
    bad_steps = run_cli("simulate", "--model", model_file, "--formula", "G b",
                        "--steps", "0", "--seed", "11")
    assert bad_steps.returncode == 2


def test_byte_identical_reruns(model_file, tmp_path):
    dot1, dot2 = tmp_path / "a1.dot", tmp_path / "a2.dot"
    r1 = run_cli("synth", "--model", model_file, "--formula",
                 "G{>=1/2,inf} a | F b", "--threshold", "1/3",
                 "--dot", str(dot1))
    r2 = run_cli("synth", "--model", model_file, "--formula",
                 "G{>=1/2,inf} a | F b", "--threshold", "1/3",
                 "--dot", str(dot2))
    assert r1.stdout == r2.stdout
    assert dot1.read_bytes() == dot2.read_bytes()
    s1 = run_cli("simulate", "--model", model_file, "--formula", "G b",
                 "--steps", "5000", "--seed", "3", "--episodes", "3")
    s2 = run_cli("simulate", "--model", model_file, "--formula", "G b",
                 "--steps", "5000", "--seed", "3", "--episodes", "3")
    assert s1.stdout == s2.stdout
