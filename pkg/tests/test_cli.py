import json
import socket
import subprocess
import sys
import threading

import pytest

from cpsfe.cli import main, parse_bits, parse_eps, parse_list


def run_cli(capsys, *argv, env=None):
    code = main(list(argv), env=env or {})
    return code, capsys.readouterr()


def report(capsys, *argv, env=None):
    code, cap = run_cli(capsys, *argv, env=env)
    assert code == 0, cap.err
    return json.loads(cap.out)


def test_parsers():
    assert parse_eps("2^-20") == 2 ** -20
    assert parse_eps("0.01") == 0.01
    assert parse_list("1, 2,3") == [1, 2, 3]
    assert parse_bits("0101", 4) == "0101"
    with pytest.raises(ValueError):
        parse_bits("012")


def test_hamming_example(capsys):
    rep = report(capsys, "--protocol", "hamming", "--x", "01", "--y", "11")
    assert rep["outputs"]["value"] == 1
    assert rep["schema"] == "cpsfe-report/1"
    assert all(rep["checks"].values())


def test_millionaires_example(capsys):
    rep = report(capsys, "--protocol", "millionaires", "--n", "32", "--x", "7", "--y", "9")
    assert rep["outputs"]["winner"] == "y"
    assert all(rep["checks"].values())


def test_output_is_deterministic(capsys):
    args = ("--protocol", "garbled-demo", "--seed", "4")
    assert run_cli(capsys, *args)[1].out == run_cli(capsys, *args)[1].out


def test_timing_is_opt_in(capsys):
    assert "wall_time_s" not in report(capsys, "--protocol", "equality", "--x", "1010", "--y", "1010")
    rep = report(capsys, "--protocol", "equality", "--x", "1010", "--y", "1010", "--timing")
    assert rep["wall_time_s"] >= 0


def test_env_supplies_defaults(capsys):
    rep = report(capsys, env={"CPSFE_PROTOCOL": "hamming", "CPSFE_X": "000", "CPSFE_Y": "111"})
    assert rep["outputs"]["value"] == 3
    rep = report(capsys, "--x", "001", env={"CPSFE_PROTOCOL": "hamming", "CPSFE_X": "000", "CPSFE_Y": "111"})
    assert rep["outputs"]["value"] == 2


def test_json_file(capsys, tmp_path):
    path = tmp_path / "r.json"
    rep = report(capsys, "--protocol", "oram-bench", "--sizes", "16", "--ops", "200", "--json", str(path))
    assert json.loads(path.read_text()) == rep


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--protocol", "nonsense"], env={})
    assert exc.value.code != 0
    with pytest.raises(SystemExit):
        main([], env={})
    code, cap = run_cli(capsys, "--protocol", "hamming", "--x", "0a", "--y", "11")
    assert code == 2 and "error" in cap.err
    code, _ = run_cli(capsys, "--protocol", "hamming", "--listen", "nohostport")
    assert code == 2


def test_ideal_backend_refused_across_processes(capsys):
    code, cap = run_cli(capsys, "--protocol", "hamming", "--connect", "127.0.0.1:9")
    assert code == 2


def _free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


@pytest.mark.parametrize("ot", ["group", "ot12"])
def test_two_process_hamming(ot, tmp_path):
    port = _free_port()
    common = ["--protocol", "hamming", "--ot", ot, "--k", "64", "--x", "0110", "--y", "1100", "--seed", "3"]
    out_a = tmp_path / "a.json"
    listener = subprocess.Popen(
        [sys.executable, "-m", "cpsfe", *common, "--listen", f"127.0.0.1:{port}", "--json", str(out_a)],
        stdout=subprocess.DEVNULL, stderr=subprocess.PIPE,
    )
    try:
        rep_b = {}

        def bob():
            import io
            import contextlib

            buf = io.StringIO()
            with contextlib.redirect_stdout(buf):
                rep_b["code"] = main(common + ["--connect", f"127.0.0.1:{port}"], env={})
            rep_b["report"] = json.loads(buf.getvalue())

        t = threading.Thread(target=bob)
        t.start()
        t.join(120)
        assert listener.wait(120) == 0, listener.stderr.read()
    finally:
        if listener.poll() is None:
            listener.kill()
        listener.stderr.close()
    rep_a = json.loads(out_a.read_text())
    assert rep_b["code"] == 0
    assert rep_a["config"]["role"] == "A" and rep_b["report"]["config"]["role"] == "B"
    assert rep_a["outputs"]["share"] ^ rep_b["report"]["outputs"]["share"] == 2


GOLDEN = {
    "hamming": ["--protocol", "hamming", "--n", "2", "--x", "01", "--y", "11"],
    "millionaires": ["--protocol", "millionaires", "--n", "32", "--eps", "2^-20", "--seed", "1", "--x", "7", "--y", "9"],
    "equality": ["--protocol", "equality", "--x", "1101", "--y", "1010"],
    "garbled": ["--protocol", "garbled-demo", "--x", "01", "--y", "11"],
}


@pytest.mark.parametrize("name", sorted(GOLDEN))
def test_golden_reports(name, capsys):
    from pathlib import Path

    golden = (Path(__file__).parent / "golden" / f"{name}.json").read_text()
    code, cap = run_cli(capsys, *GOLDEN[name])
    assert code == 0
    assert cap.out == golden
