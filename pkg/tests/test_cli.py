import csv
import io
import json
import shutil
import subprocess
import sys

import pytest

from gridhop.cli import FIXTURE_DIR_ENV, FIXTURES, main, run_command
from gridhop.report import flatten, lookup
from helpers import FIXTURE_NAMES, doc


@pytest.fixture(scope="module")
def fixture_dir(tmp_path_factory):
    target = tmp_path_factory.mktemp("fixtures")
    code, report = run_command(["fixtures", "--dir", str(target)])
    assert code == 0 and len(report.tree["written"]) == len(FIXTURES)
    return target


def _json(argv):
    code, report = run_command([*argv, "--format", "json"])
    return code, json.loads(report.render())


def _golden_cases():
    for name in FIXTURE_NAMES:
        for i, exp in enumerate(doc(name).expected):
            yield pytest.param(name, exp, id=f"{name}-{i}-{exp.args[0]}-{exp.path}")


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_bundled_fixtures_validate(fixture_dir, name):
    code, tree = _json(["validate", str(fixture_dir / f"{name}.json")])
    assert (code, tree["valid"], tree["violations"]) == (0, True, [])


@pytest.mark.parametrize("name,exp", list(_golden_cases()))
def test_golden_numbers_reproduce(fixture_dir, name, exp):
    command, *rest = exp.args
    _, tree = _json([command, str(fixture_dir / f"{name}.json"), *rest])
    # compare the serialized tokens, not just the values
    assert json.dumps(lookup(tree, exp.path)) == json.dumps(exp.value)


def test_haxby_shortfall_without_devices(fixture_dir):
    _, tree = _json(["n1", str(fixture_dir / "haxby.json"), "--scenario", "2033"])
    assert tree["shortfall_without_reconfiguration"] == pytest.approx(1.7, abs=1e-9)
    assert tree["shortfall"] == pytest.approx(0.9, abs=1e-9)


def test_econ_deferral():
    code, tree = _json(["econ", "--deferral", "5", "--rate", "0.0325"])
    assert code == 0
    assert tree["deferral_cost_reduction_pct"] == pytest.approx(14.8, abs=0.05)


def test_econ_reports_rounded_energy_and_exact_benefit(fixture_dir):
    _, tree = _json(["econ", "--file", str(fixture_dir / "haxby.json")])
    assert tree["annual_loss_energy_mwh_rounded"] == 385
    assert tree["annual_loss_energy_mwh"] == pytest.approx(385.44)
    assert tree["lifetime_operational_benefit"] == pytest.approx(162320, rel=0.005)
    assert tree["lifetime_operational_benefit_closed_form"] == pytest.approx(
        tree["lifetime_operational_benefit"], rel=1e-9
    )


@pytest.mark.parametrize(
    "argv,code",
    [
        (["n1", "{d}/haxby.json", "--scenario", "2033", "--assert-secure"], 1),
        (["n1", "{d}/haxby.json", "--scenario", "2030", "--assert-secure"], 0),
        (["n1", "{d}/haxby.json", "--scenario", "2099"], 2),
        (["flows", "{d}/haxby.json", "--state", "transfer"], 0),
        (["flows", "{d}/haxby.json", "--state", "nowhere"], 2),
        (["firm-capacity", "{d}/fig2.json", "--scale", "D_A1", "D_A2"], 0),
        (["firm-capacity", "{d}/fig2.json", "--scale", "D_NOPE"], 2),
        (["size", "{d}/fig2.json", "--placement", "NOP", "--kind", "hop2"], 2),
        (["size", "{d}/fig2.json", "--placement", "NOP", "--kind", "sop"], 0),
        (["compare", "{d}/fig4.json"], 0),
        (["compare", "{d}/fig2.json", "--option", "x=NOP:sop"], 2),
        (["compare", "{d}/fig2.json", "--option", "garbage", "--baseline", "x"], 2),
        (["econ", "--rate", "-1"], 2),
        (["validate", "{d}/missing.json"], 2),
        (["teleport"], 2),
        ([], 2),
    ],
)
def test_exit_codes(fixture_dir, argv, code):
    got, report = run_command([a.replace("{d}", str(fixture_dir)) for a in argv])
    assert got == code
    if code == 2:
        assert report.error


def test_meshed_normal_state_fails_validation(tmp_path, fixture_dir):
    raw = json.loads((fixture_dir / "fig2.json").read_text())
    for d in raw["network"]["devices"]:
        if d["id"] == "NOP":
            d["kind"] = "ncp"
    path = tmp_path / "meshed.json"
    path.write_text(json.dumps(raw))
    code, tree = _json(["validate", str(path)])
    assert code == 2 and [v["code"] for v in tree["violations"]] == ["non-radial"]


def test_malformed_document_is_an_input_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"schema_version": "1", ')
    code, report = run_command(["n1", str(path)])
    assert code == 2 and report.error == "ParseError"


def test_size_exits_1_when_no_rating_is_enough(tmp_path, fixture_dir):
    raw = json.loads((fixture_dir / "haxby.json").read_text())
    raw["demand_scenarios"]["huge"] = {"D_A12": 40.0}
    path = tmp_path / "huge.json"
    path.write_text(json.dumps(raw))
    code, tree = _json(["size", str(path), "--scenario", "huge", "--placement", "NCP_A", "--kind", "hop2"])
    assert code == 1 and tree["residual_shortfall"] > 0


def test_fixture_dir_comes_from_the_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(FIXTURE_DIR_ENV, str(tmp_path / "env"))
    code, report = run_command(["fixtures"])
    assert code == 0
    assert sorted(p.name for p in (tmp_path / "env").iterdir()) == sorted(FIXTURES)
    code, _ = run_command(["fixtures", "--dir", str(tmp_path / "flag")])
    assert (tmp_path / "flag" / "haxby.json").exists()


def test_output_is_deterministic(fixture_dir):
    argv = ["n1", str(fixture_dir / "fig4.json"), "--classify", "--format", "json"]
    first = run_command(argv)[1].render()
    assert run_command(argv)[1].render() == first
    assert run_command([*argv, "--workers", "3"])[1].render() == first


def _text_values(text):
    out = []
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("- "):
            out.append(line[2:])
        elif ": " in line and not line.endswith("(none)"):
            out.append(line.split(": ", 1)[1])
    return out


@pytest.mark.parametrize(
    "argv",
    [
        ["n1", "{d}/haxby.json", "--scenario", "2033", "--classify"],
        ["compare", "{d}/fig3.json"],
        ["flows", "{d}/haxby.json", "--state", "transfer"],
        ["econ", "--file", "{d}/haxby.json"],
    ],
)
def test_formats_agree(fixture_dir, argv):
    argv = [a.replace("{d}", str(fixture_dir)) for a in argv]
    _, tree = _json(argv)
    leaves = flatten(tree)
    csv_rows = list(csv.reader(io.StringIO(run_command([*argv, "--format", "csv"])[1].render())))
    assert csv_rows[0] == ["path", "value"]
    assert [r[0] for r in csv_rows[1:]] == [p for p, _ in leaves]
    text = _text_values(run_command([*argv, "--format", "text"])[1].render())
    assert len(text) == len(leaves)
    for (path, value), (_, cell), shown in zip(leaves, csv_rows[1:], text):
        if isinstance(value, float):
            assert float(cell) == value, path
            assert float(shown) == pytest.approx(value, abs=5e-7), path
        elif isinstance(value, bool):
            assert cell == json.dumps(value) and shown == ("yes" if value else "no")
        elif isinstance(value, int):
            assert int(cell) == value and int(shown) == value


def test_main_writes_the_report_file(tmp_path, fixture_dir, capsys):
    out = tmp_path / "report.json"
    code = main(["size", str(fixture_dir / "haxby.json"), "--scenario", "2033",
                 "--placement", "NCP_A", "--kind", "hop2", "--format", "json", "--out", str(out)])
    assert code == 0
    assert json.loads(out.read_text())["required_rating"] == 0.9
    assert capsys.readouterr().out == ""
    assert [p.name for p in tmp_path.iterdir()] == ["report.json"]


def test_main_logs_input_errors(tmp_path, caplog):
    code = main(["validate", str(tmp_path / "absent.json")])
    assert code == 2
    assert "absent.json" in caplog.text


@pytest.mark.skipif(shutil.which("gridhop") is None, reason="console script not installed")
def test_console_script(fixture_dir):
    proc = subprocess.run(
        ["gridhop", "econ", "--deferral", "5", "--rate", "0.0325", "--format", "json"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["deferral_years"] == 5


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "gridhop.cli", "fixtures", "--help"], capture_output=True, text=True
    )
    assert proc.returncode == 0 and "--dir" in proc.stdout
