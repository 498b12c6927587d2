import csv
import io
import json
import math
from importlib import resources

import numpy as np
import pytest

from conftest import B3_CENTER, b3_network
from l2verify import __version__
from l2verify.cli import main
from l2verify.network import Network, save, save_dataset

FAST = ["--iterations", "60", "--pgd-steps", "40", "--pgd-restarts", "3"]


@pytest.fixture
def b3_path(tmp_path):
    path = tmp_path / "b3.json"
    save(b3_network(), path)
    return str(path)


def run(capsys, args):
    code = main(args)
    return code, capsys.readouterr().out


def report(capsys, args):
    code, out = run(capsys, args)
    return code, json.loads(out)


def test_verify_b3_sdp(capsys, b3_path, tmp_path):
    out_file = tmp_path / "r.json"
    code, rep = report(capsys, ["verify", b3_path, "--input", "1,1", "--rho", "1", "--method", "sdp-crown",
                                "--output", str(out_file)])
    assert rep["schema"] == 1
    inst = rep["instances"][0]
    assert set(inst) >= {"id", "label", "margins", "pgd_upper", "status", "ms"}
    assert inst["margins"][0] == pytest.approx(-math.sqrt(2), abs=1e-3)
    assert inst["status"] == "falsified" and code == 1
    assert json.loads(out_file.read_text()) == rep
    cfg = rep["config"]
    assert cfg["method"] == "sdp-crown" and cfg["rho"] == 1.0 and cfg["version"] == __version__
    assert cfg["optimizer"]["iterations"] == 300 and cfg["seed"] == 0


def test_verify_zero_radius_verified(capsys, b3_path):
    code, rep = report(capsys, ["verify", b3_path, "--input", "1,1", "--rho", "0", *FAST])
    assert code == 0
    assert rep["instances"][0]["status"] == "verified"
    assert rep["verified_accuracy"] == 1.0


def test_verify_lipnaive(capsys, b3_path):
    code, rep = report(capsys, ["verify", b3_path, "--input", "1,1", "--rho", "1", "--method", "lipnaive", *FAST])
    assert rep["instances"][0]["margins"][0] == pytest.approx(-2 * math.sqrt(2), abs=1e-6)


def test_verify_linf_routes_to_box(capsys, b3_path):
    code, rep = report(capsys, ["verify", b3_path, "--input", "1,1", "--rho", "1", "--norm", "linf",
                                "--method", "sdp-crown", *FAST])
    assert rep["config"]["method"] == "lirpa-box"
    assert rep["instances"][0]["margins"][0] == pytest.approx(-2.0, abs=1e-6)


def test_verify_unknown_exit_code(capsys):
    model = str(resources.files("l2verify") / "data" / "digits_mlp.json")
    data = str(resources.files("l2verify") / "data" / "digits_test.csv")
    code, rep = report(capsys, ["verify", model, "--dataset", data, "--row", "0", "--rho", "0.1",
                                "--method", "lirpa-box", *FAST])
    assert rep["instances"][0]["status"] == "unknown"
    assert code == 2


def test_verify_is_reproducible(capsys, b3_path):
    args = ["verify", b3_path, "--input", "1,1", "--rho", "0.5", "--seed", "4", *FAST]
    _, a = report(capsys, args)
    _, b = report(capsys, args)
    for r in (a, b):
        for inst in r["instances"]:
            inst.pop("ms")
    assert a == b


@pytest.mark.parametrize(
    "args",
    [
        ["verify", "/nonexistent/model.json", "--input", "1,1", "--rho", "1"],
        ["verify", "{model}", "--input", "1,1,1", "--rho", "1"],
        ["verify", "{model}", "--input", "1,x", "--rho", "1"],
        ["verify", "{model}", "--rho", "1"],
        ["verify", "{model}", "--input", "1,1", "--rho", "-1"],
        ["margin-curve", "{model}", "--input", "1,1", "--rho-grid", ""],
        ["margin-curve", "{model}", "--input", "1,1", "--rho-grid", "1,0.5"],
        ["margin-curve", "{model}", "--input", "1,1", "--rho-grid", "1", "--methods", "bogus"],
        ["accuracy", "{model}", "/nonexistent/data.csv", "--rho", "1"],
        ["attack", "{model}", "--input", "1", "--rho", "1"],
    ],
)
def test_errors_exit_3(capsys, b3_path, args):
    args = [a.replace("{model}", b3_path) for a in args]
    code = main(args)
    assert code == 3
    assert capsys.readouterr().err.startswith("error:")


def test_bad_model_file(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"layers": [{"weight": [[1, 0], [0, 1]]}, {"weight": [[1, 0, 0]]}]}')
    code = main(["verify", str(bad), "--input", "1,1", "--rho", "1"])
    assert code == 3
    assert "layer 2" in capsys.readouterr().err


def test_label_out_of_range(capsys, tmp_path):
    path = tmp_path / "m.json"
    save(Network.from_weights([np.eye(2)]), path)
    assert main(["verify", str(path), "--input", "1,1", "--label", "5", "--rho", "1"]) == 3
    data = tmp_path / "d.csv"
    save_dataset(data, [0, 7], np.zeros((2, 2)))
    assert main(["accuracy", str(path), str(data), "--rho", "0"]) == 3


def parse_curve(text):
    rows = list(csv.DictReader(io.StringIO(text)))
    return rows


def test_margin_curve_b3(capsys, b3_path):
    code, out = run(capsys, ["margin-curve", b3_path, "--input", "1,1", "--rho-grid", "1",
                             "--methods", "lirpa-box,sdp-crown"])
    assert code == 0
    assert out.splitlines()[0] == "rho,method,lower_bound,pgd_upper"
    rows = parse_curve(out)
    assert [r["method"] for r in rows] == ["lirpa-box", "sdp-crown"]
    assert float(rows[0]["lower_bound"]) == pytest.approx(-2.0, abs=1e-6)
    assert float(rows[1]["lower_bound"]) == pytest.approx(-math.sqrt(2), abs=1e-3)


def test_margin_curve_zero_grid(capsys, tmp_path, rng):
    from conftest import random_network

    net = random_network(rng, [3, 6, 3])
    path = tmp_path / "m.json"
    save(net, path)
    x = rng.normal(size=3)
    label = int(np.argmax(net(x)))
    code, out = run(capsys, ["margin-curve", str(path), "--input", ",".join(map(repr, x)), "--label", str(label),
                             "--rho-grid", "0", "--methods", "lirpa-box,sdp-crown,sdp-crown-ext,lipnaive", *FAST])
    out_vals = net(x)
    expected = min(out_vals[label] - out_vals[j] for j in range(3) if j != label)
    for r in parse_curve(out):
        assert float(r["lower_bound"]) == pytest.approx(expected, abs=1e-12)
        assert float(r["pgd_upper"]) == pytest.approx(expected, abs=1e-12)


def test_margin_curve_monotone(capsys, tmp_path, rng):
    from conftest import random_network

    net = random_network(rng, [3, 8, 6, 3])
    path = tmp_path / "m.json"
    save(net, path)
    out_file = tmp_path / "curve.csv"
    code, out = run(capsys, ["margin-curve", str(path), "--input", "0.1,-0.3,0.5", "--rho-grid", "0,0.1,0.2,0.4,0.8",
                             "--methods", "lirpa-box,sdp-crown,lipnaive", "--output", str(out_file), *FAST])
    assert out_file.read_text() == out
    rows = parse_curve(out)
    for m in ("lirpa-box", "sdp-crown", "lipnaive"):
        vals = [float(r["lower_bound"]) for r in rows if r["method"] == m]
        assert len(vals) == 5
        assert all(b <= a + 1e-9 for a, b in zip(vals, vals[1:]))
    for r in rows:
        assert float(r["lower_bound"]) <= float(r["pgd_upper"]) + 1e-9


def separable_case(tmp_path):
    net = Network.from_weights([np.array([[1.0, 0.0], [-1.0, 0.0]])])
    X = np.array([[2.0, 0.3], [3.0, -1.0], [-2.0, 0.5], [-1.5, 2.0], [2.5, 0.0]])
    y = np.array([0, 0, 1, 1, 0])
    paths = tmp_path / "sep.json", tmp_path / "sep.csv"
    save(net, paths[0])
    save_dataset(paths[1], y, X)
    return [str(p) for p in paths]


def test_accuracy_separable(capsys, tmp_path):
    model, data = separable_case(tmp_path)
    code, rep = report(capsys, ["accuracy", model, data, "--rho", "0.5", *FAST])
    assert code == 0
    assert rep["verified_accuracy"] == 1.0
    assert [r["id"] for r in rep["instances"]] == list(range(5))


def test_accuracy_zero_radius_is_clean_accuracy(capsys, tmp_path):
    model, data = separable_case(tmp_path)
    # flip one label so one sample is misclassified
    lines = open(data).read().splitlines()
    lines[0] = "1" + lines[0][1:]
    open(data, "w").write("\n".join(lines) + "\n")
    _, rep = report(capsys, ["accuracy", model, data, "--rho", "0", *FAST])
    assert rep["verified_accuracy"] == pytest.approx(4 / 5)
    assert rep["instances"][0]["status"] == "falsified"


def test_accuracy_limit_and_workers(capsys):
    model = str(resources.files("l2verify") / "data" / "digits_mlp.json")
    data = str(resources.files("l2verify") / "data" / "digits_test.csv")
    base = ["accuracy", model, data, "--rho", "0.2", "--limit", "6", "--method", "sdp-crown", *FAST]
    _, serial = report(capsys, base)
    _, pooled = report(capsys, base + ["--workers", "3"])
    assert len(serial["instances"]) == 6
    strip = lambda rep: [{k: v for k, v in r.items() if k != "ms"} for r in rep["instances"]]
    assert strip(serial) == strip(pooled)
    n_ok = sum(r["status"] == "verified" for r in serial["instances"])
    assert serial["verified_accuracy"] == n_ok / 6


def test_accuracy_sdp_beats_box_on_zero_centered_single_layer(capsys, tmp_path, rng):
    n = 6
    W = rng.normal(size=(3, n))
    net = Network.from_weights([np.eye(n), W])
    path = tmp_path / "m.json"
    save(net, path)
    # inputs at the origin; labels are the predicted class there
    out = net(np.zeros(n))
    X = np.zeros((4, n))
    y = np.full(4, int(np.argmax(out)))
    data = tmp_path / "d.csv"
    save_dataset(data, y, X)
    accs = {}
    for m in ("lirpa-box", "sdp-crown"):
        _, rep = report(capsys, ["accuracy", str(path), str(data), "--rho", "0.3", "--method", m, *FAST])
        accs[m] = rep
    for a, b in zip(accs["lirpa-box"]["instances"], accs["sdp-crown"]["instances"]):
        assert min(b["margins"]) >= min(a["margins"]) - 1e-6
    assert accs["sdp-crown"]["verified_accuracy"] >= accs["lirpa-box"]["verified_accuracy"]


def test_attack_json(capsys, b3_path):
    code, rep = report(capsys, ["attack", b3_path, "--input", "1,1", "--rho", "1"])
    assert code == 0
    assert rep["value"] >= -math.sqrt(2) - 1e-9
    assert rep["feasible"] is True
    assert np.linalg.norm(np.array(rep["point"]) - B3_CENTER) <= 1 + 1e-12
