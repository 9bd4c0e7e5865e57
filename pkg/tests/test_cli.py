import json

import numpy as np
import pytest

from lisvar.cli import (
    EXIT_EMPTY,
    EXIT_ERROR,
    EXIT_OK,
    ConfigError,
    RunConfig,
    dumps,
    emit_plot_data,
    jsonable,
    load_reduced_form,
    main,
    read_plot_data,
)
from lisvar.identification import LOCAL_AE

from conftest import BIVARIATE_A0_1, BIVARIATE_A0_2, BIVARIATE_Q1, BIVARIATE_Q2

RF = "bundled:bivariate_rf.json"
SPEC = "bundled:bivariate.spec"
STRUCT = "bundled:bivariate_structural.json"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("sim")
    assert main(["simulate", "--structural", STRUCT, "--out", str(d), "--periods", "300", "--seed", "1"]) == 0
    return d


def test_identify_set_reproduces_fixture(capsys, tmp_path):
    code, doc, _ = run(capsys, "identify-set", "--spec", SPEC, "--reduced-form", RF, "--out", str(tmp_path))
    assert code == EXIT_OK and doc["count"] == 2 and doc["route"] == "triangular"
    np.testing.assert_allclose(doc["q_matrices"], [BIVARIATE_Q1, BIVARIATE_Q2], atol=1e-3)
    np.testing.assert_allclose(doc["a0_matrices"], [BIVARIATE_A0_1, BIVARIATE_A0_2], atol=1e-3)
    assert json.loads((tmp_path / "identify-set.json").read_text()) == doc


def test_infeasible_restriction_exits_two(capsys, tmp_path):
    spec = tmp_path / "bad.spec"
    spec.write_text("dims n=2 p=1\neq a0inv i=1 j=1 value=0.9\n")
    code, doc, _ = run(capsys, "identify-set", "--spec", str(spec), "--reduced-form", RF)
    assert code == EXIT_EMPTY and doc["count"] == 0


def test_missing_file_exits_one(capsys):
    code, doc, err = run(capsys, "identify-set", "--spec", "nope.spec", "--reduced-form", RF)
    assert code == EXIT_ERROR and doc is None and "file not found" in err


@pytest.mark.parametrize(
    "argv, fragment",
    [
        (["confsets", "--spec", SPEC], "needs --data"),
        (["irf", "--spec", SPEC, "--reduced-form", RF, "--alpha", "1.5"], "--alpha"),
        (["irf", "--reduced-form", RF], "needs --spec"),
        (["simulate", "--structural", STRUCT], "--out"),
        (["identify-set", "--spec", SPEC, "--reduced-form", RF, "--threads", "0"], "--threads"),
    ],
)
def test_invalid_configuration(capsys, argv, fragment):
    code, _, err = run(capsys, *argv)
    assert code == EXIT_ERROR and fragment in err


def test_run_config_validate():
    with pytest.raises(ConfigError):
        RunConfig("confsets", spec=SPEC, cs_mode="sideways").validate()
    with pytest.raises(ConfigError):
        RunConfig("teleport").validate()
    assert RunConfig("fit", data=None, lags=1).mode == "fit"


def test_bad_anchor_is_rejected_by_parser(capsys):
    with pytest.raises(SystemExit):
        main(["confsets", "--anchor", "1,2"])


def test_irf_writes_member_paths(capsys, tmp_path):
    code, doc, _ = run(capsys, "irf", "--spec", SPEC, "--reduced-form", RF, "--hmax", "3", "--out", str(tmp_path))
    assert code == EXIT_OK and np.asarray(doc["irfs"]).shape == (2, 4, 2, 2)
    cols = read_plot_data(tmp_path / "irf_v2_s1.csv")
    np.testing.assert_array_equal(cols["horizon"], [0, 1, 2, 3])
    np.testing.assert_allclose(cols["member_1"], np.asarray(doc["irfs"])[0, :, 1, 0], atol=1e-8)


def test_fit_recovers_simulated_structure(capsys, tmp_path):
    assert main(["simulate", "--structural", STRUCT, "--out", str(tmp_path), "--periods", "5000", "--seed", "2"]) == 0
    capsys.readouterr()
    code, doc, _ = run(capsys, "fit", "--data", str(tmp_path / "data.csv"), "--lags", "1")
    assert code == EXIT_OK
    truth = load_reduced_form(RF)
    np.testing.assert_allclose(np.asarray(doc["B"])[:, 1:], truth.lag(1), atol=0.05)
    np.testing.assert_allclose(doc["Sigma"], truth.Sigma, atol=0.03)


def test_confsets_fixed_with_anchor(capsys, sim_dir, tmp_path):
    argv = ["confsets", "--data", str(sim_dir / "data.csv"), "--lags", "1", "--spec", SPEC, "--draws", "200"]
    argv += ["--hmax", "2", "--anchor", "2,1,0", "--mode", "fixed", "--pair", "2,1", "--out", str(tmp_path)]
    code, doc, _ = run(capsys, *argv)
    assert code == EXIT_OK and doc["anchor"] == [2, 1, 0] and doc["retained"] == 180
    assert [r["coordinate"]["horizon"] for r in doc["records"]] == [0, 1, 2]
    assert all("cs_switching" not in r for r in doc["records"])
    assert len(doc["records"][0]["cs_fixed"]) == 2
    cols = read_plot_data(tmp_path / "confsets_v2_s1.csv")
    assert set(cols) == {"horizon", "cs_fixed_1_lo", "cs_fixed_1_hi", "cs_fixed_2_lo", "cs_fixed_2_hi"}
    assert cols["cs_fixed_1_lo"][0] == pytest.approx(doc["records"][0]["cs_fixed"][0][0])


def test_outputs_are_deterministic(capsys, sim_dir, tmp_path):
    argv = ["posterior", "--data", str(sim_dir / "data.csv"), "--lags", "1", "--spec", SPEC]
    argv += ["--draws", "150", "--hmax", "1", "--seed", "4"]
    assert main(argv + ["--out", str(tmp_path / "a")]) == 0
    assert main(argv + ["--out", str(tmp_path / "b"), "--threads", "2"]) == 0
    capsys.readouterr()
    for name in ("posterior.json", "posterior_v1_s1.csv", "posterior_v2_s2.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_posterior_records(capsys, sim_dir):
    argv = ["posterior", "--data", str(sim_dir / "data.csv"), "--lags", "1", "--spec", SPEC]
    code, doc, _ = run(capsys, *argv, "--draws", "150", "--hmax", "0", "--levels", "0.9,0.5")
    assert code == EXIT_OK and doc["levels"] == [0.9, 0.5]
    rec = {(r["coordinate"]["variable"], r["coordinate"]["shock"]): r for r in doc["records"]}
    assert rec[(1, 1)]["posterior_mean"] == pytest.approx(0.5)
    lo, hi = rec[(2, 1)]["robust_mean_range"]
    assert lo < rec[(2, 1)]["posterior_mean"] < hi
    assert set(rec[(2, 1)]["hdr"]) == {"0.9", "0.5"}


def test_all_empty_posterior_exits_two(capsys, sim_dir, tmp_path):
    spec = tmp_path / "far.spec"
    spec.write_text("dims n=2 p=1\neq a0inv i=1 j=1 value=40\n")
    argv = ["confsets", "--data", str(sim_dir / "data.csv"), "--lags", "1", "--spec", str(spec), "--draws", "20"]
    code, doc, _ = run(capsys, *argv)
    assert code == EXIT_EMPTY and doc["records"] == []


def test_check_id_nk(capsys, tmp_path):
    rf = tmp_path / "rf.json"
    rng = np.random.default_rng(3)
    A = rng.standard_normal((3, 3))
    rf.write_text(json.dumps({"lags": [(0.2 * np.eye(3)).tolist()], "Sigma": (A @ A.T + np.eye(3)).tolist()}))
    code, doc, _ = run(capsys, "check-id", "--spec", "bundled:nk.spec", "--reduced-form", str(rf))
    assert code == EXIT_OK
    assert doc["verdict"]["verdict"] == LOCAL_AE
    assert doc["order_condition"] and doc["solution_count_bound"] == 64
    assert all(m["locally_identified"] for m in doc["members"])


def test_hsvar_pipeline(capsys, tmp_path):
    struct = tmp_path / "s.json"
    A0inv = [[1.0, 0.3], [0.2, 1.0]]
    struct.write_text(json.dumps({"A0inv": A0inv, "lags": [[[0.4, 0.0], [0.0, 0.4]]]}))
    argv = ["simulate", "--structural", str(struct), "--out", str(tmp_path), "--periods", "4000"]
    assert main(argv + ["--break-index", "2000", "--lambdas", "3,0.5", "--seed", "5"]) == 0
    capsys.readouterr()
    code, doc, _ = run(
        capsys, "hsvar", "--data", str(tmp_path / "data.csv"), "--lags", "1", "--break-index", "2000", "--hmax", "2"
    )
    assert code == EXIT_OK and doc["count"] == 2 and doc["route"] == "hsvar"
    impact = np.asarray(doc["irfs"])[:, 0, :, 0]
    truth = np.asarray(A0inv)
    for col in impact:
        cos = max(abs(col @ truth[:, k]) / np.linalg.norm(col) / np.linalg.norm(truth[:, k]) for k in range(2))
        assert cos > 0.99


def test_emit_plot_data_round_trip(tmp_path):
    panels = {
        "p": {
            "horizon": [0, 1, 2],
            "bands": {"cs": [[(0.0, 1.0)], [(0.0, 0.5), (0.7, 0.9)], []]},
            "paths": {"mean": [0.25, float("nan"), 1.0 / 3.0]},
        },
        "empty": {"horizon": [], "bands": {"cs": []}, "paths": {}},
    }
    emit_plot_data(panels, tmp_path)
    cols = read_plot_data(tmp_path / "p.csv")
    assert list(cols) == ["horizon", "cs_1_lo", "cs_1_hi", "cs_2_lo", "cs_2_hi", "mean"]
    np.testing.assert_array_equal(cols["cs_2_lo"], [np.nan, 0.7, np.nan])
    np.testing.assert_array_equal(cols["cs_1_hi"], [1.0, 0.5, np.nan])
    assert cols["mean"][2] == pytest.approx(1 / 3, rel=1e-8)
    assert (tmp_path / "empty.csv").read_text().strip() == "horizon,cs_lo,cs_hi"


def test_json_number_formatting():
    doc = jsonable({"a": np.float64(1 / 3), "b": float("nan"), "c": -np.inf, "d": np.arange(2), "e": (True,)})
    assert doc == {"a": 0.333333333, "b": None, "c": "-inf", "d": [0, 1], "e": [True]}
    assert dumps({"b": 1, "a": 2}).index('"a"') < dumps({"b": 1, "a": 2}).index('"b"')
