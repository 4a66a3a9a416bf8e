import json

import numpy as np
import pytest

from qstkernel import io
from qstkernel.cli import main
from qstkernel.core import S
from qstkernel.star.gaussian import GaussianSymbol


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def report(capsys, *argv):
    code, out, _ = run(capsys, *argv)
    return code, json.loads(out)


@pytest.fixture
def symbols(tmp_path):
    f = GaussianSymbol.isotropic(2, 1.0, center=[0.4, -0.3])
    g = GaussianSymbol.isotropic(2, 1.0, center=[-0.2, 0.5], momentum=[0.3, 0.0])
    pf, pg = tmp_path / "f.sym", tmp_path / "g.sym"
    io.write_symbol(pf, f)
    io.write_symbol(pg, g)
    return pf, pg


# --- poly --------------------------------------------------------------------------


@pytest.mark.parametrize(
    "expr,theta,expected",
    [
        ("[x0,x1,x2,x3]", "S", "2"),
        ("[x0,x1,x2,x3]", "9/4*S", "81/8"),
        ("x0@x2", "S", "x0*x2 - 1/2*i"),
        ("x1*x0 + 2*x0*x1", None, "3*x0*x1"),
    ],
)
def test_poly(capsys, expr, theta, expected):
    argv = ["poly", expr] + (["--theta", theta] if theta else [])
    code, out, _ = run(capsys, *argv)
    assert code == 0 and out.strip() == expected


def test_poly_json_and_errors(capsys):
    code, rep = report(capsys, "poly", "x0@x1", "--theta", "0", "--json", "--no-meta")
    assert code == 0 and rep["result"]["result"] == "x0*x1"
    assert run(capsys, "poly", "x0 +* x1")[0] == 2
    assert run(capsys, "poly", "x0@x1")[0] == 2  # twisted product needs theta
    assert run(capsys, "poly", "x0", "--theta", "[[0, 1], [1, 0]]", "--dim", "2")[0] == 2


# --- invariants ------------------------------------------------------------------


def test_invariants_standard(capsys):
    code, rep = report(capsys, "invariants", "--standard", "--boost-seed", "3", "--no-meta")
    res = rep["result"]
    assert code == 0 and res["passed"] and res["memberships_preserved"]
    assert res["inv1"] == pytest.approx(0.0) and res["inv2"] == pytest.approx(-4.0)
    assert res["orbits"]["sigma"] and res["boosted"]["orbits"]["sigma"]


def test_invariants_file_and_validation(capsys, tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps((2 * S).tolist()))
    code, rep = report(capsys, "invariants", str(p), "--no-meta")
    assert code == 0 and not rep["result"]["orbits"]["sigma"]
    p.write_text(json.dumps(np.eye(4).tolist()))
    assert run(capsys, "invariants", str(p))[0] == 2
    assert run(capsys, "invariants")[0] == 2


# --- star --------------------------------------------------------------------------


def test_star_engines(capsys, symbols, tmp_path):
    pf, pg = symbols
    base = ["star", str(pf), str(pg), "--theta", "1", "--N", "32", "--extent", "14", "--no-meta"]
    code, rep = report(capsys, *base, "--engine", "gaussian")
    assert code == 0 and rep["result"]["cross_engine_defect"] < 1e-10
    out = tmp_path / "h.sym"
    code, rep = report(capsys, *base, "--output-symbol", str(out))
    assert code == 0 and io.read_symbol(out).grid.n == 32
    code, rep = report(capsys, *base[:-1], "--engine", "moyal:0", "--no-meta")
    assert code == 0 and rep["result"]["defect_vs_grid"] > 1e-3


def test_star_commutative_is_pointwise(capsys, symbols):
    pf, pg = symbols
    code, rep = report(capsys, "star", str(pf), str(pg), "--theta", "0", "--N", "32", "--extent", "14", "--no-meta")
    assert code == 0 and rep["result"]["pointwise_defect"] < 1e-12


def test_star_numeric_failure(capsys, symbols):
    pf, pg = symbols
    code, _ = report(capsys, "star", str(pf), str(pg), "--theta", "1", "--N", "32", "--extent", "14", "--tol", "1e-300")
    assert code == 1


@pytest.mark.parametrize("extra", [["--engine", "bogus"], ["--engine", "moyal:x"], ["--N", "100000"], ["--theta", "S"]])
def test_star_validation(capsys, symbols, extra):
    pf, pg = symbols
    argv = ["star", str(pf), str(pg), "--theta", "1"] + extra
    assert run(capsys, *argv)[0] == 2


# --- spectra and randomized commands ----------------------------------------------------


def test_distance_spectrum_csv(capsys, tmp_path):
    out = tmp_path / "d.csv"
    assert run(capsys, "spectrum", "--operator", "distance", "--N", "8", "--lambda", "2", "--max-rows", "3", "--out", str(out))[0] == 0
    assert io.read_spectrum(out) == [(pytest.approx(8.0), 1), (pytest.approx(16.0), 2), (pytest.approx(24.0), 3)]


def test_spectrum_caps(capsys):
    assert run(capsys, "spectrum", "--operator", "volume", "--N", "5")[0] == 2
    assert run(capsys, "spectrum", "--operator", "distance", "--lambda", "-1")[0] == 2


def test_seed_required(capsys):
    assert run(capsys, "stur", "--samples", "10")[0] == 2
    assert run(capsys, "covariance", "--samples", "2")[0] == 2
    assert run(capsys, "expectation", "--samples", "2")[0] == 2


def test_stur_deterministic(capsys, tmp_path):
    argv = ["stur", "--samples", "50", "--N", "6", "--seed", "7", "--no-meta"]
    code, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert code == 0 and a == b
    assert json.loads(a)["result"]["violations"] == 0


def test_config_defaults(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"samples": 20, "N": 6, "seed": 3}))
    code, rep = report(capsys, "stur", "--config", str(cfg), "--no-meta")
    assert code == 0 and rep["options"]["samples"] == 20 and rep["options"]["seed"] == 3
    # explicit flags win
    code, rep = report(capsys, "stur", "--config", str(cfg), "--samples", "5", "--no-meta")
    assert rep["options"]["samples"] == 5
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run(capsys, "stur", "--config", str(cfg))[0] == 2
    cfg.write_text("[1, 2]")
    assert run(capsys, "stur", "--config", str(cfg))[0] == 2


def test_meta_block(capsys):
    _, rep = report(capsys, "poly", "x0", "--json")
    assert set(rep["meta"]) == {"version", "seconds", "time"}


def test_classify(capsys):
    code, rep = report(capsys, "classify", "1", "1", "-1", "--N", "16", "--no-meta")
    assert code == 0 and rep["result"]["verified"] and not rep["result"]["discrepancy"]
    assert run(capsys, "classify", "1", "x", "0")[0] == 2


def test_expectation_builtin_and_manifest(capsys, tmp_path):
    code, rep = report(capsys, "expectation", "--samples", "2", "--seed", "1", "--t", "0", "0.5", "--no-meta")
    assert code == 0 and rep["result"]["positivity"]["passed"]
    assert len(rep["result"]["values"]) == 2

    from qstkernel.acceptance import positivity_symbol
    from qstkernel.bundle import SigmaSample

    p = tmp_path / "m.json"
    io.write_manifest(p, positivity_symbol(SigmaSample.sigma1(2, 1)))
    code, rep2 = report(capsys, "expectation", str(p), "--t", "0", "0.5", "--no-meta")
    assert code == 0
    np.testing.assert_allclose(rep2["result"]["values"], rep["result"]["values"], rtol=1e-12)
    assert run(capsys, "expectation", str(tmp_path / "missing.json"))[0] == 2


def test_accept_criterion(capsys):
    code, rep = report(capsys, "accept", "--criterion", "1", "--no-meta")
    assert code == 0 and rep["result"]["passed"]


def test_argparse_errors():
    with pytest.raises(SystemExit) as exc:
        main(["accept", "--criterion", "99"])
    assert exc.value.code == 2
