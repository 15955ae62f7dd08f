import csv
import json

import numpy as np
import pytest

from bispectral.baker import PRESETS
from bispectral.cli import main
from bispectral.core import SpectralData, from_spectral_data, pair_from_json, pair_to_json, validate_and_factor
from bispectral.dynamics import bessel_one_particle_position, reduced_reference_h1
from bispectral.involution import beta_bessel


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def pair_file(tmp_path):
    path = tmp_path / "pair.json"
    assert main(["gen", "--n", "2", "--seed", "7", "--out", str(path)]) == 0
    return path


def write_pair(path, pair):
    path.write_text(json.dumps(pair_to_json(pair)))
    return path


def test_gen_deterministic(tmp_path, pair_file):
    other = tmp_path / "again.json"
    main(["gen", "--n", "2", "--seed", "7", "--out", str(other)])
    assert pair_file.read_bytes() == other.read_bytes()
    pair = pair_from_json(json.loads(pair_file.read_text()))
    validate_and_factor(pair.P, pair.Q)
    assert (tmp_path / "pair.spectral.json").exists()


def test_gen_usage_errors(capsys):
    code, _, err = run(capsys, "gen", "--n", "0")
    assert code == 2 and "--n" in err
    with pytest.raises(SystemExit) as info:
        main(["gen"])
    assert info.value.code == 2


def test_gen_exact(capsys):
    code, out, _ = run(capsys, "gen", "--n", "2", "--backend", "exact")
    assert code == 0
    entries = json.loads(out)["P"]["entries"]
    assert all(isinstance(v, str) for e in entries for v in e)


@pytest.mark.parametrize("rho", ["airy2", "bessel2"])
def test_verify_passes(capsys, pair_file, rho):
    code, out, _ = run(capsys, "verify", "--pair", pair_file, "--rho", rho)
    report = json.loads(out)
    assert code == 0 and report["passed"]
    assert {s["status"] for s in report["suites"].values()} == {"pass"}


def test_verify_corrupted_pair(capsys, tmp_path, pair_file):
    obj = json.loads(pair_file.read_text())
    obj["P"]["entries"][1][0] += 0.1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(obj))
    code, out, _ = run(capsys, "verify", "--pair", bad)
    report = json.loads(out)
    assert code == 1
    assert report["suites"]["rank"]["status"] == "fail"
    assert "NotRankOne" in report["suites"]["oracle"]["error"]


def test_diagonal_change_of_canonical_pair_stays_valid(capsys, tmp_path, pair_file):
    # with Q diagonal, P_11 does not enter [P, Q]; the pair just gets another alpha_1
    obj = json.loads(pair_file.read_text())
    obj["P"]["entries"][0][0] += 0.1
    shifted = tmp_path / "shifted.json"
    shifted.write_text(json.dumps(obj))
    code, out, _ = run(capsys, "verify", "--pair", shifted, "--suites", "rank,oracle,conditions")
    assert code == 0


def test_verify_exact_zero_residuals(capsys, tmp_path):
    path = tmp_path / "exact.json"
    main(["gen", "--n", "2", "--seed", "3", "--backend", "exact", "--out", str(path)])
    code, out, _ = run(capsys, "verify", "--pair", path, "--backend", "exact", "--suites", "a-identity,involutivity,oracle")
    report = json.loads(out)
    assert code == 0
    for name in ("a-identity", "involutivity", "oracle"):
        assert report["suites"][name]["residual"] == "0"


def test_verify_unknown_suite(capsys, pair_file):
    code, _, err = run(capsys, "verify", "--pair", pair_file, "--suites", "nope")
    assert code == 2 and "nope" in err


def test_involute_round_trip(tmp_path, pair_file):
    for name, rho in (("kp", "airy2"), ("airy", "airy2"), ("bessel", "bessel2")):
        once, twice = tmp_path / f"{name}1.json", tmp_path / f"{name}2.json"
        assert main(["involute", "--pair", str(pair_file), "--map", name, "--rho", rho, "--out", str(once)]) == 0
        assert main(["involute", "--pair", str(once), "--map", name, "--rho", rho, "--out", str(twice)]) == 0
        a = pair_from_json(json.loads(pair_file.read_text()))
        b = pair_from_json(json.loads(twice.read_text()))
        assert np.allclose(a.P, b.P, atol=1e-9) and np.allclose(a.Q, b.Q, atol=1e-9)


def test_involute_kind_mismatch(capsys, pair_file):
    code, _, err = run(capsys, "involute", "--pair", pair_file, "--map", "bessel", "--rho", "airy2")
    assert code == 2


def test_baker_grid(tmp_path, pair_file):
    out = tmp_path / "k.csv"
    assert main(["baker", "--pair", str(pair_file), "--x", "0.5,1+1j", "--z", "2,1e3,1e6", "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out)))
    assert len(rows) == 6
    last = rows[2]
    assert float(last["k0_re"]) == pytest.approx(1, abs=1e-5) and abs(float(last["k1_re"])) <= 1e-5
    meta = json.loads((tmp_path / "k.meta.json").read_text())
    assert meta["rho"]["kind"] == "airy" and "pair" in meta


def test_baker_pole_recorded(tmp_path):
    pair = from_spectral_data(SpectralData((2.0,), (0.5,)))
    path = write_pair(tmp_path / "p.json", pair)
    out = tmp_path / "k.csv"
    assert main(["baker", "--pair", str(path), "--x", "1", "--z", "2", "--out", str(out)]) == 0
    row = next(csv.DictReader(open(out)))
    assert row["error"] == "PoleInZ"


def test_baker_raw_bessel(tmp_path, pair_file, capsys):
    code, raw, _ = run(capsys, "baker", "--pair", pair_file, "--rho", "bessel2", "--x", "1.5", "--z", "2", "--raw")
    code2, transformed, _ = run(capsys, "baker", "--pair", pair_file, "--rho", "bessel2", "--x", "2.25", "--z", "4")
    assert code == code2 == 0
    assert raw.splitlines()[1].split(",")[4:] == transformed.splitlines()[1].split(",")[4:]


def test_flow_one_particle_bessel(tmp_path):
    lam0, gam0 = 1.2, -0.3
    hat = beta_bessel(from_spectral_data(SpectralData((lam0,), (gam0,))), PRESETS["bessel2"])
    c2, c1 = complex(hat.P[0, 0]), complex(hat.Q[0, 0])
    path = write_pair(tmp_path / "hat.json", hat)
    out = tmp_path / "traj.csv"
    assert main(["flow", "--pair", str(path), "--rho", "bessel2", "--t0", "-1", "--t1", "1", "--steps", "11", "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out)))
    for row in rows:
        t = float(row["t"])
        assert complex(float(row["pole1_re"]), float(row["pole1_im"])) == pytest.approx(
            bessel_one_particle_position(c1, c2, -t), abs=1e-9
        )
    meta = json.loads((tmp_path / "traj.meta.json").read_text())
    assert meta["m"] == 1 and meta["grid"]["steps"] == 11


def test_flow_single_step(tmp_path, pair_file):
    out = tmp_path / "one.csv"
    assert main(["flow", "--pair", str(pair_file), "--steps", "1", "--out", str(out)]) == 0
    assert len(list(csv.reader(open(out)))) == 2


def test_flow_singular_q(capsys, tmp_path):
    path = tmp_path / "sq.json"
    path.write_text(json.dumps({"P": {"n": 1, "entries": [[1, 0]]}, "Q": {"n": 1, "entries": [[0, 0]]}}))
    code, _, err = run(capsys, "flow", "--pair", path, "--rho", "bessel2", "--out", tmp_path / "x.csv")
    assert code == 2 and "SingularQ" in err


def test_ham_two_particle_airy(capsys, tmp_path):
    lam, gam = (0.3, 2.1), (0.5, -0.7)
    path = write_pair(tmp_path / "p.json", from_spectral_data(SpectralData.from_gammas(lam, gam)))
    code, out, _ = run(capsys, "ham", "--pair", path)
    report = json.loads(out)
    assert code == 0
    assert report["hamiltonian"][0] == pytest.approx(reduced_reference_h1("airy", (*lam, *gam)))
    assert report["difference"] <= 1e-10


def test_rho_coefficients(capsys, caplog, pair_file):
    code, _, err = run(capsys, "ham", "--pair", pair_file, "--rho", "1,1,1")
    assert code == 2 and "a_(r-1)" in err
    code, out, err = run(capsys, "ham", "--pair", pair_file, "--rho", "1,1,1", "--no-validate-rho")
    assert code == 0 and "unvalidated" in caplog.text
    code, _, _ = run(capsys, "ham", "--pair", pair_file, "--rho=-1,-1,1", "--kind", "bessel")
    assert code == 0


def test_exact_backend_rejects_float_file(capsys, pair_file):
    code, _, err = run(capsys, "ham", "--pair", pair_file, "--backend", "exact")
    assert code == 2 and "exact" in err


def test_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "ham", "--pair", tmp_path / "missing.json")
    assert code == 2
