import json
import math
import os
import subprocess

import pytest

import blowup


def test_closed_forms():
    d = blowup.CurvaturePointData.flat(5, -1.0, 2.0)
    assert d.D == pytest.approx(2.0)
    assert blowup.bubble_energy(d) == pytest.approx(414.4066958, rel=1e-8)
    A, C = blowup.coeff_A(d), blowup.coeff_C(d)
    assert A == pytest.approx(10979.385, rel=1e-6)
    assert C == pytest.approx(4708.076, rel=1e-6)
    assert blowup.optimal_d(A, C) == pytest.approx(0.214405, rel=1e-5)
    rc = blowup.reduced_coefficients(d, 0.0, 0.02)
    assert rc.d0 == pytest.approx(0.214405, rel=1e-5)
    # Beta form against the identity (n-3)/(n-1) I_{n-1}^n = I_{n-1}^{n-2}
    assert 2 / 4 * blowup.integral_I(4, 5) == pytest.approx(blowup.integral_I(4, 3), rel=1e-12)


def test_bubble_values():
    d = blowup.CurvaturePointData.flat(5, -1.0, 2.0)
    p = blowup.BubbleParams.from_data(d, 0.5)
    u0 = blowup.bubble_eval(p, [0.0] * 5)
    assert u0 > 0
    assert blowup.bubble_eval(p, [0.3, 0, 0, 0, 0]) < u0


def test_errors():
    with pytest.raises(ValueError):
        blowup.rho_of_eps(0.5)
    bad = {"schema_version": 1, "command": "verify-closed-forms",
           "curvature": {"n": 5, "K": 1, "D": 2}, "closed_forms": {}}
    with pytest.raises(blowup.ConfigError, match="curvature.K"):
        blowup.resolve_config(json.dumps(bad))


def test_rho_of_eps_round_trip():
    for s in (1e-3, 0.05, 0.2):
        e = -s * math.log(s)
        assert blowup.rho_of_eps(e) == pytest.approx(s, rel=1e-12)


def test_run_and_cli(tmp_path):
    cfg = {"schema_version": 1, "command": "verify-closed-forms",
           "curvature": {"n": 5, "K": -1, "D": 2},
           "closed_forms": {"dims": [5], "D": [2],
                            "residual_h_bubble": [0.02, 0.01, 0.005]}}
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    status, out, checks = blowup.run(str(path), str(tmp_path / "py"), 1)
    assert status == 0
    assert all(c[4] for c in checks)
    assert (tmp_path / "py" / "manifest.json").exists()

    cli = os.environ.get("BLOWUP_CLI")
    if not cli:
        pytest.skip("BLOWUP_CLI not set")
    r = subprocess.run([cli, "verify-closed-forms", "--config", str(path),
                        "--out", str(tmp_path / "cli"), "--threads", "1"],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    for f in sorted(os.listdir(tmp_path / "py")):
        if f.endswith(".tsv"):
            assert (tmp_path / "py" / f).read_bytes() == (tmp_path / "cli" / f).read_bytes()
    r = subprocess.run([cli, "vp", "--config", str(path)], capture_output=True, text=True)
    assert r.returncode == 2
    assert "command" in r.stderr
