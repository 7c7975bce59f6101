import json

import numpy as np
import pytest

from kcontact import cli


CONFIG_DIR = "configs"


def run(args):
    return cli.main(args)


def read(path):
    with open(path) as fh:
        return json.load(fh)


def write_config(tmp_path, payload, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(payload))
    return str(p)


def small_sampler(n_paths=48):
    return {"n_paths": n_paths, "segments": 4, "horizon": 1.2,
            "magnitude": 0.45, "step": 0.02, "seed": 0}


def test_verify_heisenberg_passes(tmp_path):
    cfg = write_config(tmp_path, {
        "manifold": {"type": "heisenberg", "m": 2},
        "sampler": small_sampler(8),
    })
    out = tmp_path / "report.json"
    assert run(["verify", "--config", cfg, "--out", str(out)]) == 0
    rep = read(out)
    assert rep["schema"] == 1 and rep["pass"] is True
    assert all(c["pass"] for c in rep["checks"].values())
    assert rep["checks"]["dtheta_inverse_pairing"]["tolerance"] == 1e-9


def test_verify_perturbed_still_k_contact(tmp_path):
    cfg = write_config(tmp_path, {
        "manifold": {"type": "product", "factors": [
            {"kind": "perturbed_disc", "b": 1.0, "epsilon": 0.3},
            {"kind": "poincare_disc", "b": 1.0},
        ]},
        "sampler": small_sampler(8),
    })
    out = tmp_path / "report.json"
    assert run(["verify", "--config", cfg, "--out", str(out)]) == 0
    assert read(out)["checks"]["reeb_flow_isometry"]["pass"]


def test_config_errors_exit_2(tmp_path, capsys):
    bad = write_config(tmp_path, {
        "manifold": {"type": "product", "factors": [
            {"kind": "poincare_disc", "b": 0.0}]},
    })
    assert run(["verify", "--config", bad]) == 2
    missing = str(tmp_path / "nope.json")
    assert run(["verify", "--config", missing]) == 2
    garbled = tmp_path / "garbled.json"
    garbled.write_text("{not json")
    assert run(["verify", "--config", str(garbled)]) == 2
    nomanifold = write_config(tmp_path, {"sampler": {}}, "m.json")
    assert run(["verify", "--config", nomanifold]) == 2


def test_domain_violation_exit_3(tmp_path):
    cfg = write_config(tmp_path, {
        "manifold": {"type": "heisenberg", "m": 2},
        "base_point": [9.0, 0, 0, 0, 0],
    })
    assert run(["verify", "--config", cfg]) == 3


def test_holonomy_requires_seed(tmp_path):
    cfg = write_config(tmp_path, {"manifold": {"type": "heisenberg", "m": 2}})
    with pytest.raises(SystemExit):
        run(["holonomy", "--config", cfg])


def test_holonomy_reports(tmp_path):
    cfg = write_config(tmp_path, {
        "manifold": {"type": "product", "factors": [
            {"kind": "poincare_disc", "b": 1.0},
            {"kind": "poincare_disc", "b": 1.0},
        ]},
        "sampler": small_sampler(),
    })
    out = tmp_path / "rep.json"
    assert run(["holonomy", "--config", cfg, "--seed", "0", "--out", str(out)]) == 0
    rep = read(out)
    assert rep["dims"] == {"adapted": 2, "schouten": 1}
    assert rep["codim"] == 1 and rep["ideal"] is True
    assert rep["blocks"] == [[0, 1], [2, 3]]
    assert rep["cross_variant"]["residual"] < 1e-4
    assert np.allclose(rep["regression"]["b"], [1.0, 1.0], atol=1e-4)
    coeffs = np.array(rep["t_coefficients"])
    assert np.allclose(coeffs / np.linalg.norm(coeffs), [1, 1] / np.sqrt(2), atol=1e-3)
    assert rep["ratio_condition"]["satisfiable"] is True
    assert rep["spinor_kernel"]["schouten"] == 2
    assert rep["sasaki"]["is_sasaki_candidate"] is True


def test_holonomy_heisenberg_trivial(tmp_path):
    cfg = write_config(tmp_path, {
        "manifold": {"type": "heisenberg", "m": 2},
        "sampler": small_sampler(16),
    })
    out = tmp_path / "rep.json"
    assert run(["holonomy", "--config", cfg, "--seed", "1", "--out", str(out)]) == 0
    rep = read(out)
    assert rep["dims"] == {"adapted": 0, "schouten": 0}
    assert rep["codim"] == 0
    assert rep["blocks"] == []
    assert rep["trivial_block"] == [0, 1, 2, 3]
    assert rep["spinor_kernel"] == {"adapted": 4, "schouten": 4}


def test_holonomy_bergman(tmp_path):
    cfg = write_config(tmp_path, {
        "manifold": {"type": "product", "factors": [
            {"kind": "bergman_ball", "complex_dim": 2, "b": 1.0}]},
        "sampler": small_sampler(),
    })
    out = tmp_path / "rep.json"
    assert run(["holonomy", "--config", cfg, "--seed", "0", "--out", str(out)]) == 0
    rep = read(out)
    assert rep["dims"] == {"adapted": 4, "schouten": 3}
    assert rep["codim"] == 1
    assert rep["spinor_kernel"]["schouten"] == 2
    assert rep["spinor_kernel"]["adapted"] == 0


def test_reports_byte_stable(tmp_path):
    cfg = write_config(tmp_path, {
        "manifold": {"type": "product", "factors": [
            {"kind": "poincare_disc", "b": 1.0},
            {"kind": "poincare_disc", "b": 2.0},
        ]},
        "sampler": small_sampler(32),
    })
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(["holonomy", "--config", cfg, "--seed", "7", "--out", str(a)]) == 0
    assert run(["holonomy", "--config", cfg, "--seed", "7", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_paths_override_changes_sampling(tmp_path):
    cfg = write_config(tmp_path, {
        "manifold": {"type": "heisenberg", "m": 2},
        "sampler": small_sampler(64),
    })
    out = tmp_path / "rep.json"
    assert run(["holonomy", "--config", cfg, "--seed", "0", "--paths", "8",
                "--out", str(out)]) == 0
    assert read(out)["n_paths"] == 8


def test_spinor_command(tmp_path):
    cfg = write_config(tmp_path, {
        "manifold": {"type": "product", "factors": [
            {"kind": "bergman_ball", "complex_dim": 2, "b": 1.0}]},
        "sampler": small_sampler(32),
    })
    out = tmp_path / "rep.json"
    assert run(["spinor", "--config", cfg, "--out", str(out)]) == 0
    rep = read(out)
    assert rep["clifford_residual"] < 1e-12
    assert rep["homomorphism_residual"] < 1e-10
    assert abs(abs(rep["lift_level_constant"]) - 0.5) < 1e-12
    assert rep["kernel_dims"]["schouten"] == 2
    assert rep["kernel_dims"]["trivial_algebra"] == 4
    levels = {e["index"]: e["level"] for e in rep["rotation_eigenvalues"]}
    assert levels == {0: 0, 1: 1, 2: 1, 3: 2}


def test_list_manifolds(capsys):
    assert run(["list-manifolds"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["types"] == ["heisenberg", "product"]
    assert set(payload["factor_kinds"]) == {
        "poincare_disc", "bergman_ball", "perturbed_disc"}


def test_sampling_failure_exit_4(tmp_path):
    cfg = write_config(tmp_path, {
        "manifold": {"type": "heisenberg", "m": 2},
        "sampler": {"n_paths": 2, "segments": 2, "horizon": 0.5,
                    "magnitude": 300.0, "step": 0.05, "seed": 0},
    })
    assert run(["holonomy", "--config", cfg, "--seed", "0"]) == 4


def test_report_floats_parse_back(tmp_path):
    cfg = write_config(tmp_path, {
        "manifold": {"type": "heisenberg", "m": 2},
        "sampler": small_sampler(8),
    })
    out = tmp_path / "rep.json"
    run(["verify", "--config", cfg, "--out", str(out)])
    text = out.read_text()
    parsed = json.loads(text)  # valid JSON with numeric values
    assert isinstance(parsed["checks"]["torsion"]["residual"], (int, float))
    assert isinstance(parsed["checks"]["theta_transport_agreement"]["residual"], float)
    # keys are sorted at every level
    keys = list(parsed.keys())
    assert keys == sorted(keys)
