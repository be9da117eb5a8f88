import csv
import io
import json
import math

import numpy as np
import pytest

from petzlab import channels as ch
from petzlab.algebra import random_reference, random_state
from petzlab.cli import main
from petzlab.serialize import (
    channel_from_json,
    channel_to_json,
    dumps,
    matrix_from_json,
    matrix_to_json,
    reference_from_json,
    state_from_json,
)


def ginibre(seed, n=3):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


# serialization -----------------------------------------------------------------------

def test_matrix_round_trip_exact():
    for seed in range(10):
        m = ginibre(seed, 4) * 10.0 ** (seed - 5)
        back = matrix_from_json(json.loads(dumps(matrix_to_json(m))))
        assert np.array_equal(back, m)


def test_matrix_from_json_errors():
    with pytest.raises(ValueError):
        matrix_from_json({"re": [[1, 0]], "im": [[0]]})
    with pytest.raises(ValueError):
        matrix_from_json([1, 2, 3])
    assert np.array_equal(matrix_from_json([[1, 2], [3, 4]]), np.array([[1, 2], [3, 4]]))


def test_channel_json_round_trip():
    for seed in range(5):
        phi = ch.random_channel(3, 2, rank=2, seed=seed)
        back = channel_from_json(json.loads(dumps(channel_to_json(phi))))
        assert (back.source, back.target) == (3, 2)
        assert np.abs(back.matrix - phi.matrix).max() <= 1e-12


def test_channel_kinds():
    assert np.allclose(channel_from_json({"kind": "pinching", "blocks": [2, 2]}, 4).matrix,
                       ch.pinching((2, 2)).matrix)
    assert np.allclose(channel_from_json({"kind": "identity"}, 3).matrix, np.eye(9))
    assert channel_from_json({"kind": "conditional_expectation_diag"}, 3).is_unital
    assert channel_from_json({"kind": "depolarizing_like", "lam": 0.3}, 2).is_tp
    u = ch.random_unitary(2, seed=1)
    mu = channel_from_json({"kind": "mixed_unitary", "weights": [1.0], "unitaries": [matrix_to_json(u)]}, 2)
    assert np.allclose(mu.matrix, ch.conjugation(u).matrix)
    with pytest.raises(ValueError):
        channel_from_json({"kind": "teleport"}, 2)
    with pytest.raises(ValueError):
        channel_from_json({"kind": "pinching", "blocks": [1, 1]}, 3)


def test_reference_and_state_specs():
    b = reference_from_json({"kind": "random", "seed": 3, "cond_cap": 10}, 3)
    assert np.array_equal(b.matrix, random_reference(3, 3, 10).matrix)
    assert np.array_equal(reference_from_json("identity", 2).matrix, np.eye(2))
    assert np.array_equal(state_from_json({"kind": "random", "seed": 4}, 3), random_state(3, 4))
    assert np.array_equal(state_from_json("reference", 3, b), b.matrix)
    with pytest.raises(ValueError):
        state_from_json("reference", 3)


# CLI --------------------------------------------------------------------------------------

def write_cfg(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def run(tmp_path, cmd, cfg, *extra):
    out = tmp_path / f"{cmd}.out"
    code = main([cmd, write_cfg(tmp_path, cfg), "--out", str(out), *extra])
    return code, out.read_text() if out.exists() else None


RANDOM_CFG = {
    "algebra": {"dim": 3},
    "reference": {"kind": "random", "seed": 1},
    "channel": {"kind": "random", "rank": 2, "seed": 2},
    "state": {"kind": "random", "seed": 3},
}


def test_cli_analyze_pinching(tmp_path):
    cfg = {"algebra": {"dim": 4}, "channel": {"kind": "pinching", "blocks": [2, 2]}}
    code, text = run(tmp_path, "analyze", cfg)
    assert code == 0
    js = json.loads(text)
    assert js["fixed_dim"] == 8
    assert js["delta"] <= 1e-10


def test_cli_analyze_identity(tmp_path):
    code, text = run(tmp_path, "analyze", {"algebra": {"dim": 3}, "channel": {"kind": "identity"}})
    assert code == 0
    js = json.loads(text)
    assert js["fixed_dim"] == 9 and js["delta"] == 0


def test_cli_analyze_byte_identical(tmp_path):
    _, t1 = run(tmp_path, "analyze", RANDOM_CFG)
    _, t2 = run(tmp_path, "analyze", RANDOM_CFG)
    assert t1 == t2
    # psi matrix survives the JSON trip exactly
    js = json.loads(t1)
    psi = matrix_from_json(js["psi"])
    assert matrix_to_json(psi) == js["psi"]


def test_cli_iterate_csv(tmp_path):
    cfg = dict(RANDOM_CFG, n_max=40, p_list=[1.5])
    code, text = run(tmp_path, "iterate", cfg)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(text)))
    assert list(rows[0]) == ["n", "dist_l1", "dist_B2", "cert_delta_pow", "dist_Bp_1.5"]
    assert len(rows) == 41
    for r in rows:
        assert float(r["dist_B2"]) <= float(r["cert_delta_pow"]) * (1 + 1e-8) + 1e-15
    assert float(rows[-1]["dist_B2"]) <= float(rows[-1]["cert_delta_pow"]) + 1e-12


def test_cli_iterate_reference_state_all_zero(tmp_path):
    cfg = dict(RANDOM_CFG, state="reference", n_max=5)
    code, text = run(tmp_path, "iterate", cfg)
    assert code == 0
    for r in csv.DictReader(io.StringIO(text)):
        assert float(r["dist_l1"]) <= 1e-12 and float(r["dist_B2"]) <= 1e-12


def test_cli_decompose(tmp_path):
    code, text = run(tmp_path, "decompose", RANDOM_CFG)
    assert code == 0
    js = json.loads(text)
    assert all(js["checks"].values())
    code, text = run(tmp_path, "decompose", dict(RANDOM_CFG, state="reference"))
    js = json.loads(text)
    assert np.abs(matrix_from_json(js["c"])).max() <= 1e-9


def test_cli_dpi_and_bound(tmp_path):
    code, text = run(tmp_path, "dpi", dict(RANDOM_CFG, channel={"kind": "identity"}))
    assert code == 0
    gaps = json.loads(text)["instances"][0]["dpi_gap"]
    assert set(gaps) == {"1.0", "1.5", "2.0", "3.0", "inf"}
    assert all(abs(g) <= 1e-10 for g in gaps.values())
    code, text = run(tmp_path, "bound", dict(RANDOM_CFG, state="reference"))
    assert code == 0
    rep = json.loads(text)["instances"][0]["bound"]
    assert max(rep["lhs"], rep["mid"], abs(rep["rhs"])) <= 1e-9


def test_cli_sweeps(tmp_path):
    cfg = {"num_instances": 20, "seed": 100, "instance": {"dim": 3, "rank": 2}}
    assert run(tmp_path, "dpi", cfg)[0] == 0
    assert run(tmp_path, "bound", cfg)[0] == 0
    code, text = run(tmp_path, "fuzz", dict(cfg, num_instances=5, instance={"dim": 2, "n_max": 20}))
    assert code == 0
    assert len(json.loads(text)["properties"]) == 21


def test_cli_fuzz_empty_registry(tmp_path):
    code, text = run(tmp_path, "fuzz", {"num_instances": 3, "registry": []})
    assert code == 0
    assert json.loads(text) == {"properties": []}


def test_cli_probe(tmp_path):
    cfg = {"algebra": {"dim": 2}, "channel": {"kind": "identity"}, "n_values": [0, 1, 2], "restarts": 4}
    code, text = run(tmp_path, "probe-l1", cfg)
    assert code == 0
    assert all(r["lower_bound"] == 0 for r in json.loads(text)["probe"])
    cfg = dict(RANDOM_CFG, n_values=[0, 1, 2, 4, 8], restarts=4)
    code, text = run(tmp_path, "probe-l1", cfg)
    js = json.loads(text)
    assert code == 0 and js["non_increasing"]


def test_cli_seed_override(tmp_path):
    _, t1 = run(tmp_path, "analyze", RANDOM_CFG, "--seed", "7")
    _, t2 = run(tmp_path, "analyze", RANDOM_CFG, "--seed", "8")
    _, t3 = run(tmp_path, "analyze", RANDOM_CFG, "--seed", "7")
    assert t1 != t2 and t1 == t3


def test_cli_config_errors(tmp_path, capsys):
    assert main(["analyze", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["analyze", str(bad)]) == 2
    assert run(tmp_path, "analyze", {"channel": {"kind": "identity"}})[0] == 2
    assert run(tmp_path, "analyze", {"algebra": {"dim": 2}, "channel": {"kind": "pinching", "blocks": [3]}})[0] == 2
    not_tp = {"kind": "kraus", "kraus": [[[2, 0], [0, 0]]], "source_dim": 2, "target_dim": 2}
    assert run(tmp_path, "analyze", {"algebra": {"dim": 2}, "channel": not_tp})[0] == 2
    assert run(tmp_path, "iterate", dict(RANDOM_CFG, n_max=0))[0] == 2
    assert run(tmp_path, "fuzz", {"num_instances": 0})[0] == 2
    assert run(tmp_path, "fuzz", {"num_instances": 1, "registry": ["nope"]})[0] == 2
    assert "petzlab:" in capsys.readouterr().err


def test_cli_numerical_error_exit_code(tmp_path, monkeypatch):
    import petzlab.cli as cli
    from petzlab.petz import NumericalError

    def boom(*args, **kwargs):
        raise NumericalError("symmetrization residual too large")

    monkeypatch.setattr(cli, "fixed_point_analysis", boom)
    assert run(tmp_path, "analyze", RANDOM_CFG)[0] == 3


def test_cli_violation_exit_code(tmp_path, monkeypatch):
    import petzlab.cli as cli

    monkeypatch.setattr(cli, "dpi_gap", lambda *a: -1.0)
    code, text = run(tmp_path, "dpi", RANDOM_CFG)
    assert code == 1 and json.loads(text)["violation"]


def test_cli_stdout(tmp_path, capsys):
    path = write_cfg(tmp_path, {"algebra": {"dim": 2}, "channel": {"kind": "identity"}})
    assert main(["analyze", path]) == 0
    assert json.loads(capsys.readouterr().out)["fixed_dim"] == 4


def test_json_handles_infinity():
    assert math.isinf(json.loads(dumps({"x": math.inf}))["x"])
