import json

import pytest

from stan2gprob.cli import main

from conftest import CORPUS

COIN = str(CORPUS / "coin.stan")
COIN_DATA = str(CORPUS / "coin.json")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_check_ok(capsys):
    assert run(capsys, "check", COIN) == (0, "", "")


def test_check_missing_model(capsys, tmp_path):
    bad = tmp_path / "bad.stan"
    bad.write_text("data { int N; }\n")
    code, out, err = run(capsys, "check", str(bad))
    assert code == 1
    lines = err.strip().splitlines()
    assert len(lines) == 1 and "error[missing-model]" in lines[0] and lines[0].startswith(str(bad))


def test_missing_file_is_usage_error(capsys, tmp_path):
    code, _, err = run(capsys, "check", str(tmp_path / "nope.stan"))
    assert code == 2 and "cannot read" in err


def test_bad_subcommand(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_compile_emits_ir(capsys):
    code, out, _ = run(capsys, "compile", COIN, "--emit-ir")
    assert code == 0 and out.startswith("let z = sample(uniform(0, 1)) in\n")


def test_compile_to_file(capsys, tmp_path):
    target = tmp_path / "coin.py"
    assert run(capsys, "compile", COIN, "--emit-pyro", "-o", str(target))[0] == 0
    assert "def model(N, x):" in target.read_text()


def test_compile_emits_kernel(capsys):
    code, out, _ = run(capsys, "compile", str(CORPUS / "reparameterization.stan"), "--emit-kernel")
    assert code == 0 and "transformed parameters" not in out and "real y;" in out


def test_emit_types_vae(capsys):
    from pathlib import Path

    code, out, _ = run(capsys, "compile", str(CORPUS / "vae.stan"), "--emit-types")
    assert code == 0
    assert out == (Path(__file__).parent / "golden" / "vae_types.txt").read_text()


def test_eval_target(capsys, tmp_path):
    params = tmp_path / "p.json"
    params.write_text('{"z": 0.5}')
    code, out, _ = run(capsys, "eval-target", COIN, "--data", COIN_DATA, "--params", str(params))
    assert code == 0 and out == "-6.9314718055994531\n"


def test_invalid_json_is_usage_error(capsys, tmp_path):
    params = tmp_path / "p.json"
    params.write_text("{z: 0.5")
    code, _, err = run(capsys, "eval-target", COIN, "--data", COIN_DATA, "--params", str(params))
    assert code == 2 and "invalid JSON" in err


def test_infer_is(capsys):
    code, out, _ = run(capsys, "infer", COIN, "--data", COIN_DATA, "--method", "is", "--samples", "20000", "--seed", "1")
    result = json.loads(out)
    assert code == 0 and result["seed"] == 1 and result["method"] == "is"
    assert result["parameters"]["z"]["mean"] == pytest.approx(2 / 3, abs=0.02)
    assert set(result["parameters"]["z"]) == {"mean", "sd", "q5", "q50", "q95"}
    assert 0 < result["ess"] <= 20000


def test_infer_is_improper_prior_fails(capsys):
    code, _, err = run(capsys, "infer", str(CORPUS / "double_normal.stan"), "--samples", "10")
    assert code == 1 and "improper-prior-needs-mcmc" in err


def test_infer_mh_with_init(capsys, tmp_path):
    init = tmp_path / "init.json"
    init.write_text('{"theta": 1000}')
    argv = ["infer", str(CORPUS / "double_normal.stan"), "--method", "mh", "--samples", "5000", "--init", str(init)]
    code, out, _ = run(capsys, *argv)
    result = json.loads(out)
    assert code == 0 and result["draws"] == 500 and 0 < result["accept_rate"] < 1


def test_same_seed_same_bytes(capsys):
    argv = ["infer", COIN, "--data", COIN_DATA, "--method", "mh", "--samples", "3000", "--seed", "9"]
    assert run(capsys, *argv)[1] == run(capsys, *argv)[1]


def test_chains_flag(capsys):
    argv = ["infer", COIN, "--data", COIN_DATA, "--method", "mh", "--samples", "1000", "--chains", "2"]
    result = json.loads(run(capsys, *argv)[1])
    assert len(result["chains"]) == 2 and result["draws"] == 200


def test_constraint_violation_in_data(capsys, tmp_path):
    data = tmp_path / "d.json"
    data.write_text('{"N": 1, "x": [2]}')
    params = tmp_path / "p.json"
    params.write_text('{"z": 0.5}')
    code, _, err = run(capsys, "eval-target", COIN, "--data", str(data), "--params", str(params))
    assert code == 1 and "constraint-violation" in err
