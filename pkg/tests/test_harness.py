import csv
import hashlib

import pytest

from asyncadmm.errors import ConfigError
from asyncadmm.harness import cli
from asyncadmm.harness.config import RunConfig, parse_config, validate
from asyncadmm.harness.experiment import ENV_OUTPUT, choose_beta, make_cover, make_objectives, run_experiment
from asyncadmm.harness.reproduce import iterations_to_threshold, reproduce
from asyncadmm.harness.selftest import selftest

EQ_CFG = """\
# three-node ring, twin run
problem = quadratic
n = 3
d = 2
beta = 2.0
subset_size = 2
iterations = 100
mode = equivalence_check
timing = off
"""


def csv_digest(path, drop_wall=False):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if drop_wall:
        rows = [r[:-1] for r in rows]
    return hashlib.sha256(repr(rows).encode()).hexdigest()


# ------------------------------------------------------------------ config


def test_parse_roundtrip():
    cfg = parse_config(EQ_CFG)
    assert cfg.mode == "equivalence_check" and cfg.timing is False and cfg.subset_size == 2
    assert parse_config(cfg.to_text()) == cfg


@pytest.mark.parametrize("text,field,line", [
    ("n = 3\nbogus = 1\n", "bogus", 2),
    ("n = 3\nn = 4\n", "n", 2),
    ("\n\niterations = zero\n", "iterations", 3),
    ("iterations = 0\n", "iterations", 1),
    ("problem = svm\n", "problem", 1),
    ("graph = ring\nn = 2\n", "n", 2),
    ("beta = -1\n", "beta", 1),
    ("activation = bernoulli\n", "bernoulli_prob", None),
    ("graph = explicit\n", "cover", None),
])
def test_config_errors_carry_location(text, field, line):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.field == field
    assert exc.value.line == line


def test_missing_equals_sign():
    with pytest.raises(ConfigError) as exc:
        parse_config("n 3\n")
    assert exc.value.line == 1


# -------------------------------------------------------------- experiments


def test_equivalence_run(tmp_path):
    res = run_experiment(parse_config(EQ_CFG), output_dir=tmp_path)
    assert res.status == 0
    assert res.extras["max_step_deviation"] <= 1e-9
    assert res.extras["accumulated_deviation"] <= 1e-7
    header = (tmp_path / "run.csv").read_text().splitlines()[0]
    assert header == "iter,merit,grad_norm,disagreement,prox_residual,active_ids,inner_iters,wall_ms"
    summary = (tmp_path / "summary.txt").read_text()
    assert "equivalence = pass" in summary and "mode = equivalence_check" in summary


def test_explicit_cover_run(tmp_path):
    text = ("problem = quadratic\ngraph = explicit\nn = 6\nedges = 1-2, 1-3, 2-4, 3-4, 3-5, 4-6\n"
            "cover = 1,2,3,4; 3,5; 4,6\nbeta = 3\nsubset_size = 2\niterations = 50\nmode = drs\n")
    res = run_experiment(parse_config(text), output_dir=tmp_path)
    assert res.status == 0 and len(res.records) == 50


def test_explicit_cover_invalid_is_failure(tmp_path):
    text = "graph = explicit\nn = 4\nedges = 1-2, 2-3, 3-4\ncover = 1,2; 3,4\nbeta = 1\n"
    res = run_experiment(parse_config(text), output_dir=tmp_path)
    assert res.status == 2
    assert any("CoverInvalid" in s for s in res.summary)


def test_spca_auto_beta_above_floor():
    cfg = validate(RunConfig(problem="sparse_pca", n=4, d=6, m_per_agent=10, lam=1.0, subset_size=4))
    cover = make_cover(cfg)
    objs = make_objectives(cfg)
    beta, L, ell, note = choose_beta(cfg, cover, objs)
    floor = 2.05 * max(o.gram_lambda_max for o in objs)
    assert beta >= floor > 2 * max(o.gram_lambda_max for o in objs)


@pytest.mark.parametrize("problem,extra", [
    ("quadratic", "d = 3\n"),
    ("phase_retrieval", "d = 3\nm_per_agent = 10\nbeta = 20\n"),
    ("sparse_pca", "d = 5\nm_per_agent = 10\nlam = 1\ntrack_merit = false\n"),
])
def test_determinism_across_workers(tmp_path, problem, extra):
    base = f"problem = {problem}\nn = 5\nsubset_size = 3\niterations = 40\nseed = 7\n" + extra
    digests = []
    for workers in (1, 4):
        out = tmp_path / f"w{workers}"
        run_experiment(parse_config(base + f"workers = {workers}\ntiming = off\n"), output_dir=out)
        digests.append((out / "run.csv").read_bytes())
        timed = tmp_path / f"t{workers}"
        run_experiment(parse_config(base + f"workers = {workers}\n"), output_dir=timed)
        digests.append(csv_digest(timed / "run.csv", drop_wall=True))
    assert digests[0] == digests[2]
    assert digests[1] == digests[3]


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(ENV_OUTPUT, str(tmp_path / "envout"))
    res = run_experiment(parse_config("iterations = 3\nbeta = 2\n"))
    assert (tmp_path / "envout" / "run.csv").exists()
    assert res.output_dir == str(tmp_path / "envout")


# --------------------------------------------------------------------- CLI


def test_cli_run(tmp_path, capsys):
    cfg = tmp_path / "eq.cfg"
    cfg.write_text(EQ_CFG)
    assert cli.main(["run", str(cfg), "--output", str(tmp_path / "o")]) == 0
    assert "equivalence = pass" in capsys.readouterr().out


def test_cli_run_bad_config(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("iterations = 0\n")
    assert cli.main(["run", str(cfg)]) == 2
    assert "iterations" in capsys.readouterr().err


def test_cli_check_condition(capsys):
    assert cli.main(["check-condition", "--gamma", "0.05", "--L", "1", "--ell", "1", "--p", "10", "--C", "10"]) == 0
    out = capsys.readouterr().out
    assert "feasible" in out and "np.float64" not in out
    assert cli.main(["check-condition", "--beta", "1", "--L", "1", "--ell", "1", "--p", "10",
                     "--fraction", "1", "--minimal-beta"]) == 1
    assert "minimal beta" in capsys.readouterr().out


def test_selftest_and_negative_control(capsys):
    assert selftest() == 0
    assert "6/6 checks passed" in capsys.readouterr().out
    assert cli.main(["selftest", "--corrupt-layout"]) == 1
    out = capsys.readouterr().out
    assert "locality" in out and "FAIL" in out


def test_reproduce_smoke(tmp_path):
    lines, curves = reproduce("pr_fig4", "desk", tmp_path, seeds=[1, 2], iterations=30)
    assert set(curves) == {"async_S15", "async_S12", "async_S9"}
    assert all(len(v) == 2 for v in curves.values())
    bundle = tmp_path / "pr_fig4_desk"
    assert (bundle / "thresholds.csv").exists()
    assert "desk scale" in (bundle / "summary.txt").read_text()


def test_iterations_to_threshold():
    from asyncadmm.analysis import RunRecord
    recs = [RunRecord(k, 0.0, g, 0.0, 0.0, (1,), 0, 0.0) for k, g in enumerate([1.0, 0.1, 1e-3, 1e-4], 1)]
    assert iterations_to_threshold(recs) == 3
    assert iterations_to_threshold(recs, decades=5) is None
