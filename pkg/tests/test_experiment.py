import csv
import json
import math

import numpy as np
import pytest

from lamarck import records
from lamarck.analysis import delta_of_delta
from lamarck.cli import main
from lamarck.config import ConfigError, ExperimentConfig, from_ini, load, save, to_ini
from lamarck.evolution import DARWINIAN, LAMARCKIAN
from lamarck.experiment import (
    analyze,
    budget_report,
    compare,
    delta_of_delta_from_logs,
    fixed_body_baseline,
    learning_deltas,
    replay_stats,
    resume_experiment,
    run_experiment,
)
from lamarck.learner import RevDeConfig

TINY = RevDeConfig(mu=3, candidates_per_iter=3, iterations=2)


def tiny_cfg(tmp_path, **evo):
    base = dict(mu=4, lam=2, generations=2, learning=TINY, seed=1)
    base.update(evo)
    return ExperimentConfig(out=str(tmp_path / "runs"), parallelism=1).with_evolution(**base)


# --- configuration -----------------------------------------------------------


def test_config_round_trip_default_and_modified(tmp_path):
    assert from_ini(to_ini(ExperimentConfig())) == ExperimentConfig()
    cfg = tiny_cfg(tmp_path, mode=DARWINIAN, crossover_rate=0.1 + 0.2)
    cfg = cfg.with_evolution(task=cfg.evolution.task.__class__(targets=((0.3, 1 / 3),), omega=0.05))
    path = tmp_path / "c.ini"
    save(cfg, path)
    back = load(path)
    assert back == cfg
    assert back.evolution.crossover_rate == 0.1 + 0.2
    assert back.evolution.task.targets == ((0.3, 1 / 3),)


def test_config_defaults_match_parameter_table():
    evo = ExperimentConfig().evolution
    assert (evo.mu, evo.lam, evo.generations, evo.tournament_size) == (50, 25, 30, 2)
    assert (evo.learning.mu, evo.learning.candidates_per_iter, evo.learning.iterations) == (10, 30, 10)
    assert (evo.learning.F, evo.learning.CR) == (0.5, 0.9)
    assert evo.task.omega == 0.1


def test_unknown_key_reports_line():
    text = to_ini(ExperimentConfig()).replace("omega = 0.1", "omgea = 0.1")
    line = text.splitlines().index("omgea = 0.1") + 1
    with pytest.raises(ConfigError, match=rf":{line}: unknown key 'omgea' in \[task\]"):
        from_ini(text)


def test_unknown_section_and_bad_values():
    with pytest.raises(ConfigError, match="unknown section"):
        from_ini("[evolutoin]\nmu = 3\n")
    with pytest.raises(ConfigError, match=r"\[evolution\] mu"):
        from_ini("[evolution]\nmu = many\n")
    with pytest.raises(ConfigError, match="lambda"):
        from_ini("[evolution]\nmu = 2\nlambda = 5\n")
    with pytest.raises(ConfigError, match="mode"):
        from_ini("[evolution]\nmode = baldwinian\n")


# --- persistence -------------------------------------------------------------


@pytest.fixture(scope="module")
def finished_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("run")
    cfg = ExperimentConfig(out=str(tmp), parallelism=1).with_evolution(
        mu=4, lam=2, generations=3, learning=TINY, seed=4)
    return run_experiment(cfg)


def test_round_trip_equality(finished_run):
    record, run_dir = finished_run
    back = records.load(run_dir)
    assert back == record
    for i, ind in record.individuals.items():
        other = back.individuals[i]
        assert other.brain.weights.tobytes() == ind.brain.weights.tobytes()
        assert other.body == ind.body and other.tree == ind.tree
        assert np.array_equal(other.learned_weights, ind.learned_weights)
    assert (run_dir / "events.ndjson").read_text().splitlines() == record.lines()


def test_run_directory_contents(finished_run):
    record, run_dir = finished_run
    rows = list(csv.reader(open(run_dir / "generations.csv")))
    assert rows[0][0] == "generation" and len(rows) == 1 + 4
    traits = list(csv.reader(open(run_dir / "traits.csv")))
    assert len(traits) == 1 + len(record.individuals) and len(traits[0]) == 3 + 8
    meta = json.loads((run_dir / "meta.json").read_text())
    assert meta["wall_time_s"] >= 0
    assert load(run_dir / "config.ini") == record.config


def test_truncated_log_names_byte_offset(finished_run, tmp_path):
    _, run_dir = finished_run
    raw = (run_dir / "events.ndjson").read_bytes()
    cut = raw.rfind(b"\n", 0, len(raw) // 2) + 1 + 40
    bad = tmp_path / "bad"
    bad.mkdir()
    (bad / "events.ndjson").write_bytes(raw[:cut])
    start = raw.rfind(b"\n", 0, cut) + 1
    with pytest.raises(records.RecordCorruptError, match=f"byte offset {start}"):
        records.load(bad)


def test_missing_run_end_is_corruption(finished_run, tmp_path):
    _, run_dir = finished_run
    lines = (run_dir / "events.ndjson").read_bytes().splitlines(keepends=True)
    (tmp_path / "events.ndjson").write_bytes(b"".join(lines[:-1]))
    with pytest.raises(records.RecordCorruptError, match="without run_end"):
        records.load(tmp_path)


def test_version_mismatch(finished_run, tmp_path):
    _, run_dir = finished_run
    lines = (run_dir / "events.ndjson").read_text().splitlines(keepends=True)
    head = json.loads(lines[0])
    head["format"] = 99
    (tmp_path / "events.ndjson").write_text(json.dumps(head) + "\n" + "".join(lines[1:]))
    with pytest.raises(records.RecordVersionError):
        records.load(tmp_path)


def test_two_runs_get_distinct_directories(tmp_path):
    cfg = tiny_cfg(tmp_path, generations=0)
    (_, a), (_, b) = run_experiment(cfg), run_experiment(cfg)
    assert a != b and a.parent == b.parent
    assert (a / "events.ndjson").read_bytes() == (b / "events.ndjson").read_bytes()


def test_resume_from_last_barrier(tmp_path):
    cfg = tiny_cfg(tmp_path, generations=3)
    _, full_dir = run_experiment(cfg)
    full = (full_dir / "events.ndjson").read_bytes()

    # interrupt: keep everything up to generation 1, then half an individual line
    _, partial_dir = run_experiment(cfg)
    lines = full.splitlines(keepends=True)
    gen1 = next(k for k, ln in enumerate(lines) if b'"event":"generation"' in ln and b'"generation":1,' in ln)
    (partial_dir / "events.ndjson").write_bytes(b"".join(lines[: gen1 + 1]) + lines[gen1 + 1][:100])
    record, _ = resume_experiment(partial_dir, parallelism=1)
    assert (partial_dir / "events.ndjson").read_bytes() == full
    assert record.complete and record.last_generation == 3


# --- orchestration -----------------------------------------------------------


def test_zero_generations_via_cli(tmp_path, capsys):
    out = tmp_path / "cli"
    code = main(["run", "--generations", "0", "--mu", "3", "--lambda", "1", "--seed", "2", "--out", str(out),
                 "--parallelism", "1"])
    assert code == 0
    (run_dir,) = out.iterdir()
    record = records.load(run_dir)
    assert [g.generation for g in record.generations] == [0]
    assert len(record.individuals) == 3 and all(not i.parents for i in record.individuals.values())


def test_compare_writes_two_rows_per_seed(tmp_path):
    cfg = tiny_cfg(tmp_path, mu=3, lam=1, generations=1)
    summaries, path = compare(cfg, range(5), tmp_path / "cmp")
    rows = list(csv.DictReader(open(path)))
    assert len(rows) == 2 * 5
    assert [(int(r["seed"]), r["mode"]) for r in rows] == [
        (s, m) for s in range(5) for m in (LAMARCKIAN, DARWINIAN)]


def test_analyze_replays_logged_statistics(finished_run):
    record, run_dir = finished_run
    result = analyze(run_dir)
    assert result["mismatches"] == []
    for rec, stats in zip(record.generations, replay_stats(records.load(run_dir))):
        assert rec.stats.mean_learning_delta == stats.mean_learning_delta
    assert (run_dir / "analysis.csv").exists()


def test_fixed_body_baseline_and_delta_of_delta(tmp_path):
    cfg = tiny_cfg(tmp_path)
    evolved, evolved_dir = run_experiment(cfg)
    fixed, fixed_dir = fixed_body_baseline(cfg)
    assert "fixed" in fixed_dir.name
    initial = {i.tree for i in fixed.individuals.values() if not i.parents}
    assert all(i.tree in initial for i in fixed.individuals.values())
    deltas = learning_deltas(fixed)
    assert len(deltas) == cfg.evolution.generations + 1
    direct = delta_of_delta(
        [np.mean([i.fitness_after - i.fitness_before for i in evolved.newborns(g)]) for g in range(3)],
        [np.mean([i.fitness_after - i.fitness_before for i in fixed.newborns(g)]) for g in range(3)],
    )
    assert delta_of_delta_from_logs(evolved_dir, fixed_dir) == pytest.approx(direct, abs=1e-12)


def test_learning_disabled_deltas_are_zero(tmp_path):
    cfg = tiny_cfg(tmp_path, learning_enabled=False)
    fixed, _ = fixed_body_baseline(cfg)
    assert all(d == 0.0 for d in learning_deltas(fixed))


def test_trajectory_tracing(tmp_path):
    from dataclasses import replace

    cfg = replace(tiny_cfg(tmp_path, generations=1), trace_trajectories=True)
    record, run_dir = run_experiment(cfg)
    files = sorted((run_dir / "trajectories").iterdir())
    assert len(files) == cfg.evolution.mu
    assert files[0].read_text().splitlines()[0] == "t,x,y"


def test_budget_report_full_scale():
    report = budget_report(ExperimentConfig())
    assert report["evolution_evaluations"] == 775
    assert report["learning_assessments_per_newborn"] == 280
    assert report["assessments_paired_comparison"] == 434_000


def test_cli_bad_config_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.ini"
    path.write_text("[evolution]\nmu = 4\nlamda = 2\n")
    assert main(["run", "--config", str(path)]) == 2
    err = capsys.readouterr().err
    assert f"{path}:3" in err and "lamda" in err


def test_cli_validate_and_budget(capsys):
    assert main(["validate"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") >= 10
    assert main(["budget"]) == 0
    assert "434,000" in capsys.readouterr().out


def test_cli_analyze_with_fixed(tmp_path, capsys):
    cfg = tiny_cfg(tmp_path, generations=1)
    _, a = run_experiment(cfg)
    _, b = fixed_body_baseline(cfg)
    assert main(["analyze", str(a), "--fixed", str(b)]) == 0
    assert "delta of delta" in capsys.readouterr().out


def test_non_finite_fitness_survives_round_trip(finished_run, tmp_path):
    record, _ = finished_run
    ind = next(iter(record.individuals.values()))
    ev = records.individual_event(ind)
    ev["fitness_before"] = -math.inf
    back = records.individual_from_event(json.loads(json.dumps(ev)))
    assert back.fitness_before == -math.inf
