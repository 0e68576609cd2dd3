import numpy as np
import pytest

from syncanom import harness
from syncanom.core import ValidationError
from syncanom.harness import (
    ExperimentSpec,
    TrialRecord,
    accuracy_table,
    argmax_k,
    cluster_sweep,
    evaluate_trial,
    prepare,
    records_from_csv,
    records_to_csv,
    report,
    run_experiment,
    select_k,
    trial_config,
)
from syncanom.extmetrics import ari
from syncanom.synthgen import GeneratorConfig, generate


@pytest.fixture(scope="module")
def easy():
    cfg = GeneratorConfig(classes=(1, 2, 3, 4), r_sync=1.0, seed=0)
    return generate(cfg)


def test_argmax_and_ties():
    assert argmax_k({2: 0.2, 3: 0.9, 4: 0.4}) == 3
    assert argmax_k({5: 0.9, 3: 0.9, 4: 0.1}) == 3
    with pytest.raises(ValidationError):
        argmax_k({})


def test_ari_selects_true_granularity(easy):
    series, anoms = easy
    data = prepare(series, anoms)
    sweep = cluster_sweep(data, (2, 20), seed=0)
    perfect = [k for k, labels in sweep.items() if ari(data.true_labels, labels) == 1.0]
    assert perfect == [4]
    assert select_k(series, anoms, "ARI", seed=0) == 4


@pytest.mark.parametrize("trial", range(6))
def test_ari_argmax_returns_perfect_k(trial):
    spec = ExperimentSpec(seed=3)
    cfg, seed = trial_config(spec, 4, trial)
    data = prepare(*generate(cfg))
    picks = evaluate_trial(data, ["ARI"], seed=seed)
    k, table = picks["ARI"]
    perfect = [kk for kk, v in table.items() if v == 1.0]
    if perfect:
        assert k == perfect[0]


def test_select_k_needs_enough_anomalies(easy):
    series, anoms = easy
    with pytest.raises(ValidationError):
        select_k(series, anoms[:3], "SAAI", k_range=(4, 10))
    with pytest.raises(ValidationError):
        select_k(series, anoms[:3], "XMEANS", k_range=(4, 10))


def test_ari_needs_truth(easy):
    from dataclasses import replace

    series, anoms = easy
    stripped = [replace(iv, true_class=None) for iv in anoms]
    with pytest.raises(ValidationError):
        select_k(series, stripped, "ARI")


def test_selected_k_within_range(easy):
    series, anoms = easy
    data = prepare(series, anoms)
    out = evaluate_trial(data, ["SAAI", "SSC", "XMEANS", "RANDOM"], (2, 8), seed=1)
    for k, _ in out.values():
        assert 2 <= k < 8


def test_random_baseline_near_chance():
    spec = ExperimentSpec(kind="increase_K", trials_per_point=100, methods=("RANDOM",), seed=0)
    records = run_experiment(spec)
    assert len(records) == 500
    acc = np.mean([r.correct for r in records])
    assert abs(acc - 1 / 19) <= 0.15


def test_trial_config_protocol():
    spec = ExperimentSpec(kind="decrease_rsync")
    cfg, _ = trial_config(spec, 0.3, 0)
    assert cfg.r_sync == pytest.approx(0.7) and len(cfg.classes) == 4 and cfg.n_dims == 2
    spec = ExperimentSpec(kind="increase_K")
    configs = [trial_config(spec, 5, t)[0] for t in range(20)]
    assert all(len(c.classes) == 5 and 0.5 <= c.r_sync <= 1.0 for c in configs)
    assert len({c.seed for c in configs}) == 20
    assert len({c.classes for c in configs}) > 1
    cfg, _ = trial_config(ExperimentSpec(kind="lag_sweep"), -240, 0)
    assert cfg.lag_minutes == -240
    cfg, _ = trial_config(ExperimentSpec(kind="increase_D"), 7, 0)
    assert cfg.n_dims == 7


def test_point_independent_of_sweep():
    full = ExperimentSpec(kind="increase_K", values=(3, 4), trials_per_point=1, methods=("SAAI",), seed=2)
    alone = ExperimentSpec(kind="increase_K", values=(4,), trials_per_point=1, methods=("SAAI",), seed=2)
    assert run_experiment(full)[1:] == run_experiment(alone)


def test_deterministic_records():
    spec = ExperimentSpec(kind="increase_K", values=(3,), trials_per_point=1, seed=5)
    assert records_to_csv(run_experiment(spec)) == records_to_csv(run_experiment(spec))


def test_method_sets():
    assert harness._methods_for(ExperimentSpec(kind="ablation")) == ["SAAI", "SAAI_p1", "SAAI_p2"]
    lam = harness._methods_for(ExperimentSpec(kind="lambda_sweep", methods=("SAAI", "SSC")))
    assert lam[:11] == [f"SAAI@{0.1 * i:.1f}" for i in range(11)] and lam[11:] == ["SSC"]


def test_failed_trial_is_recorded(monkeypatch):
    calls = {"n": 0}
    real = harness.generate

    def flaky(cfg):
        calls["n"] += 1
        if calls["n"] == 1:
            raise RuntimeError("boom")
        return real(cfg)

    monkeypatch.setattr(harness, "generate", flaky)
    spec = ExperimentSpec(kind="increase_K", values=(2,), trials_per_point=2, methods=("SAAI",))
    records = run_experiment(spec)
    assert records[0].selected_k == -1 and not records[0].correct and "boom" in records[0].error
    assert records[1].selected_k >= 2 and records[1].error == ""


def test_trial_record_invariant():
    with pytest.raises(ValidationError):
        TrialRecord("increase_K", 4, 0, "SAAI", 4, 4, False)


def test_spec_validation():
    with pytest.raises(ValidationError):
        ExperimentSpec(kind="bogus")
    with pytest.raises(ValidationError):
        ExperimentSpec(k_range=(1, 5))
    with pytest.raises(ValidationError):
        ExperimentSpec(trials_per_point=0)


def _records():
    return [
        TrialRecord("increase_K", 2, 0, "A", 2, 2, True),
        TrialRecord("increase_K", 2, 0, "B", 3, 2, False),
        TrialRecord("increase_K", 3, 0, "A", 3, 3, True),
        TrialRecord("increase_K", 3, 0, "B", 3, 3, True),
    ]


def test_records_round_trip():
    recs = _records()
    assert records_from_csv(records_to_csv(recs)) == recs
    assert accuracy_table(recs) == {("increase_K", 2): {"A": 1.0, "B": 0.0}, ("increase_K", 3): {"A": 1.0, "B": 1.0}}


def test_report_files(tmp_path):
    written = report(_records(), tmp_path, "md", plots=True)
    names = sorted(p.name for p in written)
    assert names == ["accuracy.csv", "accuracy.svg", "correlation.csv", "mcm.md", "records.csv"]
    assert (tmp_path / "accuracy.svg").read_text().startswith("<svg")
    report(_records(), tmp_path / "csv", "csv")
    lines = (tmp_path / "csv" / "mcm.csv").read_text().splitlines()
    assert len(lines) == 5
    rows = {tuple(l.split(",")[:2]): float(l.split(",")[2]) for l in lines[1:]}
    assert rows[("A", "B")] == -rows[("B", "A")] == 0.5


def test_report_empty(tmp_path):
    report([], tmp_path)
    assert (tmp_path / "records.csv").read_text() == "kind,value,trial,method,selected_k,true_K,correct,error\n"
    assert (tmp_path / "accuracy.csv").read_text() == "kind,value,method,accuracy\n"
