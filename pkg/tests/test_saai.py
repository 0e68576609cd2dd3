import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import WORKED_CLUSTERINGS, labels_to_clustering, random_intervals, sync_pairs_naive, worked_example
from syncanom.core import AnomalyInterval, ClusteringResult, ValidationError
from syncanom.saai import (
    DegenerateInputWarning,
    SaaiParams,
    evaluate,
    find_sync_pairs,
    find_sync_pairs_bruteforce,
    overlap_ratio,
    saai,
    saai_p1,
    saai_p2,
    score_pairs,
    sync_pairs_bruteforce,
    sync_pairs_sweepline,
)


@st.composite
def instances(draw, max_n=40):
    n = draw(st.integers(1, max_n))
    n_dims = draw(st.integers(1, 5))
    anoms = []
    for i in range(n):
        a = draw(st.integers(0, 200))
        anoms.append(AnomalyInterval(i, draw(st.integers(0, n_dims - 1)), a, a + draw(st.integers(1, 40))))
    labels = draw(st.lists(st.integers(0, 6), min_size=n, max_size=n))
    return anoms, labels


def test_overlap_ratio_values():
    assert overlap_ratio(0, 10, 0, 10) == 1.0
    assert overlap_ratio(0, 10, 5, 15) == pytest.approx(5 / 15)
    assert overlap_ratio(0, 10, 10, 20) == 0.0
    assert overlap_ratio(0, 10, 20, 30) < 0
    with pytest.raises(ValidationError):
        overlap_ratio(3, 3, 0, 5)


def test_worked_example_pairs():
    anoms = worked_example()
    assert find_sync_pairs(anoms, 0.5) == frozenset({(0, 4), (1, 5), (2, 6)})


@pytest.mark.parametrize("name", list(WORKED_CLUSTERINGS))
def test_worked_example_scores(name):
    labels, expected = WORKED_CLUSTERINGS[name]
    assert saai(worked_example(), labels_to_clustering(labels)) == pytest.approx(expected, abs=1e-12)


def test_theta_is_inclusive():
    # overlap 5 over a hull of 10: ratio exactly 0.5
    anoms = [AnomalyInterval(0, 0, 0, 10), AnomalyInterval(1, 1, 0, 5)]
    assert overlap_ratio(0, 10, 0, 5) == 0.5
    assert find_sync_pairs(anoms, 0.5) == {(0, 1)}
    assert find_sync_pairs(anoms, 0.51) == frozenset()


def test_same_dimension_never_pairs():
    anoms = [AnomalyInterval(0, 0, 0, 10), AnomalyInterval(1, 0, 0, 10)]
    assert find_sync_pairs(anoms, 0.0) == frozenset()


def test_touching_intervals_at_theta_zero():
    anoms = [AnomalyInterval(0, 0, 0, 10), AnomalyInterval(1, 1, 10, 20)]
    assert find_sync_pairs(anoms, 0.0) == find_sync_pairs_bruteforce(anoms, 0.0) == {(0, 1)}
    assert find_sync_pairs(anoms, 0.01) == frozenset()


@pytest.mark.parametrize("seed", range(20))
def test_sweepline_matches_naive(seed):
    rng = np.random.default_rng(seed)
    anoms = random_intervals(rng, 150, 4, 2000, 60)
    theta = float(rng.uniform(0, 1))
    assert find_sync_pairs(anoms, theta) == sync_pairs_naive(anoms, theta)


def test_pair_set_wrappers_agree(example_anomalies):
    c = labels_to_clustering([0, 1, 2, 3, 0, 2, 1, 3])
    fast = sync_pairs_sweepline(example_anomalies, c, 0.5)
    slow = sync_pairs_bruteforce(example_anomalies, c, 0.5)
    assert fast == slow
    assert fast.agreeing_pairs == {(0, 4)}


def test_degenerate_warns_and_uses_zero_agreement():
    anoms = [AnomalyInterval(0, 0, 0, 5), AnomalyInterval(1, 1, 50, 55), AnomalyInterval(2, 0, 80, 90)]
    c = labels_to_clustering([0, 0, 1])
    with pytest.warns(DegenerateInputWarning):
        value = saai(anoms, c)
    assert value == pytest.approx(0.5 * (2 - 1 - 1) / 2)
    assert evaluate(anoms, c).degenerate


def test_non_degenerate_does_not_warn(example_anomalies):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        saai(example_anomalies, labels_to_clustering([0] * 8))


def test_all_singletons_clamped_to_zero(example_anomalies):
    score = evaluate(example_anomalies, labels_to_clustering(range(8)))
    assert score.penalty == 0.0 and score.value == 0.0


def test_single_cluster(example_anomalies):
    score = evaluate(example_anomalies, labels_to_clustering([0] * 8))
    assert score.K == 1 and score.agreement == 1.0 and score.value == 0.5


def test_ablation_variants(example_anomalies):
    labels = [0, 1, 2, 3, 0, 1, 2, 4]  # K=5, two singletons, all pairs agree
    c = labels_to_clustering(labels)
    assert saai_p1(example_anomalies, c) == pytest.approx(0.5 + 0.5 * 4 / 5)
    assert saai_p2(example_anomalies, c) == pytest.approx(0.5 + 0.5 * 3 / 5)


def test_empty_inputs_rejected():
    with pytest.raises(ValidationError):
        evaluate([], ClusteringResult({}))
    with pytest.raises(ValidationError):
        score_pairs(frozenset(), ClusteringResult({}))


def test_missing_label_rejected(example_anomalies):
    with pytest.raises(ValidationError):
        saai(example_anomalies, labels_to_clustering([0] * 7))


@pytest.mark.parametrize("lam, theta", [(-0.1, 0.5), (1.1, 0.5), (0.5, -0.01), (0.5, 1.5)])
def test_params_validated(lam, theta):
    with pytest.raises(ValidationError):
        SaaiParams(lam, theta)


@given(instances(), st.floats(0, 1), st.floats(0, 1))
def test_score_in_unit_interval(inst, lam, theta):
    anoms, labels = inst
    for variant in ("full", "p1", "p2"):
        v = evaluate(anoms, labels_to_clustering(labels), SaaiParams(lam, theta), variant).value
        assert -1e-12 <= v <= 1 + 1e-12


@given(instances(), st.floats(0, 1))
def test_sweepline_equals_bruteforce(inst, theta):
    anoms, _ = inst
    assert find_sync_pairs(anoms, theta) == find_sync_pairs_bruteforce(anoms, theta)


@given(instances(), st.permutations(range(7)))
def test_label_permutation_invariance(inst, perm):
    anoms, labels = inst
    a = evaluate(anoms, labels_to_clustering(labels)).value
    b = evaluate(anoms, labels_to_clustering([perm[l] for l in labels])).value
    assert a == b


@given(instances(), st.randoms(use_true_random=False))
def test_interval_order_invariance(inst, rnd):
    anoms, labels = inst
    c = labels_to_clustering(labels)
    shuffled = list(anoms)
    rnd.shuffle(shuffled)
    assert evaluate(anoms, c) == evaluate(shuffled, c)


@given(instances())
def test_lambda_zero_depends_only_on_counts(inst):
    anoms, labels = inst
    c = labels_to_clustering(labels)
    v = evaluate(anoms, c, SaaiParams(lam=0.0)).value
    assert v == max(0.0, (c.K - 1 - c.n_singleton) / c.K)


@settings(max_examples=200)
@given(instances())
def test_lambda_one_ignores_cluster_counts(inst):
    anoms, labels = inst
    c = labels_to_clustering(labels)
    pairs = find_sync_pairs(anoms, 0.5)
    base = evaluate(anoms, c, SaaiParams(lam=1.0)).value
    # merging two clusters that share no synchronized pair: agreement cannot drop
    uniq = sorted(set(labels))
    if len(uniq) >= 2:
        merged = [uniq[0] if l == uniq[1] else l for l in labels]
        after = evaluate(anoms, labels_to_clustering(merged), SaaiParams(lam=1.0)).value
        crossing = any({labels[p], labels[q]} == {uniq[0], uniq[1]} for p, q in pairs)
        if not crossing:
            assert after == base
        else:
            assert after >= base
