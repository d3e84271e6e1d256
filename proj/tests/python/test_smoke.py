"""Smoke tests for the compiled python module."""

import math

import pytest

import epidiv


def test_hsd_closed_forms():
    assert epidiv.hsd([25, 25, 25, 25]) == pytest.approx(4.0, abs=1e-12)
    assert epidiv.hsd([100]) == pytest.approx(1.0, abs=1e-12)
    assert epidiv.hsd([2, 1, 1]) == pytest.approx(2 ** 1.5, abs=1e-9)


def test_hill_orders():
    assert epidiv.hill_diversity([7, 2, 1], l=1.0) == pytest.approx(3.0)
    inv_simpson = 1.0 / (0.75 ** 2 + 0.25 ** 2)
    assert epidiv.hill_diversity([3, 1], l=-1.0) == pytest.approx(inv_simpson)


def test_coverage():
    value, defined = epidiv.coverage([6, 2, 1, 1])
    assert defined
    assert value == pytest.approx(0.82, abs=1e-12)
    value, defined = epidiv.coverage([1])
    assert not defined


def test_jsd():
    assert epidiv.jsd([1.0, 0.0], [0.0, 1.0]) == pytest.approx(math.log(2), abs=1e-12)
    assert epidiv.jsd([1.0, 0.0], [0.5, 0.5]) == pytest.approx(0.215762, abs=1e-6)
    with pytest.raises(epidiv.EpidivError):
        epidiv.jsd([0.9, 0.0], [0.5, 0.5])


def test_bootstrap_ci():
    low, high = epidiv.bootstrap_ci([7.0, 7.0, 7.0], replicates=200, seed=1)
    assert low == pytest.approx(7.0)
    assert high == pytest.approx(7.0)
    low, high = epidiv.bootstrap_ci(list(range(1, 101)), replicates=2000, seed=2)
    assert low < 50.5 < high


def test_rarefaction():
    sequence = [0] * 500 + [1] * 500
    samples = epidiv.rarefy_to_coverage(sequence, target_coverage=0.5, resamples=20, seed=3)
    assert len(samples) == 20
    assert all(sum(counts) <= 1000 for counts in samples)


def test_sentence_split():
    assert epidiv.split_sentences("A. B? C!") == ["A.", "B?", "C!"]
    assert epidiv.split_sentences("Dr. Smith arrived. He left.") == [
        "Dr. Smith arrived.",
        "He left.",
    ]


def test_synthetic_oracle():
    claims, classes, dist = epidiv.sample_population("uniform", 4, n=1000, seed=5)
    assert len(claims) == 1000
    assert epidiv.true_hsd(dist) == pytest.approx(4.0)
    assert epidiv.true_coverage(dist, [0, 1]) == pytest.approx(0.5)
    assert "[[k" in claims[0]


def test_mock_clustering_recovers_tags():
    claims, classes, _ = epidiv.sample_population("uniform", 3, n=120, seed=9)
    labels = epidiv.cluster_tagged_claims(claims, max_retrieval=6)
    # same tag -> same label; different tag -> different label
    by_class = {}
    for label, cls in zip(labels, classes):
        by_class.setdefault(cls, set()).add(label)
    assert all(len(v) == 1 for v in by_class.values())
    distinct = {next(iter(v)) for v in by_class.values()}
    assert len(distinct) == len(by_class)


def test_estimate_tokens():
    assert epidiv.estimate_tokens("") == 0
    assert epidiv.estimate_tokens("a" * 401) == 101
