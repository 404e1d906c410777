from __future__ import annotations

import random

import numpy as np
import pytest

from transcreate.backends import Backends
from transcreate.backends.mocks import LookupImageEmbedder, LookupTextEmbedder
from transcreate.countries import country
from transcreate.errors import CountryMismatch, InsufficientSupport, OutOfScale
from transcreate.imaging import content_digest, solid_png
from transcreate.metrics import (
    EditThreshold,
    MetricResult,
    calibrate_edit_threshold,
    country_relevance,
    filter_unedited,
    image_similarity,
    load_thresholds,
    relevance_delta,
    relevance_prompt,
    save_thresholds,
)

WORKED_PAIRS = [(0.99, 1), (0.98, 2), (0.90, 4), (0.85, 5)]


def _suite_with_vectors(image_vectors: dict[bytes, np.ndarray], text_vectors: dict[str, np.ndarray]) -> Backends:
    by_digest = {content_digest(data): vec for data, vec in image_vectors.items()}
    dim = len(next(iter(image_vectors.values()))) if image_vectors else len(next(iter(text_vectors.values())))
    lookup_img = LookupImageEmbedder(by_digest, dim=dim)
    return Backends(
        layout_embedder=lookup_img,
        joint_image_embedder=lookup_img,
        joint_text_embedder=LookupTextEmbedder(text_vectors, dim=dim),
        clock=None,
    )


def test_identity_similarity_is_one(plain_suite):
    img = solid_png(20, 20, (90, 10, 10))
    assert abs(image_similarity(img, img, plain_suite) - 1.0) < 1e-6


def test_hand_computed_similarity_eight_ninths():
    a = solid_png(10, 10, (1, 1, 1))
    b = solid_png(10, 10, (2, 2, 2))
    suite = _suite_with_vectors(
        {a: np.array([1.0, 2.0, 2.0]) / 3, b: np.array([2.0, 1.0, 2.0]) / 3}, {},
    )
    score = image_similarity(a, b, suite)
    assert abs(score - 8.0 / 9.0) < 1e-9  # (2 + 2 + 4) / 9


def test_similarity_is_exactly_symmetric(plain_suite):
    a = solid_png(12, 12, (3, 14, 15))
    b = solid_png(12, 12, (92, 65, 35))
    assert image_similarity(a, b, plain_suite) == image_similarity(b, a, plain_suite)


def test_orthogonal_vectors_score_zero():
    a = solid_png(8, 8, (0, 0, 1))
    b = solid_png(8, 8, (0, 1, 0))
    suite = _suite_with_vectors({a: np.array([1.0, 0.0]), b: np.array([0.0, 1.0])}, {})
    assert image_similarity(a, b, suite) == 0.0


def test_relevance_prompt_text():
    assert relevance_prompt(country("jp")) == "This image is culturally relevant to Japan"


def test_country_relevance_equal_vectors_give_one(japan):
    img = solid_png(6, 6, (7, 7, 7))
    v = np.array([0.6, 0.8])
    suite = _suite_with_vectors({img: v}, {relevance_prompt(japan): v})
    assert abs(country_relevance(img, japan, suite) - 1.0) < 1e-9


def test_country_relevance_bounded_over_random_vectors(japan):
    rng = np.random.default_rng(11)
    img = solid_png(6, 6, (8, 8, 8))
    for _ in range(1000):
        iv, tv = rng.standard_normal(16), rng.standard_normal(16)
        suite = _suite_with_vectors({img: iv}, {relevance_prompt(japan): tv})
        score = country_relevance(img, japan, suite)
        assert -1.0 - 1e-6 <= score <= 1.0 + 1e-6


def test_relevance_delta_zero_for_identical_images(japan, plain_suite):
    img = solid_png(9, 9, (4, 4, 4))
    assert relevance_delta(img, img, japan, plain_suite) == 0.0


def test_relevance_delta_hand_values(japan):
    source = solid_png(5, 5, (1, 0, 0))
    output = solid_png(5, 5, (0, 1, 0))
    prompt_vec = np.array([1.0, 0.0])
    suite = _suite_with_vectors(
        # relevance 0.6 for source, 0.9 for output -> delta 0.3
        {source: np.array([0.6, 0.8]), output: np.array([0.9, np.sqrt(1 - 0.81)])},
        {relevance_prompt(japan): prompt_vec},
    )
    assert abs(relevance_delta(source, output, japan, suite) - 0.3) < 1e-9


def test_relevance_delta_is_antisymmetric(japan, plain_suite):
    a = solid_png(7, 7, (1, 2, 3))
    b = solid_png(7, 7, (3, 2, 1))
    assert relevance_delta(a, b, japan, plain_suite) == -relevance_delta(b, a, japan, plain_suite)


def test_ranking_invariance_under_positive_scaling(japan):
    img_a = solid_png(5, 5, (10, 0, 0))
    img_b = solid_png(5, 5, (0, 10, 0))
    base_img = {img_a: np.array([0.3, 0.4]), img_b: np.array([2.0, 1.0])}
    base_txt = {relevance_prompt(japan): np.array([1.0, 1.0])}
    plain = _suite_with_vectors(base_img, base_txt)
    scaled = _suite_with_vectors(
        {k: 37.5 * v for k, v in base_img.items()},
        {k: 0.004 * v for k, v in base_txt.items()},
    )
    assert image_similarity(img_a, img_b, plain) == pytest.approx(image_similarity(img_a, img_b, scaled), abs=1e-12)
    assert country_relevance(img_a, japan, plain) == pytest.approx(country_relevance(img_a, japan, scaled), abs=1e-12)


# --- threshold calibration ----------------------------------------------------

def brute_force_threshold(pairs) -> tuple[float, bool]:
    """Independent oracle: scan every observed cut point."""
    candidates = sorted({sim for sim, _ in pairs})
    for cut in candidates:  # ascending: first qualifying cut is the smallest
        tail = [r for s, r in pairs if s >= cut]
        if sum(tail) / len(tail) <= 2.0:
            return cut, False
    return 1.0, True


def test_worked_calibration_fixture():
    result = calibrate_edit_threshold(WORKED_PAIRS)
    assert result.threshold == 0.98
    assert result.support == 4 and not result.no_support
    # cross-check against the independent oracle
    assert brute_force_threshold(WORKED_PAIRS) == (0.98, False)


def test_all_low_ratings_yield_smallest_similarity():
    pairs = [(0.7, 1), (0.9, 1), (0.8, 1)]
    assert calibrate_edit_threshold(pairs).threshold == 0.7


def test_all_high_ratings_yield_no_support_flag():
    pairs = [(0.7, 5), (0.9, 5), (0.8, 5)]
    result = calibrate_edit_threshold(pairs)
    assert result.threshold == 1.0 and result.no_support


def test_calibration_matches_oracle_on_random_fixtures():
    rng = random.Random(123)
    for _ in range(200):
        pairs = [(round(rng.uniform(0.5, 1.0), 3), rng.randint(1, 5)) for _ in range(rng.randint(1, 30))]
        expected_threshold, expected_flag = brute_force_threshold(pairs)
        result = calibrate_edit_threshold(pairs)
        assert result.threshold == expected_threshold
        assert result.no_support == expected_flag


def test_calibration_monotone_in_perfect_pair():
    rng = random.Random(321)
    for _ in range(200):
        pairs = [(round(rng.uniform(0.5, 1.0), 3), rng.randint(1, 5)) for _ in range(rng.randint(1, 25))]
        before = calibrate_edit_threshold(pairs).threshold
        after = calibrate_edit_threshold(pairs + [(1.0, 1)]).threshold
        assert after <= before


def test_calibration_validates_inputs():
    with pytest.raises(InsufficientSupport):
        calibrate_edit_threshold([])
    with pytest.raises(InsufficientSupport):
        calibrate_edit_threshold(WORKED_PAIRS, min_support=10)
    with pytest.raises(OutOfScale):
        calibrate_edit_threshold([(0.9, 6)])
    with pytest.raises(OutOfScale):
        calibrate_edit_threshold([(0.9, 0)])
    with pytest.raises(ValueError):
        calibrate_edit_threshold([(1.5, 3)])


# --- filtering ----------------------------------------------------------------

def _result(sim: float, iso: str = "jp") -> MetricResult:
    return MetricResult(image_id=f"img{sim}", pipeline_id="cap-edit", target=iso,
                        image_similarity=sim, country_relevance=0.5)


def test_filter_drops_similarities_above_threshold():
    threshold = EditThreshold(country="jp", threshold=0.95, support=20)
    kept = filter_unedited([_result(0.99), _result(0.93)], threshold)
    assert [r.image_similarity for r in kept] == [0.93]


def test_filter_keeps_boundary_results():
    threshold = EditThreshold(country="jp", threshold=0.95, support=20)
    kept = filter_unedited([_result(0.95)], threshold)
    assert len(kept) == 1  # "greater than" is strict


def test_filter_empty_input():
    assert filter_unedited([], EditThreshold(country="jp", threshold=0.9, support=10)) == []


def test_filter_identity_when_all_below():
    threshold = EditThreshold(country="jp", threshold=0.99, support=10)
    results = [_result(0.5), _result(0.7)]
    assert filter_unedited(results, threshold) == results


def test_filter_is_idempotent():
    threshold = EditThreshold(country="jp", threshold=0.9, support=10)
    results = [_result(0.99), _result(0.85), _result(0.9)]
    once = filter_unedited(results, threshold)
    assert filter_unedited(once, threshold) == once


def test_filter_country_mismatch():
    threshold = EditThreshold(country="br", threshold=0.9, support=10)
    with pytest.raises(CountryMismatch):
        filter_unedited([_result(0.5, iso="jp")], threshold)


# --- threshold store ------------------------------------------------------------

def test_threshold_store_round_trip(tmp_path):
    t = EditThreshold(country="jp", threshold=0.96, support=24)
    path = tmp_path / "thresholds.json"
    save_thresholds([t], path)
    loaded = load_thresholds(path)
    assert loaded["jp"].threshold == 0.96 and loaded["jp"].support == 24


def test_threshold_store_requires_support(tmp_path):
    t = EditThreshold(country="jp", threshold=0.96, support=4)
    with pytest.raises(InsufficientSupport):
        save_thresholds([t], tmp_path / "thresholds.json")
    save_thresholds([t], tmp_path / "thresholds.json", require_support=False)
    assert load_thresholds(tmp_path / "thresholds.json")["jp"].support == 4
