import numpy as np
import pytest

from clipsieve.model import (
    ChunkMethod,
    ContrastiveBatch,
    FeaturePack,
    MinedPair,
    PairMode,
    RetrievalResult,
    Segmentation,
    ShortVideoEntry,
    SimilaritySeries,
    SynthesisManifest,
    validate_pack,
)


def pack_with(timestamps, features, normalized=False):
    return FeaturePack("v", np.asarray(timestamps, float), np.asarray(features, np.float32), normalized)


class TestValidatePack:
    def test_well_formed_pack_reports_nothing(self):
        pack = pack_with([0, 1, 2, 3], np.ones((4, 2)))
        assert validate_pack(pack) == []

    def test_non_increasing_timestamps_reported(self):
        pack = pack_with([0, 1, 1, 3], np.ones((4, 2)))
        report = validate_pack(pack)
        assert any("timestamps not strictly increasing" in item for item in report)

    def test_row_norm_violation_reported(self):
        rows = np.ones((3, 2)) / np.sqrt(2)
        rows[1] *= 2  # norm 2 with the normalized flag set
        pack = pack_with([0, 1, 2], rows, normalized=True)
        report = validate_pack(pack)
        assert any("row norm violation" in item for item in report)

    def test_non_finite_feature_reported(self):
        rows = np.ones((2, 2))
        rows[1, 0] = np.nan
        report = validate_pack(pack_with([0, 1], rows))
        assert any("non-finite" in item for item in report)

    def test_negative_timestamp_reported(self):
        report = validate_pack(pack_with([-1, 1], np.ones((2, 2))))
        assert any("non-negative" in item for item in report)

    def test_validation_never_raises(self):
        pack = pack_with([3, 2, 1], np.full((3, 2), np.inf))
        assert len(validate_pack(pack)) >= 2

    def test_structural_mismatch_raises_at_construction(self):
        with pytest.raises(ValueError, match="does not match"):
            pack_with([0, 1, 2], np.ones((2, 2)))

    def test_pack_arrays_are_immutable(self):
        pack = pack_with([0, 1], np.ones((2, 2)))
        with pytest.raises(ValueError):
            pack.features[0, 0] = 5.0


class TestSegmentation:
    def test_valid_partition(self):
        seg = Segmentation(((0, 3), (3, 5)), ChunkMethod.UNIFORM)
        assert seg.n == 2
        assert seg.total_frames == 5

    def test_partition_covers_range_without_overlap(self):
        seg = Segmentation(((0, 2), (2, 3), (3, 7)), ChunkMethod.UNIFORM)
        covered = [f for start, end in seg.clips for f in range(start, end)]
        assert covered == list(range(7))

    def test_gap_rejected(self):
        with pytest.raises(ValueError, match="contiguous"):
            Segmentation(((0, 2), (3, 5)), ChunkMethod.UNIFORM)

    def test_empty_clip_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            Segmentation(((0, 2), (2, 2), (2, 5)), ChunkMethod.UNIFORM)

    def test_nonzero_start_rejected(self):
        with pytest.raises(ValueError, match="start at 0"):
            Segmentation(((1, 5),), ChunkMethod.UNIFORM)

    def test_clip_of_frame(self):
        seg = Segmentation(((0, 3), (3, 5)), ChunkMethod.UNIFORM)
        assert [seg.clip_of_frame(f) for f in range(5)] == [0, 0, 0, 1, 1]


class TestRetrievalResult:
    def test_selected_frames_must_increase(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            RetrievalResult(((0, 1.0),), (3, 3), budget=4)

    def test_relevance_must_not_increase(self):
        with pytest.raises(ValueError, match="non-increasing"):
            RetrievalResult(((0, 0.1), (1, 0.5)), (0, 1), budget=4)

    def test_budget_respected(self):
        with pytest.raises(ValueError, match="budget"):
            RetrievalResult(((0, 1.0),), (0, 1, 2), budget=2)


class TestContrastiveBatch:
    def test_temperature_must_be_positive(self):
        with pytest.raises(ValueError, match="temperature"):
            ContrastiveBatch([0.5], [0.2], temperature=0.0)

    def test_needs_a_positive(self):
        with pytest.raises(ValueError, match="positive"):
            ContrastiveBatch([], [0.2])

    def test_extreme_logits_accepted(self):
        batch = ContrastiveBatch([30.0], [-30.0], temperature=1.0)
        assert batch.m == 1


class TestMinedPair:
    def test_coarse_negative_from_same_video_rejected(self):
        with pytest.raises(ValueError, match="coarse"):
            MinedPair("q", ("a", (0, 2)), (("a", (2, 4)),), PairMode.COARSE)

    def test_fine_negative_from_other_video_rejected(self):
        with pytest.raises(ValueError, match="another video"):
            MinedPair("q", ("a", (0, 2)), (("b", (2, 4)),), PairMode.FINE)

    def test_fine_negative_overlap_rejected(self):
        with pytest.raises(ValueError, match="overlaps"):
            MinedPair("q", ("a", (0, 3)), (("a", (2, 4)),), PairMode.FINE)

    def test_valid_fine_pair(self):
        pair = MinedPair("q", ("a", (0, 2)), (("a", (2, 4)), ("a", (4, 6))), PairMode.FINE)
        assert len(pair.negatives) == 2


class TestSynthesisManifest:
    def test_anchor_must_appear_once(self):
        with pytest.raises(ValueError, match="exactly once"):
            SynthesisManifest("a", ("b", "c"), (), seed=0)

    def test_duplicates_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            SynthesisManifest("a", ("a", "b", "b"), (), seed=0)

    def test_anchor_position(self):
        m = SynthesisManifest("a", ("b", "a", "c"), (("q1", "b"),), seed=7)
        assert m.anchor_position == 1


class TestShortVideoEntry:
    def test_requires_five_rows(self):
        with pytest.raises(ValueError, match="5 rows"):
            ShortVideoEntry("v", np.ones((4, 8), np.float32), np.ones((5, 8), np.float32), tuple("abcde"))

    def test_requires_five_instruction_ids(self):
        with pytest.raises(ValueError, match="instruction ids"):
            ShortVideoEntry("v", np.ones((5, 8), np.float32), np.ones((5, 8), np.float32), ("a",))


class TestSimilaritySeries:
    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError, match="outside"):
            SimilaritySeries(np.array([0.0, 1.5]))

    def test_slack_tolerated(self):
        SimilaritySeries(np.array([1.0 + 5e-7, -1.0 - 5e-7]))
