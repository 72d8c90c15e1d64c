import json
import shutil
import subprocess
import sys

import cv2
import numpy as np
import pytest

from packextract.extract import DecodeError, ExtractionJob, extract_queries, extract_video
from packextract.ocfp import read_pack

from conftest import synthesize_video


def run_primary_validate(path):
    """Invoke the downstream tool's validate subcommand (the format contract)."""
    executable = shutil.which("clipsieve")
    if executable:
        cmd = [executable, "validate", str(path)]
    else:
        cmd = [sys.executable, "-m", "clipsieve.cli", "validate", str(path)]
    return subprocess.run(cmd, capture_output=True, text=True)


class TestExtractVideo:
    def test_minute_at_one_fps_gives_sixty_frames(self, minute_video, tmp_path):
        out = tmp_path / "minute.ocfp"
        meta = extract_video(ExtractionJob(source=minute_video, output=out))
        assert abs(meta["frames"] - 60) <= 1
        timestamps, features, normalized = read_pack(out)
        assert normalized
        assert np.all(np.diff(timestamps) > 0)
        assert np.allclose(np.linalg.norm(features.astype(np.float64), axis=1), 1.0, atol=1e-4)

    def test_sampling_rate_scales_count(self, short_video, tmp_path):
        out = tmp_path / "short.ocfp"
        meta_1 = extract_video(ExtractionJob(source=short_video, output=out, sampling_rate=1.0))
        meta_4 = extract_video(ExtractionJob(source=short_video, output=out, sampling_rate=4.0))
        assert abs(meta_4["frames"] - 4 * meta_1["frames"]) <= 4

    def test_deterministic_output_bytes(self, short_video, tmp_path):
        out_a, out_b = tmp_path / "a.ocfp", tmp_path / "b.ocfp"
        extract_video(ExtractionJob(source=short_video, output=out_a))
        extract_video(ExtractionJob(source=short_video, output=out_b))
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_sidecar_records_choices(self, short_video, tmp_path):
        out = tmp_path / "pack.ocfp"
        extract_video(ExtractionJob(source=short_video, output=out, sampling_rate=2.0))
        meta = json.loads((out.parent / "pack.ocfp.meta.json").read_text())
        assert meta["encoder"] == "hash"
        assert meta["sampling_rate"] == 2.0
        assert "preprocessing" in meta

    def test_frame_directory_source(self, tmp_path):
        frames_dir = tmp_path / "frames"
        frames_dir.mkdir()
        rng = np.random.default_rng(5)
        for i in range(7):
            cv2.imwrite(str(frames_dir / f"frame-{i:04d}.png"), rng.integers(0, 255, (32, 40, 3), np.uint8))
        out = tmp_path / "dir.ocfp"
        meta = extract_video(ExtractionJob(source=frames_dir, output=out, sampling_rate=2.0))
        assert meta["frames"] == 7
        timestamps, _, _ = read_pack(out)
        assert timestamps[1] - timestamps[0] == pytest.approx(0.5)

    def test_undecodable_source_fails_with_codec_message(self, tmp_path):
        bogus = tmp_path / "not-a-video.avi"
        bogus.write_bytes(b"this is not video data")
        with pytest.raises(DecodeError):
            extract_video(ExtractionJob(source=bogus, output=tmp_path / "x.ocfp"))
        assert not (tmp_path / "x.ocfp").exists()

    def test_invalid_rate_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="sampling rate"):
            ExtractionJob(source="v.avi", output="x.ocfp", sampling_rate=0.0)


class TestPrimaryConformance:
    def test_emitted_pack_passes_primary_validate(self, short_video, tmp_path):
        out = tmp_path / "conform.ocfp"
        extract_video(ExtractionJob(source=short_video, output=out))
        proc = run_primary_validate(out)
        assert proc.returncode == 0, proc.stderr
        assert "ok" in proc.stdout


class TestExtractQueries:
    def write_queries(self, path, rows):
        path.write_text("\n".join(json.dumps(r) for r in rows) + "\n")

    def test_embeddings_added(self, tmp_path):
        src = tmp_path / "in.jsonl"
        self.write_queries(
            src,
            [
                {"query_id": "q1", "text": "a man is riding a horse"},
                {"query_id": "q2", "text": "two dogs play in the park"},
            ],
        )
        out = tmp_path / "out.jsonl"
        assert extract_queries(src, out) == 2
        records = [json.loads(line) for line in out.read_text().splitlines()]
        dims = {len(r["embedding"]) for r in records}
        assert dims == {512}

    def test_identical_texts_identical_embeddings(self, tmp_path):
        src = tmp_path / "in.jsonl"
        self.write_queries(
            src,
            [{"query_id": "a", "text": "same words"}, {"query_id": "b", "text": "same words"}],
        )
        out = tmp_path / "out.jsonl"
        extract_queries(src, out)
        a, b = [json.loads(line)["embedding"] for line in out.read_text().splitlines()]
        assert a == b

    def test_empty_text_rejected_with_line(self, tmp_path):
        src = tmp_path / "in.jsonl"
        self.write_queries(src, [{"query_id": "a", "text": "  "}])
        with pytest.raises(ValueError, match=":1:"):
            extract_queries(src, tmp_path / "out.jsonl")

    def test_output_loadable_by_primary_reader(self, tmp_path):
        clipsieve_io = pytest.importorskip("clipsieve.featureio")
        src = tmp_path / "in.jsonl"
        self.write_queries(src, [{"query_id": "q1", "text": "where is the dog"}])
        out = tmp_path / "out.jsonl"
        extract_queries(src, out)
        (record,) = clipsieve_io.read_queries(out)
        assert record.query_id == "q1"
        assert record.embedding.shape == (512,)


class TestCli:
    def test_video_subcommand(self, short_video, tmp_path, capsys):
        from packextract.cli import main

        out = tmp_path / "cli.ocfp"
        assert main(["video", "--video", str(short_video), "--fps", "1.0", "--out", str(out)]) == 0
        assert out.exists()
        assert "frames" in capsys.readouterr().out

    def test_queries_subcommand(self, tmp_path, capsys):
        from packextract.cli import main

        src = tmp_path / "q.jsonl"
        src.write_text('{"query_id": "q", "text": "hello there"}\n')
        out = tmp_path / "q-emb.jsonl"
        assert main(["queries", "--in", str(src), "--out", str(out)]) == 0
        assert out.exists()

    def test_missing_video_exits_1(self, tmp_path):
        from packextract.cli import main

        assert main(["video", "--video", str(tmp_path / "nope.avi"), "--out", str(tmp_path / "x.ocfp")]) == 1

    def test_encoders_subcommand(self, capsys):
        from packextract.cli import main

        assert main(["encoders"]) == 0
        assert "hash: available" in capsys.readouterr().out
