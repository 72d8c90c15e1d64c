from pathlib import Path

import cv2
import numpy as np
import pytest


def synthesize_video(path: Path, seconds: float, native_fps: float = 12.0, size=(96, 64)) -> Path:
    """Write a small test clip whose content drifts over time."""
    writer = cv2.VideoWriter(str(path), cv2.VideoWriter_fourcc(*"MJPG"), native_fps, size)
    assert writer.isOpened(), "cv2 cannot open a video writer in this environment"
    total = int(round(seconds * native_fps))
    rng = np.random.default_rng(99)
    base = rng.integers(0, 255, size=(size[1], size[0], 3), dtype=np.uint8)
    for i in range(total):
        frame = base.copy()
        # moving bar + slow color drift so adjacent frames differ
        col = (i * 3) % size[0]
        frame[:, col : col + 6, :] = (255 - (i % 255), i % 255, 128)
        writer.write(frame)
    writer.release()
    return path


@pytest.fixture(scope="session")
def minute_video(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("video") / "minute.avi"
    return synthesize_video(path, seconds=60.0)


@pytest.fixture(scope="session")
def short_video(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("video") / "short.avi"
    return synthesize_video(path, seconds=3.0)
