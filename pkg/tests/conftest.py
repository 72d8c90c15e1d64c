import numpy as np
import pytest

from clipsieve.model import FeaturePack


def make_pack(rng: np.random.Generator, t: int, d: int, *, video_id: str = "v", normalized: bool = True) -> FeaturePack:
    rows = rng.standard_normal((t, d))
    if normalized:
        rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    return FeaturePack(
        video_id=video_id,
        timestamps=np.arange(t, dtype=np.float64),
        features=rows.astype(np.float32),
        normalized=normalized,
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240801)
