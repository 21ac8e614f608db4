"""Shared fixtures: a small on-disk corpus and a pocket-size trained model.

Everything here is session-scoped and seeded so the suite stays fast and
bit-reproducible.
"""

import numpy as np
import pytest

from highlights import corpus, workflow


@pytest.fixture(scope="session")
def tiny_corpus(tmp_path_factory):
    """Four 120-frame 32x32 videos written as bundles."""
    root = tmp_path_factory.mktemp("corpus")
    for i in range(4):
        spec = corpus.default_spec(i, seed=11, num_frames=120, width=32, height=32)
        frames, scenes, levels = corpus.generate_video(spec)
        manifest = corpus.validate_manifest({
            "video_id": f"video_{i:04d}",
            "width": 32,
            "height": 32,
            "fps": 30.0,
            "num_frames": 120,
            "frame_pattern": corpus.FRAME_PATTERN,
            "format_version": 1,
        })
        bundle = corpus.Bundle(manifest, frames, scenes, levels)
        corpus.write_bundle(bundle, str(root / manifest.video_id))
    return root


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def trained_artifacts(tiny_corpus):
    """Scene gate + highlight heads trained briefly on the tiny corpus."""
    dirs = workflow.video_dirs(str(tiny_corpus))
    return workflow.train_all_artifacts(dirs, seed=3, epochs=3, frame_step=4)
