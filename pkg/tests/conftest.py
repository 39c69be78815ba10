import numpy as np
import pytest

from macsort.geometry import BBox, Detection


def make_det(frame, u, v, w=10.0, h=10.0, conf=0.9, emb=None, dim=4):
    if emb is None:
        emb = np.zeros(dim)
        emb[0] = 1.0
    return Detection(frame, BBox(u, v, w, h), conf, np.asarray(emb, dtype=float))


def unit(vec):
    vec = np.asarray(vec, dtype=float)
    return vec / np.linalg.norm(vec)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
