"""Embedding export and the principal-component projection."""

import numpy as np
import pytest

from vcoclust import export
from vcoclust.errors import InputError


def pairwise_distances(x):
    return np.sqrt(np.sum((x[:, None, :] - x[None, :, :]) ** 2, axis=2))


class TestPcaProject:
    def test_two_dim_passthrough_up_to_rotation(self, rng):
        # J=2 input: projection keeps all variance, distances are preserved
        pts = rng.standard_normal((40, 2)) @ np.array([[2.0, 0.3], [0.1, 0.5]])
        proj = export.pca_project(pts, 2)
        assert np.max(np.abs(pairwise_distances(proj) - pairwise_distances(pts))) < 1e-9

    def test_identity_covariance_distance_preservation(self, rng):
        # isotropic cloud in 2-D embedded in higher dim by a rotation
        base = rng.standard_normal((60, 2))
        basis, _ = np.linalg.qr(rng.standard_normal((5, 5)))
        pts = base @ basis[:2, :]
        proj = export.pca_project(pts, 2)
        assert np.max(np.abs(pairwise_distances(proj) - pairwise_distances(base))) < 1e-9

    def test_rank_one_cloud_second_coordinate_vanishes(self, rng):
        direction = rng.standard_normal(4)
        pts = np.outer(rng.standard_normal(30), direction)
        proj = export.pca_project(pts, 2)
        assert np.max(np.abs(proj[:, 1])) < 1e-9

    def test_sign_convention_deterministic(self, rng):
        pts = rng.standard_normal((25, 3)) * np.array([3.0, 1.0, 0.2])
        a = export.pca_project(pts, 2)
        b = export.pca_project(pts.copy(), 2)
        assert np.array_equal(a, b)
        # the dominant loading of each component is positive
        centered = pts - pts.mean(axis=0)
        comps, _, _, _ = np.linalg.lstsq(centered, a, rcond=None)
        for c in range(2):
            assert comps[np.argmax(np.abs(comps[:, c])), c] > 0


class TestEmbeddingsTsv:
    def test_round_trip(self, tmp_path, rng):
        emb = rng.standard_normal((6, 3))
        path = export.write_embeddings_tsv(tmp_path / "e.tsv", emb)
        ids, back = export.read_embeddings_tsv(path)
        assert ids == [str(i) for i in range(6)]
        assert np.array_equal(back, emb)

    def test_ragged_rejected(self, tmp_path):
        p = tmp_path / "e.tsv"
        p.write_text("0\t1.0\t2.0\n1\t3.0\n", encoding="utf-8")
        with pytest.raises(InputError):
            export.read_embeddings_tsv(p)


class TestAssignmentsTsv:
    def test_round_trip(self, tmp_path):
        path = export.write_assignments_tsv(tmp_path / "a.tsv", [2, 0, 1])
        table = export.read_assignments_tsv(path)
        assert table == {"0": 2, "1": 0, "2": 1}

    def test_bad_cluster_rejected(self, tmp_path):
        p = tmp_path / "a.tsv"
        p.write_text("0\tx\n", encoding="utf-8")
        with pytest.raises(InputError):
            export.read_assignments_tsv(p)
