import numpy as np
import pytest
from scipy.stats import spearmanr

from macsort.errors import SpecError
from macsort.synth import Scenario, ScenarioSpec, SplitMix64, generate, parse_spec, read_spec, write_spec
from macsort.tracker import compute_mu_det


class TestSplitMix64:
    def test_known_stream_is_stable(self):
        rng = SplitMix64(1234)
        first = [rng.next_u64() for _ in range(3)]
        rng2 = SplitMix64(1234)
        assert [rng2.next_u64() for _ in range(3)] == first

    def test_uniform_range(self):
        rng = SplitMix64(7)
        vals = [rng.uniform() for _ in range(1000)]
        assert all(0.0 <= v < 1.0 for v in vals)
        assert 0.4 < np.mean(vals) < 0.6

    def test_normal_moments(self):
        rng = SplitMix64(7)
        vals = np.array([rng.normal() for _ in range(4000)])
        assert abs(vals.mean()) < 0.1
        assert abs(vals.std() - 1.0) < 0.1

    def test_unit_vectors(self):
        rng = SplitMix64(7)
        for _ in range(20):
            v = rng.unit_vector(16)
            assert np.linalg.norm(v) == pytest.approx(1.0)


def scenario_dets(scenario: Scenario):
    return [d for frame in sorted(scenario.detections) for d in scenario.detections[frame]]


class TestGenerate:
    def test_noiseless_identity(self):
        spec = ScenarioSpec(n_objects=3, n_frames=10)
        scenario = generate(spec)
        for frame, dets in scenario.detections.items():
            gt_boxes = [box for _, box in scenario.gt.at(frame)]
            assert len(dets) == len(gt_boxes)
            for det, box in zip(dets, gt_boxes):
                assert det.bbox == box

    def test_full_homogeneity_gives_mu_one(self):
        spec = ScenarioSpec(appearance_homogeneity=1.0, n_objects=5, n_frames=3)
        scenario = generate(spec)
        embs = np.stack([d.embedding for d in scenario.detections[1]])
        assert compute_mu_det(embs, 45.0) == pytest.approx(1.0)

    def test_same_seed_identical(self):
        spec = ScenarioSpec(seed=99, detection_noise_px=1.0, miss_rate=0.1, clutter_rate=0.1)
        a, b = generate(spec), generate(spec)
        da, db = scenario_dets(a), scenario_dets(b)
        assert len(da) == len(db)
        for x, y in zip(da, db):
            assert x.bbox == y.bbox and x.confidence == y.confidence
            assert np.array_equal(x.embedding, y.embedding)

    def test_different_seed_differs(self):
        base = dict(detection_noise_px=1.0)
        a = generate(ScenarioSpec(seed=1, **base))
        b = generate(ScenarioSpec(seed=2, **base))
        assert any(
            x.bbox != y.bbox for x, y in zip(scenario_dets(a), scenario_dets(b))
        )

    def test_occlusion_window_drops_detections(self):
        spec = ScenarioSpec(n_objects=2, n_frames=10, occlusion_windows=[(1, 4, 6)])
        scenario = generate(spec)
        for frame in (4, 5, 6):
            assert len(scenario.detections[frame]) == 1
            assert len(scenario.gt.at(frame)) == 2  # gt continues through
        assert len(scenario.detections[3]) == 2
        assert len(scenario.detections[7]) == 2

    def test_miss_rate_thins_detections(self):
        spec = ScenarioSpec(n_objects=4, n_frames=50, miss_rate=0.4)
        scenario = generate(spec)
        total = len(scenario_dets(scenario))
        assert 60 <= total <= 160  # ~120 expected of 200

    def test_clutter_adds_boxes(self):
        spec = ScenarioSpec(n_objects=4, n_frames=50, clutter_rate=0.5)
        scenario = generate(spec)
        assert len(scenario_dets(scenario)) > 200

    def test_crossing_passes_common_point(self):
        spec = ScenarioSpec(motion="crossing", n_objects=4, n_frames=60)
        scenario = generate(spec)
        center = (spec.field_w / 2, spec.field_h / 2)
        for obj in range(1, 5):
            dists = [
                np.hypot(box.u - center[0], box.v - center[1])
                for f in range(1, 61)
                for oid, box in scenario.gt.at(f)
                if oid == obj
            ]
            assert min(dists) < 1e-9  # each object hits the center exactly

    def test_embedding_swap_variant(self):
        base = ScenarioSpec(
            motion="crossing", n_objects=2, n_frames=20, appearance_homogeneity=0.0
        )
        swapped = ScenarioSpec(
            motion="crossing", n_objects=2, n_frames=20,
            appearance_homogeneity=0.0, embedding_swap_frame=10,
        )
        a, b = generate(base), generate(swapped)
        # geometry identical, embeddings exchanged from the swap frame on
        for f in range(1, 20):
            for da, db in zip(a.detections[f], b.detections[f]):
                assert da.bbox == db.bbox
        before = a.detections[9]
        after_base, after_swap = a.detections[10], b.detections[10]
        assert np.array_equal(after_base[0].embedding, after_swap[1].embedding)
        assert np.array_equal(after_base[1].embedding, after_swap[0].embedding)
        assert np.array_equal(before[0].embedding, after_base[0].embedding)

    def test_homogeneity_monotone_in_mu_det(self):
        levels = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
        hs, mus = [], []
        for seed in range(20):
            for h in levels:
                spec = ScenarioSpec(
                    seed=seed, n_objects=6, n_frames=1,
                    appearance_homogeneity=h, embedding_dim=16,
                )
                scenario = generate(spec)
                embs = np.stack([d.embedding for d in scenario.detections[1]])
                hs.append(h)
                mus.append(compute_mu_det(embs, 45.0))
        rho = spearmanr(hs, mus).statistic
        assert rho > 0.95


class TestSpecValidation:
    def test_window_out_of_range(self):
        with pytest.raises(SpecError):
            generate(ScenarioSpec(n_objects=2, occlusion_windows=[(3, 1, 5)]))

    def test_window_reversed(self):
        with pytest.raises(SpecError):
            generate(ScenarioSpec(occlusion_windows=[(1, 9, 4)]))

    def test_window_past_end(self):
        with pytest.raises(SpecError):
            generate(ScenarioSpec(n_frames=10, occlusion_windows=[(1, 5, 20)]))

    def test_bad_motion(self):
        with pytest.raises(SpecError):
            generate(ScenarioSpec(motion="brownian"))

    def test_bad_rate(self):
        with pytest.raises(SpecError):
            generate(ScenarioSpec(miss_rate=1.5))


class TestSpecFile:
    def test_round_trip(self, tmp_path):
        spec = ScenarioSpec(
            seed=7, n_objects=3, n_frames=25, motion="crossing",
            appearance_homogeneity=0.5, detection_noise_px=0.75,
            miss_rate=0.05, clutter_rate=0.1,
            occlusion_windows=[(1, 5, 9), (2, 11, 12)],
            embedding_dim=8, embedding_swap_frame=13,
        )
        path = tmp_path / "case.spec"
        write_spec(spec, path)
        assert read_spec(path) == spec

    def test_defaults_from_empty(self):
        assert parse_spec("") == ScenarioSpec()

    def test_unknown_key(self):
        with pytest.raises(SpecError):
            parse_spec("warp_speed=9\n")

    def test_bad_number(self):
        with pytest.raises(SpecError):
            parse_spec("n_objects=few\n")

    def test_comments_and_blanks(self):
        spec = parse_spec("# comment\n\nseed=5\nmotion=circular\n")
        assert spec.seed == 5 and spec.motion == "circular"

    def test_duplicate_key(self):
        with pytest.raises(SpecError):
            parse_spec("seed=1\nseed=2\n")
