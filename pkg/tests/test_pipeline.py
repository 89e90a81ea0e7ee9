import numpy as np
import pytest
from dataclasses import replace

from pyramidreg.bench import OUTDOOR_CRITERIA, INDOOR_CRITERIA, SceneSpec, generate_instance
from pyramidreg.config import PipelineConfig
from pyramidreg.errors import InputError, NoCorrespondencesError, RegistrationFailedError
from pyramidreg.geometry import SE2, pose_error
from pyramidreg.ingestion import DenseCloud, LandmarkSet
from pyramidreg.pipeline import (
    CloudSource, format_failure, format_report, generate_candidates, register, register_files,
)

from helpers import easy_instance, write_instance, write_xyz


@pytest.mark.parametrize("seed", range(3))
def test_register_recovers_motion(seed):
    inst = easy_instance(seed)
    res = register(inst.src, inst.tgt)
    assert OUTDOOR_CRITERIA.ok(res.selected, inst.T_gt)
    assert len(res.layers) == 4
    assert set(res.timings_ms) == {"graph", "clique", "gnc", "verify"}
    assert res.selected_layer == int(np.argmin(res.scores))


def test_indoor_planar():
    spec = SceneSpec(dof=SE2, landmarks_per_class=((1, 25),), seed=5, landmark_noise=0.02)
    inst = generate_instance(spec)
    res = register(inst.src, inst.tgt, PipelineConfig.indoor())
    assert res.selected.dof == SE2
    assert INDOOR_CRITERIA.ok(res.selected, inst.T_gt)


def test_single_threshold_equals_layer(rng):
    inst = easy_instance(1)
    cfg = PipelineConfig()
    one = register(inst.src, inst.tgt, replace(cfg, thresholds=(0.02,)))
    full = generate_candidates(inst.src_landmarks, inst.tgt_landmarks, replace(cfg, thresholds=(0.02,)))
    assert len(one.layers) == 1
    assert np.allclose(one.selected.matrix(), full.candidates[0].transform.matrix())


def test_no_correspondences():
    a = LandmarkSet(np.zeros((3, 3)), [10, 10, 10])
    b = LandmarkSet(np.ones((3, 3)), [50, 50, 50])
    cloud = DenseCloud(np.zeros((4, 3)))
    with pytest.raises(NoCorrespondencesError):
        register((a, cloud), (b, cloud))


def test_all_layers_fail_reports_records():
    # two landmarks only: every clique is below the SE3 minimum
    a = LandmarkSet([[0, 0, 0], [5, 0, 0]], [10, 50])
    cloud = DenseCloud(np.zeros((4, 3)))
    with pytest.raises(RegistrationFailedError) as ei:
        register((a, cloud), (a, cloud))
    recs = ei.value.records
    assert len(recs) == 4 and all(r.transform is None for r in recs)
    text = format_failure(recs)
    assert "failed" in text and len(text.splitlines()) == 6


def test_report_format():
    inst = easy_instance(2)
    res = register(inst.src, inst.tgt)
    text = format_report(res)
    lines = text.splitlines()
    assert lines[0] == "transform:"
    assert lines[4].split() == ["0", "0", "0", "1"]
    assert "timing_ms" not in text
    assert "timing_ms" in format_report(res, include_timings=True)


def test_register_files_with_landmarks(tmp_path):
    inst = easy_instance(3)
    f = write_instance(tmp_path, inst)
    res = register_files(CloudSource(f["src"], landmarks=f["src_lm"]), CloudSource(f["tgt"], landmarks=f["tgt_lm"]))
    assert OUTDOOR_CRITERIA.ok(res.selected, inst.T_gt)


def test_register_files_clusters_labels(tmp_path):
    # labeled dense clouds: landmarks come from clustering
    inst = easy_instance(4)
    def labeled(cloud, lms):
        # assign each point the class of its nearest landmark
        d = np.linalg.norm(cloud.points[:, None] - lms.points[None], axis=2)
        return lms.class_ids[d.argmin(axis=1)]
    s = write_xyz(tmp_path / "s.xyz", inst.src_cloud.points, labeled(inst.src_cloud, inst.src_landmarks))
    t = write_xyz(tmp_path / "t.xyz", inst.tgt_cloud.points, labeled(inst.tgt_cloud, inst.tgt_landmarks))
    cfg = PipelineConfig(cluster_voxel=0.6, cluster_min_points=5)
    res = register_files(CloudSource(s), CloudSource(t), cfg)
    assert res.n_correspondences > 0


def test_missing_labels_named(tmp_path):
    p = write_xyz(tmp_path / "plain.xyz", np.zeros((3, 3)))
    with pytest.raises(InputError, match="plain.xyz"):
        register_files(CloudSource(p), CloudSource(p))
