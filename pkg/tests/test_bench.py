import numpy as np
import pytest
from dataclasses import replace

from pyramidreg.bench import (
    OUTDOOR_CRITERIA, SceneSpec, SuccessCriteria, Table, generate_instance, run_trials, threshold_sets,
    trial_seed, warm_start_economy,
)
from pyramidreg.config import PipelineConfig
from pyramidreg.geometry import RigidMotion, apply, rot_z


def test_instance_deterministic_and_consistent():
    spec = SceneSpec(seed=9, landmark_noise=0.0)
    a, b = generate_instance(spec), generate_instance(spec)
    assert np.array_equal(a.src_landmarks.points, b.src_landmarks.points)
    assert np.array_equal(a.T_gt.matrix(), b.T_gt.matrix())
    # the first len(shared) source landmarks are the target's shared ones
    k = len(a.shared)
    assert np.allclose(apply(a.T_gt, a.src_landmarks.points[:k]), a.tgt_landmarks.points[a.shared], atol=1e-9)


def test_overlap_controls_shared_count():
    spec = SceneSpec(seed=1, overlap_fraction=0.3, spurious_fraction=0.5)
    inst = generate_instance(spec)
    assert len(inst.shared) == int(np.floor(0.3 * spec.n_landmarks))


def test_success_criteria():
    gt = RigidMotion.identity()
    assert OUTDOOR_CRITERIA.ok(RigidMotion(rot_z(np.radians(4)), np.array([1.9, 0, 0])), gt)
    assert not OUTDOOR_CRITERIA.ok(RigidMotion(np.eye(3), np.array([2.1, 0, 0])), gt)
    assert not OUTDOOR_CRITERIA.ok(None, gt)
    with pytest.raises(ValueError):
        SuccessCriteria(-1, 5)


def test_trial_seeds_distinct():
    assert len({trial_seed(0, i) for i in range(100)}) == 100


def test_threshold_sets_order():
    assert threshold_sets([1, 2, 3]) == [(1,), (2,), (1, 2), (3,), (1, 2, 3)]


def test_run_trials_paired():
    spec = SceneSpec(seed=4)
    cfg = PipelineConfig()
    res = run_trials(spec, [cfg, cfg], OUTDOOR_CRITERIA, trials=2)
    assert [r.success for r in res[0]] == [r.success for r in res[1]]
    assert all(r.success for r in res[0])


def test_table_formats():
    t = Table(["a", "b"])
    t.add("x", 1.5)
    assert t.to_csv() == "a,b\nx,1.50\n"
    assert t.to_ascii().splitlines()[0].startswith("a")
    with pytest.raises(ValueError):
        t.add(1)


def test_warm_start_report_small():
    rep = warm_start_economy(instances=2, n_src=8, n_tgt=10)
    assert rep.cascaded_s > 0 and rep.cold_first_s > 0
    assert rep.cascaded_iters > 0
