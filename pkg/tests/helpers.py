"""Scene builders and file writers shared by pipeline and CLI tests."""

import numpy as np

from pyramidreg.bench import SceneSpec, generate_instance


def easy_instance(seed=0, **kw):
    return generate_instance(SceneSpec(seed=seed, **kw))


def write_xyz(path, points, labels=None):
    with open(path, "w") as fh:
        for k, p in enumerate(points):
            row = " ".join(f"{v:.9g}" for v in p)
            fh.write(row + (f" {int(labels[k])}" if labels is not None else "") + "\n")
    return str(path)


def write_instance(tmp_path, inst):
    """Dense clouds as plain XYZ plus landmark files with class labels."""
    return dict(
        src=write_xyz(tmp_path / "src.xyz", inst.src_cloud.points),
        tgt=write_xyz(tmp_path / "tgt.xyz", inst.tgt_cloud.points),
        src_lm=write_xyz(tmp_path / "src_lm.xyz", inst.src_landmarks.points, inst.src_landmarks.class_ids),
        tgt_lm=write_xyz(tmp_path / "tgt_lm.xyz", inst.tgt_landmarks.points, inst.tgt_landmarks.class_ids),
    )
