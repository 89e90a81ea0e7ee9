"""Rigid-motion algebra and pose error metrics.

Rotations are stored as 3x3 matrices. Planar motions live in the same
container with the rotation restricted to the z axis and zero z translation,
so every solver shares one code path and the ``dof`` tag only picks variants.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .errors import DofMismatchError, ParseError

SE2 = "SE2"
SE3 = "SE3"
DOFS = (SE2, SE3)

_ORTHO_TOL = 1e-9


def rot_z(angle_rad: float) -> np.ndarray:
    c, s = np.cos(angle_rad), np.sin(angle_rad)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rot_axis_angle(axis, angle_rad: float) -> np.ndarray:
    """Rodrigues' formula for a rotation of ``angle_rad`` about ``axis``."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    K = np.array([[0.0, -axis[2], axis[1]], [axis[2], 0.0, -axis[0]], [-axis[1], axis[0], 0.0]])
    return np.eye(3) + np.sin(angle_rad) * K + (1.0 - np.cos(angle_rad)) * (K @ K)


def rotation_angle(R: np.ndarray) -> float:
    """Geodesic angle of a rotation matrix, in radians."""
    cos = (np.trace(R) - 1.0) / 2.0
    return float(np.arccos(np.clip(cos, -1.0, 1.0)))


@dataclass(frozen=True, eq=False)
class RigidMotion:
    """A rotation plus translation, ``p -> R p + t``."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    dof: str = SE3

    def __post_init__(self):
        R = np.array(self.rotation, dtype=float).reshape(3, 3)
        t = np.array(self.translation, dtype=float).reshape(3)
        if self.dof not in DOFS:
            raise ValueError(f"unknown dof tag {self.dof!r}")
        if not (np.all(np.isfinite(R)) and np.all(np.isfinite(t))):
            raise ValueError("rigid motion must be finite")
        if np.abs(R.T @ R - np.eye(3)).max() > _ORTHO_TOL * 10 or abs(np.linalg.det(R) - 1.0) > _ORTHO_TOL * 10:
            raise ValueError("rotation is not a proper orthonormal matrix")
        if self.dof == SE2:
            if abs(t[2]) > _ORTHO_TOL or np.abs(R[2, :2]).max() > _ORTHO_TOL or np.abs(R[:2, 2]).max() > _ORTHO_TOL:
                raise ValueError("SE2 motion must be a pure z rotation with zero z translation")
        R.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls, dof: str = SE3) -> "RigidMotion":
        return cls(np.eye(3), np.zeros(3), dof)

    @classmethod
    def from_matrix(cls, M, dof: str = SE3) -> "RigidMotion":
        M = np.asarray(M, dtype=float)
        return cls(M[:3, :3], M[:3, 3], dof)

    @classmethod
    def planar(cls, yaw_rad: float, tx: float, ty: float) -> "RigidMotion":
        return cls(rot_z(yaw_rad), np.array([tx, ty, 0.0]), SE2)

    def matrix(self) -> np.ndarray:
        M = np.eye(4)
        M[:3, :3] = self.rotation
        M[:3, 3] = self.translation
        return M

    def __repr__(self):
        return f"RigidMotion(dof={self.dof}, R={self.rotation.tolist()}, t={self.translation.tolist()})"


def apply(T: RigidMotion, points) -> np.ndarray:
    """Apply ``T`` to a single point (shape (3,)) or an (N, 3) array."""
    P = np.asarray(points, dtype=float)
    return P @ T.rotation.T + T.translation


def compose(A: RigidMotion, B: RigidMotion) -> RigidMotion:
    """Motion equivalent to applying ``B`` first, then ``A``."""
    if A.dof != B.dof:
        raise DofMismatchError(f"cannot compose {A.dof} with {B.dof}")
    R = A.rotation @ B.rotation
    t = A.rotation @ B.translation + A.translation
    if A.dof == SE2:
        R, t = _clean_planar(R, t)
    return RigidMotion(R, t, A.dof)


def inverse(T: RigidMotion) -> RigidMotion:
    R = T.rotation.T
    t = -R @ T.translation
    if T.dof == SE2:
        R, t = _clean_planar(R, t)
    return RigidMotion(R, t, T.dof)


def _clean_planar(R, t):
    # Round-off can leak into the off-plane entries; re-project onto SE(2).
    yaw = np.arctan2(R[1, 0], R[0, 0])
    return rot_z(yaw), np.array([t[0], t[1], 0.0])


def pose_error(est: RigidMotion, gt: RigidMotion) -> Tuple[float, float]:
    """Return ``(translation error in meters, rotation error in degrees)``."""
    if est.dof != gt.dof:
        raise DofMismatchError(f"cannot compare {est.dof} with {gt.dof}")
    trans_err = float(np.linalg.norm(est.translation - gt.translation))
    rot_err = np.degrees(rotation_angle(est.rotation @ gt.rotation.T))
    return trans_err, float(rot_err)


def format_matrix(T: RigidMotion) -> str:
    """Row-major 4x4 homogeneous matrix, 12 significant digits, one row per line."""
    rows = []
    for row in T.matrix():
        rows.append(" ".join(_fmt(v) for v in row))
    return "\n".join(rows) + "\n"


def _fmt(v: float) -> str:
    s = f"{v:.12g}"
    return "0" if s == "-0" else s


def parse_matrix(text: str, dof: str = SE3) -> RigidMotion:
    rows = [ln.split() for ln in text.strip().splitlines() if ln.strip()]
    if len(rows) != 4 or any(len(r) != 4 for r in rows):
        raise ParseError("expected 4 rows of 4 numbers")
    try:
        M = np.array([[float(v) for v in r] for r in rows])
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
    return RigidMotion.from_matrix(M, dof)
