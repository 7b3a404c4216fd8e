"""Box-limbed bodies in a few scripted poses, with contact vertices placed analytically.

Every pose is built in a local frame and then placed with a yaw and a translation.
Contact faces sit a fixed clearance away from the surfaces they touch, so the
ground-truth scene has no penetration and small, known contact gaps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry.mesh import TriMesh, box_mesh, merge_meshes
from ..geometry.pose import rotation_y
from .furniture import FurnitureSpec

CONTACT_CLEARANCE = 0.0005
FOOT_CLEARANCE = 0.001
SPACING = 0.04
N_JOINTS = 15
JOINT_NAMES = ("pelvis", "spine", "neck", "head", "hip_l", "hip_r", "knee_l", "knee_r",
               "ankle_l", "ankle_r", "shoulder_l", "shoulder_r", "wrist_l", "wrist_r", "chest")

TORSO = np.array([0.18, 0.3, 0.1])
HEAD = np.array([0.09, 0.11, 0.1])
LIMB = 0.07
ARM = 0.045
HIP_X = 0.09
SHOULDER_X = 0.23
LEG = 0.84
KNEE_GAP = 0.15

# outward normal of the face that carries each contact role
ROLE_NORMALS = {"sole": (0.0, -1.0, 0.0), "seat": (0.0, -1.0, 0.0), "hand": (0.0, -1.0, 0.0),
                "back": (0.0, 0.0, -1.0)}


@dataclass
class Part:
    center: np.ndarray
    half: np.ndarray
    rotation: np.ndarray | None = None
    roles: tuple = ()

    def mesh(self) -> TriMesh:
        m = box_mesh(self.half, spacing=SPACING)
        R = np.eye(3) if self.rotation is None else self.rotation
        return m.with_vertices(m.vertices @ R.T + np.asarray(self.center, float))


def segment_part(a, b, half_w, roles=()) -> Part:
    """Square-section box along the segment a -> b."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    y = b - a
    length = np.linalg.norm(y)
    y = y / length
    x = np.cross(y, [0.0, 0.0, 1.0])
    if np.linalg.norm(x) < 1e-9:
        x = np.array([1.0, 0.0, 0.0])
    x /= np.linalg.norm(x)
    R = np.column_stack([x, y, np.cross(x, y)])
    return Part((a + b) / 2, np.array([half_w, length / 2, half_w]), R, tuple(roles))


@dataclass
class PosedBody:
    """Body mesh, joints and contact labels in gravity-aligned world coordinates."""

    mesh: TriMesh
    joints: np.ndarray
    feet: np.ndarray
    contacts: np.ndarray

    def transformed(self, R: np.ndarray) -> "PosedBody":
        return PosedBody(self.mesh.with_vertices(self.mesh.vertices @ R.T), self.joints @ R.T,
                         self.feet, self.contacts)


def _joints(pelvis, shoulder_y, knees, ankles, wrists) -> np.ndarray:
    px, py, pz = pelvis
    j = np.zeros((N_JOINTS, 3))
    j[0] = pelvis
    j[1] = [px, py + TORSO[1], pz]
    j[2] = [px, shoulder_y + 0.02, pz]
    j[3] = [px, shoulder_y + 0.15, pz]
    j[4], j[5] = [px - HIP_X, py, pz], [px + HIP_X, py, pz]
    j[6], j[7] = knees
    j[8], j[9] = ankles
    j[10], j[11] = [px - SHOULDER_X, shoulder_y, pz], [px + SHOULDER_X, shoulder_y, pz]
    j[12], j[13] = wrists
    j[14] = [px, py + 1.5 * TORSO[1], pz]
    return j


def place(parts, joints, yaw: float, origin, keep=None) -> PosedBody:
    """Rotate a locally built body by ``yaw``, move it to ``origin`` and label contacts.

    ``keep(points, role)`` may restrict non-foot contact vertices, in the local frame.
    """
    meshes = [p.mesh() for p in parts]
    offsets = np.cumsum([0] + [m.n_vertices for m in meshes])
    feet, contacts = [], []
    for p, m, off in zip(parts, meshes, offsets):
        for role in p.roles:
            sel = np.flatnonzero(m.vertex_normals @ np.asarray(ROLE_NORMALS[role]) > 0.999)
            if keep is not None and role != "sole":
                sel = sel[keep(m.vertices[sel], role)]
            (feet if role == "sole" else contacts).append(sel + off)
    mesh = merge_meshes(meshes)
    R = rotation_y(yaw)
    o = np.asarray(origin, float)

    def cat(x):
        return np.unique(np.concatenate(x)) if x else np.zeros(0, np.int64)

    return PosedBody(TriMesh(mesh.vertices @ R.T + o, mesh.faces, name="body"),
                     np.asarray(joints, float) @ R.T + o, cat(feet), cat(contacts))


def _head_and_arms(parts, px, seat_top, pz, arm_length):
    """Head above a torso whose bottom is at ``seat_top``, arms hanging at its sides."""
    parts.append(Part(np.array([px, seat_top + 2 * TORSO[1] + 0.02 + HEAD[1], pz]), HEAD.copy()))
    shoulder = seat_top + 2 * TORSO[1] - 0.02
    wrists = []
    for sx in (-1, 1):
        x = px + sx * SHOULDER_X
        parts.append(Part(np.array([x, shoulder - arm_length / 2, pz]), np.array([ARM, arm_length / 2, ARM])))
        wrists.append([x, shoulder - arm_length, pz])
    return shoulder, wrists


def standing(floor_y: float = 0.0) -> tuple[list, np.ndarray]:
    """Upright body at the local origin, feet just above ``floor_y``, facing +z."""
    f = floor_y + FOOT_CLEARANCE
    hip = f + LEG
    parts = [Part(np.array([sx * HIP_X, (f + hip) / 2, 0.0]), np.array([LIMB, LEG / 2, LIMB]), roles=("sole",))
             for sx in (-1, 1)]
    parts.append(Part(np.array([0.0, hip + TORSO[1], 0.0]), TORSO.copy()))
    shoulder, wrists = _head_and_arms(parts, 0.0, hip, 0.0, 0.6)
    knees = [[sx * HIP_X, (f + hip) / 2, 0.0] for sx in (-1, 1)]
    ankles = [[sx * HIP_X, f + 0.06, 0.0] for sx in (-1, 1)]
    return parts, _joints([0.0, hip, 0.0], shoulder, knees, ankles, wrists)


def seated(spec: FurnitureSpec, x_offset: float = 0.0) -> tuple[list, np.ndarray]:
    """Body seated on ``spec`` in the furniture's canonical frame.

    With a backrest the torso leans on it; otherwise the sitter perches near
    the front edge.
    """
    c = CONTACT_CLEARANCE
    seat = spec.seat_height + c
    front = spec.seat_front
    lean = spec.back_height > 0
    back_z = spec.back_front + c if lean else front - 0.45
    tz = back_z + TORSO[2]
    px = x_offset
    parts = [Part(np.array([px, seat + TORSO[1], tz]), TORSO.copy(), roles=("seat", "back") if lean else ("seat",))]
    # the shins hang well clear of the seat front so no body crease wraps the seat edge
    knee_z = front + KNEE_GAP + LIMB
    thigh_front = knee_z + LIMB
    f = FOOT_CLEARANCE
    for sx in (-1, 1):
        x = px + sx * HIP_X
        parts.append(Part(np.array([x, seat + LIMB, (tz + thigh_front) / 2]),
                          np.array([LIMB, LIMB, (thigh_front - tz) / 2]), roles=("seat",)))
        top = seat + 2 * LIMB
        parts.append(Part(np.array([x, (f + top) / 2, knee_z]), np.array([LIMB, (top - f) / 2, LIMB]),
                          roles=("sole",)))
    shoulder, wrists = _head_and_arms(parts, px, seat, tz, 0.5)
    knees = [[px + sx * HIP_X, seat + LIMB, knee_z] for sx in (-1, 1)]
    ankles = [[px + sx * HIP_X, f + 0.06, knee_z] for sx in (-1, 1)]
    return parts, _joints([px, seat, tz], shoulder, knees, ankles, wrists)


def touching_table(spec: FurnitureSpec, x_offset: float = 0.0) -> tuple[list, np.ndarray]:
    """Standing at the +z edge of a table, forearms resting on its top."""
    c = CONTACT_CLEARANCE
    f = FOOT_CLEARANCE
    front = spec.seat_front
    pz = front + 0.3
    px = x_offset
    hip = f + LEG
    parts = [Part(np.array([px + sx * HIP_X, (f + hip) / 2, pz]), np.array([LIMB, LEG / 2, LIMB]), roles=("sole",))
             for sx in (-1, 1)]
    parts.append(Part(np.array([px, hip + TORSO[1], pz]), TORSO.copy()))
    parts.append(Part(np.array([px, hip + 2 * TORSO[1] + 0.02 + HEAD[1], pz]), HEAD.copy()))
    shoulder = hip + 2 * TORSO[1] - 0.02
    top = spec.seat_height + c
    wrists = []
    for sx in (-1, 1):
        x = px + sx * SHOULDER_X
        elbow = np.array([x, top + ARM, front - 0.1])
        parts.append(segment_part([x, shoulder, pz], elbow, ARM))
        end = front - 0.35
        parts.append(Part(np.array([x, top + ARM, (elbow[2] + end) / 2]),
                          np.array([ARM, ARM, (elbow[2] - end) / 2]), roles=("hand",)))
        wrists.append([x, top + ARM, end])
    knees = [[px + sx * HIP_X, (f + hip) / 2, pz] for sx in (-1, 1)]
    ankles = [[px + sx * HIP_X, f + 0.06, pz] for sx in (-1, 1)]
    return parts, _joints([px, hip, pz], shoulder, knees, ankles, wrists)
