"""Canonical box furniture: base on y = 0, centred in x and z, facing +z."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry.mesh import TriMesh, box_mesh, merge_meshes

SPACING = 0.1
# Backrest columns every 5 mm. With widths in whole centimetres they line up with
# the body's contact vertices, so back contact at ground truth is just the clearance.
BACK_SPACING = (0.005, 0.1, 0.1)


@dataclass(frozen=True)
class FurnitureSpec:
    category: str
    width: float  # x
    depth: float  # z
    seat_height: float  # top of the seat, bed or table surface
    back_height: float = 0.0  # backrest height above the seat
    back_thickness: float = 0.0

    @property
    def height(self) -> float:
        return self.seat_height + self.back_height

    @property
    def seat_front(self) -> float:
        return self.depth / 2

    @property
    def back_front(self) -> float:
        """z of the backrest surface a sitter leans on."""
        return -self.depth / 2 + self.back_thickness


def sample_spec(category: str, rng: np.random.Generator) -> FurnitureSpec:
    def u(lo, hi):
        return rng.uniform(lo, hi)

    def w(lo, hi):
        return round(rng.uniform(lo, hi), 2)

    if category == "chair":
        return FurnitureSpec("chair", w(0.48, 0.6), u(0.5, 0.6), u(0.42, 0.5), u(0.35, 0.5), 0.08)
    if category == "sofa":
        return FurnitureSpec("sofa", w(1.4, 1.8), u(0.8, 0.9), u(0.42, 0.46), u(0.35, 0.45), 0.2)
    if category == "bed":
        return FurnitureSpec("bed", w(1.3, 1.5), u(1.9, 2.1), u(0.45, 0.55))
    if category == "table":
        return FurnitureSpec("table", w(0.8, 1.2), u(0.6, 0.8), u(0.72, 0.78))
    raise ValueError(f"unknown category {category!r}")


def furniture_mesh(spec: FurnitureSpec) -> TriMesh:
    """A solid base block, plus a backrest block standing on its rear edge for seats."""
    base = box_mesh([spec.width / 2, spec.seat_height / 2, spec.depth / 2],
                    (0.0, spec.seat_height / 2, 0.0), spacing=SPACING)
    parts = [base]
    if spec.back_height > 0:
        back = box_mesh([spec.width / 2, spec.back_height / 2, spec.back_thickness / 2],
                        (0.0, spec.seat_height + spec.back_height / 2, -spec.depth / 2 + spec.back_thickness / 2),
                        spacing=BACK_SPACING)
        parts.append(back)
    m = merge_meshes(parts)
    return TriMesh(m.vertices, m.faces, name=spec.category)
