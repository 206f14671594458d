"""Вывод картинок: SVG для n = 2, OBJ (только v/l) для n = 3."""
from __future__ import annotations

import itertools
import pathlib
import xml.etree.ElementTree as ET

import numpy as np
from numpy.typing import NDArray

from .errors import ContractViolation
from .geom_core import FloatArray
from .pl_complex import PLSet
from .regular_systems import RegularSystem

__all__ = ["svg_document", "obj_document", "write_figure", "surface_polylines"]

_COLORS = {"A": "#1f4e79", "hypersurfaces": "#999999", "image": "#c0392b"}


def _shadow_box(box: tuple[FloatArray, FloatArray], frame: FloatArray) -> tuple[FloatArray, FloatArray]:
    lo, hi = box
    corners = np.array(list(itertools.product(*zip(lo, hi))), dtype=float)
    proj = corners @ frame
    return proj.min(axis=0), proj.max(axis=0)


def surface_polylines(
    S: RegularSystem, box: tuple[FloatArray, FloatArray], count: int = 200, lines: int = 5
) -> list[FloatArray]:
    """Полилинии на H_k внутри коробки.

    n = 2: график над тенью коробки; n = 3: сетка из ``lines`` линий по каждой оси тени.
    """
    lo, hi = np.asarray(box[0], dtype=float), np.asarray(box[1], dtype=float)
    out = []
    for H in S.surfaces:
        slo, shi = _shadow_box((lo, hi), H.frame)
        if H.ambient_dim == 2:
            shadows = [np.linspace(slo[0], shi[0], count)[:, None]]
        else:
            shadows = []
            for j in range(2):
                t = np.linspace(slo[j], shi[j], count)
                for level in np.linspace(slo[1 - j], shi[1 - j], lines + 2)[1:-1]:
                    w = np.empty((count, 2))
                    w[:, j] = t
                    w[:, 1 - j] = level
                    shadows.append(w)
        for w in shadows:
            pts = H.points(w)
            inside = np.all((pts >= lo) & (pts <= hi), axis=1)
            if np.count_nonzero(inside) >= 2:
                out.append(pts[inside])
    return out


def svg_document(
    A: PLSet,
    *,
    image: FloatArray | None = None,
    surfaces: list[FloatArray] | None = None,
    width: int = 800,
) -> str:
    """SVG 1.1 со слоями A, (H_k) и h(A)."""
    if A.ambient_dim != 2:
        raise ContractViolation("SVG output needs a planar scene")
    clouds = [A.vertices()] + ([image] if image is not None and len(image) else [])
    clouds += surfaces or []
    allpts = np.vstack(clouds) if clouds else np.zeros((1, 2))
    lo, hi = allpts.min(axis=0), allpts.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-9))
    margin = 20.0
    scale = (width - 2 * margin) / span
    height = int((hi[1] - lo[1]) * scale + 2 * margin) + 1

    def xy(p: FloatArray) -> tuple[str, str]:
        return f"{margin + (p[0] - lo[0]) * scale:.3f}", f"{height - margin - (p[1] - lo[1]) * scale:.3f}"

    root = ET.Element(
        "svg",
        {"xmlns": "http://www.w3.org/2000/svg", "version": "1.1", "width": str(width), "height": str(height)},
    )
    layer = ET.SubElement(root, "g", {"id": "A", "stroke": _COLORS["A"], "fill": _COLORS["A"], "stroke-width": "2"})
    for s in A:
        if s.dim == 0:
            cx, cy = xy(s.vertices[0])
            ET.SubElement(layer, "circle", {"cx": cx, "cy": cy, "r": "3"})
        else:
            (x1, y1), (x2, y2) = xy(s.vertices[0]), xy(s.vertices[1])
            ET.SubElement(layer, "line", {"x1": x1, "y1": y1, "x2": x2, "y2": y2})

    if surfaces:
        layer = ET.SubElement(
            root, "g", {"id": "hypersurfaces", "stroke": _COLORS["hypersurfaces"], "fill": "none", "stroke-width": "1"}
        )
        for line in surfaces:
            ET.SubElement(layer, "polyline", {"points": " ".join(",".join(xy(p)) for p in line)})

    if image is not None and len(image):
        layer = ET.SubElement(root, "g", {"id": "image", "fill": _COLORS["image"]})
        for p in image:
            cx, cy = xy(p)
            ET.SubElement(layer, "circle", {"cx": cx, "cy": cy, "r": "1.5"})
    ET.indent(root)
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"


def _sample_exact(A: PLSet, count: int, seed: int) -> tuple[FloatArray, list[tuple[int, ...]]]:
    """Ровно ``count`` точек и рёбра симплексов по их вершинам (вершины идут первыми)."""
    per = max(1, -(-count // max(len(A), 1)))
    pts, branch = A.sample_points(per, seed)
    pts, branch = pts[:count], branch[:count]
    starts = np.searchsorted(branch, np.arange(len(A)))
    sizes = np.bincount(branch, minlength=len(A))
    edges: list[tuple[int, ...]] = []
    for i, s in enumerate(A):
        present = min(int(sizes[i]), s.dim + 1)
        for a, b in itertools.combinations(range(present), 2):
            edges.append((int(starts[i]) + a, int(starts[i]) + b))
    return pts, edges


def _spread(total: int, count: int) -> NDArray[np.int64]:
    """``count`` различных номеров из range(total), равномерно."""
    return (np.arange(count, dtype=np.int64) * total) // max(count, 1)


def obj_document(
    A: PLSet,
    *,
    samples: int,
    image: FloatArray | None = None,
    surfaces: list[FloatArray] | None = None,
    seed: int = 0,
) -> str:
    """Wavefront OBJ: облака A, H_k и h(A) вершинами, рёбра и полилинии: элементами l.

    Всего ровно ``samples`` вершин: H_k и h(A) получают не больше доли
    samples // (число слоёв) каждый, остаток уходит на A.
    """
    if A.ambient_dim != 3:
        raise ContractViolation("OBJ output needs a scene in R^3")
    lines_in = [np.asarray(line, dtype=float) for line in surfaces or [] if len(line)]
    cloud = np.zeros((0, 3)) if image is None else np.asarray(image, dtype=float).reshape(-1, 3)
    layers = 1 + bool(lines_in) + bool(len(cloud))
    share = samples // layers
    n_surf = min(share, sum(len(line) for line in lines_in))
    n_image = min(share, len(cloud))
    pts, edges = _sample_exact(A, samples - n_surf - n_image, seed)

    lines = ["# regvec point cloud", "o A"]
    lines += [f"v {p[0]:.9g} {p[1]:.9g} {p[2]:.9g}" for p in pts]
    lines += [f"l {a + 1} {b + 1}" for a, b in edges]
    base = len(pts)
    if n_surf:
        stacked = np.vstack(lines_in)
        owner = np.concatenate([np.full(len(line), i) for i, line in enumerate(lines_in)])
        pick = _spread(len(stacked), n_surf)
        lines.append("o hypersurfaces")
        lines += [f"v {p[0]:.9g} {p[1]:.9g} {p[2]:.9g}" for p in stacked[pick]]
        for i in np.unique(owner[pick]):
            idx = np.flatnonzero(owner[pick] == i)
            if idx.shape[0] >= 2:
                lines.append("l " + " ".join(str(base + j + 1) for j in idx))
    if n_image:
        lines.append("o image")
        lines += [f"v {p[0]:.9g} {p[1]:.9g} {p[2]:.9g}" for p in cloud[_spread(len(cloud), n_image)]]
    return "\n".join(lines) + "\n"


def write_figure(
    path: str | pathlib.Path,
    A: PLSet,
    *,
    image: FloatArray | None = None,
    surfaces: list[FloatArray] | None = None,
    samples: int = 1000,
    seed: int = 0,
) -> str:
    """Пишет SVG или OBJ по размерности сцены; возвращает формат."""
    n = A.ambient_dim
    if n == 2:
        text, kind = svg_document(A, image=image, surfaces=surfaces), "svg"
    elif n == 3:
        text, kind = obj_document(A, samples=samples, image=image, surfaces=surfaces, seed=seed), "obj"
    else:
        raise ContractViolation(f"rendering supports n = 2 (SVG) and n = 3 (OBJ) only, got n = {n}")
    pathlib.Path(path).write_text(text, encoding="utf-8")
    return kind
