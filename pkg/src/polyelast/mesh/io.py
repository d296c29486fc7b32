"""JSON mesh files."""

import json
import os
import tempfile

from .core import CrackDescriptor, PolygonMesh


def mesh_to_dict(mesh: PolygonMesh) -> dict:
    return {
        "nodes": mesh.nodes.tolist(),
        "elements": [e.tolist() for e in mesh.elements],
        "boundary_edges": [[a, b, t] for a, b, t in mesh.boundary_edges],
        "crack": [
            {"tip": [float(x) for x in c.tip], "mouth": [float(x) for x in c.mouth],
             "tip_element": int(c.tip_element), "crack_angle": float(c.crack_angle)}
            for c in mesh.cracks
        ] or None,
    }


def mesh_from_dict(data: dict) -> PolygonMesh:
    cracks = data.get("crack") or []
    if isinstance(cracks, dict):
        cracks = [cracks]
    return PolygonMesh(
        data["nodes"],
        data["elements"],
        [tuple(e) for e in data.get("boundary_edges", [])],
        tuple(CrackDescriptor(tuple(c["tip"]), tuple(c["mouth"]), int(c["tip_element"]), float(c["crack_angle"]))
              for c in cracks),
    )


def atomic_write_text(path, text):
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_mesh(mesh: PolygonMesh, path):
    atomic_write_text(path, json.dumps(mesh_to_dict(mesh), indent=None, separators=(",", ":")) + "\n")


def read_mesh(path) -> PolygonMesh:
    with open(path, encoding="utf-8") as fh:
        return mesh_from_dict(json.load(fh))
