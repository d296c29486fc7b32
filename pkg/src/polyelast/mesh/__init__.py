"""Polygonal meshes: data model, generators, crack conformity, IO."""

from .core import (CrackDescriptor, Domain, ElementReport, MeshError, PolygonMesh, ValidationReport,
                   choose_scaling_center, domain_tagger, kernel_polygon, validate_mesh)
from .crack import CrackSeeds, conform_to_crack, conform_to_interior_crack
from .dual import dual_polygon_mesh
from .io import mesh_from_dict, mesh_to_dict, read_mesh, write_mesh
from .voronoi import (DuplicateSeedError, SeedOutsideError, cvt_energy, generate_voronoi_mesh, graded_seeds, lloyd,
                      random_seeds, voronoi_cells)

__all__ = [
    "CrackDescriptor", "CrackSeeds", "Domain", "DuplicateSeedError", "ElementReport", "MeshError",
    "PolygonMesh", "SeedOutsideError", "ValidationReport", "choose_scaling_center", "conform_to_crack",
    "conform_to_interior_crack", "cvt_energy", "domain_tagger", "dual_polygon_mesh", "generate_voronoi_mesh", "graded_seeds", "kernel_polygon", "lloyd",
    "mesh_from_dict", "mesh_to_dict", "random_seeds", "read_mesh", "validate_mesh", "voronoi_cells",
    "write_mesh",
]
