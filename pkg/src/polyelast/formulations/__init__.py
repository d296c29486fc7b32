"""Element stiffness matrices for the three polygon formulations."""

from .material import Material
from .nsfem import SmoothedSubcell, smoothed_subcells, stiffness_nsfem, vertex_average
from .polyfem import stiffness_polyfem, strain_matrix
from .sbfem import (SbfemError, SbfemModalData, boundary_forces, hamiltonian, integration_constants,
                    polygon_boundary, sbfem_coefficient_matrices, sbfem_displacement_at, sbfem_element,
                    sbfem_solve_element, sbfem_strain_at, sbfem_stress_at, stiffness_sbfem, stress_modes)

FORMULATIONS = ("polyfem", "nsfem", "sbfem")

__all__ = [
    "FORMULATIONS", "Material", "SbfemError", "SbfemModalData", "SmoothedSubcell", "boundary_forces",
    "hamiltonian", "integration_constants", "polygon_boundary", "sbfem_coefficient_matrices",
    "sbfem_displacement_at", "sbfem_element", "sbfem_solve_element", "sbfem_strain_at", "sbfem_stress_at",
    "smoothed_subcells", "stiffness_nsfem", "stiffness_polyfem", "stiffness_sbfem", "strain_matrix",
    "stress_modes", "vertex_average",
]
