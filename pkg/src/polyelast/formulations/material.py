from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Material:
    """Isotropic linear-elastic material in plane stress or plane strain."""

    E: float
    nu: float
    mode: str = "plane_stress"
    D: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.E > 0:
            raise ValueError(f"Young's modulus must be positive, got {self.E}")
        if not -1.0 < self.nu < 0.5:
            raise ValueError(f"Poisson ratio must lie in (-1, 0.5), got {self.nu}")
        E, nu = float(self.E), float(self.nu)
        if self.mode == "plane_stress":
            d = E / (1 - nu ** 2) * np.array([[1, nu, 0], [nu, 1, 0], [0, 0, (1 - nu) / 2]])
        elif self.mode == "plane_strain":
            if nu >= 0.4999:
                raise ValueError("plane strain with nu >= 0.4999 is outside the supported range")
            d = E / ((1 + nu) * (1 - 2 * nu)) * np.array([[1 - nu, nu, 0], [nu, 1 - nu, 0],
                                                          [0, 0, (1 - 2 * nu) / 2]])
        else:
            raise ValueError(f"unknown mode {self.mode!r} (plane_stress | plane_strain)")
        d.setflags(write=False)
        object.__setattr__(self, "D", d)
