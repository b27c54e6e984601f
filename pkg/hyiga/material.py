import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Union

import torch
from torch import Tensor

from hyiga._internal.tensor_utils import DTYPE
from hyiga.errors import ConfigurationError

logger = logging.getLogger(__name__)

__all__ = ["Regime", "Material"]


class Regime(str, Enum):
    PLANE_STRESS = "plane_stress"
    PLANE_STRAIN = "plane_strain"


def _parse_regime(regime: Union[Regime, str, None]) -> Optional[Regime]:
    if regime is None or isinstance(regime, Regime):
        return regime
    try:
        return Regime(str(regime).strip().lower().replace("-", "_").replace(" ", "_"))
    except ValueError:
        raise ConfigurationError(
            "regime must be one of {}, got {!r}".format(", ".join(r.value for r in Regime), regime)
        )


@dataclass(frozen=True)
class Material:
    r"""Isotropic linear-elastic material in a 2D regime.

    Voigt order is ``(xx, yy, xy)`` with engineering shear strain :math:`\gamma_{xy} = 2\varepsilon_{xy}`.

    Args:
        E: Young's modulus, ``E > 0``.
        nu: Poisson's ratio, ``-1 < nu < 0.5``. The incompressible limit is rejected.
        regime: plane stress or plane strain. May be left unset until a matrix is requested.

    Example
        >>> Material(1000.0, 0.3, "plane_strain").stiffness_matrix()[0, 0]
        tensor(1346.1538, dtype=torch.float64)
    """

    E: float
    nu: float
    regime: Optional[Regime] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "E", float(self.E))
        object.__setattr__(self, "nu", float(self.nu))
        object.__setattr__(self, "regime", _parse_regime(self.regime))
        if not self.E > 0:
            raise ConfigurationError("Young's modulus must be positive, got {}".format(self.E))
        if not -1.0 < self.nu < 0.5:
            raise ConfigurationError("Poisson's ratio must satisfy -1 < nu < 0.5, got {}".format(self.nu))

    def _require_regime(self) -> Regime:
        if self.regime is None:
            raise ConfigurationError("material regime (plane_stress or plane_strain) is not set")
        return self.regime

    @property
    def shear_modulus(self) -> float:
        return self.E / (2.0 * (1.0 + self.nu))

    @property
    def kolosov_constant(self) -> float:
        if self._require_regime() is Regime.PLANE_STRAIN:
            return 3.0 - 4.0 * self.nu
        return (3.0 - self.nu) / (1.0 + self.nu)

    def stiffness_matrix(self) -> Tensor:
        """Constitutive matrix ``C`` with ``σ = C ε``."""
        E, nu = self.E, self.nu
        if self._require_regime() is Regime.PLANE_STRESS:
            factor = E / (1.0 - nu * nu)
            matrix = [[1.0, nu, 0.0], [nu, 1.0, 0.0], [0.0, 0.0, (1.0 - nu) / 2.0]]
        else:
            factor = E / ((1.0 + nu) * (1.0 - 2.0 * nu))
            matrix = [[1.0 - nu, nu, 0.0], [nu, 1.0 - nu, 0.0], [0.0, 0.0, (1.0 - 2.0 * nu) / 2.0]]
        return factor * torch.tensor(matrix, dtype=DTYPE)

    def compliance_matrix(self) -> Tensor:
        """Closed-form inverse ``S = C^{-1}`` of :meth:`stiffness_matrix`."""
        E, nu = self.E, self.nu
        if self._require_regime() is Regime.PLANE_STRESS:
            factor = 1.0 / E
            matrix = [[1.0, -nu, 0.0], [-nu, 1.0, 0.0], [0.0, 0.0, 2.0 * (1.0 + nu)]]
        else:
            factor = (1.0 + nu) / E
            matrix = [[1.0 - nu, -nu, 0.0], [-nu, 1.0 - nu, 0.0], [0.0, 0.0, 2.0]]
        return factor * torch.tensor(matrix, dtype=DTYPE)

    def replace(self, **overrides) -> "Material":
        """Copy with some fields overridden; ``None`` values are ignored."""
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})
