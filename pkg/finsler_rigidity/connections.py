"""
Connections
Spray, nonlinear connections, Chern and Berwald coefficients, difference tensors
and the connection fields that transport routines integrate against
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Optional, Sequence

import numpy as np

from .errors import DimensionMismatch
from .structures import FinslerStructure
from .tensors import FiberJet, cartan_from_jet, metric_from_jet

logger = logging.getLogger(__name__)

CARTAN_CORRECTED = 'cartan_corrected'
SPRAY_DERIVATIVE = 'spray_derivative'


def _swap(t: np.ndarray) -> np.ndarray:
    return np.swapaxes(t, -1, -2)


def _cycle(t: np.ndarray) -> np.ndarray:
    """out[s, j, k] = t[j, k, s]"""
    return np.einsum('...jks->...sjk', t)


class FiberGeometry:
    """Every connection-level quantity of F at one x and a batch of directions

    Quantities are computed lazily; `order` bounds what can be asked for
    (2: spray, 3: Chern and nonlinear connections, 4: Berwald and Landsberg).
    """

    def __init__(self, fs: FinslerStructure, x: Sequence[float], y: Sequence[float], order: int = 3):
        self.fs = fs
        self.bundle = FiberJet(fs, x, y, order)
        self.x = self.bundle.x
        self.y = self.bundle.y
        self.order = order

    # metric data

    @property
    def F(self) -> np.ndarray:
        return self.bundle.F

    @cached_property
    def _metric(self):
        return metric_from_jet(self.bundle)

    @property
    def g(self) -> np.ndarray:
        return self._metric[0]

    @property
    def g_inv(self) -> np.ndarray:
        return self._metric[1]

    @cached_property
    def dg_dy(self) -> np.ndarray:
        return 0.5 * self.bundle.phi('yyy')

    @cached_property
    def dg_dx(self) -> np.ndarray:
        return 0.5 * self.bundle.phi('yyx')

    @cached_property
    def _cartan(self):
        return cartan_from_jet(self.bundle, self.g_inv)

    @property
    def cartan(self) -> np.ndarray:
        return self._cartan[0]

    @property
    def cartan_raised(self) -> np.ndarray:
        return self._cartan[1]

    @cached_property
    def cartan_from_F(self) -> np.ndarray:
        """A_ijk = F/2 d_k(F F_ij + F_i F_j), built from derivatives of F alone"""
        F = self.F[..., None, None, None]
        d1, d2, d3 = self.bundle.dF('y'), self.bundle.dF('yy'), self.bundle.dF('yyy')
        dg = (d1[..., None, None, :] * d2[..., :, :, None] + F * d3
              + d2[..., :, None, :] * d1[..., None, :, None] + d1[..., :, None, None] * d2[..., None, :, :])
        return 0.5 * F * dg

    # spray

    @cached_property
    def gamma(self) -> np.ndarray:
        """Formal Christoffel symbols gamma^i_jk"""
        d = self.dg_dx
        low = 0.5 * (d - _cycle(d) + _swap(d))
        return np.einsum('...is,...sjk->...ijk', self.g_inv, low)

    @cached_property
    def spray(self) -> np.ndarray:
        """G^i = gamma^i_jk y^j y^k"""
        return np.einsum('...ijk,...j,...k->...i', self.gamma, self.y, self.y)

    @cached_property
    def _Q(self) -> np.ndarray:
        return np.einsum('...lk,...k->...l', self.bundle.phi('yx'), self.y) - self.bundle.phi('x')

    @cached_property
    def spray_from_energy(self) -> np.ndarray:
        """G^i from first and second derivatives of F^2 only"""
        return 0.5 * np.einsum('...il,...l->...i', self.g_inv, self._Q)

    # nonlinear connection

    @cached_property
    def nonlinear(self) -> np.ndarray:
        """N^i_j = gamma^i_jk y^k - A^i_jk G^k / F"""
        first = np.einsum('...ijk,...k->...ij', self.gamma, self.y)
        correction = np.einsum('...ijk,...k->...ij', self.cartan_raised, self.spray)
        return first - correction / self.F[..., None, None]

    @cached_property
    def _dM(self) -> np.ndarray:
        """d g^ad / dy^j stored as [a, d, j]"""
        M = self.g_inv
        return -np.einsum('...ab,...bcj,...cd->...adj', M, self.dg_dy, M)

    @cached_property
    def _R(self) -> np.ndarray:
        """dQ_l / dy^j stored as [l, j]"""
        phi_yx = self.bundle.phi('yx')
        return np.einsum('...ljk,...k->...lj', self.bundle.phi('yyx'), self.y) + phi_yx - _swap(phi_yx)

    @cached_property
    def nonlinear_from_spray(self) -> np.ndarray:
        """N^i_j = 1/2 dG^i/dy^j"""
        return 0.25 * (np.einsum('...ilj,...l->...ij', self._dM, self._Q)
                       + np.einsum('...il,...lj->...ij', self.g_inv, self._R))

    # Chern

    @cached_property
    def horizontal_metric_derivative(self) -> np.ndarray:
        """delta_j g_ab stored as [a, b, j]"""
        return self.dg_dx - np.einsum('...mj,...abm->...abj', self.nonlinear, self.dg_dy)

    @cached_property
    def chern(self) -> np.ndarray:
        D = self.horizontal_metric_derivative
        low = 0.5 * (_swap(D) + D - _cycle(D))
        return np.einsum('...ls,...sjk->...ljk', self.g_inv, low)

    def covariant_metric_derivative(self, coefficients: np.ndarray) -> np.ndarray:
        """delta_k g_ij - g_mj C^m_ik - g_im C^m_jk for coefficients C"""
        g = self.g
        return (self.horizontal_metric_derivative
                - np.einsum('...mj,...mik->...ijk', g, coefficients)
                - np.einsum('...im,...mjk->...ijk', g, coefficients))

    def vertical_metric_derivative(self, vertical: Optional[np.ndarray] = None) -> np.ndarray:
        """F dg_ij/dy^k - g_mj C^m_ik - g_im C^m_jk for vertical coefficients C (none by default)"""
        D = self.F[..., None, None, None] * self.dg_dy
        if vertical is None:
            return D
        g = self.g
        return (D - np.einsum('...mj,...mik->...ijk', g, vertical)
                - np.einsum('...im,...mjk->...ijk', g, vertical))

    def metric_compatibility(self, coefficients: np.ndarray,
                             vertical: Optional[np.ndarray] = None) -> Dict[str, float]:
        """Largest defects against the Chern rule: no horizontal change of g, vertical change 2A"""
        horizontal = self.covariant_metric_derivative(coefficients)
        vertical_defect = self.vertical_metric_derivative(vertical) - 2.0 * self.cartan_from_F
        return {
            'horizontal': float(np.max(np.abs(horizontal))),
            'vertical': float(np.max(np.abs(vertical_defect))),
        }

    @cached_property
    def structure_residuals(self) -> Dict[str, float]:
        """Torsion, horizontal and vertical compatibility defects of Chern"""
        torsion = self.chern - _swap(self.chern)
        compatibility = self.metric_compatibility(self.chern)
        return {
            'torsion': float(np.max(np.abs(torsion))),
            'horizontal_compatibility': compatibility['horizontal'],
            'vertical_compatibility': compatibility['vertical'],
        }

    # Berwald

    @cached_property
    def berwald(self) -> np.ndarray:
        """1/2 d^2 G^i / dy^j dy^k"""
        M, dM, Q, R = self.g_inv, self._dM, self._Q, self._R
        dgy = self.dg_dy
        d2g = 0.5 * self.bundle.phi('yyyy')
        chain = np.einsum('...ab,...bck,...ce,...efj,...fd->...adjk', M, dgy, M, dgy, M)
        d2M = chain + _swap(chain) - np.einsum('...ab,...bcjk,...cd->...adjk', M, d2g, M)

        phi_yyx = self.bundle.phi('yyx')
        dR = (np.einsum('...ljkm,...m->...ljk', self.bundle.phi('yyyx'), self.y)
              + phi_yyx + _swap(phi_yyx) - _cycle(phi_yyx))

        return 0.25 * (np.einsum('...iljk,...l->...ijk', d2M, Q)
                       + np.einsum('...ilj,...lk->...ijk', dM, R)
                       + np.einsum('...ilk,...lj->...ijk', dM, R)
                       + np.einsum('...il,...ljk->...ijk', M, dR))

    # Landsberg

    @cached_property
    def landsberg(self) -> np.ndarray:
        """A-dot_ijk: horizontal Chern derivative of A along y/F"""
        F = self.F[..., None, None, None, None]
        phi_yyy = self.bundle.phi('yyy')
        dA_dx = (self.bundle.phi('x')[..., None, None, None, :] / (8.0 * F) * phi_yyy[..., None]
                 + F / 4.0 * self.bundle.phi('yyyx'))
        dA_dy = (self.bundle.phi('y')[..., None, None, None, :] / (8.0 * F) * phi_yyy[..., None]
                 + F / 4.0 * self.bundle.phi('yyyy'))
        N, Gamma, A = self.nonlinear, self.chern, self.cartan
        covariant = (dA_dx - np.einsum('...ms,...ijkm->...ijks', N, dA_dy)
                     - np.einsum('...mis,...mjk->...ijks', Gamma, A)
                     - np.einsum('...mjs,...imk->...ijks', Gamma, A)
                     - np.einsum('...mks,...ijm->...ijks', Gamma, A))
        return np.einsum('...ijks,...s->...ijk', covariant, self.y) / self.F[..., None, None, None]

    @cached_property
    def berwald_compatibility_defect(self) -> np.ndarray:
        """Horizontal Berwald derivative of g plus twice A-dot"""
        return self.covariant_metric_derivative(self.berwald) + 2.0 * self.landsberg


# Value types

@dataclass
class SprayData:
    x: np.ndarray
    y: np.ndarray
    gamma: np.ndarray
    G: np.ndarray


@dataclass
class NonlinearConnection:
    x: np.ndarray
    y: np.ndarray
    N: np.ndarray
    variant: str


@dataclass
class ConnectionCoefficients:
    """Gamma^i_jk of a linear connection at x (and y when y-dependent)"""
    kind: str
    gamma: np.ndarray
    base_dependence: str
    x: np.ndarray
    y: Optional[np.ndarray] = None
    diagnostics: Dict[str, float] = field(default_factory=dict)

    @property
    def dimension(self) -> int:
        return self.gamma.shape[-1]

    @property
    def torsion(self) -> np.ndarray:
        return self.gamma - _swap(self.gamma)


@dataclass
class DifferenceTensor:
    x: np.ndarray
    y: Optional[np.ndarray]
    B: np.ndarray
    S: np.ndarray
    Aanti: np.ndarray
    torsion_residual: float


# Operations

def formal_christoffel(fs: FinslerStructure, x, y) -> SprayData:
    geometry = FiberGeometry(fs, x, y, 3)
    return SprayData(geometry.x, geometry.y, geometry.gamma, geometry.spray)


def nonlinear_connection(fs: FinslerStructure, x, y, variant: str = CARTAN_CORRECTED) -> NonlinearConnection:
    geometry = FiberGeometry(fs, x, y, 3)
    if variant == CARTAN_CORRECTED:
        N = geometry.nonlinear
    elif variant == SPRAY_DERIVATIVE:
        N = geometry.nonlinear_from_spray
    else:
        raise ValueError(f"Unknown nonlinear connection variant '{variant}'")
    return NonlinearConnection(geometry.x, geometry.y, N, variant)


def chern_coefficients(fs: FinslerStructure, x, y) -> ConnectionCoefficients:
    geometry = FiberGeometry(fs, x, y, 3)
    return ConnectionCoefficients('chern', geometry.chern, 'x_and_y', geometry.x, geometry.y,
                                  dict(geometry.structure_residuals))


def berwald_coefficients(fs: FinslerStructure, x, y) -> ConnectionCoefficients:
    geometry = FiberGeometry(fs, x, y, 4)
    defect = geometry.berwald_compatibility_defect
    return ConnectionCoefficients('berwald', geometry.berwald, 'x_and_y', geometry.x, geometry.y,
                                  {'h_compatibility_defect': float(np.max(np.abs(defect))),
                                   'torsion': float(np.max(np.abs(geometry.berwald - _swap(geometry.berwald))))})


def landsberg_derivative(fs: FinslerStructure, x, y) -> np.ndarray:
    return FiberGeometry(fs, x, y, 4).landsberg


def pullback_connection(affine: ConnectionCoefficients) -> ConnectionCoefficients:
    """Re-tag a base connection as a connection on the pulled-back bundle"""
    if affine.base_dependence != 'x_only':
        raise ValueError("Only y-independent connections can be pulled back")
    return ConnectionCoefficients('pullback_affine', affine.gamma, 'x_only', affine.x, None,
                                  dict(affine.diagnostics, source_kind=affine.kind))


def difference_tensor(c1: ConnectionCoefficients, c2: ConnectionCoefficients, x=None, y=None) -> DifferenceTensor:
    """B = Gamma_1 - Gamma_2 split into symmetric and antisymmetric parts"""
    if c1.gamma.shape != c2.gamma.shape:
        raise DimensionMismatch(f"Connections of shapes {c1.gamma.shape} and {c2.gamma.shape}")
    B = c1.gamma - c2.gamma
    S = 0.5 * (B + _swap(B))
    Aanti = 0.5 * (B - _swap(B))
    torsion_residual = float(np.max(np.abs(2.0 * Aanti - (c1.torsion - c2.torsion))))
    x = c1.x if x is None else np.asarray(x, dtype=float)
    y = (c1.y if c1.y is not None else c2.y) if y is None else np.asarray(y, dtype=float)
    return DifferenceTensor(x, y, B, S, Aanti, torsion_residual)


# Connection fields

class ConnectionField:
    """Connection coefficients as a function of position (and direction)"""

    kind = 'affine'
    depends_on_direction = False

    def __init__(self, dimension: int):
        self.dimension = dimension
        self.logger = logging.getLogger(__name__)

    def coefficients(self, x, y=None) -> np.ndarray:
        raise NotImplementedError

    def nonlinear(self, x, y) -> np.ndarray:
        """N^i_k = Gamma^i_jk y^j, the section rule applied to the direction itself"""
        return np.einsum('...ijk,...j->...ik', self.coefficients(x, y), np.asarray(y, dtype=float))

    def horizontal(self, x, y):
        """(N, Gamma) at (x, y) sharing one evaluation"""
        gamma = self.coefficients(x, y)
        return np.einsum('...ijk,...j->...ik', gamma, np.asarray(y, dtype=float)), gamma

    def at(self, x, y=None) -> ConnectionCoefficients:
        dependence = 'x_and_y' if self.depends_on_direction else 'x_only'
        return ConnectionCoefficients(self.kind, self.coefficients(x, y), dependence,
                                      np.asarray(x, dtype=float), None if y is None else np.asarray(y, dtype=float))


class ChernField(ConnectionField):
    kind = 'chern'
    depends_on_direction = True
    order = 3

    def __init__(self, fs: FinslerStructure):
        super().__init__(fs.dimension)
        self.fs = fs

    def coefficients(self, x, y=None):
        return FiberGeometry(self.fs, x, y, self.order).chern

    def horizontal(self, x, y):
        geometry = FiberGeometry(self.fs, x, y, self.order)
        return geometry.nonlinear, geometry.chern


class BerwaldField(ChernField):
    kind = 'berwald'
    order = 4

    def coefficients(self, x, y=None):
        return FiberGeometry(self.fs, x, y, self.order).berwald

    def horizontal(self, x, y):
        geometry = FiberGeometry(self.fs, x, y, self.order)
        return geometry.nonlinear, geometry.berwald


class CoefficientField(ConnectionField):
    """A y-independent connection given by a callable x -> Gamma(x)"""

    def __init__(self, dimension: int, function, kind: str = 'affine'):
        super().__init__(dimension)
        self.function = function
        self.kind = kind

    def coefficients(self, x, y=None):
        return np.asarray(self.function(np.asarray(x, dtype=float)), dtype=float)


class LeviCivitaField(ConnectionField):
    """Levi-Civita connection of a Riemannian metric field h(x)"""

    kind = 'levi_civita'

    def __init__(self, metric_field):
        super().__init__(metric_field.dimension)
        self.metric_field = metric_field

    def coefficients(self, x, y=None):
        h, dh = self.metric_field.value_and_gradient(x)
        low = 0.5 * (dh + _swap(dh) - _cycle(dh))
        return np.einsum('is,sjk->ijk', np.linalg.inv(h), low)


class PullbackField(ConnectionField):
    """pi* of an affine connection field: same coefficients at every direction"""

    kind = 'pullback_affine'
    depends_on_direction = False

    def __init__(self, affine: ConnectionField):
        if affine.depends_on_direction:
            raise ValueError("Only y-independent connections can be pulled back")
        super().__init__(affine.dimension)
        self.affine = affine

    def coefficients(self, x, y=None):
        gamma = self.affine.coefficients(x)
        if y is None:
            return gamma
        batch = np.shape(y)[:-1]
        return np.broadcast_to(gamma, batch + gamma.shape)
