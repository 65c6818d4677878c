"""
Pointwise Tensors
Fundamental tensor, Cartan tensor and strong-convexity diagnostics
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .errors import NonSmoothPoint, StrongConvexityViolation
from .structures import FinslerStructure

logger = logging.getLogger(__name__)

CONVEXITY_EPS = 1e-10


class FiberJet:
    """Partial derivatives of F and F^2 at one x and a batch of fiber vectors

    `phi(spec)` returns derivatives of F^2 named by a string of 'x'/'y'
    letters, e.g. phi('yyx')[..., i, j, k] = d^3 F^2 / dy^i dy^j dx^k.
    """

    def __init__(self, fs: FinslerStructure, x: Sequence[float], y: Sequence[float], order: int):
        self.fs = fs
        self.x = np.asarray(x, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.order = order
        n = fs.dimension
        if not np.all(np.any(self.y != 0, axis=-1)):
            raise NonSmoothPoint("Fiber vector must be non-zero", self.x, self.y)

        self.F_jet = fs.jet(self.x, self.y, order)
        self.phi_jet = self.F_jet * self.F_jet
        self._groups = {'x': tuple(range(n)), 'y': tuple(range(n, 2 * n))}
        self._cache: Dict[str, np.ndarray] = {}

    @property
    def F(self) -> np.ndarray:
        return self.F_jet.value

    def phi(self, spec: str) -> np.ndarray:
        if spec not in self._cache:
            self._cache[spec] = self.phi_jet.partials([self._groups[c] for c in spec])
        return self._cache[spec]

    def dF(self, spec: str) -> np.ndarray:
        return self.F_jet.partials([self._groups[c] for c in spec])


@dataclass
class FundamentalTensor:
    x: np.ndarray
    y: np.ndarray
    g: np.ndarray
    g_inv: np.ndarray

    @property
    def min_eigenvalue(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.g)[..., 0]


@dataclass
class CartanTensor:
    x: np.ndarray
    y: np.ndarray
    A: np.ndarray
    A_raised: np.ndarray


def check_convexity(g: np.ndarray, x: np.ndarray, y: np.ndarray, eps: float = CONVEXITY_EPS) -> np.ndarray:
    """Smallest eigenvalue per direction; raises where it is not above eps"""
    eigenvalues = np.linalg.eigvalsh(g)[..., 0]
    bad = eigenvalues <= eps
    if np.any(bad):
        flat = np.atleast_1d(eigenvalues)
        worst = int(np.argmin(flat))
        direction = np.reshape(y, (-1, y.shape[-1]))[worst]
        raise StrongConvexityViolation(
            f"Fundamental tensor not positive definite (min eigenvalue {flat[worst]:.3e})",
            x, direction, flat[worst])
    return eigenvalues


def metric_from_jet(bundle: FiberJet, eps: float = CONVEXITY_EPS) -> Tuple[np.ndarray, np.ndarray]:
    g = 0.5 * bundle.phi('yy')
    check_convexity(g, bundle.x, bundle.y, eps)
    identity = np.broadcast_to(np.eye(g.shape[-1]), g.shape)
    return g, np.linalg.solve(g, identity)


def fundamental_tensor(fs: FinslerStructure, x: Sequence[float], y: Sequence[float],
                       eps: float = CONVEXITY_EPS) -> FundamentalTensor:
    """g_ij = 1/2 d^2 F^2 / dy^i dy^j and its inverse"""
    bundle = FiberJet(fs, x, y, 2)
    g, g_inv = metric_from_jet(bundle, eps)
    return FundamentalTensor(bundle.x, bundle.y, g, g_inv)


def cartan_from_jet(bundle: FiberJet, g_inv: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    A = bundle.F[..., None, None, None] / 4.0 * bundle.phi('yyy')
    return A, np.einsum('...il,...ljk->...ijk', g_inv, A)


def cartan_tensor(fs: FinslerStructure, x: Sequence[float], y: Sequence[float],
                  eps: float = CONVEXITY_EPS) -> CartanTensor:
    """A_ijk = (F/2) dg_ij/dy^k, lowered and with the first index raised"""
    bundle = FiberJet(fs, x, y, 3)
    _, g_inv = metric_from_jet(bundle, eps)
    A, A_raised = cartan_from_jet(bundle, g_inv)
    return CartanTensor(bundle.x, bundle.y, A, A_raised)


def sphere_directions(rng: np.random.Generator, n: int, samples: int) -> np.ndarray:
    directions = rng.normal(size=(samples, n))
    return directions / np.linalg.norm(directions, axis=1, keepdims=True)


@dataclass
class ConvexityScan:
    min_eigenvalue: float
    worst_direction: np.ndarray
    samples: int


def convexity_scan(fs: FinslerStructure, x: Sequence[float], samples: int, seed: int = 42,
                   eps: float = CONVEXITY_EPS, rng: Optional[np.random.Generator] = None) -> ConvexityScan:
    """Smallest eigenvalue of g over uniformly sampled unit directions"""
    if samples < 4:
        raise ValueError("Convexity scan needs at least 4 directions")
    rng = rng or np.random.default_rng(seed)
    directions = sphere_directions(rng, fs.dimension, samples)
    bundle = FiberJet(fs, x, directions, 2)
    g = 0.5 * bundle.phi('yy')
    eigenvalues = check_convexity(g, bundle.x, directions, eps)
    worst = int(np.argmin(eigenvalues))
    logger.debug(f"Convexity scan at {np.round(bundle.x, 6).tolist()}: min eigenvalue {eigenvalues[worst]:.3e}")
    return ConvexityScan(float(eigenvalues[worst]), directions[worst], samples)
