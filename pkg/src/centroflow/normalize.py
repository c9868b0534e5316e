"""Special-linear normalization: centered Loewner ellipsoid fitting, unimodular
images of support functions, and distance to the unit ball.

For a centrally symmetric body the minimum-volume enclosing ellipsoid is
centered, so the fit works on the symmetric formulation {x : x^T M x <= 1}
and the normalizing map L = det(M^{1/2})^{-1/(n+1)} M^{1/2} is unimodular and
symmetric positive definite (no rotation ambiguity).
"""

from dataclasses import dataclass

import numpy as np

from . import sphere as sph
from .errors import ConvexityViolation, DegenerateSpan
from .geometry import curvature_bundle, embedding, unit_ball_volume, volume
from .sphere import SpectralSupport, SphericalGrid

_MVEE_MAX_ITERS = 500_000
_COND_LIMIT = 1e10


@dataclass(frozen=True)
class LinearMap:
    """An (n+1)x(n+1) real matrix with its determinant cached."""

    matrix: np.ndarray
    det: float

    @classmethod
    def from_matrix(cls, a: np.ndarray) -> "LinearMap":
        a = np.asarray(a, dtype=float)
        return cls(a, float(np.linalg.det(a)))

    @classmethod
    def identity(cls, dim: int) -> "LinearMap":
        return cls(np.eye(dim), 1.0)


def lowner_ellipsoid(points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Matrix M of the minimum-volume centered ellipsoid {x : x^T M x <= 1}
    containing the points.

    Khachiyan-style multiplicative-weights iteration on the symmetric
    formulation, with away steps.  The point set is treated as symmetric
    (x and -x enter identically, so callers need not duplicate).
    Terminates when all support values x^T M x lie within (1 +- tol),
    giving a relative volume optimality gap of order d * tol.
    """
    x = np.asarray(points, dtype=float)
    npts, d = x.shape
    if npts < d:
        raise DegenerateSpan(f"{npts} points cannot span R^{d}")
    u = np.full(npts, 1.0 / npts)
    v = (x.T * u) @ x
    for _ in range(_MVEE_MAX_ITERS):
        if np.linalg.cond(v) > _COND_LIMIT:
            raise DegenerateSpan("points lie near a central hyperplane")
        vinv = np.linalg.inv(v)
        gv = np.einsum("ki,ij,kj->k", x, vinv, x)
        j = int(np.argmax(gv))
        g_max = gv[j]
        active = u > 0.0
        gv_act = np.where(active, gv, np.inf)
        k = int(np.argmin(gv_act))
        g_min = gv_act[k]
        if g_max <= d * (1.0 + tol) and g_min >= d * (1.0 - tol):
            break
        if g_max - d >= d - g_min:
            lam = (g_max - d) / (d * (g_max - 1.0))
            u *= 1.0 - lam
            u[j] += lam
            v = (1.0 - lam) * v + lam * np.outer(x[j], x[j])
        else:
            lam = (g_min - d) / (d * (g_min - 1.0))  # negative: away step
            lam = max(lam, -u[k] / (1.0 - u[k]))
            u *= 1.0 - lam
            u[k] += lam
            v = (1.0 - lam) * v + lam * np.outer(x[k], x[k])
            u = np.maximum(u, 0.0)
    return np.linalg.inv(v) / d


def _spd_sqrt(m: np.ndarray) -> np.ndarray:
    w, q = np.linalg.eigh(m)
    return (q * np.sqrt(w)) @ q.T


def transform_support(
    s: SpectralSupport, a: LinearMap | np.ndarray, g: SphericalGrid
) -> SpectralSupport:
    """Support function of A(K): s'(u) = |A^T u| s(A^T u / |A^T u|).

    Evaluated pointwise at the grid nodes, re-analyzed and projected even.
    The volume scales by |det A|.
    """
    mat = a.matrix if isinstance(a, LinearMap) else np.asarray(a, dtype=float)
    mapped = g.nodes @ mat
    norms = np.linalg.norm(mapped, axis=1)
    vals = norms * sph.evaluate_at(s.coeffs, s.n, mapped / norms[:, None])
    c = sph.project_even(sph.analyze(vals, g, l_max=s.l_max), s.n)
    return SpectralSupport(s.n, s.l_max, c)


def boundary_points(
    s: SpectralSupport, g: SphericalGrid, oversample: int | None = None
) -> np.ndarray:
    """Boundary samples x(z) = s z + grad s; finer than the grid if requested.

    For n=1 ``oversample`` is a direction count, for n=2 a latitude count.
    """
    if oversample is None:
        return embedding(s, g)
    fine = (
        sph.build_grid(1, max(oversample, 2 * s.l_max + 1), s.l_max)
        if s.n == 1
        else sph.build_grid(2, (oversample, 2 * oversample), s.l_max)
    )
    return embedding(s, fine)


def sl_normalize(
    s: SpectralSupport,
    g: SphericalGrid,
    oversample: int | None = None,
    mvee_tol: float = 1e-9,
):
    """Unimodular normalization toward the ball.

    Fits the centered Loewner ellipsoid of the volume-normalized body and
    applies L = det(M^{1/2})^{-1/(n+1)} M^{1/2}, which maps that ellipsoid to
    a ball.  For symmetric bodies the result satisfies
    max s' / min s' <= sqrt(n+1) up to fit slack.

    Returns (s', L).  Raises DegenerateSpan from the fit and
    ConvexityViolation if the transformed body fails the convexity check.
    """
    v = volume(s, g)
    scale = (unit_ball_volume(s.n) / v) ** (1.0 / (s.n + 1.0))
    s_vn = s.with_coeffs(s.coeffs * scale)
    pts = boundary_points(s_vn, g, oversample)
    m = lowner_ellipsoid(pts, tol=mvee_tol)
    root = _spd_sqrt(m)
    l_mat = root / np.linalg.det(root) ** (1.0 / (s.n + 1.0))
    s_prime = transform_support(s_vn, l_mat, g)
    curvature_bundle(s_prime, g)  # refit convexity check
    return s_prime, LinearMap.from_matrix(l_mat)


def distance_to_ball(s: SpectralSupport, g: SphericalGrid) -> float:
    """max_k |s(z_k) - 1| after volume normalization."""
    vals = sph.synthesize(s.coeffs, g)
    v = volume(s, g)
    scale = (unit_ball_volume(s.n) / v) ** (1.0 / (s.n + 1.0))
    return float(np.max(np.abs(scale * vals - 1.0)))
