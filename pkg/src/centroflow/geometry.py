"""Curvature and integral geometry of a convex body given by its support function.

All quantities are functions of the outward normal z on S^n: the
radii-of-curvature matrix r = Hess s + s I (orthonormal frame), its
determinant S_n, Gauss curvature K = 1/S_n, principal curvatures kappa_i,
mean curvature H, and the centro-affine curvature K0 = K / s^{n+2}, which is
invariant under volume-preserving linear maps and constant exactly on
centered ellipsoids.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConvexityViolation
from .sphere import SpectralSupport, SphericalGrid, _fields, integrate

#: volume of the unit ball in R^{n+1}
UNIT_BALL_VOLUME = {1: np.pi, 2: 4.0 * np.pi / 3.0}


def unit_ball_volume(n: int) -> float:
    return UNIT_BALL_VOLUME[n]


def isoperimetric_bound(n: int, p: float) -> float:
    """Sharp upper bound (n+1)^{n+p+1} omega^{2p} of the p-affine ratio."""
    return (n + 1.0) ** (n + p + 1.0) * unit_ball_volume(n) ** (2.0 * p)


@dataclass
class CurvatureBundle:
    """Per-node curvature data of a strictly convex body."""

    s: np.ndarray          # support values
    grad: np.ndarray       # frame components of grad s, shape (N, n)
    r: np.ndarray          # packed radii-of-curvature matrix, (N, 1) or (N, 3)
    S_n: np.ndarray        # det r = 1/K
    K: np.ndarray          # Gauss curvature
    lam: np.ndarray        # eigenvalues of r, shape (N, n), ascending
    kappa: np.ndarray      # principal curvatures 1/lam, shape (N, n)
    H: np.ndarray          # mean curvature
    K0: np.ndarray         # centro-affine curvature K / s^{n+2}

    @property
    def n(self) -> int:
        return self.lam.shape[1]

    def rescaled(self, scale: float) -> "CurvatureBundle":
        """Bundle of the dilated body s -> scale * s (exact homogeneity)."""
        n = self.n
        return CurvatureBundle(
            s=self.s * scale,
            grad=self.grad * scale,
            r=self.r * scale,
            S_n=self.S_n * scale**n,
            K=self.K / scale**n,
            lam=self.lam * scale,
            kappa=self.kappa / scale,
            H=self.H / scale,
            K0=self.K0 / scale ** (2 * n + 2),
        )


@dataclass
class BodyMetrics:
    """Scalar functionals of a body at a fixed exponent p."""

    p: float
    volume: float
    omega_p: float
    ratio: float
    deficit: float
    r_minus: float
    r_plus: float


def curvature_bundle(
    s: SpectralSupport, g: SphericalGrid, eps_convex: float = 1e-8
) -> CurvatureBundle:
    """Curvature data at every grid node.

    Raises ConvexityViolation if min s <= 0 or any radius-of-curvature
    eigenvalue falls below eps_convex times the largest one.
    """
    vals, grad, hess = _fields(s.coeffs, g)
    if np.min(vals) <= 0.0:
        raise ConvexityViolation("support function is not positive (origin not interior)")
    if g.n == 1:
        r = hess + vals[:, None]
        lam = r
        S_n = r[:, 0]
    else:
        r = hess.copy()
        r[:, 0] += vals
        r[:, 2] += vals
        half_tr = 0.5 * (r[:, 0] + r[:, 2])
        disc = np.sqrt((0.5 * (r[:, 0] - r[:, 2])) ** 2 + r[:, 1] ** 2)
        lam = np.column_stack([half_tr - disc, half_tr + disc])
        S_n = r[:, 0] * r[:, 2] - r[:, 1] ** 2
    lam_min = float(np.min(lam))
    lam_max = float(np.max(lam))
    if lam_min <= eps_convex * lam_max:
        raise ConvexityViolation(
            f"radius-of-curvature eigenvalue {lam_min:.3e} below floor "
            f"({eps_convex:.1e} x max {lam_max:.3e})"
        )
    K = 1.0 / S_n
    kappa = 1.0 / lam
    return CurvatureBundle(
        s=vals,
        grad=grad,
        r=r,
        S_n=S_n,
        K=K,
        lam=lam,
        kappa=kappa,
        H=np.sum(kappa, axis=1),
        K0=K / vals ** (g.n + 2),
    )


def embedding(
    s: SpectralSupport, g: SphericalGrid, bundle: CurvatureBundle | None = None
) -> np.ndarray:
    """Boundary points x(z) = s(z) z + grad s(z), shape (N, n+1)."""
    if bundle is None:
        vals, grad, _ = _fields(s.coeffs, g)
    else:
        vals, grad = bundle.s, bundle.grad
    return vals[:, None] * g.nodes + np.einsum("ka,kai->ki", grad, g.frames)


def volume(
    s: SpectralSupport, g: SphericalGrid, bundle: CurvatureBundle | None = None
) -> float:
    """V = 1/(n+1) * integral of s * S_n over S^n."""
    if bundle is None:
        bundle = curvature_bundle(s, g)
    return integrate(bundle.s * bundle.S_n, g) / (g.n + 1.0)


def p_affine_area(
    s: SpectralSupport,
    g: SphericalGrid,
    p: float,
    bundle: CurvatureBundle | None = None,
) -> float:
    """Omega_p = integral of (s/K) (K/s^{n+2})^{p/(n+1+p)} over S^n."""
    if p < 1.0:
        raise ValueError(f"p must be >= 1, got {p}")
    if bundle is None:
        bundle = curvature_bundle(s, g)
    expo = p / (g.n + 1.0 + p)
    return integrate(bundle.s * bundle.S_n * bundle.K0**expo, g)


def isoperimetric_ratio(
    s: SpectralSupport,
    g: SphericalGrid,
    p: float,
    bundle: CurvatureBundle | None = None,
):
    """(ratio, deficit) with ratio = Omega_p^{n+p+1} / V^{n+1-p}.

    The deficit 1 - ratio / bound vanishes exactly on centered ellipsoids
    and is positive otherwise.
    """
    if bundle is None:
        bundle = curvature_bundle(s, g)
    n = g.n
    V = volume(s, g, bundle)
    om = p_affine_area(s, g, p, bundle)
    ratio = om ** (n + p + 1.0) / V ** (n + 1.0 - p)
    return ratio, 1.0 - ratio / isoperimetric_bound(n, p)


def inner_outer_radius(
    s: SpectralSupport, g: SphericalGrid, bundle: CurvatureBundle | None = None
):
    """(r_-, r_+): inradius min s and circumradius max |x| (origin centered)."""
    if bundle is None:
        vals, grad, _ = _fields(s.coeffs, g)
    else:
        vals, grad = bundle.s, bundle.grad
    r_plus = np.sqrt(np.max(vals**2 + np.sum(grad**2, axis=1)))
    return float(np.min(vals)), float(r_plus)


def body_metrics(
    s: SpectralSupport,
    g: SphericalGrid,
    p: float,
    bundle: CurvatureBundle | None = None,
) -> BodyMetrics:
    if bundle is None:
        bundle = curvature_bundle(s, g)
    V = volume(s, g, bundle)
    om = p_affine_area(s, g, p, bundle)
    n = g.n
    ratio = om ** (n + p + 1.0) / V ** (n + 1.0 - p)
    deficit = 1.0 - ratio / isoperimetric_bound(n, p)
    r_minus, r_plus = inner_outer_radius(s, g, bundle)
    return BodyMetrics(
        p=p,
        volume=V,
        omega_p=om,
        ratio=ratio,
        deficit=deficit,
        r_minus=r_minus,
        r_plus=r_plus,
    )
