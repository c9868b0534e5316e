"""Polar bodies, the centro-affine curvature pairing, and the expanding flow speed.

The polar body K* = {y : <x, y> <= 1 for all x in K} has support function
s*(u) = 1 / rho_K(u), with rho_K the radial function of K.  For smooth
strictly convex K the contact point of K* paired with the boundary point
x(z) of K is x*(z) = z / s(z), and the centro-affine curvatures at paired
points multiply to 1.
"""

from dataclasses import dataclass

import numpy as np

from . import sphere as sph
from .errors import ConvexityViolation
from .geometry import curvature_bundle, embedding
from .sphere import SpectralSupport, SphericalGrid

_NEWTON_ITERS = 20  # fixed damped-Newton iteration count for radial refinement
_COARSE_CHUNK = 256


@dataclass(frozen=True)
class PolarSupport:
    """Spectral fit of the polar body's support function.

    fit_residual is the max pointwise error of the fitted coefficients
    against the exact polar values 1/rho_K at the grid nodes.
    """

    support: SpectralSupport
    fit_residual: float


def _ambient_derivatives(c: np.ndarray, n: int, dirs: np.ndarray):
    """Value s, ambient gradient DS and ambient Hessian D2S of the
    1-homogeneous extension of the support function, at unit directions.

    DS(z) = s z + grad s is the boundary point; D2S has the
    radii-of-curvature matrix as its tangential block and annihilates z.
    """
    pf = sph.evaluate_with_derivatives(c, n, dirs)
    ds = pf.values[:, None] * dirs + np.einsum("ka,kai->ki", pf.grad, pf.frames)
    if n == 1:
        r11 = pf.hess[:, 0] + pf.values
        d2s = r11[:, None, None] * np.einsum(
            "ki,kj->kij", pf.frames[:, 0], pf.frames[:, 0]
        )
    else:
        r = pf.hess.copy()
        r[:, 0] += pf.values
        r[:, 2] += pf.values
        e1, e2 = pf.frames[:, 0], pf.frames[:, 1]
        d2s = (
            r[:, 0, None, None] * np.einsum("ki,kj->kij", e1, e1)
            + r[:, 1, None, None]
            * (np.einsum("ki,kj->kij", e1, e2) + np.einsum("ki,kj->kij", e2, e1))
            + r[:, 2, None, None] * np.einsum("ki,kj->kij", e2, e2)
        )
    return pf.values, ds, d2s, pf.frames


def _coarse_argmin(s_vals: np.ndarray, nodes: np.ndarray, dirs: np.ndarray):
    """Grid node minimizing s(z)/<z,u> on the open hemisphere <z,u> > 0."""
    best = np.empty(dirs.shape[0], dtype=int)
    for lo in range(0, dirs.shape[0], _COARSE_CHUNK):
        hi = min(lo + _COARSE_CHUNK, dirs.shape[0])
        dots = dirs[lo:hi] @ nodes.T
        with np.errstate(divide="ignore", invalid="ignore"):
            h = np.where(dots > 1e-9, s_vals[None, :] / dots, np.inf)
        best[lo:hi] = np.argmin(h, axis=1)
    return nodes[best]


def radial_function(
    s: SpectralSupport, g: SphericalGrid, dirs: np.ndarray
) -> np.ndarray:
    """rho_K(u) = min over <z,u> > 0 of s(z)/<z,u>.

    Coarse grid minimum followed by a fixed number of damped Newton steps on
    the sphere (objective extended 0-homogeneously, so its spherical Hessian
    is the tangential block of the ambient one).
    """
    dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    c = s.coeffs
    s_vals = sph.synthesize(c, g)
    z = _coarse_argmin(s_vals, g.nodes, dirs)
    dot = np.einsum("ki,ki->k", z, dirs)
    h = sph.evaluate_at(c, s.n, z) / dot

    for _ in range(_NEWTON_ITERS):
        vals, ds, d2s, frames = _ambient_derivatives(c, s.n, z)
        dot = np.einsum("ki,ki->k", z, dirs)
        inv = 1.0 / dot
        grad_h = ds * inv[:, None] - vals[:, None] * dirs * inv[:, None] ** 2
        hess_h = (
            d2s * inv[:, None, None]
            - (
                np.einsum("ki,kj->kij", ds, dirs)
                + np.einsum("ki,kj->kij", dirs, ds)
            )
            * inv[:, None, None] ** 2
            + 2.0 * vals[:, None, None] * np.einsum("ki,kj->kij", dirs, dirs)
            * inv[:, None, None] ** 3
        )
        gt = np.einsum("kai,ki->ka", frames, grad_h)
        ht = np.einsum("kai,kij,kbj->kab", frames, hess_h, frames)
        if s.n == 1:
            delta = -gt[:, 0] / np.maximum(np.abs(ht[:, 0, 0]), 1e-30)
            delta = delta[:, None] * np.sign(ht[:, 0, 0])[:, None]
        else:
            det = ht[:, 0, 0] * ht[:, 1, 1] - ht[:, 0, 1] ** 2
            tr = ht[:, 0, 0] + ht[:, 1, 1]
            pd = (det > 0) & (tr > 0)
            delta = np.empty_like(gt)
            safe_det = np.where(pd, det, 1.0)
            delta[:, 0] = -(ht[:, 1, 1] * gt[:, 0] - ht[:, 0, 1] * gt[:, 1]) / safe_det
            delta[:, 1] = -(ht[:, 0, 0] * gt[:, 1] - ht[:, 0, 1] * gt[:, 0]) / safe_det
            # gradient descent fallback where the Hessian is not PD
            gnorm = np.linalg.norm(gt, axis=1, keepdims=True)
            delta = np.where(pd[:, None], delta, -gt / np.maximum(gnorm, 1e-30))
        step = np.einsum("ka,kai->ki", delta, frames)

        # damped update: halve until the objective does not increase
        scale = np.ones(z.shape[0])
        z_new = z + step
        z_new /= np.linalg.norm(z_new, axis=1, keepdims=True)
        dot_new = np.einsum("ki,ki->k", z_new, dirs)
        h_new = np.where(
            dot_new > 1e-12,
            sph.evaluate_at(c, s.n, z_new) / np.where(dot_new > 1e-12, dot_new, 1.0),
            np.inf,
        )
        for _halving in range(25):
            worse = h_new > h * (1.0 + 1e-15)
            if not np.any(worse):
                break
            scale[worse] *= 0.5
            z_try = z + scale[:, None] * step
            z_try /= np.linalg.norm(z_try, axis=1, keepdims=True)
            dot_try = np.einsum("ki,ki->k", z_try, dirs)
            h_try = np.where(
                dot_try > 1e-12,
                sph.evaluate_at(c, s.n, z_try)
                / np.where(dot_try > 1e-12, dot_try, 1.0),
                np.inf,
            )
            z_new[worse] = z_try[worse]
            h_new[worse] = h_try[worse]
        keep = h_new <= h
        z = np.where(keep[:, None], z_new, z)
        h = np.where(keep, h_new, h)
    return h


def polar_support(s: SpectralSupport, g: SphericalGrid) -> PolarSupport:
    """Spectral fit of s*(u) = 1/rho_K(u) at the grid nodes.

    Raises ConvexityViolation if the fitted polar fails the convexity check
    (l_max too small for an elongated body).
    """
    rho = radial_function(s, g, g.nodes)
    exact = 1.0 / rho
    c = sph.project_even(sph.analyze(exact, g, l_max=s.l_max), s.n)
    polar = SpectralSupport(s.n, s.l_max, c)
    curvature_bundle(polar, g)  # convexity check of the fit
    residual = float(np.max(np.abs(sph.synthesize(c, g) - exact)))
    return PolarSupport(polar, residual)


def centro_affine_identity_residual(
    s: SpectralSupport, g: SphericalGrid, polar: PolarSupport | None = None
) -> float:
    """max_k |K0(z_k) * K0*(u_k) - 1| over the grid.

    The polar contact point of x(z) is x*(z) = z/s(z); the outward normal of
    the polar body there is u = x(z)/|x(z)|, where K0* is evaluated
    spectrally off-grid.
    """
    if polar is None:
        polar = polar_support(s, g)
    bundle = curvature_bundle(s, g)
    x = embedding(s, g, bundle)
    u = x / np.linalg.norm(x, axis=1, keepdims=True)
    k0_polar = centro_affine_curvature_at(polar.support, u)
    return float(np.max(np.abs(bundle.K0 * k0_polar - 1.0)))


def centro_affine_curvature_at(s: SpectralSupport, dirs: np.ndarray) -> np.ndarray:
    """K0 = K / s^{n+2} at arbitrary unit directions (frame invariant)."""
    pf = sph.evaluate_with_derivatives(s.coeffs, s.n, np.atleast_2d(dirs))
    if s.n == 1:
        s_n = pf.hess[:, 0] + pf.values
    else:
        r11 = pf.hess[:, 0] + pf.values
        r22 = pf.hess[:, 2] + pf.values
        s_n = r11 * r22 - pf.hess[:, 1] ** 2
    if np.any(s_n <= 0.0):
        raise ConvexityViolation("non-convex off-grid evaluation")
    return 1.0 / (s_n * pf.values ** (s.n + 2))


def dual_flow_rhs(
    s_polar: SpectralSupport, g: SphericalGrid, p: float, bundle=None
) -> np.ndarray:
    """Speed of the expanding flow: + s* (K*/s*^{n+2})^{-p/(n+1+p)}."""
    if bundle is None:
        bundle = curvature_bundle(s_polar, g)
    expo = -p / (g.n + 1.0 + p)
    return bundle.s * bundle.K0**expo
