"""Grids, quadrature, spectral transforms and covariant derivatives on S^1 and S^2.

A scalar field lives in two forms: per-node samples on a quadrature grid, and
a coefficient vector over an orthonormal real harmonic basis (circular
harmonics on S^1, real spherical harmonics on S^2).  Coefficients are
authoritative; nonlinear expressions are evaluated pointwise on the grid and
re-analyzed.

Basis ordering is degree-major.  On S^1 the vector is
[1, cos th, sin th, cos 2th, sin 2th, ...] (each normalized); on S^2 degree l
contributes the m = 0 harmonic followed by (cos, sin) pairs for m = 1..l.
The "order" of a basis function is +m for cosine terms and -m for sine terms.
"""

from dataclasses import dataclass

import numpy as np

from .errors import CentroflowError

TWO_PI = 2.0 * np.pi
FOUR_PI = 4.0 * np.pi

# Off-grid tensor evaluation uses the (theta, phi) chart; directions closer to
# a pole than this (in sin theta) are nudged onto this ring so the 1/sin
# factors stay well conditioned.
_POLE_NUDGE = 1e-4


def sphere_area(n: int) -> float:
    return TWO_PI if n == 1 else FOUR_PI


def basis_size(n: int, l_max: int) -> int:
    return 2 * l_max + 1 if n == 1 else (l_max + 1) ** 2


def degrees_orders(n: int, l_max: int):
    """Degree and order arrays for the flat coefficient layout."""
    deg = []
    order = []
    if n == 1:
        deg.append(0)
        order.append(0)
        for k in range(1, l_max + 1):
            deg += [k, k]
            order += [k, -k]
    else:
        for l in range(l_max + 1):
            deg.append(l)
            order.append(0)
            for m in range(1, l + 1):
                deg += [l, l]
                order += [m, -m]
    return np.array(deg), np.array(order)


def l_max_from_size(n: int, size: int) -> int:
    if n == 1:
        if size % 2 == 0:
            raise ValueError(f"invalid S^1 coefficient count {size}")
        return (size - 1) // 2
    l = int(round(np.sqrt(size))) - 1
    if (l + 1) ** 2 != size:
        raise ValueError(f"invalid S^2 coefficient count {size}")
    return l


# ---------------------------------------------------------------------------
# Normalized associated Legendre functions (Condon-Shortley phase).
# Pbar_l^m(cos th) is normalized so that the real spherical harmonics
#   Y_{l,0} = Pbar_l^0,  Y_{l,m}^{cos/sin} = sqrt(2) Pbar_l^m {cos,sin}(m phi)
# are orthonormal with respect to the area measure on S^2.
# ---------------------------------------------------------------------------


def _lm_index(l: int, m: int) -> int:
    return l * (l + 1) // 2 + m


def _alf_tables(l_max: int, ct: np.ndarray, st: np.ndarray):
    """Values and theta-derivatives of Pbar_l^m at cos theta = ct.

    Returns arrays of shape (len(ct), (l_max+1)(l_max+2)/2), packed by
    _lm_index.  Stable for the degrees used here (l <= a few hundred).
    """
    npts = ct.shape[0]
    n_lm = (l_max + 1) * (l_max + 2) // 2
    P = np.zeros((npts, n_lm))
    P[:, 0] = np.sqrt(1.0 / FOUR_PI)
    for m in range(1, l_max + 1):
        P[:, _lm_index(m, m)] = (
            -np.sqrt((2.0 * m + 1.0) / (2.0 * m)) * st * P[:, _lm_index(m - 1, m - 1)]
        )
    for m in range(l_max):
        P[:, _lm_index(m + 1, m)] = np.sqrt(2.0 * m + 3.0) * ct * P[:, _lm_index(m, m)]
    for m in range(l_max + 1):
        for l in range(m + 2, l_max + 1):
            a = np.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            P[:, _lm_index(l, m)] = a * (
                ct * P[:, _lm_index(l - 1, m)] - b * P[:, _lm_index(l - 2, m)]
            )

    # d/dtheta via the order-shift identity; Pbar_l^{-1} = -Pbar_l^1.
    dP = np.zeros_like(P)
    for l in range(1, l_max + 1):
        for m in range(l + 1):
            up = (
                np.sqrt((l - m) * (l + m + 1.0)) * P[:, _lm_index(l, m + 1)]
                if m + 1 <= l
                else 0.0
            )
            if m >= 1:
                down = np.sqrt((l + m) * (l - m + 1.0)) * P[:, _lm_index(l, m - 1)]
            else:
                down = -np.sqrt(l * (l + 1.0)) * P[:, _lm_index(l, 1)]
            dP[:, _lm_index(l, m)] = 0.5 * (up - down)
    return P, dP


def _angles_s2(dirs: np.ndarray):
    """(sin theta, cos theta, phi) for unit directions, nudged off the poles."""
    st = np.hypot(dirs[:, 0], dirs[:, 1])
    ct = dirs[:, 2].copy()
    phi = np.arctan2(dirs[:, 1], dirs[:, 0])
    near = st < _POLE_NUDGE
    if np.any(near):
        st = st.copy()
        st[near] = _POLE_NUDGE
        ct[near] = np.sign(ct[near]) * np.sqrt(1.0 - _POLE_NUDGE**2)
    return st, ct, phi


def _basis_s2(l_max: int, dirs: np.ndarray, want_theta: bool = True):
    """Basis value matrix (and theta-derivative matrix) at arbitrary directions."""
    st, ct, phi = _angles_s2(dirs)
    P, dP = _alf_tables(l_max, ct, st)
    npts = dirs.shape[0]
    m_arr = np.arange(l_max + 1)
    cosm = np.cos(phi[:, None] * m_arr[None, :])
    sinm = np.sin(phi[:, None] * m_arr[None, :])
    M = basis_size(2, l_max)
    Y = np.empty((npts, M))
    Yt = np.empty((npts, M)) if want_theta else None
    rt2 = np.sqrt(2.0)
    col = 0
    for l in range(l_max + 1):
        Y[:, col] = P[:, _lm_index(l, 0)]
        if want_theta:
            Yt[:, col] = dP[:, _lm_index(l, 0)]
        col += 1
        for m in range(1, l + 1):
            pc = rt2 * P[:, _lm_index(l, m)]
            Y[:, col] = pc * cosm[:, m]
            Y[:, col + 1] = pc * sinm[:, m]
            if want_theta:
                dc = rt2 * dP[:, _lm_index(l, m)]
                Yt[:, col] = dc * cosm[:, m]
                Yt[:, col + 1] = dc * sinm[:, m]
            col += 2
    return Y, Yt, st, ct, phi


def _basis_s1(l_max: int, theta: np.ndarray):
    npts = theta.shape[0]
    M = basis_size(1, l_max)
    Y = np.empty((npts, M))
    Y[:, 0] = 1.0 / np.sqrt(TWO_PI)
    inv_rt_pi = 1.0 / np.sqrt(np.pi)
    for k in range(1, l_max + 1):
        Y[:, 2 * k - 1] = np.cos(k * theta) * inv_rt_pi
        Y[:, 2 * k] = np.sin(k * theta) * inv_rt_pi
    return Y


# ---------------------------------------------------------------------------
# Grid
# ---------------------------------------------------------------------------


class SphericalGrid:
    """Quadrature nodes, weights and tangent frames on S^n, n in {1, 2}.

    Immutable after construction except for the lazily built transform
    tables, which only grow.
    """

    def __init__(self, n, resolution, l_max):
        self.n = n
        self.resolution = resolution
        self.l_max = l_max
        if n == 1:
            (num,) = resolution
            theta = TWO_PI * np.arange(num) / num
            self.nodes = np.column_stack([np.cos(theta), np.sin(theta)])
            self.weights = np.full(num, TWO_PI / num)
            self.frames = np.column_stack([-np.sin(theta), np.cos(theta)]).reshape(
                num, 1, 2
            )
            self._theta = theta
        else:
            nlat, nlon = resolution
            x, wgl = np.polynomial.legendre.leggauss(nlat)
            theta_lat = np.arccos(x)
            phi_lon = TWO_PI * np.arange(nlon) / nlon
            ct = np.repeat(x, nlon)
            st = np.repeat(np.sin(theta_lat), nlon)
            phi = np.tile(phi_lon, nlat)
            cp, sp = np.cos(phi), np.sin(phi)
            self.nodes = np.column_stack([st * cp, st * sp, ct])
            self.weights = np.repeat(wgl, nlon) * (TWO_PI / nlon)
            e_theta = np.column_stack([ct * cp, ct * sp, -st])
            e_phi = np.column_stack([-sp, cp, np.zeros_like(cp)])
            self.frames = np.stack([e_theta, e_phi], axis=1)
            self._st, self._ct = st, ct
        self.num_nodes = self.nodes.shape[0]
        self.area = float(np.sum(self.weights))
        self._tables_l = -1
        self._Y = None
        self._Yt = None
        self.degrees, self.orders = degrees_orders(n, l_max)
        # index of the (cos, sin) partner of each basis function (self for m=0)
        partner = np.arange(basis_size(n, l_max))
        swap = self.orders != 0
        partner[swap] = np.where(self.orders[swap] > 0, partner[swap] + 1, partner[swap] - 1)
        self._partner = partner

    # -- lazy transform tables ---------------------------------------------

    def _ensure_tables(self, l_need):
        if l_need > self.l_max:
            raise CentroflowError(
                f"truncation degree {l_need} exceeds grid capability {self.l_max}"
            )
        if l_need <= self._tables_l:
            return
        if self.n == 1:
            self._Y = _basis_s1(self.l_max, self._theta)
        else:
            self._Y, self._Yt, _, _, _ = _basis_s2(self.l_max, self.nodes)
        self._tables_l = self.l_max

    # -- coefficient-space operators ---------------------------------------

    def _dlon(self, c):
        """Derivative along the periodic angle (theta on S^1, phi on S^2)."""
        m = self.orders[: c.shape[0]]
        out = np.zeros_like(c)
        out[m != 0] = c[self._partner[: c.shape[0]]][m != 0]
        return out * m

    def _lap_factor(self, size):
        d = self.degrees[:size]
        return -d * (d + 1.0) if self.n == 2 else -(d.astype(float) ** 2)

    def even_mask(self, size):
        return self.degrees[:size] % 2 == 0


def build_grid(n: int, resolution, l_max: int | None = None) -> SphericalGrid:
    """Quadrature grid on S^n.

    ``resolution`` is a node count for n=1 and a (latitude, longitude) pair
    for n=2.  The grid integrates products of basis functions exactly up to
    degree 2*l_max.
    """
    if n not in (1, 2):
        raise ValueError(f"unsupported dimension n={n}")
    if n == 1:
        if np.ndim(resolution) != 0:
            (resolution,) = resolution
        num = int(resolution)
        cap = (num - 1) // 2
        if l_max is None:
            l_max = cap
        if num < max(4, 2 * l_max + 1):
            raise ValueError(f"resolution below minimum: {num} nodes for l_max={l_max}")
        return SphericalGrid(1, (num,), l_max)
    nlat, nlon = (int(r) for r in resolution)
    cap = min(nlat - 1, (nlon - 1) // 2)
    if l_max is None:
        l_max = cap
    if nlat < l_max + 1 or nlon < 2 * l_max + 1:
        raise ValueError(
            f"resolution below minimum: {nlat}x{nlon} grid for l_max={l_max}"
        )
    return SphericalGrid(2, (nlat, nlon), l_max)


def grid_for(n: int, l_max: int) -> SphericalGrid:
    """Grid sized by the 3/2 dealiasing rule for truncation l_max."""
    if n == 1:
        return build_grid(1, max(3 * l_max, 8), l_max)
    nlat = int(np.ceil(1.5 * (l_max + 1)))
    return build_grid(2, (nlat, 2 * nlat), l_max)


# ---------------------------------------------------------------------------
# Transforms
# ---------------------------------------------------------------------------


def synthesize(c: np.ndarray, g: SphericalGrid) -> np.ndarray:
    """Pointwise basis summation of coefficients on the grid nodes."""
    l = l_max_from_size(g.n, c.shape[0])
    g._ensure_tables(l)
    return g._Y[:, : c.shape[0]] @ c


def analyze(f: np.ndarray, g: SphericalGrid, l_max: int | None = None) -> np.ndarray:
    """Coefficients c_i = sum_k w_k f(z_k) B_i(z_k); exact for band-limited f."""
    if f.shape[0] != g.num_nodes:
        raise ValueError(f"field has {f.shape[0]} samples, grid has {g.num_nodes} nodes")
    if l_max is None:
        l_max = g.l_max
    g._ensure_tables(l_max)
    return g._Y[:, : basis_size(g.n, l_max)].T @ (g.weights * f)


def integrate(f: np.ndarray, g: SphericalGrid) -> float:
    if f.shape[0] != g.num_nodes:
        raise ValueError(f"field has {f.shape[0]} samples, grid has {g.num_nodes} nodes")
    return float(np.dot(g.weights, f))


def project_even(c: np.ndarray, n: int) -> np.ndarray:
    """Zero all odd-degree coefficients (central symmetry).  Idempotent."""
    deg, _ = degrees_orders(n, l_max_from_size(n, c.shape[0]))
    out = c.copy()
    out[deg % 2 == 1] = 0.0
    return out


def _fields(c: np.ndarray, g: SphericalGrid):
    """Value, frame gradient and packed covariant Hessian on the grid nodes.

    Hessian packing: [H_11] for n=1, [H_11, H_12, H_22] for n=2, components in
    the per-node orthonormal frame.
    """
    size = c.shape[0]
    l = l_max_from_size(g.n, size)
    g._ensure_tables(l)
    Y = g._Y[:, :size]
    if g.n == 1:
        V = Y @ np.column_stack([c, g._dlon(c), g._lap_factor(size) * c])
        s = V[:, 0]
        grad = V[:, 1:2]
        hess = V[:, 2:3]
        return s, grad, hess
    Yt = g._Yt[:, :size]
    dphi_c = g._dlon(c)
    V1 = Y @ np.column_stack(
        [c, dphi_c, g._dlon(dphi_c), g._lap_factor(size) * c]
    )
    V2 = Yt @ np.column_stack([c, dphi_c])
    s, f_p, f_pp, lap = V1.T
    f_t, f_tp = V2.T
    st, ct = g._st, g._ct
    inv_st = 1.0 / st
    grad = np.column_stack([f_t, f_p * inv_st])
    h22 = f_pp * inv_st**2 + ct * inv_st * f_t
    h12 = f_tp * inv_st - ct * inv_st**2 * f_p
    h11 = lap - h22
    return s, grad, np.column_stack([h11, h12, h22])


def gradient(c: np.ndarray, g: SphericalGrid) -> np.ndarray:
    """Covariant gradient in the per-node orthonormal frame, shape (N, n)."""
    return _fields(c, g)[1]


def covariant_hessian(c: np.ndarray, g: SphericalGrid) -> np.ndarray:
    """Packed covariant Hessian in the per-node orthonormal frame."""
    return _fields(c, g)[2]


# ---------------------------------------------------------------------------
# Off-grid evaluation
# ---------------------------------------------------------------------------


@dataclass
class PointFields:
    """Field data at arbitrary unit directions: value, frame gradient, packed
    covariant Hessian, and the tangent frames used (shape (npts, n, n+1))."""

    values: np.ndarray
    grad: np.ndarray
    hess: np.ndarray
    frames: np.ndarray


def evaluate_at(c: np.ndarray, n: int, dirs: np.ndarray) -> np.ndarray:
    """Exact basis summation at arbitrary unit directions."""
    dirs = np.atleast_2d(dirs)
    l = l_max_from_size(n, c.shape[0])
    if n == 1:
        theta = np.arctan2(dirs[:, 1], dirs[:, 0])
        return _basis_s1(l, theta) @ c
    Y, _, _, _, _ = _basis_s2(l, dirs, want_theta=False)
    return Y @ c


def evaluate_with_derivatives(c: np.ndarray, n: int, dirs: np.ndarray) -> PointFields:
    """Value, gradient and covariant Hessian at arbitrary unit directions.

    Directions within _POLE_NUDGE of a pole (n=2) are nudged onto a ring at
    sin theta = _POLE_NUDGE; fields are evaluated at the nudged point.
    """
    dirs = np.atleast_2d(dirs)
    size = c.shape[0]
    l = l_max_from_size(n, size)
    deg, order = degrees_orders(n, l)
    if n == 1:
        theta = np.arctan2(dirs[:, 1], dirs[:, 0])
        Y = _basis_s1(l, theta)
        dc = np.zeros_like(c)
        dc[order != 0] = c[np.where(order > 0, np.arange(size) + 1, np.arange(size) - 1)][
            order != 0
        ]
        dc *= order
        V = Y @ np.column_stack([c, dc, -(deg.astype(float) ** 2) * c])
        frames = np.column_stack([-np.sin(theta), np.cos(theta)]).reshape(-1, 1, 2)
        return PointFields(V[:, 0], V[:, 1:2], V[:, 2:3], frames)
    Y, Yt, st, ct, phi = _basis_s2(l, dirs)
    partner = np.arange(size)
    swap = order != 0
    partner[swap] = np.where(order[swap] > 0, partner[swap] + 1, partner[swap] - 1)
    dphi_c = np.zeros_like(c)
    dphi_c[swap] = c[partner][swap]
    dphi_c *= order
    dphi2_c = np.zeros_like(c)
    dphi2_c[swap] = dphi_c[partner][swap]
    dphi2_c *= order
    lap_c = -deg * (deg + 1.0) * c
    V1 = Y @ np.column_stack([c, dphi_c, dphi2_c, lap_c])
    V2 = Yt @ np.column_stack([c, dphi_c])
    s, f_p, f_pp, lap = V1.T
    f_t, f_tp = V2.T
    inv_st = 1.0 / st
    grad = np.column_stack([f_t, f_p * inv_st])
    h22 = f_pp * inv_st**2 + ct * inv_st * f_t
    h12 = f_tp * inv_st - ct * inv_st**2 * f_p
    h11 = lap - h22
    cp, sp = np.cos(phi), np.sin(phi)
    e_theta = np.column_stack([ct * cp, ct * sp, -st])
    e_phi = np.column_stack([-sp, cp, np.zeros_like(cp)])
    frames = np.stack([e_theta, e_phi], axis=1)
    return PointFields(s, grad, np.column_stack([h11, h12, h22]), frames)


# ---------------------------------------------------------------------------
# Support functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectralSupport:
    """Even-degree harmonic coefficients of a support function.

    Invariants: odd-degree coefficients are identically zero (central
    symmetry) and the degree-0 coefficient is strictly positive (the body
    contains the origin).
    """

    n: int
    l_max: int
    coeffs: np.ndarray

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError(f"unsupported dimension n={self.n}")
        if self.coeffs.shape[0] != basis_size(self.n, self.l_max):
            raise ValueError("coefficient count does not match l_max")
        deg, _ = degrees_orders(self.n, self.l_max)
        if np.any(self.coeffs[deg % 2 == 1] != 0.0):
            raise ValueError("odd-degree coefficients must be identically zero")
        if self.coeffs[0] <= 0.0:
            raise ValueError("degree-0 coefficient must be positive")

    @classmethod
    def from_coeffs(cls, n: int, coeffs: np.ndarray) -> "SpectralSupport":
        """Build from a raw coefficient vector, projecting out odd degrees."""
        c = project_even(np.asarray(coeffs, dtype=float), n)
        return cls(n, l_max_from_size(n, c.shape[0]), c)

    def with_coeffs(self, coeffs: np.ndarray) -> "SpectralSupport":
        return SpectralSupport.from_coeffs(self.n, coeffs)

    def value_at(self, dirs: np.ndarray) -> np.ndarray:
        return evaluate_at(self.coeffs, self.n, dirs)


def ball_support(n: int, radius: float, l_max: int) -> SpectralSupport:
    c = np.zeros(basis_size(n, l_max))
    c[0] = radius * np.sqrt(sphere_area(n))
    return SpectralSupport(n, l_max, c)


def tail_energy_fraction(s: SpectralSupport) -> float:
    """Energy fraction of coefficients above 0.9 * l_max (degree 0 excluded)."""
    deg, _ = degrees_orders(s.n, s.l_max)
    c = s.coeffs
    total = float(np.sum(c[deg > 0] ** 2))
    if total == 0.0:
        return 0.0
    tail = float(np.sum(c[deg >= 0.9 * s.l_max] ** 2))
    return np.sqrt(tail / total)
