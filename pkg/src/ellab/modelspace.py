"""Smooth weighted model spaces (R^n, euclidean metric, e^-phi dx).

Only radial weights are supported: every curvature and Laplacian computation
then reduces to one radial variable, which keeps the PDE side of the lab
one-dimensional.  The curvature object is

    Hess(phi) - (1/(N-n)) dphi (x) dphi        (ambient Ricci is zero)

whose eigenvalues split into a radial curve phi'' - phi'^2/(N-n) and a
tangential curve phi'(r)/r of multiplicity n-1.  The effective lower bound
-K is the minimum of the two curves over the working domain.

The module also carries the lab's exact laboratory family: for N > 3 and a
subcritical exponent the logarithmic weight

    phi(r) = gamma * ln(mu^2 + r^2),   gamma = (n - 2 - 4/(alpha-1)) / 2

admits the closed-form positive solution of  lap_w(u) + u^alpha = 0

    u(r) = ( mu * sqrt(4n/(alpha-1)) / (mu^2 + r^2) )^(2/(alpha-1))

with zero residual, used throughout as the exactness and sharpness oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar

from .errors import DimensionMismatch, InvalidAlpha


@dataclass(frozen=True)
class WeightedSpace:
    """(R^n, e^-phi dx) with synthetic dimension N >= n and radial weight phi."""

    n: int
    N: float
    phi: Callable[[np.ndarray], np.ndarray]
    dphi: Callable[[np.ndarray], np.ndarray]
    d2phi: Callable[[np.ndarray], np.ndarray]
    weight_kind: str = "custom-radial"
    weight_params: tuple = ()

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("ambient dimension must be >= 1")
        if self.N < self.n:
            raise ValueError("synthetic dimension must satisfy N >= n")
        if self.N == self.n and self.weight_kind != "zero":
            for r in (0.3, 1.0, 7.0):
                if abs(float(self.dphi(np.float64(r)))) > 1e-14:
                    raise ValueError("N == n requires an identically zero weight")
        if abs(float(self.dphi(np.float64(0.0)))) > 1e-8:
            raise ValueError("phi'(0) must vanish for smoothness at the origin")


def flat(n: int, N: Optional[float] = None) -> WeightedSpace:
    zero = lambda r: np.zeros_like(np.asarray(r, dtype=float))
    return WeightedSpace(n, float(N if N is not None else n), zero, zero, zero,
                         weight_kind="zero")


def log_weight_space(n: int, N: float, gamma: float, mu: float,
                     kind: str = "appendix") -> WeightedSpace:
    """Weight gamma * ln(mu^2 + r^2)."""
    mu2 = mu * mu

    def phi(r):
        return gamma * np.log(mu2 + np.asarray(r, dtype=float) ** 2)

    def dphi(r):
        r = np.asarray(r, dtype=float)
        return 2.0 * gamma * r / (mu2 + r**2)

    def d2phi(r):
        r = np.asarray(r, dtype=float)
        return 2.0 * gamma * (mu2 - r**2) / (mu2 + r**2) ** 2

    return WeightedSpace(n, N, phi, dphi, d2phi,
                         weight_kind=kind, weight_params=(gamma, mu))


def table_weight_space(n: int, N: float, r_nodes, phi_values) -> WeightedSpace:
    """Tabulated radial weight, interpolated by a clamped cubic spline."""
    r_nodes = np.asarray(r_nodes, dtype=float)
    vals = np.asarray(phi_values, dtype=float)
    sp = CubicSpline(r_nodes, vals, bc_type=((1, 0.0), "not-a-knot"))
    d1, d2 = sp.derivative(1), sp.derivative(2)
    return WeightedSpace(n, N, sp, d1, d2, weight_kind="table",
                         weight_params=(tuple(r_nodes), tuple(vals)))


# ---------------------------------------------------------------------------
# curvature


def radial_eigenvalue(space: WeightedSpace, r) -> np.ndarray:
    """Eigenvalue along the radial direction: phi'' - phi'^2/(N-n)."""
    r = np.asarray(r, dtype=float)
    out = np.asarray(space.d2phi(r), dtype=float).copy()
    if space.N > space.n:
        out = out - np.asarray(space.dphi(r), dtype=float) ** 2 / (space.N - space.n)
    return out


def tangential_eigenvalue(space: WeightedSpace, r) -> np.ndarray:
    """Eigenvalue on the sphere directions: phi'(r)/r, extended by phi''(0)."""
    r = np.asarray(r, dtype=float)
    out = np.empty_like(r, dtype=float)
    small = np.abs(r) < 1e-12
    if np.any(~small):
        rr = r[~small]
        out[~small] = np.asarray(space.dphi(rr), dtype=float) / rr
    if np.any(small):
        out[small] = np.asarray(space.d2phi(r[small]), dtype=float)
    return out


def ricci_tensor(space: WeightedSpace, x) -> np.ndarray:
    """Curvature matrix Hess(phi) - dphi(x)dphi/(N-n) at a point of R^n."""
    x = np.asarray(x, dtype=float)
    if x.shape != (space.n,):
        raise DimensionMismatch(f"point has shape {x.shape}, ambient n = {space.n}")
    r = float(np.linalg.norm(x))
    eye = np.eye(space.n)
    if r < 1e-12:
        return float(space.d2phi(np.float64(0.0))) * eye
    e = x / r
    proj_rad = np.outer(e, e)
    proj_tan = eye - proj_rad
    lam_rad = float(radial_eigenvalue(space, r))
    lam_tan = float(tangential_eigenvalue(space, r))
    return lam_rad * proj_rad + lam_tan * proj_tan


@dataclass(frozen=True)
class CurvatureReport:
    minimum: float
    argmin_r: float
    which: str  # "radial" or "tangential"
    K: float    # effective lower-bound constant, max(0, -minimum)
    r_max: float

    def as_dict(self) -> dict:
        return {"minimum": self.minimum, "argmin_r": self.argmin_r,
                "which": self.which, "K": self.K, "r_max": self.r_max}


def _refine_min(fn, grid: np.ndarray) -> tuple[float, float]:
    vals = fn(grid)
    i = int(np.argmin(vals))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    if hi > lo:
        res = minimize_scalar(lambda r: float(fn(np.float64(r))),
                              bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-13 * max(1.0, hi)})
        if res.fun < vals[i]:
            return float(res.fun), float(res.x)
    return float(vals[i]), float(grid[i])


def curvature_bound(space: WeightedSpace, r_max: float, samples: int = 4096) -> CurvatureReport:
    """Minimum of both eigenvalue curves over [0, r_max] and the implied K."""
    if r_max <= 0:
        raise ValueError("r_max must be positive")
    grid = np.linspace(0.0, r_max, samples)
    m_rad, r_rad = _refine_min(lambda r: radial_eigenvalue(space, r), grid)
    m_tan, r_tan = _refine_min(lambda r: tangential_eigenvalue(space, r), grid)
    if m_rad <= m_tan:
        minimum, argmin, which = m_rad, r_rad, "radial"
    else:
        minimum, argmin, which = m_tan, r_tan, "tangential"
    return CurvatureReport(minimum, argmin, which, max(0.0, -minimum), r_max)


# ---------------------------------------------------------------------------
# exact laboratory family


def ambient_dimension(N: float) -> int:
    """Largest integer strictly below N."""
    n = math.ceil(N) - 1
    return n


def decay_coefficient(n: int, alpha: float) -> float:
    """(n - 2 - 4/(alpha-1)) / 2, the log-weight strength."""
    return 0.5 * (n - 2.0 - 4.0 / (alpha - 1.0))


@dataclass(frozen=True)
class AppendixSpace:
    """Log-weighted space calibrated so the curvature minimum equals -K."""

    N: float
    alpha: float
    n: int
    gamma: float
    mu: float
    K: float
    space: WeightedSpace

    def as_dict(self) -> dict:
        return {"N": self.N, "alpha": self.alpha, "n": self.n,
                "gamma": self.gamma, "mu": self.mu, "K": self.K}


def curvature_case_value(n: int, N: float, gamma: float) -> tuple[float, float, float]:
    """(c0, r_star_sq_over_mu_sq, branch) with min eigenvalue = -c0 / mu^2.

    Branch 0: minimum at the origin, c0 = -2 gamma.
    Branch 1: interior radial minimum when N - n < -(2/3) gamma.
    """
    m = N - n
    if m >= -(2.0 / 3.0) * gamma:
        return -2.0 * gamma, 0.0, 0
    c0 = gamma * (m + 2.0 * gamma) ** 2 / (4.0 * m * (m + gamma))
    t_star = (3.0 * m + 2.0 * gamma) / (m + 2.0 * gamma)
    return c0, t_star, 1


def appendix_space(N: float, alpha: float, K: float) -> AppendixSpace:
    """Solve for mu so the model's curvature minimum is exactly -K."""
    if N <= 3:
        raise ValueError("the exact family needs N > 3")
    if K <= 0:
        raise ValueError("K must be positive")
    if not 1.0 < alpha < (N + 2.0) / (N - 2.0):
        raise InvalidAlpha(f"alpha = {alpha} outside (1, {(N + 2) / (N - 2)})")
    n = ambient_dimension(N)
    gamma = decay_coefficient(n, alpha)
    c0, _, _ = curvature_case_value(n, N, gamma)
    mu = math.sqrt(c0 / K)
    space = log_weight_space(n, N, gamma, mu)
    return AppendixSpace(N, alpha, n, gamma, mu, K, space)


def appendix_space_from_mu(N: float, alpha: float, mu: float) -> AppendixSpace:
    """Exact-family space at a given scale mu.

    More permissive than the K-inversion: the closed-form solution has zero
    residual for any alpha > 1, even at or past the subcritical edge.
    """
    if N <= 3:
        raise ValueError("the exact family needs N > 3")
    if alpha <= 1.0:
        raise InvalidAlpha("the closed form needs alpha > 1")
    n = ambient_dimension(N)
    gamma = decay_coefficient(n, alpha)
    space = log_weight_space(n, N, gamma, mu)
    if gamma < 0:
        c0, _, _ = curvature_case_value(n, N, gamma)
        K = c0 / (mu * mu)
    else:
        K = curvature_bound(space, 100.0 * mu).K
    return AppendixSpace(N, alpha, n, gamma, mu, K, space)


def appendix_solution(aspace: AppendixSpace, r):
    """Closed-form solution and its weighted-Laplacian residual at radius r.

    Returns (u, u', lap_w u, lap_w u + u^alpha).  The residual vanishes
    identically; it is returned so callers can assert that numerically.
    """
    r = np.asarray(r, dtype=float)
    alpha, n, mu = aspace.alpha, aspace.n, aspace.mu
    s = mu * mu + r * r
    c = mu * math.sqrt(4.0 * n / (alpha - 1.0))
    u = (c / s) ** (2.0 / (alpha - 1.0))
    v = -4.0 * r / ((alpha - 1.0) * s)          # (ln u)'
    dv = -4.0 * (mu * mu - r * r) / ((alpha - 1.0) * s**2)
    du = u * v
    d2u = u * (v * v + dv)
    lap = weighted_laplacian_values(aspace.space, u, du, d2u, r)
    return u, du, lap, lap + u**alpha


def appendix_solution_second(aspace: AppendixSpace, r):
    """u'' of the closed form (for profile construction)."""
    r = np.asarray(r, dtype=float)
    alpha, mu = aspace.alpha, aspace.mu
    s = mu * mu + r * r
    u, du, _, _ = appendix_solution(aspace, r)
    v = -4.0 * r / ((alpha - 1.0) * s)
    dv = -4.0 * (mu * mu - r * r) / ((alpha - 1.0) * s**2)
    return u * (v * v + dv)


def weighted_laplacian_values(space: WeightedSpace, u, du, d2u, r) -> np.ndarray:
    """u'' + ((n-1)/r) u' - phi'(r) u' from precomputed radial derivatives."""
    r = np.asarray(r, dtype=float)
    u = np.asarray(u, dtype=float)
    du = np.asarray(du, dtype=float)
    d2u = np.asarray(d2u, dtype=float)
    out = np.empty_like(r)
    small = np.abs(r) < 1e-14
    reg = ~small
    if np.any(reg):
        rr = r[reg]
        out[reg] = (d2u[reg] + (space.n - 1) / rr * du[reg]
                    - np.asarray(space.dphi(rr), dtype=float) * du[reg])
    if np.any(small):
        # even extension at the origin: u'(0) = 0, phi'(0) = 0
        out[small] = space.n * d2u[small]
    return out


def weighted_laplacian(space: WeightedSpace, u_fn, du_fn, d2u_fn, r: float) -> float:
    """Pointwise weighted Laplacian of a radial profile given by callables."""
    rr = np.atleast_1d(np.asarray(r, dtype=float))
    u = np.atleast_1d(np.asarray(u_fn(rr), dtype=float))
    du = np.atleast_1d(np.asarray(du_fn(rr), dtype=float))
    d2u = np.atleast_1d(np.asarray(d2u_fn(rr), dtype=float))
    return float(weighted_laplacian_values(space, u, du, d2u, rr)[0])


def sharpness_quantity(aspace: AppendixSpace, r_max: Optional[float] = None):
    """sup over r of |grad u|^2/u^2 + u^(alpha-1), and its ratio to K.

    The diagnostic decays at infinity, so a generous truncated domain with
    1-D refinement locates the supremum.
    """
    if r_max is None:
        r_max = 50.0 * aspace.mu

    alpha, n, mu = aspace.alpha, aspace.n, aspace.mu

    def diag(r):
        r = np.asarray(r, dtype=float)
        s = mu * mu + r * r
        grad_log_sq = 16.0 * r * r / ((alpha - 1.0) ** 2 * s**2)
        upow = 4.0 * n * mu * mu / ((alpha - 1.0) * s**2)
        return grad_log_sq + upow

    grid = np.linspace(0.0, r_max, 8193)
    neg = lambda r: -diag(r)
    m, argmax = _refine_min(neg, grid)
    sup = -m
    return sup, sup / aspace.K, argmax


# ---------------------------------------------------------------------------
# JSON interface


def from_json(obj: dict) -> WeightedSpace:
    n = int(obj["n"])
    N = float(obj.get("N", n))
    w = obj.get("weight", {"kind": "zero"})
    kind = w.get("kind", "zero")
    if kind == "zero":
        return flat(n, N)
    if kind == "appendix":
        alpha = float(w["alpha"])
        mu = float(w["mu"])
        gamma = decay_coefficient(n, alpha)
        return log_weight_space(n, N, gamma, mu)
    if kind == "custom-radial":
        return table_weight_space(n, N, w["r"], w["values"])
    raise ValueError(f"unknown weight kind {kind!r}")


def to_json(space: WeightedSpace) -> dict:
    if space.weight_kind == "zero":
        return {"n": space.n, "N": space.N, "weight": {"kind": "zero"}}
    if space.weight_kind == "appendix":
        gamma, mu = space.weight_params
        # gamma determines alpha through the decay relation
        alpha = 1.0 + 4.0 / (space.n - 2.0 - 2.0 * gamma)
        return {"n": space.n, "N": space.N,
                "weight": {"kind": "appendix", "alpha": alpha, "mu": mu}}
    if space.weight_kind == "table":
        r_nodes, vals = space.weight_params
        return {"n": space.n, "N": space.N,
                "weight": {"kind": "custom-radial", "phi": "table",
                           "r": list(r_nodes), "values": list(vals)}}
    raise ValueError("this space has no JSON form")
