"""State tomography and figure-data generation.

Wigner functions and rotated-quadrature distributions of the mechanical
states, both from the analytic cat-state closed forms and from numeric
density matrices, plus the peak-displacement sweep and the detection-time
search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fock import (
    coherent_cutoff,
    displacement_matrices,
    oscillator_eigenfunctions,
)
from .model import CatState, DerivedModulation, SystemParams, beta_of_t, bessel_j

__all__ = [
    "PhaseSpaceGrid",
    "QuadratureAxis",
    "wigner_analytic",
    "wigner_numeric",
    "quadrature_analytic",
    "quadrature_numeric",
    "sweep_beta_max",
    "detection_time_candidates",
    "fringe_visibility",
    "default_theta",
]


@dataclass(frozen=True)
class PhaseSpaceGrid:
    """Rectangular grid for eta = eta_r + i eta_i."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float
    n_re: int
    n_im: int

    def __post_init__(self):
        if self.n_re < 2 or self.n_im < 2:
            raise ValueError("grid needs at least 2 points per axis")
        if self.re_max <= self.re_min or self.im_max <= self.im_min:
            raise ValueError("grid bounds must be ordered")

    @classmethod
    def square(cls, extent: float, step: float) -> "PhaseSpaceGrid":
        n = int(round(2 * extent / step)) + 1
        return cls(-extent, extent, -extent, extent, n, n)

    @property
    def re_axis(self) -> np.ndarray:
        return np.linspace(self.re_min, self.re_max, self.n_re)

    @property
    def im_axis(self) -> np.ndarray:
        return np.linspace(self.im_min, self.im_max, self.n_im)

    def mesh(self) -> np.ndarray:
        """Complex eta values, shape (n_im, n_re)."""
        return self.re_axis[None, :] + 1j * self.im_axis[:, None]

    def cell_area(self) -> float:
        dr = (self.re_max - self.re_min) / (self.n_re - 1)
        di = (self.im_max - self.im_min) / (self.n_im - 1)
        return dr * di

    def integrate(self, w: np.ndarray) -> float:
        """Trapezoid integral of a field over the grid."""
        return float(np.trapezoid(np.trapezoid(w, self.re_axis, axis=1), self.im_axis))


@dataclass(frozen=True)
class QuadratureAxis:
    """Rotation angle theta and the X(theta) evaluation grid."""

    theta: float
    x_values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "x_values", np.asarray(self.x_values, dtype=float))
        if self.x_values.ndim != 1 or self.x_values.size < 2:
            raise ValueError("x_values must be a 1-D grid")
        if np.any(np.diff(self.x_values) <= 0):
            raise ValueError("x_values must be strictly increasing")

    @classmethod
    def around_cat(cls, theta: float, beta_abs: float, step: float = 0.01) -> "QuadratureAxis":
        # lobes sit at +-sqrt(2)|beta|; 6 units of margin buries the Gaussian tails
        half = math.sqrt(2.0) * beta_abs + 6.0
        n = int(round(2 * half / step)) + 1
        return cls(theta, np.linspace(-half, half, n))

    def integrate(self, p: np.ndarray) -> float:
        return float(np.trapezoid(p, self.x_values))


def default_theta(beta: complex) -> float:
    """Fringe-maximizing angle: perpendicular to the +-beta link line."""
    return float(np.angle(beta) - math.pi / 2.0)


def wigner_analytic(state: CatState, grid: PhaseSpaceGrid) -> np.ndarray:
    """Closed-form Wigner function of a two-component cat state.

    W = (2/pi N^2) [ |w+|^2 e^{-2|eta-b|^2} + |w-|^2 e^{-2|eta+b|^2}
                     + 2 e^{-2|eta|^2} Re(w+ w-* e^{-4i Im(eta b*)}) ]

    with N^2 the exact cat norm.  For equal Yurke-Stoler weights the cross
    term reduces to -e^{-2|eta|^2} sin(mu) sin(4 Im(eta b*)).
    """
    eta = grid.mesh()
    b = state.beta
    wp, wm = state.weight_plus, state.weight_minus
    gauss_p = np.exp(-2.0 * np.abs(eta - b) ** 2)
    gauss_m = np.exp(-2.0 * np.abs(eta + b) ** 2)
    cross = 2.0 * np.exp(-2.0 * np.abs(eta) ** 2) * np.real(
        wp * np.conj(wm) * np.exp(-4j * np.imag(eta * np.conj(b)))
    )
    return (2.0 / math.pi / state.norm_sq()) * (
        abs(wp) ** 2 * gauss_p + abs(wm) ** 2 * gauss_m + cross
    )


def wigner_numeric(rho_m: np.ndarray, grid: PhaseSpaceGrid, chunk: int = 2048) -> np.ndarray:
    """Displaced-parity Wigner function of a mechanical density matrix.

    W(eta) = (2/pi) Tr[D^dag(eta) rho D(eta) (-1)^n].  The displaced parity
    collapses to D(2 eta) (-1)^n, so the trace needs only displacement matrix
    elements between retained Fock states; truncating a product of matrices
    would instead leak badly wherever |eta| pushes the state past the cutoff.
    """
    rho_m = np.asarray(rho_m, dtype=complex)
    n_max = rho_m.shape[0] - 1
    etas = grid.mesh().ravel()
    parity = np.where(np.arange(n_max + 1) % 2, -1.0, 1.0)
    weighted = parity[:, None] * rho_m  # (-1)^p rho_pq
    out = np.empty(etas.size)
    for lo in range(0, etas.size, chunk):
        dmats = displacement_matrices(2.0 * etas[lo : lo + chunk], n_max)
        out[lo : lo + chunk] = (2.0 / math.pi) * np.real(
            np.einsum("pq,gqp->g", weighted, dmats)
        )
    return out.reshape(grid.n_im, grid.n_re)


def quadrature_analytic(state: CatState, axis: QuadratureAxis, n_max: int | None = None) -> np.ndarray:
    """Distribution P[X(theta)] of a pure cat state along a rotated quadrature."""
    if n_max is None:
        n_max = coherent_cutoff(abs(state.beta))
    v = state.fock_vector(n_max)
    psi = oscillator_eigenfunctions(n_max, axis.x_values)
    phases = np.exp(-1j * axis.theta * np.arange(n_max + 1))
    amp = (v * phases) @ psi
    return np.abs(amp) ** 2


def quadrature_numeric(rho_m: np.ndarray, axis: QuadratureAxis) -> np.ndarray:
    """Distribution P[X(theta)] = sum_pq rho_pq psi_p psi_q e^{i theta (q-p)}.

    The result is real up to Hermiticity roundoff; tiny negatives are kept
    (file writers clamp them, tests see them).
    """
    rho_m = np.asarray(rho_m, dtype=complex)
    n_max = rho_m.shape[0] - 1
    psi = oscillator_eigenfunctions(n_max, axis.x_values)
    c = psi * np.exp(1j * axis.theta * np.arange(n_max + 1))[:, None]
    return np.real(np.einsum("px,pq,qx->x", c.conj(), rho_m, c))


def sweep_beta_max(xi_list, delta_grid, n0: int = 1, g0: float = 1.0) -> list[tuple[float, float, float]]:
    """Peak displacement |beta|_max = g0 J_{2 n0}(2 xi) / delta over a sweep.

    Returns rows (xi, delta, beta_max); delta values must be positive.
    """
    rows = []
    for xi in xi_list:
        two_g = g0 * bessel_j(2 * n0, 2.0 * xi)
        for delta in delta_grid:
            if delta <= 0:
                raise ValueError("delta grid must be positive")
            rows.append((float(xi), float(delta), two_g / delta))
    return rows


def detection_time_candidates(
    params: SystemParams,
    d: DerivedModulation,
    window_center: float,
    half_width: float | None = None,
) -> list[tuple[float, float]]:
    """Times near the window center where the cat weights are equal.

    Solves tan(mu(t)/2) = +-1, i.e. mu(t) = (k + 1/2) pi, by bisection on each
    monotone branch of sin(omega_0 t).  Returns (t, |beta(t)|) pairs sorted in
    time; empty when 2 xi < pi/2 (equal weights unreachable).
    """
    if half_width is None:
        half_width = math.pi / params.omega_0
    lo, hi = window_center - half_width, window_center + half_width
    lo = max(lo, 0.0)

    two_xi = 2.0 * params.xi
    levels = []
    k = 0
    while (k + 0.5) * math.pi <= two_xi:
        levels.append((k + 0.5) * math.pi)
        levels.append(-(k + 0.5) * math.pi)
        k += 1
    if not levels:
        return []

    def mu(t: float) -> float:
        return two_xi * math.sin(params.omega_0 * t)

    # extrema of sin(omega_0 t) bound the monotone branches
    w0 = params.omega_0
    j0 = math.floor((w0 * lo - math.pi / 2) / math.pi)
    knots = [lo]
    j = j0
    while True:
        tk = (math.pi / 2 + j * math.pi) / w0
        if tk >= hi:
            break
        if tk > lo:
            knots.append(tk)
        j += 1
    knots.append(hi)

    out = []
    for a, b in zip(knots[:-1], knots[1:]):
        fa, fb = mu(a), mu(b)
        for level in levels:
            if (fa - level) * (fb - level) > 0.0:
                continue
            x0, x1 = a, b
            f0 = fa - level
            for _ in range(200):
                xm = 0.5 * (x0 + x1)
                fm = mu(xm) - level
                if fm == 0.0 or (x1 - x0) < 1e-14:
                    break
                if (f0 < 0) == (fm < 0):
                    x0, f0 = xm, fm
                else:
                    x1 = xm
            t = 0.5 * (x0 + x1)
            out.append((t, abs(beta_of_t(d, params.omega_m, t))))
    out.sort()
    return out


def fringe_visibility(x: np.ndarray, p: np.ndarray, half_width: float = 1.5) -> float:
    """(max-min)/(max+min) of a distribution within |x| <= half_width."""
    mask = np.abs(np.asarray(x)) <= half_width
    seg = np.asarray(p)[mask]
    hi, lo = float(np.max(seg)), float(np.min(seg))
    return (hi - lo) / (hi + lo)
