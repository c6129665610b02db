"""Time-domain views of the spectral solution: wave functions on the moving
domain, radial density snapshots and time series in the natural dimensionless
variables, the two-time propagator, a finite-difference residual check of the
governing equation, and the late-time radial envelope.

Dimensionless conventions for a mode (m, n) with zero x = x_mn:

    lambda = 2 pi a / x          characteristic wavelength
    nu     = hbar x^2 / (4 pi mu a^2)   initial frequency (cycles per time)
    eta    = rho / lambda        scaled radius
    T      = nu t                scaled time
    varrho = lambda^2 eta |R|^2  scaled radial density, int varrho d eta = 1

with R the radial factor of Psi = R(rho, t) e^{i m phi} / sqrt(2 pi).  The
wall sits at eta = xi x / (2 pi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quad import integrate
from .special import DomainError, bessel_j
from .spectral import (
    N_MAX_DEFAULT,
    SpectralState,
    TrapGeometry,
    _i_matrix,
    _radial_wave,
    _zeros_cached,
    coeffs_from_eigenstate,
)

__all__ = [
    "RadialDensitySample",
    "FlightTimes",
    "psi_exact",
    "psi_general",
    "density_profile",
    "density_timeseries",
    "visibility",
    "propagator",
    "propagate_through_kernel",
    "pde_residual",
    "long_time_radial",
]


@dataclass(frozen=True)
class RadialDensitySample:
    eta: float
    T: float
    rho_density: float


@dataclass(frozen=True)
class FlightTimes:
    """Scaled times at which the wall (T1) and the direct wave front (T2)
    reach the observation radius."""
    T1: float
    T2: float


# --------------------------------------------------------------------------
# Wave functions

def _mode_radial(m: int, n: int, sigma: np.ndarray, t: float, geom: TrapGeometry,
                 drop_moving_phase: bool = False) -> np.ndarray:
    """Radial factor of the exact mode at scaled radius sigma = rho/L."""
    zeros, absj = _zeros_cached(m, n)
    x = zeros[n - 1]
    L = geom.L(t)
    arg = -x * x * geom.tau(t)
    if not drop_moving_phase:
        arg = arg + geom.alpha * geom.xi(t) * sigma * sigma
    return np.exp(1j * arg) * (math.sqrt(2.0) / (L * absj[n - 1])) * bessel_j(m, x * sigma)


def psi_exact(m: int, n: int, rho, phi, t: float, geom: TrapGeometry,
              drop_moving_phase: bool = False):
    """Exact mode solution Psi_mn(rho, phi, t); zero on and outside the wall.

    rho and phi broadcast together; scalars in give a scalar out.  The
    `drop_moving_phase` switch omits the quadratic wall phase on purpose,
    turning the exact solution into a wrong one for negative-control checks.
    """
    if n < 1:
        raise DomainError("radial index must be >= 1")
    rho_b, phi_b = np.broadcast_arrays(np.asarray(rho, float), np.asarray(phi, float))
    scalar = rho_b.ndim == 0
    rho_b = np.atleast_1d(rho_b)
    phi_b = np.atleast_1d(phi_b)
    if np.any(rho_b < 0.0):
        raise DomainError("rho must be nonnegative")
    L = geom.L(t)
    sigma = rho_b / L
    out = np.zeros(rho_b.shape, dtype=complex)
    inside = sigma < 1.0
    if np.any(inside):
        rad = _mode_radial(m, n, sigma[inside], t, geom, drop_moving_phase)
        out[inside] = rad * np.exp(1j * m * phi_b[inside]) / math.sqrt(2.0 * math.pi)
    return complex(out[0]) if scalar else out


def psi_general(state: SpectralState, rho, phi, t: float, geom: TrapGeometry,
                drop_moving_phase: bool = False):
    """Evolved wave for an arbitrary coefficient state; zero outside the wall."""
    rho_b, phi_b = np.broadcast_arrays(np.asarray(rho, float), np.asarray(phi, float))
    scalar = rho_b.ndim == 0
    rho_b = np.atleast_1d(rho_b)
    phi_b = np.atleast_1d(phi_b)
    if np.any(rho_b < 0.0):
        raise DomainError("rho must be nonnegative")
    L = geom.L(t)
    sigma = rho_b / L
    out = np.zeros(rho_b.shape, dtype=complex)
    inside = sigma < 1.0
    if np.any(inside):
        rad = _radial_wave(state, sigma[inside].ravel(), t, geom, drop_moving_phase)
        out[inside] = rad.reshape(sigma[inside].shape) * \
            np.exp(1j * state.m * phi_b[inside]) / math.sqrt(2.0 * math.pi)
    return complex(out[0]) if scalar else out


# --------------------------------------------------------------------------
# Density diagnostics

def _mode_scales(m: int, n: int) -> tuple[float, float]:
    """(x_mn, alpha_mn) with alpha_mn = x_mn/2 the speed scale of the mode."""
    zeros, _ = _zeros_cached(m, n)
    x = float(zeros[n - 1])
    return x, 0.5 * x


def density_profile(m: int, n: int, alpha_ratio: float, xi_target: float,
                    grid_size: int = 400) -> list[RadialDensitySample]:
    """Scaled radial density of the evolved mode (m, n) when the wall reaches
    xi_target, for wall speed alpha = alpha_ratio * (x_mn / 2).

    The state starts as the static eigenstate u_mn.  The returned grid spans
    eta in [0, xi_target * x_mn / (2 pi)], wall point included (density
    exactly zero there).
    """
    if grid_size < 2:
        raise DomainError("grid_size must be >= 2")
    x, alpha_mn = _mode_scales(m, n)
    alpha = alpha_ratio * alpha_mn
    if xi_target <= 0.0:
        raise DomainError("xi_target must be positive")
    if alpha == 0.0:
        if xi_target != 1.0:
            raise DomainError("a static wall (alpha_ratio = 0) cannot reach xi != 1")
        t = 0.0
        geom = TrapGeometry()
    else:
        geom = TrapGeometry.from_alpha(alpha)
        t = (xi_target - 1.0) / geom.u
        if t < 0.0:
            raise DomainError(
                f"xi_target {xi_target} is not reachable with alpha_ratio {alpha_ratio}"
            )

    lam = 2.0 * math.pi / x          # a = 1
    nu = x * x / (4.0 * math.pi)
    T = nu * t
    state = coeffs_from_eigenstate(m, n, geom)
    L = geom.L(t)
    eta_wall = xi_target * x / (2.0 * math.pi)
    eta = np.linspace(0.0, eta_wall, grid_size)
    sigma = eta * lam / L
    dens = np.zeros_like(eta)
    inner = sigma < 1.0
    rad = _radial_wave(state, sigma[inner], t, geom)
    dens[inner] = lam ** 2 * eta[inner] * np.abs(rad) ** 2
    return [RadialDensitySample(eta=float(e), T=float(T), rho_density=float(d))
            for e, d in zip(eta, dens)]


def density_timeseries(m: int, n: int, alpha_ratio: float, eta_obs: float,
                       T_max: float, steps: int = 800
                       ) -> tuple[list[RadialDensitySample], FlightTimes]:
    """Scaled density at fixed radius eta_obs while the wall expands past it.

    Only expansion makes sense here (alpha_ratio > 0): the observation point
    starts outside the trap (rho_0 > a required) and the density is exactly
    zero until the wall crosses it at T1 = (x/4 pi)(rho_0/a - 1).  The direct
    flight of the initially confined wave arrives around
    T2 = (x/4 pi)(rho_0/a + 1).
    """
    if steps < 2:
        raise DomainError("steps must be >= 2")
    if alpha_ratio <= 0.0:
        raise DomainError("time series needs an expanding wall: alpha_ratio > 0")
    x, alpha_mn = _mode_scales(m, n)
    lam = 2.0 * math.pi / x
    rho0 = eta_obs * lam
    if rho0 <= 1.0:
        raise DomainError(
            f"observation radius must lie outside the initial wall: eta_obs > {x / (2.0 * math.pi):.6g}"
        )
    geom = TrapGeometry.from_alpha(alpha_ratio * alpha_mn)
    state = coeffs_from_eigenstate(m, n, geom)
    zeros, absj = _zeros_cached(m, state.n_max)

    nu = x * x / (4.0 * math.pi)
    flight = FlightTimes(T1=x / (4.0 * math.pi) * (rho0 - 1.0),
                         T2=x / (4.0 * math.pi) * (rho0 + 1.0))
    Ts = np.linspace(0.0, T_max, steps)
    ts = Ts / nu
    Ls = 1.0 + geom.u * ts
    dens = np.zeros_like(Ts)
    inside = rho0 < Ls
    if np.any(inside):
        xi_in = Ls[inside]
        sig = rho0 / xi_in
        tau = ts[inside] / (2.0 * xi_in)
        j = bessel_j(m, sig[:, None] * zeros[None, :])
        amp = state.coeffs[None, :] * np.exp(-1j * np.outer(tau, zeros ** 2)) \
            * (math.sqrt(2.0) / (xi_in[:, None] * absj[None, :]))
        rad = np.exp(1j * geom.alpha * xi_in * sig * sig) * np.sum(j * amp, axis=1)
        dens[inside] = lam ** 2 * eta_obs * np.abs(rad) ** 2
    samples = [RadialDensitySample(eta=float(eta_obs), T=float(T), rho_density=float(d))
               for T, d in zip(Ts, dens)]
    return samples, flight


def visibility(samples: list[RadialDensitySample], flight: FlightTimes) -> float:
    """Mean height difference between adjacent extrema of the smoothed
    density between the wall arrival T1 and the direct flight arrival T2.

    Quantifies the diffraction-in-time fringes: a sharper wave front (slower
    wall) interferes more strongly with itself and scores higher.
    """
    T = np.array([s.T for s in samples])
    d = np.array([s.rho_density for s in samples])
    if d.size < 3:
        return 0.0
    v = d.copy()
    v[1:-1] = (d[:-2] + d[1:-1] + d[2:]) / 3.0
    heights = []
    for i in range(1, len(v) - 1):
        if not (flight.T1 < T[i] < flight.T2):
            continue
        if (v[i] - v[i - 1]) * (v[i + 1] - v[i]) < 0.0:
            heights.append(v[i])
    if len(heights) < 2:
        return 0.0
    return float(np.mean(np.abs(np.diff(heights))))


# --------------------------------------------------------------------------
# Propagator

def propagator(m_list, r, t: float, r_prime, t_prime: float, geom: TrapGeometry,
               n_max: int = N_MAX_DEFAULT) -> complex:
    """Two-time kernel K(r, t; r', t') summed over the given angular indices.

    r and r_prime are (rho, phi) pairs.  Each m > 0 carries both angular
    branches e^{+-i m phi}, so its term enters with 2 cos(m (phi - phi'));
    m = 0 enters once.  The radial sum runs over n = 1..n_max.
    """
    rho, phi = r
    rho_p, phi_p = r_prime
    L, L_p = geom.L(t), geom.L(t_prime)
    if rho >= L or rho_p >= L_p:
        return 0.0 + 0.0j
    total = 0.0 + 0.0j
    for m in m_list:
        if m < 0:
            raise DomainError("angular indices in m_list must be >= 0")
        zeros, absj = _zeros_cached(m, n_max)
        sig = rho / L
        sig_p = rho_p / L_p
        j = bessel_j(m, zeros * sig)
        j_p = bessel_j(m, zeros * sig_p)
        ph = np.exp(1j * (geom.alpha * geom.xi(t) * sig ** 2 - zeros ** 2 * geom.tau(t)))
        ph_p = np.exp(1j * (geom.alpha * geom.xi(t_prime) * sig_p ** 2 - zeros ** 2 * geom.tau(t_prime)))
        rad = np.sum((2.0 / (L * L_p * absj ** 2)) * j * j_p * ph * np.conj(ph_p))
        ang = 1.0 if m == 0 else 2.0 * math.cos(m * (phi - phi_p))
        total += rad * ang / (2.0 * math.pi)
    return complex(total)


def propagate_through_kernel(m_list, r, t: float, psi_func, t_prime: float,
                             geom: TrapGeometry, n_max: int = N_MAX_DEFAULT,
                             n_phi: int = 64) -> complex:
    """Apply the kernel to a wave at t': int K psi(rho', phi', t') rho' drho' dphi'.

    `psi_func(rho', phi')` evaluates the source wave (arrays in, array out).
    The azimuthal integral uses the periodic trapezoid rule, exact once
    n_phi exceeds twice the highest angular index present; the radial
    integral is adaptive.
    """
    rho, phi = r
    L_p = geom.L(t_prime)
    phis = np.linspace(0.0, 2.0 * math.pi, n_phi, endpoint=False)
    dphi = 2.0 * math.pi / n_phi

    # build the radial kernel factors once per m; phi' enters analytically
    zeros_absj = {m: _zeros_cached(m, n_max) for m in m_list}
    L = geom.L(t)
    sig = rho / L
    if sig >= 1.0:
        return 0.0 + 0.0j

    def integrand(sp):
        # sp: scaled source radius rho'/L'
        vals = np.zeros(sp.shape, dtype=complex)
        psi_grid = psi_func(L_p * sp[:, None], phis[None, :])  # (S, n_phi)
        for m in m_list:
            zeros, absj = zeros_absj[m]
            j = bessel_j(m, zeros * sig)
            ph = np.exp(1j * (geom.alpha * geom.xi(t) * sig ** 2 - zeros ** 2 * geom.tau(t)))
            jp = bessel_j(m, sp[:, None] * zeros[None, :])
            php = np.exp(1j * (geom.alpha * geom.xi(t_prime) * sp[:, None] ** 2
                               - zeros[None, :] ** 2 * geom.tau(t_prime)))
            rad = (jp * np.conj(php)) @ (2.0 / (L * L_p * absj ** 2) * j * ph)
            if m == 0:
                ang = np.sum(psi_grid, axis=1) * dphi / (2.0 * math.pi)
            else:
                w = 2.0 * np.cos(m * (phi - phis))
                ang = (psi_grid @ w) * dphi / (2.0 * math.pi)
            vals += rad * ang
        return vals * sp * L_p ** 2

    x_hi = max(float(zeros_absj[m][0][-1]) for m in m_list)
    res = integrate(integrand, 0.0, 1.0,
                    initial_panels=max(8, int(math.ceil((abs(geom.alpha) * geom.xi(t_prime) + 2 * x_hi) / math.pi))))
    return complex(res.value)


# --------------------------------------------------------------------------
# Equation residual

def pde_residual(m: int, n: int, geom: TrapGeometry, grid: int,
                 t: float | None = None) -> float:
    """Max-abs residual of the exact mode in the governing equation,

        i hbar dPsi/dt + (hbar^2/2 mu)(Psi_rr + Psi_r/rho - m^2 Psi/rho^2),

    discretized with centered differences on `grid` radial points (half-cell
    offset from the axis) and a matching time step.  The exact solution makes
    this pure truncation error, falling like the square of the step.
    """
    if grid < 4:
        raise DomainError("grid must be >= 4")
    if t is None:
        if geom.u > 0.0:
            t = 0.25 * geom.a / geom.u          # xi = 1.25
        elif geom.u < 0.0:
            t = 0.2 * geom.a / abs(geom.u)      # xi = 0.8
        else:
            t = 0.1 * geom.mu * geom.a ** 2 / geom.hbar
    L = geom.L(t)
    h = 0.9 * L / grid
    rho = (np.arange(1, grid) + 0.5) * h  # 1.5h first: rho - h stays off the axis
    rho = rho[rho < 0.88 * L]  # keep the full stencil inside the wall at t +- ht
    ht = 0.1 * h * geom.mu * geom.a / geom.hbar

    def mode(rr, tt):
        zeros, absj = _zeros_cached(m, n)
        x = zeros[n - 1]
        Lt = geom.L(tt)
        sig = rr / Lt
        ph = np.exp(1j * (geom.alpha * geom.xi(tt) * sig ** 2 - x * x * geom.tau(tt)))
        return ph * (math.sqrt(2.0) / (Lt * absj[n - 1])) * bessel_j(m, x * sig)

    f0 = mode(rho, t)
    dt = (mode(rho, t + ht) - mode(rho, t - ht)) / (2.0 * ht)
    d1 = (mode(rho + h, t) - mode(rho - h, t)) / (2.0 * h)
    d2 = (mode(rho + h, t) - 2.0 * f0 + mode(rho - h, t)) / (h * h)
    lap = d2 + d1 / rho - (m * m / rho ** 2) * f0
    resid = 1j * geom.hbar * dt + geom.hbar ** 2 / (2.0 * geom.mu) * lap
    return float(np.max(np.abs(resid)))


# --------------------------------------------------------------------------
# Late-time envelope

def long_time_radial(m: int, n: int, alpha: float, rho_obs: float, t: float,
                     n_max: int = N_MAX_DEFAULT) -> float:
    """Late-time envelope of |R| at a fixed radius during free-like expansion:

        |R| ~ (2 sqrt(2) / (|J_{m+1}(x_mn)| u t))
              sum_n' |I_{m n n'}(0, alpha)| J_m(x_n' rho/(u t)) / J_{m+1}(x_n')^2.

    Valid once the wall is far past the observation point (rho_obs << u t).
    """
    if alpha <= 0.0:
        raise DomainError("the late-time envelope needs an expanding wall")
    u = 2.0 * alpha
    if rho_obs >= u * t:
        raise DomainError("too early: rho_obs must be well inside u*t")
    zeros, absj = _zeros_cached(m, n_max)
    row = np.abs(_i_matrix(m, 1.0, alpha, n_max)[n - 1])
    j = bessel_j(m, zeros * (rho_obs / (u * t)))
    total = np.sum(row * j / absj ** 2)
    return float(2.0 * math.sqrt(2.0) / (absj[n - 1] * u * t) * total)
