"""Numerical paraxial propagator used as an independent oracle.

The envelope u of psi = u exp(i k z) obeys

    i du/dz = (m / hbar^2 k) H_perp u,
    H_perp  = -(hbar^2 / 2m) Laplacian_perp - Omega L_z + m Omega^2 r^2 / 2

in the symmetric gauge.  H_perp is diagonal in the azimuthal harmonic l, so
the field is split into channels u_l(r) and each channel is advanced with
Crank-Nicolson on a cell-centred radial grid.  The radial operator is written
for v = sqrt(r) u, where it is a real symmetric tridiagonal matrix: the
Crank-Nicolson step is then exactly unitary.  None of the analytic phase or
dispersion formulas are used here.
"""

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import linalg, optimize

from .evolution import propagate_analytic, rotation_angle
from .field import FieldMap, PolarGrid
from .modes import HBAR, MASS, delta_kz_paraxial, lg_radial


class PropagationError(RuntimeError):
    """Norm drift beyond the per-step tolerance; carries a diagnostics dict."""

    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


class ChannelTruncationError(ValueError):
    pass


@dataclass(frozen=True)
class PropagatorConfig:
    nr: int = 1024
    r_max: float = 8.0
    dz: float = 1.0 / 4096
    ell_truncation: int = 8
    absorber_width: float = 0.0
    norm_tol: float = 1e-6

    def check(self, ctx, ells, mode_radius=None):
        """List of human-readable violations of the step-size and domain rules."""
        problems = []
        if ctx.has_field:
            worst = max(abs(delta_kz_paraxial(ctx, l, 0, threshold=math.inf)) for l in ells)
            if worst * self.dz >= 0.1:
                problems.append(f"per-step phase {worst * self.dz:.3g} >= 0.1; reduce dz")
        if mode_radius is not None and self.r_max <= 2 * mode_radius:
            problems.append(f"r_max {self.r_max:.3g} <= 2 x mode radius {mode_radius:.3g}")
        return problems


@dataclass(frozen=True)
class ChannelSet:
    """Radial profiles u_l(r_i), one row per azimuthal harmonic."""

    ells: np.ndarray
    u: np.ndarray
    nr: int
    r_max: float
    z: float = 0.0

    @property
    def hr(self):
        return self.r_max / self.nr

    @property
    def r(self):
        return (np.arange(self.nr) + 0.5) * self.hr

    def channel_norms(self):
        return 2 * math.pi * self.hr * np.sum(self.r[None, :] * np.abs(self.u) ** 2, axis=1)

    def norm(self):
        return float(np.sum(self.channel_norms()))

    def channel(self, ell):
        idx = np.nonzero(self.ells == ell)[0]
        if idx.size == 0:
            raise KeyError(ell)
        return self.u[idx[0]]


def decompose(field, ell_truncation, tol=1e-8):
    """Azimuthal Fourier channels of a polar-grid field.

    u_l(r) = (1/n_phi) sum_phi psi exp(-i l phi) for |l| <= ell_truncation.
    Raises `ChannelTruncationError` when the discarded channels hold more than
    `tol` of the norm.
    """
    grid = field.grid
    if grid.kind != "polar":
        raise ValueError("decompose needs a polar-grid field")
    if 2 * ell_truncation + 1 > grid.nphi:
        raise ValueError("ell_truncation too large for nphi")
    U = np.fft.fft(field.psi, axis=1) / grid.nphi
    m = np.rint(np.fft.fftfreq(grid.nphi, d=1.0 / grid.nphi)).astype(int)
    keep = np.abs(m) <= ell_truncation
    w = grid.r1d * grid.hr * 2 * math.pi
    total = float(np.sum(w[:, None] * np.abs(U) ** 2))
    lost = float(np.sum(w[:, None] * np.abs(U[:, ~keep]) ** 2))
    if total > 0 and lost > tol * total:
        raise ChannelTruncationError(f"channels beyond |l| = {ell_truncation} carry {lost / total:.3g} of the norm")
    order = np.argsort(m[keep])
    ells = m[keep][order]
    return ChannelSet(ells=ells, u=U[:, keep][:, order].T.copy(), nr=grid.nr, r_max=grid.r_max, z=field.z)


def recompose(channels, nphi):
    """psi[ir, iphi] = sum_l u_l(r) exp(i l phi)."""
    phi = np.arange(nphi) * (2 * math.pi / nphi)
    return channels.u.T @ np.exp(1j * np.outer(channels.ells, phi))


def radial_generator(ell, nr, r_max, ctx):
    """Symmetric tridiagonal (diag, offdiag) of (m / hbar^2 k) H_perp acting on v = sqrt(r) u.

    Cell-centred nodes r_i = (i + 1/2) h; the flux through r = 0 vanishes
    (regularity on the axis) and u = 0 at the ghost node past r_max.
    """
    h = r_max / nr
    r = (np.arange(nr) + 0.5) * h
    r_face = np.arange(1, nr + 1) * h          # r_{i+1/2}
    r_inner = np.arange(nr) * h                # r_{i-1/2}, zero at the axis
    lap_diag = -(r_face + r_inner) / (r * h**2) - ell**2 / r**2
    lap_off = r_face[:-1] / (h**2 * np.sqrt(r[:-1] * r[1:]))
    Om = ctx.Omega
    diag = -(HBAR**2 / (2 * MASS)) * lap_diag - HBAR * Om * ell + 0.5 * MASS * Om**2 * r**2
    off = -(HBAR**2 / (2 * MASS)) * lap_off
    scale = MASS / (HBAR**2 * ctx.k)
    return diag * scale, off * scale


class Propagator:
    """Crank-Nicolson stepper for a fixed channel list, context and dz.

    All channels are stacked into one block-tridiagonal system (no coupling
    between blocks), so one banded solve advances every channel.
    """

    def __init__(self, ells, nr, r_max, ctx, dz, absorber_width=0.0, norm_tol=1e-6):
        self.ells = np.asarray(ells, dtype=int)
        self.nr, self.r_max, self.ctx, self.dz = nr, r_max, ctx, float(dz)
        self.norm_tol = norm_tol
        nch = len(self.ells)
        diag = np.empty(nch * nr)
        off = np.zeros(nch * nr - 1)
        for c, ell in enumerate(self.ells):
            d, o = radial_generator(int(ell), nr, r_max, ctx)
            diag[c * nr:(c + 1) * nr] = d
            off[c * nr:(c + 1) * nr - 1] = o
        a = 0.5j * self.dz
        self._ab = np.zeros((3, nch * nr), dtype=complex)
        self._ab[0, 1:] = a * off
        self._ab[1] = 1.0 + a * diag
        self._ab[2, :-1] = a * off
        self._diag, self._off, self._a = diag, off, a
        r = (np.arange(nr) + 0.5) * (r_max / nr)
        self._sqrt_r = np.sqrt(r)
        self._mask = None
        if absorber_width > 0:
            edge = r_max - absorber_width
            m = np.ones(nr)
            sel = r > edge
            m[sel] = np.cos(0.5 * math.pi * (r[sel] - edge) / absorber_width) ** 0.125
            self._mask = m

    def _apply_rhs(self, v):
        out = (1.0 - self._a * self._diag) * v
        out[:-1] -= self._a * self._off * v[1:]
        out[1:] -= self._a * self._off * v[:-1]
        return out

    def advance(self, channels, nsteps):
        """Advance by ``nsteps * dz``; raises `PropagationError` on norm drift."""
        if not np.array_equal(channels.ells, self.ells):
            raise ValueError("channel list does not match the propagator")
        v = (channels.u * self._sqrt_r[None, :]).ravel()
        n0 = float(np.vdot(v, v).real)
        prev = n0
        for i in range(nsteps):
            v = linalg.solve_banded((1, 1), self._ab, self._apply_rhs(v), check_finite=False)
            if self._mask is not None:
                v = (v.reshape(len(self.ells), self.nr) * self._mask[None, :]).ravel()
                continue
            cur = float(np.vdot(v, v).real)
            if prev > 0 and abs(cur / prev - 1.0) > self.norm_tol:
                raise PropagationError(
                    f"norm drift {cur / prev - 1.0:.3g} at step {i}",
                    {"step": i, "z": channels.z + (i + 1) * self.dz, "norm_before": prev, "norm_after": cur},
                )
            prev = cur
        u = v.reshape(len(self.ells), self.nr) / self._sqrt_r[None, :]
        return replace(channels, u=u, z=channels.z + nsteps * self.dz)


def step(channels, ctx, dz):
    """One Crank-Nicolson step of size dz for every channel."""
    return Propagator(channels.ells, channels.nr, channels.r_max, ctx, dz).advance(channels, 1)


def _steps_between(z0, z1, dz):
    n = (z1 - z0) / dz
    nint = int(round(n))
    if nint < 0 or abs(n - nint) > 1e-6 * max(1, abs(n)):
        raise ValueError(f"z step {z1 - z0} is not a non-negative multiple of dz = {dz}")
    return nint


def propagate(field, config, z_samples):
    """Numerically propagate a polar-grid field; returns one FieldMap per z."""
    ctx = field.ctx
    ch = decompose(field, config.ell_truncation)
    prop = Propagator(ch.ells, ch.nr, ch.r_max, ctx, config.dz, config.absorber_width, config.norm_tol)
    frames = []
    for z in z_samples:
        ch = prop.advance(ch, _steps_between(ch.z, z, config.dz))
        psi = recompose(ch, field.grid.nphi)
        frames.append(FieldMap(grid=field.grid, z=float(z), psi=psi, terms=(), ctx=ctx,
                               potential=field.potential, evolution="numerical"))
    return frames


def _polar_frame(spec_or_sup, config, nphi):
    grid = PolarGrid(config.nr, nphi, config.r_max)
    return propagate_analytic(spec_or_sup, grid, 0.0)


def density_correlation(f0, f1):
    """Normalized overlap of two densities on the same grid."""
    w = f0.grid.weights
    a, b = f0.rho, f1.rho
    return float(np.sum(w * a * b) / math.sqrt(np.sum(w * a * a) * np.sum(w * b * b)))


def stationarity(sup, config, z_end, nphi=64):
    """Density correlation between z = 0 and z_end after numerical propagation."""
    f0 = _polar_frame(sup, config, nphi)
    f1 = propagate(f0, config, [z_end])[-1]
    return density_correlation(f0, f1)


def fitted_gaussian_width(radial_density, r):
    """Least-squares fit of A exp(-2 r^2 / w^2); returns w."""
    y = np.asarray(radial_density, float)
    p0 = (float(y[0]), float(math.sqrt(2 * np.sum(r**3 * y) / np.sum(r * y))))
    (A, w), _ = optimize.curve_fit(lambda rr, A, w: A * np.exp(-2 * rr**2 / w**2), r, y, p0=p0)
    return abs(float(w))


def free_lg_width(w0, ctx, config, z_end):
    """Propagate a B = 0 Gaussian of waist w0 to z_end; return the fitted width."""
    ch = ChannelSet(ells=np.array([0]), u=lg_radial(0, 0, w0, (np.arange(config.nr) + 0.5) * config.r_max / config.nr)[None, :].astype(complex),
                    nr=config.nr, r_max=config.r_max)
    prop = Propagator(ch.ells, ch.nr, ch.r_max, ctx, config.dz, config.absorber_width, config.norm_tol)
    ch = prop.advance(ch, _steps_between(0.0, z_end, config.dz))
    return fitted_gaussian_width(np.abs(ch.u[0]) ** 2, ch.r)


def eigenphase_rate(mode, ctx, config, z_end, samples=64):
    """Phase velocity d arg<u(0)|u(z)> / dz of a single Landau mode.

    The phase is tracked at `samples` intermediate points and unwrapped, then
    divided by z_end.  For an exact eigenmode this equals the Landau-Zeeman-
    Gouy shift dkz.
    """
    r = (np.arange(config.nr) + 0.5) * config.r_max / config.nr
    u0 = lg_radial(mode.ell, mode.n, ctx.w_m, r).astype(complex)
    ch = ChannelSet(ells=np.array([mode.ell]), u=u0[None, :], nr=config.nr, r_max=config.r_max)
    prop = Propagator(ch.ells, ch.nr, ch.r_max, ctx, config.dz, config.absorber_width, config.norm_tol)
    total = _steps_between(0.0, z_end, config.dz)
    if total % samples:
        samples = math.gcd(total, samples)
    per = total // samples
    phases = [0.0]
    for _ in range(samples):
        ch = prop.advance(ch, per)
        phases.append(float(np.angle(np.sum(r * np.conj(u0) * ch.u[0]))))
    return float(np.unwrap(phases)[-1] / z_end)


def eigenphase_convergence(mode, ctx, config, z_end, halvings=2):
    """Eigenphase rates for dz, dz/2, ... and the ratio of successive changes.

    Returns a dict with ``rates``, ``dkz`` (paraxial formula, for comparison
    only), ``rel_error`` of the rate at the base dz against it, and
    ``ratios`` = |rate(dz) - rate(dz/2)| / |rate(dz/2) - rate(dz/4)|, which
    tends to 4 for a second-order scheme.
    """
    rates = []
    dz = config.dz
    for k in range(halvings + 1):
        rates.append(eigenphase_rate(mode, ctx, replace(config, dz=dz / 2**k), z_end))
    diffs = [abs(rates[i] - rates[i + 1]) for i in range(len(rates) - 1)]
    ratios = [diffs[i] / diffs[i + 1] if diffs[i + 1] > 0 else math.inf for i in range(len(diffs) - 1)]
    dkz = delta_kz_paraxial(ctx, mode.ell, mode.n, threshold=math.inf)
    return {"dz": [dz / 2**k for k in range(halvings + 1)], "rates": rates, "dkz": dkz,
            "rel_error": abs(rates[0] - dkz) / abs(dkz), "ratios": ratios}


def oracle_rotation(sup, config, z_samples, nphi=256):
    """Rotation angles from numerical propagation and from the analytic phases.

    Both tracks use `evolution.rotation_angle` on the same polar grid and are
    unwrapped along z.  Returns ``(numerical, analytic)`` arrays.
    """
    grid = PolarGrid(config.nr, nphi, config.r_max)
    f0 = propagate_analytic(sup, grid, 0.0)
    numeric = propagate(f0, config, z_samples)
    num, ana = [], []
    pn = pa = 0.0
    for z, fz in zip(z_samples, numeric):
        pn = rotation_angle(f0, fz, previous=pn)
        pa = rotation_angle(f0, propagate_analytic(sup, grid, z), previous=pa)
        num.append(pn)
        ana.append(pa)
    return np.array(num), np.array(ana)
