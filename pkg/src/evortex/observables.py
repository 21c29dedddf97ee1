"""Quadrature expectation values of sampled fields.

All ratios are normalized by the quadrature norm of the same grid, so LG
and Bessel normalizations drop out.  For Bessel-family fields the grid edge
acts as the radial cutoff; use `bessel_cutoff_grid` to place it on a zero.
"""

import json
import math
from dataclasses import dataclass, asdict
from typing import Optional

import numpy as np

from .field import (PolarGrid, d4_periodic, density_current, gradient, integrate)
from .modes import CHARGE, HBAR, MASS, UNIT_CONVENTION, Family, ModeError, beam_geometry
from .specfun import bessel_zero


class UnderResolvedError(ValueError):
    """Spectral and stencil estimates of the canonical OAM disagree."""


class GaugeBookkeepingError(RuntimeError):
    """The two kinetic-momentum estimates disagree."""


def bessel_cutoff_grid(spec, zero_index=6, nr=512, nphi=256):
    """Polar grid whose outer edge sits on the `zero_index`-th zero of the mode's Bessel function."""
    if not spec.is_bessel:
        raise ModeError("cutoff grids are for Bessel-family modes")
    r_max = bessel_zero(spec.bessel_order, zero_index) / spec.kappa
    return PolarGrid(nr, nphi, r_max)


def _norm(field):
    n = field.norm()
    if not n > 0:
        raise ValueError("field has zero norm on this grid")
    return n


def canonical_oam(field, tol=1e-3):
    """<psi| -i d/dphi |psi> / <psi|psi>.

    On polar grids the azimuthal spectrum is used and checked against the
    stencil estimate (`UnderResolvedError` if they differ by more than
    ``tol * max(1, |L|)``); on Cartesian grids ``-i (x d_y - y d_x)`` stencils.
    """
    grid = field.grid
    psi = field.psi
    norm = _norm(field)
    if grid.kind == "polar":
        u = np.fft.fft(psi, axis=1) / grid.nphi
        m = np.fft.fftfreq(grid.nphi, d=1.0 / grid.nphi)
        wr = grid.r1d * grid.hr * 2 * math.pi
        spectral = float(np.sum(wr[:, None] * m[None, :] * np.abs(u) ** 2)) / norm
        stencil = integrate(grid, np.imag(np.conj(psi) * d4_periodic(psi, grid.dphi, axis=1))) / norm
        if abs(spectral - stencil) > tol * max(1.0, abs(spectral)):
            raise UnderResolvedError(f"spectral OAM {spectral:.6g} vs stencil {stencil:.6g}")
        return HBAR * spectral
    gx, gy = gradient(grid, psi)
    lz = np.imag(np.conj(psi) * (grid.x * gy - grid.y * gx))
    return HBAR * integrate(grid, lz) / norm


def kinetic_oam(current):
    """m int (r x j)_z dA / int rho dA."""
    norm = integrate(current.grid, current.rho)
    return MASS * integrate(current.grid, current.r_cross_j()) / norm


def magnetic_moment(current):
    """(e/2) int (r x j)_z dA / int rho dA."""
    norm = integrate(current.grid, current.rho)
    return 0.5 * CHARGE * integrate(current.grid, current.r_cross_j()) / norm


def spot_size(field):
    """<2 r^2 / w^2> with w = w_m (Landau) or the free LG width w(z)."""
    w = _lg_scale(field)
    r2 = field.grid.r ** 2
    return integrate(field.grid, 2.0 * r2 / w**2 * field.rho) / _norm(field)


def _lg_scale(field):
    specs = [s for s, _ in field.terms]
    if specs and all(s.family is Family.LANDAU_LG for s in specs):
        return field.ctx.w_m
    if specs and all(s.family is Family.FREE_LG for s in specs):
        w0s = {s.w0 for s in specs}
        if len(w0s) == 1:
            return beam_geometry(w0s.pop(), field.ctx.k, field.z).w
    if field.ctx.has_field:
        return field.ctx.w_m
    raise ModeError("spot size needs Landau modes or free LG modes sharing one waist")


def centroid(field):
    """First moments (<x>, <y>) of the density."""
    norm = _norm(field)
    rho = field.rho
    return (integrate(field.grid, field.grid.x * rho) / norm,
            integrate(field.grid, field.grid.y * rho) / norm)


def _decays_at_edges(field, rel=1e-12):
    rho = field.rho
    edge = np.concatenate([rho[0], rho[-1], rho[:, 0], rho[:, -1]])
    return np.max(edge) <= rel * np.max(rho)


def spectral_kinetic_momentum(field):
    """<p - eA> with the canonical part from the 2D FFT of psi (Cartesian grids).

    Returns ``(px, py, p_rms)`` where p_rms is the rms canonical transverse
    momentum, used to scale comparison tolerances.
    """
    grid = field.grid
    psi = np.asarray(field.psi)
    F = np.fft.fft2(psi)
    P = np.abs(F) ** 2
    kx = 2 * math.pi * np.fft.fftfreq(grid.nx, d=grid.hx)
    ky = 2 * math.pi * np.fft.fftfreq(grid.ny, d=grid.hy)
    tot = np.sum(P)
    px = HBAR * np.sum(P * kx[None, :]) / tot
    py = HBAR * np.sum(P * ky[:, None]) / tot
    prms = HBAR * math.sqrt(np.sum(P * (kx[None, :] ** 2 + ky[:, None] ** 2)) / tot)
    ax, ay = field.potential.components(grid.x, grid.y)
    rho = np.abs(psi) ** 2
    norm = np.sum(rho)
    return (px - CHARGE * np.sum(ax * rho) / norm, py - CHARGE * np.sum(ay * rho) / norm, prms)


def centroid_and_momentum(field, current=None, cross_check=True, rel_tol=1e-4):
    """Centroid (<x>, <y>) and kinetic momentum (<p_x>, <p_y>, <p_z>).

    The transverse momentum is m int j dA / int rho dA from the stencil
    current.  On Cartesian grids with a field that has decayed at the edges
    it is cross-checked against `spectral_kinetic_momentum`; a mismatch
    beyond ``rel_tol * p_rms`` raises `GaugeBookkeepingError`.
    """
    if current is None:
        current = density_current(field)
    norm = integrate(field.grid, current.rho)
    jx, jy = current.j
    px = MASS * integrate(field.grid, jx) / norm
    py = MASS * integrate(field.grid, jy) / norm
    pz = MASS * integrate(field.grid, current.jz) / norm
    if cross_check and field.grid.kind == "cartesian" and _decays_at_edges(field):
        sx, sy, prms = spectral_kinetic_momentum(field)
        if max(abs(sx - px), abs(sy - py)) > rel_tol * max(prms, 1e-300):
            raise GaugeBookkeepingError(
                f"stencil <p> = ({px:.6g}, {py:.6g}) vs spectral ({sx:.6g}, {sy:.6g})")
    return centroid(field), (px, py, pz)


@dataclass
class ObservablesReport:
    norm: float
    L_canonical: float
    L_kinetic: float
    M_z: float
    spot2: Optional[float]
    centroid: tuple
    p_kinetic: tuple
    L_extrinsic: float
    context: dict
    modes: list

    def to_dict(self):
        d = asdict(self)
        d["centroid"] = list(self.centroid)
        d["p_kinetic"] = list(self.p_kinetic)
        d["units"] = dict(UNIT_CONVENTION)
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def observables_report(field):
    """Evaluate every observable of a field into an `ObservablesReport`."""
    current = density_current(field)
    cen, p = centroid_and_momentum(field, current)
    lg = bool(field.terms) and all(s.is_lg for s, _ in field.terms)
    return ObservablesReport(
        norm=field.norm(),
        L_canonical=canonical_oam(field),
        L_kinetic=kinetic_oam(current),
        M_z=magnetic_moment(current),
        spot2=spot_size(field) if lg else None,
        centroid=tuple(cen),
        p_kinetic=tuple(p),
        L_extrinsic=cen[0] * p[1] - cen[1] * p[0],
        context=field.ctx.describe(),
        modes=[{"mode": s.to_dict(), "coeff": [c.real, c.imag]} for s, c in field.terms],
    )
