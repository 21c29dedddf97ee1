"""Grids, sampled wavefunctions, probability density and current.

The current is split as in the kinetic-momentum picture,

    j = Im(psi* grad psi) - e A rho = j_vortex + j_potential,

with the canonical (vortex) part obtained from 4th-order finite differences
so that arbitrary superpositions are handled the same way as single modes.
Closed-form single-mode profiles are available from
`analytic_current_profile` for cross-checking.
"""

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .modes import CHARGE, HBAR, MASS, Family, ModeError, eval_mode, mode_kz, beam_geometry


class GridError(ValueError):
    pass


class GridResolutionError(GridError):
    """Grid too coarse for the 4th-order stencil (k_perp * h >= pi/4)."""


class GaugeError(ValueError):
    """Gauge function is not single-valued on the grid."""


# --------------------------------------------------------------------- grids


@dataclass(frozen=True)
class CartesianGrid:
    """Uniform square-cell grid on [-L, L]^2, arrays indexed ``[iy, ix]``."""

    nx: int
    ny: int
    half_extent: float
    kind = "cartesian"

    def __post_init__(self):
        if self.nx < 8 or self.ny < 8:
            raise GridError("grids need at least 8 nodes per axis")
        if not self.half_extent > 0:
            raise GridError("half_extent must be positive")

    @property
    def shape(self):
        return (self.ny, self.nx)

    @property
    def hx(self):
        return 2.0 * self.half_extent / (self.nx - 1)

    @property
    def hy(self):
        return 2.0 * self.half_extent / (self.ny - 1)

    @property
    def h(self):
        return max(self.hx, self.hy)

    @property
    def x1d(self):
        return np.linspace(-self.half_extent, self.half_extent, self.nx)

    @property
    def y1d(self):
        return np.linspace(-self.half_extent, self.half_extent, self.ny)

    @property
    def x(self):
        return np.broadcast_to(self.x1d[None, :], self.shape)

    @property
    def y(self):
        return np.broadcast_to(self.y1d[:, None], self.shape)

    @property
    def r(self):
        return np.hypot(self.x, self.y)

    @property
    def phi(self):
        return np.arctan2(self.y, self.x)

    @property
    def weights(self):
        wx = np.full(self.nx, self.hx)
        wx[[0, -1]] *= 0.5
        wy = np.full(self.ny, self.hy)
        wy[[0, -1]] *= 0.5
        return wy[:, None] * wx[None, :]

    def to_dict(self):
        return {"kind": self.kind, "nx": self.nx, "ny": self.ny, "half_extent": self.half_extent}


@dataclass(frozen=True)
class PolarGrid:
    """Cell-centred radial nodes ``(i + 1/2) h_r`` times uniform angles on [0, 2pi).

    Arrays are indexed ``[ir, iphi]``.  The axis r = 0 is never a node.
    """

    nr: int
    nphi: int
    r_max: float
    kind = "polar"

    def __post_init__(self):
        if self.nr < 8 or self.nphi < 8:
            raise GridError("grids need at least 8 nodes per axis")
        if not self.r_max > 0:
            raise GridError("r_max must be positive")

    @property
    def shape(self):
        return (self.nr, self.nphi)

    @property
    def hr(self):
        return self.r_max / self.nr

    @property
    def dphi(self):
        return 2.0 * math.pi / self.nphi

    @property
    def h(self):
        return max(self.hr, self.r_max * self.dphi)

    @property
    def r1d(self):
        return (np.arange(self.nr) + 0.5) * self.hr

    @property
    def phi1d(self):
        return np.arange(self.nphi) * self.dphi

    @property
    def r(self):
        return np.broadcast_to(self.r1d[:, None], self.shape)

    @property
    def phi(self):
        return np.broadcast_to(self.phi1d[None, :], self.shape)

    @property
    def x(self):
        return self.r * np.cos(self.phi)

    @property
    def y(self):
        return self.r * np.sin(self.phi)

    @property
    def weights(self):
        return np.broadcast_to((self.r1d * self.hr * self.dphi)[:, None], self.shape)

    def to_dict(self):
        return {"kind": self.kind, "nr": self.nr, "nphi": self.nphi, "r_max": self.r_max}


def grid_from_dict(d):
    if d["kind"] == "cartesian":
        return CartesianGrid(int(d["nx"]), int(d["ny"]), float(d["half_extent"]))
    if d["kind"] == "polar":
        return PolarGrid(int(d["nr"]), int(d["nphi"]), float(d["r_max"]))
    raise GridError(f"unknown grid kind {d['kind']!r}")


def integrate(grid, values):
    """Quadrature of node values: trapezoid (Cartesian) or midpoint-r x rectangle-phi (polar)."""
    return float(np.sum(grid.weights * values))


# --------------------------------------------------------- vector potentials


class VectorPotential:
    """Transverse vector potential A(x, y); subclasses implement `components`."""

    label = "none"

    def components(self, x, y):
        z = np.zeros(np.broadcast(x, y).shape)
        return z, z.copy()

    def describe(self):
        return {"kind": self.label}


class NoPotential(VectorPotential):
    pass


@dataclass(frozen=True)
class UniformFieldPotential(VectorPotential):
    """Symmetric gauge A = (B r / 2) e_phi."""

    B: float
    label = "uniform"

    def components(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return -0.5 * self.B * y, 0.5 * self.B * x

    def describe(self):
        return {"kind": self.label, "B": self.B}


def flux_line_A_phi(alpha, r):
    """Azimuthal potential of a flux line with flux parameter alpha.

    alpha = e*flux / (2 pi hbar) and A_phi = flux / (2 pi r) = hbar alpha / (e r).
    """
    return HBAR * alpha / (CHARGE * r)


@dataclass(frozen=True)
class FluxLinePotential(VectorPotential):
    """Idealized flux line on the z axis.  A is set to 0 on the axis node itself."""

    alpha: float
    label = "flux_line"

    def components(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r2 = x**2 + y**2
        with np.errstate(divide="ignore", invalid="ignore"):
            a = np.where(r2 > 0, flux_line_A_phi(self.alpha, 1.0) / r2, 0.0)
        return -a * y, a * x

    def describe(self):
        return {"kind": self.label, "alpha": self.alpha}


@dataclass(frozen=True)
class GaugeShiftedPotential(VectorPotential):
    """A' = A + grad chi."""

    base: VectorPotential
    grad_chi: Callable
    label = "gauge_shifted"

    def components(self, x, y):
        ax, ay = self.base.components(x, y)
        gx, gy = self.grad_chi(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        return ax + gx, ay + gy

    def describe(self):
        return {"kind": self.label, "base": self.base.describe()}


def potential_for(terms, ctx):
    """Vector potential implied by the mode families and the context."""
    alphas = {spec.alpha for spec, _ in terms if spec.family is Family.AB_BESSEL}
    if alphas:
        if len(alphas) > 1:
            raise ModeError("all Aharonov-Bohm terms must share one flux parameter")
        return FluxLinePotential(alphas.pop())
    if ctx.has_field:
        return UniformFieldPotential(ctx.B)
    return NoPotential()


# ------------------------------------------------------------------ fieldmap


@dataclass(frozen=True, eq=False)
class FieldMap:
    """Complex wavefunction samples on a grid at fixed z.

    ``terms`` (mode, coefficient) pairs, ``ctx``, ``evolution`` and ``chi``
    are enough to re-evaluate every node analytically; ``evolution`` is
    ``"eigen"`` for plain eigenmode sums, ``"paraxial"`` / ``"exact"`` for
    `evolution.propagate_analytic` frames and ``"numerical"`` for propagator
    output (no analytic terms).
    """

    grid: object
    z: float
    psi: np.ndarray
    terms: tuple
    ctx: object
    potential: VectorPotential
    evolution: str = "eigen"
    chi: Optional[Callable] = None

    def __post_init__(self):
        if self.psi.shape != self.grid.shape:
            raise GridError("psi shape does not match grid")
        if not np.all(np.isfinite(self.psi)):
            raise GridError("field samples must be finite")
        self.psi.setflags(write=False)

    @property
    def rho(self):
        return np.abs(self.psi) ** 2

    def norm(self):
        return integrate(self.grid, self.rho)

    def term_fields(self):
        """Per-term sampled arrays (coefficient included), the pieces summing to psi."""
        from .evolution import term_amplitude  # circular at import time

        out = []
        for spec, c in self.terms:
            a = c * term_amplitude(spec, self.ctx, self.grid, self.z, self.evolution)
            if self.chi is not None:
                a = a * np.exp(1j * CHARGE * self.chi(self.grid.x, self.grid.y) / HBAR)
            out.append(a)
        return out

    def term_kz(self):
        from .evolution import term_wavenumber

        return [term_wavenumber(spec, self.ctx, self.evolution) for spec, _ in self.terms]

    def with_psi(self, psi, z=None, **kw):
        return replace(self, psi=np.array(psi, dtype=complex), z=self.z if z is None else z, **kw)


def _normalize_terms(superposition):
    terms = []
    for item in superposition:
        if isinstance(item, tuple):
            spec, c = item
        else:
            spec, c = item, 1.0
        terms.append((spec, complex(c)))
    if not terms:
        raise ModeError("superposition must contain at least one term")
    return tuple(terms)


def sample(superposition, ctx, grid, z=0.0):
    """Sum coefficient-weighted eigenmodes on `grid` at longitudinal position z.

    `superposition` is a list of ``(ModeSpec, coefficient)`` pairs (or bare
    ModeSpecs with coefficient 1).  All terms use the single context `ctx`.
    """
    terms = _normalize_terms(superposition)
    r, phi = grid.r, grid.phi
    psi = np.zeros(grid.shape, dtype=complex)
    for spec, c in terms:
        psi += c * eval_mode(spec, ctx, r, phi, z)
    return FieldMap(grid=grid, z=float(z), psi=psi, terms=terms, ctx=ctx,
                    potential=potential_for(terms, ctx), evolution="eigen")


# ---------------------------------------------------------------- stencils


def d4(f, h, axis):
    """4th-order first derivative; one-sided 4th-order stencils on both ends."""
    f = np.moveaxis(np.asarray(f), axis, 0)
    if f.shape[0] < 5:
        raise GridError("need at least 5 nodes for the 4th-order stencil")
    d = np.empty_like(f)
    d[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * h)
    d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h)
    d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h)
    d[-1] = (25.0 * f[-1] - 48.0 * f[-2] + 36.0 * f[-3] - 16.0 * f[-4] + 3.0 * f[-5]) / (12.0 * h)
    d[-2] = (3.0 * f[-1] + 10.0 * f[-2] - 18.0 * f[-3] + 6.0 * f[-4] - f[-5]) / (12.0 * h)
    return np.moveaxis(d, 0, axis)


def d4_periodic(f, h, axis):
    """4th-order central first derivative on a periodic axis."""
    roll = lambda s: np.roll(f, s, axis=axis)
    return (roll(2) - 8.0 * roll(1) + 8.0 * roll(-1) - roll(-2)) / (12.0 * h)


def gradient(grid, f):
    """(d/dx, d/dy) of node values on either grid kind."""
    if grid.kind == "cartesian":
        return d4(f, grid.hx, axis=1), d4(f, grid.hy, axis=0)
    fr = d4(f, grid.hr, axis=0)
    fphi = d4_periodic(f, grid.dphi, axis=1)
    c, s, r = np.cos(grid.phi), np.sin(grid.phi), grid.r
    return c * fr - s * fphi / r, s * fr + c * fphi / r


def max_transverse_wavenumber(field):
    """Rough upper bound on the local transverse wavenumber of the field."""
    kmax = 0.0
    for spec, _ in field.terms:
        if spec.is_bessel:
            kmax = max(kmax, spec.kappa)
        elif spec.family is Family.LANDAU_LG:
            kmax = max(kmax, 2.0 * math.sqrt(spec.gouy_index) / field.ctx.w_m)
        else:
            g = beam_geometry(spec.w0, field.ctx.k, field.z)
            inv_R = field.z / (field.z**2 + g.zR**2)
            rext = float(np.max(field.grid.r))
            kmax = max(kmax, 2.0 * math.sqrt(spec.gouy_index) / g.w + field.ctx.k * rext * abs(inv_R))
    if field.chi is not None and isinstance(field.potential, GaugeShiftedPotential):
        gx, gy = field.potential.grad_chi(field.grid.x, field.grid.y)
        kmax += float(np.max(np.hypot(gx, gy))) * abs(CHARGE) / HBAR
    return kmax


def check_resolution(field):
    kmax = max_transverse_wavenumber(field)
    if field.grid.kind == "cartesian":
        h = field.grid.h
    else:
        h = field.grid.hr
    if kmax * h >= math.pi / 4:
        raise GridResolutionError(
            f"k_perp*h = {kmax * h:.3g} >= pi/4; refine the grid (h = {h:.3g}, k_perp ~ {kmax:.3g})")
    if field.grid.kind == "polar":
        lmax = max((abs(s.ell) for s, _ in field.terms), default=0)
        if lmax * field.grid.dphi >= math.pi / 4:
            raise GridResolutionError(f"|l| dphi = {lmax * field.grid.dphi:.3g} >= pi/4; increase nphi")


# ------------------------------------------------------------------ currents


@dataclass(frozen=True, eq=False)
class CurrentMap:
    """Density and current components (Cartesian x, y) at every node."""

    grid: object
    rho: np.ndarray
    jv: tuple
    jp: tuple
    jz: np.ndarray
    potential: VectorPotential

    @property
    def j(self):
        return (self.jv[0] + self.jp[0], self.jv[1] + self.jp[1])

    def _polar_parts(self, vec):
        c, s = np.cos(self.grid.phi), np.sin(self.grid.phi)
        return c * vec[0] + s * vec[1], -s * vec[0] + c * vec[1]

    @property
    def j_r(self):
        return self._polar_parts(self.j)[0]

    @property
    def j_phi(self):
        return self._polar_parts(self.j)[1]

    @property
    def jv_phi(self):
        return self._polar_parts(self.jv)[1]

    @property
    def jp_phi(self):
        return self._polar_parts(self.jp)[1]

    def r_cross_j(self):
        """(r x j)_z = x j_y - y j_x."""
        jx, jy = self.j
        return self.grid.x * jy - self.grid.y * jx


def density_current(field, check=True):
    """Probability density and current of `field`.

    The canonical part comes from finite differences of psi, the potential
    part from ``field.potential``.  ``j_z`` is assembled from the terms'
    longitudinal wavenumbers (carrier included; numerically propagated fields
    use the paraxial value ``k``).
    """
    if check and field.terms:
        check_resolution(field)
    psi = field.psi
    rho = np.abs(psi) ** 2
    gx, gy = gradient(field.grid, psi)
    jvx = (HBAR / MASS) * np.imag(np.conj(psi) * gx)
    jvy = (HBAR / MASS) * np.imag(np.conj(psi) * gy)
    ax, ay = field.potential.components(field.grid.x, field.grid.y)
    jpx = -(CHARGE / MASS) * ax * rho
    jpy = -(CHARGE / MASS) * ay * rho
    if field.terms:
        pieces = field.term_fields()
        kz = field.term_kz()
        dz_psi = sum(k * p for k, p in zip(kz, pieces))
        jz = (HBAR / MASS) * np.real(np.conj(psi) * dz_psi)
    else:
        jz = (HBAR / MASS) * field.ctx.k * rho
    return CurrentMap(grid=field.grid, rho=rho, jv=(jvx, jvy), jp=(jpx, jpy), jz=jz,
                      potential=field.potential)


def divergence(current):
    """Transverse divergence of the total current with the same stencils."""
    jx, jy = current.j
    grid = current.grid
    if grid.kind == "cartesian":
        return d4(jx, grid.hx, axis=1) + d4(jy, grid.hy, axis=0)
    c, s, r = np.cos(grid.phi), np.sin(grid.phi), grid.r
    jr = c * jx + s * jy
    jphi = -s * jx + c * jy
    return d4(r * jr, grid.hr, axis=0) / r + d4_periodic(jphi, grid.dphi, axis=1) / r


def smooth_interior(current, edge=4, core=8):
    """Mask of nodes where the stencils see a smooth field.

    Drops `edge` nodes at the outer boundary (and the outer `edge` radial
    nodes on polar grids).  Around a flux line the density behaves as
    r^(2|l - alpha|) with a possibly fractional power, so nodes within
    ``core * h`` of the axis are dropped as well.
    """
    grid = current.grid
    mask = np.zeros(grid.shape, dtype=bool)
    if grid.kind == "cartesian":
        mask[edge:-edge, edge:-edge] = True
    else:
        mask[edge:-edge, :] = True
    if isinstance(current.potential, FluxLinePotential) or (
            isinstance(current.potential, GaugeShiftedPotential) and isinstance(current.potential.base, FluxLinePotential)):
        h = grid.h if grid.kind == "cartesian" else grid.hr
        mask &= grid.r > core * h
    return mask


def continuity_residual(current):
    """max |div j| * h / max |j| over `smooth_interior` (0 for a current-free field)."""
    jmax = float(np.max(np.hypot(*current.j)))
    if jmax == 0.0:
        return 0.0
    d = divergence(current)
    return float(np.max(np.abs(d[smooth_interior(current)]))) * current.grid.h / jmax


def analytic_current_profile(spec, ctx, r, z=0.0):
    """Closed-form (rho, j_phi, j_z) radial profiles of a single mode.

    Normalizations match `modes.eval_mode`.  For FREE_LG away from the waist
    the radial diffraction current is not included.
    """
    from .modes import bessel_radial, lg_radial

    if isinstance(spec, (list, tuple)):
        raise ModeError("analytic profiles exist for single modes only")
    r = np.asarray(r, dtype=float)
    kz = mode_kz(spec, ctx)
    if spec.is_bessel:
        rho = bessel_radial(spec, r) ** 2
        ell_eff = spec.ell - spec.alpha if spec.family is Family.AB_BESSEL else spec.ell
        circ = np.full_like(r, float(ell_eff))
    elif spec.family is Family.LANDAU_LG:
        rho = lg_radial(spec.ell, spec.n, ctx.w_m, r) ** 2
        circ = spec.ell + ctx.sigma * 2.0 * r**2 / ctx.w_m**2
    else:
        w = beam_geometry(spec.w0, ctx.k, z).w
        rho = lg_radial(spec.ell, spec.n, w, r) ** 2
        circ = np.full_like(r, float(spec.ell))
    with np.errstate(divide="ignore", invalid="ignore"):
        j_phi = (HBAR / MASS) * np.where(r > 0, circ / r, 0.0) * rho
    return rho, j_phi, (HBAR / MASS) * kz * rho


# -------------------------------------------------------------------- gauge


def _numeric_grad(chi, h):
    def grad(x, y):
        d = 1e-4 * h
        gx = (chi(x + d, y) - chi(x - d, y)) / (2 * d)
        gy = (chi(x, y + d) - chi(x, y - d)) / (2 * d)
        return np.broadcast_to(gx, np.broadcast(x, y).shape), np.broadcast_to(gy, np.broadcast(x, y).shape)

    return grad


def _boundary_loop(grid):
    if grid.kind == "cartesian":
        x, y = grid.x1d, grid.y1d
        L = grid.half_extent
        bottom = np.stack([x, np.full_like(x, -L)], 1)
        right = np.stack([np.full_like(y, L), y], 1)[1:]
        top = np.stack([x[::-1], np.full_like(x, L)], 1)[1:]
        left = np.stack([np.full_like(y, -L), y[::-1]], 1)[1:]
        return np.concatenate([bottom, right, top, left])  # closed: last == first
    phi = np.append(grid.phi1d, 2 * math.pi)
    r = grid.r1d[-1]
    return np.stack([r * np.cos(phi), r * np.sin(phi)], 1)


def winding_of(chi, grad_chi, grid, tol=1e-2):
    """Check chi is single-valued: circulation of grad chi around the grid boundary
    must vanish, and node-to-node increments must agree with the gradient."""
    loop = _boundary_loop(grid)
    gx, gy = grad_chi(loop[:, 0], loop[:, 1])
    gx = np.broadcast_to(gx, loop[:, 0].shape)
    gy = np.broadcast_to(gy, loop[:, 0].shape)
    dl = np.diff(loop, axis=0)
    circ = float(np.sum(0.5 * (gx[:-1] + gx[1:]) * dl[:, 0] + 0.5 * (gy[:-1] + gy[1:]) * dl[:, 1]))
    if abs(circ) > tol:
        raise GaugeError(f"gauge function is multivalued: circulation {circ:.4g} around the grid boundary")
    # Branch cuts show up as increments far from the gradient prediction.
    X, Y = grid.x, grid.y
    c = chi(X, Y)
    gX, gY = grad_chi(X, Y)
    gX = np.broadcast_to(gX, X.shape)
    gY = np.broadcast_to(gY, X.shape)
    for axis in (0, 1):
        dc = np.diff(c, axis=axis)
        dx = np.diff(X, axis=axis)
        dy = np.diff(Y, axis=axis)
        pred = 0.5 * (np.take(gX, range(1, X.shape[axis]), axis) + np.take(gX, range(X.shape[axis] - 1), axis)) * dx \
            + 0.5 * (np.take(gY, range(1, X.shape[axis]), axis) + np.take(gY, range(X.shape[axis] - 1), axis)) * dy
        if np.any(np.abs(dc - pred) > 1.0):
            raise GaugeError("gauge function jumps between neighbouring nodes (branch cut)")
    return circ


def gauge_transform(field, chi, grad_chi=None):
    """Apply psi -> psi exp(i e chi / hbar), A -> A + grad chi.

    Parameters
    ----------
    chi : callable
        ``chi(x, y)`` evaluated on node coordinates; must be single-valued.
    grad_chi : callable, optional
        ``grad_chi(x, y) -> (gx, gy)``.  Central differences of `chi` are used
        when omitted.

    Returns
    -------
    (FieldMap, VectorPotential)
        Transformed field (carrying the new potential) and the new potential.
    """
    if grad_chi is None:
        grad_chi = _numeric_grad(chi, field.grid.h)
    winding_of(chi, grad_chi, field.grid)
    phase = np.exp(1j * CHARGE * np.asarray(chi(field.grid.x, field.grid.y), dtype=float) / HBAR)
    new_A = GaugeShiftedPotential(field.potential, grad_chi)
    if field.chi is None:
        total_chi = chi
    else:
        prev = field.chi
        total_chi = lambda x, y: prev(x, y) + chi(x, y)
    out = replace(field, psi=np.array(field.psi * phase), potential=new_A, chi=total_chi)
    return out, new_A
