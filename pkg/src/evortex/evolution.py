"""Propagation of Landau / LG superpositions and image metrology along z.

Each Landau term picks up the Landau-Zeeman-Gouy phase ``dkz * z`` relative
to the common carrier ``exp(i k z)``, which is dropped.  Image rotation is
measured by angular cross-correlation of the densities, vortices by phase
winding around grid plaquettes, and the centroid is compared with a classical
cyclotron trajectory integrated with RK4.
"""

import math
from dataclasses import dataclass
from functools import reduce
from typing import NamedTuple, Optional

import numpy as np
from scipy import ndimage

from .field import FieldMap, potential_for, _normalize_terms
from .modes import (CHARGE, MASS, Family, ModeError, delta_kz_paraxial,
                    eval_mode, free_lg_envelope, landau_kz_exact, lg_radial, mode_kz)


class RotationUndefinedError(ValueError):
    """Density is axially symmetric, so no rotation angle can be assigned."""


@dataclass(frozen=True)
class SuperpositionSpec:
    """Coefficient-weighted LG-family modes sharing one physical context."""

    terms: tuple
    ctx: object

    def __post_init__(self):
        object.__setattr__(self, "terms", _normalize_terms(self.terms))

    def validate_analytic(self):
        for spec, _ in self.terms:
            if spec.family is Family.LANDAU_LG and not self.ctx.has_field:
                raise ModeError("Landau terms need B != 0")
            if spec.family is Family.FREE_LG and self.ctx.has_field:
                raise ModeError("free LG terms are only propagated analytically for B = 0")
            if not spec.is_lg:
                raise ModeError(f"analytic evolution supports LG families only, got {spec.family.value}")

    def to_dict(self):
        return {"ctx": {"B": self.ctx.B, "E": self.ctx.E},
                "terms": [{"mode": s.to_dict(), "coeff": [c.real, c.imag]} for s, c in self.terms]}


def make_balanced(ell, n, ctx):
    """psi_{-l,n} + psi_{+l,n}: 2|l| petals, zero canonical OAM."""
    ell = int(ell)
    if ell == 0:
        raise ModeError("balanced superposition needs l != 0")
    from .modes import ModeSpec

    return SuperpositionSpec(((ModeSpec.landau(-ell, n), 1.0), (ModeSpec.landau(ell, n), 1.0)), ctx)


def make_offaxis(ell, n, a, ctx):
    """psi_{0,n} + a psi_{l,n}: |l| off-axis vortices for n = 0."""
    ell = int(ell)
    if ell == 0 or a == 0:
        raise ModeError("off-axis superposition needs l != 0 and a != 0")
    from .modes import ModeSpec

    return SuperpositionSpec(((ModeSpec.landau(0, n), 1.0), (ModeSpec.landau(ell, n), complex(a))), ctx)


# ------------------------------------------------------------ propagation


def term_amplitude(spec, ctx, grid, z, evolution):
    """Sample one term (unit coefficient) according to the evolution mode."""
    r, phi = grid.r, grid.phi
    if evolution == "eigen":
        return eval_mode(spec, ctx, r, phi, z)
    if spec.family is Family.FREE_LG:
        return free_lg_envelope(spec, ctx.k, r, phi, z)
    if spec.family is not Family.LANDAU_LG:
        raise ModeError(f"no analytic evolution for {spec.family.value}")
    if evolution == "paraxial":
        dk = delta_kz_paraxial(ctx, spec.ell, spec.n)
    elif evolution == "exact":
        dk = landau_kz_exact(ctx, spec.ell, spec.n) - ctx.k
    else:
        raise ModeError(f"unknown evolution mode {evolution!r}")
    return lg_radial(spec.ell, spec.n, ctx.w_m, r) * np.exp(1j * (spec.ell * phi + dk * z))


def term_wavenumber(spec, ctx, evolution):
    """Total longitudinal wavenumber of one term (carrier included)."""
    if evolution == "eigen":
        return mode_kz(spec, ctx)
    if spec.family is Family.FREE_LG:
        return ctx.k
    if evolution == "paraxial":
        return ctx.k + delta_kz_paraxial(ctx, spec.ell, spec.n)
    return landau_kz_exact(ctx, spec.ell, spec.n)


def propagate_analytic(spec, grid, z, exact_kz=False):
    """Frame of superposition `spec` at distance z, carrier phase removed.

    Landau terms use the paraxial shift ``dkz`` by default; ``exact_kz=True``
    uses the exact dispersion ``kz - k`` and bypasses the paraxiality gate.
    Free LG terms (B = 0) use the full diffraction form.
    """
    spec.validate_analytic()
    evolution = "exact" if exact_kz else "paraxial"
    psi = np.zeros(grid.shape, dtype=complex)
    for mode, c in spec.terms:
        psi += c * term_amplitude(mode, spec.ctx, grid, z, evolution)
    return FieldMap(grid=grid, z=float(z), psi=psi, terms=spec.terms, ctx=spec.ctx,
                    potential=potential_for(spec.terms, spec.ctx), evolution=evolution)


# ---------------------------------------------------------------- rotation


def polar_density(frame, nr=160, nphi=720, r_max=None):
    """Density on a polar raster: (r nodes, radial weights, rho[nr, nphi]).

    Polar frames are used as they are; Cartesian frames are resampled with
    cubic splines on circles up to 0.95 of the half extent.
    """
    grid = frame.grid
    rho = frame.rho
    if grid.kind == "polar":
        return grid.r1d, grid.r1d * grid.hr, rho
    if r_max is None:
        r_max = 0.95 * grid.half_extent
    hr = r_max / nr
    r = (np.arange(nr) + 0.5) * hr
    phi = np.arange(nphi) * (2 * math.pi / nphi)
    X = r[:, None] * np.cos(phi)[None, :]
    Y = r[:, None] * np.sin(phi)[None, :]
    ix = (X + grid.half_extent) / grid.hx
    iy = (Y + grid.half_extent) / grid.hy
    out = ndimage.map_coordinates(rho, [iy, ix], order=3, mode="nearest")
    return r, r * hr, out


class Correlation(NamedTuple):
    angle: float        # raw peak location in (-pi/s, pi/s]
    peak: float         # normalized correlation at the peak (1 for rigid rotation)
    symmetry: int       # rotational symmetry order s of the reference density


def _symmetry_order(power, rel=1e-8, axisym=1e-9):
    # Cartesian resampling leaves ~1e-12 of 4-fold grid anisotropy in the power.
    p = power[1:]
    if p.size == 0 or np.max(p) <= axisym * power[0]:
        raise RotationUndefinedError("density is axially symmetric; rotation angle undefined")
    significant = np.nonzero(p > rel * np.max(p))[0] + 1
    return int(reduce(math.gcd, significant.tolist()))


def angular_correlation(frame0, frameZ, nr=160, nphi=720):
    """Peak of C(d) = int rho_Z(r, phi + d) rho_0(r, phi) dA over the shift d.

    The peak bin is refined with a parabola through its neighbours and then
    polished with Newton steps on the band-limited correlation series.
    """
    _, w0, rho0 = polar_density(frame0, nr, nphi)
    _, wz, rhoz = polar_density(frameZ, nr, nphi)
    n = rho0.shape[1]
    F0 = np.fft.fft(rho0, axis=1)
    FZ = np.fft.fft(rhoz, axis=1)
    power = np.sum(w0[:, None] * np.abs(F0[:, : n // 2 + 1]) ** 2, axis=0)
    s = _symmetry_order(power)
    cm = np.sum(w0[:, None] * FZ * np.conj(F0), axis=0) / n
    corr = np.real(np.fft.ifft(cm)) * n
    m = np.fft.fftfreq(n, d=1.0 / n)
    dphi = 2 * math.pi / n
    i = int(np.argmax(corr))
    c_m, c_0, c_p = corr[i - 1], corr[i], corr[(i + 1) % n]
    denom = c_m - 2 * c_0 + c_p
    frac = 0.5 * (c_m - c_p) / denom if denom != 0 else 0.0
    theta = (i + frac) * dphi
    for _ in range(4):
        e = np.exp(1j * m * theta)
        d1 = np.real(np.sum(1j * m * cm * e))
        d2 = np.real(np.sum(-(m**2) * cm * e))
        if d2 >= 0:
            break
        theta -= d1 / d2
    peak = float(np.real(np.sum(cm * np.exp(1j * m * theta))))
    norm = math.sqrt(np.sum(w0[:, None] * rho0**2) * np.sum(wz[:, None] * rhoz**2))
    period = 2 * math.pi / s
    angle = (theta + period / 2) % period - period / 2
    return Correlation(angle=float(angle), peak=peak / norm if norm > 0 else 0.0, symmetry=s)


def unwrap_to(angle, previous, period):
    """Representative of ``angle`` modulo ``period`` closest to ``previous``."""
    return angle + period * round((previous - angle) / period)


def rotation_angle(frame0, frameZ, previous=0.0, **kw):
    """Rotation of the density of frameZ relative to frame0.

    For s-fold symmetric densities the angle is only defined modulo 2 pi / s;
    the representative nearest to `previous` (the value at the preceding z
    sample) is returned, so successive calls along z give a continuous track.

    Raises
    ------
    RotationUndefinedError
        For axially symmetric densities.
    """
    c = angular_correlation(frame0, frameZ, **kw)
    return unwrap_to(c.angle, previous, 2 * math.pi / c.symmetry)


# ----------------------------------------------------------------- vortices


class Vortex(NamedTuple):
    x: float
    y: float
    charge: int
    radius: float       # cluster radius (grid units times spacing); 0 for one plaquette


def _plaquette_winding(psi, periodic_axis1=False):
    if periodic_axis1:
        a = psi[:-1, :]
        b = np.roll(psi, -1, axis=1)[:-1, :]
        c = np.roll(psi, -1, axis=1)[1:, :]
        d = psi[1:, :]
    else:
        a, b, c, d = psi[:-1, :-1], psi[:-1, 1:], psi[1:, 1:], psi[1:, :-1]
    ang = lambda p, q: np.angle(q * np.conj(p))
    total = ang(a, b) + ang(b, c) + ang(c, d) + ang(d, a)
    w = np.rint(total / (2 * math.pi)).astype(int)
    w[(a == 0) | (b == 0) | (c == 0) | (d == 0)] = 0
    return w


def _zero_node_winding(psi, w):
    """Attribute the winding of the 8-neighbour ring around each exactly-zero
    interior node (skipped by the plaquettes that touch it) to one plaquette."""
    ring = [(-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1)]
    for iy, ix in np.argwhere(psi[1:-1, 1:-1] == 0) + 1:
        vals = [psi[iy + dy, ix + dx] for dy, dx in ring]
        if any(v == 0 for v in vals):
            continue
        # ring listed counterclockwise in (x, y): rows are y, columns x
        total = sum(np.angle(q * np.conj(p)) for p, q in zip(vals, vals[1:] + vals[:1]))
        w[iy, ix] += int(np.rint(total / (2 * math.pi)))


def count_vortices(frame, edge=2):
    """Phase singularities of the frame as a list of `Vortex`.

    The winding number counted counterclockwise in (x, y) is computed for every
    plaquette; adjacent non-zero plaquettes are merged into one vortex whose
    charge is their sum.  Plaquettes within `edge` cells of the outer boundary
    are excluded.
    """
    grid = frame.grid
    psi = np.asarray(frame.psi)
    if grid.kind == "cartesian":
        w = _plaquette_winding(psi)
        _zero_node_winding(psi, w)
        cx = 0.5 * (grid.x1d[:-1] + grid.x1d[1:])
        cy = 0.5 * (grid.y1d[:-1] + grid.y1d[1:])
        CX, CY = np.meshgrid(cx, cy)
        if edge:
            w[:edge, :] = 0
            w[-edge:, :] = 0
            w[:, :edge] = 0
            w[:, -edge:] = 0
        h = grid.h
    else:
        # Polar: plaquettes between rings (periodic in phi) plus the core disk
        # enclosed by the innermost ring.  psi[ir, iphi] with phi increasing
        # counterclockwise, so a->b follows +phi; reverse to keep the
        # counterclockwise-in-xy orientation.
        w = -_plaquette_winding(psi, periodic_axis1=True)
        rr = grid.r1d[:-1] + 0.5 * grid.hr
        pp = grid.phi1d + 0.5 * grid.dphi
        if edge:
            w[-edge:, :] = 0
        CX = rr[:, None] * np.cos(pp)[None, :]
        CY = rr[:, None] * np.sin(pp)[None, :]
        h = grid.hr
    labels, nlab = ndimage.label(w != 0, structure=np.ones((3, 3), dtype=int))
    out = []
    for k in range(1, nlab + 1):
        mask = labels == k
        q = int(np.sum(w[mask]))
        if q == 0:
            continue
        wt = np.abs(w[mask]).astype(float)
        x = float(np.sum(CX[mask] * wt) / np.sum(wt))
        y = float(np.sum(CY[mask] * wt) / np.sum(wt))
        rad = float(np.max(np.hypot(CX[mask] - x, CY[mask] - y))) if mask.sum() > 1 else 0.0
        out.append(Vortex(x, y, q, rad))
    if grid.kind == "polar":
        ring = psi[0]
        core = int(np.rint(np.sum(np.angle(np.roll(ring, -1) * np.conj(ring))) / (2 * math.pi)))
        # Charges already attributed to vortices crossing ring 0 are not
        # double-counted because the core only sees the innermost loop.
        if core != 0:
            out.append(Vortex(0.0, 0.0, core, 0.5 * h))
    out.sort(key=lambda v: (round(math.atan2(v.y, v.x), 9), v.x))
    return out


# --------------------------------------------------------------- classical


@dataclass(frozen=True)
class ClassicalState:
    r: np.ndarray
    p: np.ndarray


def _rk4_run(r, p, B, t_total, nsteps):
    bvec = np.array([0.0, 0.0, B])
    q = CHARGE / MASS
    dt = t_total / nsteps
    for _ in range(nsteps):
        k1r, k1p = p / MASS, q * np.cross(p, bvec)
        p2 = p + 0.5 * dt * k1p
        k2r, k2p = p2 / MASS, q * np.cross(p2, bvec)
        p3 = p + 0.5 * dt * k2p
        k3r, k3p = p3 / MASS, q * np.cross(p3, bvec)
        p4 = p + dt * k3p
        k4r, k4p = p4 / MASS, q * np.cross(p4, bvec)
        r = r + dt / 6.0 * (k1r + 2 * k2r + 2 * k3r + k4r)
        p = p + dt / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
    return r, p


def classical_trajectory(init, B, z_samples, steps_per_orbit=2000, drift_tol=1e-9):
    """Classical electron in B e_z, sampled at the given z positions.

    z is the evolution parameter: t = (z - z0) m / p_z with p_z > 0 conserved.
    RK4 substeps resolve each cyclotron period with at least
    `steps_per_orbit` steps; the step is halved until the relative drift of
    |p| stays below `drift_tol`.
    """
    r0 = np.asarray(init.r, dtype=float)
    p0 = np.asarray(init.p, dtype=float)
    if not p0[2] > 0:
        raise ValueError("classical trajectory needs p_z > 0")
    zs = np.asarray(z_samples, dtype=float)
    omega_c = abs(CHARGE * B) / MASS
    while True:
        dt_max = (2 * math.pi / omega_c) / steps_per_orbit if omega_c > 0 else math.inf
        states = []
        r, p = r0.copy(), p0.copy()
        z_prev = r0[2]
        drift = 0.0
        for z in zs:
            t = (z - z_prev) * MASS / p[2]
            if t < 0:
                raise ValueError("z samples must be non-decreasing and start at or after init.r[2]")
            n = max(1, math.ceil(t / dt_max)) if t > 0 else 0
            if n:
                r, p = _rk4_run(r, p, B, t, n)
            z_prev = z
            r = np.array([r[0], r[1], z])
            states.append(ClassicalState(r.copy(), p.copy()))
            drift = max(drift, abs(np.linalg.norm(p) / np.linalg.norm(p0) - 1.0))
        if drift < drift_tol or steps_per_orbit > 1e6:
            return states
        steps_per_orbit *= 2


# ----------------------------------------------------------------- results


@dataclass
class EvolutionResult:
    z_samples: np.ndarray
    rotation_angle: np.ndarray     # NaN where undefined (axisymmetric density)
    correlation_peak: np.ndarray
    centroid_track: np.ndarray     # (nz, 2)
    vortex_positions: list
    norms: np.ndarray
    symmetry: Optional[int] = None
    frames: Optional[list] = None

    def to_dict(self, z_unit=1.0):
        rows = []
        for i, z in enumerate(self.z_samples):
            ang = self.rotation_angle[i]
            rows.append({
                "z": float(z),
                "z_over_unit": float(z / z_unit),
                "rotation_angle": None if not np.isfinite(ang) else float(ang),
                "correlation_peak": None if not np.isfinite(self.correlation_peak[i]) else float(self.correlation_peak[i]),
                "centroid": [float(self.centroid_track[i, 0]), float(self.centroid_track[i, 1])],
                "norm": float(self.norms[i]),
                "vortices": [{"x": v.x, "y": v.y, "charge": v.charge, "radius": v.radius}
                             for v in self.vortex_positions[i]],
            })
        return {"symmetry": self.symmetry, "samples": rows}


def evolve(spec, grid, z_samples, exact_kz=False, keep_frames=False, vortices=True,
           frame_budget_bytes=256 * 2**20):
    """Propagate `spec` analytically over `z_samples` and measure every frame.

    Rotation angles are unwrapped sequentially in z order; frames are kept
    only when requested and within `frame_budget_bytes`.
    """
    from .observables import centroid

    zs = np.asarray(z_samples, dtype=float)
    frame_bytes = 16 * int(np.prod(grid.shape))
    if keep_frames and frame_bytes * len(zs) > frame_budget_bytes:
        raise MemoryError(f"{len(zs)} frames of {frame_bytes} bytes exceed the frame budget")
    frame0 = propagate_analytic(spec, grid, 0.0, exact_kz=exact_kz)
    angles = np.full(len(zs), np.nan)
    peaks = np.full(len(zs), np.nan)
    track = np.zeros((len(zs), 2))
    norms = np.zeros(len(zs))
    vlist = []
    frames = [] if keep_frames else None
    prev = 0.0
    sym = None
    for i, z in enumerate(zs):
        fr = frame0 if z == 0 else propagate_analytic(spec, grid, z, exact_kz=exact_kz)
        try:
            c = angular_correlation(frame0, fr)
        except RotationUndefinedError:
            c = None
        if c is not None:
            sym = c.symmetry
            prev = unwrap_to(c.angle, prev, 2 * math.pi / c.symmetry)
            angles[i] = prev
            peaks[i] = c.peak
        track[i] = centroid(fr)
        norms[i] = fr.norm()
        vlist.append(count_vortices(fr) if vortices else [])
        if keep_frames:
            frames.append(fr)
    return EvolutionResult(zs, angles, peaks, track, vlist, norms, sym, frames)


def fit_rate(x, y):
    """Least-squares slope of y(x) and the max residual relative to |slope|."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = np.max(np.abs(y - (slope * x + icpt)))
    return float(slope), float(resid / abs(slope)) if slope != 0 else float(resid)


def fit_circle(track):
    """Algebraic (Kasa) circle fit: centre (cx, cy) and radius."""
    x, y = track[:, 0], track[:, 1]
    A = np.column_stack([x, y, np.ones_like(x)])
    b = x**2 + y**2
    (a0, a1, a2), *_ = np.linalg.lstsq(A, b, rcond=None)
    cx, cy = a0 / 2, a1 / 2
    return float(cx), float(cy), float(math.sqrt(a2 + cx**2 + cy**2))


def orbit_rate(track, z):
    """Angular rate of a closed centroid orbit about its fitted centre."""
    cx, cy, _ = fit_circle(track)
    ang = np.unwrap(np.arctan2(track[:, 1] - cy, track[:, 0] - cx))
    return fit_rate(z, ang)[0]


# --------------------------------------------------------------- Ehrenfest


def centroid_tracks(spec, grid, z_samples, exact_kz=False):
    """Quantum centroid track and the classical trajectory seeded from it.

    The classical electron starts at the z = 0 centroid with the quantum
    transverse kinetic momentum and the carrier longitudinal momentum
    ``hbar k``, which is what the paraxial z-evolution corresponds to.
    """
    from .observables import centroid_and_momentum

    zs = np.asarray(z_samples, dtype=float)
    quantum = np.zeros((len(zs), 2))
    for i, z in enumerate(zs):
        quantum[i] = centroid_and_momentum(propagate_analytic(spec, grid, z, exact_kz=exact_kz))[0]
    f0 = propagate_analytic(spec, grid, zs[0], exact_kz=exact_kz)
    (x0, y0), p = centroid_and_momentum(f0)
    init = ClassicalState(np.array([x0, y0, zs[0]]), np.array([p[0], p[1], spec.ctx.k]))
    states = classical_trajectory(init, spec.ctx.B, zs)
    classical = np.array([[s.r[0], s.r[1]] for s in states])
    return quantum, classical


def ehrenfest_check(spec, grid, z_samples, exact_kz=False):
    """Max distance between the quantum centroid and the classical trajectory."""
    q, c = centroid_tracks(spec, grid, z_samples, exact_kz=exact_kz)
    return float(np.max(np.hypot(*(q - c).T)))
