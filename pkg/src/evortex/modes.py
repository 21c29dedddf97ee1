"""Physical context and the four analytic mode families.

Natural units are used throughout: hbar = m = 1, |e| = 1 and the electron
charge is ``e = -1``.  With this convention the Larmor frequency
``Omega = e*B/2 = -B/2`` is negative for ``B > 0`` while ``sigma = sgn(B)`` is
positive; formulas below are written with ``sigma`` and ``|Omega|`` so the two
signs never get mixed.

Families
--------
FREE_BESSEL   J_|l|(kappa r) exp(i l phi + i kz z)
FREE_LG       diffracting paraxial Laguerre-Gaussian beam with waist w0
AB_BESSEL     J_|l - alpha|(kappa r) exp(i l phi + i kz z) around a flux line
LANDAU_LG     non-diffracting LG beam with waist w_m in a uniform field
"""

import enum
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .specfun import bessel_j, bessel_peak, laguerre

HBAR = 1.0
MASS = 1.0
CHARGE = -1.0

UNIT_CONVENTION = {
    "hbar": HBAR,
    "mass": MASS,
    "charge": CHARGE,
    "note": "natural units hbar = m = |e| = 1, electron charge e = -1; Omega = e*B/2, sigma = sgn(B)",
}

PARAXIAL_THRESHOLD = 0.1


class ModeError(ValueError):
    """Mode parameters inconsistent with each other or with the context."""


class EvanescentError(ModeError):
    """Transverse wavenumber exceeds the total wavenumber."""


class BoundStateError(ModeError):
    """Transverse Landau energy reaches the total energy: no propagating mode."""


class ParaxialityError(ModeError):
    """E_perp / E exceeds the configured paraxial threshold."""


class ParaxialityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class PhysicalContext:
    """Electron energy and longitudinal magnetic field with derived scales.

    ``w_m`` and ``z_m`` are undefined in free space (``B == 0``); accessing
    them then raises `ModeError`.  Check `has_field` first.
    """

    B: float
    E: float

    @property
    def sigma(self) -> int:
        return int(np.sign(self.B))

    @property
    def has_field(self) -> bool:
        return self.B != 0.0

    @property
    def Omega(self) -> float:
        return CHARGE * self.B / (2.0 * MASS)

    @property
    def abs_Omega(self) -> float:
        return abs(self.Omega)

    @property
    def k(self) -> float:
        return math.sqrt(2.0 * MASS * self.E) / HBAR

    @property
    def v(self) -> float:
        return math.sqrt(2.0 * self.E / MASS)

    @property
    def w_m(self) -> float:
        if not self.has_field:
            raise ModeError("magnetic length w_m is undefined for B = 0")
        return 2.0 * math.sqrt(HBAR / abs(CHARGE * self.B))

    @property
    def z_m(self) -> float:
        if not self.has_field:
            raise ModeError("Larmor length z_m is undefined for B = 0")
        return self.v / self.abs_Omega

    def describe(self) -> dict:
        out = {"B": self.B, "E": self.E, "sigma": self.sigma, "Omega": self.Omega,
               "k": self.k, "v": self.v}
        if self.has_field:
            out.update(w_m=self.w_m, z_m=self.z_m)
        else:
            out.update(w_m=None, z_m=None)
        return out


def make_context(B, E):
    """Build a `PhysicalContext`; ``E`` must be positive and both finite."""
    B = float(B)
    E = float(E)
    if not (math.isfinite(B) and math.isfinite(E)):
        raise ModeError("B and E must be finite")
    if E <= 0:
        raise ModeError(f"electron energy must be positive, got E={E}")
    return PhysicalContext(B=B, E=E)


class Family(enum.Enum):
    FREE_BESSEL = "free_bessel"
    FREE_LG = "free_lg"
    AB_BESSEL = "ab_bessel"
    LANDAU_LG = "landau_lg"


@dataclass(frozen=True)
class ModeSpec:
    """Quantum numbers of one analytic eigenmode.

    Only the fields relevant to ``family`` are meaningful: ``kappa`` for the
    Bessel families, ``alpha`` for AB_BESSEL, ``n`` for the LG families and
    ``w0`` for FREE_LG.  Use the ``free_bessel`` / ``free_lg`` / ``ab_bessel``
    / ``landau`` constructors.
    """

    family: Family
    ell: int
    n: int = 0
    kappa: float = 0.0
    alpha: float = 0.0
    w0: float = 0.0

    def __post_init__(self):
        if int(self.ell) != self.ell:
            raise ModeError(f"vortex charge must be an integer, got {self.ell}")
        if int(self.n) != self.n or self.n < 0:
            raise ModeError(f"radial index must be a non-negative integer, got {self.n}")
        if self.family in (Family.FREE_BESSEL, Family.AB_BESSEL) and not self.kappa > 0:
            raise ModeError("Bessel modes need kappa > 0")
        if self.family is Family.FREE_LG and not self.w0 > 0:
            raise ModeError("free LG modes need w0 > 0")
        if not math.isfinite(self.alpha):
            raise ModeError("flux parameter must be finite")

    @classmethod
    def free_bessel(cls, ell, kappa):
        return cls(Family.FREE_BESSEL, int(ell), kappa=float(kappa))

    @classmethod
    def ab_bessel(cls, ell, alpha, kappa):
        return cls(Family.AB_BESSEL, int(ell), kappa=float(kappa), alpha=float(alpha))

    @classmethod
    def free_lg(cls, ell, n, w0):
        return cls(Family.FREE_LG, int(ell), int(n), w0=float(w0))

    @classmethod
    def landau(cls, ell, n=0):
        return cls(Family.LANDAU_LG, int(ell), int(n))

    @property
    def is_bessel(self) -> bool:
        return self.family in (Family.FREE_BESSEL, Family.AB_BESSEL)

    @property
    def is_lg(self) -> bool:
        return self.family in (Family.FREE_LG, Family.LANDAU_LG)

    @property
    def bessel_order(self) -> float:
        if self.family is Family.AB_BESSEL:
            return abs(self.ell - self.alpha)
        return float(abs(self.ell))

    @property
    def gouy_index(self) -> int:
        """2n + |l| + 1."""
        return 2 * self.n + abs(self.ell) + 1

    def to_dict(self) -> dict:
        d = {"family": self.family.value, "ell": self.ell}
        if self.is_lg:
            d["n"] = self.n
        if self.is_bessel:
            d["kappa"] = self.kappa
        if self.family is Family.AB_BESSEL:
            d["alpha"] = self.alpha
        if self.family is Family.FREE_LG:
            d["w0"] = self.w0
        return d

    @classmethod
    def from_dict(cls, d):
        fam = Family(d["family"])
        return cls(fam, int(d["ell"]), int(d.get("n", 0)), float(d.get("kappa", 0.0)),
                   float(d.get("alpha", 0.0)), float(d.get("w0", 0.0)))


class LandauLevel(NamedTuple):
    """Landau level of mode (l, n) in a field of direction sigma.

    Energies are in units of |Omega| and are exact integers:
    ``e_perp = e_zeeman + e_gouy = 2N + 1``.
    """

    N: int
    e_perp: int
    e_zeeman: int
    e_gouy: int


def landau_levels(ell, n, sigma):
    """Landau level index and the Zeeman + Gouy split of E_perp."""
    ell, n, sigma = int(ell), int(n), int(sigma)
    if n < 0:
        raise ModeError("radial index must be >= 0")
    if sigma not in (-1, 1):
        raise ModeError("sigma must be +1 or -1")
    s = int(np.sign(sigma * ell))
    N = n + abs(ell) * (1 + s) // 2
    zeeman = sigma * ell  # -Omega*l / |Omega|
    gouy = 2 * n + abs(ell) + 1
    return LandauLevel(N=N, e_perp=2 * N + 1, e_zeeman=zeeman, e_gouy=gouy)


def transverse_energy(ctx, ell, n):
    """E_perp = -Omega*l + |Omega|(2n + |l| + 1) in absolute units."""
    if not ctx.has_field:
        raise ModeError("Landau levels need B != 0")
    lvl = landau_levels(ell, n, ctx.sigma)
    return HBAR * ctx.abs_Omega * lvl.e_perp


def bessel_kz(E, kappa):
    """Longitudinal wavenumber of a Bessel mode, kz = sqrt(2E - kappa^2)."""
    E = float(E)
    kappa = float(kappa)
    if E <= 0:
        raise ModeError("energy must be positive")
    if kappa < 0:
        raise ModeError("kappa must be >= 0")
    kz2 = 2.0 * MASS * E / HBAR**2 - kappa**2
    if kz2 <= 0:
        raise EvanescentError(f"kappa={kappa} exceeds k={math.sqrt(2 * MASS * E) / HBAR}")
    return math.sqrt(kz2)


def landau_kz_exact(ctx, ell, n):
    """Exact longitudinal wavenumber of a Landau mode, sqrt(2(E - E_perp))."""
    e_perp = transverse_energy(ctx, ell, n)
    if e_perp >= ctx.E:
        raise BoundStateError(f"E_perp={e_perp} >= E={ctx.E}: mode ({ell}, {n}) does not propagate")
    return math.sqrt(2.0 * MASS * (ctx.E - e_perp)) / HBAR


def delta_kz_paraxial(ctx, ell, n, threshold=PARAXIAL_THRESHOLD, strict=True):
    """Paraxial Landau-Zeeman-Gouy wavenumber shift.

    ``dkz = -[sigma*l + (2n + |l| + 1)] / z_m``.  If ``E_perp/E`` is not below
    `threshold` a `ParaxialityError` is raised (or a warning when
    ``strict=False``).
    """
    ratio = transverse_energy(ctx, ell, n) / ctx.E
    if ratio >= threshold:
        msg = f"E_perp/E = {ratio:.3g} >= {threshold} for mode ({ell}, {n})"
        if strict:
            raise ParaxialityError(msg)
        warnings.warn(msg, ParaxialityWarning, stacklevel=2)
    lvl = landau_levels(ell, n, ctx.sigma)
    return -(lvl.e_zeeman + lvl.e_gouy) / ctx.z_m


def check_consistent(spec, ctx):
    if spec.family is Family.LANDAU_LG:
        if not ctx.has_field:
            raise ModeError("Landau modes require B != 0")
    elif ctx.has_field:
        raise ModeError(f"{spec.family.value} modes are eigenmodes only for B = 0 (flux lines carry no uniform field)")


def mode_kz(spec, ctx):
    """Longitudinal wavenumber of `spec` in `ctx` (exact dispersion)."""
    check_consistent(spec, ctx)
    if spec.is_bessel:
        return bessel_kz(ctx.E, spec.kappa)
    if spec.family is Family.LANDAU_LG:
        return landau_kz_exact(ctx, spec.ell, spec.n)
    return ctx.k


class BeamGeometry(NamedTuple):
    w: float
    R: float
    zeta: float
    zR: float


def rayleigh_length(w0, k):
    return k * w0**2 / 2.0


def beam_geometry(w0, k, z):
    """Width, wavefront radius and Gouy angle of a diffracting LG beam."""
    if w0 <= 0 or k <= 0:
        raise ModeError("w0 and k must be positive")
    zR = rayleigh_length(w0, k)
    w = w0 * math.sqrt(1.0 + (z / zR) ** 2)
    R = math.inf if z == 0 else z * (1.0 + (zR / z) ** 2)
    return BeamGeometry(w=w, R=R, zeta=math.atan(z / zR), zR=zR)


def gouy_total(ell, n):
    """Total Gouy phase (2n + |l| + 1) pi accumulated through the focus."""
    return (2 * int(n) + abs(int(ell)) + 1) * math.pi


def dirac_phase(alpha):
    """Dirac phase 2*pi*alpha of a flux line."""
    return 2.0 * math.pi * float(alpha)


def caustic_radius(ell, alpha, kappa):
    """Radius |l - alpha| / kappa of the first-maximum caustic of an AB mode."""
    if kappa <= 0:
        raise ModeError("kappa must be positive")
    return abs(ell - alpha) / kappa


def lg_radial(ell, n, w, r):
    """Unit-norm LG radial amplitude (real, no phase factors) for width w.

    ``2*pi * int |u|^2 r dr = 1``.
    """
    a = abs(int(ell))
    r = np.asarray(r, dtype=float)
    norm = math.sqrt(2.0 * math.factorial(n) / (math.pi * math.factorial(n + a))) / w
    s = 2.0 * r**2 / w**2
    return norm * np.sqrt(s) ** a * laguerre(n, a, s) * np.exp(-s / 2.0)


def bessel_radial(spec, r):
    """Bessel-family radial amplitude scaled to unit peak."""
    nu = spec.bessel_order
    _, peak = bessel_peak(nu)
    return bessel_j(nu, spec.kappa * np.asarray(r, dtype=float)) / peak


def eval_mode(spec, ctx, r, phi, z=0.0):
    """Complex amplitude of `spec` at cylindrical points (r, phi, z).

    LG families are normalized to unit transverse L2 norm, Bessel families to
    unit peak modulus.  The longitudinal factor ``exp(i kz z)`` is included,
    and FREE_LG carries the full diffraction and Gouy factors.
    """
    check_consistent(spec, ctx)
    r = np.asarray(r, dtype=float)
    phi = np.asarray(phi, dtype=float)
    vortex = np.exp(1j * spec.ell * phi)
    if spec.is_bessel:
        kz = bessel_kz(ctx.E, spec.kappa)
        return bessel_radial(spec, r) * vortex * np.exp(1j * kz * z)
    if spec.family is Family.LANDAU_LG:
        kz = landau_kz_exact(ctx, spec.ell, spec.n)
        return lg_radial(spec.ell, spec.n, ctx.w_m, r) * vortex * np.exp(1j * kz * z)
    return free_lg_envelope(spec, ctx.k, r, phi, z) * np.exp(1j * ctx.k * z)


def free_lg_envelope(spec, k, r, phi, z):
    """FREE_LG amplitude without the carrier exp(i k z)."""
    g = beam_geometry(spec.w0, k, z)
    r = np.asarray(r, dtype=float)
    inv_R = z / (z**2 + g.zR**2)
    curvature = np.exp(1j * k * r**2 * inv_R / 2.0)
    gouy = np.exp(-1j * spec.gouy_index * g.zeta)
    return lg_radial(spec.ell, spec.n, g.w, r) * curvature * np.exp(1j * spec.ell * np.asarray(phi)) * gouy
