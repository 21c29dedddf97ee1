"""Electron vortex beams along a magnetic field.

Analytic Bessel, Aharonov-Bohm and Landau modes, sampled densities and
currents, angular-momentum observables, Landau-Zeeman-Gouy evolution of
superpositions, and a Crank-Nicolson paraxial propagator used as an
independent numerical oracle.
"""

from .modes import (CHARGE, HBAR, MASS, Family, ModeSpec, PhysicalContext, beam_geometry, caustic_radius,
                    delta_kz_paraxial, dirac_phase, eval_mode, gouy_total, landau_kz_exact, landau_levels,
                    make_context)
from .field import CartesianGrid, PolarGrid, density_current, gauge_transform, sample
from .observables import (canonical_oam, centroid_and_momentum, kinetic_oam, magnetic_moment,
                          observables_report, spot_size)
from .evolution import (SuperpositionSpec, count_vortices, ehrenfest_check, evolve, make_balanced, make_offaxis,
                        propagate_analytic, rotation_angle)

__version__ = "0.1.0"

__all__ = [
    "CHARGE", "HBAR", "MASS", "Family", "ModeSpec", "PhysicalContext", "beam_geometry", "caustic_radius",
    "delta_kz_paraxial", "dirac_phase", "eval_mode", "gouy_total", "landau_kz_exact", "landau_levels",
    "make_context", "CartesianGrid", "PolarGrid", "density_current", "gauge_transform", "sample",
    "canonical_oam", "centroid_and_momentum", "kinetic_oam", "magnetic_moment", "observables_report",
    "spot_size", "SuperpositionSpec", "count_vortices", "ehrenfest_check", "evolve", "make_balanced",
    "make_offaxis", "propagate_analytic", "rotation_angle",
]
