import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from evortex.field import CartesianGrid, PolarGrid, density_current, sample
from evortex.modes import CHARGE, ModeError, ModeSpec, make_context
from evortex.observables import (GaugeBookkeepingError, UnderResolvedError, bessel_cutoff_grid, canonical_oam,
                                 centroid, centroid_and_momentum, kinetic_oam, magnetic_moment,
                                 observables_report, spot_size)


def landau(ctx, grid, ell, n):
    return sample([ModeSpec.landau(ell, n)], ctx, grid)


class TestLandau:
    @pytest.mark.parametrize("ell,n", [(0, 0), (2, 0), (-2, 1), (3, 2)])
    def test_canonical(self, ctx, landau_grid, ell, n):
        assert canonical_oam(landau(ctx, landau_grid, ell, n)) == pytest.approx(ell, abs=1e-4)

    def test_kinetic_example(self, ctx, landau_grid):
        # l = 1, n = 0, sigma = +1: 1 + 2 = 3
        assert kinetic_oam(density_current(landau(ctx, landau_grid, 1, 0))) == pytest.approx(3.0, abs=1e-4)

    def test_kinetic_antiparallel(self, ctx_neg, landau_grid):
        # sigma = -1, l = 1: 1 - 2 = -1
        assert kinetic_oam(density_current(landau(ctx_neg, landau_grid, 1, 0))) == pytest.approx(-1.0, abs=1e-4)

    def test_ground_state_kinetic_oam(self, ctx, landau_grid):
        assert kinetic_oam(density_current(landau(ctx, landau_grid, 0, 0))) == pytest.approx(ctx.sigma, abs=1e-4)

    def test_magnetic_moment_relation(self, ctx, landau_grid):
        cur = density_current(landau(ctx, landau_grid, -2, 1))
        assert magnetic_moment(cur) == pytest.approx(0.5 * CHARGE * kinetic_oam(cur), rel=1e-12)
        # L_kin = -2 + (2 + 2 + 1) = 3, so M_z B = e B L_kin / 2 = -3
        assert magnetic_moment(cur) * ctx.B == pytest.approx(-3.0, abs=1e-3)

    @pytest.mark.parametrize("ell,n", [(0, 0), (1, 2), (-3, 1)])
    def test_spot(self, ctx, landau_grid, ell, n):
        assert spot_size(landau(ctx, landau_grid, ell, n)) == pytest.approx(2 * n + abs(ell) + 1, abs=1e-6)

    def test_centroid_on_axis(self, ctx, landau_grid):
        cx, cy = centroid(landau(ctx, landau_grid, 2, 1))
        assert abs(cx) < 1e-12 and abs(cy) < 1e-12

    def test_kinetic_momentum_vanishes(self, ctx, landau_grid):
        _, (px, py, pz) = centroid_and_momentum(landau(ctx, landau_grid, 1, 1))
        assert abs(px) < 1e-8 and abs(py) < 1e-8
        assert pz == pytest.approx(ctx.k - 5 / ctx.z_m, rel=1e-6)

    @settings(max_examples=10, deadline=None)
    @given(ell=st.integers(-3, 3), n=st.integers(0, 2))
    def test_kinetic_symmetry(self, ell, n):
        g = CartesianGrid(128, 128, 5.0 * math.sqrt(2))
        a = kinetic_oam(density_current(landau(make_context(2.0, 2000.0), g, ell, n)))
        b = kinetic_oam(density_current(landau(make_context(-2.0, 2000.0), g, -ell, n)))
        assert a == pytest.approx(-b, abs=1e-3)


class TestBessel:
    @pytest.mark.parametrize("ell", [0, 1, 3])
    def test_free_bessel(self, free_ctx, ell):
        s = ModeSpec.free_bessel(ell, 0.6)
        f = sample([s], free_ctx, bessel_cutoff_grid(s))
        assert canonical_oam(f) == pytest.approx(ell, abs=1e-8)
        assert kinetic_oam(density_current(f)) == pytest.approx(ell, abs=1e-4)

    def test_ab_cutoff_independence(self, free_ctx):
        s = ModeSpec.ab_bessel(2, 0.7, 0.6)
        vals = [kinetic_oam(density_current(sample([s], free_ctx, bessel_cutoff_grid(s, m)))) for m in (3, 5, 8)]
        assert vals[0] == pytest.approx(1.3, abs=1e-3)
        assert max(vals) - min(vals) < 1e-6

    def test_cutoff_grid_requires_bessel(self):
        with pytest.raises(ModeError):
            bessel_cutoff_grid(ModeSpec.landau(0, 0))

    def test_under_resolved(self, free_ctx):
        s = ModeSpec.free_bessel(7, 0.6)
        with pytest.raises(UnderResolvedError):
            canonical_oam(sample([s], free_ctx, PolarGrid(64, 16, 20.0)))

    def test_spot_needs_lg(self, free_ctx):
        s = ModeSpec.free_bessel(0, 0.6)
        with pytest.raises(ModeError):
            spot_size(sample([s], free_ctx, bessel_cutoff_grid(s)))


class TestFreeLG:
    def test_spot_tracks_width(self):
        c = make_context(0.0, 2.0)
        g = CartesianGrid(256, 256, 8.0)
        f = sample([ModeSpec.free_lg(1, 1, 1.0)], c, g, z=c.k / 2)
        assert spot_size(f) == pytest.approx(4.0, abs=1e-5)


def test_bookkeeping_mismatch(ctx):
    # A carrier near the Nyquist limit defeats the stencil but not the FFT.
    g = CartesianGrid(64, 64, 6.0)
    f = landau(ctx, g, 0, 0)
    k = 0.8 * math.pi / g.h
    f = f.with_psi(f.psi * np.exp(1j * k * g.x))
    with pytest.raises(GaugeBookkeepingError):
        centroid_and_momentum(f, density_current(f, check=False))


def test_report_json(ctx, landau_grid):
    rep = observables_report(landau(ctx, landau_grid, 1, 0))
    d = json.loads(rep.to_json())
    assert d["L_kinetic"] == pytest.approx(3.0, abs=1e-4)
    assert d["units"] and d["modes"][0]["mode"]["ell"] == 1
    assert d["spot2"] == pytest.approx(2.0, abs=1e-6)
    assert d["L_extrinsic"] == pytest.approx(0.0, abs=1e-10)
