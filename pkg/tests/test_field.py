import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from evortex.export import CSV_HEADER, field_csv, read_pgm, write_pgm, write_png, density_image, phase_image
from evortex.field import (CartesianGrid, FluxLinePotential, GaugeError, GridError, GridResolutionError,
                           NoPotential, PolarGrid, UniformFieldPotential, analytic_current_profile,
                           continuity_residual, d4, density_current, divergence, gauge_transform,
                           grid_from_dict, integrate, sample)
from evortex.modes import CHARGE, ModeError, ModeSpec, make_context
from evortex.observables import bessel_cutoff_grid


def interior(a, edge=4):
    return a[edge:-edge, edge:-edge]


class TestGrids:
    def test_cartesian_spacing(self):
        g = CartesianGrid(11, 11, 1.0)
        assert g.hx == pytest.approx(0.2)
        assert g.x[0, 0] == -1.0 and g.y[-1, 0] == 1.0
        assert integrate(g, np.ones(g.shape)) == pytest.approx(4.0)

    def test_polar_quadrature_area(self):
        g = PolarGrid(64, 16, 2.0)
        assert g.r1d[0] == pytest.approx(g.hr / 2)
        assert integrate(g, np.ones(g.shape)) == pytest.approx(math.pi * 4.0, rel=1e-12)

    def test_rejects_tiny(self):
        with pytest.raises(GridError):
            CartesianGrid(4, 4, 1.0)
        with pytest.raises(GridError):
            PolarGrid(16, 16, -1.0)

    @pytest.mark.parametrize("g", [CartesianGrid(16, 12, 2.0), PolarGrid(20, 32, 3.0)])
    def test_dict_roundtrip(self, g):
        assert grid_from_dict(g.to_dict()) == g

    def test_stencil_order(self):
        errs = []
        for n in (33, 65):
            x = np.linspace(0, 1, n)
            errs.append(np.max(np.abs(d4(np.sin(3 * x), x[1] - x[0], 0) - 3 * np.cos(3 * x))))
        assert errs[0] / errs[1] > 12  # ~16 for a 4th-order scheme


class TestSample:
    def test_bessel_core_zero_on_axis(self, free_ctx):
        g = CartesianGrid(9, 9, 1.0)
        f = sample([ModeSpec.free_bessel(2, 0.6)], free_ctx, g)
        assert f.psi[4, 4] == 0

    def test_superposition_is_linear(self, ctx, landau_grid):
        a, b = ModeSpec.landau(1, 0), ModeSpec.landau(-2, 1)
        f = sample([(a, 2.0), (b, 1j)], ctx, landau_grid)
        fa = sample([a], ctx, landau_grid)
        fb = sample([b], ctx, landau_grid)
        assert np.allclose(f.psi, 2 * fa.psi + 1j * fb.psi, atol=1e-15)

    def test_landau_unit_norm(self, ctx, landau_grid):
        f = sample([ModeSpec.landau(2, 1)], ctx, landau_grid)
        assert f.norm() == pytest.approx(1.0, abs=1e-8)

    def test_potential_selection(self, ctx, free_ctx):
        g = CartesianGrid(16, 16, 3.0)
        assert isinstance(sample([ModeSpec.landau(0, 0)], ctx, g).potential, UniformFieldPotential)
        assert isinstance(sample([ModeSpec.free_bessel(0, 0.5)], free_ctx, g).potential, NoPotential)
        assert sample([ModeSpec.ab_bessel(1, 0.7, 0.5)], free_ctx, g).potential.alpha == 0.7

    def test_empty(self, ctx):
        with pytest.raises(ModeError):
            sample([], ctx, CartesianGrid(16, 16, 1.0))

    def test_immutable(self, ctx, landau_grid):
        f = sample([ModeSpec.landau(0, 0)], ctx, landau_grid)
        with pytest.raises(ValueError):
            f.psi[0, 0] = 1.0


class TestCurrents:
    def test_bessel_circulation(self, free_ctx):
        s = ModeSpec.free_bessel(2, 0.6)
        g = bessel_cutoff_grid(s)
        cur = density_current(sample([s], free_ctx, g))
        sel = cur.rho > 1e-3 * cur.rho.max()
        ratio = (g.r * cur.j_phi)[sel] / cur.rho[sel]
        assert np.max(np.abs(ratio - 2.0)) < 1e-4

    def test_ab_circulation(self, free_ctx):
        s = ModeSpec.ab_bessel(1, -1.5, 0.6)
        g = bessel_cutoff_grid(s)
        cur = density_current(sample([s], free_ctx, g))
        sel = (cur.rho > 1e-3 * cur.rho.max()) & (g.r > 20 * g.hr)
        ratio = (g.r * cur.j_phi)[sel] / cur.rho[sel]
        assert np.max(np.abs(ratio - 2.5)) < 1e-4

    def test_landau_sign_change_radius(self, ctx_neg):
        # sigma = -1, l = 3: j_phi changes sign at r = w_m sqrt(|l| / 2)
        r = np.linspace(0.05, 4 * ctx_neg.w_m, 4001)
        _, jphi, _ = analytic_current_profile(ModeSpec.landau(3, 0), ctx_neg, r)
        r0 = r[np.argmax(np.diff(np.sign(jphi)) != 0)]
        assert r0 == pytest.approx(ctx_neg.w_m * math.sqrt(1.5), abs=2e-3)

    @pytest.mark.parametrize("ell,n", [(1, 0), (-2, 1), (3, 2)])
    def test_landau_matches_analytic_profile(self, ctx, landau_grid, ell, n):
        s = ModeSpec.landau(ell, n)
        cur = density_current(sample([s], ctx, landau_grid))
        rho, jphi, jz = analytic_current_profile(s, ctx, landau_grid.r)
        assert np.max(np.abs(cur.rho - rho)) < 1e-12
        assert np.max(np.abs(interior(cur.j_phi - jphi))) < 1e-4 * np.max(np.abs(jphi))
        assert np.max(np.abs(cur.jz - jz)) < 1e-10 * np.max(jz)

    def test_split(self, ctx, landau_grid):
        cur = density_current(sample([ModeSpec.landau(-1, 1)], ctx, landau_grid))
        for t, v, p in zip(cur.j, cur.jv, cur.jp):
            assert np.array_equal(t, v + p)
        # potential part: -e A rho = +(B r / 2) rho e_phi for e = -1
        assert np.allclose(cur.jp_phi, 0.5 * ctx.B * landau_grid.r * cur.rho)

    def test_resolution_guard(self, ctx):
        with pytest.raises(GridResolutionError):
            density_current(sample([ModeSpec.landau(3, 2)], ctx, CartesianGrid(16, 16, 6.0)))

    def test_polar_angular_resolution_guard(self, free_ctx):
        with pytest.raises(GridResolutionError):
            density_current(sample([ModeSpec.free_bessel(5, 0.5)], free_ctx, PolarGrid(128, 16, 10.0)))

    @pytest.mark.parametrize("spec", [ModeSpec.landau(2, 1), ModeSpec.landau(-3, 0)])
    def test_continuity_landau(self, ctx, landau_grid, spec):
        assert continuity_residual(density_current(sample([spec], ctx, landau_grid))) < 1e-3

    def test_continuity_zero_current(self, free_ctx):
        s = ModeSpec.free_bessel(0, 0.5)
        assert continuity_residual(density_current(sample([s], free_ctx, bessel_cutoff_grid(s)))) == 0.0

    def test_divergence_of_rigid_rotation(self):
        g = CartesianGrid(33, 33, 1.0)
        from evortex.field import CurrentMap

        z = np.zeros(g.shape)
        cur = CurrentMap(g, np.ones(g.shape), (-g.y, g.x), (z, z), z, NoPotential())
        assert np.max(np.abs(divergence(cur))) < 1e-12


class TestSymmetry:
    @settings(max_examples=15, deadline=None)
    @given(ell=st.integers(-3, 3), alpha=st.sampled_from([-1.5, -0.25, 0.7, 0.3]))
    def test_ab_mirror(self, ell, alpha):
        c = make_context(0.0, 0.5)
        g = PolarGrid(64, 32, 10.0)
        a = sample([ModeSpec.ab_bessel(ell, alpha, 0.6)], c, g).rho
        b = sample([ModeSpec.ab_bessel(-ell, -alpha, 0.6)], c, g).rho
        assert np.max(np.abs(a - b)) < 1e-10

    @settings(max_examples=15, deadline=None)
    @given(ell=st.integers(-3, 3), n=st.integers(0, 2), sigma=st.sampled_from([-1, 1]))
    def test_landau_density_symmetry(self, ell, n, sigma):
        g = CartesianGrid(32, 32, 5.0)
        c = make_context(2.0 * sigma, 2000.0)
        c2 = make_context(-2.0 * sigma, 2000.0)
        a = sample([ModeSpec.landau(ell, n)], c, g).rho
        assert np.max(np.abs(a - sample([ModeSpec.landau(-ell, n)], c, g).rho)) < 1e-10
        assert np.max(np.abs(a - sample([ModeSpec.landau(ell, n)], c2, g).rho)) < 1e-10


class TestGauge:
    def test_linear_gauge_preserves_current(self, ctx, landau_grid):
        f = sample([ModeSpec.landau(1, 0)], ctx, landau_grid)
        c = 0.3
        g, A = gauge_transform(f, lambda x, y: c * x, lambda x, y: (np.full_like(x, c), np.zeros_like(y)))
        a, b = density_current(f), density_current(g)
        assert np.allclose(a.rho, b.rho, atol=1e-15)
        scale = np.max(np.hypot(*a.j))
        for u, v in zip(a.j, b.j):
            assert np.max(np.abs(interior(u - v))) < 1e-4 * scale
        # canonical part shifts by e grad(chi) rho; the potential part cancels it
        assert np.max(np.abs(interior(b.jv[0] - a.jv[0] - CHARGE * c * a.rho))) < 1e-4 * scale

    def test_numeric_gradient(self, ctx, landau_grid):
        f = sample([ModeSpec.landau(0, 0)], ctx, landau_grid)
        g, A = gauge_transform(f, lambda x, y: 0.1 * x * y)
        gx, gy = A.grad_chi(np.array([1.0]), np.array([2.0]))
        assert (float(gx[0]), float(gy[0])) == pytest.approx((0.2, 0.1), rel=1e-6)

    def test_multivalued_rejected(self, ctx, landau_grid):
        f = sample([ModeSpec.landau(0, 0)], ctx, landau_grid)
        with pytest.raises(GaugeError):
            gauge_transform(f, lambda x, y: np.arctan2(y, x))

    def test_transforms_compose(self, ctx, landau_grid):
        f = sample([ModeSpec.landau(0, 0)], ctx, landau_grid)
        g, _ = gauge_transform(f, lambda x, y: 0.2 * x)
        h, _ = gauge_transform(g, lambda x, y: 0.1 * y)
        assert h.chi(1.0, 1.0) == pytest.approx(0.3)



class TestFlux:
    def test_flux_line_potential(self):
        A = FluxLinePotential(0.7)
        ax, ay = A.components(np.array([2.0, 0.0]), np.array([0.0, 0.0]))
        # A_phi = alpha / (e r) = -0.35 at r = 2, and 0 on the axis node
        assert ay[0] == pytest.approx(-0.35) and ax[0] == 0.0
        assert ax[1] == 0.0 and ay[1] == 0.0


class TestExport:
    def test_csv(self, ctx):
        g = CartesianGrid(8, 8, 3.0)
        f = sample([ModeSpec.landau(0, 0)], ctx, g)
        text = field_csv(f, density_current(f, check=False))
        lines = text.splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 65
        assert all(len(row.split(",")) == 11 for row in lines[1:])
        assert "-0.0000000000e+00" not in text

    @pytest.mark.parametrize("writer", ["pgm", "png"])
    def test_image_roundtrip(self, ctx, tmp_path, writer):
        g = CartesianGrid(24, 16, 3.0)
        f = sample([ModeSpec.landau(1, 0)], ctx, g)
        img = density_image(f)
        assert img.dtype == np.uint16 and img.max() == 65535
        p = tmp_path / f"a.{writer}"
        if writer == "pgm":
            write_pgm(p, img)
            assert p.read_bytes().startswith(b"P5\n24 16\n65535\n")
            back = read_pgm(p)
        else:
            from PIL import Image

            write_png(p, img)
            back = np.array(Image.open(p))[::-1]
        assert np.array_equal(back, img)

    def test_phase_image_range(self, ctx):
        f = sample([ModeSpec.landau(1, 0)], ctx, CartesianGrid(32, 32, 3.0))
        img = phase_image(f)
        assert img.min() < 2000 and img.max() > 63000
