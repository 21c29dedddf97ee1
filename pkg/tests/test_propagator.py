import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import linalg

from evortex.evolution import SuperpositionSpec, make_balanced, propagate_analytic
from evortex.field import CartesianGrid, PolarGrid, sample
from evortex.modes import ModeSpec, delta_kz_paraxial, make_context
from evortex.propagator import (ChannelSet, ChannelTruncationError, PropagationError, Propagator,
                                PropagatorConfig, decompose, eigenphase_convergence, free_lg_width,
                                oracle_rotation, propagate, radial_generator, recompose, stationarity, step)


@pytest.fixture
def cfg(ctx):
    return PropagatorConfig(nr=512, r_max=8 * ctx.w_m, dz=ctx.z_m / 1024)


def polar(ctx, terms, nr=128, nphi=32):
    return sample(terms, ctx, PolarGrid(nr, nphi, 8 * ctx.w_m))


class TestChannels:
    def test_roundtrip(self, ctx):
        f = polar(ctx, [(ModeSpec.landau(1, 0), 1.0), (ModeSpec.landau(-2, 1), 0.5j)])
        ch = decompose(f, 4)
        assert list(ch.ells) == list(range(-4, 5))
        assert np.allclose(recompose(ch, 32), f.psi, atol=1e-14)
        assert ch.norm() == pytest.approx(f.norm(), rel=1e-12)

    def test_channel_content(self, ctx):
        ch = decompose(polar(ctx, [ModeSpec.landau(-2, 0)]), 3)
        norms = ch.channel_norms()
        assert norms[list(ch.ells).index(-2)] == pytest.approx(ch.norm(), rel=1e-12)
        with pytest.raises(KeyError):
            ch.channel(7)

    def test_truncation(self, ctx):
        with pytest.raises(ChannelTruncationError):
            decompose(polar(ctx, [ModeSpec.landau(5, 0)]), 3)

    def test_needs_polar(self, ctx):
        f = sample([ModeSpec.landau(0, 0)], ctx, CartesianGrid(16, 16, 3.0))
        with pytest.raises(ValueError):
            decompose(f, 2)
        with pytest.raises(ValueError):
            decompose(polar(ctx, [ModeSpec.landau(0, 0)], nphi=8), 4)


class TestGenerator:
    @pytest.mark.parametrize("ell,n", [(0, 0), (1, 0), (-1, 0), (2, 1), (-3, 2)])
    def test_spectrum_matches_landau_levels(self, ctx, ell, n):
        # Independent of the propagation: eigenvalues of the discretized operator.
        d, o = radial_generator(ell, 1024, 8 * ctx.w_m, ctx)
        evals = linalg.eigvalsh_tridiagonal(d, o, select="i", select_range=(n, n))
        assert evals[0] == pytest.approx(-delta_kz_paraxial(ctx, ell, n), rel=1e-4)

    def test_free_space_is_nonnegative(self, free_ctx):
        d, o = radial_generator(1, 256, 10.0, free_ctx)
        assert linalg.eigvalsh_tridiagonal(d, o, select="i", select_range=(0, 0))[0] > 0


class TestStepper:
    def test_unitary(self, ctx, cfg):
        rng = np.random.default_rng(3)
        u = rng.normal(size=(3, cfg.nr)) + 1j * rng.normal(size=(3, cfg.nr))
        ch = ChannelSet(np.array([-1, 0, 2]), u, cfg.nr, cfg.r_max)
        out = Propagator(ch.ells, cfg.nr, cfg.r_max, ctx, cfg.dz).advance(ch, 200)
        assert out.norm() == pytest.approx(ch.norm(), rel=1e-11)
        assert out.z == pytest.approx(200 * cfg.dz)

    def test_channels_decouple(self, ctx, cfg):
        rng = np.random.default_rng(5)
        u = rng.normal(size=(2, cfg.nr)).astype(complex)
        both = Propagator([0, 3], cfg.nr, cfg.r_max, ctx, cfg.dz).advance(
            ChannelSet(np.array([0, 3]), u, cfg.nr, cfg.r_max), 20)
        for i, ell in enumerate((0, 3)):
            one = Propagator([ell], cfg.nr, cfg.r_max, ctx, cfg.dz).advance(
                ChannelSet(np.array([ell]), u[i:i + 1], cfg.nr, cfg.r_max), 20)
            assert np.allclose(both.u[i], one.u[0], atol=1e-13)

    def test_single_step(self, ctx, cfg):
        ch = ChannelSet(np.array([1]), np.ones((1, cfg.nr), complex), cfg.nr, cfg.r_max)
        a = step(ch, ctx, cfg.dz)
        b = Propagator([1], cfg.nr, cfg.r_max, ctx, cfg.dz).advance(ch, 1)
        assert np.array_equal(a.u, b.u)

    def test_drift_raises_with_diagnostics(self, ctx, cfg):
        ch = ChannelSet(np.array([0]), np.ones((1, cfg.nr), complex), cfg.nr, cfg.r_max)
        prop = Propagator([0], cfg.nr, cfg.r_max, ctx, cfg.dz, norm_tol=-1.0)  # any drift trips
        with pytest.raises(PropagationError) as exc:
            prop.advance(ch, 3)
        assert exc.value.diagnostics["step"] == 0
        assert "norm_after" in exc.value.diagnostics

    def test_absorber_removes_outgoing_norm(self, free_ctx):
        ch = ChannelSet(np.array([0]), np.ones((1, 256), complex), 256, 10.0)
        prop = Propagator([0], 256, 10.0, free_ctx, 0.5, absorber_width=2.0)
        assert prop.advance(ch, 50).norm() < 0.95 * ch.norm()

    def test_mismatched_channels(self, ctx, cfg):
        ch = ChannelSet(np.array([0]), np.ones((1, cfg.nr), complex), cfg.nr, cfg.r_max)
        with pytest.raises(ValueError):
            Propagator([1], cfg.nr, cfg.r_max, ctx, cfg.dz).advance(ch, 1)

    def test_z_must_be_multiple_of_dz(self, ctx, cfg):
        f = sample([ModeSpec.landau(0, 0)], ctx, PolarGrid(cfg.nr, 16, cfg.r_max))
        with pytest.raises(ValueError):
            propagate(f, cfg, [0.37 * cfg.dz])

    @settings(max_examples=8, deadline=None)
    @given(ell=st.integers(-3, 3), seed=st.integers(0, 2**16))
    def test_unitary_property(self, ell, seed):
        c = make_context(2.0, 2000.0)
        u = np.random.default_rng(seed).normal(size=(1, 64)) * (1 + 0.5j)
        ch = ChannelSet(np.array([ell]), u, 64, 6.0)
        out = Propagator([ell], 64, 6.0, c, 0.7).advance(ch, 10)
        assert out.norm() == pytest.approx(ch.norm(), rel=1e-12)


class TestConfig:
    def test_violations(self, ctx):
        bad = PropagatorConfig(nr=256, r_max=2.0, dz=10.0)
        problems = bad.check(ctx, [1, -1], mode_radius=1.5)
        assert len(problems) == 2
        assert any("dz" in p for p in problems) and any("r_max" in p for p in problems)

    def test_ok(self, ctx, cfg):
        assert cfg.check(ctx, [1, -1, 2], mode_radius=ctx.w_m) == []


class TestOracles:
    def test_stationary_mode(self, ctx, cfg):
        sup = SuperpositionSpec([ModeSpec.landau(1, 0)], ctx)
        assert stationarity(sup, cfg, 0.25 * ctx.z_m) > 0.999999

    def test_eigenphase(self, ctx, cfg):
        out = eigenphase_convergence(ModeSpec.landau(1, 0), ctx, cfg, 0.125 * ctx.z_m, halvings=2)
        assert out["rel_error"] < 1e-3
        assert out["ratios"][0] == pytest.approx(4.0, rel=0.1)

    def test_free_gaussian_width(self):
        c = make_context(0.0, 200.0)
        w0 = 1.0
        zR = c.k * w0**2 / 2
        cfg = PropagatorConfig(nr=512, r_max=10.0, dz=zR / 512)
        assert free_lg_width(w0, c, cfg, zR) == pytest.approx(math.sqrt(2) * w0, rel=1e-3)

    def test_rotation_agrees_with_analytic(self, ctx):
        cfg = PropagatorConfig(nr=256, r_max=8 * ctx.w_m, dz=ctx.z_m / 256)
        zs = np.linspace(0, 0.4 * ctx.z_m, 5)[1:]
        zs = np.round(zs / cfg.dz) * cfg.dz
        num, ana = oracle_rotation(make_balanced(1, 0, ctx), cfg, zs, nphi=64)
        assert np.max(np.abs(num - ana)) < 1e-3
        assert ana[-1] == pytest.approx(zs[-1] / ctx.z_m, abs=0.01)

    def test_numerical_frames_carry_no_terms(self, ctx, cfg):
        f0 = propagate_analytic(make_balanced(2, 0, ctx), PolarGrid(cfg.nr, 32, cfg.r_max), 0.0)
        (f1,) = propagate(f0, cfg, [4 * cfg.dz])
        assert f1.evolution == "numerical" and f1.terms == ()
        assert f1.norm() == pytest.approx(f0.norm(), rel=1e-10)
